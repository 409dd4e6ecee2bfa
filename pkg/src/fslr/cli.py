"""``fslr`` command line: synth, count, select, tune, rank, eval, bench.

Exit codes: 0 success, 1 other failure, 2 configuration error, 3 corpus
parse or file format error, 4 invariant violation.
"""
import argparse
from dataclasses import replace
import json
import os
import sys

from . import __version__
from ._accel import set_threads
from .config import RunConfig, load_config, merge_overrides, resolve_size
from .corpus import format_document, read_corpus, WindowBatch
from .counts import count_documents, footprint_report, load, save
from .errors import (ConfigError, CorpusParseError, FormatError, FslrError,
                     InvariantError)
from .evaluate import TestTypes, bench_estimation, rank_order
from .estimator import ProductEstimator
from .featsel import ScorePolicy, load_mask, save_mask, select_mask
from .synth import generate_synthetic_corpus, split_seeds
from .tune import (TuneGrid, TuneRow, evaluate_lambda, format_tune_report,
                   parse_tune_report, tune_lambda)

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_PARSE, EXIT_INVARIANT = 0, 1, 2, 3, 4
CORPUS_MAGIC = "#fslr-corpus"
RANKED_MAGIC = "#fslr-ranked"
CURVE_MAGIC = "#fslr-curve"
OUTPUT_KEYS = ("model", "mask", "tune_report", "report", "curve", "ranked",
               "bench_report")
BOTH_TYPES = ("LOC", "PER")


# ---- shared helpers ----------------------------------------------------

def _parent(path):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    return path


def _write(path, data):
    with open(_parent(path), "wb") as fh:
        fh.write(data)


def _json_bytes(obj):
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _header(magic, cfg, **fields):
    head = [magic, "format_version=1", f"seed={'' if cfg.seed is None else cfg.seed}"]
    head += [f"{k}={v}" for k, v in fields.items()]
    return "\t".join(head) + "\n#config\t" + cfg.echo() + "\n"


def _meta(cfg, command):
    return {"command": command, "config": cfg.to_dict()}


def _load_model(cfg):
    return load(cfg.input_path("model")).validate()


def _load_mask(cfg, model, required=False):
    if cfg.path("mask", required=required) is None:
        return None
    mask = load_mask(cfg.input_path("mask"))
    if mask.model_fingerprint != model.fingerprint():
        raise ConfigError(f"mask {cfg.path('mask')!r} was built from a different model")
    return mask


def _batch(cfg, key):
    docs = read_corpus(cfg.input_path(key))
    return WindowBatch.from_documents(docs, cfg.N, cfg.entity_type)


def _label(mask):
    if mask is None:
        return "All", "all"
    return mask.policy.kind, mask.size


def _resolve_lambda(cfg, mask):
    """Configured λ, else the best row of the tuning report for this mask."""
    if cfg.lam is not None:
        return cfg.lam
    if cfg.path("tune_report", required=False) is None:
        raise ConfigError("no lambda: pass --lam or --tune-report")
    with open(cfg.input_path("tune_report"), "rb") as fh:
        rows = parse_tune_report(fh.read())
    policy, size = _label(mask)
    best = [r for r in rows if r["best"] and r["policy"] == policy
            and r["s"] == str(size)]
    if len(best) != 1:
        raise ConfigError(f"tuning report has no unique best row for "
                          f"policy={policy} s={size}")
    return best[0]["lambda"]


# ---- subcommands -------------------------------------------------------

def cmd_synth(cfg, threads=1):
    if cfg.seed is None:
        raise ConfigError("synth requires --seed")
    synth = cfg.synthetic_config()
    splits = cfg.splits()
    out_dir = cfg.path("out_dir", required=False) or "."
    seeds = dict(zip(("train", "valid", "test"), split_seeds(cfg.seed)))
    written = {}
    for name in ("train", "valid", "test"):
        path = cfg.path(name, required=False) or os.path.join(out_dir, f"{name}.txt")
        part = synth.__class__.from_dict({**synth.to_dict(), "n_docs": splits[name]})
        docs = generate_synthetic_corpus(part, seeds[name])
        body = "".join(format_document(d) + "\n" for d in docs)
        head = _header(CORPUS_MAGIC, cfg, split=name, split_seed=seeds[name],
                       docs=len(docs))
        _write(path, (head + body).encode("utf-8"))
        written[name] = path
    return written


def cmd_count(cfg, threads=1):
    docs = read_corpus(cfg.input_path("train"))
    if not docs:
        raise ConfigError(f"train corpus {cfg.path('train')!r} has no documents")
    model = count_documents(docs, cfg.N, cfg.entity_type, cfg.denominator,
                            threads=threads, meta=_meta(cfg, "count"))
    model.validate()
    nbytes = save(model, _parent(cfg.path("model")))
    return {"model": cfg.path("model"), "entries": model.entry_count,
            "n_de": model.n_de, "n_nu": model.n_nu, "bytes": nbytes}


def cmd_select(cfg, threads=1):
    model = _load_model(cfg)
    size = resolve_size(cfg.size, model)
    policy = ScorePolicy(cfg.policy, cfg.seed if cfg.policy == "Random" else None)
    mask = select_mask(model, policy, size, meta=_meta(cfg, "select"))
    save_mask(mask, _parent(cfg.path("mask")))
    return {"mask": cfg.path("mask"), "policy": policy.kind, "size": size,
            "entries": mask.entry_count}


def _tune_rows(model, mask, types, grid, unseen, parallel):
    res = tune_lambda(model, mask, types, grid, unseen=unseen, parallel=parallel)
    policy, size = _label(mask)
    return res, [(policy, size, r, r.lam == res.best_lambda) for r in res.rows]


def cmd_tune(cfg, threads=1, sweep=False):
    model = _load_model(cfg)
    types = TestTypes.from_batch(_batch(cfg, "valid"), cfg.distinct)
    grid = TuneGrid(cfg.lambdas, cfg.cutoff)
    parallel = threads > 1
    rows = []
    if sweep:
        unseen = cfg.unseen
        res, r = _tune_rows(model, None, types, grid, unseen, parallel)
        rows += r
        p0 = evaluate_lambda(model, None, types, 0.0, cfg.cutoff, unseen, parallel)
        rows.append(("All-lam0", "all", TuneRow(0.0, *p0), True))
        policy = ScorePolicy(cfg.policy, cfg.seed if cfg.policy == "Random" else None)
        for s in cfg.subset_sizes:
            mask = select_mask(model, policy, s)
            rows += _tune_rows(model, mask, types, grid, "ignore", parallel)[1]
        summary = {"best_lambda": res.best_lambda, "best_f1": res.best_f1,
                   "policy": "All", "s": "all"}
    else:
        mask = _load_mask(cfg, model)
        unseen = cfg.unseen if mask is None else "ignore"
        res, rows = _tune_rows(model, mask, types, grid, unseen, parallel)
        policy, size = _label(mask)
        summary = {"best_lambda": res.best_lambda, "best_f1": res.best_f1,
                   "policy": policy, "s": size}
    data = format_tune_report(rows, [("seed", "" if cfg.seed is None else cfg.seed),
                                     ("cutoff", cfg.cutoff), ("types", len(types)),
                                     ("relevant", types.n_relevant)], cfg.echo())
    _write(cfg.path("tune_report"), data)
    return summary


def _ranking(cfg, model, mask, lam, types, parallel):
    unseen = cfg.unseen if mask is None else "ignore"
    est = ProductEstimator(model, mask, lam, unseen=unseen)
    logs = est.log_estimates(types.model_ids(est), parallel=parallel)
    return logs, rank_order(logs)


def _ranked_bytes(cfg, types, logs, order, mask, lam):
    policy, size = _label(mask)
    head = _header(RANKED_MAGIC, cfg, N=cfg.N, entity_type=cfg.entity_type,
                   policy=policy, size=size, **{"lambda": repr(lam)},
                   rows=len(order))
    out = [head, "rank\tlog_estimate\tcorrect\tngram\n"]
    correct = types.correct
    for rank, r in enumerate(order.tolist(), start=1):
        out.append(f"{rank}\t{logs[r]!r}\t{int(correct[r])}\t"
                   f"{' '.join(types.ngram(r))}\n")
    return "".join(out).encode("utf-8")


def cmd_rank(cfg, threads=1):
    model = _load_model(cfg)
    mask = _load_mask(cfg, model)
    lam = _resolve_lambda(cfg, mask)
    types = TestTypes.from_batch(_batch(cfg, "test"), cfg.distinct)
    logs, order = _ranking(cfg, model, mask, lam, types, threads > 1)
    _write(cfg.path("ranked"), _ranked_bytes(cfg, types, logs, order, mask, lam))
    return {"rows": len(order), "lambda": lam}


def cmd_eval(cfg, threads=1):
    model = _load_model(cfg)
    mask = _load_mask(cfg, model)
    lam = _resolve_lambda(cfg, mask)
    batch = _batch(cfg, "test")
    types = TestTypes.from_batch(batch, cfg.distinct)
    if types.n_relevant == 0:
        raise ConfigError("test corpus has no entity-context windows")
    parallel = threads > 1
    logs, order = _ranking(cfg, model, mask, lam, types, parallel)
    p, r, f1 = types.prf(order, cfg.cutoff)
    max_rank = cfg.cutoff if cfg.max_rank is None else cfg.max_rank
    curve = types.recall_curve(order, max_rank)
    stored = model if mask is None else model.restrict(mask)
    policy, size = _label(mask)
    report = {"format": "fslr-eval", "format_version": 1, "config": cfg.to_dict(),
              "policy": policy, "size": size, "lambda": lam, "cutoff": cfg.cutoff,
              "precision": p, "recall": r, "f1": f1, "n_types": len(types),
              "n_relevant": types.n_relevant, "footprint": footprint_report(stored),
              "time_seconds": None, "runs": cfg.runs, "per_run": None}
    if cfg.runs:
        unseen = cfg.unseen if mask is None else "ignore"
        b = bench_estimation(batch, model, mask, lam, cfg.runs, unseen, parallel)
        report["time_seconds"] = b.time_seconds_mean
        report["per_run"] = b.per_run
    _write(cfg.path("report"), _json_bytes(report))
    if cfg.path("curve", required=False):
        head = _header(CURVE_MAGIC, cfg, policy=policy, size=size,
                       n_relevant=types.n_relevant, rows=len(curve))
        body = "".join(f"{k}\t{v!r}\n" for k, v in curve)
        _write(cfg.path("curve"), (head + "rank\trecall\n" + body).encode("utf-8"))
    if cfg.path("ranked", required=False):
        _write(cfg.path("ranked"), _ranked_bytes(cfg, types, logs, order, mask, lam))
    return report


def cmd_bench(cfg, threads=1):
    model = _load_model(cfg)
    mask = _load_mask(cfg, model, required=True)
    lam = _resolve_lambda(cfg, mask)
    batch = _batch(cfg, "test")
    runs = max(cfg.runs, 1)
    parallel = threads > 1
    full = bench_estimation(batch, model, None, lam, runs, cfg.unseen, parallel)
    masked = bench_estimation(batch, model, mask, lam, runs, "ignore", parallel)
    f_full = footprint_report(model)
    f_mask = footprint_report(model.restrict(mask))
    report = {
        "format": "fslr-bench", "format_version": 1, "config": cfg.to_dict(),
        "lambda": lam, "n_windows": len(batch), "runs": runs,
        "full": {"time_seconds_mean": full.time_seconds_mean,
                 "per_run": full.per_run, "footprint": f_full},
        "masked": {"time_seconds_mean": masked.time_seconds_mean,
                   "per_run": masked.per_run, "footprint": f_mask,
                   "policy": mask.policy.kind, "size": mask.size},
        "time_ratio": masked.time_seconds_mean / full.time_seconds_mean,
        "footprint_ratio": f_mask["serialized_bytes"] / f_full["serialized_bytes"],
        "entry_ratio": f_mask["entry_count"] / max(f_full["entry_count"], 1),
    }
    if cfg.path("bench_report", required=False):
        _write(cfg.path("bench_report"), _json_bytes(report))
    return report


COMMANDS = {"synth": cmd_synth, "count": cmd_count, "select": cmd_select,
            "tune": cmd_tune, "rank": cmd_rank, "eval": cmd_eval, "bench": cmd_bench}


# ---- argument parsing --------------------------------------------------

def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _int_list(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")


def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run configuration (flags override --config)")
    g.add_argument("--config", help="JSON run configuration")
    g.add_argument("--threads", type=int, default=1,
                   help="worker threads; outputs do not depend on it")
    g.add_argument("--both-types", action="store_true",
                   help="run once for LOC and once for PER, suffixing output paths")
    g.add_argument("--N", type=int, dest="N")
    g.add_argument("--entity-type")
    g.add_argument("--denominator", choices=("complement", "all"))
    g.add_argument("--policy")
    g.add_argument("--size", help="per-position subset size, or a percentage like 10%%")
    g.add_argument("--seed", type=int)
    g.add_argument("--lam", type=float)
    g.add_argument("--lambdas", type=_float_list, help="comma-separated tuning grid")
    g.add_argument("--subset-sizes", type=_int_list)
    g.add_argument("--cutoff", type=int)
    g.add_argument("--max-rank", type=int)
    g.add_argument("--runs", type=int)
    g.add_argument("--unseen", choices=("ignore", "smooth"))
    g.add_argument("--instances", dest="distinct", action="store_const", const=False,
                   help="rank every window instead of distinct N-gram types")
    f = p.add_argument_group("paths")
    for key in ("train", "valid", "test", "model", "mask", "tune_report", "report",
                "curve", "ranked", "bench_report", "out_dir"):
        f.add_argument("--" + key.replace("_", "-"), dest="path_" + key)
    return p


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fslr", description="Feature-selective likelihood-ratio estimation.")
    parser.add_argument("--version", action="version", version=f"fslr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    helps = {"synth": "generate seeded train/valid/test corpora",
             "count": "count positional frequencies of a training corpus",
             "select": "select per-position token subsets (a mask)",
             "tune": "choose lambda by validation F1 (optionally sweep sizes)",
             "rank": "rank test N-grams and write the ranked list",
             "eval": "rank, judge and time one configuration",
             "bench": "time masked vs all-used estimation and compare footprints"}
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "tune":
            sp.add_argument("--sweep", action="store_true",
                            help="tune the baselines and every subset size")
    return parser


_OVERRIDES = ("N", "entity_type", "denominator", "policy", "size", "seed", "lam",
              "lambdas", "subset_sizes", "cutoff", "max_rank", "runs", "unseen",
              "distinct")


def config_from_args(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {k: getattr(args, k) for k in _OVERRIDES}
    paths = {k[len("path_"):]: v for k, v in vars(args).items() if k.startswith("path_")}
    return merge_overrides(cfg, overrides, paths)


def suffixed(path, tag):
    root, ext = os.path.splitext(path)
    return f"{root}.{tag}{ext}"


def _for_type(cfg, etype):
    paths = {k: (suffixed(v, etype) if k in OUTPUT_KEYS and v else v)
             for k, v in cfg.paths.items()}
    return replace(cfg, entity_type=etype, paths=paths)


def run(argv=None):
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    threads = args.threads
    set_threads(threads)
    fn = COMMANDS[args.command]
    kwargs = {"sweep": args.sweep} if args.command == "tune" else {}
    if args.both_types:
        if args.command == "synth":
            raise ConfigError("--both-types does not apply to synth")
        return {t: fn(_for_type(cfg, t), threads, **kwargs) for t in BOTH_TYPES}
    return fn(cfg, threads, **kwargs)


def _summary(result):
    return {k: (_summary(v) if isinstance(v, dict) else v)
            for k, v in result.items() if k not in ("config", "per_run")}


def main(argv=None):
    try:
        result = run(argv)
    except ConfigError as exc:
        print(f"fslr: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CorpusParseError, FormatError) as exc:
        print(f"fslr: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvariantError as exc:
        print(f"fslr: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (FslrError, ValueError, OSError) as exc:
        print(f"fslr: error: {exc}", file=sys.stderr)
        return EXIT_OTHER
    print(json.dumps(_summary(result), sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
