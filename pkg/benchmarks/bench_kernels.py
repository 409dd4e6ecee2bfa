"""Time the product-estimator kernels: numpy vs numba, masked vs all-used.

Builds a seeded synthetic corpus, counts it, selects a CET mask and times
every backend on the encoded test windows. All backends must return
bit-identical scores; the script aborts otherwise.

    python benchmarks/bench_kernels.py --docs 10000 --size 2000 --runs 5
"""
import argparse
import dataclasses
import json
import time

import numpy as np

from fslr import kernels
from fslr._accel import NUMBA_AVAILABLE
from fslr.corpus import WindowBatch
from fslr.counts import count_batch
from fslr.estimator import ProductEstimator
from fslr.featsel import select_mask
from fslr.synth import generate_synthetic_corpus, split_seeds, standard_config


def _time(fn, runs):
    fn()  # warm-up, compiles numba kernels
    per_run = []
    for _ in range(runs):
        t0 = time.perf_counter()
        out = fn()
        per_run.append(time.perf_counter() - t0)
    return out, float(np.mean(per_run)), float(np.min(per_run))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=10000, help="training documents")
    ap.add_argument("--test-docs", type=int, default=1000)
    ap.add_argument("--N", type=int, default=10)
    ap.add_argument("--size", type=int, default=2000, help="per-position mask size")
    ap.add_argument("--lam", type=float, default=1e-4)
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--json", help="also write the results here")
    args = ap.parse_args(argv)

    cfg = standard_config(args.docs)
    s_train, _, s_test = split_seeds(args.seed)
    train = WindowBatch.from_documents(generate_synthetic_corpus(cfg, s_train), args.N, "PER")
    test = WindowBatch.from_documents(
        generate_synthetic_corpus(dataclasses.replace(cfg, n_docs=args.test_docs), s_test),
        args.N, "PER")
    model = count_batch(train)
    mask = select_mask(model, "CET", args.size)

    backends = {"numpy": lambda *a: kernels.product_log_sums_numpy(*a)}
    if NUMBA_AVAILABLE:
        backends["numba"] = lambda *a: kernels.product_log_sums_numba(*a)
        backends["numba-parallel"] = \
            lambda *a: kernels.product_log_sums_numba(*a, parallel=True)

    rows = []
    for label, msk in (("all-used", None), (f"CET s={args.size}", mask)):
        est = ProductEstimator(model, msk, args.lam)
        ids = est.encode(test)
        kargs = (ids, est.weight_bits, est.offsets, est.table_ids, est.table_logs,
                 est.unseen_logs)
        ref = None
        for name, fn in backends.items():
            out, mean, best = _time(lambda: fn(*kargs), args.runs)
            if ref is None:
                ref = out
            elif not np.array_equal(out, ref):
                raise SystemExit(f"{name} disagrees with numpy on {label}")
            rows.append({"table": label, "backend": name, "entries": est.entry_count,
                         "windows": len(ids), "mean_s": mean, "min_s": best})

    base = {r["table"]: r["mean_s"] for r in rows if r["backend"] == "numpy"}
    print(f"{'table':<14}{'backend':<16}{'entries':>10}{'mean ms':>10}{'min ms':>10}"
          f"{'vs numpy':>10}")
    for r in rows:
        print(f"{r['table']:<14}{r['backend']:<16}{r['entries']:>10}"
              f"{1e3 * r['mean_s']:>10.2f}{1e3 * r['min_s']:>10.2f}"
              f"{base[r['table']] / r['mean_s']:>9.1f}x")
    for name in backends:
        t = {r["table"]: r["mean_s"] for r in rows if r["backend"] == name}
        full, masked = t["all-used"], t[f"CET s={args.size}"]
        print(f"masked/all-used time ratio ({name}): {masked / full:.3f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"args": vars(args), "rows": rows}, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
