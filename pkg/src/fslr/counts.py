"""Position-indexed token frequencies for the two window classes.

Class ``nu`` is the entity-context class (numerator of the ratio), ``de`` the
complement class. The model is stored as a sparse (position, token) matrix in
CSR layout: entries of position ``k`` (1-based) live in
``token_ids[offsets[k-1]:offsets[k]]`` and index the sorted ``vocab``.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import hashlib
import json

import numpy as np

from .corpus import WindowBatch
from .errors import CountOverflowError, FormatError, InvariantError

FORMAT_VERSION = 1
MAGIC = "#fslr-counts"
U64_MAX = 2 ** 64 - 1
DENOMINATORS = ("complement", "all")


@dataclass(frozen=True)
class Contingency:
    a: int       # token present, class nu
    b: int       # token present, class de
    a_bar: int   # token absent, class nu
    b_bar: int   # token absent, class de

    @property
    def n(self):
        return self.a + self.b + self.a_bar + self.b_bar


class PositionalCounts:
    def __init__(self, N, n_de, n_nu, vocab, offsets, token_ids, f_de, f_nu,
                 meta=None):
        self.N = int(N)
        self.n_de = int(n_de)
        self.n_nu = int(n_nu)
        self.vocab = tuple(vocab)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.token_ids = np.asarray(token_ids, dtype=np.int64)
        self.f_de = np.asarray(f_de, dtype=np.uint64)
        self.f_nu = np.asarray(f_nu, dtype=np.uint64)
        self.meta = dict(meta or {})
        self._index = None
        if self.offsets.shape != (self.N + 1,) or self.offsets[0] != 0 \
                or self.offsets[-1] != len(self.token_ids):
            raise InvariantError("offsets do not match entries")
        if not (len(self.token_ids) == len(self.f_de) == len(self.f_nu)):
            raise InvariantError("entry arrays differ in length")
        if self.n_de > U64_MAX or self.n_nu > U64_MAX:
            raise CountOverflowError("class total exceeds 64 bits")

    # ---- queries ---------------------------------------------------------

    @property
    def token_index(self):
        if self._index is None:
            self._index = {t: i for i, t in enumerate(self.vocab)}
        return self._index

    def _check_k(self, k):
        if not 1 <= k <= self.N:
            raise IndexError(f"position {k} outside 1..{self.N}")

    def span(self, k):
        self._check_k(k)
        return int(self.offsets[k - 1]), int(self.offsets[k])

    def vocab_size(self, k):
        lo, hi = self.span(k)
        return hi - lo

    def vocab_sizes(self):
        return np.diff(self.offsets)

    def lookup(self, k, token):
        """Entry index of ``token`` at position ``k`` or -1."""
        lo, hi = self.span(k)
        tid = self.token_index.get(token)
        if tid is None:
            return -1
        j = lo + int(np.searchsorted(self.token_ids[lo:hi], tid))
        if j < hi and self.token_ids[j] == tid:
            return j
        return -1

    def get(self, k, token):
        """(f_de, f_nu) of ``token`` at position ``k``; (0, 0) if unseen."""
        j = self.lookup(k, token)
        if j < 0:
            return 0, 0
        return int(self.f_de[j]), int(self.f_nu[j])

    def tokens_at(self, k):
        lo, hi = self.span(k)
        vocab = self.vocab
        return [vocab[t] for t in self.token_ids[lo:hi].tolist()]

    def position_table(self, k):
        lo, hi = self.span(k)
        return {tok: (int(d), int(u)) for tok, d, u in
                zip(self.tokens_at(k), self.f_de[lo:hi].tolist(),
                    self.f_nu[lo:hi].tolist())}

    def positions(self):
        """Position of every entry (1-based)."""
        return np.repeat(np.arange(1, self.N + 1, dtype=np.int64),
                         self.vocab_sizes())

    @property
    def entry_count(self):
        return len(self.token_ids)

    def __eq__(self, other):
        if not isinstance(other, PositionalCounts):
            return NotImplemented
        return (self.N == other.N and self.n_de == other.n_de
                and self.n_nu == other.n_nu and self.vocab == other.vocab
                and np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.token_ids, other.token_ids)
                and np.array_equal(self.f_de, other.f_de)
                and np.array_equal(self.f_nu, other.f_nu)
                and self.meta == other.meta)

    def same_counts(self, other):
        """Equality ignoring ``meta``."""
        return self.with_meta(other.meta) == other

    def with_meta(self, meta):
        return PositionalCounts(self.N, self.n_de, self.n_nu, self.vocab,
                                self.offsets, self.token_ids, self.f_de, self.f_nu,
                                meta)

    def __repr__(self):
        return (f"PositionalCounts(N={self.N}, n_de={self.n_de}, n_nu={self.n_nu}, "
                f"entries={self.entry_count})")

    def fingerprint(self):
        h = hashlib.sha256()
        h.update(f"{self.N}\t{self.n_de}\t{self.n_nu}\n".encode())
        h.update("\n".join(self.vocab).encode("utf-8"))
        for arr in (self.offsets, self.token_ids, self.f_de, self.f_nu):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]

    def contingency(self, k, token):
        f_de, f_nu = self.get(k, token)
        return Contingency(f_nu, f_de, self.n_nu - f_nu, self.n_de - f_de)

    def validate(self):
        """Check the marginal-sum and ordering invariants of a full model."""
        if self.n_de <= 0:
            raise InvariantError("n_de must be positive")
        for k in range(1, self.N + 1):
            lo, hi = self.span(k)
            ids = self.token_ids[lo:hi]
            if len(ids) > 1 and np.any(np.diff(ids) <= 0):
                raise InvariantError(f"position {k}: token ids not strictly sorted")
            sd = int(self.f_de[lo:hi].sum(dtype=np.uint64))
            su = int(self.f_nu[lo:hi].sum(dtype=np.uint64))
            if sd != self.n_de or su != self.n_nu:
                raise InvariantError(
                    f"position {k}: marginals ({sd}, {su}) != totals "
                    f"({self.n_de}, {self.n_nu})")
        if len(self.token_ids) and (self.token_ids.min() < 0
                                    or self.token_ids.max() >= len(self.vocab)):
            raise InvariantError("token id out of vocabulary range")
        return self

    def mask_entries(self, mask):
        """Boolean array marking the entries selected by ``mask``."""
        if mask.N != self.N:
            raise ValueError(f"mask order {mask.N} != model order {self.N}")
        keep = np.zeros(self.entry_count, dtype=bool)
        for k in range(1, self.N + 1):
            for tok in mask.selected[k - 1]:
                j = self.lookup(k, tok)
                if j < 0:
                    raise ValueError(f"mask token {tok!r} at {k} not in model")
                keep[j] = True
        return keep

    def restrict(self, mask):
        """Model holding only the entries selected by ``mask``."""
        return self._subset(self.mask_entries(mask),
                            {**self.meta, "masked_by": mask.fingerprint()})

    def _subset(self, keep, meta):
        pos = self.positions()[keep]
        ids = self.token_ids[keep]
        used = np.unique(ids)
        vocab = tuple(self.vocab[i] for i in used.tolist())
        offsets = np.concatenate(
            [[0], np.cumsum(np.bincount(pos - 1, minlength=self.N))]).astype(np.int64)
        return PositionalCounts(self.N, self.n_de, self.n_nu, vocab, offsets,
                                np.searchsorted(used, ids), self.f_de[keep],
                                self.f_nu[keep], meta)

    # ---- persistence -----------------------------------------------------

    def to_bytes(self):
        header = (f"{MAGIC}\tformat_version={FORMAT_VERSION}\tN={self.N}\t"
                  f"n_de={self.n_de}\tn_nu={self.n_nu}\tentries={self.entry_count}\n")
        meta = "#meta\t" + json.dumps(self.meta, sort_keys=True,
                                      separators=(",", ":")) + "\n"
        vocab = self.vocab
        rows = [f"{k}\t{vocab[t]}\t{d}\t{u}\n" for k, t, d, u in
                zip(self.positions().tolist(), self.token_ids.tolist(),
                    self.f_de.tolist(), self.f_nu.tolist())]
        return (header + meta + "".join(rows)).encode("utf-8")

    @classmethod
    def from_bytes(cls, data):
        if not data:
            raise FormatError("empty model file")
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"model file is not UTF-8: {exc}") from None
        if not text.endswith("\n"):
            raise FormatError("model file truncated (no final newline)")
        lines = text.split("\n")[:-1]
        head = _parse_header(lines[0], MAGIC)
        try:
            N, n_de, n_nu, entries = (int(head[k]) for k in
                                      ("N", "n_de", "n_nu", "entries"))
        except (KeyError, ValueError):
            raise FormatError("model header lacks N/n_de/n_nu/entries") from None
        if len(lines) < 2 or not lines[1].startswith("#meta\t"):
            raise FormatError("model file lacks #meta line")
        meta = _parse_meta(lines[1])
        body = lines[2:]
        if len(body) != entries:
            raise FormatError(f"model file truncated: {len(body)} of {entries} rows")
        pos = np.empty(entries, dtype=np.int64)
        toks = []
        f_de = np.empty(entries, dtype=np.uint64)
        f_nu = np.empty(entries, dtype=np.uint64)
        for r, line in enumerate(body):
            parts = line.split("\t")
            if len(parts) != 4:
                raise FormatError(f"row {r + 3}: expected 4 fields")
            try:
                pos[r] = int(parts[0])
                f_de[r] = int(parts[2])
                f_nu[r] = int(parts[3])
            except (ValueError, OverflowError):
                raise FormatError(f"row {r + 3}: bad number") from None
            toks.append(parts[1])
        if entries and (pos.min() < 1 or pos.max() > N or np.any(np.diff(pos) < 0)):
            raise FormatError("rows not grouped by ascending position")
        vocab = tuple(sorted(set(toks)))
        index = {t: i for i, t in enumerate(vocab)}
        ids = np.fromiter((index[t] for t in toks), dtype=np.int64, count=entries)
        offsets = np.concatenate(
            [[0], np.cumsum(np.bincount(pos - 1, minlength=N))]).astype(np.int64)
        for k in range(N):
            seg = ids[offsets[k]:offsets[k + 1]]
            if len(seg) > 1 and np.any(np.diff(seg) <= 0):
                raise FormatError(f"position {k + 1}: tokens not strictly sorted")
        return cls(N, n_de, n_nu, vocab, offsets, ids, f_de, f_nu, meta)


def _parse_header(line, magic):
    parts = line.split("\t")
    if parts[0] != magic:
        raise FormatError(f"not a {magic[1:]} file")
    fields = {}
    for p in parts[1:]:
        key, sep, val = p.partition("=")
        if not sep:
            raise FormatError(f"bad header field {p!r}")
        fields[key] = val
    if fields.get("format_version") != str(FORMAT_VERSION):
        raise FormatError(f"unsupported format_version "
                          f"{fields.get('format_version')!r} (expected {FORMAT_VERSION})")
    return fields


def _parse_meta(line):
    try:
        meta = json.loads(line.split("\t", 1)[1])
    except (IndexError, ValueError):
        raise FormatError("unreadable #meta line") from None
    if not isinstance(meta, dict):
        raise FormatError("#meta must be a JSON object")
    return meta


def save(model, path):
    data = model.to_bytes()
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def load(path):
    with open(path, "rb") as fh:
        return PositionalCounts.from_bytes(fh.read())


def footprint_report(model):
    """Stored (position, token) cells and the size of the persisted form."""
    return {"entry_count": model.entry_count,
            "serialized_bytes": len(model.to_bytes())}


# ---- building ------------------------------------------------------------

def _tally(batch, denominator):
    if denominator not in DENOMINATORS:
        raise ValueError(f"denominator must be one of {DENOMINATORS}")
    n, N = batch.ids.shape
    labels = batch.labels
    de_rows = np.ones(n, dtype=bool) if denominator == "all" else ~labels
    V = max(len(batch.vocab), 1)
    keys = batch.ids + np.arange(N, dtype=np.int64) * V
    de_keys = keys[de_rows].ravel()
    nu_keys = keys[labels].ravel()
    uniq, inv = np.unique(np.concatenate([de_keys, nu_keys]), return_inverse=True)
    inv = inv.ravel()
    f_de = np.bincount(inv[:len(de_keys)], minlength=len(uniq)).astype(np.uint64)
    f_nu = np.bincount(inv[len(de_keys):], minlength=len(uniq)).astype(np.uint64)
    pos, tok = np.divmod(uniq, V)
    used = np.unique(tok)
    vocab = tuple(batch.vocab[i] for i in used.tolist())
    offsets = np.concatenate(
        [[0], np.cumsum(np.bincount(pos, minlength=N))]).astype(np.int64)
    return PositionalCounts(N, int(de_rows.sum()), int(labels.sum()), vocab,
                            offsets, np.searchsorted(used, tok), f_de, f_nu)


def _finish(model, meta):
    if model.n_de == 0:
        raise ValueError("no denominator-class windows; n_de must be positive")
    return model.with_meta(meta)


def count_batch(batch, denominator="complement", meta=None):
    """Count an encoded :class:`WindowBatch`."""
    if len(batch) == 0:
        raise ValueError("cannot count an empty window stream")
    return _finish(_tally(batch, denominator), meta)


def build_counts(windows, denominator="complement", meta=None):
    """Count a stream of :class:`LabeledWindow` (entity context -> ``nu``)."""
    if isinstance(windows, WindowBatch):
        return count_batch(windows, denominator, meta)
    windows = list(windows)
    if not windows:
        raise ValueError("cannot count an empty window stream")
    return count_batch(WindowBatch.from_windows(windows), denominator, meta)


def count_documents(docs, N, entity_type, denominator="complement", threads=1,
                    meta=None):
    """Count every window of ``docs``; sharded over ``threads`` workers."""
    docs = list(docs)
    threads = max(1, int(threads))
    if threads == 1 or len(docs) < 2:
        batch = WindowBatch.from_documents(docs, N, entity_type)
        return count_batch(batch, denominator, meta)
    bounds = np.linspace(0, len(docs), min(threads, len(docs)) + 1).astype(int)
    shards = [docs[a:b] for a, b in zip(bounds[:-1], bounds[1:])]

    def work(shard):
        return WindowBatch.from_documents(shard, N, entity_type)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        batches = list(pool.map(work, shards))
    parts = [_tally(b, denominator) for b in batches if len(b)]
    if not parts:
        raise ValueError("cannot count an empty window stream")
    model = parts[0]
    for p in parts[1:]:
        model = merge(model, p)
    return _finish(model, meta)


def merge(a, b):
    """Cell- and total-wise sum of two models of equal order."""
    if a.N != b.N:
        raise ValueError(f"cannot merge models of order {a.N} and {b.N}")
    n_de = a.n_de + b.n_de
    n_nu = a.n_nu + b.n_nu
    if n_de > U64_MAX or n_nu > U64_MAX:
        raise CountOverflowError("merged class total exceeds 64 bits")
    vocab = tuple(sorted(set(a.vocab) | set(b.vocab)))
    index = {t: i for i, t in enumerate(vocab)}
    V = max(len(vocab), 1)

    def keys(m):
        remap = np.fromiter((index[t] for t in m.vocab), dtype=np.int64,
                            count=len(m.vocab))
        ids = remap[m.token_ids] if len(m.vocab) else m.token_ids
        return (m.positions() - 1) * V + ids

    ka, kb = keys(a), keys(b)
    uniq = np.union1d(ka, kb)
    f_de = np.zeros(len(uniq), dtype=np.uint64)
    f_nu = np.zeros(len(uniq), dtype=np.uint64)
    ia = np.searchsorted(uniq, ka)
    ib = np.searchsorted(uniq, kb)
    f_de[ia] = a.f_de
    f_nu[ia] = a.f_nu
    before_de, before_nu = f_de[ib], f_nu[ib]
    f_de[ib] = before_de + b.f_de
    f_nu[ib] = before_nu + b.f_nu
    if np.any(f_de[ib] < before_de) or np.any(f_nu[ib] < before_nu):
        raise CountOverflowError("merged cell count exceeds 64 bits")
    pos, tok = np.divmod(uniq, V)
    offsets = np.concatenate(
        [[0], np.cumsum(np.bincount(pos, minlength=a.N))]).astype(np.int64)
    meta = a.meta if a.meta == b.meta else {}
    return PositionalCounts(a.N, n_de, n_nu, vocab, offsets, tok, f_de, f_nu, meta)


def empty_counts(N):
    """A model with no windows; the identity element of :func:`merge`."""
    return PositionalCounts(N, 0, 0, (), np.zeros(N + 1, dtype=np.int64),
                            np.empty(0, dtype=np.int64), np.empty(0, np.uint64),
                            np.empty(0, np.uint64))


def contingency(model, k, token):
    return model.contingency(k, token)
