"""Temporal edge lists, snapshot binning, normalisation and splits."""

from __future__ import annotations

import gzip
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np
import scipy.sparse as sp

from .containers import read_npz, write_npz
from .tensor_core import InvalidArgument, SparseSnapshots

log = logging.getLogger(__name__)

AGGREGATORS = ("last", "mean", "sum")
FORMATS = ("auto", "csv", "tsv", "whitespace")
INDEX_POLICIES = ("compact", "span")
DEFAULT_COLUMNS = ("src", "dst", "weight", "time")


class DataError(Exception):
    """Problems with input data files."""


class ParseError(DataError):
    def __init__(self, path, lineno: int, line: str, reason: str = ""):
        self.lineno = lineno
        msg = f"{path}:{lineno}: cannot parse {line.strip()!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class EmptyInputError(DataError):
    pass


class TemporalEdge(NamedTuple):
    src: int
    dst: int
    weight: float
    timestamp: float


@dataclass
class EdgeList:
    """Columnar edge list in file order with dense node ids.

    ``node_ids[k]`` is the raw identifier of dense node ``k``.
    """

    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    timestamp: np.ndarray
    node_ids: np.ndarray

    @property
    def n(self) -> int:
        return len(self.node_ids)

    def __len__(self) -> int:
        return len(self.src)

    def __iter__(self) -> Iterator[TemporalEdge]:
        for s, d, w, ts in zip(self.src, self.dst, self.weight, self.timestamp):
            yield TemporalEdge(int(s), int(d), float(w), float(ts))

    def __getitem__(self, k: int) -> TemporalEdge:
        return TemporalEdge(int(self.src[k]), int(self.dst[k]),
                            float(self.weight[k]), float(self.timestamp[k]))


_SPLITTERS = {
    "csv": lambda s: s.split(","),
    "tsv": lambda s: s.split("\t"),
    "whitespace": str.split,
}


def _detect_format(line: str) -> str:
    if "," in line:
        return "csv"
    if "\t" in line:
        return "tsv"
    return "whitespace"


def _parse_id(tok: str) -> int:
    v = float(tok)
    if not v.is_integer():
        raise ValueError(f"node id {tok!r} is not an integer")
    return int(v)


def load_edge_list(path, format: str = "auto", index: str = "compact",
                   columns=DEFAULT_COLUMNS) -> EdgeList:
    """Read ``src, dst, weight, timestamp`` rows.

    Lines starting with ``#`` or ``%`` are comments. A first data line that
    does not parse is taken to be a header. With ``index="compact"`` raw ids
    are mapped to ``0..n-1`` in sorted order; ``index="span"`` keeps every id
    between the smallest and largest one, so ``n = max - min + 1``.

    ``columns`` names the leading fields of each row; it must contain
    ``src``, ``dst`` and ``time``. Without a ``weight`` column every edge
    weighs 1. Extra trailing fields are ignored. Files ending in ``.gz`` are
    decompressed on the fly.
    """
    if format not in FORMATS:
        raise InvalidArgument(f"unknown format {format!r}")
    if index not in INDEX_POLICIES:
        raise InvalidArgument(f"unknown index policy {index!r}")
    columns = tuple(columns)
    if not {"src", "dst", "time"} <= set(columns):
        raise InvalidArgument(f"columns {columns} must include src, dst and time")
    pos = {name: k for k, name in enumerate(columns)}
    path = Path(path)
    src, dst, wts, tss = [], [], [], []
    split = None
    first = True
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rt") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s[0] in "#%":
                continue
            if split is None:
                split = _SPLITTERS[_detect_format(s) if format == "auto" else format]
            toks = [t.strip() for t in split(s) if t.strip() != ""]
            try:
                if len(toks) < len(columns):
                    raise ValueError(f"expected {len(columns)} fields, found {len(toks)}")
                a, b = _parse_id(toks[pos["src"]]), _parse_id(toks[pos["dst"]])
                w = float(toks[pos["weight"]]) if "weight" in pos else 1.0
                ts = float(toks[pos["time"]])
                if not (np.isfinite(w) and np.isfinite(ts)):
                    raise ValueError("non-finite weight or timestamp")
            except ValueError as exc:
                if first and re.search(r"[A-Za-z_]", s):
                    first = False  # header line
                    continue
                raise ParseError(path, lineno, line, str(exc)) from None
            first = False
            src.append(a)
            dst.append(b)
            wts.append(w)
            tss.append(ts)
    if not src:
        raise EmptyInputError(f"{path}: no edges found")
    raw = np.concatenate([np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64)])
    if index == "compact":
        node_ids, inv = np.unique(raw, return_inverse=True)
    else:
        lo, hi = raw.min(), raw.max()
        node_ids = np.arange(lo, hi + 1, dtype=np.int64)
        inv = raw - lo
    m = len(src)
    return EdgeList(src=inv[:m].astype(np.int64), dst=inv[m:].astype(np.int64),
                    weight=np.asarray(wts, dtype=np.float64),
                    timestamp=np.asarray(tss, dtype=np.float64), node_ids=node_ids)


def edges_from_arrays(src, dst, weight, timestamp, n: int | None = None) -> EdgeList:
    """Wrap already-dense integer node ids as an :class:`EdgeList`."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if n is None:
        n = int(max(src.max(), dst.max())) + 1 if len(src) else 0
    return EdgeList(src, dst, np.asarray(weight, dtype=np.float64),
                    np.asarray(timestamp, dtype=np.float64), np.arange(n, dtype=np.int64))


@dataclass
class DynamicGraph:
    """Binned dynamic graph.

    ``adjacency`` is the binary presence tensor; ``obs_*`` hold one weighted
    observation per distinct ``(i, j, t)``, sorted by ``(t, i, j)``.
    """

    n: int
    t_slots: int
    adjacency: SparseSnapshots
    obs_i: np.ndarray
    obs_j: np.ndarray
    obs_t: np.ndarray
    obs_y: np.ndarray
    node_ids: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_obs(self) -> int:
        return len(self.obs_y)

    def observations(self, idx=None) -> np.ndarray:
        """``(k, 3)`` integer array of ``(i, j, t)``."""
        o = np.stack([self.obs_i, self.obs_j, self.obs_t], axis=1)
        return o if idx is None else o[np.asarray(idx, dtype=np.int64)]

    def targets(self, idx=None) -> np.ndarray:
        return self.obs_y if idx is None else self.obs_y[np.asarray(idx, dtype=np.int64)]


def slot_of(timestamp: np.ndarray, t_slots: int, lo: float | None = None,
            hi: float | None = None) -> np.ndarray:
    """Equal-width bins over ``[lo, hi]``, right-closed, first bin closed.

    Bin ``k`` covers ``(lo + k*w, lo + (k+1)*w]``; ``lo`` itself lands in
    bin 0 and ``hi`` in bin ``t_slots - 1``.
    """
    ts = np.asarray(timestamp, dtype=np.float64)
    lo = ts.min() if lo is None else lo
    hi = ts.max() if hi is None else hi
    if hi <= lo:
        return np.zeros(len(ts), dtype=np.int64)
    scaled = (ts - lo) * t_slots / (hi - lo)
    slot = np.ceil(scaled).astype(np.int64) - 1
    return np.clip(slot, 0, t_slots - 1)


def bin_snapshots(edges: EdgeList, t_slots: int, aggregator: str = "last") -> DynamicGraph:
    """Bin edges into ``t_slots`` snapshots and collapse duplicate ``(i, j, t)``."""
    if int(t_slots) < 1:
        raise InvalidArgument(f"t_slots must be >= 1, got {t_slots}")
    if aggregator not in AGGREGATORS:
        raise InvalidArgument(f"unknown aggregator {aggregator!r}; expected one of {AGGREGATORS}")
    if len(edges) == 0:
        raise EmptyInputError("cannot bin an empty edge list")
    n = edges.n
    slot = slot_of(edges.timestamp, t_slots)
    key = (slot * n + edges.src) * n + edges.dst
    uniq, inv = np.unique(key, return_inverse=True)
    inv = inv.ravel()
    if aggregator == "last":
        # last occurrence in file order
        rev_first = np.unique(key[::-1], return_index=True)[1]
        y = edges.weight[len(key) - 1 - rev_first]
    else:
        y = np.bincount(inv, weights=edges.weight, minlength=len(uniq))
        if aggregator == "mean":
            y = y / np.bincount(inv, minlength=len(uniq))
    obs_t = uniq // (n * n)
    rem = uniq % (n * n)
    obs_i, obs_j = rem // n, rem % n
    adjacency = SparseSnapshots.from_triplets(n, t_slots, obs_t, obs_i, obs_j)
    meta = {"aggregator": aggregator, "t_min": float(edges.timestamp.min()),
            "t_max": float(edges.timestamp.max()), "n_edges": int(len(edges))}
    return DynamicGraph(n=n, t_slots=int(t_slots), adjacency=adjacency,
                        obs_i=obs_i.astype(np.int64), obs_j=obs_j.astype(np.int64),
                        obs_t=obs_t.astype(np.int64), obs_y=np.asarray(y, dtype=np.float64),
                        node_ids=edges.node_ids, meta=meta)


def normalize_snapshots(adjacency: SparseSnapshots) -> SparseSnapshots:
    """Per slot ``D^-1/2 (S + I) D^-1/2`` with ``S = max(A, A^T)`` binarised."""
    n = adjacency.n
    eye = sp.identity(n, format="csr")
    out = []
    for a in adjacency.slices:
        s = a.maximum(a.T).tocsr()
        s.data = (s.data != 0).astype(np.float64)
        s.eliminate_zeros()
        s = (s + eye).tocsr()
        deg = np.asarray(s.sum(axis=1)).ravel()
        dinv = sp.diags(1.0 / np.sqrt(deg))
        out.append((dinv @ s @ dinv).tocsr())
    return SparseSnapshots(out, n=n)


def symmetrize_and_normalize(g: DynamicGraph) -> SparseSnapshots:
    return normalize_snapshots(g.adjacency)


@dataclass(frozen=True)
class SplitSet:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int

    def get(self, name: str) -> np.ndarray:
        try:
            return {"train": self.train, "validation": self.validation, "val": self.validation,
                    "test": self.test}[name]
        except KeyError:
            raise InvalidArgument(f"unknown split {name!r}") from None


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split_observations(g_or_count, seed: int) -> SplitSet:
    """Seeded shuffle followed by a contiguous 80/10/10 cut."""
    m = g_or_count if isinstance(g_or_count, (int, np.integer)) else g_or_count.n_obs
    if m < 10:
        raise InvalidArgument(f"need at least 10 observations to split, got {m}")
    perm = np.random.default_rng(seed).permutation(m)
    n_train = _round_half_up(0.8 * m)
    n_val = _round_half_up(0.1 * m)
    return SplitSet(train=np.sort(perm[:n_train]), validation=np.sort(perm[n_train:n_train + n_val]),
                    test=np.sort(perm[n_train + n_val:]), seed=int(seed))


def mask_adjacency_to_train(g: DynamicGraph, split: SplitSet) -> DynamicGraph:
    """Copy of ``g`` whose adjacency only holds training observations."""
    idx = split.train
    adjacency = SparseSnapshots.from_triplets(g.n, g.t_slots, g.obs_t[idx], g.obs_i[idx],
                                              g.obs_j[idx])
    return replace(g, adjacency=adjacency)


def density(n_edges: int, n: int) -> float:
    return n_edges / float(n * n) if n else 0.0


PREPARED_FORMAT = "tlgcn-prepared/1"


def save_prepared(path, g: DynamicGraph, split: SplitSet, meta: dict | None = None) -> None:
    """Write graph, observations and split to one deterministic container."""
    slot, row, col, _ = g.adjacency.triplets()
    arrays = {
        "obs_i": g.obs_i, "obs_j": g.obs_j, "obs_t": g.obs_t, "obs_y": g.obs_y,
        "adj_slot": slot, "adj_row": row, "adj_col": col,
        "split_train": split.train, "split_validation": split.validation, "split_test": split.test,
        "node_ids": g.node_ids if g.node_ids is not None else np.arange(g.n),
    }
    info = {"format": PREPARED_FORMAT, "n": g.n, "t_slots": g.t_slots, "split_seed": split.seed,
            "split_policy": "seeded-random-80-10-10", **g.meta, **(meta or {})}
    write_npz(path, arrays, info)


def load_prepared(path) -> tuple[DynamicGraph, SplitSet, dict]:
    try:
        a, meta = read_npz(path)
    except (OSError, ValueError) as exc:
        raise DataError(f"{path}: not a prepared dataset ({exc})") from exc
    if meta.get("format") != PREPARED_FORMAT:
        raise DataError(f"{path}: not a prepared dataset")
    n, t_slots = int(meta["n"]), int(meta["t_slots"])
    adjacency = SparseSnapshots.from_triplets(n, t_slots, a["adj_slot"], a["adj_row"], a["adj_col"])
    g = DynamicGraph(n=n, t_slots=t_slots, adjacency=adjacency, obs_i=a["obs_i"], obs_j=a["obs_j"],
                     obs_t=a["obs_t"], obs_y=a["obs_y"], node_ids=a["node_ids"], meta=meta)
    split = SplitSet(a["split_train"], a["split_validation"], a["split_test"], int(meta["split_seed"]))
    return g, split, meta
