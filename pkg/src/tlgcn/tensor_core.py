"""Order-3 tensors, sparse snapshot stacks and the M-product operators.

Dense tensors are plain ``numpy.ndarray`` objects of shape ``(d1, d2, T)``
with the time axis last. Sparse adjacency stacks are held in
:class:`SparseSnapshots`, one CSR matrix per time slot.

Formulas for the transform matrices are written with 1-based ``t, k`` as
in the usual presentation; storage is 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp


class TensorError(ValueError):
    """Base class for tensor-algebra argument errors."""


class DimensionMismatch(TensorError):
    pass


class SingularMatrixError(TensorError):
    pass


class InvalidArgument(TensorError):
    pass


M_VARIANTS = ("M1", "M2")


@dataclass(frozen=True, eq=False)
class TransformMatrix:
    """A T x T matrix applied along the time mode.

    ``variant`` is ``"M1"``, ``"M2"`` or ``"custom"``; ``bandwidth`` is the
    number of nonzero diagonals at and below the main one (``None`` for
    custom matrices).
    """

    entries: np.ndarray
    variant: str = "custom"
    bandwidth: int | None = None

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"transform matrix must be square, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def t_slots(self) -> int:
        return self.entries.shape[0]

    @property
    def T(self) -> np.ndarray:
        return self.entries.T

    def transpose(self) -> "TransformMatrix":
        return TransformMatrix(self.entries.T.copy())

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def is_lower_triangular(self) -> bool:
        return not np.any(np.triu(self.entries, k=1))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __repr__(self) -> str:
        return (f"TransformMatrix(variant={self.variant!r}, t_slots={self.t_slots}, "
                f"bandwidth={self.bandwidth})")


MatrixLike = Union[TransformMatrix, np.ndarray]


def _check_sizes(t_slots: int, b: int) -> None:
    if int(t_slots) < 1:
        raise InvalidArgument(f"t_slots must be >= 1, got {t_slots}")
    if int(b) < 1:
        raise InvalidArgument(f"bandwidth must be >= 1, got {b}")


def make_m1(t_slots: int, b: int) -> TransformMatrix:
    """Equal-weight banded lower-triangular matrix.

    m_tk = 1 / min(b, t) for max(1, t - b + 1) <= k <= t, else 0.
    Every row sums to one.
    """
    _check_sizes(t_slots, b)
    m = np.zeros((t_slots, t_slots))
    for t in range(1, t_slots + 1):
        lo = max(1, t - b + 1)
        m[t - 1, lo - 1:t] = 1.0 / min(b, t)
    return TransformMatrix(m, "M1", int(b))


def make_m2(t_slots: int, b: int) -> TransformMatrix:
    """Recency-weighted banded lower-triangular matrix.

    m_tk = 1 / (t - k + 1) for max(1, t - b + 1) <= k <= t, else 0.
    Rows are not normalised.
    """
    _check_sizes(t_slots, b)
    m = np.zeros((t_slots, t_slots))
    for t in range(1, t_slots + 1):
        for k in range(max(1, t - b + 1), t + 1):
            m[t - 1, k - 1] = 1.0 / (t - k + 1)
    return TransformMatrix(m, "M2", int(b))


def make_transform(variant: str, t_slots: int, b: int) -> TransformMatrix:
    key = variant.upper()
    if key == "M1":
        return make_m1(t_slots, b)
    if key == "M2":
        return make_m2(t_slots, b)
    raise InvalidArgument(f"unknown transform variant {variant!r}; expected one of {M_VARIANTS}")


def identity_transform(t_slots: int) -> TransformMatrix:
    return TransformMatrix(np.eye(t_slots), "identity", 1)


def _entries(m: MatrixLike) -> np.ndarray:
    return m.entries if isinstance(m, TransformMatrix) else np.asarray(m, dtype=np.float64)


def _diagonal_offsets(m: np.ndarray) -> list[int]:
    """Offsets d (row - col) of the diagonals that hold any nonzero."""
    t = m.shape[0]
    return [d for d in range(-(t - 1), t) if np.any(np.diagonal(m, -d))]


def time_major(x: np.ndarray) -> np.ndarray:
    """``N x F x T`` to a contiguous ``T x N x F`` copy."""
    return np.ascontiguousarray(np.moveaxis(x, 2, 0))


def from_time_major(xt: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.moveaxis(xt, 0, 2))


def m_transform_tm(xt: np.ndarray, m: MatrixLike) -> np.ndarray:
    """:func:`m_transform` on a time-major array (time on axis 0).

    Each output slab accumulates its band in diagonal order, so the
    summation order is the same for every slot and call.
    """
    mm = _entries(m)
    t = xt.shape[0]
    if mm.shape != (t, t):
        raise DimensionMismatch(f"tensor has {t} slots but transform is {mm.shape[0]}x{mm.shape[1]}")
    out = np.zeros_like(xt)
    tmp = np.empty_like(xt[0]) if t else None
    offsets = _diagonal_offsets(mm)
    for row in range(t):
        for d in offsets:
            k = row - d
            if 0 <= k < t and mm[row, k] != 0.0:
                np.multiply(xt[k], mm[row, k], out=tmp)
                out[row] += tmp
    return out


def m_transform(x: np.ndarray, m: MatrixLike) -> np.ndarray:
    """Mode-3 product: ``out[i, j, t] = sum_k m[t, k] * x[i, j, k]``.

    Evaluated one diagonal of ``m`` at a time, so zeros above the band never
    touch the result and the reduction order is fixed.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise DimensionMismatch(f"expected an order-3 tensor, got ndim={x.ndim}")
    return from_time_major(m_transform_tm(time_major(x), m))


class SparseSnapshots:
    """A stack of ``T`` sparse ``n x n`` matrices in CSR form."""

    __slots__ = ("n", "slices", "_stacked")

    def __init__(self, slices: Iterable, n: int | None = None):
        mats = [sp.csr_matrix(s, dtype=np.float64) for s in slices]
        if not mats:
            raise InvalidArgument("a snapshot stack needs at least one slice")
        if n is None:
            n = mats[0].shape[0]
        for s in mats:
            if s.shape != (n, n):
                raise DimensionMismatch(f"slice shape {s.shape} does not match n={n}")
            s.sort_indices()
        self.n = int(n)
        self.slices = tuple(mats)
        self._stacked = None

    def stacked(self) -> sp.csr_matrix:
        """Block-diagonal ``nT x nT`` matrix with slice ``t`` in block ``t`` (cached)."""
        if self._stacked is None:
            self._stacked = sp.block_diag(self.slices, format="csr")
            self._stacked.sort_indices()
        return self._stacked

    @property
    def t_slots(self) -> int:
        return len(self.slices)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.t_slots)

    @property
    def nnz(self) -> int:
        return sum(s.nnz for s in self.slices)

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "SparseSnapshots":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 3 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected an n x n x T array, got {a.shape}")
        return cls((a[:, :, t] for t in range(a.shape[2])), n=a.shape[0])

    @classmethod
    def from_triplets(cls, n: int, t_slots: int, slot: np.ndarray, row: np.ndarray,
                      col: np.ndarray, val: np.ndarray | None = None) -> "SparseSnapshots":
        """Build from (slot, row, col, value) arrays; duplicates are summed."""
        slot = np.asarray(slot, dtype=np.int64)
        row = np.asarray(row, dtype=np.int64)
        col = np.asarray(col, dtype=np.int64)
        val = np.ones(len(slot)) if val is None else np.asarray(val, dtype=np.float64)
        if len(slot) and (slot.min() < 0 or slot.max() >= t_slots):
            raise InvalidArgument("slot index out of range")
        order = np.argsort(slot, kind="stable")
        bounds = np.searchsorted(slot[order], np.arange(t_slots + 1))
        slices = []
        for t in range(t_slots):
            idx = order[bounds[t]:bounds[t + 1]]
            slices.append(sp.csr_matrix((val[idx], (row[idx], col[idx])), shape=(n, n)))
        return cls(slices, n=n)

    def to_dense(self) -> np.ndarray:
        return np.stack([s.toarray() for s in self.slices], axis=2)

    def transpose(self) -> "SparseSnapshots":
        """Per-slot transpose."""
        return SparseSnapshots((s.T.tocsr() for s in self.slices), n=self.n)

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        slots, rows, cols, vals = [], [], [], []
        for t, s in enumerate(self.slices):
            c = s.tocoo()
            slots.append(np.full(c.nnz, t, dtype=np.int64))
            rows.append(c.row.astype(np.int64))
            cols.append(c.col.astype(np.int64))
            vals.append(c.data)
        return (np.concatenate(slots), np.concatenate(rows),
                np.concatenate(cols), np.concatenate(vals))

    def __repr__(self) -> str:
        return f"SparseSnapshots(n={self.n}, t_slots={self.t_slots}, nnz={self.nnz})"


def m_transform_sparse(a: SparseSnapshots, m: MatrixLike) -> SparseSnapshots:
    """Slice ``t`` of the result is ``sum_k m[t, k] * A_k`` over nonzero ``m[t, k]``."""
    mm = _entries(m)
    if mm.shape != (a.t_slots, a.t_slots):
        raise DimensionMismatch(
            f"snapshot stack has {a.t_slots} slots but transform is {mm.shape[0]}x{mm.shape[1]}")
    out = []
    for t in range(a.t_slots):
        acc = sp.csr_matrix((a.n, a.n))
        for k in np.flatnonzero(mm[t]):
            acc = acc + mm[t, k] * a.slices[k]
        out.append(acc)
    return SparseSnapshots(out, n=a.n)


def facewise_product(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-slot matrix product, ``out[:, :, t] = x[:, :, t] @ y[:, :, t]``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 3 or y.ndim != 3:
        raise DimensionMismatch("face-wise product needs two order-3 tensors")
    if x.shape[1] != y.shape[0] or x.shape[2] != y.shape[2]:
        raise DimensionMismatch(f"cannot multiply {x.shape} by {y.shape} face-wise")
    prod = np.matmul(np.moveaxis(x, 2, 0), np.moveaxis(y, 2, 0))
    return np.ascontiguousarray(np.moveaxis(prod, 0, 2))


def facewise_product_sparse_tm(a: SparseSnapshots, ht: np.ndarray) -> np.ndarray:
    """Per-slot ``A_t @ H_t`` on a time-major ``T x n x F`` array."""
    t, n = a.t_slots, a.n
    if ht.ndim != 3 or ht.shape[:2] != (t, n):
        raise DimensionMismatch(f"cannot multiply snapshots {a.shape} by time-major {ht.shape}")
    flat = np.ascontiguousarray(ht).reshape(t * n, -1)
    return np.asarray(a.stacked() @ flat).reshape(t, n, -1)


def facewise_product_sparse(a: SparseSnapshots, h: np.ndarray) -> np.ndarray:
    """Per-slot sparse-dense product ``A_t @ H_t``."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 3 or h.shape[0] != a.n or h.shape[2] != a.t_slots:
        raise DimensionMismatch(f"cannot multiply snapshots {a.shape} by tensor {h.shape}")
    return from_time_major(facewise_product_sparse_tm(a, time_major(h)))


def m_product(x: np.ndarray, y: np.ndarray, m: MatrixLike) -> np.ndarray:
    """``((x x3 M) facewise (y x3 M)) x3 M^-1``.

    The inverse is applied through a triangular solve when ``M`` is lower
    triangular and an LU solve otherwise.
    """
    mm = _entries(m)
    z = facewise_product(m_transform(x, mm), m_transform(y, mm))
    return _apply_inverse(z, mm)


def _apply_inverse(z: np.ndarray, mm: np.ndarray) -> np.ndarray:
    t = mm.shape[0]
    if mm.shape != (t, t) or z.shape[2] != t:
        raise DimensionMismatch("inverse transform does not match tensor slots")
    diag = np.diagonal(mm)
    lower = not np.any(np.triu(mm, k=1))
    if lower and np.any(diag == 0):
        raise SingularMatrixError("transform matrix is singular (zero on the diagonal)")
    flat = z.reshape(-1, t).T  # (T, d1*d2)
    if lower:
        sol = scipy.linalg.solve_triangular(mm, flat, lower=True)
    else:
        try:
            sol = scipy.linalg.solve(mm, flat)
        except scipy.linalg.LinAlgError as exc:
            raise SingularMatrixError(str(exc)) from exc
        if not np.all(np.isfinite(sol)):
            raise SingularMatrixError("transform matrix is numerically singular")
    return np.ascontiguousarray(sol.T.reshape(z.shape))


def dump_tensor(x: np.ndarray, path) -> None:
    """Write one ``i j t value`` line per entry, values in round-trip repr."""
    x = np.asarray(x)
    with open(path, "w") as fh:
        for (i, j, t), v in np.ndenumerate(x):
            fh.write(f"{i} {j} {t} {float(v)!r}\n")


def load_tensor_dump(path, shape: Sequence[int]) -> np.ndarray:
    out = np.zeros(tuple(shape))
    with open(path) as fh:
        for line in fh:
            i, j, t, v = line.split()
            out[int(i), int(j), int(t)] = float(v)
    return out
