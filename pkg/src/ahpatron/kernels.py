"""Kernel functions, sparse instances, and Gram matrices.

Instances are immutable sparse vectors (sorted index/value pairs, explicit
zeros dropped).  Supported kernel families: Gaussian (RBF), linear, and
inhomogeneous polynomial.  All evaluations are double precision; the
Gaussian kernel is normalized (kappa(x, x) = 1) so the unit-diagonal
assumption needed by the bound checkers holds automatically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

GAUSSIAN = "gaussian"
LINEAR = "linear"
POLYNOMIAL = "polynomial"


class SparseVector:
    """Immutable sparse vector: strictly increasing indices, nonzero finite values.

    Explicit zeros in the input are dropped, so the all-zero vector is
    canonically empty and equality/hashing are well defined.
    """

    __slots__ = ("indices", "values", "_sq", "_dense_dim", "_dense")

    def __init__(self, pairs: Iterable[tuple[int, float]] = ()):
        indices: list[int] = []
        values: list[float] = []
        last = -1
        for i, v in pairs:
            i = int(i)
            v = float(v)
            if i < 0:
                raise ValueError(f"negative index {i}")
            if i <= last:
                raise ValueError(f"indices not strictly increasing at {i}")
            if not math.isfinite(v):
                raise ValueError(f"non-finite value at index {i}")
            last = i
            if v != 0.0:
                indices.append(i)
                values.append(v)
        self.indices: tuple[int, ...] = tuple(indices)
        self.values: tuple[float, ...] = tuple(values)
        self._sq: float | None = None
        self._dense_dim = -1
        self._dense: np.ndarray | None = None

    @classmethod
    def from_dense(cls, arr: Sequence[float]) -> "SparseVector":
        return cls((i, float(v)) for i, v in enumerate(arr) if v != 0.0)

    @property
    def width(self) -> int:
        """max index + 1 (0 for the empty vector)."""
        return self.indices[-1] + 1 if self.indices else 0

    @property
    def sq_norm(self) -> float:
        if self._sq is None:
            s = 0.0
            for v in self.values:
                s += v * v
            self._sq = s
        return self._sq

    def dense(self, dim: int) -> np.ndarray:
        """Dense copy of length ``dim`` (cached for repeated use at the same dim)."""
        if dim < self.width:
            raise ValueError(f"dim {dim} < width {self.width}")
        if self._dense_dim != dim:
            out = np.zeros(dim)
            if self.indices:
                out[list(self.indices)] = self.values
            self._dense = out
            self._dense_dim = dim
        return self._dense  # type: ignore[return-value]

    def dot(self, other: "SparseVector") -> float:
        """Sparse dot product via merge iteration."""
        a, b = self, other
        ia = ib = 0
        na, nb = len(a.indices), len(b.indices)
        s = 0.0
        while ia < na and ib < nb:
            da, db = a.indices[ia], b.indices[ib]
            if da == db:
                s += a.values[ia] * b.values[ib]
                ia += 1
                ib += 1
            elif da < db:
                ia += 1
            else:
                ib += 1
        return s

    def __len__(self) -> int:
        return len(self.indices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return self.indices == other.indices and self.values == other.values

    def __hash__(self) -> int:
        return hash((self.indices, self.values))

    def __repr__(self) -> str:
        inner = ", ".join(f"{i}:{v:g}" for i, v in zip(self.indices, self.values))
        return f"SparseVector({{{inner}}})"


@dataclass(frozen=True)
class LabeledExample:
    """Instance plus binary label in {-1, +1}."""

    x: SparseVector
    y: int

    def __post_init__(self):
        if self.y not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.y}")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameters.

    sigma applies to the Gaussian family; degree/offset to the polynomial
    family.  The linear kernel takes no parameters.
    """

    family: str
    sigma: float = 1.0
    degree: int = 1
    offset: float = 0.0

    def __post_init__(self):
        if self.family not in (GAUSSIAN, LINEAR, POLYNOMIAL):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == GAUSSIAN and not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.family == POLYNOMIAL:
            if self.degree < 1:
                raise ValueError("degree must be >= 1")
            if self.offset < 0:
                raise ValueError("offset must be >= 0")

    @classmethod
    def gaussian(cls, sigma: float) -> "KernelSpec":
        return cls(GAUSSIAN, sigma=float(sigma))

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(LINEAR)

    @classmethod
    def polynomial(cls, degree: int, offset: float = 0.0) -> "KernelSpec":
        return cls(POLYNOMIAL, degree=int(degree), offset=float(offset))


def sparse_sq_dist(u: SparseVector, v: SparseVector) -> float:
    """Squared Euclidean distance over the union of supports."""
    ia = ib = 0
    na, nb = len(u.indices), len(v.indices)
    s = 0.0
    while ia < na and ib < nb:
        da, db = u.indices[ia], v.indices[ib]
        if da == db:
            d = u.values[ia] - v.values[ib]
            s += d * d
            ia += 1
            ib += 1
        elif da < db:
            d = u.values[ia]
            s += d * d
            ia += 1
        else:
            d = v.values[ib]
            s += d * d
            ib += 1
    while ia < na:
        d = u.values[ia]
        s += d * d
        ia += 1
    while ib < nb:
        d = v.values[ib]
        s += d * d
        ib += 1
    return s


def kernel_eval(spec: KernelSpec, u: SparseVector, v: SparseVector) -> float:
    """Scalar kernel evaluation; symmetric in (u, v)."""
    if spec.family == GAUSSIAN:
        return math.exp(-sparse_sq_dist(u, v) / (2.0 * spec.sigma * spec.sigma))
    if spec.family == LINEAR:
        return u.dot(v)
    return (u.dot(v) + spec.offset) ** spec.degree


def kernel_diag(spec: KernelSpec, x: SparseVector) -> float:
    """kappa(x, x) without the generic distance path (exact 1.0 for Gaussian)."""
    if spec.family == GAUSSIAN:
        return 1.0
    if spec.family == LINEAR:
        return x.sq_norm
    return (x.sq_norm + spec.offset) ** spec.degree


def gram_matrix(spec: KernelSpec, xs: Sequence[SparseVector]) -> np.ndarray:
    """Entrywise Gram matrix, exactly consistent with kernel_eval.

    O(n^2) scalar evaluations; meant for active-set sizes.  Large streams
    (alignment, mean embeddings) go through pairwise_kernel instead.
    """
    n = len(xs)
    if n == 0:
        raise ValueError("xs must be nonempty")
    m = np.empty((n, n))
    for i in range(n):
        m[i, i] = kernel_eval(spec, xs[i], xs[i])
        for j in range(i):
            k = kernel_eval(spec, xs[i], xs[j])
            m[i, j] = k
            m[j, i] = k
    return m


def pairwise_kernel(spec: KernelSpec, xs: Sequence[SparseVector]) -> np.ndarray:
    """Vectorized Gram matrix (BLAS path; agrees with gram_matrix to fp error)."""
    n = len(xs)
    if n == 0:
        raise ValueError("xs must be nonempty")
    dim = max(x.width for x in xs)
    X = np.zeros((n, dim))
    for i, x in enumerate(xs):
        if x.indices:
            X[i, list(x.indices)] = x.values
    dots = X @ X.T
    dots = (dots + dots.T) * 0.5
    if spec.family == LINEAR:
        return dots
    if spec.family == POLYNOMIAL:
        return (dots + spec.offset) ** spec.degree
    sq = np.array([x.sq_norm for x in xs])
    d2 = sq[:, None] + sq[None, :] - 2.0 * dots
    np.maximum(d2, 0.0, out=d2)
    k = np.exp(-d2 / (2.0 * spec.sigma * spec.sigma))
    np.fill_diagonal(k, 1.0)
    return k


def kernel_row(
    spec: KernelSpec,
    X: np.ndarray,
    xsq: np.ndarray,
    xd: np.ndarray,
    x_sq: float,
) -> np.ndarray:
    """Kernel values of a dense query against stored dense rows.

    X and xsq are the stored instances and their cached squared norms; xd
    and x_sq the query.  This is the hot path shared by hypothesis
    evaluation and incremental Gram updates.
    """
    dots = X @ xd
    if spec.family == LINEAR:
        return dots
    if spec.family == POLYNOMIAL:
        return (dots + spec.offset) ** spec.degree
    d2 = xsq + x_sq - 2.0 * dots
    np.maximum(d2, 0.0, out=d2)
    d2 *= -1.0 / (2.0 * spec.sigma * spec.sigma)
    return np.exp(d2, out=d2)
