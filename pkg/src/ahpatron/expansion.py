"""Kernel expansion hypotheses: f = sum_i alpha_i * kappa(x_i, .).

An Expansion owns the active set of an online learner: the stored examples,
their coefficients, an incrementally maintained Gram matrix, and a cached
squared RKHS norm.  Terms are a multiset -- duplicate instances are kept as
separate terms and never merged, because budget maintenance splits the
active set by per-update coefficients.

The norm cache is updated incrementally on insert/scale and reset from a
from-scratch quadratic form after every removal event (the only place drift
can accumulate).
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .kernels import KernelSpec, LabeledExample, SparseVector, kernel_diag, kernel_row

_MIN_CAPACITY = 16

# Quadratic forms more negative than this indicate a corrupted Gram cache
# rather than rounding error.
_NEG_QFORM_TOL = 1e-12


class DegenerateProjection(Exception):
    """Sphere projection requested for a zero-norm hypothesis."""


class GramCorruption(Exception):
    """Quadratic form went negative beyond rounding tolerance."""


class Expansion:
    """Mutable kernel expansion with cached Gram matrix and squared norm.

    A single learner run owns its Expansion exclusively; distinct runs may
    proceed concurrently on shared immutable inputs.
    """

    __slots__ = ("spec", "_dim", "_n", "_examples", "_alphas", "_xsq", "_X",
                 "_gram", "_sq_norm")

    def __init__(self, spec: KernelSpec, dim: int = 0):
        self.spec = spec
        self._dim = int(dim)
        self._n = 0
        self._examples: list[LabeledExample] = []
        self._alphas = np.zeros(_MIN_CAPACITY)
        self._xsq = np.zeros(_MIN_CAPACITY)
        self._X = np.zeros((_MIN_CAPACITY, self._dim))
        self._gram = np.zeros((_MIN_CAPACITY, _MIN_CAPACITY))
        self._sq_norm = 0.0

    @classmethod
    def from_terms(
        cls,
        spec: KernelSpec,
        terms: Iterable[tuple[LabeledExample, float]],
        gram: np.ndarray | None = None,
    ) -> "Expansion":
        """Bulk constructor; ``gram`` skips the incremental row computation."""
        terms = [(ex, float(c)) for ex, c in terms]
        terms = [(ex, c) for ex, c in terms if c != 0.0]
        dim = max((ex.x.width for ex, _ in terms), default=0)
        f = cls(spec, dim)
        if gram is not None and terms:
            n = len(terms)
            if gram.shape != (n, n):
                raise ValueError("gram shape does not match terms")
            f._reserve(n)
            for i, (ex, c) in enumerate(terms):
                f._examples.append(ex)
                f._alphas[i] = c
                f._xsq[i] = ex.x.sq_norm
                if ex.x.indices:
                    f._X[i, list(ex.x.indices)] = ex.x.values
            f._gram[:n, :n] = gram
            f._n = n
            f._sq_norm = f._quadratic_form()
            return f
        for ex, c in terms:
            f.insert(ex, c)
        return f

    # -- views ------------------------------------------------------------

    @property
    def size(self) -> int:
        return self._n

    def __len__(self) -> int:
        return self._n

    @property
    def terms(self) -> list[tuple[LabeledExample, float]]:
        return [(ex, float(a)) for ex, a in zip(self._examples, self._alphas[: self._n])]

    @property
    def alphas(self) -> np.ndarray:
        """Read-only view of the coefficient vector."""
        view = self._alphas[: self._n]
        view.flags.writeable = False
        return view

    @property
    def gram(self) -> np.ndarray:
        """Read-only view of the active-set Gram matrix."""
        view = self._gram[: self._n, : self._n]
        view.flags.writeable = False
        return view

    @property
    def sq_norm(self) -> float:
        return self._sq_norm

    def norm(self) -> float:
        return np.sqrt(self._sq_norm) if self._sq_norm > 0 else 0.0

    # -- evaluation --------------------------------------------------------

    def kernel_row(self, x: SparseVector) -> np.ndarray:
        """kappa(x_i, x) for every stored instance, vectorized."""
        if x.width > self._dim:
            self._grow_dim(x.width)
        n = self._n
        if n == 0:
            return np.empty(0)
        xd = x.dense(self._dim)
        return kernel_row(self.spec, self._X[:n], self._xsq[:n], xd, x.sq_norm)

    def evaluate(self, x: SparseVector, row: np.ndarray | None = None) -> float:
        """f(x) = sum_i alpha_i * kappa(x_i, x)."""
        if self._n == 0:
            return 0.0
        if row is None:
            row = self.kernel_row(x)
        return float(row @ self._alphas[: self._n])

    # -- updates -----------------------------------------------------------

    def insert(self, ex: LabeledExample, coeff: float, row: np.ndarray | None = None) -> None:
        """Append a term; ``row`` may pass a precomputed kernel_row(ex.x).

        The Gram matrix grows by one row/column and the norm cache is
        updated via  |f + c k(x,.)|^2 = |f|^2 + 2c f(x) + c^2 kappa(x,x).
        """
        coeff = float(coeff)
        if coeff == 0.0:
            raise ValueError("zero coefficient")
        x = ex.x
        if row is None:
            row = self.kernel_row(x)
        elif x.width > self._dim:
            self._grow_dim(x.width)
        n = self._n
        fx = float(row @ self._alphas[:n]) if n else 0.0
        kxx = kernel_diag(self.spec, x)
        self._reserve(n + 1)
        self._examples.append(ex)
        self._alphas[n] = coeff
        self._xsq[n] = x.sq_norm
        self._X[n, : self._dim] = x.dense(self._dim)
        self._gram[n, :n] = row
        self._gram[:n, n] = row
        self._gram[n, n] = kxx
        self._n = n + 1
        sq = self._sq_norm + 2.0 * coeff * fx + coeff * coeff * kxx
        # Exact cancellations can land a hair below zero.
        self._sq_norm = sq if sq > 0.0 else 0.0

    def scale(self, c: float) -> None:
        """Multiply every coefficient by c (eager); c == 0 empties the expansion."""
        c = float(c)
        if not np.isfinite(c):
            raise ValueError("scale factor must be finite")
        if c == 0.0:
            self.clear()
            return
        if c == 1.0:
            return
        self._alphas[: self._n] *= c
        self._sq_norm *= c * c

    def project_ball(self, radius: float) -> None:
        """Project onto {f : |f| <= radius}; no-op inside the ball."""
        if not radius > 0:
            raise ValueError("ball radius must be positive")
        if radius == np.inf:
            return
        if self._sq_norm <= radius * radius:
            return
        self.scale(radius / np.sqrt(self._sq_norm))

    def project_sphere(self, radius: float) -> None:
        """Rescale onto {f : |f| = radius}.

        Raises DegenerateProjection when the current norm is zero and the
        target radius is positive (the rescaling is undefined there).
        """
        if radius < 0:
            raise ValueError("sphere radius must be >= 0")
        if radius == 0.0:
            self.scale(0.0)
            return
        nrm = self.norm()
        if nrm == 0.0:
            raise DegenerateProjection("cannot rescale a zero-norm hypothesis")
        self.scale(radius / nrm)

    def recompute_norm(self) -> float:
        """Norm from a from-scratch quadratic form (ignores the cache)."""
        return float(np.sqrt(self._quadratic_form()))

    def reset_norm_cache(self) -> float:
        """Recompute the cache from scratch; returns the relative drift seen."""
        old = self._sq_norm
        fresh = self._quadratic_form()
        self._sq_norm = fresh
        return abs(old - fresh) / max(1.0, fresh)

    def remove_term(self, i: int) -> None:
        """Delete term i; Gram shrinks and the norm cache is reset from scratch."""
        n = self._n
        if not 0 <= i < n:
            raise IndexError(i)
        keep = [j for j in range(n) if j != i]
        self._compact(keep, self._alphas[keep])

    def replace_with_subset(self, keep: Sequence[int], new_coeffs: Sequence[float]) -> None:
        """Keep only ``keep`` (insertion order), assigning them new coefficients.

        Zero coefficients are evicted.  Used by the halving step, where the
        survivors absorb the projected mass of the removed half.
        """
        keep = list(keep)
        coeffs = np.asarray(new_coeffs, dtype=float)
        if len(keep) != len(coeffs):
            raise ValueError("keep/new_coeffs length mismatch")
        if any(keep[i] >= keep[i + 1] for i in range(len(keep) - 1)):
            raise ValueError("keep indices must be strictly increasing")
        nz = coeffs != 0.0
        self._compact([k for k, m in zip(keep, nz) if m], coeffs[nz])

    def clear(self) -> None:
        self._examples.clear()
        self._n = 0
        self._sq_norm = 0.0

    def copy(self) -> "Expansion":
        out = Expansion(self.spec, self._dim)
        n = self._n
        out._reserve(n)
        out._examples = list(self._examples)
        out._alphas[:n] = self._alphas[:n]
        out._xsq[:n] = self._xsq[:n]
        out._X[:n] = self._X[:n, : out._dim]
        out._gram[:n, :n] = self._gram[:n, :n]
        out._n = n
        out._sq_norm = self._sq_norm
        return out

    # -- internals ----------------------------------------------------------

    def _quadratic_form(self) -> float:
        n = self._n
        if n == 0:
            return 0.0
        a = self._alphas[:n]
        q = float(a @ (self._gram[:n, :n] @ a))
        if q < -_NEG_QFORM_TOL:
            raise GramCorruption(f"quadratic form {q} < -{_NEG_QFORM_TOL}")
        return q if q > 0.0 else 0.0

    def _compact(self, keep: list[int], coeffs: np.ndarray) -> None:
        m = len(keep)
        self._examples = [self._examples[k] for k in keep]
        # Fancy indexing copies, so overlapping writes are safe.
        self._alphas[:m] = coeffs
        self._xsq[:m] = self._xsq[keep]
        self._X[:m] = self._X[keep]
        self._gram[:m, :m] = self._gram[np.ix_(keep, keep)]
        self._n = m
        self._sq_norm = self._quadratic_form()

    def _reserve(self, n: int) -> None:
        cap = self._alphas.shape[0]
        if n <= cap:
            return
        new_cap = max(_MIN_CAPACITY, cap)
        while new_cap < n:
            new_cap *= 2
        k = self._n
        alphas = np.zeros(new_cap)
        alphas[:k] = self._alphas[:k]
        xsq = np.zeros(new_cap)
        xsq[:k] = self._xsq[:k]
        X = np.zeros((new_cap, self._dim))
        X[:k] = self._X[:k]
        gram = np.zeros((new_cap, new_cap))
        gram[:k, :k] = self._gram[:k, :k]
        self._alphas, self._xsq, self._X, self._gram = alphas, xsq, X, gram

    def _grow_dim(self, dim: int) -> None:
        X = np.zeros((self._X.shape[0], dim))
        X[:, : self._dim] = self._X
        self._X = X
        self._dim = dim
