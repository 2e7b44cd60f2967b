"""Lasso form of the mean-filtering problem.

With ``z = diff(x)`` the objective becomes ``(1/2n)||y_tilde - A z||^2 +
penalty(z)`` where ``y_tilde`` is the centered observation and ``A`` is the
n x (n-1) matrix with 1-based entries

    A[i, j] = (j - n) / n   if i <= j
              j / n         if i >  j

Column j of A is a unit step at j with its mean removed.  A is never formed
on the solver path; products with A and A^T cost O(n) through prefix sums.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg


def _as_vector(v, name="vector"):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class CenteredObservation:
    y_tilde: np.ndarray
    y_mean: float


def center(y) -> CenteredObservation:
    """Remove the sample mean from ``y``."""
    y = _as_vector(y, "y")
    if y.size < 2:
        raise ValueError(f"need at least 2 samples, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise ValueError("observations must be finite")
    m = float(np.mean(y))
    return CenteredObservation(y - m, m)


class DiffModel:
    """The implicit matrix A for a fixed sample count ``n``."""

    def __init__(self, n: int):
        if n < 2:
            raise ValueError(f"n must be at least 2, got {n}")
        self.n = int(n)
        self._s_min = None

    @property
    def shape(self):
        return (self.n, self.n - 1)

    @property
    def gram_smallest_eigenvalue(self) -> float:
        if self._s_min is None:
            self._s_min = smallest_gram_eigenvalue(self.n)
        return self._s_min

    def entry(self, i: int, j: int) -> float:
        """A[i, j] with 1-based indices."""
        n = self.n
        if not (1 <= i <= n and 1 <= j <= n - 1):
            raise IndexError(f"({i}, {j}) outside a {n} x {n - 1} matrix")
        return (j - n) / n if i <= j else j / n

    def dense(self, columns=None) -> np.ndarray:
        """Materialize A, or only the given 1-based columns.  Analysis use only."""
        n = self.n
        j = np.arange(1, n) if columns is None else np.asarray(columns, dtype=int)
        if j.size and (j.min() < 1 or j.max() > n - 1):
            raise IndexError("column index out of range")
        i = np.arange(1, n + 1)[:, None]
        jj = j[None, :].astype(float)
        return np.where(i <= jj, (jj - n) / n, jj / n)

    def apply(self, z) -> np.ndarray:
        """A @ z in O(n)."""
        z = _as_vector(z, "z")
        if z.size != self.n - 1:
            raise ValueError(f"z has length {z.size}, expected {self.n - 1}")
        steps = np.concatenate(([0.0], np.cumsum(z)))
        return steps - steps.mean()

    def apply_transpose(self, v) -> np.ndarray:
        """A.T @ v in O(n): entry j is -(v_1 + ... + v_j) + (j/n) * sum(v)."""
        v = _as_vector(v, "v")
        if v.size != self.n:
            raise ValueError(f"v has length {v.size}, expected {self.n}")
        c = np.cumsum(v)
        j = np.arange(1, self.n)
        return -c[:-1] + j * (c[-1] / self.n)

    def reconstruct_x(self, z_hat, y) -> np.ndarray:
        """Map a difference vector back to the signal with mean(x) = mean(y)."""
        z_hat = _as_vector(z_hat, "z_hat")
        y = _as_vector(y, "y")
        if y.size != self.n or z_hat.size != self.n - 1:
            raise ValueError(
                f"expected y of length {self.n} and z_hat of length {self.n - 1}, "
                f"got {y.size} and {z_hat.size}"
            )
        partial = np.cumsum(z_hat)
        x1 = np.mean(y) - partial.sum() / self.n
        return x1 + np.concatenate(([0.0], partial))

    def column_norm_sq(self, j: int) -> float:
        return column_norm_sq(self.n, j)


def column_norm_sq(n: int, j: int) -> float:
    """||a_j||^2 = j (n - j) / n, never more than n / 4."""
    if not 1 <= j <= n - 1:
        raise ValueError(f"column {j} out of range 1..{n - 1}")
    return j * (n - j) / n


def gram_matrix(n: int, columns=None) -> np.ndarray:
    """A.T @ A (or a principal block) from the closed form min(p,q) - p*q/n, p = n - j."""
    j = np.arange(1, n) if columns is None else np.asarray(columns, dtype=int)
    p = (n - j).astype(float)
    return np.minimum.outer(p, p) - np.outer(p, p) / n


def smallest_gram_eigenvalue(n: int, method: str = "tridiagonal") -> float:
    """Smallest eigenvalue of A.T @ A.

    A.T @ A is the inverse of the (n-1) x (n-1) matrix tridiag(-1, 2, -1), so
    the default computes the largest eigenvalue of that tridiagonal matrix by
    bisection and inverts it.  ``method="dense"`` runs a symmetric eigensolver
    on the explicit Gram matrix instead.
    """
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    if n == 2:
        return 0.5
    if method == "dense":
        return float(linalg.eigvalsh(gram_matrix(n), subset_by_index=[0, 0])[0])
    if method != "tridiagonal":
        raise ValueError(f"unknown method {method!r}")
    m = n - 1
    top = linalg.eigvalsh_tridiagonal(
        np.full(m, 2.0), np.full(m - 1, -1.0), select="i", select_range=(m - 1, m - 1)
    )
    return float(1.0 / top[0])


class Verdict(str, enum.Enum):
    STRICTLY_CONVEX = "StrictlyConvex"
    NOT_CERTIFIED = "NotCertified"


@dataclass(frozen=True)
class ConvexityCheck:
    verdict: Verdict
    margin: float
    s_min: float
    bound: float

    @property
    def certified(self) -> bool:
        return self.verdict is Verdict.STRICTLY_CONVEX


def check_convexity(n: int, lambda_sigma: float, sigma: float, mu: float) -> ConvexityCheck:
    """Certify strict convexity when sigma^2 > lambda_sigma * n * mu / s_min.

    The inequality is strict; equality is reported as not certified.
    """
    for name, val in (("lambda_sigma", lambda_sigma), ("sigma", sigma), ("mu", mu)):
        if not (val > 0 and math.isfinite(val)):
            raise ValueError(f"{name} must be positive and finite, got {val}")
    s_min = smallest_gram_eigenvalue(n)
    bound = lambda_sigma * n * mu / s_min
    margin = sigma * sigma - bound
    verdict = Verdict.STRICTLY_CONVEX if margin > 0 else Verdict.NOT_CERTIFIED
    return ConvexityCheck(verdict, margin, s_min, bound)
