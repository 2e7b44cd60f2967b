"""Change-point recovery certificates for a known true support.

Everything here works on small dense blocks of A built from the closed form,
so it is meant for analysis, not for the solver path.  Supports are 1-based
index sets into the n - 1 differences.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import linalg

from . import penalties
from .difference_model import DiffModel, gram_matrix
from .penalties import PenaltySpec

BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class SupportSet:
    tau: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self):
        tau = tuple(int(t) for t in self.tau)
        signs = tuple(int(s) for s in self.signs)
        if not tau:
            raise ValueError("support must contain at least one index")
        if any(b <= a for a, b in zip(tau, tau[1:])):
            raise ValueError(f"support indices must be strictly increasing: {tau}")
        if len(signs) != len(tau):
            raise ValueError(f"{len(signs)} signs given for a support of size {len(tau)}")
        if any(s not in (-1, 1) for s in signs):
            raise ValueError(f"signs must be +1 or -1, got {signs}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "signs", signs)

    @classmethod
    def from_vector(cls, z_star, tol: float = 0.0) -> "SupportSet":
        z_star = np.asarray(z_star, dtype=float)
        idx = np.flatnonzero(np.abs(z_star) > tol)
        return cls(tuple(idx + 1), tuple(int(s) for s in np.sign(z_star[idx])))

    def validate(self, n: int) -> None:
        if self.tau[0] < 1 or self.tau[-1] > n - 1:
            raise ValueError(f"support {self.tau} outside 1..{n - 1}")


def _complement(n: int, tau) -> np.ndarray:
    mask = np.ones(n - 1, dtype=bool)
    mask[np.asarray(tau) - 1] = False
    return np.flatnonzero(mask) + 1


def _tau_gram(n: int, tau) -> np.ndarray:
    g = gram_matrix(n, tau)
    if np.linalg.cond(g) > 1e14:
        raise np.linalg.LinAlgError("A_tau^T A_tau is numerically singular")
    return g


def build_B(n: int, tau) -> np.ndarray:
    """B = A_{tau^c}^T A_tau (A_tau^T A_tau)^{-1}, one row per index outside tau.

    Each row has at most two nonzeros, they sit at consecutive support
    positions (the support indices bracketing the row's index), lie in
    [0, 1) and sum to 1 when there are two.
    """
    tau = np.asarray(tau, dtype=int)
    if tau.size == 0:
        raise ValueError("support must be nonempty")
    if tau.min() < 1 or tau.max() > n - 1 or np.any(np.diff(tau) <= 0):
        raise ValueError(f"invalid support {tau.tolist()} for n={n}")
    comp = _complement(n, tau)
    if comp.size == 0:
        raise ValueError("support covers every index; its complement is empty")
    p_c = (n - comp).astype(float)
    p_t = (n - tau).astype(float)
    cross = np.minimum.outer(p_c, p_t) - np.outer(p_c, p_t) / n
    return linalg.solve(_tau_gram(n, tau), cross.T, assume_a="pos").T


def irrepresentable_lhs(B, signs, weights=None) -> float:
    """||B (signs * weights)||_inf; unit weights give the l1 condition."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    signs = np.asarray(signs, dtype=float)
    w = np.ones_like(signs) if weights is None else np.asarray(weights, dtype=float)
    if signs.shape != (B.shape[1],) or w.shape != signs.shape:
        raise ValueError(
            f"B has {B.shape[1]} columns but got {signs.size} signs and {w.size} weights"
        )
    # exact zeros are allowed: exp(-|z|/sigma) underflows for huge jumps
    if np.any(w < 0) or np.any(w > 1):
        raise ValueError("weights must lie in [0, 1]")
    if B.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(B @ (signs * w))))


def penalty_weights(penalty: PenaltySpec, z_tau, sigma: float) -> np.ndarray:
    """f'(|z_tau| / sigma); all ones for the l1 limit."""
    return np.asarray(penalties.derivative(penalty, np.abs(np.asarray(z_tau, float)) / sigma))


def s_tilde_min(n: int, tau) -> float:
    """Smallest eigenvalue of A_tau^T A_tau (at least s_min(n) by interlacing)."""
    tau = np.asarray(tau, dtype=int)
    return float(linalg.eigvalsh(_tau_gram(n, tau), subset_by_index=[0, 0])[0])


@dataclass(frozen=True)
class Lemma2Result:
    cond1: bool
    cond2: bool
    cond1_lhs: float
    cond2_slack: float

    @property
    def cond1_on_boundary(self) -> bool:
        return abs(self.cond1_lhs - 1.0) <= BOUNDARY_TOL


def lemma2_conditions(
    n: int,
    tau,
    z_star,
    z_hat,
    w_tilde,
    lam: float,
    sigma: float,
    penalty: PenaltySpec,
) -> Lemma2Result:
    """Deterministic sufficient conditions for no false and sign-exact change points.

    ``z_star`` and ``z_hat`` are full length-(n-1) vectors, ``w_tilde`` is the
    centered noise (length n).  The subgradient on the support is the one at
    ``z_hat`` with the true signs.

    cond1 (no false change points)::

        ||A_c^T (A_t G^{-1} (s * f'(|z_hat_t|/sigma)) + P w_tilde / (lam n))||_inf <= 1

    cond2 (signs recovered), elementwise::

        |G^{-1} (A_t^T w_tilde - lam n s * f'(|z_hat_t|/sigma))| < |z_star_t|

    with G = A_t^T A_t and P the projector onto the complement of range(A_t).
    Equality in cond1 is accepted up to 1e-10 and flagged by
    ``cond1_on_boundary``.
    """
    tau = np.asarray(tau, dtype=int)
    z_star = np.asarray(z_star, dtype=float)
    z_hat = np.asarray(z_hat, dtype=float)
    w_tilde = np.asarray(w_tilde, dtype=float)
    if tau.size == 0:
        raise ValueError("support must be nonempty")
    if z_star.size != n - 1 or z_hat.size != n - 1 or w_tilde.size != n:
        raise ValueError("z_star and z_hat need length n - 1, w_tilde length n")

    model = DiffModel(n)
    a_t = model.dense(tau)
    comp = _complement(n, tau)
    a_c = model.dense(comp)
    g = _tau_gram(n, tau)
    zs_t = z_star[tau - 1]
    grad = np.sign(zs_t) * penalty_weights(penalty, z_hat[tau - 1], sigma)

    fit_part = a_t @ linalg.solve(g, grad, assume_a="pos")
    proj_w = w_tilde - a_t @ linalg.solve(g, a_t.T @ w_tilde, assume_a="pos")
    inner = fit_part + proj_w / (lam * n)
    lhs = float(np.max(np.abs(a_c.T @ inner))) if comp.size else 0.0

    bias = linalg.solve(g, a_t.T @ w_tilde - lam * n * grad, assume_a="pos")
    slack = float(np.min(np.abs(zs_t) - np.abs(bias)))
    return Lemma2Result(lhs <= 1.0 + BOUNDARY_TOL, slack > 0, lhs, slack)


@dataclass(frozen=True)
class GuaranteeReport:
    irrepresentable_lhs: float
    gamma: float
    lambda0: float
    zmin_threshold: float
    p1: float
    p2: float
    alpha: float
    s_tilde_min: float
    lambda_above_lambda0: bool
    lemma2_cond1: bool | None = None
    lemma2_cond2: bool | None = None

    @property
    def p1_clamped(self) -> float:
        return max(0.0, self.p1)

    @property
    def p2_clamped(self) -> float:
        return max(0.0, self.p2)

    @property
    def probability_bound(self) -> float:
        """Lower bound P1 * P2 on the probability of sign recovery, clamped at 0."""
        return self.p1_clamped * self.p2_clamped

    def as_dict(self) -> dict:
        out = asdict(self)
        out.update(
            p1_clamped=self.p1_clamped,
            p2_clamped=self.p2_clamped,
            probability_bound=self.probability_bound,
        )
        return out


def lambda0(n: int, sigma_w: float, gamma: float) -> float:
    """Smallest admissible lambda: sqrt(ln(n)/n * sigma_w^2) / (gamma sqrt(2))."""
    return math.sqrt(math.log(n) / n * sigma_w**2) / (gamma * math.sqrt(2.0))


def theorem2_report(
    n: int,
    support: SupportSet,
    z_hat,
    sigma_w: float,
    lam: float,
    sigma: float,
    penalty: PenaltySpec,
    gamma: float | str = "auto",
    lemma2: Lemma2Result | None = None,
) -> GuaranteeReport:
    """Evaluate the probabilistic recovery bound at a given estimate.

    ``z_hat`` is the full estimate (length n - 1); only its entries on the
    support are used.  ``gamma="auto"`` takes 1 minus the irrepresentable
    left-hand side, which must then be positive.  A lambda at or below
    lambda0 is reported (P1 <= -1 there), not rejected.
    """
    support.validate(n)
    if not (sigma_w > 0 and lam > 0 and sigma > 0):
        raise ValueError("sigma_w, lambda and sigma must be positive")
    tau = np.asarray(support.tau, dtype=int)
    signs = np.asarray(support.signs, dtype=float)
    z_hat = np.asarray(z_hat, dtype=float)
    if z_hat.size != n - 1:
        raise ValueError(f"z_hat has length {z_hat.size}, expected {n - 1}")

    weights = penalty_weights(penalty, z_hat[tau - 1], sigma)
    if tau.size < n - 1:
        lhs = irrepresentable_lhs(build_B(n, tau), signs, weights)
    else:
        lhs = 0.0
    if gamma == "auto":
        gamma = 1.0 - lhs
        if not gamma > 0:
            raise ValueError(
                f"irrepresentable left side is {lhs:.6g}; no positive gamma exists"
            )
    gamma = float(gamma)
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")

    g = _tau_gram(n, tau)
    ginv_norm = float(np.max(np.sum(np.abs(linalg.inv(g)), axis=1)))
    st_min = s_tilde_min(n, tau)
    alpha = float(np.max(weights))
    lam0 = lambda0(n, sigma_w, gamma)
    zmin = lam * (2.0 * sigma_w * math.sqrt(n / st_min) + n * ginv_norm * alpha)
    p1 = 1.0 - 2.0 * math.exp(-2.0 * gamma**2 / sigma_w**2 * (lam**2 - lam0**2) * n)
    p2 = 1.0 - 2.0 * math.exp(math.log(tau.size) - 2.0 * lam**2 * n)
    return GuaranteeReport(
        irrepresentable_lhs=lhs,
        gamma=gamma,
        lambda0=lam0,
        zmin_threshold=zmin,
        p1=p1,
        p2=p2,
        alpha=alpha,
        s_tilde_min=st_min,
        lambda_above_lambda0=lam > lam0,
        lemma2_cond1=None if lemma2 is None else lemma2.cond1,
        lemma2_cond2=None if lemma2 is None else lemma2.cond2,
    )

