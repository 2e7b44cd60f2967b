"""Majorization-minimization for nonconvex-penalized mean filtering.

Minimizes

    (1/2n) ||y - x||^2 + lambda_sigma * sum_i f(|x_{i+1} - x_i| / sigma)

with lambda_sigma = lambda * sigma.  Each step replaces the concave penalty
by its tangent at the current iterate, which leaves a weighted TV problem
with edge coefficients lambda * f'(|dx_i| / sigma), solved exactly by the
taut string.  Starting from x = 0 the first step is the plain l1 filter.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import penalties, taut_string
from .difference_model import ConvexityCheck, DiffModel, check_convexity
from .penalties import PenaltySpec


class ConvexityError(ValueError):
    """The configuration is outside the strict-convexity certificate."""


def default_lambda(n: int, sigma_w: float = 1.0) -> float:
    """lambda = 4 * sqrt(sigma_w^2 / n)."""
    return 4.0 * math.sqrt(sigma_w**2 / n)


def default_sigma(lam: float, n: int, mu: float = 1.0) -> float:
    """sigma = 4 * lambda * n, scaled by mu for penalties with mu > 1."""
    return 4.0 * lam * n * max(1.0, mu)


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    sigma: float
    penalty: PenaltySpec = penalties.EXPONENTIAL
    epsilon: float = 1e-4
    max_iter: int = 100
    force: bool = False

    def __post_init__(self):
        if isinstance(self.penalty, str):
            object.__setattr__(self, "penalty", PenaltySpec.from_name(self.penalty))
        for name in ("lam", "sigma", "epsilon"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be positive and finite, got {val}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")

    @property
    def lambda_sigma(self) -> float:
        return self.lam * self.sigma

    @classmethod
    def for_noise(cls, n: int, sigma_w: float = 1.0, penalty="exp", **kw) -> "SolverConfig":
        """Configuration with the default lambda and sigma for noise level sigma_w."""
        spec = PenaltySpec.from_name(penalty) if isinstance(penalty, str) else penalty
        lam = kw.pop("lam", None) or default_lambda(n, sigma_w)
        sigma = kw.pop("sigma", None) or default_sigma(lam, n, spec.mu)
        return cls(lam=lam, sigma=sigma, penalty=spec, **kw)

    def convexity(self, n: int) -> ConvexityCheck:
        return check_convexity(n, self.lambda_sigma, self.sigma, self.penalty.mu)


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    rel_change: float
    kkt: float


@dataclass
class PwcFit:
    x_hat: np.ndarray
    z_hat: np.ndarray
    change_points: list[int]
    iterations: int
    converged: bool
    trace: list[IterationRecord] = field(default_factory=list)
    convexity: ConvexityCheck | None = None
    forced: bool = False
    elapsed: float = 0.0

    @property
    def objective(self) -> float:
        return self.trace[-1].objective if self.trace else float("nan")

    @property
    def kkt(self) -> float:
        return self.trace[-1].kkt if self.trace else float("nan")


def edge_coefficients(z, config: SolverConfig) -> np.ndarray:
    """lambda * f'(|z| / sigma): the l1 weights of the next surrogate problem."""
    return config.lam * penalties.derivative(config.penalty, np.abs(z) / config.sigma)


def objective(y, x, config: SolverConfig) -> float:
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != x.shape:
        raise ValueError(f"y and x differ in shape: {y.shape} vs {x.shape}")
    n = y.size
    fit = 0.5 / n * float(np.dot(y - x, y - x))
    dz = np.abs(np.diff(x))
    if config.penalty.is_l1:
        return fit + config.lam * float(dz.sum())
    return fit + config.lambda_sigma * float(
        np.sum(penalties.value(config.penalty, dz / config.sigma))
    )


def kkt_residual(y, z_hat, config: SolverConfig) -> float:
    """Distance of the lasso-form gradient to the Clarke subdifferential.

    r = (1/n) A^T (y_tilde - A z_hat) must equal lambda_sigma * u with
    u_i = sign(z_i) f'(|z_i|/sigma) / sigma where z_i != 0 and
    u_i in [-1/sigma, 1/sigma] where z_i == 0.  Returns the largest
    per-coordinate distance of r / lambda_sigma to that set.
    """
    y = np.asarray(y, dtype=float)
    z_hat = np.asarray(z_hat, dtype=float)
    n = y.size
    if z_hat.size != n - 1:
        raise ValueError(f"z_hat has length {z_hat.size}, expected {n - 1}")
    model = DiffModel(n)
    y_tilde = y - y.mean()
    r = model.apply_transpose(y_tilde - model.apply(z_hat)) / n
    if config.penalty.is_l1:
        # subdifferential of lambda * |z|: compare r / lambda with sign(z) or [-1, 1]
        ratio, inv_sigma = r / config.lam, 1.0
    else:
        ratio, inv_sigma = r / config.lambda_sigma, 1.0 / config.sigma
    nz = z_hat != 0
    out = np.empty_like(ratio)
    target = np.sign(z_hat[nz]) * penalties.derivative(
        config.penalty, np.abs(z_hat[nz]) / config.sigma
    )
    out[nz] = np.abs(ratio[nz] - target * inv_sigma)
    out[~nz] = np.maximum(0.0, np.abs(ratio[~nz]) - inv_sigma)
    return float(out.max(initial=0.0))


def detect_change_points(z_hat, tol_cp: float = 1e-8, scale: float = 1.0) -> list[int]:
    """1-based indices i with |z_i| > tol_cp * max(1, scale).

    ``scale`` is normally max|y|, so the threshold follows the signal.
    """
    if not tol_cp > 0:
        raise ValueError(f"tol_cp must be positive, got {tol_cp}")
    z_hat = np.asarray(z_hat, dtype=float)
    thresh = tol_cp * max(1.0, float(scale))
    return [int(i) + 1 for i in np.flatnonzero(np.abs(z_hat) > thresh)]


def solve_mm(y, config: SolverConfig, x_init=None, tol_cp: float = 1e-8) -> PwcFit:
    """Run the reweighted taut-string iteration to a fixed point.

    Raises ``ConvexityError`` if the configuration is outside the convexity
    certificate and ``config.force`` is not set.  Hitting ``max_iter`` is
    reported through ``converged=False``.
    """
    start = time.perf_counter()
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    if not np.all(np.isfinite(y)):
        raise ValueError("observations must be finite")

    cert = None
    if not config.penalty.is_l1:
        cert = config.convexity(n)
        if not cert.certified and not config.force:
            raise ConvexityError(
                f"sigma={config.sigma:g} violates the convexity bound "
                f"sigma^2 > {cert.bound:.6g} (margin {cert.margin:.6g}); pass force to override"
            )

    x = np.zeros(n) if x_init is None else np.array(x_init, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"x_init has shape {x.shape}, expected {y.shape}")

    trace = []
    converged = False
    k = 0
    while k < config.max_iter:
        coef = edge_coefficients(np.diff(x), config)
        x_new = taut_string.solve(y, n * coef)
        norm_prev = float(np.linalg.norm(x))
        step = float(np.linalg.norm(x_new - x))
        d = step / norm_prev if norm_prev > 0 else (0.0 if step == 0 else math.inf)
        x = x_new
        k += 1
        trace.append(IterationRecord(k, objective(y, x, config), d, kkt_residual(y, np.diff(x), config)))
        if d <= config.epsilon or config.penalty.is_l1:
            converged = True
            break

    z = np.diff(x)
    return PwcFit(
        x_hat=x,
        z_hat=z,
        change_points=detect_change_points(z, tol_cp, float(np.max(np.abs(y)))),
        iterations=k,
        converged=converged,
        trace=trace,
        convexity=cert,
        forced=bool(cert is not None and not cert.certified),
        elapsed=time.perf_counter() - start,
    )


def l1_fit(y, lam: float, tol_cp: float = 1e-8) -> PwcFit:
    """The plain l1 mean filter packaged as a fit."""
    return solve_mm(y, SolverConfig(lam=lam, sigma=1.0, penalty=penalties.L1_LIMIT), tol_cp=tol_cp)
