"""Monte-Carlo reproduction of the stair-case experiments at desk scale.

The test signal has three levels a, 2a, 3a with same-direction jumps after
samples 50 and 100 (n = 200), which is exactly the configuration where the
l1 filter keeps inserting intermediate steps.  Each trial draws its noise
from a generator keyed by (seed, amplitude index, trial index), so sweeps
are reproducible regardless of how trials are scheduled.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .mm_solver import PwcFit, SolverConfig, l1_fit, solve_mm
from .penalties import PenaltySpec

METHODS = ("l1", "exp", "log", "atan")
# log and atan run inside the same MM loop as the proposed penalty; they stand
# in for the published nonconvex comparators, not reproduce their code
METHOD_LABELS = {
    "l1": "l1 mean filter",
    "exp": "proposed (exp penalty)",
    "log": "log penalty, our MM loop",
    "atan": "atan penalty, our MM loop",
}


@dataclass(frozen=True)
class StairCaseSpec:
    amplitude: float
    n: int = 200
    breakpoints: tuple[int, int] = (50, 100)

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        b1, b2 = self.breakpoints
        if not 1 <= b1 < b2 <= self.n - 1:
            raise ValueError(f"breakpoints {self.breakpoints} invalid for n={self.n}")

    @classmethod
    def scaled(cls, amplitude: float, n: int) -> "StairCaseSpec":
        """Same shape at another length: jumps after n/4 and n/2."""
        return cls(amplitude, n, (n // 4, n // 2))

    @property
    def support(self) -> list[int]:
        return list(self.breakpoints)


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings shared by every method; lambda and sigma follow from them."""

    sigma_w: float = 1.0
    epsilon: float = 1e-4
    max_iter: int = 100
    tol_cp: float = 1e-8
    lam: float | None = None

    def solver_config(self, method: str, n: int) -> SolverConfig:
        return SolverConfig.for_noise(
            n,
            self.sigma_w,
            penalty=PenaltySpec.from_name(method),
            lam=self.lam,
            epsilon=self.epsilon,
            max_iter=self.max_iter,
        )


def generate_staircase(spec: StairCaseSpec) -> np.ndarray:
    b1, b2 = spec.breakpoints
    x = np.empty(spec.n)
    x[:b1] = spec.amplitude
    x[b1:b2] = 2 * spec.amplitude
    x[b2:] = 3 * spec.amplitude
    return x


def trial_rng(seed: int, amplitude_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, amplitude_index, trial]))


def add_noise(x_star, sigma_w: float, seed) -> np.ndarray:
    """x_star plus i.i.d. N(0, sigma_w^2) noise.

    ``seed`` is an int, a SeedSequence or a Generator.
    """
    if sigma_w < 0:
        raise ValueError(f"sigma_w must be nonnegative, got {sigma_w}")
    x_star = np.asarray(x_star, dtype=float)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    noise = rng.standard_normal(x_star.size)
    return x_star + sigma_w * noise if sigma_w > 0 else x_star.copy()


def fit_method(y, method: str, config: ExperimentConfig) -> PwcFit:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r} (choose from {', '.join(METHODS)})")
    n = len(y)
    solver = config.solver_config(method, n)
    if method == "l1":
        return l1_fit(y, solver.lam, tol_cp=config.tol_cp)
    return solve_mm(y, solver, tol_cp=config.tol_cp)


def _check_methods(methods):
    methods = tuple(methods)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r} (choose from {', '.join(METHODS)})")
    if not methods:
        raise ValueError("no methods given")
    return methods


@dataclass
class McResult:
    amplitudes: np.ndarray
    methods: tuple[str, ...]
    success: dict[str, np.ndarray]
    runtime: dict[str, np.ndarray]
    trials: int
    seed: int
    n: int
    config: ExperimentConfig = field(default_factory=ExperimentConfig)

    def rate(self, method: str, amplitude: float) -> float:
        idx = int(np.argmin(np.abs(self.amplitudes - amplitude)))
        return float(self.success[method][idx])


def _sweep_point(args):
    idx, a, trials, methods, config, seed, n = args
    spec = StairCaseSpec.scaled(a, n) if n != 200 else StairCaseSpec(a)
    x_star = generate_staircase(spec)
    target = spec.support
    hits = dict.fromkeys(methods, 0)
    elapsed = dict.fromkeys(methods, 0.0)
    for t in range(trials):
        y = add_noise(x_star, config.sigma_w, trial_rng(seed, idx, t))
        for m in methods:
            start = time.perf_counter()
            fit = fit_method(y, m, config)
            elapsed[m] += time.perf_counter() - start
            hits[m] += fit.change_points == target
    return idx, hits, elapsed


def run_sweep(
    amplitudes,
    trials: int,
    methods=METHODS,
    config: ExperimentConfig | None = None,
    seed: int = 0,
    n: int = 200,
    workers: int = 1,
) -> McResult:
    """Exact-support success rate of each method over a grid of jump amplitudes.

    A trial succeeds only when the detected change-point set equals the true
    one; any missing or extra point is a failure.
    """
    config = config or ExperimentConfig()
    amplitudes = np.asarray(amplitudes, dtype=float)
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if amplitudes.size == 0 or np.any(amplitudes <= 0) or np.any(np.diff(amplitudes) < 0):
        raise ValueError("amplitudes must be positive and ascending")
    methods = _check_methods(methods)

    jobs = [(i, float(a), trials, methods, config, seed, n) for i, a in enumerate(amplitudes)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]

    success = {m: np.zeros(amplitudes.size) for m in methods}
    runtime = {m: np.zeros(amplitudes.size) for m in methods}
    for idx, hits, elapsed in results:
        for m in methods:
            success[m][idx] = hits[m] / trials
            runtime[m][idx] = elapsed[m] / trials
    return McResult(amplitudes, methods, success, runtime, trials, seed, n, config)


@dataclass
class AverageResult:
    x_star: np.ndarray
    mean_y: np.ndarray
    means: dict[str, np.ndarray]
    trials: int
    seed: int
    amplitude: float
    config: ExperimentConfig = field(default_factory=ExperimentConfig)

    def flat_deviation(self, method: str, margin: int = 5) -> float:
        """Largest |mean estimate - x_star| away from the jumps.

        Samples within ``margin`` of either breakpoint or the ends are skipped.
        """
        idx = flat_interior(self.x_star.size, margin)
        return float(np.max(np.abs(self.means[method][idx] - self.x_star[idx])))


def flat_interior(n: int, margin: int = 5, breakpoints=None) -> np.ndarray:
    b1, b2 = breakpoints or ((50, 100) if n == 200 else (n // 4, n // 2))
    pieces = [(margin - 1, b1 - margin), (b1 + margin - 1, b2 - margin), (b2 + margin - 1, n - margin)]
    return np.concatenate([np.arange(lo, hi) for lo, hi in pieces])


def run_average(
    amplitude: float,
    trials: int,
    methods=METHODS,
    config: ExperimentConfig | None = None,
    seed: int = 0,
    n: int = 200,
) -> AverageResult:
    """Componentwise mean of each method's estimate over noisy realizations."""
    config = config or ExperimentConfig()
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    methods = _check_methods(methods)
    spec = StairCaseSpec.scaled(amplitude, n) if n != 200 else StairCaseSpec(amplitude)
    x_star = generate_staircase(spec)
    sums = {m: np.zeros(n) for m in methods}
    sum_y = np.zeros(n)
    for t in range(trials):
        y = add_noise(x_star, config.sigma_w, trial_rng(seed, 0, t))
        sum_y += y
        for m in methods:
            sums[m] += fit_method(y, m, config).x_hat
    means = {m: s / trials for m, s in sums.items()}
    return AverageResult(x_star, sum_y / trials, means, trials, seed, float(amplitude), config)
