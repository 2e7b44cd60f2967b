"""Concave sparsity penalties used as f(|x| / sigma) on first differences.

Every family is normalized so that f(0) = 0 and f'(0) = 1.  The MM loop only
needs the derivative (it becomes the reweighting factor) and the curvature
bound ``mu`` (it enters the convexity certificate).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

# Largest value of t / (1 + t^2)^2 is reached at t = 1/sqrt(3).
_ATAN_MU = math.pi * 9.0 / (16.0 * math.sqrt(3.0))


class PenaltyKind(str, enum.Enum):
    EXPONENTIAL = "exp"
    LOGARITHMIC = "log"
    ARCTANGENT = "atan"
    L1_LIMIT = "l1"


_DEFAULT_MU = {
    PenaltyKind.EXPONENTIAL: 1.0,
    PenaltyKind.LOGARITHMIC: 1.0,
    PenaltyKind.ARCTANGENT: _ATAN_MU,
    # no curvature at all; kept positive so the certificate formula still applies
    PenaltyKind.L1_LIMIT: 1.0,
}


@dataclass(frozen=True)
class PenaltySpec:
    """A penalty family together with its curvature bound.

    Parameters
    ----------
    kind : PenaltyKind
        Which family.
    mu : float
        Constant with ``f''(x) >= -mu`` on ``x >= 0``.  Defaults to the
        tight bound of the family.
    """

    kind: PenaltyKind
    mu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PenaltyKind(self.kind))
        if self.mu == 0.0:
            object.__setattr__(self, "mu", _DEFAULT_MU[self.kind])
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")

    @classmethod
    def from_name(cls, name: str) -> "PenaltySpec":
        try:
            return cls(PenaltyKind(name))
        except ValueError:
            choices = ", ".join(k.value for k in PenaltyKind)
            raise ValueError(f"unknown penalty {name!r} (choose from {choices})") from None

    @property
    def is_l1(self) -> bool:
        return self.kind is PenaltyKind.L1_LIMIT


EXPONENTIAL = PenaltySpec(PenaltyKind.EXPONENTIAL)
LOGARITHMIC = PenaltySpec(PenaltyKind.LOGARITHMIC)
ARCTANGENT = PenaltySpec(PenaltyKind.ARCTANGENT)
L1_LIMIT = PenaltySpec(PenaltyKind.L1_LIMIT)


def _check_domain(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("penalty argument must be nonnegative")
    return x


def _scalar_or_array(out, like):
    return float(out) if np.ndim(like) == 0 else out


def value(spec: PenaltySpec, x):
    """Evaluate f(x) for ``x >= 0`` (scalar or array)."""
    if spec.is_l1:
        raise ValueError("the l1 limit has no bounded penalty value; use |x| directly")
    xa = _check_domain(x)
    if spec.kind is PenaltyKind.EXPONENTIAL:
        out = -np.expm1(-xa)
    elif spec.kind is PenaltyKind.LOGARITHMIC:
        out = np.log1p(xa)
    else:
        out = (2.0 / np.pi) * np.arctan(0.5 * np.pi * xa)
    return _scalar_or_array(out, x)


def derivative(spec: PenaltySpec, x):
    """Evaluate f'(x) for ``x >= 0``; this is the MM reweighting factor."""
    xa = _check_domain(x)
    if spec.kind is PenaltyKind.EXPONENTIAL:
        out = np.exp(-xa)
    elif spec.kind is PenaltyKind.LOGARITHMIC:
        out = 1.0 / (1.0 + xa)
    elif spec.kind is PenaltyKind.ARCTANGENT:
        out = 1.0 / (1.0 + (0.5 * np.pi * xa) ** 2)
    else:
        out = np.ones_like(xa)
    return _scalar_or_array(out, x)


def second_derivative(spec: PenaltySpec, x):
    xa = _check_domain(x)
    if spec.kind is PenaltyKind.EXPONENTIAL:
        out = -np.exp(-xa)
    elif spec.kind is PenaltyKind.LOGARITHMIC:
        out = -1.0 / (1.0 + xa) ** 2
    elif spec.kind is PenaltyKind.ARCTANGENT:
        t = 0.5 * np.pi * xa
        out = -np.pi * t / (1.0 + t * t) ** 2
    else:
        out = np.zeros_like(xa)
    return _scalar_or_array(out, x)


def scaled_value(spec: PenaltySpec, x, sigma: float):
    """f(|x| / sigma).

    Tends to the indicator of ``x != 0`` as sigma -> 0 and, multiplied by
    sigma, to ``|x|`` as sigma -> infinity.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return value(spec, np.abs(x) / sigma)
