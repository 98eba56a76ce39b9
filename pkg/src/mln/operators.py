"""Mixed local/nonlocal operator, its bilinear form and the coercivity constants.

The quadratic part of the energy is

    kin * B_alpha(u, u) + mass * ||u||_2^2,
    B_alpha(u, v) = <grad u, grad v> + alpha <(-Delta)^{s/2} u, (-Delta)^{s/2} v>,

where ``kin = hbar^2 / 2m`` and ``mass`` is ``omega`` (or ``V_0`` for the
potential variant).  With ``alpha^- = max(-alpha, 0)`` the interpolation bound
turns the negative fractional part into an ``eps``-dependent loss on the
gradient and on the mass term; both stay positive exactly when ``eps`` lies in
an open interval, which is nonempty iff ``alpha^- < alpha_0(s, mass / kin)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .spectral import Field, fft_unitary, h1_norm_sq, l2_norm_sq

__all__ = [
    "ModelParams",
    "ThresholdError",
    "EpsInterval",
    "CoercivityConstants",
    "alpha_threshold",
    "admissible_eps_interval",
    "constants_at",
    "coercivity_constants",
    "bilinear_alpha",
    "alpha_symbol",
    "CoercivityReport",
    "coercivity_check",
]


class ThresholdError(ValueError):
    """alpha violates alpha > -alpha_0(s, mass/kin); no coercivity constants exist."""


@dataclass(frozen=True)
class ModelParams:
    kin: float = 1.0
    omega: float = 1.0
    alpha: float = 0.0
    s: float = 0.5
    p: float = 4.0

    def __post_init__(self):
        if not self.kin > 0:
            raise ValueError(f"kin must be positive, got {self.kin}")
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if not 4.0 <= self.p < 6.0:
            raise ValueError(f"p must lie in [4, 6), got {self.p}")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")

    @property
    def alpha_minus(self) -> float:
        return max(-self.alpha, 0.0)

    @property
    def alpha_plus(self) -> float:
        return max(self.alpha, 0.0)

    @property
    def threshold_param(self) -> float:
        """``2 m omega / hbar^2 = omega / kin``."""
        return self.omega / self.kin

    def to_dict(self) -> dict:
        return asdict(self)


def alpha_threshold(s: float, t: float) -> float:
    """``alpha_0(s, t) = s^{-s} (1-s)^{s-1} t^{1-s}``."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    return s ** (-s) * (1.0 - s) ** (s - 1.0) * t ** (1.0 - s)


@dataclass(frozen=True)
class EpsInterval:
    """Open interval ``(lo, hi)``; ``empty`` marks the EMPTY value."""

    lo: float
    hi: float
    empty: bool = False

    def __contains__(self, eps: float) -> bool:
        return (not self.empty) and self.lo < eps < self.hi

    def to_list(self):
        return None if self.empty else [self.lo, self.hi]


EMPTY = EpsInterval(math.nan, math.nan, empty=True)


def admissible_eps_interval(params: ModelParams, mass: float | None = None) -> EpsInterval:
    """Values of ``eps`` keeping both gradient and mass coefficients positive.

    ``mass`` defaults to ``omega``; pass ``V_0`` for the potential variant.
    """
    mass = params.omega if mass is None else mass
    am = params.alpha_minus
    if am == 0.0:
        return EpsInterval(0.0, math.inf)
    if not mass > 0:
        return EMPTY
    s = params.s
    t = mass / params.kin
    if not am < alpha_threshold(s, t):
        return EMPTY
    expo = (1.0 - s) / s
    lo = ((1.0 - s) * am / t) ** expo
    hi = 1.0 / (am * s)
    if not lo < hi:
        # rounding in alpha_0 can admit alpha = -alpha_0 exactly
        return EMPTY
    return EpsInterval(lo, hi)


def constants_at(params: ModelParams, eps: float, mass: float | None = None) -> tuple[float, float]:
    """``(c1, c2)`` evaluated at an arbitrary ``eps > 0``."""
    mass = params.omega if mass is None else mass
    am, s, kin = params.alpha_minus, params.s, params.kin
    c1 = kin * (1.0 - am * s * eps)
    c2 = mass - am * kin * (1.0 - s) * eps ** (-s / (1.0 - s))
    return c1, c2


@dataclass(frozen=True)
class CoercivityConstants:
    eps0: float
    c1: float
    c2: float
    interval: EpsInterval

    @property
    def c_min(self) -> float:
        return min(self.c1, self.c2)

    def to_dict(self) -> dict:
        return {"eps0": self.eps0, "c1": self.c1, "c2": self.c2, "interval": self.interval.to_list()}


def coercivity_constants(params: ModelParams, mass: float | None = None) -> CoercivityConstants:
    """Pick ``eps0`` (geometric mean of the interval, or 1) and evaluate ``c1, c2``."""
    mass = params.omega if mass is None else mass
    iv = admissible_eps_interval(params, mass)
    if iv.empty:
        t = mass / params.kin
        raise ThresholdError(
            f"alpha={params.alpha} violates the threshold condition alpha > -alpha_0(s, 2m*mass/hbar^2) = "
            f"{-alpha_threshold(params.s, t) if t > 0 else math.inf:.12g} (mass = {mass:g})"
        )
    eps0 = 1.0 if params.alpha_minus == 0.0 else math.sqrt(iv.lo * iv.hi)
    c1, c2 = constants_at(params, eps0, mass)
    return CoercivityConstants(eps0, c1, c2, iv)


def alpha_symbol(grid, params: ModelParams) -> np.ndarray:
    """Mode weights ``|k|^2 + alpha |k|^{2s}`` of ``B_alpha``."""
    return grid.k_sq + params.alpha * grid.frac_symbol(params.s)


def bilinear_alpha(u: Field, v: Field, params: ModelParams) -> float:
    u._same_grid(v)
    sym = alpha_symbol(u.grid, params)
    cu = fft_unitary(u.grid, u.values)
    cv = cu if v is u else fft_unitary(v.grid, v.values)
    return float(np.sum(sym * (cu * np.conj(cv)).real))


@dataclass(frozen=True)
class CoercivityReport:
    lhs: float
    rhs: float
    holds: bool


def coercivity_check(u: Field, params: ModelParams, constants: CoercivityConstants | None = None) -> CoercivityReport:
    """``(kin/2) B_alpha(u,u) + (omega/2)||u||^2 >= (1/2) min(c1,c2) ||u||_{H^1}^2``."""
    c = constants or coercivity_constants(params)
    lhs = 0.5 * params.kin * bilinear_alpha(u, u, params) + 0.5 * params.omega * l2_norm_sq(u)
    rhs = 0.5 * c.c_min * h1_norm_sq(u)
    return CoercivityReport(lhs, rhs, lhs >= rhs - 1e-12 * abs(rhs))
