"""Rescaling family ``u_{lambda,beta,gamma}(x) = lambda^gamma u(lambda^beta x)``,
checks of its scaling laws and construction of a negative-energy endpoint.

Rescaling acts on analytic radial generators, which are then sampled, so no
grid interpolation enters the checks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .energy import EnergyModel
from .operators import ModelParams
from .poisson import free_space_coupling_correction, phi_array
from .spectral import Field, Grid3, fft_unitary, grad_norm_sq, h1_norm_sq, hs_seminorm_sq, l2_norm_sq

__all__ = [
    "ScalingTriple",
    "GaussianGenerator",
    "RadialGenerator",
    "BandwidthError",
    "rescale",
    "spectral_tail",
    "check_bandwidth",
    "ScalingReport",
    "verify_scaling_identities",
    "SlopeReport",
    "scaling_slopes",
    "exponent_system",
    "EndpointResult",
    "find_negative_energy_point",
    "write_scan_csv",
]

BANDWIDTH_TOL = 1e-10
# the endpoint only has to be a grid field with J <= 0; refuse once the
# rescaled generator has collapsed onto a few lattice points
ENDPOINT_TAIL_TOL = 0.9


class BandwidthError(ValueError):
    """The rescaled generator is not resolved by the grid."""


@dataclass(frozen=True)
class ScalingTriple:
    lam: float
    beta: float
    gamma: float
    allow_degenerate: bool = False

    def __post_init__(self):
        if not math.isfinite(self.lam) or not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.lam > 1.0 and not self.allow_degenerate:
            raise ValueError(f"lambda must exceed 1, got {self.lam}")

    @property
    def degenerate(self) -> bool:
        return not self.lam > 1.0 or (self.beta == 0.0 and self.gamma == 0.0)


@dataclass(frozen=True)
class GaussianGenerator:
    """``amplitude * exp(-|x|^2 / (2 width^2))``."""

    amplitude: float = 1.0
    width: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")

    def __call__(self, r: np.ndarray) -> np.ndarray:
        return self.amplitude * np.exp(-0.5 * (r / self.width) ** 2)

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "amplitude": self.amplitude, "width": self.width}


@dataclass(frozen=True)
class RadialGenerator:
    """User-provided radial profile ``fn(r)``."""

    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "radial"

    def __call__(self, r: np.ndarray) -> np.ndarray:
        return self.fn(r)

    def to_dict(self) -> dict:
        return {"kind": self.name}


def rescale(gen, t: ScalingTriple, grid: Grid3) -> Field:
    """Sample ``lam^gamma gen(lam^beta |x|)``."""
    vals = t.lam**t.gamma * np.asarray(gen(t.lam**t.beta * grid.radius), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("generator produced non-finite values")
    return Field(grid, np.broadcast_to(vals, grid.shape))


def spectral_tail(grid: Grid3, values: np.ndarray) -> float:
    """Largest coefficient magnitude in the outer band ``max_j |m_j| >= 3n/8``, relative to the peak."""
    c = np.abs(fft_unitary(grid, values))
    peak = float(c.max())
    if peak == 0.0:
        return 0.0
    m = np.abs(np.fft.fftfreq(grid.n) * grid.n)
    outer = m >= 3 * grid.n // 8
    band = outer[:, None, None] | outer[None, :, None] | outer[None, None, :]
    return float(c[band].max() / peak)


def check_bandwidth(u: Field, tol: float = BANDWIDTH_TOL) -> float:
    tail = spectral_tail(u.grid, u.values)
    if tail > tol:
        raise BandwidthError(
            f"spectral tail {tail:.3e} exceeds {tol:.1e} (bandwidth); use a finer grid or smaller lambda"
        )
    return tail


def _quantities(u: Field, s: float) -> dict:
    grid = u.grid
    phi = phi_array(grid, u.values)
    coupling_per = float(grid.cell_volume * np.sum(phi * u.values**2))
    return {
        "l2": l2_norm_sq(u),
        "grad": grad_norm_sq(u),
        "frac": hs_seminorm_sq(u, s),
        "coupling": coupling_per + free_space_coupling_correction(u),
    }


def _exponents(beta: float, gamma: float, s: float) -> dict:
    return {
        "l2": 2 * gamma - 3 * beta,
        "grad": 2 * gamma - beta,
        "frac": 2 * gamma + (2 * s - 3) * beta,
        "coupling": 4 * gamma - 5 * beta,
    }


@dataclass
class ScalingReport:
    triple: ScalingTriple
    s: float
    measured: dict
    expected: dict
    rel_err: dict
    phi_field_defect: float
    tail: float
    tol: float

    @property
    def holds(self) -> bool:
        return all(v <= self.tol for v in self.rel_err.values()) and self.phi_field_defect <= 1e-12

    def to_dict(self) -> dict:
        return {
            "lambda": self.triple.lam,
            "beta": self.triple.beta,
            "gamma": self.triple.gamma,
            "s": self.s,
            "measured": self.measured,
            "expected": self.expected,
            "rel_err": self.rel_err,
            "phi_field_defect": self.phi_field_defect,
            "spectral_tail": self.tail,
            "holds": self.holds,
        }


def phi_field_defect(gen, t: ScalingTriple, grid: Grid3) -> float:
    """Max relative defect of ``Phi_{u_lam}(x) = lam^{2(gamma-beta)} Phi_u(lam^beta x)`` on the grid.

    ``u`` is sampled on the box of edge ``lam^beta L``, whose grid points are
    the images ``lam^beta x`` of the original ones, so both sides are
    available without interpolation.
    """
    big = Grid3(grid.n, grid.box_len * t.lam**t.beta)
    base = np.broadcast_to(np.asarray(gen(big.radius), dtype=float), grid.shape)
    ul = rescale(gen, t, grid).values
    lhs = phi_array(grid, ul)
    rhs = t.lam ** (2 * (t.gamma - t.beta)) * phi_array(big, base)
    scale = max(float(np.max(np.abs(lhs))), 1e-300)
    return float(np.max(np.abs(lhs - rhs)) / scale)


def verify_scaling_identities(
    gen, t: ScalingTriple, s: float, grid: Grid3, tol: float = 1e-3, bandwidth_tol: float = BANDWIDTH_TOL
) -> ScalingReport:
    """Ratios ``Q(u_lam) / Q(u)`` against the continuum powers of ``lam``.

    The coupling is compared after the finite-box correction of
    :func:`~mln.poisson.free_space_coupling_correction`.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    base = rescale(gen, ScalingTriple(1.0, 0.0, 0.0, allow_degenerate=True), grid)
    ul = rescale(gen, t, grid)
    tail = max(check_bandwidth(base, bandwidth_tol), check_bandwidth(ul, bandwidth_tol))
    q0, q1 = _quantities(base, s), _quantities(ul, s)
    expo = _exponents(t.beta, t.gamma, s)
    measured = {k: q1[k] / q0[k] for k in q0}
    expected = {k: t.lam ** expo[k] for k in expo}
    rel = {k: abs(measured[k] - expected[k]) / expected[k] for k in expo}
    return ScalingReport(t, s, measured, expected, rel, phi_field_defect(gen, t, grid), tail, tol)


@dataclass
class SlopeReport:
    lambdas: tuple
    slopes: dict
    expected: dict
    values: dict

    def max_error(self) -> float:
        return max(abs(self.slopes[k] - self.expected[k]) for k in self.slopes)

    def to_dict(self) -> dict:
        return {
            "lambdas": list(self.lambdas),
            "slopes": self.slopes,
            "expected": self.expected,
            "max_error": self.max_error(),
        }


def scaling_slopes(
    gen,
    beta: float,
    gamma: float,
    s: float,
    grid: Grid3,
    lambdas=(2.0, 4.0, 8.0),
    bandwidth_tol: float = BANDWIDTH_TOL,
) -> SlopeReport:
    """Least-squares slopes of ``log Q(u_lam)`` against ``log lam``."""
    values: dict[str, list[float]] = {k: [] for k in ("l2", "grad", "frac", "coupling")}
    for lam in lambdas:
        u = rescale(gen, ScalingTriple(lam, beta, gamma), grid)
        check_bandwidth(u, bandwidth_tol)
        for k, v in _quantities(u, s).items():
            values[k].append(v)
    x = np.log(np.asarray(lambdas, dtype=float))
    slopes = {k: float(np.polyfit(x, np.log(v), 1)[0]) for k, v in values.items()}
    return SlopeReport(tuple(lambdas), slopes, _exponents(beta, gamma, s), values)


def exponent_system(beta, gamma, s) -> dict:
    """The strict inequalities that make the quartic term dominate along the family.

    Exact rational arithmetic; ``s`` may be a ``Fraction`` or a float.
    """
    b, g = Fraction(beta), Fraction(gamma)
    sf = Fraction(s).limit_denominator(10**6) if not isinstance(s, Fraction) else s
    quartic = 4 * g - 3 * b
    rows = {
        "quartic_positive": quartic > 0,
        "beats_l2": quartic > 2 * g - 3 * b,
        "beats_grad": quartic > 2 * g - b,
        "beats_frac": quartic > 2 * g + (2 * sf - 3) * b,
        "beats_coupling": quartic > 4 * g - 5 * b,
    }
    return rows


@dataclass
class EndpointResult:
    e: Field
    param: float
    J: float
    h1_norm_sq: float
    mode: str
    tail: float
    scan: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "param": self.param,
            "J": self.J,
            "h1_norm_sq": self.h1_norm_sq,
            "spectral_tail": self.tail,
        }


def find_negative_energy_point(
    gen,
    params: ModelParams,
    grid: Grid3,
    rho: float = 0.0,
    potential: np.ndarray | None = None,
    v0: float | None = None,
    max_doublings: int = 30,
    tail_tol: float = ENDPOINT_TAIL_TOL,
) -> EndpointResult:
    """First point with ``J <= 0`` and ``||e||_{H^1} > rho`` on a doubling schedule.

    ``p = 4``: the family ``u_{lam,1,2}`` with ``lam = 1, 2, 4, ...``;
    ``p > 4``: the ray ``t gen`` with ``t = 1, 2, 4, ...``.
    """
    model = EnergyModel(grid, params, potential, v0)
    scan = []
    quartic = params.p == 4.0
    param = 1.0
    for _ in range(max_doublings):
        if quartic:
            t = ScalingTriple(param, 1.0, 2.0, allow_degenerate=True)
            u = rescale(gen, t, grid)
        else:
            u = Field(grid, param * rescale(gen, ScalingTriple(1.0, 0.0, 0.0, True), grid).values)
        tail = spectral_tail(grid, u.values)
        J = model.energy(u.values)
        h1 = h1_norm_sq(u)
        scan.append((param, J, h1))
        if tail > tail_tol:
            raise BandwidthError(
                f"bandwidth exhausted at parameter {param:g} (spectral tail {tail:.3f}) before J <= 0; "
                "use a finer grid"
            )
        if J <= 0.0 and math.sqrt(h1) > rho:
            return EndpointResult(u, param, J, h1, "lambda" if quartic else "t", tail, scan)
        param *= 2.0
    raise BandwidthError("no J <= 0 point found on the schedule")


def write_scan_csv(path, rows, header=("lambda_or_t", "J", "H1_norm_sq")) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) for x in r])
