"""Invariant suite behind the ``check`` subcommand: one row per property."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import EnergyModel, eval_J, eval_JV, grad_J, grad_JV
from .operators import (
    ModelParams,
    ThresholdError,
    admissible_eps_interval,
    alpha_threshold,
    bilinear_alpha,
    coercivity_check,
    coercivity_constants,
    constants_at,
)
from .potential import (
    PotentialSpec,
    bilinear_alpha_V,
    eigen_decompose,
    mu_and_lower_bound,
    potential_coercivity_check,
    verify_c0_bound,
    w_norm_sq,
)
from .poisson import radial_symmetry_check, solve_phi, verify_phi_identities
from .scaling import exponent_system
from .spectral import (
    Field,
    Grid3,
    frac_lap_apply,
    from_spectral,
    l2_norm_sq,
    random_band_limited,
    to_spectral,
    young_bound_check,
)

__all__ = ["CheckResult", "run_invariant_suite", "fd_gradient_error", "combination_identity_gap"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "value": self.value, "tol": self.tol}


def _row(name, value, tol, passed=None):
    value = float(value)
    return CheckResult(name, bool(value <= tol) if passed is None else bool(passed), value, tol)


def fd_gradient_error(u: Field, v: Field, params: ModelParams, h: float = 1e-5, V=None) -> float:
    """``|(J(u+hv) - J(u-hv)) / 2h - J'(u)[v]|`` relative to ``||J'(u)||_* ||v||_A``."""
    if V is None:
        Jp, Jm = eval_J(u + h * v, params).total, eval_J(u - h * v, params).total
        g = grad_J(u, params)
        m = EnergyModel(u.grid, params)
    else:
        Jp, Jm = eval_JV(u + h * v, params, V).total, eval_JV(u - h * v, params, V).total
        g = grad_JV(u, params, V)
        m = EnergyModel(u.grid, params, V.sample(u.grid).values, V.v0)
    pair = m.pairing(g.raw.values, v.values)
    fd = (Jp - Jm) / (2.0 * h)
    scale = g.dual_norm * math.sqrt(m.inner_A(v.values, v.values))
    return abs(fd - pair) / max(scale, abs(pair), 1e-300)


def combination_identity_gap(u: Field, params: ModelParams) -> float:
    """Relative gap in ``p J(u) - J'(u)[u] = (p/2-1)(kin B + omega ||u||^2) + (p/4-1) int Phi u^2``."""
    m = EnergyModel(u.grid, params)
    br = m.parts(u.values)[0]
    raw = m.residual(u.values)
    p = params.p
    lhs = p * br.total - m.pairing(raw, u.values)
    quad = params.kin * bilinear_alpha(u, u, params) + params.omega * l2_norm_sq(u)
    rhs = (0.5 * p - 1.0) * quad + (0.25 * p - 1.0) * 4.0 * br.coupling
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


def run_invariant_suite(
    grid: Grid3,
    params: ModelParams,
    samples: int = 200,
    seed: int = 0,
    potential: PotentialSpec | None = None,
) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    rows: list[CheckResult] = []
    fields = [random_band_limited(grid, rng) for _ in range(samples)]

    # spectral core
    gap = max(abs(float(np.sum(np.abs(to_spectral(f).coeffs) ** 2)) - l2_norm_sq(f)) / l2_norm_sq(f) for f in fields[:20])
    rows.append(_row("plancherel", gap, 1e-12))
    rt = max(float(np.max(np.abs(from_spectral(to_spectral(f)).values - f.values)) / np.max(np.abs(f.values))) for f in fields[:20])
    rows.append(_row("fft_round_trip", rt, 1e-13))
    x = grid.coords[0]
    kx = 2.0 * np.pi * 3.0 / grid.box_len
    wave = Field(grid, np.broadcast_to(np.cos(kx * x), grid.shape))
    eig = float(np.max(np.abs(frac_lap_apply(wave, params.s).values - kx ** (2 * params.s) * wave.values)))
    rows.append(_row("plane_wave_multiplier", eig / kx ** (2 * params.s), 1e-13))
    eps = 10.0 ** rng.uniform(-3, 3, size=samples)
    ok = all(young_bound_check(f, params.s, e).holds for f, e in zip(fields, eps))
    rows.append(_row("young_bound", 0.0 if ok else 1.0, 0.0, ok))

    # threshold logic
    a0 = alpha_threshold(0.5, 1.0)
    a4 = alpha_threshold(0.5, 4.0)
    # exact up to rounding of s^{-s} (1-s)^{s-1}
    rows.append(_row("alpha0_values", max(abs(a0 - 2.0), abs(a4 - 4.0)), 2e-15))
    t = params.omega / params.kin
    amax = alpha_threshold(params.s, t)
    worst = math.inf
    for a in np.linspace(-amax, 0.0, 52)[1:-1]:
        c = coercivity_constants(ModelParams(params.kin, params.omega, float(a), params.s, params.p))
        worst = min(worst, c.c1, c.c2)
    rows.append(_row("constants_positive_in_range", -worst, 0.0, worst > 0))
    edge = admissible_eps_interval(ModelParams(params.kin, params.omega, -amax, params.s, params.p))
    inside = admissible_eps_interval(ModelParams(params.kin, params.omega, -amax * (1 - 1e-12), params.s, params.p))
    rows.append(_row("interval_empty_at_boundary", 0.0, 0.0, edge.empty and not inside.empty))

    # coercivity
    try:
        cc = coercivity_constants(params)
        ok = all(coercivity_check(f, params, cc).holds for f in fields)
        rows.append(_row("coercivity", 0.0 if ok else 1.0, 0.0, ok))
        iv = cc.interval
        if params.alpha_minus > 0:
            pts = np.geomspace(iv.lo, iv.hi, 102)[1:-1]
            pos = all(min(constants_at(params, e)) > 0 for e in pts)
            rows.append(_row("constants_positive_on_interval", 0.0, 0.0, pos))
    except ThresholdError:
        rows.append(_row("coercivity", 1.0, 0.0, False))

    # poisson
    gaps = [verify_phi_identities(f).rel_gap for f in fields[:100]]
    rows.append(_row("phi_energy_identity", max(gaps), 1e-10))
    f = fields[0]
    phi1 = solve_phi(f).phi.values
    hom = max(float(np.max(np.abs(solve_phi(c * f).phi.values - c * c * phi1))) / (c * c * np.max(np.abs(phi1))) for c in (-2.0, 0.5, 3.0))
    rows.append(_row("phi_homogeneity", hom, 1e-12))
    gauss = Field(grid, np.exp(-0.5 * grid.radius**2))
    rows.append(_row("phi_radial_symmetry", radial_symmetry_check(gauss).phi_defect, 1e-12))
    cmin = min(float(np.sum(solve_phi(f).phi.values * f.values**2)) for f in fields[:20])
    rows.append(_row("coupling_nonnegative", -cmin, 0.0, cmin >= -1e-14))

    # energy
    fd = max(fd_gradient_error(fields[2 * i], fields[2 * i + 1], params) for i in range(5))
    rows.append(_row("gradient_finite_difference", fd, 1e-6))
    rows.append(_row("combination_identity", max(combination_identity_gap(f, params) for f in fields[:20]), 1e-10))
    even = max(abs(eval_J(-f, params).total - eval_J(f, params).total) for f in fields[:10])
    rows.append(_row("J_even", even, 0.0))
    rows.append(_row("J_zero", abs(eval_J(grid.zeros(), params).total), 0.0))

    # potential variant
    V = potential or PotentialSpec("harmonic", 1.0, 1.0)
    mb = mu_and_lower_bound(params, V, grid, n_samples=min(samples, 1000), seed=seed)
    rows.append(_row("shifted_W_bound", -mb.worst_margin, 1e-12, mb.verified))
    wc = max(abs(w_norm_sq(f, PotentialSpec("constant", 2.0)) - float(np.sum((1 + grid.k_sq) * np.abs(to_spectral(f).coeffs) ** 2))) for f in fields[:5])
    rows.append(_row("W_norm_constant_V", wc, 1e-12))
    sym = max(abs(bilinear_alpha_V(fields[i], fields[i + 1], params, V) - bilinear_alpha_V(fields[i + 1], fields[i], params, V)) for i in range(5))
    rows.append(_row("B_alpha_V_symmetric", sym, 1e-10))
    if V.v0 > 0:
        try:
            ok = all(potential_coercivity_check(f, params, V).holds for f in fields)
            rows.append(_row("potential_coercivity", 0.0 if ok else 1.0, 0.0, ok))
        except ThresholdError:
            rows.append(_row("potential_coercivity", 1.0, 0.0, False))
    spec = eigen_decompose(params, V, grid, K=6, seed=seed)
    rows.append(_row("eigen_residual", float(np.max(spec.residuals / (np.abs(spec.eigvals) + 1e-2))), 1e-8, spec.converged))
    if spec.k0 is not None:
        margin = verify_c0_bound(spec, params, V, n_samples=min(samples, 200), seed=seed)
        rows.append(_row("c0_bound", -margin, 1e-12, margin >= -1e-12))

    # scaling exponents
    rows.append(_row("exponent_system", 0.0, 0.0, all(exponent_system(1, 2, params.s).values())))
    return rows
