"""Numerical mountain pass, deflation and Palais-Smale diagnostics.

The path phase deforms a discrete path from 0 to an endpoint ``e`` with
``J(e) <= 0`` by moving its highest node along the Sobolev gradient.  Once
the highest node is close to critical, a refinement phase takes over: it
descends along the fibering ray maxima ``t(u) u`` (the ray through ``u``
crosses the Nehari set once), which converges to the mountain-pass level
much faster than moving a single path node.

Further solutions are obtained by a deflated Newton-Krylov iteration on the
Riesz residual, started from sign-changing descents.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import NoConvergence, brentq, minimize, newton_krylov

from .energy import EnergyModel
from .operators import ModelParams, ThresholdError, coercivity_constants
from .poisson import apply_symmetry, cubic_group, phi_array
from .scaling import spectral_tail
from .spectral import Field, Grid3, h1_norm_sq, lp_norm, random_band_limited

__all__ = [
    "SolverConfig",
    "GeometryError",
    "GeometryProbe",
    "probe_sphere_infimum",
    "PathState",
    "SolverReport",
    "mountain_pass_search",
    "refine_on_rays",
    "symmetrize_radial",
    "deflate_and_restart",
    "EXHAUSTED",
    "find_solutions",
    "PSReport",
    "ps_diagnostics",
    "weak_form_residual",
    "restart_check",
    "write_trace_csv",
]


class GeometryError(ValueError):
    """Mountain-pass geometry is not available (e.g. ``J(e) > 0``)."""


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-6
    max_iter: int = 2000
    path_iter: int = 100
    path_switch_tol: float = 1e-2
    path_nodes: int = 21
    reparam_every: int = 10
    armijo_start: float = 1.0
    armijo_shrink: float = 0.5
    armijo_slope: float = 1e-4
    max_step_frac: float = 0.1
    radial: bool = True
    max_solutions: int = 3
    sep: float = 1e-2
    sign_quotient: bool = True
    deflation_power: float = 2.0
    deflation_shift: float = 1.0
    newton_maxiter: int = 60
    n_test_fields: int = 50
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.path_nodes < 3:
            raise ValueError("path_nodes must be at least 3")
        if not 0 < self.armijo_shrink < 1:
            raise ValueError("armijo_shrink must lie in (0, 1)")
        if self.max_iter < 1 or self.path_iter < 0:
            raise ValueError("iteration caps must be positive")
        if not self.sep > 0:
            raise ValueError("sep must be positive")


_GROUP = cubic_group()


def symmetrize_radial(u: Field) -> Field:
    """Average over the 48 cubic symmetries of the grid (an orthogonal projection)."""
    return Field(u.grid, _sym(u.values))


def _sym(a: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(a)
    for g in _GROUP:
        acc += apply_symmetry(a, g)
    return acc / len(_GROUP)


# geometry


@dataclass(frozen=True)
class GeometryProbe:
    rho: float
    delta: float
    samples: int
    certificate: float
    c_p: float
    rho_bound: float
    min_margin: float

    @property
    def passed(self) -> bool:
        return self.delta > 0

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "delta": self.delta,
            "samples": self.samples,
            "certificate": self.certificate,
            "C_p": self.c_p,
            "rho_bound": self.rho_bound,
            "min_margin": self.min_margin,
        }


def _probe_family(grid: Grid3, n_samples: int, seed: int) -> list:
    """Random band-limited fields plus centred Gaussians of widths between ``h`` and ``L/8``.

    Concentrated profiles are where ``||u||_p / ||u||_{H^1}`` peaks; random
    oscillatory fields alone underestimate ``C_p`` badly.
    """
    rng = np.random.default_rng(seed)
    n_gauss = n_samples // 2
    out = [random_band_limited(grid, rng) for _ in range(n_samples - n_gauss)]
    for w in np.geomspace(grid.spacing, grid.box_len / 8.0, n_gauss):
        out.append(Field(grid, np.exp(-0.5 * (grid.radius / w) ** 2)))
    return out


def empirical_cp(grid: Grid3, p: float, n_samples: int = 200, seed: int = 0) -> float:
    """Largest ``||u||_p / ||u||_{H^1}`` over the probe family."""
    return max(lp_norm(u, p) / math.sqrt(h1_norm_sq(u)) for u in _probe_family(grid, n_samples, seed))


def probe_sphere_infimum(
    params: ModelParams,
    rho: float | None,
    n_samples: int,
    grid: Grid3,
    seed: int = 0,
    potential: np.ndarray | None = None,
) -> GeometryProbe:
    """Minimum of ``J`` over probe fields on the sphere ``||u||_{H^1} = rho``.

    ``rho=None`` picks half the radius bound implied by the empirical
    ``C_p``.  The certificate ``1/2 min(c1,c2) rho^2 - C_p^p rho^p / p`` uses
    the coupling term's nonnegativity, exact for the zero-mean gauge.
    """
    if rho is not None and not rho > 0:
        raise GeometryError("rho must be positive (the sphere of radius 0 is empty)")
    if n_samples < 1:
        raise GeometryError("need at least one sample")
    try:
        cm = coercivity_constants(params).c_min
    except ThresholdError as exc:
        raise GeometryError(str(exc)) from exc
    p = params.p
    fields = _probe_family(grid, n_samples, seed)
    ratios = [lp_norm(u, p) / math.sqrt(h1_norm_sq(u)) for u in fields]
    cp = max(ratios)
    rho_bound = (p * cm / (2.0 * cp**p)) ** (1.0 / (p - 2.0))
    if rho is None:
        rho = 0.5 * rho_bound
    elif rho >= rho_bound:
        warnings.warn(f"rho={rho:.4g} exceeds the radius bound {rho_bound:.4g}; delta may be <= 0", stacklevel=2)
    cert = 0.5 * cm * rho**2 - cp**p * rho**p / p
    model = EnergyModel(grid, params, potential)
    delta = math.inf
    margin = math.inf
    for u in fields:
        v = u.values * (rho / math.sqrt(h1_norm_sq(u)))
        J = model.energy(v)
        delta = min(delta, J)
        margin = min(margin, J - cert)
    return GeometryProbe(rho, delta, n_samples, cert, cp, rho_bound, margin)


# path and report types


@dataclass
class PathState:
    nodes: list
    energies: list
    max_index: int = 0
    iteration: int = 0

    def update_max(self) -> int:
        interior = np.asarray(self.energies[1:-1])
        self.max_index = int(np.argmax(interior)) + 1
        return self.max_index


@dataclass
class TraceRow:
    iter: int
    J_max: float
    dual_residual: float
    h1_norm_max_node: float
    step_len: float
    phase: str
    pairing: float


@dataclass
class SolverReport:
    u_star: Field
    phi_star: Field
    J_value: float
    dual_residual: float
    ps_trace: list
    deflation_count: int
    symmetric: bool
    success: bool
    method: str
    message: str = ""
    trace: list = field(default_factory=list, repr=False)
    weak_residual: float = math.nan
    resolution: dict = field(default_factory=dict)
    reparam_iters: list = field(default_factory=list)
    refine_start: int | None = None
    delta: float | None = None

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "method": self.method,
            "message": self.message,
            "J_value": self.J_value,
            "dual_residual": self.dual_residual,
            "weak_residual": self.weak_residual,
            "h1_norm": math.sqrt(h1_norm_sq(self.u_star)),
            "iterations": len(self.trace),
            "refine_start": self.refine_start,
            "deflation_count": self.deflation_count,
            "symmetric": self.symmetric,
            "resolution": self.resolution,
            "delta": self.delta,
            "path_dipped_below_level": self.path_dipped_below_level,
        }

    @property
    def path_dipped_below_level(self) -> bool:
        """Whether the discrete path max fell below the final level (nodes straddling the ridge)."""
        path = [r.J_max for r in self.trace if r.phase == "path"]
        return bool(path) and min(path) < self.J_value


class _Exhausted:
    def __repr__(self):
        return "EXHAUSTED"

    def __bool__(self):
        return False


EXHAUSTED = _Exhausted()


def _model_for(grid: Grid3, params: ModelParams, potential) -> EnergyModel:
    if potential is None:
        return EnergyModel(grid, params)
    vals = potential.sample(grid).values if hasattr(potential, "sample") else np.asarray(potential)
    v0 = getattr(potential, "v0", None)
    return EnergyModel(grid, params, vals, v0)


def _rel_residual(m: EnergyModel, u: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    raw = m.residual(u)
    rz = m.riesz(raw)
    h1 = m.h1_norm(u)
    return (m.dual_norm(raw, rz) / h1 if h1 > 0 else math.inf), raw, rz


def _ray_terms(m: EnergyModel, u: np.ndarray) -> tuple[float, float, float]:
    br = m.parts(u)[0]
    A = 2.0 * (br.kinetic_local + br.kinetic_nonlocal + br.mass_term)
    C = 4.0 * br.coupling
    D = -m.params.p * br.nonlinear
    return A, C, D


def ray_max(m: EnergyModel, u: np.ndarray) -> float | None:
    """The ``t > 0`` maximizing ``J(t u)``, or ``None`` if ``J`` is unbounded above on the ray."""
    A, C, D = _ray_terms(m, u)
    p = m.params.p
    if not A > 0 or not D > 0:
        return None
    if p == 4.0:
        return math.sqrt(A / (D - C)) if D > C else None
    f = lambda t: A + C * t * t - D * t ** (p - 2.0)
    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            return None
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def resolution_diagnostics(u: Field) -> dict:
    grid = u.grid
    u2 = u.values**2
    tot = float(u2.sum())
    rms = math.sqrt(float(np.sum(u2 * grid.radius**2)) / tot / 3.0) if tot > 0 else 0.0
    tail = spectral_tail(grid, u.values)
    return {
        "spacing": grid.spacing,
        "rms_radius": rms,
        "points_per_rms_radius": rms / grid.spacing,
        "spectral_tail": tail,
        "under_resolved": bool(rms < 2.0 * grid.spacing or tail > 1e-3),
    }


def weak_form_residual(m: EnergyModel, u: np.ndarray, n_test: int = 50, seed: int = 0) -> float:
    """``max_v |J'(u)[v]| / (||v||_{H^1} ||u||_{H^1})`` over random band-limited test fields."""
    raw = m.residual(u)
    rng = np.random.default_rng(seed)
    h1u = m.h1_norm(u)
    worst = 0.0
    for _ in range(n_test):
        v = random_band_limited(m.grid, rng).values
        worst = max(worst, abs(m.pairing(raw, v)) / (m.h1_norm(v) * h1u))
    return worst


def _finish(m, u, cfg, method, trace, success, message, **kw) -> SolverReport:
    if cfg.radial:
        u = _sym(u)
    uf = Field(m.grid, u)
    rel, _, _ = _rel_residual(m, u)
    ok = success and rel <= cfg.tol
    return SolverReport(
        u_star=uf,
        phi_star=Field(m.grid, phi_array(m.grid, u)),
        J_value=m.energy(u),
        dual_residual=rel,
        ps_trace=[(r.J_max, r.dual_residual) for r in trace],
        deflation_count=kw.pop("deflation_count", 0),
        symmetric=cfg.radial,
        success=ok,
        method=method,
        message=message if ok or message else f"residual {rel:.3e} above tol {cfg.tol:.1e}",
        trace=trace,
        weak_residual=weak_form_residual(m, u, cfg.n_test_fields, cfg.seed) if cfg.n_test_fields else math.nan,
        resolution=resolution_diagnostics(uf),
        **kw,
    )


def _armijo(energy_fn, E0: float, slope_sq: float, cfg: SolverConfig, tau_max: float = math.inf):
    tau = min(cfg.armijo_start, tau_max)
    while tau > 1e-14:
        res = energy_fn(tau)
        if res is not None and res[0] <= E0 - cfg.armijo_slope * tau * slope_sq:
            return tau, res
        tau *= cfg.armijo_shrink
    return 0.0, None


def _equidistribute(m: EnergyModel, state: PathState) -> None:
    nodes = state.nodes
    d = [m.h1_norm(nodes[i + 1] - nodes[i]) for i in range(len(nodes) - 1)]
    s = np.concatenate([[0.0], np.cumsum(d)])
    if s[-1] == 0:
        return
    targets = np.linspace(0.0, s[-1], len(nodes))
    new = [nodes[0]]
    for t in targets[1:-1]:
        j = min(int(np.searchsorted(s, t, side="right")) - 1, len(nodes) - 2)
        w = (t - s[j]) / d[j] if d[j] > 0 else 0.0
        new.append((1.0 - w) * nodes[j] + w * nodes[j + 1])
    new.append(nodes[-1])
    state.nodes = new
    state.energies = [0.0] + [m.energy(z) for z in new[1:-1]] + [state.energies[-1]]


def refine_on_rays(
    m: EnergyModel,
    u0: np.ndarray,
    cfg: SolverConfig,
    trace: list | None = None,
    start_iter: int = 0,
    max_iter: int | None = None,
) -> tuple[np.ndarray, bool, str]:
    """Descend ``J(t(u) u)`` along the Sobolev gradient to the target ``cfg.tol / 10``."""
    trace = [] if trace is None else trace
    target = 0.1 * cfg.tol
    t = ray_max(m, u0)
    if t is None:
        return u0, False, "no maximum of J along the ray through the start field"
    u = t * u0
    max_iter = cfg.max_iter if max_iter is None else max_iter
    for k in range(max_iter):
        E = m.energy(u)
        rel, raw, rz = _rel_residual(m, u)
        if cfg.radial:
            rz = _sym(rz)
        pairing = m.pairing(raw, u)
        trace.append(TraceRow(start_iter + k, E, rel, m.h1_norm(u), 0.0, "ray", pairing))
        if rel <= target:
            return u, True, "converged"
        slope = m.inner_A(rz, rz)

        def trial(tau):
            un = u - tau * rz
            tn = ray_max(m, un)
            if tn is None:
                return None
            v = tn * un
            return m.energy(v), v

        tau, res = _armijo(trial, E, slope, cfg)
        if res is None:
            return u, rel <= cfg.tol, "line search stalled"
        trace[-1].step_len = tau * math.sqrt(slope)
        u = res[1]
    rel = _rel_residual(m, u)[0]
    return u, rel <= cfg.tol, "iteration cap reached"


def newton_polish(m: EnergyModel, u0: np.ndarray, cfg: SolverConfig, deflate=None) -> tuple[np.ndarray, bool]:
    """Jacobian-free Newton-Krylov on the Riesz residual, optionally deflated."""
    shape = m.grid.shape

    def F(x):
        u = x.reshape(shape)
        rz = m.riesz(m.residual(u))
        if cfg.radial:
            rz = _sym(rz)
        if deflate is not None:
            rz = deflate(u) * rz
        return rz.ravel()

    scale = m.h1_norm(u0)
    try:
        x = newton_krylov(F, u0.ravel(), f_tol=1e-2 * cfg.tol * scale / math.sqrt(u0.size) + 1e-300,
                          maxiter=cfg.newton_maxiter, method="lgmres")
        ok = True
    except NoConvergence as exc:
        x, ok = exc.args[0], False
    except (ValueError, FloatingPointError, OverflowError):
        return u0, False
    u = np.asarray(x).reshape(shape)
    if not np.all(np.isfinite(u)):
        return u0, False
    return u, ok and _rel_residual(m, u)[0] <= cfg.tol


def mountain_pass_search(
    params: ModelParams,
    e: Field,
    config: SolverConfig = SolverConfig(),
    potential=None,
    delta: float | None = None,
) -> SolverReport:
    """Path phase from the straight path ``t e`` followed by the ray refinement."""
    cfg = config
    grid = e.grid
    m = _model_for(grid, params, potential)
    e_vals = _sym(e.values) if cfg.radial else np.array(e.values)
    Je = m.energy(e_vals)
    if Je > 0:
        raise GeometryError(f"endpoint has J(e) = {Je:.6g} > 0 (geometry: need J(e) <= 0)")
    ts = np.linspace(0.0, 1.0, cfg.path_nodes)
    state = PathState([t * e_vals for t in ts], [0.0] + [m.energy(t * e_vals) for t in ts[1:-1]] + [Je])
    trace: list[TraceRow] = []
    reparam = []
    for it in range(cfg.path_iter):
        state.iteration = it
        i = state.update_max()
        z = state.nodes[i]
        rel, raw, rz = _rel_residual(m, z)
        if cfg.radial:
            rz = _sym(rz)
        trace.append(TraceRow(it, state.energies[i], rel, m.h1_norm(z), 0.0, "path", m.pairing(raw, z)))
        if rel <= cfg.path_switch_tol:
            break
        slope = m.inner_A(rz, rz)

        def trial(tau):
            zn = z - tau * rz
            return m.energy(zn), zn

        # a node that jumps far leaves the path class; cap the move relative to the node
        cap = cfg.max_step_frac * math.sqrt(m.inner_A(z, z) / slope) if slope > 0 else math.inf
        tau, res = _armijo(trial, state.energies[i], slope, cfg, cap)
        if res is None:
            break
        trace[-1].step_len = tau * math.sqrt(slope)
        state.nodes[i] = res[1]
        state.energies[i] = res[0]
        if max(state.energies[1:-1]) <= 0.0:
            raise GeometryError("path max dropped to J <= 0; the path crossed the mountain")
        if (it + 1) % cfg.reparam_every == 0:
            _equidistribute(m, state)
            reparam.append(it + 1)
    i = state.update_max()
    start = len(trace)
    u, ok, msg = refine_on_rays(m, state.nodes[i], cfg, trace, start)
    method = "mountain_pass"
    if not ok and _rel_residual(m, u)[0] < 1e-2:
        u2, ok2 = newton_polish(m, u, cfg)
        if ok2 and m.energy(u2) > 0:
            u, ok, msg, method = u2, True, "converged after Newton polish", "mountain_pass+newton"
    return _finish(m, u, cfg, method, trace, ok, "" if ok else msg,
                   reparam_iters=reparam, refine_start=start, delta=delta)


# deflation


def _h1_dist(m: EnergyModel, a: np.ndarray, b: np.ndarray) -> float:
    return m.h1_norm(a - b)


def _deflation_operator(m: EnergyModel, found: list, cfg: SolverConfig):
    targets = [np.zeros(m.grid.shape)]
    for f in found:
        targets.append(f)
        if cfg.sign_quotient:
            targets.append(-f)

    def M(u):
        val = 1.0
        for t in targets:
            val *= m.h1_norm(u - t) ** (-cfg.deflation_power) + cfg.deflation_shift
        return val

    return M


def _sign_split_max(m: EnergyModel, u: np.ndarray):
    """Maximize ``J(a u^+ + b u^-)`` over ``a, b > 0``; returns the maximizer field and value."""
    parts = [np.maximum(u, 0.0), np.minimum(u, 0.0)]
    if not all(np.any(q) for q in parts):
        return None
    prm = m.params
    cs = [m._fft(q) for q in parts]
    Q = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            Q[i, j] = prm.kin * float(np.sum(m.sym_alpha * (cs[i] * np.conj(cs[j])).real)) * m.scale**2
            if m.V is None:
                Q[i, j] += prm.omega * m.dv * float(np.sum(parts[i] * parts[j]))
            else:
                Q[i, j] += m.dv * float(np.sum(m.V * parts[i] * parts[j]))
    phis = [phi_array(m.grid, q) for q in parts]
    C = np.array([[m.dv * float(np.sum(phis[i] * parts[j] ** 2)) for j in range(2)] for i in range(2)])
    D = np.array([m.dv * float(np.sum(np.abs(q) ** prm.p)) for q in parts])
    p = prm.p

    def negf(t):
        t2 = t * t
        return -(0.5 * t @ Q @ t + 0.25 * t2 @ C @ t2 - float(np.sum(D * np.abs(t) ** p)) / p)

    def grad(t):
        t2 = t * t
        return -(Q @ t + 0.5 * t * (C @ t2 + C.T @ t2) - D * np.abs(t) ** (p - 1.0))

    res = minimize(negf, np.ones(2), jac=grad, method="L-BFGS-B", bounds=[(1e-8, None)] * 2)
    if not res.success or not np.all(np.isfinite(res.x)):
        return None
    a, b = res.x
    return a * parts[0] + b * parts[1], -float(res.fun)


def sign_changing_descent(m: EnergyModel, u0: np.ndarray, cfg: SolverConfig, target: float = 1e-3, max_iter: int = 300):
    """Descent on the sign-changing Nehari set toward a nodal critical point."""
    u = _sym(u0) if cfg.radial else u0
    for _ in range(max_iter):
        out = _sign_split_max(m, u)
        if out is None:
            return None
        u, E = out
        rel, raw, rz = _rel_residual(m, u)
        if rel <= target:
            return u
        if cfg.radial:
            rz = _sym(rz)
        slope = m.inner_A(rz, rz)

        def trial(tau):
            r = _sign_split_max(m, u - tau * rz)
            return None if r is None else (r[1], r[0])

        tau, res = _armijo(trial, E, slope, cfg)
        if res is None:
            return u
        u = res[1]
    return u


def default_guesses(grid: Grid3):
    """Radial nodal profiles ``(1 - c (r/w)^2 + ...) exp(-r^2/(2 w^2))`` with one and two sign changes."""
    r = grid.radius
    L = grid.box_len
    out = []
    for w in (0.075 * L, 0.11 * L, 0.15 * L):
        x = (r / w) ** 2
        g = np.exp(-0.5 * x)
        out.append(((1.0 - x) * g, f"one-node w={w:.3g}"))
        out.append(((1.0 - 2.0 * x + 0.5 * x * x) * g, f"two-node w={w:.3g}"))
    return out


def deflate_and_restart(
    params: ModelParams,
    found: list,
    config: SolverConfig = SolverConfig(),
    grid: Grid3 | None = None,
    potential=None,
    guesses=None,
    endpoint: Field | None = None,
):
    """One more solution distinct from ``found`` (list of Fields), or ``EXHAUSTED``.

    With an empty ``found`` list this is :func:`mountain_pass_search` from
    ``endpoint`` (computed from a Gaussian if omitted).  Otherwise each guess
    is pre-conditioned by a sign-changing descent and finished by Newton
    iterations on ``M(u) R(u)`` with the deflation factor
    ``M(u) = prod_j (||u - u_j||_{H^1}^{-power} + shift)`` over ``0`` and the
    found solutions (and their negatives when ``sign_quotient`` is on).
    """
    cfg = config
    if not 4.0 < params.p < 6.0:
        raise ValueError("deflated search is meant for 4 < p < 6")
    if grid is None:
        if not found and endpoint is None:
            raise ValueError("need a grid")
        grid = found[0].grid if found else endpoint.grid
    if len(found) >= cfg.max_solutions:
        return EXHAUSTED
    if not found:
        if endpoint is None:
            from .scaling import GaussianGenerator, find_negative_energy_point

            m0 = _model_for(grid, params, potential)
            endpoint = find_negative_energy_point(GaussianGenerator(1.0, 0.1 * grid.box_len), params, grid,
                                                  potential=None if m0.V is None else m0.V).e
        return mountain_pass_search(params, endpoint, cfg, potential)
    m = _model_for(grid, params, potential)
    arrays = [f.values for f in found]
    M = _deflation_operator(m, arrays, cfg)
    guesses = default_guesses(grid) if guesses is None else guesses
    failures = 0
    for prof, label in guesses:
        prof = np.asarray(prof, dtype=float)
        start = sign_changing_descent(m, prof, cfg)
        if start is None:
            t = ray_max(m, prof)
            if t is None:
                failures += 1
                if failures >= 3:
                    return EXHAUSTED
                continue
            start = t * prof
        u, ok = newton_polish(m, start, cfg, deflate=M)
        if ok and _is_new(m, u, arrays, cfg):
            rep = _finish(m, u, cfg, "deflation", [], True, f"from guess {label}", deflation_count=len(found))
            if rep.success and rep.J_value > 0:
                return rep
        failures += 1
        if failures >= 3:
            return EXHAUSTED
    return EXHAUSTED


def _is_new(m: EnergyModel, u: np.ndarray, arrays: list, cfg: SolverConfig) -> bool:
    if m.h1_norm(u) < cfg.sep:
        return False
    for f in arrays:
        if _h1_dist(m, u, f) < cfg.sep:
            return False
        if cfg.sign_quotient and _h1_dist(m, u, -f) < cfg.sep:
            return False
    return True


def find_solutions(params: ModelParams, endpoint: Field, config: SolverConfig = SolverConfig(), potential=None) -> list:
    """Mountain-pass solution followed by deflated restarts until ``EXHAUSTED``."""
    reports = [mountain_pass_search(params, endpoint, config, potential)]
    if not reports[0].success or params.p == 4.0:
        return reports
    while len(reports) < config.max_solutions:
        rep = deflate_and_restart(params, [r.u_star for r in reports], config, endpoint.grid, potential)
        if rep is EXHAUSTED:
            break
        reports.append(rep)
    return reports


# Palais-Smale diagnostics


@dataclass(frozen=True)
class PSReport:
    energies_bounded: bool
    residual_below_tol: bool
    norms_bounded: bool
    lower_bound_holds: bool | None
    lower_bound_min_margin: float | None

    @property
    def all_flags(self) -> bool:
        return self.energies_bounded and self.residual_below_tol and self.norms_bounded

    def to_dict(self) -> dict:
        return {
            "energies_bounded": self.energies_bounded,
            "residual_below_tol": self.residual_below_tol,
            "norms_bounded": self.norms_bounded,
            "lower_bound_holds": self.lower_bound_holds,
            "lower_bound_min_margin": self.lower_bound_min_margin,
        }


def ps_diagnostics(trace: list, params: ModelParams, tol: float = 1e-6, growth: float = 10.0) -> PSReport:
    """Observable facets of the Palais-Smale property along a run.

    Energies and norms count as bounded when they stay within ``growth``
    times the larger of their first and last values.  When the coercivity
    constants exist, ``p J(u) - J'(u)[u] >= (p/2 - 1) min(c1,c2) ||u||_{H^1}^2``
    is checked at every iterate.
    """
    if not trace:
        return PSReport(False, False, False, None, None)
    J = np.array([r.J_max for r in trace])
    R = np.array([r.dual_residual for r in trace])
    H = np.array([r.h1_norm_max_node for r in trace])
    eb = bool(np.all(np.isfinite(J)) and np.max(np.abs(J)) <= growth * max(abs(J[0]), abs(J[-1]), 1e-300))
    nb = bool(np.all(np.isfinite(H)) and np.max(H) <= growth * max(H[0], H[-1]))
    rb = bool(R[-1] <= tol)
    try:
        cm = coercivity_constants(params).c_min
    except ThresholdError:
        return PSReport(eb, rb, nb, None, None)
    p = params.p
    margins = []
    for r in trace:
        lhs = p * r.J_max - r.pairing
        rhs = (0.5 * p - 1.0) * cm * r.h1_norm_max_node**2
        margins.append((lhs - rhs) / max(abs(lhs), 1e-300))
    worst = float(min(margins))
    return PSReport(eb, rb, nb, worst >= -1e-10, worst)


def restart_check(report: SolverReport, params: ModelParams, config: SolverConfig = SolverConfig(),
                  potential=None, noise: float = 1e-3, seed: int = 1) -> tuple[float, SolverReport]:
    """Perturb ``u*`` by ``noise`` relative band-limited noise, re-solve, return ``|dJ|/J`` and the new report."""
    m = _model_for(report.u_star.grid, params, potential)
    u = report.u_star.values
    xi = random_band_limited(m.grid, np.random.default_rng(seed)).values
    if config.radial:
        xi = _sym(xi)
    xi *= noise * math.sqrt(m.dv * np.sum(u * u)) / math.sqrt(m.dv * np.sum(xi * xi))
    trace: list = []
    if report.method.startswith("mountain_pass"):
        v, ok, msg = refine_on_rays(m, u + xi, config, trace)
        if not ok:
            v, ok = newton_polish(m, v, config)
    else:
        v, ok = newton_polish(m, u + xi, config)
        msg = ""
    rep = _finish(m, v, config, "restart", trace, ok, "" if ok else msg)
    return abs(rep.J_value - report.J_value) / abs(report.J_value), rep


def write_trace_csv(path, trace: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "J_max", "dual_residual", "h1_norm_max_node", "step_len"])
        for r in trace:
            w.writerow([r.iter, repr(r.J_max), repr(r.dual_residual), repr(r.h1_norm_max_node), repr(r.step_len)])
