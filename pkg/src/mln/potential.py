"""Coercive-potential variant: the weighted space W, the form B_{alpha,V},
lower bounds with a spectral shift, and the low-lying spectrum of

    L_{alpha,V} u = kin (-Delta + alpha (-Delta)^s) u + V u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .operators import (
    ModelParams,
    ThresholdError,
    alpha_symbol,
    alpha_threshold,
    bilinear_alpha,
    coercivity_constants,
)
from .spectral import Field, Grid3, _workers, grad_norm_sq, inner, l2_norm_sq, random_band_limited

__all__ = [
    "PotentialSpec",
    "w_norm_sq",
    "bilinear_alpha_V",
    "MuBound",
    "mu_and_lower_bound",
    "Spectrum",
    "eigen_decompose",
    "dense_operator",
    "k0_and_c0",
    "c0_formula",
    "verify_c0_bound",
    "potential_coercivity_check",
    "potential_coercivity_constants",
    "PotentialCoercivityReport",
    "sublevel_fraction",
]


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """``constant``: V = v0; ``harmonic``: V = v0 + curvature |x|^2; ``tabulated``: V = values."""

    kind: str
    v0: float
    curvature: float = 1.0
    values: Field | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("constant", "harmonic", "tabulated"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if not math.isfinite(self.v0):
            raise ValueError("V_0 must be finite")
        if self.kind == "harmonic" and not self.curvature > 0:
            raise ValueError("harmonic potential needs positive curvature")
        if self.kind == "tabulated":
            if self.values is None:
                raise ValueError("tabulated potential needs values")
            vmin = float(self.values.values.min())
            if abs(vmin - self.v0) > 1e-12 * max(1.0, abs(vmin)):
                raise ValueError(f"v0={self.v0} is not the grid minimum {vmin}")

    @classmethod
    def tabulated(cls, values: Field) -> "PotentialSpec":
        return cls("tabulated", float(values.values.min()), values=values)

    def sample(self, grid: Grid3) -> Field:
        if self.kind == "constant":
            return Field(grid, np.full(grid.shape, self.v0))
        if self.kind == "harmonic":
            return Field(grid, self.v0 + self.curvature * grid.radius**2)
        if self.values.grid != grid:
            raise ValueError("tabulated potential lives on a different grid")
        return self.values

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "v0": self.v0}
        if self.kind == "harmonic":
            d["curvature"] = self.curvature
        return d


def sublevel_fraction(V: PotentialSpec, grid: Grid3, level: float) -> float:
    """Fraction of grid points with ``V <= level`` (finite-box stand-in for the finite-measure sublevel condition)."""
    return float(np.mean(V.sample(grid).values <= level))


def w_norm_sq(u: Field, V: PotentialSpec) -> float:
    """``||u||_2^2 + ||grad u||_2^2 + int (V - V_0) u^2``."""
    Vf = V.sample(u.grid)
    weight = float(u.grid.cell_volume * np.sum((Vf.values - V.v0) * u.values**2))
    return l2_norm_sq(u) + grad_norm_sq(u) + weight


def bilinear_alpha_V(u: Field, v: Field, params: ModelParams, V: PotentialSpec) -> float:
    u._same_grid(v)
    Vf = V.sample(u.grid)
    return params.kin * bilinear_alpha(u, v, params) + float(
        u.grid.cell_volume * np.sum(Vf.values * u.values * v.values)
    )


@dataclass(frozen=True)
class MuBound:
    mu: float
    c_w: float
    eps_star: float
    reduced: bool
    verified: bool | None
    worst_margin: float | None


def _mu_construction(params: ModelParams, v0: float) -> tuple[float, float, float]:
    kin, am, s = params.kin, params.alpha_minus, params.s
    if am == 0.0:
        eps, grad_coef, loss = 1.0, kin, 0.0
    else:
        # gradient coefficient 1/2 when kin > 1/2, else kin/2
        eps = (1.0 - 0.5 / kin) / (am * s) if kin > 0.5 else 0.5 / (am * s)
        grad_coef = kin * (1.0 - am * s * eps)
        loss = am * kin * (1.0 - s) * eps ** (-s / (1.0 - s))
    c_w = min(0.5, grad_coef)
    mu = max(0.0, c_w - v0 + loss)
    return mu, c_w, eps


def mu_and_lower_bound(
    params: ModelParams,
    V: PotentialSpec,
    grid: Grid3 | None = None,
    n_samples: int = 1000,
    seed: int = 0,
) -> MuBound:
    """Shift ``mu`` and constant ``c_W`` with ``B_{alpha,V}(u,u) + mu ||u||^2 >= c_W ||u||_W^2``.

    The fractional part is absorbed with the interpolation bound at a fixed
    ``eps``; ``c_W`` equals 1/2 whenever ``kin >= 1/2`` (``reduced`` flags the
    other case).  With ``grid`` the bound is checked on ``n_samples`` random
    band-limited fields.
    """
    mu, c_w, eps = _mu_construction(params, V.v0)
    verified = margin = None
    if grid is not None and n_samples > 0:
        rng = np.random.default_rng(seed)
        margin = math.inf
        for _ in range(n_samples):
            u = random_band_limited(grid, rng)
            lhs = bilinear_alpha_V(u, u, params, V) + mu * l2_norm_sq(u)
            rhs = c_w * w_norm_sq(u, V)
            margin = min(margin, (lhs - rhs) / rhs)
        verified = margin >= -1e-12
    return MuBound(mu, c_w, eps, c_w < 0.5, verified, margin)


def c0_formula(mu: float, lam_k0: float, c_w: float = 0.5) -> float:
    """``c_W (1 - mu / (lambda_k0 + mu))``; equals ``1/2 (1 - ...)`` when ``c_W = 1/2``."""
    return c_w * (1.0 - mu / (lam_k0 + mu))


@dataclass
class Spectrum:
    eigvals: np.ndarray
    eigvecs: list[Field]
    k0: int | None
    mu: float
    c0: float | None
    c_w: float = 0.5
    converged: bool = True
    residuals: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "eigvals": [float(x) for x in self.eigvals],
            "k0": self.k0,
            "mu": self.mu,
            "c0": self.c0,
            "c_w": self.c_w,
            "converged": self.converged,
        }


class _Operator:
    def __init__(self, grid: Grid3, params: ModelParams, V: PotentialSpec):
        self.grid = grid
        self.sym = params.kin * alpha_symbol(grid, params)
        self.V = V.sample(grid).values
        self.shape = grid.shape
        self.N = grid.n**3

    def _apply(self, X, fn):
        X = np.asarray(X)
        single = X.ndim == 1
        A = np.ascontiguousarray(X.reshape(self.N, -1).T).reshape((-1,) + self.shape)
        out = fn(A).reshape(-1, self.N).T
        return out[:, 0] if single else out

    def _multiplier(self, A, sym):
        w = _workers()
        axes = (1, 2, 3)
        return scipy.fft.ifftn(scipy.fft.fftn(A, axes=axes, workers=w) * sym, axes=axes, workers=w).real

    def matvec(self, X):
        return self._apply(X, lambda A: self._multiplier(A, self.sym) + self.V * A)


def dense_operator(grid: Grid3, params: ModelParams, V: PotentialSpec) -> np.ndarray:
    """Dense matrix of the discrete operator (brute-force oracle; small grids only)."""
    if grid.n > 16:
        raise ValueError("dense operator limited to n <= 16")
    op = _Operator(grid, params, V)
    cols = op.matvec(np.eye(op.N))
    return 0.5 * (cols + cols.T)


def eigen_decompose(
    params: ModelParams,
    V: PotentialSpec,
    grid: Grid3,
    K: int = 10,
    tol: float = 1e-13,
    maxiter: int | None = None,
    seed: int = 0,
    guard: int = 6,
) -> Spectrum:
    """Lowest ``K`` eigenpairs by implicitly restarted Lanczos (ARPACK), matrix-free.

    ``guard`` extra Ritz pairs protect degenerate clusters at the cut; the
    start vector is random so that every symmetry sector is represented.
    """
    m = K + guard
    op = _Operator(grid, params, V)
    if K < 1 or m >= op.N // 2:
        raise ValueError("K must be small compared with the grid size")
    A = LinearOperator((op.N, op.N), matvec=op.matvec, matmat=op.matvec, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(op.N)
    converged = True
    try:
        w, v = eigsh(A, k=m, which="SA", tol=tol, v0=v0, maxiter=maxiter, ncv=max(2 * m + 1, 40))
    except ArpackNoConvergence as exc:
        w, v, converged = exc.eigenvalues, exc.eigenvectors, False
        if w.size < K:
            raise
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    res = np.linalg.norm(op.matvec(v) - v * w, axis=0)
    vecs = v / np.sqrt(grid.cell_volume)
    fields = [Field(grid, vecs[:, j].reshape(grid.shape)) for j in range(K)]
    converged = converged and bool(np.all(res[:K] <= 1e-8 * np.abs(w[:K]) + 1e-10))
    mb = mu_and_lower_bound(params, V, n_samples=0)
    pos = np.nonzero(w[:K] > 0)[0]
    k0 = int(pos[0]) + 1 if pos.size else None
    c0 = c0_formula(mb.mu, float(w[k0 - 1]), mb.c_w) if k0 else None
    return Spectrum(w[:K].copy(), fields, k0, mb.mu, c0, mb.c_w, converged, res[:K])


def k0_and_c0(spec: Spectrum) -> tuple[int, float]:
    if spec.k0 is None:
        raise ValueError("no positive eigenvalue among the computed ones; increase K")
    return spec.k0, c0_formula(spec.mu, float(spec.eigvals[spec.k0 - 1]), spec.c_w)


def project_out(u: Field, vecs: list[Field]) -> Field:
    vals = u.values.copy()
    for e in vecs:
        vals -= inner(Field(u.grid, vals), e) * e.values
    return Field(u.grid, vals)


def verify_c0_bound(spec: Spectrum, params: ModelParams, V: PotentialSpec, n_samples: int = 200, seed: int = 0) -> float:
    """Worst relative margin of ``B_{alpha,V}(u,u) >= c0 ||u||_W^2`` over random ``u`` in ``P_k0``."""
    k0, c0 = k0_and_c0(spec)
    grid = spec.eigvecs[0].grid
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(n_samples):
        u = project_out(random_band_limited(grid, rng), spec.eigvecs[: k0 - 1])
        lhs = bilinear_alpha_V(u, u, params, V)
        rhs = c0 * w_norm_sq(u, V)
        worst = min(worst, (lhs - rhs) / rhs)
    return worst


@dataclass(frozen=True)
class PotentialCoercivityReport:
    lhs: float
    middle: float
    rhs: float
    holds: bool


def potential_coercivity_constants(params: ModelParams, v0: float) -> tuple[float, float]:
    """``(c1, c2)`` of the potential case: ``c2 = 1 - alpha^- kin (1-s) eps0^{-s/(1-s)} / V_0``."""
    if not v0 > 0:
        raise ThresholdError("the potential threshold condition needs V_0 > 0")
    if not params.alpha_minus < alpha_threshold(params.s, v0 / params.kin):
        raise ThresholdError(
            f"alpha={params.alpha} violates the potential threshold condition alpha > -alpha_0(s, 2m V_0/hbar^2) "
            f"= {-alpha_threshold(params.s, v0 / params.kin):.12g}"
        )
    cc = coercivity_constants(params, mass=v0)
    return cc.c1, cc.c2 / v0


def potential_coercivity_check(u: Field, params: ModelParams, V: PotentialSpec) -> PotentialCoercivityReport:
    """``kin B_alpha + int V u^2 >= 1/2 min(c1,c2) (||grad u||^2 + int V u^2) >= 1/2 min(c1,c2) min(1,V_0) ||u||_W^2``."""
    c1, c2 = potential_coercivity_constants(params, V.v0)
    cm = 0.5 * min(c1, c2)
    Vf = V.sample(u.grid)
    vu2 = float(u.grid.cell_volume * np.sum(Vf.values * u.values**2))
    lhs = params.kin * bilinear_alpha(u, u, params) + vu2
    middle = cm * (grad_norm_sq(u) + vu2)
    rhs = cm * min(1.0, V.v0) * w_norm_sq(u, V)
    tol = 1e-12 * abs(lhs)
    return PotentialCoercivityReport(lhs, middle, rhs, lhs >= middle - tol and middle >= rhs - tol)
