"""Reduced energies J (constant frequency) and J_V (potential), their derivatives
and the preconditioned (Sobolev) gradient.

For a potential ``V`` (``V == omega`` in the constant case)

    J(u) = (kin/2) B_alpha(u,u) + (1/2) int V u^2 + (1/4) int Phi_u u^2 - (1/p) int |u|^p

and the derivative pairing is ``J'(u)[v] = int raw * v`` with the residual
density

    raw = kin (-Delta + alpha (-Delta)^s) u + V u + Phi_u u - |u|^{p-2} u.

No chain-rule term for ``Phi`` appears because ``Phi_u`` is itself a critical
point in the ``Phi`` variable.  The Riesz representative solves
``A riesz = raw`` with ``A = kin (-Delta) + a0`` (``a0 = omega`` or
``max(V_0, 1)``), applied mode-wise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .operators import ModelParams, alpha_symbol
from .poisson import _symbol
from .spectral import Field, Grid3, _workers

__all__ = [
    "EnergyBreakdown",
    "DualResidual",
    "EnergyModel",
    "eval_J",
    "grad_J",
    "eval_JV",
    "grad_JV",
    "nonlinear_power",
]


def nonlinear_power(u: np.ndarray, p: float) -> np.ndarray:
    """``|u|^{p-2} u`` with the value 0 at 0."""
    if p == 4.0:
        return u * u * u
    return np.abs(u) ** (p - 2.0) * u


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic_local: float
    kinetic_nonlocal: float
    mass_term: float
    coupling: float
    nonlinear: float
    total: float
    gauge_shift: float = 0.0

    def to_dict(self) -> dict:
        return {
            "kinetic_local": self.kinetic_local,
            "kinetic_nonlocal": self.kinetic_nonlocal,
            "mass_term": self.mass_term,
            "coupling": self.coupling,
            "nonlinear": self.nonlinear,
            "total": self.total,
            "gauge_shift": self.gauge_shift,
        }


@dataclass(frozen=True)
class DualResidual:
    raw: Field
    riesz: Field
    dual_norm: float


class EnergyModel:
    """Array-level evaluator of J or J_V on a fixed grid.

    ``potential`` is ``None`` for the constant-frequency functional, otherwise
    an ``(n, n, n)`` array of ``V`` samples with ``v0 = min V``.
    """

    def __init__(self, grid: Grid3, params: ModelParams, potential: np.ndarray | None = None, v0: float | None = None):
        self.grid = grid
        self.params = params
        self.dv = grid.cell_volume
        self.scale = np.sqrt(self.dv / grid.n**3)
        self.sym_alpha = alpha_symbol(grid, params)
        self.sym_local = grid.k_sq
        self.sym_nonlocal = grid.frac_symbol(params.s)
        self.coulomb = _symbol(grid)
        if potential is None:
            self.V = None
            self.a0 = params.omega
        else:
            V = np.asarray(potential, dtype=float)
            if V.shape != grid.shape or not np.all(np.isfinite(V)):
                raise ValueError("potential must be finite on the grid (V_0 > -inf)")
            self.V = V
            v0 = float(V.min()) if v0 is None else v0
            self.a0 = max(v0, 1.0)
        self.precond = params.kin * grid.k_sq + self.a0

    # transforms with the raw numpy convention; unitary scaling handled explicitly
    def _fft(self, a):
        return scipy.fft.fftn(a, workers=_workers())

    def _ifft(self, c):
        return scipy.fft.ifftn(c, workers=_workers()).real

    def _power(self, c):
        return (c.real**2 + c.imag**2) * self.scale**2

    def parts(self, u: np.ndarray) -> tuple[EnergyBreakdown, np.ndarray, np.ndarray]:
        """Energy terms plus the Fourier coefficients of ``u`` and ``Phi_u``."""
        prm = self.params
        cu = self._fft(u)
        pw = self._power(cu)
        u2 = u * u
        c2 = self._fft(u2)
        phi = self._ifft(c2 * self.coulomb)
        kl = 0.5 * prm.kin * float(np.sum(self.sym_local * pw))
        knl = 0.5 * prm.kin * prm.alpha * float(np.sum(self.sym_nonlocal * pw))
        if self.V is None:
            mass = 0.5 * prm.omega * self.dv * float(u2.sum())
        else:
            mass = 0.5 * self.dv * float(np.sum(self.V * u2))
        coup = 0.25 * self.dv * float(np.sum(phi * u2))
        if prm.p == 4.0:
            nl = -0.25 * self.dv * float(np.sum(u2 * u2))
        else:
            nl = -self.dv * float(np.sum(np.abs(u) ** prm.p)) / prm.p
        shift = 2.0 * np.pi * float(u2.mean())
        br = EnergyBreakdown(kl, knl, mass, coup, nl, kl + knl + mass + coup + nl, shift)
        return br, cu, phi

    def energy(self, u: np.ndarray) -> float:
        return self.parts(u)[0].total

    def residual(self, u: np.ndarray, with_energy: bool = False):
        """Residual density ``raw``; optionally also the energy breakdown and ``Phi``."""
        prm = self.params
        br, cu, phi = self.parts(u)
        raw = prm.kin * self._ifft(cu * self.sym_alpha)
        if self.V is None:
            raw += prm.omega * u
        else:
            raw += self.V * u
        raw += phi * u - nonlinear_power(u, prm.p)
        if with_energy:
            return raw, br, phi
        return raw

    def riesz(self, raw: np.ndarray) -> np.ndarray:
        return self._ifft(self._fft(raw) / self.precond)

    def dual_norm(self, raw: np.ndarray, riesz: np.ndarray | None = None) -> float:
        riesz = self.riesz(raw) if riesz is None else riesz
        return float(np.sqrt(max(self.dv * np.sum(raw * riesz), 0.0)))

    def inner_A(self, a: np.ndarray, b: np.ndarray) -> float:
        """Preconditioner inner product ``<A a, b>``."""
        ca = self._fft(a)
        cb = ca if b is a else self._fft(b)
        return float(np.sum(self.precond * (ca * np.conj(cb)).real)) * self.scale**2

    def h1_norm(self, u: np.ndarray) -> float:
        c = self._fft(u)
        return float(np.sqrt(np.sum((1.0 + self.grid.k_sq) * self._power(c))))

    def pairing(self, raw: np.ndarray, v: np.ndarray) -> float:
        return float(self.dv * np.sum(raw * v))


def _model(u: Field, params: ModelParams, V=None) -> EnergyModel:
    if V is None:
        return EnergyModel(u.grid, params)
    return EnergyModel(u.grid, params, V.sample(u.grid).values, V.v0)


def eval_J(u: Field, params: ModelParams) -> EnergyBreakdown:
    return _model(u, params).parts(u.values)[0]


def _dual(m: EnergyModel, u: Field) -> DualResidual:
    raw = m.residual(u.values)
    rz = m.riesz(raw)
    return DualResidual(Field(u.grid, raw), Field(u.grid, rz), m.dual_norm(raw, rz))


def grad_J(u: Field, params: ModelParams) -> DualResidual:
    return _dual(_model(u, params), u)


def eval_JV(u: Field, params: ModelParams, V) -> EnergyBreakdown:
    """Energy with the potential ``V`` (a :class:`~mln.potential.PotentialSpec`)."""
    return _model(u, params, V).parts(u.values)[0]


def grad_JV(u: Field, params: ModelParams, V) -> DualResidual:
    return _dual(_model(u, params, V), u)
