"""Electrostatic potential ``-Delta Phi = 2 pi u^2`` on the torus.

The periodic problem is solvable only for mean-zero sources, so the source is
neutralized by its mean (a uniform background) and ``Phi`` is fixed to have
zero mean.  Relative to the whole-space potential, the periodic one is shifted
by a nearly constant offset of order ``||u||_2^2 / L`` plus the background
parabola ``(pi/3) mean(u^2) |x|^2``; both vanish as the box grows.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .spectral import Field, Grid3, fft_unitary, ifft_unitary, lp_norm, quad_form

__all__ = [
    "PhiSolution",
    "solve_phi",
    "phi_array",
    "coulomb_symbol",
    "PhiIdentityReport",
    "verify_phi_identities",
    "cubic_group",
    "apply_symmetry",
    "is_invariant",
    "radial_symmetry_check",
    "SymmetryError",
    "MADELUNG_SC",
    "free_space_coupling_correction",
]

# Madelung-type constant of the simple cubic lattice with neutralizing background
MADELUNG_SC = 2.8372974794806


def coulomb_symbol(grid: Grid3) -> np.ndarray:
    """``2 pi / |k|^2`` with the zero mode removed."""
    k2 = grid.k_sq.copy()
    k2[0, 0, 0] = np.inf
    return 2.0 * np.pi / k2


_SYMBOL_CACHE: dict[Grid3, np.ndarray] = {}


def _symbol(grid: Grid3) -> np.ndarray:
    sym = _SYMBOL_CACHE.get(grid)
    if sym is None:
        sym = _SYMBOL_CACHE.setdefault(grid, coulomb_symbol(grid))
    return sym


def phi_array(grid: Grid3, u: np.ndarray) -> np.ndarray:
    """Array kernel of :func:`solve_phi`."""
    c = fft_unitary(grid, u * u)
    return ifft_unitary(grid, c * _symbol(grid))


@dataclass(frozen=True)
class PhiSolution:
    phi: Field
    source_l2: float
    gauge_shift: float

    @property
    def tol_gauge(self) -> float:
        """Bound on the negative part the gauge may introduce (see :func:`gauge_tolerance`)."""
        return gauge_tolerance(self.phi.grid, self.source_l2**2)


def gauge_tolerance(grid: Grid3, mass: float) -> float:
    """Size of the periodic offset for a source of total ``||u||_2^2 = mass``.

    The whole-space potential is nonnegative; the zero-mean periodic one is
    lowered by at most about ``mass / (2 L) * (Madelung + box-diameter
    parabola)``.  The factor 2 is slack.
    """
    L = grid.box_len
    return 2.0 * mass * (0.5 * MADELUNG_SC / L + (np.pi / 3.0) * 0.75 * L**2 / L**3)


def solve_phi(u: Field) -> PhiSolution:
    """Zero-mean periodic solution of ``-Delta Phi = 2 pi (u^2 - mean u^2)``."""
    u2 = u.values * u.values
    phi = phi_array(u.grid, u.values)
    return PhiSolution(
        phi=Field(u.grid, phi),
        source_l2=float(np.sqrt(u.grid.cell_volume * u2.sum())),
        gauge_shift=float(2.0 * np.pi * u2.mean()),
    )


@dataclass(frozen=True)
class PhiIdentityReport:
    grad_phi_sq: float
    two_pi_coupling: float
    phi_min: float
    coupling: float
    sobolev_ratio: float
    tol_gauge: float

    @property
    def rel_gap(self) -> float:
        scale = max(abs(self.grad_phi_sq), abs(self.two_pi_coupling), 1e-300)
        return abs(self.grad_phi_sq - self.two_pi_coupling) / scale


def verify_phi_identities(u: Field) -> PhiIdentityReport:
    """Energy identity ``||grad Phi||^2 = 2 pi int Phi u^2`` and the ``L^{12/5}`` ratio."""
    sol = solve_phi(u)
    grid = u.grid
    lhs = quad_form(grid, sol.phi.values, grid.k_sq)
    coupling = float(grid.cell_volume * np.sum(sol.phi.values * u.values**2))
    rhs = 2.0 * np.pi * coupling
    n125 = lp_norm(u, 12.0 / 5.0)
    ratio = float(np.sqrt(lhs) / n125**2) if n125 > 0 else 0.0
    return PhiIdentityReport(
        grad_phi_sq=lhs,
        two_pi_coupling=rhs,
        phi_min=float(sol.phi.values.min()),
        coupling=coupling,
        sobolev_ratio=ratio,
        tol_gauge=sol.tol_gauge,
    )


def free_space_coupling_correction(u: Field) -> float:
    """Estimate of ``int Phi_free u^2 - int Phi_per u^2`` for a source centred at the origin.

    Lattice-sum expansion for a cubic box with neutralizing background:
    ``I_per = I_free - (M/2) Q^2 / L + (2 pi / 3) Q M_2 / L^3`` with
    ``Q = int u^2`` and ``M_2 = int |x|^2 u^2``; the remainder decays
    exponentially for well-localized sources.
    """
    grid = u.grid
    rho = u.values**2
    Q = grid.cell_volume * rho.sum()
    M2 = grid.cell_volume * np.sum(rho * grid.radius**2)
    L = grid.box_len
    return float(0.5 * MADELUNG_SC * Q * Q / L - (2.0 * np.pi / 3.0) * Q * M2 / L**3)


# cubic symmetry group of the grid (origin at index n // 2)


def _reflect(a: np.ndarray, axis: int) -> np.ndarray:
    return np.roll(np.flip(a, axis=axis), 1, axis=axis)


def cubic_group() -> list[tuple[tuple[int, int, int], tuple[bool, bool, bool]]]:
    """The 48 signed axis permutations, as ``(perm, flips)`` pairs."""
    return [
        (perm, flips)
        for perm in itertools.permutations(range(3))
        for flips in itertools.product((False, True), repeat=3)
    ]


def apply_symmetry(a: np.ndarray, g) -> np.ndarray:
    perm, flips = g
    out = np.transpose(a, perm)
    for ax, f in enumerate(flips):
        if f:
            out = _reflect(out, ax)
    return out


def is_invariant(a: np.ndarray, group=None, atol: float = 0.0) -> bool:
    group = cubic_group() if group is None else group
    return all(np.max(np.abs(apply_symmetry(a, g) - a), initial=0.0) <= atol for g in group)


class SymmetryError(ValueError):
    """Input field is not invariant under the requested symmetry group."""


@dataclass(frozen=True)
class SymmetryReport:
    group_order: int
    input_defect: float
    phi_defect: float
    holds: bool


def radial_symmetry_check(u: Field, group=None, atol: float = 1e-12) -> SymmetryReport:
    """Check that ``Phi_u`` inherits the symmetry group of ``u``.

    ``group`` defaults to all 48 cubic symmetries; pass a subgroup (e.g. the
    x/y swap) for partially symmetric inputs.
    """
    group = cubic_group() if group is None else list(group)
    scale = max(float(np.max(np.abs(u.values))), 1e-300)
    in_def = max(float(np.max(np.abs(apply_symmetry(u.values, g) - u.values))) for g in group)
    if in_def > atol * scale:
        raise SymmetryError(f"input not invariant under the group (defect {in_def:.3e})")
    phi = solve_phi(u).phi.values
    out_def = max(float(np.max(np.abs(apply_symmetry(phi, g) - phi))) for g in group)
    return SymmetryReport(len(group), in_def, out_def, out_def <= atol * max(1.0, float(np.max(np.abs(phi)))))
