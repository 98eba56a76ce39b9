"""Periodic-box discretization, unitary transforms and Fourier multipliers.

The whole space is replaced by the torus ``[-L/2, L/2)^3`` sampled at ``n``
points per axis.  Arrays are indexed ``values[ix, iy, iz]``; the point with
index ``n // 2`` on every axis is the origin.

Transform normalization
-----------------------
``to_spectral`` returns coefficients ``c(k) = sqrt(h^3 / n^3) * DFT(f)(k)``,
so that ``sum |c|^2 == h^3 * sum |f|^2`` exactly (discrete Plancherel).  Up
to a phase, ``c(k)`` equals the unitary continuum transform (kernel
``(2 pi)^{-3/2} e^{-i k.x}``) evaluated at ``k`` times ``(2 pi / L)^{3/2}``,
i.e. the continuum transform with the lattice cell volume absorbed.  Every
quadratic form below is therefore a plain mode sum ``sum w(k) |c(k)|^2``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

__all__ = [
    "Grid3",
    "Field",
    "SpectralField",
    "NonFiniteFieldError",
    "to_spectral",
    "from_spectral",
    "lp_norm",
    "l2_norm_sq",
    "inner",
    "grad_norm_sq",
    "h1_norm_sq",
    "frac_lap_apply",
    "hs_seminorm_sq",
    "young_bound_check",
    "YoungReport",
    "random_band_limited",
]


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("MLN_THREADS", "1")))
    except ValueError:
        return 1


class NonFiniteFieldError(ValueError):
    """A field contains NaN or Inf samples."""


@dataclass(frozen=True)
class Grid3:
    """Uniform periodic grid with ``n`` points per axis on a box of edge ``box_len``."""

    n: int
    box_len: float

    def __post_init__(self):
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise ValueError(f"grid size n must be a power of two >= 8, got {self.n}")
        if not (np.isfinite(self.box_len) and self.box_len > 0):
            raise ValueError(f"box_len must be positive, got {self.box_len}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "box_len", float(self.box_len))

    @property
    def spacing(self) -> float:
        return self.box_len / self.n

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @cached_property
    def axis(self) -> np.ndarray:
        """1D sample coordinates, ``-L/2 + i h``."""
        return -0.5 * self.box_len + self.spacing * np.arange(self.n)

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a = self.axis
        return np.meshgrid(a, a, a, indexing="ij", sparse=True)

    @cached_property
    def radius(self) -> np.ndarray:
        x, y, z = self.coords
        return np.sqrt(x * x + y * y + z * z)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Per-axis angular wavenumbers ``2 pi m / L`` in FFT layout."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @cached_property
    def k_sq(self) -> np.ndarray:
        k = self.wavenumbers
        kx, ky, kz = np.meshgrid(k, k, k, indexing="ij", sparse=True)
        return kx * kx + ky * ky + kz * kz

    @cached_property
    def k_abs(self) -> np.ndarray:
        return np.sqrt(self.k_sq)

    def frac_symbol(self, s: float) -> np.ndarray:
        """The multiplier ``|k|^{2s}``, zero at the zero mode."""
        return self.k_abs ** (2.0 * s)

    def field(self, values) -> "Field":
        return Field(self, values)

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.shape))

    def sample(self, fn) -> "Field":
        """Sample ``fn(x, y, z)`` on the grid."""
        x, y, z = self.coords
        return Field(self, np.broadcast_to(fn(x, y, z), self.shape))


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise NonFiniteFieldError(
            f"non-finite sample {values[tuple(bad)]!r} at index {tuple(int(i) for i in bad)}"
        )


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a scalar field on a :class:`Grid3` (read-only)."""

    grid: Grid3
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {v.shape}")
        _check_finite(v)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def _same_grid(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other: "Field") -> "Field":
        self._same_grid(other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        self._same_grid(other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, a: float) -> "Field":
        return Field(self.grid, a * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    def integral(self) -> float:
        return float(self.grid.cell_volume * self.values.sum())


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Unitary Fourier coefficients of a field, see the module docstring."""

    grid: Grid3
    coeffs: np.ndarray = field(repr=False)


# array-level kernels, shared by the solver hot loops


def fft_unitary(grid: Grid3, values: np.ndarray) -> np.ndarray:
    scale = np.sqrt(grid.cell_volume / grid.n**3)
    return scipy.fft.fftn(values, workers=_workers()) * scale


def ifft_unitary(grid: Grid3, coeffs: np.ndarray) -> np.ndarray:
    scale = np.sqrt(grid.n**3 / grid.cell_volume)
    return scipy.fft.ifftn(coeffs, workers=_workers()).real * scale


def apply_symbol(grid: Grid3, values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    """Apply a real, even Fourier multiplier to real samples."""
    w = _workers()
    return scipy.fft.ifftn(scipy.fft.fftn(values, workers=w) * symbol, workers=w).real


def quad_form(grid: Grid3, values: np.ndarray, symbol: np.ndarray) -> float:
    """``sum symbol(k) |c(k)|^2`` for the unitary coefficients of ``values``."""
    c = fft_unitary(grid, values)
    return float(np.sum(symbol * (c.real**2 + c.imag**2)))


def to_spectral(f: Field) -> SpectralField:
    _check_finite(f.values)
    return SpectralField(f.grid, fft_unitary(f.grid, f.values))


def from_spectral(F: SpectralField) -> Field:
    return Field(F.grid, ifft_unitary(F.grid, F.coeffs))


def l2_norm_sq(f: Field) -> float:
    return float(f.grid.cell_volume * np.sum(f.values**2))


def inner(f: Field, g: Field) -> float:
    f._same_grid(g)
    return float(f.grid.cell_volume * np.sum(f.values * g.values))


def lp_norm(f: Field, p: float) -> float:
    """``(h^3 sum |f|^p)^{1/p}`` for ``p`` in the Sobolev range ``[2, 6]``."""
    if not 2.0 <= p <= 6.0:
        raise ValueError(f"p={p} outside the embedding range [2, 6]")
    return float((f.grid.cell_volume * np.sum(np.abs(f.values) ** p)) ** (1.0 / p))


def grad_norm_sq(f: Field) -> float:
    return quad_form(f.grid, f.values, f.grid.k_sq)


def h1_norm_sq(f: Field) -> float:
    return quad_form(f.grid, f.values, 1.0 + f.grid.k_sq)


def _check_order(s: float) -> None:
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order s={s} must lie in (0, 1)")


def frac_lap_apply(f: Field, s: float) -> Field:
    """``(-Delta)^s f`` through the multiplier ``|k|^{2s}``."""
    _check_order(s)
    return Field(f.grid, apply_symbol(f.grid, f.values, f.grid.frac_symbol(s)))


def hs_seminorm_sq(f: Field, s: float) -> float:
    """``||(-Delta)^{s/2} f||_2^2``."""
    _check_order(s)
    return quad_form(f.grid, f.values, f.grid.frac_symbol(s))


@dataclass(frozen=True)
class YoungReport:
    lhs: float
    rhs: float
    holds: bool


def young_rhs_symbol(k_abs, s: float, eps: float):
    """Per-mode right side ``(1-s) eps^{-s/(1-s)} + s eps |k|^2``."""
    return (1.0 - s) * eps ** (-s / (1.0 - s)) + s * eps * np.asarray(k_abs) ** 2


def young_bound_check(f: Field, s: float, eps: float, rtol: float = 1e-12) -> YoungReport:
    """Compare ``||(-Delta)^{s/2} f||^2`` with its interpolation bound in ``L^2`` and ``H^1``."""
    _check_order(s)
    if not eps > 0:
        raise ValueError("eps must be positive")
    c = fft_unitary(f.grid, f.values)
    power = c.real**2 + c.imag**2
    lhs = float(np.sum(f.grid.frac_symbol(s) * power))
    rhs = float(
        (1.0 - s) * eps ** (-s / (1.0 - s)) * np.sum(power)
        + s * eps * np.sum(f.grid.k_sq * power)
    )
    return YoungReport(lhs, rhs, lhs <= rhs * (1.0 + rtol) + 1e-300)


def random_band_limited(grid: Grid3, rng: np.random.Generator, band: float = 0.25, decay: float = 0.0) -> Field:
    """Random real field whose modes satisfy ``|m_j| <= band * n`` on every axis.

    Coefficients are i.i.d. normal times ``(1 + |k|^2)^{-decay/2}``; the result
    is scaled to unit ``L^2`` norm.
    """
    if not 0.0 < band <= 0.5:
        raise ValueError("band must lie in (0, 1/2]")
    m = np.abs(np.fft.fftfreq(grid.n) * grid.n)
    keep1 = m <= band * grid.n
    mask = keep1[:, None, None] & keep1[None, :, None] & keep1[None, None, :]
    noise = rng.standard_normal(grid.shape)
    c = scipy.fft.fftn(noise, workers=_workers())
    c *= mask
    if decay:
        c *= (1.0 + grid.k_sq) ** (-0.5 * decay)
    vals = scipy.fft.ifftn(c, workers=_workers()).real
    nrm = np.sqrt(grid.cell_volume * np.sum(vals**2))
    return Field(grid, vals / nrm)
