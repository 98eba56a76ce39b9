"""Independent reference values used by the tests.

Nothing here calls into ``mln`` numerics: closed forms, 1D radial
quadrature (scipy.integrate.quad) and explicit dense DFT matrices.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import integrate, special

QUAD_TOL = 1e-12


def radial_integral(f, upper=np.inf):
    """``int_{R^3} f(|x|) dx`` for a radial integrand."""
    val, _ = integrate.quad(lambda r: 4.0 * np.pi * r * r * f(r), 0.0, upper, epsabs=0.0, epsrel=QUAD_TOL, limit=200)
    return val


# Gaussian u = exp(-r^2 / 2), so u^2 = exp(-r^2)


def gaussian_phi_closed(r):
    """Whole-space solution of ``-Delta Phi = 2 pi exp(-r^2)``: ``(pi^{3/2}/2) erf(r)/r``."""
    r = np.asarray(r, dtype=float)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, 0.5 * np.pi**1.5 * special.erf(safe) / safe, np.pi)


def gaussian_phi_quadrature(r, rho=lambda t: np.exp(-t * t)):
    """``(1/2) int rho(y)/|x-y| dy`` by shell decomposition, for radial ``rho``."""
    inner, _ = integrate.quad(lambda t: rho(t) * t * t, 0.0, r, epsrel=1e-12) if r > 0 else (0.0, 0.0)
    outer, _ = integrate.quad(lambda t: rho(t) * t, r, np.inf, epsrel=1e-12)
    return 2.0 * np.pi * ((inner / r if r > 0 else 0.0) + outer)


def gaussian_terms(s: float, p: float):
    """Continuum integrals for ``u = exp(-r^2/2)`` by radial quadrature.

    Returns ``l2, grad, frac, coupling, lp`` with ``frac = int |xi|^{2s} |u^(xi)|^2``
    (the unitary transform of u is ``exp(-|xi|^2/2)``) and
    ``coupling = int Phi u^2`` for the whole-space ``Phi``.
    """
    l2 = radial_integral(lambda r: np.exp(-r * r))
    grad = radial_integral(lambda r: r * r * np.exp(-r * r))
    frac = radial_integral(lambda r: r ** (2 * s) * np.exp(-r * r))
    coupling = radial_integral(lambda r: gaussian_phi_closed(r) * np.exp(-r * r))
    lp = radial_integral(lambda r: np.exp(-0.5 * p * r * r))
    return {"l2": l2, "grad": grad, "frac": frac, "coupling": coupling, "lp": lp}


def poisson_errors(phi: np.ndarray, r: np.ndarray):
    """Relative errors of a gauged grid ``Phi`` against the whole-space closed form.

    ``whole_box``: plain L2 over the box after removing the mean offset.
    ``source_weighted``: L2 weighted by the source ``u^2 = exp(-r^2)`` after
    removing the weighted mean offset.
    """
    ref = gaussian_phi_closed(r)
    d = phi - ref
    dd = d - d.mean()
    whole = math.sqrt(np.sum(dd * dd) / np.sum(ref * ref))
    w = np.exp(-r * r)
    c = np.sum(d * w) / np.sum(w)
    weighted = math.sqrt(np.sum((d - c) ** 2 * w) / np.sum(ref * ref * w))
    return {"whole_box": whole, "source_weighted": weighted}


# single Fourier mode u = a cos(k x), k = 2 pi / L


def single_mode_terms(a: float, L: float, s: float, p: float, kin: float, omega: float, alpha: float):
    """Hand evaluation of every energy term for ``u = a cos(2 pi x / L)`` on a box of side L."""
    k = 2.0 * np.pi / L
    vol = L**3
    l2 = 0.5 * a * a * vol
    mean_abs_cos_p = special.gamma(0.5 * (p + 1)) / (math.sqrt(np.pi) * special.gamma(0.5 * p + 1))
    # u^2 - mean = (a^2/2) cos(2kx);  Phi = 2 pi (a^2/2) cos(2kx) / (2k)^2
    coupling = np.pi * a**4 * vol / (16.0 * k * k)
    return {
        "kinetic_local": 0.5 * kin * k * k * l2,
        "kinetic_nonlocal": 0.5 * kin * alpha * k ** (2 * s) * l2,
        "mass_term": 0.5 * omega * l2,
        "coupling": 0.25 * coupling,
        "nonlinear": -(abs(a) ** p) * mean_abs_cos_p * vol / p,
    }


# spectra


def oscillator_levels(count: int, shift: float = 0.0):
    """Lowest levels of ``-Delta + |x|^2`` in 3D: sums of 1D levels ``2 j + 1``."""
    levels = sorted(2 * (i + j + k) + 3 + shift for i, j, k in itertools.product(range(count), repeat=3))
    return np.array(levels[:count], dtype=float)


def fourier_levels(n: int, L: float, kin: float, omega: float, alpha: float, s: float, count: int):
    """Sorted ``kin (|k|^2 + alpha |k|^{2s}) + omega`` over the grid wavenumbers."""
    m = np.fft.fftfreq(n, d=1.0 / n)
    k2 = (2 * np.pi / L) ** 2 * (m[:, None, None] ** 2 + m[None, :, None] ** 2 + m[None, None, :] ** 2)
    sym = kin * (k2 + alpha * k2**s) + omega
    return np.sort(sym.ravel())[:count]


def dense_dft_operator(n: int, L: float, kin: float, alpha: float, s: float, V: np.ndarray) -> np.ndarray:
    """Dense matrix of ``kin (-Delta + alpha (-Delta)^s) + V`` built from explicit DFT matrices."""
    j = np.arange(n)
    F = np.exp(-2j * np.pi * np.outer(j, j) / n) / math.sqrt(n)
    F3 = np.kron(np.kron(F, F), F)
    m = np.fft.fftfreq(n, d=1.0 / n)
    k2 = (2 * np.pi / L) ** 2 * (m[:, None, None] ** 2 + m[None, :, None] ** 2 + m[None, None, :] ** 2)
    sym = (kin * (k2 + alpha * k2**s)).ravel()
    H = (F3.conj().T * sym) @ F3
    H = 0.5 * (H + H.conj().T).real
    H[np.diag_indices_from(H)] += V.ravel()
    return H
