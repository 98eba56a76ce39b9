"""Periodic Poisson solve, its identities and symmetry."""

import math

import numpy as np
import pytest

from mln import (
    Field,
    Grid3,
    SymmetryError,
    apply_symmetry,
    cubic_group,
    free_space_coupling_correction,
    radial_symmetry_check,
    random_band_limited,
    solve_phi,
    verify_phi_identities,
)
from mln.spectral import fft_unitary
from oracles import gaussian_phi_closed, gaussian_phi_quadrature, gaussian_terms, poisson_errors


def gaussian(grid):
    return Field(grid, np.exp(-0.5 * grid.radius**2))


class TestOracle:
    @pytest.mark.parametrize("r", [0.0, 0.3, 1.0, 2.5, 6.0])
    def test_quadrature_matches_closed_form(self, r):
        assert math.isclose(gaussian_phi_quadrature(r), float(gaussian_phi_closed(r)), rel_tol=1e-10)

    def test_value_at_origin(self):
        assert float(gaussian_phi_closed(0.0)) == np.pi


class TestSolvePhi:
    def test_zero(self, grid16):
        sol = solve_phi(grid16.zeros())
        assert np.all(sol.phi.values == 0.0) and sol.source_l2 == 0.0

    def test_zero_mean_gauge(self, grid32, rng):
        phi = solve_phi(random_band_limited(grid32, rng)).phi.values
        assert abs(phi.mean()) < 1e-14 * np.max(np.abs(phi))

    def test_gaussian_against_closed_form(self, gaussian64):
        err = poisson_errors(solve_phi(gaussian64).phi.values, gaussian64.grid.radius)
        assert err["source_weighted"] <= 1e-3

    def test_error_decreases_with_box(self):
        errs = []
        for L in (8.0, 16.0, 32.0):
            g = Grid3(int(4 * L), L)
            errs.append(poisson_errors(solve_phi(gaussian(g)).phi.values, g.radius)["source_weighted"])
        assert errs[0] > errs[1] > errs[2]

    def test_gauge_offset_is_bounded(self, gaussian64):
        sol = solve_phi(gaussian64)
        assert sol.phi.values.min() >= -sol.tol_gauge

    @pytest.mark.parametrize("t", [-2.0, 0.5, 3.0])
    def test_homogeneity(self, grid32, rng, t):
        u = random_band_limited(grid32, rng)
        base = solve_phi(u).phi.values
        scaled = solve_phi(t * u).phi.values
        assert np.max(np.abs(scaled - t * t * base)) <= 1e-12 * t * t * np.max(np.abs(base))

    def test_discrete_weak_form(self, grid32, rng):
        u = random_band_limited(grid32, rng)
        phi = solve_phi(u).phi.values
        w = u.values**2 - np.mean(u.values**2)
        cp, cw = fft_unitary(grid32, phi), fft_unitary(grid32, w)
        for _ in range(5):
            cv = fft_unitary(grid32, random_band_limited(grid32, rng, band=0.5).values)
            lhs = np.sum(grid32.k_sq * cp * np.conj(cv)).real
            rhs = 2 * np.pi * np.sum(cw * np.conj(cv)).real
            assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0)

    def test_translation_equivariance(self, grid32, rng):
        u = random_band_limited(grid32, rng)
        shift = (3, -5, 7)
        moved = Field(grid32, np.roll(u.values, shift, axis=(0, 1, 2)))
        expected = np.roll(solve_phi(u).phi.values, shift, axis=(0, 1, 2))
        np.testing.assert_allclose(solve_phi(moved).phi.values, expected, atol=1e-12)

    @pytest.mark.parametrize("idx", [1, 9, 30, 47])
    def test_cubic_equivariance(self, grid32, rng, idx):
        g = cubic_group()[idx]
        u = random_band_limited(grid32, rng)
        moved = Field(grid32, apply_symmetry(u.values, g))
        expected = apply_symmetry(solve_phi(u).phi.values, g)
        np.testing.assert_allclose(solve_phi(moved).phi.values, expected, atol=1e-12)


class TestIdentities:
    def test_zero(self, grid16):
        r = verify_phi_identities(grid16.zeros())
        assert r.grad_phi_sq == 0.0 and r.two_pi_coupling == 0.0 and r.sobolev_ratio == 0.0

    def test_gaussian(self, gaussian64):
        assert verify_phi_identities(gaussian64).rel_gap <= 1e-10

    def test_random_family(self, grid32, rng):
        reports = [verify_phi_identities(random_band_limited(grid32, rng)) for _ in range(100)]
        assert max(r.rel_gap for r in reports) <= 1e-10
        assert min(r.coupling for r in reports) >= 0.0
        # the ratio is a Sobolev-type constant: finite and of order one on this family
        ratios = [r.sobolev_ratio for r in reports]
        assert 0 < max(ratios) < 100

    def test_coupling_correction_recovers_free_space(self, gaussian64):
        g = gaussian64.grid
        per = g.cell_volume * np.sum(solve_phi(gaussian64).phi.values * gaussian64.values**2)
        ref = gaussian_terms(0.5, 4)["coupling"]
        assert abs(per / ref - 1) > 0.1
        assert math.isclose(per + free_space_coupling_correction(gaussian64), ref, rel_tol=1e-10)


class TestSymmetry:
    def test_group_order(self):
        group = cubic_group()
        assert len(group) == 48 and len(set(group)) == 48

    def test_radial_gaussian(self, grid32):
        r = radial_symmetry_check(gaussian(grid32))
        assert r.group_order == 48 and r.holds and r.phi_defect <= 1e-12

    def test_swap_subgroup(self, grid32, rng):
        a = random_band_limited(grid32, rng).values
        swapped = Field(grid32, a + np.transpose(a, (1, 0, 2)))
        swap = [((1, 0, 2), (False, False, False))]
        assert radial_symmetry_check(swapped, group=swap).holds

    def test_non_symmetric_rejected(self, grid32, rng):
        with pytest.raises(SymmetryError):
            radial_symmetry_check(random_band_limited(grid32, rng))

    def test_zero(self, grid16):
        assert radial_symmetry_check(grid16.zeros()).holds
