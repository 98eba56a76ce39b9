"""Rescaling family, scaling identities and the negative-energy endpoint."""

import csv
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mln import (
    BandwidthError,
    GaussianGenerator,
    Grid3,
    ModelParams,
    RadialGenerator,
    ScalingTriple,
    check_bandwidth,
    eval_J,
    exponent_system,
    find_negative_energy_point,
    grad_norm_sq,
    l2_norm_sq,
    rescale,
    scaling_slopes,
    spectral_tail,
    verify_scaling_identities,
    write_scan_csv,
)

RATIO_GRID = Grid3(128, 30.0)


class TestTriple:
    @pytest.mark.parametrize("lam", [1.0, 0.5])
    def test_lambda_above_one(self, lam):
        with pytest.raises(ValueError, match="exceed 1"):
            ScalingTriple(lam, 1.0, 2.0)

    def test_degenerate_flag(self):
        t = ScalingTriple(1.0, 0.0, 0.0, allow_degenerate=True)
        assert t.degenerate

    @pytest.mark.parametrize("lam", [0.0, -2.0, math.inf])
    def test_lambda_positive_finite(self, lam):
        with pytest.raises(ValueError):
            ScalingTriple(lam, 1.0, 1.0, allow_degenerate=True)


class TestRescale:
    def test_identity(self, grid16):
        gen = GaussianGenerator(1.3, 0.9)
        out = rescale(gen, ScalingTriple(2.0, 0.0, 0.0), grid16)
        np.testing.assert_array_equal(out.values, gen(grid16.radius))

    def test_gaussian_closed_form(self, grid16):
        w = 0.9
        out = rescale(GaussianGenerator(1.0, w), ScalingTriple(2.0, 1.0, 2.0), grid16)
        b = 1 / (2 * w * w)
        np.testing.assert_allclose(out.values, 4 * np.exp(-4 * grid16.radius**2 * b), rtol=1e-13)

    def test_non_finite_rejected(self, grid16):
        gen = RadialGenerator(lambda r: 1.0 / r, "coulomb")
        with np.errstate(divide="ignore"), pytest.raises(ValueError, match="non-finite"):
            rescale(gen, ScalingTriple(2.0, 1.0, 1.0), grid16)


class TestBandwidth:
    def test_tail_small_for_resolved(self):
        u = rescale(GaussianGenerator(1.0, 1.5), ScalingTriple(2.0, 1.0, 2.0), RATIO_GRID)
        assert check_bandwidth(u) <= 1e-10

    def test_refusal(self, grid16):
        u = rescale(GaussianGenerator(1.0, 0.3), ScalingTriple(2.0, 1.0, 2.0), grid16)
        with pytest.raises(BandwidthError, match="bandwidth"):
            check_bandwidth(u)

    def test_zero_field(self, grid16):
        assert spectral_tail(grid16, np.zeros(grid16.shape)) == 0.0


class TestIdentities:
    @pytest.fixture(scope="class")
    @staticmethod
    def report():
        return verify_scaling_identities(GaussianGenerator(1.0, 1.5), ScalingTriple(2.0, 1.0, 2.0), 0.5, RATIO_GRID)

    @pytest.mark.parametrize("key, factor", [("l2", 2.0), ("grad", 8.0), ("frac", 4.0), ("coupling", 8.0)])
    def test_factors(self, report, key, factor):
        assert report.expected[key] == factor
        assert abs(report.measured[key] / factor - 1) <= 1e-3

    def test_phi_field_law(self, report):
        assert report.phi_field_defect <= 1e-12
        assert report.holds

    def test_bandwidth_refusal(self, grid16):
        with pytest.raises(BandwidthError):
            verify_scaling_identities(GaussianGenerator(1.0, 1.0), ScalingTriple(8.0, 1.0, 2.0), 0.5, grid16)

    def test_slopes_refuse_coarse_grid(self):
        with pytest.raises(BandwidthError):
            scaling_slopes(GaussianGenerator(1.0, 3.0), 1.0, 2.0, 0.5, Grid3(64, 24.0))


class TestExponentSystem:
    @settings(max_examples=100, deadline=None)
    @given(s=st.fractions(Fraction(1, 1000), Fraction(999, 1000)))
    def test_gamma_twice_beta(self, s):
        assert all(exponent_system(1, 2, s).values())

    def test_fails_outside(self):
        rows = exponent_system(1, Fraction(1, 2), Fraction(1, 2))
        assert not rows["quartic_positive"]


class TestEndpoint:
    def test_ray_sign_flip(self, grid32):
        prm = ModelParams(1.0, 1.0, -1.0, 0.5, 5.0)
        ep = find_negative_energy_point(GaussianGenerator(1.0, 1.6), prm, grid32)
        assert ep.mode == "t" and ep.J <= 0
        J = [row[1] for row in ep.scan]
        flips = [i for i in range(1, len(J)) if J[i - 1] > 0 >= J[i]]
        assert len(flips) == 1 and J[0] > 0
        # beyond the flip the energy stays negative
        ts = np.geomspace(ep.param, 8 * ep.param, 7)
        gen = GaussianGenerator(1.0, 1.6)
        assert all(eval_J(rescale(gen, ScalingTriple(2.0, 0.0, 0.0), grid32) * t, prm).total < 0 for t in ts)

    def test_lambda_family(self, params4):
        grid = Grid3(128, 16.0)
        gen = GaussianGenerator(1.0, 1.6)
        ep = find_negative_energy_point(gen, params4, grid)
        assert ep.mode == "lambda" and ep.J <= 0
        J = [row[1] for row in ep.scan]
        neg = J.index(next(j for j in J if j <= 0))
        assert all(b < a for a, b in zip(J[neg - 1 :], J[neg:]))
        base = rescale(gen, ScalingTriple(1.0, 0.0, 0.0, True), grid)
        l2, gr = l2_norm_sq(base), grad_norm_sq(base)
        checked = 0
        for lam, _, h1 in ep.scan:
            u = rescale(gen, ScalingTriple(lam, 1.0, 2.0, True), grid)
            if spectral_tail(grid, u.values) <= 1e-8:
                assert math.isclose(h1, lam * l2 + lam**3 * gr, rel_tol=1e-6)
                checked += 1
        assert checked >= 2
        assert all(b[2] > a[2] for a, b in zip(ep.scan, ep.scan[1:]))

    def test_radius_respected(self, grid32, params5):
        ep = find_negative_energy_point(GaussianGenerator(1.0, 1.6), params5, grid32, rho=50.0)
        assert math.sqrt(ep.h1_norm_sq) > 50.0

    def test_bandwidth_exhausted(self, params4):
        with pytest.raises(BandwidthError, match="finer grid"):
            find_negative_energy_point(GaussianGenerator(0.05, 1.0), params4, Grid3(16, 16.0))

    def test_scan_csv(self, tmp_path, grid32, params5):
        ep = find_negative_energy_point(GaussianGenerator(1.0, 1.6), params5, grid32)
        path = tmp_path / "scan.csv"
        write_scan_csv(path, ep.scan)
        rows = list(csv.reader(open(path)))
        assert rows[0] == ["lambda_or_t", "J", "H1_norm_sq"]
        assert len(rows) == len(ep.scan) + 1
        assert float(rows[-1][1]) == ep.J
