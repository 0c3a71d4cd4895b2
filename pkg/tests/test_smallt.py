import math

import pytest

from wkb_green.hamiltonian import parse_spec
from wkb_green.smallt import DeltaRegimeError, bvp_series, p0_leading, s_small_t

HEAT = parse_spec({"kind": "heat"})
DEG = parse_spec({"kind": "degenerate"})
GEN = parse_spec({"kind": "general", "a_poly": [1.0, 1.0]})


class TestP0Leading:
    def test_zero_displacement(self):
        assert p0_leading(DEG, 1.0, 1.0, 0.01, 1.0) == 0.0

    def test_degenerate_point(self):
        # Y = (x-xi)/(nu t') = 10, slope H_pp(xi) = 2 xi^2 = 2
        assert p0_leading(DEG, 1.1, 1.0, 0.01, 1.0) == pytest.approx(5.0, rel=1e-12)

    def test_heat_slope_two(self):
        # H_p = 2p, so P0 = Y/2
        assert p0_leading(HEAT, 0.4, 0.0, 0.1, 1.0) == pytest.approx(2.0, rel=1e-12)

    def test_general_uses_local_diffusion(self):
        xi = 0.5
        got = p0_leading(GEN, 0.6, xi, 0.1, 1.0)
        Y = 0.1 / 0.1
        assert got == pytest.approx(Y / (2.0 * (xi * GEN.a_value(xi)) ** 2), rel=1e-12)

    def test_rejects_degenerate_origin(self):
        with pytest.raises(DeltaRegimeError, match="point mass"):
            p0_leading(DEG, 0.5, 0.0, 0.01, 1.0)


class TestBvpSeries:
    def test_shooting_matches_log_closed_form(self):
        # conserved c = X P gives X = xi e^{2 c sigma}; S0 = c^2 t'
        for x, xi, t_prime in [(1.2, 1.0, 1.0), (0.85, 1.1, 0.5), (2.0, 0.5, 2.0)]:
            series = bvp_series(DEG, x, xi, nu=0.05, t_prime=t_prime)
            ref = math.log(x / xi) ** 2 / (4.0 * t_prime)
            assert abs(series.S0 - ref) <= 1e-8 * max(1.0, ref)

    def test_launch_momentum_diagnostic(self):
        x, xi, t_prime = 1.2, 1.0, 1.0
        series = bvp_series(DEG, x, xi, nu=0.05, t_prime=t_prime)
        c = math.log(x / xi) / (2.0 * t_prime)
        assert series.P0 == pytest.approx(c / xi, rel=1e-9)

    def test_diagonal_trivial(self):
        series = bvp_series(DEG, 1.0, 1.0, nu=0.01, t_prime=1.0)
        assert series.S0 == 0.0 and series.S1 == 0.0 and series.P0 == 0.0

    def test_first_order_correction_vanishes(self):
        series = bvp_series(DEG, 1.3, 1.0, nu=0.02, t_prime=1.0, order=1)
        assert series.S1 == 0.0
        assert series.order == 1

    def test_order_zero_records_order(self):
        series = bvp_series(DEG, 1.3, 1.0, nu=0.02, t_prime=1.0, order=0)
        assert series.order == 0 and series.S1 == 0.0

    def test_heat_quadratic_form(self):
        series = bvp_series(HEAT, 0.7, 0.2, nu=0.05, t_prime=1.0)
        assert series.S0 == pytest.approx(0.25 / 4.0, rel=1e-9)

    def test_general_kind_against_separated_integral(self):
        # a = 1 + x: int dz/(z a(z)) = ln(z/(1+z)); S0 = c^2 t'
        x, xi, t_prime = 1.4, 1.0, 1.0
        g = math.log(x / (1.0 + x)) - math.log(xi / (1.0 + xi))
        c = g / (2.0 * t_prime)
        series = bvp_series(GEN, x, xi, nu=0.05, t_prime=t_prime)
        assert series.S0 == pytest.approx(c * c * t_prime, rel=1e-8)

    def test_rejects_sign_mismatch_and_origin(self):
        with pytest.raises(DeltaRegimeError):
            bvp_series(DEG, -1.0, 1.0, nu=0.01, t_prime=1.0)
        with pytest.raises(DeltaRegimeError):
            bvp_series(DEG, 1.0, 0.0, nu=0.01, t_prime=1.0)
        with pytest.raises(ValueError):
            bvp_series(DEG, 1.2, 1.0, nu=-0.1, t_prime=1.0)
        with pytest.raises(ValueError):
            bvp_series(DEG, 1.2, 1.0, nu=0.1, t_prime=1.0, order=2)


class TestSSmallT:
    def test_degenerate_log_distance(self):
        for x, xi, t in [(1.2, 1.0, 0.05), (0.9, 1.0, 0.02), (1.25, 1.0, 0.1)]:
            got = s_small_t(DEG, x, xi, t)
            assert got == pytest.approx(math.log(x / xi) ** 2 / (4.0 * t), rel=1e-8)

    def test_e_fold_separation_point(self):
        got = s_small_t(DEG, math.e, 1.0, 0.01)
        assert got == pytest.approx(25.0, rel=5e-3)

    def test_heat_quadratic(self):
        got = s_small_t(HEAT, 0.8, 0.3, 0.05)
        assert got == pytest.approx(0.25 / (4.0 * 0.05), rel=1e-9)

    def test_nu_reparameterization_invariance(self):
        x, xi, t = 1.2, 1.0, 0.05
        a = bvp_series(DEG, x, xi, nu=t, t_prime=1.0)
        b = bvp_series(DEG, x, xi, nu=t / 2.0, t_prime=2.0)
        sa = a.S0 / a.nu + a.S1
        sb = b.S0 / b.nu + b.S1
        assert abs(sa - sb) <= 1e-10 * max(1.0, abs(sa))

    def test_nonnegative_and_zero_iff_diagonal(self):
        assert s_small_t(DEG, 1.0, 1.0, 0.1) == 0.0
        for x in (0.8, 0.95, 1.05, 1.3):
            assert s_small_t(DEG, x, 1.0, 0.1) > 0.0

    def test_origin_regime_reported(self):
        with pytest.raises(DeltaRegimeError, match=r"x\^2/\(2\(1-beta\)\)"):
            s_small_t(DEG, 0.5, 0.0, 0.1)
