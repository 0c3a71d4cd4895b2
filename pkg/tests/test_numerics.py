import math

import pytest

from wkb_green.numerics import (
    adaptive_simpson,
    bisect_root,
    extrapolate_to_zero,
    richardson,
)


class TestAdaptiveSimpson:
    def test_polynomial_exact(self):
        assert adaptive_simpson(lambda x: x * x, 0.0, 2.0) == pytest.approx(8 / 3, abs=1e-13)

    def test_oscillatory(self):
        got = adaptive_simpson(math.sin, 0.0, math.pi, tol=1e-12)
        assert got == pytest.approx(2.0, abs=1e-10)

    def test_reversed_interval(self):
        assert adaptive_simpson(math.exp, 1.0, 0.0) == pytest.approx(1.0 - math.e, abs=1e-10)

    def test_empty_interval(self):
        assert adaptive_simpson(math.exp, 0.5, 0.5) == 0.0


class TestBisect:
    def test_simple_root(self):
        root = bisect_root(lambda x: x * x - 2.0, 0.0, 2.0, xtol=1e-13)
        assert root == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_requires_bracket(self):
        with pytest.raises(ValueError):
            bisect_root(lambda x: x + 10.0, 0.0, 1.0)

    def test_endpoint_root(self):
        assert bisect_root(lambda x: x, 0.0, 1.0) == 0.0


class TestExtrapolation:
    def test_richardson_geometric(self):
        # f(eps) = 1 + eps + eps^2 sampled at eps = 2^-k
        eps = [2.0 ** -k for k in range(3, 9)]
        vals = [1.0 + e + e * e for e in eps]
        est, step = richardson(vals, ratio=2.0)
        assert est == pytest.approx(1.0, abs=1e-12)
        assert step < 1e-10

    def test_neville_matches_richardson_on_geometric_nodes(self):
        eps = [2.0 ** -k for k in range(3, 9)]
        vals = [math.cos(e) + 0.5 * e for e in eps]
        r_est, _ = richardson(vals, ratio=2.0)
        n_est, _ = extrapolate_to_zero(eps, vals)
        assert n_est == pytest.approx(r_est, abs=1e-12)

    def test_neville_handles_ratio_ten(self):
        # 3 nodes kill the eps and eps^2 terms; the eps^3 residue of this
        # rational function bounds the error near 2e-6
        eps = [0.1, 0.01, 0.001]
        vals = [(1.0 - e) / (1.0 + e) for e in eps]
        est, _ = extrapolate_to_zero(eps, vals)
        assert est == pytest.approx(1.0, abs=1e-5)
        assert abs(est - 1.0) < abs(vals[-1] - 1.0)  # strictly better than raw

    def test_single_value(self):
        est, step = extrapolate_to_zero([0.1], [3.0])
        assert est == 3.0 and step == float("inf")

    def test_validation(self):
        with pytest.raises(ValueError):
            extrapolate_to_zero([], [])
        with pytest.raises(ValueError):
            richardson([])
