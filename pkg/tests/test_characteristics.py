import math
import random

import numpy as np
import pytest

from wkb_green.characteristics import (
    AccuracyError,
    BlowupError,
    CharacteristicDomainError,
    closed_degenerate,
    closed_general,
    flow,
    jacobian_degenerate,
    jacobian_degenerate_yconst,
    jacobian_general,
)
from wkb_green.hamiltonian import parse_spec

HEAT = parse_spec({"kind": "heat"})
DEG = parse_spec({"kind": "degenerate"})
GEN = parse_spec({"kind": "general", "a_poly": [1.0, 1.0]})


def rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


class TestFlow:
    def test_heat_linear_motion(self):
        traj = flow(HEAT, 1.0, 0.0, 0.0, 1.0, 0.5, 100)
        fs = traj.final_state
        assert rel(fs.x, 2.0) < 1e-12
        assert rel(fs.p_x, 1.0) < 1e-12

    def test_zero_momentum_fixed_point(self):
        traj = flow(DEG, 1.3, 1.3, 0.0, 0.7, 0.4, 200)
        fs = traj.final_state
        assert fs.x == pytest.approx(1.3, abs=1e-12)
        assert fs.p_x == pytest.approx(0.0, abs=1e-13)
        assert fs.A == pytest.approx(0.0, abs=1e-13)
        assert fs.M == pytest.approx(0.0, abs=1e-13)

    def test_degenerate_matches_closed_form(self):
        traj = flow(DEG, 1.0, 0.0, 0.0, 1.0, 0.25, 10_000)
        fs = traj.final_state
        assert rel(fs.x, math.exp(0.5)) < 1e-12

    def test_initial_state_layout(self):
        beta = 0.6
        traj = flow(DEG, 1.1, 0.3, 0.2, beta, 0.2, 10)
        tau0, s0 = traj.samples[0]
        assert tau0 == 0.0
        p0 = beta * (1.1 - 0.2 - 0.3)
        assert s0.p_x == pytest.approx(p0)
        assert s0.p_y == pytest.approx(-p0)
        assert np.allclose(s0.V, [[1.0, 0.0], [beta, -beta], [-beta, beta]])

    def test_frozen_pair_is_constant(self):
        traj = flow(DEG, 0.9, 0.4, 0.1, 0.8, 0.5, 512, record_every=64)
        ys = {s.y for _, s in traj.samples}
        pys = {s.p_y for _, s in traj.samples}
        assert len(ys) == 1 and len(pys) == 1

    def test_taus_strictly_increasing(self):
        traj = flow(DEG, 1.0, 0.5, 0.0, 0.9, 0.3, 100, record_every=7)
        taus = [tau for tau, _ in traj.samples]
        assert taus[0] == 0.0
        assert taus[-1] == pytest.approx(0.3)
        assert all(b > a for a, b in zip(taus, taus[1:]))

    def test_xp_conservation_along_samples(self):
        traj = flow(DEG, 1.5, 0.5, 0.1, 0.9, 1.0, 4096, record_every=128)
        products = [s.x * s.p_x for _, s in traj.samples]
        ref = products[0]
        assert all(abs(v - ref) <= 1e-8 * abs(ref) for v in products)

    def test_accumulated_integrals_closed_form(self):
        # For the quadratic well, x p is conserved so A = (x0 p0)^2 t and
        # M = 4 x0 p0 t.
        x0, xi, y, beta, t = 1.4, 0.3, -0.2, 0.85, 0.8
        p0 = beta * (x0 - y - xi)
        traj = flow(DEG, x0, xi, y, beta, t, 8192)
        fs = traj.final_state
        assert rel(fs.A, (x0 * p0) ** 2 * t) < 1e-7
        assert rel(fs.M, 4.0 * x0 * p0 * t) < 1e-7

    def test_variational_entry_matches_yconst_jacobian(self):
        for x0, xi, y, beta, t in [(1.0, 0.0, 0.0, 1.0, 0.25),
                                   (0.8, 1.2, 0.3, 0.6, 0.7),
                                   (-1.1, -0.5, -0.2, 0.9, 0.5)]:
            traj = flow(DEG, x0, xi, y, beta, t, 4096)
            v00 = traj.final_state.V[0, 0]
            ref = jacobian_degenerate_yconst(x0, xi, y, beta, t)
            assert abs(v00 - ref) <= 1e-6 * max(1.0, abs(ref))

    def test_sign_preservation(self):
        rng = random.Random(7)
        for _ in range(20):
            x0 = rng.uniform(0.1, 2.0) * rng.choice([1.0, -1.0])
            xi = rng.uniform(0.1, 2.0) * math.copysign(1.0, x0)
            traj = flow(DEG, x0, xi, rng.uniform(-0.3, 0.3),
                        rng.uniform(0.3, 1.0), rng.uniform(0.0, 0.6), 1024,
                        record_every=64)
            assert all(math.copysign(1.0, s.x) == math.copysign(1.0, x0)
                       for _, s in traj.samples)

    def test_blowup_diagnostic(self):
        with pytest.raises(BlowupError) as err:
            flow(DEG, 2.0, -2.0, 0.0, 1.0, 3.0, 20_000)
        assert 0.0 < err.value.t_blowup < 3.0

    def test_step_halving_check(self):
        flow(HEAT, 1.0, 0.0, 0.0, 1.0, 0.5, 8, check=True)  # exact for linear flow
        with pytest.raises(AccuracyError):
            flow(DEG, 1.9, 0.1, 0.0, 1.0, 1.0, 3, check=True)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            flow(DEG, 1.0, 0.0, 0.0, 0.0, 0.1, 10)
        with pytest.raises(ValueError):
            flow(DEG, 1.0, 0.0, 0.0, 0.5, -0.1, 10)
        with pytest.raises(ValueError):
            flow(DEG, 1.0, 0.0, 0.0, 0.5, 0.1, 0)

    def test_csv_export(self, tmp_path):
        traj = flow(DEG, 1.0, 0.5, 0.0, 0.9, 0.2, 64, record_every=16)
        out = tmp_path / "traj.csv"
        with out.open("w", newline="") as f:
            traj.to_csv(f)
        rows = out.read_text().splitlines()
        assert rows[0].startswith("tau,x,y,p_x,p_y,A,M,v_x_x0")
        assert len(rows) == 1 + len(traj.samples)


class TestClosedDegenerate:
    def test_reference_point(self):
        x, p = closed_degenerate(1.0, 0.0, 0.0, 1.0, 0.25)
        assert x == pytest.approx(math.exp(0.5), rel=1e-15)
        assert p == pytest.approx(math.exp(-0.5), rel=1e-15)

    def test_zero_momentum(self):
        x, p = closed_degenerate(0.7, 0.7, 0.0, 0.4, 5.0)
        assert (x, p) == (0.7, 0.0)

    def test_negative_rate_point_and_flow_crosscheck(self):
        # exponent coefficient 2*0.5*1*(1-3-1) = -3, so x = e^{-0.3} at t = 0.1
        x, p = closed_degenerate(1.0, 3.0, 1.0, 0.5, 0.1)
        assert x == pytest.approx(math.exp(-0.3), rel=1e-15)
        traj = flow(DEG, 1.0, 3.0, 1.0, 0.5, 0.1, 10_000)
        assert rel(traj.final_state.x, x) < 1e-10
        assert rel(traj.final_state.p_x, p) < 1e-10


class TestJacobianDegenerate:
    def test_diagonal_source(self):
        xi, beta, t = 1.3, 0.7, 0.2
        assert jacobian_degenerate(xi, xi, beta, t) == pytest.approx(
            1.0 + 2.0 * beta * t * xi**2 / (1.0 - beta), rel=1e-14)

    def test_origin(self):
        assert jacobian_degenerate(0.0, 1.0, 0.5, 0.7) == 1.0

    def test_against_finite_difference(self):
        # independent oracle: difference the offset-eliminated endpoint map
        def endpoint(x0, xi, beta, t):
            return x0 * math.exp(2.0 * beta * t * x0 * (x0 - xi) / (1.0 - beta))

        for x0, xi, beta, t in [(1.0, 3.0, 0.5, 0.1), (0.7, 0.5, 0.8, 0.3),
                                (-1.2, -0.4, 0.6, 0.2)]:
            eps = 1e-6
            fd = (endpoint(x0 + eps, xi, beta, t)
                  - endpoint(x0 - eps, xi, beta, t)) / (2 * eps)
            assert rel(jacobian_degenerate(x0, xi, beta, t), fd) < 1e-8

    def test_reference_value(self):
        # 2 beta t x0 (x0-xi)/(1-beta) = -0.4 and the bracket is 0.8
        got = jacobian_degenerate(1.0, 3.0, 0.5, 0.1)
        assert got == pytest.approx(0.8 * math.exp(-0.4), rel=1e-14)

    def test_rejects_beta_one(self):
        with pytest.raises(ValueError):
            jacobian_degenerate(1.0, 0.0, 1.0, 0.1)


class TestJacobianYconst:
    def test_fold_roots_at_two_thirds(self):
        # 1 + (4/3) x0 (2 x0 - 3) = 0  <=>  x0 = (3 +- sqrt(3))/4
        beta, t = 1.0, 2.0 / 3.0
        for root in ((3 - math.sqrt(3)) / 4, (3 + math.sqrt(3)) / 4):
            assert abs(jacobian_degenerate_yconst(root, 3.0, 0.0, beta, t)) < 1e-12

    def test_origin(self):
        assert jacobian_degenerate_yconst(0.0, 1.0, 0.4, 0.9, 0.5) == 1.0

    def test_explicit_point_and_fd(self):
        got = jacobian_degenerate_yconst(1.0, 0.0, 0.0, 1.0, 0.25)
        assert got == pytest.approx(2.0 * math.exp(0.5), rel=1e-14)
        eps = 1e-6
        fd = (closed_degenerate(1.0 + eps, 0.0, 0.0, 1.0, 0.25)[0]
              - closed_degenerate(1.0 - eps, 0.0, 0.0, 1.0, 0.25)[0]) / (2 * eps)
        assert rel(got, fd) < 1e-8


class TestClosedGeneral:
    def test_unit_a_reduces_to_log_form(self):
        m = parse_spec({"kind": "general", "a_poly": [1.0]})
        x0, xi, beta, t = 1.1, 0.6, 0.55, 0.3
        got = closed_general(m, x0, xi, beta, t)
        ref = x0 * math.exp(2.0 * beta * t * x0 * (x0 - xi) / (1.0 - beta))
        assert rel(got, ref) < 1e-11

    def test_diagonal_source_fixed(self):
        assert closed_general(GEN, 0.8, 0.8, 0.5, 1.0) == 0.8

    def test_against_quadrature_inversion(self):
        # a = 1 + x on the positive axis: int dz/(z(1+z)) = ln(z/(1+z)),
        # so x/(1+x) = (x0/(1+x0)) e^R with R the separated right side.
        x0, xi, beta, t = 1.0, 0.5, 0.5, 0.1
        R = 2.0 * beta * t * x0 * GEN.a_value(x0) * (x0 - xi) / (1.0 - beta)
        q = x0 / (1.0 + x0) * math.exp(R)
        ref = q / (1.0 - q)
        got = closed_general(GEN, x0, xi, beta, t)
        assert rel(got, ref) < 1e-11

    def test_against_flow(self):
        x0, xi, beta, t = 1.0, 0.5, 0.5, 0.1
        y = -beta * (x0 - xi) / (1.0 - beta)
        traj = flow(GEN, x0, xi, y, beta, t, 100_000)
        got = closed_general(GEN, x0, xi, beta, t)
        assert rel(got, traj.final_state.x) < 1e-6

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            closed_general(GEN, 0.0, 0.5, 0.5, 0.1)
        with pytest.raises(ValueError):
            closed_general(GEN, 1.0, -0.5, 0.5, 0.1)
        with pytest.raises(ValueError):
            closed_general(HEAT, 1.0, 0.5, 0.5, 0.1)
        with pytest.raises(ValueError):
            closed_general(GEN, 1.0, 0.5, 1.0, 0.1)

    def test_unbracketed_root_raises(self):
        with pytest.raises(CharacteristicDomainError):
            closed_general(GEN, 2.0, 0.1, 0.999, 5.0)

    def test_vanishing_a_inside_bracket_raises(self):
        # a = 1 - 0.4 x is positive on the checked window but vanishes at
        # x = 2.5; a strong push must trip the integrand guard
        m = parse_spec({"kind": "general", "a_poly": [1.0, -0.4]})
        with pytest.raises(CharacteristicDomainError, match="vanished"):
            closed_general(m, 2.0, 0.5, 0.9, 2.0)

    def test_negative_domain(self):
        m = parse_spec({"kind": "general", "a_poly": [1.0, 0.1],
                        "domain_sign": "negative"})
        got = closed_general(m, -1.0, -0.5, 0.5, 0.1)
        assert got < 0.0
        y = -0.5 * (-1.0 + 0.5) / 0.5
        traj = flow(m, -1.0, -0.5, y, 0.5, 0.1, 50_000)
        assert rel(got, traj.final_state.x) < 1e-6


class TestJacobianGeneral:
    def test_unit_a_reduces_exactly(self):
        m = parse_spec({"kind": "general", "a_poly": [1.0]})
        x0, xi, beta, t = 1.2, 0.4, 0.7, 0.25
        x = closed_general(m, x0, xi, beta, t)
        got = jacobian_general(m, x0, xi, beta, t, x)
        ref = jacobian_degenerate(x0, xi, beta, t)
        assert rel(got, ref) < 1e-11

    def test_diagonal_source_value(self):
        xi, beta, t = 0.9, 0.6, 0.15
        got = jacobian_general(GEN, xi, xi, beta, t, xi)
        a = GEN.a_value(xi)
        assert got == pytest.approx(1.0 + 2.0 * beta * t * xi**2 * a**2 / (1.0 - beta),
                                    rel=1e-13)

    def test_against_finite_difference(self):
        x0, xi, beta, t = 1.0, 0.5, 0.5, 0.1
        eps = 1e-6
        xp = closed_general(GEN, x0 + eps, xi, beta, t)
        xm = closed_general(GEN, x0 - eps, xi, beta, t)
        fd = (xp - xm) / (2 * eps)
        x = closed_general(GEN, x0, xi, beta, t)
        assert rel(jacobian_general(GEN, x0, xi, beta, t, x), fd) < 1e-5

    def test_rejects_origin(self):
        with pytest.raises(ValueError):
            jacobian_general(GEN, 0.0, 0.5, 0.5, 0.1, 0.0)
