import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wkb_green.hamiltonian import (
    ConfigError,
    DomainSign,
    HamiltonianSpec,
    Kind,
    model_from_spec,
    parse_spec,
)

finite_xp = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)


def test_parse_heat_trivial():
    m = parse_spec({"kind": "heat"})
    assert m.H(1.0, 3.0) == 9.0


def test_parse_degenerate_trivial():
    m = parse_spec({"kind": "degenerate"})
    assert m.H(2.0, 3.0) == 36.0


def test_parse_general_trivial():
    m = parse_spec({"kind": "general", "a_poly": [1, 1]})
    assert m.H(1.0, 1.0) == 4.0  # a(1) = 2, (x a p)^2 = 4


def test_parse_json_string():
    m = parse_spec('{"kind": "degenerate", "domain_sign": "negative"}')
    assert m.kind is Kind.DEGENERATE
    assert m.spec.domain_sign is DomainSign.NEGATIVE


@pytest.mark.parametrize("config, fragment", [
    ({"kind": "wave"}, "unknown kind"),
    ({"kind": "general"}, "a_poly"),
    ({"kind": "general", "a_poly": []}, "a_poly"),
    ({"kind": "heat", "a_poly": [1]}, "a_poly"),
    ({"kind": "degenerate", "domain_sign": "upwards"}, "domain_sign"),
    ({}, "kind"),
    ({"kind": "heat", "extra": 1}, "unknown configuration"),
])
def test_parse_errors(config, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_spec(config)


def test_parse_rejects_vanishing_a():
    # a(x) = 1 - x vanishes at x = 1 inside the positive window
    with pytest.raises(ConfigError, match="vanishes"):
        parse_spec({"kind": "general", "a_poly": [1, -1]})
    # but is fine on the negative half-line
    parse_spec({"kind": "general", "a_poly": [1, -1], "domain_sign": "negative"})


def test_degenerate_derivatives_point():
    m = parse_spec({"kind": "degenerate"})
    H, Hx, Hp, Hpp, Hxp, Hxx = m.derivatives(1.0, 1.0)
    assert (Hp, Hx, Hpp, Hxp) == (2.0, 2.0, 2.0, 4.0)


def test_heat_derivatives_at_zero_momentum():
    m = parse_spec({"kind": "heat"})
    H, Hx, Hp, Hpp, Hxp, Hxx = m.derivatives(5.0, 0.0)
    assert (H, Hx, Hp, Hxp) == (0.0, 0.0, 0.0, 0.0)
    assert Hpp == 2.0


@given(x=finite_xp, p=finite_xp)
@settings(max_examples=200, deadline=None)
def test_general_unit_a_reduces_to_degenerate_exactly(x, p):
    md = parse_spec({"kind": "degenerate"})
    mg = parse_spec({"kind": "general", "a_poly": [1.0]})
    assert mg.derivatives(x, p) == md.derivatives(x, p)


@given(x=finite_xp, p=finite_xp)
@settings(max_examples=200, deadline=None)
def test_euler_homogeneity_and_nonnegativity(x, p):
    for cfg in ({"kind": "heat"}, {"kind": "degenerate"},
                {"kind": "general", "a_poly": [1.0, 0.5]}):
        m = parse_spec(cfg)
        H, _, Hp, *_ = m.derivatives(x, p)
        assert abs(p * Hp - 2.0 * H) <= 1e-12 * max(1.0, abs(H))
        assert p * Hp - H >= -1e-15


def _fd_derivatives(m, x, p, eps1=1e-6, eps2=1e-4):
    # first differences: truncation O(eps1^2); second differences need a
    # larger step to stay above roundoff in the eps^2 divisor
    Hx = (m.H(x + eps1, p) - m.H(x - eps1, p)) / (2 * eps1)
    Hp = (m.H(x, p + eps1) - m.H(x, p - eps1)) / (2 * eps1)
    Hpp = (m.H(x, p + eps2) - 2 * m.H(x, p) + m.H(x, p - eps2)) / eps2**2
    Hxx = (m.H(x + eps2, p) - 2 * m.H(x, p) + m.H(x - eps2, p)) / eps2**2
    Hxp = (m.H(x + eps2, p + eps2) - m.H(x + eps2, p - eps2)
           - m.H(x - eps2, p + eps2) + m.H(x - eps2, p - eps2)) / (4 * eps2**2)
    return Hx, Hp, Hpp, Hxp, Hxx


def test_derivatives_match_finite_differences():
    import random

    rng = random.Random(20240817)
    models = [parse_spec({"kind": "heat"}),
              parse_spec({"kind": "degenerate"}),
              parse_spec({"kind": "general", "a_poly": [1.0, 0.25, -0.05]})]
    for m in models:
        for _ in range(50):
            x = rng.uniform(-2, 2)
            p = rng.uniform(-2, 2)
            if abs(p) < 1e-3:
                continue
            _, Hx, Hp, Hpp, Hxp, Hxx = m.derivatives(x, p)
            fd = _fd_derivatives(m, x, p)
            for got, ref in zip((Hx, Hp, Hpp, Hxp, Hxx), fd):
                assert abs(got - ref) <= 1e-6 * max(1.0, abs(ref))


def test_a_accessors():
    mg = parse_spec({"kind": "general", "a_poly": [1, 1]})
    assert mg.a_value(2.0) == 3.0
    assert mg.a_prime(2.0) == 1.0
    assert mg.A_value(2.0) == 6.0
    md = parse_spec({"kind": "degenerate"})
    assert md.a_value(3.0) == 1.0 and md.a_prime(3.0) == 0.0
    with pytest.raises(ValueError):
        parse_spec({"kind": "heat"}).a_value(1.0)


def test_models_are_immutable():
    m = parse_spec({"kind": "heat"})
    with pytest.raises(Exception):
        m.spec = HamiltonianSpec(Kind.DEGENERATE)


def test_model_from_spec_direct():
    m = model_from_spec(HamiltonianSpec(Kind.DEGENERATE))
    assert m.H(1.5, 2.0) == (1.5 * 2.0) ** 2
