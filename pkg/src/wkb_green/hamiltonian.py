"""Hamiltonian families entering the parabolic symbol calculus.

Three families are supported: constant diffusion H = p^2, the degenerate
quadratic well H = x^2 p^2, and the generalized degenerate family
H = x^2 a^2(x) p^2 with polynomial a(x).  Every partial derivative used by
the characteristic flow, the transport amplitude and the fold Jacobians is
evaluated analytically; the generalized family differentiates
A(x) = x a(x) exactly so that downstream Jacobian formulas receive a'(x)
without truncation error.

Models are immutable after construction and all evaluators are pure
functions of (x, p); they are safe to call concurrently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

__all__ = [
    "Kind",
    "DomainSign",
    "ConfigError",
    "HamiltonianSpec",
    "HamiltonianModel",
    "parse_spec",
    "model_from_spec",
    "derivatives",
]

# Working window used for the sign check of a(x); half-line kinds are
# sampled on one side only.
_DOMAIN_RADIUS = 2.0
_DOMAIN_SAMPLES = 81


class Kind(str, Enum):
    HEAT = "heat"
    DEGENERATE = "degenerate"
    GENERAL = "general"


class DomainSign(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    BOTH = "both"


class ConfigError(ValueError):
    """Raised when a Hamiltonian configuration cannot be parsed."""


# (H, H_x, H_p, H_pp, H_xp, H_xx)
DerivTuple = tuple[float, float, float, float, float, float]


def _poly_eval(coeffs: tuple[float, ...], x: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _poly_diff(coeffs: tuple[float, ...]) -> tuple[float, ...]:
    if len(coeffs) <= 1:
        return (0.0,)
    return tuple(i * c for i, c in enumerate(coeffs))[1:]


def _heat_derivatives(x: float, p: float) -> DerivTuple:
    return (p * p, 0.0, 2.0 * p, 2.0, 0.0, 0.0)


def _make_quadratic_family(a_coeffs: tuple[float, ...]) -> Callable[[float, float], DerivTuple]:
    """Derivative evaluator for H = (A(x) p)^2 with A(x) = x a(x)."""
    ad_coeffs = _poly_diff(a_coeffs)
    add_coeffs = _poly_diff(ad_coeffs)

    def derivs(x: float, p: float) -> DerivTuple:
        a = _poly_eval(a_coeffs, x)
        ap = _poly_eval(ad_coeffs, x)
        app = _poly_eval(add_coeffs, x)
        A = x * a
        Ad = a + x * ap
        Add = 2.0 * ap + x * app
        Ap = A * p
        AA = A * A
        AAd = A * Ad
        pp = p * p
        return (
            Ap * Ap,                      # H
            2.0 * AAd * pp,               # H_x
            2.0 * AA * p,                 # H_p
            2.0 * AA,                     # H_pp
            4.0 * AAd * p,                # H_xp
            2.0 * (Ad * Ad + A * Add) * pp,  # H_xx
        )

    return derivs


@dataclass(frozen=True)
class HamiltonianSpec:
    """Declarative description of a Hamiltonian family."""

    kind: Kind
    a_poly: tuple[float, ...] | None = None
    domain_sign: DomainSign = DomainSign.POSITIVE


@dataclass(frozen=True)
class HamiltonianModel:
    """Evaluator bundle for one Hamiltonian: H and its five partials."""

    spec: HamiltonianSpec
    _derivs: Callable[[float, float], DerivTuple] = field(repr=False)
    _a_coeffs: tuple[float, ...] = field(repr=False, default=(1.0,))

    @property
    def kind(self) -> Kind:
        return self.spec.kind

    def derivatives(self, x: float, p: float) -> DerivTuple:
        """Return (H, H_x, H_p, H_pp, H_xp, H_xx) at the point (x, p)."""
        return self._derivs(x, p)

    def H(self, x: float, p: float) -> float:
        return self._derivs(x, p)[0]

    def H_x(self, x: float, p: float) -> float:
        return self._derivs(x, p)[1]

    def H_p(self, x: float, p: float) -> float:
        return self._derivs(x, p)[2]

    def H_pp(self, x: float, p: float) -> float:
        return self._derivs(x, p)[3]

    def H_xp(self, x: float, p: float) -> float:
        return self._derivs(x, p)[4]

    def H_xx(self, x: float, p: float) -> float:
        return self._derivs(x, p)[5]

    # Coefficient accessors for the x^2 a^2(x) p^2 families.  The heat
    # kind has no diffusion profile of this shape and is rejected.

    def a_value(self, x: float) -> float:
        self._require_quadratic_family()
        return _poly_eval(self._a_coeffs, x)

    def a_prime(self, x: float) -> float:
        self._require_quadratic_family()
        return _poly_eval(_poly_diff(self._a_coeffs), x)

    def A_value(self, x: float) -> float:
        """A(x) = x a(x), the square root of the diffusion profile."""
        return x * self.a_value(x)

    def _require_quadratic_family(self) -> None:
        if self.kind is Kind.HEAT:
            raise ValueError("a(x) is only defined for degenerate/general kinds")


def _domain_sample(sign: DomainSign) -> list[float]:
    n = _DOMAIN_SAMPLES
    r = _DOMAIN_RADIUS
    if sign is DomainSign.POSITIVE:
        return [r * i / (n - 1) for i in range(n)]
    if sign is DomainSign.NEGATIVE:
        return [-r * i / (n - 1) for i in range(n)]
    return [-r + 2.0 * r * i / (2 * n - 2) for i in range(2 * n - 1)]


def model_from_spec(spec: HamiltonianSpec) -> HamiltonianModel:
    """Build the evaluator bundle, checking a(x) != 0 on the working window."""
    if spec.kind is Kind.HEAT:
        return HamiltonianModel(spec, _heat_derivatives)
    if spec.kind is Kind.DEGENERATE:
        return HamiltonianModel(spec, _make_quadratic_family((1.0,)), (1.0,))

    coeffs = spec.a_poly
    if not coeffs:
        raise ConfigError("kind=general requires a nonempty a_poly")
    scale = max(1.0, max(abs(c) for c in coeffs))
    for x in _domain_sample(spec.domain_sign):
        if abs(_poly_eval(coeffs, x)) <= 1e-9 * scale:
            raise ConfigError(
                f"a(x) vanishes near x={x:.4g} on the declared domain "
                f"({spec.domain_sign.value}, radius {_DOMAIN_RADIUS})"
            )
    return HamiltonianModel(spec, _make_quadratic_family(coeffs), coeffs)


def parse_spec(config: str | dict) -> HamiltonianModel:
    """Parse a structured-text Hamiltonian description into a model.

    Accepts a JSON string or an already-decoded mapping with keys
    ``kind`` (required), ``a_poly`` (required iff kind is "general") and
    ``domain_sign`` (optional; defaults to "both" for heat, "positive"
    otherwise).
    """
    if isinstance(config, str):
        try:
            config = json.loads(config)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("configuration must be a JSON object")

    unknown = set(config) - {"kind", "a_poly", "domain_sign"}
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    if "kind" not in config:
        raise ConfigError("missing required key 'kind'")
    try:
        kind = Kind(config["kind"])
    except ValueError as exc:
        raise ConfigError(f"unknown kind {config['kind']!r}") from exc

    a_poly = config.get("a_poly")
    if kind is Kind.GENERAL:
        if not a_poly:
            raise ConfigError("kind=general requires a nonempty a_poly")
        try:
            a_poly = tuple(float(c) for c in a_poly)
        except (TypeError, ValueError) as exc:
            raise ConfigError("a_poly must be a list of real coefficients") from exc
        if not all(c == c and abs(c) != float("inf") for c in a_poly):
            raise ConfigError("a_poly coefficients must be finite")
    elif a_poly is not None:
        raise ConfigError(f"a_poly is only valid for kind=general, not {kind.value}")
    else:
        a_poly = None

    default_sign = DomainSign.BOTH if kind is Kind.HEAT else DomainSign.POSITIVE
    raw_sign = config.get("domain_sign")
    if raw_sign is None:
        domain_sign = default_sign
    else:
        try:
            domain_sign = DomainSign(raw_sign)
        except ValueError as exc:
            raise ConfigError(f"unknown domain_sign {raw_sign!r}") from exc

    return model_from_spec(HamiltonianSpec(kind, a_poly, domain_sign))


def derivatives(model: HamiltonianModel, x: float, p: float) -> DerivTuple:
    """Module-level alias for :meth:`HamiltonianModel.derivatives`."""
    return model.derivatives(x, p)
