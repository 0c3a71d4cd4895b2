"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the
per-criterion lines immediately) or via ``wkb-green validate all``.
"""

import pytest

from wkb_green import acceptance


def _report(outcome):
    status = "PASS" if outcome.passed else "FAIL"
    print(f"[{status}] {outcome.name}: {outcome.detail} "
          f"({outcome.runtime_s:.2f} s)")
    assert outcome.passed, f"{outcome.name}: {outcome.detail}"


def test_criterion_1_heat_kernel_exactness():
    _report(acceptance.heat_kernel_exactness())


def test_criterion_2_heat_intermediates():
    _report(acceptance.heat_intermediates())


def test_criterion_3_degenerate_characteristics():
    _report(acceptance.degenerate_characteristics())


def test_criterion_4_beta_family_mass():
    _report(acceptance.beta_family_mass())


def test_criterion_5_small_time_consistency():
    _report(acceptance.small_time_consistency())


def test_criterion_6_oracle_agreement():
    _report(acceptance.oracle_agreement())


def test_criterion_7_moment_law_and_confinement():
    _report(acceptance.moment_and_confinement())


def test_criterion_8_positivity_and_path_consistency():
    _report(acceptance.positivity_and_path_consistency())


def test_suite_registry_covers_all_criteria():
    names = {fn.__name__ for fns in acceptance.SUITES.values() for fn in fns}
    assert names == {
        "heat_kernel_exactness", "heat_intermediates",
        "degenerate_characteristics", "beta_family_mass",
        "small_time_consistency", "oracle_agreement",
        "moment_and_confinement", "positivity_and_path_consistency",
    }


def test_run_suite_rejects_unknown():
    with pytest.raises(ValueError):
        acceptance.run_suite("everything")
