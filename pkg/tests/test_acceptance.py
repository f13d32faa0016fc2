"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one pass/fail line; the final test runs the full suite twice
through the verifier and byte-compares the emitted reports (criterion 13).
Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import pytest

from nodal_lab import acceptance


def _report(res):
    state = "PASS" if res.passed else "FAIL"
    print(f"criterion {res.number:02d} {res.name}: {state} "
          f"({res.elapsed_s:.1f}s) {res.details}")
    assert res.passed, f"criterion {res.number} failed: {res.details}"


def test_criterion_01_frequency_exactness():
    _report(acceptance.criterion_1_frequency_exactness())


def test_criterion_02_closed_form_frequency():
    _report(acceptance.criterion_2_closed_form_frequency())


def test_criterion_03_monotonicity():
    _report(acceptance.criterion_3_monotonicity())


def test_criterion_04_l2_doubling():
    _report(acceptance.criterion_4_l2_doubling())


def test_criterion_05_doubling_exactness():
    _report(acceptance.criterion_5_doubling_exactness())


def test_criterion_06_proof_decomposition():
    # criterion 9 is a prerequisite; it runs below and also inside verify
    _report(acceptance.criterion_9_solver_convergence())
    _report(acceptance.criterion_6_proof_decomposition())


def test_criterion_07_nodal_measure():
    _report(acceptance.criterion_7_nodal_measure())


def test_criterion_08_measure_exponent():
    _report(acceptance.criterion_8_measure_exponent())


def test_criterion_09_solver_convergence():
    _report(acceptance.criterion_9_solver_convergence())


def test_criterion_10_propagation_exponent():
    _report(acceptance.criterion_10_propagation_exponent())


def test_criterion_11_partition_counts():
    _report(acceptance.criterion_11_partition_counts())


def test_criterion_12_simplex_cover():
    _report(acceptance.criterion_12_simplex_cover())


def test_criterion_13_determinism(tmp_path):
    summary = acceptance.run_suite("full", out_dir=tmp_path, quiet=True)
    results = {r.number: r for r in summary["results"]}
    det = results[13]
    print(f"criterion 13 {det.name}: {'PASS' if det.passed else 'FAIL'}")
    assert det.passed
    assert summary["all_passed"]
