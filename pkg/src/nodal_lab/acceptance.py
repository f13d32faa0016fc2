"""Acceptance criteria: one callable per criterion, plus the suite runner.

Each criterion function is deterministic and returns a CriterionResult whose
`details` dict contains only reproducible values (no wall-clock data), so the
emitted verification reports are byte-stable run to run; that stability is
itself the final criterion.
"""

from __future__ import annotations

import filecmp
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nodal, partition, solver
from .doubling import changing_center_check, doubling_index
from .errors import InputError
from .frequency import (doubling_check, frequency_components,
                        monotonicity_profile, proof_decomposition)
from .geometry import Ball, Cube, PolarMetric, simplex_geometry
from .harness import ReportRow, emit_report
from .polynomials import (HarmonicPolynomial, almansi_compose, circular_harmonic,
                          random_family)

E2 = PolarMetric(2)
ZERO_H = HarmonicPolynomial.zero(2)


def _rezk(k: int):
    return almansi_compose(circular_harmonic(k, "cos"), ZERO_H)


def _r2():
    return almansi_compose(ZERO_H, circular_harmonic(0, "cos"))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    elapsed_s: float = 0.0


def criterion_1_frequency_exactness() -> CriterionResult:
    """|N(0, r) - k| <= 1e-8 for u = Re z^k, k = 1..8, 10 radii; under 5 s."""
    t0 = time.perf_counter()
    radii = np.linspace(0.05, 0.8, 10)
    worst = 0.0
    for k in range(1, 9):
        f = _rezk(k)
        for r in radii:
            _, _, N = frequency_components(f, E2, np.zeros(2), float(r))
            worst = max(worst, abs(N - k))
    elapsed = time.perf_counter() - t0
    return CriterionResult(1, "frequency-exactness", worst <= 1e-8 and elapsed < 5.0,
                           {"worst_abs_error": worst, "tolerance": 1e-8},
                           elapsed)


def criterion_2_closed_form_frequency() -> CriterionResult:
    """u = |x|^2: N(0, r) = 2 r^4 / (r^4 + 16) at r in {0.25, 0.5, 1.0}."""
    t0 = time.perf_counter()
    f = _r2()
    worst = 0.0
    for r in (0.25, 0.5, 1.0):
        _, _, N = frequency_components(f, E2, np.zeros(2), r)
        worst = max(worst, abs(N - 2 * r ** 4 / (r ** 4 + 16.0)))
    return CriterionResult(2, "closed-form-frequency", worst <= 1e-8,
                           {"worst_abs_error": worst, "tolerance": 1e-8},
                           time.perf_counter() - t0)


def criterion_3_monotonicity() -> CriterionResult:
    """C_emp finite and stable under quadrature-degree doubling; under 60 s."""
    t0 = time.perf_counter()
    family = random_family(1234, count=20, degree=6)
    grid = np.geomspace(0.05, 0.8, 40)
    drift = 0.0
    worst_c = 0.0
    finite = True
    for f in family:
        base_degree = 2 * max(f.degree, 1) + 8
        prof_a = monotonicity_profile(f, E2, np.zeros(2), grid, 1.0, degree=base_degree)
        prof_b = monotonicity_profile(f, E2, np.zeros(2), grid, 1.0, degree=2 * base_degree)
        finite &= math.isfinite(prof_a.C_emp) and math.isfinite(prof_b.C_emp)
        scale = max(prof_a.C_emp, prof_b.C_emp, 1e-9)
        drift = max(drift, abs(prof_a.C_emp - prof_b.C_emp) / scale)
        worst_c = max(worst_c, prof_a.C_emp)
    elapsed = time.perf_counter() - t0
    return CriterionResult(3, "almost-monotonicity",
                           finite and drift < 0.10 and elapsed < 60.0,
                           {"max_C_emp": worst_c, "max_drift": drift},
                           elapsed)


def criterion_4_l2_doubling() -> CriterionResult:
    """Upper doubling constant <= 10 over the family; exact ratio for Re z^3."""
    t0 = time.perf_counter()
    family = random_family(1234, count=20, degree=6)
    worst_C = -math.inf
    for f in family:
        for t in (2.0, 4.0):
            chk = doubling_check(f, E2, np.zeros(2), 0.4, t, 0.5, "L2-ball")
            worst_C = max(worst_C, chk.C_req)
    rez3 = _rezk(3)
    chk3 = doubling_check(rez3, E2, np.zeros(2), 0.4, 2.0, 0.5, "L2-ball")
    ratio_err = abs(chk3.ratio - 2.0 ** 8) / 2.0 ** 8
    return CriterionResult(4, "l2-doubling",
                           worst_C <= 10.0 and ratio_err <= 1e-9,
                           {"fitted_C": worst_C, "rez3_ratio_rel_err": ratio_err},
                           time.perf_counter() - t0)


def criterion_5_doubling_exactness() -> CriterionResult:
    """E(0, r) = k at depth 5; 99/100 center change for 10 seeded cases.

    Offsets are drawn with |x1 - x2| <= 0.02 rho: with sups centered at x2
    and C_factor pinned at 4, homogeneous functions satisfy the 99/100
    inequality exactly in that offset range (see the decisions ledger for
    the arithmetic).
    """
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(1, 9):
        f = _rezk(k)
        for r in (0.25, 0.5):
            E = doubling_index(f, np.zeros(2), r, depth=5)
            worst = max(worst, abs(E - k))
    rng = np.random.default_rng(777)
    centers_ok = True
    for i in range(10):
        k = 3 + i % 5
        f = _rezk(k)
        rho = float(rng.uniform(0.05, 0.2))
        ang = float(rng.uniform(0.0, 2.0 * math.pi))
        d = 0.02 * rho * float(rng.uniform(0.5, 1.0))
        x2 = np.array([d * math.cos(ang), d * math.sin(ang)])
        rec = changing_center_check(f, np.zeros(2), x2, rho, 4.0, depth=5)
        centers_ok &= rec.passed
    return CriterionResult(5, "doubling-exactness",
                           worst <= 1e-6 and centers_ok,
                           {"worst_E_error": worst, "center_change_ok": centers_ok},
                           time.perf_counter() - t0)


def criterion_9_solver_convergence() -> CriterionResult:
    """Manufactured error ratios in [3.5, 4.5] per mesh halving; under 60 s."""
    t0 = time.perf_counter()
    ball = Ball(np.zeros(2), 0.5)
    rez3 = _rezk(3)
    grids = [(32, 64), (64, 128), (128, 256), (256, 512)]

    errs_a = []
    op = solver.identity_operator()
    for n_r, n_t in grids:
        fld = solver.solve_laplace(op, ball, rez3, n_r=n_r, n_theta=n_t, method="pcg")
        pts = fld.nodes().reshape(-1, 2)
        errs_a.append(float(np.max(np.abs(fld.values.reshape(-1) - rez3.evaluate(pts)))))
    ratios_a = [errs_a[i] / errs_a[i + 1] for i in range(len(errs_a) - 1)]

    u2 = _r2()
    errs_b = []
    for n_r, n_t in grids:
        uf, _ = solver.solve_split_biharmonic(E2, ball, u2, u2.v_harmonic,
                                              n_r=n_r, n_theta=n_t, method="fft")
        pts = uf.nodes().reshape(-1, 2)
        errs_b.append(float(np.max(np.abs(uf.values.reshape(-1) - u2.evaluate(pts)))))
    ratios_b = [errs_b[i] / errs_b[i + 1] for i in range(len(errs_b) - 1)]

    ok = all(3.5 <= q <= 4.5 for q in ratios_a + ratios_b)
    elapsed = time.perf_counter() - t0
    details = {"ratios_harmonic": tuple(ratios_a), "ratios_split": tuple(ratios_b)}
    return CriterionResult(9, "solver-convergence", ok and elapsed < 60.0,
                           details, elapsed)


def criterion_6_proof_decomposition() -> CriterionResult:
    """|D3| <= 1e-6 D and |D - sum| <= 1e-6 D for 10 functions x 3 radii."""
    t0 = time.perf_counter()
    family = [_rezk(3), _r2(),
              almansi_compose(ZERO_H, circular_harmonic(1, "cos"))]
    family += random_family(99, count=7, degree=6)
    worst_d3 = 0.0
    worst_res = 0.0
    for f in family:
        for r in (0.05, 0.1, 0.15):
            d = proof_decomposition(f, E2, np.zeros(2), r)
            scale = abs(d.D)
            worst_d3 = max(worst_d3, abs(d.D3) / scale)
            worst_res = max(worst_res, d.residual / scale)
    ok = worst_d3 <= 1e-6 and worst_res <= 1e-6
    return CriterionResult(6, "proof-decomposition", ok,
                           {"worst_D3_rel": worst_d3, "worst_residual_rel": worst_res},
                           time.perf_counter() - t0)


def criterion_7_nodal_measure() -> CriterionResult:
    """Re z^3 in B_{1/2}: length 3.0 +- 2% at grid 1024; halving drift < 1%."""
    t0 = time.perf_counter()
    rez3 = _rezk(3)
    ball = Ball(np.zeros(2), 0.5)
    len_hi = nodal.extract_nodal_curves(rez3, ball, 1024).total_length
    len_lo = nodal.extract_nodal_curves(rez3, ball, 512).total_length
    rel_err = abs(len_hi - 3.0) / 3.0
    cauchy = abs(len_hi - len_lo) / len_hi
    elapsed = time.perf_counter() - t0
    return CriterionResult(7, "nodal-measure",
                           rel_err <= 0.02 and cauchy < 0.01 and elapsed < 10.0,
                           {"length_1024": len_hi, "rel_err": rel_err,
                            "grid_halving_rel_diff": cauchy},
                           elapsed)


def criterion_8_measure_exponent() -> CriterionResult:
    """Slope of log measure vs log N is 1 +- 0.05 for Re z^k, with envelope C."""
    t0 = time.perf_counter()
    family = [_rezk(k) for k in range(1, 9)]
    rep = nodal.nodal_bound_report(family, np.zeros(2), 1.0, grid_n=512)
    ok = (abs(rep.alpha_emp - 1.0) <= 0.05) and rep.bound_holds
    return CriterionResult(8, "measure-exponent", ok,
                           {"alpha_emp": rep.alpha_emp, "C_fit": rep.C_fit},
                           time.perf_counter() - t0)


def criterion_10_propagation_exponent() -> CriterionResult:
    """Harmonic model family: fitted smallness exponent in [0.4, 0.6]."""
    t0 = time.perf_counter()
    members, Q, face = partition.harmonic_sine_family(range(2, 9))
    rep = partition.cauchy_propagation_experiment(members, Q, face, grid_n=512)
    ok = (not rep.degenerate) and 0.4 <= rep.alpha_emp <= 0.6 \
        and all(r.included for r in rep.records)
    return CriterionResult(10, "propagation-exponent", ok,
                           {"alpha_emp": rep.alpha_emp, "alpha_trap": rep.alpha_trap},
                           time.perf_counter() - t0)


def criterion_11_partition_counts() -> CriterionResult:
    """Re z^6 scan: exceedance count < A^{n-1}/2; strata labels reproduce."""
    t0 = time.perf_counter()
    rez6 = _rezk(6)
    rep = partition.dividing_scan(rez6, Cube(np.zeros(2), 0.4), 27, (1, 0.0),
                                  "contraction", c=0.05, depth=1)
    count_ok = rep.count_contraction < 0.5 * 27
    labels = []
    for k in (1, 2, 3, 4):
        f = _rezk(k)
        labels.append(nodal.classify_strata(f, [(0.0, 0.0)])[0].label)
    strata_ok = labels == ["C1", "C2", "C3", "C4"]
    return CriterionResult(11, "partition-counts", count_ok and strata_ok,
                           {"E_Q": rep.E_Q, "count_contraction": rep.count_contraction,
                            "labels": tuple(labels)},
                           time.perf_counter() - t0)


def criterion_12_simplex_cover() -> CriterionResult:
    """Regular simplices pass at a bisected K (c = 0.02); degenerate rejected."""
    t0 = time.perf_counter()
    tri = simplex_geometry([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    tet = simplex_geometry([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])
    results = {}
    ok = True
    for name, S in (("triangle", tri), ("tetrahedron", tet)):
        K0 = float(partition.find_min_K(S, c=0.02, samples=10_000))
        chk = partition.simplex_cover_check(S, kappa=S.width / 2, K=K0, c=0.02,
                                            samples=10_000)
        results[f"K0_{name}"] = K0
        ok &= chk.passed
    try:
        degenerate = simplex_geometry([[0, 0], [1, 0], [2, 0]])
        partition.simplex_cover_check(degenerate, kappa=0.1, K=1.0, c=0.02)
        rejected = False
    except InputError:
        rejected = True
    return CriterionResult(12, "simplex-cover", ok and rejected,
                           {**results, "degenerate_rejected": rejected},
                           time.perf_counter() - t0)


FAST_CRITERIA = (
    criterion_1_frequency_exactness,
    criterion_2_closed_form_frequency,
    criterion_4_l2_doubling,
    criterion_5_doubling_exactness,
    criterion_9_solver_convergence,
    criterion_7_nodal_measure,
    criterion_12_simplex_cover,
)

# criterion 6 depends on 9, so 9 runs first in the full ordering
FULL_CRITERIA = (
    criterion_1_frequency_exactness,
    criterion_2_closed_form_frequency,
    criterion_3_monotonicity,
    criterion_4_l2_doubling,
    criterion_5_doubling_exactness,
    criterion_9_solver_convergence,
    criterion_6_proof_decomposition,
    criterion_7_nodal_measure,
    criterion_8_measure_exponent,
    criterion_10_propagation_exponent,
    criterion_11_partition_counts,
    criterion_12_simplex_cover,
)


def _normalize_detail(value):
    if isinstance(value, (tuple, list)):
        return " ".join(repr(_normalize_detail(v)) for v in value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return str(value)


def _run_pass(criteria, quiet: bool) -> list[CriterionResult]:
    results = []
    failed_numbers = set()
    for fn in criteria:
        res = fn()
        if res.number == 6 and 9 in failed_numbers:
            res.passed = False
            res.details["note"] = "solver convergence prerequisite failed"
        if not res.passed:
            failed_numbers.add(res.number)
        results.append(res)
        if not quiet:
            state = "PASS" if res.passed else "FAIL"
            print(f"criterion {res.number:02d} {res.name}: {state} "
                  f"({res.elapsed_s:.1f}s)")
            if not res.passed:
                print(f"    details: {res.details}")
    return results


def _report_rows(results: list[CriterionResult]) -> list[ReportRow]:
    rows = []
    for i, res in enumerate(results):
        values = {"criterion": res.number, "name": res.name, "passed": res.passed}
        for k, v in res.details.items():
            values[k] = _normalize_detail(v)
        rows.append(ReportRow("verify", i, "acceptance", values))
    return rows


def run_suite(level: str = "fast", out_dir=None, quiet: bool = False) -> dict:
    """Run the acceptance suite at the given level.

    fast: a subset that finishes in well under two minutes.
    full: all criteria, run twice with byte-compared reports (the
    determinism criterion).
    """
    if level not in ("fast", "full"):
        raise InputError("level must be 'fast' or 'full'")
    criteria = FULL_CRITERIA if level == "full" else FAST_CRITERIA
    out_dir = Path(out_dir) if out_dir is not None else Path(".nodal-lab-verify")
    t0 = time.perf_counter()
    results = _run_pass(criteria, quiet)
    paths_a = emit_report(_report_rows(results), "csv", out_dir / "pass_a" / "report")
    paths_a += emit_report(_report_rows(results), "json", out_dir / "pass_a" / "report")

    determinism = None
    if level == "full":
        results_b = _run_pass(criteria, quiet=True)
        paths_b = emit_report(_report_rows(results_b), "csv", out_dir / "pass_b" / "report")
        paths_b += emit_report(_report_rows(results_b), "json", out_dir / "pass_b" / "report")
        identical = all(filecmp.cmp(a, b, shallow=False)
                        for a, b in zip(paths_a, paths_b))
        determinism = CriterionResult(13, "determinism", identical,
                                      {"files_compared": len(paths_a)},
                                      time.perf_counter() - t0)
        results.append(determinism)
        if not quiet:
            state = "PASS" if identical else "FAIL"
            print(f"criterion 13 {determinism.name}: {state}")

    n_pass = sum(1 for r in results if r.passed)
    summary = {
        "level": level,
        "criteria_run": len(results),
        "passed": n_pass,
        "failed": len(results) - n_pass,
        "all_passed": n_pass == len(results),
        "elapsed_s": time.perf_counter() - t0,
        "results": results,
        "report_paths": [str(p) for p in paths_a],
    }
    if not quiet:
        print(f"{n_pass}/{len(results)} criteria passed "
              f"({summary['elapsed_s']:.1f}s, level={level})")
    return summary
