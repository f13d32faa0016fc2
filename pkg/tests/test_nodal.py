import math

import numpy as np
import pytest

from nodal_lab.errors import InputError
from nodal_lab.geometry import Ball, Cube
from nodal_lab.nodal import (
    NodalCurveSet,
    classify_strata,
    critical_cover,
    extract_nodal_curves,
    find_gamma,
    measure_h,
    nodal_bound_report,
    separation_stability,
    stratified_bound,
)
from nodal_lab.polynomials import (
    HarmonicPolynomial,
    almansi_compose,
    circular_harmonic,
    random_family,
)

Z = HarmonicPolynomial.zero(2)
ORIGIN = np.zeros(2)


def rezk(k, kind="cos"):
    return almansi_compose(circular_harmonic(k, kind), Z)


def x_fn():
    return rezk(1)


def const_fn(c=1.0):
    return almansi_compose(circular_harmonic(0, "cos", c), Z)


def test_diameter_chord():
    curves = extract_nodal_curves(x_fn(), Ball(ORIGIN, 1.0), 512)
    assert abs(measure_h(curves) - 2.0) <= 0.005 * 2.0


def test_rezk3_six_rays():
    curves = extract_nodal_curves(rezk(3), Ball(ORIGIN, 0.5), 1024)
    assert abs(measure_h(curves) - 3.0) <= 0.02 * 3.0


def test_constant_empty():
    curves = extract_nodal_curves(const_fn(), Ball(ORIGIN, 1.0), 64)
    assert len(curves.segments) == 0
    assert measure_h(curves) == 0.0


def test_grid_convergence():
    lo = extract_nodal_curves(rezk(3), Ball(ORIGIN, 0.5), 512).total_length
    hi = extract_nodal_curves(rezk(3), Ball(ORIGIN, 0.5), 1024).total_length
    assert abs(hi - lo) / hi < 0.01


def test_rejects_small_grid_and_3d():
    with pytest.raises(InputError):
        extract_nodal_curves(x_fn(), Ball(ORIGIN, 1.0), 16)
    with pytest.raises(InputError):
        extract_nodal_curves(x_fn(), Ball(np.zeros(3), 1.0), 64)


def test_bitwise_scale_invariance():
    f = random_family(13, count=1, degree=5)[0]
    region = Cube(ORIGIN, 0.5)
    base = extract_nodal_curves(f, region, 128)
    for c in (4.0, -2.0, -0.25):   # exact float scalings, sign included
        scaled = extract_nodal_curves(f.scale(c), region, 128)
        np.testing.assert_array_equal(scaled.segments, base.segments)


def test_segment_endpoints_on_cell_edges_or_boundary():
    region = Ball(ORIGIN, 0.5)
    grid_n = 128
    curves = extract_nodal_curves(rezk(2), region, grid_n)
    xs = np.linspace(-0.5, 0.5, grid_n)
    for seg in curves.segments[:200]:
        for pt in seg:
            on_x = np.min(np.abs(pt[0] - xs)) < 1e-12
            on_y = np.min(np.abs(pt[1] - xs)) < 1e-12
            on_circle = abs(np.linalg.norm(pt) - 0.5) < 1e-12
            assert on_x or on_y or on_circle


def test_midpoint_residual_bound():
    f = rezk(3)
    curves = extract_nodal_curves(f, Ball(ORIGIN, 0.5), 256)
    mids = curves.midpoints()
    vals = np.abs(f.evaluate(mids))
    grad = np.linalg.norm(f.gradient(mids), axis=1)
    hess = np.sqrt(np.sum(f.hessian(mids) ** 2, axis=(1, 2)))
    h = curves.h
    local_bound = grad + h * hess
    assert np.all(vals <= 10.0 * local_bound * h)


def test_measure_trivial_cases():
    empty = NodalCurveSet(np.zeros((0, 2, 2)), 0.1, None)
    assert measure_h(empty) == 0.0
    one = NodalCurveSet(np.array([[[0.0, 0.0], [1.0, 0.0]]]), 0.1, None)
    assert measure_h(one) == 1.0


def test_strata_hand_labels():
    assert classify_strata(x_fn(), [(0.0, 0.3)])[0].label == "C1"
    assert classify_strata(rezk(2), [(0.0, 0.0)])[0].label == "C2"
    assert classify_strata(rezk(3), [(0.0, 0.0)])[0].label == "C3"
    assert classify_strata(rezk(4), [(0.0, 0.0)])[0].label == "C4"


def test_strata_exhaustive_exclusive():
    f = random_family(2, count=1, degree=5)[0]
    pts = np.random.default_rng(0).uniform(-0.5, 0.5, size=(50, 2))
    labels = classify_strata(f, pts)
    assert all(lab.label in ("C1", "C2", "C3", "C4") for lab in labels)
    assert len(labels) == 50


def test_separation_identical_lines():
    rec = separation_stability(x_fn(), x_fn(), 0.04)
    assert abs(rec.m1 - 1.92) <= 0.01
    assert abs(rec.m2 - 2.0) <= 0.01
    assert rec.factor <= 1.0 + 1.0 * math.sqrt(0.04)


def test_separation_shifted_line():
    eta = 0.04
    w2 = almansi_compose(circular_harmonic(1, "cos")
                         + circular_harmonic(0, "cos", eta ** 5 / 2), Z)
    rec = separation_stability(x_fn(), w2, eta)
    assert abs(rec.factor - 0.96) <= 0.01


def test_separation_vacuous_for_constants():
    # constant 1 has C1 norm exactly 1 and empty nodal set
    rec = separation_stability(const_fn(1.0), const_fn(1.0), 0.04)
    assert rec.vacuous


def test_separation_rejects_distant_pair():
    w2 = almansi_compose(circular_harmonic(1, "cos")
                         + circular_harmonic(0, "cos", 0.01), Z)
    with pytest.raises(InputError):
        separation_stability(x_fn(), w2, 0.04)   # 0.01 >> eta^5/2


def test_separation_rejects_large_norm():
    with pytest.raises(InputError):
        separation_stability(rezk(1, "cos").scale(3.0), rezk(1, "cos").scale(3.0), 0.04)


def test_critical_cover_no_candidates():
    rep = critical_cover(x_fn(), Ball(ORIGIN, 1.0), gamma=0.5, r_cap=0.1)
    assert len(rep.balls) == 0
    assert rep.sum_pow == 0.0


def test_critical_cover_rez2():
    rep = critical_cover(rezk(2), Ball(ORIGIN, 0.5), gamma=0.1, r_cap=0.05)
    assert rep.sum_pow <= 0.1
    assert rep.residual == 0.0
    assert all(np.linalg.norm(b.center) <= 0.06 for b in rep.balls)
    # centers belong to the candidate set
    for b in rep.balls:
        g = np.linalg.norm(rezk(2).gradient(b.center[None, :]), axis=1)[0]
        assert g < 0.1


def test_critical_cover_rez3_budget():
    # weak-gradient set is |z| < sqrt(gamma/3) ~ 0.129, so the first ball must
    # be at least that large for full coverage
    rep = critical_cover(rezk(3), Ball(ORIGIN, 0.5), gamma=0.05, r_cap=0.15)
    assert rep.sum_pow < 0.5
    assert rep.budget_ok
    assert rep.residual == 0.0


def test_critical_cover_reports_uncoverable_residual():
    # with the cap too small the leftover candidate length is reported
    rep = critical_cover(rezk(3), Ball(ORIGIN, 0.5), gamma=0.05, r_cap=1 / 60)
    assert rep.residual > 0.0
    assert rep.sum_pow < 0.5


def test_find_gamma_positive():
    g = find_gamma(rezk(2), Ball(ORIGIN, 0.5), r_cap=0.05, grid_n=256)
    assert g > 0.0
    rep = critical_cover(rezk(2), Ball(ORIGIN, 0.5), g, 0.05, grid_n=256)
    assert rep.sum_pow <= 0.5


def test_stratified_bound_rez3():
    rep = stratified_bound(rezk(3), ORIGIN, 0.5, grid_n=512, depth=1)
    assert rep.budget_ok
    assert rep.uv_trick_ok
    level0 = rep.levels[0]
    # outside the origin ball everything is C1
    assert set(level0.measures) == {"C1"}
    assert 2.0 <= level0.measures["C1"] <= 3.0
    assert abs(rep.N1 - 3.0) <= 1e-8


def test_stratified_bound_line():
    rep = stratified_bound(x_fn(), ORIGIN, 0.5, grid_n=256, depth=1)
    level0 = rep.levels[0]
    assert len(level0.cover.balls) == 0
    assert set(level0.measures) == {"C1"}
    assert abs(level0.measures["C1"] - 1.0) <= 0.01


def test_stratified_bound_constant():
    rep = stratified_bound(const_fn(), ORIGIN, 0.5, grid_n=128, depth=1)
    assert rep.total_measure == 0.0


def test_sampled_c4_points_are_isolated():
    # the deepest stratum should appear only at isolated points: midpoints of
    # extracted segments never hit an exact zero of all three jets, so C4
    # labels can only come from deliberately sampled exact points
    f = rezk(4)
    curves = extract_nodal_curves(f, Ball(ORIGIN, 0.5), 256)
    pts = np.vstack([curves.midpoints(), [[0.0, 0.0]]])
    labels = classify_strata(f, pts)
    c4 = np.array([lab.point for lab in labels if lab.label == "C4"])
    assert len(c4) >= 1
    if len(c4) > 1:
        d = np.sqrt(((c4[:, None, :] - c4[None, :, :]) ** 2).sum(-1))
        assert np.min(d[d > 0]) > 2 * curves.h


def test_uv_sign_mutation_is_detectable():
    # flipping the sign of the u*v term in D breaks the closed form for
    # u = |x|^2, which is what the acceptance suite pins down
    from nodal_lab.geometry import ball_quadrature
    f = almansi_compose(Z, circular_harmonic(0, "cos"))
    r = 0.5
    rule = ball_quadrature(
        __import__("nodal_lab.geometry", fromlist=["PolarMetric"]).PolarMetric(2),
        Ball(ORIGIN, r), 12)
    gu = f.gradient(rule.nodes)
    u = f.evaluate(rule.nodes)
    v = f.evaluate_v(rule.nodes)
    D_flipped = rule.integrate(np.sum(gu ** 2, axis=1) - u * v)
    assert abs(D_flipped - 4 * math.pi * r ** 4) > 0.5 * 4 * math.pi * r ** 4


def test_nodal_bound_report_rezk_family():
    family = [rezk(k) for k in range(1, 9)]
    rep = nodal_bound_report(family, ORIGIN, 1.0, grid_n=512)
    assert abs(rep.alpha_emp - 1.0) <= 0.05
    assert rep.bound_holds
    for k, row in enumerate(rep.rows, start=1):
        assert abs(row.measure - k) <= 0.03 * k
        assert abs(row.N - k) <= 1e-8


def test_nodal_bound_report_constants():
    rep = nodal_bound_report([const_fn(c) for c in (1.0, 2.0)], ORIGIN, 1.0,
                             grid_n=64)
    assert all(row.measure == 0.0 for row in rep.rows)
    assert math.isnan(rep.alpha_emp)
    assert rep.bound_holds


def test_nodal_bound_report_mixed_family():
    rep = nodal_bound_report(random_family(44, count=6, degree=5), ORIGIN, 1.0,
                             grid_n=256)
    for row in rep.rows:
        if not row.skipped:
            assert math.isfinite(row.ratio)
