import math

import numpy as np
import pytest

from nodal_lab.errors import InputError
from nodal_lab.geometry import Cube, simplex_geometry
from nodal_lab.partition import (
    PropagationMember,
    cauchy_propagation_experiment,
    default_trapezium,
    dividing_scan,
    f_recursion,
    find_min_K,
    harmonic_sine_family,
    narrow_preset_trapezium,
    linear_ramp_family,
    simplex_cover_check,
)
from nodal_lab.polynomials import HarmonicPolynomial, almansi_compose, circular_harmonic

Z = HarmonicPolynomial.zero(2)
FAST_CUBE_KW = dict(samples=3, n_radii=10, depth=1, base_n=24, boundary_n=128)


def rezk(k):
    return almansi_compose(circular_harmonic(k, "cos"), Z)


def const_fn(c=1.0):
    return almansi_compose(circular_harmonic(0, "cos", c), Z)


def test_dividing_scan_rez3():
    # index decays away from the homogeneity center: at A = 27 the strict
    # contraction threshold keeps only the central cube(s), and the half
    # threshold keeps a proper subset of the layer
    rep = dividing_scan(rezk(3), Cube(np.zeros(2), 0.4), 27, (1, 0.0),
                        "contraction", c=0.05, depth=1, cube_kwargs=FAST_CUBE_KW)
    assert abs(rep.E_Q - 3.0) <= 0.1
    assert len(rep.subcube_E) == 27     # the hyperplane-meeting layer
    assert rep.count_contraction <= 3
    assert rep.count_contraction <= rep.count_half < 27


def test_dividing_scan_constant():
    rep = dividing_scan(const_fn(), Cube(np.zeros(2), 0.3), 3, (1, 0.0),
                        "half", cube_kwargs=FAST_CUBE_KW)
    assert rep.E_Q == 0.0
    assert rep.count_half == 0 and rep.count_contraction == 0


def test_dividing_scan_recursion_bookkeeping():
    rep = dividing_scan(rezk(4), Cube(np.zeros(2), 0.3), 3, (1, 0.0),
                        "contraction", c=0.05, depth=3, cube_kwargs=FAST_CUBE_KW)
    for level in rep.levels:
        assert level.structural_ok
    T = [lv.T for lv in rep.levels]
    for a, b in zip(T, T[1:]):
        assert b <= a * 3  # A^(n-1) with A = 3


def test_dividing_scan_rejects_even_a():
    with pytest.raises(InputError):
        dividing_scan(rezk(2), Cube(np.zeros(2), 0.3), 4)
    with pytest.raises(InputError):
        dividing_scan(rezk(2), Cube(np.zeros(2), 0.3), 9, threshold_rule="median")


def test_simplex_cover_equilateral():
    S = simplex_geometry([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    chk = simplex_cover_check(S, kappa=0.5, K=3.0, c=0.02)
    assert chk.passed
    assert chk.worst_margin > 0.1


def test_simplex_cover_rejects_degenerate():
    S = simplex_geometry([[0, 0], [1, 0], [2, 0]])
    with pytest.raises(InputError):
        simplex_cover_check(S, kappa=0.1, K=1.0, c=0.02)


def test_simplex_cover_tetrahedron():
    S = simplex_geometry([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])
    chk = simplex_cover_check(S, kappa=0.5, K=4.0, c=0.01)
    assert chk.passed


def test_min_k_grows_with_c():
    S = simplex_geometry([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    ks = [find_min_K(S, c, samples=4000) for c in (0.005, 0.02, 0.08)]
    assert ks[0] <= ks[1] <= ks[2]
    assert all(simplex_cover_check(S, 0.1, k, c, samples=4000).passed
               for k, c in zip(ks, (0.005, 0.02, 0.08)))


def test_propagation_harmonic_family_alpha_half():
    members, Q, face = harmonic_sine_family(range(2, 9))
    rep = cauchy_propagation_experiment(members, Q, face, grid_n=512)
    assert not rep.degenerate
    assert all(r.included for r in rep.records)
    assert 0.4 <= rep.alpha_emp <= 0.6


def test_propagation_linear_family_alpha_one():
    members, Q, face = linear_ramp_family([0.5, 0.1, 0.02, 0.004, 0.0008])
    rep = cauchy_propagation_experiment(members, Q, face, grid_n=256)
    assert abs(rep.alpha_emp - 1.0) <= 1e-9


def test_propagation_zero_family_degenerate():
    def zero(p):
        return np.zeros(len(np.atleast_2d(p)))

    def zgrad(p):
        return np.zeros_like(np.atleast_2d(p), dtype=float)

    members = [PropagationMember(u=zero, grad=zgrad, label="zero")] * 3
    Q = Cube(np.array([0.5, 0.5]), 0.5)
    rep = cauchy_propagation_experiment(members, Q, (1, "low"), grid_n=64)
    assert rep.degenerate


def test_propagation_excludes_violators():
    def big(p):
        return 2.0 * np.atleast_2d(p)[:, 1]

    def big_grad(p):
        p = np.atleast_2d(p)
        return np.stack([np.zeros(len(p)), np.full(len(p), 2.0)], axis=1)

    bad = PropagationMember(u=big, grad=big_grad, label="too-big")
    members, Q, face = linear_ramp_family([0.1, 0.01, 0.001])
    rep = cauchy_propagation_experiment(members + [bad], Q, face, grid_n=64)
    flags = {r.label: r.included for r in rep.records}
    assert not flags["too-big"]
    assert all(v for k, v in flags.items() if k != "too-big")


def test_trapezium_geometry():
    Q = Cube(np.array([0.5, 0.5]), 0.5)
    T = default_trapezium(Q, (1, "low"))
    assert T.base_len == 1.0 and T.top_len == 0.5 and T.height == 0.75
    assert T.contains([[0.5, 0.01]])[0]
    assert T.contains([[0.5, 0.74]])[0]
    assert not T.contains([[0.5, 0.8]])[0]
    assert not T.contains([[0.05, 0.7]])[0]   # outside the slanted side


def test_trapezium_preset_constants():
    T = narrow_preset_trapezium([0.0, 0.0], [0.0, 1.0], [1.0, 0.0], n=2)
    s = math.sqrt(2)
    assert abs(T.base_len - 1 / (16 * s)) < 1e-15
    assert abs(T.top_len - 1 / (32 * s)) < 1e-15
    assert abs(T.height - 3 / (64 * s)) < 1e-15


def test_f_recursion_alpha_arithmetic():
    fam = [rezk(2)]
    cubes = [Cube(np.zeros(2), 0.1)]
    fc = f_recursion(fam, cubes, A2=4, c=1.0, E_grid=[1.0, 2.0],
                     cube_kwargs=FAST_CUBE_KW)
    assert fc.alpha == math.log(16) / math.log(2)  # = 4


def test_f_recursion_rezk_family():
    fam = [rezk(k) for k in (2, 4, 6)]
    cubes = [Cube(np.zeros(2), hw) for hw in (0.05, 0.1, 0.2)]
    fc = f_recursion(fam, cubes, A2=9, c=0.05, cube_kwargs=FAST_CUBE_KW)
    vals = list(fc.F_values)
    assert all(b >= a for a, b in zip(vals, vals[1:]))  # non-decreasing
    assert not any(bad for e, bad in zip(fc.E_grid, fc.is_bad) if e >= 2.0)


def test_f_recursion_constant_family():
    fc = f_recursion([const_fn()], [Cube(np.zeros(2), 0.1)],
                     A2=9, c=0.05, E_grid=[0.5, 1.0], cube_kwargs=FAST_CUBE_KW)
    assert all(v == 0.0 for v in fc.F_values)
    assert not any(fc.is_bad)


def test_f_recursion_rejects_empty_family():
    with pytest.raises(InputError):
        f_recursion([], [Cube(np.zeros(2), 0.1)])
