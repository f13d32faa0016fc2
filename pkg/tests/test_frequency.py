import math

import numpy as np
import pytest

from nodal_lab.errors import DegenerateDenominatorError, InputError
from nodal_lab.frequency import (
    doubling_check,
    frequency_components,
    gradient_frequencies,
    monotonicity_profile,
    proof_decomposition,
)
from nodal_lab.geometry import Ball, PolarMetric, sphere_quadrature
from nodal_lab.polynomials import (
    HarmonicPolynomial,
    almansi_compose,
    circular_harmonic,
    harmonic_basis,
    random_family,
)

E2 = PolarMetric(2)
E3 = PolarMetric(3)
Z = HarmonicPolynomial.zero(2)
ORIGIN = np.zeros(2)


def rezk(k, kind="cos"):
    return almansi_compose(circular_harmonic(k, kind), Z)


def r2_fn():
    return almansi_compose(Z, circular_harmonic(0, "cos"))


@pytest.mark.parametrize("k", [1, 2, 3, 5])
@pytest.mark.parametrize("r", [0.2, 0.7])
def test_components_homogeneous(k, r):
    # boundary identity oracle: D = k pi r^(2k), H = pi r^(2k+1), N = k
    D, H, N = frequency_components(rezk(k), E2, ORIGIN, r)
    assert abs(D - k * math.pi * r ** (2 * k)) <= 1e-12 * max(1, D)
    assert abs(H - math.pi * r ** (2 * k + 1)) <= 1e-12 * max(1, H)
    assert abs(N - k) <= 1e-10


@pytest.mark.parametrize("r", [0.25, 0.5, 1.0])
def test_components_r2_closed_form(r):
    D, H, N = frequency_components(r2_fn(), E2, ORIGIN, r)
    assert abs(D - 4 * math.pi * r ** 4) <= 1e-12 * max(1, D)
    assert abs(H - 2 * math.pi * r * (r ** 4 + 16)) <= 1e-11 * H
    assert abs(N - 2 * r ** 4 / (r ** 4 + 16)) <= 1e-8


def test_components_constant():
    D, H, N = frequency_components(almansi_compose(circular_harmonic(0, "cos"), Z),
                                   E2, ORIGIN, 0.5)
    assert abs(D) <= 1e-14
    assert N == 0.0


def test_components_zero_function_degenerate():
    zero = almansi_compose(Z, Z)
    with pytest.raises(DegenerateDenominatorError):
        frequency_components(zero, E2, ORIGIN, 0.5)


def test_components_rejects_bad_radius():
    with pytest.raises(InputError):
        frequency_components(rezk(2), E2, ORIGIN, 1.5)


def test_boundary_identity_oracle():
    # independent route: D = boundary integral of (u u_r + v v_r)
    f = random_family(21, count=1, degree=5)[0]
    r = 0.6
    D, H, N = frequency_components(f, E2, ORIGIN, r)
    rule = sphere_quadrature(E2, Ball(ORIGIN, r), 2 * f.degree + 8)
    e_r = rule.nodes / np.linalg.norm(rule.nodes, axis=1)[:, None]
    u = f.evaluate(rule.nodes)
    v = f.evaluate_v(rule.nodes)
    u_r = np.sum(f.gradient(rule.nodes) * e_r, axis=1)
    v_r = np.sum(f.gradient_v(rule.nodes) * e_r, axis=1)
    D_boundary = rule.integrate(u * u_r + v * v_r)
    assert abs(D - D_boundary) <= 1e-9 * max(1.0, abs(D))


@pytest.mark.parametrize("n,degree", [(2, 8), (3, 4)])
def test_harmonic_homogeneous_frequency_any_dimension(n, degree):
    metric = E2 if n == 2 else E3
    for h in harmonic_basis(n, degree):
        k = h.poly.degree
        if k == 0:
            continue
        f = almansi_compose(h, HarmonicPolynomial.zero(n))
        for r in (0.05, 0.4, 0.9):
            _, _, N = frequency_components(f, metric, np.zeros(n), r)
            assert abs(N - k) <= 1e-8


def test_scaling_invariance_exact():
    f = random_family(5, count=1, degree=5)[0]
    base = frequency_components(f, E2, ORIGIN, 0.5)
    for c in (2.0, 0.25, -8.0):   # power-of-two scalings are exact in floats
        scaled = frequency_components(f.scale(c), E2, ORIGIN, 0.5)
        assert scaled[2] == base[2]
    other = frequency_components(f.scale(1.7), E2, ORIGIN, 0.5)
    assert abs(other[2] - base[2]) <= 1e-12 * max(1.0, abs(base[2]))


def test_h_prime_structure_euclidean():
    # flat metric: dH/dr = ((n-1)/r) H + 2 D
    f = random_family(8, count=1, degree=5)[0]
    r = 0.5
    delta = 1e-3 * r
    D, H, _ = frequency_components(f, E2, ORIGIN, r)
    _, H_hi, _ = frequency_components(f, E2, ORIGIN, r + delta)
    _, H_lo, _ = frequency_components(f, E2, ORIGIN, r - delta)
    fd = (H_hi - H_lo) / (2 * delta)
    model = H / r + 2 * D
    assert abs(fd - model) <= 0.02 * abs(model)


@pytest.mark.parametrize("k", [1, 2, 4])
def test_gradient_frequencies(k):
    gf = gradient_frequencies(rezk(k), E2, ORIGIN, 0.5)
    assert abs(gf.N1 - k) <= 1e-9
    assert abs(gf.N2 - (k - 1)) <= 1e-9


def test_gradient_frequencies_degenerate_for_constant():
    const = almansi_compose(circular_harmonic(0, "cos"), Z)
    with pytest.raises(DegenerateDenominatorError):
        gradient_frequencies(const, E2, ORIGIN, 0.5)  # N2 denominator vanishes


def test_monotonicity_profile_homogeneous():
    grid = np.geomspace(0.05, 0.8, 15)
    prof = monotonicity_profile(rezk(3), E2, ORIGIN, grid, C0=1.0)
    assert all(abs(row[3] - 3.0) < 1e-9 for row in prof.samples)
    assert all(abs(val) < 1e-7 for _, val in prof.logderiv)
    assert prof.C_emp <= 1e-9
    assert prof.growth_ok and prof.floor_ok


def test_monotonicity_profile_r2():
    grid = np.geomspace(0.05, 0.8, 12)
    prof = monotonicity_profile(r2_fn(), E2, ORIGIN, grid, C0=1.0)
    # N < 1 everywhere, so the above-floor sample set is empty
    assert prof.no_samples_above_floor
    assert prof.C_emp == 0.0
    Ns = [row[3] for row in prof.samples]
    assert all(b > a for a, b in zip(Ns, Ns[1:]))  # increasing in r


def test_monotonicity_profile_rejects_bad_grid():
    with pytest.raises(InputError):
        monotonicity_profile(rezk(2), E2, ORIGIN, [0.1, 0.2, 0.15, 0.3, 0.4], 1.0)
    with pytest.raises(DegenerateDenominatorError):
        monotonicity_profile(almansi_compose(Z, Z), E2, ORIGIN,
                             np.geomspace(0.05, 0.5, 6), 1.0)


def test_monotonicity_family_stability():
    grid = np.geomspace(0.05, 0.8, 25)
    for f in random_family(31, count=5, degree=6):
        base = 2 * f.degree + 8
        pa = monotonicity_profile(f, E2, ORIGIN, grid, 1.0, degree=base)
        pb = monotonicity_profile(f, E2, ORIGIN, grid, 1.0, degree=2 * base)
        assert math.isfinite(pa.C_emp)
        assert abs(pa.C_emp - pb.C_emp) <= 0.1 * max(pa.C_emp, pb.C_emp, 1e-9)


def test_doubling_check_l2_rez3():
    chk = doubling_check(rezk(3), E2, ORIGIN, 0.4, 2.0, 0.5, "L2-ball")
    assert abs(chk.ratio - 2 ** 8) <= 1e-9 * 2 ** 8
    assert chk.C_req <= 1e-9  # holds with C = 0
    assert chk.C_prime_req <= 1e-9


def test_doubling_check_sup_rezk():
    chk = doubling_check(rezk(2), E2, ORIGIN, 0.1, 4.0, 0.5, "sup-ball")
    assert abs(chk.ratio - 4.0 ** 4) <= 1e-6 * 4.0 ** 4
    assert chk.C_req <= 1e-6
    assert chk.C_prime_req <= 1e-6


def test_doubling_check_constant():
    const = almansi_compose(circular_harmonic(0, "cos"), Z)
    chk = doubling_check(const, E2, ORIGIN, 0.4, 3.0, 0.5, "L2-ball")
    assert abs(chk.ratio - 3.0 ** 2) <= 1e-10 * 9
    assert abs(chk.C_req - 2.0) <= 1e-9  # C_req = n for zero frequency


def test_doubling_check_preconditions():
    with pytest.raises(InputError):
        doubling_check(rezk(2), E2, ORIGIN, 0.4, 1.0, 0.5, "L2-ball")
    with pytest.raises(InputError):
        doubling_check(rezk(2), E2, ORIGIN, 0.1, 2.0, 0.5, "sup-ball")
    with pytest.raises(InputError):
        doubling_check(rezk(2), E2, ORIGIN, 0.4, 2.0, 0.5, "L1-ball")


def test_doubling_sup_consistency_under_refinement():
    f = random_family(17, count=1, degree=5)[0]
    a = doubling_check(f, E2, ORIGIN, 0.1, 4.0, 0.5, "sup-ball", sup_depth=3)
    b = doubling_check(f, E2, ORIGIN, 0.1, 4.0, 0.5, "sup-ball", sup_depth=4)
    assert abs(a.C_req - b.C_req) <= 0.1 * max(abs(a.C_req), abs(b.C_req), 1e-6)


# ---------------------------------------------------------------------------
# proof decomposition


def test_decomposition_harmonic_case():
    d = proof_decomposition(rezk(3), E2, ORIGIN, 0.3, n_r=2048, n_theta=8192)
    assert d.D2 <= 1e-10 * d.D
    assert abs(d.D3) <= 1e-6 * d.D
    assert abs(d.D4) <= 1e-12 * d.D
    assert abs(d.D1 - d.D) <= 1e-6 * d.D


def test_decomposition_r2_closed_form():
    r = 0.3
    d = proof_decomposition(r2_fn(), E2, ORIGIN, r, n_r=2048, n_theta=8192)
    expect = 2 * math.pi * r ** 4
    assert abs(d.D1) <= 1e-12 * d.D
    assert abs(d.D2 - expect) <= 1e-6 * expect
    assert abs(d.D3) <= 1e-9 * d.D
    assert abs(d.D4 - expect) <= 1e-6 * expect
    assert abs(d.D - 4 * math.pi * r ** 4) <= 1e-6 * d.D


def test_decomposition_x_r2():
    f = almansi_compose(Z, circular_harmonic(1, "cos"))  # u = x^3 + x y^2
    d = proof_decomposition(f, E2, ORIGIN, 0.1, n_r=2048, n_theta=8192)
    assert abs(d.D3) <= 1e-6 * d.D
    assert d.residual <= 1e-10 * abs(d.D)
    assert d.D1 >= 0 and d.D2 >= 0


def test_decomposition_matches_quadrature_d():
    f = random_family(3, count=1, degree=5)[0]
    r = 0.15
    d = proof_decomposition(f, E2, ORIGIN, r, n_r=2048, n_theta=8192)
    D_quad, _, _ = frequency_components(f, E2, ORIGIN, r)
    assert abs(d.D - D_quad) <= 1e-6 * abs(D_quad)


def test_decomposition_conformal_metric():
    metric = PolarMetric(2, "conformal", 0.2)
    f = random_family(9, count=1, degree=4)[0]
    d = proof_decomposition(f, metric, ORIGIN, 0.1, n_r=2048, n_theta=8192)
    assert abs(d.D3) <= 1e-6 * abs(d.D)
    assert d.residual <= 1e-10 * abs(d.D)
