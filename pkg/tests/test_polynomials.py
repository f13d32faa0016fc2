import numpy as np
import pytest

from nodal_lab.errors import DimensionMismatchError, InputError
from nodal_lab.geometry import Ball
from nodal_lab.polynomials import (
    BiharmonicFunction,
    HarmonicPolynomial,
    Poly,
    almansi_compose,
    biharmonic_residual,
    circular_harmonic,
    evaluate_jet,
    fd_laplacian,
    function_from_dict,
    function_to_dict,
    harmonic_basis,
    random_family,
    solid_harmonic_table,
)

RNG = np.random.default_rng(2024)


def zero_h(n=2):
    return HarmonicPolynomial.zero(n)


def test_almansi_harmonic_case_has_zero_v():
    f = almansi_compose(circular_harmonic(2, "cos"), zero_h())
    assert f.v_poly.terms == {}
    pts = RNG.uniform(-1, 1, size=(50, 2))
    np.testing.assert_allclose(f.evaluate(pts), pts[:, 0] ** 2 - pts[:, 1] ** 2)


def test_almansi_r2():
    # u = |x|^2, v = 4 (symbolic Laplacian oracle: Lap(x^2+y^2) = 4)
    f = almansi_compose(zero_h(), circular_harmonic(0, "cos"))
    assert f.u_poly.terms == {(2, 0): 1.0, (0, 2): 1.0}
    assert f.v_poly.terms == {(0, 0): 4.0}


def test_almansi_x_times_r2():
    # u = x^3 + x y^2, v = 8x
    f = almansi_compose(zero_h(), circular_harmonic(1, "cos"))
    assert f.u_poly.terms == {(3, 0): 1.0, (1, 2): 1.0}
    assert f.v_poly.terms == {(1, 0): 8.0}


def test_almansi_dimension_mismatch_rejected():
    with pytest.raises(DimensionMismatchError):
        almansi_compose(HarmonicPolynomial.zero(2), HarmonicPolynomial.zero(3))


@pytest.mark.parametrize("n,degree,count", [(2, 0, 1), (2, 2, 5), (2, 5, 11), (3, 1, 4), (3, 3, 16)])
def test_harmonic_basis_counts(n, degree, count):
    basis = harmonic_basis(n, degree)
    assert len(basis) == count
    seen = {tuple(sorted(h.poly.terms.items())) for h in basis}
    assert len(seen) == count  # pairwise distinct


def test_harmonic_basis_degree2_exact():
    polys = [h.poly.terms for h in harmonic_basis(2, 2)]
    assert polys == [
        {(0, 0): 1.0},
        {(1, 0): 1.0},
        {(0, 1): 1.0},
        {(0, 2): -1.0, (2, 0): 1.0},
        {(1, 1): 2.0},
    ]


def test_harmonic_basis_rejects_negative_degree():
    with pytest.raises(InputError):
        harmonic_basis(2, -1)


@pytest.mark.parametrize("n,degree", [(2, 8), (3, 5)])
def test_basis_elements_are_harmonic(n, degree):
    # finite-difference Laplacian residual, relative to coefficient scale
    pts = RNG.uniform(-0.55, 0.55, size=(100, n))
    for h in harmonic_basis(n, degree):
        res = np.max(np.abs(fd_laplacian(h.poly, pts)))
        assert res <= 1e-8 * max(1.0, h.poly.coefficient_scale)


def test_stored_v_matches_fd_laplacian():
    for f in random_family(7, count=5, degree=5):
        pts = RNG.uniform(-0.5, 0.5, size=(40, 2))
        fd = fd_laplacian(f.u_poly, pts)
        exact = f.evaluate_v(pts)
        scale = max(1.0, np.max(np.abs(exact)))
        np.testing.assert_allclose(fd, exact, atol=1e-8 * scale)


def test_jet_rez3():
    f = almansi_compose(circular_harmonic(3, "cos"), zero_h())
    jet = evaluate_jet(f, (1.0, 1.0))
    assert jet.u == -2.0
    np.testing.assert_allclose(jet.grad, [0.0, -6.0])
    assert jet.v == 0.0


def test_jet_r2():
    f = almansi_compose(zero_h(), circular_harmonic(0, "cos"))
    jet = evaluate_jet(f, (1.0, 0.0))
    assert jet.u == 1.0
    np.testing.assert_allclose(jet.grad, [2.0, 0.0])
    assert jet.v == 4.0


def test_jet_zero_function():
    f = almansi_compose(zero_h(), zero_h())
    jet = evaluate_jet(f, (0.3, -0.2))
    assert jet.u == 0.0 and jet.v == 0.0
    assert np.all(jet.grad == 0) and np.all(jet.hess == 0) and np.all(jet.third == 0)


def test_jet_trace_equals_v_and_symmetry():
    for f in random_family(11, count=4, degree=6):
        for pt in RNG.uniform(-0.8, 0.8, size=(10, 2)):
            jet = evaluate_jet(f, pt)
            np.testing.assert_allclose(jet.hess, jet.hess.T, rtol=0, atol=0)
            scale = max(1.0, abs(jet.v))
            assert abs(np.trace(jet.hess) - jet.v) <= 1e-10 * scale


def test_jet_gradient_matches_central_differences():
    f = random_family(3, count=1, degree=6)[0]
    pts = RNG.uniform(-0.7, 0.7, size=(100, 2))
    h = 1e-5
    for a in range(2):
        lo = pts.copy()
        hi = pts.copy()
        lo[:, a] -= h
        hi[:, a] += h
        fd = (f.evaluate(hi) - f.evaluate(lo)) / (2 * h)
        g = f.gradient(pts)[:, a]
        scale = np.maximum(1.0, np.abs(g))
        assert np.max(np.abs(fd - g) / scale) < 1e-6


def test_biharmonic_residual_almansi_family():
    # members normalized to unit sup on the ball: the FD floor scales with |u|
    ball = Ball(np.zeros(2), 1.0)
    grid = RNG.uniform(-1, 1, size=(400, 2))
    grid = grid[np.sum(grid ** 2, axis=1) <= 1]
    for f in random_family(5, count=6, degree=6):
        sup = max(np.max(np.abs(f.evaluate(grid))), np.max(np.abs(f.evaluate_v(grid))))
        g = f.scale(1.0 / sup)
        assert biharmonic_residual(g, ball, samples=25) <= 1e-6


def test_biharmonic_residual_r4():
    # Lap^2 |x|^4 = 64 in 2d (symbolic oracle Lap(16 r^2) = 64)
    r4 = Poly(2, {(4, 0): 1.0, (2, 2): 2.0, (0, 4): 1.0})
    val = biharmonic_residual(r4, Ball(np.zeros(2), 1.0), samples=10)
    assert abs(val - 64.0) < 1e-5


def test_biharmonic_residual_harmonic():
    h = circular_harmonic(4, "sin")
    assert biharmonic_residual(h, Ball(np.zeros(2), 1.0), samples=25) <= 1e-6


def test_biharmonic_residual_rejects_bad_samples():
    with pytest.raises(InputError):
        biharmonic_residual(circular_harmonic(1, "cos"), Ball(np.zeros(2), 1.0), samples=0)


def test_almansi_linearity():
    # compose(a h1 + h1', a h2) = a compose(h1, h2) + compose(h1', 0) pointwise
    h1 = circular_harmonic(2, "cos", 0.7)
    h1p = circular_harmonic(3, "sin", -1.2)
    h2 = circular_harmonic(1, "cos", 0.5)
    a = 2.5
    combo = almansi_compose(h1.scale(a) + h1p, h2.scale(a))
    u1 = almansi_compose(h1, h2)
    u1p = almansi_compose(h1p, HarmonicPolynomial.zero(2))
    pts = RNG.uniform(-1, 1, size=(60, 2))
    lhs = combo.evaluate(pts)
    rhs = a * u1.evaluate(pts) + u1p.evaluate(pts)
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-13 * max(1, np.max(np.abs(rhs))))


def test_solid_harmonic_table_counts_and_harmonicity():
    table = solid_harmonic_table(4)
    assert len(table) == 25
    for p in table:
        lap = p.laplacian()
        assert lap.terms == {}


def test_shift_by_v_is_biharmonic_pair():
    f = random_family(13, count=1, degree=4)[0]
    g = f.shift_by_v(+1.0)
    pts = RNG.uniform(-0.6, 0.6, size=(30, 2))
    np.testing.assert_allclose(g.evaluate(pts), f.evaluate(pts) + f.evaluate_v(pts), rtol=1e-13)
    # Laplacian of u + v is still v (v is harmonic)
    np.testing.assert_allclose(g.evaluate_v(pts), f.evaluate_v(pts), rtol=1e-13)


def test_serialization_round_trip():
    for n, degree in [(2, 6), (3, 3)]:
        f = random_family(17, count=1, n=n, degree=degree)[0]
        payload = function_to_dict(f)
        g = function_from_dict(payload)
        assert isinstance(g, BiharmonicFunction)
        pts = RNG.uniform(-0.5, 0.5, size=(20, n))
        np.testing.assert_allclose(g.evaluate(pts), f.evaluate(pts), rtol=0, atol=0)
        np.testing.assert_allclose(g.evaluate_v(pts), f.evaluate_v(pts), rtol=0, atol=0)


def test_random_family_is_seed_deterministic():
    fam1 = random_family(99, count=3)
    fam2 = random_family(99, count=3)
    for a, b in zip(fam1, fam2):
        assert function_to_dict(a) == function_to_dict(b)
