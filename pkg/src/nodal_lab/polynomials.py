"""Exact polynomial test functions: harmonic bases and Almansi pairs.

Everything downstream (frequency ratios, doubling indices, nodal curves,
stratum labels) is validated against functions built here, so this module
keeps polynomials as explicit monomial coefficient maps and differentiates
them symbolically.  No discretization state enters at this level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import DiagnosticFailureError, DimensionMismatchError, InputError


class Poly:
    """Polynomial in n variables stored as {exponent tuple: coefficient}.

    Instances are immutable by convention; all operations return new objects.
    """

    __slots__ = ("n", "terms", "_exps", "_coeffs")

    def __init__(self, n: int, terms: dict | None = None):
        self.n = n
        clean = {}
        for exp, c in (terms or {}).items():
            if c != 0.0:
                clean[tuple(int(e) for e in exp)] = float(c)
        self.terms = dict(sorted(clean.items()))
        if self.terms:
            self._exps = np.array(list(self.terms.keys()), dtype=np.int64)
            self._coeffs = np.array(list(self.terms.values()), dtype=float)
        else:
            self._exps = np.zeros((0, n), dtype=np.int64)
            self._coeffs = np.zeros(0, dtype=float)

    @classmethod
    def zero(cls, n: int) -> "Poly":
        return cls(n, {})

    @classmethod
    def constant(cls, n: int, c: float) -> "Poly":
        return cls(n, {(0,) * n: c})

    @classmethod
    def monomial(cls, n: int, exp: tuple, c: float = 1.0) -> "Poly":
        return cls(n, {tuple(exp): c})

    @property
    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    @property
    def coefficient_scale(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def __add__(self, other: "Poly") -> "Poly":
        if self.n != other.n:
            raise DimensionMismatchError("polynomials live in different dimensions")
        out = dict(self.terms)
        for exp, c in other.terms.items():
            out[exp] = out.get(exp, 0.0) + c
        return Poly(self.n, out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + other.scale(-1.0)

    def scale(self, c: float) -> "Poly":
        return Poly(self.n, {e: c * v for e, v in self.terms.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        if self.n != other.n:
            raise DimensionMismatchError("polynomials live in different dimensions")
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                out[key] = out.get(key, 0.0) + c1 * c2
        return Poly(self.n, out)

    def diff(self, axis: int) -> "Poly":
        out = {}
        for exp, c in self.terms.items():
            k = exp[axis]
            if k > 0:
                new = list(exp)
                new[axis] = k - 1
                out[tuple(new)] = out.get(tuple(new), 0.0) + c * k
        return Poly(self.n, out)

    def laplacian(self) -> "Poly":
        out = Poly.zero(self.n)
        for a in range(self.n):
            out = out + self.diff(a).diff(a)
        return out

    def evaluate(self, points) -> np.ndarray:
        """Evaluate at an (k, n) array of points; returns shape (k,)."""
        pts = np.asarray(points, dtype=float)
        scalar = pts.ndim == 1
        if scalar:
            pts = pts[None, :]
        if pts.shape[1] != self.n:
            raise DimensionMismatchError("points have wrong dimension")
        if len(self.terms) == 0:
            vals = np.zeros(pts.shape[0])
            return vals[0] if scalar else vals
        maxdeg = self._exps.max(axis=0)
        # per-axis power tables built by cumulative products
        term_vals = np.ones((pts.shape[0], self._exps.shape[0]))
        for a in range(self.n):
            table = np.ones((pts.shape[0], maxdeg[a] + 1))
            for j in range(1, maxdeg[a] + 1):
                table[:, j] = table[:, j - 1] * pts[:, a]
            term_vals *= table[:, self._exps[:, a]]
        vals = term_vals @ self._coeffs
        return vals[0] if scalar else vals

    def __call__(self, points):
        return self.evaluate(points)

    def __eq__(self, other):
        return isinstance(other, Poly) and self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, tuple(self.terms.items())))

    def __repr__(self):
        return f"Poly(n={self.n}, terms={self.terms})"


def _binomial(m: int, j: int) -> int:
    return math.comb(m, j)


def _circular_harmonic(m: int, kind: str) -> Poly:
    """Degree-m harmonic polynomial: real or imaginary part of (x + iy)^m."""
    terms: dict = {}
    for j in range(m + 1):
        # i^j contributes to Re for even j, Im for odd j
        if kind == "cos" and j % 2 == 0:
            terms[(m - j, j)] = float(_binomial(m, j) * (-1) ** (j // 2))
        elif kind == "sin" and j % 2 == 1:
            terms[(m - j, j)] = float(_binomial(m, j) * (-1) ** ((j - 1) // 2))
    if m == 0 and kind == "cos":
        terms[(0, 0)] = 1.0
    return Poly(2, terms)


def _monomials_of_degree(n: int, degree: int) -> list[tuple]:
    if n == 1:
        return [(degree,)]
    out = []
    for first in range(degree, -1, -1):
        for rest in _monomials_of_degree(n - 1, degree - first):
            out.append((first,) + rest)
    return sorted(out)


def _nullspace_fraction(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Exact nullspace basis of a rational matrix via reduced row echelon form."""
    mat = [row[:] for row in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot_row = None
        for i in range(r, len(mat)):
            if mat[i][c] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        mat[r], mat[pivot_row] = mat[pivot_row], mat[r]
        pv = mat[r][c]
        mat[r] = [x / pv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            vec[pc] = -mat[i][fc]
        basis.append(vec)
    return basis


def _solid_harmonics_3d(degree: int) -> list[Poly]:
    """All degree-`degree` homogeneous harmonic polynomials in 3 variables.

    Basis vectors come from the exact nullspace of the Laplacian restricted to
    homogeneous polynomials, cleared to integer coefficients.  The ordering is
    deterministic (free columns of the reduced system in lex monomial order).
    """
    monos = _monomials_of_degree(3, degree)
    if degree < 2:
        return [Poly.monomial(3, e) for e in monos]
    targets = _monomials_of_degree(3, degree - 2)
    tindex = {e: i for i, e in enumerate(targets)}
    rows = [[Fraction(0)] * len(monos) for _ in targets]
    for j, exp in enumerate(monos):
        for a in range(3):
            if exp[a] >= 2:
                out = list(exp)
                out[a] -= 2
                rows[tindex[tuple(out)]][j] += Fraction(exp[a] * (exp[a] - 1))
    basis = _nullspace_fraction(rows, len(monos))
    polys = []
    for vec in basis:
        denom_lcm = 1
        for x in vec:
            denom_lcm = denom_lcm * x.denominator // math.gcd(denom_lcm, x.denominator)
        ints = [int(x * denom_lcm) for x in vec]
        g = 0
        for v in ints:
            g = math.gcd(g, abs(v))
        g = g or 1
        terms = {monos[j]: ints[j] / g for j in range(len(monos)) if ints[j] != 0}
        polys.append(Poly(3, terms))
    return polys


def solid_harmonic_table(max_degree: int) -> list[Poly]:
    """Indexed basis used by the n=3 wire format: index = l^2 + j.

    Degree l contributes 2l+1 consecutive entries, so the table through
    degree d has (d+1)^2 entries.  The per-degree order matches
    ``_solid_harmonics_3d``.
    """
    table: list[Poly] = []
    for ell in range(max_degree + 1):
        table.extend(_solid_harmonics_3d(ell))
    return table


@dataclass(frozen=True)
class HarmonicPolynomial:
    """Harmonic polynomial as coefficients over a fixed solid-harmonic basis.

    n=2 entries are (m, "cos"|"sin", coeff) for the pair r^m cos(m t),
    r^m sin(m t) written in Cartesian form.  n=3 entries are (index, coeff)
    into :func:`solid_harmonic_table`.
    """

    n: int
    degree_cap: int
    entries: tuple
    poly: Poly = field(compare=False)

    @classmethod
    def from_entries(cls, n: int, entries: Iterable, degree_cap: int | None = None) -> "HarmonicPolynomial":
        if n == 2:
            norm = []
            poly = Poly.zero(2)
            maxdeg = 0
            for m, kind, c in entries:
                m = int(m)
                if kind not in ("cos", "sin"):
                    raise InputError(f"unknown basis kind {kind!r}")
                if m == 0 and kind == "sin":
                    raise InputError("sin component is empty at m=0")
                if c == 0:
                    continue
                norm.append((m, kind, float(c)))
                poly = poly + _circular_harmonic(m, kind).scale(float(c))
                maxdeg = max(maxdeg, m)
            cap = degree_cap if degree_cap is not None else maxdeg
            return cls(2, cap, tuple(sorted(norm, key=lambda e: (e[0], e[1]))), poly)
        if n == 3:
            norm3 = []
            maxdeg = 0
            for idx, c in entries:
                idx = int(idx)
                if c == 0:
                    continue
                ell = int(math.isqrt(idx))
                norm3.append((idx, float(c)))
                maxdeg = max(maxdeg, ell)
            table = solid_harmonic_table(maxdeg)
            poly = Poly.zero(3)
            for idx, c in norm3:
                poly = poly + table[idx].scale(c)
            cap = degree_cap if degree_cap is not None else maxdeg
            return cls(3, cap, tuple(sorted(norm3)), poly)
        raise InputError("only n in {2, 3} is supported")

    @classmethod
    def zero(cls, n: int) -> "HarmonicPolynomial":
        return cls.from_entries(n, [])

    @property
    def coefficient_scale(self) -> float:
        if self.n == 2:
            return max((abs(e[2]) for e in self.entries), default=0.0)
        return max((abs(e[1]) for e in self.entries), default=0.0)

    def evaluate(self, points):
        return self.poly.evaluate(points)

    def __call__(self, points):
        return self.poly.evaluate(points)

    def __add__(self, other: "HarmonicPolynomial") -> "HarmonicPolynomial":
        if self.n != other.n:
            raise DimensionMismatchError("dimension mismatch")
        if self.n == 2:
            acc: dict = {}
            for m, kind, c in self.entries + other.entries:
                acc[(m, kind)] = acc.get((m, kind), 0.0) + c
            ents = [(m, k, c) for (m, k), c in acc.items()]
        else:
            acc3: dict = {}
            for idx, c in self.entries + other.entries:
                acc3[idx] = acc3.get(idx, 0.0) + c
            ents = list(acc3.items())
        return HarmonicPolynomial.from_entries(self.n, ents,
                                               max(self.degree_cap, other.degree_cap))

    def scale(self, c: float) -> "HarmonicPolynomial":
        if self.n == 2:
            ents = [(m, k, c * v) for m, k, v in self.entries]
        else:
            ents = [(i, c * v) for i, v in self.entries]
        return HarmonicPolynomial.from_entries(self.n, ents, self.degree_cap)


def harmonic_basis(n: int, degree: int) -> list[HarmonicPolynomial]:
    """All basis solid harmonics of degree up to `degree`.

    n=2 yields 1 + 2*degree elements; n=3 yields (degree+1)^2.
    """
    if degree < 0:
        raise InputError("degree must be nonnegative")
    if n == 2:
        out = [HarmonicPolynomial.from_entries(2, [(0, "cos", 1.0)], degree)]
        for m in range(1, degree + 1):
            out.append(HarmonicPolynomial.from_entries(2, [(m, "cos", 1.0)], degree))
            out.append(HarmonicPolynomial.from_entries(2, [(m, "sin", 1.0)], degree))
        return out
    if n == 3:
        count = (degree + 1) ** 2
        return [HarmonicPolynomial.from_entries(3, [(i, 1.0)], degree) for i in range(count)]
    raise InputError("only n in {2, 3} is supported")


def circular_harmonic(m: int, kind: str = "cos", coeff: float = 1.0) -> HarmonicPolynomial:
    """Convenience constructor for the n=2 basis element coeff * Re/Im (x+iy)^m."""
    return HarmonicPolynomial.from_entries(2, [(m, kind, coeff)])


@dataclass(frozen=True)
class JetValues:
    """Pointwise derivatives of a biharmonic pair (u, v)."""

    u: float
    grad: np.ndarray
    hess: np.ndarray
    third: np.ndarray
    v: float
    grad_v: np.ndarray

    @property
    def hess_norm(self) -> float:
        return float(np.sqrt(np.sum(self.hess ** 2)))

    @property
    def third_norm(self) -> float:
        return float(np.sqrt(np.sum(self.third ** 2)))


@dataclass(frozen=True)
class BiharmonicFunction:
    """u = h1 + |x|^2 h2 with h1, h2 harmonic; v = Laplacian(u) kept in closed form.

    All derivative polynomials through third order are precomputed, so jets
    are symbolic-exact and instances are immutable and safely shareable.
    """

    n: int
    h1: HarmonicPolynomial
    h2: HarmonicPolynomial
    u_poly: Poly = field(compare=False)
    v_poly: Poly = field(compare=False)
    v_harmonic: HarmonicPolynomial = field(compare=False)
    _grad: tuple = field(compare=False, repr=False)
    _hess: tuple = field(compare=False, repr=False)
    _third: tuple = field(compare=False, repr=False)
    _grad_v: tuple = field(compare=False, repr=False)

    @property
    def degree(self) -> int:
        return self.u_poly.degree

    @property
    def coefficient_scale(self) -> float:
        return max(self.h1.coefficient_scale, self.h2.coefficient_scale, 0.0)

    def evaluate(self, points):
        return self.u_poly.evaluate(points)

    def __call__(self, points):
        return self.u_poly.evaluate(points)

    def evaluate_v(self, points):
        return self.v_poly.evaluate(points)

    def gradient(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.stack([g.evaluate(pts) for g in self._grad], axis=-1)

    def gradient_v(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.stack([g.evaluate(pts) for g in self._grad_v], axis=-1)

    def hessian(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.n
        out = np.empty((pts.shape[0], n, n))
        for i in range(n):
            for j in range(n):
                out[:, i, j] = self._hess[min(i, j)][max(i, j) - min(i, j)].evaluate(pts)
        return out

    def third_tensor(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.n
        out = np.empty((pts.shape[0], n, n, n))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    key = tuple(sorted((i, j, k)))
                    out[:, i, j, k] = self._third[key].evaluate(pts)
        return out

    def scale(self, c: float) -> "BiharmonicFunction":
        return almansi_compose(self.h1.scale(c), self.h2.scale(c))

    def shift_by_v(self, sign: float) -> "BiharmonicFunction":
        """The biharmonic function u + sign*v, again in composed form."""
        return almansi_compose(self.h1 + self.v_harmonic.scale(sign), self.h2)


def almansi_compose(h1: HarmonicPolynomial, h2: HarmonicPolynomial) -> BiharmonicFunction:
    """Compose u = h1 + |x|^2 h2 and its exact Laplacian v = 2n h2 + 4 x.grad(h2).

    Raises
    ------
    DimensionMismatchError
        If h1 and h2 live in different dimensions.
    """
    if h1.n != h2.n:
        raise DimensionMismatchError("h1 and h2 must share the ambient dimension")
    n = h1.n
    r2 = Poly(n, {tuple(2 if a == b else 0 for b in range(n)): 1.0 for a in range(n)})
    u_poly = h1.poly + (r2 * h2.poly)

    # v in basis form: each degree-m basis component of h2 contributes (2n+4m)
    if n == 2:
        v_entries = [(m, kind, (2 * n + 4 * m) * c) for m, kind, c in h2.entries]
    else:
        v_entries = [(idx, (2 * n + 4 * int(math.isqrt(idx))) * c) for idx, c in h2.entries]
    v_harm = HarmonicPolynomial.from_entries(n, v_entries, h2.degree_cap)
    v_poly = v_harm.poly

    grad = tuple(u_poly.diff(a) for a in range(n))
    # hessian stored upper-triangular: _hess[i][j-i] = d2u/dxi dxj
    hess = tuple(tuple(grad[i].diff(j) for j in range(i, n)) for i in range(n))
    third = {}
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                third[(i, j, k)] = u_poly.diff(i).diff(j).diff(k)
    grad_v = tuple(v_poly.diff(a) for a in range(n))
    return BiharmonicFunction(n, h1, h2, u_poly, v_poly, v_harm,
                              grad, hess, third, grad_v)


def evaluate_jet(f: BiharmonicFunction, point) -> JetValues:
    """Exact polynomial jet (u, grad, hess, third, v, grad v) at one point."""
    pt = np.asarray(point, dtype=float)
    return JetValues(
        u=float(f.evaluate(pt)),
        grad=f.gradient(pt)[0],
        hess=f.hessian(pt)[0],
        third=f.third_tensor(pt)[0],
        v=float(f.evaluate_v(pt)),
        grad_v=f.gradient_v(pt)[0],
    )


# ---------------------------------------------------------------------------
# finite-difference validators


def _as_sampler(f):
    if callable(f) and not isinstance(f, (BiharmonicFunction, HarmonicPolynomial, Poly)):
        return f
    return f.evaluate


def fd_laplacian(f, points, h: float = 5e-4) -> np.ndarray:
    """Fourth-order finite-difference Laplacian at the given points."""
    sampler = _as_sampler(f)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[1]
    total = np.full(pts.shape[0], 0.0)
    center = sampler(pts)
    for a in range(n):
        acc = -30.0 * center
        for step, w in ((-2, -1.0), (-1, 16.0), (1, 16.0), (2, -1.0)):
            shifted = pts.copy()
            shifted[:, a] += step * h
            acc = acc + w * sampler(shifted)
        total = total + acc / (12.0 * h * h)
    return total


def fd_bilaplacian(f, points, h: float) -> np.ndarray:
    """Composition of two fourth-order Laplacian stencils."""
    sampler = _as_sampler(f)

    def inner(pts):
        return fd_laplacian(sampler, pts, h)

    return fd_laplacian(inner, points, h)


def biharmonic_residual(f, ball, samples: int, seed: int = 0,
                        step_factor: float = 1e-2) -> float:
    """Max |Laplacian^2 f| over random points of the ball, via finite differences.

    The stencil step is ``step_factor * ball.radius``; stencil points may
    reach slightly outside the ball, which is harmless for entire functions.
    """
    if samples < 1:
        raise InputError("samples must be >= 1")
    center = np.asarray(ball.center, dtype=float)
    n = center.shape[0]
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < samples:
        cand = rng.uniform(-1.0, 1.0, size=n)
        if np.dot(cand, cand) <= 1.0:
            pts.append(center + 0.9 * ball.radius * cand)
    vals = fd_bilaplacian(f, np.array(pts), step_factor * ball.radius)
    if not np.all(np.isfinite(vals)):
        raise DiagnosticFailureError("non-finite sample in bilaplacian stencil")
    return float(np.max(np.abs(vals)))


# ---------------------------------------------------------------------------
# random families and serialization


def random_biharmonic(seed, n: int = 2, degree: int = 6,
                      decay: float = 2.0) -> BiharmonicFunction:
    """Seeded random Almansi pair with coefficients damped by degree.

    Coefficients are standard normals scaled by (1+m)^(-decay), which keeps
    high-degree content small enough for finite-difference validators.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    def draw(max_degree):
        if n == 2:
            ents = [(0, "cos", rng.standard_normal())]
            for m in range(1, max_degree + 1):
                w = (1.0 + m) ** (-decay)
                ents.append((m, "cos", w * rng.standard_normal()))
                ents.append((m, "sin", w * rng.standard_normal()))
            return HarmonicPolynomial.from_entries(2, ents, max_degree)
        ents3 = []
        for ell in range(max_degree + 1):
            w = (1.0 + ell) ** (-decay)
            for j in range(2 * ell + 1):
                ents3.append((ell * ell + j, w * rng.standard_normal()))
        return HarmonicPolynomial.from_entries(3, ents3, max_degree)

    return almansi_compose(draw(degree), draw(max(degree - 2, 0)))


def random_family(seed, count: int, n: int = 2, degree: int = 6) -> list[BiharmonicFunction]:
    rng = np.random.default_rng(seed)
    return [random_biharmonic(rng, n=n, degree=degree) for _ in range(count)]


def function_to_dict(f: BiharmonicFunction) -> dict:
    """Wire format: {"n": ..., "h1": [[m, kind, coeff], ...], "h2": [...]}.

    For n=3 the triples degenerate to [index, coeff] pairs into the solid
    harmonic table.
    """
    def ents(h):
        return [list(e) for e in h.entries]

    return {"n": f.n, "h1": ents(f.h1), "h2": ents(f.h2)}


def function_from_dict(payload: dict) -> BiharmonicFunction:
    n = int(payload["n"])
    h1 = HarmonicPolynomial.from_entries(n, [tuple(e) for e in payload["h1"]])
    h2 = HarmonicPolynomial.from_entries(n, [tuple(e) for e in payload["h2"]])
    return almansi_compose(h1, h2)
