"""Metrics in polar normal form, regions, and quadrature over balls and spheres.

The metric is written as dr (x) dr + r^2 b_ij(r, t) dt_i (x) dt_j around the
center of whatever ball is being integrated, with b(0, .) = identity.  For
n = 3 the angular block b is expressed in an orthonormal frame of the round
sphere, so the volume densities are r^(n-1) sqrt(det b) against Lebesgue
measure on the sphere of directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .defaults import DEFAULTS
from .errors import InputError

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class PolarMetric:
    """Supported families: identity, conformal (1+s r) delta_ij, off-diagonal bump.

    The off-diagonal family is only defined for n = 3 (the angular block is
    1x1 when n = 2) and uses b = I + magnitude * r * (J + J^T) with J the
    upper shift.  `Lambda` bounds |d b_ij / dr| over the chart.
    """

    n: int
    family: str = "identity"
    param: float = 0.0
    Lambda: float = field(init=False)

    def __post_init__(self):
        if self.n not in (2, 3):
            raise InputError("only n in {2, 3} is supported")
        if self.family == "identity":
            lam = 0.0
        elif self.family == "conformal":
            if abs(self.param) > 1.0:
                raise InputError("conformal parameter must satisfy |s| <= 1")
            lam = abs(self.param)
        elif self.family == "offdiag":
            if self.n != 3:
                raise InputError("off-diagonal family needs an angular block, n = 3 only")
            if not 0.0 <= self.param <= 0.2:
                raise InputError("off-diagonal magnitude must lie in [0, 0.2]")
            lam = self.param
        else:
            raise InputError(f"unknown metric family {self.family!r}")
        object.__setattr__(self, "Lambda", lam)

    @property
    def is_euclidean(self) -> bool:
        return self.family == "identity"

    @property
    def angular_dim(self) -> int:
        return self.n - 1

    def b_at(self, r: float, omega=None) -> np.ndarray:
        """Angular metric block at radius r (direction enters for none of the
        current families but stays in the signature for generality)."""
        k = self.angular_dim
        eye = np.eye(k)
        if self.family == "identity":
            return eye
        if self.family == "conformal":
            return (1.0 + self.param * r) * eye
        b = eye.copy()
        b[0, 1] = b[1, 0] = self.param * r
        return b

    def db_dr_at(self, r: float, omega=None) -> np.ndarray:
        k = self.angular_dim
        if self.family == "identity":
            return np.zeros((k, k))
        if self.family == "conformal":
            return self.param * np.eye(k)
        d = np.zeros((k, k))
        d[0, 1] = d[1, 0] = self.param
        return d

    def sqrt_det_b(self, r) -> np.ndarray:
        """sqrt(det b(r)) for an array of radii."""
        r = np.asarray(r, dtype=float)
        if self.family == "identity":
            return np.ones_like(r)
        if self.family == "conformal":
            return (1.0 + self.param * r) ** (self.angular_dim / 2.0)
        return np.sqrt(1.0 - (self.param * r) ** 2)

    def b_inverse(self, r) -> np.ndarray:
        """Inverse angular block, shape (k, a, a) over an array of radii."""
        r = np.asarray(r, dtype=float).ravel()
        a = self.angular_dim
        out = np.zeros((r.size, a, a))
        if self.family == "identity":
            out[:] = np.eye(a)
        elif self.family == "conformal":
            out[:] = np.eye(a)
            out /= (1.0 + self.param * r)[:, None, None]
        else:
            c = self.param * r
            det = 1.0 - c ** 2
            out[:, 0, 0] = out[:, 1, 1] = 1.0 / det
            out[:, 0, 1] = out[:, 1, 0] = -c / det
        return out


EUCLIDEAN_2D = PolarMetric(2)
EUCLIDEAN_3D = PolarMetric(3)


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.radius > 0:
            raise InputError("ball radius must be positive")

    @property
    def n(self) -> int:
        return self.center.shape[0]

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.sum((pts - self.center) ** 2, axis=1) <= self.radius ** 2


@dataclass(frozen=True)
class Cube:
    """Axis-aligned cube given by center and half width.

    `lineage` is the subdivision address: a tuple of (A, flat_index) pairs
    recording each partition step from the root cube.
    """

    center: np.ndarray
    half_width: float
    lineage: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.half_width > 0:
            raise InputError("cube half width must be positive")

    @property
    def n(self) -> int:
        return self.center.shape[0]

    @property
    def diam(self) -> float:
        return 2.0 * self.half_width * math.sqrt(self.n)

    @property
    def side(self) -> float:
        return 2.0 * self.half_width

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.center - self.half_width, self.center + self.half_width

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all(np.abs(pts - self.center) <= self.half_width, axis=1)

    def meets_hyperplane(self, axis: int, offset: float) -> bool:
        return abs(self.center[axis] - offset) <= self.half_width

    @property
    def volume(self) -> float:
        return self.side ** self.n


def _subcube_center(parent_center, half_width, A, multi_index):
    # (i + 1/2)/A - 1/2 is exactly zero for the middle layer when A is odd
    offs = np.array([((i + 0.5) / A - 0.5) * 2.0 * half_width for i in multi_index])
    return parent_center + offs


def cube_partition(Q: Cube, A: int) -> list[Cube]:
    """Split Q into A^n equal subcubes with deterministic addresses.

    With the closed-intersection convention, an odd A places exactly A^(n-1)
    subcubes across any coordinate hyperplane through the center of Q.
    """
    if A < 2:
        raise InputError("partition factor A must be >= 2")
    n = Q.n
    sub_hw = Q.half_width / A
    out = []
    for flat in range(A ** n):
        idx = []
        rem = flat
        for _ in range(n):
            idx.append(rem % A)
            rem //= A
        idx = tuple(reversed(idx))
        center = _subcube_center(Q.center, Q.half_width, A, idx)
        out.append(Cube(center, sub_hw, Q.lineage + ((A, flat),)))
    return out


def cube_from_address(root: Cube, lineage: tuple) -> Cube:
    """Re-derive a subcube from the root and its address, bit for bit."""
    cube = root
    for A, flat in lineage:
        idx = []
        rem = flat
        for _ in range(root.n):
            idx.append(rem % A)
            rem //= A
        idx = tuple(reversed(idx))
        center = _subcube_center(cube.center, cube.half_width, A, idx)
        cube = Cube(center, cube.half_width / A, cube.lineage + ((A, flat),))
    return cube


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def integrate(self, f) -> float:
        vals = f(self.nodes) if callable(f) else np.asarray(f, dtype=float)
        return float(np.dot(self.weights, vals))

    def to_csv(self, path):
        cols = [self.nodes[:, a] for a in range(self.nodes.shape[1])]
        data = np.column_stack(cols + [self.weights])
        header = ",".join([f"x{a}" for a in range(self.nodes.shape[1])] + ["weight"])
        np.savetxt(path, data, delimiter=",", header=header, comments="")


def _gauss_legendre(npts: int, lo: float, hi: float):
    x, w = np.polynomial.legendre.leggauss(npts)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def _radial_counts(degree: int, metric: PolarMetric) -> int:
    base = (degree + metric.n + 2) // 2 + 4
    if not metric.is_euclidean:
        base += 24  # sqrt(det b) is analytic but not polynomial
    return base


def _angular_count(degree: int, metric: PolarMetric) -> int:
    base = max(degree + 9, 16)
    if not metric.is_euclidean:
        base += 16
    return base


def _sphere_directions(degree: int, metric: PolarMetric):
    """Product rule on S^2: Gauss-Legendre in cos(polar) x uniform azimuth."""
    n_u = (degree + 3) // 2 + 4
    n_lam = max(degree + 9, 12)
    if not metric.is_euclidean:
        n_u += 8
        n_lam += 8
    u, wu = _gauss_legendre(n_u, -1.0, 1.0)
    lam = 2.0 * math.pi * np.arange(n_lam) / n_lam
    wl = 2.0 * math.pi / n_lam
    su = np.sqrt(1.0 - u ** 2)
    dirs = np.empty((n_u * n_lam, 3))
    w = np.empty(n_u * n_lam)
    k = 0
    for i in range(n_u):
        dirs[k:k + n_lam, 0] = su[i] * np.cos(lam)
        dirs[k:k + n_lam, 1] = su[i] * np.sin(lam)
        dirs[k:k + n_lam, 2] = u[i]
        w[k:k + n_lam] = wu[i] * wl
        k += n_lam
    return dirs, w


def ball_quadrature(metric: PolarMetric, ball: Ball, degree: int) -> QuadratureRule:
    """Quadrature over a metric ball with the r^(n-1) sqrt(det b) density.

    Parameters
    ----------
    metric : PolarMetric
        Interpreted in polar normal form around the ball center.
    ball : Ball
        Must sit inside the chart: radius <= 1.
    degree : int
        Polynomial degree the rule should integrate (against the metric
        density) to near machine precision.
    """
    if degree < 1:
        raise InputError("quadrature degree must be >= 1")
    if ball.radius > DEFAULTS["chart_radius"]:
        raise InputError("ball exceeds the coordinate chart (radius <= 1)")
    if ball.n != metric.n:
        raise InputError("ball and metric dimensions differ")
    n = metric.n
    r, wr = _gauss_legendre(_radial_counts(degree, metric), 0.0, ball.radius)
    density = wr * r ** (n - 1) * metric.sqrt_det_b(r)
    if n == 2:
        n_t = _angular_count(degree, metric)
        theta = 2.0 * math.pi * np.arange(n_t) / n_t
        wt = 2.0 * math.pi / n_t
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
        wd = np.full(n_t, wt)
    else:
        dirs, wd = _sphere_directions(degree, metric)
    nodes = ball.center[None, None, :] + r[:, None, None] * dirs[None, :, :]
    weights = density[:, None] * wd[None, :]
    return QuadratureRule(nodes.reshape(-1, n), weights.reshape(-1), degree)


def sphere_quadrature(metric: PolarMetric, ball: Ball, degree: int) -> QuadratureRule:
    """Quadrature over the boundary sphere with the r^(n-1) sqrt(det b) factor."""
    if degree < 1:
        raise InputError("quadrature degree must be >= 1")
    if ball.radius > DEFAULTS["chart_radius"]:
        raise InputError("ball exceeds the coordinate chart (radius <= 1)")
    if ball.n != metric.n:
        raise InputError("ball and metric dimensions differ")
    n = metric.n
    R = ball.radius
    scale = R ** (n - 1) * float(metric.sqrt_det_b(R))
    if n == 2:
        n_t = _angular_count(degree, metric)
        theta = 2.0 * math.pi * np.arange(n_t) / n_t
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(n_t, 2.0 * math.pi / n_t * scale)
    else:
        dirs, wd = _sphere_directions(degree, metric)
        weights = wd * scale
    nodes = ball.center[None, :] + R * dirs
    return QuadratureRule(nodes, weights, degree)


# ---------------------------------------------------------------------------
# simplices


def _fibonacci_sphere(count: int) -> np.ndarray:
    k = np.arange(count)
    z = 1.0 - (2.0 * k + 1.0) / count
    phi = k * _GOLDEN_ANGLE
    s = np.sqrt(1.0 - z ** 2)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


_WIDTH_DIRECTIONS: dict[int, np.ndarray] = {}


def width_directions(n: int) -> np.ndarray:
    """Normative direction sets for sampled widths: 720 half-circle angles for
    n = 2 and a 2562-point Fibonacci sphere for n = 3."""
    if n not in _WIDTH_DIRECTIONS:
        if n == 2:
            ang = math.pi * np.arange(720) / 720.0
            _WIDTH_DIRECTIONS[2] = np.column_stack([np.cos(ang), np.sin(ang)])
        elif n == 3:
            _WIDTH_DIRECTIONS[3] = _fibonacci_sphere(2562)
        else:
            raise InputError("only n in {2, 3} is supported")
    return _WIDTH_DIRECTIONS[n]


@dataclass(frozen=True)
class Simplex:
    vertices: np.ndarray
    width: float
    diam: float
    barycenter: np.ndarray


def simplex_geometry(vertices) -> Simplex:
    """Width, diameter, and barycenter of the simplex on the given vertices.

    Width is the minimum directional extent over the documented direction
    sample; degenerate simplices are allowed and report width 0.
    """
    verts = np.asarray(vertices, dtype=float)
    n = verts.shape[1]
    if verts.shape[0] != n + 1:
        raise InputError("a simplex in R^n needs n+1 vertices")
    dirs = width_directions(n)
    proj = verts @ dirs.T
    width = float(np.min(proj.max(axis=0) - proj.min(axis=0)))
    diffs = verts[:, None, :] - verts[None, :, :]
    diam = float(np.sqrt(np.max(np.sum(diffs ** 2, axis=2))))
    return Simplex(verts, width, diam, verts.mean(axis=0))
