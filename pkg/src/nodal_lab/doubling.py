"""Sup-norm doubling index E(x0, r), cube doubling index E(Q), and the
relations between index and frequency.

E(x0, r) = (1/2) log2 of the ratio of sup-masses sup|u|^2 + sup|v|^2 between
B_r and B_{r/2}.  Sups are estimated by a deterministic grid plus local
refinement: interior boxes shrink by 1/8 per round and boundary arcs (where
polynomial maxima usually sit) by 1/16 per round, which brings homogeneous
examples to ~1e-12 accuracy at depth 5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .defaults import DEFAULTS, TOLERANCES
from .errors import DegenerateDenominatorError, InputError
from .frequency import frequency_components
from .geometry import Ball, Cube, PolarMetric, _fibonacci_sphere
from .polynomials import BiharmonicFunction


@dataclass(frozen=True)
class SupPair:
    """Estimated sup |u|^2 and sup |v|^2 over a ball, with sampler metadata."""

    sup_u2: float
    sup_v2: float
    meta: dict = field(compare=False, default_factory=dict)

    @property
    def total(self) -> float:
        return self.sup_u2 + self.sup_v2


def _interior_grid(center, r, n):
    axes = [np.linspace(c - r, c + r, n) for c in center]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    keep = np.sum((pts - center) ** 2, axis=1) <= r * r
    return pts[keep]

def _boundary_points_2d(center, r, angles):
    return center[None, :] + r * np.column_stack([np.cos(angles), np.sin(angles)])


def _frame(omega):
    zhat = np.array([0.0, 0.0, 1.0])
    t1 = np.cross(zhat, omega)
    if np.linalg.norm(t1) < 1e-12:
        t1 = np.array([1.0, 0.0, 0.0])
    t1 = t1 / np.linalg.norm(t1)
    return t1, np.cross(omega, t1)


class _SupTracker:
    """Running max with location and on-boundary tag."""

    def __init__(self):
        self.value = -math.inf
        self.point = None
        self.on_boundary = False
        self.angle = None      # boundary parameter: angle (n=2) or direction (n=3)

    def update(self, values, points, on_boundary, angles=None):
        if len(values) == 0:
            return
        k = int(np.argmax(values))
        if values[k] > self.value:
            self.value = float(values[k])
            self.point = points[k].copy()
            self.on_boundary = on_boundary
            self.angle = None if angles is None else angles[k]


def sup_on_ball(f: BiharmonicFunction, ball: Ball, depth: int = 5,
                base_n: int | None = None, boundary_n: int | None = None) -> SupPair:
    """Deterministic sup of |u|^2 and |v|^2 over a closed ball.

    Base pass: base_n^n interior lattice plus a boundary sample (uniform
    angles for n = 2, Fibonacci sphere for n = 3).  Each refinement round
    re-grids a shrinking neighborhood of the running maximizer; boundary
    maximizers are refined along the sphere.
    """
    if depth < 0:
        raise InputError("refinement depth must be >= 0")
    n = ball.n
    base_n = base_n if base_n is not None else DEFAULTS["sup_base_grid"]
    boundary_n = boundary_n if boundary_n is not None else (
        DEFAULTS["sup_boundary_samples"] if n == 2 else 4096)
    center = ball.center
    r = ball.radius

    trackers = {"u": _SupTracker(), "v": _SupTracker()}

    def scan(points, on_boundary, angles=None):
        if len(points) == 0:
            return
        u2 = f.evaluate(points) ** 2
        v2 = f.evaluate_v(points) ** 2
        trackers["u"].update(u2, points, on_boundary, angles)
        trackers["v"].update(v2, points, on_boundary, angles)

    interior = _interior_grid(center, r, base_n)
    scan(interior, on_boundary=False)
    if n == 2:
        base_angles = 2.0 * math.pi * np.arange(boundary_n) / boundary_n
        scan(_boundary_points_2d(center, r, base_angles), True, base_angles)
        arc0 = 2.0 * (2.0 * math.pi / boundary_n)
    else:
        dirs = _fibonacci_sphere(boundary_n)
        scan(center[None, :] + r * dirs, True, dirs)
        arc0 = 2.0 * math.sqrt(4.0 * math.pi / boundary_n)

    box0 = 2.0 * (2.0 * r / (base_n - 1))

    def refine(tracker, quantity):
        box, arc = box0, arc0
        for _ in range(depth):
            if tracker.on_boundary:
                if n == 2:
                    mid = tracker.angle
                    local = mid + np.linspace(-arc, arc, 65)
                    pts = _boundary_points_2d(center, r, local)
                    vals = quantity(pts)
                    k = int(np.argmax(vals))
                    if vals[k] > tracker.value:
                        tracker.value = float(vals[k])
                        tracker.point = pts[k].copy()
                        tracker.angle = local[k]
                    arc = 2.0 * (2.0 * arc / 64.0)
                else:
                    omega = tracker.angle
                    t1, t2 = _frame(omega)
                    a = np.linspace(-arc, arc, 17)
                    A, B = np.meshgrid(a, a, indexing="ij")
                    raw = (omega[None, :] + A.ravel()[:, None] * t1[None, :]
                           + B.ravel()[:, None] * t2[None, :])
                    raw /= np.linalg.norm(raw, axis=1)[:, None]
                    pts = center[None, :] + r * raw
                    vals = quantity(pts)
                    k = int(np.argmax(vals))
                    if vals[k] > tracker.value:
                        tracker.value = float(vals[k])
                        tracker.point = pts[k].copy()
                        tracker.angle = raw[k]
                    arc = 2.0 * (2.0 * arc / 16.0)
            else:
                axes = [np.linspace(c - box, c + box, 33) for c in tracker.point]
                mesh = np.meshgrid(*axes, indexing="ij")
                pts = np.stack([m.ravel() for m in mesh], axis=1)
                keep = np.sum((pts - center) ** 2, axis=1) <= r * r
                pts = pts[keep]
                if len(pts):
                    vals = quantity(pts)
                    k = int(np.argmax(vals))
                    if vals[k] > tracker.value:
                        tracker.value = float(vals[k])
                        tracker.point = pts[k].copy()
                box = 2.0 * (2.0 * box / 32.0)

    refine(trackers["u"], lambda p: f.evaluate(p) ** 2)
    refine(trackers["v"], lambda p: f.evaluate_v(p) ** 2)
    return SupPair(
        sup_u2=max(trackers["u"].value, 0.0),
        sup_v2=max(trackers["v"].value, 0.0),
        meta={"base_n": base_n, "boundary_n": boundary_n, "depth": depth,
              "argmax_u": trackers["u"].point, "argmax_v": trackers["v"].point},
    )


def doubling_index(f: BiharmonicFunction, center, r: float, depth: int = 5,
                   base_n: int | None = None, boundary_n: int | None = None) -> float:
    """E(x0, r) = 0.5 log2 of the sup-mass ratio between B_r and B_{r/2}."""
    center = np.asarray(center, dtype=float)
    big = sup_on_ball(f, Ball(center, r), depth, base_n, boundary_n)
    small = sup_on_ball(f, Ball(center, r / 2.0), depth, base_n, boundary_n)
    if small.total <= 0.0:
        raise DegenerateDenominatorError("sup mass vanishes on the half ball")
    return 0.5 * math.log2(big.total / small.total)


@dataclass(frozen=True)
class CubeIndexReport:
    cube: Cube
    E: float
    witness_x: np.ndarray
    witness_r: float
    clipped: bool
    sample_meta: dict = field(compare=False, default_factory=dict)

    def csv_row(self) -> dict:
        return {
            "cube_center": " ".join(repr(float(c)) for c in self.cube.center),
            "half_width": self.cube.half_width,
            "E": self.E,
            "witness_x": " ".join(repr(float(c)) for c in self.witness_x),
            "witness_r": self.witness_r,
            "clipped": int(self.clipped),
        }


def cube_index(f: BiharmonicFunction, Q: Cube, samples: int = 3,
               n_radii: int | None = None, depth: int = 1,
               base_n: int = 32, boundary_n: int = 256,
               chart_radius: float | None = None) -> CubeIndexReport:
    """E(Q): sup of E(x, r) over a lattice of centers in Q and log-spaced radii
    in (0.01 diam, 10 diam], clipped to the chart radius with a flag.
    """
    if samples < 1:
        raise InputError("need at least one sample point per axis")
    n_radii = n_radii if n_radii is not None else DEFAULTS["cube_radii"]
    chart = chart_radius if chart_radius is not None else DEFAULTS["chart_radius"]
    lo, hi = Q.bounds()
    if samples == 1:
        centers = Q.center[None, :]
    else:
        axes = [np.linspace(a, b, samples) for a, b in zip(lo, hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        centers = np.stack([m.ravel() for m in mesh], axis=1)
    r_hi = 10.0 * Q.diam
    clipped = r_hi > chart
    r_hi = min(r_hi, chart)
    radii = np.geomspace(0.01 * Q.diam, r_hi, n_radii)

    best = (-math.inf, None, None)
    for x in centers:
        for r in radii:
            E = doubling_index(f, x, float(r), depth, base_n, boundary_n)
            if E > best[0]:
                best = (E, x.copy(), float(r))
    return CubeIndexReport(
        cube=Q, E=best[0], witness_x=best[1], witness_r=best[2], clipped=clipped,
        sample_meta={"samples": samples, "n_radii": n_radii, "depth": depth,
                     "base_n": base_n, "boundary_n": boundary_n})


@dataclass(frozen=True)
class IndexFrequencyRelation:
    r: float
    eps: float
    eta: float
    E: float
    N_outer: float            # N(x0, (1+eta) r)
    N_half: float             # N(x0, (1+eta) r / 2)
    C_req_upper: float        # minimal C with E <= (1+eps)^2 N_outer + C
    C_req_lower: float        # minimal C with (1-eps)^2 N_half - C <= E
    holds_with_zero: bool


def frequency_index_relation(f: BiharmonicFunction, metric: PolarMetric, center,
                             r: float, eps: float, eta: float,
                             depth: int = 4) -> IndexFrequencyRelation:
    """Two-sided comparison of E(x0, r) against frequency at nearby radii."""
    if not 0.0 < eta < math.exp(eps) - 1.0:
        raise InputError("eta must lie in (0, e^eps - 1)")
    if (1.0 + eta) * r > DEFAULTS["chart_radius"]:
        raise InputError("(1+eta) r exceeds the chart")
    center = np.asarray(center, dtype=float)
    E = doubling_index(f, center, r, depth)
    _, _, N_outer = frequency_components(f, metric, center, (1.0 + eta) * r)
    _, _, N_half = frequency_components(f, metric, center, (1.0 + eta) * r / 2.0)
    c_up = E - (1.0 + eps) ** 2 * N_outer
    c_lo = (1.0 - eps) ** 2 * N_half - E
    return IndexFrequencyRelation(r, eps, eta, E, N_outer, N_half, c_up, c_lo,
                                  holds_with_zero=(c_up <= 0.0 and c_lo <= 0.0))


@dataclass(frozen=True)
class CenterChangeCheck:
    x1: np.ndarray
    x2: np.ndarray
    rho: float
    C_factor: float
    E1: float                  # E(x1, rho)
    E2: float                  # E(x2, C rho)
    threshold: float           # 0.99 E1
    passed: bool


def changing_center_check(f: BiharmonicFunction, x1, x2, rho: float,
                          C_factor: float = 4.0, depth: int = 4) -> CenterChangeCheck:
    """Check E(x2, C rho) >= (99/100) E(x1, rho) for nearby centers."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if not np.linalg.norm(x1 - x2) < rho:
        raise InputError("centers must satisfy |x1 - x2| < rho")
    E1 = doubling_index(f, x1, rho, depth)
    E2 = doubling_index(f, x2, C_factor * rho, depth)
    thr = TOLERANCES["changing_center_factor"] * E1
    return CenterChangeCheck(x1, x2, rho, C_factor, E1, E2, thr, E2 >= thr)
