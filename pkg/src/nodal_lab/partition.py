"""Cube-partition scans of the doubling index, the simplex covering fact,
small-Cauchy-data propagation experiments, and the measure recursion curve.

The partition scans always use an odd subdivision factor so that the tracked
hyperplane passes through subcube centers at every level, which keeps the
per-level bookkeeping (T_k counts) exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .defaults import DEFAULTS
from .doubling import cube_index
from .errors import InputError
from .geometry import Cube, Simplex, _fibonacci_sphere, cube_partition
from .nodal import extract_nodal_curves


# ---------------------------------------------------------------------------
# dividing scans


@dataclass(frozen=True)
class PartitionLevel:
    level: int
    T: int                      # exceedance count among hyperplane-meeting cubes
    scanned: int                # how many meeting cubes were scanned
    empirical_ok: bool          # T_{k+1} <= T_k (A^(n-1) - 1)
    structural_ok: bool         # T_{k+1} <= T_k A^(n-1)


@dataclass(frozen=True)
class PartitionReport:
    Q: Cube
    A: int
    hyperplane: tuple           # (axis, offset)
    E_Q: float
    threshold_rule: str
    threshold: float
    c: float
    subcube_E: dict             # lineage -> (E, meets, exceeds)
    count_half: int             # exceedances of E(Q)/2 among meeting cubes
    count_contraction: int      # exceedances of E(Q)/(1+c)
    levels: tuple

    def csv_rows(self):
        out = []
        for lineage, (E, meets, exceeds) in self.subcube_E.items():
            out.append({"address": "/".join(f"{a}:{i}" for a, i in lineage),
                        "E": E, "meets_hyperplane": int(meets),
                        "exceeds": int(exceeds)})
        return out


def dividing_scan(f, Q: Cube, A: int, hyperplane: tuple = (1, 0.0),
                  threshold_rule: str = "contraction", c: float | None = None,
                  depth: int = 1, cube_kwargs: dict | None = None) -> PartitionReport:
    """Partition Q, compute E on hyperplane-meeting subcubes, count exceedances.

    threshold_rule "half" counts E > E(Q)/2, "contraction" counts
    E > E(Q)/(1+c).  Recursion re-partitions the exceeding meeting cubes and
    counts again versus the same top-level threshold, reporting T_k per level
    together with the structural and strict per-level decay checks.
    """
    if A < 3 or A % 2 == 0:
        raise InputError("hyperplane counting needs odd A >= 3")
    if threshold_rule not in ("half", "contraction"):
        raise InputError(f"unknown threshold rule {threshold_rule!r}")
    c = c if c is not None else DEFAULTS["contraction_c"]
    kw = dict(samples=3, n_radii=16, depth=1, base_n=24, boundary_n=192)
    kw.update(cube_kwargs or {})
    axis, offset = int(hyperplane[0]), float(hyperplane[1])

    E_Q = cube_index(f, Q, **kw).E
    thr_half = E_Q / 2.0
    thr_contr = E_Q / (1.0 + c)
    threshold = thr_half if threshold_rule == "half" else thr_contr

    subcube_E: dict = {}
    count_half = 0
    count_contr = 0
    meeting_exceeding: list[Cube] = []
    scanned = 0
    for q in cube_partition(Q, A):
        meets = q.meets_hyperplane(axis, offset)
        if not meets:
            continue
        scanned += 1
        E = cube_index(f, q, **kw).E
        exceeds = E > threshold
        subcube_E[q.lineage] = (E, True, exceeds)
        if E > thr_half:
            count_half += 1
        if E > thr_contr:
            count_contr += 1
        if exceeds:
            meeting_exceeding.append(q)

    T1 = len(meeting_exceeding)
    levels = [PartitionLevel(1, T1, scanned, True, True)]
    frontier = meeting_exceeding
    layer_cap = A ** (Q.n - 1)
    for level in range(2, depth + 1):
        next_frontier = []
        scanned_k = 0
        for parent in frontier:
            for q in cube_partition(parent, A):
                if not q.meets_hyperplane(axis, offset):
                    continue
                scanned_k += 1
                E = cube_index(f, q, **kw).E
                exceeds = E > threshold
                subcube_E[q.lineage] = (E, True, exceeds)
                if exceeds:
                    next_frontier.append(q)
        Tk = len(next_frontier)
        T_prev = levels[-1].T
        levels.append(PartitionLevel(
            level, Tk, scanned_k,
            empirical_ok=Tk <= T_prev * (layer_cap - 1),
            structural_ok=Tk <= T_prev * layer_cap))
        frontier = next_frontier
        if not frontier:
            break

    return PartitionReport(Q, A, (axis, offset), E_Q, threshold_rule, threshold,
                           c, subcube_E, count_half, count_contr, tuple(levels))


# ---------------------------------------------------------------------------
# simplex covering fact


@dataclass(frozen=True)
class SimplexCheck:
    simplex: Simplex
    kappa: float
    K: float
    c: float
    rho: float
    samples: int
    worst_margin: float         # min over samples of rho - dist(sample, nearest vertex)
    passed: bool


def simplex_cover_check(S: Simplex, kappa: float, K: float, c: float,
                        samples: int = 10_000) -> SimplexCheck:
    """Sample the sphere of radius (1+c) K diam(S) about the barycenter and
    check every sample lies within K diam(S) of some vertex."""
    if not S.width > kappa:
        raise InputError(f"simplex width {S.width:.6g} does not exceed kappa={kappa:.6g}")
    n = S.vertices.shape[1]
    rho = K * S.diam
    radius = (1.0 + c) * rho
    if n == 2:
        ang = 2.0 * math.pi * np.arange(samples) / samples
        dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        dirs = _fibonacci_sphere(samples)
    pts = S.barycenter[None, :] + radius * dirs
    dists = np.sqrt(((pts[:, None, :] - S.vertices[None, :, :]) ** 2).sum(axis=2))
    margin = rho - dists.min(axis=1)
    worst = float(margin.min())
    return SimplexCheck(S, kappa, K, c, rho, samples, worst, worst >= 0.0)


def find_min_K(S: Simplex, c: float, kappa: float = 0.0, samples: int = 10_000,
               lo: float = 0.05, hi: float = 16.0, iters: int = 40) -> float:
    """Smallest K whose covering check passes at this c.

    The pass set in K is an interval (too-small balls miss the sphere, and
    for large K the (1+c) inflation outruns the vertex spread), so a coarse
    geometric ladder first finds a passing K, then bisection sharpens the
    lower edge.
    """
    ladder = np.geomspace(lo, hi, 41)
    passing = None
    for K in ladder:
        if simplex_cover_check(S, kappa, float(K), c, samples).passed:
            passing = float(K)
            break
    if passing is None:
        raise InputError("no passing K on the search ladder; the c may be too large")
    if passing == ladder[0]:
        return passing
    fail = passing / (ladder[1] / ladder[0])
    for _ in range(iters):
        mid = 0.5 * (fail + passing)
        if simplex_cover_check(S, kappa, mid, c, samples).passed:
            passing = mid
        else:
            fail = mid
    return passing


# ---------------------------------------------------------------------------
# trapezium geometry and propagation


@dataclass(frozen=True)
class Trapezium:
    """Isosceles trapezium sitting on a cube face: base on F, top parallel."""

    base_center: np.ndarray
    inward: np.ndarray          # unit normal of F pointing into the cube
    along: np.ndarray           # unit vector along F
    base_len: float
    top_len: float
    height: float

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float)) - self.base_center
        y = pts @ self.inward
        x = pts @ self.along
        frac = np.clip(y / self.height, 0.0, 1.0)
        half = 0.5 * (self.base_len + (self.top_len - self.base_len) * frac)
        return (y >= 0.0) & (y <= self.height) & (np.abs(x) <= half)


def face_frame(Q: Cube, face: tuple) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(base_center, inward normal, along direction) of an axis face.

    `face` is (axis, "low"|"high").
    """
    axis, side = face
    if Q.n != 2:
        raise InputError("propagation experiments are 2d")
    lo, hi = Q.bounds()
    center = Q.center.copy()
    inward = np.zeros(2)
    if side == "low":
        center[axis] = lo[axis]
        inward[axis] = 1.0
    elif side == "high":
        center[axis] = hi[axis]
        inward[axis] = -1.0
    else:
        raise InputError("face side must be 'low' or 'high'")
    along = np.zeros(2)
    along[1 - axis] = 1.0
    return center, inward, along


def default_trapezium(Q: Cube, face: tuple) -> Trapezium:
    """Base = the full face, top = half the face, height = 3/4 of the side."""
    base_center, inward, along = face_frame(Q, face)
    r = Q.side
    return Trapezium(base_center, inward, along, r, r / 2.0, 0.75 * r)


def narrow_preset_trapezium(face_center, inward, along, n: int = 2) -> Trapezium:
    """Dimension-scaled narrow preset: base 1/(16 sqrt n), top 1/(32 sqrt n),
    height 3/(64 sqrt n); contains a cube of side 3/(80 sqrt n) on the base."""
    s = math.sqrt(n)
    return Trapezium(np.asarray(face_center, dtype=float),
                     np.asarray(inward, dtype=float), np.asarray(along, dtype=float),
                     1.0 / (16 * s), 1.0 / (32 * s), 3.0 / (64 * s))


@dataclass(frozen=True)
class PropagationMember:
    """One solution in a smallness-propagation family.

    `u` and `v` are vectorized samplers; `grad` returns (k, n) arrays.  If
    `epsilon` is None the data size is inferred as
    max(sup_F |u|, r sup_F |grad u|, r^2 sup_Q |v|).
    """

    u: object
    grad: object
    v: object = None
    epsilon: float | None = None
    label: str = ""


@dataclass(frozen=True)
class PropagationRecord:
    label: str
    epsilon: float
    sup_half: float
    sup_trap: float
    included: bool
    reason: str = ""


@dataclass(frozen=True)
class PropagationReport:
    Q: Cube
    face: tuple
    records: tuple
    alpha_emp: float
    alpha_trap: float
    fit_residual: float
    degenerate: bool


def cauchy_propagation_experiment(family, Q: Cube, face: tuple,
                                  grid_n: int = 512,
                                  trapezium: Trapezium | None = None) -> PropagationReport:
    """Measure how boundary-data smallness propagates into the cube.

    Each member must satisfy |u| <= 1 on Q; |u| <= eps and |grad u| <= eps/r
    on the face F; |v| <= eps/r^2 on Q (checked by sampling, violators are
    excluded with a reason).  Sups are taken over the face-adjacent half cube
    (middle half of F, depth r/2) and over the trapezium, and log sup is
    regressed on log eps.
    """
    base_center, inward, along = face_frame(Q, face)
    r = Q.side
    trap = trapezium if trapezium is not None else default_trapezium(Q, face)

    lo, hi = Q.bounds()
    xs = np.linspace(lo[0], hi[0], grid_n)
    ys = np.linspace(lo[1], hi[1], grid_n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    t_face = np.linspace(-r / 2.0, r / 2.0, 2048)
    face_pts = base_center[None, :] + t_face[:, None] * along[None, :]

    # face-adjacent half cube: middle half of F, depth r/2
    rel = pts - base_center
    depth_c = rel @ inward
    lateral = rel @ along
    half_mask = (depth_c >= 0) & (depth_c <= r / 2.0) & (np.abs(lateral) <= r / 4.0)
    trap_mask = trap.contains(pts)

    slack = 1.0 + 1e-9
    records = []
    for k, mem in enumerate(family):
        label = mem.label or f"member{k}"
        u_all = np.asarray(mem.u(pts), dtype=float)
        u_face = np.asarray(mem.u(face_pts), dtype=float)
        g_face = np.asarray(mem.grad(face_pts), dtype=float)
        gn_face = np.linalg.norm(g_face, axis=1)
        v_all = (np.asarray(mem.v(pts), dtype=float)
                 if mem.v is not None else np.zeros(len(pts)))
        eps = mem.epsilon
        if eps is None:
            eps = max(float(np.max(np.abs(u_face))),
                      r * float(np.max(gn_face)),
                      r * r * float(np.max(np.abs(v_all))))
        reason = ""
        if np.max(np.abs(u_all)) > slack:
            reason = "sup |u| over Q exceeds 1"
        elif eps <= 0.0:
            reason = "degenerate data size"
        elif np.max(np.abs(u_face)) > eps * slack:
            reason = "|u| on F exceeds epsilon"
        elif np.max(gn_face) > (eps / r) * slack:
            reason = "|grad u| on F exceeds epsilon/r"
        elif np.max(np.abs(v_all)) > (eps / r ** 2) * slack:
            reason = "|v| on Q exceeds epsilon/r^2"
        sup_half = float(np.max(np.abs(u_all[half_mask])))
        sup_trap = float(np.max(np.abs(u_all[trap_mask])))
        records.append(PropagationRecord(label, float(eps), sup_half, sup_trap,
                                         included=(reason == ""), reason=reason))

    good = [(rec.epsilon, rec.sup_half, rec.sup_trap) for rec in records
            if rec.included and rec.sup_half > 0 and rec.epsilon > 0]
    if len(good) < 2:
        return PropagationReport(Q, face, tuple(records),
                                 float("nan"), float("nan"), float("nan"), True)
    le = np.log([g[0] for g in good])
    lh = np.log([g[1] for g in good])
    lt = np.log([max(g[2], 1e-300) for g in good])
    coef_h = np.polyfit(le, lh, 1)
    coef_t = np.polyfit(le, lt, 1)
    resid = float(np.max(np.abs(np.polyval(coef_h, le) - lh)))
    return PropagationReport(Q, face, tuple(records),
                             alpha_emp=float(coef_h[0]), alpha_trap=float(coef_t[0]),
                             fit_residual=resid, degenerate=False)


def harmonic_sine_family(m_values, scale: float = math.pi) -> tuple[list[PropagationMember], Cube, tuple]:
    """u_m = sin(m x) sinh(m y) / sinh(m pi) on [0, pi]^2 with data on y = 0.

    Returns (members, Q, face); data sizes are inferred by the experiment.
    """
    Q = Cube(np.array([scale / 2.0, scale / 2.0]), scale / 2.0)
    face = (1, "low")
    members = []
    for m in m_values:
        denom = math.sinh(m * math.pi)

        def u(p, m=m, denom=denom):
            p = np.atleast_2d(p)
            return np.sin(m * p[:, 0]) * np.sinh(m * p[:, 1]) / denom

        def grad(p, m=m, denom=denom):
            p = np.atleast_2d(p)
            gx = m * np.cos(m * p[:, 0]) * np.sinh(m * p[:, 1]) / denom
            gy = m * np.sin(m * p[:, 0]) * np.cosh(m * p[:, 1]) / denom
            return np.stack([gx, gy], axis=1)

        members.append(PropagationMember(u=u, grad=grad, v=None, label=f"m={m}"))
    return members, Q, face


def linear_ramp_family(eps_values) -> tuple[list[PropagationMember], Cube, tuple]:
    """u = eps * y on the unit square with data on y = 0; exact exponent 1."""
    Q = Cube(np.array([0.5, 0.5]), 0.5)
    face = (1, "low")
    members = []
    for eps in eps_values:
        def u(p, eps=eps):
            return eps * np.atleast_2d(p)[:, 1]

        def grad(p, eps=eps):
            p = np.atleast_2d(p)
            return np.stack([np.zeros(len(p)), np.full(len(p), eps)], axis=1)

        members.append(PropagationMember(u=u, grad=grad, v=None, label=f"eps={eps}"))
    return members, Q, face


# ---------------------------------------------------------------------------
# empirical measure recursion


@dataclass(frozen=True)
class FCurve:
    """Empirical sup of normalized nodal measure versus doubling index cap.

    F(E) = max over (member, cube) pairs with E(cube) <= E of
    measure / diam^(n-1); estimated over a declared finite family, so every
    value here is the empirical surrogate of a true supremum.
    """

    E_grid: tuple
    F_values: tuple
    is_bad: tuple
    A2: int
    c: float
    alpha: float
    C_envelope: float
    pairs: tuple                # (E(cube), normalized measure) per pair

    def csv_rows(self):
        return [{"E": e, "F_emp": fv, "is_bad": int(bad)}
                for e, fv, bad in zip(self.E_grid, self.F_values, self.is_bad)]


def f_recursion(family, cubes, A2: int | None = None, c: float | None = None,
                E_grid=None, grid_n: int = 256,
                cube_kwargs: dict | None = None) -> FCurve:
    """Estimate the measure-vs-index curve and its geometric recursion.

    Bad points are grid values with F(E) >= 4 A2 F(E/(1+c)); the implied
    growth exponent is alpha = log_{1+c}(4 A2) and C_envelope makes
    F(E) <= C E^alpha hold on the whole grid.
    """
    if not family:
        raise InputError("family must be nonempty")
    A2 = A2 if A2 is not None else 9
    c = c if c is not None else DEFAULTS["contraction_c"]
    kw = dict(samples=3, n_radii=16, depth=1, base_n=24, boundary_n=192)
    kw.update(cube_kwargs or {})

    pairs = []
    for f in family:
        for Q in cubes:
            E = cube_index(f, Q, **kw).E
            m = extract_nodal_curves(f, Q, grid_n).total_length
            pairs.append((E, m / Q.diam ** (Q.n - 1)))

    def F_emp(E):
        vals = [m for e, m in pairs if e <= E]
        return max(vals) if vals else 0.0

    if E_grid is None:
        emax = max(e for e, _ in pairs)
        E_grid = np.linspace(max(emax / 16.0, 1e-3), emax, 12)
    E_grid = tuple(float(e) for e in E_grid)
    F_values = tuple(F_emp(e) for e in E_grid)
    is_bad = []
    for e, fv in zip(E_grid, F_values):
        prev = F_emp(e / (1.0 + c))
        if fv <= 0.0:
            is_bad.append(False)
        elif prev <= 0.0:
            is_bad.append(True)
        else:
            is_bad.append(fv >= 4.0 * A2 * prev)
    alpha = math.log(4.0 * A2) / math.log(1.0 + c)
    positive = [(e, fv) for e, fv in zip(E_grid, F_values) if fv > 0 and e > 0]
    C_env = max((fv / e ** alpha for e, fv in positive), default=float("nan"))
    return FCurve(E_grid, F_values, tuple(is_bad), A2, c, alpha, C_env, tuple(pairs))
