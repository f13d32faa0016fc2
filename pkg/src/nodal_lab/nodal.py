"""Nodal sets in 2d: extraction, length, strata, covers, and measure bounds.

Zero curves are extracted by marching squares with linear interpolation on a
square grid over the region's bounding box, clipped to the region.  Grid
values that are exactly zero are pushed to +1e-300 (deterministic tie rule),
and ambiguous saddle cells are resolved by the sign of the cell-center mean,
which is symmetric under u -> -u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .defaults import DEFAULTS, TOLERANCES
from .errors import DegenerateDenominatorError, InputError
from .frequency import frequency_components, gradient_frequencies
from .geometry import Ball, Cube, PolarMetric
from .polynomials import BiharmonicFunction, evaluate_jet

EUCLID2 = PolarMetric(2)


@dataclass(frozen=True)
class NodalCurveSet:
    """Polyline approximation of {u = 0} inside a region."""

    segments: np.ndarray        # (m, 2, 2): endpoint pairs
    h: float                    # grid spacing
    region: object

    @property
    def total_length(self) -> float:
        if len(self.segments) == 0:
            return 0.0
        d = self.segments[:, 1, :] - self.segments[:, 0, :]
        return float(np.sum(np.sqrt(np.sum(d ** 2, axis=1))))

    def midpoints(self) -> np.ndarray:
        if len(self.segments) == 0:
            return np.zeros((0, 2))
        return 0.5 * (self.segments[:, 0, :] + self.segments[:, 1, :])

    def lengths(self) -> np.ndarray:
        if len(self.segments) == 0:
            return np.zeros(0)
        d = self.segments[:, 1, :] - self.segments[:, 0, :]
        return np.sqrt(np.sum(d ** 2, axis=1))

    def to_csv(self, path):
        flat = self.segments.reshape(-1, 4) if len(self.segments) else np.zeros((0, 4))
        np.savetxt(path, flat, delimiter=",", header="x1,y1,x2,y2", comments="")


def _region_box(region) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(region, Ball):
        return region.center - region.radius, region.center + region.radius
    if isinstance(region, Cube):
        return region.bounds()
    raise InputError("region must be a Ball or a Cube")


def _clip_to_disk(segments: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    """Keep the in-disk part of each short segment (drop both-outside ones)."""
    if len(segments) == 0:
        return segments
    p = segments[:, 0, :] - center
    q = segments[:, 1, :] - center
    pin = np.sum(p ** 2, axis=1) <= radius ** 2
    qin = np.sum(q ** 2, axis=1) <= radius ** 2
    keep_both = pin & qin
    mixed = pin ^ qin
    out = [segments[keep_both]]
    if np.any(mixed):
        pm = p[mixed]
        qm = q[mixed]
        d = qm - pm
        a = np.sum(d ** 2, axis=1)
        b = 2 * np.sum(pm * d, axis=1)
        c = np.sum(pm ** 2, axis=1) - radius ** 2
        disc = np.sqrt(np.maximum(b ** 2 - 4 * a * c, 0.0))
        t1 = (-b - disc) / (2 * a)
        t2 = (-b + disc) / (2 * a)
        inside_first = pin[mixed]
        t = np.where(inside_first, t2, t1)
        t = np.clip(t, 0.0, 1.0)
        cut = pm + t[:, None] * d
        new = np.empty((mixed.sum(), 2, 2))
        new[:, 0, :] = np.where(inside_first[:, None], pm, cut) + center
        new[:, 1, :] = np.where(inside_first[:, None], cut, qm) + center
        out.append(new)
    return np.concatenate(out, axis=0) if len(out) > 1 else out[0]


def extract_nodal_curves(f, region, grid_n: int = 512) -> NodalCurveSet:
    """Marching squares on a grid_n x grid_n lattice over the region.

    Works for any object with a vectorized ``evaluate`` (or plain callable);
    2d only.
    """
    if grid_n < 32:
        raise InputError("grid_n must be >= 32")
    lo, hi = _region_box(region)
    if lo.shape[0] != 2:
        raise InputError("nodal extraction is 2d only")
    xs = np.linspace(lo[0], hi[0], grid_n)
    ys = np.linspace(lo[1], hi[1], grid_n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    sampler = f.evaluate if hasattr(f, "evaluate") else f
    vals = np.asarray(sampler(pts), dtype=float).reshape(grid_n, grid_n)
    vals = np.where(vals == 0.0, 1e-300, vals)  # tie rule: zero joins the + side
    pos = vals > 0.0

    # edge crossings: x-edges between (i, j) and (i+1, j); y-edges between
    # (i, j) and (i, j+1)
    cross_x = pos[:-1, :] != pos[1:, :]
    cross_y = pos[:, :-1] != pos[:, 1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = vals[:-1, :] / (vals[:-1, :] - vals[1:, :])
        ty = vals[:, :-1] / (vals[:, :-1] - vals[:, 1:])
    hx = xs[1] - xs[0]
    hy = ys[1] - ys[0]
    px_x = xs[:-1, None] + tx * hx          # crossing x on x-edges
    px_y = np.broadcast_to(ys[None, :], tx.shape)
    py_x = np.broadcast_to(xs[:, None], ty.shape)
    py_y = ys[None, :-1] + ty * hy

    # per-cell edge flags: bottom/top are x-edges at j and j+1, left/right are
    # y-edges at i and i+1
    b = cross_x[:, :-1]
    t = cross_x[:, 1:]
    l = cross_y[:-1, :]
    r = cross_y[1:, :]
    count = b.astype(int) + t.astype(int) + l.astype(int) + r.astype(int)

    def edge_point(which, ii, jj):
        if which == "b":
            return np.stack([px_x[ii, jj], px_y[ii, jj]], axis=-1)
        if which == "t":
            return np.stack([px_x[ii, jj + 1], px_y[ii, jj + 1]], axis=-1)
        if which == "l":
            return np.stack([py_x[ii, jj], py_y[ii, jj]], axis=-1)
        return np.stack([py_x[ii + 1, jj], py_y[ii + 1, jj]], axis=-1)

    segs = []
    two = count == 2
    pairs = [("b", "t", b & t), ("b", "l", b & l), ("b", "r", b & r),
             ("t", "l", t & l), ("t", "r", t & r), ("l", "r", l & r)]
    for e1, e2, mask in pairs:
        m = mask & two
        if np.any(m):
            ii, jj = np.nonzero(m)
            p1 = edge_point(e1, ii, jj)
            p2 = edge_point(e2, ii, jj)
            segs.append(np.stack([p1, p2], axis=1))

    # ambiguous saddles: four crossings, resolved by the cell-center mean
    four = count == 4
    if np.any(four):
        ii, jj = np.nonzero(four)
        centers = 0.25 * (vals[ii, jj] + vals[ii + 1, jj]
                          + vals[ii, jj + 1] + vals[ii + 1, jj + 1])
        centers = np.where(centers == 0.0, 1e-300, centers)
        same = (centers > 0) == pos[ii, jj]
        for k in range(len(ii)):
            i_, j_ = ii[k], jj[k]
            if same[k]:
                # corners opposite in sign to v00 are isolated
                segs.append(np.stack([edge_point("b", i_, j_), edge_point("r", i_, j_)])[None])
                segs.append(np.stack([edge_point("t", i_, j_), edge_point("l", i_, j_)])[None])
            else:
                segs.append(np.stack([edge_point("b", i_, j_), edge_point("l", i_, j_)])[None])
                segs.append(np.stack([edge_point("t", i_, j_), edge_point("r", i_, j_)])[None])

    segments = np.concatenate(segs, axis=0) if segs else np.zeros((0, 2, 2))
    if isinstance(region, Ball):
        segments = _clip_to_disk(segments, region.center, region.radius)
    return NodalCurveSet(segments=segments, h=max(hx, hy), region=region)


def measure_h(curves: NodalCurveSet) -> float:
    """Total polyline length (the 1-Hausdorff surrogate)."""
    return curves.total_length


# ---------------------------------------------------------------------------
# strata


@dataclass(frozen=True)
class StratumLabel:
    label: str                 # "C1" | "C2" | "C3" | "C4"
    point: np.ndarray
    thresholds: tuple          # effective (tau1, tau2, tau3)


def classify_strata(f: BiharmonicFunction, points, tau1: float | None = None,
                    tau2: float | None = None, tau3: float | None = None) -> list[StratumLabel]:
    """Label points by the lowest non-vanishing derivative order of u.

    Defaults scale 1e-9 by the local jet magnitude, which only guards
    rounding: the jets themselves are exact polynomial evaluations.
    """
    base = TOLERANCES["stratum_threshold"]
    out = []
    for pt in np.atleast_2d(np.asarray(points, dtype=float)):
        jet = evaluate_jet(f, pt)
        g = float(np.linalg.norm(jet.grad))
        h2 = jet.hess_norm
        h3 = jet.third_norm
        scale = max(g, h2, h3, 1e-300)
        t1 = tau1 if tau1 is not None else base * scale
        t2 = tau2 if tau2 is not None else base * scale
        t3 = tau3 if tau3 is not None else base * scale
        if g > t1:
            label = "C1"
        elif h2 > t2:
            label = "C2"
        elif h3 > t3:
            label = "C3"
        else:
            label = "C4"
        out.append(StratumLabel(label, pt, (t1, t2, t3)))
    return out


# ---------------------------------------------------------------------------
# separation stability


@dataclass(frozen=True)
class SeparationRecord:
    eta: float
    m1: float                  # measure for w1 on the shrunk ball, strong gradient
    m2: float                  # measure for w2 on the unit ball, half threshold
    factor: float
    implied_c: float
    vacuous: bool


def _c1_metrics(w, pts):
    vals = w.evaluate(pts)
    grads = w.gradient(pts)
    return vals, grads


def separation_stability(w1, w2, eta: float, region: Ball | None = None,
                         grid_n: int = 1024, pair_samples: int = 400) -> SeparationRecord:
    """Compare strong-gradient nodal measure of two C1-close functions.

    Preconditions (checked by sampling, the documented proxies):
    sampled C1 distance <= eta^5 / 2 and sampled C^{1,1/2} norms <= 1.
    """
    if not 0.0 < eta <= 0.5:
        raise InputError("eta must lie in (0, 1/2]")
    region = region if region is not None else Ball(np.zeros(2), 1.0)
    rng = np.random.default_rng(23)
    pts = region.center + region.radius * _unit_ball_points(rng, 2000)
    v1, g1 = _c1_metrics(w1, pts)
    v2, g2 = _c1_metrics(w2, pts)
    c1_dist = max(float(np.max(np.abs(v1 - v2))),
                  float(np.max(np.linalg.norm(g1 - g2, axis=1))))
    if c1_dist > 0.5 * eta ** 5 * (1.0 + 1e-9):
        raise InputError(f"sampled C1 distance {c1_dist:.3e} exceeds eta^5/2")
    for vals, grads in ((v1, g1), (v2, g2)):
        holder = 0.0
        idx = rng.integers(0, len(pts), size=(pair_samples, 2))
        for i, j in idx:
            d = np.linalg.norm(pts[i] - pts[j])
            if d > 1e-12:
                holder = max(holder, float(np.linalg.norm(grads[i] - grads[j])) / math.sqrt(d))
        norm = max(float(np.max(np.abs(vals))), float(np.max(np.linalg.norm(grads, axis=1))), holder)
        if norm > 1.0 + 1e-9:
            raise InputError(f"sampled C^(1,1/2) norm {norm:.3e} exceeds 1")

    inner = Ball(region.center, (1.0 - eta) * region.radius)
    curves1 = extract_nodal_curves(w1, inner, grid_n)
    m1 = _strong_gradient_length(curves1, w1, eta)
    curves2 = extract_nodal_curves(w2, region, grid_n)
    m2 = _strong_gradient_length(curves2, w2, eta / 2.0)
    vacuous = m1 == 0.0 and m2 == 0.0
    factor = m1 / m2 if m2 > 0 else (0.0 if vacuous else float("inf"))
    implied_c = max(factor - 1.0, 0.0) / math.sqrt(eta)
    return SeparationRecord(eta, m1, m2, factor, implied_c, vacuous)


def _unit_ball_points(rng, count):
    out = []
    while len(out) < count:
        c = rng.uniform(-1, 1, size=2)
        if np.dot(c, c) <= 1.0:
            out.append(c)
    return np.array(out)


def _strong_gradient_length(curves: NodalCurveSet, w, threshold: float) -> float:
    if len(curves.segments) == 0:
        return 0.0
    mids = curves.midpoints()
    gnorm = np.linalg.norm(w.gradient(mids), axis=1)
    keep = gnorm > threshold
    return float(np.sum(curves.lengths()[keep]))


# ---------------------------------------------------------------------------
# covers


@dataclass(frozen=True)
class CoverReport:
    balls: tuple
    sum_pow: float             # sum of r_i^(n-1)
    residual: float            # candidate length left outside the cover
    params: dict = field(compare=False, default_factory=dict)
    budget: float = 0.5
    budget_ok: bool = True


def _greedy_cover(candidates: np.ndarray, order_key: np.ndarray, r_cap: float,
                  min_radius: float = 1e-12):
    """Deterministic greedy ball cover with geometrically shrinking radii."""
    balls = []
    if len(candidates) == 0:
        return balls, np.zeros(0, dtype=bool)
    order = np.lexsort((candidates[:, 1], candidates[:, 0], order_key))
    covered = np.zeros(len(candidates), dtype=bool)
    radius = r_cap
    for k in order:
        if covered[k] or radius < min_radius:
            continue
        center = candidates[k]
        balls.append(Ball(center.copy(), radius))
        covered |= np.sum((candidates - center) ** 2, axis=1) <= radius ** 2
        radius *= 0.5
    return balls, covered


def critical_cover(f: BiharmonicFunction, region, gamma: float, r_cap: float,
                   grid_n: int = 512) -> CoverReport:
    """Greedy cover of the sampled weak-gradient part of the nodal set.

    Candidates are segment midpoints with |grad u| < gamma, swept in order of
    increasing gradient; ball i has radius r_cap / 2^i.
    """
    curves = extract_nodal_curves(f, region, grid_n)
    if len(curves.segments) == 0:
        return CoverReport((), 0.0, 0.0, {"gamma": gamma, "r_cap": r_cap}, 0.5, True)
    mids = curves.midpoints()
    gnorm = np.linalg.norm(f.gradient(mids), axis=1)
    weak = gnorm < gamma
    candidates = mids[weak]
    lengths = curves.lengths()[weak]
    balls, covered = _greedy_cover(candidates, gnorm[weak], r_cap)
    residual = float(np.sum(lengths[~covered])) if len(candidates) else 0.0
    sum_pow = math.fsum(bl.radius for bl in balls)   # n-1 = 1 in 2d
    return CoverReport(tuple(balls), sum_pow, residual,
                       {"gamma": gamma, "r_cap": r_cap, "grid_n": grid_n},
                       budget=0.5, budget_ok=sum_pow <= 0.5)


def find_gamma(f: BiharmonicFunction, region, r_cap: float, budget: float = 0.5,
               grid_n: int = 512, iters: int = 30) -> float:
    """Largest gamma (by bisection) whose greedy cover stays within budget."""
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        rep = critical_cover(f, region, mid, r_cap, grid_n)
        if rep.sum_pow <= budget and rep.residual == 0.0:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# stratified measure bound


@dataclass(frozen=True)
class StratifiedLevel:
    radius: float
    measures: dict             # stratum label -> length outside the cover
    cover: CoverReport
    bound_ratio: float         # total outside measure / (N1 r^(n-1))


@dataclass(frozen=True)
class StratifiedBoundReport:
    levels: tuple
    total_measure: float
    N1: float
    N1_plus: float             # N1(u + v)
    N1_minus: float            # N1(u - v)
    uv_trick_ok: bool          # min(N1(u+v), N1(u-v)) <= 2 N1(u)
    budget_ok: bool


def stratified_bound(f: BiharmonicFunction, center, r: float, grid_n: int = 512,
                     depth: int = 1) -> StratifiedBoundReport:
    """One-step degenerate-point cover with per-stratum outside measures,
    iterated `depth` times into the cover balls.

    Degenerate candidates are curve midpoints whose gradient is small at grid
    scale (|grad u| < 10 h (|hess| + h |third|)); cover radii start at r/8 and
    halve, so the radius sum respects the r/2 budget by construction.
    """
    center = np.asarray(center, dtype=float)
    levels = []
    total = 0.0

    def run_level(ball: Ball):
        nonlocal total
        curves = extract_nodal_curves(f, ball, grid_n)
        if len(curves.segments) == 0:
            empty = CoverReport((), 0.0, 0.0, {}, 0.5 * ball.radius, True)
            levels.append(StratifiedLevel(ball.radius, {}, empty, 0.0))
            return []
        mids = curves.midpoints()
        lengths = curves.lengths()
        g = np.linalg.norm(f.gradient(mids), axis=1)
        hess = np.sqrt(np.sum(f.hessian(mids) ** 2, axis=(1, 2)))
        third = np.sqrt(np.sum(f.third_tensor(mids) ** 2, axis=(1, 2, 3)))
        h = curves.h
        degenerate = g < 10.0 * h * (hess + h * third)
        balls, _ = _greedy_cover(mids[degenerate], g[degenerate], ball.radius / 8.0)
        sum_pow = math.fsum(bl.radius for bl in balls)
        budget = 0.5 * ball.radius
        cover = CoverReport(tuple(balls), sum_pow, 0.0,
                            {"level_radius": ball.radius},
                            budget=budget, budget_ok=sum_pow <= budget)
        outside = np.ones(len(mids), dtype=bool)
        for bl in balls:
            outside &= np.sum((mids - bl.center) ** 2, axis=1) > bl.radius ** 2
        measures: dict = {}
        if np.any(outside):
            labels = classify_strata(f, mids[outside])
            for lab, ln in zip(labels, lengths[outside]):
                measures[lab.label] = measures.get(lab.label, 0.0) + float(ln)
        level_total = math.fsum(measures.values())
        total += level_total
        try:
            n1 = gradient_frequencies(f, EUCLID2, ball.center, ball.radius).N1
            ratio = level_total / (n1 * ball.radius) if n1 > 0 else float("inf")
        except DegenerateDenominatorError:
            ratio = float("nan")
        levels.append(StratifiedLevel(ball.radius, measures, cover, ratio))
        return balls

    frontier = [Ball(center, r)]
    for _ in range(depth + 1):
        next_frontier = []
        for ball in frontier:
            next_frontier.extend(run_level(ball))
        if not next_frontier:
            break
        frontier = next_frontier

    try:
        n1 = gradient_frequencies(f, EUCLID2, center, r).N1
    except DegenerateDenominatorError:
        n1 = float("nan")
    try:
        n1p = gradient_frequencies(f.shift_by_v(+1.0), EUCLID2, center, r).N1
        n1m = gradient_frequencies(f.shift_by_v(-1.0), EUCLID2, center, r).N1
        trick = min(n1p, n1m) <= 2.0 * n1 * (1.0 + 1e-9)
    except DegenerateDenominatorError:
        n1p = n1m = float("nan")
        trick = True
    return StratifiedBoundReport(
        levels=tuple(levels), total_measure=total, N1=n1,
        N1_plus=n1p, N1_minus=n1m, uv_trick_ok=trick,
        budget_ok=all(lv.cover.budget_ok for lv in levels))


# ---------------------------------------------------------------------------
# measure vs frequency across a family


@dataclass(frozen=True)
class NodalBoundRow:
    measure: float
    N: float
    ratio: float
    skipped: bool


@dataclass(frozen=True)
class NodalBoundReport:
    rows: tuple
    alpha_emp: float            # log-log slope of measure vs N
    C_fit: float                # envelope constant for measure <= C N^alpha r^(n-1)
    r: float
    bound_holds: bool


def nodal_bound_report(family, center, r: float, grid_n: int = 512,
                       C0: float | None = None) -> NodalBoundReport:
    """Measure the nodal set of each member in B_{r/2} and regress against
    N = max(C0, N(center, r))."""
    center = np.asarray(center, dtype=float)
    C0 = C0 if C0 is not None else DEFAULTS["frequency_floor"]
    rows = []
    for f in family:
        try:
            _, _, N = frequency_components(f, EUCLID2, center, r)
        except DegenerateDenominatorError:
            rows.append(NodalBoundRow(float("nan"), float("nan"), float("nan"), True))
            continue
        N = max(C0, N)
        curves = extract_nodal_curves(f, Ball(center, r / 2.0), grid_n)
        m = curves.total_length
        rows.append(NodalBoundRow(m, N, m / (N * r), False))
    pts = [(math.log(row.N), math.log(row.measure))
           for row in rows if not row.skipped and row.measure > 0 and row.N > 0]
    if len(pts) >= 2 and max(x for x, _ in pts) > min(x for x, _ in pts):
        xs = np.array([x for x, _ in pts])
        ys = np.array([y for _, y in pts])
        alpha = float(np.polyfit(xs, ys, 1)[0])
    else:
        alpha = float("nan")
    if math.isnan(alpha):
        c_fit = float("nan")
        holds = True
    else:
        c_fit = max((row.measure / (row.N ** alpha * r)
                     for row in rows if not row.skipped), default=float("nan"))
        holds = all(row.measure <= c_fit * row.N ** alpha * r * (1 + 1e-12)
                    for row in rows if not row.skipped)
    return NodalBoundReport(tuple(rows), alpha, c_fit, r, holds)
