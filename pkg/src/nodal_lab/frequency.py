"""Frequency diagnostics for a biharmonic pair (u, v = Laplacian u).

Central quantities, all against the metric volume elements:

    D(x0, r) = int_{B_r} (|grad u|^2 + |grad v|^2 + u v) dV
    H(x0, r) = int_{dB_r} (u^2 + v^2) dS
    N(x0, r) = r D / H

plus the gradient variants N1, N2, scan-style monotonicity reports, doubling
ratio checks in L2 and sup norms, and the harmonic/potential splitting of D
into D1..D4 driven by a disk solve.

The metric is interpreted in polar normal form around the requested center,
matching how every centered statement is normalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .defaults import DEFAULTS, TOLERANCES
from .errors import DegenerateDenominatorError, InputError
from .geometry import Ball, PolarMetric, ball_quadrature, sphere_quadrature
from .polynomials import BiharmonicFunction, almansi_compose, HarmonicPolynomial


def _metric_grad_sq(metric: PolarMetric, center: np.ndarray, pts: np.ndarray,
                    grad: np.ndarray) -> np.ndarray:
    """|grad_M w|^2 at points given the Cartesian gradient of w.

    Radial direction carries weight 1; angular components are contracted with
    the inverse angular block at the point's radius (orthonormal round frame
    for n = 3).
    """
    if metric.is_euclidean:
        return np.sum(grad ** 2, axis=1)
    rel = pts - center
    rho = np.sqrt(np.sum(rel ** 2, axis=1))
    rho = np.where(rho == 0.0, 1.0, rho)
    e_r = rel / rho[:, None]
    u_r = np.sum(grad * e_r, axis=1)
    if metric.n == 2:
        dtheta = (-rel[:, 1] * grad[:, 0] + rel[:, 0] * grad[:, 1]) / rho
        binv = metric.b_inverse(rho)[:, 0, 0]
        return u_r ** 2 + binv * dtheta ** 2
    tangent = grad - u_r[:, None] * e_r
    zhat = np.array([0.0, 0.0, 1.0])
    t1 = np.cross(np.broadcast_to(zhat, e_r.shape), e_r)
    norms = np.linalg.norm(t1, axis=1)
    # poles: any horizontal frame works there, pick x
    bad = norms < 1e-12
    t1[bad] = np.array([1.0, 0.0, 0.0])
    norms = np.where(bad, 1.0, norms)
    t1 /= norms[:, None]
    t2 = np.cross(e_r, t1)
    comps = np.stack([np.sum(tangent * t1, axis=1), np.sum(tangent * t2, axis=1)], axis=1)
    binv3 = metric.b_inverse(rho)
    return u_r ** 2 + np.einsum("ki,kij,kj->k", comps, binv3, comps)


def _default_degree(f: BiharmonicFunction) -> int:
    return 2 * max(f.degree, 1) + DEFAULTS["quadrature_margin"]


def _check_denominator(value: float, integrand_max: float, weight_sum: float, what: str):
    threshold = TOLERANCES["degenerate_denominator"] * integrand_max * weight_sum
    if value <= threshold:
        raise DegenerateDenominatorError(f"{what} fell below the scale-free threshold")


def frequency_components(f: BiharmonicFunction, metric: PolarMetric, center, r: float,
                         degree: int | None = None) -> tuple[float, float, float]:
    """Return (D, H, N) at the given center and radius.

    Raises DegenerateDenominatorError when H is at noise level, e.g. for the
    zero function.
    """
    if not 0.0 < r <= DEFAULTS["chart_radius"]:
        raise InputError("radius must lie in (0, 1]")
    center = np.asarray(center, dtype=float)
    deg = degree if degree is not None else _default_degree(f)
    ball = Ball(center, r)

    srule = sphere_quadrature(metric, ball, deg)
    su = f.evaluate(srule.nodes)
    sv = f.evaluate_v(srule.nodes)
    s_integrand = su ** 2 + sv ** 2
    H = float(np.dot(srule.weights, s_integrand))
    _check_denominator(H, float(np.max(s_integrand, initial=0.0)),
                       float(np.sum(srule.weights)), "H")

    brule = ball_quadrature(metric, ball, deg)
    gu = f.gradient(brule.nodes)
    gv = f.gradient_v(brule.nodes)
    uu = f.evaluate(brule.nodes)
    vv = f.evaluate_v(brule.nodes)
    d_integrand = (_metric_grad_sq(metric, center, brule.nodes, gu)
                   + _metric_grad_sq(metric, center, brule.nodes, gv)
                   + uu * vv)
    D = float(np.dot(brule.weights, d_integrand))
    return D, H, r * D / H


@dataclass(frozen=True)
class GradientFrequencies:
    r: float
    N1: float
    N2: float


def gradient_frequencies(f: BiharmonicFunction, metric: PolarMetric, center, r: float,
                         degree: int | None = None) -> GradientFrequencies:
    """First and second order frequency ratios.

    N1 = r * int_B (|grad u|^2 + |grad v|^2) / int_dB (u^2 + v^2)
    N2 = r * int_B (|hess u|^2 + |hess v|^2) / int_dB (|grad u|^2 + |grad v|^2)

    Hessians are Frobenius norms of the Cartesian second derivatives; gradient
    norms use the metric inner product.
    """
    if not 0.0 < r <= DEFAULTS["chart_radius"]:
        raise InputError("radius must lie in (0, 1]")
    center = np.asarray(center, dtype=float)
    deg = degree if degree is not None else _default_degree(f)
    ball = Ball(center, r)
    srule = sphere_quadrature(metric, ball, deg)
    brule = ball_quadrature(metric, ball, deg)

    su = f.evaluate(srule.nodes)
    sv = f.evaluate_v(srule.nodes)
    h_int = su ** 2 + sv ** 2
    H = float(np.dot(srule.weights, h_int))
    _check_denominator(H, float(np.max(h_int, initial=0.0)),
                       float(np.sum(srule.weights)), "N1 denominator")

    gu_b = f.gradient(brule.nodes)
    gv_b = f.gradient_v(brule.nodes)
    grad_b = (_metric_grad_sq(metric, center, brule.nodes, gu_b)
              + _metric_grad_sq(metric, center, brule.nodes, gv_b))
    N1 = r * float(np.dot(brule.weights, grad_b)) / H

    gu_s = f.gradient(srule.nodes)
    gv_s = f.gradient_v(srule.nodes)
    grad_s = (_metric_grad_sq(metric, center, srule.nodes, gu_s)
              + _metric_grad_sq(metric, center, srule.nodes, gv_s))
    denom2 = float(np.dot(srule.weights, grad_s))
    _check_denominator(denom2, float(np.max(grad_s, initial=0.0)),
                       float(np.sum(srule.weights)), "N2 denominator")
    hess_u = f.hessian(brule.nodes)
    v_fn = almansi_compose(f.v_harmonic, HarmonicPolynomial.zero(f.n))
    hess_v = v_fn.hessian(brule.nodes)
    hess_int = np.sum(hess_u ** 2, axis=(1, 2)) + np.sum(hess_v ** 2, axis=(1, 2))
    N2 = r * float(np.dot(brule.weights, hess_int)) / denom2
    return GradientFrequencies(r=r, N1=N1, N2=N2)


@dataclass(frozen=True)
class FrequencyProfile:
    """Sampled (r, D, H, N) curves with central-difference log-derivatives."""

    center: np.ndarray
    metric_family: str
    C0: float
    samples: tuple            # (r, D, H, N) rows
    logderiv: tuple           # (r, N'/N) rows at interior grid points
    C_emp: float
    growth_ok: bool
    floor_hypothesis: bool
    floor_ok: bool
    negative_D_radii: tuple
    no_samples_above_floor: bool

    def csv_rows(self):
        """Rows of the documented schema: center, r, D, H, N, dlogN."""
        dlog = {r: val for r, val in self.logderiv}
        out = []
        for r, D, H, N in self.samples:
            out.append({
                "center_x": float(self.center[0]),
                "center_y": float(self.center[1]) if len(self.center) > 1 else 0.0,
                "r": r, "D": D, "H": H, "N": N,
                "dlogN": dlog.get(r, float("nan")),
            })
        return out


def default_r_grid() -> np.ndarray:
    return np.geomspace(DEFAULTS["r_grid_lo"], DEFAULTS["r_grid_hi"],
                        DEFAULTS["r_grid_count"])


def monotonicity_profile(f: BiharmonicFunction, metric: PolarMetric, center,
                         r_grid, C0: float = 1.0,
                         degree: int | None = None) -> FrequencyProfile:
    """Scan N over a radius grid and report the empirical monotonicity constant.

    C_emp = max(0, -min N'/N) restricted to samples with N >= C0 (and D > 0);
    the growth flag checks N(rho) <= exp(C_emp r_max) max(N(r_max), C0) on the
    grid, and the floor flag checks that N(r_min) >= 1.6 C0 forces N >= C0
    everywhere above it.
    """
    grid = np.asarray(r_grid, dtype=float)
    if grid.size < 5 or np.any(np.diff(grid) <= 0):
        raise InputError("r_grid must be strictly increasing with >= 5 points")
    center = np.asarray(center, dtype=float)
    rows = []
    for r in grid:
        D, H, N = frequency_components(f, metric, center, float(r), degree)
        rows.append((float(r), D, H, N))
    Ns = np.array([row[3] for row in rows])
    Ds = np.array([row[1] for row in rows])
    negative_D = tuple(float(grid[i]) for i in range(len(grid)) if Ds[i] <= 0)

    logderiv = []
    ratios = []
    for i in range(1, len(grid) - 1):
        dN = (Ns[i + 1] - Ns[i - 1]) / (grid[i + 1] - grid[i - 1])
        if Ns[i] != 0.0:
            val = dN / Ns[i]
            logderiv.append((float(grid[i]), float(val)))
            if Ns[i] >= C0 and Ds[i] > 0:
                ratios.append(val)
    no_samples = len(ratios) == 0
    C_emp = max(0.0, -min(ratios)) if ratios else 0.0

    bound = math.exp(C_emp * grid[-1]) * max(Ns[-1], C0)
    growth_ok = bool(np.all(Ns <= bound * (1.0 + 1e-9)))
    floor_factor = TOLERANCES["frequency_floor_factor"]
    floor_hypothesis = Ns[0] >= floor_factor * C0
    floor_ok = (not floor_hypothesis) or bool(np.min(Ns) >= C0 * (1.0 - 1e-12))

    return FrequencyProfile(
        center=center, metric_family=metric.family, C0=C0,
        samples=tuple(rows), logderiv=tuple(logderiv), C_emp=C_emp,
        growth_ok=growth_ok, floor_hypothesis=floor_hypothesis, floor_ok=floor_ok,
        negative_D_radii=negative_D, no_samples_above_floor=no_samples,
    )


@dataclass(frozen=True)
class DoublingCheck:
    """Measured doubling ratio against the frequency/index exponent bounds."""

    norm: str
    r: float
    t: float
    eps: float
    ratio: float
    log_t_ratio: float
    N_outer: float            # N(x0, r) for L2; E(x0, 2tr) for sup
    N_inner: float            # N(x0, r/t) for L2; E(x0, r) for sup
    C_req: float              # minimal C making the upper inequality hold
    C_prime_req: float        # minimal C' making the lower inequality hold
    upper_holds_with: float = field(init=False)
    clipped: bool = False
    floor_hypothesis: bool = True

    def __post_init__(self):
        object.__setattr__(self, "upper_holds_with", max(self.C_req, 0.0))


def _l2_mass(f, metric, center, r, degree):
    rule = ball_quadrature(metric, Ball(center, r), degree)
    u = f.evaluate(rule.nodes)
    v = f.evaluate_v(rule.nodes)
    integrand = u ** 2 + v ** 2
    val = float(np.dot(rule.weights, integrand))
    _check_denominator(val, float(np.max(integrand, initial=0.0)),
                       float(np.sum(rule.weights)), "L2 mass")
    return val


def doubling_check(f: BiharmonicFunction, metric: PolarMetric, center, r: float,
                   t: float, eps: float, norm: str = "L2-ball",
                   degree: int | None = None, sup_depth: int = 4) -> DoublingCheck:
    """Exact doubling ratio and the slack constants of the two-sided bounds.

    L2-ball: ratio of int(u^2+v^2) over B_r vs B_{r/t}; upper exponent
    2(1+eps)N(x0,r)+C, lower exponent 2(1-eps)N(x0,r/t)-C'.

    sup-ball: ratio of sup-mass over B_{tr} vs B_r (t > 2); upper exponent
    2(1+eps)E(x0,2tr)+C, lower 2(1-eps)E(x0,r)-C'.  The index radius 2tr is
    clipped to the chart when needed and flagged.
    """
    center = np.asarray(center, dtype=float)
    deg = degree if degree is not None else _default_degree(f)
    if norm == "L2-ball":
        if t <= 1.0:
            raise InputError("L2 doubling needs t > 1")
        if r > DEFAULTS["chart_radius"]:
            raise InputError("outer radius exceeds the chart")
        big = _l2_mass(f, metric, center, r, deg)
        small = _l2_mass(f, metric, center, r / t, deg)
        ratio = big / small
        _, _, N_outer = frequency_components(f, metric, center, r, deg)
        _, _, N_inner = frequency_components(f, metric, center, r / t, deg)
        log_ratio = math.log(ratio) / math.log(t)
        C_req = log_ratio - 2.0 * (1.0 + eps) * N_outer
        C_prime_req = 2.0 * (1.0 - eps) * N_inner - log_ratio
        floor = N_inner > TOLERANCES["frequency_floor_factor"] * DEFAULTS["frequency_floor"]
        return DoublingCheck("L2-ball", r, t, eps, ratio, log_ratio,
                             N_outer, N_inner, C_req, C_prime_req,
                             clipped=False, floor_hypothesis=floor)
    if norm == "sup-ball":
        from .doubling import doubling_index, sup_on_ball
        if t <= 2.0:
            raise InputError("sup doubling needs t > 2")
        if r * t > DEFAULTS["chart_radius"]:
            raise InputError("t*r exceeds the chart")
        big = sup_on_ball(f, Ball(center, t * r), depth=sup_depth)
        small = sup_on_ball(f, Ball(center, r), depth=sup_depth)
        denom = small.sup_u2 + small.sup_v2
        if denom <= 0.0:
            raise DegenerateDenominatorError("sup mass of the inner ball is zero")
        ratio = (big.sup_u2 + big.sup_v2) / denom
        idx_radius = 2.0 * t * r
        clipped = idx_radius > DEFAULTS["chart_radius"]
        if clipped:
            idx_radius = DEFAULTS["chart_radius"]
        E_big = doubling_index(f, center, idx_radius, depth=sup_depth)
        E_small = doubling_index(f, center, r, depth=sup_depth)
        log_ratio = math.log(ratio) / math.log(t)
        C_req = log_ratio - 2.0 * (1.0 + eps) * E_big
        C_prime_req = 2.0 * (1.0 - eps) * E_small - log_ratio
        return DoublingCheck("sup-ball", r, t, eps, ratio, log_ratio,
                             E_big, E_small, C_req, C_prime_req, clipped=clipped)
    raise InputError(f"unknown norm {norm!r}")


@dataclass(frozen=True)
class ProofDecomposition:
    """Split of D into harmonic, potential, cross, and uv parts at one radius.

    D1 = int |grad h|^2 + |grad v|^2, with h the harmonic extension of u's
    boundary trace; D2 = int |grad (u - h)|^2; D3 = 2 int grad h . grad (u-h);
    D4 = int u v.  D3 vanishes analytically; its numerical size is the main
    solver-quality diagnostic.
    """

    r: float
    D1: float
    D2: float
    D3: float
    D4: float
    D: float
    residual: float
    d3_ok: bool
    d4_ratio: float
    d2_ratio: float
    solver_meta: dict


def proof_decomposition(f: BiharmonicFunction, metric: PolarMetric, center, r: float,
                        laplace_solver=None, n_r: int = 4096,
                        n_theta: int = 16384, tol: float = 1e-6) -> ProofDecomposition:
    """Compute the D1..D4 splitting on B_r(center) with a disk Dirichlet solve.

    The solve is the cell-centered second-order scheme of the solver module;
    its angular Fourier representation is evaluated directly at the quadrature
    angles.  All five integrals use one midpoint-in-rho x trapezoid-in-theta
    rule on the solver's own radii, so D - (D1+D2+D3+D4) reflects pure
    floating-point cancellation while D3 reflects solver error.
    """
    from . import solver as solver_mod
    if metric.n != 2:
        raise InputError("the decomposition is implemented for n = 2")
    center = np.asarray(center, dtype=float)
    if laplace_solver is None:
        laplace_solver = solver_mod.solve_disk_modes

    # boundary trace sampled at FFT angles
    n_fft = 1
    while n_fft < 4 * max(f.degree, 1) + 8:
        n_fft *= 2
    theta_b = 2.0 * math.pi * np.arange(n_fft) / n_fft
    bpts = center[None, :] + r * np.column_stack([np.cos(theta_b), np.sin(theta_b)])
    trace = f.evaluate(bpts)
    modes = laplace_solver(metric, r, trace, n_r=n_r, n_theta=n_theta)

    # quadrature: midpoint cells in rho (the solver radii) x trapezoid angles
    n_q = 4 * max(f.degree, 1) + 9
    theta_q = 2.0 * math.pi * np.arange(n_q) / n_q
    rho = modes.radii
    w_theta = 2.0 * math.pi / n_q
    sqb = metric.sqrt_det_b(rho)
    binv = metric.b_inverse(rho)[:, 0, 0]
    cell_w = (modes.h * rho * sqb)[:, None] * w_theta              # (n_r, 1)

    cos_t, sin_t = np.cos(theta_q), np.sin(theta_q)
    pts = (center[None, None, :]
           + rho[:, None, None] * np.stack([cos_t, sin_t], axis=-1)[None, :, :])
    flat = pts.reshape(-1, 2)

    ubar, ubar_drho, ubar_dtheta = modes.eval_with_polar_gradient(theta_q)

    u = f.evaluate(flat).reshape(len(rho), n_q)
    gu = f.gradient(flat)
    gv = f.gradient_v(flat)
    v = f.evaluate_v(flat).reshape(len(rho), n_q)
    gvx = gv[:, 0].reshape(len(rho), n_q)
    gvy = gv[:, 1].reshape(len(rho), n_q)
    gux = gu[:, 0].reshape(len(rho), n_q)
    guy = gu[:, 1].reshape(len(rho), n_q)

    # polar components of exact gradients
    u_rho = gux * cos_t[None, :] + guy * sin_t[None, :]
    u_theta = rho[:, None] * (-gux * sin_t[None, :] + guy * cos_t[None, :])
    v_rho = gvx * cos_t[None, :] + gvy * sin_t[None, :]
    v_theta = rho[:, None] * (-gvx * sin_t[None, :] + gvy * cos_t[None, :])

    def mdot(a_rho, a_theta, b_rho, b_theta):
        return a_rho * b_rho + (binv[:, None] / rho[:, None] ** 2) * a_theta * b_theta

    under_rho = u_rho - ubar_drho
    under_theta = u_theta - ubar_dtheta

    def integrate(field2d):
        return float(np.sum(cell_w * field2d))

    grad_v_sq = mdot(v_rho, v_theta, v_rho, v_theta)
    D1 = integrate(mdot(ubar_drho, ubar_dtheta, ubar_drho, ubar_dtheta) + grad_v_sq)
    D2 = integrate(mdot(under_rho, under_theta, under_rho, under_theta))
    D3 = 2.0 * integrate(mdot(ubar_drho, ubar_dtheta, under_rho, under_theta))
    D4 = integrate(u * v)
    D = integrate(mdot(u_rho, u_theta, u_rho, u_theta) + grad_v_sq + u * v)
    residual = abs(D - (D1 + D2 + D3 + D4))
    scale = abs(D) if D != 0.0 else 1.0
    d4_ratio = abs(D4) / (r * r * (D2 + D)) if D2 + D > 0 else float("inf")
    d2_ratio = D2 / (r * r * D) if D != 0.0 else float("inf")
    return ProofDecomposition(
        r=r, D1=D1, D2=D2, D3=D3, D4=D4, D=D, residual=residual,
        d3_ok=abs(D3) <= tol * scale, d4_ratio=d4_ratio, d2_ratio=d2_ratio,
        solver_meta={"n_r": n_r, "n_theta": n_theta, "n_fft": n_fft, "n_quad_theta": n_q},
    )
