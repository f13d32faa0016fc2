"""Grid solves on disks: Dirichlet problems for metric Laplacians and
isotropic divergence-form operators, plus the split biharmonic system.

Discretization: cell-centered finite volumes on a polar grid, radii
rho_i = (i + 1/2) h uniform in rho and theta.  The innermost flux carries a
factor rho = 0, which closes the axis without a special stencil; the outer
Dirichlet value enters through a linear ghost cell.  The scheme is symmetric
positive definite, so the general path is conjugate gradients with a Jacobi
preconditioner.  When the coefficients do not depend on theta the same
discrete system diagonalizes mode-by-mode under the angular DFT and is solved
directly by banded elimination; both paths produce the same field to solver
tolerance.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .defaults import TOLERANCES
from .errors import DegenerateDenominatorError, InputError, SolverError
from .geometry import Ball, PolarMetric

_BINARY_MAGIC = b"NLGF"


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class EllipticOperator:
    """Isotropic divergence-form operator: L u = div(a(x) grad u), a(x0) = 1.

    `a` and `grad_a` are vectorized callables on (k, n) point arrays.  The
    oscillation omega(y, r) = sup over B_r(y) of sum_ij r |grad a_ij| reduces
    to n * r * sup |grad a| for the isotropic family and is estimated on a
    64^n sample grid (the normative rule).
    """

    a: object
    grad_a: object
    n: int = 2
    center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    name: str = "elliptic"

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        a0 = float(self.a(self.center[None, :])[0])
        if abs(a0 - 1.0) > 1e-12:
            raise InputError("coefficient must be normalized to a(center) = 1")

    def coefficient(self, pts) -> np.ndarray:
        return np.asarray(self.a(np.atleast_2d(pts)), dtype=float)

    def ellipticity(self, radius: float = 1.0, samples: int = 4096) -> tuple[float, float]:
        rng = np.random.default_rng(0)
        pts = self.center + radius * _ball_samples(rng, samples, self.n)
        vals = self.coefficient(pts)
        return float(np.min(vals)), float(np.max(vals))

    def oscillation(self, y, r: float, grid_n: int = 64) -> float:
        y = np.asarray(y, dtype=float)
        axes = [np.linspace(-r, r, grid_n) for _ in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        pts = pts[np.sum(pts ** 2, axis=1) <= r * r] + y
        if len(pts) == 0:
            pts = y[None, :]
        g = np.asarray(self.grad_a(pts), dtype=float)
        return self.n * r * float(np.max(np.linalg.norm(g, axis=1)))


def _ball_samples(rng, count, n):
    out = []
    while len(out) < count:
        c = rng.uniform(-1, 1, size=n)
        if np.dot(c, c) <= 1.0:
            out.append(c)
    return np.array(out)


def identity_operator(n: int = 2) -> EllipticOperator:
    return EllipticOperator(
        a=lambda p: np.ones(len(np.atleast_2d(p))),
        grad_a=lambda p: np.zeros_like(np.atleast_2d(p)),
        n=n, name="laplace")


def linear_coefficient_operator(eps: float, axis: int = 0, n: int = 2) -> EllipticOperator:
    """a(x) = 1 + eps * x_axis; the basic nonconstant test family."""
    def a(p):
        return 1.0 + eps * np.atleast_2d(p)[:, axis]

    def grad_a(p):
        g = np.zeros_like(np.atleast_2d(p), dtype=float)
        g[:, axis] = eps
        return g

    return EllipticOperator(a=a, grad_a=grad_a, n=n, name=f"linear[{eps}]")


# ---------------------------------------------------------------------------
# grid field


@dataclass
class GridField:
    """Scalar field on the cell-centered polar grid of a disk."""

    center: np.ndarray
    R: float
    values: np.ndarray          # (n_r, n_theta)
    boundary: np.ndarray        # (n_theta,) Dirichlet trace at rho = R
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise SolverError("grid field contains non-finite values")

    @property
    def n_r(self) -> int:
        return self.values.shape[0]

    @property
    def n_theta(self) -> int:
        return self.values.shape[1]

    @property
    def h(self) -> float:
        return self.R / self.n_r

    @property
    def radii(self) -> np.ndarray:
        return (np.arange(self.n_r) + 0.5) * self.h

    @property
    def thetas(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_theta) / self.n_theta

    def nodes(self) -> np.ndarray:
        rho = self.radii
        th = self.thetas
        x = self.center[0] + rho[:, None] * np.cos(th)[None, :]
        y = self.center[1] + rho[:, None] * np.sin(th)[None, :]
        return np.stack([x, y], axis=-1)

    def eval_at(self, points) -> np.ndarray:
        """Bilinear interpolation in (rho, theta); uses the boundary ring
        beyond the last cell center and the ring mean at the axis."""
        pts = np.atleast_2d(np.asarray(points, dtype=float)) - self.center
        rho = np.sqrt(np.sum(pts ** 2, axis=1))
        theta = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * math.pi)
        dth = 2.0 * math.pi / self.n_theta
        jf = theta / dth
        j0 = np.floor(jf).astype(int) % self.n_theta
        j1 = (j0 + 1) % self.n_theta
        wj = jf - np.floor(jf)

        radii = self.radii
        center_val = float(np.mean(self.values[0]))
        out = np.empty(len(pts))
        rf = rho / self.h - 0.5
        i0 = np.floor(rf).astype(int)
        wi = rf - i0
        for k in range(len(pts)):
            i = i0[k]
            ring0: np.ndarray | float
            if i < 0:
                ring0, ring1 = center_val, self.values[0]
                w = rho[k] / radii[0]
            elif i >= self.n_r - 1:
                ring0, ring1 = self.values[self.n_r - 1], self.boundary
                w = (rho[k] - radii[-1]) / (self.R - radii[-1])
                w = min(max(w, 0.0), 1.0)
            else:
                ring0, ring1 = self.values[i], self.values[i + 1]
                w = wi[k]
            if isinstance(ring0, float):
                v0 = ring0
            else:
                v0 = (1 - wj[k]) * ring0[j0[k]] + wj[k] * ring0[j1[k]]
            v1 = (1 - wj[k]) * ring1[j0[k]] + wj[k] * ring1[j1[k]]
            out[k] = (1 - w) * v0 + w * v1
        return out

    def polar_gradient(self) -> tuple[np.ndarray, np.ndarray]:
        """(d/drho, d/dtheta) by second-order differences on the grid."""
        du_drho = np.gradient(self.values, self.h, axis=0, edge_order=2)
        dth = 2.0 * math.pi / self.n_theta
        ext = np.concatenate([self.values[:, -1:], self.values, self.values[:, :1]], axis=1)
        du_dth = (ext[:, 2:] - ext[:, :-2]) / (2.0 * dth)
        return du_drho, du_dth

    def cartesian_gradient(self) -> np.ndarray:
        du_drho, du_dth = self.polar_gradient()
        th = self.thetas
        rho = self.radii[:, None]
        cos_t, sin_t = np.cos(th)[None, :], np.sin(th)[None, :]
        gx = du_drho * cos_t - du_dth * sin_t / rho
        gy = du_drho * sin_t + du_dth * cos_t / rho
        return np.stack([gx, gy], axis=-1)

    def to_csv(self, path):
        nodes = self.nodes()
        rows = []
        for i in range(self.n_r):
            for j in range(self.n_theta):
                rows.append((i, j, nodes[i, j, 0], nodes[i, j, 1], self.values[i, j]))
        arr = np.array(rows)
        np.savetxt(path, arr, delimiter=",", header="i,j,x,y,value", comments="")

    def to_binary(self, path):
        """Little-endian layout: magic, n, (n_r, n_theta), h, values row-major,
        then the boundary ring."""
        with open(path, "wb") as fh:
            fh.write(_BINARY_MAGIC)
            fh.write(struct.pack("<III", 2, self.n_r, self.n_theta))
            fh.write(struct.pack("<d", self.h))
            fh.write(struct.pack("<dd", *self.center))
            fh.write(self.values.astype("<f8").tobytes(order="C"))
            fh.write(self.boundary.astype("<f8").tobytes())

    @classmethod
    def from_binary(cls, path) -> "GridField":
        with open(path, "rb") as fh:
            if fh.read(4) != _BINARY_MAGIC:
                raise InputError("not a grid-field binary file")
            _, n_r, n_th = struct.unpack("<III", fh.read(12))
            (h,) = struct.unpack("<d", fh.read(8))
            center = struct.unpack("<dd", fh.read(16))
            values = np.frombuffer(fh.read(8 * n_r * n_th), dtype="<f8").reshape(n_r, n_th).copy()
            boundary = np.frombuffer(fh.read(8 * n_th), dtype="<f8").copy()
        return cls(np.array(center), h * n_r, values, boundary)


# ---------------------------------------------------------------------------
# assembly


def _coefficient_tables(op, center, R, n_r, n_theta):
    """Radial-face and angular-face coefficient tables for the FV scheme.

    Returns (W, V): W[i, j] at rho_{i+1/2} (i = 0..n_r-1, outermost is the
    boundary face), V[i, j] at (rho_i, theta_{j+1/2}).
    """
    h = R / n_r
    th = 2.0 * math.pi * np.arange(n_theta) / n_theta
    th_half = th + math.pi / n_theta
    rho_faces = (np.arange(n_r) + 1.0) * h
    rho_cells = (np.arange(n_r) + 0.5) * h
    if isinstance(op, PolarMetric):
        sq_f = op.sqrt_det_b(rho_faces)
        sq_c = op.sqrt_det_b(rho_cells)
        W = (rho_faces * sq_f)[:, None] * np.ones((1, n_theta))
        V = (1.0 / (rho_cells * sq_c))[:, None] * np.ones((1, n_theta))
        return W, V
    cx, sx = np.cos(th), np.sin(th)
    pts_f = np.stack([center[0] + rho_faces[:, None] * cx[None, :],
                      center[1] + rho_faces[:, None] * sx[None, :]], axis=-1)
    a_f = op.coefficient(pts_f.reshape(-1, 2)).reshape(n_r, n_theta)
    cxh, sxh = np.cos(th_half), np.sin(th_half)
    pts_c = np.stack([center[0] + rho_cells[:, None] * cxh[None, :],
                      center[1] + rho_cells[:, None] * sxh[None, :]], axis=-1)
    a_c = op.coefficient(pts_c.reshape(-1, 2)).reshape(n_r, n_theta)
    W = rho_faces[:, None] * a_f
    V = a_c / rho_cells[:, None]
    return W, V


def assemble_disk_system(op, center, R, n_r, n_theta, boundary_values, rhs_values=None):
    """Sparse SPD system A u = b for -div(a grad u) = -f with Dirichlet data.

    `boundary_values` is the trace at rho = R on the theta grid; `rhs_values`
    (optional) holds f at cell centers.
    """
    h = R / n_r
    dth = 2.0 * math.pi / n_theta
    W, V = _coefficient_tables(op, center, R, n_r, n_theta)
    rho_cells = (np.arange(n_r) + 0.5) * h
    N = n_r * n_theta

    def idx(i, j):
        return i * n_theta + (j % n_theta)

    rows, cols, vals = [], [], []
    b = np.zeros(N)
    for i in range(n_r):
        for j in range(n_theta):
            me = idx(i, j)
            diag = 0.0
            # radial face to outer neighbor
            w_out = W[i, j] * dth / h
            if i < n_r - 1:
                rows.append(me); cols.append(idx(i + 1, j)); vals.append(-w_out)
                diag += w_out
            else:
                # ghost: u_ghost = 2 g - u_me
                diag += 2.0 * w_out
                b[me] += 2.0 * w_out * boundary_values[j]
            # radial face to inner neighbor (vanishes at the axis)
            if i > 0:
                w_in = W[i - 1, j] * dth / h
                rows.append(me); cols.append(idx(i - 1, j)); vals.append(-w_in)
                diag += w_in
            # angular faces
            v_plus = V[i, j] * h / dth
            v_minus = V[i, (j - 1) % n_theta] * h / dth
            rows.append(me); cols.append(idx(i, j + 1)); vals.append(-v_plus)
            rows.append(me); cols.append(idx(i, j - 1)); vals.append(-v_minus)
            diag += v_plus + v_minus
            rows.append(me); cols.append(me); vals.append(diag)
            if rhs_values is not None:
                b[me] -= rhs_values[i, j] * rho_cells[i] * h * dth
    A = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(N, N))
    return A, b


def discrete_residual(field_values, op, center, R, boundary_values, rhs_values=None) -> float:
    """Relative algebraic residual of a field against the assembled system."""
    n_r, n_theta = field_values.shape
    A, b = assemble_disk_system(op, center, R, n_r, n_theta, boundary_values, rhs_values)
    u = field_values.reshape(-1)
    scale = float(np.linalg.norm(b))
    if scale == 0.0:
        scale = max(float(np.linalg.norm(A @ u)), 1.0)
    return float(np.linalg.norm(A @ u - b)) / scale


def _boundary_trace(boundary, center, R, n_theta) -> np.ndarray:
    th = 2.0 * math.pi * np.arange(n_theta) / n_theta
    pts = np.stack([center[0] + R * np.cos(th), center[1] + R * np.sin(th)], axis=1)
    if callable(boundary) and not hasattr(boundary, "evaluate"):
        return np.asarray(boundary(pts), dtype=float)
    if hasattr(boundary, "evaluate"):
        return np.asarray(boundary.evaluate(pts), dtype=float)
    vals = np.asarray(boundary, dtype=float)
    if vals.shape != (n_theta,):
        raise InputError("boundary array must match the theta grid")
    return vals


def _is_separable(op) -> bool:
    return isinstance(op, PolarMetric)


def solve_laplace(op, region: Ball, boundary, n_r: int = 128, n_theta: int = 256,
                  rhs=None, method: str = "auto",
                  rtol: float = None, maxiter: int = 100_000) -> GridField:
    """Dirichlet solve of div(a grad u) = f on a disk (f defaults to 0).

    Parameters
    ----------
    op : PolarMetric or EllipticOperator
        Metric Laplacian in polar normal form, or an isotropic
        divergence-form operator.
    region : Ball
        The disk; its center is the chart center of the solve.
    boundary : callable | array | object with .evaluate
        Dirichlet data, sampled on the uniform theta grid.
    rhs : callable | array | None
        Source f at cell centers.
    method : "auto" | "pcg" | "fft"
        "fft" requires theta-independent coefficients and solves the same
        discrete system by angular diagonalization.
    """
    if n_r < 4 or n_theta < 8:
        raise InputError("grid resolution is too small (>= 64 cells recommended)")
    rtol = TOLERANCES["solver_residual"] if rtol is None else rtol
    center = np.asarray(region.center, dtype=float)
    R = region.radius
    g = _boundary_trace(boundary, center, R, n_theta)

    rhs_values = None
    if rhs is not None:
        if callable(rhs) and not hasattr(rhs, "evaluate"):
            rho = (np.arange(n_r) + 0.5) * (R / n_r)
            th = 2.0 * math.pi * np.arange(n_theta) / n_theta
            pts = np.stack([center[0] + rho[:, None] * np.cos(th)[None, :],
                            center[1] + rho[:, None] * np.sin(th)[None, :]], axis=-1)
            rhs_values = np.asarray(rhs(pts.reshape(-1, 2)), dtype=float).reshape(n_r, n_theta)
        elif hasattr(rhs, "evaluate"):
            rho = (np.arange(n_r) + 0.5) * (R / n_r)
            th = 2.0 * math.pi * np.arange(n_theta) / n_theta
            pts = np.stack([center[0] + rho[:, None] * np.cos(th)[None, :],
                            center[1] + rho[:, None] * np.sin(th)[None, :]], axis=-1)
            rhs_values = np.asarray(rhs.evaluate(pts.reshape(-1, 2)), dtype=float).reshape(n_r, n_theta)
        else:
            rhs_values = np.asarray(rhs, dtype=float)
            if rhs_values.shape != (n_r, n_theta):
                raise InputError("rhs array must match the grid")

    if method == "auto":
        method = "fft" if _is_separable(op) else "pcg"
    if method == "fft":
        if not _is_separable(op):
            raise InputError("fft path needs theta-independent coefficients")
        values = _solve_fft(op, R, n_r, n_theta, g, rhs_values)
        meta = {"method": "fft", "n_r": n_r, "n_theta": n_theta}
    elif method == "pcg":
        A, b = assemble_disk_system(op, center, R, n_r, n_theta, g, rhs_values)
        diag = A.diagonal()
        M = scipy.sparse.diags(1.0 / diag)
        x, info = scipy.sparse.linalg.cg(A, b, rtol=rtol, atol=0.0,
                                         maxiter=maxiter, M=M)
        if info != 0:
            res = float(np.linalg.norm(A @ x - b) / np.linalg.norm(b))
            raise SolverError(f"conjugate gradients did not converge (info={info})",
                              residual=res)
        values = x.reshape(n_r, n_theta)
        meta = {"method": "pcg", "n_r": n_r, "n_theta": n_theta, "rtol": rtol}
    else:
        raise InputError(f"unknown method {method!r}")
    return GridField(center, R, values, g, meta)


def _mode_tridiagonal(op: PolarMetric, R, n_r, m_tilde_sq):
    """Banded (1,1) matrix of the per-mode radial system."""
    h = R / n_r
    rho_faces = (np.arange(n_r) + 1.0) * h
    rho_cells = (np.arange(n_r) + 0.5) * h
    W = rho_faces * op.sqrt_det_b(rho_faces)
    V = 1.0 / (rho_cells * op.sqrt_det_b(rho_cells))
    lower = np.zeros(n_r)
    upper = np.zeros(n_r)
    diag = np.zeros(n_r)
    for i in range(n_r):
        w_out = W[i] / h
        w_in = W[i - 1] / h if i > 0 else 0.0
        diag[i] = w_in + V[i] * h * m_tilde_sq
        if i < n_r - 1:
            diag[i] += w_out
            upper[i + 1] = -w_out
        else:
            diag[i] += 2.0 * w_out
        if i > 0:
            lower[i - 1] = -w_in
    ab = np.zeros((3, n_r))
    ab[0, 1:] = upper[1:]
    ab[1] = diag
    ab[2, :-1] = lower[:-1]
    return ab, W[-1] / h


def _solve_fft(op: PolarMetric, R, n_r, n_theta, g, rhs_values):
    """Direct solve of the separable system by angular DFT diagonalization."""
    dth = 2.0 * math.pi / n_theta
    g_hat = np.fft.rfft(g)
    f_hat = np.fft.rfft(rhs_values, axis=1) if rhs_values is not None else None
    h = R / n_r
    rho_cells = (np.arange(n_r) + 0.5) * h
    out_hat = np.zeros((n_r, len(g_hat)), dtype=complex)
    for m in range(len(g_hat)):
        gm = g_hat[m]
        fm = f_hat[:, m] if f_hat is not None else None
        if abs(gm) == 0.0 and (fm is None or np.all(fm == 0.0)):
            continue
        m_tilde_sq = (2.0 - 2.0 * math.cos(m * dth)) / dth ** 2
        ab, w_bn = _mode_tridiagonal(op, R, n_r, m_tilde_sq)
        rhs = np.zeros(n_r, dtype=complex)
        rhs[-1] += 2.0 * w_bn * gm
        if fm is not None:
            rhs -= fm * rho_cells * h
        out_hat[:, m] = scipy.linalg.solve_banded((1, 1), ab, rhs)
    return np.fft.irfft(out_hat, n=n_theta, axis=1)


def solve_split_biharmonic(op, region: Ball, boundary_u, boundary_v,
                           n_r: int = 128, n_theta: int = 256,
                           method: str = "auto") -> tuple[GridField, GridField]:
    """Solve L v = 0 with data boundary_v, then L u = v with data boundary_u."""
    v_field = solve_laplace(op, region, boundary_v, n_r, n_theta, method=method)
    u_field = solve_laplace(op, region, boundary_u, n_r, n_theta,
                            rhs=v_field.values, method=method)
    return u_field, v_field


# ---------------------------------------------------------------------------
# per-mode representation used by the frequency decomposition


def _deriv4(c: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order first derivative on a uniform grid, one-sided at edges."""
    n = len(c)
    out = np.empty_like(c)
    if n < 6:
        return np.gradient(c, h, edge_order=2)
    out[2:-2] = (c[:-4] - 8 * c[1:-3] + 8 * c[3:-1] - c[4:]) / (12 * h)
    for k in (0, 1):
        out[k] = (-25 * c[k] + 48 * c[k + 1] - 36 * c[k + 2]
                  + 16 * c[k + 3] - 3 * c[k + 4]) / (12 * h)
    for k in (n - 2, n - 1):
        out[k] = (25 * c[k] - 48 * c[k - 1] + 36 * c[k - 2]
                  - 16 * c[k - 3] + 3 * c[k - 4]) / (12 * h)
    return out


@dataclass
class DiskModeSolution:
    """Harmonic disk solve kept in angular Fourier form.

    `coeffs[m]` is the complex radial profile of mode m on the cell centers,
    already carrying the DFT normalization, so
    u(rho, theta) = sum_m Re(coeffs[m](rho) e^{i m theta}) with the m = 0 and
    Nyquist terms counted once.
    """

    R: float
    n_r: int
    coeffs: dict
    meta: dict = field(default_factory=dict)

    @property
    def h(self) -> float:
        return self.R / self.n_r

    @property
    def radii(self) -> np.ndarray:
        return (np.arange(self.n_r) + 0.5) * self.h

    def eval_with_polar_gradient(self, thetas) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(u, du/drho, du/dtheta) on the (radii x thetas) product grid."""
        thetas = np.asarray(thetas, dtype=float)
        shape = (self.n_r, len(thetas))
        u = np.zeros(shape)
        du_rho = np.zeros(shape)
        du_th = np.zeros(shape)
        for m, c in self.coeffs.items():
            phase = np.exp(1j * m * thetas)[None, :]
            cm = c[:, None]
            u += np.real(cm * phase)
            du_rho += np.real(_deriv4(c, self.h)[:, None] * phase)
            du_th += np.real(1j * m * cm * phase)
        return u, du_rho, du_th

    def values_on_grid(self, n_theta: int) -> np.ndarray:
        th = 2.0 * math.pi * np.arange(n_theta) / n_theta
        return self.eval_with_polar_gradient(th)[0]


def solve_disk_modes(metric: PolarMetric, R: float, boundary_trace,
                     n_r: int = 4096, n_theta: int = 16384,
                     drop_tol: float = 1e-15) -> DiskModeSolution:
    """Harmonic extension of uniform-grid boundary samples, mode by mode.

    The radial systems are exactly the angular-DFT diagonalization of the
    cell-centered scheme at resolution (n_r, n_theta); modes whose boundary
    coefficient is below drop_tol relative to the largest are skipped.
    """
    trace = np.asarray(boundary_trace, dtype=float)
    n_fft = len(trace)
    if n_fft < 4 or n_fft % 2:
        raise InputError("boundary trace length must be even and >= 4")
    g_hat = np.fft.rfft(trace)
    scale = np.max(np.abs(g_hat))
    if scale == 0.0:
        scale = 1.0
    dth = 2.0 * math.pi / n_theta
    coeffs = {}
    for m in range(len(g_hat)):
        if abs(g_hat[m]) <= drop_tol * scale:
            continue
        weight = 1.0 / n_fft if m in (0, n_fft // 2) else 2.0 / n_fft
        m_tilde_sq = (2.0 - 2.0 * math.cos(m * dth)) / dth ** 2
        ab, w_bn = _mode_tridiagonal(metric, R, n_r, m_tilde_sq)
        rhs = np.zeros(n_r, dtype=complex)
        rhs[-1] = 2.0 * w_bn * (weight * g_hat[m])
        coeffs[m] = scipy.linalg.solve_banded((1, 1), ab, rhs)
    return DiskModeSolution(R, n_r, coeffs,
                            meta={"n_theta": n_theta, "n_fft": n_fft})


# ---------------------------------------------------------------------------
# frozen-coefficient comparison


@dataclass(frozen=True)
class CoefficientCompareReport:
    omega: float
    input_residual_u: float
    input_residual_v: float
    distance_u: float
    distance_v: float
    boundary_norm: float
    ratio: float               # (distance_u + distance_v) / omega, inf if omega = 0
    gradient_variant: tuple | None


def _c1_distance(field_a: GridField, field_b: GridField, sample_radius: float,
                 n_samples: int = 1500) -> float:
    """Sampled C1 distance: max over points of |a-b| + |grad a - grad b|."""
    rng = np.random.default_rng(11)
    pts = field_a.center + sample_radius * _ball_samples(rng, n_samples, 2)
    diff = np.abs(field_a.eval_at(pts) - field_b.eval_at(pts))

    ga = field_a.cartesian_gradient()
    gb = field_b.cartesian_gradient()
    gfa_x = GridField(field_a.center, field_a.R, ga[:, :, 0], ga[-1, :, 0], {})
    gfa_y = GridField(field_a.center, field_a.R, ga[:, :, 1], ga[-1, :, 1], {})
    gfb_x = GridField(field_b.center, field_b.R, gb[:, :, 0], gb[-1, :, 0], {})
    gfb_y = GridField(field_b.center, field_b.R, gb[:, :, 1], gb[-1, :, 1], {})
    gdiff = np.abs(gfa_x.eval_at(pts) - gfb_x.eval_at(pts)) + \
        np.abs(gfa_y.eval_at(pts) - gfb_y.eval_at(pts))
    return float(np.max(diff + gdiff))


def constant_coefficient_compare(op: EllipticOperator, u_field: GridField,
                                 v_field: GridField,
                                 include_gradient_variant: bool = False,
                                 residual_tol: float = 1e-8) -> CoefficientCompareReport:
    """Distance between a variable-coefficient split solution and the frozen
    (exact Laplacian) solution with the same data on the 3/4 disk.

    The input pair must solve the discrete variable-coefficient system (the
    algebraic residual is re-verified here).  Distances are sampled C1 norms
    on the 0.65-disk, normalized by the boundary L2 norm of the data.
    """
    center = u_field.center
    R = u_field.R
    res_v = discrete_residual(v_field.values, op, center, R, v_field.boundary)
    res_u = discrete_residual(u_field.values, op, center, R, u_field.boundary,
                              rhs_values=v_field.values)
    if max(res_u, res_v) > residual_tol:
        raise InputError("input fields do not solve the variable-coefficient system")

    omega = op.oscillation(center, R)
    inner = Ball(center, 0.75 * R)
    n_r, n_theta = u_field.n_r, u_field.n_theta
    th = 2.0 * math.pi * np.arange(n_theta) / n_theta
    circle = np.stack([center[0] + inner.radius * np.cos(th),
                       center[1] + inner.radius * np.sin(th)], axis=1)
    bu = u_field.eval_at(circle)
    bv = v_field.eval_at(circle)
    lap = identity_operator()
    phi, psi = solve_split_biharmonic(lap, inner, bu, bv, n_r=n_r, n_theta=n_theta,
                                      method="pcg")
    bnorm = math.sqrt(float(np.mean(u_field.boundary ** 2 + v_field.boundary ** 2)))
    if bnorm == 0.0:
        raise DegenerateDenominatorError("zero boundary data")
    sample_radius = 0.65 * R
    du = _c1_distance(u_field, phi, sample_radius) / bnorm
    dv = _c1_distance(v_field, psi, sample_radius) / bnorm
    ratio = (du + dv) / omega if omega > 0 else float("inf")

    gradient_variant = None
    if include_gradient_variant:
        comps = []
        gu = u_field.cartesian_gradient()
        gv = v_field.cartesian_gradient()
        for axis in range(2):
            ua = GridField(center, R, gu[:, :, axis], gu[-1, :, axis], {})
            va = GridField(center, R, gv[:, :, axis], gv[-1, :, axis], {})
            bua = ua.eval_at(circle)
            bva = va.eval_at(circle)
            phia, psia = solve_split_biharmonic(lap, inner, bua, bva,
                                                n_r=n_r, n_theta=n_theta, method="pcg")
            gb = math.sqrt(float(np.mean(ua.boundary ** 2 + va.boundary ** 2)))
            gb = gb if gb > 0 else 1.0
            comps.append((_c1_distance(ua, phia, sample_radius) / gb,
                          _c1_distance(va, psia, sample_radius) / gb))
        gradient_variant = tuple(comps)
    return CoefficientCompareReport(
        omega=omega, input_residual_u=res_u, input_residual_v=res_v,
        distance_u=du, distance_v=dv, boundary_norm=bnorm, ratio=ratio,
        gradient_variant=gradient_variant)
