"""Bonnet family of constant mean curvature immersions on a disk.

The first fundamental form is ``e^{2 lam} |dz|^2``.  For a monomial Hopf
differential ``z^n`` and slope ``t`` the second fundamental form has
coefficients

    l  = H e^{2 lam} + |z|^n cos(2t - n Arg z)
    m  =               |z|^n sin(2t - n Arg z)
    nn = H e^{2 lam} - |z|^n cos(2t - n Arg z)

so that ``(l - nn)/2 - i m = e^{-2it} z^n`` and ``(l + nn) / (2 e^{2 lam}) = H``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import spsolve

from .errors import (ConstructionError, NonConvergenceError, PreconditionError, TotallyUmbilicError,
                     UnsupportedFormError)
from .geodesic import trace_trajectory
from .qdiff import QuadraticDifferential
from .sector import sample_foliation

UMBILIC_TOL = 1e-12


@dataclass(frozen=True)
class DiskGrid:
    """Uniform ``N x N`` grid on ``[-radius, radius]^2``; row index is ``v``, column is ``u``."""

    radius: float
    N: int

    def __post_init__(self):
        if self.N < 5:
            raise ConstructionError("grid needs at least 5 points per side")
        if not self.radius > 0:
            raise ConstructionError("radius must be positive")

    @property
    def x(self):
        return np.linspace(-self.radius, self.radius, self.N)

    @property
    def h(self):
        return 2.0 * self.radius / (self.N - 1)

    @property
    def z(self):
        x = self.x
        return x[None, :] + 1j * x[:, None]

    @property
    def inside(self):
        return np.abs(self.z) < self.radius * (1 - 1e-12)

    @property
    def interior(self):
        """Nodes inside the disk whose four neighbours are also inside."""
        ins = self.inside
        out = np.zeros_like(ins)
        out[1:-1, 1:-1] = (ins[1:-1, 1:-1] & ins[2:, 1:-1] & ins[:-2, 1:-1]
                           & ins[1:-1, 2:] & ins[1:-1, :-2])
        return out


@dataclass(frozen=True)
class ConformalMetric:
    lam: np.ndarray
    H: float
    grid: DiskGrid
    history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.lam)):
            raise ConstructionError("conformal factor must be finite everywhere")

    @property
    def conformal_factor(self):
        """``e^{2 lam}``, the first fundamental form coefficient."""
        return np.exp(2.0 * self.lam)

    def lam_at(self, z):
        """Bilinear interpolation of ``lam`` at chart points ``z``."""
        z = np.asarray(z, dtype=complex)
        x = self.grid.x
        interp = RegularGridInterpolator((x, x), self.lam)
        pts = np.stack([z.imag.ravel(), z.real.ravel()], axis=-1)
        return interp(pts).reshape(z.shape)

    def to_csv(self):
        g = self.grid
        lines = [f"# radius={g.radius!r} N={g.N} H={self.H!r}", "row,col,u,v,lam"]
        x = g.x
        for i in range(g.N):
            for j in range(g.N):
                lines.append(f"{i},{j},{x[j]!r},{x[i]!r},{self.lam[i, j]!r}")
        return "\n".join(lines) + "\n"


def flat_metric(H, grid):
    return ConformalMetric(np.zeros((grid.N, grid.N)), float(H), grid)


def spherical_metric(H, grid):
    """``lam = log(2 / (H (1 + |z|^2)))``: the round sphere of curvature ``H^2``, an exact solution for ``phi = 0``."""
    return ConformalMetric(np.log(2.0 / (H * (1 + np.abs(grid.z) ** 2))), float(H), grid)


def _normalized_slope(qd, t):
    if not qd.is_monomial:
        raise UnsupportedFormError("the Bonnet formulas need a monomial differential")
    if abs(abs(qd.a) - 1.0) > 1e-12:
        raise PreconditionError(f"leading coefficient must have modulus 1, got |a|={abs(qd.a)!r}; "
                                "rescale the chart with normalize_leading first")
    # a = e^{i alpha}: e^{-2it} a z^n = e^{-2i(t - alpha/2)} z^n
    return t - 0.5 * np.angle(qd.a)


def normalize_leading(qd):
    """Rescale ``z = c zeta`` so the leading coefficient has modulus 1; returns ``(qd', c)``."""
    if not qd.is_monomial:
        raise UnsupportedFormError("only monomials can be normalized this way")
    c = abs(qd.a) ** (-1.0 / (qd.n + 2))
    a = qd.a / abs(qd.a)
    return QuadraticDifferential(a, qd.n, R=qd.R / c), c


def bonnet_coefficients(z, t, n, H, lam):
    """``(l, m, nn)`` at points ``z`` for ``phi = z^n`` and slope ``t``."""
    z = np.asarray(z, dtype=complex)
    r_n = np.abs(z) ** n
    ang = 2 * t - n * np.angle(z)
    c = r_n * np.cos(ang)
    s = r_n * np.sin(ang)
    base = H * np.exp(2.0 * np.asarray(lam))
    return base + c, s, base - c


@dataclass(frozen=True)
class BonnetForms:
    t: float
    l: np.ndarray
    m: np.ndarray
    nn: np.ndarray
    qd: QuadraticDifferential
    metric: ConformalMetric

    @property
    def mean_curvature(self):
        return (self.l + self.nn) / (2.0 * self.metric.conformal_factor)

    @property
    def first_form(self):
        return self.metric.conformal_factor


def bonnet_forms(metric, qd, t):
    """Second fundamental form of the slope-``t`` member on the metric's grid."""
    t_eff = _normalized_slope(qd, t)
    l, m, nn = bonnet_coefficients(metric.grid.z, t_eff, qd.n, metric.H, metric.lam)
    return BonnetForms(float(t), l, m, nn, qd, metric)


def hopf_differential(l, m, nn):
    """``(l - nn)/2 - i m``."""
    return 0.5 * (np.asarray(l) - np.asarray(nn)) - 1j * np.asarray(m)


def rotate_form(l, m, nn, sigma):
    """Coefficients of the quadratic form pulled back by the chart rotation ``z = e^{i sigma} zeta``."""
    c, s = math.cos(sigma), math.sin(sigma)
    # R^T [[l, m], [m, nn]] R with R the rotation by sigma
    l2 = c * c * l + 2 * c * s * m + s * s * nn
    m2 = -c * s * l + (c * c - s * s) * m + c * s * nn
    nn2 = s * s * l - 2 * c * s * m + c * c * nn
    return l2, m2, nn2


def trivial_deformation_angle(t, n):
    """Chart rotation carrying the slope-``t`` forms of ``z^n`` to the slope-0 forms."""
    return 2.0 * t / (n + 2)


# -- Gauss and Codazzi ------------------------------------------------------------

def _dz(f, h):
    """Centered ``(d/dz, d/dzbar)`` on the interior of a grid (NaN on the rim)."""
    f = np.asarray(f, dtype=complex)
    fu = np.full(f.shape, np.nan + 0j)
    fv = np.full(f.shape, np.nan + 0j)
    fu[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2 * h)
    fv[1:-1, :] = (f[2:, :] - f[:-2, :]) / (2 * h)
    return 0.5 * (fu - 1j * fv), 0.5 * (fu + 1j * fv)


def codazzi_residual(phi, H, grid):
    """``d phi/d zbar - dH/dz`` at interior nodes (NaN elsewhere)."""
    if grid.N < 3:
        raise ConstructionError("grid too small for the centered stencil")
    phi = np.broadcast_to(np.asarray(phi, dtype=complex), (grid.N, grid.N))
    Hf = np.broadcast_to(np.asarray(H, dtype=float), (grid.N, grid.N))
    _, phi_zbar = _dz(phi, grid.h)
    H_z, _ = _dz(Hf, grid.h)
    res = phi_zbar - H_z
    res[~grid.interior] = np.nan
    return res


def laplacian5(f, h):
    out = np.full(f.shape, np.nan)
    out[1:-1, 1:-1] = (f[2:, 1:-1] + f[:-2, 1:-1] + f[1:-1, 2:] + f[1:-1, :-2] - 4 * f[1:-1, 1:-1]) / h ** 2
    return out


def gaussian_curvature(metric):
    """``K = -e^{-2 lam} Delta lam`` with the 5-point Laplacian."""
    return -np.exp(-2 * metric.lam) * laplacian5(metric.lam, metric.grid.h)


def _phi_abs2(qd, z):
    # qd=None stands for the zero differential
    if qd is None:
        return np.zeros(np.shape(z))
    return np.abs(qd.evaluate(z, check=False)) ** 2


def gauss_residual(metric, qd):
    """``|phi|^2 - e^{4 lam} (H^2 - K)`` at interior nodes (NaN elsewhere); ``qd=None`` means ``phi = 0``."""
    g = metric.grid
    phi2 = _phi_abs2(qd, g.z)
    K = gaussian_curvature(metric)
    res = phi2 - np.exp(4 * metric.lam) * (metric.H ** 2 - K)
    res[~g.interior] = np.nan
    return res


def sup(field_):
    return float(np.nanmax(np.abs(field_)))


def observed_order(errors, hs):
    """Least-squares slope of ``log error`` against ``log h``."""
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])


# -- solver ----------------------------------------------------------------------

def _boundary_values(boundary, pts):
    if callable(boundary):
        return np.asarray(boundary(pts), dtype=float) * np.ones(len(pts))
    return np.full(len(pts), float(boundary))


def _assemble(grid, boundary):
    """Shortley-Weller Laplacian on the disk: ``Delta lam ~ A lam_inside + b``."""
    rho = grid.radius
    z = grid.z
    h = grid.h
    inside = grid.inside
    idx = -np.ones(inside.shape, dtype=np.int64)
    cells = np.argwhere(inside)
    idx[inside] = np.arange(len(cells))
    rows, cols, vals = [], [], []
    b = np.zeros(len(cells))
    diag = np.zeros(len(cells))
    for k, (i, j) in enumerate(cells):
        p = z[i, j]
        for axis in (0, 1):
            arms = []
            for sgn in (1, -1):
                ii, jj = (i + sgn, j) if axis == 0 else (i, j + sgn)
                if inside[ii, jj]:
                    arms.append((h, idx[ii, jj], None))
                else:
                    # distance along the axis to the circle
                    d = 1j if axis == 0 else 1.0
                    d *= sgn
                    pr = (p * np.conj(d)).real
                    s = -pr + math.sqrt(max(pr * pr - (abs(p) ** 2 - rho ** 2), 0.0))
                    s = min(max(s, 1e-12 * h), h)
                    arms.append((s, -1, p + s * d))
            (h1, n1, q1), (h2, n2, q2) = arms
            coef1 = 2.0 / (h1 * (h1 + h2))
            coef2 = 2.0 / (h2 * (h1 + h2))
            diag[k] -= coef1 + coef2
            for c, nb, q in ((coef1, n1, q1), (coef2, n2, q2)):
                if nb >= 0:
                    rows.append(k)
                    cols.append(nb)
                    vals.append(c)
                else:
                    b[k] += c * _boundary_values(boundary, np.array([q]))[0]
    rows.extend(range(len(cells)))
    cols.extend(range(len(cells)))
    vals.extend(diag)
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(len(cells), len(cells)))
    return A, b, cells


def solve_gauss(qd, H, boundary=0.0, radius=0.5, N=129, tol=1e-10, max_iter=50):
    """Solve ``Delta lam = -H^2 e^{2 lam} + |phi|^2 e^{-2 lam}`` on a disk with Dirichlet data.

    Damped Newton from ``lam = mean(boundary data)``.  Nodes outside the disk
    carry the boundary value at their radial projection so the field is finite
    everywhere.  Raises ``NonConvergenceError`` (with the residual history) if
    the sup-norm residual does not reach ``tol`` within ``max_iter`` steps.
    """
    if not H > 0:
        raise PreconditionError("mean curvature must be positive")
    grid = DiskGrid(float(radius), int(N))
    A, b, cells = _assemble(grid, boundary)
    z_in = grid.z[cells[:, 0], cells[:, 1]]
    phi2 = _phi_abs2(qd, z_in)
    ring = radius * np.exp(2j * np.pi * np.arange(256) / 256)
    lam = np.full(len(cells), float(np.mean(_boundary_values(boundary, ring))))

    def F(x):
        return A @ x + b + H * H * np.exp(2 * x) - phi2 * np.exp(-2 * x)

    res = F(lam)
    history = [float(np.max(np.abs(res)))]
    for _ in range(max_iter):
        if history[-1] < tol:
            break
        J = A + sparse.diags(2 * H * H * np.exp(2 * lam) + 2 * phi2 * np.exp(-2 * lam))
        step = spsolve(J.tocsc(), -res)
        alpha = 1.0
        while True:
            trial = lam + alpha * step
            r_trial = F(trial)
            if np.max(np.abs(r_trial)) < history[-1] or alpha < 1e-4:
                break
            alpha *= 0.5
        lam, res = trial, r_trial
        history.append(float(np.max(np.abs(res))))
        if not np.isfinite(history[-1]):
            break
    if not history[-1] < tol:
        raise NonConvergenceError(f"Newton stopped at residual {history[-1]:.3e}", history)
    full = np.empty((grid.N, grid.N))
    outside = ~grid.inside
    zo = grid.z[outside]
    proj = np.where(zo == 0, radius, radius * zo / np.where(zo == 0, 1, np.abs(zo)))
    full[outside] = _boundary_values(boundary, proj)
    full[cells[:, 0], cells[:, 1]] = lam
    return ConformalMetric(full, float(H), grid, tuple(history))


def solver_report(metric, qd):
    g = metric.grid
    return {"schema_version": 1, "H": metric.H, "radius": g.radius, "N": g.N,
            "iterations": len(metric.history) - 1, "residual_history": list(metric.history),
            "gauss_residual_sup": sup(gauss_residual(metric, qd)),
            "phi": None if qd is None else qd.to_dict()}


# -- principal directions and curvature lines ---------------------------------------

def principal_directions(metric, forms, z):
    """Directions (mod pi) where ``Im(phi_t dz^2) = 0``: maximal normal curvature first."""
    t_eff = _normalized_slope(forms.qd, forms.t)
    phi_t = np.exp(-2j * t_eff) * complex(z) ** forms.qd.n
    if abs(phi_t) <= UMBILIC_TOL:
        raise TotallyUmbilicError(f"umbilic point z={complex(z)!r}: principal directions undefined")
    d1 = (-0.5 * np.angle(phi_t)) % np.pi
    return d1, (d1 + 0.5 * np.pi) % np.pi


def principal_directions_eig(metric, forms, z):
    """Same pair from an eigen-decomposition of the shape operator ``I^{-1} II``."""
    lam = float(metric.lam_at(np.array([complex(z)]))[0])
    t_eff = _normalized_slope(forms.qd, forms.t)
    l, m, nn = bonnet_coefficients(complex(z), t_eff, forms.qd.n, metric.H, lam)
    S = np.exp(-2 * lam) * np.array([[float(l), float(m)], [float(m), float(nn)]])
    vals, vecs = np.linalg.eigh(S)
    if vals[1] - vals[0] <= 2 * UMBILIC_TOL * np.exp(-2 * lam):
        raise TotallyUmbilicError(f"umbilic point z={complex(z)!r}")
    v_max, v_min = vecs[:, 1], vecs[:, 0]
    return math.atan2(v_max[1], v_max[0]) % np.pi, math.atan2(v_min[1], v_min[0]) % np.pi


def angle_gap(a, b):
    """Distance between directions mod pi."""
    d = np.mod(np.asarray(a) - np.asarray(b), np.pi)
    return np.minimum(d, np.pi - d)


def _max_curvature_vector(qd, t_eff, H, z, ref):
    l, m, nn = bonnet_coefficients(z, t_eff, qd.n, H, 0.0)
    _, vecs = np.linalg.eigh(np.array([[float(l), float(m)], [float(m), float(nn)]]))
    d = complex(vecs[0, 1], vecs[1, 1])
    return d if (d * ref.conjugate()).real >= 0 else -d


def trace_curvature_line(qd, t, H, start, step, length, orientation=1):
    """RK4 along the maximal-curvature eigenvector field of the Bonnet form (fixed step)."""
    t_eff = _normalized_slope(qd, t)
    z = complex(start)
    l, m, nn = bonnet_coefficients(z, t_eff, qd.n, H, 0.0)
    ref = _max_curvature_vector(qd, t_eff, H, z, 1.0 + 0j) * orientation
    pts = [z]
    s = 0.0
    while length - s > 1e-9 * step:
        h = min(step, length - s)
        k1 = _max_curvature_vector(qd, t_eff, H, z, ref)
        k2 = _max_curvature_vector(qd, t_eff, H, z + 0.5 * h * k1, k1)
        k3 = _max_curvature_vector(qd, t_eff, H, z + 0.5 * h * k2, k1)
        k4 = _max_curvature_vector(qd, t_eff, H, z + h * k3, k1)
        z = z + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        if abs(z) > qd.R:
            break
        ref = k1
        s += h
        pts.append(z)
    return np.array(pts)


def _point_segment_distance(pts, poly):
    a = poly[:-1][None, :]
    d = (poly[1:] - poly[:-1])[None, :]
    p = pts[:, None]
    dd = np.abs(d) ** 2
    tt = np.clip(np.where(dd > 0, ((p - a) * np.conj(d)).real / np.where(dd > 0, dd, 1), 0.0), 0.0, 1.0)
    return np.min(np.abs(p - (a + tt * d)), axis=1)


def hausdorff(a, b):
    """Hausdorff distance between two chart polylines (points against segments)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if len(a) < 2 or len(b) < 2:
        return float(np.max(np.abs(a[:, None] - b[None, :])))
    return float(max(np.max(_point_segment_distance(a, b)), np.max(_point_segment_distance(b, a))))


def verify_lemma3(metric, qd, t, annulus, resolution=(8, 64), step=1e-3, length=0.3, n_curves=4):
    """Compare principal-curvature directions with the slope-``t`` geodesic field.

    Pointwise: maximal-curvature directions from the shape operator's
    eigenvectors against ``sample_foliation(qd, t)`` on the annulus.
    Traced: curvature lines (RK4 on the eigenvector field) against
    trajectories of ``Arg(phi dz^2) = 2t`` from the same starts, compared by
    Hausdorff distance.
    """
    forms_t = _normalized_slope(qd, t)
    fld = sample_foliation(qd, t, annulus, resolution)
    z = fld.radii[:, None] * np.exp(1j * fld.angles[None, :])
    lam = metric.lam_at(z)
    l, m, nn = bonnet_coefficients(z, forms_t, qd.n, metric.H, lam)
    S = np.stack([np.stack([l, m], -1), np.stack([m, nn], -1)], -2)
    _, vecs = np.linalg.eigh(S)
    eig_dir = np.mod(np.arctan2(vecs[..., 1, 1], vecs[..., 0, 1]), np.pi)
    deviation = float(np.max(angle_gap(eig_dir, fld.directions)))

    r_mid = 0.5 * (annulus[0] + annulus[1])
    starts = r_mid * np.exp(2j * np.pi * (np.arange(n_curves) + 0.25) / n_curves)
    dists = []
    for z0 in starts:
        for o in (1, -1):
            curv = trace_curvature_line(qd, t, metric.H, z0, step, length, o)
            d0 = np.exp(0.5j * (2 * t - np.angle(qd.evaluate(z0))))
            orient = 1 if (d0 * np.conj(curv[1] - curv[0])).real >= 0 else -1
            traj = trace_trajectory(qd, z0, 2 * t, step, length, orientation=orient)
            dists.append(hausdorff(curv, traj.points))
    return {"schema_version": 1, "t": float(t), "n": qd.n, "annulus": list(map(float, annulus)),
            "max_direction_deviation": deviation, "max_hausdorff": float(max(dists)),
            "curves": len(dists), "step": step, "length": length}


def report_json(report):
    return json.dumps(report, sort_keys=True, indent=2)
