"""Umbilics and their indices on sampled convex spheres.

Surfaces are radial graphs ``x = rho(p) p`` over the unit sphere, given with
an analytic gradient and Hessian of ``rho`` so that first and second
derivatives of the immersion are exact.  The sphere is covered by an
equatorial band (longitude/latitude, ``|lat| <= 50 deg``) and two gnomonic caps
reaching 50 deg from the poles, so neighbouring charts overlap.

Umbilics are the zeros of ``psi = (a - c)/2 - i b`` where ``[[a, b], [b, c]]``
is the shape operator in the orthonormal frame ``e1 = x_u / |x_u|``.  Cells
where ``psi`` winds are refined by quad bisection, and the index is the
winding of the principal line field on a small circle.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (ChartDegeneracyError, ConstructionError, PreconditionError, ResolutionError,
                     TotallyUmbilicError)
from .sector import LineField, winding_index

BAND_LAT = math.radians(50.0)
CAP_HALF = math.tan(math.radians(50.0))
# fractional grid offset so that symmetric umbilics do not land on nodes
GRID_OFFSET = 1.0 / math.pi
DETECTION_RTOL = 1e-8
UMBILIC_RTOL = 1e-8
# |psi| below this fraction of its sup is treated as rounding noise
NOISE_RTOL = 1e-12
CHARTS = ("band", "north", "south")


# -- radius functions --------------------------------------------------------------

def _ellipsoid_rho(axes):
    a2 = np.asarray(axes, dtype=float) ** 2

    def rho(p):
        s = np.sum(p * p / a2, axis=-1)
        ds = 2 * p / a2
        r = s ** -0.5
        g = -0.5 * s[..., None] ** -1.5 * ds
        hs = np.diag(2 / a2)
        H = (0.75 * s[..., None, None] ** -2.5 * ds[..., :, None] * ds[..., None, :]
             - 0.5 * s[..., None, None] ** -1.5 * hs)
        return r, g, H
    return rho


def cubic_monomials():
    return [(i, j, k) for d in range(4) for i in range(d + 1) for j in range(d + 1 - i) for k in [d - i - j]]


def _polynomial(coeffs):
    exps = np.array(cubic_monomials())
    c = np.asarray(coeffs, dtype=float)

    def powr(x, e):
        return np.where(e >= 0, x ** np.maximum(e, 0), 0.0)

    def value(p):
        x = p[..., None, :]
        terms = np.prod(powr(x, exps), axis=-1)
        val = terms @ c
        grad = np.empty(p.shape)
        hess = np.empty(p.shape + (3,))
        for a in range(3):
            ea = exps.copy()
            ea[:, a] -= 1
            ga = exps[:, a] * np.prod(powr(x, ea), axis=-1)
            grad[..., a] = ga @ c
            for b in range(3):
                eab = ea.copy()
                eab[:, b] -= 1
                fac = exps[:, a] * ea[:, b]
                hess[..., a, b] = (fac * np.prod(powr(x, eab), axis=-1)) @ c
        return val, grad, hess
    return value


def _perturbed_rho(coeffs, eps):
    poly = _polynomial(coeffs)

    def rho(p):
        v, g, H = poly(p)
        return 1 + eps * v, eps * g, eps * H
    return rho


def _superellipsoid_rho(axes, e):
    a = np.asarray(axes, dtype=float)

    def rho(p):
        x = np.abs(p / a)
        s = np.sum(x ** e, axis=-1)
        ds = e * x ** (e - 1) * np.sign(p) / a
        hs_diag = e * (e - 1) * x ** (e - 2) / a ** 2
        k = -1.0 / e
        r = s ** k
        g = k * s[..., None] ** (k - 1) * ds
        H = (k * (k - 1) * s[..., None, None] ** (k - 2) * ds[..., :, None] * ds[..., None, :]
             + k * s[..., None, None] ** (k - 1) * (hs_diag[..., :, None] * np.eye(3)))
        return r, g, H
    return rho


# -- immersion ---------------------------------------------------------------------

@dataclass(frozen=True)
class SampledImmersion:
    """Radial-graph immersion of S^2 with an optional rigid motion ``X = R x + b``.

    ``atlas`` rotates the parameter atlas (chart points map to ``atlas @ p``).
    """

    family: str
    params: dict
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    atlas: np.ndarray = field(default_factory=lambda: np.eye(3))
    rho: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("rotation", "atlas"):
            M = np.asarray(getattr(self, name), dtype=float)
            if M.shape != (3, 3) or not np.allclose(M @ M.T, np.eye(3), atol=1e-12) or np.linalg.det(M) < 0:
                raise ConstructionError(f"{name} must be a proper rotation matrix")
            object.__setattr__(self, name, M)
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))
        object.__setattr__(self, "rho", _make_rho(self.family, self.params))

    def describe(self):
        return {"family": self.family, "params": _jsonable(self.params),
                "rotation": self.rotation.tolist(), "translation": self.translation.tolist(),
                "atlas": self.atlas.tolist()}

    def moved(self, rotation=None, translation=None):
        return SampledImmersion(self.family, self.params,
                                self.rotation if rotation is None else rotation,
                                self.translation if translation is None else translation, self.atlas)

    def with_atlas(self, atlas):
        return SampledImmersion(self.family, self.params, self.rotation, self.translation, atlas)


def _jsonable(params):
    return {k: (list(map(float, v)) if isinstance(v, (list, tuple, np.ndarray)) else v) for k, v in params.items()}


def _make_rho(family, params):
    if family == "ellipsoid":
        axes = (params["a"], params["b"], params["c"])
        if min(axes) <= 0:
            raise ConstructionError("semi-axes must be positive")
        return _ellipsoid_rho(axes)
    if family == "sphere":
        r = float(params.get("r", 1.0))
        return _ellipsoid_rho((r, r, r))
    if family == "perturbed_sphere":
        coeffs = params["coeffs"]
        if len(coeffs) != len(cubic_monomials()):
            raise ConstructionError(f"need {len(cubic_monomials())} cubic coefficients")
        return _perturbed_rho(coeffs, float(params.get("eps", 0.05)))
    if family == "superellipsoid":
        return _superellipsoid_rho((params.get("a", 1.0), params.get("b", 1.0), params.get("c", 1.0)),
                                   float(params["exponent"]))
    raise ConstructionError(f"unknown surface family {family!r}")


def ellipsoid(a, b, c, **kw):
    return SampledImmersion("ellipsoid", {"a": float(a), "b": float(b), "c": float(c)}, **kw)


def sphere(r=1.0, **kw):
    return SampledImmersion("sphere", {"r": float(r)}, **kw)


def perturbed_sphere(coeffs, eps=0.05, **kw):
    return SampledImmersion("perturbed_sphere", {"coeffs": [float(c) for c in coeffs], "eps": float(eps)}, **kw)


def superellipsoid(exponent, a=1.0, b=1.0, c=1.0, **kw):
    return SampledImmersion("superellipsoid", {"exponent": float(exponent), "a": a, "b": b, "c": c}, **kw)


def ellipsoid_gauss_curvature(a, b, c, x):
    """Closed-form Gauss curvature of the ellipsoid at surface points ``x``."""
    x = np.asarray(x, dtype=float)
    s = x[..., 0] ** 2 / a ** 4 + x[..., 1] ** 2 / b ** 4 + x[..., 2] ** 2 / c ** 4
    return 1.0 / (a * a * b * b * c * c * s * s)


# -- charts ------------------------------------------------------------------------

def _chart_points(chart, u, v):
    """Unit-sphere point and its first/second chart derivatives."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if chart == "band":
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        z = np.zeros_like(u)
        p = np.stack([cv * cu, cv * su, sv], -1)
        pu = np.stack([-cv * su, cv * cu, z], -1)
        pv = np.stack([-sv * cu, -sv * su, cv], -1)
        puu = np.stack([-cv * cu, -cv * su, z], -1)
        puv = np.stack([sv * su, -sv * cu, z], -1)
        pvv = np.stack([-cv * cu, -cv * su, -sv], -1)
        return p, pu, pv, puu, puv, pvv
    if chart in ("north", "south"):
        s = 1.0 if chart == "north" else -1.0
        q = np.stack([u, v, np.full_like(u, s)], -1)
        nrm = np.sqrt(u * u + v * v + 1)
        f = 1 / nrm
        fu, fv = -u * f ** 3, -v * f ** 3
        fuu = -f ** 3 + 3 * u * u * f ** 5
        fuv = 3 * u * v * f ** 5
        fvv = -f ** 3 + 3 * v * v * f ** 5
        eu = np.array([1.0, 0.0, 0.0])
        ev = np.array([0.0, 1.0, 0.0])
        p = q * f[..., None]
        pu = eu * f[..., None] + q * fu[..., None]
        pv = ev * f[..., None] + q * fv[..., None]
        puu = 2 * eu * fu[..., None] + q * fuu[..., None]
        puv = eu * fv[..., None] + ev * fu[..., None] + q * fuv[..., None]
        pvv = 2 * ev * fv[..., None] + q * fvv[..., None]
        return p, pu, pv, puu, puv, pvv
    raise PreconditionError(f"unknown chart {chart!r}")


def _bil(A, x, y):
    return np.einsum("...i,...ij,...j->...", x, A, y)


def derivatives(imm, chart, u, v):
    """``X, X_u, X_v, X_uu, X_uv, X_vv`` of the immersion in the given chart."""
    p, pu, pv, puu, puv, pvv = (np.einsum("ij,...j->...i", imm.atlas, a) for a in _chart_points(chart, u, v))
    r, g, Hr = imm.rho(p)
    ru = np.sum(g * pu, -1)
    rv = np.sum(g * pv, -1)
    ruu = _bil(Hr, pu, pu) + np.sum(g * puu, -1)
    ruv = _bil(Hr, pu, pv) + np.sum(g * puv, -1)
    rvv = _bil(Hr, pv, pv) + np.sum(g * pvv, -1)
    e = lambda a: a[..., None]  # noqa: E731
    x = e(r) * p
    xu = e(ru) * p + e(r) * pu
    xv = e(rv) * p + e(r) * pv
    xuu = e(ruu) * p + 2 * e(ru) * pu + e(r) * puu
    xuv = e(ruv) * p + e(ru) * pv + e(rv) * pu + e(r) * puv
    xvv = e(rvv) * p + 2 * e(rv) * pv + e(r) * pvv
    R = imm.rotation
    rot = lambda a: np.einsum("ij,...j->...i", R, a)  # noqa: E731
    return rot(x) + imm.translation, rot(xu), rot(xv), rot(xuu), rot(xuv), rot(xvv)


@dataclass(frozen=True)
class Forms:
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    l: np.ndarray
    m: np.ndarray
    nn: np.ndarray
    normal: np.ndarray
    position: np.ndarray

    @property
    def gauss_curvature(self):
        return (self.l * self.nn - self.m ** 2) / (self.E * self.G - self.F ** 2)

    @property
    def mean_curvature(self):
        return (self.E * self.nn - 2 * self.F * self.m + self.G * self.l) / (2 * (self.E * self.G - self.F ** 2))


def fundamental_forms(imm, chart, u, v):
    """First and second fundamental forms at chart points.

    The unit normal is outward (``N . (X - b) > 0``); the second form is taken
    against the inward normal so convex surfaces have ``H, K > 0`` and the
    unit sphere has ``II = I``.
    """
    X, Xu, Xv, Xuu, Xuv, Xvv = derivatives(imm, chart, u, v)
    cross = np.cross(Xu, Xv)
    area = np.linalg.norm(cross, axis=-1)
    if chart == "band" and np.any(np.abs(np.cos(np.asarray(v))) < 1e-6):
        raise ChartDegeneracyError("band chart degenerates at the poles; use a cap chart")
    N = cross / area[..., None]
    flip = np.sign(np.sum(N * (X - imm.translation), -1))
    N = N * flip[..., None]
    dot = lambda a, b: np.sum(a * b, -1)  # noqa: E731
    return Forms(dot(Xu, Xu), dot(Xu, Xv), dot(Xv, Xv),
                 -dot(N, Xuu), -dot(N, Xuv), -dot(N, Xvv), N, X)


def _frame_shape(f):
    """Shape operator in the frame ``e1 = X_u/|X_u|``, ``e2`` the rotated completion; plus the frame in chart coordinates."""
    sE = np.sqrt(f.E)
    w = np.sqrt(f.G - f.F ** 2 / f.E)
    # chart components of e1 and e2
    t11, t21 = 1 / sE, np.zeros_like(sE)
    t12, t22 = -f.F / (f.E * w), 1 / w
    a = t11 * t11 * f.l
    b = t11 * (t12 * f.l + t22 * f.m)
    c = t12 * t12 * f.l + 2 * t12 * t22 * f.m + t22 * t22 * f.nn
    return a, b, c, (t11, t21, t12, t22)


def umbilic_field(imm, chart, u, v):
    """``psi = (a - c)/2 - i b`` from the frame shape operator; zero exactly at umbilics."""
    f = fundamental_forms(imm, chart, u, v)
    a, b, c, _ = _frame_shape(f)
    return 0.5 * (a - c) - 1j * b


def principal_chart_direction(imm, chart, u, v):
    """Chart angle (mod pi) of the maximal principal direction."""
    f = fundamental_forms(imm, chart, u, v)
    a, b, c, (t11, t21, t12, t22) = _frame_shape(f)
    S = np.stack([np.stack([a, b], -1), np.stack([b, c], -1)], -2)
    _, vecs = np.linalg.eigh(S)
    e = vecs[..., :, 1]
    du = t11 * e[..., 0] + t12 * e[..., 1]
    dv = t21 * e[..., 0] + t22 * e[..., 1]
    return np.mod(np.arctan2(dv, du), np.pi)


# -- scanning ----------------------------------------------------------------------

@dataclass(frozen=True)
class Umbilic:
    chart: str
    u: float
    v: float
    position: tuple
    index: Fraction
    residual: float

    def to_dict(self):
        return {"chart": self.chart, "u": self.u, "v": self.v, "position": list(self.position),
                "index": str(self.index), "residual": self.residual}


def chart_grid(chart, resolution):
    """Chart node coordinates (1-D arrays) for a scan at ``resolution`` cells per 100 degrees."""
    n = int(resolution)
    if chart == "band":
        n_u = int(round(n * 3.6))
        du = 2 * math.pi / n_u
        us = (np.arange(n_u + 1) + GRID_OFFSET) * du  # last column repeats the first
        dv = 2 * BAND_LAT / n
        vs = -BAND_LAT + (np.arange(n) + GRID_OFFSET) * dv
        return us, vs
    d = 2 * CAP_HALF / n
    xs = -CAP_HALF + (np.arange(n) + GRID_OFFSET) * d
    return xs, xs


# edges whose sampled turn of psi exceeds this are subdivided before summing
MAX_EDGE_TURN = math.pi / 3
MAX_EDGE_DEPTH = 48
SPLITS = (0.5, 0.4373, 0.5627)


def _psi_at(imm, chart, z):
    z = np.asarray(z, dtype=complex)
    return umbilic_field(imm, chart, z.real, z.imag)


def _edge_turn(imm, chart, a, b, fa, fb, depth=0):
    """Turn of ``arg psi`` along the chart segment ``a -> b``, bisected until each piece turns by little."""
    d = float(np.angle(fb / fa))
    if abs(d) <= MAX_EDGE_TURN:
        return d
    if depth >= MAX_EDGE_DEPTH:
        raise ResolutionError(f"umbilic on a scan edge near ({a.real:.6g}, {a.imag:.6g}); re-scan with a shifted grid")
    m = 0.5 * (a + b)
    fm = complex(_psi_at(imm, chart, m))
    return (_edge_turn(imm, chart, a, m, fa, fm, depth + 1)
            + _edge_turn(imm, chart, m, b, fm, fb, depth + 1))


def _grid_windings(imm, chart, us, vs):
    """Winding number of psi around every cell of the tensor grid ``us x vs``."""
    U, V = np.meshgrid(us, vs)
    Z = U + 1j * V
    psi = umbilic_field(imm, chart, U, V)
    th = np.angle(psi[:, 1:] / psi[:, :-1])
    tv = np.angle(psi[1:, :] / psi[:-1, :])
    for turns, za, zb, fa, fb in ((th, Z[:, :-1], Z[:, 1:], psi[:, :-1], psi[:, 1:]),
                                  (tv, Z[:-1, :], Z[1:, :], psi[:-1, :], psi[1:, :])):
        for idx in zip(*np.nonzero(np.abs(turns) > MAX_EDGE_TURN)):
            turns[idx] = _edge_turn(imm, chart, za[idx], zb[idx], fa[idx], fb[idx])
    total = th[:-1, :] + tv[:, 1:] - th[1:, :] - tv[:, :-1]
    return np.rint(total / (2 * np.pi)).astype(int), psi


def _refine(imm, chart, u0, u1, v0, v1, floor, depth=0, min_size=1e-11):
    """Quad-bisect a cell with nonzero winding; returns the list of leaf cells.

    Stops when the cell is tiny or psi at its corners drops to ``floor``, below
    which the argument of psi is rounding noise.
    """
    corners = umbilic_field(imm, chart, np.array([u0, u1, u1, u0]), np.array([v0, v0, v1, v1]))
    if max(u1 - u0, v1 - v0) <= min_size or depth > 60 or np.max(np.abs(corners)) <= floor:
        return [(0.5 * (u0 + u1), 0.5 * (v0 + v1))]
    for frac in SPLITS:
        um, vm = u0 + frac * (u1 - u0), v0 + frac * (v1 - v0)
        try:
            w, _ = _grid_windings(imm, chart, np.array([u0, um, u1]), np.array([v0, vm, v1]))
            break
        except ResolutionError:
            # the zero lies on a split line; move the split off it
            continue
    else:
        raise ResolutionError(f"cannot isolate the umbilic near ({um:.6g}, {vm:.6g}) on {chart}")
    out = []
    bounds_u = ((u0, um), (um, u1))
    bounds_v = ((v0, vm), (vm, v1))
    for i in range(2):
        for j in range(2):
            if w[i, j] != 0:
                out += _refine(imm, chart, *bounds_u[j], *bounds_v[i], floor, depth + 1, min_size)
    return out


def umbilic_index(imm, chart, u, v, radius, samples=512):
    """Half-integer index from the principal line field on a small chart circle."""
    def sampler(z):
        z = np.asarray(z, dtype=complex)
        return principal_chart_direction(imm, chart, u + z.real, v + z.imag)
    angles = 2 * np.pi * np.arange(samples) / samples
    radii = np.array([0.5 * radius, radius])
    dirs = np.stack([sampler(r * np.exp(1j * angles)) for r in radii])
    fld = LineField(0.5 * radius, radius, radii, angles, dirs, f"immersion({imm.family}, {chart})", None, sampler)
    return winding_index(fld, radius)


def _in_chart(chart, u, v):
    if chart == "band":
        return abs(v) <= BAND_LAT
    return abs(u) <= CAP_HALF and abs(v) <= CAP_HALF


def check_convex(imm, resolution=40):
    """Regularity and convexity over the scan grids.

    Convex means ``K > 0`` and ``H > 0`` against the inward normal: the second
    form is positive definite, which rules out doubly concave patches where
    ``K`` alone is positive.
    """
    k_min, h_min, det_min = math.inf, math.inf, math.inf
    for chart in CHARTS:
        us, vs = chart_grid(chart, resolution)
        U, V = np.meshgrid(us, vs)
        f = fundamental_forms(imm, chart, U, V)
        k_min = min(k_min, float(np.min(f.gauss_curvature)))
        h_min = min(h_min, float(np.min(f.mean_curvature)))
        det_min = min(det_min, float(np.min(f.E * f.G - f.F ** 2)))
    return {"regular": det_min > 0, "convex": k_min > 0 and h_min > 0, "min_gauss_curvature": k_min,
            "min_mean_curvature": h_min, "min_first_form_det": det_min}


def find_umbilics(imm, resolution=60, dedupe_rtol=1e-6):
    """Locate umbilics on all three charts and assign their indices."""
    scale = 0.0
    per_chart = {}
    sup_psi, sup_h = 0.0, 0.0
    for chart in CHARTS:
        us, vs = chart_grid(chart, resolution)
        U, V = np.meshgrid(us, vs)
        f = fundamental_forms(imm, chart, U, V)
        psi = umbilic_field(imm, chart, U, V)
        per_chart[chart] = (us, vs, psi)
        sup_psi = max(sup_psi, float(np.max(np.abs(psi))))
        sup_h = max(sup_h, float(np.max(np.abs(f.mean_curvature))))
        scale = max(scale, float(np.max(np.linalg.norm(f.position - imm.translation, axis=-1))))
    if sup_psi <= UMBILIC_RTOL * sup_h:
        raise TotallyUmbilicError(f"|psi| <= {sup_psi:.3e} everywhere: the surface is totally umbilic")

    found = []
    for chart in CHARTS:
        us, vs, _ = per_chart[chart]
        w, _ = _grid_windings(imm, chart, us, vs)
        cell = min(us[1] - us[0], vs[1] - vs[0])
        for i, j in zip(*np.nonzero(w)):
            for uc, vc in _refine(imm, chart, us[j], us[j + 1], vs[i], vs[i + 1], NOISE_RTOL * sup_psi):
                if not _in_chart(chart, uc, vc):
                    continue
                res = float(abs(umbilic_field(imm, chart, np.array(uc), np.array(vc))))
                if res > DETECTION_RTOL * sup_psi:
                    raise ResolutionError(f"cell near ({uc:.4f}, {vc:.4f}) on {chart} winds but |psi|={res:.3e}")
                idx = umbilic_index(imm, chart, uc, vc, 0.25 * cell)
                pos = derivatives(imm, chart, np.array(uc), np.array(vc))[0]
                found.append(Umbilic(chart, float(uc), float(vc), tuple(float(x) for x in pos), idx, res))

    out = []
    for um in found:
        p = np.array(um.position)
        dup = [o for o in out if np.linalg.norm(np.array(o.position) - p) <= dedupe_rtol * scale]
        if not dup:
            out.append(um)
        elif dup[0].index != um.index:
            raise ResolutionError(f"charts disagree on the index at {um.position}")
    out.sort(key=lambda o: o.position)
    return out


def _random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([[1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
                     [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
                     [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)]])


def random_rotation(seed):
    return _random_rotation(np.random.default_rng(seed))


def poincare_hopf_check(imm, resolution=60, refinements=2, atlas_seed=12345):
    """Sum of umbilic indices; re-scans finer, then with a rotated atlas, until it equals 2."""
    attempts = []
    current = imm
    res = resolution
    umbilics = []
    for attempt in range(refinements + 2):
        try:
            umbilics = find_umbilics(current, res)
            total = sum((u.index for u in umbilics), Fraction(0))
            err = None
        except ResolutionError as exc:
            total, err = None, str(exc)
        attempts.append({"resolution": res, "rotated_atlas": attempt > refinements,
                         "count": len(umbilics) if err is None else None,
                         "sum": None if total is None else str(total), "error": err})
        if total == 2:
            break
        if attempt < refinements:
            res *= 2
        else:
            current = imm.with_atlas(random_rotation(atlas_seed + attempt))
    passed = total == 2
    return {"schema_version": 1, "surface": imm.describe(), "passed": bool(passed),
            "index_sum": None if total is None else str(total),
            "umbilics": [u.to_dict() for u in umbilics] if err is None else [],
            "attempts": attempts}


def caratheodory_check(imm, resolution=60):
    """At least two umbilics and no index above 1 (with the Poincare-Hopf audit attached)."""
    ph = poincare_hopf_check(imm, resolution)
    indices = [Fraction(u["index"]) for u in ph["umbilics"]]
    count = len(indices)
    max_index = max(indices) if indices else None
    report = dict(ph)
    report.update({"count": count, "max_index": None if max_index is None else str(max_index),
                   "at_least_two": count >= 2,
                   "max_index_at_most_one": max_index is not None and max_index <= 1})
    report["passed"] = bool(ph["passed"] and report["at_least_two"] and report["max_index_at_most_one"])
    return report


def corpus(size=25, seed=20240607, eps=0.05, resolution=40):
    """Random convex perturbed spheres ``x (1 + eps P(x))`` with cubic ``P``; non-convex draws are skipped.

    Coefficients are normalized so that ``sum |c| = 1``, hence ``|P| <= 1`` on the sphere.
    Returns ``(accepted, rejected_count)``.
    """
    rng = np.random.default_rng(seed)
    out = []
    rejected = 0
    m = len(cubic_monomials())
    while len(out) < size:
        c = rng.normal(size=m)
        c /= np.sum(np.abs(c))
        imm = perturbed_sphere(c, eps)
        if check_convex(imm, resolution)["convex"]:
            out.append(imm)
        else:
            rejected += 1
    return out, rejected


def corpus_json(members):
    return json.dumps({"schema_version": 1, "members": [m.describe() for m in members]}, sort_keys=True, indent=2)
