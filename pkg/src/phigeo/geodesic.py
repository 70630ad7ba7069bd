"""phi-geodesics near the zero of a quadratic differential.

Two kinds of geodesic occur near an order-n zero: arcs along which
``Arg(phi dz^2)`` is constant, and broken paths made of two radii through the
zero whose chart angle is at least ``2 pi / (n + 2)``.  ``connect`` decides
between them by developing the cone into the plane with the natural
parameter; ``trace_trajectory`` integrates the constant-phase direction field.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AccuracyError, DomainError, PreconditionError, SingularPointError, UnsupportedFormError
from .qdiff import segment_phi_lengths, wrap_pi

REGULAR_ARC = "RegularArc"
RADIUS_PAIR = "RadiusPair"

TIE_TOL = 1e-9
CAPTURE_FRACTION = 1e-4


@dataclass(frozen=True)
class GeodesicPath:
    kind: str
    length: float
    points: np.ndarray = field(repr=False)
    phase: float | None = None
    theta1: float | None = None
    theta2: float | None = None
    r1: float | None = None
    r2: float | None = None
    separation: float = 0.0
    turning: int = 1
    tie: bool = False
    degenerate: bool = False
    # Development data for RegularArc: endpoint images in the developed plane.
    _dev: tuple = field(default=None, repr=False, compare=False)

    def sample(self, m):
        """Resample the stored geometry with ``m`` points."""
        if self.kind == RADIUS_PAIR:
            half = max(m // 2, 2)
            a = np.linspace(self.points[0], 0, half)
            b = np.linspace(0, self.points[-1], half)
            return np.concatenate((a, b[1:]))
        if self.degenerate:
            return np.array(self.points)
        return self.sample_at(np.linspace(0.0, 1.0, m))

    def sample_at(self, tau):
        """Points of a RegularArc at developed-segment parameters ``tau`` in [0, 1]."""
        return _pull_back(*self._dev, np.asarray(tau, dtype=float))

    def closest_approach(self):
        """Parameter in [0, 1] where the developed segment passes closest to the cone point."""
        W1, W2 = self._dev[0], self._dev[1]
        d = W2 - W1
        if d == 0:
            return 0.0
        return min(max(-(W1.conjugate() * d).real / abs(d) ** 2, 0.0), 1.0)


def _cone_geometry(z1, z2, n):
    r1, r2 = abs(z1), abs(z2)
    t1 = cmath.phase(z1) if z1 != 0 else cmath.phase(z2)
    t2 = cmath.phase(z2) if z2 != 0 else t1
    ccw = (t2 - t1) % (2 * math.pi)
    chart_angle = min(ccw, 2 * math.pi - ccw)
    turning = 1 if ccw <= math.pi else -1
    return r1, r2, t1, t2, chart_angle, turning, 0.5 * (n + 2) * chart_angle


def _pull_back(W1, W2, scale, k, theta1, turning, tau):
    W = (1.0 - tau) * W1 + tau * W2
    rho = (np.abs(W) / scale) ** (1.0 / k)
    psi = np.angle(W) / k
    return rho * np.exp(1j * (theta1 + turning * psi))


def cone_separation(z1, z2, n):
    """Developed angle between ``z1`` and ``z2`` on the cone of an order-n zero."""
    return _cone_geometry(complex(z1), complex(z2), n)[-1]


def connect(qd, z1, z2, samples=257):
    """The phi-geodesic joining ``z1`` and ``z2`` (monomial differentials).

    A RadiusPair is returned exactly when the developed separation is at least
    pi; separations within ``TIE_TOL`` of pi set ``tie``.  When both turning
    directions give the same chart angle the counterclockwise one is used.
    """
    if not qd.is_monomial:
        raise UnsupportedFormError("connect needs a monomial differential; use the flatcone oracle")
    z1, z2 = complex(z1), complex(z2)
    qd._check_domain(np.array([z1, z2]))
    if z1 == z2:
        return GeodesicPath(REGULAR_ARC, 0.0, np.array([z1]), degenerate=True)
    n = qd.n
    k = 0.5 * (n + 2)
    scale = (2.0 / (n + 2)) * math.sqrt(abs(qd.a))
    r1, r2, t1, t2, chart_angle, turning, sep = _cone_geometry(z1, z2, n)
    tie = abs(sep - math.pi) <= TIE_TOL

    if z1 == 0 or z2 == 0:
        # A single radius: a constant-phase arc ending at the zero.
        far = z2 if z1 == 0 else z1
        pts = np.linspace(z1, z2, samples)
        return GeodesicPath(REGULAR_ARC, scale * abs(far) ** k, pts,
                            phase=qd.phase(far, far / abs(far)), theta1=t1, theta2=t2,
                            r1=r1, r2=r2, separation=0.0, turning=turning,
                            _dev=(scale * r1 ** k + 0j, scale * r2 ** k + 0j, scale, k, t1, 1))

    if sep >= math.pi:
        half = max(samples // 2, 2)
        pts = np.concatenate((np.linspace(z1, 0, half), np.linspace(0, z2, half)[1:]))
        return GeodesicPath(RADIUS_PAIR, scale * (r1 ** k + r2 ** k), pts, theta1=t1, theta2=t2,
                            r1=r1, r2=r2, separation=sep, turning=turning, tie=tie)

    W1 = scale * r1 ** k + 0j
    W2 = scale * r2 ** k * cmath.exp(1j * sep)
    dev = (W1, W2, scale, k, t1, turning)
    pts = _pull_back(*dev, np.linspace(0.0, 1.0, samples))
    pts[0], pts[-1] = z1, z2
    phase = wrap_pi(2 * turning * cmath.phase(W2 - W1) + cmath.phase(qd.a) + (n + 2) * t1)
    return GeodesicPath(REGULAR_ARC, abs(W2 - W1), pts, phase=phase, theta1=t1, theta2=t2,
                        r1=r1, r2=r2, separation=sep, turning=turning, tie=tie, _dev=dev)


def phi_length(qd, polyline):
    """phi-length of a chart polyline (sum over its straight segments)."""
    pts = np.asarray(polyline, dtype=complex)
    if pts.size < 2:
        return 0.0
    return float(np.sum(segment_phi_lengths(qd, pts[:-1], pts[1:])))


def integrated_length(qd, path, m=513, levels=3):
    """phi-length of the stored geometry of ``path``.

    Inscribed polylines are summed with exact per-chord phi-lengths.  For a
    RegularArc the samples are graded cubically towards the point closest to
    the zero, where the chart curve bends most; each polyline length then has
    an error expansion in even powers of the spacing, and Romberg
    extrapolation over ``levels`` doublings removes the leading terms.
    """
    if path.degenerate:
        return 0.0
    if path.kind == RADIUS_PAIR:
        return phi_length(qd, path.sample(3))
    tau_star = path.closest_approach()
    total = 0.0
    for piece, (lo, hi) in enumerate(((0.0, tau_star), (tau_star, 1.0))):
        if hi - lo <= 0:
            continue
        table = []
        for j in range(levels):
            s = np.linspace(0.0, 1.0, (m - 1) * 2 ** j + 1)
            # cubic grading towards the closest-approach end of each piece
            tau = hi - (hi - lo) * (1 - s) ** 3 if piece == 0 else lo + (hi - lo) * s ** 3
            table.append([phi_length(qd, path.sample_at(tau))])
            for k in range(1, j + 1):
                f = 4.0 ** k
                table[j].append(table[j][k - 1] + (table[j][k - 1] - table[j - 1][k - 1]) / (f - 1))
        total += table[-1][-1]
    return total


# -- trajectories ---------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Polyline along a constant-phase leaf; ``arclen`` is chart arclength."""

    points: np.ndarray
    arclen: np.ndarray
    tangents: np.ndarray
    phase: float
    stop: str

    def to_csv(self):
        lines = ["u,v,arclen"]
        for z, s in zip(self.points, self.arclen):
            lines.append(f"{z.real!r},{z.imag!r},{s!r}")
        return "\n".join(lines) + "\n"


def _direction(qd, z, theta, ref):
    d = cmath.exp(0.5j * (theta - cmath.phase(qd.evaluate(z, check=False))))
    if (d * ref.conjugate()).real < 0:
        d = -d
    return d


def _rk4(qd, z, theta, ref, h):
    k1 = _direction(qd, z, theta, ref)
    k2 = _direction(qd, z + 0.5 * h * k1, theta, k1)
    k3 = _direction(qd, z + 0.5 * h * k2, theta, k1)
    k4 = _direction(qd, z + h * k3, theta, k1)
    return z + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0, k1


def trace_trajectory(qd, start, theta, step, max_arclen, orientation=1, tol=1e-10, max_halvings=24):
    """Integrate the leaf of ``Arg(phi dz^2) = theta`` through ``start``.

    Classical RK4 in chart arclength with step-doubling error control: a step
    is accepted when a full step and two half steps agree to ``tol`` (scaled by
    ``|z|``), otherwise it is halved.  ``orientation`` picks one of the two
    antipodal tangents at the start.  Integration stops at the chart boundary,
    after ``max_arclen``, or on entering the capture disk ``|z| < 1e-4 R``
    (the endpoint is then snapped to 0).
    """
    start = complex(start)
    if start == 0:
        raise SingularPointError("cannot start a trajectory at the zero")
    if step <= 0 or max_arclen <= 0:
        raise PreconditionError("step and max_arclen must be positive")
    qd._check_domain(start)
    capture = CAPTURE_FRACTION * qd.R
    d0 = cmath.exp(0.5j * (theta - cmath.phase(qd.evaluate(start))))
    ref = d0 if orientation >= 0 else -d0
    z = start
    s = 0.0
    pts = [z]
    arc = [s]
    tans = [ref]
    stop = "max_arclen"
    h_min = step * 2.0 ** -max_halvings
    while max_arclen - s > 1e-9 * step:
        h = min(step, max_arclen - s)
        while True:
            full, _ = _rk4(qd, z, theta, ref, h)
            mid, k1 = _rk4(qd, z, theta, ref, 0.5 * h)
            ref_mid = _direction(qd, mid, theta, k1)
            two, _ = _rk4(qd, mid, theta, ref_mid, 0.5 * h)
            if abs(two - full) / 15.0 <= tol * max(abs(z), 1e-3):
                break
            h *= 0.5
            if h < h_min:
                raise AccuracyError(f"cannot hold tolerance {tol:g} near z={z:.6g}")
        if abs(two) > qd.R:
            # Shorten the last step so it ends on the chart boundary.
            lo, hi = 0.0, h
            for _ in range(60):
                h_try = 0.5 * (lo + hi)
                if abs(_rk4(qd, z, theta, ref, h_try)[0]) > qd.R:
                    hi = h_try
                else:
                    lo = h_try
            two, _ = _rk4(qd, z, theta, ref, lo)
            pts.append(two)
            arc.append(s + lo)
            tans.append(_direction(qd, two, theta, ref))
            stop = "boundary"
            break
        if _distance_to_origin(z, two) < capture:
            pts.append(0j)
            arc.append(s + abs(z))
            tans.append(ref)
            stop = "captured"
            break
        ref = _direction(qd, two, theta, ref)
        z = two
        s += h
        pts.append(z)
        arc.append(s)
        tans.append(ref)
    return Trajectory(np.array(pts), np.array(arc), np.array(tans), float(theta), stop)


def _distance_to_origin(a, b):
    d = b - a
    if d == 0:
        return abs(a)
    t = min(max(-(a.conjugate() * d).real / abs(d) ** 2, 0.0), 1.0)
    return abs(a + t * d)


def phase_deviation(qd, points, theta):
    """Largest ``|Arg(phi dz^2) - theta|`` over chords, measured at chord midpoints."""
    pts = np.asarray(points, dtype=complex)
    pts = pts[np.abs(pts) > 0]
    if len(pts) < 2:
        return 0.0
    chords = np.diff(pts)
    keep = np.abs(chords) > 1e-12 * np.max(np.abs(pts))
    chords = chords[keep]
    mids = (0.5 * (pts[1:] + pts[:-1]))[keep]
    ph = np.angle(qd.evaluate(mids, check=False)) + 2 * np.angle(chords)
    return float(np.max(np.abs(wrap_pi(ph - theta))))


def leaf_invariant(qd, points, theta):
    """``Im(e^{-i theta/2} w)`` along ``points`` for a monomial, with ``w`` continued along the path.

    Constant along every leaf of phase ``theta``; the spread of the returned
    values measures how far a traced polyline drifts across leaves.
    """
    if not qd.is_monomial:
        raise UnsupportedFormError("leaf invariant uses the natural parameter")
    pts = np.asarray(points, dtype=complex)
    pts = pts[pts != 0]
    k = 0.5 * (qd.n + 2)
    arg = np.unwrap(np.angle(pts))
    w = (2.0 / (qd.n + 2)) * np.sqrt(qd.a) * np.abs(pts) ** k * np.exp(1j * k * arg)
    return np.imag(np.exp(-0.5j * theta) * w)


def liouville_invariants(point):
    """``(v/u, u*v)``: constant along the ray family ``v = Cu`` and the hyperbola family ``v = C/u``."""
    z = complex(point)
    u, v = z.real, z.imag
    if u == 0:
        raise DomainError("v/u is undefined on the v-axis")
    return v / u, u * v
