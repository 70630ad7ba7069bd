"""Line fields around a zero: sampling, winding index and sector detection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, PreconditionError, ResolutionError
from .word import H, P, FoliationLayout, SectorWord

JUMP_LIMIT = math.pi / 4
HALF_INTEGER_SLACK = 0.05
ZERO_TOL = 1e-9
# radial test used when bisecting the edges of a parabolic run
EDGE_TOL = 1e-13
SWEEP_RTOL = 0.05


@dataclass(frozen=True)
class LineField:
    """Directions (mod pi, in ``[0, pi)``) sampled on circles of an annulus.

    ``directions[i, j]`` is the direction at radius ``radii[i]`` and polar
    angle ``angles[j]``.  ``sampler`` maps complex points to directions and is
    used to refine separatrices and shoot trajectories.
    """

    r_in: float
    r_out: float
    radii: np.ndarray
    angles: np.ndarray
    directions: np.ndarray
    provenance: str
    order: int | None = None
    sampler: object = field(default=None, repr=False, compare=False)

    def to_csv(self):
        lines = ["radius,angle,direction"]
        for i, r in enumerate(self.radii):
            for j, a in enumerate(self.angles):
                lines.append(f"{r!r},{a!r},{self.directions[i, j]!r}")
        return "\n".join(lines) + "\n"


def _annulus(annulus, resolution):
    r_in, r_out = map(float, annulus)
    if not 0 < r_in < r_out:
        raise PreconditionError(f"annulus must satisfy 0 < r_in < r_out, got {annulus!r}")
    n_radii, n_angles = resolution
    radii = np.linspace(r_in, r_out, int(n_radii))
    angles = 2 * np.pi * np.arange(int(n_angles)) / int(n_angles)
    return r_in, r_out, radii, angles


def _field_from_sampler(sampler, annulus, resolution, provenance, order):
    r_in, r_out, radii, angles = _annulus(annulus, resolution)
    z = radii[:, None] * np.exp(1j * angles[None, :])
    return LineField(r_in, r_out, radii, angles, sampler(z), provenance, order, sampler)


def foliation_sampler(qd, t):
    """Direction of the slope-``t`` leaves, ``(2t - Arg phi) / 2 mod pi``."""
    def sampler(z):
        return np.mod(0.5 * (2 * t - np.angle(qd.evaluate(z, check=False))), np.pi)
    return sampler


def layout_sampler(layout):
    def sampler(z):
        z = np.asarray(z, dtype=complex)
        psi = np.angle(z)
        return np.vectorize(layout.direction, otypes=[float])(psi)
    return sampler


def sample_foliation(qd, t, annulus, resolution=(3, 2048)):
    """Sample the slope-``t`` geodesic foliation of ``qd`` on an annulus around 0."""
    if annulus[1] > qd.R * (1 + 1e-12):
        raise DomainError(f"annulus outer radius {annulus[1]!r} exceeds chart radius {qd.R!r}")
    return _field_from_sampler(foliation_sampler(qd, t), annulus, resolution,
                               f"foliation(n={qd.n}, t={t!r})", qd.n)


def sample_layout(layout, annulus=(0.25, 1.0), resolution=(3, 2048)):
    """Sample the model foliation of a realized layout."""
    if not isinstance(layout, FoliationLayout):
        raise PreconditionError("sample_layout needs a FoliationLayout")
    return _field_from_sampler(layout_sampler(layout), annulus, resolution,
                               f"layout(n={layout.n})", layout.n)


def _circle(fld, r):
    if not fld.r_in * (1 - 1e-12) <= r <= fld.r_out * (1 + 1e-12):
        raise PreconditionError(f"radius {r!r} outside the sampled annulus")
    hit = np.flatnonzero(np.isclose(fld.radii, r, rtol=1e-12, atol=0))
    if hit.size:
        return fld.directions[hit[0]]
    if fld.sampler is None:
        raise PreconditionError(f"radius {r!r} is not a sampled circle and the field has no sampler")
    return fld.sampler(r * np.exp(1j * fld.angles))


def wrap_half(x):
    """Wrap angles mod pi into ``[-pi/2, pi/2)``."""
    return np.mod(np.asarray(x) + 0.5 * np.pi, np.pi) - 0.5 * np.pi


def winding_raw(directions):
    """Total turn of a sampled line field around a circle, in full turns."""
    d = np.asarray(directions, dtype=float)
    steps = wrap_half(np.diff(np.append(d, d[0])))
    worst = float(np.max(np.abs(steps)))
    if worst >= JUMP_LIMIT:
        raise ResolutionError(f"direction jumps by {worst:.3f} rad between samples; refine the circle")
    return float(np.sum(steps)) / (2 * np.pi)


def winding_index(fld, r=None):
    """Index of the line field on the circle of radius ``r`` as an exact half-integer."""
    if r is None:
        r = float(fld.radii[len(fld.radii) // 2])
    raw = winding_raw(_circle(fld, r))
    twice = round(2 * raw)
    if abs(raw - twice / 2) > HALF_INTEGER_SLACK:
        raise ResolutionError(f"winding {raw:.4f} is not near a half-integer")
    return Fraction(twice, 2)


# -- sector detection -------------------------------------------------------------

def _offset(fld, psi, r):
    """Direction minus radial angle, wrapped to (-pi/2, pi/2]."""
    z = r * np.exp(1j * np.atleast_1d(psi))
    return wrap_half(fld.sampler(z) - np.atleast_1d(psi))


def _bisect(pred, a, b, tol=1e-13):
    """Locate the switch of a predicate that holds at ``a`` and fails at ``b``."""
    for _ in range(200):
        if abs(b - a) <= tol:
            break
        m = 0.5 * (a + b)
        if pred(m):
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _shoot(sampler, start, r_out, orientation, capture, max_steps=20000):
    """Follow a line field from ``start``; returns ``"exit"``, ``"captured"`` or ``"stalled"``."""
    z = complex(start)
    h = 0.01 * abs(z)
    ref = np.exp(1j * sampler(np.array([z]))[0]) * orientation

    def dirn(p, ref):
        d = np.exp(1j * sampler(np.array([p]))[0])
        return d if (d * np.conj(ref)).real >= 0 else -d

    for _ in range(max_steps):
        k1 = dirn(z, ref)
        k2 = dirn(z + 0.5 * h * k1, k1)
        k3 = dirn(z + 0.5 * h * k2, k1)
        k4 = dirn(z + h * k3, k1)
        nz = z + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        seg = nz - z
        t = min(max(-(np.conj(z) * seg).real / max(abs(seg) ** 2, 1e-300), 0.0), 1.0)
        if abs(z + t * seg) < capture:
            return "captured"
        ref = k1
        z = nz
        if abs(z) >= r_out:
            return "exit"
        h = 0.01 * max(abs(z), capture)
    return "stalled"


def _classify(fld, psi, r, capture_fraction=1e-3):
    z0 = r * np.exp(1j * psi)
    outcomes = {_shoot(fld.sampler, z0, fld.r_out, o, capture_fraction * r) for o in (1, -1)}
    if outcomes == {"exit"}:
        return H
    if outcomes == {"exit", "captured"}:
        return P
    return None


def _order_of(fld, source):
    if source is not None:
        return source.n
    if fld.order is None:
        raise PreconditionError("cannot tell the order of the zero; pass the differential or layout")
    return fld.order


def detect_sectors(fld, source=None, r=None):
    """Recover the sector word of a geodesic foliation from its sampled field.

    Separatrix rays are the angles where the field is radial.  Isolated sign
    changes of (direction - angle) are single rays; runs where the field stays
    radial are parabolic candidates (their boundary rays belong to the
    p-sector).  Each candidate sector is classified by shooting trajectories
    both ways from its middle ray: both leaving the annulus means ``h``, one
    falling into the zero means ``p``.  The word is listed clockwise.
    """
    if fld.sampler is None:
        raise PreconditionError("sector detection needs a field with a sampler")
    n = _order_of(fld, source)
    if r is None:
        r = float(fld.radii[len(fld.radii) // 2])
    psi = np.asarray(fld.angles, dtype=float)
    winding_raw(_circle(fld, r))  # continuity check
    g = _offset(fld, psi, r)
    m = len(psi)
    zero = np.abs(g) <= ZERO_TOL
    two_pi = 2 * np.pi

    def ang(j):
        # angle of sample j, unwrapped past the end of the circle
        return psi[j % m] + two_pi * (j // m)

    rays = []       # isolated separatrices
    intervals = []  # (lo, hi) parabolic candidates

    if zero.all():
        return SectorWord((P,), n, (two_pi,))

    # start the scan at a sample that is not in a zero-run
    s0 = int(np.flatnonzero(~zero)[0])
    j = s0
    while j < s0 + m:
        a, b = j % m, (j + 1) % m
        if zero[b]:
            k = j + 1
            while zero[k % m]:
                k += 1
            ga, gk = g[a], g[k % m]
            if k - j == 2 and ga * gk < 0 and abs(ga) + abs(gk) < 0.5 * np.pi:
                rays.append(ang(j + 1))
            elif k - j == 2:
                raise ResolutionError(f"ambiguous radial sample near angle {ang(j + 1):.6f}; refine the circle")
            else:
                def radial(x):
                    return abs(_offset(fld, x, r)[0]) <= EDGE_TOL
                lo = _bisect(radial, ang(j + 1), ang(j))
                hi = _bisect(radial, ang(k - 1), ang(k))
                intervals.append((lo, hi))
            j = k
            continue
        if g[a] * g[b] < 0 and abs(g[a]) + abs(g[b]) < 0.5 * np.pi:
            lo, hi = ang(j), ang(j + 1)
            sa = np.sign(g[a])
            rays.append(_bisect(lambda x: np.sign(_offset(fld, x, r)[0]) == sa, lo, hi))
        j += 1

    marks = [(x % two_pi, x % two_pi, "ray") for x in rays]
    marks += [(lo % two_pi, lo % two_pi + (hi - lo), P) for lo, hi in intervals]
    marks.sort()
    if not marks:
        raise ResolutionError("no separatrix found; the field has no sector structure here")

    sectors = []  # (kind, lo, hi) counterclockwise
    for i, (lo, hi, kind) in enumerate(marks):
        if kind == P:
            sectors.append((P, lo, hi))
        nxt = marks[(i + 1) % len(marks)][0] + (two_pi if i + 1 == len(marks) else 0.0)
        if nxt - hi > 1e-12:
            sectors.append((None, hi, nxt))

    sweep_h = two_pi / (n + 2)
    symbols, weights = [], []
    for kind, lo, hi in sectors:
        mid = 0.5 * (lo + hi)
        found = _classify(fld, mid, r)
        if found is None or (kind == P and found != P):
            raise ResolutionError(f"mixed behavior in the arc [{lo:.6f}, {hi:.6f}]")
        if found == H and abs((hi - lo) - sweep_h) > SWEEP_RTOL * sweep_h:
            raise ResolutionError(f"hyperbolic arc [{lo:.6f}, {hi:.6f}] has sweep {hi - lo:.6f}, "
                                  f"expected {sweep_h:.6f}")
        symbols.append(found)
        weights.append(hi - lo)
    symbols.reverse()
    weights.reverse()
    return SectorWord(tuple(symbols), n, tuple(w for s, w in zip(symbols, weights) if s == P))


def sectors_to_csv(word):
    lines = ["position,kind,weight"]
    it = iter(word.p_weights)
    for i, s in enumerate(word.symbols):
        wgt = 2 * math.pi / (word.n + 2) if s == H else next(it)
        lines.append(f"{i},{s},{wgt!r}")
    return "\n".join(lines) + "\n"
