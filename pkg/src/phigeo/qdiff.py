"""Holomorphic quadratic differentials near an isolated zero.

A differential ``phi(z) dz^2`` with ``phi(z) = a z^n + sum c_k z^k`` is stored
by its leading coefficient, its order and a finite list of higher terms.  It
induces the singular flat metric ``|phi(z)|^(1/2) |dz|``, which has a cone
point of total angle ``(n + 2) pi`` at the origin.

Chart points are plain Python ``complex`` numbers (or complex numpy arrays);
``abs(z)`` and ``cmath.phase(z)`` give the polar accessors.
"""
from __future__ import annotations

import cmath
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, DomainError, SingularPointError, UnsupportedFormError

# Relative slack when testing |z| <= R, so boundary points survive roundoff.
_CHART_SLACK = 1e-12

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def wrap_pi(angle):
    """Reduce an angle (or array of angles) to the half-open interval (-pi, pi]."""
    out = math.pi - np.mod(math.pi - np.asarray(angle, dtype=float), 2 * math.pi)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class QuadraticDifferential:
    """``phi(z) = a z^n + sum_k c_k z^k`` on the closed disk ``|z| <= R``."""

    a: complex
    n: int
    terms: tuple = ()
    R: float = 1.0
    _check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "terms", tuple((int(k), complex(c)) for k, c in self.terms))
        if self.a == 0:
            raise ConstructionError("leading coefficient must be nonzero")
        if int(self.n) != self.n or self.n < 0:
            raise ConstructionError(f"order must be a nonnegative integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not (math.isfinite(self.R) and self.R > 0):
            raise ConstructionError("chart radius must be positive and finite")
        for k, _ in self.terms:
            if k <= self.n:
                raise ConstructionError(f"higher term degree {k} does not exceed order {self.n}")
        if self._check and self.terms:
            self._check_no_extra_zeros()

    def _check_no_extra_zeros(self):
        # Argument principle on |z| = R plus a floor on |phi| along nested circles.
        theta = np.linspace(0.0, 2 * np.pi, 4097)[:-1]
        for k in range(1, 17):
            r = self.R * k / 16
            vals = self.evaluate(r * np.exp(1j * theta))
            scale = abs(self.a) * r ** self.n
            if np.min(np.abs(vals)) < 1e-8 * scale:
                raise ConstructionError(f"phi vanishes near the circle |z| = {r:g}")
        vals = self.evaluate(self.R * np.exp(1j * theta))
        steps = np.diff(np.unwrap(np.angle(np.append(vals, vals[0]))))
        winding = int(round(steps.sum() / (2 * np.pi)))
        if winding != self.n:
            raise ConstructionError(
                f"phi has {winding - self.n} extra zero(s) in 0 < |z| <= {self.R:g}")

    @property
    def is_monomial(self):
        return not any(c != 0 for _, c in self.terms)

    # -- evaluation -------------------------------------------------------

    def _check_domain(self, z):
        if np.any(np.abs(z) > self.R * (1 + _CHART_SLACK)):
            raise DomainError(f"point outside chart |z| <= {self.R:g}")

    def evaluate(self, z, check=True):
        """Value of ``phi`` at ``z`` (scalar or array)."""
        z = np.asarray(z, dtype=complex) if np.ndim(z) else complex(z)
        if check:
            self._check_domain(z)
        out = self.a * z ** self.n
        for k, c in self.terms:
            out = out + c * z ** k
        return out

    __call__ = evaluate

    def cone_angle(self):
        """Total angle ``(n + 2) pi`` of the cone point at the origin."""
        return (self.n + 2) * math.pi

    def metric_density(self, z):
        """Density ``|phi(z)|^(1/2)`` of the flat metric."""
        return np.sqrt(np.abs(self.evaluate(z)))

    def natural_parameter(self, z):
        """Principal-branch ``w = 2/(n+2) a^(1/2) z^((n+2)/2)``; monomials only.

        The branch cut lies along ``Arg z = pi``.  ``|dw| = |phi|^(1/2) |dz|``.
        """
        if not self.is_monomial:
            raise UnsupportedFormError("natural parameter is exposed only for monomial differentials")
        scalar = not np.ndim(z)
        zz = np.asarray(z, dtype=complex)
        self._check_domain(zz)
        w = (2.0 / (self.n + 2)) * np.sqrt(self.a) * zz ** ((self.n + 2) / 2)
        w = np.where(zz == 0, 0, w)
        return complex(w) if scalar else w

    def phase(self, z, direction):
        """``Arg phi(z) + 2 Arg(direction)`` reduced to (-pi, pi]."""
        if z == 0:
            raise SingularPointError("phase is undefined at the zero of phi")
        value = self.evaluate(z)
        return float(wrap_pi(cmath.phase(value) + 2 * cmath.phase(direction)))

    def rotated(self, t):
        """The differential ``e^{-2it} phi``; its horizontal foliation is the slope-t one."""
        rot = cmath.exp(-2j * t)
        return QuadraticDifferential(self.a * rot, self.n, tuple((k, c * rot) for k, c in self.terms),
                                     self.R, _check=False)

    # -- serialization ----------------------------------------------------

    def to_dict(self):
        return {"a": [self.a.real, self.a.imag], "n": self.n,
                "terms": [[k, c.real, c.imag] for k, c in self.terms], "R": self.R}

    @classmethod
    def from_dict(cls, data):
        a = complex(data["a"][0], data["a"][1])
        terms = tuple((int(k), complex(re_, im_)) for k, re_, im_ in data.get("terms", []))
        return cls(a, int(data["n"]), terms, float(data["R"]))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def parse(cls, text, R=1.0):
        """Parse a polynomial such as ``"z^2"``, ``"2j*z^3"`` or ``"z + 0.1*z^2"``."""
        src = text.replace(" ", "").replace("**", "^")
        if not src:
            raise ConstructionError("empty expression")
        coeffs = {}
        for sign, body in re.findall(r"([+-]?)((?:\([^()]*\)|[^+-])+)", src):
            if not body:
                continue
            m = re.fullmatch(r"(?:(\([^()]*\)|[0-9.eji]+)\*?)?(z(?:\^(\d+))?)?", body)
            if m is None or (m.group(1) is None and m.group(2) is None):
                raise ConstructionError(f"cannot parse term {body!r}")
            coef_txt = m.group(1)
            try:
                coef = complex(coef_txt.strip("()").replace("i", "j")) if coef_txt else 1.0
            except ValueError as exc:
                raise ConstructionError(f"bad coefficient {coef_txt!r}") from exc
            deg = 0 if m.group(2) is None else int(m.group(3) or 1)
            if sign == "-":
                coef = -coef
            coeffs[deg] = coeffs.get(deg, 0) + coef
        coeffs = {k: c for k, c in coeffs.items() if c != 0}
        if not coeffs:
            raise ConstructionError("differential is identically zero")
        n = min(coeffs)
        terms = tuple((k, coeffs[k]) for k in sorted(coeffs) if k != n)
        return cls(coeffs[n], n, terms, R)


def monomial(n, a=1.0, R=1.0):
    """Shorthand for ``a z^n dz^2`` on ``|z| <= R``."""
    return QuadraticDifferential(a, n, (), R)


# -- metric functionals --------------------------------------------------------

def _half_segment_lengths(qd, p, direction, length, panels):
    # Integrates |phi|^(1/2) along p + direction * s, s in [0, length], with
    # s = length * tau^2 so nodes cluster where the segment is closest to 0.
    edges = np.linspace(0.0, 1.0, panels + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 / panels
    tau = (mids[:, None] + half * _GL_NODES[None, :]).ravel()
    wts = np.tile(half * _GL_WEIGHTS, panels)
    s = length[:, None] * tau[None, :] ** 2
    z = p[:, None] + direction[:, None] * s
    dens = np.sqrt(np.abs(qd.evaluate(z)))
    jac = 2.0 * length[:, None] * tau[None, :]
    return (dens * jac) @ wts


def segment_phi_lengths(qd, a, b, rtol=1e-13, max_panels=512):
    """phi-lengths of straight chart segments ``a[i] -> b[i]`` (vectorized).

    Each segment is split at its point of closest approach to the origin and
    integrated with composite Gauss-Legendre after a quadratic substitution;
    the panel count doubles until successive values agree to ``rtol``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    a, b = np.broadcast_arrays(a, b)
    a = a.ravel()
    b = b.ravel()
    d = b - a
    chord = np.abs(d)
    out = np.zeros(a.shape)
    live = chord > 0
    if not np.any(live):
        return out
    a_, d_, chord_ = a[live], d[live], chord[live]
    unit = d_ / chord_
    t_star = np.clip(-np.real(np.conj(a_) * d_) / chord_ ** 2, 0.0, 1.0)
    p = a_ + t_star * d_
    len_a = t_star * chord_
    len_b = (1.0 - t_star) * chord_

    def total(idx, panels):
        return (_half_segment_lengths(qd, p[idx], -unit[idx], len_a[idx], panels)
                + _half_segment_lengths(qd, p[idx], unit[idx], len_b[idx], panels))

    idx = np.arange(len(p))
    result = np.empty(len(p))
    panels = 1
    prev = total(idx, panels)
    while idx.size:
        panels *= 2
        cur = total(idx, panels)
        done = np.abs(cur - prev) <= rtol * np.maximum(np.abs(cur), 1e-300)
        if panels >= max_panels:
            done[:] = True
        result[idx[done]] = cur[done]
        idx = idx[~done]
        prev = cur[~done]
    out[live] = result
    return out


def developed_angle(qd, r, samples=2048):
    """Total angle swept by the developed image of the circle ``|z| = r``.

    The developing map ``w = int_0^z phi^(1/2) dz`` is integrated numerically
    along the radius and then around the circle with a continuously tracked
    square-root branch; the unwrapped argument change of ``w`` is returned.
    """
    if not 0 < r <= qd.R:
        raise DomainError("circle must lie in the punctured chart")
    # Radial leg from 0 to r (phi^(1/2) ~ s^(n/2): substitute s = r tau^2).
    tau = 0.5 * (_GL_NODES + 1.0)
    s = r * tau ** 2
    root = np.sqrt(qd.evaluate(s.astype(complex)))
    root = _align_branch(root)
    w0 = np.sum(0.5 * _GL_WEIGHTS * root * 2 * r * tau)
    # Around the circle: GL nodes on every arc, branch continued from the radial leg.
    theta_edges = np.linspace(0.0, 2 * np.pi, samples + 1)
    half = 0.5 * (theta_edges[1] - theta_edges[0])
    mids = 0.5 * (theta_edges[1:] + theta_edges[:-1])
    theta = (mids[:, None] + half * _GL_NODES[None, :]).ravel()
    pts = np.concatenate(([r], r * np.exp(1j * theta)))
    roots = np.sqrt(qd.evaluate(pts))
    roots[0] = root[-1]
    roots = _align_branch(roots)[1:].reshape(samples, -1)
    dz = 1j * r * np.exp(1j * theta).reshape(samples, -1)
    increments = (roots * dz) @ (half * _GL_WEIGHTS)
    w = w0 + np.concatenate(([0.0], np.cumsum(increments)))
    return float(np.sum(np.diff(np.unwrap(np.angle(w)))))


def _align_branch(roots):
    """Flip signs of square roots so consecutive values vary continuously."""
    roots = np.asarray(roots, dtype=complex).copy()
    flips = np.real(roots[1:] * np.conj(roots[:-1])) < 0
    parity = np.concatenate(([0], np.cumsum(flips) % 2))
    roots[parity == 1] *= -1
    return roots
