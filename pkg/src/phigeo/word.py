"""Sector words over {h, p} describing the foliation around a zero.

A word lists the hyperbolic (``h``) and parabolic (``p``) sectors met when
turning clockwise around the singularity.  Each ``h`` has weight
``2 pi / (n + 2)``; each ``p`` carries its own positive angular weight.
Words are equivalent under cyclic rotation and contraction ``pp -> p``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ConstructionError, IncomparableError, PreconditionError, RealizabilityError

H, P = "h", "p"
WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class SectorWord:
    """Cyclic word with order ``n`` and one weight (radians) per ``p``."""

    symbols: tuple
    n: int
    p_weights: tuple = ()

    def __post_init__(self):
        syms = tuple(self.symbols)
        weights = tuple(float(a) for a in self.p_weights)
        if not syms:
            raise ConstructionError("a sector word cannot be empty")
        if any(s not in (H, P) for s in syms):
            raise ConstructionError(f"symbols must be 'h' or 'p', got {syms!r}")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ConstructionError(f"order must be an integer >= 1, got {self.n!r}")
        if len(weights) != syms.count(P):
            raise ConstructionError("need exactly one weight per p-symbol")
        if any(not (a > 0) or not math.isfinite(a) for a in weights):
            raise ConstructionError("p-weights must be positive and finite")
        object.__setattr__(self, "symbols", syms)
        object.__setattr__(self, "p_weights", weights)
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def parse(cls, text, n):
        """Build a word from ``"h p(1.5708) h"``; spaces between symbols are optional."""
        syms, weights = [], []
        pos = 0
        token = re.compile(r"\s*(h|p\(([^)]*)\))\s*")
        while pos < len(text):
            m = token.match(text, pos)
            if not m or m.end() == pos:
                raise ConstructionError(f"cannot parse word {text!r} at position {pos}")
            if m.group(1) == H:
                syms.append(H)
            else:
                syms.append(P)
                try:
                    weights.append(float(m.group(2)))
                except ValueError:
                    raise ConstructionError(f"bad p-weight {m.group(2)!r}") from None
            pos = m.end()
        return cls(tuple(syms), n, tuple(weights))

    def __str__(self):
        it = iter(self.p_weights)
        return " ".join(H if s == H else f"p({next(it)!r})" for s in self.symbols)

    def to_dict(self):
        return {"word": str(self), "n": self.n}

    @classmethod
    def from_dict(cls, d):
        return cls.parse(d["word"], d["n"])

    @property
    def h_count(self):
        return self.symbols.count(H)

    @property
    def h_weight_over_pi(self):
        """Exact total h-weight as a rational multiple of pi."""
        return Fraction(2 * self.h_count, self.n + 2)

    def runs(self):
        """Cyclic list of items: ``"h"`` or ``("p", weight)`` for each symbol."""
        it = iter(self.p_weights)
        return [H if s == H else (P, next(it)) for s in self.symbols]

    @classmethod
    def from_runs(cls, items, n):
        syms = tuple(H if it == H else P for it in items)
        return cls(syms, n, tuple(it[1] for it in items if it != H))


def weight(w):
    """Total angular weight ``<h> 2 pi / (n + 2) + sum(alpha)``."""
    return float(w.h_weight_over_pi) * math.pi + math.fsum(w.p_weights)


def is_normalized(w):
    """Whether the weight is 2 pi (h-part exact, p-part to ``WEIGHT_TOL``)."""
    remainder = 2 - w.h_weight_over_pi
    if not w.p_weights:
        return remainder == 0
    return abs(float(remainder) * math.pi - math.fsum(w.p_weights)) <= WEIGHT_TOL


def _contract(items):
    """Merge adjacent p's, including across the cyclic seam."""
    if all(it != H for it in items):
        return [(P, math.fsum(it[1] for it in items))]
    # rotate so the cycle starts with an h; then no p-run wraps around
    k = items.index(H)
    items = items[k:] + items[:k]
    out = []
    for it in items:
        if it != H and out and out[-1] != H:
            out[-1] = (P, out[-1][1] + it[1])
        else:
            out.append(it)
    return out


def _rotation_key(items):
    syms = "".join(H if it == H else P for it in items)
    # lexicographically least symbols, then largest p-weights first
    return syms, tuple(-it[1] for it in items if it != H)


def canonical_form(w):
    """Contract p-runs, then rotate to the least symbol sequence (h < p).

    Among rotations with equal symbols the one with the largest leading
    p-weight wins (later p-weights break remaining ties).
    """
    items = _contract(w.runs())
    syms = "".join(H if it == H else P for it in items)
    doubled = syms + syms
    m = len(syms)
    least = min(doubled[k:k + m] for k in range(m))
    rotations = [items[k:] + items[:k] for k in range(m) if doubled[k:k + m] == least]
    best = min(rotations, key=_rotation_key)
    return SectorWord.from_runs(best, w.n)


def equivalent(w1, w2, tol=WEIGHT_TOL):
    """Whether ``w1`` and ``w2`` agree up to rotation and p-contraction."""
    if w1.n != w2.n:
        raise IncomparableError(f"words of order {w1.n} and {w2.n} are not comparable")
    c1, c2 = canonical_form(w1), canonical_form(w2)
    if c1.symbols != c2.symbols:
        return False
    a = c1.runs()
    b = c2.runs()
    m = len(b)
    for k in range(m):
        rot = b[k:] + b[:k]
        if all((x == H and y == H) or (x != H and y != H and abs(x[1] - y[1]) <= tol)
               for x, y in zip(a, rot)):
            return True
    return False


def is_pure_parabolic(w):
    return w.h_count == 0


def index(w):
    """Euler-Poincare index: ``1 - <h>/2``, or ``+1`` for the word ``p``."""
    if not is_normalized(w):
        raise PreconditionError(f"index needs a normalized word; weight is {weight(w)!r}")
    if w.h_count == 0:
        return Fraction(1)
    return 1 - Fraction(w.h_count, 2)


def min_order_realizing(w):
    """Least order ``n >= 1`` at which the class of ``w`` has a normalized representative.

    Only ``<h>`` and the number of maximal p-runs matter: with p-runs the
    h-weight must stay strictly below 2 pi, without them it must equal 2 pi.
    """
    c = canonical_form(w)
    nh = c.h_count
    k = c.symbols.count(P)
    if k >= 1:
        return max(1, nh - 1)
    if nh <= 2:
        raise RealizabilityError(f"{nh} h-sectors alone cannot reach weight 2 pi at any order n >= 1")
    return nh - 2


@dataclass(frozen=True)
class Sector:
    kind: str
    start: float
    sweep: float


@dataclass(frozen=True)
class FoliationLayout:
    """Sectors listed clockwise; sector ``i`` covers ``[start - sweep, start]``."""

    n: int
    sectors: tuple

    def to_dict(self):
        return {"n": self.n, "sectors": [
            {"kind": s.kind, "start": s.start, "sweep": s.sweep} for s in self.sectors]}

    def direction(self, psi):
        """Line-field direction (mod pi) at polar angle ``psi``.

        h-sectors carry the model saddle field whose leaves are asymptotic to the
        two bounding radii; p-sectors carry the radial field.
        """
        psi = float(psi)
        for s in self.sectors:
            lo = s.start - s.sweep
            off = (psi - lo) % (2 * math.pi)
            if off <= s.sweep:
                if s.kind == P:
                    return psi % math.pi
                return (psi - 0.5 * (self.n + 2) * off) % math.pi
        raise AssertionError("layout does not cover the circle")


def realize(w, n, start=0.0):
    """Explicit layout of the class of ``w`` at order ``n``.

    h-sectors get sweep ``2 pi / (n + 2)``.  The p-runs share the remaining
    angle in proportion to their weights, so a word normalized at order ``n``
    keeps its own weights.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise RealizabilityError(f"order must be an integer >= 1, got {n!r}")
    c = canonical_form(w)
    nh = c.h_count
    remainder = 2 - Fraction(2 * nh, n + 2)
    if c.p_weights:
        if remainder <= 0:
            raise RealizabilityError(f"no room for p-sectors: {nh} h-sectors fill 2 pi at n={n}")
    elif remainder != 0:
        raise RealizabilityError(f"{nh} h-sectors have weight {2 - remainder} pi, not 2 pi, at n={n}")
    total_p = math.fsum(c.p_weights)
    rem = float(remainder) * math.pi
    sweep_h = 2 * math.pi / (n + 2)
    sectors = []
    pos = float(start)
    for it in c.runs():
        sweep = sweep_h if it == H else rem * it[1] / total_p
        sectors.append(Sector(H if it == H else P, pos, sweep))
        pos -= sweep
    return FoliationLayout(int(n), tuple(sectors))


# -- elementary operations (used by property tests and the CLI) -------------------

def rotate(w, k):
    """Cyclic permutation by ``k`` places."""
    items = w.runs()
    k %= len(items)
    return SectorWord.from_runs(items[k:] + items[:k], w.n)


def contract_at(w, i):
    """Merge the p at ``i`` with the following p (cyclically)."""
    items = w.runs()
    m = len(items)
    j = (i + 1) % m
    if m < 2 or items[i] == H or items[j] == H:
        raise PreconditionError("contraction needs two adjacent p-symbols")
    merged = (P, items[i][1] + items[j][1])
    if j == 0:
        items = [merged] + items[1:i]
    else:
        items = items[:i] + [merged] + items[j + 1:]
    return SectorWord.from_runs(items, w.n)


def split_at(w, i, fraction=0.5):
    """Inverse contraction: split the p at ``i`` into two p's."""
    items = w.runs()
    if items[i] == H or not 0 < fraction < 1:
        raise PreconditionError("split needs a p-symbol and 0 < fraction < 1")
    a = items[i][1]
    return SectorWord.from_runs(items[:i] + [(P, a * fraction), (P, a * (1 - fraction))] + items[i + 1:], w.n)
