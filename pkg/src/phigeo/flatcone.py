"""Brute-force distance oracle for the singular flat metric.

The disk ``|z| <= R`` is covered by a polar grid (``n_r`` rings of ``n_theta``
nodes plus a center node).  Edges join each node to a set of nearby nodes
chosen so that their chart directions cover the circle evenly; every edge is
weighted by the exact phi-length of its straight chart segment.  Shortest
paths in this graph are admissible chart paths, so graph distances can only
overestimate the continuum distance.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import ConstructionError
from .qdiff import segment_phi_lengths

# 8-neighborhood offsets (d_ring, d_angle) that are always present.
_BASE_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


# Pairs closer than this many ring spacings are outside the reported error model.
MIN_SEPARATION_CELLS = 32


@dataclass(frozen=True)
class MetricGraph:
    qd: object
    n_r: int
    n_theta: int
    directions: int
    adjacency: sparse.csr_matrix
    max_gap: float

    @property
    def resolution(self):
        return (self.n_r, self.n_theta)

    @property
    def n_nodes(self):
        return 1 + self.n_r * self.n_theta

    @property
    def dr(self):
        return self.qd.R / self.n_r

    def node_index(self, ring, k):
        if ring == 0:
            return 0
        return 1 + (ring - 1) * self.n_theta + (k % self.n_theta)

    def node_ring_angle(self, node):
        if node == 0:
            return 0, 0
        ring, k = divmod(node - 1, self.n_theta)
        return ring + 1, k

    def node_position(self, node):
        node = np.asarray(node)
        ring = np.where(node == 0, 0, (node - 1) // self.n_theta + 1)
        k = np.where(node == 0, 0, (node - 1) % self.n_theta)
        pos = ring * self.dr * np.exp(2j * np.pi * k / self.n_theta)
        return complex(pos) if pos.ndim == 0 else pos

    def snap(self, z):
        """Index of the grid node nearest (in ring/angle index) to ``z``."""
        z = complex(z)
        ring = int(round(abs(z) / self.dr))
        if ring == 0:
            return 0
        ring = min(ring, self.n_r)
        k = int(round(math.atan2(z.imag, z.real) / (2 * math.pi) * self.n_theta)) % self.n_theta
        return self.node_index(ring, k)

    @property
    def discretization_bound(self):
        """Relative metrication bound ``1/cos(gap/2) - 1`` from the widest stencil gap.

        The gap is taken over rings away from the center and the rim; the bound
        applies to pairs at least ``MIN_SEPARATION_CELLS`` ring spacings apart.
        """
        return 1.0 / math.cos(0.5 * self.max_gap) - 1.0

    def edges(self):
        """Upper-triangular edge list as arrays ``(u, v, weight)``."""
        upper = sparse.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return upper.row[order], upper.col[order], upper.data[order]

    def write_edge_list(self, path):
        u, v, w = self.edges()
        with open(path, "w") as fh:
            for a, b, c in zip(u.tolist(), v.tolist(), w.tolist()):
                fh.write(f"{a} {b} {c!r}\n")


def default_directions(n_r):
    """Number of target edge directions for a grid with ``n_r`` rings."""
    return max(8, 4 * int(math.ceil(math.sqrt(n_r) / 2)))


def _ring_offsets(i, n_r, n_theta, dr, n_dirs, max_dring):
    """Directed offsets (d_ring, d_angle) used at ring ``i``."""
    dtheta = 2 * np.pi / n_theta
    r_i = i * dr
    reach = max(max_dring, 1)
    span = int(min(n_theta // 4, math.ceil(reach / (i * dtheta)) + 1))
    dring = np.arange(-reach, reach + 1)
    dang = np.arange(-span, span + 1)
    DR, DA = np.meshgrid(dring, dang, indexing="ij")
    DR = DR.ravel()
    DA = DA.ravel()
    target = i + DR
    ok = (target >= 1) & (target <= n_r) & ((DR != 0) | (DA != 0)) & (np.gcd(DR, DA) == 1)
    DR, DA = DR[ok], DA[ok]
    vec = (i + DR) * dr * np.exp(1j * DA * dtheta) - r_i
    ang = np.angle(vec)
    length = np.abs(vec)
    chosen = {off for off in _BASE_OFFSETS if 1 <= i + off[0] <= n_r}
    half_gap = np.pi / n_dirs
    for beta in 2 * np.pi * np.arange(n_dirs) / n_dirs:
        err = np.abs(np.angle(np.exp(1j * (ang - beta))))
        near = err <= 0.5 * half_gap
        if np.any(near):
            pick = np.flatnonzero(near)[np.argmin(length[near])]
        else:
            pick = int(np.argmin(err))
        chosen.add((int(DR[pick]), int(DA[pick])))
    return sorted(chosen)


def build_grid(qd, n_r, n_theta, directions=None, max_dring=None):
    """Polar metric graph with ``n_r`` rings of ``n_theta`` nodes and a center node.

    ``directions`` is the number of evenly spaced target directions the edge
    stencil should resolve at each node (default grows like ``sqrt(n_r)``);
    the 8-neighborhood is always included.
    """
    if n_r < 8 or n_theta < 16:
        raise ConstructionError("resolution too coarse: need n_r >= 8 and n_theta >= 16")
    n_dirs = default_directions(n_r) if directions is None else int(directions)
    if max_dring is None:
        max_dring = max(1, n_dirs // 4)
    dr = qd.R / n_r
    dtheta = 2 * np.pi / n_theta
    k_all = np.arange(n_theta)
    rows, cols, wts = [], [], []

    # center <-> ring 1
    ring1 = 1 + k_all
    w_center = segment_phi_lengths(qd, np.zeros(n_theta, dtype=complex), dr * np.exp(1j * k_all * dtheta))
    rows.append(np.zeros(n_theta, dtype=np.int64))
    cols.append(ring1)
    wts.append(w_center)

    symmetric = qd.is_monomial
    max_gap = 0.0
    for i in range(1, n_r + 1):
        offs = np.array(_ring_offsets(i, n_r, n_theta, dr, n_dirs, max_dring), dtype=np.int64)
        if 2 < i <= n_r - max_dring:
            vec = (i + offs[:, 0]) * np.exp(1j * offs[:, 1] * dtheta) - i
            ang = np.sort(np.mod(np.angle(vec), 2 * np.pi))
            max_gap = max(max_gap, float(np.max(np.diff(np.append(ang, ang[0] + 2 * np.pi)))))
        if symmetric:
            # |phi| depends on |z| only: one weight per offset, shared by the whole ring.
            a = np.full(len(offs), i * dr, dtype=complex)
            b = (i + offs[:, 0]) * dr * np.exp(1j * offs[:, 1] * dtheta)
            w = np.tile(segment_phi_lengths(qd, a, b), n_theta)
        else:
            a = (i * dr * np.exp(1j * k_all * dtheta))[:, None]
            b = (i + offs[:, 0])[None, :] * dr * np.exp(1j * (k_all[:, None] + offs[None, :, 1]) * dtheta)
            a, b = np.broadcast_arrays(a, b)
            w = segment_phi_lengths(qd, a.ravel(), b.ravel())
        src = 1 + (i - 1) * n_theta + np.repeat(k_all, len(offs))
        dst = 1 + (i + np.tile(offs[:, 0], n_theta) - 1) * n_theta + \
            (np.repeat(k_all, len(offs)) + np.tile(offs[:, 1], n_theta)) % n_theta
        rows.append(src)
        cols.append(dst)
        wts.append(w)

    u = np.concatenate(rows)
    v = np.concatenate(cols)
    w = np.concatenate(wts)
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    n_nodes = 1 + n_r * n_theta
    key = lo * n_nodes + hi
    key, first = np.unique(key, return_index=True)
    lo, hi, w = lo[first], hi[first], w[first]
    adj = sparse.coo_matrix((np.concatenate((w, w)),
                             (np.concatenate((lo, hi)).astype(np.int32), np.concatenate((hi, lo)).astype(np.int32))),
                            shape=(n_nodes, n_nodes)).tocsr()
    return MetricGraph(qd, n_r, n_theta, n_dirs, adj, max_gap)


def distances_from(g, source):
    """Graph distances from one node to every node (label-setting, scipy)."""
    return csgraph.dijkstra(g.adjacency, directed=False, indices=int(source))


def _trace_back(g, dist, source, target):
    # Deterministic predecessor choice: smallest node index among tight edges.
    adj = g.adjacency
    path = [target]
    node = target
    while node != source:
        start, stop = adj.indptr[node], adj.indptr[node + 1]
        nbrs = adj.indices[start:stop]
        wts = adj.data[start:stop]
        slack = dist[nbrs] + wts - dist[node]
        tight = (slack <= 1e-12 * max(dist[node], 1e-300)) & (dist[nbrs] < dist[node])
        node = int(nbrs[tight].min())
        path.append(node)
    return path[::-1]


def shortest_path(g, z1, z2):
    """Shortest graph path between the nodes nearest to ``z1`` and ``z2``.

    Returns ``(length, node_path)``.  Distances are symmetric: queries run
    from the smaller node index so swapping endpoints gives the same number.
    """
    s, t = g.snap(z1), g.snap(z2)
    if s == t:
        return 0.0, [s]
    lo, hi = min(s, t), max(s, t)
    dist = distances_from(g, lo)
    path = _trace_back(g, dist, lo, hi)
    if s != lo:
        path = path[::-1]
    return float(dist[hi]), path


def heap_dijkstra(g, source):
    """Reference label-setting Dijkstra with ties popped by node index (small graphs)."""
    adj = g.adjacency
    dist = np.full(g.n_nodes, np.inf)
    dist[source] = 0.0
    done = np.zeros(g.n_nodes, dtype=bool)
    heap = [(0.0, int(source))]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for k in range(adj.indptr[u], adj.indptr[u + 1]):
            v = int(adj.indices[k])
            nd = d + adj.data[k]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def batch_distances(g, z1s, z2s):
    """Oracle lengths for many pairs, sharing one Dijkstra run per source.

    For monomial differentials the graph is invariant under rotation by one
    angular step, so every source is rotated onto angle index 0 and only one
    run per distinct source ring is needed.
    """
    src = np.array([g.snap(z) for z in z1s])
    dst = np.array([g.snap(z) for z in z2s])
    out = np.empty(len(src))
    if g.qd.is_monomial:
        ring_s = np.where(src == 0, 0, (src - 1) // g.n_theta + 1)
        k_s = np.where(src == 0, 0, (src - 1) % g.n_theta)
        ring_t = np.where(dst == 0, 0, (dst - 1) // g.n_theta + 1)
        k_t = np.where(dst == 0, 0, (dst - 1) % g.n_theta)
        rotated = np.where(dst == 0, 0, 1 + (ring_t - 1) * g.n_theta + (k_t - k_s) % g.n_theta)
        for ring in np.unique(ring_s):
            sel = ring_s == ring
            dist = distances_from(g, g.node_index(int(ring), 0))
            out[sel] = dist[rotated[sel]]
    else:
        for node in np.unique(src):
            sel = src == node
            dist = distances_from(g, node)
            out[sel] = dist[dst[sel]]
    return out


def convergence_study(qd, z1, z2, resolutions):
    """Oracle length against the analytic geodesic length over refining grids.

    Returns one row per resolution with keys ``n_r``, ``n_theta``, ``oracle``,
    ``analytic`` and ``rel_error`` (the last two are ``None`` for
    non-monomial differentials).  The analytic length is taken between the
    snapped grid nodes so only the metrication error is measured.
    """
    from .geodesic import connect

    res = [tuple(map(int, r)) for r in resolutions]
    if len(res) < 3:
        raise ConstructionError("a convergence study needs at least three resolutions")
    if any(b[0] <= a[0] or b[1] <= a[1] for a, b in zip(res, res[1:])):
        raise ConstructionError("resolutions must be strictly increasing")
    rows = []
    for n_r, n_theta in res:
        g = build_grid(qd, n_r, n_theta)
        length, _ = shortest_path(g, z1, z2)
        row = {"n_r": n_r, "n_theta": n_theta, "oracle": length, "bound": g.discretization_bound,
               "analytic": None, "rel_error": None}
        if qd.is_monomial:
            a = g.node_position(g.snap(z1))
            b = g.node_position(g.snap(z2))
            exact = connect(qd, a, b).length
            row["analytic"] = exact
            row["rel_error"] = abs(length - exact) / exact if exact > 0 else 0.0
        rows.append(row)
    return rows


def errors_nonincreasing(rows, noise=0.10, floor=1e-12):
    """True when each relative error is at most ``(1 + noise)`` times the previous one."""
    errs = [r["rel_error"] for r in rows]
    if any(e is None for e in errs):
        return True
    return all(b <= (1 + noise) * a + floor for a, b in zip(errs, errs[1:]))


def study_to_csv(rows):
    lines = ["n_r,n_theta,oracle,analytic,rel_error,bound"]
    for r in rows:
        cells = [r["n_r"], r["n_theta"], r["oracle"], r["analytic"], r["rel_error"], r["bound"]]
        lines.append(",".join("" if c is None else repr(c) for c in cells))
    return "\n".join(lines) + "\n"
