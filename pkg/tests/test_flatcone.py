import math

import numpy as np
import pytest

from phigeo.errors import ConstructionError
from phigeo.flatcone import (MIN_SEPARATION_CELLS, batch_distances, build_grid, convergence_study,
                             default_directions, distances_from, errors_nonincreasing, heap_dijkstra,
                             shortest_path, study_to_csv)
from phigeo.geodesic import connect
from phigeo.qdiff import QuadraticDifferential, monomial, segment_phi_lengths


@pytest.fixture(scope="module")
def z2_grid():
    return build_grid(monomial(2), 64, 128)


def test_flat_weights_are_euclidean():
    g = build_grid(monomial(0), 16, 32)
    u, v, w = g.edges()
    chord = np.abs(g.node_position(u) - g.node_position(v))
    assert np.max(np.abs(w - chord)) < 1e-12


def test_weights_match_segment_lengths():
    qd = QuadraticDifferential(1.0, 1, ((2, 0.3j),))
    g = build_grid(qd, 12, 24)
    u, v, w = g.edges()
    ref = segment_phi_lengths(qd, g.node_position(u), g.node_position(v))
    assert np.max(np.abs(w - ref)) < 1e-10
    assert np.all(w >= 0)


def test_angular_edge_weight_z2(z2_grid):
    g = z2_grid
    for ring in (10, 40, 64):
        a, b = g.node_index(ring, 0), g.node_index(ring, 1)
        r = ring * g.dr
        assert g.adjacency[a, b] == pytest.approx(r * 2 * math.pi * r / g.n_theta, rel=0.01)


def test_center_edge_weight_z():
    g = build_grid(monomial(1), 32, 64)
    assert g.adjacency[0, 1] == pytest.approx((2 / 3) * (1 / 32) ** 1.5, rel=1e-12)


def test_connected(z2_grid):
    assert np.all(np.isfinite(distances_from(z2_grid, 0)))


def test_resolution_errors():
    with pytest.raises(ConstructionError):
        build_grid(monomial(2), 4, 64)
    with pytest.raises(ConstructionError):
        build_grid(monomial(2), 16, 8)


def test_default_directions_grow():
    counts = [default_directions(n) for n in (16, 32, 64, 128, 256, 512)]
    assert counts == sorted(counts) and counts[0] >= 8


def test_flat_distances():
    g = build_grid(monomial(0), 64, 128)
    assert shortest_path(g, 0, 0.6 + 0.8j)[0] == pytest.approx(1.0, rel=0.02)
    L, _ = shortest_path(g, 0.5, 0.5j)
    assert math.sqrt(0.5) <= L <= math.sqrt(0.5) * (1 + g.discretization_bound)


def test_antipodal_z2_via_center(z2_grid):
    L, path = shortest_path(z2_grid, 1, -1)
    assert L == pytest.approx(1.0, rel=0.03)
    assert 0 in path


def test_radius_z2(z2_grid):
    assert shortest_path(z2_grid, 0, 1)[0] == pytest.approx(0.5, rel=0.02)


def test_path_length_matches_edges(z2_grid):
    L, path = shortest_path(z2_grid, 0.8 * np.exp(0.3j), 0.6 * np.exp(1.2j))
    total = sum(z2_grid.adjacency[a, b] for a, b in zip(path, path[1:]))
    assert total == pytest.approx(L, rel=1e-12)


def test_symmetry_and_triangle(z2_grid):
    rng = np.random.default_rng(7)
    pts = 0.9 * np.sqrt(rng.random(6)) * np.exp(2j * np.pi * rng.random(6))
    d = np.array([[shortest_path(z2_grid, a, b)[0] for b in pts] for a in pts])
    assert np.array_equal(d, d.T)
    for i in range(6):
        for j in range(6):
            for k in range(6):
                assert d[i, k] <= d[i, j] + d[j, k] + 1e-15


def test_heap_reference_agrees():
    g = build_grid(QuadraticDifferential(1.0, 2, ((3, 0.2),)), 12, 24)
    for src in (0, 5, 100):
        assert np.allclose(heap_dijkstra(g, src), distances_from(g, src), rtol=0, atol=1e-14)


def test_batch_matches_single_queries(z2_grid):
    rng = np.random.default_rng(3)
    a = 0.9 * np.exp(2j * np.pi * rng.random(5))
    b = 0.7 * np.exp(2j * np.pi * rng.random(5))
    got = batch_distances(z2_grid, a, b)
    ref = [shortest_path(z2_grid, x, y)[0] for x, y in zip(a, b)]
    assert np.allclose(got, ref, rtol=1e-12, atol=0)


def test_oracle_brackets_analytic(z2_grid):
    g = z2_grid
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(40):
        z1, z2 = [g.node_position(g.snap(0.95 * math.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())))
                  for _ in range(2)]
        if abs(z1 - z2) < MIN_SEPARATION_CELLS * g.dr:
            continue
        exact = connect(g.qd, z1, z2).length
        oracle = shortest_path(g, z1, z2)[0]
        assert exact * (1 - 1e-12) <= oracle <= exact * (1 + g.discretization_bound)
        checked += 1
    assert checked > 5


def test_convergence_flat():
    rows = convergence_study(monomial(0), 0.1 + 0.05j, 0.7 + 0.55j, [(16, 32), (32, 64), (64, 128)])
    assert errors_nonincreasing(rows)
    assert rows[-1]["rel_error"] < rows[-1]["bound"]
    assert study_to_csv(rows).splitlines()[0] == "n_r,n_theta,oracle,analytic,rel_error,bound"


@pytest.mark.parametrize("n,z1,z2", [(2, 1, -1), (1, 0, 1)])
def test_convergence_monomials(n, z1, z2):
    rows = convergence_study(monomial(n), z1, z2, [(32, 64), (64, 128), (128, 256)])
    assert errors_nonincreasing(rows)
    assert rows[-1]["rel_error"] < 0.01


def test_convergence_nonmonomial_has_no_error_column():
    qd = QuadraticDifferential(1.0, 1, ((2, 0.1),))
    rows = convergence_study(qd, 0.5, -0.5, [(16, 32), (24, 48), (32, 64)])
    assert all(r["rel_error"] is None and r["analytic"] is None for r in rows)


def test_convergence_preconditions():
    with pytest.raises(ConstructionError):
        convergence_study(monomial(2), 1, -1, [(16, 32), (32, 64)])
    with pytest.raises(ConstructionError):
        convergence_study(monomial(2), 1, -1, [(16, 32), (32, 64), (32, 128)])


def test_edge_list_export(tmp_path):
    g = build_grid(monomial(1), 8, 16)
    path = tmp_path / "edges.txt"
    g.write_edge_list(path)
    lines = path.read_text().splitlines()
    assert len(lines) == g.adjacency.nnz // 2
    a, b, w = lines[0].split()
    assert int(a) < int(b) and float(w) > 0
