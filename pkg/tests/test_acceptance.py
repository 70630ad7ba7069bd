"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are also
collected in the "acceptance criteria" section of the terminal summary.
"""
import hashlib
import itertools
import json
import math
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from phigeo import cli
from phigeo.cmc import (DiskGrid, bonnet_forms, codazzi_residual, gauss_residual, hopf_differential,
                        observed_order, solve_gauss, spherical_metric, sup, verify_lemma3)
from phigeo.flatcone import MIN_SEPARATION_CELLS, batch_distances, build_grid
from phigeo.geodesic import RADIUS_PAIR, connect, liouville_invariants, trace_trajectory
from phigeo.qdiff import developed_angle, monomial
from phigeo.sector import detect_sectors, sample_foliation, sample_layout, winding_index
from phigeo.surface import ellipsoid, find_umbilics
from phigeo.word import (H, P, SectorWord, canonical_form, contract_at, equivalent, index, is_normalized,
                         realize, rotate, split_at, weight)

TWO_PI = 2 * math.pi
TESTS = Path(__file__).parent

ORACLE_SEED = 20240521
ORACLE_PAIRS = 1000
# first endpoints are drawn on this many random rings per grid (one Dijkstra run each)
ORACLE_SOURCE_RINGS = 16
ORACLE_GRIDS = (((256, 512), 0.03), ((512, 1024), 0.01))


def sha256_json(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def chart_angle(z1, z2):
    """Unsigned angle between two chart points, from the normalized dot product."""
    c = (z1.real * z2.real + z1.imag * z2.imag) / (abs(z1) * abs(z2))
    return math.acos(min(1.0, max(-1.0, c)))


# -- 1 ---------------------------------------------------------------------------------

def test_criterion_01_cone_angle(verdict):
    worst = 0.0
    for n in range(1, 6):
        qd = monomial(n)
        for r in (0.1, 0.5, 1.0):
            worst = max(worst, abs(developed_angle(qd, r) - (n + 2) * math.pi))
            # second route: unwrapped argument of the closed-form natural parameter
            theta = np.linspace(-math.pi, math.pi, 4001)
            w = qd.natural_parameter(r * np.exp(1j * theta))
            sweep = np.sum(np.diff(np.unwrap(np.angle(w))))
            worst = max(worst, abs(sweep - (n + 2) * math.pi))
    verdict(1, worst < 1e-6, f"developed cone angle error {worst:.2e} (n=1..5, tol 1e-6)")


# -- 2 ---------------------------------------------------------------------------------

def dichotomy_table(seed=ORACLE_SEED, pairs=ORACLE_PAIRS):
    """connect's decision against an independent chart-angle test on random pairs, n = 1..5."""
    rng = np.random.default_rng(seed)
    rows = []
    for n in range(1, 6):
        qd = monomial(n)
        z1 = np.sqrt(rng.random(pairs)) * np.exp(2j * np.pi * rng.random(pairs))
        z2 = np.sqrt(rng.random(pairs)) * np.exp(2j * np.pi * rng.random(pairs))
        for a, b in zip(z1, z2):
            path = connect(qd, a, b)
            rows.append((n, path.kind == RADIUS_PAIR, chart_angle(a, b) >= 2 * math.pi / (n + 2), path.tie))
    return rows


def oracle_agreement(seed=ORACLE_SEED, pairs=ORACLE_PAIRS):
    """Analytic lengths against graph distances on two grids, n = 1, 2, 3.

    Pairs are drawn until ``pairs`` of them are at least ``MIN_SEPARATION_CELLS``
    coarse-grid ring spacings apart.  Analytic lengths are taken between the
    snapped grid nodes of each grid.
    """
    rng = np.random.default_rng(seed)
    out = []
    for n in (1, 2, 3):
        qd = monomial(n)
        for (n_r, n_theta), limit in ORACLE_GRIDS:
            g = build_grid(qd, n_r, n_theta)
            floor = MIN_SEPARATION_CELLS / ORACLE_GRIDS[0][0][0]
            rings = rng.choice(np.arange(3, n_r + 1), ORACLE_SOURCE_RINGS, replace=False)
            a_all, b_all = [], []
            while len(a_all) < pairs:
                z1 = rng.choice(rings) * g.dr * np.exp(2j * np.pi * rng.random())
                z2 = math.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
                a = g.node_position(g.snap(z1))
                b = g.node_position(g.snap(z2))
                if abs(a - b) >= floor:
                    a_all.append(a)
                    b_all.append(b)
            a_all, b_all = np.array(a_all), np.array(b_all)
            oracle = batch_distances(g, a_all, b_all)
            exact = np.array([connect(qd, a, b).length for a, b in zip(a_all, b_all)])
            rel = oracle / exact - 1
            out.append({"n": n, "grid": [n_r, n_theta], "limit": limit, "bound": g.discretization_bound,
                        "pairs": len(a_all), "min_rel": float(rel.min()), "max_rel": float(rel.max()),
                        "oracle_sha": hashlib.sha256(oracle.tobytes()).hexdigest(),
                        "exact_sha": hashlib.sha256(exact.tobytes()).hexdigest()})
    return out


@pytest.fixture(scope="module")
def oracle_rows():
    return oracle_agreement()


def test_criterion_02_dichotomy_and_oracle(verdict, oracle_rows):
    rows = dichotomy_table()
    mismatches = sum(1 for _, kind, ref, tie in rows if kind != ref and not tie)
    # the decision flips exactly at chart angle 2 pi/(n+2): bisect it for each n
    flips = []
    for n in range(1, 6):
        lo, hi = 0.0, math.pi
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if connect(monomial(n), 0.7, 0.4 * np.exp(1j * mid)).kind == RADIUS_PAIR:
                hi = mid
            else:
                lo = mid
        flips.append(abs(hi - 2 * math.pi / (n + 2)))
        at = connect(monomial(n), 0.7, 0.4 * np.exp(2j * math.pi / (n + 2)))
        flips.append(0.0 if at.tie else 1.0)
    ok_oracle = all(r["min_rel"] >= -1e-12 and r["max_rel"] <= r["bound"] < r["limit"] and r["pairs"] >= 1000
                    for r in oracle_rows)
    worst = max(oracle_rows, key=lambda r: r["max_rel"] / r["limit"])
    per_n = len(rows) // 5
    verdict(2, mismatches == 0 and max(flips) < 1e-12 and ok_oracle,
            f"{per_n} pairs x n=1..5: {mismatches} decision mismatches, flip error {max(flips):.1e}; "
            f"oracle {worst['pairs']}+ pairs x n=1..3 worst {worst['max_rel']:.2%} "
            f"(bound {worst['bound']:.2%}, limit {worst['limit']:.0%} at {worst['grid'][0]}x{worst['grid'][1]})")


# -- 3 ---------------------------------------------------------------------------------

def test_criterion_03_liouville(verdict):
    qd = monomial(2, R=4.0)
    worst_const, least_var = 0.0, math.inf
    starts = [0.6 + 0.5j, 1.1 + 0.3j, -0.7 + 0.9j, 0.4 - 1.3j]
    for z0 in starts:
        # hyperbola family: horizontal leaves, u v constant
        for o in (1, -1):
            tr = trace_trajectory(qd, z0, 0.0, 1e-3, 1.0, orientation=o)
            inv = np.array([liouville_invariants(z) for z in tr.points])
            worst_const = max(worst_const, np.ptp(inv[:, 1]))
            least_var = min(least_var, np.ptp(inv[:, 0]))
            assert tr.arclen[-1] >= 1.0 - 1e-12
        # ray family: radial start, v/u constant
        theta = qd.phase(z0, z0 / abs(z0))
        tr = trace_trajectory(qd, z0, theta, 1e-3, 1.0, orientation=1)
        if tr.stop != "max_arclen":
            tr = trace_trajectory(qd, z0, theta, 1e-3, 1.0, orientation=-1)
        inv = np.array([liouville_invariants(z) for z in tr.points])
        worst_const = max(worst_const, np.ptp(inv[:, 0]))
        least_var = min(least_var, np.ptp(inv[:, 1]))
        assert tr.arclen[-1] >= 1.0 - 1e-12
    verdict(3, worst_const < 1e-6 and least_var > 1e-3,
            f"constant invariant spread {worst_const:.2e} (tol 1e-6); other invariant varies >= {least_var:.2f}")


# -- 4 ---------------------------------------------------------------------------------

def random_word(rng):
    items = [H if rng.random() < 0.5 else (P, float(rng.uniform(0.01, 3.0))) for _ in range(rng.integers(1, 11))]
    return SectorWord.from_runs(items, int(rng.integers(1, 7)))


def random_operation(rng, w):
    m = len(w.symbols)
    i = int(rng.integers(m))
    op = rng.integers(3)
    if op == 0:
        return rotate(w, int(rng.integers(-m, m + 1)))
    if op == 1 and m > 1 and w.symbols[i] == P and w.symbols[(i + 1) % m] == P:
        return contract_at(w, i)
    if op == 2 and w.symbols[i] == P:
        return split_at(w, i, float(rng.uniform(0.05, 0.95)))
    return w


EQUIVALENCE_TABLE = [
    ("h p(1)", "p(1) h", 1, True),
    ("hh", "h p(1)", 1, False),
    ("h p(0.5) p(0.7) h", "h p(1.2) h", 1, True),
    ("h p(1) p(2) p(3)", "p(6) h", 2, True),
    ("p(1) p(2)", "p(3)", 1, True),
    ("p(1) p(2)", "p(3.5)", 1, False),
    ("hhhh", "hhhh", 2, True),
    ("hhhh", "hhh", 2, False),
    ("h p(1) h p(2)", "p(2) h p(1) h", 1, True),
    ("h p(1) h p(2)", "h p(3) h", 1, False),
    ("h p(1) h p(2)", "h p(1.5) h p(1.5)", 1, False),
    ("p(1) h h p(2)", "h h p(3)", 2, True),
    ("p(1) h h p(2)", "h p(1) h p(2)", 2, False),
    ("h h p(1) h", "h h h p(1)", 3, True),
    ("h h p(1) h", "h p(1) h h", 3, True),
    ("h p(1) h h p(1)", "h h p(1) h p(1)", 3, True),
    ("h p(1) h h p(1)", "h p(1) p(1) h h", 3, False),
    ("h p(0.25) p(0.25) p(0.5) h", "p(1) h h", 4, True),
    ("p(2)", "h", 1, False),
    ("h p(1) h p(1) h p(1)", "p(1) h p(1) h p(1) h", 2, True),
]


def test_criterion_04_word_calculus(verdict):
    rng = np.random.default_rng(404)
    idempotent = all(canonical_form(canonical_form(w)) == canonical_form(w)
                     for w in (random_word(rng) for _ in range(2000)))
    drift, class_ok = 0.0, True
    for _ in range(10_000):
        w0 = random_word(rng)
        w = w0
        for _ in range(int(rng.integers(1, 9))):
            w = random_operation(rng, w)
        drift = max(drift, abs(weight(w) - weight(w0)))
        class_ok &= canonical_form(w).symbols == canonical_form(w0).symbols and equivalent(w, w0)
    table = [equivalent(SectorWord.parse(a, n), SectorWord.parse(b, n)) == want
             for a, b, n, want in EQUIVALENCE_TABLE]
    verdict(4, idempotent and class_ok and drift < 1e-12 and all(table) and len(table) == 20,
            f"idempotent={idempotent}, 10^4 op sequences weight drift {drift:.1e} (tol 1e-12), "
            f"equivalence table {sum(table)}/{len(table)}")


# -- 5 ---------------------------------------------------------------------------------

def realizable_words():
    """Normalized words over small cyclic patterns at every admissible order n <= 5, plus p."""
    rng = np.random.default_rng(505)
    yield SectorWord((P,), 1, (TWO_PI,)), 1
    for length in range(1, 7):
        for pattern in itertools.product((H, P), repeat=length):
            k = pattern.count(P)
            if k == 0:
                continue
            nh = length - k
            for n in range(1, 6):
                rem = 2 - Fraction(2 * nh, n + 2)
                if rem <= 0:
                    continue
                raw = rng.uniform(0.2, 1.0, k)
                alphas = float(rem) * math.pi * raw / raw.sum()
                w = SectorWord(pattern, n, tuple(alphas))
                # adjacent p's merge in the layout; the class is what is realized
                yield w, n


def test_criterion_05_index_consistency(verdict):
    mono_bad = []
    for n in range(1, 6):
        for k in range(9):
            t = k * math.pi / 8
            fld = sample_foliation(monomial(n), t, (0.25, 1.0))
            wd = detect_sectors(fld)
            if not (index(wd) == winding_index(fld) == Fraction(-n, 2)):
                mono_bad.append((n, t))
    layout_bad, count = [], 0
    for w, n in realizable_words():
        assert is_normalized(w)
        fld = sample_layout(realize(w, n, start=0.3))
        wd = detect_sectors(fld)
        count += 1
        if not (index(wd) == winding_index(fld) == index(w) and equivalent(wd, w)):
            layout_bad.append(str(w))
    verdict(5, not mono_bad and not layout_bad,
            f"z^n slope fields (n=1..5, 9 slopes): {45 - len(mono_bad)}/45 equal -n/2; "
            f"realized layouts: {count - len(layout_bad)}/{count} agree (incl. p -> +1)")


# -- 6 ---------------------------------------------------------------------------------

def test_criterion_06_index_bound(verdict):
    checked, bad = 0, 0
    for nh in range(0, 13):
        for k in range(0, 4):
            if nh + k == 0:
                continue
            # every placement of k p-runs into the nh gaps between h's
            gaps = [()] if k == 0 else itertools.combinations_with_replacement(range(max(nh, 1)), k)
            for placement in gaps:
                items = []
                for g in range(max(nh, 1)):
                    if nh:
                        items.append(H)
                    items += [(P, 1.0)] * placement.count(g)
                for n in range(1, 2 * nh + 3):
                    rem = 2 - Fraction(2 * nh, n + 2)
                    if (k == 0 and rem != 0) or (k > 0 and rem <= 0):
                        continue
                    scale = float(rem) * math.pi / k if k else 0.0
                    w = SectorWord.from_runs([it if it == H else (P, scale) for it in items], n)
                    if not is_normalized(w):
                        bad += 1
                        continue
                    i = index(w)
                    checked += 1
                    # the class of w is p exactly when every symbol contracts into one p-run
                    bad += not (i <= 1 and (i == 1) == (H not in w.symbols))
    verdict(6, bad == 0 and checked > 1000,
            f"{checked} normalized words with <h> <= 12: index <= 1, equality only for p ({bad} violations)")


# -- 7 ---------------------------------------------------------------------------------

def test_criterion_07_rotated_hopf(verdict):
    grid = DiskGrid(1.0, 128)
    metric = spherical_metric(1.0, grid)
    worst = 0.0
    for n in range(1, 6):
        qd = monomial(n, R=2.0)
        for k in range(8):
            t = k * math.pi / 8
            f = bonnet_forms(metric, qd, t)
            worst = max(worst, float(np.max(np.abs(hopf_differential(f.l, f.m, f.nn)
                                                   - np.exp(-2j * t) * grid.z ** n))))
            worst = max(worst, float(np.max(np.abs(f.mean_curvature - metric.H))))
    verdict(7, worst < 1e-12, f"128^2 grid, 8 slopes, n=1..5: max identity error {worst:.2e} (tol 1e-12)")


# -- 8 ---------------------------------------------------------------------------------

def test_criterion_08_gauss_codazzi(verdict):
    orders = []
    for phi in (lambda z: z ** 3, lambda z: np.exp(2 * z), lambda z: z ** 5):
        errs, hs = [], []
        for N in (33, 65, 129):
            g = DiskGrid(0.5, N)
            errs.append(sup(codazzi_residual(phi(g.z), 1.0, g)))
            hs.append(g.h)
        orders.append(observed_order(errs, hs))
    # discrete Gauss residual of the exact round metric
    errs, hs = [], []
    for N in (33, 65, 129):
        m = spherical_metric(1.0, DiskGrid(0.5, N))
        errs.append(sup(gauss_residual(m, None)))
        hs.append(m.grid.h)
    gauss_order = observed_order(errs, hs)
    residuals = []
    for qd in (None, monomial(1, R=0.5)):
        m = solve_gauss(qd, 1.0, boundary=0.0, radius=0.5)
        residuals.append(sup(gauss_residual(m, qd)))
        phi = np.zeros(m.grid.z.shape) if qd is None else qd.evaluate(m.grid.z, check=False)
        residuals.append(sup(codazzi_residual(phi, m.H, m.grid)))
    verdict(8, min(orders) >= 1.8 and gauss_order >= 1.8 and max(residuals) < 1e-8,
            f"Codazzi orders {', '.join(f'{o:.2f}' for o in orders)}, Gauss order {gauss_order:.2f} "
            f"(min 1.8); solver residuals phi=0 / phi=z: {residuals[0]:.1e} / {residuals[2]:.1e} (tol 1e-8)")


# -- 9 ---------------------------------------------------------------------------------

def test_criterion_09_curvature_lines_follow_geodesics(verdict):
    dev, haus = 0.0, 0.0
    for n in (1, 2, 3):
        qd = monomial(n, R=0.5)
        metric = solve_gauss(qd, 1.0, radius=0.5, N=65)
        for k in range(9):
            rep = verify_lemma3(metric, qd, k * math.pi / 8, (0.1, 0.45), step=1e-3, length=0.2)
            dev = max(dev, rep["max_direction_deviation"])
            haus = max(haus, rep["max_hausdorff"])
    verdict(9, dev < 1e-10 and haus < 1e-4,
            f"n=1..3, t=0..pi step pi/8: direction deviation {dev:.1e} (tol 1e-10), "
            f"Hausdorff {haus:.1e} at step 1e-3 (tol 1e-4)")


# -- 10 --------------------------------------------------------------------------------

CORPUS_ARGS = ["caratheodory", "--corpus", "--size", "25", "--seed", "20240607", "--resolution", "60"]


def corpus_artifacts(root):
    return {name: hashlib.sha256((root / name).read_bytes()).hexdigest()
            for name in ("corpus.json", "caratheodory.json")}


@pytest.fixture(scope="module")
def corpus_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    code = cli.main(["--out", str(root), *CORPUS_ARGS])
    return code, root


def test_criterion_10_umbilic_audit(verdict, corpus_run):
    code, root = corpus_run
    rep = json.loads((root / "caratheodory.json").read_text())
    members_ok = all(r["passed"] and r["count"] >= 2 and Fraction(r["max_index"]) <= 1 and r["index_sum"] == "2"
                     for r in rep["reports"])
    tri = find_umbilics(ellipsoid(3, 2, 1))
    spheroid = find_umbilics(ellipsoid(1, 1, 2))
    tri_ok = len(tri) == 4 and all(u.index == Fraction(1, 2) for u in tri)
    sph_ok = len(spheroid) == 2 and all(u.index == 1 for u in spheroid)
    verdict(10, code == 0 and rep["members"] == 25 and members_ok and tri_ok and sph_ok,
            f"{rep['members']} convex members all pass={members_ok} (min count {rep['min_count']}, "
            f"max index {rep['max_index']}, sums 2); ellipsoid(3,2,1) {len(tri)} x 1/2; "
            f"spheroid {len(spheroid)} x 1")


# -- 11 --------------------------------------------------------------------------------

def test_criterion_11_determinism(verdict, oracle_rows, corpus_run, tmp_path):
    script = ("import sys, json; sys.path.insert(0, %r); import test_acceptance as t; "
              "print(t.sha256_json(t.oracle_agreement())); print(t.sha256_json(t.dichotomy_table()))"
              % str(TESTS))
    proc = subprocess.run([sys.executable, "-c", script], capture_output=True, text=True, check=True)
    oracle_hash, table_hash = proc.stdout.split()
    same_oracle = oracle_hash == sha256_json(oracle_rows) and table_hash == sha256_json(dichotomy_table())
    again = tmp_path / "corpus"
    proc = subprocess.run([sys.executable, "-m", "phigeo.cli", "--out", str(again), *CORPUS_ARGS],
                          capture_output=True, text=True)
    same_corpus = proc.returncode == 0 and corpus_artifacts(again) == corpus_artifacts(corpus_run[1])
    verdict(11, same_oracle and same_corpus,
            f"fresh-process reruns: criterion-2 artifacts identical={same_oracle}, "
            f"criterion-10 corpus.json/caratheodory.json identical={same_corpus}")
