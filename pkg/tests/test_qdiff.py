import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phigeo.errors import ConstructionError, DomainError, SingularPointError, UnsupportedFormError
from phigeo.qdiff import QuadraticDifferential, developed_angle, monomial, segment_phi_lengths


def test_evaluate_examples():
    assert monomial(2)(1) == 1
    assert monomial(1)(1j) == 1j
    assert monomial(3, a=2j, R=3.0)(2) == 16j


def test_evaluate_higher_terms():
    qd = QuadraticDifferential(1.0, 1, ((2, 0.1),))
    z = 0.3 + 0.4j
    assert qd(z) == pytest.approx(z + 0.1 * z ** 2, abs=1e-15)


def test_outside_chart():
    with pytest.raises(DomainError):
        monomial(2)(1.5)


@pytest.mark.parametrize("n,expected", [(1, 3), (2, 4), (0, 2)])
def test_cone_angle(n, expected):
    assert monomial(n).cone_angle() == expected * math.pi


def test_metric_density():
    assert monomial(0).metric_density(0.7 + 0.2j) == 1.0
    assert monomial(2).metric_density(0.5 * np.exp(0.3j)) == pytest.approx(0.5, abs=1e-15)
    for n in range(1, 6):
        assert monomial(n).metric_density(0) == 0


def test_density_vanishes_only_at_zero():
    qd = QuadraticDifferential(1.0, 3, ((4, 0.2j),))
    theta = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    for r in np.geomspace(1e-3, 1.0, 12):
        assert np.all(qd.metric_density(r * np.exp(1j * theta)) > 0)


def test_natural_parameter_examples():
    assert monomial(0).natural_parameter(0.3 + 0.2j) == pytest.approx(0.3 + 0.2j)
    z = 0.4 + 0.3j
    assert monomial(2).natural_parameter(z) == pytest.approx(z ** 2 / 2, abs=1e-15)
    assert monomial(1).natural_parameter(1) == pytest.approx(2 / 3, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_natural_parameter_derivative(n):
    qd = monomial(n, a=np.exp(0.7j))
    h = 1e-6
    for z in (0.5 + 0.1j, -0.2 + 0.6j, 0.3 - 0.5j):
        dw = (qd.natural_parameter(z + h) - qd.natural_parameter(z - h)) / (2 * h)
        assert abs(dw) == pytest.approx(qd.metric_density(z), rel=1e-8)


def test_natural_parameter_rejects_nonmonomial():
    qd = QuadraticDifferential(1.0, 2, ((3, 0.1),))
    with pytest.raises(UnsupportedFormError):
        qd.natural_parameter(0.5)


def test_phase_examples():
    assert monomial(0).phase(0.5, 1) == 0
    assert monomial(2).phase(1j, 1) == pytest.approx(math.pi)
    assert monomial(1).phase(1, np.exp(1j * math.pi / 4)) == pytest.approx(math.pi / 2)
    with pytest.raises(SingularPointError):
        monomial(2).phase(0, 1)


def test_construction_errors():
    with pytest.raises(ConstructionError):
        QuadraticDifferential(0, 2)
    with pytest.raises(ConstructionError):
        QuadraticDifferential(1, -1)
    with pytest.raises(ConstructionError):
        QuadraticDifferential(1, 2, ((2, 1.0),))
    # z + 2 z^2 vanishes at z = -1/2 inside the unit chart
    with pytest.raises(ConstructionError):
        QuadraticDifferential(1, 1, ((2, 2.0),))


def test_json_round_trip():
    qd = QuadraticDifferential(0.3 - 1.7j, 2, ((3, 0.1 + 0.05j), (5, -0.02)), 0.8)
    back = QuadraticDifferential.from_json(qd.to_json())
    assert back == qd
    assert back.to_dict() == qd.to_dict()


def test_parse():
    qd = QuadraticDifferential.parse("z^2")
    assert (qd.a, qd.n, qd.terms) == (1, 2, ())
    qd = QuadraticDifferential.parse("2j*z^3")
    assert (qd.a, qd.n) == (2j, 3)
    qd = QuadraticDifferential.parse("z + 0.1*z^2")
    assert qd.n == 1 and qd.terms == ((2, 0.1),)
    with pytest.raises(ConstructionError):
        QuadraticDifferential.parse("q^2")


def test_segment_lengths_closed_form():
    assert segment_phi_lengths(monomial(0), 0, 1)[0] == pytest.approx(1.0, abs=1e-14)
    assert segment_phi_lengths(monomial(2), 0, 1)[0] == pytest.approx(0.5, abs=1e-14)
    assert segment_phi_lengths(monomial(1), 0, 1)[0] == pytest.approx(2 / 3, abs=1e-14)
    # segment passing through the zero splits into two radii
    assert segment_phi_lengths(monomial(2), -0.5, 0.5)[0] == pytest.approx(0.25, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.floats(0.05, 0.9), st.floats(0.05, 0.9),
       st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_pushforward_is_flat(n, r1, r2, t1, t2):
    # Along a smooth path avoiding the branch cut, phi-length equals |dw| length.
    qd = monomial(n)
    c = np.linspace(0, 1, 4001)
    t1, t2 = 0.9 * t1, 0.9 * t2
    pts = (r1 + (r2 - r1) * c) * np.exp(1j * (t1 + (t2 - t1) * c + 0.1 * np.sin(math.pi * c)))
    phi_len = float(np.sum(segment_phi_lengths(qd, pts[:-1], pts[1:])))
    w = qd.natural_parameter(pts)
    mids = qd.natural_parameter(0.5 * (pts[1:] + pts[:-1]))
    # Simpson-style chord correction of the w-image length
    flat_len = float(np.sum(np.abs(mids - w[:-1]) + np.abs(w[1:] - mids)))
    assert flat_len == pytest.approx(phi_len, rel=1e-6)


@pytest.mark.parametrize("n", range(0, 6))
def test_developed_angle(n):
    assert developed_angle(monomial(n), 0.6) == pytest.approx((n + 2) * math.pi, abs=1e-6)


def test_developed_angle_with_higher_terms():
    qd = QuadraticDifferential(1.0, 2, ((3, 0.2 + 0.1j),))
    assert developed_angle(qd, 0.3) == pytest.approx(4 * math.pi, abs=1e-6)
