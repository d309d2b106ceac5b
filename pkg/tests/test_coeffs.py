import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import polynomial as P
from scipy.integrate import quad

from conftest import bump_beam, bump_p
from ebres import BeamCoeffs, CoeffPair, CompactCoeff, kappa_integral, liouville_data, square_case_q
from ebres.coeffs import MAX_MONOMIAL_DEGREE
from ebres.errors import (BoundaryConstraintViolated, DiscontinuityError, InputError,
                          InsufficientSmoothness, NonPositiveCoefficient)

finite = st.floats(-5, 5, allow_nan=False)


@st.composite
def piecewise(draw):
    n = draw(st.integers(1, 3))
    cuts = sorted(set(draw(st.lists(st.floats(0.05, 1.95), min_size=n - 1, max_size=n - 1))))
    bp = [0.0] + [c for c in cuts if c > 0.01] + [2.0]
    if np.any(np.diff(bp) < 0.02):
        bp = [0.0, 2.0]
    coeffs = [draw(st.lists(finite, min_size=1, max_size=5)) for _ in bp[:-1]]
    jumps = bp[1:-1]
    return CompactCoeff.from_monomial(bp, coeffs, jumps=jumps)


@settings(max_examples=40, deadline=None)
@given(piecewise())
def test_json_roundtrip(c):
    back = CompactCoeff.from_json(c.to_json())
    x = np.linspace(0, 2, 97)
    assert np.allclose(back(x), c(x), rtol=1e-12, atol=1e-12)
    assert back.breakpoints == c.breakpoints
    cheb = CompactCoeff.from_dict(json.loads(json.dumps(c.to_dict(basis="chebyshev"))))
    assert np.allclose(cheb(x), c(x), rtol=1e-13, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(piecewise())
def test_integral_matches_quadrature(c):
    ref = sum(quad(lambda x: float(c(x)), a, b)[0] for a, b in zip(c.breakpoints[:-1], c.breakpoints[1:]))
    assert c.integral() == pytest.approx(ref, abs=1e-10)


def test_values_outside_support_are_zero():
    c = CompactCoeff.constant(3.0, 1.5)
    assert float(c(-0.1)) == 0.0 and float(c(1.6)) == 0.0
    assert c.left_limit(1.5) == 3.0


def test_right_piece_used_at_breakpoint():
    c = CompactCoeff.from_monomial([0, 1, 2], [[1.0], [2.0]], jumps=[1.0])
    assert float(c(1.0)) == 2.0
    assert c.left_limit(1.0) == 1.0


def test_undeclared_jump_rejected():
    with pytest.raises(DiscontinuityError):
        CompactCoeff.from_monomial([0, 1, 2], [[1.0], [2.0]])


def test_monomial_degree_cap():
    with pytest.raises(InputError):
        CompactCoeff.from_monomial([0, 1], [np.ones(MAX_MONOMIAL_DEGREE + 2)])


@pytest.mark.parametrize("bad", [
    {"pieces": []},
    {"support_end": -1.0, "pieces": []},
    {"support_end": 1.0, "pieces": [{"x0": 0.0, "x1": 2.0, "coeffs": [1.0]}]},
    {"support_end": 1.0, "basis": "legendre", "pieces": [{"x0": 0.0, "x1": 1.0, "coeffs": [1.0]}]},
])
def test_malformed_specification(bad):
    with pytest.raises(InputError):
        CompactCoeff.from_dict(bad)


def test_gaps_are_zero_filled():
    c = CompactCoeff.from_dict({"support_end": 1.0, "pieces": [{"x0": 0.25, "x1": 0.5, "coeffs": [0.0]}]})
    assert c.support_end == 1.0 and c.is_zero


def test_derivative_and_product():
    p = bump_p(1.0)
    x = np.linspace(0, 1, 11)
    assert np.allclose(p.derivative()(x), P.polyval(x, P.polyder(P.polypow([0, 1, -1], 2))), atol=1e-13)
    assert np.allclose((p * p)(x), p(x) ** 2, atol=1e-14)


def test_square_case_q():
    p = bump_p(2.0)
    q = square_case_q(p)
    x = np.linspace(0, 1, 17)
    assert np.allclose(q(x), p.derivative(2)(x) + p(x) ** 2, atol=1e-12)


def test_square_case_needs_vanishing_ends():
    with pytest.raises((InputError, InsufficientSmoothness)):
        square_case_q(CompactCoeff.constant(1.0, 1.0))
    with pytest.raises(InputError):
        square_case_q(CompactCoeff.from_monomial([0, 1], [[0.0, 0.0, 1.0]]))


def test_pair_scalars(step):
    assert step.gamma == 1.0 and step.p0 == 2.0 and step.p_plus == 2.0 and step.q0 == 0.0
    assert CoeffPair.free(2.0).is_free
    assert CoeffPair.from_dict(json.loads(json.dumps(step.to_dict()))).p0 == 2.0


def test_identity_beam():
    beam = BeamCoeffs.identity()
    res = liouville_data(beam)
    assert res.gamma == pytest.approx(1.0, abs=1e-14)
    assert res.pair.is_free
    assert kappa_integral(beam) == 0.0


def test_beam_length_and_kappa():
    beam = bump_beam()
    res = liouville_data(beam)
    ref = quad(lambda x: (beam.b(x) / beam.a(x)) ** 0.25, 0, 1, epsabs=1e-14)[0]
    assert res.gamma == pytest.approx(ref, rel=1e-12)
    assert kappa_integral(beam) > 1e-4
    # x(t(x)) = x
    x = np.linspace(0, 1, 7)
    assert np.allclose([res.x_of_t(res.t_of_x(v)) for v in x], x, atol=1e-11)


def test_beam_roundtrip():
    beam = bump_beam()
    back = BeamCoeffs.from_dict(json.loads(json.dumps(beam.to_dict())))
    assert liouville_data(back).gamma == pytest.approx(liouville_data(beam).gamma, rel=1e-15)


def test_beam_rejects_nonpositive():
    b = P.polymul(P.polypow([0.0, 1.0], 4), P.polypow([1.0, -1.0], 4))
    with pytest.raises(NonPositiveCoefficient):
        BeamCoeffs(CompactCoeff.from_monomial([0, 1], [-1000.0 * b]), CompactCoeff.zero(1.0))


def test_beam_boundary_constraint():
    # a - 1 = x (1 - x)^4 has a'(0) = 1 and no matching b
    a = P.polymul([0.0, 1.0], P.polypow([1.0, -1.0], 4))
    with pytest.raises(BoundaryConstraintViolated):
        BeamCoeffs(CompactCoeff.from_monomial([0, 1], [0.1 * a]), CompactCoeff.zero(1.0))


def test_beam_needs_smooth_end():
    with pytest.raises(InsufficientSmoothness):
        BeamCoeffs(CompactCoeff.from_monomial([0, 1], [[0.0, 0.0, 0.1]]), CompactCoeff.zero(1.0))
