import warnings

import numpy as np
import pytest

from ebres.errors import IncompleteZeroSet, InputError, SingularAtResonance
from ebres.fredholm import log_det
from ebres.oracle import jost_d
from ebres.rootfind import ResonanceSet, find_resonances
from ebres.traces import (hadamard_fit, phase_derivative_fd, phase_derivative_rhs,
                          trace_lhs, trace_rhs, trace_solve)


@pytest.fixture(scope="module")
def step_had(step, step_resonances):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return hadamard_fit(step, step_resonances, 30.0)


@pytest.fixture(scope="module")
def bump_had(bump):
    zs = find_resonances(bump, (-6.0, 6.0, -6.0, 6.0))
    return hadamard_fit(bump, zs, 5.5)


def test_bump_hadamard_against_oracle(bump, bump_had):
    # D = d(ik) d(k) with d(0) != 0: no pole, and beta = (1 + i) d'(0) / d(0)
    p, h = bump.p, 1e-4
    d0 = jost_d(p, h * 1e-3).d
    dd = (jost_d(p, h).d - jost_d(p, -h).d) / (2 * h)
    assert bump_had.m == 0
    assert bump_had.beta == pytest.approx((1 + 1j) * dd / d0, rel=1e-6)
    assert bump_had.beta_reference is None


def test_step_has_simple_pole(step_had):
    assert step_had.m == 1 and abs(step_had.m_slope - 1) < 0.1


def test_reconstruction(step, step_had):
    assert step_had.reconstruction_residual < step_had.tail_budget
    k = 4 + 1j
    assert np.exp(step_had.log_D(k, 30.0) - log_det(step, k, 64)[0]) == pytest.approx(1.0, abs=0.05)


def test_beta_mismatch_is_a_warning(step, step_resonances):
    with pytest.warns(UserWarning, match="beta"):
        had = hadamard_fit(step, step_resonances, 15.0)
    assert had.beta_reference == pytest.approx(-1 + 1j)


def test_incomplete_zero_set(step, step_resonances):
    dropped = ResonanceSet(step_resonances.zeros[1:], (), step_resonances.region)
    with pytest.raises(IncompleteZeroSet):
        hadamard_fit(step, dropped, 30.0)


def test_lhs_two_ways(step):
    a, b = trace_lhs(step, 3 + 3j), trace_solve(step, 3 + 3j)
    assert a.value == pytest.approx(b.value, rel=1e-8)


def test_lhs_needs_first_quadrant(step):
    with pytest.raises(InputError):
        trace_lhs(step, -1 + 1j)


def test_lhs_singular_at_zero(step, step_resonances):
    z = step_resonances.in_quadrant("K1").zeros[0].k
    with pytest.raises(SingularAtResonance):
        trace_lhs(step, z)


def test_rhs_reflection(step_had):
    k = 1 + 2j
    a = trace_rhs(step_had.reflected(), 1j * np.conj(k)).value
    assert a == pytest.approx(np.conj(trace_rhs(step_had, k).value), rel=1e-12)


def test_rhs_converges_with_radius(step, step_had):
    k = 2 * np.exp(0.25j * np.pi)
    lhs = trace_lhs(step, k).value
    # the truncation error oscillates with the radius but stays under the tail bound
    for r in (10.0, 15.0, 20.0, 30.0):
        rhs = trace_rhs(step_had, k, r)
        assert abs(rhs.value - lhs) < rhs.tail_bound
    assert abs(trace_rhs(step_had, k, 30.0).value - lhs) < abs(trace_rhs(step_had, k, 15.0).value - lhs)


def test_radius_beyond_fit(step_had):
    with pytest.raises(InputError):
        trace_rhs(step_had, 1 + 1j, 40.0)


@pytest.mark.parametrize("k", [2.0, 3.0, 4.0])
def test_phase_derivative(step, step_had, k):
    fd = phase_derivative_fd(step, k)
    rhs = phase_derivative_rhs(step_had, k)
    assert abs(rhs.value - fd) < 0.1 * abs(fd)


def test_phase_derivative_needs_positive_k(step):
    with pytest.raises(InputError):
        phase_derivative_fd(step, -1.0)
