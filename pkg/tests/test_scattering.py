import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebres import CoeffPair
from ebres.errors import InputError
from ebres.fredholm import phi_vectors
from ebres.oracle import jost_d
from ebres.scattering import (A0, B_of_k, Omega, S_matrix, identity_residual_Omega, identity_residual_S,
                              psi_functionals, scattering_eval, scattering_phase)


@pytest.mark.parametrize("k", [0.5, 1.7, 4.0, 9.0])
def test_S_against_oracle(bump, k):
    # squared case: S(k) = d(-k) / d(k)
    ref = jost_d(bump.p, -k).d / jost_d(bump.p, k).d
    assert S_matrix(bump, k).S == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("k", [1 + 1j, 2.5 + 0.5j])
def test_det_Omega_against_oracle(bump, k):
    p = bump.p
    ref = (jost_d(p, -1j * k).d * jost_d(p, -k).d) / (jost_d(p, 1j * k).d * jost_d(p, k).d)
    assert Omega(bump, k).detOmega == pytest.approx(ref, rel=1e-8)


def test_free_case():
    free = CoeffPair.free()
    ev = scattering_eval(free, 2.0)
    assert ev.S == 1.0 and np.allclose(ev.Omega, np.eye(2))


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 25.0))
def test_unitarity(k):
    from conftest import bump_p
    from ebres import CompactCoeff

    pair = CoeffPair(bump_p(), CompactCoeff.constant(-2.0, 1.0))
    assert abs(abs(S_matrix(pair, k).S) - 1) < 1e-9


@pytest.mark.parametrize("k", range(1, 9))
def test_identity_S(step, k):
    assert identity_residual_S(step, k) < 1e-9


@pytest.mark.parametrize("k", [2 * np.exp(0.3j), 5 * np.exp(1.0j), 3 + 3j, 8j * np.exp(-0.05j)])
def test_identity_Omega(step, k):
    assert identity_residual_Omega(step, k) < 1e-9


@pytest.mark.parametrize("k", [2.0, 1 + 0.5j])
def test_A0_from_discrete_functionals(bump, k):
    u, v = psi_functionals(bump, k, 64)
    assert u @ v == pytest.approx(A0(bump, k), rel=1e-10)


def test_B_from_discrete_functionals(bump):
    k = 1 + 0.5j
    u, _ = phi_vectors(bump, 1j * k, 64, "gauss")
    _, v = phi_vectors(bump, k, 64, "gauss")
    assert u @ v == pytest.approx(B_of_k(bump, k), rel=1e-10)


def test_phase_is_continuous(step):
    tr = scattering_phase(step, np.linspace(0.5, 20, 60))
    assert np.all(np.abs(np.diff(tr.phi)) < 0.25)
    assert np.allclose(np.exp(-2j * np.pi * tr.phi), tr.S, atol=1e-12)
    assert -0.5 < tr.phi[-1] <= 0.5


def test_phase_grid_validation(step):
    with pytest.raises(InputError):
        scattering_phase(step, [2.0, 1.0])
    with pytest.raises(InputError):
        scattering_phase(step, [-1.0, 1.0])
