import numpy as np
import pytest
from numpy.polynomial import polynomial as P

from ebres import BeamCoeffs, CoeffPair, CompactCoeff, square_case_q


def bump_p(c=30.0):
    """``c x^2 (1 - x)^2`` on ``[0, 1]``; ``p`` and ``p'`` vanish at both ends."""
    return CompactCoeff.from_monomial([0.0, 1.0], [c * P.polypow([0.0, 1.0, -1.0], 2)])


def bump_beam(ca=50.0, cb=-30.0):
    """Beam perturbations ``c x^4 (1 - x)^4``, flat to third order at both ends."""
    b = P.polymul(P.polypow([0.0, 1.0], 4), P.polypow([1.0, -1.0], 4))
    return BeamCoeffs(CompactCoeff.from_monomial([0, 1], [ca * b]), CompactCoeff.from_monomial([0, 1], [cb * b]))


@pytest.fixture(scope="session")
def step():
    """``p = 2`` on ``[0, 1]``, ``q = 0``."""
    return CoeffPair(CompactCoeff.constant(2.0, 1.0), CompactCoeff.zero(1.0))


@pytest.fixture(scope="session")
def bump():
    """Squared case built from :func:`bump_p`."""
    p = bump_p()
    return CoeffPair(p, square_case_q(p))


@pytest.fixture(scope="session")
def step_resonances(step):
    """All zeros of the step determinant in ``[-31, 31]^2``."""
    from ebres.rootfind import find_resonances

    return find_resonances(step, (-31.0, 31.0, -31.0, 31.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
