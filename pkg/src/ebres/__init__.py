"""Resonances and scattering data for ``d^4 + 2 d p d + q`` on the half-line."""
from .coeffs import (BeamCoeffs, CoeffPair, CompactCoeff, kappa_integral,
                     liouville_data, liouville_transform, square_case_q)

__version__ = "0.1.0"

__all__ = [
    "BeamCoeffs", "CoeffPair", "CompactCoeff", "kappa_integral",
    "liouville_data", "liouville_transform", "square_case_q", "__version__",
]
