"""Exact-arithmetic Drinfeld modules over F_q[theta].

Scalars live in a Laurent-series model of the completion at infinity with
tracked absolute precision; on top of that the package builds A-lattices,
Drinfeld modules of arbitrary rank, their exponential functions, Anderson
generating functions, dual zeta vectors, and certified residual checks for
the identities relating them.
"""

from .scalars import CInfApprox, FqField, GroundConfig, PrecisionError
from .rings import APoly, DifferentialForm, TateSeries, TwistedSeries

__all__ = [
    "APoly",
    "CInfApprox",
    "DifferentialForm",
    "FqField",
    "GroundConfig",
    "PrecisionError",
    "TateSeries",
    "TwistedSeries",
]

__version__ = "0.1.0"
