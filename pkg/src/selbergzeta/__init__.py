"""Selberg zeta functions for PSL(2,Z) and Gamma_0(m).

Two independent evaluations of Z_m(s) are provided: Fredholm determinants of
the vector-valued Mayer transfer operator (``transfer``) and truncated Euler
products over primitive hyperbolic classes (``geodesics``). ``newform``
combines levels with the divisor weights beta = mu * mu, and ``traceformula``
checks the Selberg trace formula for Gaussian test functions.
"""

from .errors import (ConvergenceError, DomainError, SelbergError)
from .transfer import zeta_transfer, locate_zeros
from .geodesics import euler_zeta, length_spectrum
from .newform import beta, newform_zeta

__version__ = "0.1.0"

__all__ = ["ConvergenceError", "DomainError", "SelbergError", "zeta_transfer", "locate_zeros",
           "euler_zeta", "length_spectrum", "beta", "newform_zeta", "__version__"]
