"""Pseudo-spectral laboratory for incompressible MHD perturbed around Landau jets.

Modules
-------
landau
    Closed-form Landau solutions, the beta(A) relation and periodic backgrounds.
specfield
    Periodic grids, transforms, Leray projection, norms, Hardy ratios, initial data.
weaklp
    Exact weak-L^p norms of piecewise-constant functions and weak Young/Holder checks.
linop
    Linearised operators, their adjoints and forms, linear evolution and decay fits.
mhdsim
    The nonlinear perturbed system, energy audits and Duhamel bounds.
ratecalc
    Exponent bookkeeping for the decay-rate bootstrap.
suites, cli
    Verification suites and the ``landau-mhd`` command line.
"""
__version__ = "0.1.0"

from .errors import (BlowUpError, ConfigurationError, ContractError, DomainError,
                     InsufficientRangeError, SingularPointError)

__all__ = ["BlowUpError", "ConfigurationError", "ContractError", "DomainError",
           "InsufficientRangeError", "SingularPointError", "__version__"]
