"""Solvers and verification tools for form-type k-Hessian equations.

The operator acts on the auxiliary spectrum mu_i = sum_{j != i} lambda_j of
the complex Hessian; admissible functions keep mu in the Garding cone
Gamma_k.  The package provides the symmetric-polynomial layer, the spectral
operator algebra, radial singular solutions, subsolution constructions, a
radial annulus solver with its shrinking-puncture limit, a four-dimensional
masked-grid solver for complex dimension two, and diagnostics for the
blow-up exponents.
"""

from .errors import (
    ConeViolationError,
    ConstructionFailureError,
    GridConstructionError,
    InadmissiblePointError,
    InvalidArgumentError,
    NumericalError,
    SolverFailureError,
    UnsupportedShapeError,
)
from .hessian_operator import (
    LOG,
    ROOT,
    HermitianMatrix,
    OperatorParams,
    SpectralDecomposition,
    concavity_probe,
    ellipticity_ratio,
    f_gradient,
    f_value,
    lambda_from_mu,
    mu_from_lambda,
    mu_of_matrix,
    trace_identity_residual,
)
from .symfun import (
    elementary_symmetric,
    identity_suite,
    in_gamma_k,
    partial_symmetric,
    sample_gamma_k,
)

__version__ = "0.1.0"
