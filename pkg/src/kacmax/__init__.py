"""Maximum modulus of complex Kac polynomial roots.

Root statistics of random polynomials with i.i.d. complex Gaussian
coefficients, the truncated-CUE ensemble used to study their left large
deviations, Schur-function series, Bergman-kernel correlation functions and a
reproducible command line runner.
"""

from .correlations import (
    CovarianceTriple,
    NystromGrid,
    covariance_triple,
    fredholm_bergman,
    gap_probability_series,
    nystrom_eigenvalues,
    rho_finite,
    rho_limit,
)
from .deviations import (
    FValue,
    LdpEstimate,
    direct_mc_prob,
    divisor_sigma,
    eval_F,
    frak_S,
    ldp_estimator,
    limit_cdf,
    mc_moment,
    moment_formula,
    quadrature_J,
)
from .ensembles import (
    EnsembleSample,
    KernelG,
    eta,
    faddeev_leverrier,
    g_eval,
    haar_unitary,
    sample_dpp,
    sample_truncation,
)
from .errors import (
    ConvergenceError,
    CrossValidationError,
    DimensionError,
    DomainError,
    InvalidInputError,
    KacmaxError,
    SamplerError,
    SizeError,
)
from .linalg import determinant, elementary_symmetric, permanent, vandermonde_abs2
from .polyroots import Polynomial, RootSet, empirical_cdf, find_roots, max_modulus, sample_kac
from .streams import RngStream
from .symfunc import KostkaTable, Partition, cauchy_series_J, kostka, partitions, torus_schur_norm

__version__ = "0.1.0"
