"""Numerics for the I-MMSE relationship over Gaussian interference channels."""

from .analytics import (
    GoodCodeProfile,
    WeakSnrParams,
    d_mi_gaussian_interference,
    fisher_composite_noise,
    mi_gaussian_interference,
    mi_good_code,
    mmse_gaussian,
    mmse_good_code,
    mmse_scaling_identity,
    weak_branch_rhs,
    weak_snr_lower_bound,
)
from .core import ChannelParams, GammaPoint, IncrementalDecomposition, cross_correlation_B, d_gamma_prime, gamma_prime, incremental_decomposition
from .eigen import sym_eigenvalues, sym_eigh
from .errors import ConvergenceError, DegeneratePairError, DomainError, IntervalError, LabError, ResourceError
from .estimators import (
    Codebook,
    Constellation,
    McEstimate,
    conditional_mean,
    generate_codebook,
    mi_codebook_mc,
    mi_scalar_quadrature,
    mmse_codebook_mc,
    mmse_matrix_mc,
    mmse_scalar_quadrature,
    truncate,
    verify_immse,
)
from .kl import BlockGaussianPair, eigenvalue_product_bounds, kl_block_independent, kl_gaussian_direct, mi_gaussian_pair
from .regions import CascadeParams, MacInterferenceParams, RatePoint

__version__ = "0.1.0"
