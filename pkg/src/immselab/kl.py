"""KL divergence of block-Gaussian pairs and related eigenvalue bounds."""

from dataclasses import dataclass

import numpy as np

from .core import check_cov
from .eigen import psd_inv_sqrt, psd_sqrt, sym_eigenvalues
from .errors import DegeneratePairError, DomainError

__all__ = [
    "BlockGaussianPair",
    "kl_gaussian_direct",
    "kl_block_independent",
    "mi_gaussian_pair",
    "coupling_eigenvalues",
    "eigenvalue_product_bounds",
    "product_eigenvalues",
    "mmse_eigen_bound_check",
]

# eigenvalues of the coupling matrix this close to one mean a singular pair
_DEGENERATE_GAP = 1e-12


@dataclass(frozen=True)
class BlockGaussianPair:
    """Zero-mean jointly Gaussian (y1, y2) with Cov(y1)=A, Cov(y2)=C, E[y2 y1^T]=B."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = check_cov(self.A, "A")
        C = check_cov(self.C, "C")
        B = np.asarray(self.B, dtype=float)
        if A.shape != C.shape or B.shape != A.shape:
            raise DomainError(f"block shapes differ: A{A.shape}, B{B.shape}, C{C.shape}")
        if not np.all(np.isfinite(B)):
            raise DomainError("B has non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def assembled(self) -> np.ndarray:
        """The joint covariance [[A, B^T], [B, C]]."""
        return np.block([[self.A, self.B.T], [self.B, self.C]])

    def product_of_marginals(self) -> np.ndarray:
        """Block-diagonal covariance diag(A, C)."""
        z = np.zeros_like(self.A)
        return np.block([[self.A, z], [z, self.C]])


def kl_gaussian_direct(sigma0, sigma1) -> float:
    """D(N(0, sigma0) || N(0, sigma1)) in nats, from the textbook formula."""
    s0 = np.asarray(sigma0, dtype=float)
    s1 = np.asarray(sigma1, dtype=float)
    if s0.shape != s1.shape or s0.ndim != 2 or s0.shape[0] != s0.shape[1]:
        raise DomainError(f"covariances must be square and of equal shape, got {s0.shape} and {s1.shape}")
    sign1, ld1 = np.linalg.slogdet(s1)
    sign0, ld0 = np.linalg.slogdet(s0)
    if sign1 <= 0:
        raise DomainError("sigma1 is singular or indefinite")
    if sign0 <= 0:
        raise DomainError("sigma0 has non-positive determinant")
    k = s0.shape[0]
    tr = float(np.trace(np.linalg.solve(s1, s0)))
    return 0.5 * (tr - k + ld1 - ld0)


def coupling_eigenvalues(pair: BlockGaussianPair) -> np.ndarray:
    """Eigenvalues of C^-1 B A^-1 B^T, descending.

    Computed through the symmetric similar matrix C^-1/2 B A^-1 B^T C^-1/2.
    """
    c_is = psd_inv_sqrt(pair.C)
    K = c_is @ pair.B @ np.linalg.solve(pair.A, pair.B.T) @ c_is
    return sym_eigenvalues(K)


def kl_block_independent(pair: BlockGaussianPair) -> float:
    """D(N(0, [[A,B^T],[B,C]]) || N(0, diag(A, C))) = -1/2 sum log(1 - lambda_i).

    Raises DegeneratePairError when some lambda_i is within 1e-12 of one (or
    above), i.e. the joint covariance is not positive definite.
    """
    lam = coupling_eigenvalues(pair)
    if lam[0] >= 1.0 - _DEGENERATE_GAP:
        raise DegeneratePairError(
            f"assembled covariance not PD: coupling eigenvalue {lam[0]:.15g} >= 1"
        )
    # tiny negative values are round-off of a PSD matrix
    lam = np.clip(lam, 0.0, None)
    # + 0.0 turns the -0.0 of independent blocks into 0.0
    return -0.5 * float(np.sum(np.log1p(-lam))) + 0.0


def mi_gaussian_pair(pair: BlockGaussianPair) -> float:
    """I(y1; y2) of the jointly Gaussian pair (nats)."""
    return kl_block_independent(pair)


def product_eigenvalues(M1, M2) -> np.ndarray:
    """Eigenvalues of M1 @ M2 for PSD factors, via M2^1/2 M1 M2^1/2."""
    r = psd_sqrt(M2)
    return sym_eigenvalues(r @ np.asarray(M1, dtype=float) @ r)


def eigenvalue_product_bounds(M1, M2, t: int):
    """Lower/upper bounds on the t-th largest eigenvalue (1-based) of M1 @ M2.

    ``lower = max_{i+j=t+n} l_i(M1) l_j(M2)`` and
    ``upper = min_{i+j=t+1} l_i(M1) l_j(M2)``, eigenvalues sorted descending.
    """
    M1 = check_cov(M1, "M1")
    M2 = check_cov(M2, "M2")
    if M1.shape != M2.shape:
        raise DomainError(f"dimension mismatch: {M1.shape} vs {M2.shape}")
    n = M1.shape[0]
    if not 1 <= t <= n:
        raise DomainError(f"t must be in 1..{n}, got {t}")
    l1 = np.clip(sym_eigenvalues(M1), 0.0, None)
    l2 = np.clip(sym_eigenvalues(M2), 0.0, None)
    lower = max(l1[i - 1] * l2[t + n - i - 1] for i in range(t, n + 1))
    upper = min(l1[i - 1] * l2[t - i] for i in range(1, t + 1))
    return float(lower), float(upper)


def mmse_eigen_bound_check(E, cov_x, tol: float = 0.0):
    """Whether max eig(E) <= max eig(cov_x) + tol.

    Returns ``(ok, margin)`` with ``margin = max eig(cov_x) - max eig(E)``.
    """
    E = np.asarray(E, dtype=float)
    cov_x = np.asarray(cov_x, dtype=float)
    if E.shape != cov_x.shape:
        raise DomainError(f"dimension mismatch: {E.shape} vs {cov_x.shape}")
    margin = float(sym_eigenvalues(cov_x)[0] - sym_eigenvalues(E)[0])
    return margin >= -tol, margin
