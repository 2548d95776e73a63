"""Channel parametrization and the incremental-channel decomposition.

The interfered-with output is

    y(gamma) = sqrt(gamma * a * snr2) z + sqrt(gamma * snr1) x + n

with unit-power x and z and standard Gaussian n. Rescaling by
1/sqrt(1 + gamma*snr1) turns it into an additive channel for z at SNR
``gamma_prime``. All information quantities are in nats.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IntervalError

__all__ = [
    "ChannelParams",
    "GammaPoint",
    "IncrementalDecomposition",
    "gamma_prime",
    "d_gamma_prime",
    "incremental_decomposition",
    "cross_correlation_B",
    "check_cov",
]

# slack applied at the closed right end of the admissible interval
_EDGE_RTOL = 1e-12


def _check_gamma(gamma):
    if not np.isfinite(gamma) or gamma < 0:
        raise DomainError(f"gamma must be a finite non-negative number, got {gamma!r}")


@dataclass(frozen=True)
class ChannelParams:
    """SNR/gain triple of the interference model.

    Parameters
    ----------
    snr1 : float
        SNR of the interfered-with (good-code) transmission x.
    snr2 : float
        SNR of the interfering transmission z.
    a : float
        Interference gain.
    """

    snr1: float
    snr2: float
    a: float

    def __post_init__(self):
        for name in ("snr1", "snr2", "a"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")

    @property
    def interference_snr(self) -> float:
        """a * snr2, the SNR at which z reaches the interfered-with receiver."""
        return self.a * self.snr2

    @property
    def alpha(self) -> float:
        """snr1 / (a * snr2); undefined without an interference path."""
        if self.interference_snr <= 0:
            raise DomainError("alpha = snr1/(a*snr2) is undefined when a*snr2 = 0")
        return self.snr1 / self.interference_snr

    @property
    def admissible_snr(self) -> float:
        """Right end of the interval [0, a*snr2/(1+snr1)] on which the
        incremental construction is valid."""
        return self.interference_snr / (1.0 + self.snr1)


@dataclass(frozen=True)
class GammaPoint:
    gamma: float
    gamma_prime: float

    @classmethod
    def at(cls, params: ChannelParams, gamma: float) -> "GammaPoint":
        return cls(gamma, gamma_prime(params, gamma))


def gamma_prime(params: ChannelParams, gamma: float) -> float:
    """Effective SNR of z after normalizing the output by 1/sqrt(1 + gamma*snr1).

    Strictly increasing in ``gamma`` when a*snr2 > 0, with supremum
    a*snr2/snr1. Identically zero when there is no interference path.
    """
    _check_gamma(gamma)
    return gamma * params.interference_snr / (1.0 + gamma * params.snr1)


def d_gamma_prime(params: ChannelParams, gamma: float) -> float:
    """Derivative of :func:`gamma_prime` with respect to ``gamma``."""
    _check_gamma(gamma)
    return params.interference_snr / (1.0 + gamma * params.snr1) ** 2


@dataclass(frozen=True)
class IncrementalDecomposition:
    """Noise split of one SNR increment ``snr -> snr + delta``.

    ``sigma1_sq`` is the noise variance of the better observation, and
    ``sigma1_sq + sigma2_sq`` that of the worse one (both after removing the
    sqrt(alpha) x component). ``var_nhat`` is the variance of the composite
    Gaussian noise left in the increment, evaluated term by term.
    """

    snr: float
    delta: float
    alpha: float
    sigma1_sq: float
    sigma2_sq: float
    var_nhat: float = field(init=False)

    def __post_init__(self):
        var = self.delta * self.sigma1_sq + (self.snr**2 / self.delta) * self.sigma2_sq
        object.__setattr__(self, "var_nhat", var)

    @property
    def noise_ratio(self) -> float:
        """snr / delta, the weight of the second noise in the second output."""
        return self.snr / self.delta


def incremental_decomposition(params: ChannelParams, snr: float, delta: float) -> IncrementalDecomposition:
    """Split the SNR increment ``snr -> snr + delta`` into a Markov cascade.

    Raises
    ------
    DomainError
        If a*snr2 = 0, or ``snr``/``delta`` are not positive.
    IntervalError
        If ``snr + delta`` exceeds a*snr2/(1+snr1).
    """
    alpha = params.alpha
    if not (snr > 0 and delta > 0):
        raise DomainError(f"snr and delta must be positive, got snr={snr!r}, delta={delta!r}")
    hi = params.admissible_snr
    if snr + delta > hi * (1.0 + _EDGE_RTOL):
        raise IntervalError(f"snr + delta = {snr + delta:.12g} is not admissible", (0.0, hi))
    sigma1_sq = 1.0 / (snr + delta) - alpha
    # equals (1/snr - alpha) - sigma1_sq without the cancellation
    sigma2_sq = delta / (snr * (snr + delta))
    return IncrementalDecomposition(snr, delta, alpha, sigma1_sq, sigma2_sq)


def check_cov(S, name="matrix"):
    """Return ``S`` as a float array after checking it is a covariance matrix.

    Symmetry is required to 1e-12 (relative to the largest entry) and every
    eigenvalue must be >= -1e-10.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] == 0:
        raise DomainError(f"{name} must be a non-empty square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise DomainError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.T)) > 1e-12 * scale:
        raise DomainError(f"{name} is not symmetric")
    if np.linalg.eigvalsh(S).min() < -1e-10 * scale:
        raise DomainError(f"{name} is not positive semi-definite")
    return S


def cross_correlation_B(cov_x, alpha: float):
    """Cross-covariance alpha * (Cov_x - I) of the two incremental observations.

    The observations are ``y1 = sqrt(alpha) x + s1 n1 + s2 n2`` and
    ``y2 = sqrt(alpha) x + s1 n1 - (snr/delta) s2 n2``; the noise terms cancel
    exactly, so the result vanishes iff the codeword covariance is identity.
    """
    cov_x = np.asarray(cov_x, dtype=float)
    if cov_x.ndim != 2 or cov_x.shape[0] != cov_x.shape[1]:
        raise DomainError(f"cov_x must be square, got shape {cov_x.shape}")
    B = alpha * (cov_x - np.eye(cov_x.shape[0]))
    return 0.5 * (B + B.T)
