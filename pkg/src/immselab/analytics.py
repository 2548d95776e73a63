"""Closed-form mutual information, MMSE and Fisher information.

Everything here is exact for Gaussian inputs or for the idealized profile of
a capacity-achieving ("good") code, whose MI follows the Gaussian curve up to
the SNR of reliable decoding and then saturates. Derivatives are returned as
dI/dgamma itself (not 2 dI/dgamma), so that the I-MMSE identity reads
``d_mi == 0.5 * mmse``.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import ChannelParams, d_gamma_prime, gamma_prime, incremental_decomposition
from .errors import DomainError

__all__ = [
    "GoodCodeProfile",
    "WeakSnrParams",
    "regime",
    "regime_boundaries",
    "mi_gaussian_interference",
    "d_mi_gaussian_interference",
    "mmse_gaussian",
    "weak_branch_rhs",
    "joint_mmse_gaussian_interference",
    "conditional_mi_given_x",
    "conditional_mi_given_z",
    "mi_x_branch",
    "mi_good_code",
    "mmse_good_code",
    "fisher_composite_noise",
    "weak_snr_lower_bound",
    "mmse_scaling_identity",
    "gaussian_mi_from_cov",
    "gaussian_conditional_mi",
    "incremental_mi_gaussian",
    "weak_snr_mi_gaussian",
]

MmseFn = Callable[[float], float]


def _check_gamma(gamma):
    if not np.isfinite(gamma) or gamma < 0:
        raise DomainError(f"gamma must be a finite non-negative number, got {gamma!r}")


@dataclass(frozen=True)
class GoodCodeProfile:
    """MI/MMSE profile of a capacity-achieving code in the limit n -> inf.

    The MMSE follows the Gaussian curve ``power/(1 + gamma*power)`` below
    ``snr_design`` and is zero from ``snr_design`` on (right-continuous).
    """

    snr_design: float
    power: float = 1.0

    def __post_init__(self):
        if not self.snr_design > 0 or not self.power > 0:
            raise DomainError("snr_design and power must be positive")


@dataclass(frozen=True)
class WeakSnrParams:
    """The two shrunken increments used by the weak-SNR expansion.

    ``delta_prime = delta*alpha/(1 + delta*alpha)`` and
    ``delta_hat = delta/(1 + alpha*delta)``.
    """

    delta: float
    alpha: float
    delta_prime: float = field(init=False)
    delta_hat: float = field(init=False)

    def __post_init__(self):
        if not self.delta > 0 or not self.alpha > 0:
            raise DomainError("delta and alpha must be positive")
        da = self.delta * self.alpha
        object.__setattr__(self, "delta_prime", da / (1.0 + da))
        object.__setattr__(self, "delta_hat", self.delta / (1.0 + da))


# ---------------------------------------------------------------------------
# Gaussian interference: three regimes
# ---------------------------------------------------------------------------

def regime_boundaries(params: ChannelParams):
    """Return the (first, second) regime boundaries in gamma.

    The second boundary 1/(1 - a*snr2) is ``inf`` when a*snr2 >= 1: x is then
    never decoded before the combined signal, and the second regime extends
    to infinity.
    """
    s = params.interference_snr
    return 1.0, (1.0 / (1.0 - s) if s < 1.0 else np.inf)


def regime(params: ChannelParams, gamma: float, side: str = "right") -> int:
    """Regime index (1, 2 or 3) of ``gamma``.

    Boundaries belong to the regime on their right. ``side="left"`` selects
    the regime on the left of a boundary instead, to evaluate one-sided limits.
    """
    _check_gamma(gamma)
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    g1, g2 = regime_boundaries(params)
    if side == "right":
        if gamma < g1:
            return 1
        return 2 if gamma < g2 else 3
    if gamma <= g1:
        return 1
    return 2 if gamma <= g2 else 3


def mi_gaussian_interference(params: ChannelParams, gamma: float, side: str = "right") -> float:
    """Normalized I(z; y(gamma)) for i.i.d. Gaussian z and a good code x at snr1.

    Regime 1 treats x as Gaussian noise, regime 2 decodes z and x jointly,
    regime 3 has x decoded and removed.
    """
    r = regime(params, gamma, side)
    s, snr1 = params.interference_snr, params.snr1
    if r == 1:
        return 0.5 * np.log1p(gamma * s / (1.0 + gamma * snr1))
    if r == 2:
        return 0.5 * np.log((1.0 + gamma * (s + snr1)) / (1.0 + snr1))
    return 0.5 * np.log1p(gamma * s)


def d_mi_gaussian_interference(params: ChannelParams, gamma: float, side: str = "right") -> float:
    """dI/dgamma of :func:`mi_gaussian_interference`.

    At a regime boundary the right derivative is returned unless
    ``side="left"``.
    """
    r = regime(params, gamma, side)
    s, snr1 = params.interference_snr, params.snr1
    if r == 1:
        return 0.5 * mmse_gaussian(1.0, gamma_prime(params, gamma)) * d_gamma_prime(params, gamma)
    if r == 2:
        return 0.5 * (s + snr1) / (1.0 + gamma * (s + snr1))
    return 0.5 * s / (1.0 + gamma * s)


def joint_mmse_gaussian_interference(params: ChannelParams, gamma: float, side: str = "right") -> float:
    """MMSE of sqrt(a snr2) z + sqrt(snr1) x from y(gamma), for gamma >= 1.

    Gaussian z only: in regime 2 the sum behaves like a Gaussian signal of
    power a*snr2 + snr1, in regime 3 only z is left.
    """
    r = regime(params, gamma, side)
    if r == 1:
        raise DomainError("the joint-MMSE branch applies to gamma >= 1 only")
    s, snr1 = params.interference_snr, params.snr1
    if r == 2:
        return mmse_gaussian(s + snr1, gamma) if s + snr1 > 0 else 0.0
    return mmse_gaussian(s, gamma) if s > 0 else 0.0


def mmse_gaussian(power: float, gamma: float) -> float:
    """MMSE of a Gaussian input of variance ``power`` at SNR ``gamma``."""
    if not power > 0:
        raise DomainError(f"power must be positive, got {power!r}")
    return power / (1.0 + gamma * power)


def weak_branch_rhs(params: ChannelParams, gamma: float, mmse_z: MmseFn) -> float:
    """I-MMSE-like prediction of dI(z; y(gamma))/dgamma for gamma in [0, 1).

    Returns ``0.5 * mmse_z(gamma') * dgamma'/dgamma``, where ``mmse_z`` is the
    MMSE function of z over a plain AWGN channel.
    """
    _check_gamma(gamma)
    if gamma >= 1.0:
        raise DomainError(f"the weak branch holds for gamma in [0, 1), got {gamma!r}")
    return 0.5 * mmse_z(gamma_prime(params, gamma)) * d_gamma_prime(params, gamma)


def conditional_mi_given_x(params: ChannelParams, gamma: float) -> float:
    """Normalized I(z; y(gamma) | x) for unit-power Gaussian z, any n."""
    _check_gamma(gamma)
    return 0.5 * np.log1p(gamma * params.interference_snr)


def conditional_mi_given_z(params: ChannelParams, gamma: float) -> float:
    """Normalized I(x; y(gamma) | z) for a good code x designed at snr1."""
    _check_gamma(gamma)
    if params.snr1 == 0:
        return 0.0
    # the code reaches its design SNR at gamma = 1
    return mi_good_code(GoodCodeProfile(1.0, params.snr1), gamma)


def mi_x_branch(params: ChannelParams, gamma: float) -> float:
    """Normalized I(x; y(gamma)) for a good code x at snr1 and Gaussian z.

    x sees z as extra Gaussian noise, so its effective SNR is
    gamma*snr1/(1 + gamma*a*snr2) and it saturates once that reaches snr1.
    """
    _check_gamma(gamma)
    if params.snr1 == 0:
        return 0.0
    eff = gamma / (1.0 + gamma * params.interference_snr)
    return mi_good_code(GoodCodeProfile(1.0, params.snr1), eff)


# ---------------------------------------------------------------------------
# Good-code profile
# ---------------------------------------------------------------------------

def mi_good_code(profile: GoodCodeProfile, gamma: float) -> float:
    """0.5 * log(1 + min(gamma, snr_design) * power)."""
    _check_gamma(gamma)
    return 0.5 * np.log1p(min(gamma, profile.snr_design) * profile.power)


def mmse_good_code(profile: GoodCodeProfile, gamma: float) -> float:
    """Gaussian MMSE below ``snr_design``, zero from ``snr_design`` on."""
    _check_gamma(gamma)
    if gamma >= profile.snr_design:
        return 0.0
    return mmse_gaussian(profile.power, gamma)


def fisher_composite_noise(source, delta: float, alpha: float) -> float:
    """Fisher information of sqrt(delta*alpha) x + n_hat, var(n_hat) = 1 - delta*alpha.

    Parameters
    ----------
    source : float, GoodCodeProfile or callable
        A float is the power of a Gaussian x; a profile or a callable
        ``gamma -> mmse`` supplies the per-dimension MMSE function of x.
    delta, alpha : float
        Increment and SNR ratio; ``delta*alpha`` must be below one.

    Notes
    -----
    Scaling by 1/sqrt(1 - delta*alpha) gives an AWGN channel at
    g = delta*alpha/(1 - delta*alpha), and for that channel
    J = 1 - g * mmse(g). Undoing the scaling multiplies J by 1/(1 - delta*alpha).
    """
    da = delta * alpha
    if not (delta > 0 and alpha >= 0):
        raise DomainError("delta must be positive and alpha non-negative")
    if da >= 1.0:
        raise DomainError(f"delta*alpha must be < 1, got {da!r}")
    g = da / (1.0 - da)
    if isinstance(source, GoodCodeProfile):
        mmse = mmse_good_code(source, g)
    elif callable(source):
        mmse = source(g)
    else:
        mmse = mmse_gaussian(float(source), g)
    return (1.0 - g * mmse) / (1.0 - da)


def weak_snr_lower_bound(tr_cov: float, lambda_max: float, w: WeakSnrParams) -> float:
    """Small-delta lower bound on I(z; sqrt(delta) z + composite noise).

    ``(delta'/(2 alpha)) tr_cov - (delta'^2 / 2) lambda_max tr_cov``, with
    ``lambda_max`` the largest eigenvalue of the codeword covariance.
    """
    if tr_cov < 0 or lambda_max < 0:
        raise DomainError("tr_cov and lambda_max must be non-negative")
    dp = w.delta_prime
    return dp / (2.0 * w.alpha) * tr_cov - 0.5 * dp**2 * lambda_max * tr_cov


def mmse_scaling_identity(c: float, mmse_fn: MmseFn) -> MmseFn:
    """MMSE function of sqrt(c) * X given the MMSE function of X.

    ``mmse(sqrt(c) X; gamma) = c * mmse(X; c * gamma)``; a zero set
    ``[g0, inf)`` of ``mmse_fn`` becomes ``[g0 / c, inf)``.
    """
    if not c > 0:
        raise DomainError(f"scale must be positive, got {c!r}")

    def scaled(gamma):
        return c * mmse_fn(c * gamma)

    return scaled


# ---------------------------------------------------------------------------
# Joint-Gaussian closed forms used as independent checks
# ---------------------------------------------------------------------------

def gaussian_mi_from_cov(cov, ix, iy) -> float:
    """I(X; Y) of jointly Gaussian blocks selected by index lists ``ix``, ``iy``."""
    cov = np.asarray(cov, dtype=float)
    ix, iy = list(ix), list(iy)
    both = ix + iy
    _, ld_x = np.linalg.slogdet(cov[np.ix_(ix, ix)])
    _, ld_y = np.linalg.slogdet(cov[np.ix_(iy, iy)])
    _, ld_xy = np.linalg.slogdet(cov[np.ix_(both, both)])
    return 0.5 * (ld_x + ld_y - ld_xy)


def gaussian_conditional_mi(cov, ix, iy, iz) -> float:
    """I(X; Y | Z) of jointly Gaussian blocks, by log-determinants."""
    cov = np.asarray(cov, dtype=float)
    ix, iy, iz = list(ix), list(iy), list(iz)

    def ld(idx):
        return np.linalg.slogdet(cov[np.ix_(idx, idx)])[1]

    return 0.5 * (ld(ix + iz) + ld(iy + iz) - ld(iz) - ld(ix + iy + iz))


def incremental_mi_gaussian(params: ChannelParams, snr: float, delta: float, power_z: float = 1.0):
    """Both sides of the incremental identity for Gaussian z and Gaussian x.

    Returns ``(difference, conditional)``: the left side
    I(z; y_{snr+delta}) - I(z; y_snr) from the scalar AWGN formula, and the
    right side I(z; y_{snr+delta} | y_snr) from log-determinants of the
    covariance of (z, y_{snr+delta}, y_snr) assembled from the noise split.
    Values are per dimension.
    """
    dec = incremental_decomposition(params, snr, delta)
    difference = 0.5 * np.log((1.0 + (snr + delta) * power_z) / (1.0 + snr * power_z))
    a = dec.alpha
    v1 = power_z + a + dec.sigma1_sq
    v2 = v1 + dec.sigma2_sq
    cov = np.array(
        [
            [power_z, power_z, power_z],
            [power_z, v1, v1],
            [power_z, v1, v2],
        ]
    )
    conditional = gaussian_conditional_mi(cov, [0], [1], [2])
    return difference, conditional


def weak_snr_mi_gaussian(cov_z, cov_x, delta: float, alpha: float) -> float:
    """Normalized I(z; sqrt(delta) z + sqrt(delta alpha) x + n_hat) for Gaussian z, x.

    ``n_hat`` has variance ``1 - delta*alpha`` per component. Computed from
    the eigenvalues of the output and noise covariances with log1p.
    """
    cov_z = np.asarray(cov_z, dtype=float)
    cov_x = np.asarray(cov_x, dtype=float)
    n = cov_z.shape[0]
    da = delta * alpha
    if da >= 1.0:
        raise DomainError(f"delta*alpha must be < 1, got {da!r}")
    eye = np.eye(n)
    # both covariances are (1 - da) I + small PSD part
    noise = da * (cov_x - eye)
    out = delta * cov_z + noise
    lam_out = np.linalg.eigvalsh(0.5 * (out + out.T))
    lam_noise = np.linalg.eigvalsh(0.5 * (noise + noise.T))
    return 0.5 * float(np.sum(np.log1p(lam_out) - np.log1p(lam_noise))) / n
