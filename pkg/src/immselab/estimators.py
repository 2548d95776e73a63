"""Finite-blocklength estimation over AWGN: codebooks, MMSE and MI.

Monte Carlo estimators split the sample budget into fixed chunks of
``CHUNK`` draws. Chunk ``k`` draws from its own stream seeded by
``(seed, k)``, and chunk statistics are merged in chunk order, so results are
bit-identical for any number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .core import ChannelParams, check_cov, incremental_decomposition
from .eigen import sym_eigenvalues
from .errors import ConvergenceError, DomainError, ResourceError
from .kl import BlockGaussianPair, kl_block_independent

__all__ = [
    "CHUNK",
    "MAX_CODEWORDS",
    "Codebook",
    "Constellation",
    "McEstimate",
    "MatrixEstimate",
    "ImmseRow",
    "DeviationRow",
    "generate_codebook",
    "antipodal_codebook",
    "codebook_covariance",
    "spectral_deviation",
    "is_rank_deficient",
    "conditional_mean",
    "posterior_weights",
    "mmse_codebook_mc",
    "mmse_matrix_mc",
    "mi_codebook_mc",
    "mmse_scalar_quadrature",
    "mi_scalar_quadrature",
    "verify_immse",
    "eigen_convergence_experiment",
    "independence_bound_experiment",
    "surrogate_trend",
    "truncate",
]

CHUNK = 4096
MAX_CODEWORDS = 2**20

# composite Gauss-Legendre grid for the noise integral: panels over [-L, L]
_QUAD_HALF_WIDTH = 12.0
_QUAD_PANELS = 24
_QUAD_GATE = 1e-10


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Codebook:
    """M codewords of length n (rows), used with a uniform prior."""

    codewords: np.ndarray

    def __post_init__(self):
        X = np.array(self.codewords, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DomainError(f"codewords must be an M x n array with M, n >= 1, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DomainError("codewords have non-finite entries")
        power = np.sum(X * X, axis=1) / X.shape[1]
        if np.max(power) > 1.0 + 1e-12:
            raise DomainError(f"codeword power {np.max(power):.15g} exceeds 1")
        X.setflags(write=False)
        object.__setattr__(self, "codewords", X)

    @property
    def M(self) -> int:
        return self.codewords.shape[0]

    @property
    def n(self) -> int:
        return self.codewords.shape[1]


@dataclass(frozen=True)
class Constellation:
    """Finite scalar input distribution."""

    values: tuple
    probs: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.ndim != 1 or v.shape != p.shape or v.size == 0:
            raise DomainError("values and probs must be non-empty 1-D sequences of equal length")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise DomainError("probs must be non-negative and sum to 1")
        object.__setattr__(self, "values", tuple(v))
        object.__setattr__(self, "probs", tuple(p))

    @classmethod
    def bpsk(cls):
        return cls((-1.0, 1.0), (0.5, 0.5))

    @classmethod
    def pam4(cls):
        """Equiprobable 4-PAM at unit power."""
        s = 1.0 / np.sqrt(5.0)
        return cls((-3 * s, -s, s, 3 * s), (0.25, 0.25, 0.25, 0.25))

    @classmethod
    def asym3(cls):
        """A skewed three-point input with zero mean."""
        return cls((-1.0, 0.0, 2.0), (0.4, 0.4, 0.2))

    @property
    def size(self) -> int:
        return len(self.values)

    def second_moment(self) -> float:
        v, p = np.asarray(self.values), np.asarray(self.probs)
        return float(p @ (v * v))


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    samples: int
    seed: int


@dataclass(frozen=True)
class MatrixEstimate:
    """Monte Carlo matrix estimate with entrywise standard errors."""

    value: np.ndarray
    std_error: np.ndarray
    samples: int
    seed: int

    def spectral_std_error(self) -> float:
        """Bound on the standard error of any eigenvalue of ``value``.

        By Weyl's inequality an eigenvalue moves by at most the spectral (so
        at most the Frobenius) norm of the perturbation.
        """
        return float(np.linalg.norm(self.std_error))


def generate_codebook(n: int, rate_nats: float, seed: int) -> Codebook:
    """Random codebook of round(exp(n * rate)) codewords on the radius-sqrt(n) sphere."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not rate_nats >= 0:
        raise DomainError(f"rate must be non-negative, got {rate_nats!r}")
    log_m = n * rate_nats
    if log_m > np.log(MAX_CODEWORDS) + 1.0:
        raise ResourceError(f"codebook would have about exp({log_m:.4g}) codewords, cap is {MAX_CODEWORDS}")
    M = int(round(np.exp(log_m)))
    if M > MAX_CODEWORDS:
        raise ResourceError(f"codebook would have M={M} codewords, cap is {MAX_CODEWORDS}")
    M = max(M, 1)
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((M, n))
    norms = np.linalg.norm(G, axis=1, keepdims=True)
    # a zero draw has probability zero; map it to a fixed point on the sphere
    G = np.where(norms > 0, G, 1.0)
    norms = np.where(norms > 0, norms, np.sqrt(n))
    X = G * (np.sqrt(n) / norms)
    # guard the power check against the last-ulp overshoot of the projection
    X /= np.maximum(1.0, np.sqrt(np.sum(X * X, axis=1, keepdims=True) / n))
    return Codebook(X)


def antipodal_codebook(n: int) -> Codebook:
    """The two-word book {+1, -1}^n: a rank-one covariance."""
    return Codebook(np.vstack([np.ones(n), -np.ones(n)]))


def codebook_covariance(cb: Codebook) -> np.ndarray:
    """Covariance of a codeword drawn uniformly from ``cb``."""
    X = cb.codewords
    Xc = X - X.mean(axis=0)
    S = Xc.T @ Xc / cb.M
    return 0.5 * (S + S.T)


def spectral_deviation(cov) -> float:
    """max_i |lambda_i(cov) - 1|."""
    return float(np.max(np.abs(sym_eigenvalues(cov) - 1.0)))


def is_rank_deficient(cov, tol: float = 1e-10) -> bool:
    """True when the smallest eigenvalue is at most ``tol``: such a book
    cannot behave like a capacity-achieving one."""
    return bool(sym_eigenvalues(cov)[-1] <= tol)


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------

def _log_weights(X, y, gamma):
    # -||y - sqrt(g) x||^2 / 2 up to terms that do not depend on the codeword
    sg = np.sqrt(gamma)
    return sg * (y @ X.T) - 0.5 * gamma * np.sum(X * X, axis=1)


def posterior_weights(cb: Codebook, y, gamma: float) -> np.ndarray:
    """Posterior probabilities of each codeword given ``y`` (rows for a batch)."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError("y has non-finite entries")
    if y.shape[-1] != cb.n:
        raise DomainError(f"y has length {y.shape[-1]}, codebook has n={cb.n}")
    if not gamma >= 0:
        raise DomainError(f"gamma must be non-negative, got {gamma!r}")
    lw = _log_weights(cb.codewords, y, gamma)
    lw = lw - lw.max(axis=-1, keepdims=True)
    w = np.exp(lw)
    return w / w.sum(axis=-1, keepdims=True)


def conditional_mean(cb: Codebook, y, gamma: float) -> np.ndarray:
    """E[x | sqrt(gamma) x + n = y] for a uniform prior over ``cb``.

    ``y`` may be a single length-n vector or a batch of rows.
    """
    return posterior_weights(cb, y, gamma) @ cb.codewords


def _chunks(samples):
    full, rest = divmod(samples, CHUNK)
    sizes = [CHUNK] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def _chunk_rng(seed, k):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(k)]))


def _run_chunks(fn, samples, seed, workers):
    """Evaluate ``fn(rng, size) -> (size, ...) array`` on every chunk.

    Returns per-chunk (count, mean, M2) statistics merged in chunk order.
    """
    if samples < 100:
        raise DomainError(f"samples must be >= 100, got {samples}")
    if seed < 0 or seed >= 2**64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    plan = _chunks(samples)

    def work(item):
        k, size = item
        vals = np.asarray(fn(_chunk_rng(seed, k), size), dtype=float)
        mean = vals.mean(axis=0)
        return size, mean, np.sum((vals - mean) ** 2, axis=0)

    if workers is None or workers <= 1:
        parts = [work(item) for item in plan]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, plan))

    count, mean, m2 = parts[0]
    for c, mu, s in parts[1:]:
        tot = count + c
        d = mu - mean
        mean = mean + d * (c / tot)
        m2 = m2 + s + d * d * (count * c / tot)
        count = tot
    var = m2 / (count - 1)
    return mean, np.sqrt(var / count)


def _draw(cb, rng, size):
    idx = rng.integers(cb.M, size=size)
    noise = rng.standard_normal((size, cb.n))
    return cb.codewords[idx], noise


def _sq_error(cb, x, noise, gamma):
    y = np.sqrt(gamma) * x + noise
    return np.sum((x - conditional_mean(cb, y, gamma)) ** 2, axis=1) / cb.n


def _info_density(cb, x, noise, gamma):
    # ln p(y|x) - ln p(y), per dimension
    sg = np.sqrt(gamma)
    y = sg * x + noise
    lw = _log_weights(cb.codewords, y, gamma)
    own = sg * np.sum(y * x, axis=1) - 0.5 * gamma * np.sum(x * x, axis=1)
    return (np.log(cb.M) + own - logsumexp(lw, axis=1)) / cb.n


def mmse_codebook_mc(cb: Codebook, gamma: float, samples: int, seed: int, workers: int = 1) -> McEstimate:
    """Per-dimension MMSE (1/n) E||x - E[x|y]||^2 by Monte Carlo."""

    def fn(rng, size):
        x, noise = _draw(cb, rng, size)
        return _sq_error(cb, x, noise, gamma)

    mean, se = _run_chunks(fn, samples, seed, workers)
    return McEstimate(float(mean), float(se), samples, seed)


def mmse_matrix_mc(cb: Codebook, gamma: float, samples: int, seed: int, workers: int = 1) -> MatrixEstimate:
    """The n x n error covariance E[(x - E[x|y])(x - E[x|y])^T] by Monte Carlo."""

    def fn(rng, size):
        x, noise = _draw(cb, rng, size)
        e = x - conditional_mean(cb, np.sqrt(gamma) * x + noise, gamma)
        return e[:, :, None] * e[:, None, :]

    mean, se = _run_chunks(fn, samples, seed, workers)
    return MatrixEstimate(0.5 * (mean + mean.T), se, samples, seed)


def mi_codebook_mc(cb: Codebook, gamma: float, samples: int, seed: int, workers: int = 1) -> McEstimate:
    """Per-dimension I(x; sqrt(gamma) x + n) in nats by Monte Carlo."""

    def fn(rng, size):
        x, noise = _draw(cb, rng, size)
        return _info_density(cb, x, noise, gamma)

    mean, se = _run_chunks(fn, samples, seed, workers)
    return McEstimate(float(mean), float(se), samples, seed)


# ---------------------------------------------------------------------------
# Scalar quadrature
# ---------------------------------------------------------------------------

def _noise_rule(order):
    """Nodes and Gaussian-density weights for E[f(N)], N ~ N(0, 1)."""
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-_QUAD_HALF_WIDTH, _QUAD_HALF_WIDTH, _QUAD_PANELS + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * t).ravel()
    weights = (half[:, None] * w).ravel() * np.exp(-0.5 * nodes**2) / np.sqrt(2.0 * np.pi)
    return nodes, weights


def _scalar_mmse(c, gamma, order):
    v = np.asarray(c.values)
    p = np.asarray(c.probs)
    nodes, weights = _noise_rule(order)
    sg = np.sqrt(gamma)
    total = 0.0
    for xk, pk in zip(v, p):
        y = sg * xk + nodes
        lw = np.log(np.where(p > 0, p, 1.0))[None, :] + sg * y[:, None] * v[None, :] - 0.5 * gamma * v**2
        lw = np.where(p > 0, lw, -np.inf)
        lw -= lw.max(axis=1, keepdims=True)
        w = np.exp(lw)
        xhat = (w @ v) / w.sum(axis=1)
        total += pk * float(weights @ (xk - xhat) ** 2)
    return total


def _scalar_mi(c, gamma, order):
    v = np.asarray(c.values)
    p = np.asarray(c.probs)
    keep = p > 0
    v, p = v[keep], p[keep]
    nodes, weights = _noise_rule(order)
    sg = np.sqrt(gamma)
    total = 0.0
    for xk, pk in zip(v, p):
        d = sg * (xk - v)
        # ln p(y|x_k) - ln p(y) with y = sqrt(g) x_k + n
        lr = np.log(p)[None, :] - nodes[:, None] * d[None, :] - 0.5 * d[None, :] ** 2
        total += pk * float(weights @ -logsumexp(lr, axis=1))
    return total


def _gated(fn, c, gamma, order):
    if order < 20:
        raise DomainError(f"quadrature order must be >= 20, got {order}")
    if not gamma >= 0:
        raise DomainError(f"gamma must be non-negative, got {gamma!r}")
    lo = fn(c, gamma, order)
    hi = fn(c, gamma, order + 20)
    if abs(hi - lo) > _QUAD_GATE:
        raise ConvergenceError(
            f"quadrature at order {order} and {order + 20} differ by {abs(hi - lo):.3e} (gamma={gamma})"
        )
    return lo


def mmse_scalar_quadrature(c: Constellation, gamma: float, order: int = 61) -> float:
    """E[(X - E[X|Y])^2] for Y = sqrt(gamma) X + N, by quadrature over N.

    Raises ConvergenceError when ``order`` and ``order + 20`` disagree by
    more than 1e-10.
    """
    return max(_gated(_scalar_mmse, c, gamma, order), 0.0)


def mi_scalar_quadrature(c: Constellation, gamma: float, order: int = 61) -> float:
    """I(X; sqrt(gamma) X + N) in nats, by quadrature over N."""
    return max(_gated(_scalar_mi, c, gamma, order), 0.0)


# ---------------------------------------------------------------------------
# I-MMSE verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImmseRow:
    gamma: float
    d_mi: float
    half_mmse: float
    error: float
    std_error: float
    passed: bool


def _stencil(gamma, h):
    """Offsets and coefficients of a second-order first-derivative stencil."""
    if gamma - h >= 0:
        return (-h, h), (-0.5 / h, 0.5 / h)
    return (0.0, h, 2 * h), (-1.5 / h, 2.0 / h, -0.5 / h)


def _check_grid(grid, h):
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0 or np.any(g < 0) or not np.all(np.isfinite(g)):
        raise DomainError("gamma grid must be a non-empty list of finite non-negative values")
    if g.size > 1:
        spacing = float(np.min(np.diff(g)))
        if spacing <= 0:
            raise DomainError("gamma grid must be strictly increasing")
        steps = [h] * g.size if h is not None else [1e-3 * max(1.0, x) for x in g]
        if max(steps) > spacing / 4:
            raise DomainError(f"step {max(steps):.3g} exceeds a quarter of the grid spacing {spacing:.3g}")
    return g


def verify_immse(
    source,
    gamma_grid: Sequence[float],
    h: float = None,
    tol: float = 1e-3,
    order: int = 61,
    samples: int = 200_000,
    seed: int = 0,
    workers: int = 1,
) -> list:
    """Check dI/dgamma = MMSE/2 on a grid.

    A :class:`Constellation` is handled by quadrature and passes when the
    error is at most ``tol``. A :class:`Codebook` is handled by Monte Carlo
    with common random numbers across the stencil; it passes when the error
    is at most ``tol + 3 * std_error``. The default step is
    ``1e-3 * max(1, gamma)``.
    """
    grid = _check_grid(gamma_grid, h)
    rows = []
    for k, g in enumerate(grid):
        step = h if h is not None else 1e-3 * max(1.0, g)
        offs, coefs = _stencil(g, step)
        if isinstance(source, Constellation):
            d_mi = sum(cf * mi_scalar_quadrature(source, g + o, order) for o, cf in zip(offs, coefs))
            half = 0.5 * mmse_scalar_quadrature(source, g, order)
            err, se = d_mi - half, 0.0
            ok = abs(err) <= tol
        elif isinstance(source, Codebook):
            cb = source

            def fn(rng, size, g=g, offs=offs, coefs=coefs):
                x, noise = _draw(cb, rng, size)
                d = sum(cf * _info_density(cb, x, noise, g + o) for o, cf in zip(offs, coefs))
                m = 0.5 * _sq_error(cb, x, noise, g)
                return np.stack([d, m, d - m], axis=1)

            mean, ses = _run_chunks(fn, samples, seed + k, workers)
            d_mi, half, err = (float(v) for v in mean)
            se = float(ses[2])
            ok = abs(err) <= tol + 3.0 * se
        else:
            raise DomainError("source must be a Constellation or a Codebook")
        rows.append(ImmseRow(float(g), float(d_mi), float(half), float(err), se, bool(ok)))
    return rows


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeviationRow:
    n: int
    M: int
    mean_deviation: float
    rank_deficient: int


def eigen_convergence_experiment(snr1: float, rate_fraction: float, n_list, seeds) -> list:
    """Mean over seeds of max|lambda_i(Cov) - 1| for random codebooks.

    The rate is ``rate_fraction * 0.5 * log(1 + snr1)``. ``rank_deficient``
    counts seeds whose covariance is singular.
    """
    if not 0 < rate_fraction <= 1:
        raise DomainError(f"rate fraction must be in (0, 1], got {rate_fraction!r}")
    seeds = list(seeds)
    if not seeds:
        raise DomainError("at least one seed is required")
    rate = rate_fraction * 0.5 * np.log1p(snr1)
    rows = []
    for n in n_list:
        devs, bad, M = [], 0, 0
        for s in seeds:
            cb = generate_codebook(n, rate, s)
            cov = codebook_covariance(cb)
            devs.append(spectral_deviation(cov))
            bad += is_rank_deficient(cov)
            M = cb.M
        rows.append(DeviationRow(int(n), M, float(np.mean(devs)), bad))
    return rows


def independence_bound_experiment(params: ChannelParams, snr: float, delta: float, source) -> float:
    """Per-dimension Gaussian-surrogate I(y1; y2) of the incremental pair.

    ``source`` is a :class:`Codebook` or a codeword covariance matrix.
    """
    cov = codebook_covariance(source) if isinstance(source, Codebook) else check_cov(source, "cov_x")
    dec = incremental_decomposition(params, snr, delta)
    n = cov.shape[0]
    eye = np.eye(n)
    a = dec.alpha
    A = a * cov + (dec.sigma1_sq + dec.sigma2_sq) * eye
    C = a * cov + (dec.sigma1_sq + dec.noise_ratio**2 * dec.sigma2_sq) * eye
    B = a * (cov - eye)
    return kl_block_independent(BlockGaussianPair(A, B, C)) / n


def surrogate_trend(
    params: ChannelParams,
    snr: float,
    delta: float,
    rate_fraction: float,
    n_list,
    seeds,
) -> list:
    """Mean surrogate MI over seeds for each n, using the random codebooks
    of :func:`eigen_convergence_experiment` (rate from ``params.snr1``)."""
    rate = rate_fraction * 0.5 * np.log1p(params.snr1)
    out = []
    for n in n_list:
        vals = [independence_bound_experiment(params, snr, delta, generate_codebook(n, rate, s)) for s in seeds]
        out.append((int(n), float(np.mean(vals))))
    return out


def truncate(z, kappa: float):
    """Clip every component with |z_i| >= kappa to kappa.

    Returns ``(clipped, flag)`` where ``flag`` is 1 iff nothing was clipped.
    """
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa!r}")
    z = np.asarray(z, dtype=float)
    inside = np.abs(z) < kappa
    return np.where(inside, z, kappa), int(np.all(inside))
