import math

import numpy as np
import pytest
from scipy import integrate, stats

from immselab.core import ChannelParams, incremental_decomposition
from immselab.errors import ConvergenceError, DomainError, ResourceError
from immselab.estimators import (
    Codebook,
    Constellation,
    antipodal_codebook,
    codebook_covariance,
    conditional_mean,
    eigen_convergence_experiment,
    generate_codebook,
    independence_bound_experiment,
    is_rank_deficient,
    mi_codebook_mc,
    mi_scalar_quadrature,
    mmse_codebook_mc,
    mmse_matrix_mc,
    mmse_scalar_quadrature,
    posterior_weights,
    spectral_deviation,
    truncate,
    verify_immse,
)

BPSK = Codebook(np.array([[1.0], [-1.0]]))


def _bpsk_mmse_oracle(g):
    # 1 - E[tanh(g + sqrt(g) N)]
    f = lambda n: np.tanh(g + math.sqrt(g) * n) * stats.norm.pdf(n)  # noqa: E731
    return 1.0 - integrate.quad(f, -12, 12, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def _mi_oracle(c, g):
    # h(Y) - h(N) with the mixture density written out
    v, p = np.array(c.values), np.array(c.probs)
    sg = math.sqrt(g)

    def dens(y):
        return float(np.sum(p * stats.norm.pdf(y - sg * v)))

    lo, hi = sg * v.min() - 12, sg * v.max() + 12
    h = integrate.quad(lambda y: -dens(y) * math.log(dens(y)), lo, hi, epsabs=1e-13, epsrel=1e-13, limit=400)[0]
    return h - 0.5 * math.log(2 * math.pi * math.e)


def test_codebook_examples():
    cb = generate_codebook(8, 0.34657, 7)
    assert cb.M == 16
    np.testing.assert_allclose(np.sum(cb.codewords**2, axis=1), 8.0, atol=1e-12)
    assert np.all(np.sum(cb.codewords**2, axis=1) / 8 <= 1 + 1e-12)
    assert generate_codebook(1, 0.0, 0).M == 1
    assert generate_codebook(24, 0.34657, 0).M == 4096
    np.testing.assert_array_equal(generate_codebook(8, 0.34657, 7).codewords, cb.codewords)


def test_codebook_cap_and_power():
    with pytest.raises(ResourceError, match="cap"):
        generate_codebook(100, 0.5, 0)
    with pytest.raises(DomainError):
        Codebook(np.array([[2.0, 0.0]]))


def test_conditional_mean_trivial():
    one = Codebook(np.array([[0.3, -0.2]]))
    np.testing.assert_allclose(conditional_mean(one, [5.0, 7.0], 3.0), [0.3, -0.2])
    cb = generate_codebook(4, 0.5, 1)
    np.testing.assert_allclose(conditional_mean(cb, [9.0, -1.0, 0.0, 2.0], 0.0), cb.codewords.mean(axis=0))


@pytest.mark.parametrize("g", [0.1, 1.0, 4.0, 400.0])
def test_conditional_mean_tanh(g):
    ys = np.linspace(-30, 30, 61)[:, None]
    np.testing.assert_allclose(conditional_mean(BPSK, ys, g)[:, 0], np.tanh(math.sqrt(g) * ys[:, 0]), atol=1e-14)


def test_posterior_weights_stable():
    cb = generate_codebook(6, 0.4, 2)
    w = posterior_weights(cb, np.full(6, 1e3), 1e4)
    assert np.all(np.isfinite(w)) and abs(w.sum() - 1) <= 1e-12 and np.all(w >= 0)
    with pytest.raises(DomainError):
        posterior_weights(cb, np.full(6, np.inf), 1.0)


def test_quadrature_trivial():
    c = Constellation.bpsk()
    assert mmse_scalar_quadrature(c, 0.0) == pytest.approx(1.0, abs=1e-14)
    assert mmse_scalar_quadrature(Constellation((0.7,), (1.0,)), 3.0) == 0.0
    assert mi_scalar_quadrature(c, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert mi_scalar_quadrature(c, 60.0) == pytest.approx(math.log(2), abs=1e-9)
    with pytest.raises(DomainError):
        mmse_scalar_quadrature(c, 1.0, order=10)


def test_quadrature_gate_raises(monkeypatch):
    import immselab.estimators as mod

    # an integrand whose value still moves with the order
    monkeypatch.setattr(mod, "_scalar_mmse", lambda c, g, order: 1.0 / order)
    with pytest.raises(ConvergenceError):
        mmse_scalar_quadrature(Constellation.bpsk(), 1.0, order=20)


@pytest.mark.parametrize("g", [0.3, 1.0, 5.0])
def test_bpsk_mmse_quadrature_vs_integral(g):
    assert mmse_scalar_quadrature(Constellation.bpsk(), g) == pytest.approx(_bpsk_mmse_oracle(g), abs=1e-11)


@pytest.mark.parametrize("c", [Constellation.bpsk(), Constellation.pam4(), Constellation.asym3()])
@pytest.mark.parametrize("g", [0.5, 2.0, 7.0])
def test_mi_quadrature_vs_entropy_integral(c, g):
    assert mi_scalar_quadrature(c, g) == pytest.approx(_mi_oracle(c, g), abs=1e-9)


def test_quadrature_monotonicity():
    for c in (Constellation.bpsk(), Constellation.pam4(), Constellation.asym3()):
        g = np.linspace(0, 10, 51)
        m = [mmse_scalar_quadrature(c, x) for x in g]
        i = [mi_scalar_quadrature(c, x) for x in g]
        assert np.all(np.diff(m) <= 1e-14)
        assert np.all(np.diff(i) >= -1e-14)
        assert max(i) <= math.log(c.size) + 1e-12


def test_bpsk_mc_agrees_with_two_oracles():
    v1 = _bpsk_mmse_oracle(1.0)
    q = mmse_scalar_quadrature(Constellation.bpsk(), 1.0)
    assert abs(v1 - q) <= 1e-11
    mc = mmse_codebook_mc(BPSK, 1.0, 10_000_000, 11, workers=4)
    assert abs(mc.value - v1) <= 3 * mc.std_error
    mi = mi_codebook_mc(BPSK, 1.0, 400_000, 12)
    assert abs(mi.value - mi_scalar_quadrature(Constellation.bpsk(), 1.0)) <= 3 * mi.std_error


def test_mc_limits():
    cb = generate_codebook(8, math.log(16) / 8, 3)
    zero = mmse_codebook_mc(cb, 0.0, 20_000, 1)
    tr = np.trace(codebook_covariance(cb)) / cb.n
    assert abs(zero.value - tr) <= 3 * zero.std_error + 1e-12
    assert mmse_codebook_mc(cb, 100.0, 20_000, 1).value < 1e-3
    assert mi_codebook_mc(cb, 0.0, 1000, 1).value == pytest.approx(0.0, abs=1e-15)


def test_mi_mc_nondecreasing():
    cb = generate_codebook(4, math.log(8) / 4, 5)
    est = [mi_codebook_mc(cb, g, 50_000, 2) for g in (0.25, 0.5, 1.0, 2.0, 4.0)]
    for a, b in zip(est, est[1:]):
        assert b.value >= a.value - 3 * math.hypot(a.std_error, b.std_error)
    assert est[-1].value <= math.log(8) / 4


def test_mmse_matrix():
    cb = generate_codebook(4, math.log(8) / 4, 8)
    e0 = mmse_matrix_mc(cb, 0.0, 40_000, 4)
    assert np.all(np.abs(e0.value - codebook_covariance(cb)) <= 4 * e0.std_error + 1e-12)
    one = Codebook(np.array([[0.5, 0.5, -0.5, 0.1]]))
    assert np.array_equal(mmse_matrix_mc(one, 1.0, 1000, 0).value, np.zeros((4, 4)))


def test_mc_determinism_across_workers():
    cb = generate_codebook(4, math.log(8) / 4, 8)
    a = mmse_codebook_mc(cb, 1.0, 30_000, 99, workers=1)
    b = mmse_codebook_mc(cb, 1.0, 30_000, 99, workers=5)
    assert a == b
    m1 = mmse_matrix_mc(cb, 1.0, 30_000, 99, workers=1).value
    m3 = mmse_matrix_mc(cb, 1.0, 30_000, 99, workers=3).value
    assert np.array_equal(m1, m3)
    with pytest.raises(DomainError):
        mmse_codebook_mc(cb, 1.0, 99, 0)


def test_verify_immse_grid_checks():
    with pytest.raises(DomainError):
        verify_immse(Constellation.bpsk(), [0.0, 0.001], h=1e-3)
    with pytest.raises(DomainError):
        verify_immse(Constellation.bpsk(), [1.0, 0.5])


def test_verify_immse_asym3():
    rows = verify_immse(Constellation.asym3(), np.linspace(0, 10, 41))
    assert all(r.passed for r in rows)


def test_gaussian_closed_forms_identity():
    h = 1e-3
    for g in (0.0, 1.0, 3.0):
        lo = max(g - h, 0.0)
        fd = (0.5 * math.log1p(g + h) - 0.5 * math.log1p(lo)) / (g + h - lo)
        assert abs(fd - 0.5 / (1 + g)) <= 1e-3


def test_spectral_deviation_cases():
    assert eigen_convergence_experiment(1.0, 1e-9, [1], [0])[0].mean_deviation == 1.0
    for n in (3, 8):
        cov = codebook_covariance(antipodal_codebook(n))
        np.testing.assert_allclose(np.linalg.eigvalsh(cov)[::-1], [n] + [0] * (n - 1), atol=1e-12)
        assert spectral_deviation(cov) == pytest.approx(n - 1)
        assert is_rank_deficient(cov)
    assert not is_rank_deficient(np.eye(3))


def test_independence_identity_cov_is_zero():
    p = ChannelParams(1.0, 1.0, 0.5)
    assert independence_bound_experiment(p, 0.1, 0.05, np.eye(6)) == 0.0


def test_independence_diagonal_oracle():
    p = ChannelParams(1.0, 1.0, 0.5)
    snr, d, eps = 0.1, 0.05, 0.2
    dec = incremental_decomposition(p, snr, d)
    a = dec.alpha
    total = 0.0
    for c in (1 + eps, 1 - eps):
        A = a * c + dec.sigma1_sq + dec.sigma2_sq
        C = a * c + dec.sigma1_sq + (snr / d) ** 2 * dec.sigma2_sq
        B = a * (c - 1)
        total += -0.5 * math.log(1 - B * B / (A * C))
    got = independence_bound_experiment(p, snr, d, np.diag([1 + eps, 1 - eps]))
    assert got == pytest.approx(total / 2, rel=1e-12)


def test_truncate():
    z = np.array([0.1, -0.4, 0.2])
    out, s = truncate(z, 1.0)
    assert s == 1 and np.array_equal(out, z)
    out, s = truncate(np.array([2.0, 0.0]), 1.0)
    assert s == 0 and np.array_equal(out, [1.0, 0.0])
    out, s = truncate(np.array([-5.0, 5.0]), 1.0)
    assert np.linalg.norm(out) <= math.sqrt(2) * 1.0
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((4000, 8))
    rates = [np.mean([truncate(z, k)[1] for z in Z]) for k in (1.0, 2.0, 3.0, 5.0)]
    assert all(b >= a for a, b in zip(rates, rates[1:])) and rates[-1] == 1.0
    with pytest.raises(DomainError):
        truncate(z, 0.0)
