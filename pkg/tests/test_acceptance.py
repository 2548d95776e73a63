"""Acceptance criteria, one test each, with runtime budgets.

A summary line per criterion is printed at the end of the pytest run.
"""

import math
import time

import numpy as np

from immselab.analytics import (
    d_mi_gaussian_interference,
    incremental_mi_gaussian,
    mi_gaussian_interference,
    mmse_gaussian,
    regime_boundaries,
    weak_branch_rhs,
    weak_snr_mi_gaussian,
)
from immselab.cli import main
from immselab.core import ChannelParams, incremental_decomposition
from immselab.estimators import (
    Constellation,
    codebook_covariance,
    eigen_convergence_experiment,
    generate_codebook,
    independence_bound_experiment,
    mmse_matrix_mc,
    surrogate_trend,
    verify_immse,
)
from immselab.kl import (
    BlockGaussianPair,
    eigenvalue_product_bounds,
    kl_block_independent,
    kl_gaussian_direct,
    mmse_eigen_bound_check,
    product_eigenvalues,
)
from immselab.regions import (
    CascadeParams,
    MacInterferenceParams,
    cascade_boundary,
    intermediate_node_limit,
    mac_mmse_threshold,
    mac_weak_boundary,
)


def _random_params(rng, count, max_interference=4.0):
    out = []
    for _ in range(count):
        snr1 = rng.uniform(0.0, 10.0)
        snr2 = rng.uniform(0.01, 10.0)
        a = rng.uniform(0.01, max_interference / snr2)
        out.append(ChannelParams(snr1, snr2, a))
    return out


def test_c01_weak_branch_consistency(record):
    t = time.perf_counter()
    rng = np.random.default_rng(101)
    grid = np.linspace(0.0, 1.0, 200, endpoint=False)
    worst = 0.0
    for p in _random_params(rng, 50):
        for g in grid:
            rhs = weak_branch_rhs(p, g, lambda s: mmse_gaussian(1.0, s))
            worst = max(worst, abs(d_mi_gaussian_interference(p, g) - rhs))
    dt = time.perf_counter() - t
    ok = worst <= 1e-12 and dt < 1.0
    record(1, ok, f"max |dI/dgamma - rhs| = {worst:.2e} ({dt:.2f}s)")
    assert ok


def test_c02_piecewise_continuity(record):
    t = time.perf_counter()
    rng = np.random.default_rng(102)
    worst, third = 0.0, 0
    for p in _random_params(rng, 50, max_interference=2.0):
        g1, g2 = regime_boundaries(p)
        for b in (g1, g2):
            if math.isinf(b):
                continue
            third += b == g2
            left = mi_gaussian_interference(p, b, side="left")
            right = mi_gaussian_interference(p, b, side="right")
            worst = max(worst, abs(left - right))
    dt = time.perf_counter() - t
    ok = worst <= 1e-12 and third > 0 and dt < 1.0
    record(2, ok, f"max jump = {worst:.2e} over 50 draws, {third} with a third regime ({dt:.2f}s)")
    assert ok


def test_c03_composite_noise_variance(record):
    t = time.perf_counter()
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(1000):
        p = ChannelParams(rng.uniform(0.01, 10), rng.uniform(0.01, 10), rng.uniform(0.01, 2))
        top = p.admissible_snr * rng.uniform(0.01, 1.0)
        frac = rng.uniform(0.01, 0.99)
        d = incremental_decomposition(p, top * frac, top * (1 - frac))
        worst = max(worst, abs(d.var_nhat - (1 - d.delta * d.alpha)))
    dt = time.perf_counter() - t
    ok = worst <= 1e-12 and dt < 1.0
    record(3, ok, f"max |var - (1 - delta alpha)| = {worst:.2e} over 1000 draws ({dt:.2f}s)")
    assert ok


def test_c04_immse_desk_scale(record):
    t = time.perf_counter()
    grid = np.linspace(0.0, 10.0, 200)
    worst = {}
    passed = True
    for name, c in (("bpsk", Constellation.bpsk()), ("pam4", Constellation.pam4())):
        rows = verify_immse(c, grid, tol=1e-3)
        passed &= all(r.passed for r in rows)
        worst[name] = max(abs(r.error) for r in rows)
    cb = generate_codebook(4, math.log(8) / 4, 2024)
    assert cb.M == 8
    mc = verify_immse(cb, [0.25, 0.5, 1.0, 2.0, 4.0], tol=1e-3, samples=200_000, seed=7)
    passed &= all(r.passed for r in mc)
    z = max(abs(r.error) / r.std_error for r in mc)
    dt = time.perf_counter() - t
    ok = passed and dt < 120
    record(4, ok, f"quadrature max err bpsk {worst['bpsk']:.1e}, pam4 {worst['pam4']:.1e}; "
                  f"codebook max |err|/se = {z:.2f} ({dt:.1f}s)")
    assert ok


def test_c05_incremental_identity(record):
    t = time.perf_counter()
    rng = np.random.default_rng(105)
    worst = 0.0
    for _ in range(100):
        p = ChannelParams(rng.uniform(0.01, 5), rng.uniform(0.01, 10), rng.uniform(0.01, 2))
        top = p.admissible_snr * rng.uniform(0.01, 1.0)
        frac = rng.uniform(0.01, 0.99)
        diff, cond = incremental_mi_gaussian(p, top * frac, top * (1 - frac))
        worst = max(worst, abs(diff - cond))
    dt = time.perf_counter() - t
    ok = worst <= 1e-10 and dt < 1.0
    record(5, ok, f"max |difference - conditional| = {worst:.2e} ({dt:.2f}s)")
    assert ok


def test_c06_block_vs_direct_kl(record):
    t = time.perf_counter()
    rng = np.random.default_rng(106)
    worst, nmax = 0.0, 0
    for k in range(100):
        n = 50 if k == 0 else int(rng.integers(1, 51))
        nmax = max(nmax, n)
        X = rng.standard_normal((2 * n, 3 * n))
        S = X @ X.T / (3 * n)
        p = BlockGaussianPair(S[:n, :n], S[n:, :n], S[n:, n:])
        a = kl_block_independent(p)
        b = kl_gaussian_direct(p.assembled(), p.product_of_marginals())
        worst = max(worst, abs(a - b) / b)
    dt = time.perf_counter() - t
    ok = worst <= 1e-8 and dt < 30
    record(6, ok, f"max rel err = {worst:.2e} over 100 instances, n <= {nmax} ({dt:.1f}s)")
    assert ok


def test_c07_majorization_sandwich(record):
    t = time.perf_counter()
    rng = np.random.default_rng(107)
    worst = -np.inf
    for _ in range(100):
        X, Y = rng.standard_normal((4, 4)), rng.standard_normal((4, 4))
        # every fifth pair has a rank-deficient first factor
        mask = rng.integers(0, 2, 4).astype(float) if rng.random() < 0.2 else np.ones(4)
        M1 = (X * mask) @ X.T
        M2 = Y @ Y.T
        lam = product_eigenvalues(M1, M2)
        for t_ in range(1, 5):
            lo, hi = eigenvalue_product_bounds(M1, M2, t_)
            worst = max(worst, lo - lam[t_ - 1], lam[t_ - 1] - hi)
    dt = time.perf_counter() - t
    ok = worst <= 1e-10 and dt < 5
    record(7, ok, f"largest violation = {worst:.2e} (<= 0 means none) ({dt:.2f}s)")
    assert ok


def test_c08_covariance_trend(record):
    t = time.perf_counter()
    rows = eigen_convergence_experiment(1.0, 0.95, [8, 16, 24], range(20))
    devs = [r.mean_deviation for r in rows]
    dt = time.perf_counter() - t
    ok = devs[0] > devs[1] > devs[2] and dt < 120
    record(8, ok, "mean deviation " + ", ".join(f"n={r.n}: {r.mean_deviation:.4f}" for r in rows) + f" ({dt:.1f}s)")
    assert ok


def test_c09_surrogate_trend(record):
    t = time.perf_counter()
    p = ChannelParams(1.0, 1.0, 0.5)
    trend = surrogate_trend(p, 0.1, 0.05, 0.95, [8, 16, 24], range(20))
    vals = [v for _, v in trend]
    zero = independence_bound_experiment(p, 0.1, 0.05, np.eye(8))
    dt = time.perf_counter() - t
    ok = vals[0] > vals[2] and zero == 0.0 and dt < 60
    record(9, ok, "surrogate MI " + ", ".join(f"n={n}: {v:.3e}" for n, v in trend)
           + f"; identity covariance gives {zero} ({dt:.1f}s)")
    assert ok


def test_c10_weak_snr_slope(record):
    t = time.perf_counter()
    n, alpha = 8, 0.5
    cov_z = codebook_covariance(generate_codebook(n, 0.4, 1))
    cov_x = codebook_covariance(generate_codebook(n, 0.4, 2))
    target = np.trace(cov_z) / (2 * n)
    errs = [abs(weak_snr_mi_gaussian(cov_z, cov_x, d, alpha) / d - target) for d in (1e-2, 1e-3, 1e-4)]
    dt = time.perf_counter() - t
    ok = errs[0] > errs[1] > errs[2] and dt < 1.0
    record(10, ok, "|I/delta - tr/2n| = " + ", ".join(f"{e:.2e}" for e in errs) + f" ({dt:.2f}s)")
    assert ok


def test_c11_mmse_matrix_bound(record):
    t = time.perf_counter()
    ok_all, worst = True, np.inf
    for inst in range(20):
        cb = generate_codebook(4, math.log(8) / 4, 1000 + inst)
        cov = codebook_covariance(cb)
        for g in (0.5, 1.0, 2.0):
            e = mmse_matrix_mc(cb, g, 20_000, 31 * inst + int(4 * g))
            ok, margin = mmse_eigen_bound_check(e.value, cov, tol=3 * e.spectral_std_error())
            ok_all &= ok
            worst = min(worst, margin)
    dt = time.perf_counter() - t
    ok = ok_all and dt < 60
    record(11, ok, f"smallest margin max eig(cov) - max eig(E) = {worst:.3e} over 60 estimates ({dt:.1f}s)")
    assert ok


def test_c12_rate_regions(record):
    t = time.perf_counter()
    rng = np.random.default_rng(112)
    betas = np.linspace(0, 1, 101)
    worst_mac = worst_cas = 0.0
    for _ in range(50):
        s1, s2, sz, a = rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 0.99)
        mp = MacInterferenceParams(s1, s2, sz, a)
        ref = 0.5 * math.log1p(s1 + s2)
        worst_mac = max(worst_mac, max(abs(mac_weak_boundary(mp, b).total("R1", "R2") - ref) for b in betas))
        s3 = rng.uniform(0, 10)
        cp = CascadeParams(s1, s2, s3, a=a)
        ref = 0.5 * math.log((1 + s1 + a * s2 + a * a * s3) / (1 + s1))
        worst_cas = max(worst_cas, max(abs(cascade_boundary(cp, b).total("R2", "R3") - ref) for b in betas))
    thr = mac_mmse_threshold(MacInterferenceParams(1.0, 1.0, 2.0, 0.5))
    lim = intermediate_node_limit(CascadeParams(1.0, 2.0, 1.0, a2=0.5, a3=0.5))
    examples = abs(thr - 1 / 3) <= 1e-15 and abs(lim - 0.5 * math.log(1.5)) <= 1e-15
    dt = time.perf_counter() - t
    ok = worst_mac <= 1e-12 and worst_cas <= 1e-12 and examples and dt < 1.0
    record(12, ok, f"sum drift mac {worst_mac:.1e}, cascade {worst_cas:.1e}; threshold {thr:.15g}, "
                   f"intermediate limit {lim:.15g} ({dt:.2f}s)")
    assert ok


def test_c13_cli_determinism(tmp_path, record):
    t = time.perf_counter()
    runs = [
        ["verify-immse", "--input", "codebook", "--gamma-min", "0.5", "--gamma-max", "2", "--steps", "3",
         "--samples", "50000", "--seed", "5"],
        ["sweep-mi", "--steps", "41", "--format", "json"],
        ["codebook-eigs", "--n-list", "8,16", "--seeds", "4", "--seed", "9"],
    ]
    same = True
    for k, args in enumerate(runs):
        blobs = []
        for rep, workers in enumerate((1, 1, 4)):
            out = tmp_path / f"{k}_{rep}.out"
            code = main(args + ["--workers", str(workers), "--out", str(out)])
            assert code in (0, 1)
            blobs.append(out.read_bytes())
        same &= blobs[0] == blobs[1] == blobs[2]
    dt = time.perf_counter() - t
    ok = same and dt < 60
    record(13, ok, f"3 commands x (1, 1, 4 workers) byte-identical: {same} ({dt:.1f}s)")
    assert ok
