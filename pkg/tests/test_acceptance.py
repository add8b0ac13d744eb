"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one `[PASS]`/`[FAIL]` line (run with ``pytest -s`` to see
them live) and asserts both the criterion and its runtime budget.
"""

import math
import time

import numpy as np
import pytest

from rankpca.errors import NotConverged
from rankpca.evaluate import (
    ExperimentConfig,
    rate_check,
    replicate_experiment,
    sin_angle,
)
from rankpca.psd import clip_eigenvalues, project_psd_maxnorm
from rankpca.ranks import pearson_correlation, spearman_correlation, spearman_rho_matrix
from rankpca.simulate import rng_from, sample_latent, synthesize_model
from rankpca.solvers import SolverOptions, deflate, resolve_init, shift_to_psd, truncated_power

BASE_SEED = 20260810


def _criterion(name, ok, detail, elapsed, budget):
    status = "PASS" if ok else "FAIL"
    print(f"\n[{status}] {name} ({elapsed:.1f}s / budget {budget:.0f}s): {detail}")
    assert elapsed <= budget, f"{name}: runtime {elapsed:.1f}s exceeded budget {budget}s"
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# 1. rank-statistic oracle equivalence
# ---------------------------------------------------------------------------

def _rank_oracle(column):
    n = len(column)
    out = np.empty(n)
    for i, xi in enumerate(column):
        below = np.sum(column < xi)
        ties = np.sum(column == xi)
        out[i] = below + (ties + 1) / 2.0
    return out


def _corr_oracle(columns):
    """Double loop over pairs, direct transcription of the defining formula."""
    n, d = columns.shape
    means = [np.sum(columns[:, j]) / n for j in range(d)]
    out = np.eye(d)
    for j in range(d):
        for k in range(d):
            num = np.sum((columns[:, j] - means[j]) * (columns[:, k] - means[k]))
            den = math.sqrt(
                np.sum((columns[:, j] - means[j]) ** 2) * np.sum((columns[:, k] - means[k]) ** 2)
            )
            out[j, k] = num / den
    return out


def test_acceptance_1_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(BASE_SEED)
    worst = 0.0
    for _ in range(50):
        x = rng.normal(size=(20, 5))
        ranks = np.column_stack([_rank_oracle(x[:, j]) for j in range(5)])
        worst = max(worst, np.max(np.abs(spearman_rho_matrix(x).matrix - _corr_oracle(ranks))))
        worst = max(worst, np.max(np.abs(pearson_correlation(x).matrix - _corr_oracle(x))))
    elapsed = time.perf_counter() - start
    _criterion(
        "1 oracle equivalence (rank statistics)",
        worst <= 1e-12,
        f"max |estimate - brute force| = {worst:.2e} (tol 1e-12)",
        elapsed,
        1.0,
    )


# ---------------------------------------------------------------------------
# 2. truncation-ratio monotonicity property
# ---------------------------------------------------------------------------

def test_acceptance_2_truncation_monotonicity():
    start = time.perf_counter()
    rng = np.random.default_rng(BASE_SEED + 1)
    violations = 0
    for _ in range(10_000):
        d = int(rng.integers(2, 40))
        v = np.sort(np.abs(rng.normal(size=d)))[::-1]
        cum_2 = np.sqrt(np.cumsum(v**2))
        for q in (0.25, 0.5, 0.75, 1.0):
            ratios = np.cumsum(v**q) ** (1.0 / q) / cum_2
            if np.any(np.diff(ratios) < -1e-10) or ratios[0] < 1.0 - 1e-12:
                violations += 1
    elapsed = time.perf_counter() - start
    _criterion(
        "2 truncation-ratio monotonicity (10,000 vectors, q in {0.25,0.5,0.75,1})",
        violations == 0,
        f"{violations} violations",
        elapsed,
        10.0,
    )


# ---------------------------------------------------------------------------
# 3. deflation identity
# ---------------------------------------------------------------------------

def test_acceptance_3_deflation_identity():
    start = time.perf_counter()
    rng = np.random.default_rng(BASE_SEED + 2)
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(2, 30))
        a = rng.normal(size=(d, d))
        gamma = (a + a.T) / 2.0
        v = rng.normal(size=d)
        v /= np.linalg.norm(v)
        worst = max(worst, np.max(np.abs(deflate(gamma, v) @ v)))
    elapsed = time.perf_counter() - start
    _criterion(
        "3 deflation identity (1,000 random pairs)",
        worst <= 1e-10,
        f"max |deflate(G, v) v| = {worst:.2e} (tol 1e-10)",
        elapsed,
        5.0,
    )


# ---------------------------------------------------------------------------
# 4. PSD projection
# ---------------------------------------------------------------------------

def test_acceptance_4_psd_projection():
    start = time.perf_counter()
    result = project_psd_maxnorm(np.array([[1.0, 1.2], [1.2, 1.0]]))
    oracle_ok = abs(result.achieved_distance - 0.1) <= 1e-3

    rng = np.random.default_rng(BASE_SEED + 3)
    count = 0
    dominated = psd_ok = 0
    while count < 100:
        x = rng.standard_normal((8, 10)) ** 3
        matrix = spearman_correlation(x).matrix
        if np.linalg.eigvalsh(matrix)[0] >= -1e-6:
            continue
        count += 1
        clip_dist = np.max(np.abs(matrix - clip_eigenvalues(matrix)))
        proj = project_psd_maxnorm(matrix)
        psd_ok += proj.min_eigenvalue >= -1e-8
        dominated += proj.achieved_distance <= clip_dist + 1e-12
    elapsed = time.perf_counter() - start
    _criterion(
        "4 PSD projection (2x2 oracle + 100 indefinite 10x10 matrices)",
        oracle_ok and psd_ok == 100 and dominated == 100,
        f"2x2 distance {result.achieved_distance:.6f} (want 0.1 +- 1e-3); "
        f"{psd_ok}/100 PSD, {dominated}/100 dominate clipping",
        elapsed,
        30.0,
    )


# ---------------------------------------------------------------------------
# 5. noiseless recovery with deflation
# ---------------------------------------------------------------------------

def test_acceptance_5_noiseless_recovery():
    start = time.perf_counter()
    model = synthesize_model(100)
    opts = SolverOptions(q=0.0, radius=10)
    first = truncated_power(model.sigma0, opts)
    angle = sin_angle(first.vector, model.theta1)
    second = truncated_power(deflate(model.sigma0, first.vector), opts)
    support_ok = np.array_equal(second.support, np.arange(10, 20))
    elapsed = time.perf_counter() - start
    _criterion(
        "5 noiseless recovery (k = 10, then deflated second component)",
        angle <= 1e-6 and support_ok,
        f"sin angle {angle:.2e} (tol 1e-6); second support {second.support.tolist()}",
        elapsed,
        1.0,
    )


# ---------------------------------------------------------------------------
# 6-8. replicated table cells
# ---------------------------------------------------------------------------

def _cell(scheme, r, seed=BASE_SEED):
    config = ExperimentConfig(
        scheme=scheme,
        n=200,
        d=100,
        r=r,
        methods=("tpower",),
        estimators=("pearson", "spearman"),
        replicates=100,
        base_seed=seed,
    )
    result = replicate_experiment(config)
    return result.summary("tpower", "pearson"), result.summary("tpower", "spearman")


def test_acceptance_6_clean_gaussian_cell():
    start = time.perf_counter()
    _, spearman = _cell(scheme=1, r=0.0)
    elapsed = time.perf_counter() - start
    ok = 0.046 <= spearman.mean <= 0.106
    _criterion(
        "6 clean-data cell (scheme 1, n=200, r=0, 100 replicates)",
        ok,
        f"spearman mean sin angle {spearman.mean:.4f} (sd {spearman.sd:.4f}), want [0.046, 0.106]",
        elapsed,
        600.0,
    )


def test_acceptance_7_nonlinear_ordering():
    start = time.perf_counter()
    pearson, spearman = _cell(scheme=2, r=0.0)
    elapsed = time.perf_counter() - start
    ratio = pearson.mean / spearman.mean
    _criterion(
        "7 nonlinear-transform ordering (scheme 2, n=200, r=0)",
        ratio >= 2.0,
        f"pearson {pearson.mean:.4f} vs spearman {spearman.mean:.4f}: ratio {ratio:.2f}, want >= 2",
        elapsed,
        600.0,
    )


def test_acceptance_8_contamination_robustness():
    start = time.perf_counter()
    pearson, spearman = _cell(scheme=1, r=0.1)
    elapsed = time.perf_counter() - start
    ok = pearson.mean >= 0.5 and spearman.mean <= 0.25
    _criterion(
        "8 contamination robustness (scheme 1, n=200, r=0.1)",
        ok,
        f"pearson {pearson.mean:.4f} (want >= 0.5), spearman {spearman.mean:.4f} (want <= 0.25)",
        elapsed,
        600.0,
    )


# ---------------------------------------------------------------------------
# 9. ROC dominance across seeds
# ---------------------------------------------------------------------------

def test_acceptance_9_roc_dominance():
    start = time.perf_counter()
    wins = 0
    aucs = []
    for seed in range(10):
        config = ExperimentConfig(
            scheme=2,
            n=100,
            d=100,
            r=0.05,
            methods=("tpower",),
            estimators=("pearson", "spearman"),
            replicates=100,
            base_seed=seed,
        )
        result = replicate_experiment(config)
        sp = result.rocs[("tpower", "spearman")].auc
        pe = result.rocs[("tpower", "pearson")].auc
        wins += sp > pe
        aucs.append((round(sp, 3), round(pe, 3)))
    elapsed = time.perf_counter() - start
    _criterion(
        "9 ROC dominance (scheme 2, r=0.05, 10 base seeds)",
        wins >= 9,
        f"spearman AUC beats pearson in {wins}/10 seeds: {aucs}",
        elapsed,
        1800.0,
    )


# ---------------------------------------------------------------------------
# 10. error-rate scaling
# ---------------------------------------------------------------------------

def test_acceptance_10_rate_scaling():
    start = time.perf_counter()
    result = rate_check([125, 500], d=50, replicates=200, base_seed=0)
    ratio = result.error_ratio(125, 500)
    inverse = result.error_ratio(500, 125)
    elapsed = time.perf_counter() - start
    _criterion(
        "10 max-norm error scaling (d=50, n in {125, 500}, 200 replicates)",
        1.6 <= ratio <= 2.4 and 0.35 <= inverse <= 0.65,
        f"mean error ratio error(125)/error(500) = {ratio:.3f}, want [1.6, 2.4] (ideal 2)",
        elapsed,
        120.0,
    )


# ---------------------------------------------------------------------------
# 11. end-to-end invariance of the rank-based pipeline
# ---------------------------------------------------------------------------

def test_acceptance_11_invariance_suite():
    start = time.perf_counter()
    model = synthesize_model(100)
    x = sample_latent(model.sigma0, 200, rng_from(BASE_SEED, 0))

    def pipeline_theta(data):
        gamma, _ = shift_to_psd(spearman_correlation(data).matrix)
        init = resolve_init(gamma, "spca")
        return truncated_power(gamma, SolverOptions(q=0.0, radius=10, init=init)).vector

    base = pipeline_theta(x)
    scaled = x.copy()
    scaled[:, 4] *= 0.37
    scaled[:, 40] *= 512.0
    rescale_ok = np.array_equal(pipeline_theta(scaled), base)

    warped = x.copy()
    warped[:, 0] = np.exp(warped[:, 0])
    warped[:, 15] = np.arctan(warped[:, 15])
    warped[:, 60] = warped[:, 60] ** 3 + warped[:, 60]
    monotone_ok = np.array_equal(pipeline_theta(warped), base)
    elapsed = time.perf_counter() - start
    _criterion(
        "11 invariance suite (bitwise under rescaling and monotone maps)",
        rescale_ok and monotone_ok,
        f"rescaling bitwise: {rescale_ok}; monotone transforms bitwise: {monotone_ok}",
        elapsed,
        10.0,
    )
