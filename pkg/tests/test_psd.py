import numpy as np
import pytest

from conftest import random_psd
from rankpca.errors import DegenerateColumn, InvalidInput, NotConverged
from rankpca.psd import PsdProjectionResult, clip_eigenvalues, project_psd_maxnorm, scaled_covariance
from rankpca.ranks import MarginalMoments, spearman_correlation


def indefinite_sine_matrices(count, d=10, n=8, seed=777):
    """Sine-transformed Spearman matrices that are genuinely indefinite."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        x = rng.standard_normal((n, d)) ** 3
        m = spearman_correlation(x).matrix
        if np.linalg.eigvalsh(m)[0] < -1e-6:
            out.append(m)
    return out


# ---------------------------------------------------------------------------
# clip_eigenvalues
# ---------------------------------------------------------------------------

def test_clip_psd_input_unchanged(rng):
    m = random_psd(rng, 6)
    assert np.max(np.abs(clip_eigenvalues(m) - m)) < 1e-10


def test_clip_hand_computed_2x2():
    out = clip_eigenvalues(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(out, [[0.5, 0.5], [0.5, 0.5]], atol=1e-12)


def test_clip_diagonal():
    out = clip_eigenvalues(np.diag([2.0, -3.0]))
    assert np.allclose(out, np.diag([2.0, 0.0]), atol=1e-12)


# ---------------------------------------------------------------------------
# max-norm projection
# ---------------------------------------------------------------------------

def test_project_psd_input_is_identity():
    m = np.array([[1.0, 0.3], [0.3, 1.0]])
    result = project_psd_maxnorm(m)
    assert result.achieved_distance == 0.0
    assert np.array_equal(result.matrix, m)
    assert result.converged


def test_project_2x2_oracle_case():
    # analytic optimum: with |M - R|_max <= t the most favorable choice is
    # M11 = M22 = 1 + t, M12 = 1.2 - t; PSD needs 1.2 - t <= 1 + t, so
    # t* = 0.1 with M = [[1.1, 1.1], [1.1, 1.1]]
    result = project_psd_maxnorm(np.array([[1.0, 1.2], [1.2, 1.0]]))
    assert result.achieved_distance == pytest.approx(0.1, abs=1e-3)
    assert np.allclose(result.matrix, 1.1 * np.ones((2, 2)), atol=2e-3)
    assert result.min_eigenvalue >= -1e-8


def test_project_dominates_clipping_and_is_psd():
    for m in indefinite_sine_matrices(20):
        clip_dist = np.max(np.abs(m - clip_eigenvalues(m)))
        result = project_psd_maxnorm(m)
        assert result.min_eigenvalue >= -1e-8
        assert result.achieved_distance <= clip_dist + 1e-12
        got = np.max(np.abs(m - result.matrix))
        assert got == pytest.approx(result.achieved_distance, abs=1e-12)


def test_project_bracket_monotone():
    m = indefinite_sine_matrices(1)[0]
    result = project_psd_maxnorm(m)
    los = [lo for lo, _ in result.bracket_trace]
    his = [hi for _, hi in result.bracket_trace]
    assert all(a <= b + 1e-15 for a, b in zip(los, los[1:]))
    assert all(a >= b - 1e-15 for a, b in zip(his, his[1:]))


def test_project_idempotent_on_projection_output():
    m = indefinite_sine_matrices(1, seed=3)[0]
    first = project_psd_maxnorm(m)
    second = project_psd_maxnorm(first.matrix)
    assert second.achieved_distance == 0.0


def test_project_not_converged_carries_best_iterate():
    m = indefinite_sine_matrices(1, seed=9)[0]
    with pytest.raises(NotConverged) as err:
        project_psd_maxnorm(m, max_iters=1, dist_tol=1e-12)
    result = err.value.result
    assert isinstance(result, PsdProjectionResult)
    assert result.min_eigenvalue >= -1e-8
    assert not result.converged


def test_project_rejects_asymmetric():
    with pytest.raises(InvalidInput):
        project_psd_maxnorm(np.array([[1.0, 0.5], [0.2, 1.0]]))


# ---------------------------------------------------------------------------
# scaled covariance
# ---------------------------------------------------------------------------

def _projected(matrix):
    return project_psd_maxnorm(matrix)


def test_scaled_covariance_unit_stds():
    m = indefinite_sine_matrices(1, seed=5)[0]
    proj = _projected(m)
    moments = MarginalMoments(means=np.zeros(10), stds=np.ones(10))
    cov = scaled_covariance(proj, moments)
    assert np.array_equal(cov.matrix, proj.matrix)
    assert cov.kind == "psd-projected"


def test_scaled_covariance_diagonal_case():
    proj = PsdProjectionResult(
        matrix=np.eye(2), achieved_distance=0.0, min_eigenvalue=0.0, iterations=0, converged=True
    )
    cov = scaled_covariance(proj, MarginalMoments(means=np.zeros(2), stds=np.array([2.0, 2.0])))
    assert np.array_equal(cov.matrix, np.diag([4.0, 4.0]))


def test_scaled_covariance_stays_psd(rng):
    m = indefinite_sine_matrices(1, seed=11)[0]
    proj = _projected(m)
    stds = rng.uniform(0.5, 3.0, size=10)
    cov = scaled_covariance(proj, MarginalMoments(means=np.zeros(10), stds=stds))
    assert np.linalg.eigvalsh(cov.matrix)[0] >= -1e-8


def test_scaled_covariance_rejects_zero_std():
    proj = _projected(np.eye(3))
    with pytest.raises(DegenerateColumn):
        scaled_covariance(proj, MarginalMoments(means=np.zeros(3), stds=np.array([1.0, 0.0, 1.0])))
