"""Rank statistics and latent-correlation estimation.

Estimators operating on an n x d sample matrix (rows = observations):
midranks, marginal moments (1/n convention), the Pearson and Spearman
correlation matrices, the sine-transformed Spearman estimate of the latent
Gaussian correlation, the Spearman covariance matrix, and the normal-score
transform.

The sine transform maps the sample Spearman rho of a pair to the
correlation of the latent Gaussian pair under a Gaussian copula:
``R[j, k] = 2 * sin(pi / 6 * rho[j, k])`` off the diagonal. Because it only
depends on ranks, the result is invariant under strictly increasing
per-column transformations and positive rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from .errors import DegenerateColumn, InvalidData, InvalidInput

KIND_PEARSON = "pearson"
KIND_SPEARMAN_RAW = "spearman-raw"
KIND_SPEARMAN_SINE = "spearman-sine"
KIND_PSD_PROJECTED = "psd-projected"

_CORRELATION_KINDS = (KIND_PEARSON, KIND_SPEARMAN_RAW, KIND_SPEARMAN_SINE, KIND_PSD_PROJECTED)
_COVARIANCE_KINDS = (KIND_PEARSON, KIND_SPEARMAN_SINE, KIND_PSD_PROJECTED)

SYMMETRY_TOL = 1e-12


def _as_matrix(data, min_rows: int, name: str = "data") -> np.ndarray:
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise InvalidData(f"{name} must be a 2-d array, got ndim={x.ndim}")
    if not np.all(np.isfinite(x)):
        raise InvalidData(f"{name} contains non-finite entries")
    if x.shape[0] < min_rows:
        raise InvalidData(f"{name} needs at least {min_rows} rows, got {x.shape[0]}")
    return x


def _check_symmetric(matrix: np.ndarray, tol: float = SYMMETRY_TOL, name: str = "matrix") -> None:
    scale = max(1.0, float(np.max(np.abs(matrix))) if matrix.size else 1.0)
    if np.max(np.abs(matrix - matrix.T)) > tol * scale:
        raise InvalidInput(f"{name} is not symmetric to {tol:g} (relative)")


@dataclass(frozen=True)
class MarginalMoments:
    """Per-column sample means and standard deviations (1/n divisor).

    A zero standard deviation marks a constant column; it is retained here
    and rejected only where a downstream operation would divide by it.
    """

    means: np.ndarray
    stds: np.ndarray

    @property
    def constant_columns(self) -> np.ndarray:
        return np.flatnonzero(self.stds == 0.0)


@dataclass(frozen=True)
class CorrelationEstimate:
    """A d x d correlation-scale matrix with a provenance tag.

    ``kind`` is one of ``pearson``, ``spearman-raw``, ``spearman-sine`` or
    ``psd-projected``. All kinds are symmetric; the first three carry an
    exact unit diagonal and off-diagonal entries in [-1, 1]. The
    psd-projected kind is not constrained to a unit diagonal (the max-norm
    projection ranges over the full PSD cone).
    """

    matrix: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in _CORRELATION_KINDS:
            raise InvalidInput(f"unknown correlation kind {self.kind!r}")
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInput("correlation matrix must be square")
        _check_symmetric(m, name=f"{self.kind} correlation")
        if self.kind != KIND_PSD_PROJECTED:
            if not np.all(np.diag(m) == 1.0):
                raise InvalidInput("correlation diagonal must be exactly 1")
            off = m - np.diag(np.diag(m))
            if np.max(np.abs(off)) > 1.0:
                raise InvalidInput("off-diagonal correlation entries outside [-1, 1]")
        object.__setattr__(self, "matrix", m)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class CovarianceEstimate:
    """A d x d covariance-scale matrix with a provenance tag."""

    matrix: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in _COVARIANCE_KINDS:
            raise InvalidInput(f"unknown covariance kind {self.kind!r}")
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInput("covariance matrix must be square")
        _check_symmetric(m, name=f"{self.kind} covariance")
        object.__setattr__(self, "matrix", m)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


def compute_ranks(column) -> np.ndarray:
    """Midranks of a single column.

    Ties receive the average of the ranks they span, so each column of
    midranks sums to n(n+1)/2 and strictly increasing input yields 1..n.
    """
    x = np.asarray(column, dtype=float)
    if x.ndim != 1:
        raise InvalidData("compute_ranks expects a 1-d column")
    if x.size < 1:
        raise InvalidData("compute_ranks needs at least one entry")
    if not np.all(np.isfinite(x)):
        raise InvalidData("column contains non-finite entries")
    return rankdata(x, method="average")


def rank_matrix(data) -> np.ndarray:
    """Column-wise midranks of an n x d sample matrix."""
    x = _as_matrix(data, min_rows=1)
    return rankdata(x, method="average", axis=0)


def marginal_moments(data) -> MarginalMoments:
    """Sample means and standard deviations per column, with a 1/n divisor."""
    x = _as_matrix(data, min_rows=2)
    means = x.mean(axis=0)
    stds = np.sqrt(np.mean((x - means) ** 2, axis=0))
    return MarginalMoments(means=means, stds=stds)


def _correlation_from_centered(centered: np.ndarray, kind: str) -> CorrelationEstimate:
    norms = np.sqrt(np.sum(centered**2, axis=0))
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DegenerateColumn(int(zero[0]))
    normalized = centered / norms
    corr = normalized.T @ normalized
    corr = (corr + corr.T) / 2.0
    np.clip(corr, -1.0, 1.0, out=corr)
    np.fill_diagonal(corr, 1.0)
    return CorrelationEstimate(matrix=corr, kind=kind)


def spearman_rho_matrix(data) -> CorrelationEstimate:
    """Spearman's rho matrix: the Pearson correlation of column midranks."""
    x = _as_matrix(data, min_rows=3)
    n = x.shape[0]
    ranks = rankdata(x, method="average", axis=0)
    centered = ranks - (n + 1) / 2.0
    return _correlation_from_centered(centered, KIND_SPEARMAN_RAW)


def pearson_correlation(data) -> CorrelationEstimate:
    """Standard sample correlation matrix."""
    x = _as_matrix(data, min_rows=2)
    centered = x - x.mean(axis=0)
    return _correlation_from_centered(centered, KIND_PEARSON)


def sine_transform(rho: CorrelationEstimate) -> CorrelationEstimate:
    """Map a Spearman rho matrix to the latent Gaussian correlation estimate.

    Applies ``2 * sin(pi / 6 * rho)`` off the diagonal and sets the diagonal
    to exactly 1. Input must carry the ``spearman-raw`` tag.
    """
    if rho.kind != KIND_SPEARMAN_RAW:
        raise InvalidInput(f"sine_transform expects kind {KIND_SPEARMAN_RAW!r}, got {rho.kind!r}")
    out = 2.0 * np.sin(np.pi / 6.0 * rho.matrix)
    out = (out + out.T) / 2.0
    np.clip(out, -1.0, 1.0, out=out)
    np.fill_diagonal(out, 1.0)
    return CorrelationEstimate(matrix=out, kind=KIND_SPEARMAN_SINE)


def spearman_correlation(data) -> CorrelationEstimate:
    """Convenience composition: sine-transformed Spearman rho of the data."""
    return sine_transform(spearman_rho_matrix(data))


def spearman_covariance(data) -> CovarianceEstimate:
    """Spearman covariance: ``S[j, k] = std[j] * std[k] * R[j, k]``.

    ``R`` is the sine-transformed Spearman correlation and the standard
    deviations use the 1/n divisor, so the diagonal equals the per-column
    sample variance.
    """
    x = _as_matrix(data, min_rows=3)
    corr = spearman_correlation(x)
    moments = marginal_moments(x)
    cov = np.outer(moments.stds, moments.stds) * corr.matrix
    return CovarianceEstimate(matrix=cov, kind=KIND_SPEARMAN_SINE)


def normal_scores(data) -> np.ndarray:
    """Normal-score transform: entry (i, j) becomes ``ndtri(rank[i, j] / (n + 1))``.

    Midranks keep the transform well defined under ties, and the n+1
    denominator keeps the arguments strictly inside (0, 1).
    """
    x = _as_matrix(data, min_rows=2)
    n = x.shape[0]
    ranks = rankdata(x, method="average", axis=0)
    return ndtri(ranks / (n + 1.0))
