"""Metrics, ROC construction, oracle tuning and the replication harness.

The harness draws replicated Gaussian-copula samples, contaminates them,
estimates a correlation matrix per configured estimator (Pearson on the
observed data, sine-transformed Spearman on the observed data, or Pearson
on the retained latent Gaussian draws as the contamination-free baseline),
runs a sparse-eigenvector solver across a tuning grid and scores support
recovery and the sin-angle to the true leading eigenvector. Per-grid-point
rates are averaged over replicates; the oracle tuning value minimizes the
averaged FPR + FNR and the headline mean/sd of the sin-angle is reported
at that value, mirroring an oracle-tuned comparison.

Everything is deterministic given the base seed: replicate i derives its
sampling and contamination streams from spawn keys (i, 0) and (i, 1), and
aggregation folds in replicate order, so serial and parallel runs agree.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import AllZeroSolution, ConfigError, DegenerateIterate, InvalidInput, InvalidVector
from .psd import project_psd_maxnorm
from .ranks import pearson_correlation, spearman_correlation
from .simulate import (
    ContaminationSpec,
    TransformSet,
    contaminate_with_rng,
    rng_from,
    sample_latent,
    synthesize_model,
)
from .solvers import (
    SolverOptions,
    pmd_rank_one,
    resolve_init,
    shift_to_psd,
    spca_leading,
    truncated_power,
)

ESTIMATORS = ("pearson", "spearman", "oracle")
HARNESS_METHODS = ("tpower", "qtpm", "pmd", "spca")
PSD_MODES = ("shift", "project", "none")
SPCA_RIDGE = 1e-4


def _trapezoid(y, x):
    fn = getattr(np, "trapezoid", None) or np.trapz
    return float(fn(y, x))


def sin_angle(v1, v2) -> float:
    """Sign-invariant angle metric ``sqrt(1 - (v1' v2)^2)`` for unit vectors."""
    a = np.asarray(v1, dtype=float)
    b = np.asarray(v2, dtype=float)
    for name, v in (("v1", a), ("v2", b)):
        if abs(np.linalg.norm(v) - 1.0) > 1e-8:
            raise InvalidVector(f"{name} must be unit norm to 1e-8")
    inner = float(a @ b)
    return math.sqrt(max(0.0, 1.0 - inner * inner))


@dataclass(frozen=True)
class SupportMetrics:
    """False positive/negative counts and rates of a recovered support.

    Counts are integers for a single replicate and fractional once averaged
    across replicates.
    """

    fpn: float
    fnn: float
    fpr: float
    fnr: float


def support_metrics(theta_true, theta_hat, s: int | None = None, d: int | None = None) -> SupportMetrics:
    """Compare the supports of an estimate and the truth.

    ``fpr = fpn / (d - s)`` counts selected coordinates outside the true
    support; ``fnr = fnn / s`` counts missed true coordinates.
    """
    true = np.asarray(theta_true, dtype=float)
    hat = np.asarray(theta_hat, dtype=float)
    if true.shape != hat.shape:
        raise InvalidInput("vectors must share a dimension")
    true_support = set(np.flatnonzero(true).tolist())
    hat_support = set(np.flatnonzero(hat).tolist())
    dim = true.shape[0]
    if d is not None and d != dim:
        raise InvalidInput(f"d = {d} does not match the vectors' dimension {dim}")
    size = len(true_support)
    if s is not None and s != size:
        raise InvalidInput(f"s = {s} does not match |supp(theta_true)| = {size}")
    if size == 0:
        raise InvalidInput("theta_true must have a nonempty support")
    if dim <= size:
        raise InvalidInput("d must exceed s")
    fpn = len(hat_support - true_support)
    fnn = len(true_support - hat_support)
    return SupportMetrics(fpn=fpn, fnn=fnn, fpr=fpn / (dim - size), fnr=fnn / size)


@dataclass(frozen=True)
class RocPoint:
    delta: float
    fpr: float
    tpr: float


@dataclass(frozen=True)
class RocCurve:
    """Per-tuning-value operating points (FPR, 1 - FNR), sorted by FPR.

    ``auc`` integrates by the trapezoid rule over the observed FPR range;
    a curve whose points all share one FPR is flagged ``degenerate`` (its
    observed range is a single point and the integral carries no
    information).
    """

    points: tuple
    auc: float
    degenerate: bool


def _group_by_delta(results):
    groups: dict = {}
    order: list = []
    for delta, metrics in results:
        key = float(delta)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(metrics)
    return groups, order


def roc_curve(results) -> RocCurve:
    """Averaged ROC over a flat list of ``(delta, SupportMetrics)`` pairs.

    Pairs may repeat a delta across replicates; rates are averaged per
    delta before plotting. At least two distinct deltas are required.
    """
    results = list(results)
    if not results:
        raise InvalidInput("roc_curve needs at least one result")
    groups, order = _group_by_delta(results)
    if len(groups) < 2:
        raise InvalidInput("roc_curve needs at least two distinct tuning values")
    points = []
    for delta in order:
        ms = groups[delta]
        fpr = float(np.mean([m.fpr for m in ms]))
        fnr = float(np.mean([m.fnr for m in ms]))
        points.append(RocPoint(delta=delta, fpr=fpr, tpr=1.0 - fnr))
    points.sort(key=lambda p: (p.fpr, p.delta))
    fprs = np.array([p.fpr for p in points])
    tprs = np.array([p.tpr for p in points])
    degenerate = bool(fprs.max() == fprs.min())
    auc = 0.0 if degenerate else _trapezoid(tprs, fprs)
    return RocCurve(points=tuple(points), auc=auc, degenerate=degenerate)


def oracle_delta(results, prefer: str = "smaller") -> float:
    """Tuning value minimizing the averaged FPR + FNR.

    Ties break toward the sparser solution: ``prefer="smaller"`` for
    support-size or l1-radius parameters (smaller = sparser),
    ``prefer="larger"`` for penalty weights (larger = sparser).
    """
    results = list(results)
    if not results:
        raise InvalidInput("oracle_delta needs at least one result")
    if prefer not in ("smaller", "larger"):
        raise InvalidInput("prefer must be 'smaller' or 'larger'")
    groups, _ = _group_by_delta(results)
    scores = {
        delta: float(np.mean([m.fpr for m in ms]) + np.mean([m.fnr for m in ms]))
        for delta, ms in groups.items()
    }
    best = min(scores.values())
    candidates = [delta for delta, score in scores.items() if score == best]
    return min(candidates) if prefer == "smaller" else max(candidates)


def default_grid(method: str, d: int, q: float = 0.5):
    """Default tuning grids; override through ``ExperimentConfig.grids``."""
    if method == "tpower":
        return tuple(k for k in range(2, 41, 2) if k <= d)
    if method == "qtpm":
        upper = d ** (1.0 - q / 2.0)
        return tuple(float(x) for x in np.geomspace(1.1, upper, 20))
    if method == "pmd":
        return tuple(float(x) for x in np.geomspace(1.0, math.sqrt(d), 20))
    if method == "spca":
        return tuple(float(x) for x in np.geomspace(1e-3, 1.5, 20))
    raise InvalidInput(f"unknown method {method!r}")


def _sparser_direction(method: str) -> str:
    # tpower/qtpm/pmd grids are budgets (smaller = sparser); spca's is a penalty
    return "larger" if method == "spca" else "smaller"


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one simulation cell (or factorial slice)."""

    scheme: int
    n: int
    d: int
    r: float = 0.0
    methods: tuple = ("tpower",)
    estimators: tuple = ("pearson", "spearman", "oracle")
    replicates: int = 100
    base_seed: int = 0
    grids: dict | None = None
    qtpm_q: float = 0.5
    psd_mode: str = "shift"
    contamination_magnitude: float = 5.0
    s: int = 10
    # default spikes reproduce the reference correlation spectrum
    # (lambda1, lambda2) = (4, 2.5) that the summary targets assume
    model_spikes: tuple = (5.0, 2.0)

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "model_spikes", tuple(float(v) for v in self.model_spikes))
        if self.grids is not None:
            object.__setattr__(
                self, "grids", {str(k): tuple(v) for k, v in dict(self.grids).items()}
            )
        problems = {}
        if self.scheme not in (1, 2):
            problems["scheme"] = f"must be 1 or 2, got {self.scheme}"
        if self.n < 3:
            problems["n"] = f"must be at least 3, got {self.n}"
        if self.s < 1:
            problems["s"] = f"must be positive, got {self.s}"
        elif self.d < 2 * self.s:
            problems["d"] = f"must be at least 2s = {2 * self.s}, got {self.d}"
        if not 0.0 <= self.r < 1.0:
            problems["r"] = f"must lie in [0, 1), got {self.r}"
        bad = [m for m in self.methods if m not in HARNESS_METHODS]
        if bad or not self.methods:
            problems["methods"] = f"must be a nonempty subset of {HARNESS_METHODS}, got {self.methods}"
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad or not self.estimators:
            problems["estimators"] = f"must be a nonempty subset of {ESTIMATORS}, got {self.estimators}"
        if self.replicates < 1:
            problems["replicates"] = f"must be positive, got {self.replicates}"
        if self.psd_mode not in PSD_MODES:
            problems["psd_mode"] = f"must be one of {PSD_MODES}, got {self.psd_mode}"
        if not 0.0 < self.qtpm_q <= 1.0:
            problems["qtpm_q"] = f"must lie in (0, 1], got {self.qtpm_q}"
        if len(self.model_spikes) != 2 or not self.model_spikes[0] > self.model_spikes[1] > 0:
            problems["model_spikes"] = f"must be (a1, a2) with a1 > a2 > 0, got {self.model_spikes}"
        if self.grids is not None:
            for key, values in self.grids.items():
                if key not in HARNESS_METHODS:
                    problems[f"grids.{key}"] = "unknown method"
                elif len(values) == 0:
                    problems[f"grids.{key}"] = "grid is empty"
                elif len(set(values)) != len(values):
                    problems[f"grids.{key}"] = "grid has duplicate values"
        if problems:
            raise ConfigError(problems)

    def grid_for(self, method: str):
        if self.grids is not None and method in self.grids:
            return self.grids[method]
        return default_grid(method, self.d, self.qtpm_q)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["methods"] = list(self.methods)
        out["estimators"] = list(self.estimators)
        out["model_spikes"] = list(self.model_spikes)
        if self.grids is not None:
            out["grids"] = {k: list(v) for k, v in self.grids.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError({k: "unknown field" for k in sorted(unknown)})
        return cls(**data)


@dataclass(frozen=True)
class ReplicationSummary:
    """Oracle-tuned mean/sd of the sin-angle for one (method, estimator) cell."""

    method: str
    estimator: str
    scheme: int
    n: int
    r: float
    mean: float
    sd: float
    replicates: int
    excluded: int
    delta_star: float


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    summaries: tuple
    rocs: dict = field(repr=False)
    exclusions: dict = field(repr=False)

    def summary(self, method: str, estimator: str) -> ReplicationSummary:
        for s in self.summaries:
            if s.method == method and s.estimator == estimator:
                return s
        raise KeyError((method, estimator))

    def table_rows(self) -> list:
        return [
            {
                "method": s.method,
                "n": s.n,
                "r": s.r,
                "estimator": s.estimator,
                "mean": s.mean,
                "sd": s.sd,
                "replicates": s.replicates,
                "excluded": s.excluded,
                "delta_star": s.delta_star,
            }
            for s in self.summaries
        ]


@dataclass(frozen=True)
class _GridOutcome:
    sin_angle: float
    fpn: int
    fnn: int
    fpr: float
    fnr: float
    converged: bool
    excluded: bool


def _conditioned(matrix: np.ndarray, mode: str) -> np.ndarray:
    if mode == "shift":
        return shift_to_psd(matrix)[0]
    if mode == "project":
        return project_psd_maxnorm(matrix).matrix
    return matrix


def _estimator_matrix(name: str, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    if name == "pearson":
        return pearson_correlation(x).matrix
    if name == "spearman":
        return spearman_correlation(x).matrix
    if name == "oracle":
        return pearson_correlation(z).matrix
    raise InvalidInput(f"unknown estimator {name!r}")


def _solve_grid_point(method: str, gamma, init, delta, q: float):
    if method == "tpower":
        opts = SolverOptions(q=0.0, radius=float(delta), init=init)
        return truncated_power(gamma, opts)
    if method == "qtpm":
        opts = SolverOptions(q=q, radius=float(delta), init=init)
        return truncated_power(gamma, opts)
    if method == "pmd":
        return pmd_rank_one(gamma, float(delta), SolverOptions(init=init))
    if method == "spca":
        return spca_leading(gamma, SPCA_RIDGE, float(delta), SolverOptions(init=init))
    raise InvalidInput(f"unknown method {method!r}")


def _run_replicate(config: ExperimentConfig, rep: int) -> dict:
    """One replicate: sample, contaminate, estimate, solve the grids, score."""
    model = synthesize_model(config.d, config.s, spikes=config.model_spikes)
    transforms = (
        TransformSet.identity(config.d) if config.scheme == 1 else TransformSet.cycled(config.d)
    )
    z = sample_latent(model.sigma0, config.n, rng_from(config.base_seed, rep, 0))
    x = transforms.apply(z)
    if config.r > 0.0:
        spec = ContaminationSpec(rate=config.r, magnitude=config.contamination_magnitude)
        x = _contaminate_seeded(x, spec, config.base_seed, rep)
    records: dict = {}
    for estimator in config.estimators:
        gamma = _conditioned(_estimator_matrix(estimator, x, z), config.psd_mode)
        inits = {}
        for method in config.methods:
            kind = "spca" if method in ("tpower", "qtpm") else "power-method"
            if kind not in inits:
                inits[kind] = resolve_init(gamma, kind)
            init = inits[kind]
            for delta in config.grid_for(method):
                try:
                    res = _solve_grid_point(method, gamma, init, delta, config.qtpm_q)
                    metrics = support_metrics(model.theta1, res.vector)
                    outcome = _GridOutcome(
                        sin_angle=sin_angle(model.theta1, res.vector),
                        fpn=int(metrics.fpn),
                        fnn=int(metrics.fnn),
                        fpr=metrics.fpr,
                        fnr=metrics.fnr,
                        converged=res.converged,
                        excluded=False,
                    )
                except (AllZeroSolution, DegenerateIterate):
                    outcome = _GridOutcome(
                        sin_angle=float("nan"),
                        fpn=0,
                        fnn=0,
                        fpr=0.0,
                        fnr=1.0,
                        converged=False,
                        excluded=True,
                    )
                records[(method, estimator, float(delta))] = outcome
    return records


def _contaminate_seeded(x, spec: ContaminationSpec, base_seed: int, rep: int) -> np.ndarray:
    return contaminate_with_rng(x, spec, rng_from(base_seed, rep, 1))


def replicate_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run all replicates of one cell and aggregate oracle-tuned summaries.

    Deterministic given ``config.base_seed``: replicates use derived seeds
    and aggregation folds in replicate order, so any ``workers`` count
    produces identical output.
    """
    reps = range(config.replicates)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            all_records = list(pool.map(_run_replicate, [config] * config.replicates, reps))
    else:
        all_records = [_run_replicate(config, rep) for rep in reps]

    summaries = []
    rocs = {}
    exclusions = {}
    for method in config.methods:
        grid = config.grid_for(method)
        for estimator in config.estimators:
            flat = []
            excluded_total = 0
            for records in all_records:
                for delta in grid:
                    rec = records[(method, estimator, float(delta))]
                    if rec.excluded:
                        excluded_total += 1
                        continue
                    flat.append(
                        (
                            float(delta),
                            SupportMetrics(fpn=rec.fpn, fnn=rec.fnn, fpr=rec.fpr, fnr=rec.fnr),
                        )
                    )
            if not flat:
                raise InvalidInput(
                    f"every solve was excluded for method={method}, estimator={estimator}"
                )
            curve = roc_curve(flat) if len({d for d, _ in flat}) >= 2 else None
            delta_star = oracle_delta(flat, prefer=_sparser_direction(method))
            sins = []
            for records in all_records:
                rec = records[(method, estimator, delta_star)]
                if not rec.excluded:
                    sins.append(rec.sin_angle)
            sins_arr = np.asarray(sins)
            mean = float(np.mean(sins_arr))
            sd = float(np.std(sins_arr, ddof=1)) if sins_arr.size > 1 else 0.0
            summaries.append(
                ReplicationSummary(
                    method=method,
                    estimator=estimator,
                    scheme=config.scheme,
                    n=config.n,
                    r=config.r,
                    mean=mean,
                    sd=sd,
                    replicates=len(sins),
                    excluded=config.replicates - len(sins),
                    delta_star=delta_star,
                )
            )
            rocs[(method, estimator)] = curve
            exclusions[(method, estimator)] = excluded_total
    return ExperimentResult(
        config=config, summaries=tuple(summaries), rocs=rocs, exclusions=exclusions
    )


@dataclass(frozen=True)
class RateCheckRow:
    n: int
    mean_error: float
    sqrt_law: float
    ratio_to_law: float


@dataclass(frozen=True)
class RateCheckResult:
    """Empirical max-norm error of the latent-correlation estimate vs n."""

    d: int
    replicates: int
    rows: tuple

    def error_ratio(self, n_small: int, n_large: int) -> float:
        by_n = {row.n: row.mean_error for row in self.rows}
        return by_n[n_small] / by_n[n_large]


def rate_check(ns, d: int = 50, replicates: int = 200, base_seed: int = 0, s: int = 10) -> RateCheckResult:
    """Mean ``max |R_hat - Sigma0|`` on Gaussian data for each sample size.

    The error of the sine-transformed Spearman estimate should shrink like
    ``sqrt(log d / n)``; ``ratio_to_law`` divides the empirical mean by that
    law so a flat column indicates the expected scaling. Sample sizes must
    be increasing and satisfy ``n >= 21 / log(d) + 2``.
    """
    ns = [int(n) for n in ns]
    if sorted(ns) != ns or len(set(ns)) != len(ns):
        raise InvalidInput("sample sizes must be strictly increasing")
    n_min = 21.0 / math.log(d) + 2.0
    bad = [n for n in ns if n < n_min]
    if bad:
        raise InvalidInput(f"sample sizes {bad} below the required minimum {n_min:.1f}")
    model = synthesize_model(d, s)
    rows = []
    for i, n in enumerate(ns):
        errors = np.empty(replicates)
        for rep in range(replicates):
            z = sample_latent(model.sigma0, n, rng_from(base_seed, i, rep))
            est = spearman_correlation(z).matrix
            errors[rep] = np.max(np.abs(est - model.sigma0))
        law = math.sqrt(math.log(d) / n)
        mean_error = float(errors.mean())
        rows.append(
            RateCheckRow(n=n, mean_error=mean_error, sqrt_law=law, ratio_to_law=mean_error / law)
        )
    return RateCheckResult(d=d, replicates=replicates, rows=tuple(rows))
