import numpy as np
import pytest

from rankpca.errors import ConfigError, InvalidInput, InvalidVector
from rankpca.evaluate import (
    ExperimentConfig,
    SupportMetrics,
    default_grid,
    oracle_delta,
    rate_check,
    replicate_experiment,
    roc_curve,
    sin_angle,
    support_metrics,
)
from rankpca.ranks import spearman_correlation
from rankpca.simulate import rng_from, sample_latent, synthesize_model
from rankpca.solvers import SolverOptions, resolve_init, shift_to_psd, truncated_power


# ---------------------------------------------------------------------------
# sin angle
# ---------------------------------------------------------------------------

def test_sin_angle_sign_invariance(rng):
    e1 = np.zeros(4)
    e1[0] = 1.0
    assert sin_angle(e1, e1) == 0.0
    assert sin_angle(e1, -e1) == 0.0
    v = rng.normal(size=6)
    v /= np.linalg.norm(v)
    # normalized dot products carry ~1 ulp error, so sqrt gives ~1e-8
    assert sin_angle(v, v) <= 2e-8
    assert sin_angle(v, -v) <= 2e-8


def test_sin_angle_orthogonal():
    assert sin_angle([1.0, 0.0], [0.0, 1.0]) == 1.0


def test_sin_angle_three_four_five():
    v1 = np.array([1.0, 0.0])
    v2 = np.array([0.8, 0.6])
    assert sin_angle(v1, v2) == pytest.approx(0.6, abs=1e-15)


def test_sin_angle_symmetric(rng):
    a = rng.normal(size=5)
    a /= np.linalg.norm(a)
    b = rng.normal(size=5)
    b /= np.linalg.norm(b)
    assert sin_angle(a, b) == sin_angle(b, a) == sin_angle(-a, b)


def test_sin_angle_rejects_non_unit():
    with pytest.raises(InvalidVector):
        sin_angle([1.0, 1.0], [1.0, 0.0])


# ---------------------------------------------------------------------------
# support metrics
# ---------------------------------------------------------------------------

def _vec(support, d=100):
    v = np.zeros(d)
    v[list(support)] = 1.0
    return v


def test_support_metrics_mixed_case():
    truth = _vec(range(10))
    est = _vec(list(range(9)) + [10])
    m = support_metrics(truth, est, s=10, d=100)
    assert m.fpn == 1 and m.fnn == 1
    assert m.fpr == pytest.approx(1 / 90)
    assert m.fnr == pytest.approx(0.1)


def test_support_metrics_exact_recovery():
    truth = _vec(range(10))
    m = support_metrics(truth, truth)
    assert (m.fpn, m.fnn, m.fpr, m.fnr) == (0, 0, 0.0, 0.0)


def test_support_metrics_empty_estimate():
    truth = _vec(range(10))
    m = support_metrics(truth, np.zeros(100))
    assert m.fpr == 0.0 and m.fnr == 1.0


def test_support_metrics_validation():
    truth = _vec(range(10))
    with pytest.raises(InvalidInput):
        support_metrics(truth, truth, s=9)
    with pytest.raises(InvalidInput):
        support_metrics(np.zeros(100), truth)


# ---------------------------------------------------------------------------
# ROC curves
# ---------------------------------------------------------------------------

def _metrics(fpr, fnr):
    return SupportMetrics(fpn=0, fnn=0, fpr=fpr, fnr=fnr)


def test_roc_hand_aggregation():
    results = [
        (1.0, _metrics(0.1, 0.2)),
        (1.0, _metrics(0.3, 0.4)),
        (2.0, _metrics(0.0, 0.5)),
        (2.0, _metrics(0.2, 0.7)),
        (1.0, _metrics(0.2, 0.3)),
    ]
    curve = roc_curve(results)
    by_delta = {p.delta: p for p in curve.points}
    assert by_delta[1.0].fpr == pytest.approx(0.2)
    assert by_delta[1.0].tpr == pytest.approx(1 - 0.3)
    assert by_delta[2.0].fpr == pytest.approx(0.1)
    assert by_delta[2.0].tpr == pytest.approx(1 - 0.6)
    assert [p.fpr for p in curve.points] == sorted(p.fpr for p in curve.points)


def test_roc_perfect_recovery_degenerate():
    results = [(d, _metrics(0.0, 0.0)) for d in (1.0, 2.0, 3.0)]
    curve = roc_curve(results)
    assert curve.degenerate
    assert all(p.tpr == 1.0 and p.fpr == 0.0 for p in curve.points)


def test_roc_random_guess_near_diagonal(rng):
    d, s = 100, 10
    truth = _vec(range(s), d)
    results = []
    for delta in (1.0, 2.0):
        for _ in range(400):
            guess = _vec(rng.choice(d, size=s, replace=False), d)
            results.append((delta, support_metrics(truth, guess)))
    curve = roc_curve(results)
    for p in curve.points:
        assert abs(p.tpr - p.fpr) < 0.1


def test_roc_needs_two_deltas():
    with pytest.raises(InvalidInput):
        roc_curve([(1.0, _metrics(0.1, 0.1))])
    with pytest.raises(InvalidInput):
        roc_curve([])


# ---------------------------------------------------------------------------
# oracle tuning value
# ---------------------------------------------------------------------------

def test_oracle_delta_single():
    assert oracle_delta([(4.0, _metrics(0.5, 0.5))]) == 4.0


def test_oracle_delta_prefers_exact_recovery():
    results = [(1.0, _metrics(0.2, 0.1)), (2.0, _metrics(0.0, 0.0)), (3.0, _metrics(0.0, 0.4))]
    assert oracle_delta(results) == 2.0


def test_oracle_delta_three_point_path():
    results = [(1.0, _metrics(0.3, 0.0)), (2.0, _metrics(0.1, 0.0)), (3.0, _metrics(0.2, 0.0))]
    assert oracle_delta(results) == 2.0


def test_oracle_delta_tie_breaks():
    results = [(1.0, _metrics(0.1, 0.0)), (2.0, _metrics(0.1, 0.0))]
    assert oracle_delta(results, prefer="smaller") == 1.0
    assert oracle_delta(results, prefer="larger") == 2.0


# ---------------------------------------------------------------------------
# experiment config
# ---------------------------------------------------------------------------

def test_config_roundtrip():
    cfg = ExperimentConfig(
        scheme=2,
        n=50,
        d=30,
        r=0.05,
        methods=("tpower", "pmd"),
        estimators=("spearman",),
        replicates=4,
        base_seed=7,
        grids={"tpower": (2, 4, 6)},
        s=5,
    )
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again == cfg


def test_config_validation_reports_fields():
    with pytest.raises(ConfigError) as err:
        ExperimentConfig(scheme=3, n=1, d=4, r=2.0, methods=("nope",))
    fields = err.value.fields
    assert {"scheme", "n", "r", "methods"} <= set(fields)


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"scheme": 1, "n": 50, "d": 30, "bogus": 1})


def test_default_grids():
    assert default_grid("tpower", 100) == tuple(range(2, 41, 2))
    pmd = default_grid("pmd", 100)
    assert len(pmd) == 20 and pmd[0] == 1.0 and pmd[-1] == pytest.approx(10.0)
    spca = default_grid("spca", 100)
    assert len(spca) == 20
    qtpm = default_grid("qtpm", 100, q=0.5)
    assert all(v > 1 for v in qtpm)


# ---------------------------------------------------------------------------
# replication harness
# ---------------------------------------------------------------------------

SMALL = dict(
    scheme=1,
    n=60,
    d=30,
    r=0.0,
    methods=("tpower",),
    estimators=("spearman", "oracle"),
    replicates=2,
    base_seed=101,
    grids={"tpower": (4, 10, 16)},
)


def test_replicate_experiment_hand_aggregation():
    cfg = ExperimentConfig(**SMALL)
    res = replicate_experiment(cfg)
    summary = res.summary("tpower", "spearman")
    # recompute the two replicates by hand at the reported oracle delta
    model = synthesize_model(cfg.d, cfg.s, spikes=cfg.model_spikes)
    sins = []
    for rep in range(2):
        z = sample_latent(model.sigma0, cfg.n, rng_from(cfg.base_seed, rep, 0))
        gamma, _ = shift_to_psd(spearman_correlation(z).matrix)
        init = resolve_init(gamma, "spca")
        sol = truncated_power(gamma, SolverOptions(q=0.0, radius=summary.delta_star, init=init))
        sins.append(sin_angle(model.theta1, sol.vector))
    assert summary.mean == pytest.approx(np.mean(sins), abs=1e-12)
    assert summary.sd == pytest.approx(np.std(sins, ddof=1), abs=1e-12)
    assert summary.replicates == 2


def test_replicate_experiment_deterministic():
    cfg = ExperimentConfig(**SMALL)
    a = replicate_experiment(cfg)
    b = replicate_experiment(cfg)
    assert a.summaries == b.summaries


def test_replicate_experiment_parallel_matches_serial():
    cfg = ExperimentConfig(**SMALL)
    serial = replicate_experiment(cfg, workers=1)
    parallel = replicate_experiment(cfg, workers=2)
    assert serial.summaries == parallel.summaries
    for key in serial.rocs:
        assert serial.rocs[key] == parallel.rocs[key]


def test_replicate_experiment_oracle_estimator_uses_latent():
    # scheme 2 with heavy transforms: the latent-data baseline must be
    # unaffected by the transforms, hence match a scheme-1 oracle run
    base = dict(SMALL, estimators=("oracle",))
    s1 = replicate_experiment(ExperimentConfig(**dict(base, scheme=1))).summary("tpower", "oracle")
    s2 = replicate_experiment(ExperimentConfig(**dict(base, scheme=2))).summary("tpower", "oracle")
    assert (s1.mean, s1.sd, s1.delta_star) == (s2.mean, s2.sd, s2.delta_star)


def test_spearman_pipeline_invariance_end_to_end(rng):
    """Rescaling or monotone-transforming columns leaves the whole
    Spearman pipeline output bitwise unchanged."""
    model = synthesize_model(30)
    x = sample_latent(model.sigma0, 50, rng_from(3, 0))

    def pipeline_theta(data):
        gamma, _ = shift_to_psd(spearman_correlation(data).matrix)
        init = resolve_init(gamma, "spca")
        return truncated_power(gamma, SolverOptions(q=0.0, radius=10, init=init)).vector

    base = pipeline_theta(x)
    scaled = x.copy()
    scaled[:, 3] *= 41.7
    assert np.array_equal(pipeline_theta(scaled), base)
    warped = x.copy()
    warped[:, 0] = np.exp(warped[:, 0])
    warped[:, 7] = warped[:, 7] ** 3 + 2.0 * warped[:, 7]
    assert np.array_equal(pipeline_theta(warped), base)


def test_replicate_experiment_all_methods():
    cfg = ExperimentConfig(
        scheme=2,
        n=60,
        d=30,
        r=0.0,
        methods=("tpower", "qtpm", "pmd", "spca"),
        estimators=("spearman",),
        replicates=3,
        base_seed=77,
        s=5,
    )
    res = replicate_experiment(cfg)
    for method in cfg.methods:
        summary = res.summary(method, "spearman")
        assert 0.0 <= summary.mean <= 1.0
        assert summary.replicates == 3
        assert res.rocs[(method, "spearman")] is not None


def test_replicate_experiment_excludes_degenerate_solves():
    # an l1 penalty far above the collapse threshold makes every spca solve
    # degenerate at that grid point; those solves must be excluded and counted
    cfg = ExperimentConfig(
        scheme=1,
        n=60,
        d=30,
        r=0.0,
        methods=("spca",),
        estimators=("spearman",),
        replicates=2,
        base_seed=6,
        s=5,
        grids={"spca": (0.05, 50.0)},
    )
    res = replicate_experiment(cfg)
    assert res.exclusions[("spca", "spearman")] == 2  # one bad grid point per replicate
    summary = res.summary("spca", "spearman")
    assert summary.delta_star == 0.05
    assert summary.excluded == 0  # the oracle point itself never collapsed


def test_replicate_experiment_project_mode():
    # full max-norm projection as the conditioning step (small instance:
    # the projection is orders of magnitude slower than the default shift)
    cfg = ExperimentConfig(
        scheme=1,
        n=40,
        d=12,
        r=0.1,
        methods=("tpower",),
        estimators=("spearman",),
        replicates=2,
        base_seed=21,
        s=3,
        psd_mode="project",
        grids={"tpower": (3, 6)},
    )
    res = replicate_experiment(cfg)
    summary = res.summary("tpower", "spearman")
    assert 0.0 <= summary.mean <= 1.0
    assert summary.replicates == 2


def test_oracle_gap_shrinks_with_n():
    # the latent-data baseline and the rank-based estimate converge to the
    # same error level as n grows
    gaps = []
    for n in (60, 240):
        cfg = ExperimentConfig(
            scheme=2,
            n=n,
            d=30,
            r=0.0,
            methods=("tpower",),
            estimators=("spearman", "oracle"),
            replicates=30,
            base_seed=4,
            s=5,
            grids={"tpower": (3, 5, 7, 9)},
        )
        res = replicate_experiment(cfg)
        gaps.append(
            abs(res.summary("tpower", "spearman").mean - res.summary("tpower", "oracle").mean)
        )
    assert gaps[1] < gaps[0]


# ---------------------------------------------------------------------------
# rate check
# ---------------------------------------------------------------------------

def test_rate_check_structure_and_scaling():
    res = rate_check([32, 128], d=20, replicates=40, base_seed=2)
    assert [row.n for row in res.rows] == [32, 128]
    ratio = res.error_ratio(32, 128)
    assert 1.2 < ratio < 3.2  # sqrt(128/32) = 2 ideally
    assert res.rows[0].mean_error > res.rows[1].mean_error


def test_rate_check_theory_bound_vacuous_at_desk_scale():
    # the 8*pi*sqrt(log d / n) concentration bound exceeds 2, the largest
    # possible max-norm gap between two correlation-scale matrices, at
    # these sizes; every observed error trivially sits below it
    res = rate_check([125, 500], d=50, replicates=20, base_seed=1)
    for row in res.rows:
        bound = 8.0 * np.pi * row.sqrt_law
        assert bound > 2.0
        assert row.mean_error <= bound


def test_sin_angle_error_follows_sqrt_law():
    # with the support stable, the oracle-tuned angle shrinks ~ 1/sqrt(n)
    means = []
    for n in (200, 800):
        cfg = ExperimentConfig(
            scheme=1,
            n=n,
            d=100,
            r=0.0,
            methods=("tpower",),
            estimators=("spearman",),
            replicates=30,
            base_seed=0,
            grids={"tpower": (10,)},
        )
        means.append(replicate_experiment(cfg).summary("tpower", "spearman").mean)
    assert 1.4 <= means[0] / means[1] <= 2.8


def test_rate_check_validates_inputs():
    with pytest.raises(InvalidInput):
        rate_check([128, 32], d=20, replicates=5)
    with pytest.raises(InvalidInput):
        rate_check([4, 128], d=20, replicates=5)
