"""Command-line interface.

Subcommands: ``estimate`` (correlation/covariance estimation from a data
CSV), ``project-psd`` (max-norm PSD projection of a matrix CSV),
``sparse-pca`` (sparse leading eigenvectors of a matrix CSV), ``simulate``
(synthetic Gaussian-copula samples), ``experiment`` (the replicated
simulation study) and ``rate-check`` (error-scaling diagnostics).

Flag values override config-file values, which override documented
defaults. Every run writes a ``*.manifest.json`` next to its primary
output recording the resolved configuration, seeds and tool version; data
files contain no timestamps, so identical configurations reproduce
identical bytes. Exit codes: 0 success, 2 configuration error, 3 numerical
error (the failing error class is named on stderr; ``--json-errors``
switches stderr to one JSON object per failure).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, RankPCAError
from .evaluate import ExperimentConfig, rate_check, replicate_experiment
from .matrixio import (
    manifest_path,
    read_json,
    read_matrix_csv,
    write_estimate_json,
    write_json,
    write_matrix_csv,
    write_table_csv,
)
from .psd import project_psd_maxnorm
from .ranks import (
    normal_scores,
    pearson_correlation,
    spearman_correlation,
    spearman_covariance,
    spearman_rho_matrix,
)
from .simulate import (
    ContaminationSpec,
    TransformSet,
    contaminate_with_rng,
    rng_from,
    sample_latent,
    synthesize_model,
)
from .solvers import SolverOptions, top_m_eigenvectors

ENV_OUTPUT_DIR = "RANKPCA_OUTPUT_DIR"

ESTIMATE_METHODS = ("pearson", "spearman", "spearman-raw", "spearman-cov")


def _output_dir(args) -> Path:
    base = args.output_dir or os.environ.get(ENV_OUTPUT_DIR) or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _resolve(args, key, default=None):
    """Flag > config file > default. Config keys may use '-' or '_'."""
    attr = key.replace("-", "_")
    value = getattr(args, attr, None)
    if value is not None:
        return value
    data = getattr(args, "_config_data", None) or {}
    for candidate in (key, attr, key.replace("_", "-")):
        if candidate in data:
            return data[candidate]
    return default


def _load_config_file(args) -> None:
    args._config_data = {}
    if getattr(args, "config", None):
        data = read_json(args.config)
        if not isinstance(data, dict):
            raise ConfigError({"config": "config file must hold a JSON object"})
        args._config_data = data


def _manifest(args, command: str, resolved: dict, output) -> None:
    write_json(
        manifest_path(output),
        {"command": command, "config": resolved, "version": __version__},
    )


def _cmd_estimate(args) -> int:
    method = _resolve(args, "method", "spearman")
    if method not in ESTIMATE_METHODS:
        raise ConfigError({"method": f"must be one of {ESTIMATE_METHODS}, got {method}"})
    data = read_matrix_csv(args.input, header=bool(_resolve(args, "header", False)))
    if _resolve(args, "preprocess", "none") == "normal-scores":
        data = normal_scores(data)
    if method == "pearson":
        estimate = pearson_correlation(data)
    elif method == "spearman":
        estimate = spearman_correlation(data)
    elif method == "spearman-raw":
        estimate = spearman_rho_matrix(data)
    else:
        estimate = spearman_covariance(data)
    fmt = _resolve(args, "format", "csv")
    out = Path(args.output)
    if fmt == "json":
        write_estimate_json(out, estimate)
    else:
        write_matrix_csv(out, estimate.matrix)
    resolved = {
        "method": method,
        "input": str(args.input),
        "output": str(out),
        "format": fmt,
        "header": bool(_resolve(args, "header", False)),
        "preprocess": _resolve(args, "preprocess", "none"),
        "kind": estimate.kind,
    }
    _manifest(args, "estimate", resolved, out)
    return 0


def _cmd_project_psd(args) -> int:
    matrix = read_matrix_csv(args.input)
    eig_tol = float(_resolve(args, "eig-tol", 1e-8))
    dist_tol = float(_resolve(args, "dist-tol", 1e-6))
    max_iters = int(_resolve(args, "max-iters", 200))
    result = project_psd_maxnorm(matrix, eig_tol=eig_tol, dist_tol=dist_tol, max_iters=max_iters)
    out = Path(args.output)
    write_matrix_csv(out, result.matrix)
    sidecar = out.with_name(out.stem + ".meta.json")
    write_json(
        sidecar,
        {
            "achieved_distance": result.achieved_distance,
            "min_eigenvalue": result.min_eigenvalue,
            "iterations": result.iterations,
            "converged": result.converged,
        },
    )
    resolved = {
        "input": str(args.input),
        "output": str(out),
        "eig_tol": eig_tol,
        "dist_tol": dist_tol,
        "max_iters": max_iters,
    }
    _manifest(args, "project-psd", resolved, out)
    return 0


def _cmd_sparse_pca(args) -> int:
    matrix = read_matrix_csv(args.input)
    method = _resolve(args, "method", "tpower")
    q = float(_resolve(args, "q", 0.0))
    radius = _resolve(args, "radius")
    m = int(_resolve(args, "m", 1))
    shift = float(_resolve(args, "shift", 0.0))
    init = _resolve(args, "init")
    opts = SolverOptions(
        q=q,
        radius=float(radius) if radius is not None else None,
        shift=shift,
        auto_shift=bool(_resolve(args, "auto-shift", False)),
        init=init,
    )
    delta = _resolve(args, "delta")
    delta1 = _resolve(args, "delta1")
    delta2 = _resolve(args, "delta2")
    results = top_m_eigenvectors(
        matrix,
        m,
        method=method,
        opts=opts,
        delta=float(delta) if delta is not None else None,
        delta1=float(delta1) if delta1 is not None else None,
        delta2=float(delta2) if delta2 is not None else None,
    )
    out = Path(args.output)
    payload = {
        "method": method,
        "components": [
            {
                "vector": res.vector.tolist(),
                "support": res.support.tolist(),
                "objective": res.objective,
                "iterations": res.iterations,
                "converged": res.converged,
                "objective_trace": res.objective_trace.tolist(),
            }
            for res in results
        ],
    }
    write_json(out, payload)
    resolved = {
        "input": str(args.input),
        "output": str(out),
        "method": method,
        "q": q,
        "radius": radius,
        "delta": delta,
        "delta1": delta1,
        "delta2": delta2,
        "m": m,
        "shift": shift,
        "auto_shift": bool(_resolve(args, "auto-shift", False)),
        "init": init,
    }
    _manifest(args, "sparse-pca", resolved, out)
    return 0


def _cmd_simulate(args) -> int:
    scheme = int(_resolve(args, "scheme", 1))
    n = int(_resolve(args, "n", 100))
    d = int(_resolve(args, "d", 100))
    r = float(_resolve(args, "r", 0.0))
    seed = int(_resolve(args, "seed", 0))
    s = int(_resolve(args, "s", 10))
    if scheme not in (1, 2):
        raise ConfigError({"scheme": f"must be 1 or 2, got {scheme}"})
    spikes_value = _resolve(args, "spikes", "4,1")
    spikes = tuple(
        float(v) for v in (spikes_value.split(",") if isinstance(spikes_value, str) else spikes_value)
    )
    if len(spikes) != 2:
        raise ConfigError({"spikes": f"expected two comma-separated values, got {spikes_value!r}"})
    model = synthesize_model(d, s, spikes=spikes)
    transforms = TransformSet.identity(d) if scheme == 1 else TransformSet.cycled(d)
    z = sample_latent(model.sigma0, n, rng_from(seed, 0))
    x = transforms.apply(z)
    positions = None
    if r > 0.0:
        spec = ContaminationSpec(rate=r)
        x, positions = contaminate_with_rng(x, spec, rng_from(seed, 1), collect_positions=True)
    out = Path(args.output)
    write_matrix_csv(out, x)
    resolved = {
        "scheme": scheme,
        "n": n,
        "d": d,
        "r": r,
        "seed": seed,
        "s": s,
        "spikes": list(spikes),
        "transforms": list(transforms.ids),
        "model": {
            "covariance_eigenvalues_top2": model.sigma_eigenvalues[:2].tolist(),
            "correlation_eigenvalues_top2": model.sigma0_eigenvalues[:2].tolist(),
            "support1": model.support1.tolist(),
            "support2": model.support2.tolist(),
        },
    }
    if args.store_positions and positions is not None:
        resolved["contamination_positions"] = positions
    _manifest(args, "simulate", resolved, out)
    return 0


EXPERIMENT_CONFIG_KEYS = (
    "scheme",
    "n",
    "d",
    "r",
    "replicates",
    "base_seed",
    "qtpm_q",
    "psd_mode",
    "contamination_magnitude",
    "s",
    "grids",
    "model_spikes",
    "methods",
    "estimators",
    "workers",
)


def _cmd_experiment(args) -> int:
    known = {k.replace("-", "_") for k in EXPERIMENT_CONFIG_KEYS}
    unknown = {k for k in getattr(args, "_config_data", {}) if k.replace("-", "_") not in known}
    if unknown:
        raise ConfigError({k: "unknown experiment config field" for k in sorted(unknown)})
    fields = {}
    for key in (
        "scheme",
        "n",
        "d",
        "r",
        "replicates",
        "base_seed",
        "qtpm_q",
        "psd_mode",
        "contamination_magnitude",
        "s",
        "grids",
        "model_spikes",
    ):
        value = _resolve(args, key)
        if value is not None:
            fields[key] = value
    methods = _resolve(args, "methods")
    if methods is not None:
        fields["methods"] = tuple(methods.split(",")) if isinstance(methods, str) else tuple(methods)
    estimators = _resolve(args, "estimators")
    if estimators is not None:
        fields["estimators"] = (
            tuple(estimators.split(",")) if isinstance(estimators, str) else tuple(estimators)
        )
    missing = [key for key in ("scheme", "n", "d") if key not in fields]
    if missing:
        raise ConfigError({key: "required (flag or config file)" for key in missing})
    # a config file may supply lists for n and/or r: the full factorial is
    # run cell by cell into one combined table
    n_values = fields.pop("n")
    r_values = fields.pop("r", 0.0)
    n_values = list(n_values) if isinstance(n_values, (list, tuple)) else [n_values]
    r_values = list(r_values) if isinstance(r_values, (list, tuple)) else [r_values]
    workers = int(_resolve(args, "workers", os.cpu_count() or 1))

    rows = []
    cells = []
    outdir = _output_dir(args)
    factorial = len(n_values) * len(r_values) > 1
    for n in n_values:
        for r in r_values:
            config = ExperimentConfig(n=n, r=r, **fields)
            result = replicate_experiment(config, workers=workers)
            rows.extend(result.table_rows())
            for (method, estimator), curve in result.rocs.items():
                if curve is None:
                    continue
                suffix = f"_n{n}_r{r}" if factorial else ""
                roc_path = outdir / f"roc_{method}_{estimator}{suffix}.csv"
                write_table_csv(
                    roc_path,
                    [{"delta": p.delta, "fpr": p.fpr, "tpr": p.tpr} for p in curve.points],
                    ["delta", "fpr", "tpr"],
                )
            cell = config.to_dict()
            cell["resolved_grids"] = {m: list(config.grid_for(m)) for m in config.methods}
            cell["exclusions"] = {f"{m}/{e}": c for (m, e), c in result.exclusions.items()}
            cells.append(cell)

    summary_path = outdir / "summary.csv"
    write_table_csv(
        summary_path,
        rows,
        ["method", "n", "r", "estimator", "mean", "sd", "replicates", "excluded", "delta_star"],
    )
    _manifest(args, "experiment", {"workers": workers, "cells": cells}, summary_path)
    return 0


def _cmd_rate_check(args) -> int:
    ns_value = _resolve(args, "ns", "125,500")
    ns = [int(v) for v in (ns_value.split(",") if isinstance(ns_value, str) else ns_value)]
    d = int(_resolve(args, "d", 50))
    replicates = int(_resolve(args, "replicates", 200))
    seed = int(_resolve(args, "seed", 0))
    result = rate_check(ns, d=d, replicates=replicates, base_seed=seed)
    outdir = _output_dir(args)
    out = outdir / "rate_check.csv"
    write_table_csv(
        out,
        [
            {
                "n": row.n,
                "mean_error": row.mean_error,
                "sqrt_law": row.sqrt_law,
                "ratio_to_law": row.ratio_to_law,
            }
            for row in result.rows
        ],
        ["n", "mean_error", "sqrt_law", "ratio_to_law"],
    )
    resolved = {"ns": ns, "d": d, "replicates": replicates, "seed": seed}
    _manifest(args, "rate-check", resolved, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankpca",
        description="Rank-based sparse PCA: latent-correlation estimation, sparse "
        "eigenvector solvers, PSD projection and a simulation harness.",
    )
    parser.add_argument("--version", action="version", version=f"rankpca {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--json-errors", action="store_true", help="emit JSON error objects on stderr")
        p.add_argument("--output-dir", help=f"output directory (default: ${ENV_OUTPUT_DIR} or .)")

    p = sub.add_parser("estimate", help="estimate a correlation/covariance matrix from data CSV")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--method", choices=ESTIMATE_METHODS, default=None,
                   help="default: spearman (sine-transformed latent correlation)")
    p.add_argument("--format", choices=("csv", "json"), default=None, help="default: csv")
    p.add_argument("--header", action="store_const", const=True, default=None,
                   help="input CSV has a header row")
    p.add_argument("--preprocess", choices=("none", "normal-scores"), default=None)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("project-psd", help="max-norm projection of a matrix CSV onto the PSD cone")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--eig-tol", type=float, default=None, help="default: 1e-8")
    p.add_argument("--dist-tol", type=float, default=None, help="default: 1e-6")
    p.add_argument("--max-iters", type=int, default=None, help="default: 200")
    p.set_defaults(func=_cmd_project_psd)

    p = sub.add_parser("sparse-pca", help="sparse leading eigenvectors of a matrix CSV")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="output JSON path")
    p.add_argument("--method", choices=("tpower", "qtpm", "pmd", "spca"), default=None)
    p.add_argument("--q", type=float, default=None, help="lq exponent (default 0)")
    p.add_argument("--radius", type=float, default=None, help="k when q=0, lq radius when q>0")
    p.add_argument("--delta", type=float, default=None, help="pmd l1 budget")
    p.add_argument("--delta1", type=float, default=None, help="spca ridge penalty")
    p.add_argument("--delta2", type=float, default=None, help="spca l1 penalty")
    p.add_argument("--m", type=int, default=None, help="number of components (default 1)")
    p.add_argument("--shift", type=float, default=None, help="diagonal shift (default 0)")
    p.add_argument("--auto-shift", action="store_const", const=True, default=None,
                   help="shift indefinite input to the PSD cone automatically")
    p.add_argument("--init", choices=("power-method", "spca"), default=None)
    p.set_defaults(func=_cmd_sparse_pca)

    p = sub.add_parser("simulate", help="sample the synthetic Gaussian-copula model")
    common(p)
    p.add_argument("--scheme", type=int, choices=(1, 2), default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--r", type=float, default=None, help="contamination rate (default 0)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--s", type=int, default=None, help="support size per spike (default 10)")
    p.add_argument("--spikes", default=None,
                   help="spike magnitudes a1,a2 of I + a1*u1*u1' + a2*u2*u2' (default 4,1; "
                   "the experiment harness uses 5,2)")
    p.add_argument("--output", required=True)
    p.add_argument("--store-positions", action="store_true",
                   help="record contamination positions in the manifest")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("experiment", help="replicated simulation study (table + ROC outputs)")
    common(p)
    p.add_argument("--scheme", type=int, choices=(1, 2), default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--replicates", type=int, default=None, help="default: 100")
    p.add_argument("--base-seed", type=int, default=None, help="default: 0")
    p.add_argument("--methods", default=None, help="comma list from tpower,qtpm,pmd,spca")
    p.add_argument("--estimators", default=None, help="comma list from pearson,spearman,oracle")
    p.add_argument("--qtpm-q", type=float, default=None)
    p.add_argument("--psd-mode", choices=("shift", "project", "none"), default=None,
                   help="conditioning for estimator matrices (default: shift)")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: available parallelism)")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("rate-check", help="error-scaling diagnostics of the latent-correlation estimate")
    common(p)
    p.add_argument("--ns", default=None, help="comma list of sample sizes (default 125,500)")
    p.add_argument("--d", type=int, default=None, help="default: 50")
    p.add_argument("--replicates", type=int, default=None, help="default: 200")
    p.add_argument("--seed", type=int, default=None, help="default: 0")
    p.set_defaults(func=_cmd_rate_check)

    return parser


def _report_error(args, exc: Exception, exit_code: int) -> int:
    use_json = bool(getattr(args, "json_errors", False))
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        payload["fields"] = exc.fields
    if use_json:
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    else:
        print(f"rankpca: {type(exc).__name__}: {exc}", file=sys.stderr)
    return exit_code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _load_config_file(args)
        return args.func(args)
    except ConfigError as exc:
        return _report_error(args, exc, 2)
    except RankPCAError as exc:
        return _report_error(args, exc, 3)
    except FileNotFoundError as exc:
        return _report_error(args, exc, 2)


if __name__ == "__main__":
    sys.exit(main())
