"""Batch experiment drivers: CSV/JSON emitters around the estimation core.

Every driver is deterministic given its seed.  CSV payloads carry no
timestamps; wall-clock metadata lives only in the .meta.json sidecar, so a
rerun with the same inputs is byte-identical on the CSV side.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .bootstrap import (CltRateInputs, DataMatrix, clt_rate, run_bootstrap)
from .bounds import (ALL_BOUNDS, BoundReport, CorrThresholdBound, Inapplicable,
                     McConfig, bound_report)
from .cov import CovSpec, Partition, check_conditions, rho_bar
from .designs import DesignConfig, gen_design
from .errors import BadConfig, ConditionFails, IoError, MaxgapError
from .levy import DEFAULT_GRID, LevyEstimate, expected_max_abs, levy_curve, levy_hat
from .sampling import max_diff, sample

DEFAULT_EPSILONS = (0.01, 0.02, 0.05, 0.1, 0.2)
K0_SWEEP_P = (25, 30, 40, 60, 80, 120)


def _fmt(x) -> str:
    """One CSV cell; floats at 17 significant digits so reruns match bitwise."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


@dataclass(frozen=True)
class RunManifest:
    """Provenance sidecar for one emitted file."""

    command: str
    seed: int
    config: dict
    columns: tuple[str, ...]
    n_rows: int
    outputs: tuple[str, ...]
    created: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def write(self, path: str) -> None:
        payload = {
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "columns": list(self.columns),
            "n_rows": self.n_rows,
            "outputs": list(self.outputs),
            "created": self.created,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def write_csv(path: str, columns, rows, *, command: str, seed: int, config: dict) -> str:
    columns = tuple(columns)
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(",".join(columns) + "\n")
            for row in rows:
                cells = [_fmt(row[c]) for c in columns]
                fh.write(",".join(cells) + "\n")
        manifest = RunManifest(command=command, seed=seed, config=config,
                               columns=columns, n_rows=len(rows),
                               outputs=(os.path.basename(path),))
        manifest.write(path + ".meta.json")
    except OSError as err:
        raise IoError(f"cannot write {path}: {err}") from err
    return path


def levy_sweep(spec: CovSpec, part: Partition, epsilons, n_rep: int, seed: int,
               grid_points: int = DEFAULT_GRID, n_threads: int = 1) -> list[LevyEstimate]:
    """Sample once, then estimate the concentration at each epsilon."""
    batch = sample(spec, n_rep, seed, n_threads=n_threads)
    diffs = max_diff(batch, part)
    return levy_curve(diffs, epsilons, grid_points=grid_points)


def run_levy_experiment(cfg: DesignConfig, epsilons=DEFAULT_EPSILONS, n_rep: int = 2000,
                        grid_points: int = DEFAULT_GRID, seed: int | None = None,
                        out_dir: str = ".", n_threads: int = 1) -> tuple[str, list[dict]]:
    """Concentration-vs-epsilon table for one design."""
    seed = cfg.seed if seed is None else int(seed)
    spec, part = gen_design(cfg)
    estimates = levy_sweep(spec, part, sorted(float(e) for e in epsilons),
                           n_rep, seed, grid_points, n_threads)
    sigma_hat = float(np.mean(spec.sds))
    rbar = rho_bar(spec, part)
    scale = math.sqrt(math.log(spec.p)) / sigma_hat
    rows = [{
        "design_id": cfg.design_id(),
        "p": spec.p,
        "epsilon": est.epsilon,
        "norm_eps": est.epsilon * scale,
        "levy_hat": est.value,
        "se": est.se_hint,
        "n_rep": est.n_rep,
        "rho_bar": rbar,
    } for est in estimates]
    path = os.path.join(out_dir, f"levy_{cfg.design_id()}.csv")
    write_csv(path, rows[0].keys(), rows, command="levy", seed=seed,
              config=cfg.to_json_dict())
    return path, rows


_RATIO_COLS = {
    "homogeneous": "ratio_homogeneous",
    "corr_threshold": "ratio_corr_threshold",
    "heterogeneous": "ratio_heterogeneous",
    "conditional": "ratio_conditional",
    "baseline": "ratio_baseline",
    "single_max": "ratio_single_max",
}

COMPARE_COLUMNS = ("design_id", "p", "epsilon", "levy_hat", "se", "ratio_empirical",
                   "ratio_homogeneous", "ratio_corr_threshold", "ratio_heterogeneous",
                   "ratio_conditional", "ratio_baseline", "ratio_single_max",
                   "lower_bound", "inapplicable")


def compare_row(cfg: DesignConfig, est: LevyEstimate, report: BoundReport,
                p: int) -> dict:
    """Flatten one bound report next to the matching empirical estimate.

    Bounds are reported as per-unit-epsilon ratios so rows at different
    epsilons are comparable; the additive omega term of the correlation
    threshold bound is folded into its ratio.
    """
    eps = report.epsilon
    row = {c: None for c in COMPARE_COLUMNS}
    row.update(design_id=cfg.design_id(), p=p, epsilon=eps, levy_hat=est.value,
               se=est.se_hint, ratio_empirical=est.value / eps)
    flagged = []

    def put(col: str, name: str, value) -> None:
        if value is None:
            return
        if isinstance(value, Inapplicable):
            flagged.append(f"{name}:{value.reason}")
            return
        if isinstance(value, CorrThresholdBound):
            value = value.value
        row[col] = value / eps

    put("ratio_homogeneous", "homogeneous", report.homogeneous)
    put("ratio_corr_threshold", "corr_threshold", report.corr_threshold)
    put("ratio_heterogeneous", "heterogeneous", report.heterogeneous)
    put("ratio_conditional", "conditional", report.conditional)
    put("ratio_baseline", "baseline", report.baseline_min_eig)
    sm = [v for v in (report.single_max_a, report.single_max_b)
          if v is not None and not isinstance(v, Inapplicable)]
    if sm:
        row["ratio_single_max"] = min(sm) / eps
    elif isinstance(report.single_max_a, Inapplicable):
        flagged.append(f"single_max:{report.single_max_a.reason}")
    if report.lower_exchangeable is not None:
        row["lower_bound"] = report.lower_exchangeable.value
    row["inapplicable"] = ";".join(flagged)
    return row


def run_bounds_compare(cfg: DesignConfig, epsilons=(0.05,), n_rep: int = 2000,
                       n_mc: int | None = None, grid_points: int = DEFAULT_GRID,
                       seed: int | None = None, out_dir: str = ".",
                       which=ALL_BOUNDS, n_threads: int = 1,
                       ) -> tuple[str, list[dict], list[BoundReport]]:
    """Empirical concentration against every requested bound, one row per epsilon."""
    seed = cfg.seed if seed is None else int(seed)
    eps_list = [float(e) for e in (epsilons if np.iterable(epsilons) else (epsilons,))]
    spec, part = gen_design(cfg)
    batch = sample(spec, n_rep, seed, n_threads=n_threads)
    diffs = max_diff(batch, part)
    mc = McConfig(n_mc=int(n_mc), seed=seed) if n_mc is not None else McConfig(seed=seed)
    overlap = cfg.overlap_k if cfg.kind == "exchangeable_overlap" else None
    rows, reports = [], []
    for eps in eps_list:
        est = levy_hat(diffs, eps, grid_points=grid_points)
        report = bound_report(spec, part, eps, mc=mc, which=which, overlap_k=overlap)
        rows.append(compare_row(cfg, est, report, spec.p))
        reports.append(report)
    path = os.path.join(out_dir, f"bounds_{cfg.design_id()}.csv")
    write_csv(path, COMPARE_COLUMNS, rows, command="bounds-compare", seed=seed,
              config=cfg.to_json_dict())
    return path, rows, reports


SCALING_KINDS = ("rho_sweep_fullrank", "rho_sweep_lowrank", "k0_sweep")


def run_scaling_study(kind: str, out_dir: str = ".", seed: int = 0,
                      p: int = 100, d: int | None = None, n_points: int = 100,
                      rho_min: float = 0.9, rho_max: float = 0.99,
                      n_rep: int = 500, epsilon: float = 0.05,
                      grid_points: int = DEFAULT_GRID, k0: int = 20,
                      p_list=K0_SWEEP_P, n_threads: int = 1) -> tuple[str, list[dict]]:
    """Scaling tables: concentration against the correlation gap or block size.

    rho_sweep_fullrank walks equicorrelated designs over [rho_min, rho_max];
    rho_sweep_lowrank redraws a low-rank factor per point so rho_bar moves on
    its own; k0_sweep grows the ambient dimension at a fixed split size.
    The rho tables carry the 1/sqrt(1-rho_bar) and 1/(1-rho_bar) regressors.
    """
    if kind not in SCALING_KINDS:
        raise BadConfig(f"unknown scaling kind {kind!r}; expected one of {SCALING_KINDS}")
    rows = []
    if kind == "rho_sweep_fullrank":
        if not (-1.0 < rho_min <= rho_max < 1.0):
            raise BadConfig(f"need -1 < rho_min <= rho_max < 1, got [{rho_min}, {rho_max}]")
        for i, rho in enumerate(np.linspace(rho_min, rho_max, n_points)):
            cfg = DesignConfig(kind="fullrank_equicorr", p=p, rho=float(rho), seed=seed)
            rows.append(_scaling_row(kind, cfg, epsilon, n_rep, seed + i,
                                     grid_points, n_threads))
    elif kind == "rho_sweep_lowrank":
        for i in range(n_points):
            cfg = DesignConfig(kind="homog_lowrank", p=p, d=d, seed=seed + i)
            rows.append(_scaling_row(kind, cfg, epsilon, n_rep, seed + i,
                                     grid_points, n_threads))
    else:
        for i, pi in enumerate(p_list):
            cfg = DesignConfig(kind="k0_split", p=int(pi), k0=k0, seed=seed)
            rows.append(_scaling_row(kind, cfg, epsilon, n_rep, seed + i,
                                     grid_points, n_threads))
    config = {"kind": kind, "p": p, "d": d, "n_points": n_points, "rho_min": rho_min,
              "rho_max": rho_max, "n_rep": n_rep, "epsilon": epsilon, "k0": k0,
              "p_list": list(p_list)}
    path = os.path.join(out_dir, f"scaling_{kind}.csv")
    write_csv(path, rows[0].keys(), rows, command="scaling", seed=seed, config=config)
    return path, rows


def _scaling_row(kind: str, cfg: DesignConfig, epsilon: float, n_rep: int, seed: int,
                 grid_points: int, n_threads: int) -> dict:
    spec, part = gen_design(cfg)
    batch = sample(spec, n_rep, seed, n_threads=n_threads)
    est = levy_hat(max_diff(batch, part), epsilon, grid_points=grid_points)
    rbar = rho_bar(spec, part)
    row = {
        "kind": kind,
        "design_id": cfg.design_id(),
        "p": spec.p,
        "k0": cfg.k0,
        "rho": cfg.rho,
        "rho_bar": rbar,
        "epsilon": epsilon,
        "levy_hat": est.value,
        "se": est.se_hint,
        "n_rep": est.n_rep,
        "inv_sqrt_gap": None,
        "inv_gap": None,
    }
    if rbar < 1.0:
        row["inv_sqrt_gap"] = 1.0 / math.sqrt(1.0 - rbar)
        row["inv_gap"] = 1.0 / (1.0 - rbar)
    return row


def run_bootstrap_demo(data: DataMatrix, part: Partition, b_reps: int = 2000,
                       seed: int = 0, multiplier: str = "gaussian",
                       out_path: str | None = None, n_mc: int = 20000) -> dict:
    """Argmax-probability bootstrap on observed rows, plus a rate diagnostic.

    The diagnostic plugs the sample covariance and a crude bounded-envelope
    estimate of b_n into the coupling-rate formula; it is omitted (with the
    reason recorded) when the variance conditions fail on the sample covariance.
    """
    result = run_bootstrap(data, part, b_reps=b_reps, seed=seed, multiplier=multiplier)
    payload = {"n": data.n, "p": data.p, "a_size": len(part.a_set),
               "bootstrap": result.to_json_dict()}
    payload.update(_clt_diagnostic(data, part, seed, n_mc))
    if out_path is not None:
        try:
            os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
            with open(out_path, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as err:
            raise IoError(f"cannot write {out_path}: {err}") from err
    return payload


def _clt_diagnostic(data: DataMatrix, part: Partition, seed: int, n_mc: int) -> dict:
    centered = data.xi - data.xi.mean(axis=0)
    sig_hat = (centered.T @ centered) / data.n
    sig_hat = (sig_hat + sig_hat.T) * 0.5
    try:
        spec_hat = CovSpec.explicit(sig_hat)
        rep = check_conditions(spec_hat, part)
        if not (rep.cond_a_holds or rep.cond_b_holds):
            raise ConditionFails("variance conditions fail on the sample covariance")
        subset = part.b_set if rep.s_set[0] == "B" else part.a_set
        emax = expected_max_abs(spec_hat, subset, n_mc=n_mc, seed=seed)
        b_n = max(1.0, float(np.abs(centered).max()))
        inputs = CltRateInputs(b_n=b_n, b0=1.0, n=data.n, p=data.p,
                               c_ab=rep.c_ab, emax_s=emax.value)
        return {"clt_rate": clt_rate(inputs),
                "clt_inputs": {"b_n": b_n, "b0": 1.0, "c_ab": rep.c_ab,
                               "emax_s": emax.value, "s_set": rep.s_set[0]}}
    except MaxgapError as err:
        return {"clt_rate": None,
                "clt_skipped": getattr(err, "code", "error") or str(err)}
