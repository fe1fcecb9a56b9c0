"""Command line front end.

Subcommands: gen-design, levy, bounds-compare, scaling, bootstrap, selftest.
Option precedence is flags > config file > built-in defaults.  Exit codes:
0 success, 2 bad configuration, 3 every requested bound inapplicable,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

from .bounds import ALL_BOUNDS, Inapplicable
from .cov import Partition
from .designs import KINDS, VARIANCE_PROFILES, DesignConfig
from .errors import BadConfig, IoError, MaxgapError, ParseError
from .bootstrap import MULTIPLIERS, load_csv
from . import experiments

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INAPPLICABLE = 3
EXIT_IO = 4

_DESIGN_KEYS = tuple(DesignConfig.__dataclass_fields__)


def _float_list(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats: {err}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _int_list(text: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {err}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="PATH", help="JSON file with defaults for this command")
    sub.add_argument("--seed", type=int, default=None, help="master seed (unsigned 64-bit)")
    sub.add_argument("--out", default=None, help="output directory or file")
    sub.add_argument("--threads", type=int, default=None, help="sampling threads (default 1)")


def _add_design(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--kind", choices=KINDS, default=None, help="design family")
    sub.add_argument("--p", type=int, default=None, help="dimension (default 400)")
    sub.add_argument("--d", type=int, default=None, help="factor rank for low-rank kinds")
    sub.add_argument("--k", type=int, default=None, dest="overlap_k",
                     help="overlap size for overlapping kinds")
    sub.add_argument("--k0", type=int, default=None, help="size of block A for k0_split")
    sub.add_argument("--rho", type=float, default=None, help="equicorrelation level")
    sub.add_argument("--profile", choices=sorted(VARIANCE_PROFILES), default=None,
                     dest="variance_profile", help="sd profile for heterog_violation")


def _add_run(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--reps", type=int, default=None, help="sample replications (default 2000)")
    sub.add_argument("--eps", type=_float_list, default=None,
                     help="comma-separated epsilon list")
    sub.add_argument("--grid", type=int, default=None, help="scan grid points (default 1000)")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as err:
        raise IoError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise BadConfig(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(obj, dict):
        raise BadConfig(f"config {path} must hold a JSON object")
    return obj


def _merged(args, file_cfg: dict, key: str, default, attr: str | None = None):
    value = getattr(args, attr or key, None)
    if value is not None:
        return value
    if key in file_cfg:
        return file_cfg[key]
    return default


def _design_from(args, file_cfg: dict) -> DesignConfig:
    merged = {k: v for k, v in file_cfg.items() if k in _DESIGN_KEYS}
    for key in _DESIGN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if "kind" not in merged:
        raise BadConfig("a design kind is required (--kind or 'kind' in --config)")
    try:
        return DesignConfig(**merged)
    except TypeError as err:
        raise BadConfig(f"bad design config: {err}") from err


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    try:
        parent = os.path.dirname(os.path.abspath(out))
        os.makedirs(parent, exist_ok=True)
        with open(out, "w") as fh:
            fh.write(text)
    except OSError as err:
        raise IoError(f"cannot write {out}: {err}") from err
    print(f"wrote {out}")


def cmd_gen_design(args) -> int:
    file_cfg = _load_config(args.config)
    cfg = _design_from(args, file_cfg)
    from .designs import gen_design

    spec, part = gen_design(cfg)
    payload = {
        "design_id": cfg.design_id(),
        "config": cfg.to_json_dict(),
        "spec": spec.to_json_dict(),
        "partition": part.to_json_dict(),
    }
    _emit_json(payload, args.out)
    return EXIT_OK


def cmd_levy(args) -> int:
    file_cfg = _load_config(args.config)
    cfg = _design_from(args, file_cfg)
    path, rows = experiments.run_levy_experiment(
        cfg,
        epsilons=_merged(args, file_cfg, "eps", list(experiments.DEFAULT_EPSILONS)),
        n_rep=int(_merged(args, file_cfg, "reps", 2000)),
        grid_points=int(_merged(args, file_cfg, "grid", 1000)),
        seed=_merged(args, file_cfg, "seed", None),
        out_dir=_merged(args, file_cfg, "out", "."),
        n_threads=int(_merged(args, file_cfg, "threads", 1)),
    )
    for row in rows:
        print(f"eps={row['epsilon']:g} levy_hat={row['levy_hat']:.6f} se={row['se']:.6f}")
    print(f"wrote {path}")
    return EXIT_OK


def _bounds_arg(text: str) -> list[str]:
    names = [tok.strip() for tok in text.split(",") if tok.strip()]
    bad = [n for n in names if n not in ALL_BOUNDS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown bounds {bad}; choose from {ALL_BOUNDS}")
    return names


def _all_inapplicable(reports, which) -> bool:
    for report in reports:
        for name in which:
            if name == "single_max":
                fields = (report.single_max_a, report.single_max_b)
            elif name == "baseline":
                fields = (report.baseline_min_eig,)
            else:
                fields = (getattr(report, name),)
            if any(f is not None and not isinstance(f, Inapplicable) for f in fields):
                return False
    return True


def cmd_bounds_compare(args) -> int:
    file_cfg = _load_config(args.config)
    cfg = _design_from(args, file_cfg)
    which = tuple(_merged(args, file_cfg, "bounds", list(ALL_BOUNDS)))
    unknown = [n for n in which if n not in ALL_BOUNDS]
    if unknown:
        raise BadConfig(f"unknown bounds {unknown}; choose from {ALL_BOUNDS}")
    n_mc = _merged(args, file_cfg, "mc", None)
    path, rows, reports = experiments.run_bounds_compare(
        cfg,
        epsilons=_merged(args, file_cfg, "eps", [0.05]),
        n_rep=int(_merged(args, file_cfg, "reps", 2000)),
        n_mc=None if n_mc is None else int(n_mc),
        grid_points=int(_merged(args, file_cfg, "grid", 1000)),
        seed=_merged(args, file_cfg, "seed", None),
        out_dir=_merged(args, file_cfg, "out", "."),
        which=which,
        n_threads=int(_merged(args, file_cfg, "threads", 1)),
    )
    for row in rows:
        ratios = {c: row[c] for c in experiments.COMPARE_COLUMNS
                  if c.startswith("ratio_") and row[c] is not None}
        pretty = " ".join(f"{k[6:]}={v:.4g}" for k, v in ratios.items())
        print(f"eps={row['epsilon']:g} {pretty}")
        if row["inapplicable"]:
            print(f"  inapplicable: {row['inapplicable']}")
    print(f"wrote {path}")
    if _all_inapplicable(reports, which):
        print("error: every requested bound is inapplicable for this design",
              file=sys.stderr)
        return EXIT_INAPPLICABLE
    return EXIT_OK


def cmd_scaling(args) -> int:
    file_cfg = _load_config(args.config)
    study = _merged(args, file_cfg, "study", None)
    if study is None:
        raise BadConfig("a study kind is required (--study or 'study' in --config)")
    eps = _merged(args, file_cfg, "eps", [0.05])
    if len(eps) != 1:
        raise BadConfig(f"scaling takes a single epsilon, got {eps}")
    kwargs = dict(
        out_dir=_merged(args, file_cfg, "out", "."),
        seed=int(_merged(args, file_cfg, "seed", 0) or 0),
        n_rep=int(_merged(args, file_cfg, "reps", 500)),
        epsilon=float(eps[0]),
        grid_points=int(_merged(args, file_cfg, "grid", 1000)),
        n_threads=int(_merged(args, file_cfg, "threads", 1)),
        n_points=int(_merged(args, file_cfg, "points", 100, attr="points")),
        rho_min=float(_merged(args, file_cfg, "rho_min", 0.9)),
        rho_max=float(_merged(args, file_cfg, "rho_max", 0.99)),
        k0=int(_merged(args, file_cfg, "k0", 20)),
        p_list=tuple(_merged(args, file_cfg, "p_list", list(experiments.K0_SWEEP_P))),
    )
    p = _merged(args, file_cfg, "p", None)
    if p is not None:
        kwargs["p"] = int(p)
    elif study != "k0_sweep":
        kwargs["p"] = 100
    d = _merged(args, file_cfg, "d", None)
    if d is not None:
        kwargs["d"] = int(d)
    path, rows = experiments.run_scaling_study(study, **kwargs)
    print(f"{len(rows)} rows; wrote {path}")
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    file_cfg = _load_config(args.config)
    data_path = _merged(args, file_cfg, "data", None)
    if data_path is None:
        raise BadConfig("a data CSV is required (--data or 'data' in --config)")
    shift = _merged(args, file_cfg, "shift", None)
    data = load_csv(data_path, shift=shift)
    a_list = _merged(args, file_cfg, "a", None, attr="a_indices")
    split = _merged(args, file_cfg, "split", None)
    if a_list is not None:
        a_set = tuple(sorted(int(i) for i in a_list))
        b_set = tuple(i for i in range(data.p) if i not in set(a_set))
        part = Partition(a_set=a_set, b_set=b_set, p=data.p)
    elif split is not None:
        part = Partition.split(data.p, int(split))
    else:
        part = Partition.split(data.p, data.p // 2)
    payload = experiments.run_bootstrap_demo(
        data, part,
        b_reps=int(_merged(args, file_cfg, "breps", 2000)),
        seed=int(_merged(args, file_cfg, "seed", 0) or 0),
        multiplier=_merged(args, file_cfg, "multiplier", "gaussian"),
        out_path=args.out if args.out else None,
    )
    if args.out:
        print(f"wrote {args.out}")
        print(f"prob_argmax_in_A={payload['bootstrap']['prob']:.4f}")
    else:
        _emit_json(payload, None)
    return EXIT_OK


def cmd_selftest(args) -> int:
    seed = int(args.seed) if args.seed is not None else 0
    threads = int(args.threads) if args.threads is not None else 8
    reps = int(args.reps) if args.reps is not None else 20000
    rho, sd, eps_check = 0.3, 1.0, 0.05
    cfg = DesignConfig(kind="fullrank_equicorr", p=2, rho=rho, seed=seed)
    epsilons = (0.01, eps_check, 0.2)
    failures = 0

    def check(label: str, ok: bool) -> None:
        nonlocal failures
        print(f"selftest {label}: {'PASS' if ok else 'FAIL'}")
        failures += 0 if ok else 1

    with tempfile.TemporaryDirectory(dir=args.out) as tmp:
        path_1, rows = experiments.run_levy_experiment(
            cfg, epsilons, n_rep=reps, seed=seed,
            out_dir=os.path.join(tmp, "t1"), n_threads=1)
        path_n, _ = experiments.run_levy_experiment(
            cfg, epsilons, n_rep=reps, seed=seed,
            out_dir=os.path.join(tmp, "tn"), n_threads=threads)
        with open(path_1, "rb") as f1, open(path_n, "rb") as f2:
            check(f"thread determinism (1 vs {threads} threads)", f1.read() == f2.read())
    row = next(r for r in rows if r["epsilon"] == eps_check)
    truth = math.erf(eps_check / (sd * math.sqrt(2.0 * (1.0 - rho))) / math.sqrt(2.0))
    se = max(row["se"], 1e-12)
    check("analytic two-coordinate design (6 SE)", abs(row["levy_hat"] - truth) <= 6.0 * se)
    return EXIT_OK if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maxgap",
        description="Concentration experiments for the difference of two Gaussian maxima.")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("gen-design", help="materialize a design as JSON")
    _add_common(sp)
    _add_design(sp)
    sp.set_defaults(func=cmd_gen_design)

    sp = subs.add_parser("levy", help="concentration level across epsilons")
    _add_common(sp)
    _add_design(sp)
    _add_run(sp)
    sp.set_defaults(func=cmd_levy)

    sp = subs.add_parser("bounds-compare", help="empirical level against the bounds")
    _add_common(sp)
    _add_design(sp)
    _add_run(sp)
    sp.add_argument("--bounds", type=_bounds_arg, default=None, dest="bounds",
                    help="comma-separated subset of bounds to evaluate")
    sp.add_argument("--mc", type=int, default=None,
                    help="Monte Carlo size for expected maxima")
    sp.set_defaults(func=cmd_bounds_compare)

    sp = subs.add_parser("scaling", help="scaling studies over rho or block size")
    _add_common(sp)
    _add_run(sp)
    sp.add_argument("--study", choices=experiments.SCALING_KINDS, default=None)
    sp.add_argument("--p", type=int, default=None)
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--points", type=int, default=None, help="sweep points (default 100)")
    sp.add_argument("--rho-min", type=float, default=None, dest="rho_min")
    sp.add_argument("--rho-max", type=float, default=None, dest="rho_max")
    sp.add_argument("--k0", type=int, default=None)
    sp.add_argument("--p-list", type=_int_list, default=None, dest="p_list",
                    help="dimensions for k0_sweep")
    sp.set_defaults(func=cmd_scaling)

    sp = subs.add_parser("bootstrap", help="multiplier bootstrap on an observed matrix")
    _add_common(sp)
    sp.add_argument("--data", default=None, help="CSV of observations, one row per unit")
    sp.add_argument("--split", type=int, default=None,
                    help="block A is the first SPLIT coordinates")
    sp.add_argument("--a", type=_int_list, default=None, dest="a_indices",
                    help="explicit comma-separated indices of block A")
    sp.add_argument("--breps", type=int, default=None, help="bootstrap draws (default 2000)")
    sp.add_argument("--multiplier", choices=MULTIPLIERS, default=None)
    sp.add_argument("--shift", type=_float_list, default=None,
                    help="comma-separated location shift, one value per column")
    sp.set_defaults(func=cmd_bootstrap)

    sp = subs.add_parser("selftest", help="determinism and analytic sanity checks")
    _add_common(sp)
    sp.add_argument("--reps", type=int, default=None)
    sp.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (ParseError, IoError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except MaxgapError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
