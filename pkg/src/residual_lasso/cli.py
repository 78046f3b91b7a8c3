"""Command line entry point: ``residual-lasso <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .solver import SolverError
from .operators import (DEFAULT_ZETA, global_edge_matrix, local_diff_matrix,
                        rank_diagnostics, residual_operator)

log = logging.getLogger("residual_lasso")

# CLI flag -> ExperimentConfig field
_FLAG_FIELDS = {
    "signal": "signal", "n": "n", "p": "p", "operator": "operator", "zeta": "zeta",
    "snr": "snr_db", "sigma2": "sigma2", "gamma": "gamma", "blur_units": "blur_units",
    "ratio": "ratio", "alpha": "alpha", "trials": "trials", "seed": "base_seed",
    "rho": "rho", "max_iters": "max_iters", "tol": "tol",
}

# subcommand -> measurement model it implies
_FORWARD = {"denoise": "identity", "deblur": "blur", "undersample": "undersample"}


def _alpha(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got {text!r}") from None


def _add_run_args(sp: argparse.ArgumentParser):
    sp.add_argument("--config", type=Path, help="JSON or TOML file with config keys")
    sp.add_argument("--signal", choices=["f1", "f2"])
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=int, choices=[0, 1])
    sp.add_argument("--operator", choices=list(ex.OPERATORS))
    sp.add_argument("--zeta", type=float)
    sp.add_argument("--forward", choices=sorted(set(_FORWARD.values())),
                    help="measurement model; must agree with the subcommand")
    noise = sp.add_mutually_exclusive_group()
    noise.add_argument("--snr", type=float, help="SNR in dB")
    noise.add_argument("--sigma2", type=float, help="noise variance")
    sp.add_argument("--gamma", type=float, help="blur width (deblur)")
    sp.add_argument("--blur-units", choices=["physical", "index"])
    sp.add_argument("--ratio", type=float, help="fraction of zeroed samples (undersample)")
    sp.add_argument("--alpha", type=_alpha, help="'auto' or a fixed value")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int, help="base seed; trial k uses seed+k")
    sp.add_argument("--rho", type=float)
    sp.add_argument("--max-iters", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", type=Path)
    sp.add_argument("--format", choices=["csv", "json"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="residual-lasso",
        description="Recover piecewise-smooth 1D signals with residual-operator Lasso.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for task in ex.TASKS:
        sp = sub.add_parser(task, help=f"run {task} trials")
        _add_run_args(sp)

    dp = sub.add_parser("diagnose-operator", help="rank / row-sum / T-vs-S summary as JSON")
    dp.add_argument("--n", type=int, default=128)
    dp.add_argument("--p", type=int, default=0)
    dp.add_argument("--zeta", type=float, default=DEFAULT_ZETA)
    dp.add_argument("--tol", type=float, default=1e-8, help="relative SVD tolerance")

    rp = sub.add_parser("reproduce", help="run the canned configs behind a figure")
    rp.add_argument("--figure", type=int, choices=list(ex.FIGURES), required=True)
    rp.add_argument("--trials", type=int, default=20)
    rp.add_argument("--seed", type=int, default=0)
    rp.add_argument("--jobs", type=int, default=1)
    rp.add_argument("--out", type=Path)
    rp.add_argument("--format", choices=["csv", "json"])
    return parser


def _load_config_file(path: Path) -> dict:
    text = path.read_text()
    if path.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def _config_from_args(task: str, args) -> ex.ExperimentConfig:
    if args.forward is not None and args.forward != _FORWARD[task]:
        raise ValueError(f"--forward {args.forward} conflicts with subcommand {task!r} "
                         f"(which uses {_FORWARD[task]})")
    data = _load_config_file(args.config) if args.config else {}
    data.pop("task", None)
    for flag, name in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[name] = value
    return ex.ExperimentConfig.from_mapping({"task": task, **data})


def _format_for(path: Path | None, explicit: str | None) -> str:
    if explicit:
        return explicit
    return "json" if path is not None and path.suffix == ".json" else "csv"


def _print_summary(rows):
    for row in rows:
        cells = [f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()]
        print("  ".join(cells))


def diagnose(n: int, p: int, zeta: float, tol: float) -> dict:
    T = local_diff_matrix(n, p)
    S = global_edge_matrix(n, p, zeta)
    R = residual_operator(n, p, zeta)
    rep = rank_diagnostics(R, tol)
    sv = rep.singular_values
    return {
        "n": n, "p": p, "zeta": zeta, "tol_rel": tol,
        "numerical_rank": rep.numerical_rank,
        "spectral_gap": rep.spectral_gap,
        "condition_estimate": rep.condition_estimate,
        "singular_values": {
            "max": float(sv[0]), "min": float(sv[-1]),
            "leading": sv[:5].tolist(), "trailing": sv[-5:].tolist(),
        },
        "row_sum_defect": {
            "local": T.row_sum_defect(),
            "global": S.row_sum_defect(),
            "residual": R.row_sum_defect(),
        },
        # (T - S) e_l is column l of R
        "action_gap": float(np.abs(R.matrix).max()),
        "action_gap_relative": float(np.abs(R.matrix).max() / np.abs(T.matrix).max()),
    }


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "diagnose-operator":
            print(json.dumps(diagnose(args.n, args.p, args.zeta, args.tol), indent=2))
            return 0

        if args.command == "reproduce":
            configs = ex.figure_configs(args.figure, args.trials, args.seed)
            out = args.out or Path(f"figure{args.figure}.csv")
        else:
            configs = [_config_from_args(args.command, args)]
            out = args.out or Path(f"{configs[0].label}.csv")
    except (ValueError, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2

    try:
        results = []
        for cfg in configs:
            results.extend(ex.run_experiment(cfg, jobs=args.jobs))
        fmt = _format_for(out, args.format)
        path = ex.emit_results(results, out, fmt)
        rows = ex.summarize(results)
        if rows:
            ex.write_summary_csv(rows, path.with_name(path.stem + ".median.csv"))
    except (ValueError, OSError, SolverError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 1
    _print_summary(rows)
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
