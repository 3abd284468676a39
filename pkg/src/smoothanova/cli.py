"""Command line interface.

    smoothanova test data.csv --model group-means --k auto --pvalue revised
    smoothanova simulate --scenario variances --m 10 20 --reps 500 --seed 42
    smoothanova constants --K 8

Exit codes: 0 on success (whether or not normality is rejected), 2 for bad
input or flags, 3 when a covariance matrix cannot be factored.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .basis import compute_constants
from .data_driven import test_data_driven
from .errors import DataFormatError, NumericalError, SmoothTestError
from .models import Dataset, ModelKind
from .simulation import DESK_M, FULL_M, SimConfig, run_simulation
from .smooth_test import K_MAX, TestResult, sigma_matrix, test_fixed_K

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

REPORT_FIELDS = (
    "model",
    "method",
    "n_total",
    "group_labels",
    "group_sizes",
    "k_used",
    "statistic",
    "dof_or_approx",
    "p_value",
    "reject",
    "alpha",
    "mu_hat",
    "sigma_hat",
    "k_star_penalized",
    "warnings",
    "group_results",
)


def read_csv(path) -> Dataset:
    """Read a ``group,value`` file; groups keep their order of first appearance."""
    groups: dict[str, list[float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            header = [cell.strip().lower() for cell in row]
            break
        if header is None:
            raise DataFormatError(f"{path}: file is empty")
        if header != ["group", "value"]:
            raise DataFormatError(
                f"{path}: line {reader.line_num}: expected header 'group,value', got {','.join(row)!r}"
            )
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise DataFormatError(
                    f"{path}: line {reader.line_num}: expected 2 fields, got {len(row)}"
                )
            label, raw = row[0].strip(), row[1].strip()
            try:
                value = float(raw)
            except ValueError:
                value = math.nan
            if not math.isfinite(value):
                raise DataFormatError(
                    f"{path}: line {reader.line_num}: value {raw!r} is not a finite number"
                )
            groups.setdefault(label, []).append(value)
    n = sum(len(v) for v in groups.values())
    if n == 0:
        raise DataFormatError(f"{path}: no observations after the header")
    if n == 1:
        raise DataFormatError(f"{path}: a single observation cannot be tested")
    return Dataset.from_groups(list(groups.values()), labels=list(groups))


@dataclass(frozen=True)
class RunConfig:
    input_path: Path
    model: ModelKind
    k: Optional[int]  # None selects K by the Schwarz rule
    alpha: float = 0.05
    pvalue: str = "asymptotic"
    D: int = 5
    output: str = "text"

    def validate(self) -> None:
        if self.k is None:
            if not 1 <= self.D <= K_MAX:
                raise _UsageError(f"--d-max must lie in 1..{K_MAX}")
        else:
            if self.pvalue == "revised":
                raise _UsageError("--pvalue revised requires --k auto")
            if not 1 <= self.k <= K_MAX:
                raise _UsageError(f"--k must be 'auto' or an integer in 1..{K_MAX}")
        if not 0.0 < self.alpha < 1.0:
            raise _UsageError("--alpha must lie in (0, 1)")


class _UsageError(SmoothTestError, ValueError):
    pass


def _floats(values) -> list[float]:
    return [float(v) for v in np.atleast_1d(values)]


def _result_dict(result: TestResult, labels: Sequence[str] = ()) -> dict:
    fitted = result.fitted
    selection = result.selection
    return {
        "model": str(result.model_kind),
        "method": result.method,
        "n_total": result.n_total,
        "group_labels": list(labels),
        "group_sizes": list(fitted.sizes),
        "k_used": result.K_used,
        "statistic": result.statistic,
        "dof_or_approx": result.dof if result.dof is not None else "revised",
        "p_value": result.p_value,
        "reject": bool(result.reject),
        "alpha": result.alpha,
        "mu_hat": _floats(fitted.mu_hat),
        "sigma_hat": _floats(fitted.sigma_hat),
        "k_star_penalized": _floats(selection.penalized) if selection is not None else None,
        "warnings": list(result.warnings),
        "group_results": [
            _result_dict(g, [label]) for g, label in zip(result.group_results, labels)
        ],
    }


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, list):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return str(value)


def format_text(report: dict, indent: str = "") -> str:
    lines = []
    for key, value in report.items():
        if key == "group_results" or value is None:
            continue
        if key == "warnings":
            for w in value:
                lines.append(f"{indent}warning: {w}")
            continue
        lines.append(f"{indent}{key:<17} {_fmt(value)}")
    for label, sub in zip(report.get("group_labels", []), report.get("group_results", [])):
        lines.append(f"{indent}group {label}:")
        lines.append(format_text(sub, indent + "  "))
    return "\n".join(lines)


def cmd_test(config: RunConfig) -> tuple[int, dict]:
    config.validate()
    data = read_csv(config.input_path)
    if config.k is None:
        approx = "revised" if config.pvalue == "revised" else "chi1"
        result = test_data_driven(data, config.model, config.D, config.alpha, approx)
    else:
        result = test_fixed_K(data, config.model, config.k, config.alpha)
    return EXIT_OK, _result_dict(result, data.labels)


def cmd_constants(K: int, quad_points: int = 400) -> dict:
    if not 1 <= K <= K_MAX:
        raise _UsageError(f"--K must lie in 1..{K_MAX}")
    constants = compute_constants(K_MAX, quad_points).truncate(K)
    sigma = sigma_matrix(constants, K)
    return {
        "K": K,
        "quad_points": quad_points,
        "c1": _floats(constants.c1),
        "c2": _floats(constants.c2),
        "sigma": [_floats(row) for row in sigma.entries],
        "sigma_eigenvalues": _floats(sigma.eigenvalues),
        "sigma_clipped": sigma.clipped,
    }


def cmd_simulate(config: SimConfig, out_dir: Optional[Path], workers: int = 1):
    report = run_simulation(config, workers=workers)
    paths = []
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = out_dir / f"simulation_{config.scenario}"
        for suffix, text in ((".json", report.to_json()), (".csv", report.to_csv())):
            path = stem.with_suffix(suffix)
            path.write_text(text)
            paths.append(path)
    return report, paths


def _k_arg(text: str):
    if text == "auto":
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or an integer, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smoothanova", description="Smooth tests for normal errors in one-way ANOVA."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test a group,value CSV file")
    t.add_argument("input", type=Path)
    t.add_argument("--model", choices=[k.value for k in ModelKind], default="group-means")
    t.add_argument("--k", type=_k_arg, default="auto", help="1..8 or 'auto' (default)")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument(
        "--pvalue",
        choices=["asymptotic", "revised"],
        default=None,
        help="null approximation for --k auto (default revised); fixed K is always asymptotic",
    )
    t.add_argument("--d-max", type=int, default=5, dest="d_max")
    t.add_argument("--format", choices=["text", "json"], default="text")
    t.add_argument("--out", type=Path, help="also write the report to this file")

    s = sub.add_parser("simulate", help="Monte Carlo size/power study")
    s.add_argument("--scenario", choices=["means", "variances"], default="means")
    s.add_argument("--m", type=int, nargs="+", help=f"group-size multipliers (default {list(DESK_M)})")
    s.add_argument("--full", action="store_true", help="m = 10, 20, ..., 150")
    s.add_argument("--reps", type=int, default=500)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--d-max", type=int, default=5, dest="d_max")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", type=Path, default=Path("sim_results"))

    c = sub.add_parser("constants", help="dump c1, c2 and the sigma matrix as JSON")
    c.add_argument("--K", type=int, default=K_MAX)
    c.add_argument("--quad-points", type=int, default=400, dest="quad_points")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "test":
            pvalue = args.pvalue or ("revised" if args.k is None else "asymptotic")
            config = RunConfig(
                args.input, ModelKind(args.model), args.k, args.alpha, pvalue, args.d_max, args.format
            )
            code, report = cmd_test(config)
            text = json.dumps(report, indent=2) if args.format == "json" else format_text(report)
            print(text)
            if args.out is not None:
                args.out.write_text(text + "\n")
            return code
        if args.command == "simulate":
            if args.full and args.m:
                raise _UsageError("--full and --m are mutually exclusive")
            m_values = FULL_M if args.full else tuple(args.m or DESK_M)
            config = SimConfig(
                scenario=args.scenario,
                m_values=m_values,
                replications=args.reps,
                alpha=args.alpha,
                D=args.d_max,
                master_seed=args.seed,
            )
            report, paths = cmd_simulate(config, args.out, args.workers)
            print(report.format_table())
            for path in paths:
                print(f"wrote {path}")
            return EXIT_OK
        print(json.dumps(cmd_constants(args.K, args.quad_points), indent=2))
        return EXIT_OK
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SmoothTestError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
