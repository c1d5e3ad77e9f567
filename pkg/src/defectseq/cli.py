"""Command-line entry points.

Verbs:
  run <config>       full experiment from a YAML manifest
  gradcheck          finite-difference check of the sequence model gradients
  eval <scores.csv>  CE/ACC/AUC for externally produced scores
                     (columns: name,score,loc,bugs,label)
  stats <values.csv> Scott-Knott groups and Win/Tie/Loss from raw values
                     (columns: technique,project,value)
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .effort import acc_at_effort, auc, ce_report_values, scored_files
from .experiment import emit_report, load_config, run_experiment
from .rnn import Hyperparams, gradient_check
from .stats import scott_knott, win_tie_loss


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    out_dir = args.output or cfg.output_dir
    report = run_experiment(cfg)
    written = emit_report(report, out_dir)
    for path in written:
        print(path)
    if report["errors"]:
        for project, message in sorted(report["errors"].items()):
            print(f"warning: {project}: {message}", file=sys.stderr)
    if not report["projects"]:
        print("error: no project completed", file=sys.stderr)
        return 1
    return 0


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    worst = 0.0
    for hidden in (1, 3, 8):
        for input_dim in (1, 4, 24):
            for T in (1, 2, 5):
                for y in (0, 1):
                    h = Hyperparams(hidden_size=hidden, seed=args.seed)
                    err = gradient_check(h, input_dim=input_dim, T=T, y=y)
                    worst = max(worst, err)
    print(f"max relative error: {worst:.3e}")
    if worst >= args.tolerance:
        print(f"error: exceeds tolerance {args.tolerance:g}", file=sys.stderr)
        return 1
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    with open(args.scores, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        print("error: empty scores file", file=sys.stderr)
        return 1
    for column in ("name", "score", "loc", "bugs", "label"):
        if column not in rows[0]:
            print(f"error: missing column {column!r}", file=sys.stderr)
            return 1
    files, n_adjusted = scored_files(
        keys=[r["name"] for r in rows],
        scores=[float(r["score"]) for r in rows],
        locs=[int(float(r["loc"])) for r in rows],
        bugs=[int(float(r["bugs"])) for r in rows],
    )
    labels = [int(float(r["label"])) for r in rows]
    scores = [float(r["score"]) for r in rows]
    result = {f"ce_{k}": v for k, v in ce_report_values(files).items()}
    result["acc"] = acc_at_effort(files)
    result["auc"] = auc(list(zip(scores, labels)))
    result["zero_loc_files_adjusted"] = n_adjusted
    print(json.dumps(result, sort_keys=True, indent=2))
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    with open(args.values, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        print("error: empty values file", file=sys.stderr)
        return 1
    for column in ("technique", "project", "value"):
        if column not in rows[0]:
            print(f"error: missing column {column!r}", file=sys.stderr)
            return 1

    by_tech: dict[str, dict[str, list[float]]] = {}
    order: list[str] = []
    projects: list[str] = []
    for r in rows:
        tech, project = r["technique"], r["project"]
        if tech not in by_tech:
            by_tech[tech] = {}
            order.append(tech)
        if project not in projects:
            projects.append(project)
        by_tech[tech].setdefault(project, []).append(float(r["value"]))

    # Scott-Knott over per-project means (one value per project per technique)
    values = {}
    for tech in order:
        missing = [p for p in projects if p not in by_tech[tech]]
        if missing:
            print(f"error: {tech!r} lacks values for {missing}", file=sys.stderr)
            return 1
        values[tech] = [float(np.mean(by_tech[tech][p])) for p in projects]
    grouping = scott_knott(values)
    print("scott-knott ranks:")
    for rank, names in enumerate(grouping.ranks, start=1):
        labels = ", ".join(f"{n} (mean {grouping.means[n]:.3f})" for n in names)
        print(f"  rank {rank}: {labels}")

    reference = args.reference or order[0]
    if reference not in by_tech:
        print(f"error: unknown reference technique {reference!r}", file=sys.stderr)
        return 1
    print(f"win/tie/loss for {reference}:")
    for tech in order:
        if tech == reference:
            continue
        counts = {"win": 0, "tie": 0, "loss": 0}
        for project in projects:
            outcome = win_tie_loss(by_tech[reference][project], by_tech[tech][project])
            counts[outcome.value] += 1
        print(f"  vs {tech}: {counts['win']}/{counts['tie']}/{counts['loss']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="defectseq",
        description="Defect prediction from metric sequences across versions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--output", help="override the config's output directory")
    p_run.set_defaults(func=_cmd_run)

    p_grad = sub.add_parser("gradcheck", help="verify gradients against finite differences")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.add_argument("--tolerance", type=float, default=1e-5)
    p_grad.set_defaults(func=_cmd_gradcheck)

    p_eval = sub.add_parser("eval", help="score an external ranking")
    p_eval.add_argument("scores", type=Path)
    p_eval.set_defaults(func=_cmd_eval)

    p_stats = sub.add_parser("stats", help="rank techniques from raw values")
    p_stats.add_argument("values", type=Path)
    p_stats.add_argument("--reference", help="technique for win/tie/loss (default: first listed)")
    p_stats.set_defaults(func=_cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
