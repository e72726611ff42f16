"""Command-line front end.

Subcommands:

* ``run``: simulate one scenario over one or more seeds, write CSV
  traces and a JSON report.
* ``sweep``: rerun a scenario over several preset horizons t_p.
* ``report``: recompute metrics from a run directory's CSVs and compare
  with the stored report.

Exit codes: 0 on success, 1 when any run violates a tracking invariant
(envelope violation under the preset method, or a QP that failed to
converge), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

from .harness import BatchReport, RunMetrics, batch, reaggregate, sweep
from .scenario import ScenarioError, load_scenario, packaged_names


def _parse_seeds(text: str) -> list[int]:
    """Parse 'A..B' (inclusive) or a comma-separated list of integers."""
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise ValueError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    return [int(tok) for tok in text.split(",") if tok]


def _fmt_metrics(m: RunMetrics) -> str:
    conv = "never" if math.isinf(m.convergence_time) else f"{m.convergence_time:.2f}s"
    term = "n/a" if not m.terminal_window_complete else (
        f"{m.terminal_error * 100:.3f}±{m.terminal_error_std * 100:.3f}cm"
    )
    return (
        f"conv={conv} avg={m.avg_error:.4f}m term={term} "
        f"viol={m.envelope_violations} qp_fail={m.qp_nonconverged} "
        f"cap_exceed={m.delta_cap_exceedances}"
    )


def _print_batch(rep: BatchReport) -> None:
    for r in rep.runs:
        print(f"{r.scenario_name} {r.method} seed={r.seed}: {_fmt_metrics(r.metrics)}")
    agg = rep.aggregates
    conv = agg["median_convergence_time"]
    conv_s = "never" if math.isinf(conv) else f"{conv:.2f}s"
    term = agg["median_terminal_error"]
    term_s = "n/a" if not math.isfinite(term) else f"{term * 100:.3f}cm"
    print(
        f"aggregate ({agg['runs']} runs): median conv={conv_s} "
        f"median avg={agg['median_avg_error']:.4f}m median term={term_s} "
        f"viol={agg['total_envelope_violations']} "
        f"qp_fail={agg['total_qp_nonconverged']}"
    )


def _invariant_exit(pairs) -> int:
    """pairs: iterable of (method, RunMetrics-like dict or RunMetrics)."""
    code = 0
    for method, m in pairs:
        viol = m.envelope_violations if isinstance(m, RunMetrics) else m["envelope_violations"]
        qp = m.qp_nonconverged if isinstance(m, RunMetrics) else m["qp_nonconverged"]
        if qp > 0 or (method == "preset" and viol > 0):
            code = 1
    return code


def _cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    if args.tp is not None:
        sc = replace(sc, t_p=args.tp, duration=max(sc.duration, args.tp + 8.0))
    seeds = None
    if args.seed is not None:
        seeds = [args.seed]
    elif args.seeds is not None:
        seeds = _parse_seeds(args.seeds)
    rep = batch(sc, seeds=seeds, method=args.method, out_dir=args.out, jobs=args.jobs)
    _print_batch(rep)
    return _invariant_exit((r.method, r.metrics) for r in rep.runs)


def _cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    tp_values = [float(tok) for tok in args.tp.split(",") if tok]
    if not tp_values:
        raise ScenarioError("--tp must list at least one horizon")
    seeds = _parse_seeds(args.seeds) if args.seeds is not None else None
    summary = sweep(sc, tp_values, seeds=seeds, out_dir=args.out, jobs=args.jobs)
    code = 0
    for tp, entry in summary.items():
        agg = entry["aggregates"]
        term = agg["median_terminal_error"]
        term_s = "n/a" if not math.isfinite(term) else f"{term * 100:.3f}cm"
        print(
            f"t_p={tp:g}s: median term={term_s} "
            f"median conv={agg['median_convergence_time']:.2f}s "
            f"viol={agg['total_envelope_violations']} qp_fail={agg['total_qp_nonconverged']}"
        )
        if agg["total_qp_nonconverged"] > 0 or (
            sc.method == "preset" and agg["total_envelope_violations"] > 0
        ):
            code = 1
    return code


def _cmd_report(args) -> int:
    result = reaggregate(args.dir)
    method = result["report"]["method"]
    code = 0
    for row in result["runs"]:
        rec = row["recomputed"]
        stored = row["stored"]
        conv = rec["convergence_time"]
        conv_s = "never" if math.isinf(conv) else f"{conv:.2f}s"
        print(
            f"seed={row['seed']}: conv={conv_s} avg={rec['avg_error']:.4f}m "
            f"row_viol={rec['row_violations']} "
            f"(stored: viol={stored['envelope_violations']} qp_fail={stored['qp_nonconverged']})"
        )
        if stored["qp_nonconverged"] > 0 or (
            method == "preset" and (rec["row_violations"] > 0 or stored["envelope_violations"] > 0)
        ):
            code = 1
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aerodelta",
        description="Envelope-tracking control simulator for a flying delta arm.",
        epilog=f"Packaged scenarios: {', '.join(packaged_names())}",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario")
    p_run.add_argument("--scenario", required=True,
                       help="scenario file path or preset name")
    p_run.add_argument("--method", choices=["preset", "clik"], default=None,
                       help="override the scenario's tracking method")
    group = p_run.add_mutually_exclusive_group()
    group.add_argument("--seed", type=int, default=None, help="single noise seed")
    group.add_argument("--seeds", default=None,
                       help="seed range 'A..B' (inclusive) or comma list")
    p_run.add_argument("--out", default="runs", help="output directory (default: runs)")
    p_run.add_argument("--tp", type=float, default=None, help="override preset horizon t_p")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="rerun over several preset horizons")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--tp", required=True, help="comma list, e.g. 5,10,15,20")
    p_sweep.add_argument("--seeds", default=None)
    p_sweep.add_argument("--out", default="runs/sweep", help="output directory")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_rep = sub.add_parser("report", help="recompute metrics from a run directory")
    p_rep.add_argument("dir", help="directory containing report.json and CSV traces")
    p_rep.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
