# modules/cli.py

"""
delegatix command line.

Exit codes: 0 ok, 1 a check failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from modules.data_logger import DataLogger
from modules.delegation import (
    agent_cutoff_misalignment,
    exante_delegation_payoff,
    final_posteriors,
    necessary_condition,
    optimal_delegation,
    optimal_payoff,
    strict_delegation,
)
from modules.design import h_piecewise, optimal_design
from modules.errors import DelegatixError, InvalidSampleCount, ScenarioValidationError
from modules.figure_builder import FigureBuilder, format_float
from modules.model_core import (
    BinarySignal,
    BlackwellConstraint,
    Scenario,
    bayes_weight,
    constraint_signal,
    disagreement_interval,
    require_valid,
    validate_scenario,
)
from modules.oracle import brute_check_prop1, oracle_check
from modules.parsers import load_scenario_file, parse_number
from modules.policy import (
    SearchGrid,
    DelegationRule,
    PolicyRegime,
    find_witness_prop6,
    find_witness_prop7,
    regime_plan,
    regime_report,
)
from modules.session_manager import SessionManager

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID = 0, 1, 2

SWEEP_FIELDS = ("q", "q0", "q1", "prior", "interim", "agent_cutoff", "max_low", "max_high")
SWEEP_COLUMNS = ("value", "regime", "payoff", "design_regime", "delegate")
STAGE_ROWS = ("Delegation", "H")
MATRIX_KINDS = {"dominant_action", "state_mismatching"}


# -----------------------------
# Helpers
# -----------------------------
def _belief(text: str) -> float:
    try:
        return parse_number(text)
    except DelegatixError as e:
        raise argparse.ArgumentTypeError(str(e))


def _range(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got '{text}'")
    return _belief(parts[0]), _belief(parts[1])


def _emit(args, payload: dict, lines: List[str]):
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print("\n".join(lines))


def _session(args, doc):
    manager = SessionManager(args.out)
    manager.start_session(Path(doc.source).stem, {"source": doc.source})
    return manager


def _stage_scenario(doc, interim: float) -> Scenario:
    """Scenario used to validate a delegation-stage query at one interim."""
    return Scenario(interim, doc.prefs, doc.agent_signal, BlackwellConstraint(interim, interim))


def _require_matrices(doc):
    report = validate_scenario(_stage_scenario(doc, 0.5))
    if any(kind in MATRIX_KINDS for kind in report.kinds()):
        raise ScenarioValidationError(report)


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.6f}"


# -----------------------------
# Commands
# -----------------------------
def cmd_delegate(args) -> int:
    doc = load_scenario_file(args.scenario)
    interim = args.interim if args.interim is not None else doc.prior
    if interim is None:
        raise DelegatixError("no interim: pass --interim or give the file a prior")
    require_valid(_stage_scenario(doc, interim))

    prefs, signal = doc.prefs, doc.agent_signal
    decision = optimal_delegation(interim, signal, prefs)
    finals = final_posteriors(interim, signal)
    strict = strict_delegation(interim, signal, prefs)
    brute = brute_check_prop1(interim, signal, prefs)
    lo, hi = disagreement_interval(prefs)

    payload = {
        "interim": interim,
        "decision": decision.to_dict(),
        "final_posteriors": finals.to_dict(),
        "disagreement_interval": [lo, hi],
        "strict_delegation": strict,
        "delegation_beats_direct": brute,
        "equivalence_holds": strict == brute,
        "necessary_condition": necessary_condition(signal, interim, prefs),
    }
    lines = [
        f"[+] interim {interim:.6f}: {'delegate' if decision.delegate else 'act directly'}",
        f"    H = {decision.payoff:.6f}  (delegation {decision.delegation_payoff:.6f}, "
        f"direct {decision.direct_payoff:.6f})",
        f"    final posteriors: low {finals.low:.6f}, high {finals.high:.6f} (Pr high {finals.prob_high:.6f})",
        f"    disagreement interval: ({lo:.6f}, {hi:.6f})",
        f"    finals on opposite sides: {strict}; delegation strictly better: {brute}",
        f"    spread exceeds interval length: {payload['necessary_condition']}",
    ]
    _emit(args, payload, lines)
    if args.save:
        DataLogger(_session(args, doc)).log_delegation(payload)
    return EXIT_OK if payload["equivalence_holds"] else EXIT_CHECK_FAILED


def _design_payload(scenario):
    design = optimal_design(scenario)
    h = h_piecewise(scenario.agent_signal, scenario.prefs)
    maximal = constraint_signal(scenario)
    return design, {
        "scenario": scenario.to_dict(),
        "design": design.to_dict(),
        "constraint_signal": {"p0": maximal.t0, "p1": maximal.t1},
        "rho": h.rho,
        "breakpoints": [h.rho_low, h.rho_high],
        "jump_at_rho": h.jump_at_rho,
    }


def cmd_design(args) -> int:
    doc = load_scenario_file(args.scenario)
    scenario = require_valid(doc.scenario())
    design, payload = _design_payload(scenario)

    lines = [
        f"[+] regime: {design.regime.value}",
        f"    posteriors: [{design.low_posterior:.6f}, {design.high_posterior:.6f}]",
        f"    signal: p0 = {design.signal.t0:.6f}, p1 = {design.signal.t1:.6f}",
        f"    expected payoff: {design.expected_payoff:.6f}",
        f"    rho: {_fmt(design.rho)}, convexifiable: {design.convexifiable}",
        f"    maximal signal: p0 = {payload['constraint_signal']['p0']:.6f}, "
        f"p1 = {payload['constraint_signal']['p1']:.6f}",
    ]
    if design.h_values:
        hv = design.h_values
        lines.append(f"    H(low) = {hv['low']:.6f}, H(rho) = {hv['rho']:.6f}, H(high) = {hv['high']:.6f}")
    _emit(args, payload, lines)
    if args.save:
        DataLogger(_session(args, doc)).log_design(payload)
    return EXIT_OK


def _swept(doc, field: str, value: float):
    """(prefs, agent_signal, prior, constraint, interim) with one field replaced."""
    prefs, signal = doc.prefs, doc.agent_signal
    prior, constraint = doc.prior, doc.constraint
    interim = None
    if field == "q":
        signal = BinarySignal.symmetric(value)
    elif field == "q0":
        signal = BinarySignal(value, signal.t1)
    elif field == "q1":
        signal = BinarySignal(signal.t0, value)
    elif field == "prior":
        prior = value
    elif field == "interim":
        interim = value
    elif field == "agent_cutoff":
        prefs = agent_cutoff_misalignment(prefs, value)
    elif field == "max_low":
        constraint = BlackwellConstraint(value, constraint.max_high if constraint else 1.0)
    elif field == "max_high":
        constraint = BlackwellConstraint(constraint.max_low if constraint else 0.0, value)
    return prefs, signal, prior, constraint, interim


def _plan_delegates(plan, scenario) -> bool:
    if plan.rule is DelegationRule.ALWAYS:
        return True
    if plan.rule is DelegationRule.NEVER:
        return False
    w = bayes_weight(scenario.prior, plan.low, plan.high)
    support = [x for x, mass in ((plan.low, 1 - w), (plan.high, w)) if mass > 0]
    return any(optimal_delegation(x, scenario.agent_signal, scenario.prefs).delegate for x in support)


def sweep_rows(doc, field: str, start: float, stop: float, steps: int,
               regimes: List[str], interim: Optional[float] = None) -> List[dict]:
    if field not in SWEEP_FIELDS:
        raise DelegatixError(f"unknown sweep field '{field}' (choose from {', '.join(SWEEP_FIELDS)})")
    if steps < 1:
        raise DelegatixError("steps must be at least 1")
    for name in regimes:
        if name not in STAGE_ROWS:
            PolicyRegime.parse(name)

    values = [start] if steps == 1 else [float(v) for v in np.linspace(start, stop, steps)]
    rows = []
    for value in values:
        prefs, signal, prior, constraint, swept_interim = _swept(doc, field, value)
        x = swept_interim if swept_interim is not None else (interim if interim is not None else prior)

        for name in regimes:
            if name in STAGE_ROWS:
                if x is None:
                    raise DelegatixError("delegation-stage rows need --interim or a prior")
                payoff = (exante_delegation_payoff(x, signal, prefs) if name == "Delegation"
                          else optimal_payoff(x, signal, prefs))
                delegate = optimal_delegation(x, signal, prefs).delegate
                rows.append({"value": value, "regime": name, "payoff": payoff,
                             "design_regime": "", "delegate": delegate})
                continue

            regime = PolicyRegime.parse(name)
            if prior is None or constraint is None:
                raise DelegatixError("policy regimes need a prior and a constraint")
            scenario = Scenario(prior, prefs, signal, constraint)
            plan = regime_plan(scenario, regime)
            rows.append({"value": value, "regime": regime.value, "payoff": plan.payoff,
                         "design_regime": plan.design_regime or "",
                         "delegate": _plan_delegates(plan, scenario)})
    return rows


def write_sweep_csv(rows, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([format_float(row["value"]), row["regime"], format_float(row["payoff"]),
                         row["design_regime"], "true" if row["delegate"] else "false"])


def cmd_sweep(args) -> int:
    doc = load_scenario_file(args.scenario)
    _require_matrices(doc)
    regimes = [r.strip() for r in args.regimes.split(",") if r.strip()]
    rows = sweep_rows(doc, args.vary, args.start, args.stop, args.steps, regimes, args.interim)

    if args.json:
        print(json.dumps(rows, indent=2))
    elif args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as f:
            write_sweep_csv(rows, f)
        logger.info("✓ %d sweep rows written to %s", len(rows), args.csv)
    else:
        write_sweep_csv(rows, sys.stdout)

    if args.save:
        DataLogger(_session(args, doc)).log_sweep(rows, {"field": args.vary, "from": args.start,
                                                         "to": args.stop, "steps": args.steps})
    return EXIT_OK


def cmd_figures(args) -> int:
    doc = load_scenario_file(args.scenario)
    require_valid(_stage_scenario(doc, 0.5))

    manager = _session(args, doc)
    builder = FigureBuilder(manager.get_session_dir() / "figures")
    csv_path, json_path = builder.build(doc.prefs, doc.agent_signal, source=doc.source)
    files = [csv_path, json_path]

    if args.html:
        from modules.figure_visualizer import FigureVisualizer
        files.append(FigureVisualizer(csv_path).generate_html())

    DataLogger(manager).log_figures(files)
    _emit(args, {"files": files}, [f"✓ {path}" for path in files])
    return EXIT_OK


def cmd_witness(args) -> int:
    doc = load_scenario_file(args.scenario)
    _require_matrices(doc)
    grid = SearchGrid()

    if args.prop == 6:
        outcome = find_witness_prop6(doc.prefs, doc.agent_signal, grid, args.seed)
    else:
        outcome = find_witness_prop7(doc.prefs, doc.agent_signal, grid, args.seed,
                                     low_range=args.low_range, high_range=args.high_range)

    payload = outcome.to_dict()
    if outcome.found:
        w = outcome.witness
        c = w.scenario.constraint
        label = "interim" if args.prop == 6 else "prior"
        lines = [f"[+] witness found ({outcome.stage})",
                 f"    {label}: {w.interim_or_prior:.6f}",
                 f"    payoff gap: {w.payoff_gap:.6f}"]
        if args.prop == 7:
            lines.insert(2, f"    constraint: [{c.max_low:.6f}, {c.max_high:.6f}]")
    else:
        lines = [f"[!] no witness: {outcome.reason}"]
    _emit(args, payload, lines)

    if args.save:
        DataLogger(_session(args, doc)).log_witness(payload, args.prop)
    if outcome.found or outcome.precondition_failed:
        return EXIT_OK
    return EXIT_CHECK_FAILED


def cmd_oracle_check(args) -> int:
    if args.mc_samples < 1000:
        raise InvalidSampleCount(f"--mc-samples {args.mc_samples} rejected, minimum 1000")
    if args.grid_n < 3:
        raise DelegatixError(f"--grid-n {args.grid_n} rejected, minimum 3")
    doc = load_scenario_file(args.scenario)
    scenario = require_valid(doc.scenario())

    checks = oracle_check(scenario, args.grid_n, args.mc_samples, args.seed)
    payload = [c.to_dict() for c in checks]
    lines = [f"{'✓' if c.passed else '[!]'} {c.name}: observed {c.observed:.3g} (tolerance {c.tolerance:.3g})"
             for c in checks]
    _emit(args, {"checks": payload}, lines)

    if args.save:
        DataLogger(_session(args, doc)).log_oracle(payload, {"grid_n": args.grid_n,
                                                             "mc_samples": args.mc_samples,
                                                             "seed": args.seed})
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK_FAILED


def cmd_report(args) -> int:
    doc = load_scenario_file(args.scenario)
    scenario = require_valid(doc.scenario())
    report = regime_report(scenario).to_dict()
    design, _ = _design_payload(scenario)

    lines = [f"{'rank':>4}  {'regime':<24} payoff"]
    for row in sorted(report["rows"], key=lambda r: (r["rank"], r["regime"])):
        lines.append(f"{row['rank']:>4}  {row['regime']:<24} {row['payoff']:.10f}")
    if not report["dominance_ok"]:
        lines.append("[!] OptimalJoint is not the best regime")
    _emit(args, report, lines)

    manager = _session(args, doc) if args.save else None
    if args.pdf:
        from modules.report_writer import write_regime_report_pdf
        target = Path(args.pdf)
        if manager:
            target = manager.get_session_dir() / "reports" / target.name
        write_regime_report_pdf(report, target, scenario.to_dict(), design.to_dict(), doc.source)
    if manager:
        DataLogger(manager).log_report(report)
    return EXIT_OK if report["dominance_ok"] else EXIT_CHECK_FAILED


# -----------------------------
# Parser
# -----------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delegatix",
                                     description="Delegation and information design solver")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("scenario", help="scenario file")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--out", default=None, help="output directory (default $DELEGATIX_OUTPUT_DIR or ./delegatix_runs)")
        p.add_argument("--save", action="store_true", help="record the result in the run directory")
        p.set_defaults(func=func)
        return p

    p = command("delegate", cmd_delegate, "delegation decision at an interim posterior")
    p.add_argument("--interim", type=_belief, default=None)

    command("design", cmd_design, "optimal public signal")

    p = command("sweep", cmd_sweep, "comparative statics as CSV")
    p.add_argument("--vary", required=True, help=", ".join(SWEEP_FIELDS))
    p.add_argument("--from", dest="start", type=_belief, required=True)
    p.add_argument("--to", dest="stop", type=_belief, required=True)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--regimes", default="OptimalJoint",
                   help="comma-separated regime tags, plus Delegation and H")
    p.add_argument("--interim", type=_belief, default=None)
    p.add_argument("--csv", default=None, help="write the CSV here instead of stdout")

    p = command("figures", cmd_figures, "figure data (CSV + JSON annotations)")
    p.add_argument("--html", action="store_true", help="also render interactive HTML")

    p = command("witness", cmd_witness, "welfare-loss witness search")
    p.add_argument("--prop", type=int, choices=(6, 7), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--low-range", type=_range, default=(0.0, 1.0))
    p.add_argument("--high-range", type=_range, default=(0.0, 1.0))

    p = command("oracle-check", cmd_oracle_check, "grid and Monte Carlo cross-checks")
    p.add_argument("--grid-n", type=int, default=2001)
    p.add_argument("--mc-samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)

    p = command("report", cmd_report, "policy regime comparison")
    p.add_argument("--pdf", default=None,
                   help="also write a PDF report here (with --save, under the run's reports/)")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        return args.func(args)
    except ScenarioValidationError as e:
        print(f"invalid scenario {args.scenario}:", file=sys.stderr)
        for issue in e.report.issues:
            print(f"  {issue.field} [{issue.kind}]: {issue.message}", file=sys.stderr)
        if e.report.relabelable:
            print("  hint: both players mismatch the state; swap the action labels", file=sys.stderr)
        return EXIT_INVALID
    except (DelegatixError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
