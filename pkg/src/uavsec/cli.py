"""Command-line front end: solve missions, validate exported solutions, probe
the flight-power model.

Exit codes: 0 feasible convergence, 2 infeasibility (or failed validation),
1 usage/runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .orchestrate import (RunParams, RunSpec, alternate_optimize, export_results,
                          load_solution, run_sweep)
from .metrics import audit
from .power import flight_power_components
from .scenario import FlightPowerParams, ScenarioError, load_scenario

# rotary-wing defaults used when no config is supplied to flight-power
DEFAULT_FLIGHT = FlightPowerParams(Omega=300.0, r=0.4, rho=1.225, s=0.05,
                                   A_r=0.503, P_o=79.86, P_i=88.63, v0=4.03, d0=0.3)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavsec",
        description="Energy-efficient secure UAV-OFDMA downlink planner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the alternating optimizer")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--scheme", default="PA",
                         choices=["PA", "NJ", "SAJ", "ZAI", "SLI", "PERFECT_CSI"])
    p_solve.add_argument("--out", default=None, help="export directory")
    p_solve.add_argument("--sweep", default=None,
                         help="parameter sweep, e.g. P_peak_I=0.5,1,2")
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--max-outer", type=int, default=None)

    p_val = sub.add_parser("validate", help="audit an exported solution")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--solution", required=True, help="export directory to audit")
    p_val.add_argument("--samples", type=int, default=10_000)

    p_fp = sub.add_parser("flight-power", help="evaluate the rotary-wing power model")
    p_fp.add_argument("--speed", type=float, required=True)
    p_fp.add_argument("--config", default=None)
    return parser


def _cmd_solve(args) -> int:
    cfg = load_scenario(args.config)
    params = RunParams(seed=args.seed)
    if args.max_outer is not None:
        params.max_outer = args.max_outer
    if args.sweep:
        name, _, vals = args.sweep.partition("=")
        values = [float(v) for v in vals.split(",") if v]
        spec = RunSpec(scheme=args.scheme, sweep_param=name.strip(),
                       sweep_values=values, params=params)
        reports = run_sweep(cfg, spec)
        for val, rep in zip(values, reports):
            print(f"{name}={val:g}: scheme={rep.scheme} status={rep.status} "
                  f"EE={rep.ee:.6g} bit/J")
            if args.out:
                export_results(rep, f"{args.out}/{name}_{val:g}")
        worst = max(reports, key=lambda r: 0 if r.status == "ok" else 1)
        return 0 if all(r.status == "ok" for r in reports) else 2
    report = alternate_optimize(cfg, params, scheme=args.scheme)
    print(f"scheme={report.scheme} status={report.status} "
          f"converged={report.converged} iterations={report.outer_iterations}")
    print(f"energy efficiency: {report.ee:.6g} bit/J")
    if report.audit is not None:
        print(f"audit: {'pass' if report.audit.passed else 'FAIL'}"
              + ("" if report.audit.passed
                 else f" ({', '.join(report.audit.failed_names())})"))
    if args.out:
        for path in export_results(report, args.out):
            print(f"wrote {path}")
    return 0 if report.status == "ok" else 2


def _cmd_validate(args) -> int:
    cfg = load_scenario(args.config)
    alloc, info_traj, jammer_traj = load_solution(args.solution, cfg)
    result = audit(alloc, info_traj, jammer_traj, cfg, samples_per_eve=args.samples)
    for check in result.checks:
        print(f"{'PASS' if check.passed else 'FAIL'}  {check.name:<24} "
              f"margin={check.margin:.3e}")
    print(f"audit {'passed' if result.passed else 'FAILED'}")
    return 0 if result.passed else 2


def _cmd_flight_power(args) -> int:
    fp = DEFAULT_FLIGHT if args.config is None else load_scenario(args.config).flight
    blade, induced, parasite = flight_power_components(args.speed, fp)
    total = blade + induced + parasite
    print(f"speed: {args.speed:g} m/s")
    print(f"blade profile: {blade:.4f} W")
    print(f"induced:       {induced:.4f} W")
    print(f"parasite:      {parasite:.4f} W")
    print(f"total flight:  {total:.4f} W")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "flight-power":
            return _cmd_flight_power(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # surface runtime failures as exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
