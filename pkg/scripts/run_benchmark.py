#!/usr/bin/env python3
"""Run the bundled three-pursuer benchmark end to end and print a summary.

Equivalent to ``aaolq simulate --scenario scenarios/pursuit_benchmark.json``
with a friendlier printout. Artifacts (conditions.txt, solution.csv,
trajectory.csv, distances.csv, positions.csv, summary.txt) land in --out.
"""
from __future__ import annotations

import argparse
import dataclasses
from pathlib import Path

from aaolq import load_scenario, run

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--scenario",
        default=str(ROOT / "scenarios" / "pursuit_benchmark.json"),
        help="scenario file to run (default: bundled benchmark)",
    )
    parser.add_argument("--out", default="out/benchmark", help="artifact directory")
    parser.add_argument(
        "--mode",
        choices=["nash", "team"],
        default=None,
        help="override the scenario's strategy mode",
    )
    args = parser.parse_args(argv)

    scenario = load_scenario(args.scenario)
    if args.mode is not None:
        scenario = dataclasses.replace(
            scenario, run=dataclasses.replace(scenario.run, mode=args.mode)
        )
    result = run(scenario, out_dir=args.out)

    print(f"mode: {result.mode}")
    if result.sol is not None:
        print(f"backward solve: {result.sol.status.value}")
    if result.conditions is not None:
        c = result.conditions
        print(
            f"conditions: sum_Q min eig = {c.sum_q_min_eig:.6g}, "
            f"sum_Sf min eig = {c.sum_sf_min_eig:.6g}, "
            f"solution norm bound = {c.envelope_bound:.6g}"
        )
    if result.traj is not None:
        costs = ", ".join(f"J{i + 1} = {c:.4f}" for i, c in enumerate(result.traj.costs))
        print(f"costs: {costs}")
    if result.pursuit is not None:
        p = result.pursuit
        finals = ", ".join(f"{d:.4f}" for d in p.final_distances)
        print(f"final distances: {finals} (capture radius {p.capture_radius})")
        if p.capture_time is not None:
            print(f"captured at t = {p.capture_time:.3f} by pursuer {p.captured_by + 1}")
        else:
            print("no capture within the horizon")
    for message in result.messages:
        print(f"note: {message}")
    print(f"artifacts in {result.out_dir}")
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
