#!/usr/bin/env python3
"""Smallest stress eigenvalue of the upper-convected model against its floor.

Same driving as run_fig1.py, upper-convected model only. The smallest
eigenvalue of the polymer stress leaves the positive cone in finite time but
must stay above -eta_p/lambda1 (= -0.19 at the reference parameters); this
script reports the observed minimum and the margin to the floor per seed.
"""

from __future__ import annotations

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from rheo.scenario import from_config, run_batch  # noqa: E402


def scenario_config(seed: int, t_end: float, dt: float) -> dict:
    return {
        "name": f"fig2-seed{seed}",
        "model.kind": "oldroyd_b",
        "params.lambda1": 10.0,
        "params.eta_s": 0.1,
        "params.eta_p": 1.9,
        "protocol.kind": "oscillatory",
        "protocol.seed": seed,
        "protocol.omega": 0.75,
        "init": "zero",
        "t_end": t_end,
        "dt": dt,
        "integrator": "rk4_lagrangian",
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fig2-out", help="output directory")
    parser.add_argument("--seeds", type=int, nargs="+", default=list(range(10)))
    parser.add_argument("--t-end", type=float, default=40.0)
    parser.add_argument("--dt", type=float, default=0.01)
    parser.add_argument("--jobs", type=int, default=max(os.cpu_count() or 1, 1))
    parser.add_argument("--emit-gnuplot", action="store_true")
    args = parser.parse_args()

    scenarios = [
        from_config(scenario_config(seed, args.t_end, args.dt)) for seed in args.seeds
    ]
    summaries = run_batch(
        scenarios, parallelism=args.jobs, out_dir=args.out,
        emit_gnuplot=args.emit_gnuplot,
    )

    floor = -1.9 / 10.0
    print(f"relaxation floor: {floor:.6f}")
    print(f"{'run':<20} {'min eig sigma_p':>16} {'margin':>12} {'exits cone at':>14}")
    violations = 0
    for summary in summaries:
        if summary["status"] != "complete":
            violations += 1
            print(f"{summary['name']:<20} {summary['status']}")
            continue
        low = summary["min_eig_sigma_p_min"]
        exit_t = summary["psd_exit_time"]
        if low <= floor:
            violations += 1
        print(
            f"{summary['name']:<20} {low:>16.6e} {low - floor:>12.6e} "
            f"{'-' if exit_t is None else format(exit_t, '>14.4f')}"
        )
    return 1 if violations else 0


if __name__ == "__main__":
    sys.exit(main())
