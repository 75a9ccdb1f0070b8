#!/usr/bin/env python3
"""Dissipation sign structure of the three linear rate families.

Drives the oscillatory random-direction protocol (lambda1 = 10, eta_s = 0.1,
eta_p = 1.9, omega = 0.75, xi0 = 0) for the upper-convected, corotational,
and lower-convected models over a set of seeds, writes one CSV per run, and
prints where each model's internal dissipation first turns negative.
"""

from __future__ import annotations

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from rheo.scenario import from_config, run_batch  # noqa: E402

MODELS = ("oldroyd_b", "zaremba_jaumann", "oldroyd_a")


def scenario_config(model: str, seed: int, t_end: float, dt: float) -> dict:
    return {
        "name": f"fig1-{model}-seed{seed}",
        "model.kind": model,
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
    parser.add_argument("--out", default="fig1-out", help="output directory")
    parser.add_argument("--seeds", type=int, nargs="+", default=list(range(10)))
    parser.add_argument("--t-end", type=float, default=40.0)
    parser.add_argument("--dt", type=float, default=0.01)
    parser.add_argument("--jobs", type=int, default=max(os.cpu_count() or 1, 1))
    parser.add_argument("--emit-gnuplot", action="store_true")
    args = parser.parse_args()

    scenarios = [
        from_config(scenario_config(model, seed, args.t_end, args.dt))
        for seed in args.seeds
        for model in MODELS
    ]
    summaries = run_batch(
        scenarios, parallelism=args.jobs, out_dir=args.out,
        emit_gnuplot=args.emit_gnuplot,
    )

    print(f"{'run':<32} {'min d_int':>14} {'first negative t':>18}")
    failures = 0
    for summary in summaries:
        if summary["status"] != "complete":
            failures += 1
            print(f"{summary['name']:<32} {summary['status']}")
            continue
        first = summary["first_negative_dissipation_time"]
        print(
            f"{summary['name']:<32} {summary['d_int_min']:>14.6e} "
            f"{'-' if first is None else format(first, '>18.4f')}"
        )
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
