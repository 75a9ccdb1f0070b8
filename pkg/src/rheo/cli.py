"""Command-line front end: simulate, batch, audit, witness.

Exit codes: 0 on success, 2 on a validation error, 3 when a simulated run
stopped at a blow-up (the partial CSV and summary are still written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import mat3
from .constitutive import MaterialParams, OldroydA, OldroydB, ZarembaJaumann
from .integrate import BLOWN_UP, COMPLETE, Trajectory
from .kinematics import PathSample
from .scenario import (
    ScenarioError,
    error_summary,
    from_config,
    load,
    run_batch,
    summary_json,
    write_outputs,
)
from .thermo import audit, negative_dissipation_witness

WITNESS_MODELS = {
    "zj": ZarembaJaumann,
    "zaremba_jaumann": ZarembaJaumann,
    "oa": OldroydA,
    "oldroyd_a": OldroydA,
    "ob": OldroydB,
    "oldroyd_b": OldroydB,
}


def _add_params_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lambda1", type=float, default=1.0, help="relaxation time")
    parser.add_argument("--eta-s", type=float, default=0.0, help="solvent viscosity")
    parser.add_argument("--eta-p", type=float, default=1.0, help="polymer viscosity")
    parser.add_argument("--mu", type=float, default=1.0, help="elastic modulus")


def _params_from_args(args: argparse.Namespace) -> MaterialParams:
    try:
        return MaterialParams(
            lambda1=args.lambda1, eta_s=args.eta_s, eta_p=args.eta_p, mu=args.mu
        )
    except ValueError as exc:
        raise ScenarioError("params", str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rheo",
        description="Simulate and audit incompressible viscoelastic flow models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario file")
    sim.add_argument("scenario_file", help="scenario config (JSON or TOML)")
    sim.add_argument("--out", default=".", help="output directory")
    sim.add_argument(
        "--emit-gnuplot", action="store_true", help="also write a companion plot script"
    )

    bat = sub.add_parser("batch", help="run a manifest of scenarios")
    bat.add_argument("manifest_file", help="JSON list of scenario paths or inline configs")
    bat.add_argument("--out", default=".", help="output directory")
    bat.add_argument("--jobs", type=int, default=1, help="parallel workers")
    bat.add_argument("--emit-gnuplot", action="store_true")

    aud = sub.add_parser("audit", help="recompute the audit of a trajectory CSV")
    aud.add_argument("trajectory_csv", help="CSV with t, F, and xi columns")
    aud.add_argument(
        "--model",
        default="oldroyd_b",
        choices=sorted(WITNESS_MODELS),
        help="model the trajectory was generated with",
    )
    _add_params_flags(aud)

    wit = sub.add_parser("witness", help="construct a negative-dissipation state")
    wit.add_argument(
        "--model", required=True, choices=sorted(WITNESS_MODELS), help="rate family"
    )
    wit.add_argument(
        "--xi0",
        nargs=6,
        type=float,
        required=True,
        metavar=tuple("X" + ab for ab in mat3.SYM6_ORDER),
        help="initial internal variable, upper-triangle order",
    )
    _add_params_flags(wit)
    return parser


def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load(args.scenario_file)
    _, _, summary = write_outputs(scenario, args.out, emit_gnuplot=args.emit_gnuplot)
    sys.stdout.write(summary_json(summary))
    return 3 if summary["status"] == BLOWN_UP else 0


def _load_manifest(path: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            manifest = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError("manifest-file", str(exc)) from exc
    if isinstance(manifest, dict):
        manifest = manifest.get("scenarios")
    if not isinstance(manifest, list):
        raise ScenarioError(
            "manifest-file", "expected a JSON list (or object with a 'scenarios' list)"
        )
    return manifest


def _cmd_batch(args: argparse.Namespace) -> int:
    entries = _load_manifest(args.manifest_file)
    base = os.path.dirname(os.path.abspath(args.manifest_file))
    scenarios = []
    slots = []  # None marks a slot filled by run_batch, in order
    for position, entry in enumerate(entries):
        label = entry if isinstance(entry, str) else f"manifest[{position}]"
        try:
            if isinstance(entry, str):
                entry_path = entry if os.path.isabs(entry) else os.path.join(base, entry)
                scenarios.append(load(entry_path))
            elif isinstance(entry, dict):
                scenarios.append(from_config(entry))
            else:
                raise ScenarioError(f"manifest[{position}]", "expected a path or object")
            slots.append(None)
        except ScenarioError as exc:
            slots.append(error_summary(str(label), str(exc)))

    results = iter(
        run_batch(
            scenarios,
            parallelism=args.jobs,
            out_dir=args.out,
            emit_gnuplot=args.emit_gnuplot,
        )
    )
    summaries = [next(results) if slot is None else slot for slot in slots]
    sys.stdout.write(json.dumps(summaries, sort_keys=True, indent=2) + "\n")
    if any(s["status"] == "error" for s in summaries):
        return 2
    if any(s["status"] == BLOWN_UP for s in summaries):
        return 3
    return 0


def _read_trajectory_csv(path: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = [line for line in handle.read().split("\n") if line]
    except OSError as exc:
        raise ScenarioError("trajectory-csv", str(exc)) from exc
    if len(lines) < 4:
        raise ScenarioError("trajectory-csv", "need at least 3 data rows")
    header = lines[0].split(",")
    required = (
        ["t"]
        + [f"F{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
        + [f"xi{ab}" for ab in mat3.SYM6_ORDER]
    )
    missing = [c for c in required if c not in header]
    if missing:
        raise ScenarioError("trajectory-csv", f"missing columns {missing!r}")
    idx = {c: header.index(c) for c in required}
    data = np.array([[float(cell) for cell in line.split(",")] for line in lines[1:]])
    t = data[:, idx["t"]]
    f = np.stack(
        [data[:, idx[f"F{i}{j}"]] for i in (1, 2, 3) for j in (1, 2, 3)], axis=-1
    ).reshape(-1, 3, 3)
    xi6 = np.stack([data[:, idx[f"xi{ab}"]] for ab in mat3.SYM6_ORDER], axis=-1)
    xi = np.array([mat3.sym6_to_mat(row) for row in xi6])
    return t, f, xi


def _cmd_audit(args: argparse.Namespace) -> int:
    t, f, xi = _read_trajectory_csv(args.trajectory_csv)
    dts = np.diff(t)
    if not np.all(np.abs(dts - dts[0]) <= 1e-9 * (1.0 + abs(dts[0]))):
        raise ScenarioError("trajectory-csv", "time grid must be uniform")
    dt = dts[0]

    # Rebuild the kinematic record; F-dot comes from finite differences, so
    # the dissipation columns carry O(dt^2) discretization error.
    f_dot = np.empty_like(f)
    f_dot[1:-1] = (f[2:] - f[:-2]) / (2.0 * dt)
    f_dot[0] = (f[1] - f[0]) / dt
    f_dot[-1] = (f[-1] - f[-2]) / dt
    f_inv = mat3.inv3(f)
    h = f_dot @ f_inv
    d = mat3.sym(h)
    c = mat3.transpose(f) @ f
    c_dot = mat3.transpose(f_dot) @ f + mat3.transpose(f) @ f_dot
    c_inv = mat3.inv3(c)
    kin = PathSample(
        t=t,
        f=f,
        h_ref=f_dot,
        h=h,
        d=d,
        w=mat3.skew(h),
        c=c,
        c_dot=c_dot,
        c_inv=c_inv,
        c_inv_dot=-c_inv @ c_dot @ c_inv,
    )
    params = _params_from_args(args)
    model = WITNESS_MODELS[args.model]()
    xi_ref = (f_inv @ xi @ mat3.transpose(f_inv)) / params.mu
    traj = Trajectory(
        model=model,
        params=params,
        protocol=None,
        t=t,
        kin=kin,
        xi_ref=xi_ref,
        sigma_p=xi,
        status=COMPLETE,
    )
    report = audit(traj)
    record = {
        "samples": int(len(t)),
        "t_start": float(t[0]),
        "t_end": float(t[-1]),
        "first_negative_dissipation_time": report.first_negative_dissipation_time,
        "psd_exit_time": report.psd_exit_time,
        "d_int_min": float(np.min(report.dissipation_eulerian)),
        "min_eig_sigma_p_min": float(np.min(report.min_eig_sigma_p)),
        "tr_xi_final": float(report.tr_xi[-1]),
    }
    sys.stdout.write(json.dumps(record, sort_keys=True, indent=2) + "\n")
    return 0


def _cmd_witness(args: argparse.Namespace) -> int:
    model = WITNESS_MODELS[args.model]()
    params = _params_from_args(args)
    xi0 = mat3.sym6_to_mat(args.xi0)
    try:
        f, h_ref, value = negative_dissipation_witness(model, xi0, params)
    except ValueError as exc:
        raise ScenarioError("xi0", str(exc)) from exc
    record = {
        "model": args.model,
        "F": [[float(x) for x in row] for row in f],
        "H": [[float(x) for x in row] for row in h_ref],
        "dissipation": value,
    }
    sys.stdout.write(json.dumps(record, sort_keys=True, indent=2) + "\n")
    return 0


def main(argv: "list[str] | None" = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "batch": _cmd_batch,
        "audit": _cmd_audit,
        "witness": _cmd_witness,
    }
    try:
        return handlers[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
