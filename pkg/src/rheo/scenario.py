"""Scenario files, deterministic runs, and bit-stable CSV/JSON emission.

A scenario is a flat key-value description (dotted keys, JSON or TOML on the
way in, canonical JSON on the way out) of one simulation: model, material
parameters, deformation protocol, initial internal variable, grid, and the
integrator to drive. Running one yields a CSV of per-sample columns and a
summary record with a fixed key set; every random ingredient is pinned by an
explicit seed so reruns are byte-identical.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import mat3
from .constitutive import (
    MaterialParams,
    ModelKind,
    NonlinearOldroydB,
    OldroydA,
    OldroydB,
    PolynomialOldroydB,
    ZarembaJaumann,
)
from .integrate import (
    BLOWN_UP,
    duhamel_oldroyd_b,
    integrate_eulerian,
    integrate_lagrangian,
    riccati_homogeneous,
)
from .kinematics import (
    ConstantF,
    PlanarExtension,
    SimpleShear,
    oscillatory_from_seed,
    sample_path,
)
from .rng import SplitMix64
from .thermo import audit

SEED_ENV_VAR = "RHEO_SEED"

THERMO_COLUMNS = (
    "d_int",
    "tr_xi_over_2lambda1",
    "xi_dot_d",
    "min_eig_sigma_p",
    "psd_flag",
    "lower_bound_margin",
)
F_COLUMNS = tuple(f"F{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3))
XI_COLUMNS = tuple(f"xi{ab}" for ab in mat3.SYM6_ORDER)
ALL_COLUMNS = ("t",) + THERMO_COLUMNS + F_COLUMNS + XI_COLUMNS

INTEGRATORS = ("rk4_lagrangian", "rk4_eulerian", "duhamel", "riccati")
PROTOCOL_KINDS = ("constant", "planar_extension", "simple_shear", "oscillatory")
INIT_PRESETS = ("zero", "identity")

SUMMARY_KEYS = (
    "name",
    "model",
    "integrator",
    "seed",
    "t_end",
    "dt",
    "status",
    "blowup_time",
    "first_negative_dissipation_time",
    "psd_exit_time",
    "d_int_min",
    "min_eig_sigma_p_min",
)

MODEL_ALIASES = {
    "oldroyd_b": "oldroyd_b",
    "ob": "oldroyd_b",
    "nonlinear": "nonlinear",
    "polynomial": "polynomial",
    "zaremba_jaumann": "zaremba_jaumann",
    "zj": "zaremba_jaumann",
    "oldroyd_a": "oldroyd_a",
    "oa": "oldroyd_a",
}

_NAME_RE = re.compile(r"^[A-Za-z0-9._-]+$")
_RANDOM_PSD_RE = re.compile(r"^random_psd\((\d+)\)$")


class ScenarioError(ValueError):
    """Validation failure; the message starts with the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class Scenario:
    name: str
    model: ModelKind
    params: MaterialParams
    protocol_kind: str
    protocol_options: dict
    init: "str | tuple[float, ...]"
    t_end: float
    dt: float
    integrator: str
    outputs: "tuple[str, ...]"


def model_label(model: ModelKind) -> str:
    if isinstance(model, NonlinearOldroydB):
        return f"nonlinear(k={model.k})"
    if isinstance(model, PolynomialOldroydB):
        return "polynomial(" + ",".join(repr(c) for c in model.coeffs) + ")"
    if isinstance(model, ZarembaJaumann):
        return "zaremba_jaumann"
    if isinstance(model, OldroydA):
        return "oldroyd_a"
    return "oldroyd_b"


def _flatten(obj: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in obj.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, dotted + "."))
        else:
            flat[dotted] = value
    return flat


def _take_number(cfg: dict, key: str, default=None) -> "float | None":
    if key not in cfg:
        return default
    value = cfg.pop(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(key, "expected a number")
    return float(value)


def _take_int(cfg: dict, key: str, default=None) -> "int | None":
    if key not in cfg:
        return default
    value = cfg.pop(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(key, "expected an integer")
    return value


def _parse_model(cfg: dict) -> ModelKind:
    kind = cfg.pop("model.kind", None)
    if kind is None:
        raise ScenarioError("model.kind", "required")
    canonical = MODEL_ALIASES.get(str(kind))
    if canonical is None:
        raise ScenarioError("model.kind", f"unknown model {kind!r}")
    if canonical == "nonlinear":
        k = _take_int(cfg, "model.k")
        if k is None:
            raise ScenarioError("model.k", "required for the nonlinear model")
        try:
            return NonlinearOldroydB(k=k)
        except ValueError as exc:
            raise ScenarioError("model.k", str(exc)) from exc
    if canonical == "polynomial":
        coeffs = cfg.pop("model.coeffs", None)
        if not isinstance(coeffs, (list, tuple)) or not coeffs:
            raise ScenarioError("model.coeffs", "expected a nonempty list of numbers")
        try:
            return PolynomialOldroydB(coeffs=tuple(float(c) for c in coeffs))
        except (TypeError, ValueError) as exc:
            raise ScenarioError("model.coeffs", str(exc)) from exc
    return {
        "oldroyd_b": OldroydB,
        "zaremba_jaumann": ZarembaJaumann,
        "oldroyd_a": OldroydA,
    }[canonical]()


def _parse_params(cfg: dict) -> MaterialParams:
    kwargs = {}
    for field_name in ("lambda1", "eta_s", "eta_p", "mu", "mu_k"):
        value = _take_number(cfg, f"params.{field_name}")
        if value is not None:
            kwargs[field_name] = value
    try:
        return MaterialParams(**kwargs)
    except ValueError as exc:
        raise ScenarioError("params", str(exc)) from exc


def _parse_protocol(cfg: dict) -> "tuple[str, dict]":
    kind = cfg.pop("protocol.kind", None)
    if kind is None:
        raise ScenarioError("protocol.kind", "required")
    if kind not in PROTOCOL_KINDS:
        raise ScenarioError("protocol.kind", f"unknown protocol {kind!r}")
    options: dict = {}
    if kind in ("planar_extension", "simple_shear"):
        options["rate"] = _take_number(cfg, "protocol.rate", 1.0)
    elif kind == "oscillatory":
        seed = _take_int(cfg, "protocol.seed")
        if seed is None:
            raise ScenarioError("protocol.seed", "required for the oscillatory protocol")
        options["seed"] = seed
        omega = _take_number(cfg, "protocol.omega", 1.0)
        if omega < 0.0:
            raise ScenarioError("protocol.omega", "must be nonnegative")
        options["omega"] = omega
    return kind, options


def _parse_init(cfg: dict) -> "str | tuple[float, ...]":
    value = cfg.pop("init", "zero")
    if isinstance(value, str):
        if value in INIT_PRESETS or _RANDOM_PSD_RE.match(value):
            return value
        raise ScenarioError(
            "init", f"unknown preset {value!r}; use zero, identity, or random_psd(seed)"
        )
    if isinstance(value, (list, tuple)):
        if len(value) != len(mat3.SYM6_ORDER):
            raise ScenarioError("init", "expected 6 symmetric entries")
        try:
            return tuple(float(v) for v in value)
        except (TypeError, ValueError) as exc:
            raise ScenarioError("init", "entries must be numbers") from exc
    raise ScenarioError("init", "expected a preset string or 6 numbers")


def from_config(config: dict) -> Scenario:
    """Build and validate a scenario from a flat or nested config mapping."""
    cfg = _flatten(config)

    name = cfg.pop("name", None)
    if not isinstance(name, str) or not _NAME_RE.match(name or ""):
        raise ScenarioError("name", "required; letters, digits, '.', '_', '-' only")

    model = _parse_model(cfg)
    params = _parse_params(cfg)
    protocol_kind, protocol_options = _parse_protocol(cfg)
    init = _parse_init(cfg)

    t_end = _take_number(cfg, "t_end")
    if t_end is None or t_end <= 0.0:
        raise ScenarioError("t_end", "required and must be positive")
    dt = _take_number(cfg, "dt")
    if dt is None or dt <= 0.0:
        raise ScenarioError("dt", "required and must be positive")
    steps = t_end / dt
    if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
        raise ScenarioError("dt", "t_end must be an integer number of dt steps")

    integrator = cfg.pop("integrator", "rk4_lagrangian")
    if integrator not in INTEGRATORS:
        raise ScenarioError("integrator", f"unknown integrator {integrator!r}")
    if integrator == "duhamel" and not isinstance(model, OldroydB):
        raise ScenarioError("integrator", "duhamel applies to the oldroyd_b model only")

    outputs = cfg.pop("outputs", None)
    if outputs is None:
        if integrator == "riccati":
            outputs = ("t",) + F_COLUMNS + XI_COLUMNS
        else:
            outputs = ALL_COLUMNS
    else:
        if not isinstance(outputs, (list, tuple)) or not outputs:
            raise ScenarioError("outputs", "expected a nonempty list of column names")
        unknown = [c for c in outputs if c not in ALL_COLUMNS]
        if unknown:
            raise ScenarioError("outputs", f"unknown columns {unknown!r}")
        if len(set(outputs)) != len(outputs):
            raise ScenarioError("outputs", "duplicate column names")
        outputs = tuple(outputs)
    if integrator == "riccati":
        thermo_requested = [c for c in outputs if c in THERMO_COLUMNS]
        if thermo_requested:
            raise ScenarioError(
                "outputs",
                f"columns {thermo_requested!r} are undefined for the riccati integrator",
            )

    if cfg:
        stray = sorted(cfg)[0]
        raise ScenarioError(stray, "unknown field")

    return Scenario(
        name=name,
        model=model,
        params=params,
        protocol_kind=protocol_kind,
        protocol_options=protocol_options,
        init=init,
        t_end=t_end,
        dt=dt,
        integrator=integrator,
        outputs=outputs,
    )


def to_config(s: Scenario) -> dict:
    """Flat dotted-key mapping; from_config(to_config(s)) == s."""
    cfg: dict = {"name": s.name}
    if isinstance(s.model, NonlinearOldroydB):
        cfg["model.kind"] = "nonlinear"
        cfg["model.k"] = s.model.k
    elif isinstance(s.model, PolynomialOldroydB):
        cfg["model.kind"] = "polynomial"
        cfg["model.coeffs"] = list(s.model.coeffs)
    else:
        cfg["model.kind"] = model_label(s.model)
    cfg["params.lambda1"] = s.params.lambda1
    cfg["params.eta_s"] = s.params.eta_s
    cfg["params.eta_p"] = s.params.eta_p
    cfg["params.mu"] = s.params.mu
    if s.params.mu_k is not None:
        cfg["params.mu_k"] = s.params.mu_k
    cfg["protocol.kind"] = s.protocol_kind
    for key, value in s.protocol_options.items():
        cfg[f"protocol.{key}"] = value
    cfg["init"] = s.init if isinstance(s.init, str) else list(s.init)
    cfg["t_end"] = s.t_end
    cfg["dt"] = s.dt
    cfg["integrator"] = s.integrator
    cfg["outputs"] = list(s.outputs)
    return cfg


def dumps(s: Scenario) -> str:
    """Canonical JSON serialization of a scenario."""
    return json.dumps(to_config(s), sort_keys=True, indent=2) + "\n"


def loads(text: str, fmt: "str | None" = None) -> Scenario:
    """Parse scenario text; fmt is 'json', 'toml', or None to try both."""
    if fmt == "json":
        return from_config(json.loads(text))
    if fmt == "toml":
        return from_config(tomllib.loads(text))
    if fmt is not None:
        raise ScenarioError("format", f"unknown config format {fmt!r}")
    try:
        return from_config(json.loads(text))
    except json.JSONDecodeError:
        pass
    try:
        return from_config(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError("format", f"neither valid JSON nor TOML: {exc}") from exc


def load(path: str) -> Scenario:
    suffix = os.path.splitext(path)[1].lower()
    fmt = {".json": "json", ".toml": "toml"}.get(suffix)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ScenarioError("scenario-file", str(exc)) from exc
    return loads(text, fmt)


def _seed_override() -> "int | None":
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise ScenarioError(SEED_ENV_VAR, f"expected an integer, got {raw!r}") from exc


def build_protocol(s: Scenario, seed_override: "int | None" = None):
    if s.protocol_kind == "constant":
        return ConstantF()
    if s.protocol_kind == "planar_extension":
        return PlanarExtension(rate=s.protocol_options["rate"])
    if s.protocol_kind == "simple_shear":
        return SimpleShear(rate=s.protocol_options["rate"])
    seed = s.protocol_options["seed"] if seed_override is None else seed_override
    return oscillatory_from_seed(seed, omega=s.protocol_options["omega"])


def resolve_init(s: Scenario, seed_override: "int | None" = None) -> np.ndarray:
    if isinstance(s.init, tuple):
        return mat3.sym6_to_mat(s.init)
    if s.init == "zero":
        return np.zeros((3, 3))
    if s.init == "identity":
        return np.eye(3)
    seed = int(_RANDOM_PSD_RE.match(s.init).group(1))
    if seed_override is not None:
        seed = seed_override + 1
    return SplitMix64(seed).psd_mat3()


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    return format(float(value), ".16e")


def _column_arrays(s: Scenario, result) -> "tuple[dict, dict]":
    """Per-column arrays plus the summary, from an integration result."""
    summary = {key: None for key in SUMMARY_KEYS}
    summary["name"] = s.name
    summary["model"] = model_label(s.model)
    summary["integrator"] = s.integrator
    summary["seed"] = s.protocol_options.get("seed")
    summary["t_end"] = s.t_end
    summary["dt"] = s.dt
    summary["status"] = result.status
    summary["blowup_time"] = result.blowup_time

    columns: dict = {"t": result.t}
    if s.integrator == "riccati":
        kin = sample_path(build_protocol(s, _seed_override()), result.t)
        state = result.z
        for idx, name in enumerate(F_COLUMNS):
            columns[name] = kin.f[:, idx // 3, idx % 3]
    else:
        report = audit(result)
        columns["d_int"] = report.dissipation_eulerian
        columns["tr_xi_over_2lambda1"] = report.tr_xi / (2.0 * s.params.lambda1)
        columns["xi_dot_d"] = report.xi_contract_d
        columns["min_eig_sigma_p"] = report.min_eig_sigma_p
        columns["psd_flag"] = report.psd_flag
        columns["lower_bound_margin"] = report.lower_bound_margin
        state = result.sigma_p
        for idx, name in enumerate(F_COLUMNS):
            columns[name] = result.f[:, idx // 3, idx % 3]
        summary["first_negative_dissipation_time"] = report.first_negative_dissipation_time
        summary["psd_exit_time"] = report.psd_exit_time
        summary["d_int_min"] = float(np.min(report.dissipation_eulerian))
        summary["min_eig_sigma_p_min"] = float(np.min(report.min_eig_sigma_p))
    for name, (a, b) in zip(XI_COLUMNS, ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))):
        columns[name] = state[:, a, b]
    return columns, summary


def run_scenario(s: Scenario) -> "tuple[str, dict]":
    """Run one scenario; returns (csv text, summary record).

    A blow-up is not an error: the CSV holds the samples up to the stop and
    the summary records the bracket time and status.
    """
    override = _seed_override()
    protocol = build_protocol(s, override)
    init = resolve_init(s, override)
    try:
        if s.integrator == "rk4_lagrangian":
            result = integrate_lagrangian(s.model, s.params, protocol, init, s.t_end, s.dt)
        elif s.integrator == "rk4_eulerian":
            result = integrate_eulerian(s.model, s.params, protocol, init, s.t_end, s.dt)
        elif s.integrator == "duhamel":
            result = duhamel_oldroyd_b(s.params, protocol, init, s.t_end, s.dt)
        else:
            result = riccati_homogeneous(protocol, init, s.t_end, s.dt)
    except ValueError as exc:
        raise ScenarioError("grid", str(exc)) from exc

    columns, summary = _column_arrays(s, result)
    if override is not None and s.protocol_kind == "oscillatory":
        summary["seed"] = override
    lines = [",".join(s.outputs)]
    for i in range(len(result.t)):
        lines.append(",".join(_format_cell(columns[name][i]) for name in s.outputs))
    return "\n".join(lines) + "\n", summary


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def summary_json(summary: dict) -> str:
    return json.dumps(summary, sort_keys=True, indent=2) + "\n"


def gnuplot_script(s: Scenario, csv_name: str) -> str:
    """Companion gnuplot script plotting whichever audit columns were emitted."""
    col = {name: i + 1 for i, name in enumerate(s.outputs)}
    lines = [
        "# Companion plot script; run with: gnuplot <this file>",
        "set datafile separator comma",
        "set key autotitle columnhead",
        'set xlabel "t"',
        "set term pngcairo size 960,600",
    ]
    if "t" in col and "d_int" in col:
        parts = [f'"{csv_name}" using {col["t"]}:{col["d_int"]} with lines lw 2 title "d_int"']
        if "tr_xi_over_2lambda1" in col:
            parts.append(
                f'"" using {col["t"]}:{col["tr_xi_over_2lambda1"]} with lines dashtype 2'
                ' title "tr(xi)/(2 lambda1)"'
            )
        if "xi_dot_d" in col:
            parts.append(
                f'"" using {col["t"]}:{col["xi_dot_d"]} with lines dashtype 3 title "xi : d"'
            )
        lines.append(f'set output "{s.name}_dissipation.png"')
        lines.append("plot " + ", \\\n     ".join(parts))
    if "t" in col and "min_eig_sigma_p" in col:
        floor = -s.params.eta_p / s.params.lambda1
        lines.append(f'set output "{s.name}_mineig.png"')
        lines.append(
            f'plot "{csv_name}" using {col["t"]}:{col["min_eig_sigma_p"]} with lines lw 2'
            f' title "min eig sigma_p", {_format_cell(floor)} with lines dashtype 2'
            ' title "relaxation floor"'
        )
    return "\n".join(lines) + "\n"


def write_outputs(
    s: Scenario, out_dir: str, emit_gnuplot: bool = False
) -> "tuple[str, str, dict]":
    """Run a scenario and write <name>.csv and <name>.summary.json atomically."""
    csv_text, summary = run_scenario(s)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{s.name}.csv")
    summary_path = os.path.join(out_dir, f"{s.name}.summary.json")
    _atomic_write_text(csv_path, csv_text)
    _atomic_write_text(summary_path, summary_json(summary))
    if emit_gnuplot:
        _atomic_write_text(
            os.path.join(out_dir, f"{s.name}.gp"),
            gnuplot_script(s, f"{s.name}.csv"),
        )
    return csv_path, summary_path, summary


def error_summary(name: str, message: str) -> dict:
    summary = {key: None for key in SUMMARY_KEYS}
    summary["name"] = name
    summary["status"] = "error"
    summary["error"] = message
    return summary


def _batch_entry(task: "tuple[Scenario, str | None, bool]") -> dict:
    scenario, out_dir, emit_gnuplot = task
    try:
        if out_dir is None:
            _, summary = run_scenario(scenario)
        else:
            _, _, summary = write_outputs(scenario, out_dir, emit_gnuplot)
        return summary
    except Exception as exc:
        return error_summary(scenario.name, str(exc))


def run_batch(
    scenarios: "list[Scenario]",
    parallelism: int = 1,
    out_dir: "str | None" = None,
    emit_gnuplot: bool = False,
) -> "list[dict]":
    """Run scenarios, optionally in parallel; summaries keep input order.

    Per-scenario failures become status="error" records; the batch keeps
    going. Results are independent of parallelism because every scenario
    carries its own seeds.
    """
    if parallelism < 1:
        raise ScenarioError("parallelism", "must be at least 1")
    tasks = [(s, out_dir, emit_gnuplot) for s in scenarios]
    if parallelism == 1 or len(tasks) <= 1:
        return [_batch_entry(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_batch_entry, tasks))
