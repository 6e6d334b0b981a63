"""Batch command-line front end.

    hybrid <command> --config <path> [--out <path>] [--workers k] [--dims spec]

Commands: couplings, table, evolve, steady, spectrum, sweep. The config is an
INI file; see README.md for the sections and the unit rules. Every run writes
a CSV table (17 significant digits, header row, provenance column) and a
``.meta.json`` sidecar with all inputs, the constants table, tolerances and
the wall time.

Exit codes: 0 ok, 2 config error, 3 physics precondition failure,
4 instability / no steady state, 5 truncation failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import re
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import constants
from . import gaussian as gs
from . import lindblad as lb
from . import operators as ops
from . import scenarios as sc
from .errors import (HybridError, NoSteadyStateError, PreconditionError, StiffnessError, TruncationError,
                     TruncationWarning)

COMMANDS = ("couplings", "table", "evolve", "steady", "spectrum", "sweep")
EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_INSTABILITY, EXIT_TRUNCATION = 0, 2, 3, 4, 5
RESERVED_SECTIONS = {"run", "time", "evolve", "sweep", "spectrum"}


class ConfigError(HybridError):
    """Malformed or incomplete configuration (exit code 2)."""


# -- values with units ------------------------------------------------------------

_FREQ_UNITS = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9}
_UNITS = {
    "": 1.0, "1": 1.0,
    "rad/s": 1.0,
    "s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12,
    "kg": 1.0, "g": 1e-3, "mg": 1e-6, "ug": 1e-9, "ng": 1e-12, "pg": 1e-15,
    "m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9,
    "K": 1.0, "mK": 1e-3,
    "V": 1.0, "mV": 1e-3,
    "F": 1.0, "pF": 1e-12, "fF": 1e-15, "aF": 1e-18,
    "C": 1.0,
    "T": 1.0, "mT": 1e-3, "T/m": 1.0,
    "A": 1.0, "mA": 1e-3, "uA": 1e-6, "nA": 1e-9,
    "J": 1.0, "W": 1.0, "mW": 1e-3, "uW": 1e-6,
    "J/T": 1.0,
}
_VALUE_RE = re.compile(r"^\s*(?P<prefix>2pi\s*\*|h\s*\*)?\s*(?P<num>[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?)"
                       r"\s*(?P<unit>[A-Za-z/0-9]*)\s*$")


def parse_value(text: str) -> float:
    """Parse ``[2pi*|h*]<number> [unit]`` into an SI float.

    ``2pi*`` turns a frequency in (k/M/G)Hz into rad/s and ``h*`` turns it into
    an energy in J. A bare Hz value is rejected as ambiguous; ``eV`` is
    converted to J.
    """
    m = _VALUE_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse value {text!r}")
    num = float(m.group("num"))
    unit = m.group("unit")
    prefix = (m.group("prefix") or "").replace(" ", "")
    if unit in _FREQ_UNITS:
        if prefix == "2pi*":
            return constants.TWO_PI * num * _FREQ_UNITS[unit]
        if prefix == "h*":
            return constants.active().h * num * _FREQ_UNITS[unit]
        raise ValueError(f"frequency {text!r} is ambiguous; write '2pi*<value> {unit}' for rad/s "
                         f"or 'h*<value> {unit}' for an energy")
    if prefix:
        raise ValueError(f"prefix {prefix!r} only applies to frequencies in Hz, got unit {unit!r}")
    if unit == "eV":
        return num * constants.active().e
    if unit not in _UNITS:
        raise ValueError(f"unknown unit {unit!r} in {text!r}")
    return num * _UNITS[unit]


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(x) for x in re.split(r"[x,\s]+", text.strip()) if x)
    except ValueError:
        raise ConfigError(f"bad dims spec {text!r}; use e.g. '6' or '4x4'") from None
    if not dims or min(dims) < 2:
        raise ConfigError(f"bad dims spec {text!r}; every dimension must be >= 2")
    return dims


# -- config -------------------------------------------------------------------------

@dataclass
class RunConfig:
    path: str
    text: str
    command: str
    scenario: str
    overrides: dict[str, float]
    sections: dict[str, dict[str, str]]
    lines: dict[tuple[str, str], int]
    dims: tuple[int, ...] | None = None
    workers: int = 1
    out: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def get(self, section: str, key: str, default: str | None = None, required: bool = False) -> str | None:
        sec = self.sections.get(section, {})
        if key in sec:
            return sec[key]
        if required:
            raise ConfigError(f"{self.path}: missing required key '{key}' in section [{section}]")
        return default

    def value(self, section: str, key: str, default: float | None = None, required: bool = False) -> float | None:
        raw = self.get(section, key, None, required)
        if raw is None:
            return default
        try:
            return parse_value(raw)
        except ValueError as exc:
            raise ConfigError(self.where(section, key) + str(exc)) from None

    def where(self, section: str, key: str) -> str:
        line = self.lines.get((section, key))
        return f"{self.path}:{line}: " if line else f"{self.path}: "


def _line_index(text: str) -> dict[tuple[str, str], int]:
    index: dict[tuple[str, str], int] = {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if section is not None and ("=" in line or ":" in line):
            key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            index.setdefault((section, key), n)
    return index


def load_config(path: str | Path, command: str | None = None, dims: str | None = None,
                workers: int | None = None, out: str | None = None) -> RunConfig:
    path = str(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigError(f"{path}:{line if line is not None else '?'}: {exc.message.splitlines()[0]}") from None
    sections = {s: dict(parser[s]) for s in parser.sections()}
    lines = _line_index(text)
    run = sections.get("run", {})
    cfg_command = run.get("command")
    if command is None and cfg_command is None:
        raise ConfigError(f"{path}: no command given ([run] command or command line)")
    if command is not None and cfg_command is not None and command != cfg_command:
        raise ConfigError(f"{path}:{lines.get(('run', 'command'), '?')}: config command {cfg_command!r} "
                          f"does not match requested command {command!r}")
    command = command or cfg_command
    if command not in COMMANDS:
        raise ConfigError(f"{path}: unknown command {command!r}; valid: {', '.join(COMMANDS)}")
    scenario = run.get("scenario") or run.get("platform")
    if command != "table":
        if not scenario:
            raise ConfigError(f"{path}: [run] needs 'scenario = <name>' (valid: {', '.join(sc.builtin_names())})")
        if scenario not in sc.builtin_names():
            raise ConfigError(f"{path}:{lines.get(('run', 'scenario'), lines.get(('run', 'platform'), '?'))}: "
                              f"unknown scenario {scenario!r}; valid: {', '.join(sc.builtin_names())}")
    overrides: dict[str, float] = {}
    for sec, items in sections.items():
        if sec in RESERVED_SECTIONS:
            continue
        for key, raw in items.items():
            try:
                overrides[f"{sec}.{key}"] = parse_value(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lines.get((sec, key), '?')}: {exc}") from None
    cfg = RunConfig(path, text, command, scenario or "", overrides, sections, lines)
    dims_text = dims or run.get("dims")
    cfg.dims = parse_dims(dims_text) if dims_text else None
    try:
        cfg.workers = int(workers if workers is not None else run.get("workers", 1))
    except ValueError:
        raise ConfigError(f"{cfg.where('run', 'workers')}workers must be an integer") from None
    if cfg.workers < 1:
        raise ConfigError(f"{path}: workers must be >= 1")
    cfg.out = out or run.get("out")
    return cfg


def resolve_scenario(name: str, overrides: dict[str, float], cfg: RunConfig | None = None) -> sc.Scenario:
    base = sc.builtin(name)
    if not overrides:
        return base
    for p in overrides:
        try:
            base.get(p)
        except KeyError as exc:
            sec, key = p.split(".", 1)
            where = cfg.where(sec, key) if cfg else ""
            raise ConfigError(where + str(exc.args[0])) from None
    values = {p: _coerce(base.get(p), v) for p, v in overrides.items()}
    return base.with_values(values)


def _coerce(current: Any, value: float) -> Any:
    if isinstance(current, bool):
        return bool(value)
    if isinstance(current, int):
        return int(round(value))
    return value


# -- output ----------------------------------------------------------------------------

def fmt(x: Any) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{float(x):.17g}"
    if x is None:
        return ""
    return str(x)


@dataclass
class Table:
    header: list[str]
    rows: list[list[Any]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([fmt(x) for x in r])
        return buf.getvalue()


def _tolerances() -> dict[str, float]:
    return {
        "lindblad_rtol": lb.RTOL, "lindblad_atol": lb.ATOL, "trace_tol": lb.TRACE_TOL,
        "top_fock_initial": lb.TOP_FOCK_INITIAL, "top_fock_warn": lb.TOP_FOCK_WARN,
        "gaussian_rtol": gs.RTOL, "gaussian_atol": gs.ATOL, "lyapunov_rtol": gs.LYAPUNOV_RTOL,
    }


def _package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_outputs(cfg: RunConfig, table: Table, extra_meta: dict, wall: float, out: Path) -> Path:
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(table.to_csv(), encoding="utf-8")
    c = constants.active()
    meta = {
        "command": cfg.command,
        "config_path": cfg.path,
        "config_text": cfg.text,
        "scenario": cfg.scenario,
        "overrides": {k: fmt(v) for k, v in sorted(cfg.overrides.items())},
        "dims": list(cfg.dims) if cfg.dims else None,
        "workers": cfg.workers,
        "constants_version": c.version,
        "constants": {k: (v if isinstance(v, dict) else fmt(v)) for k, v in c.as_dict().items()},
        "tolerances": {k: fmt(v) for k, v in _tolerances().items()},
        "package_version": _package_version(),
        "columns": table.header,
        "details": extra_meta,
        "wall_time_s": round(wall, 6),
    }
    meta_path = out.with_name(out.name + ".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return meta_path


# -- commands ----------------------------------------------------------------------------

def _provenance(s: sc.Scenario, note: str) -> str:
    return f"{s.name}: {note}" if note else s.name


def cmd_couplings(cfg: RunConfig) -> tuple[Table, dict]:
    s = resolve_scenario(cfg.scenario, cfg.overrides, cfg)
    rows = []
    for name, d in s.derived.items():
        hz = d.value / constants.TWO_PI if d.unit == "rad/s" else None
        rows.append([name, d.value, d.unit, hz, _provenance(s, d.note)])
    for path in s.paths():
        v = s.get(path)
        if isinstance(v, (int, float)) and v is not None:
            rows.append([f"param:{path}", v, "SI", None, s.provenance.get(path, "")])
    return Table(["quantity", "value_si", "unit", "value_over_2pi_hz", "provenance"], rows), {}


def cmd_table(cfg: RunConfig) -> tuple[Table, dict]:
    rows = []
    for r in sc.estimate_table():
        lo, hi = r.range_hz
        rows.append([r.platform, r.mechanism, lo, hi, r.quoted_low_hz, r.quoted_high_hz,
                     "" if r.overlaps is None else r.overlaps, r.gamma_th, r.lambda_t2_low, r.lambda_t2_high,
                     r.strong_low, r.strong_high, "Hz for lambda columns, rad/s for gamma_th; " + r.provenance])
    header = ["platform", "mechanism", "lambda_low_hz", "lambda_high_hz", "quoted_low_hz", "quoted_high_hz",
              "overlaps_quoted", "gamma_th_rad_s", "lambda_t2_low", "lambda_t2_high", "strong_low", "strong_high",
              "provenance"]
    return Table(header, rows), {"spans_version": sc.load_estimate_spans()["version"]}


def _time_grid(cfg: RunConfig, s: sc.Scenario, lam: float | None, omega: float | None) -> np.ndarray:
    raw = cfg.get("time", "t_end", required=True)
    points = int(cfg.get("time", "points", "201"))
    if points < 2:
        raise ConfigError(cfg.where("time", "points") + "need at least 2 time points")
    m = re.match(r"^\s*([-+]?[\d.eE+-]+)\s*(swap|swaps|period|periods)\s*$", raw)
    if m:
        x = float(m.group(1))
        if m.group(2).startswith("swap"):
            if not lam:
                raise ConfigError(cfg.where("time", "t_end") + "'swap' units need a nonzero coupling")
            t_end = x * math.pi / (2.0 * abs(lam))
        else:
            t_end = x * 2.0 * math.pi / omega
    else:
        try:
            t_end = parse_value(raw)
        except ValueError as exc:
            raise ConfigError(cfg.where("time", "t_end") + str(exc)) from None
    if t_end <= 0:
        raise ConfigError(cfg.where("time", "t_end") + "t_end must be positive")
    return np.linspace(0.0, t_end, points)


def _levels(text: str, n: int, cfg: RunConfig) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ConfigError(cfg.where("evolve", "initial") + f"expected {n} comma-separated levels, got {text!r}")
    lv = []
    for p in parts:
        if p in ("g", "e"):
            lv.append(0 if p == "g" else 1)
        else:
            try:
                lv.append(int(p))
            except ValueError:
                raise ConfigError(cfg.where("evolve", "initial") + f"bad level {p!r}") from None
    return tuple(lv)


def _series_table(ts, prov: str, extra: dict[str, np.ndarray] | None = None) -> Table:
    cols = dict(ts.observables)
    if extra:
        cols.update(extra)
    names = list(cols)
    rows = []
    for i, t in enumerate(ts.t):
        rows.append([t] + [cols[k][i] for k in names] + [prov])
    return Table(["t_s"] + names + ["provenance"], rows)


def _dim(cfg: RunConfig, default: int) -> int:
    return cfg.dims[0] if cfg.dims else default


def cmd_evolve(cfg: RunConfig) -> tuple[Table, dict]:
    s = resolve_scenario(cfg.scenario, cfg.overrides, cfg)
    model = cfg.get("evolve", "model", required=True)
    method = cfg.get("evolve", "method", "propagator")
    mode = s.params["mode"]
    details: dict[str, Any] = {"model": model, "method": method}
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationWarning)
        if model in ("jc", "driven_jc", "qubit_resonator"):
            if s.platform not in sc.QUBIT_PLATFORMS:
                raise PreconditionError(f"model {model!r} needs a qubit scenario")
            lam = s.value("lambda")
            dim = _dim(cfg, 6)
            t = _time_grid(cfg, s, lam, mode.omega_m)
            init = _levels(cfg.get("evolve", "initial", "e,0"), 2, cfg)
            if model == "jc":
                ts = lb.simulate_jaynes_cummings(lam, mode.omega_m, 0.0, dim, init, t)
                prov = f"{s.name}: resonant exchange model, lambda={fmt(lam)} rad/s, dim={dim}"
            else:
                if model == "driven_jc":
                    lm = sc.driven_jc_model(s, dim, _parse_bool(cfg.get("evolve", "dissipation", "true")))
                else:
                    lm = sc.build_qubit_resonator_model(
                        s, _parse_bool(cfg.get("evolve", "rotated_basis", "false")), dim,
                        _parse_bool(cfg.get("evolve", "dissipation", "true")))
                rho0 = ops.basis_state(lm.space, init)
                ts = lb.evolve_master(lm, rho0, t, lb._qubit_mode_observables(dim), method)
                prov = f"{s.name}: {model} master equation, dim={dim}"
        elif model == "dispersive":
            if s.platform != "cpb_resonator":
                raise PreconditionError("the dispersive model needs the cpb_resonator scenario")
            dim = _dim(cfg, 10)
            alpha = float(cfg.get("evolve", "alpha", "1.0"))
            t = _time_grid(cfg, s, s.value("chi"), mode.omega_m)
            space = lb.qubit_mode_space(dim)
            rho0 = ops.product_state(space, [np.array([1, 1]) / math.sqrt(2.0), ops.coherent_vector(dim, alpha)])
            e_j = s.params["qubit"].e_j
            ts = lb.simulate_dispersive_qnd(s.value("chi"), e_j, mode.omega_m, dim, rho0, t)
            prov = f"{s.name}: dispersive readout, chi={fmt(s.value('chi'))} rad/s, alpha={fmt(alpha)}, dim={dim}"
        elif model == "membrane_atom":
            builders = s.model_builders()
            if "lindblad" not in builders:
                raise PreconditionError(f"scenario {s.name!r} has no membrane-atom model")
            dims = tuple(cfg.dims) if cfg.dims else (4, 4)
            if len(dims) != 2:
                raise ConfigError(f"{cfg.path}: membrane_atom needs two dims, e.g. 4x4")
            lm = builders["lindblad"](dims)
            gm = builders["gaussian"]()
            alpha = float(cfg.get("evolve", "alpha", "0.01"))
            t = _time_grid(cfg, s, lm.description["lambda_n"], mode.omega_m)
            rho0 = ops.product_state(lm.space, [ops.coherent_vector(dims[0], alpha), ops.fock_vector(dims[1], 0)])
            ts = lb.evolve_master(lm, rho0, t, lb.membrane_atom_observables(lm.space), method)
            means = gs.evolve_means(gm, [math.sqrt(2.0) * alpha, 0.0, 0.0, 0.0], t)
            extra = {f"{k}_gaussian": means[k] for k in ("q", "p", "q_at", "p_at")}
            details["max_mean_deviation"] = fmt(max(float(np.max(np.abs(ts[k] - means[k])))
                                                    for k in ("q", "p", "q_at", "p_at")))
            details["min_eigenvalue_final"] = fmt(ts.diagnostics["min_eigenvalue_final"])
            table = _series_table(ts, f"{s.name}: membrane-atom master equation, dims={dims}", extra)
            return table, details
        elif model == "gaussian_means":
            builders = s.model_builders()
            if "gaussian" not in builders:
                raise PreconditionError(f"scenario {s.name!r} has no Gaussian model")
            gm = builders["gaussian"]()
            t = _time_grid(cfg, s, None, mode.omega_m)
            x0 = np.zeros(gm.drift.shape[0])
            x0[0] = float(cfg.get("evolve", "q0", "1.0"))
            ts = gs.evolve_means(gm, x0, t)
            prov = f"{s.name}: Gaussian mean values"
        else:
            raise ConfigError(cfg.where("evolve", "model") + f"unknown model {model!r}; valid: jc, driven_jc, "
                              "qubit_resonator, dispersive, membrane_atom, gaussian_means")
    for k, v in ts.diagnostics.items():
        if np.ndim(v) == 0:
            details[k] = fmt(v)
        else:
            details[k + "_max"] = fmt(float(np.max(v)))
    return _series_table(ts, prov), details


def _gaussian_model(s: sc.Scenario) -> gs.GaussianModel:
    builders = s.model_builders()
    if "gaussian" not in builders:
        raise PreconditionError(f"scenario {s.name!r} has no Gaussian model")
    return builders["gaussian"]()


def cmd_steady(cfg: RunConfig) -> tuple[Table, dict]:
    s = resolve_scenario(cfg.scenario, cfg.overrides, cfg)
    gm = _gaussian_model(s)
    rep = gs.steady_state_covariance(gm)
    prov = f"{s.name}: Lyapunov steady state"
    rows = []
    for k in range(gm.n_modes):
        rows.append([f"n_{gm.labels[2 * k]}", rep.phonons(k), "1", prov])
    rows.append(["purity", rep.purity, "1", prov])
    rows.append(["lyapunov_residual_rel", rep.lyapunov_residual, "1", prov])
    rows.append(["min_physical_eigenvalue", rep.min_physical_eigenvalue, "1", prov])
    for i, a in enumerate(gm.labels):
        for j, b in enumerate(gm.labels):
            if j >= i:
                rows.append([f"cov_{a}_{b}", rep.covariance[i, j], "1", prov])
    return Table(["quantity", "value", "unit", "provenance"], rows), {}


def cmd_spectrum(cfg: RunConfig) -> tuple[Table, dict]:
    s = resolve_scenario(cfg.scenario, cfg.overrides, cfg)
    gm = _gaussian_model(s)
    om = s.params["mode"].omega_m

    def bound(key, default):
        raw = cfg.get("spectrum", key, default)
        m = re.match(r"^\s*([-+]?[\d.eE+-]+)\s*omega_m\s*$", raw)
        if m:
            return float(m.group(1)) * om
        try:
            return parse_value(raw)
        except ValueError as exc:
            raise ConfigError(cfg.where("spectrum", key) + str(exc)) from None

    lo, hi = bound("start", "-3 omega_m"), bound("stop", "3 omega_m")
    count = int(cfg.get("spectrum", "count", "121"))
    if count < 2 or hi <= lo:
        raise ConfigError(f"{cfg.path}: spectrum needs start < stop and count >= 2")
    w = np.linspace(lo, hi, count)
    spec = gs.langevin_force_spectrum(gm, w)
    prov = f"{s.name}: mechanical force spectrum S_F (rad/s)"
    rows = [[wi, wi / om, si, prov] for wi, si in zip(w, spec)]
    a_as, a_s = gs.sideband_rates(gm)
    return Table(["omega_rad_s", "omega_over_omega_m", "s_f", "provenance"], rows), \
        {"a_as": fmt(a_as), "a_s": fmt(a_s)}


def _sweep_values(cfg: RunConfig) -> list[float]:
    raw = cfg.get("sweep", "values")
    if raw is not None:
        try:
            vals = [parse_value(v) for v in raw.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(cfg.where("sweep", "values") + str(exc)) from None
    else:
        start = cfg.value("sweep", "start", required=True)
        stop = cfg.value("sweep", "stop", required=True)
        try:
            count = int(cfg.get("sweep", "count", required=True))
        except ValueError:
            raise ConfigError(cfg.where("sweep", "count") + "count must be an integer") from None
        scale = cfg.get("sweep", "scale", "linear")
        if count < 2:
            raise ConfigError(cfg.where("sweep", "count") + "a sweep needs count >= 2")
        if scale == "linear":
            vals = list(np.linspace(start, stop, count))
        elif scale == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError(cfg.where("sweep", "start") + "log sweeps need positive bounds")
            vals = list(np.logspace(math.log10(start), math.log10(stop), count))
        else:
            raise ConfigError(cfg.where("sweep", "scale") + f"scale must be linear or log, got {scale!r}")
    if len(vals) < 2:
        raise ConfigError(cfg.where("sweep", "values") + "a sweep needs at least 2 points")
    return [float(v) for v in vals]


def _sweep_point(task: tuple[str, dict, str, float, tuple[str, ...]]) -> list[float]:
    name, overrides, path, value, outputs = task
    base = resolve_scenario(name, overrides)
    s = base.with_values({path: _coerce(base.get(path), value)})
    return [s.value(o) for o in outputs]


def cmd_sweep(cfg: RunConfig) -> tuple[Table, dict]:
    path = cfg.get("sweep", "path", required=True)
    base = resolve_scenario(cfg.scenario, cfg.overrides, cfg)
    try:
        base.get(path)
    except KeyError as exc:
        raise ConfigError(cfg.where("sweep", "path") + str(exc.args[0])) from None
    values = [_coerce(base.get(path), v) for v in _sweep_values(cfg)]
    raw_out = cfg.get("sweep", "outputs")
    outputs = tuple(o.strip() for o in raw_out.split(",")) if raw_out else tuple(base.derived)
    unknown = [o for o in outputs if o not in base.derived]
    if unknown:
        raise ConfigError(cfg.where("sweep", "outputs") + f"unknown outputs {unknown}; valid: {', '.join(base.derived)}")
    tasks = [(cfg.scenario, dict(cfg.overrides), path, v, outputs) for v in values]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]
    units = ";".join(f"{o}[{base.derived[o].unit}]" for o in outputs)
    prov = f"{base.name}: sweep of {path}; units {units}"
    rows = [[v] + r + [prov] for v, r in zip(values, results)]
    return Table([path] + list(outputs) + ["provenance"], rows), {"sweep_path": path, "points": len(values)}


_DISPATCH = {
    "couplings": cmd_couplings,
    "table": cmd_table,
    "evolve": cmd_evolve,
    "steady": cmd_steady,
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
}


def run(cfg: RunConfig) -> tuple[Path, Path]:
    t0 = time.perf_counter()
    table, details = _DISPATCH[cfg.command](cfg)
    wall = time.perf_counter() - t0
    out = Path(cfg.out) if cfg.out else Path(f"{Path(cfg.path).stem}.{cfg.command}.csv")
    meta = write_outputs(cfg, table, details, wall, out)
    return out, meta


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybrid", description="Hybrid mechanical quantum-system toolkit")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--out", help="output CSV path (metadata goes to <out>.meta.json)")
    p.add_argument("--workers", type=int, help="parallel workers for sweeps")
    p.add_argument("--dims", help="truncation dims, e.g. 6 or 4x4")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command, args.dims, args.workers, args.out)
        out, meta = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as exc:
        print(f"config error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TruncationError as exc:
        print(f"truncation error: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except TruncationWarning as exc:
        print(f"truncation failure: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except (NoSteadyStateError, StiffnessError) as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    print(f"wrote {out} and {meta}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
