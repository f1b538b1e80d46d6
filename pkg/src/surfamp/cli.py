"""Config-driven front end tying the pipeline together from the shell.

One JSON config per run (plus flag overrides) drives kernel certification,
pair-kernel tables, dispersion analysis, the full phase-boundary pipeline,
and time-domain solves.  Configs are validated against a fixed per-command
schema before anything executes; unknown keys anywhere are errors.

Artifacts are machine-readable and byte-identical across reruns of the same
config: JSON is written with sorted keys and every float fixed to 17
significant digits, CSV files carry a header row, and nothing time- or
host-dependent is recorded.  Complex values are encoded as [real, imag]
pairs throughout.

Exit codes: 0 success; 1 property or domain failure (a certificate fails,
no root in the scanned band, a supersonic state); 2 config error (parse,
schema, or a physically inconsistent input record); 3 blow-up halt, with
the partial outputs kept.

Environment: SURFAMP_OUTDIR overrides the output directory chosen by config
or flags; SURFAMP_THREADS caps the worker threads of the sampled kernel
checks.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import pathlib
import sys

import numpy as np

from surfamp import kernels as kn
from surfamp import phase_boundary as pb
from surfamp import spectral as sp
from surfamp import variational as vr

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3

OUTPUT_DIR_ENV = "SURFAMP_OUTDIR"
THREADS_ENV = "SURFAMP_THREADS"

FLOAT_FORMAT = ".17g"


class ConfigError(ValueError):
    """A config failed parsing or schema validation; maps to exit code 2."""


# ---------------------------------------------------------------------------
# canonical artifact encoding


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} has no place in an artifact")
    return format(x, FLOAT_FORMAT)


def dumps_canonical(obj) -> str:
    """JSON text with sorted keys and floats at 17 significant digits.

    The stdlib encoder hard-wires repr() for floats, so the reproducibility
    contract (one fixed float format, byte-identical reruns) is easiest to
    keep with a small writer of our own.  Complex values become [real, imag].
    """
    out: list[str] = []
    _emit(obj, out, 0)
    out.append("\n")
    return "".join(out)


def _emit(obj, out, indent):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(obj)
        for pos, key in enumerate(keys):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            out.append("  " * (indent + 1) + json.dumps(key) + ": ")
            _emit(obj[key], out, indent + 1)
            out.append(",\n" if pos < len(keys) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            out.append("[]")
            return
        out.append("[\n")
        for pos, item in enumerate(obj):
            out.append("  " * (indent + 1))
            _emit(item, out, indent + 1)
            out.append(",\n" if pos < len(obj) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, (complex, np.complexfloating)):
        _emit([float(obj.real), float(obj.imag)], out, indent)
    elif obj is None:
        out.append("null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot encode {type(obj).__name__} into an artifact")


def write_json(path: pathlib.Path, obj) -> None:
    path.write_text(dumps_canonical(obj))


def write_csv(path: pathlib.Path, header, columns) -> None:
    """Columns of equal length; floats fixed to 17 significant digits."""
    cols = [np.asarray(c) for c in columns]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*cols):
            writer.writerow([
                str(int(v)) if isinstance(v, (int, np.integer))
                else _format_float(float(v)) for v in row])


# ---------------------------------------------------------------------------
# config loading and schema validation


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """A validated command record plus the resolved output directory."""

    command: str
    record: dict
    output_dir: pathlib.Path


def _parse_config_file(path) -> dict:
    try:
        text = pathlib.Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return raw


def _apply_override(raw: dict, item: str) -> None:
    key, sep, value = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    node = raw
    parts = key.split(".")
    for part in parts[:-1]:
        nxt = node.setdefault(part, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"--set {key}: {part!r} is not an object")
        node = nxt
    node[parts[-1]] = parsed


def _only_keys(rec: dict, allowed, where: str) -> None:
    if not isinstance(rec, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(rec) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")


_KINDS = {
    "num": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "bool": lambda v: isinstance(v, bool),
    "str": lambda v: isinstance(v, str),
    "list": lambda v: isinstance(v, list),
    "dict": lambda v: isinstance(v, dict),
}


def _field(rec: dict, key: str, kind: str, where: str,
           default=None, required: bool = False):
    if key not in rec:
        if required:
            raise ConfigError(f"{where}: missing key {key!r}")
        return default
    value = rec[key]
    if not _KINDS[kind](value):
        raise ConfigError(f"{where}.{key}: expected {kind}, got {value!r}")
    return value


def _num_list(rec: dict, key: str, where: str, length=None, required=False):
    value = _field(rec, key, "list", where, required=required)
    if value is None:
        return None
    if not all(_KINDS["num"](v) for v in value):
        raise ConfigError(f"{where}.{key}: expected a list of numbers")
    if length is not None and len(value) != length:
        raise ConfigError(f"{where}.{key}: expected {length} numbers, got {len(value)}")
    return [float(v) for v in value]


_KERNEL_PARAM_KEYS = {"hiz": (), "austria": ("A", "B", "C", "D"), "pb": ("gamma",)}


def _kernel_record(raw: dict, where: str = "config") -> dict:
    rec = _field(raw, "kernel", "dict", where, required=True)
    _only_keys(rec, ("name", "parameters"), f"{where}.kernel")
    name = _field(rec, "name", "str", f"{where}.kernel", required=True)
    if name not in _KERNEL_PARAM_KEYS:
        raise ConfigError(f"{where}.kernel: unknown kernel {name!r}; "
                          f"known: {sorted(_KERNEL_PARAM_KEYS)}")
    params = _field(rec, "parameters", "dict", f"{where}.kernel", default={})
    keys = _KERNEL_PARAM_KEYS[name]
    _only_keys(params, keys, f"{where}.kernel.parameters")
    missing = sorted(set(keys) - set(params))
    if missing:
        raise ConfigError(f"{where}.kernel.parameters: missing keys {missing}")
    clean = {}
    for key in keys:
        value = params[key]
        if key == "gamma":
            if _KINDS["num"](value):
                value = [float(value), 0.0]
            elif isinstance(value, list) and len(value) == 2 \
                    and all(_KINDS["num"](v) for v in value):
                value = [float(value[0]), float(value[1])]
            else:
                raise ConfigError(f"{where}.kernel.parameters.gamma: "
                                  "expected a number or a [real, imag] pair")
        elif not _KINDS["num"](value):
            raise ConfigError(f"{where}.kernel.parameters.{key}: expected a number")
        else:
            value = float(value)
        clean[key] = value
    return {"name": name, "parameters": clean}


def _params_from_flag(name: str, text: str) -> dict:
    try:
        values = [float(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--params: {exc}") from exc
    keys = _KERNEL_PARAM_KEYS.get(name)
    if keys is None:
        raise ConfigError(f"--params: unknown kernel {name!r}")
    if name == "pb":
        if len(values) not in (1, 2):
            raise ConfigError("--params: pb takes gamma as RE or RE,IM")
        return {"gamma": [values[0], values[1] if len(values) == 2 else 0.0]}
    if len(values) != len(keys):
        raise ConfigError(f"--params: {name} takes {len(keys)} numbers "
                          f"({','.join(keys) or 'none'}), got {len(values)}")
    return dict(zip(keys, values))


_LAW_PARAM_KEYS = {
    "vdw": ("theta",),
    "cubic": ("a", "b"),
    "table": ("densities", "pressures", "rho_ref"),
}
_LAW_REQUIRED = {"vdw": (), "cubic": ("a", "b"), "table": ("densities", "pressures")}


def _law_record(raw: dict, where: str = "config") -> dict:
    rec = _field(raw, "law", "dict", where, required=True)
    _only_keys(rec, ("name", "parameters"), f"{where}.law")
    name = _field(rec, "name", "str", f"{where}.law", required=True)
    if name not in _LAW_PARAM_KEYS:
        raise ConfigError(f"{where}.law: unknown pressure law {name!r}; "
                          f"known: {sorted(_LAW_PARAM_KEYS)}")
    params = _field(rec, "parameters", "dict", f"{where}.law", default={})
    _only_keys(params, _LAW_PARAM_KEYS[name], f"{where}.law.parameters")
    missing = sorted(set(_LAW_REQUIRED[name]) - set(params))
    if missing:
        raise ConfigError(f"{where}.law.parameters: missing keys {missing}")
    return {"name": name, "parameters": params}


_VARIATIONAL_PRESETS = {"elasticity": 2, "oseen-frank": 4}


def _variational_record(raw: dict, where: str = "config") -> dict:
    rec = raw["variational"]
    _only_keys(rec, ("preset", "path", "params", "dim", "nu", "eta", "tau_range"),
               f"{where}.variational")
    here = f"{where}.variational"
    preset = _field(rec, "preset", "str", here)
    path = _field(rec, "path", "str", here)
    if (preset is None) == (path is None):
        raise ConfigError(f"{here}: give exactly one of preset | path")
    clean: dict = {}
    if preset is not None:
        if preset not in _VARIATIONAL_PRESETS:
            raise ConfigError(f"{here}.preset: unknown preset {preset!r}; "
                              f"known: {sorted(_VARIATIONAL_PRESETS)}")
        n_params = _VARIATIONAL_PRESETS[preset]
        clean["preset"] = preset
        clean["params"] = _num_list(rec, "params", here, length=n_params,
                                    required=True)
        dim = _field(rec, "dim", "int", here)
        if preset == "oseen-frank" and dim not in (None, 3):
            raise ConfigError(f"{here}.dim: the director preset is three-dimensional")
        if preset == "elasticity":
            clean["dim"] = 2 if dim is None else dim
            if clean["dim"] < 2:
                raise ConfigError(f"{here}.dim: need at least two dimensions")
    else:
        if "params" in rec or "dim" in rec:
            raise ConfigError(f"{here}: params/dim only combine with a preset")
        clean["path"] = path
    clean["nu"] = _num_list(rec, "nu", here, required=True)
    clean["eta"] = _num_list(rec, "eta", here, required=True)
    tau_range = _num_list(rec, "tau_range", here, length=2)
    if tau_range is not None:
        clean["tau_range"] = tau_range
    return clean


def _initial_record(raw: dict, where: str = "config") -> dict:
    rec = _field(raw, "initial", "dict", where, required=True)
    here = f"{where}.initial"
    _only_keys(rec, ("preset", "alpha", "modes"), here)
    preset = _field(rec, "preset", "str", here)
    modes = _field(rec, "modes", "list", here)
    if (preset is None) == (modes is None):
        raise ConfigError(f"{here}: give exactly one of preset | modes")
    if preset is not None:
        if preset == "cosine":
            if "alpha" in rec:
                raise ConfigError(f"{here}.alpha: cosine takes no parameter")
            return {"preset": "cosine"}
        if preset == "gaussian-spectrum":
            alpha = _field(rec, "alpha", "num", here, required=True)
            if alpha <= 0:
                raise ConfigError(f"{here}.alpha: must be positive")
            return {"preset": "gaussian-spectrum", "alpha": float(alpha)}
        raise ConfigError(f"{here}.preset: unknown preset {preset!r}; "
                          "known: ['cosine', 'gaussian-spectrum']")
    if not modes:
        raise ConfigError(f"{here}.modes: need at least one (k, amplitude, phase)")
    clean = []
    for entry in modes:
        if not (isinstance(entry, list) and len(entry) == 3
                and all(_KINDS["num"](v) for v in entry)):
            raise ConfigError(f"{here}.modes: entries are [k, amplitude, phase]")
        if entry[0] != int(entry[0]) or int(entry[0]) < 1:
            raise ConfigError(f"{here}.modes: k must be a positive integer")
        clean.append([int(entry[0]), float(entry[1]), float(entry[2])])
    return {"modes": clean}


def _validate_kernel_check(raw: dict) -> dict:
    _only_keys(raw, ("kernel", "reduce", "n_samples", "seed", "output_dir"), "config")
    rec = {
        "kernel": _kernel_record(raw),
        "reduce": _field(raw, "reduce", "bool", "config", default=False),
        "n_samples": _field(raw, "n_samples", "int", "config", default=10_000),
        "seed": _field(raw, "seed", "int", "config", default=0),
    }
    if rec["n_samples"] < 100:
        raise ConfigError("config.n_samples: need at least 100 samples")
    return rec


def _validate_kernel_table(raw: dict) -> dict:
    _only_keys(raw, ("kernel", "reduce", "extent", "n_cells", "output_dir"), "config")
    rec = {
        "kernel": _kernel_record(raw),
        "reduce": _field(raw, "reduce", "bool", "config", default=False),
        "extent": float(_field(raw, "extent", "num", "config", default=8.0)),
        "n_cells": _field(raw, "n_cells", "int", "config", default=64),
    }
    if rec["extent"] <= 0:
        raise ConfigError("config.extent: must be positive")
    if rec["n_cells"] < 2:
        raise ConfigError("config.n_cells: need at least 2 cells per axis")
    return rec


def _validate_dispersion(raw: dict) -> dict:
    _only_keys(raw, ("variational", "law", "states", "rho_l", "eta_norm",
                     "guess", "n_grid", "scan_csv", "output_dir"), "config")
    routes = [key for key in ("variational", "law", "states") if key in raw]
    if len(routes) != 1:
        raise ConfigError("config: give exactly one of variational | law | states")
    rec: dict = {
        "scan_csv": _field(raw, "scan_csv", "bool", "config", default=False),
        "n_grid": _field(raw, "n_grid", "int", "config", default=241),
    }
    if rec["n_grid"] < 16:
        raise ConfigError("config.n_grid: need at least 16 grid points")
    route = routes[0]
    if route == "variational":
        for key in ("rho_l", "eta_norm", "guess"):
            if key in raw:
                raise ConfigError(f"config.{key}: belongs to the euler routes")
        rec["variational"] = _variational_record(raw)
        return rec
    eta_norm = float(_field(raw, "eta_norm", "num", "config", default=1.0))
    if eta_norm <= 0:
        raise ConfigError("config.eta_norm: must be positive")
    rec["eta_norm"] = eta_norm
    if route == "law":
        rec["law"] = _law_record(raw)
        rec["rho_l"] = float(_field(raw, "rho_l", "num", "config", required=True))
        if "guess" in raw:
            rec["guess"] = _field(raw, "guess", "num", "config")
        return rec
    states = raw["states"]
    names = ("rho_l", "rho_r", "u_l", "u_r", "c_l", "c_r")
    _only_keys(states, names, "config.states")
    rec["states"] = {key: float(_field(states, key, "num", "config.states",
                                       required=True)) for key in names}
    if "guess" in raw or "rho_l" in raw:
        raise ConfigError("config: explicit states take no guess or rho_l")
    return rec


def _validate_phase_boundary(raw: dict) -> dict:
    _only_keys(raw, ("law", "rho_l", "eta_norm", "guess", "output_dir"), "config")
    rec = {
        "law": _law_record(raw),
        "rho_l": float(_field(raw, "rho_l", "num", "config", required=True)),
        "eta_norm": float(_field(raw, "eta_norm", "num", "config", default=1.0)),
    }
    if rec["eta_norm"] <= 0:
        raise ConfigError("config.eta_norm: must be positive")
    if "guess" in raw:
        rec["guess"] = _field(raw, "guess", "num", "config")
    return rec


def _validate_solve(raw: dict) -> dict:
    _only_keys(raw, ("form", "kernel", "sign_of_c", "n_modes", "dt", "s_end",
                     "n_steps", "log_every", "initial", "dealias_two_thirds",
                     "output_dir"), "config")
    form = _field(raw, "form", "str", "config", required=True)
    if form not in (sp.W_FORM, sp.U_FORM, sp.V_FORM):
        raise ConfigError(f"config.form: expected one of W | U | V, got {form!r}")
    rec = {
        "form": form,
        "kernel": _kernel_record(raw),
        "sign_of_c": _field(raw, "sign_of_c", "int", "config", default=1),
        "n_modes": _field(raw, "n_modes", "int", "config", required=True),
        "log_every": _field(raw, "log_every", "int", "config", default=1),
        "dealias_two_thirds": _field(raw, "dealias_two_thirds", "bool", "config",
                                     default=False),
        "initial": _initial_record(raw),
    }
    if rec["sign_of_c"] not in (1, -1):
        raise ConfigError("config.sign_of_c: must be 1 or -1")
    if rec["n_modes"] < 1:
        raise ConfigError("config.n_modes: need at least one mode")
    if rec["log_every"] < 1:
        raise ConfigError("config.log_every: must be at least 1")
    dt = float(_field(raw, "dt", "num", "config", required=True))
    if dt == 0 or not math.isfinite(dt):
        raise ConfigError("config.dt: must be nonzero and finite")
    rec["dt"] = dt
    has_end = "s_end" in raw
    has_steps = "n_steps" in raw
    if has_end == has_steps:
        raise ConfigError("config: give exactly one of s_end | n_steps")
    if has_steps:
        rec["n_steps"] = _field(raw, "n_steps", "int", "config")
        if rec["n_steps"] < 1:
            raise ConfigError("config.n_steps: need at least one step")
    else:
        s_end = float(_field(raw, "s_end", "num", "config"))
        steps = int(round(s_end / dt))
        if steps < 1:
            raise ConfigError("config.s_end: shorter than one step of dt")
        rec["s_end"] = s_end
        rec["n_steps"] = steps
    return rec


_VALIDATORS = {
    "kernel-check": _validate_kernel_check,
    "kernel-table": _validate_kernel_table,
    "dispersion": _validate_dispersion,
    "phase-boundary": _validate_phase_boundary,
    "solve": _validate_solve,
}


def build_config(command: str, raw: dict) -> RunConfig:
    """Validate a raw config dict into a RunConfig for one command."""
    if command == "report":
        _only_keys(raw, ("run_dir",), "config")
        run_dir = _field(raw, "run_dir", "str", "config", required=True)
        return RunConfig("report", {"run_dir": run_dir}, pathlib.Path("."))
    if command not in _VALIDATORS:
        raise ConfigError(f"unknown command {command!r}")
    record = _VALIDATORS[command](raw)
    outdir = os.environ.get(OUTPUT_DIR_ENV) or raw.get("output_dir") \
        or os.path.join("runs", command)
    if not isinstance(outdir, str):
        raise ConfigError("config.output_dir: expected a path string")
    return RunConfig(command, record, pathlib.Path(outdir))


# ---------------------------------------------------------------------------
# input construction from validated records


def _kernel_from_record(rec: dict):
    params = dict(rec["parameters"])
    if "gamma" in params:
        params["gamma"] = complex(params["gamma"][0], params["gamma"][1])
    return kn.kernel_from_spec({"name": rec["name"], "parameters": params})


def _maybe_reduce(obj, reduce_flag: bool):
    if not reduce_flag:
        return obj, None
    if isinstance(obj, kn.PairKernel):
        raise ConfigError("config.reduce: the kernel is already a pair kernel")
    source = kn.kernel_spec(obj)
    try:
        return kn.reduce_to_q(obj), source
    except ValueError as exc:
        raise ConfigError(f"config.reduce: {exc}") from exc


def _law_from_record(rec: dict) -> pb.PressureLaw:
    try:
        return pb.law_from_spec(rec)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"config.law: {exc}") from exc


def _variational_inputs(rec: dict):
    if "path" in rec:
        try:
            data = vr.variational_data_from_file(rec["path"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"config.variational.path: {exc}") from exc
    elif rec["preset"] == "elasticity":
        lam, mu = rec["params"]
        try:
            data = vr.isotropic_elasticity_data(lam, mu, d=rec["dim"])
        except ValueError as exc:
            raise ConfigError(f"config.variational: {exc}") from exc
    else:
        try:
            data = vr.oseen_frank_data(*rec["params"])
        except ValueError as exc:
            raise ConfigError(f"config.variational: {exc}") from exc
    nu = np.asarray(rec["nu"], dtype=float)
    eta = np.asarray(rec["eta"], dtype=float)
    if nu.shape != (data.d,) or eta.shape != (data.d,):
        raise ConfigError(f"config.variational: nu and eta must have {data.d} "
                          "components to match the tensor dimension")
    return data, nu, eta


def _initial_state(rec: dict, n_modes: int) -> sp.SpectralState:
    if rec.get("preset") == "cosine":
        return sp.state_cosine(n_modes)
    if rec.get("preset") == "gaussian-spectrum":
        return sp.state_gaussian_spectrum(n_modes, rec["alpha"])
    for k, _, _ in rec["modes"]:
        if k > n_modes:
            raise ConfigError(f"config.initial.modes: k = {k} exceeds n_modes")
    return sp.state_from_modes(n_modes, [tuple(m) for m in rec["modes"]])


# ---------------------------------------------------------------------------
# commands


def _ensure_outdir(cfg: RunConfig) -> pathlib.Path:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_json(cfg.output_dir / "config.json",
               {"command": cfg.command, **cfg.record})
    return cfg.output_dir


def _pair(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def cmd_kernel_check(cfg: RunConfig) -> int:
    """All applicable certificates for one named kernel, as JSON."""
    named = _kernel_from_record(cfg.record["kernel"])
    obj, reduced_from = _maybe_reduce(named, cfg.record["reduce"])
    out = _ensure_outdir(cfg)
    n = cfg.record["n_samples"]
    seed = cfg.record["seed"]
    certs = []
    if isinstance(obj, kn.PairKernel):
        certs.append(kn.check_pair_symmetry_conjugation(obj, n_samples=n, seed=seed))
        certs.append(kn.check_pair_homogeneity(obj, n_samples=n, seed=seed))
        certs.append(kn.check_pair_bound(obj, n_samples=n, seed=seed))
        certs.append(kn.check_crucial_estimate(obj, n_samples=n, seed=seed))
        certs.append(kn.check_crucialsym(obj, n_samples=n, seed=seed))
        certs.append(kn.check_hunter_condition(obj))
    else:
        certs.append(kn.check_symmetry_conjugation(obj, n_samples=n, seed=seed))
        degree = obj.homogeneity_degree
        if degree is not None:
            certs.append(kn.check_homogeneity(obj, n_samples=n, seed=seed))
            # the sup bounds hold degree-wise: C1 for the -1/2 rescaling of a
            # degree-1 kernel, C2 for the +1/2 rescaling of a degree-2 one
            if degree == 1:
                certs.append(kn.check_bound_C1(kn.rescale_to_p(obj),
                                               n_samples=n, seed=seed))
            elif degree == 2:
                certs.append(kn.check_bound_C2(kn.rescale_to_p(obj),
                                               n_samples=n, seed=seed))
    payload = {
        "kernel": kn.kernel_spec(obj),
        "n_samples": n,
        "seed": seed,
        "certificates": [c.to_json_dict() for c in certs],
        "passed": all(c.passed for c in certs),
    }
    if reduced_from is not None:
        payload["reduced_from"] = reduced_from
    write_json(out / "certificates.json", payload)
    for cert in certs:
        state = "PASS" if cert.passed else "FAIL"
        print(f"{cert.property_name}: {state} "
              f"(constant {cert.constant:.6g}, worst {cert.worst_ratio:.6g})")
    print("wrote certificates.json")
    return EXIT_OK if payload["passed"] else EXIT_FAILURE


def cmd_kernel_table(cfg: RunConfig) -> int:
    """Pair-kernel values on a sector-boundary-free grid, as CSV."""
    named = _kernel_from_record(cfg.record["kernel"])
    obj, reduced_from = _maybe_reduce(named, cfg.record["reduce"])
    if not isinstance(obj, kn.PairKernel):
        raise ConfigError("config: kernel table needs a pair kernel; pass "
                          "reduce for a degree-2 trilinear one")
    out = _ensure_outdir(cfg)
    extent = cfg.record["extent"]
    n_cells = cfg.record["n_cells"]
    # quarter-offset grid: k, l, and k+l are all nonzero by construction
    step = 2.0 * extent / n_cells
    axis = step * (np.arange(n_cells) - n_cells / 2 + 0.25)
    kk, ll = np.meshgrid(axis, axis, indexing="ij")
    values = obj(kk, ll)
    write_csv(out / "kernel_table.csv", ["k", "l", "re_q", "im_q"],
              [kk.ravel(), ll.ravel(), values.real.ravel(), values.imag.ravel()])
    meta = {"kernel": kn.kernel_spec(obj), "extent": extent,
            "n_cells": n_cells, "axis_offset": 0.25}
    if reduced_from is not None:
        meta["reduced_from"] = reduced_from
    write_json(out / "table_meta.json", meta)
    print("wrote kernel_table.csv, table_meta.json")
    return EXIT_OK


def _classify_failure(exc: ValueError) -> str:
    message = str(exc)
    if message.startswith("no root found"):
        return "no-root"
    if "supersonic" in message:
        return "supersonic state"
    return "error"


def _dispersion_variational(rec: dict):
    data, nu, eta = _variational_inputs(rec["variational"])
    scan = vr.scan_and_refine_root(
        data, nu, eta, tau_range=tuple(rec["variational"].get("tau_range") or ())
        or None, n_grid=rec["n_grid"])
    tau, residual, simple = scan.roots[0]
    geom = vr.WaveGeometry(nu, eta, tau)
    profile = vr.build_profile(data, geom)
    kern = vr.synthesize_kernel(data, profile)
    report = {
        "route": "variational",
        "status": "ok",
        "nu": [float(v) for v in nu],
        "eta": [float(v) for v in eta],
        "tau": float(tau),
        "tau_over_eta": float(tau / np.linalg.norm(eta)),
        "residual": float(residual),
        "simple": bool(simple),
        "norm_const": float(profile.norm_const),
        "modes": [{"omega": _pair(om), "coeff": _pair(cf)}
                  for om, _, cf in profile.modes],
        "roots": [[float(t), float(r), bool(s)] for t, r, s in scan.roots],
        "kernel_handle": kn.kernel_spec(kern),
    }
    scan_cols = [np.asarray(scan.tau_grid, dtype=float),
                 np.real(scan.det_values), np.imag(scan.det_values),
                 np.abs(scan.det_values)]
    return report, scan_cols


def _euler_scan_columns(data: pb.PhaseBoundaryData, eta_norm: float, n_grid: int):
    band = math.sqrt(min(data.c_l**2 - data.u_l**2,
                         data.c_r**2 - data.u_r**2)) * eta_norm
    taus = np.linspace(band * 1e-3, band * (1.0 - 1e-9), n_grid)
    values = np.array([pb.dispersion_lhs(data, t, eta_norm) for t in taus])
    return [taus, values, np.zeros_like(values), np.abs(values)]


def _dispersion_law(rec: dict):
    law = _law_from_record(rec["law"])
    data = pb.phase_boundary_pipeline(law, rec["rho_l"],
                                      eta_norm=rec["eta_norm"],
                                      guess=rec.get("guess"))
    report = {"route": "euler-law", "status": "ok", **pb.report_dict(data)}
    return report, _euler_scan_columns(data, rec["eta_norm"], rec["n_grid"])


def _dispersion_states(rec: dict):
    s = rec["states"]
    data = pb.PhaseBoundaryData(rho_l=s["rho_l"], rho_r=s["rho_r"],
                                u_l=s["u_l"], u_r=s["u_r"],
                                j=s["rho_l"] * s["u_l"],
                                c_l=s["c_l"], c_r=s["c_r"])
    eta_norm = rec["eta_norm"]
    tau = pb.dispersion_root(data, eta_norm)
    data = dataclasses.replace(data, eta_norm=eta_norm, tau=float(tau))
    data = pb.linear_coefficients(data)
    report = {
        "route": "euler-states",
        "status": "ok",
        "states": dict(s),
        "j": float(data.j),
        "eta_norm": float(eta_norm),
        "tau_over_eta": float(tau / eta_norm),
        "beta1": _pair(data.beta1),
        "beta2": _pair(data.beta2),
        "gamma1": _pair(data.gamma1),
        "gamma2": _pair(data.gamma2),
    }
    return report, _euler_scan_columns(data, eta_norm, rec["n_grid"])


def cmd_dispersion(cfg: RunConfig) -> int:
    """Surface-wave dispersion report for one of the three input routes."""
    rec = cfg.record
    out = _ensure_outdir(cfg)
    if "variational" in rec:
        route, runner = "variational", _dispersion_variational
    elif "law" in rec:
        route, runner = "euler-law", _dispersion_law
    else:
        route, runner = "euler-states", _dispersion_states
    try:
        report, scan_cols = runner(rec)
    except ConfigError:
        raise
    except ValueError as exc:
        status = _classify_failure(exc)
        write_json(out / "dispersion.json",
                   {"route": route, "status": status, "message": str(exc)})
        print(f"dispersion: {status}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if rec["scan_csv"]:
        write_csv(out / "delta_scan.csv",
                  ["tau", "re_delta", "im_delta", "abs_delta"], scan_cols)
        print("wrote delta_scan.csv")
    write_json(out / "dispersion.json", report)
    print(f"wrote dispersion.json (tau/|eta| = {report['tau_over_eta']:.12g})")
    return EXIT_OK


def cmd_phase_boundary(cfg: RunConfig) -> int:
    """Full pipeline law -> states -> root -> coefficients, as JSON."""
    rec = cfg.record
    law = _law_from_record(rec["law"])
    out = _ensure_outdir(cfg)
    try:
        data = pb.phase_boundary_pipeline(law, rec["rho_l"],
                                          eta_norm=rec["eta_norm"],
                                          guess=rec.get("guess"))
    except ValueError as exc:
        status = _classify_failure(exc)
        write_json(out / "phase_boundary.json",
                   {"status": status, "message": str(exc),
                    "law": pb.law_spec(law)})
        print(f"phase-boundary: {status}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    report = {"status": "ok", "law": pb.law_spec(law), **pb.report_dict(data)}
    write_json(out / "phase_boundary.json", report)
    print(f"wrote phase_boundary.json (gamma = {data.gamma_kernel:.6g})")
    return EXIT_OK


def _form_for(tag: str, named, sign_of_c: int) -> sp.EvolutionForm:
    if isinstance(named, kn.PairKernel):
        if tag != sp.V_FORM:
            raise ConfigError("config.form: a pair kernel only drives the V form")
        return sp.v_form(named, sign_of_c)
    try:
        if tag == sp.W_FORM:
            return sp.w_form(named, sign_of_c)
        if tag == sp.U_FORM:
            return sp.u_form(kn.rescale_to_p(named), sign_of_c)
        return sp.v_form(kn.reduce_to_q(named), sign_of_c)
    except ValueError as exc:
        raise ConfigError(f"config.form: {exc}") from exc


def cmd_solve(cfg: RunConfig) -> int:
    """Time-domain run: conservation log, final spectrum, summary."""
    rec = cfg.record
    named = _kernel_from_record(rec["kernel"])
    form = _form_for(rec["form"], named, rec["sign_of_c"])
    w0 = _initial_state(rec["initial"], rec["n_modes"])
    out = _ensure_outdir(cfg)
    final, log = sp.integrate(form, form.from_w(w0), rec["dt"], rec["n_steps"],
                              log_every=rec["log_every"],
                              dealias_two_thirds=rec["dealias_two_thirds"])
    write_csv(out / "conservation.csv", ["s", "M", "T", "L2", "Hsigma"],
              [log.times, log.M_values, log.T_values,
               log.L2_values, log.Hsigma_values])
    w_final = form.to_w(final)
    write_csv(out / "spectrum.csv", ["k", "re_w", "im_w"],
              [w_final.k, w_final.coeffs.real, w_final.coeffs.imag])
    M = np.asarray(log.M_values)
    T = np.asarray(log.T_values)
    summary = {
        "form": rec["form"],
        "kernel": kn.kernel_spec(named),
        "K": rec["n_modes"],
        "dt": rec["dt"],
        "steps": rec["n_steps"],
        "completed_steps": int(round((final.time - log.times[0]) / rec["dt"])),
        "halted_reason": log.halted_reason,
        "sign_of_c": rec["sign_of_c"],
        "log_every": rec["log_every"],
        "dealias_two_thirds": rec["dealias_two_thirds"],
        "initial": rec["initial"],
        "s_final": float(final.time),
        "M_drift_rel": float(np.max(np.abs(M - M[0])) / max(abs(M[0]), 1e-300)),
        "T_drift_abs": float(np.max(np.abs(T - T[0]))),
        "final_L2": float(log.L2_values[-1]),
        "final_Hsigma": float(log.Hsigma_values[-1]),
    }
    write_json(out / "summary.json", summary)
    print("wrote conservation.csv, spectrum.csv, summary.json")
    if log.halted_reason == "blow-up":
        print(f"halted: blow-up at s = {final.time:.6g}; partial outputs kept",
              file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    """Digest of a finished run directory, printed as canonical JSON."""
    run_dir = pathlib.Path(cfg.record["run_dir"])
    summary_path = run_dir / "summary.json"
    series_path = run_dir / "conservation.csv"
    if not summary_path.is_file():
        raise ConfigError(f"{summary_path}: no summary.json in the run directory")
    if not series_path.is_file():
        raise ConfigError(f"{series_path}: no conservation.csv in the run directory")
    try:
        summary = json.loads(summary_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{summary_path}: line {exc.lineno}: {exc.msg}") from exc
    with open(series_path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = ("s", "M", "T", "L2", "Hsigma")
        missing = [c for c in required if c not in (reader.fieldnames or ())]
        if missing:
            raise ConfigError(f"{series_path}: missing columns {missing}")
        try:
            rows = [{c: float(row[c]) for c in required} for row in reader]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{series_path}: bad numeric cell: {exc}") from exc
    if not rows:
        raise ConfigError(f"{series_path}: no data rows")
    s = [r["s"] for r in rows]
    if any(b <= a for a, b in zip(s, s[1:])):
        raise ConfigError(f"{series_path}: times are not strictly increasing")
    M = np.array([r["M"] for r in rows])
    T = np.array([r["T"] for r in rows])
    digest = {
        "run_dir": cfg.record["run_dir"],
        "form": summary.get("form"),
        "K": summary.get("K"),
        "dt": summary.get("dt"),
        "steps": summary.get("steps"),
        "halted_reason": summary.get("halted_reason"),
        "rows": len(rows),
        "s_first": s[0],
        "s_last": s[-1],
        "M_drift_rel": float(np.max(np.abs(M - M[0])) / max(abs(M[0]), 1e-300)),
        "T_drift_abs": float(np.max(np.abs(T - T[0]))),
        "final_L2": rows[-1]["L2"],
        "final_Hsigma": rows[-1]["Hsigma"],
    }
    sys.stdout.write(dumps_canonical(digest))
    return EXIT_OK


_COMMANDS = {
    "kernel-check": cmd_kernel_check,
    "kernel-table": cmd_kernel_table,
    "dispersion": cmd_dispersion,
    "phase-boundary": cmd_phase_boundary,
    "solve": cmd_solve,
    "report": cmd_report,
}


# ---------------------------------------------------------------------------
# argument parsing


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--set", action="append", default=[], dest="overrides",
                   metavar="KEY=VALUE",
                   help="override a config entry (dotted keys, JSON values)")
    p.add_argument("--out", help="output directory")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="surfamp",
        description="weakly nonlinear surface-wave pipeline",
        epilog=f"environment: {OUTPUT_DIR_ENV} overrides the output "
               f"directory; {THREADS_ENV} caps check worker threads")
    sub = ap.add_subparsers(dest="command", required=True)

    kern = sub.add_parser("kernel", help="kernel certification and tables")
    ksub = kern.add_subparsers(dest="subcommand", required=True)
    check = ksub.add_parser("check", help="run all applicable certificates")
    _common_flags(check)
    check.add_argument("--name", help="kernel name (hiz, austria, pb)")
    check.add_argument("--params", help="comma list of kernel parameters")
    check.add_argument("--reduce", action="store_true",
                       help="certify the pair reduction of a degree-2 kernel")
    check.add_argument("--samples", type=int, help="sample count per check")
    check.add_argument("--seed", type=int, help="sampling seed")
    table = ksub.add_parser("table", help="tabulate a pair kernel on a grid")
    _common_flags(table)
    table.add_argument("--name", help="kernel name (pb, or hiz with --reduce)")
    table.add_argument("--params", help="comma list of kernel parameters")
    table.add_argument("--reduce", action="store_true",
                       help="tabulate the pair reduction of a degree-2 kernel")
    table.add_argument("--extent", type=float, help="half width of the grid")
    table.add_argument("--cells", type=int, help="cells per axis")

    disp = sub.add_parser("dispersion", help="surface-wave dispersion report")
    _common_flags(disp)
    disp.add_argument("--scan-csv", action="store_true",
                      help="also write the determinant scan as CSV")

    pbp = sub.add_parser("phase-boundary",
                         help="pressure law to amplitude-equation coefficients")
    _common_flags(pbp)

    solve = sub.add_parser("solve", help="time-domain spectral run")
    _common_flags(solve)

    rep = sub.add_parser("report", help="digest a finished run directory")
    rep.add_argument("run_dir", help="directory holding summary.json and CSVs")
    return ap


def _raw_from_args(args: argparse.Namespace) -> dict:
    raw = _parse_config_file(args.config) if getattr(args, "config", None) else {}
    if getattr(args, "name", None):
        raw.setdefault("kernel", {})["name"] = args.name
    if getattr(args, "params", None) is not None:
        name = raw.get("kernel", {}).get("name")
        if not name:
            raise ConfigError("--params needs a kernel name (--name or config)")
        raw.setdefault("kernel", {})["parameters"] = _params_from_flag(
            name, args.params)
    if getattr(args, "reduce", False):
        raw["reduce"] = True
    if getattr(args, "samples", None) is not None:
        raw["n_samples"] = args.samples
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    if getattr(args, "extent", None) is not None:
        raw["extent"] = args.extent
    if getattr(args, "cells", None) is not None:
        raw["n_cells"] = args.cells
    if getattr(args, "scan_csv", False):
        raw["scan_csv"] = True
    for item in getattr(args, "overrides", []):
        _apply_override(raw, item)
    if getattr(args, "out", None):
        raw["output_dir"] = args.out
    return raw


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = args.command
    if command == "kernel":
        command = f"kernel-{args.subcommand}"
    try:
        if command == "report":
            cfg = build_config("report", {"run_dir": args.run_dir})
        else:
            cfg = build_config(command, _raw_from_args(args))
        return _COMMANDS[command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
