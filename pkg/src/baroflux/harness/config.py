"""Scenario configuration: strict JSON parsing, defaults and validation."""
from __future__ import annotations

import copy
import difflib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


# value None marks a required key; dicts describe nested blocks
_SCHEMA: Dict[str, Any] = {
    "name": None,
    "doc": "",
    "grid": {"dim": None, "extent": None, "cells": None, "origin": "optional"},
    "law": "any",
    "motion": {"translation": None, "omega": 0.0, "center": "optional"},
    "potential": "any",
    "equilibrium": "any",
    "initial": "any",
    "viscosity": {"mu": None, "lambda": 0.0},
    "cfl": 0.4,
    "rho_floor_guard": 1e-10,
    "t_end": None,
    "record_interval": "optional",
    "snapshot_interval": "optional",
    "seed": 0,
    "output": "optional",
    "max_wall_seconds": "optional",
    "backend": "optional",
}

_PERTURBATION_KEYS = {"kind", "amplitude", "width", "center", "rho_min", "mode"}
PERTURBATION_KINDS = ("density-bump", "velocity-shear")


def _suggest(key, allowed, where):
    close = difflib.get_close_matches(key, list(allowed), n=1, cutoff=0.6)
    hint = f"; did you mean {close[0]!r}?" if close else f"; allowed keys: {sorted(allowed)}"
    return ConfigError(f"unknown key {key!r} in {where}{hint}")


def _apply_schema(data: dict, schema: dict, where: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object")
    for key in data:
        if key not in schema:
            raise _suggest(key, schema, where)
    out = {}
    for key, spec in schema.items():
        if key in data:
            val = data[key]
            if isinstance(spec, dict):
                val = _apply_schema(val, spec, f"{where}.{key}" if where != "config" else key)
            out[key] = val
        elif spec is None:
            raise ConfigError(f"missing required key {key!r} in {where}")
        elif spec in ("optional", "any"):
            out[key] = None
        elif isinstance(spec, dict):
            raise ConfigError(f"missing required block {key!r} in {where}")
        else:
            out[key] = copy.deepcopy(spec)
    return out


def _number(val, name, positive=False, nonneg=False):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{name} must be a number, got {val!r}")
    val = float(val)
    if positive and not val > 0:
        raise ConfigError(f"{name} must be positive, got {val}")
    if nonneg and not val >= 0:
        raise ConfigError(f"{name} must be non-negative, got {val}")
    return val


def _vector(val, name, n):
    if not isinstance(val, (list, tuple)) or len(val) != n:
        raise ConfigError(f"{name} must be a list of {n} numbers")
    return [_number(v, f"{name}[{i}]") for i, v in enumerate(val)]


@dataclass
class ScenarioConfig:
    """Validated scenario; ``raw`` keeps the normalized JSON form."""

    raw: Dict[str, Any]
    base_dir: str = "."
    members: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def name(self) -> str:
        return self.raw["name"]

    @property
    def dim(self) -> int:
        return self.raw["grid"]["dim"]

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True)

    def with_updates(self, **changes) -> "ScenarioConfig":
        raw = copy.deepcopy(self.raw)
        for dotted, value in changes.items():
            node = raw
            parts = dotted.split("__")
            for p in parts[:-1]:
                node = node[p]
            node[parts[-1]] = value
        return validate(raw, self.base_dir)

    def output_dir(self) -> str:
        env = os.environ.get("BAROFLUX_OUT")
        if env:
            return env
        out = self.raw.get("output")
        return out if out else os.path.join("out", self.name)


def _validate_law(law):
    from ..eos import law_from_dict

    if not isinstance(law, dict):
        raise ConfigError("law must be an object like {\"law\": \"gamma\", \"a\": 1.0, \"gamma\": 2.0}")
    try:
        return law_from_dict(law).to_dict()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"law: {exc}") from None


def _validate_potential(pot, dim):
    if not isinstance(pot, dict) or "kind" not in pot:
        raise ConfigError("potential must be an object with a 'kind'")
    kind = pot["kind"]
    allowed = {"constant": {"kind", "c"}, "linear": {"kind", "g"}, "radial": {"kind", "center", "coeffs"}}
    if kind not in allowed:
        raise ConfigError(f"potential.kind must be one of {sorted(allowed)}, got {kind!r}")
    for key in pot:
        if key not in allowed[kind]:
            raise _suggest(key, allowed[kind], "potential")
    out = {"kind": kind}
    if kind == "constant":
        out["c"] = _number(pot.get("c", 0.0), "potential.c")
    elif kind == "linear":
        if "g" not in pot:
            raise ConfigError("potential.g is required for a linear potential")
        out["g"] = _vector(pot["g"], "potential.g", dim)
    else:
        if "center" not in pot or "coeffs" not in pot:
            raise ConfigError("radial potential needs 'center' and 'coeffs'")
        out["center"] = _vector(pot["center"], "potential.center", dim)
        coeffs = pot["coeffs"]
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError("potential.coeffs must be a non-empty list")
        out["coeffs"] = [_number(c, "potential.coeffs") for c in coeffs]
        if len(out["coeffs"]) > 1 and out["coeffs"][1] != 0.0:
            raise ConfigError("potential.coeffs[1] must be 0 (G must be differentiable at the centre)")
    return out


def _validate_equilibrium(eq, dim):
    if not isinstance(eq, dict) or len(eq) != 1:
        raise ConfigError("equilibrium must be {\"mass\": M0} or {\"inflow_density\": value|profile}")
    (key, val), = eq.items()
    if key == "mass":
        return {"mass": _number(val, "equilibrium.mass", positive=True)}
    if key != "inflow_density":
        raise _suggest(key, {"mass", "inflow_density"}, "equilibrium")
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return {"inflow_density": _number(val, "equilibrium.inflow_density")}
    if isinstance(val, list):
        return {"inflow_density": [_number(v, "equilibrium.inflow_density") for v in val]}
    if isinstance(val, dict):
        for key2 in val:
            if key2 != "hydrostatic":
                raise _suggest(key2, {"hydrostatic"}, "equilibrium.inflow_density")
        hs = val["hydrostatic"]
        if not isinstance(hs, dict):
            raise ConfigError("equilibrium.inflow_density.hydrostatic must be an object")
        for key2 in hs:
            if key2 not in ("reference", "at"):
                raise _suggest(key2, {"reference", "at"}, "equilibrium.inflow_density.hydrostatic")
        return {"inflow_density": {"hydrostatic": {
            "reference": _number(hs.get("reference"), "hydrostatic.reference", positive=True),
            "at": _vector(hs.get("at"), "hydrostatic.at", dim),
        }}}
    raise ConfigError("equilibrium.inflow_density must be a number, a list or {\"hydrostatic\": ...}")


def _validate_initial(init, dim, base_dir):
    if init is None:
        return {"equilibrium": True}
    if not isinstance(init, dict) or len(init) != 1:
        raise ConfigError("initial must be one of {\"equilibrium\": true}, {\"perturbation\": ...}, {\"file\": path}")
    (key, val), = init.items()
    if key == "equilibrium":
        return {"equilibrium": True}
    if key == "file":
        path = val if os.path.isabs(val) else os.path.join(base_dir, val)
        if not os.path.exists(path):
            raise ConfigError(f"initial.file does not exist: {path}")
        return {"file": path}
    if key != "perturbation":
        raise _suggest(key, {"equilibrium", "perturbation", "file"}, "initial")
    items = val if isinstance(val, list) else [val]
    out = []
    for k, p in enumerate(items):
        where = f"initial.perturbation[{k}]" if isinstance(val, list) else "initial.perturbation"
        if not isinstance(p, dict):
            raise ConfigError(f"{where} must be an object")
        for key2 in p:
            if key2 not in _PERTURBATION_KEYS:
                raise _suggest(key2, _PERTURBATION_KEYS, where)
        kind = p.get("kind")
        if kind not in PERTURBATION_KINDS:
            raise ConfigError(f"{where}.kind must be one of {list(PERTURBATION_KINDS)}, got {kind!r}")
        if kind == "velocity-shear" and dim == 1:
            raise ConfigError("velocity-shear needs two dimensions (a 1D divergence-free field vanishing "
                              "at the walls is zero)")
        q = {"kind": kind, "amplitude": _number(p.get("amplitude", 0.1), f"{where}.amplitude", nonneg=True)}
        q["width"] = _number(p.get("width", 0.1), f"{where}.width", positive=True)
        q["center"] = None if p.get("center") is None else _vector(p["center"], f"{where}.center", dim)
        q["rho_min"] = _number(p.get("rho_min", 1e-3), f"{where}.rho_min", positive=True)
        q["mode"] = int(p.get("mode", 1))
        out.append(q)
    return {"perturbation": out}


def validate(data: dict, base_dir: str = ".") -> ScenarioConfig:
    raw = _apply_schema(data, _SCHEMA, "config")
    if not isinstance(raw["name"], str) or not raw["name"]:
        raise ConfigError("name must be a non-empty string")
    g = raw["grid"]
    if g["dim"] not in (1, 2):
        raise ConfigError(f"grid.dim must be 1 or 2, got {g['dim']!r}")
    dim = g["dim"]
    g["extent"] = [_number(e, "grid.extent", positive=True) for e in _vector(g["extent"], "grid.extent", dim)]
    if not isinstance(g["cells"], list) or len(g["cells"]) != dim or not all(
            isinstance(c, int) and not isinstance(c, bool) for c in g["cells"]):
        raise ConfigError(f"grid.cells must be a list of {dim} integers")
    if any(c < 4 for c in g["cells"]):
        raise ConfigError("grid.cells must be at least 4 per axis")
    g["origin"] = [0.0] * dim if g["origin"] is None else _vector(g["origin"], "grid.origin", dim)
    raw["law"] = _validate_law(raw["law"])
    m = raw["motion"]
    m["translation"] = _vector(m["translation"], "motion.translation", dim)
    m["omega"] = _number(m["omega"], "motion.omega")
    if dim == 1 and m["omega"] != 0.0:
        raise ConfigError("motion.omega must be 0 in 1D")
    m["center"] = None if m["center"] is None else _vector(m["center"], "motion.center", dim)
    raw["potential"] = _validate_potential(raw["potential"] or {"kind": "constant", "c": 0.0}, dim)
    if raw["equilibrium"] is None:
        raise ConfigError("missing required key 'equilibrium' in config")
    raw["equilibrium"] = _validate_equilibrium(raw["equilibrium"], dim)
    raw["initial"] = _validate_initial(raw["initial"], dim, base_dir)

    v = raw["viscosity"]
    v["mu"] = _number(v["mu"], "viscosity.mu", positive=True)
    v["lambda"] = _number(v["lambda"], "viscosity.lambda", nonneg=True)
    nu = 2.0 * v["mu"] * (1.0 - 1.0 / dim) + v["lambda"]
    if not nu > 0:
        raise ConfigError("effective 1D viscosity must be positive: in 1D only viscosity.lambda acts, "
                          "set it > 0")
    raw["cfl"] = _number(raw["cfl"], "cfl")
    if not 0 < raw["cfl"] < 1:
        raise ConfigError(f"cfl must lie in (0, 1), got {raw['cfl']}")
    raw["rho_floor_guard"] = _number(raw["rho_floor_guard"], "rho_floor_guard", positive=True)
    raw["t_end"] = _number(raw["t_end"], "t_end", nonneg=True)
    if raw["record_interval"] is None:
        raw["record_interval"] = raw["t_end"] / 200.0 if raw["t_end"] > 0 else 1.0
    raw["record_interval"] = _number(raw["record_interval"], "record_interval", positive=True)
    if raw["snapshot_interval"] is not None:
        raw["snapshot_interval"] = _number(raw["snapshot_interval"], "snapshot_interval", positive=True)
    if raw["max_wall_seconds"] is not None:
        raw["max_wall_seconds"] = _number(raw["max_wall_seconds"], "max_wall_seconds", positive=True)
    if isinstance(raw["seed"], bool) or not isinstance(raw["seed"], int):
        raise ConfigError("seed must be an integer")
    if raw["backend"] not in (None, "auto", "compiled", "python"):
        raise ConfigError(f"backend must be auto, compiled or python, got {raw['backend']!r}")
    return ScenarioConfig(raw, base_dir)


def load_config(path: str) -> ScenarioConfig:
    """Read, default and validate a JSON scenario file."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return validate(data, os.path.dirname(os.path.abspath(path)))


def parse_config(text: str, base_dir: str = ".") -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return validate(data, base_dir)
