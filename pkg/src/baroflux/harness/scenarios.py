"""Built-in scenario catalog.

Each entry is a JSON-compatible dict accepted by ``config.validate``. The
``e0-sweep`` entry is a family: its members share the channel setup and
differ in the perturbation amplitude.
"""
from __future__ import annotations

import copy
from typing import Dict, List

from .config import ScenarioConfig, validate

SWEEP_AMPLITUDES = (0.05, 0.1, 0.2, 0.4)


def _closed_box_2d():
    return {
        "name": "closed-box-gravity",
        "doc": "Isothermal gas at rest in a closed unit square under gravity G = -x2; "
               "the equilibrium is the exponential column fixed by the total mass.",
        "grid": {"dim": 2, "extent": [1.0, 1.0], "cells": [64, 64]},
        "law": {"law": "isothermal", "a": 1.0},
        "motion": {"translation": [0.0, 0.0], "omega": 0.0},
        "potential": {"kind": "linear", "g": [0.0, -1.0]},
        "equilibrium": {"mass": 1.0},
        "initial": {"perturbation": {"kind": "density-bump", "amplitude": 0.2, "width": 0.1,
                                     "center": [0.5, 0.5]}},
        "viscosity": {"mu": 0.1, "lambda": 0.0},
        "t_end": 2.0,
    }


def _closed_box_1d():
    return {
        "name": "closed-box-gravity-1d",
        "doc": "One-dimensional isothermal column on [0, 1] under G = -x with fixed total mass.",
        "grid": {"dim": 1, "extent": [1.0], "cells": [128]},
        "law": {"law": "isothermal", "a": 1.0},
        "motion": {"translation": [0.0]},
        "potential": {"kind": "linear", "g": [-1.0]},
        "equilibrium": {"mass": 1.0},
        "initial": {"perturbation": {"kind": "density-bump", "amplitude": 0.2, "width": 0.1,
                                     "center": [0.5]}},
        "viscosity": {"mu": 1e-4, "lambda": 0.1},
        "t_end": 2.0,
    }


def _channel_1d():
    return {
        "name": "channel-inflow",
        "doc": "Uniform flow u_E = 1 through [0, 1] with density 1 prescribed at the inflow end; "
               "a density bump is flushed through the outflow.",
        "grid": {"dim": 1, "extent": [1.0], "cells": [512]},
        "law": {"law": "gamma", "a": 1.0, "gamma": 2.0},
        "motion": {"translation": [1.0]},
        "potential": {"kind": "constant", "c": 0.0},
        "equilibrium": {"inflow_density": 1.0},
        "initial": {"perturbation": {"kind": "density-bump", "amplitude": 0.2, "width": 0.1,
                                     "center": [0.5]}},
        "viscosity": {"mu": 1e-4, "lambda": 0.02},
        "t_end": 7.0,
    }


def _channel_2d():
    return {
        "name": "channel-inflow-2d",
        "doc": "Horizontal flow u_E = (1, 0) through the unit square under gravity G = -x2; "
               "the west edge carries the hydrostatic inflow profile with density 1 at the floor.",
        "grid": {"dim": 2, "extent": [1.0, 1.0], "cells": [64, 64]},
        "law": {"law": "gamma", "a": 1.0, "gamma": 1.4},
        "motion": {"translation": [1.0, 0.0]},
        "potential": {"kind": "linear", "g": [0.0, -1.0]},
        "equilibrium": {"inflow_density": {"hydrostatic": {"reference": 1.0, "at": [0.0, 0.0]}}},
        "initial": {"perturbation": {"kind": "density-bump", "amplitude": 0.2, "width": 0.1,
                                     "center": [0.4, 0.5]}},
        "viscosity": {"mu": 0.01, "lambda": 0.0},
        "t_end": 4.0,
    }


def _vacuum_wedge():
    return {
        "name": "vacuum-wedge",
        "doc": "Gamma-law gas (a = 1, gamma = 2) on [0, 1] with G = x and mass 0.0625: the "
               "equilibrium has vacuum on [0, 0.5). Transient runs start from a floored density.",
        "grid": {"dim": 1, "extent": [1.0], "cells": [64]},
        "law": {"law": "gamma", "a": 1.0, "gamma": 2.0},
        "motion": {"translation": [0.0]},
        "potential": {"kind": "linear", "g": [1.0]},
        "equilibrium": {"mass": 0.0625},
        "initial": {"perturbation": {"kind": "density-bump", "amplitude": 0.2, "width": 0.1,
                                     "center": [0.75], "rho_min": 0.05}},
        "viscosity": {"mu": 1e-4, "lambda": 0.05},
        "t_end": 0.25,
    }


def _rotating_square():
    return {
        "name": "rotating-square",
        "doc": "Rigid rotation omega = 1 about the centre of the unit square with the radial "
               "potential G = -|x - c|^2; every edge splits into an inflow and an outflow half.",
        "grid": {"dim": 2, "extent": [1.0, 1.0], "cells": [64, 64]},
        "law": {"law": "gamma", "a": 1.0, "gamma": 2.0},
        "motion": {"translation": [0.0, 0.0], "omega": 1.0, "center": [0.5, 0.5]},
        "potential": {"kind": "radial", "center": [0.5, 0.5], "coeffs": [0.0, 0.0, -1.0]},
        "equilibrium": {"inflow_density": {"hydrostatic": {"reference": 1.0, "at": [0.5, 0.5]}}},
        "initial": {"perturbation": {"kind": "density-bump", "amplitude": 0.2, "width": 0.3,
                                     "center": [0.35, 0.5]}},
        "viscosity": {"mu": 0.02, "lambda": 0.0},
        "t_end": 8.0,
    }


def _sweep_member(amplitude: float):
    base = _channel_1d()
    base["name"] = f"e0-sweep-{amplitude:g}"
    base["doc"] = f"channel-inflow with perturbation amplitude {amplitude:g}"
    base["initial"]["perturbation"]["amplitude"] = amplitude
    return base


_BUILDERS = {
    "closed-box-gravity": _closed_box_2d,
    "closed-box-gravity-1d": _closed_box_1d,
    "channel-inflow": _channel_1d,
    "channel-inflow-2d": _channel_2d,
    "vacuum-wedge": _vacuum_wedge,
    "rotating-square": _rotating_square,
}

FAMILIES = {"e0-sweep": [_sweep_member(a) for a in SWEEP_AMPLITUDES]}

DOCS = {name: b()["doc"] for name, b in _BUILDERS.items()}
DOCS["e0-sweep"] = ("channel-inflow at perturbation amplitudes "
                    + ", ".join(f"{a:g}" for a in SWEEP_AMPLITUDES)
                    + "; compares hitting times across initial energies.")


def builtin_scenarios() -> Dict[str, str]:
    """Catalog ``name -> description``."""
    return dict(DOCS)


def scenario_dict(name: str) -> dict:
    if name in _BUILDERS:
        return _BUILDERS[name]()
    raise KeyError(name)


def get_scenario(name: str, **overrides) -> ScenarioConfig:
    """Validated built-in scenario; ``overrides`` use ``block__key`` paths."""
    if name in FAMILIES:
        members = [validate(copy.deepcopy(m)) for m in FAMILIES[name]]
        head = members[0]
        return ScenarioConfig(head.raw, head.base_dir, members=members)
    cfg = validate(scenario_dict(name))
    return cfg.with_updates(**overrides) if overrides else cfg


def family_members(name: str) -> List[ScenarioConfig]:
    return [validate(copy.deepcopy(m)) for m in FAMILIES[name]]
