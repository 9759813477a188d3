"""Strict ``[section] key = value`` run configuration.

configparser is not used because it cannot report the line number of an
offending key and silently accepts duplicates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .propagate import Grid1D, Potential, harmonic, step, tabulated, zero_potential
from .states import (
    BoxDomain,
    PiecewiseState,
    box_ground_state,
    gaussian_packet,
    kink_state,
    phase_jump_state,
    read_samples,
    truncated_well,
    wall_removed,
)


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.line = line


def _bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _formats(s: str) -> tuple[str, ...]:
    items = tuple(p.strip() for p in s.split(",") if p.strip())
    bad = [p for p in items if p not in ("csv", "json", "svg")]
    if bad:
        raise ValueError(f"unknown output format(s) {bad}; allowed: csv, json, svg")
    return items


STATE_KINDS = {
    "truncated_well": {"x0", "fraction", "renormalize"},
    "wall_removed": {"x0"},
    "kink": {"k_left", "k_right", "value_re", "value_im", "boost"},
    "phase_jump": {"dphi"},
    "samples_file": {"file"},
    "gaussian": {"sigma", "k0", "center"},
    "ground": set(),
}
POTENTIAL_KINDS = {
    "zero": set(),
    "harmonic": {"kappa"},
    "step": {"height", "position"},
    "samples_file": {"file"},
}

SCHEMA = {
    "state": {
        "kind": str, "x0": float, "fraction": float, "renormalize": _bool, "k_left": float,
        "k_right": float, "value_re": float, "value_im": float, "boost": float, "dphi": float,
        "file": str, "sigma": float, "k0": float, "center": float,
    },
    "grid": {"a": float, "b": float, "n_cells": int, "mass": float},
    "time": {"t_min": float, "t_max": float, "n_points": int, "allow_long_times": _bool},
    "potential": {"kind": str, "kappa": float, "height": float, "position": float, "file": str},
    "output": {"dir": str, "formats": _formats},
}

DEFAULTS = {
    "state": {"kind": "truncated_well"},
    "grid": {"a": -1.0, "b": 1.0, "n_cells": 16384, "mass": 1.0},
    "time": {"t_min": 1e-5, "t_max": 1e-3, "n_points": 15, "allow_long_times": False},
    "potential": {"kind": "zero"},
    "output": {"dir": "discoflux_out", "formats": ("csv", "json", "svg")},
}


@dataclass
class RunConfig:
    values: dict
    lines: dict = field(default_factory=dict)
    source: str = "<config>"
    base_dir: Path = Path(".")

    def get(self, section: str, key: str, default=None):
        return self.values.get(section, {}).get(key, DEFAULTS.get(section, {}).get(key, default))

    def _err(self, msg, section=None, key=None):
        return ConfigError(msg, self.lines.get((section, key)), self.source)

    def domain(self) -> BoxDomain:
        try:
            return BoxDomain(self.get("grid", "a"), self.get("grid", "b"), self.get("grid", "mass"))
        except ValueError as exc:
            raise self._err(str(exc), "grid", "a") from exc

    def grid(self) -> Grid1D:
        try:
            return Grid1D(self.domain(), self.get("grid", "n_cells"))
        except ValueError as exc:
            raise self._err(str(exc), "grid", "n_cells") from exc

    def times(self) -> np.ndarray:
        return np.geomspace(self.get("time", "t_min"), self.get("time", "t_max"), self.get("time", "n_points"))

    def state(self) -> PiecewiseState:
        kind = self.get("state", "kind")
        dom = self.domain()
        g = lambda k, d=None: self.get("state", k, d)  # noqa: E731
        try:
            if kind == "truncated_well":
                return truncated_well(g("x0", 1.0), g("fraction", 0.75), dom, g("renormalize", False))
            if kind == "wall_removed":
                return wall_removed(g("x0", 1.0), dom)
            if kind == "kink":
                v = complex(g("value_re", 1.0), g("value_im", 0.0))
                return kink_state(g("k_left", 2.0), g("k_right", 2.0), v, dom, g("boost", 0.0))
            if kind == "phase_jump":
                return phase_jump_state(g("dphi", math.pi / 2), box_ground_state(dom))
            if kind == "samples_file":
                return read_samples(self.base_dir / g("file"), dom)
            if kind == "gaussian":
                return gaussian_packet(g("sigma", 0.08), g("k0", 5.0), g("center", 0.0), dom)
            return box_ground_state(dom)
        except (ValueError, OSError) as exc:
            raise self._err(str(exc), "state", "kind") from exc

    def potential(self) -> Potential:
        kind = self.get("potential", "kind")
        g = lambda k, d=None: self.get("potential", k, d)  # noqa: E731
        if kind == "harmonic":
            return harmonic(g("kappa", 1.0))
        if kind == "step":
            return step(g("height", 1.0), g("position", 0.0))
        if kind == "samples_file":
            data = np.loadtxt(self.base_dir / g("file"), delimiter=",", comments="#", ndmin=2)
            return tabulated(data[:, 0], data[:, 1])
        return zero_potential()

    def output_dir(self, override: str | None = None) -> Path:
        import os

        if override:
            return Path(override)
        env = os.environ.get("DISCOFLUX_OUT")
        if env:
            return Path(env)
        return Path(self.get("output", "dir"))

    def formats(self) -> tuple[str, ...]:
        return tuple(self.get("output", "formats"))


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> RunConfig:
    values: dict = {}
    lines: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno, source)
            values.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        if section is None:
            raise ConfigError("key outside of any [section]", lineno, source)
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno, source)
        if key in values[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno, source)
        try:
            values[section][key] = SCHEMA[section][key](val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno, source) from None
        lines[(section, key)] = lineno
    cfg = RunConfig(values, lines, source, base_dir or Path("."))
    _validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", None, str(path)) from exc
    return parse_config(text, str(path), path.parent)


def _validate(cfg: RunConfig) -> None:
    for section, kinds in (("state", STATE_KINDS), ("potential", POTENTIAL_KINDS)):
        kind = cfg.get(section, "kind")
        if kind not in kinds:
            raise cfg._err(f"unknown {section} kind {kind!r}; expected one of {sorted(kinds)}", section, "kind")
        for key in cfg.values.get(section, {}):
            if key != "kind" and key not in kinds[kind]:
                raise cfg._err(f"key {key!r} does not apply to {section} kind {kind!r}", section, key)
    for section, key in (("grid", "mass"), ("grid", "n_cells"), ("time", "t_min"), ("time", "t_max"), ("time", "n_points")):
        if not cfg.get(section, key) > 0:
            raise cfg._err(f"{key} must be positive", section, key)
    for key in ("x0", "sigma"):
        if key in cfg.values.get("state", {}) and not cfg.get("state", key) > 0:
            raise cfg._err(f"{key} must be positive", "state", key)
    if cfg.get("time", "t_min") >= cfg.get("time", "t_max"):
        raise cfg._err("t_min must be below t_max", "time", "t_min")
    if cfg.get("time", "n_points") < 5:
        raise cfg._err("n_points must be at least 5 for a power-law fit", "time", "n_points")
    if cfg.get("state", "kind") != "samples_file" and not cfg.get("time", "allow_long_times"):
        x0 = cfg.get("state", "x0", 1.0) if cfg.get("state", "kind") in ("truncated_well", "wall_removed") else 1.0
        limit = 0.1 * cfg.get("grid", "mass") * x0**2
        if cfg.get("time", "t_max") >= limit:
            raise cfg._err(
                f"t_max must stay below 0.1*M*x0^2 = {limit:g} (set allow_long_times = true to override)",
                "time", "t_max",
            )
