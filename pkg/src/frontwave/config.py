"""Flat key-value run configuration with dotted section names.

The on-disk format is one ``key = value`` pair per line, ``#`` comment
lines, blank lines ignored. Keys are dotted (``model.d1``, ``stop.t_end``);
values are plain text interpreted by the typed getters. Serialization is
canonical (sorted keys), so configs round-trip through parse/serialize
unchanged. The full schema lives in docs/config.md.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fbsolver import SolverNumerics, StopRule
from .model import BoundaryKind, InitialData, ModelParams, Nonlinearity, cholera, saturating
from .semiwave import SemiwaveNumerics
from ._format import fmt


class ConfigError(ValueError):
    """Malformed or out-of-schema configuration."""


_KNOWN_KEYS = {
    "nonlinearity.name", "nonlinearity.hp", "nonlinearity.hq",
    "nonlinearity.gp", "nonlinearity.gq", "nonlinearity.c",
    "model.d1", "model.d2", "model.a", "model.b",
    "model.mu1", "model.mu2", "model.boundary",
    "init.h0", "init.shape", "init.amplitude", "init.table", "init.nodes",
    "numerics.n", "numerics.dt_cap", "numerics.cfl", "numerics.c_adv",
    "numerics.dx_semiwave", "numerics.x_max", "numerics.c_tol", "numerics.f_tol",
    "semiwave.c",
    "stop.t_end", "stop.x_budget",
    "output.dir", "output.cadence", "output.snapshots",
    "sweep.h0", "sweep.amplitude", "sweep.mu",
}


@dataclass(frozen=True)
class RunConfig:
    entries: tuple  # sorted (key, value) text pairs

    # -- parsing / serialization ------------------------------------------

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        pairs = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in pairs:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            pairs[key] = value
        return cls(entries=tuple(sorted(pairs.items())))

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, "r") as fh:
            return cls.parse(fh.read())

    def serialize(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.entries)

    def override(self, updates: dict) -> "RunConfig":
        pairs = dict(self.entries)
        for key, value in updates.items():
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"unknown key {key!r}")
            pairs[key] = value if isinstance(value, str) else fmt(value)
        return RunConfig(entries=tuple(sorted(pairs.items())))

    # -- typed access ------------------------------------------------------

    def get(self, key: str, default: str | None = None) -> str | None:
        for k, v in self.entries:
            if k == key:
                return v
        return default

    def require(self, key: str) -> str:
        value = self.get(key)
        if value is None:
            raise ConfigError(f"missing required key {key!r}")
        return value

    def getfloat(self, key: str, default: float | None = None) -> float | None:
        value = self.get(key)
        if value is None:
            return default
        try:
            return float(value)
        except ValueError as exc:
            raise ConfigError(f"{key}: not a number: {value!r}") from exc

    def getint(self, key: str, default: int | None = None) -> int | None:
        value = self.get(key)
        if value is None:
            return default
        try:
            return int(value)
        except ValueError as exc:
            raise ConfigError(f"{key}: not an integer: {value!r}") from exc

    def getfloats(self, key: str) -> list[float] | None:
        value = self.get(key)
        if value is None or value == "":
            return None
        try:
            return [float(tok) for tok in value.split(",")]
        except ValueError as exc:
            raise ConfigError(f"{key}: not a comma list of numbers: {value!r}") from exc


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_nonlinearity(cfg: RunConfig) -> Nonlinearity:
    name = cfg.get("nonlinearity.name", "saturating")
    if name == "saturating":
        return saturating(
            hp=cfg.getfloat("nonlinearity.hp", 2.0),
            hq=cfg.getfloat("nonlinearity.hq", 1.0),
            gp=cfg.getfloat("nonlinearity.gp", 2.0),
            gq=cfg.getfloat("nonlinearity.gq", 1.0),
        )
    if name == "cholera":
        return cholera(
            c=cfg.getfloat("nonlinearity.c", 1.0),
            gp=cfg.getfloat("nonlinearity.gp", 2.0),
            gq=cfg.getfloat("nonlinearity.gq", 1.0),
        )
    raise ConfigError(f"unknown nonlinearity {name!r}")


def build_params(cfg: RunConfig) -> ModelParams:
    boundary = cfg.get("model.boundary", "neumann").lower()
    try:
        kind = BoundaryKind(boundary)
    except ValueError as exc:
        raise ConfigError(f"model.boundary: {boundary!r}") from exc
    try:
        return ModelParams(
            d1=cfg.getfloat("model.d1", 1.0), d2=cfg.getfloat("model.d2", 1.0),
            a=cfg.getfloat("model.a", 1.0), b=cfg.getfloat("model.b", 1.0),
            mu1=cfg.getfloat("model.mu1", 1.0), mu2=cfg.getfloat("model.mu2", 1.0),
            boundary=kind,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_initial_data(cfg: RunConfig) -> InitialData:
    h0 = cfg.getfloat("init.h0")
    shape = cfg.get("init.shape", "sine")
    amplitude = cfg.getfloat("init.amplitude", 0.5)
    nodes = cfg.getint("init.nodes", 401)
    if shape == "table":
        return InitialData.from_table(cfg.require("init.table"))
    if h0 is None:
        raise ConfigError("missing required key 'init.h0'")
    if shape == "sine":
        return InitialData.sine(h0, amplitude, nodes)
    if shape == "cosine-bump":
        return InitialData.cosine_bump(h0, amplitude, nodes)
    raise ConfigError(f"unknown init.shape {shape!r}")


def build_solver_numerics(cfg: RunConfig) -> SolverNumerics:
    snaps = cfg.getfloats("output.snapshots") or ()
    return SolverNumerics(
        n=cfg.getint("numerics.n", 400),
        dt_cap=cfg.getfloat("numerics.dt_cap", 1e-3),
        cfl=cfg.getfloat("numerics.cfl", 0.4),
        c_adv=cfg.getfloat("numerics.c_adv", 0.0),
        trace_cadence=cfg.getfloat("output.cadence", 0.1),
        snapshot_times=tuple(snaps),
    )


def build_semiwave_numerics(cfg: RunConfig) -> SemiwaveNumerics:
    x_max = cfg.getfloat("numerics.x_max", 0.0)
    return SemiwaveNumerics(
        dx=cfg.getfloat("numerics.dx_semiwave", 0.02),
        x_max=None if not x_max else x_max,
        c_tol=cfg.getfloat("numerics.c_tol", 1e-9),
        f_tol=cfg.getfloat("numerics.f_tol", 1e-8),
    )


def build_stop(cfg: RunConfig) -> StopRule:
    budget = cfg.getfloat("stop.x_budget", 0.0)
    return StopRule(
        t_end=cfg.getfloat("stop.t_end", 10.0),
        x_budget=budget if budget and budget > 0 else np.inf,
    )


def sweep_cells(cfg: RunConfig) -> list[dict]:
    """Cross product of the sweep axes; each cell is an override mapping."""
    axes = []
    h0s = cfg.getfloats("sweep.h0")
    if h0s:
        axes.append([("init.h0", v) for v in h0s])
    amps = cfg.getfloats("sweep.amplitude")
    if amps:
        axes.append([("init.amplitude", v) for v in amps])
    mus = cfg.getfloats("sweep.mu")
    if mus:
        axes.append([("model.mu", v) for v in mus])
    if not axes:
        axes.append([(None, None)])
    cells = [{}]
    for axis in axes:
        cells = [dict(cell, **({} if key is None else {key: val}))
                 for cell in cells for key, val in axis]
    out = []
    for cell in cells:
        mapping = {}
        for key, val in cell.items():
            if key == "model.mu":  # shorthand: ladder moves both coefficients
                mapping["model.mu1"] = fmt(val)
                mapping["model.mu2"] = fmt(val)
            else:
                mapping[key] = fmt(val)
        out.append(mapping)
    return out
