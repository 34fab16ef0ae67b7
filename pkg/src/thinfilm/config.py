"""YAML experiment configuration."""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .geometry import ConvexPolygon, Disk, DomainMask, Rectangle, Shape
from .minimize import MinimizeConfig
from .params import EPS0_DEFAULT


class ConfigError(ValueError):
    pass


def build_shape(spec: dict) -> Shape:
    kind = spec.get("kind")
    if kind == "disk":
        return Disk(float(spec["radius"]), tuple(spec.get("center", (0.0, 0.0))))
    if kind == "rectangle":
        x0, y0 = spec.get("corner", (0.0, 0.0))
        return Rectangle(x0, y0, x0 + float(spec["width"]), y0 + float(spec["height"]))
    if kind == "polygon":
        return ConvexPolygon(tuple(tuple(map(float, v)) for v in spec["vertices"]))
    raise ConfigError(f"unknown shape kind {kind!r}")


@dataclass
class ExperimentConfig:
    shape: dict = field(default_factory=lambda: {"kind": "disk", "radius": 0.1})
    epsilon: float = 1e-2
    epsilons: list = field(default_factory=lambda: [1e-2, 1e-3])
    Q: float = 2.0
    eps0: float = EPS0_DEFAULT
    h: float | None = None
    cells: int = 64
    h_over_eps: float | None = 1.0
    solver: dict = field(default_factory=dict)
    starts: list = field(default_factory=lambda: ["uniform_up", "uniform_down", "random_unit", "split"])
    seeds: list = field(default_factory=lambda: [0])
    onset: dict = field(default_factory=lambda: {"family": "disk", "diam_factors": [0.5]})
    check: dict = field(default_factory=dict)

    def mask(self, epsilon: float | None = None) -> DomainMask:
        shape = build_shape(self.shape)
        h = self.h
        if h is None:
            h = shape.diameter() / (self.cells - 2)
            if self.h_over_eps is not None:
                h = min(h, self.h_over_eps * (epsilon if epsilon is not None else self.epsilon))
        return DomainMask.from_shape(shape, h)

    def minimize_config(self, seed: int | None = None) -> MinimizeConfig:
        opts = dict(self.solver)
        if seed is not None:
            opts["seed"] = seed
        try:
            return MinimizeConfig(**opts)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    data = {}
    if path is not None:
        data = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
    data.update(overrides or {})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**data)
