"""Scenario configuration with the reference simulation defaults."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..energy import EnergyParams
from ..manycast import LPR, SPR
from ..topology import Graph, build_nsfnet, load_edge_list
from ..traffic import FIRST_FIT, RANDOM_FIT


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    topology: str | None = None
    dc_nodes: tuple[int, ...] = (3, 5, 8, 10, 12)
    servers: int = 1000
    vms_per_server: int = 10
    prices: tuple[float, ...] | None = (2.1, 2.5, 1.9, 2.8, 2.0)
    price_range: tuple[float, float] | None = None
    hosted_range: tuple[int, int] = (0, 8000)
    renewable_range: tuple[float, float] = (1000.0, 9000.0)
    server_power: float = 10.0
    pue: float = 1.2
    vm_bandwidth_range: tuple[float, float] = (1.0, 14.0)
    link_slots: int = 300
    slot_capacity: float = 12.5
    kappas: tuple[int, ...] = (2, 4, 8, 16)
    erlangs: tuple[float, ...] = (40, 80, 120, 160, 200, 240, 280, 320)
    k_paths: int = 3
    max_congestion: float = 1.0
    replications: int = 150
    base_seed: int = 1
    algorithms: tuple[str, ...] = (SPR, LPR)
    background_policy: str = RANDOM_FIT
    max_resamples: int = 1000

    def __post_init__(self):
        for name in ("dc_nodes", "kappas", "erlangs", "algorithms"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for name in ("prices", "price_range", "hosted_range", "renewable_range",
                     "vm_bandwidth_range"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(value))
        self.validate()

    def validate(self) -> None:
        if not self.dc_nodes or len(set(self.dc_nodes)) != len(self.dc_nodes):
            raise ConfigError("dc_nodes must be a non-empty list of distinct nodes")
        if self.prices is None and self.price_range is None:
            raise ConfigError("either prices or price_range is required")
        if self.prices is not None and len(self.prices) != len(self.dc_nodes):
            raise ConfigError(f"{len(self.prices)} prices for {len(self.dc_nodes)} DCs")
        if self.prices is not None and min(self.prices) <= 0:
            raise ConfigError("prices must be positive")
        for name in ("price_range", "hosted_range", "renewable_range", "vm_bandwidth_range"):
            value = getattr(self, name)
            if value is not None and (len(value) != 2 or value[0] > value[1] or value[0] < 0):
                raise ConfigError(f"{name} must be [low, high] with 0 <= low <= high")
        if self.hosted_range[1] > self.servers * self.vms_per_server:
            raise ConfigError("hosted_range exceeds DC capacity")
        if self.vm_bandwidth_range[0] <= 0:
            raise ConfigError("VM bandwidths must be positive")
        if self.servers < 1 or self.vms_per_server < 1 or self.link_slots < 1:
            raise ConfigError("servers, vms_per_server and link_slots must be >= 1")
        if self.slot_capacity <= 0 or self.server_power <= 0 or self.pue < 1:
            raise ConfigError("slot_capacity, server_power must be > 0 and pue >= 1")
        if any(k < 1 for k in self.kappas) or self.k_paths < 1:
            raise ConfigError("kappa values and k_paths must be >= 1")
        if any(e < 0 for e in self.erlangs):
            raise ConfigError("erlang loads must be >= 0")
        if not 0 < self.max_congestion <= 1:
            raise ConfigError("max_congestion must lie in (0, 1]")
        if self.replications < 0 or self.max_resamples < 1:
            raise ConfigError("replications must be >= 0 and max_resamples >= 1")
        unknown = set(self.algorithms) - {SPR, LPR}
        if unknown:
            raise ConfigError(f"unknown algorithms: {sorted(unknown)}")
        if self.background_policy not in (FIRST_FIT, RANDOM_FIT):
            raise ConfigError(f"unknown background_policy {self.background_policy!r}")

    @property
    def energy(self) -> EnergyParams:
        return EnergyParams(self.server_power, self.pue)

    def graph(self) -> Graph:
        g = build_nsfnet() if self.topology is None else load_edge_list(self.topology)
        missing = [n for n in self.dc_nodes if not 1 <= n <= g.n_nodes]
        if missing:
            raise ConfigError(f"DC nodes {missing} are not in the topology")
        return g

    def override(self, **changes: Any) -> "ScenarioConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> dict[str, Any]:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def config_from_mapping(data: Mapping[str, Any]) -> ScenarioConfig:
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return ScenarioConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a YAML (or JSON) mapping whose keys mirror :class:`ScenarioConfig`."""
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".json"):
        data = json.loads(text)
    else:
        data = yaml.safe_load(text)
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError("config file must hold a key-value mapping")
    return config_from_mapping(data)
