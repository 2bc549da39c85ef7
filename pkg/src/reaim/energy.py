"""Datacenter brown-energy model and the network-free optimal VM distribution."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence


class InfeasibleError(ValueError):
    """Aggregate VM demand exceeds aggregate datacenter capacity."""


@dataclass(frozen=True)
class EnergyParams:
    server_power: float = 10.0
    pue: float = 1.2

    def __post_init__(self):
        if self.server_power <= 0:
            raise ValueError("server_power must be positive")
        if self.pue < 1:
            raise ValueError("pue must be >= 1")

    @property
    def per_server(self) -> float:
        return self.pue * self.server_power


@dataclass(frozen=True)
class Datacenter:
    """A DC at graph node ``node``.

    ``vm_bandwidths`` holds the migration bandwidth (Gb/s) of each hosted VM;
    ``None`` is allowed for energy-only studies where bandwidth is irrelevant.
    """

    node: int
    servers: int
    vms_per_server: int
    hosted: int
    renewable: float
    price: float
    vm_bandwidths: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.servers < 0 or self.vms_per_server < 1:
            raise ValueError(f"DC {self.node}: bad server configuration")
        if not 0 <= self.hosted <= self.capacity:
            raise ValueError(f"DC {self.node}: hosted={self.hosted} outside [0, {self.capacity}]")
        if self.renewable < 0:
            raise ValueError(f"DC {self.node}: renewable supply must be >= 0")
        if self.price <= 0:
            raise ValueError(f"DC {self.node}: price must be > 0")
        if self.vm_bandwidths is not None and len(self.vm_bandwidths) != self.hosted:
            raise ValueError(f"DC {self.node}: {len(self.vm_bandwidths)} bandwidths for {self.hosted} VMs")

    @property
    def capacity(self) -> int:
        return self.servers * self.vms_per_server

    def with_hosted(self, hosted: int) -> "Datacenter":
        return replace(self, hosted=hosted, vm_bandwidths=None)


@dataclass(frozen=True)
class WorkloadTarget:
    """Target VM count per DC, aligned with the DC list it was computed for."""

    counts: tuple[int, ...]

    def __iter__(self):
        return iter(self.counts)

    def __getitem__(self, i):
        return self.counts[i]

    def __len__(self):
        return len(self.counts)


def brown_energy_at(hosted: int, dc: Datacenter, ep: EnergyParams) -> float:
    active = -(-hosted // dc.vms_per_server)
    return max(0.0, ep.per_server * active - dc.renewable)


def brown_energy(dc: Datacenter, ep: EnergyParams) -> float:
    """Grid energy drawn by ``dc``: PUE-scaled active-server demand minus renewables, floored at 0."""
    return brown_energy_at(dc.hosted, dc, ep)


def total_cost(dcs: Sequence[Datacenter], ep: EnergyParams) -> float:
    return sum(dc.price * brown_energy(dc, ep) for dc in dcs)


def cost_of_counts(dcs: Sequence[Datacenter], counts: Sequence[int], ep: EnergyParams) -> float:
    return sum(dc.price * brown_energy_at(n, dc, ep) for dc, n in zip(dcs, counts))


def available_renewable(dc: Datacenter, hosted: int, ep: EnergyParams) -> float:
    active = -(-hosted // dc.vms_per_server)
    return max(0.0, dc.renewable - ep.per_server * active)


def _free_blocks(dc: Datacenter, ep: EnergyParams) -> int:
    """Servers fully covered by renewable supply."""
    per = ep.per_server
    n = min(int(dc.renewable // per), dc.servers)
    while n < dc.servers and per * (n + 1) <= dc.renewable:
        n += 1
    while n > 0 and per * n > dc.renewable:
        n -= 1
    return n


def optimal_distribution(dcs: Sequence[Datacenter], ep: EnergyParams) -> WorkloadTarget:
    """Cost-minimal VM counts per DC, keeping VMs in place where cost allows.

    Brown energy is a convex function of a DC's active-server count, so VMs are
    placed one server-block at a time on the cheapest marginal block. Among
    blocks of equal marginal cost, blocks that are already powered on win, then
    lower price, then lower node id; that keeps migration volume small without
    changing the optimal cost. Only the minimum number of servers is opened,
    and the spare slots of the last blocks are trimmed from DCs that would
    otherwise receive VMs.
    """
    if not dcs:
        return WorkloadTarget(())
    per_server = {dc.vms_per_server for dc in dcs}
    if len(per_server) != 1:
        raise ValueError("all DCs must share the same VMs-per-server value")
    vps = per_server.pop()
    total = sum(dc.hosted for dc in dcs)
    if total > sum(dc.capacity for dc in dcs):
        raise InfeasibleError(f"{total} VMs exceed aggregate capacity")
    needed = -(-total // vps)

    # a DC's block costs change only where renewables run out and where its
    # powered servers end, so whole runs of blocks can be ranked at once
    per = ep.per_server
    runs = []
    for idx, dc in enumerate(dcs):
        powered = -(-dc.hosted // vps)
        free = _free_blocks(dc, ep)
        cuts = sorted({c for c in (0, free, free + 1, powered, dc.servers) if c <= dc.servers})
        for a, b in zip(cuts, cuts[1:]):
            prev = max(0.0, per * a - dc.renewable)
            cur = max(0.0, per * (a + 1) - dc.renewable)
            # round so float noise cannot split ties between identical blocks
            marginal = round(dc.price * (cur - prev), 9)
            runs.append((marginal, a >= powered, dc.price, dc.node, a, b, idx))
    runs.sort()
    servers = [0] * len(dcs)
    left = needed
    for *_, a, b, idx in runs:
        if left == 0:
            break
        take = min(b - a, left)
        servers[idx] += take
        left -= take

    counts = [n * vps for n in servers]
    spare = sum(counts) - total
    intake_order = sorted(range(len(dcs)), key=lambda i: (-(counts[i] - dcs[i].hosted), dcs[i].node))
    for i in intake_order:
        if spare == 0:
            break
        if servers[i] == 0:
            continue
        take = min(spare, vps - 1, max(counts[i] - dcs[i].hosted, 0))
        counts[i] -= take
        spare -= take
    for i in intake_order:
        if spare == 0:
            break
        if servers[i] == 0:
            continue
        take = min(spare, max(counts[i] - (servers[i] - 1) * vps - 1, 0))
        counts[i] -= take
        spare -= take
    assert spare == 0 and sum(counts) == total
    return WorkloadTarget(tuple(counts))


def classify(dcs: Sequence[Datacenter], target: WorkloadTarget) -> tuple[list[int], list[int]]:
    """Split DC nodes into sources (must shed VMs) and destinations (can absorb)."""
    if len(target) != len(dcs):
        raise ValueError("target does not match the DC list")
    sources = [dc.node for dc, t in zip(dcs, target) if dc.hosted > t]
    dests = [dc.node for dc, t in zip(dcs, target) if dc.hosted < t]
    return sources, dests


def check_target(dcs: Sequence[Datacenter], target: WorkloadTarget) -> None:
    if sum(target) != sum(dc.hosted for dc in dcs):
        raise ValueError("target does not conserve the VM count")
    for dc, t in zip(dcs, target):
        if not 0 <= t <= dc.capacity:
            raise ValueError(f"DC {dc.node}: target {t} outside [0, {dc.capacity}]")

