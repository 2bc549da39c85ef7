"""Manycast VM-migration heuristics: shortest-path (SPR) and least-weight-path (LPR).

Both heuristics repeatedly pick a (source DC, destination DC, path) triple,
pack the source's cheapest-bandwidth pending VMs into a group of at most
``kappa`` slots and try to admit it. The first group that fails admission ends
the whole run, exactly like the ``else return`` branch of the original
algorithms.

SPR fixes the DC pair first (most VMs left to shed, most spare renewable
energy) and only looks at that pair's shortest path. LPR scans the K shortest
paths of every pending pair and lets the least congested path decide the pair.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

from .energy import (Datacenter, EnergyParams, WorkloadTarget, available_renewable,
                     cost_of_counts, optimal_distribution)
from .spectrum import (SlotMap, SpectrumAllocation, admissible, allocate, first_fit,
                       path_congestion, slots_needed)
from .topology import Graph, Path, routes
from .traffic import MigrationDemand, demand_from_gap

log = logging.getLogger(__name__)

SPR = "spr"
LPR = "lpr"


class GroupTooWide(ValueError):
    """A single VM needs more slots than the migration granularity allows."""


@dataclass(frozen=True)
class HeuristicConfig:
    kind: str = LPR
    kappa: int = 2
    k_paths: int = 3
    max_congestion: float = 1.0

    def __post_init__(self):
        if self.kind not in (SPR, LPR):
            raise ValueError(f"unknown heuristic {self.kind!r}")
        if self.kappa < 1 or self.k_paths < 1:
            raise ValueError("kappa and k_paths must be >= 1")
        if not 0 < self.max_congestion <= 1:
            raise ValueError("max_congestion must lie in (0, 1]")


@dataclass(frozen=True)
class MigrationGroup:
    vms: tuple[tuple[int, float], ...]
    source: int
    dest: int | None
    width: int

    @property
    def bandwidth(self) -> float:
        return sum(bw for _, bw in self.vms)


@dataclass(frozen=True)
class MigrationRecord:
    round: int
    group: MigrationGroup
    path: Path
    start: int | None
    accepted: bool
    congestion_before: float


def build_group(pending: Sequence[tuple[int, float]], source: int, kappa: int,
                slot_capacity: float, dest: int | None = None,
                limit: int | None = None) -> MigrationGroup:
    """Longest ascending-bandwidth prefix of ``pending`` that fits in ``kappa`` slots.

    ``limit`` caps the VM count (the destination's remaining headroom).
    """
    if not pending:
        raise ValueError(f"DC {source} has no pending VMs")
    taken = []
    total = 0.0
    for vm in pending:
        if limit is not None and len(taken) >= limit:
            break
        if slots_needed(total + vm[1], slot_capacity) > kappa:
            break
        taken.append(vm)
        total += vm[1]
    if not taken:
        raise GroupTooWide(
            f"VM {pending[0][0]} of DC {source} needs "
            f"{slots_needed(pending[0][1], slot_capacity)} slots, kappa={kappa}")
    return MigrationGroup(tuple(taken), source, dest, slots_needed(total, slot_capacity))


@dataclass
class MigrationState:
    """Everything one heuristic run reads and mutates."""

    graph: Graph
    slots: SlotMap
    dcs: list[Datacenter]
    energy: EnergyParams
    slot_capacity: float
    target: WorkloadTarget
    hosted: dict[int, int] = field(init=False)
    pending: dict[int, list[tuple[int, float]]] = field(init=False)
    terminated: str = field(init=False, default="")

    def __post_init__(self):
        self.hosted = {dc.node: dc.hosted for dc in self.dcs}
        demand = demand_from_gap(self.dcs, self.target)
        self.pending = {m: list(vms) for m, vms in demand.pending.items()}
        self._goal = {dc.node: t for dc, t in zip(self.dcs, self.target)}
        self._by_node = {dc.node: dc for dc in self.dcs}

    @classmethod
    def prepare(cls, graph: Graph, slots: SlotMap, dcs: Sequence[Datacenter],
                energy: EnergyParams, slot_capacity: float) -> "MigrationState":
        dcs = list(dcs)
        return cls(graph, slots, dcs, energy, slot_capacity, optimal_distribution(dcs, energy))

    def sources(self) -> list[int]:
        return sorted(m for m, vms in self.pending.items() if vms)

    def dests(self) -> list[int]:
        return sorted(m for m, goal in self._goal.items() if self.hosted[m] < goal)

    def headroom(self, node: int) -> int:
        return self._goal[node] - self.hosted[node]

    def spare_renewable(self, node: int) -> float:
        return available_renewable(self._by_node[node], self.hosted[node], self.energy)

    def counts(self) -> tuple[int, ...]:
        return tuple(self.hosted[dc.node] for dc in self.dcs)

    def cost(self) -> float:
        return cost_of_counts(self.dcs, self.counts(), self.energy)

    def demand(self) -> MigrationDemand:
        return MigrationDemand({m: tuple(v) for m, v in self.pending.items()})

    def move(self, group: MigrationGroup) -> None:
        moved = self.pending[group.source][: len(group.vms)]
        assert moved == list(group.vms)
        del self.pending[group.source][: len(group.vms)]
        self.hosted[group.source] -= len(group.vms)
        self.hosted[group.dest] += len(group.vms)


def _pick_spr(state: MigrationState, cfg: HeuristicConfig) -> tuple[int, int, Path]:
    src = min(state.sources(), key=lambda m: (-len(state.pending[m]), m))
    dst = min(state.dests(), key=lambda m: (-state.spare_renewable(m), m))
    return src, dst, routes(state.graph, src, dst, 1)[0]


def _pick_lpr(state: MigrationState, cfg: HeuristicConfig) -> tuple[int, int, Path]:
    best = None
    for src in state.sources():
        for dst in state.dests():
            for p in routes(state.graph, src, dst, cfg.k_paths):
                key = (state.slots.path_union(p).bit_count(), p.hops, src, dst, p.nodes)
                if best is None or key < best[0]:
                    best = (key, src, dst, p)
    return best[1], best[2], best[3]


def run_heuristic(state: MigrationState, cfg: HeuristicConfig) -> list[MigrationRecord]:
    """Run SPR or LPR on ``state`` in place and return one record per attempted group."""
    pick = _pick_spr if cfg.kind == SPR else _pick_lpr
    records: list[MigrationRecord] = []
    rnd = 0
    while True:
        if not state.sources() or not state.dests():
            state.terminated = "complete"
            break
        src, dst, path = pick(state, cfg)
        try:
            group = build_group(state.pending[src], src, cfg.kappa, state.slot_capacity,
                                dest=dst, limit=state.headroom(dst))
        except GroupTooWide as exc:
            log.info("stopping: %s", exc)
            state.terminated = "too-wide"
            break
        before = path_congestion(state.slots, path)
        if not admissible(state.slots, path, group.width, cfg.max_congestion):
            records.append(MigrationRecord(rnd, group, path, None, False, before))
            state.terminated = "blocked"
            break
        start = first_fit(state.slots, path, group.width)
        allocate(state.slots, SpectrumAllocation(path, start, group.width, ("mig", rnd)))
        state.move(group)
        records.append(MigrationRecord(rnd, group, path, start, True, before))
        rnd += 1
    return records


def run_spr(state: MigrationState, cfg: HeuristicConfig) -> list[MigrationRecord]:
    if cfg.kind != SPR:
        cfg = HeuristicConfig(SPR, cfg.kappa, cfg.k_paths, cfg.max_congestion)
    return run_heuristic(state, cfg)


def run_lpr(state: MigrationState, cfg: HeuristicConfig) -> list[MigrationRecord]:
    if cfg.kind != LPR:
        cfg = HeuristicConfig(LPR, cfg.kappa, cfg.k_paths, cfg.max_congestion)
    return run_heuristic(state, cfg)


LOG_HEADER = ["round", "source", "dest", "path", "start_slot", "width", "accepted",
              "congestion_before"]


def records_to_csv(records: Sequence[MigrationRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LOG_HEADER)
    for r in records:
        writer.writerow([r.round, r.group.source, r.group.dest, "-".join(map(str, r.path.nodes)),
                         "" if r.start is None else r.start, r.group.width, int(r.accepted),
                         f"{r.congestion_before:.6f}"])
    return buf.getvalue()
