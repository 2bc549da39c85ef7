"""Background traffic snapshots and migration demand derived from the workload gap."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .energy import Datacenter, WorkloadTarget, classify
from .spectrum import SlotMap, SpectrumAllocation, allocate, feasible_starts, first_fit, slots_needed
from .topology import Graph, routes

FIRST_FIT = "first-fit"
RANDOM_FIT = "random-fit"


@dataclass(frozen=True)
class LoadSpec:
    """Offered background load in Erlangs (mean number of requests in flight)."""

    erlangs: float
    seed: int = 0
    bandwidth_range: tuple[float, float] = (1.0, 14.0)
    slot_capacity: float = 12.5
    mean_holding: float = 1.0
    slot_policy: str = RANDOM_FIT

    def __post_init__(self):
        if self.erlangs < 0:
            raise ValueError("erlangs must be >= 0")
        if self.slot_policy not in (FIRST_FIT, RANDOM_FIT):
            raise ValueError(f"unknown slot policy {self.slot_policy!r}")
        lo, hi = self.bandwidth_range
        if not 0 < lo <= hi:
            raise ValueError("bandwidth range must satisfy 0 < low <= high")


@dataclass(frozen=True)
class BackgroundRequest:
    id: int
    src: int
    dst: int
    bandwidth: float
    arrival: float
    holding: float


@dataclass
class BackgroundReport:
    requests: list[BackgroundRequest] = field(default_factory=list)
    accepted: int = 0
    dropped: int = 0


def draw_background(g: Graph, spec: LoadSpec) -> list[BackgroundRequest]:
    """Requests in flight at an arbitrary inspection instant of an M/M/inf system.

    The in-flight count is Poisson(erlangs). With exponential holding times the
    elapsed age and the residual life of each request are independent
    exponentials, so the arrival sits ``age`` before the snapshot at t=0.
    """
    rng = np.random.default_rng([spec.seed, 0])
    n = int(rng.poisson(spec.erlangs))
    nodes = np.array(g.nodes)
    requests = []
    for i in range(n):
        src = int(rng.choice(nodes))
        dst = int(rng.choice(nodes[nodes != src]))
        bw = float(rng.uniform(*spec.bandwidth_range))
        age = float(rng.exponential(spec.mean_holding))
        residual = float(rng.exponential(spec.mean_holding))
        requests.append(BackgroundRequest(i, src, dst, bw, -age, age + residual))
    return requests


def steady_state_background(g: Graph, sm: SlotMap, spec: LoadSpec) -> tuple[SlotMap, BackgroundReport]:
    """Route a background snapshot onto ``sm``; requests that find no interval are dropped.

    Each request takes its shortest path. Under ``random-fit`` the start slot is
    drawn uniformly from every feasible start, which leaves the spectrum as
    fragmented as a long-running network with departures would; ``first-fit``
    packs everything at the bottom of the band.
    """
    report = BackgroundReport(requests=draw_background(g, spec))
    pick = np.random.default_rng([spec.seed, 1])
    for req in report.requests:
        path = routes(g, req.src, req.dst, 1)[0]
        width = slots_needed(req.bandwidth, spec.slot_capacity)
        if spec.slot_policy == FIRST_FIT:
            start = first_fit(sm, path, width)
        else:
            starts = feasible_starts(sm, path, width)
            start = starts[int(pick.integers(len(starts)))] if starts else None
        if start is None:
            report.dropped += 1
            continue
        allocate(sm, SpectrumAllocation(path, start, width, ("bg", req.id)))
        report.accepted += 1
    return sm, report


@dataclass(frozen=True)
class MigrationDemand:
    """VMs each source DC must shed, as ``(vm index, bandwidth)`` sorted by bandwidth."""

    pending: dict[int, tuple[tuple[int, float], ...]]

    def total_vms(self) -> int:
        return sum(len(v) for v in self.pending.values())

    def is_empty(self) -> bool:
        return self.total_vms() == 0


def demand_from_gap(dcs: Sequence[Datacenter], target: WorkloadTarget) -> MigrationDemand:
    sources, _ = classify(dcs, target)
    pending = {}
    for dc, goal in zip(dcs, target):
        if dc.node not in sources:
            continue
        if dc.vm_bandwidths is None:
            raise ValueError(f"DC {dc.node} has no VM bandwidths to migrate")
        ranked = sorted(enumerate(dc.vm_bandwidths), key=lambda kv: (kv[1], kv[0]))
        pending[dc.node] = tuple(ranked[: dc.hosted - goal])
    return MigrationDemand(pending)
