"""Exact solver and independent plan validator for tiny migration instances.

The solver ignores the heuristics' round structure entirely. It enumerates
every VM-to-DC assignment in order of brown-energy cost and, for each one,
searches over every way of splitting the moved VMs into groups of at most
``kappa`` slots, every simple path and every start slot. The first assignment
that admits a conflict-free spectrum plan is optimal.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .energy import Datacenter, EnergyParams, classify, cost_of_counts, optimal_distribution
from .manycast import HeuristicConfig, MigrationRecord, MigrationState, run_heuristic
from .spectrum import SlotMap, slots_needed
from .topology import Graph, Path, all_simple_paths

MAX_NODES = 6
MAX_SLOTS = 12
MAX_DCS = 3
MAX_VMS = 8
STATE_CAP = 10_000_000


class CapExceeded(RuntimeError):
    """Instance too large for exhaustive search."""


@dataclass
class TinyInstance:
    graph: Graph
    dcs: list[Datacenter]
    energy: EnergyParams
    link_slots: int
    slot_capacity: float = 12.5
    kappa: int = 2
    max_congestion: float = 1.0
    background: SlotMap | None = None
    k_paths: int = 3

    def __post_init__(self):
        if self.background is None:
            self.background = SlotMap(len(self.graph.links), self.link_slots)
        if self.background.capacity != self.link_slots:
            raise ValueError("background capacity must equal link_slots")
        for dc in self.dcs:
            if dc.vm_bandwidths is None:
                raise ValueError(f"DC {dc.node} needs VM bandwidths")

    def check_caps(self) -> None:
        n_vms = sum(dc.hosted for dc in self.dcs)
        if (self.graph.n_nodes > MAX_NODES or self.link_slots > MAX_SLOTS
                or len(self.dcs) > MAX_DCS or n_vms > MAX_VMS):
            raise CapExceeded(
                f"instance exceeds caps: nodes<={MAX_NODES}, slots<={MAX_SLOTS}, "
                f"DCs<={MAX_DCS}, VMs<={MAX_VMS}")
        if len(self.dcs) ** n_vms > STATE_CAP:
            raise CapExceeded("assignment space exceeds the state cap")

    def current_cost(self) -> float:
        return cost_of_counts(self.dcs, [dc.hosted for dc in self.dcs], self.energy)


@dataclass(frozen=True)
class PlannedMigration:
    """VMs ``vms`` (indices into the source DC's VM list) moved over ``path``."""

    source: int
    dest: int
    vms: tuple[int, ...]
    path: Path
    start: int
    width: int


@dataclass(frozen=True)
class Plan:
    migrations: tuple[PlannedMigration, ...] = ()
    final_counts: tuple[int, ...] | None = None


@dataclass(frozen=True)
class ExactSolution:
    cost: float
    counts: tuple[int, ...]
    plan: Plan
    assignments_checked: int = 0


def apply_plan(inst: TinyInstance, plan: Plan) -> tuple[int, ...]:
    hosted = {dc.node: dc.hosted for dc in inst.dcs}
    for mig in plan.migrations:
        hosted[mig.source] -= len(mig.vms)
        hosted[mig.dest] = hosted.get(mig.dest, 0) + len(mig.vms)
    return tuple(hosted[dc.node] for dc in inst.dcs)


def plan_cost(inst: TinyInstance, plan: Plan) -> float:
    counts = plan.final_counts if plan.final_counts is not None else apply_plan(inst, plan)
    return cost_of_counts(inst.dcs, counts, inst.energy)


def check_feasible(inst: TinyInstance, plan: Plan) -> tuple[bool, list[str]]:
    """Validate ``plan`` against every service and network constraint.

    Migrations are replayed in order on a copy of the background so the
    congestion cap is judged against the occupancy each migration actually saw.
    Returns ``(ok, violations)``; each violation names the constraint it breaks.
    """
    problems: list[str] = []
    by_node = {dc.node: dc for dc in inst.dcs}
    moved: set[tuple[int, int]] = set()
    occ = list(inst.background.occupancy)
    c_e = inst.link_slots

    for n, mig in enumerate(plan.migrations):
        tag = f"migration {n} ({mig.source}->{mig.dest})"
        src, dst = by_node.get(mig.source), by_node.get(mig.dest)
        if src is None or dst is None or mig.source == mig.dest:
            problems.append(f"conservation: {tag} must join two distinct DCs")
            continue
        if not mig.vms:
            problems.append(f"conservation: {tag} carries no VM")
            continue
        bandwidth = 0.0
        for k in mig.vms:
            if not 0 <= k < src.hosted:
                problems.append(f"conservation: {tag} moves unknown VM {k}")
                continue
            if (mig.source, k) in moved:
                problems.append(f"conservation: {tag} moves VM {k} a second time")
            moved.add((mig.source, k))
            bandwidth += src.vm_bandwidths[k]
        if mig.width > inst.kappa:
            problems.append(f"granularity: {tag} uses {mig.width} slots > kappa={inst.kappa}")
        if mig.width < slots_needed(bandwidth, inst.slot_capacity):
            problems.append(f"slot packing: {tag} carries {bandwidth:.3f} Gb/s in {mig.width} slots")
        if mig.start < 0 or mig.start + mig.width > c_e:
            problems.append(f"link capacity: {tag} interval exceeds {c_e} slots")
            continue
        p = mig.path
        if (p.source, p.target) != (mig.source, mig.dest):
            problems.append(f"continuity: {tag} path runs {p.source}->{p.target}")
        if any(not inst.graph.has_link(a, b) for a, b in zip(p.nodes, p.nodes[1:])):
            problems.append(f"continuity: {tag} path leaves the graph")
            continue
        union = 0
        for link in p.links:
            union |= occ[link.id]
        if union.bit_count() + mig.width > inst.max_congestion * c_e + 1e-9:
            problems.append(f"congestion: {tag} exceeds the congestion cap "
                            f"({union.bit_count()}+{mig.width} of {c_e} slots)")
        mask = ((1 << mig.width) - 1) << mig.start
        if union & mask:
            problems.append(f"non-overlap: {tag} slots [{mig.start}, {mig.start + mig.width}) "
                            f"already in use on its path")
        for link in p.links:
            occ[link.id] |= mask

    counts = apply_plan(inst, plan)
    if plan.final_counts is not None:
        if sum(plan.final_counts) != sum(dc.hosted for dc in inst.dcs):
            problems.append("conservation: final VM total differs from the initial total")
        elif tuple(plan.final_counts) != counts:
            problems.append("conservation: final counts disagree with the migrations")
        counts = tuple(plan.final_counts)
    for dc, n in zip(inst.dcs, counts):
        if not 0 <= n <= dc.capacity:
            problems.append(f"DC capacity: DC {dc.node} ends with {n} VMs, capacity {dc.capacity}")
    return not problems, problems


def _partitions(items: list[tuple[int, float]], kappa: int, slot_capacity: float):
    """Set partitions of ``items`` whose blocks each fit in ``kappa`` slots."""
    blocks: list[list[tuple[int, float]]] = []
    totals: list[float] = []

    def rec(i):
        if i == len(items):
            yield [list(b) for b in blocks]
            return
        item = items[i]
        for b in range(len(blocks)):
            if slots_needed(totals[b] + item[1], slot_capacity) <= kappa:
                blocks[b].append(item)
                totals[b] += item[1]
                yield from rec(i + 1)
                totals[b] -= item[1]
                blocks[b].pop()
        if slots_needed(item[1], slot_capacity) <= kappa:
            blocks.append([item])
            totals.append(item[1])
            yield from rec(i + 1)
            totals.pop()
            blocks.pop()

    yield from rec(0)


@dataclass
class _Search:
    inst: TinyInstance
    paths: dict[tuple[int, int], list[Path]] = field(default_factory=dict)
    group_cache: dict = field(default_factory=dict)
    place_cache: dict = field(default_factory=dict)
    states: int = 0

    def routes(self, s: int, d: int) -> list[Path]:
        if (s, d) not in self.paths:
            self.paths[(s, d)] = all_simple_paths(self.inst.graph, s, d)
        return self.paths[(s, d)]

    def groupings(self, items: tuple[tuple[int, float], ...]):
        """Width multiset -> one representative partition, for one DC pair."""
        if items not in self.group_cache:
            out = {}
            for part in _partitions(list(items), self.inst.kappa, self.inst.slot_capacity):
                widths = tuple(sorted(slots_needed(sum(bw for _, bw in b), self.inst.slot_capacity)
                                      for b in part))
                out.setdefault(widths, part)
            self.group_cache[items] = out
        return self.group_cache[items]

    def place(self, reqs: tuple[tuple[int, int, int], ...]):
        """Spectrum placement for groups ``(src, dst, width)``, or None if impossible."""
        if reqs not in self.place_cache:
            self.place_cache[reqs] = self._dfs(reqs, 0, tuple(self.inst.background.occupancy), set())
        return self.place_cache[reqs]

    def _dfs(self, reqs, placed, occ, failed):
        if placed == (1 << len(reqs)) - 1:
            return []
        key = (placed, occ)
        if key in failed:
            return None
        self.states += 1
        if self.states > STATE_CAP:
            raise CapExceeded("spectrum search exceeded the state cap")
        c_e = self.inst.link_slots
        limit = self.inst.max_congestion * c_e + 1e-9
        order_free = self.inst.max_congestion >= 1.0
        tried = set()
        for i, req in enumerate(reqs):
            if placed >> i & 1 or req in tried:
                continue
            tried.add(req)
            src, dst, width = req
            for p in self.routes(src, dst):
                union = 0
                for link in p.links:
                    union |= occ[link.id]
                if union.bit_count() + width > limit:
                    continue
                free = ((1 << c_e) - 1) & ~union
                mask = (1 << width) - 1
                for start in range(c_e - width + 1):
                    if (free >> start) & mask != mask:
                        continue
                    nxt = list(occ)
                    for link in p.links:
                        nxt[link.id] |= mask << start
                    rest = self._dfs(reqs, placed | 1 << i, tuple(nxt), failed)
                    if rest is not None:
                        return [(i, p, start)] + rest
            if order_free:
                # with no congestion cap below 1 the check reduces to slot
                # availability, so placement order cannot matter
                break
        failed.add(key)
        return None


def solve_exact(inst: TinyInstance) -> ExactSolution:
    """Minimum brown-energy cost over all network-feasible final VM placements."""
    inst.check_caps()
    dcs = inst.dcs
    vms = [(i, k, bw) for i, dc in enumerate(dcs) for k, bw in enumerate(dc.vm_bandwidths)]
    caps = [dc.capacity for dc in dcs]
    candidates = []
    for assign in itertools.product(range(len(dcs)), repeat=len(vms)):
        counts = [0] * len(dcs)
        for a in assign:
            counts[a] += 1
        if any(c > cap for c, cap in zip(counts, caps)):
            continue
        moved = sum(1 for (home, _, _), a in zip(vms, assign) if a != home)
        cost = round(cost_of_counts(dcs, counts, inst.energy), 9)
        candidates.append((cost, moved, assign))
    candidates.sort()

    search = _Search(inst)
    for checked, (cost, _, assign) in enumerate(candidates, 1):
        plan = _feasible_plan(search, vms, assign)
        if plan is not None:
            counts = apply_plan(inst, plan)
            return ExactSolution(cost_of_counts(dcs, counts, inst.energy), counts, plan, checked)
    raise AssertionError("the no-migration assignment is always feasible")


def _feasible_plan(search: _Search, vms, assign) -> Plan | None:
    dcs = search.inst.dcs
    pairs: dict[tuple[int, int], list[tuple[int, float]]] = {}
    for (home, k, bw), a in zip(vms, assign):
        if a != home:
            pairs.setdefault((dcs[home].node, dcs[a].node), []).append((k, bw))
    if not pairs:
        return Plan()
    keys = sorted(pairs)
    options = [list(search.groupings(tuple(pairs[k])).items()) for k in keys]
    for combo in itertools.product(*options):
        reqs = []
        groups = []
        for (src, dst), (widths, part) in zip(keys, combo):
            for block in part:
                w = slots_needed(sum(bw for _, bw in block), search.inst.slot_capacity)
                reqs.append((src, dst, w))
                groups.append(block)
        order = sorted(range(len(reqs)), key=lambda i: reqs[i])
        reqs = tuple(reqs[i] for i in order)
        groups = [groups[i] for i in order]
        placement = search.place(reqs)
        if placement is None:
            continue
        migs = []
        for i, p, start in placement:
            src, dst, w = reqs[i]
            migs.append(PlannedMigration(src, dst, tuple(k for k, _ in groups[i]), p, start, w))
        return Plan(tuple(migs))
    return None


def plan_from_records(inst: TinyInstance, records: Sequence[MigrationRecord]) -> Plan:
    """Translate a heuristic run into a plan (VM ids are per-source indices)."""
    migs = tuple(PlannedMigration(r.group.source, r.group.dest, tuple(k for k, _ in r.group.vms),
                                  r.path, r.start, r.group.width)
                 for r in records if r.accepted)
    return Plan(migs)


def run_heuristic_on(inst: TinyInstance, kind: str) -> tuple[Plan, float, list[MigrationRecord]]:
    state = MigrationState.prepare(inst.graph, inst.background.copy(), inst.dcs, inst.energy,
                                   inst.slot_capacity)
    cfg = HeuristicConfig(kind, inst.kappa, inst.k_paths, inst.max_congestion)
    records = run_heuristic(state, cfg)
    plan = Plan(plan_from_records(inst, records).migrations, state.counts())
    return plan, state.cost(), records


def random_tiny_instance(rng: np.random.Generator, *, single_pair: bool = False) -> TinyInstance:
    """Random instance within the exhaustive-search caps.

    With ``single_pair`` the instance has exactly one overloaded and one
    underloaded DC, an empty background and enough slots for every VM to move
    on its own, so no migration can ever be blocked.
    """
    while True:
        n_nodes = int(rng.integers(3, MAX_NODES + 1))
        nodes = list(range(1, n_nodes + 1))
        order = list(rng.permutation(nodes))
        edges = {tuple(sorted((int(order[i]), int(order[int(rng.integers(i))]))))
                 for i in range(1, n_nodes)}
        for _ in range(int(rng.integers(0, n_nodes))):
            u, v = rng.choice(nodes, 2, replace=False)
            edges.add(tuple(sorted((int(u), int(v)))))
        graph = Graph.from_edges(sorted(edges), n_nodes)

        n_dcs = 2 if single_pair else int(rng.integers(2, min(MAX_DCS, n_nodes) + 1))
        dc_nodes = sorted(int(n) for n in rng.choice(nodes, n_dcs, replace=False))
        vps = int(rng.integers(1, 3))
        ep = EnergyParams(server_power=float(rng.choice([1.0, 2.0, 5.0])), pue=1.2)
        kappa = int(rng.integers(1, 4))
        cap_bw = 12.5 * kappa
        budget = MAX_VMS
        dcs = []
        for node in dc_nodes:
            servers = int(rng.integers(1, 4))
            hosted = int(rng.integers(0, min(servers * vps, budget) + 1))
            budget -= hosted
            if single_pair:
                bws = rng.uniform(1.0, min(cap_bw, 12.5), hosted)
            else:
                bws = rng.uniform(1.0, 14.0, hosted)
            dcs.append(Datacenter(node, servers, vps, hosted,
                                  float(rng.uniform(0, 3) * ep.per_server),
                                  float(rng.uniform(1.0, 3.0)), tuple(float(b) for b in bws)))
        n_vms = sum(dc.hosted for dc in dcs)
        if single_pair:
            link_slots = int(max(kappa * n_vms, 1))
            if link_slots > MAX_SLOTS:
                continue
            background = None
            w_b = 1.0
        else:
            link_slots = int(rng.integers(4, MAX_SLOTS + 1))
            background = SlotMap(len(graph.links), link_slots)
            for link in graph.links:
                for s in range(link_slots):
                    if rng.random() < 0.3:
                        background.occupancy[link.id] |= 1 << s
            w_b = float(rng.choice([1.0, 1.0, 0.75]))
        inst = TinyInstance(graph, dcs, ep, link_slots, 12.5, kappa, w_b, background)
        if single_pair:
            src, dst = classify(dcs, optimal_distribution(dcs, ep))
            if len(src) != 1 or len(dst) != 1:
                continue
        return inst
