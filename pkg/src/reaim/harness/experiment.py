"""Replication driver: draw an instance, lay background traffic, run the heuristics."""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..energy import Datacenter, classify, optimal_distribution, total_cost, cost_of_counts
from ..manycast import HeuristicConfig, MigrationRecord, MigrationState, run_heuristic
from ..spectrum import SlotMap
from ..topology import Graph
from ..traffic import BackgroundReport, LoadSpec, steady_state_background
from .config import ConfigError, ScenarioConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunResult:
    replication: int
    seed: int
    erlangs: float
    kappa: int
    algorithm: str
    cost_no_migration: float
    cost_optimal: float
    cost_after: float
    accepted: int
    rejected: int
    migrated_vms: int
    demand_vms: int
    background_requests: int
    drops: int
    termination: str
    wall_time: float = field(default=0.0, compare=False)
    records: tuple[MigrationRecord, ...] = field(default=(), compare=False, repr=False)

    @property
    def saving(self) -> float:
        if self.cost_no_migration == 0:
            return 0.0
        return 1.0 - self.cost_after / self.cost_no_migration


def replication_seed(cfg: ScenarioConfig, replication: int) -> int:
    return cfg.base_seed + replication


def background_seed(seed: int, erlangs: float) -> int:
    """Background stream for one (replication, load) cell, shared by every kappa."""
    ss = np.random.SeedSequence([seed, int(round(erlangs * 1000))])
    return int(ss.generate_state(1)[0])


def draw_datacenters(cfg: ScenarioConfig, rng: np.random.Generator) -> list[Datacenter]:
    dcs = []
    lo, hi = cfg.vm_bandwidth_range
    for i, node in enumerate(cfg.dc_nodes):
        hosted = int(rng.integers(cfg.hosted_range[0], cfg.hosted_range[1] + 1))
        renewable = float(rng.uniform(*cfg.renewable_range))
        if cfg.prices is not None:
            price = float(cfg.prices[i])
        else:
            price = float(rng.uniform(*cfg.price_range))
        bws = tuple(rng.uniform(lo, hi, hosted).tolist())
        dcs.append(Datacenter(node, cfg.servers, cfg.vms_per_server, hosted, renewable, price, bws))
    return dcs


def needs_resample(dcs: Sequence[Datacenter], cfg: ScenarioConfig) -> bool:
    sources, dests = classify(dcs, optimal_distribution(dcs, cfg.energy))
    return not sources or not dests


def sample_instance(cfg: ScenarioConfig, seed: int) -> tuple[list[Datacenter], int]:
    """Draw DCs, redrawing while no migration is wanted; returns (dcs, draws used)."""
    rng = np.random.default_rng([seed])
    for attempt in range(1, cfg.max_resamples + 1):
        dcs = draw_datacenters(cfg, rng)
        if not needs_resample(dcs, cfg):
            return dcs, attempt
    raise ConfigError(f"no instance with both sources and destinations after "
                      f"{cfg.max_resamples} draws (seed {seed})")


def lay_background(cfg: ScenarioConfig, graph: Graph, seed: int,
                   erlangs: float) -> tuple[SlotMap, BackgroundReport]:
    spec = LoadSpec(erlangs, background_seed(seed, erlangs), cfg.vm_bandwidth_range,
                    cfg.slot_capacity, slot_policy=cfg.background_policy)
    return steady_state_background(graph, SlotMap.for_graph(graph, cfg.link_slots), spec)


def _run_cell(cfg, graph, dcs, target, slots, report, replication, seed, erlangs, kappa,
              keep_records) -> list[RunResult]:
    base = total_cost(dcs, cfg.energy)
    optimal = cost_of_counts(dcs, target, cfg.energy)
    out = []
    for alg in cfg.algorithms:
        # every algorithm starts from an identical copy of the backdrop
        state = MigrationState(graph, slots.copy(), list(dcs), cfg.energy, cfg.slot_capacity, target)
        hcfg = HeuristicConfig(alg, kappa, cfg.k_paths, cfg.max_congestion)
        t0 = time.perf_counter()
        records = run_heuristic(state, hcfg)
        elapsed = time.perf_counter() - t0
        accepted = [r for r in records if r.accepted]
        out.append(RunResult(
            replication=replication, seed=seed, erlangs=erlangs, kappa=kappa, algorithm=alg,
            cost_no_migration=base, cost_optimal=optimal, cost_after=state.cost(),
            accepted=len(accepted), rejected=len(records) - len(accepted),
            migrated_vms=sum(len(r.group.vms) for r in accepted),
            demand_vms=sum(dc.hosted - t for dc, t in zip(dcs, target) if dc.hosted > t),
            background_requests=len(report.requests), drops=report.dropped,
            termination=state.terminated, wall_time=elapsed,
            records=tuple(records) if keep_records else ()))
    return out


def run_replication(cfg: ScenarioConfig, replication: int, keep_records: bool = False,
                    graph: Graph | None = None) -> list[RunResult]:
    """All (load, kappa, algorithm) cells of one replication, on one drawn instance."""
    graph = graph or cfg.graph()
    seed = replication_seed(cfg, replication)
    dcs, _ = sample_instance(cfg, seed)
    target = optimal_distribution(dcs, cfg.energy)
    out = []
    for erlangs in cfg.erlangs:
        slots, report = lay_background(cfg, graph, seed, erlangs)
        for kappa in cfg.kappas:
            out.extend(_run_cell(cfg, graph, dcs, target, slots, report, replication, seed,
                                 erlangs, kappa, keep_records))
    return out


def run_scenario(cfg: ScenarioConfig, seed: int, erlangs: float | None = None,
                 kappa: int | None = None, keep_records: bool = False) -> list[RunResult]:
    """One scenario at a single load and granularity; one result per algorithm.

    ``seed`` is used directly as the replication seed. Load and granularity
    default to the first entries of the configured sweep axes.
    """
    erlangs = cfg.erlangs[0] if erlangs is None else erlangs
    kappa = cfg.kappas[0] if kappa is None else kappa
    graph = cfg.graph()
    dcs, _ = sample_instance(cfg, seed)
    target = optimal_distribution(dcs, cfg.energy)
    slots, report = lay_background(cfg, graph, seed, erlangs)
    return _run_cell(cfg, graph, dcs, target, slots, report, seed - cfg.base_seed, seed,
                     erlangs, kappa, keep_records)


def _replication_job(args):
    cfg, rep = args
    return run_replication(cfg, rep)


def sweep(cfg: ScenarioConfig, workers: int = 1, progress: bool = False) -> list[RunResult]:
    """Cross product of replications x loads x kappas x algorithms.

    Rows come back ordered by replication index regardless of ``workers``.
    """
    if not cfg.erlangs or not cfg.kappas or not cfg.algorithms:
        return []
    jobs = [(cfg, rep) for rep in range(cfg.replications)]
    results: list[RunResult] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rep, rows in enumerate(pool.map(_replication_job, jobs, chunksize=4)):
                results.extend(rows)
                if progress:
                    log.info("replication %d/%d done", rep + 1, cfg.replications)
    else:
        graph = cfg.graph()
        for rep in range(cfg.replications):
            results.extend(run_replication(cfg, rep, graph=graph))
            if progress:
                log.info("replication %d/%d done", rep + 1, cfg.replications)
    return results


@dataclass(frozen=True)
class CellSummary:
    algorithm: str
    kappa: int
    erlangs: float
    n: int
    mean_cost_no_migration: float
    mean_cost_after: float
    stderr_cost_after: float
    saving: float
    mean_accepted: float
    mean_migrated_vms: float
    mean_drops: float
    mean_wall_time: float


def aggregate(results: Sequence[RunResult]) -> list[CellSummary]:
    """Mean and standard error per (algorithm, kappa, load) cell."""
    cells: dict[tuple[str, int, float], list[RunResult]] = {}
    for r in results:
        cells.setdefault((r.algorithm, r.kappa, r.erlangs), []).append(r)
    out = []
    for (alg, kappa, erlangs), rows in sorted(cells.items()):
        after = np.array([r.cost_after for r in rows])
        base = np.array([r.cost_no_migration for r in rows])
        stderr = float(after.std(ddof=1) / math.sqrt(len(after))) if len(after) > 1 else 0.0
        out.append(CellSummary(
            alg, kappa, erlangs, len(rows), float(base.mean()), float(after.mean()), stderr,
            float(1.0 - after.sum() / base.sum()) if base.sum() else 0.0,
            float(np.mean([r.accepted for r in rows])),
            float(np.mean([r.migrated_vms for r in rows])),
            float(np.mean([r.drops for r in rows])),
            float(np.mean([r.wall_time for r in rows]))))
    return out
