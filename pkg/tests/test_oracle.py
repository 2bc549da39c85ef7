import numpy as np
import pytest

from reaim.energy import Datacenter, EnergyParams, cost_of_counts, optimal_distribution
from reaim.manycast import LPR, SPR
from reaim.oracle import (CapExceeded, Plan, PlannedMigration, TinyInstance, check_feasible,
                          random_tiny_instance, run_heuristic_on, solve_exact)
from reaim.spectrum import SlotMap
from reaim.topology import Graph

UNIT = EnergyParams(1.0, 1.0)


def two_dc_instance(link_slots=6, background=None):
    g = Graph.from_edges([(1, 2), (2, 3)])
    dcs = [Datacenter(1, 2, 1, 1, 2.0, 2.0, (3.0,)),
           Datacenter(3, 2, 1, 2, 0.0, 3.0, (4.0, 6.0))]
    return TinyInstance(g, dcs, UNIT, link_slots, background=background)


def test_no_migration_needed():
    g = Graph.from_edges([(1, 2)])
    dcs = [Datacenter(1, 2, 1, 1, 5.0, 1.0, (3.0,)), Datacenter(2, 2, 1, 1, 5.0, 1.0, (3.0,))]
    inst = TinyInstance(g, dcs, UNIT, 4)
    sol = solve_exact(inst)
    assert sol.cost == inst.current_cost() == 0
    assert sol.plan.migrations == ()


def test_ample_spectrum_reaches_relaxed_optimum():
    inst = two_dc_instance()
    sol = solve_exact(inst)
    relaxed = cost_of_counts(inst.dcs, optimal_distribution(inst.dcs, UNIT), UNIT)
    assert relaxed == 3
    assert sol.cost == pytest.approx(relaxed)
    assert sol.counts == (2, 1)
    ok, problems = check_feasible(inst, sol.plan)
    assert ok, problems
    assert len(sol.plan.migrations) == 1 and sol.plan.migrations[0].path.nodes == (3, 2, 1)


def test_saturated_spectrum_falls_back():
    bg = SlotMap(2, 4)
    bg.occupancy = [0b1111, 0b1111]
    inst = two_dc_instance(4, bg)
    sol = solve_exact(inst)
    assert sol.cost == pytest.approx(inst.current_cost()) == 6
    assert sol.plan.migrations == ()


def test_congestion_cap_respected():
    bg = SlotMap(2, 4)
    bg.occupancy = [0b0011, 0]
    inst = two_dc_instance(4, bg)
    inst.max_congestion = 0.5
    assert solve_exact(inst).cost == 6
    inst.max_congestion = 0.75
    assert solve_exact(inst).cost == 3


def test_check_feasible_flags_overlap_and_conservation():
    inst = two_dc_instance()
    p = inst.graph.path((3, 2, 1))
    good = Plan((PlannedMigration(3, 1, (0,), p, 0, 1),))
    assert check_feasible(inst, good) == (True, [])
    overlap = Plan((PlannedMigration(3, 1, (0,), p, 0, 1), PlannedMigration(3, 1, (1,), p, 0, 1)))
    ok, problems = check_feasible(inst, overlap)
    assert not ok and any(s.startswith("non-overlap") for s in problems)
    leaky = Plan(good.migrations, final_counts=(2, 2))
    ok, problems = check_feasible(inst, leaky)
    assert not ok and any(s.startswith("conservation") for s in problems)
    twice = Plan((PlannedMigration(3, 1, (0,), p, 0, 1), PlannedMigration(3, 1, (0,), p, 1, 1)))
    assert not check_feasible(inst, twice)[0]


def test_check_feasible_flags_width_and_path():
    inst = two_dc_instance()
    p = inst.graph.path((3, 2, 1))
    narrow = Plan((PlannedMigration(3, 1, (0, 1), p, 0, 0),))
    assert any(s.startswith("slot packing") for s in check_feasible(inst, narrow)[1])
    wide = Plan((PlannedMigration(3, 1, (0,), p, 0, 3),))
    assert any(s.startswith("granularity") for s in check_feasible(inst, wide)[1])
    wrong = Plan((PlannedMigration(3, 1, (0,), inst.graph.path((2, 1)), 0, 1),))
    assert any(s.startswith("continuity") for s in check_feasible(inst, wrong)[1])
    off = Plan((PlannedMigration(3, 1, (0,), p, 5, 2),))
    assert any(s.startswith("link capacity") for s in check_feasible(inst, off)[1])


def test_caps():
    g = Graph.from_edges([(i, i + 1) for i in range(1, 8)])
    dcs = [Datacenter(1, 2, 1, 1, 0.0, 1.0, (1.0,)), Datacenter(8, 2, 1, 0, 0.0, 1.0, ())]
    with pytest.raises(CapExceeded):
        solve_exact(TinyInstance(g, dcs, UNIT, 4))
    with pytest.raises(CapExceeded):
        solve_exact(two_dc_instance(link_slots=13))


def test_heuristics_bounded_by_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(40):
        inst = random_tiny_instance(rng)
        exact = solve_exact(inst)
        for kind in (SPR, LPR):
            plan, cost, _ = run_heuristic_on(inst, kind)
            assert check_feasible(inst, plan)[0]
            assert cost >= exact.cost - 1e-9


def test_single_pair_instances_shape():
    rng = np.random.default_rng(7)
    for _ in range(20):
        inst = random_tiny_instance(rng, single_pair=True)
        assert len(inst.dcs) == 2 and inst.max_congestion == 1.0
        assert not any(inst.background.occupancy)
        inst.check_caps()
