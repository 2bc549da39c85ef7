import csv
import json

import numpy as np
import pytest

from reaim.harness import ConfigError, ScenarioConfig, aggregate, emit, load_config, run_scenario, sweep
from reaim.harness.config import config_from_mapping
from reaim.harness.experiment import (RunResult, background_seed, draw_datacenters,
                                      needs_resample, sample_instance)

SMALL = dict(replications=2, erlangs=(40, 200), kappas=(2, 8))


def row(rep, cost_after=50.0, **kw):
    base = dict(replication=rep, seed=rep + 1, erlangs=40.0, kappa=2, algorithm="spr",
                cost_no_migration=100.0, cost_optimal=40.0, cost_after=cost_after, accepted=3,
                rejected=1, migrated_vms=9, demand_vms=20, background_requests=40, drops=0,
                termination="blocked", wall_time=0.01)
    base.update(kw)
    return RunResult(**base)


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_defaults():
    cfg = ScenarioConfig()
    assert cfg.dc_nodes == (3, 5, 8, 10, 12)
    assert cfg.prices == (2.1, 2.5, 1.9, 2.8, 2.0)
    assert (cfg.servers, cfg.vms_per_server, cfg.link_slots, cfg.slot_capacity) == (1000, 10, 300, 12.5)
    assert cfg.kappas == (2, 4, 8, 16)
    assert cfg.erlangs == tuple(range(40, 321, 40))
    assert cfg.replications == 150 and cfg.k_paths == 3
    assert cfg.graph().n_nodes == 14


@pytest.mark.parametrize("bad", [dict(dc_nodes=(3, 3)), dict(prices=(1.0,)),
                                 dict(hosted_range=(0, 20000)), dict(kappas=(0,)),
                                 dict(max_congestion=1.5), dict(algorithms=("ospf",)),
                                 dict(background_policy="best-fit"), dict(erlangs=(-1,)),
                                 dict(prices=None), dict(vm_bandwidth_range=(0, 14))])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        ScenarioConfig(**bad)


def test_dc_node_outside_topology():
    with pytest.raises(ConfigError):
        ScenarioConfig(dc_nodes=(3, 5, 8, 10, 99)).graph()


def test_load_config(tmp_path):
    y = tmp_path / "c.yaml"
    y.write_text("replications: 3\nkappas: [2, 4]\nerlangs: [40]\n")
    cfg = load_config(y)
    assert cfg.replications == 3 and cfg.kappas == (2, 4) and cfg.erlangs == (40,)
    j = tmp_path / "c.json"
    j.write_text(json.dumps(cfg.to_dict()))
    assert load_config(j) == cfg
    (tmp_path / "e.yaml").write_text("")
    assert load_config(tmp_path / "e.yaml") == ScenarioConfig()
    (tmp_path / "l.yaml").write_text("- 1\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "l.yaml")
    with pytest.raises(ConfigError):
        config_from_mapping({"bogus": 1})


def test_seed_splitting():
    assert background_seed(5, 40) == background_seed(5, 40.0)
    assert background_seed(5, 40) != background_seed(5, 80)
    assert background_seed(5, 40) != background_seed(6, 40)


def test_resample_on_empty_workload():
    cfg = ScenarioConfig(hosted_range=(0, 0), max_resamples=5)
    dcs = draw_datacenters(cfg, np.random.default_rng(0))
    assert all(dc.hosted == 0 for dc in dcs)
    assert needs_resample(dcs, cfg)
    with pytest.raises(ConfigError):
        sample_instance(cfg, 1)


def test_sample_instance_has_both_sides():
    cfg = ScenarioConfig()
    for seed in range(5):
        dcs, attempts = sample_instance(cfg, seed)
        assert attempts >= 1 and not needs_resample(dcs, cfg)
        assert all(len(dc.vm_bandwidths) == dc.hosted for dc in dcs)


def test_run_scenario_deterministic():
    cfg = ScenarioConfig(erlangs=(120,), kappas=(4,))
    a = run_scenario(cfg, 17)
    b = run_scenario(cfg, 17)
    assert a == b and [r.algorithm for r in a] == ["spr", "lpr"]
    for r in a:
        assert r.cost_optimal <= r.cost_after <= r.cost_no_migration
        assert r.accepted >= 0 and r.migrated_vms <= r.demand_vms
    assert a[0].cost_no_migration == a[1].cost_no_migration
    assert a[0].background_requests == a[1].background_requests


def test_sweep_shape_and_order():
    cfg = ScenarioConfig(**SMALL)
    results = sweep(cfg)
    assert len(results) == 2 * 2 * 2 * 2
    assert [r.replication for r in results] == sorted(r.replication for r in results)
    assert sweep(cfg.override(kappas=())) == []


def test_sweep_workers_match_serial():
    cfg = ScenarioConfig(replications=2, erlangs=(80,), kappas=(2,))
    assert sweep(cfg, workers=2) == sweep(cfg)


def test_emit_rows(tmp_path):
    results = [row(0), row(1), row(2)]
    files = emit(results, tmp_path)
    names = {f.name for f in files}
    assert {"results.csv", "aggregate.csv", "timing.csv", "plot_cost_vs_load.csv",
            "plot_runtime_vs_load.csv", "plot_cost_comparison.csv"} <= names
    rows = read_csv(tmp_path / "results.csv")
    assert len(rows) == 4 and rows[0][0] == "replication"
    agg = read_csv(tmp_path / "aggregate.csv")
    assert len(agg) == 2
    assert float(agg[1][agg[0].index("stderr_cost_after")]) == 0.0
    assert float(agg[1][agg[0].index("saving")]) == 0.5


def test_emit_empty(tmp_path):
    emit([], tmp_path)
    assert len(read_csv(tmp_path / "results.csv")) == 1
    assert len(read_csv(tmp_path / "aggregate.csv")) == 1


def test_emit_json(tmp_path):
    (path,) = emit([row(0)], tmp_path, "json")
    data = json.loads(path.read_text())
    assert len(data["runs"]) == 1 and data["aggregate"][0]["n"] == 1


def test_emit_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit([row(0)], tmp_path, "xlsx")


def test_aggregate_stderr():
    summary = aggregate([row(0, 40.0), row(1, 60.0)])
    assert len(summary) == 1
    assert summary[0].mean_cost_after == 50.0
    assert summary[0].stderr_cost_after == pytest.approx(10.0)
