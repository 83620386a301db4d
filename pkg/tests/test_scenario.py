import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppdn.engine import CapPolicy, FailurePolicy, run_slot
from ppdn.errors import ScenarioError
from ppdn.routing import AllPairs, CostMetric
from ppdn.scenario import (
    PRESETS,
    Gradient,
    InitialVoltages,
    Parameters,
    RunSpec,
    ScenarioConfig,
    load_scenario,
    preset,
    read_scenario,
    resolve,
    save_scenario,
    validate_scenario,
)


def _write(tmp_path, obj, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def test_minimal_preset_file(tmp_path):
    cfg = load_scenario(_write(tmp_path, {"topology": "case1"}))
    assert cfg.to_dict() == preset("case1").to_dict()
    assert cfg.parameters == Parameters()


def test_preset_file_with_overrides(tmp_path):
    cfg = load_scenario(_write(tmp_path, {"topology": "case2", "parameters": {"metric": "loss_over_receive"},
                                          "run": {"slots": 4}}))
    assert cfg.parameters.metric is CostMetric.LOSS_OVER_RECEIVE
    assert cfg.parameters.capacitance == Parameters().capacitance
    assert cfg.run.slots == 4 and cfg.demands == preset("case2").demands


def test_negative_capacitance_is_an_error(tmp_path):
    path = _write(tmp_path, {"topology": "case1", "parameters": {"capacitance": -1}})
    issues = validate_scenario(read_scenario(path))
    assert [i.where for i in issues if i.level == "error"] == ["parameters.capacitance"]
    with pytest.raises(ScenarioError):
        load_scenario(path)


@pytest.mark.parametrize("doc", [
    {"topology": "case1", "bogus": 1},
    {"name": "x"},
    {"topology": "case9"},
    {"topology": "case1", "parameters": {"colour": "red"}},
    {"topology": "case1", "parameters": {"metric": "joules"}},
])
def test_malformed_files(tmp_path, doc):
    with pytest.raises(ScenarioError):
        load_scenario(_write(tmp_path, doc))


def test_not_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    with pytest.raises(ScenarioError):
        read_scenario(p)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_scenario(tmp_path / "missing.cfg")


def test_errors_are_field_level():
    cfg = preset("case1")
    cfg.demands = [{"load": 3, "source": 10}]
    issues = validate_scenario(cfg)
    assert [i.where for i in issues] == ["demands[0]"]
    cfg = preset("case1")
    cfg.initial_voltages = InitialVoltages()
    assert [i.where for i in validate_scenario(cfg)] == ["initialVoltages"]
    cfg = preset("case1")
    cfg.topology = {"lattice": {"rows": 3, "cols": 3, "sources": [{"router": 12, "voltage": 12}]}}
    assert [i.where for i in validate_scenario(cfg)] == ["topology"]


def test_regime_warning_names_the_edge():
    cfg = preset("case1")
    cfg.parameters.capacitance = 1e-2
    issues = validate_scenario(cfg)
    assert issues and all(i.level == "warning" for i in issues)
    assert any(i.where.startswith("edge ") and "->" in i.where for i in issues)


def test_slot_length_warning():
    cfg = preset("case1")
    cfg.parameters.slot_length = 1e-5
    issues = validate_scenario(cfg)
    assert any("exceeds the slot length" in i.message for i in issues)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_validate_cleanly(name):
    assert validate_scenario(preset(name)) == []


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_round_trip(tmp_path, name):
    cfg = preset(name)
    path = tmp_path / f"{name}.json"
    save_scenario(cfg, path)
    back = load_scenario(path)
    assert back == cfg
    assert back.initial_state().matrix.tolist() == cfg.initial_state().matrix.tolist()


@settings(max_examples=30)
@given(st.floats(1e-3, 1.0), st.floats(1e-2, 1.0), st.sampled_from(list(CostMetric)),
       st.sampled_from(list(CapPolicy)), st.integers(0, 2**31), st.floats(0.0, 0.5),
       st.sampled_from([FailurePolicy.STOP, FailurePolicy.SKIP]), st.booleans())
def test_round_trip_fields(tmp_path_factory, c, r, metric, policy, seed, sigma, fp, eq):
    cfg = ScenarioConfig(
        name="custom",
        topology={"nodes": [{"id": 1, "kind": "source", "voltage": 12.0}, {"id": 2, "kind": "router"},
                            {"id": 3, "kind": "load", "resistance": 10.0}],
                  "edges": [{"ends": [1, 2]}, {"ends": [2, 3]}]},
        parameters=Parameters(c, r, metric=metric, cap_policy=policy, equalize=eq),
        initial_voltages=InitialVoltages(routers={2: [10.0, 10.5]}),
        demands=[{"load": 3, "source": None}],
        run=RunSpec(3, seed, fp, sigma),
    )
    path = tmp_path_factory.mktemp("rt") / "s.json"
    save_scenario(cfg, path)
    assert read_scenario(path) == cfg


def test_preset_contents():
    c1 = preset("case1")
    net = c1.build_network()
    assert len(net) == 11
    d = c1.demand_list()[0]
    assert (d.source, d.load, d.unit_energy) == (10, 11, 3e-3)
    assert net.node(11).load_resistance == 10.0 and net.node(10).voltage == 12.0
    for name, volts in (("case2", (12.0, 12.0)), ("case3", (11.5, 12.5))):
        net = preset(name).build_network()
        assert tuple(n.voltage for n in net.sources) == volts
        assert [n.id for n in net.sources] == [10, 11] and net.loads[0].id == 12
        assert preset(name).demand_list()[0].source is None


def test_symmetric_any_source_ties_to_lowest_id():
    # mirror-symmetric layout: sources on routers 3 and 7, load on 9
    cfg = preset("case2")
    cfg.topology["lattice"]["sources"] = [{"router": 3, "voltage": 12.0}, {"router": 7, "voltage": 12.0}]
    cfg.initial_voltages = InitialVoltages(gradient=Gradient(anchor=1, high=11.5, low=10.0))
    net = cfg.build_network()
    ns = net.neighbors
    assert ns(10) == [3] and ns(11) == [7]
    _, _, rec = run_slot(net, cfg.initial_state(net), cfg.demand_list()[0], cfg.slot_params())
    ap = AllPairs(rec.weights)
    assert ap.path(10, 12).cost == ap.path(11, 12).cost
    assert rec.source == 10


def test_gradient():
    v = Gradient(anchor=1, high=11.5, low=10.0).voltages(3, 3)
    assert v[1] == 11.5 and v[9] == 10.0 and v[5] == pytest.approx(10.75)
    assert v[2] == v[4]


def test_perturbation_is_seeded():
    cfg = preset("case2")
    cfg.run.perturbation = 0.05
    a = cfg.initial_state().matrix.copy()
    b = cfg.initial_state().matrix.copy()
    assert (a == b).all()
    cfg.run.seed = 1
    assert not (cfg.initial_state().matrix == a).all()
    assert a[:9].min() >= 0  # routers are rows 1..9


def test_resolve():
    assert resolve("case3").name == "case3"
    with pytest.raises(FileNotFoundError):
        resolve("no-such-file.json")
