import json

import pytest

from ppdn.engine import Demand, SlotParams, TransferLog, simulate
from ppdn.report import PATH_COLUMNS, TRACE_COLUMNS, VOLTAGE_COLUMNS, read_csv, write_path_table, write_trace
from ppdn.routing import INF, WeightMatrix, enumerate_paths
from ppdn.scenario import preset


def _run(name, slots):
    cfg = preset(name)
    net = cfg.build_network()
    state = cfg.initial_state(net)
    tlog, _ = simulate(net, state, cfg.demand_list(), cfg.slot_params(), slots)
    return tlog, state


def test_one_slot_trace(tmp_path):
    tlog, state = _run("case1", 1)
    files = write_trace(tlog, tmp_path, initial=state, scenario="case1")
    assert [f.name for f in files] == ["trace.csv", "voltages.csv", "summary.json"]
    rows = read_csv(tmp_path / "trace.csv")
    rec = tlog.records[0]
    assert list(rows[0]) == TRACE_COLUMNS
    assert {r["slot"] for r in rows} == {"1"}
    assert [r["edge"] for r in rows] == [f"{a}-{b}" for a, b in rec.path.edges]
    assert all(r["path"] == "10-1-4-5-8-9-11" and r["sourceNode"] == "10" for r in rows)
    # repr floats round-trip exactly
    assert [float(r["e_receive_J"]) for r in rows] == [t.energies.receive for t in rec.transfers]
    assert [float(r["tau_seconds"]) for r in rows] == [t.tau for t in rec.transfers]


def test_voltage_table(tmp_path):
    tlog, state = _run("case1", 2)
    write_trace(tlog, tmp_path, initial=state)
    rows = read_csv(tmp_path / "voltages.csv")
    assert list(rows[0]) == VOLTAGE_COLUMNS
    assert {r["slot"] for r in rows} == {"0", "1", "2"}
    assert len(rows) == 3 * 11 * 2
    after = {(r["node"], r["capacitor"]): float(r["voltage"]) for r in rows if r["slot"] == "2"}
    assert after[("9", "1")] == tlog.records[1].state.get(9, 1)
    assert {r["kind"] for r in rows} == {"source", "router", "load"}


def test_summary(tmp_path):
    tlog, _ = _run("case2", 3)
    write_trace(tlog, tmp_path, scenario="case2")
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["scenario"] == "case2" and s["slots_completed"] == 3 and s["failures"] == []
    assert s["totals"]["delivered_J"] == pytest.approx(tlog.delivered)
    first = s["slots"][0]
    assert first["normalized_cost"] == 1.0
    if first["candidate_paths"] > 1:
        assert first["runner_up_ratio"] >= 1.0
    else:
        assert first["runner_up_ratio"] is None
    assert set(first["source_costs"]) == {"10", "11"}
    assert first["source_costs"][str(first["source"])] == first["cost"]
    assert "generated" not in s


def test_empty_log_writes_headers(tmp_path):
    write_trace(TransferLog(), tmp_path)
    assert (tmp_path / "trace.csv").read_text() == ",".join(TRACE_COLUMNS) + "\n"
    assert (tmp_path / "voltages.csv").read_text() == ",".join(VOLTAGE_COLUMNS) + "\n"
    assert json.loads((tmp_path / "summary.json").read_text())["slots"] == []


def test_failures_in_summary(tmp_path, chain):
    net, state = chain
    tlog, _ = simulate(net, state, [Demand(3, 1, 1.0)], SlotParams(), 1)
    write_trace(tlog, tmp_path)
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["failures"][0]["code"] == "INSUFFICIENT_CAPACITY" and s["failures"][0]["slot"] == 1


def test_diamond_path_table(tmp_path):
    W = WeightMatrix.empty([1, 2, 3, 4])
    W.set(1, 2, 0.1)
    W.set(2, 4, 0.2)
    W.set(1, 3, 0.15)
    W.set(3, 4, 0.2)
    write_path_table(enumerate_paths(W, 1, 4), tmp_path / "paths.csv")
    rows = read_csv(tmp_path / "paths.csv")
    assert list(rows[0]) == PATH_COLUMNS
    assert [r["path"] for r in rows] == ["1-2-4", "1-3-4"]
    assert float(rows[0]["normalized_cost"]) == 1.0
    assert round(float(rows[1]["normalized_cost"]), 4) == 1.1667


def test_empty_path_table(tmp_path):
    W = WeightMatrix([1, 2], [[INF, INF], [INF, INF]])
    write_path_table(enumerate_paths(W, 1, 2), tmp_path / "p.csv")
    assert read_csv(tmp_path / "p.csv") == []


def test_timestamp_header_and_determinism(tmp_path):
    tlog, state = _run("case1", 3)
    write_trace(tlog, tmp_path / "a", initial=state)
    write_trace(tlog, tmp_path / "b", initial=state)
    write_trace(tlog, tmp_path / "c", initial=state, timestamp="2026-01-01T00:00:00+00:00")
    for name in ("trace.csv", "voltages.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    text = (tmp_path / "c" / "trace.csv").read_text()
    assert text.startswith("# generated 2026-01-01T00:00:00+00:00\n")
    assert text.split("\n", 1)[1] == (tmp_path / "a" / "trace.csv").read_text()
    assert read_csv(tmp_path / "c" / "trace.csv") == read_csv(tmp_path / "a" / "trace.csv")
