"""Trace and path-table writers.

Files written by :func:`write_trace`:

``trace.csv``
    one row per hop: ``slot,sourceNode,path,edge,weight,tau_seconds,
    e_send_J,e_receive_J,e_loss_J``; ``path`` and ``edge`` are
    dash-separated node ids.
``voltages.csv``
    ``slot,node,kind,capacitor,voltage``; slot 0 is the initial state when
    one is supplied, every other slot the state after that slot.
``summary.json``
    totals, per-slot choices with the runner-up ratio, and failures.

:func:`write_path_table` writes ``rank,path,cost,normalized_cost``.

Floats are written with ``repr`` so files round-trip exactly and are
byte-identical between runs. The optional first line ``# generated ...``
is the only varying content and is omitted when ``timestamp`` is None.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

from .engine import TransferLog
from .errors import NoPathError, PathLimitExceeded
from .network import VoltageState
from .routing import AllPairs, PathSpec, enumerate_paths, normalized_costs

TRACE_COLUMNS = ["slot", "sourceNode", "path", "edge", "weight", "tau_seconds",
                 "e_send_J", "e_receive_J", "e_loss_J"]
VOLTAGE_COLUMNS = ["slot", "node", "kind", "capacitor", "voltage"]
PATH_COLUMNS = ["rank", "path", "cost", "normalized_cost"]
SUMMARY_PATH_LIMIT = 100_000


def _num(x) -> str:
    return repr(float(x))


def _open(path: Path, timestamp):
    f = open(path, "w", newline="")
    if timestamp is not None:
        f.write(f"# generated {timestamp}\n")
    return f


def _voltage_rows(slot, state: VoltageState):
    net = state.net
    for n in net.nodes:
        row = state.row(n.id)
        for c, v in enumerate(row, start=1):
            yield [slot, n.id, n.kind.value, c, _num(v)]


def slot_summary(record) -> dict:
    """Chosen path plus how it compares with alternatives on the same weights."""
    W = record.weights
    out = {
        "slot": record.slot,
        "source": record.source,
        "load": record.demand.load,
        "path": record.path.label(),
        "cost": record.path.cost,
        "delivered_J": record.delivered,
        "transfer_loss_J": record.transfer_loss,
        "equalization_loss_J": math.fsum(record.equalization_loss.values()),
    }
    try:
        paths = enumerate_paths(W, record.source, record.demand.load, limit=SUMMARY_PATH_LIMIT)
    except PathLimitExceeded:
        paths = []
    if paths:
        out["candidate_paths"] = len(paths)
        out["normalized_cost"] = record.path.cost / paths[0].cost
        out["runner_up_ratio"] = paths[1].cost / paths[0].cost if len(paths) > 1 else None
    if record.demand.source is None:
        ap = AllPairs(W)
        costs = {}
        for s in record.state.net.sources:
            try:
                costs[str(s.id)] = ap.path(s.id, record.demand.load).cost
            except NoPathError:
                costs[str(s.id)] = None
        out["source_costs"] = costs
    return out


def write_trace(tlog: TransferLog, out_dir, *, initial: VoltageState | None = None,
                scenario: str | None = None, timestamp: str | None = None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path, volt_path, summary_path = out / "trace.csv", out / "voltages.csv", out / "summary.json"

    with _open(trace_path, timestamp) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for rec in tlog.records:
            for t in rec.transfers:
                e = t.energies
                w.writerow([rec.slot, rec.source, rec.path.label(), f"{t.sender}-{t.receiver}",
                            _num(t.weight), _num(t.tau), _num(e.send), _num(e.receive), _num(e.loss)])

    with _open(volt_path, timestamp) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(VOLTAGE_COLUMNS)
        if initial is not None:
            w.writerows(_voltage_rows(0, initial))
        for rec in tlog.records:
            w.writerows(_voltage_rows(rec.slot, rec.state))

    summary = {}
    if timestamp is not None:
        summary["generated"] = timestamp
    summary.update({
        "scenario": scenario,
        "slots_completed": len(tlog.records),
        "totals": {
            "delivered_J": tlog.delivered,
            "transfer_loss_J": tlog.transfer_loss,
            "equalization_loss_J": tlog.equalization_loss,
            "source_energy_J": math.fsum(r.source_energy for r in tlog.records),
        },
        "slots": [slot_summary(r) for r in tlog.records],
        "failures": [vars(f).copy() for f in tlog.failures],
    })
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return [trace_path, volt_path, summary_path]


def write_path_table(paths: Sequence[PathSpec], path, *, timestamp: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with _open(path, timestamp) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(PATH_COLUMNS)
        for rank, (p, norm) in enumerate(zip(paths, normalized_costs(paths)), start=1):
            w.writerow([rank, p.label(), _num(p.cost), _num(norm)])
    return path


def read_csv(path) -> list[dict]:
    """Rows of a file written here, skipping the timestamp line."""
    with open(path, newline="") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    return list(csv.DictReader(lines))
