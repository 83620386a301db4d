"""Slot-by-slot packet dispatching.

One slot moves one packet of unit energy from a source to a load:

1. optionally equalise every router's capacitor bank,
2. select capacitors and weigh every directed edge for a full-slot transfer,
3. find the cheapest path (from a fixed source or the best of all sources),
4. size each hop's payload so the receiver gets the unit energy,
5. apply the exact RC update on every hop.

All hops of a packet run inside the same slot on disjoint capacitors, so
a slot is feasible when the longest payload fits in the slot. Slots are
all-or-nothing: on failure the input state is left untouched.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import circuit
from .circuit import EnergyTriple
from .errors import (
    InfeasibleTransferError,
    InsufficientCapacityError,
    NoPathError,
    PPDNError,
    SlotError,
    StateError,
)
from .network import Network, NodeKind, VoltageState, equalize_all
from .routing import (
    AllPairs,
    CapacitorAssignment,
    CostMetric,
    PathSpec,
    WeightMatrix,
    best_source,
    build_weight_matrix,
    edge_cost,
)

log = logging.getLogger(__name__)


class CapPolicy(enum.Enum):
    FIXED = "fixed"
    LOWEST_RATIO = "lowest_ratio"


class FailurePolicy(enum.Enum):
    STOP = "stop"
    SKIP = "skip"
    RAISE = "raise"


@dataclass(frozen=True)
class Demand:
    load: int
    source: int | None = None  # None: any source may serve
    unit_energy: float = 3.0e-3

    def validate(self, net: Network):
        if not self.unit_energy > 0:
            raise PPDNError(f"unit energy must be > 0, got {self.unit_energy}")
        if self.load not in net or net.kind(self.load) is not NodeKind.LOAD:
            raise PPDNError(f"demand target {self.load} is not a load")
        if self.source is not None and (
            self.source not in net or net.kind(self.source) is not NodeKind.SOURCE
        ):
            raise PPDNError(f"demand origin {self.source} is not a source")


@dataclass(frozen=True)
class SlotParams:
    slot_length: float = 1.0e-3
    metric: CostMetric = CostMetric.LOSS_OVER_SEND
    cap_policy: CapPolicy = CapPolicy.FIXED
    equalize: bool = True


@dataclass(frozen=True)
class EdgeTransfer:
    sender: int
    receiver: int
    kind: str  # "rr", "sr" or "rl"
    caps: tuple[int, int]
    weight: float
    tau: float
    energies: EnergyTriple


@dataclass(frozen=True)
class SlotPlan:
    slot: int
    source: int
    path: PathSpec
    caps: tuple[tuple[int, int], ...]
    taus: tuple[float, ...]


@dataclass
class SlotRecord:
    slot: int
    demand: Demand
    source: int
    path: PathSpec
    transfers: list[EdgeTransfer]
    equalization_loss: dict[int, float]
    state: VoltageState  # snapshot after the slot
    weights: WeightMatrix  # edge costs the path was chosen from

    @property
    def delivered(self) -> float:
        return float(self.transfers[-1].energies.receive)

    @property
    def source_energy(self) -> float:
        return float(self.transfers[0].energies.send)

    @property
    def transfer_loss(self) -> float:
        return float(sum(t.energies.loss for t in self.transfers))


@dataclass(frozen=True)
class SlotFailure:
    slot: int
    code: str
    message: str


@dataclass
class TransferLog:
    records: list[SlotRecord] = field(default_factory=list)
    failures: list[SlotFailure] = field(default_factory=list)

    @property
    def delivered(self) -> float:
        return float(sum(r.delivered for r in self.records))

    @property
    def transfer_loss(self) -> float:
        return float(sum(r.transfer_loss for r in self.records))

    @property
    def equalization_loss(self) -> float:
        return float(sum(sum(r.equalization_loss.values()) for r in self.records))

    @property
    def ok(self) -> bool:
        return not self.failures


def connection_kind(net: Network, i, j) -> str:
    return net.kind(i).letter + net.kind(j).letter


def _ratio(a, b):
    return a / b if b > 0 else np.inf


def _lowest_ratio_pair(net: Network, state: VoltageState, i, j, exclude_sender=None):
    m = net.capacitor_count
    send_caps = range(1, m + 1) if net.kind(i) is NodeKind.ROUTER else [1]
    recv_caps = range(1, m + 1) if net.kind(j) is NodeKind.ROUTER else [1]
    best = None
    for ci in send_caps:
        if ci == exclude_sender:
            continue
        for cj in recv_caps:
            r = _ratio(state.get(i, ci), state.get(j, cj))
            if r > 1 and (best is None or r < best[0]):
                best = (r, (ci, cj))
    return None if best is None else best[1]


def select_capacitors(net: Network, state: VoltageState, policy=CapPolicy.FIXED) -> CapacitorAssignment:
    """Capacitor pair for every directed edge.

    ``FIXED`` forwards from capacitor 1 and receives on capacitor 2.
    ``LOWEST_RATIO`` picks, per edge, the pair whose sender/receiver
    voltage ratio is the smallest one above 1 (lowest indices on ties),
    falling back to the fixed pair when no pair can transfer.
    """
    if net.capacitor_count < 2:
        raise StateError("routers need at least two capacitors")
    fixed = CapacitorAssignment.fixed(net)
    if policy is CapPolicy.FIXED:
        return fixed
    pairs = {}
    for key, default in fixed.pairs.items():
        pairs[key] = _lowest_ratio_pair(net, state, *key) or default
    return CapacitorAssignment(pairs)


def _path_caps(net, state, assignment, path: PathSpec, policy):
    """Per-hop capacitor pairs for ``path`` with no router reusing a capacitor.

    Only ``LOWEST_RATIO`` can produce a clash; it is repaired by moving the
    outgoing hop to the best other forwarding capacitor.
    """
    caps = [assignment.pair(i, j) for i, j in path.edges]
    for h in range(1, len(caps)):
        received = caps[h - 1][1]
        i, j = path.edges[h]
        if net.kind(i) is NodeKind.ROUTER and caps[h][0] == received:
            alt = _lowest_ratio_pair(net, state, i, j, exclude_sender=received)
            if alt is None:
                raise InfeasibleTransferError(
                    f"router {i} has no free capacitor to forward on ({i},{j})"
                )
            caps[h] = alt
    return caps


def payload_length(net: Network, state: VoltageState, i, j, caps, unit_energy) -> float:
    kind = connection_kind(net, i, j)
    p = net.line_params(i, j)
    ci, cj = caps
    if kind == "rr":
        return circuit.rr_payload_length(state.get(i, ci), state.get(j, cj), p.resistance, unit_energy)
    if kind == "sr":
        return circuit.sr_payload_length(net.node(i).voltage, state.get(j, cj), p.resistance, unit_energy)
    if kind == "rl":
        return circuit.rl_payload_length(state.get(i, ci), p.resistance, p.load_resistance, unit_energy)
    raise InfeasibleTransferError(f"no transfer defined for ({i},{j}) of kind {kind}")


def hop_transfer(net: Network, state: VoltageState, i, j, caps, t0):
    """Energies and post-transfer voltages ``(v_i', v_j')`` of one hop.

    ``None`` marks an end whose row does not change.
    """
    kind = connection_kind(net, i, j)
    p = net.line_params(i, j)
    ci, cj = caps
    if kind == "rr":
        v1, v2 = state.get(i, ci), state.get(j, cj)
        a, b = circuit.rr_update(v1, v2, p, t0)
        return circuit.rr_energies(v1, v2, p, t0), (float(a), float(b))
    if kind == "sr":
        vs, v2 = net.node(i).voltage, state.get(j, cj)
        return circuit.sr_energies(vs, v2, p, t0), (None, float(circuit.sr_update(vs, v2, p, t0)))
    v1 = state.get(i, ci)
    return circuit.rl_energies(v1, p, t0), (float(circuit.rl_update(v1, p, t0)), None)


def plan_transfers(net, state, plan: SlotPlan):
    """Evaluate every hop of ``plan`` against one voltage snapshot."""
    out = []
    for (i, j), caps, tau in zip(plan.path.edges, plan.caps, plan.taus):
        energies, volts = hop_transfer(net, state, i, j, caps, tau)
        out.append(((i, j), caps, tau, energies, volts))
    return out


def apply_plan(state: VoltageState, plan: SlotPlan, reverse=False) -> VoltageState:
    """New state after executing every hop of ``plan``.

    Hops are applied one after another; because they touch disjoint
    capacitors the order does not matter, which ``reverse`` lets tests
    confirm.
    """
    net = state.net
    edges = list(zip(plan.path.edges, plan.caps, plan.taus))
    if reverse:
        edges.reverse()
    out = state.copy()
    for (i, j), caps, tau in edges:
        _, (vi, vj) = hop_transfer(net, out, i, j, caps, tau)
        if vi is not None:
            out.set(i, caps[0], vi)
        if vj is not None:
            out.set(j, caps[1], vj)
    return out


def slot_weights(net: Network, state: VoltageState, params: SlotParams = SlotParams()):
    """Slot-start preparation shared by the engine and the path tools.

    Returns ``(state, equalization_losses, assignment, weights)`` where
    ``state`` is the (possibly equalised) copy the slot works on.
    """
    if params.equalize:
        work, eq_loss = equalize_all(state)
    else:
        work, eq_loss = state.copy(), {n.id: 0.0 for n in net.routers}
    assignment = select_capacitors(net, work, params.cap_policy)
    W = build_weight_matrix(net, work, assignment, params.slot_length, params.metric)
    return work, eq_loss, assignment, W


def run_slot(
    net: Network,
    state: VoltageState,
    demand: Demand,
    params: SlotParams = SlotParams(),
    slot: int = 1,
):
    """Execute one packet transfer.

    Returns ``(new_state, plan, record)``. Raises :class:`NoPathError` or
    :class:`InsufficientCapacityError` without touching ``state``.
    """
    demand.validate(net)
    work, eq_loss, assignment, W = slot_weights(net, state, params)
    ap = AllPairs(W)
    if demand.source is None:
        src, path = best_source(W, [s.id for s in net.sources], demand.load, ap)
    else:
        src, path = demand.source, ap.path(demand.source, demand.load)

    caps = _path_caps(net, work, assignment, path, params.cap_policy)
    if caps != [assignment.pair(i, j) for i, j in path.edges]:
        path = PathSpec(
            path.nodes,
            tuple(
                edge_cost(net, work, i, j, c[0], c[1], params.slot_length, params.metric)
                for (i, j), c in zip(path.edges, caps)
            ),
        )

    taus = []
    for (i, j), c in zip(path.edges, caps):
        try:
            tau = payload_length(net, work, i, j, c, demand.unit_energy)
        except InfeasibleTransferError as exc:
            raise InsufficientCapacityError(f"hop ({i},{j}) cannot deliver: {exc}", (i, j)) from exc
        if tau > params.slot_length:
            raise InsufficientCapacityError(
                f"hop ({i},{j}) needs a payload of {tau:.6g} s > slot {params.slot_length:.6g} s",
                (i, j),
            )
        taus.append(float(tau))

    plan = SlotPlan(slot, src, path, tuple(caps), tuple(taus))
    transfers = [
        EdgeTransfer(i, j, connection_kind(net, i, j), c, w, tau, EnergyTriple(*map(float, en)))
        for ((i, j), c, tau, en, _), w in zip(plan_transfers(net, work, plan), path.weights)
    ]
    new_state = apply_plan(work, plan)
    record = SlotRecord(slot, demand, src, path, transfers, eq_loss, new_state.snapshot(), W)
    log.debug("slot %d: %s cost %.6g", slot, path.label(), path.cost)
    return new_state, plan, record


def simulate(
    net: Network,
    state: VoltageState,
    demands: Sequence[Demand],
    params: SlotParams,
    n_slots: int,
    failure_policy=FailurePolicy.STOP,
    on_slot=None,
) -> tuple[TransferLog, VoltageState]:
    """Run ``n_slots`` consecutive slots, cycling through ``demands``.

    ``on_slot(record)``, when given, is called after each successful
    slot (used by tests to audit slots against an oracle).
    """
    tlog = TransferLog()
    if n_slots and not demands:
        raise PPDNError("simulation needs at least one demand")
    for k in range(1, n_slots + 1):
        demand = demands[(k - 1) % len(demands)]
        try:
            state, _plan, record = run_slot(net, state, demand, params, slot=k)
        except (NoPathError, InsufficientCapacityError, InfeasibleTransferError) as exc:
            if failure_policy is FailurePolicy.RAISE:
                raise SlotError(k, exc) from exc
            tlog.failures.append(SlotFailure(k, exc.code, str(exc)))
            log.info("slot %d failed: %s", k, exc)
            if failure_policy is FailurePolicy.STOP:
                break
            continue
        tlog.records.append(record)
        if on_slot is not None:
            on_slot(record)
    return tlog, state


def run_simulation(scenario, failure_policy=None) -> TransferLog:
    """Run a :class:`ppdn.scenario.ScenarioConfig` end to end."""
    net = scenario.build_network()
    state = scenario.initial_state(net)
    policy = failure_policy or scenario.run.failure_policy
    tlog, _ = simulate(net, state, scenario.demand_list(), scenario.slot_params(), scenario.run.slots, policy)
    return tlog
