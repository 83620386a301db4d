"""Loss-based edge costs and minimum-loss path search.

The cost of one hop is a dimensionless loss ratio evaluated for a transfer
lasting the whole slot. It is always derived from the energy accounting
in :mod:`ppdn.circuit`; the closed-form expressions are kept only as test
oracles. Infeasible hops carry ``inf``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import circuit
from .circuit import LineParams
from .errors import DegenerateQueryError, InfeasibleTransferError, NoPathError, PathLimitExceeded
from .network import Network, NodeKind, VoltageState

INF = math.inf
DEFAULT_PATH_LIMIT = 10**6


class CostMetric(enum.Enum):
    LOSS_OVER_SEND = "loss_over_send"
    LOSS_OVER_RECEIVE = "loss_over_receive"


def _ratio(energies: circuit.EnergyTriple, metric: CostMetric) -> float:
    denom = float(energies.send if metric is CostMetric.LOSS_OVER_SEND else energies.receive)
    loss = float(energies.loss)
    # underflow at near-zero voltages can leave nothing measurable to divide
    if not (denom > 0 and loss > 0 and math.isfinite(loss / denom)):
        raise InfeasibleTransferError("transfer too small to rate")
    return loss / denom


def cost_rr(v1, v2, p: LineParams, slot_length, metric=CostMetric.LOSS_OVER_SEND) -> float:
    if not (v1 > v2 and v2 >= 0):
        raise InfeasibleTransferError(f"router-router cost needs v1 > v2 >= 0, got {v1}, {v2}")
    return _ratio(circuit.rr_energies(v1, v2, p, slot_length), metric)


def cost_sr(v_src, v2, p: LineParams, slot_length, metric=CostMetric.LOSS_OVER_SEND) -> float:
    if not (v_src > v2 and v2 >= 0):
        raise InfeasibleTransferError(
            f"source-router cost needs v_src > v2 >= 0, got {v_src}, {v2}"
        )
    return _ratio(circuit.sr_energies(v_src, v2, p, slot_length), metric)


def cost_rl(resistance, load_resistance, metric=CostMetric.LOSS_OVER_SEND) -> float:
    if not (resistance > 0 and load_resistance > 0):
        raise InfeasibleTransferError("router-load cost needs positive resistances")
    if metric is CostMetric.LOSS_OVER_SEND:
        return resistance / (resistance + load_resistance)
    return resistance / load_resistance


@dataclass(frozen=True)
class CapacitorAssignment:
    """Capacitor pair ``(c_i, c_j)`` used for each directed edge ``i -> j``.

    Indices are 1-based. For source and load ends the index is nominal,
    since their rows hold one repeated value.
    """

    pairs: Mapping[tuple[int, int], tuple[int, int]]

    def pair(self, i, j) -> tuple[int, int]:
        return self.pairs[(i, j)]

    @classmethod
    def fixed(cls, net: Network, forwarding=1, receiving=2) -> "CapacitorAssignment":
        pairs = {}
        for e in net.edges:
            for i, j in ((e.a, e.b), (e.b, e.a)):
                ci = forwarding if net.kind(i) is NodeKind.ROUTER else 1
                cj = receiving if net.kind(j) is NodeKind.ROUTER else 1
                pairs[(i, j)] = (ci, cj)
        return cls(pairs)


class WeightMatrix:
    """Directed one-hop costs, indexed by node id."""

    def __init__(self, ids: Sequence[int], values):
        self.ids = tuple(ids)
        self.values = np.array(values, dtype=float)
        n = len(self.ids)
        if self.values.shape != (n, n):
            raise ValueError(f"weight matrix must be {n}x{n}")
        if np.any(np.isnan(self.values)) or np.any(self.values <= 0):
            raise ValueError("weights must be > 0 (inf for no transfer)")
        self._index = {nid: k for k, nid in enumerate(self.ids)}

    @classmethod
    def empty(cls, ids: Sequence[int]) -> "WeightMatrix":
        n = len(ids)
        return cls(ids, np.full((n, n), INF))

    def index(self, nid) -> int:
        return self._index[nid]

    def weight(self, i, j) -> float:
        return float(self.values[self._index[i], self._index[j]])

    def set(self, i, j, w):
        self.values[self._index[i], self._index[j]] = w

    def successors(self, i) -> list[int]:
        row = self.values[self._index[i]]
        return [self.ids[k] for k in np.flatnonzero(np.isfinite(row))]

    def finite_edges(self) -> list[tuple[int, int, float]]:
        rows, cols = np.nonzero(np.isfinite(self.values))
        return [(self.ids[a], self.ids[b], float(self.values[a, b])) for a, b in zip(rows, cols)]


def edge_cost(net: Network, state: VoltageState, i, j, ci, cj, slot_length, metric) -> float:
    """Cost of moving one packet ``i -> j``; ``inf`` if not allowed."""
    ki, kj = net.kind(i), net.kind(j)
    R, S, L = NodeKind.ROUTER, NodeKind.SOURCE, NodeKind.LOAD
    kind = (ki, kj)
    if kind not in ((R, R), (S, R), (R, L)):
        return INF
    sender = net.node(i).voltage if ki is S else state.get(i, ci)
    # load rows read 0, so for (r, l) this reduces to v_i > 0
    if not sender > state.get(j, cj):
        return INF
    p = net.line_params(i, j)
    try:
        if kind == (R, R):
            return cost_rr(sender, state.get(j, cj), p, slot_length, metric)
        if kind == (S, R):
            return cost_sr(sender, state.get(j, cj), p, slot_length, metric)
        return cost_rl(p.resistance, p.load_resistance, metric)
    except InfeasibleTransferError:
        return INF


def build_weight_matrix(
    net: Network,
    state: VoltageState,
    assignment: CapacitorAssignment,
    slot_length: float,
    metric: CostMetric = CostMetric.LOSS_OVER_SEND,
) -> WeightMatrix:
    W = WeightMatrix.empty(net.ids)
    for e in net.edges:
        for i, j in ((e.a, e.b), (e.b, e.a)):
            ci, cj = assignment.pair(i, j)
            W.set(i, j, edge_cost(net, state, i, j, ci, cj, slot_length, metric))
    return W


@dataclass(frozen=True)
class PathSpec:
    nodes: tuple[int, ...]
    weights: tuple[float, ...]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.nodes[:-1], self.nodes[1:]))

    @property
    def cost(self) -> float:
        # fsum is exact-rounded, so equal multisets of weights give equal totals
        return math.fsum(self.weights)

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def target(self) -> int:
        return self.nodes[-1]

    def label(self, sep="-") -> str:
        return sep.join(str(n) for n in self.nodes)

    @classmethod
    def from_nodes(cls, W: WeightMatrix, nodes: Sequence[int]) -> "PathSpec":
        nodes = tuple(nodes)
        return cls(nodes, tuple(W.weight(a, b) for a, b in zip(nodes[:-1], nodes[1:])))


def floyd_warshall(W: WeightMatrix) -> tuple[np.ndarray, np.ndarray]:
    """All-pairs shortest distances and predecessor matrix.

    ``pred[i, j]`` is the row index of the node preceding ``j`` on the best
    path from ``i``, or -1. Updates use strict improvement with
    intermediates visited in index order, so results are deterministic.
    """
    dist = W.values.copy()
    n = dist.shape[0]
    np.fill_diagonal(dist, 0.0)
    pred = np.where(np.isfinite(W.values), np.arange(n)[:, None], -1)
    np.fill_diagonal(pred, -1)
    for k in range(n):
        via = dist[:, k, None] + dist[None, k, :]
        better = via < dist
        if better.any():
            dist = np.where(better, via, dist)
            pred = np.where(better, pred[k][None, :], pred)
    return dist, pred


class AllPairs:
    """Floyd-Warshall result bound to its weight matrix, reusable across queries."""

    def __init__(self, W: WeightMatrix):
        self.W = W
        self.dist, self.pred = floyd_warshall(W)

    def path(self, source, target) -> PathSpec:
        if source == target:
            raise DegenerateQueryError(f"source and target are both {source}")
        s, t = self.W.index(source), self.W.index(target)
        if not np.isfinite(self.dist[s, t]):
            raise NoPathError(f"node {target} is unreachable from {source}")
        seq = [t]
        while seq[-1] != s:
            seq.append(int(self.pred[s, seq[-1]]))
        return PathSpec.from_nodes(self.W, [self.W.ids[k] for k in reversed(seq)])


def shortest_path(W: WeightMatrix, source, target, all_pairs: AllPairs | None = None) -> PathSpec:
    ap = all_pairs if all_pairs is not None else AllPairs(W)
    return ap.path(source, target)


def best_source(
    W: WeightMatrix, sources: Iterable[int], target, all_pairs: AllPairs | None = None
) -> tuple[int, PathSpec]:
    """Source and path with the least total cost; ties go to the lowest id."""
    sources = sorted(sources)
    if not sources:
        raise ValueError("no candidate sources")
    ap = all_pairs if all_pairs is not None else AllPairs(W)
    best = None
    for s in sources:
        try:
            p = ap.path(s, target)
        except NoPathError:
            continue
        if best is None or p.cost < best[1].cost:
            best = (s, p)
    if best is None:
        raise NoPathError(f"node {target} is unreachable from every source {sources}")
    return best


def enumerate_paths(W: WeightMatrix, source, target, limit: int = DEFAULT_PATH_LIMIT) -> list[PathSpec]:
    """Every loop-free finite-cost path, cheapest first (ties by node sequence)."""
    if source == target:
        raise DegenerateQueryError(f"source and target are both {source}")
    succ = {nid: W.successors(nid) for nid in W.ids}
    found: list[tuple[int, ...]] = []
    stack = [(source, iter(succ[source]))]
    on_path = {source}
    trail = [source]
    while stack:
        node, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            on_path.discard(node)
            trail.pop()
            continue
        if nxt in on_path:
            continue
        if nxt == target:
            found.append(tuple(trail) + (target,))
            if len(found) > limit:
                raise PathLimitExceeded(f"more than {limit} paths from {source} to {target}")
            continue
        on_path.add(nxt)
        trail.append(nxt)
        stack.append((nxt, iter(succ[nxt])))
    paths = [PathSpec.from_nodes(W, seq) for seq in found]
    paths.sort(key=lambda p: (p.cost, p.nodes))
    return paths


def normalized_costs(paths: Sequence[PathSpec]) -> list[float]:
    if not paths:
        return []
    best = paths[0].cost
    return [p.cost / best for p in paths]
