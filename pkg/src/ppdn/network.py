"""Dispatching-network graph and its voltage state.

Nodes are identified by positive integers. Routers in lattice builds are
numbered 1..rows*cols in row-major order and every tap (source or load)
takes the next free id, so a 3x3 lattice with one source and one load
yields sources/loads 10 and 11.

Capacitor indices are 1-based throughout the public API: by default
capacitor 1 forwards and capacitor 2 receives.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import LineParams
from .errors import NetworkError, StateError


class NodeKind(enum.Enum):
    SOURCE = "source"
    ROUTER = "router"
    LOAD = "load"

    @property
    def letter(self) -> str:
        return self.value[0]


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    voltage: float | None = None  # sources
    load_resistance: float | None = None  # loads
    capacitors: int | None = None  # routers
    capacitance: float | None = None  # routers, per capacitor

    def validate(self):
        if self.kind is NodeKind.SOURCE:
            if self.voltage is None or not self.voltage > 0:
                raise NetworkError(f"source {self.id} needs a voltage > 0")
        elif self.kind is NodeKind.LOAD:
            if self.load_resistance is None or not self.load_resistance > 0:
                raise NetworkError(f"load {self.id} needs a resistance > 0")
        else:
            if self.capacitors is None or self.capacitors < 2:
                raise NetworkError(f"router {self.id} needs at least 2 capacitors")
            if self.capacitance is None or not self.capacitance > 0:
                raise NetworkError(f"router {self.id} needs a capacitance > 0")


def source(id, voltage) -> Node:
    return Node(id, NodeKind.SOURCE, voltage=float(voltage))


def load(id, resistance) -> Node:
    return Node(id, NodeKind.LOAD, load_resistance=float(resistance))


def router(id, capacitance, capacitors=2) -> Node:
    return Node(id, NodeKind.ROUTER, capacitors=int(capacitors), capacitance=float(capacitance))


@dataclass(frozen=True)
class Edge:
    a: int
    b: int
    resistance: float

    @property
    def key(self) -> frozenset:
        return frozenset((self.a, self.b))


class Network:
    """A simple undirected graph of typed nodes and resistive lines.

    Immutable after construction; any structural problem raises
    :class:`NetworkError`.
    """

    def __init__(self, nodes: Iterable[Node], edges: Iterable[Edge]):
        nodes = sorted(nodes, key=lambda n: n.id)
        self._nodes: dict[int, Node] = {}
        for n in nodes:
            if n.id in self._nodes:
                raise NetworkError(f"duplicate node id {n.id}")
            n.validate()
            self._nodes[n.id] = n
        self.ids: tuple[int, ...] = tuple(self._nodes)
        self._index = {nid: k for k, nid in enumerate(self.ids)}

        caps = {n.capacitors for n in self.routers}
        if len(caps) > 1:
            raise NetworkError(f"all routers must carry the same capacitor count, got {sorted(caps)}")
        self.capacitor_count: int = caps.pop() if caps else 2

        self._edges: dict[frozenset, Edge] = {}
        self._adj: dict[int, list[int]] = {nid: [] for nid in self.ids}
        for e in edges:
            if e.a == e.b:
                raise NetworkError(f"self-loop on node {e.a}")
            for end in (e.a, e.b):
                if end not in self._nodes:
                    raise NetworkError(f"edge ({e.a},{e.b}) references unknown node {end}")
            if e.key in self._edges:
                raise NetworkError(f"parallel edge ({e.a},{e.b})")
            if not e.resistance > 0:
                raise NetworkError(f"edge ({e.a},{e.b}) needs a resistance > 0")
            ka, kb = self._nodes[e.a].kind, self._nodes[e.b].kind
            if ka is NodeKind.ROUTER and kb is NodeKind.ROUTER:
                ca, cb = self._nodes[e.a].capacitance, self._nodes[e.b].capacitance
                if ca != cb:
                    raise NetworkError(
                        f"routers {e.a} and {e.b} have unequal capacitance ({ca} vs {cb})"
                    )
            self._edges[e.key] = e
            self._adj[e.a].append(e.b)
            self._adj[e.b].append(e.a)
        for nbrs in self._adj.values():
            nbrs.sort()

    # -- lookup ------------------------------------------------------------

    def __len__(self):
        return len(self.ids)

    def __contains__(self, nid):
        return nid in self._nodes

    def node(self, nid) -> Node:
        try:
            return self._nodes[nid]
        except KeyError:
            raise NetworkError(f"unknown node {nid}") from None

    def kind(self, nid) -> NodeKind:
        return self.node(nid).kind

    def index(self, nid) -> int:
        """Row of ``nid`` in matrices indexed like :attr:`ids`."""
        try:
            return self._index[nid]
        except KeyError:
            raise NetworkError(f"unknown node {nid}") from None

    @property
    def nodes(self) -> tuple[Node, ...]:
        return tuple(self._nodes.values())

    @property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(sorted(self._edges.values(), key=lambda e: (min(e.a, e.b), max(e.a, e.b))))

    def _of_kind(self, kind):
        return tuple(n for n in self._nodes.values() if n.kind is kind)

    @property
    def sources(self) -> tuple[Node, ...]:
        return self._of_kind(NodeKind.SOURCE)

    @property
    def routers(self) -> tuple[Node, ...]:
        return self._of_kind(NodeKind.ROUTER)

    @property
    def loads(self) -> tuple[Node, ...]:
        return self._of_kind(NodeKind.LOAD)

    def neighbors(self, nid) -> list[int]:
        return list(self._adj[nid])

    def degree(self, nid) -> int:
        return len(self._adj[nid])

    def has_edge(self, i, j) -> bool:
        return frozenset((i, j)) in self._edges

    def edge(self, i, j) -> Edge:
        try:
            return self._edges[frozenset((i, j))]
        except KeyError:
            raise NetworkError(f"no edge ({i},{j})") from None

    def line_params(self, i, j) -> LineParams:
        """Parameters of the transfer ``i -> j``.

        The capacitance is that of the router end (routers on both ends
        share one value by construction).
        """
        e = self.edge(i, j)
        ni, nj = self.node(i), self.node(j)
        cap = ni.capacitance if ni.kind is NodeKind.ROUTER else nj.capacitance
        if cap is None:
            raise NetworkError(f"edge ({i},{j}) has no router end")
        rl = nj.load_resistance if nj.kind is NodeKind.LOAD else None
        return LineParams(cap, e.resistance, rl)

    def __repr__(self):
        return (
            f"Network(sources={len(self.sources)}, routers={len(self.routers)}, "
            f"loads={len(self.loads)}, edges={len(self._edges)})"
        )


def build_lattice(
    rows: int,
    cols: int,
    source_taps: Sequence[tuple[int, float]] = (),
    load_taps: Sequence[tuple[int, float]] = (),
    *,
    capacitance: float = 0.1,
    resistance: float = 0.1,
    capacitors: int = 2,
) -> Network:
    """Router grid with 4-neighbour lines plus source and load taps.

    ``source_taps`` holds ``(router_id, voltage)`` pairs and ``load_taps``
    ``(router_id, load_resistance)`` pairs. Sources are numbered first,
    then loads, continuing after the last router.
    """
    if rows < 1 or cols < 1:
        raise NetworkError(f"lattice needs rows, cols >= 1, got {rows}x{cols}")
    n_routers = rows * cols
    nodes = [router(k, capacitance, capacitors) for k in range(1, n_routers + 1)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            k = r * cols + c + 1
            if c + 1 < cols:
                edges.append(Edge(k, k + 1, resistance))
            if r + 1 < rows:
                edges.append(Edge(k, k + cols, resistance))
    next_id = n_routers + 1
    for taps, make in ((source_taps, source), (load_taps, load)):
        for rid, value in taps:
            if not 1 <= rid <= n_routers:
                raise NetworkError(f"tap references nonexistent router {rid}")
            nodes.append(make(next_id, value))
            edges.append(Edge(next_id, rid, resistance))
            next_id += 1
    return Network(nodes, edges)


def lattice_position(router_id: int, cols: int) -> tuple[int, int]:
    """(row, col) of a router in a row-major lattice."""
    return divmod(router_id - 1, cols)


class VoltageState:
    """Per-node capacitor voltages, one row per node.

    Source rows are filled with the source voltage and load rows with
    zeros; only router rows can be written after construction.
    """

    def __init__(self, net: Network, matrix: np.ndarray, *, _readonly=False):
        self.net = net
        self._v = np.array(matrix, dtype=float)
        if self._v.shape != (len(net), net.capacitor_count):
            raise StateError(
                f"state matrix must be {len(net)}x{net.capacitor_count}, got {self._v.shape}"
            )
        if not np.all(np.isfinite(self._v)):
            raise StateError("voltages must be finite")
        for n in net.nodes:
            row = self._v[net.index(n.id)]
            if n.kind is NodeKind.ROUTER and np.any(row < 0):
                raise StateError(f"router {n.id} has a negative capacitor voltage")
            if n.kind is NodeKind.SOURCE and np.any(row != n.voltage):
                raise StateError(f"source row {n.id} must be filled with {n.voltage}")
            if n.kind is NodeKind.LOAD and np.any(row != 0):
                raise StateError(f"load row {n.id} must be zero")
        if _readonly:
            self._v.flags.writeable = False

    @classmethod
    def initial(cls, net: Network, router_voltages: Mapping[int, float | Sequence[float]]):
        """Build a state; each router gets a scalar (all capacitors) or a full row."""
        m = net.capacitor_count
        v = np.zeros((len(net), m))
        missing = [n.id for n in net.routers if n.id not in router_voltages]
        if missing:
            raise StateError(f"no initial voltage for routers {missing}")
        for nid in router_voltages:
            if net.kind(nid) is not NodeKind.ROUTER:
                raise StateError(f"initial voltage given for non-router node {nid}")
        for n in net.nodes:
            k = net.index(n.id)
            if n.kind is NodeKind.SOURCE:
                v[k] = n.voltage
            elif n.kind is NodeKind.ROUTER:
                val = np.broadcast_to(np.asarray(router_voltages[n.id], dtype=float), (m,))
                v[k] = val
        return cls(net, v)

    @property
    def matrix(self) -> np.ndarray:
        """Read-only view of the full voltage matrix."""
        view = self._v.view()
        view.flags.writeable = False
        return view

    def _cap(self, cap):
        if not 1 <= cap <= self.net.capacitor_count:
            raise StateError(f"capacitor index {cap} out of range 1..{self.net.capacitor_count}")
        return cap - 1

    def get(self, nid, cap) -> float:
        return float(self._v[self.net.index(nid), self._cap(cap)])

    def row(self, nid) -> np.ndarray:
        return self._v[self.net.index(nid)].copy()

    def set(self, nid, cap, value):
        if self.net.kind(nid) is not NodeKind.ROUTER:
            raise StateError(f"node {nid} is not a router; its row is fixed")
        if not self._v.flags.writeable:
            raise StateError("snapshot is read-only")
        if not np.isfinite(value) or value < 0:
            raise StateError(f"router voltage must be finite and >= 0, got {value}")
        self._v[self.net.index(nid), self._cap(cap)] = value

    def copy(self) -> "VoltageState":
        return VoltageState(self.net, self._v)

    def snapshot(self) -> "VoltageState":
        return VoltageState(self.net, self._v, _readonly=True)

    def stored_energy(self) -> float:
        """Total energy in router capacitors."""
        total = 0.0
        for n in self.net.routers:
            total += 0.5 * n.capacitance * float(np.sum(self._v[self.net.index(n.id)] ** 2))
        return total

    def __eq__(self, other):
        if not isinstance(other, VoltageState):
            return NotImplemented
        return self.net is other.net and np.array_equal(self._v, other._v)

    def __repr__(self):
        return f"VoltageState({self._v.tolist()})"


def equalize_router_capacitors(state: VoltageState, router_id) -> tuple[VoltageState, float]:
    """Connect all capacitors of one router in parallel.

    Returns the new state and the energy dissipated doing so.
    """
    net = state.net
    node = net.node(router_id)
    if node.kind is not NodeKind.ROUTER:
        raise StateError(f"node {router_id} is not a router")
    row = state.row(router_id)
    if np.all(row == row[0]):
        # already uniform; np.mean could round it off by an ulp
        return state.copy(), 0.0
    mean = float(np.mean(row))
    loss = 0.5 * node.capacitance * float(np.sum((row - mean) ** 2))
    out = state.copy()
    out._v[net.index(router_id)] = mean
    return out, loss


def equalize_all(state: VoltageState) -> tuple[VoltageState, dict[int, float]]:
    losses = {}
    for n in state.net.routers:
        state, losses[n.id] = equalize_router_capacitors(state, n.id)
    return state, losses


def build_network(topology: Mapping) -> Network:
    """Network from a topology mapping.

    Two forms are accepted::

        {"lattice": {"rows": 3, "cols": 3,
                     "sources": [{"router": 1, "voltage": 12.0}],
                     "loads": [{"router": 9, "resistance": 10.0}]},
         "capacitance": 0.1, "resistance": 0.1, "capacitors": 2}

        {"nodes": [{"id": 1, "kind": "router"}, {"id": 2, "kind": "source", "voltage": 12}],
         "edges": [{"ends": [1, 2], "resistance": 0.1}],
         "capacitance": 0.1, "resistance": 0.1, "capacitors": 2}

    Router capacitance/capacitor count and edge resistance fall back to the
    top-level values when omitted per item.
    """
    cap = topology.get("capacitance", 0.1)
    res = topology.get("resistance", 0.1)
    mc = topology.get("capacitors", 2)
    if "lattice" in topology:
        lat = topology["lattice"]
        return build_lattice(
            int(lat["rows"]),
            int(lat["cols"]),
            [(int(s["router"]), float(s["voltage"])) for s in lat.get("sources", [])],
            [(int(l["router"]), float(l["resistance"])) for l in lat.get("loads", [])],
            capacitance=cap,
            resistance=res,
            capacitors=mc,
        )
    if "nodes" not in topology:
        raise NetworkError("topology needs either 'lattice' or 'nodes'/'edges'")
    nodes = []
    for item in topology["nodes"]:
        try:
            nid, kind = int(item["id"]), NodeKind(item["kind"])
        except (KeyError, ValueError) as exc:
            raise NetworkError(f"bad node entry {item!r}: {exc}") from None
        if kind is NodeKind.SOURCE:
            nodes.append(Node(nid, kind, voltage=item.get("voltage")))
        elif kind is NodeKind.LOAD:
            nodes.append(Node(nid, kind, load_resistance=item.get("resistance")))
        else:
            nodes.append(
                Node(nid, kind, capacitors=int(item.get("capacitors", mc)),
                     capacitance=float(item.get("capacitance", cap)))
            )
    edges = []
    for item in topology.get("edges", []):
        a, b = item["ends"]
        edges.append(Edge(int(a), int(b), float(item.get("resistance", res))))
    return Network(nodes, edges)
