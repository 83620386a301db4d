"""Declarative scenarios: schema, validation and the three lattice presets.

A scenario file is JSON with five sections::

    {
      "name": "case1",
      "topology": {"lattice": {"rows": 3, "cols": 3,
                               "sources": [{"router": 1, "voltage": 12.0}],
                               "loads": [{"router": 9, "resistance": 10.0}]}},
      "parameters": {"capacitance": 0.1, "resistance": 0.1, "slot_length": 0.001,
                     "unit_energy": 0.003, "metric": "loss_over_send",
                     "cap_policy": "fixed", "equalize": true, "capacitors": 2},
      "initialVoltages": {"gradient": {"anchor": 1, "high": 11.5, "low": 10.0,
                                       "row_weight": 1.0, "col_weight": 1.0}},
      "demands": [{"load": 11, "source": 10}],
      "run": {"slots": 1, "seed": 0, "failure_policy": "stop", "perturbation": 0.0}
    }

``"topology": "case1"`` (a preset name) loads that preset; any other
section given alongside it overrides the preset's section key by key.
``initialVoltages`` may instead hold ``{"routers": {"1": [11.0, 11.0], ...}}``.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import CapPolicy, Demand, FailurePolicy, SlotParams, payload_length, select_capacitors
from .errors import InfeasibleTransferError, NetworkError, PPDNError, ScenarioError, StateError
from .network import Network, NodeKind, VoltageState, build_network, equalize_all, lattice_position
from .routing import CostMetric

log = logging.getLogger(__name__)

REGIME_LIMIT = 0.05
SECTIONS = ("name", "topology", "parameters", "initialVoltages", "demands", "run")


@dataclass
class Parameters:
    capacitance: float = 0.1
    resistance: float = 0.1
    slot_length: float = 1.0e-3
    unit_energy: float = 3.0e-3
    metric: CostMetric = CostMetric.LOSS_OVER_SEND
    cap_policy: CapPolicy = CapPolicy.FIXED
    equalize: bool = True
    capacitors: int = 2

    def to_dict(self):
        return {
            "capacitance": self.capacitance,
            "resistance": self.resistance,
            "slot_length": self.slot_length,
            "unit_energy": self.unit_energy,
            "metric": self.metric.value,
            "cap_policy": self.cap_policy.value,
            "equalize": self.equalize,
            "capacitors": self.capacitors,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "metric" in d:
            d["metric"] = CostMetric(d["metric"])
        if "cap_policy" in d:
            d["cap_policy"] = CapPolicy(d["cap_policy"])
        return cls(**d)


@dataclass
class Gradient:
    """Router voltages falling linearly with weighted lattice distance.

    The anchor router gets ``high``; the router with the largest weighted
    distance ``row_weight*|dr| + col_weight*|dc|`` gets ``low``.
    """

    anchor: int = 1
    high: float = 11.5
    low: float = 10.0
    row_weight: float = 1.0
    col_weight: float = 1.0

    def voltages(self, rows, cols) -> dict[int, float]:
        r0, c0 = lattice_position(self.anchor, cols)
        dist = {}
        for k in range(1, rows * cols + 1):
            r, c = lattice_position(k, cols)
            dist[k] = self.row_weight * abs(r - r0) + self.col_weight * abs(c - c0)
        dmax = max(dist.values()) or 1.0
        return {k: self.high - (self.high - self.low) * d / dmax for k, d in dist.items()}


@dataclass
class InitialVoltages:
    gradient: Gradient | None = None
    routers: dict[int, list[float]] | None = None

    def to_dict(self):
        out = {}
        if self.gradient is not None:
            out["gradient"] = vars(self.gradient).copy()
        if self.routers is not None:
            out["routers"] = {str(k): list(v) for k, v in sorted(self.routers.items())}
        return out

    @classmethod
    def from_dict(cls, d):
        grad = Gradient(**d["gradient"]) if d.get("gradient") is not None else None
        routers = None
        if d.get("routers") is not None:
            routers = {}
            for k, v in d["routers"].items():
                routers[int(k)] = [float(x) for x in (v if isinstance(v, list) else [v])]
        return cls(grad, routers)


@dataclass
class RunSpec:
    slots: int = 1
    seed: int = 0
    failure_policy: FailurePolicy = FailurePolicy.STOP
    perturbation: float = 0.0  # std-dev in volts of seeded noise on router voltages

    def to_dict(self):
        return {
            "slots": self.slots,
            "seed": self.seed,
            "failure_policy": self.failure_policy.value,
            "perturbation": self.perturbation,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "failure_policy" in d:
            d["failure_policy"] = FailurePolicy(d["failure_policy"])
        return cls(**d)


@dataclass
class ScenarioConfig:
    name: str
    topology: dict
    parameters: Parameters = field(default_factory=Parameters)
    initial_voltages: InitialVoltages = field(default_factory=InitialVoltages)
    demands: list[dict] = field(default_factory=list)
    run: RunSpec = field(default_factory=RunSpec)

    # -- construction of run objects --------------------------------------

    def build_network(self) -> Network:
        topo = copy.deepcopy(self.topology)
        topo.setdefault("capacitance", self.parameters.capacitance)
        topo.setdefault("resistance", self.parameters.resistance)
        topo.setdefault("capacitors", self.parameters.capacitors)
        return build_network(topo)

    def router_voltages(self, net: Network) -> dict[int, list[float]]:
        m = net.capacitor_count
        out: dict[int, list[float]] = {}
        iv = self.initial_voltages
        if iv.gradient is not None:
            if "lattice" not in self.topology:
                raise ScenarioError("a voltage gradient needs a lattice topology")
            lat = self.topology["lattice"]
            for k, v in iv.gradient.voltages(int(lat["rows"]), int(lat["cols"])).items():
                out[k] = [v] * m
        if iv.routers is not None:
            for k, row in iv.routers.items():
                out[k] = list(row) * m if len(row) == 1 else list(row)
        if self.run.perturbation > 0:
            rng = np.random.default_rng(self.run.seed)
            for k in sorted(out):
                out[k] = list(np.maximum(np.asarray(out[k]) + rng.normal(0.0, self.run.perturbation), 0.0))
        return out

    def initial_state(self, net: Network | None = None) -> VoltageState:
        net = net if net is not None else self.build_network()
        return VoltageState.initial(net, self.router_voltages(net))

    def demand_list(self) -> list[Demand]:
        return [
            Demand(int(d["load"]), None if d.get("source") is None else int(d["source"]),
                   float(d.get("unit_energy", self.parameters.unit_energy)))
            for d in self.demands
        ]

    def slot_params(self) -> SlotParams:
        p = self.parameters
        return SlotParams(p.slot_length, p.metric, p.cap_policy, p.equalize)

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "topology": copy.deepcopy(self.topology),
            "parameters": self.parameters.to_dict(),
            "initialVoltages": self.initial_voltages.to_dict(),
            "demands": [dict(d) for d in self.demands],
            "run": self.run.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        unknown = set(d) - set(SECTIONS)
        if unknown:
            raise ScenarioError(f"unknown sections: {sorted(unknown)}")
        if "topology" not in d:
            raise ScenarioError("missing section 'topology'")
        topo = d["topology"]
        if isinstance(topo, str):
            base = preset(topo).to_dict()
            for key in ("parameters", "initialVoltages", "run"):
                base[key].update(d.get(key, {}))
            for key in ("name", "demands"):
                if key in d:
                    base[key] = d[key]
            d = base
        try:
            return cls(
                name=str(d.get("name", "scenario")),
                topology=dict(d["topology"]),
                parameters=Parameters.from_dict(d.get("parameters", {})),
                initial_voltages=InitialVoltages.from_dict(d.get("initialVoltages", {})),
                demands=[dict(x) for x in d.get("demands", [])],
                run=RunSpec.from_dict(d.get("run", {})),
            )
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed scenario: {exc}") from exc


# -- validation -------------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    level: str  # "error" or "warning"
    where: str
    message: str

    def __str__(self):
        return f"{self.level}: {self.where}: {self.message}"


def _positive(issues, where, value):
    if not (isinstance(value, (int, float)) and value > 0):
        issues.append(Issue("error", where, f"must be > 0, got {value!r}"))


def validate_scenario(cfg: ScenarioConfig) -> list[Issue]:
    """Schema, consistency and linear-regime checks.

    Errors make the scenario unusable. Warnings flag hops whose payload
    length at the initial state exceeds 5% of the relevant RC time
    constant (where the linearised sizing drifts) or the slot length.
    """
    issues: list[Issue] = []
    p = cfg.parameters
    for name in ("capacitance", "resistance", "slot_length", "unit_energy"):
        _positive(issues, f"parameters.{name}", getattr(p, name))
    if not isinstance(p.capacitors, int) or p.capacitors < 2:
        issues.append(Issue("error", "parameters.capacitors", f"must be an integer >= 2, got {p.capacitors!r}"))
    if not isinstance(cfg.run.slots, int) or cfg.run.slots < 0:
        issues.append(Issue("error", "run.slots", f"must be an integer >= 0, got {cfg.run.slots!r}"))
    if cfg.run.perturbation < 0:
        issues.append(Issue("error", "run.perturbation", "must be >= 0"))
    if issues:
        return issues

    try:
        net = cfg.build_network()
    except (NetworkError, KeyError, TypeError, ValueError) as exc:
        return [Issue("error", "topology", str(exc))]

    iv = cfg.initial_voltages
    if iv.gradient is None and iv.routers is None:
        issues.append(Issue("error", "initialVoltages", "needs 'gradient' or 'routers'"))
        return issues
    if iv.gradient is not None:
        g = iv.gradient
        if g.high < 0 or g.low < 0:
            issues.append(Issue("error", "initialVoltages.gradient", "voltages must be >= 0"))
    try:
        state = cfg.initial_state(net)
    except (StateError, ScenarioError, NetworkError) as exc:
        issues.append(Issue("error", "initialVoltages", str(exc)))
        return issues

    if not cfg.demands:
        issues.append(Issue("error", "demands", "at least one demand is required"))
    for k, d in enumerate(cfg.demand_list() if not issues else []):
        try:
            d.validate(net)
        except PPDNError as exc:
            issues.append(Issue("error", f"demands[{k}]", str(exc)))
    if any(i.level == "error" for i in issues):
        return issues

    issues.extend(regime_warnings(cfg, net, state))
    return issues


def regime_warnings(cfg: ScenarioConfig, net: Network, state: VoltageState) -> list[Issue]:
    p = cfg.parameters
    if p.equalize:
        state, _ = equalize_all(state)
    assignment = select_capacitors(net, state, p.cap_policy)
    out = []
    for (i, j), caps in sorted(assignment.pairs.items()):
        kind = net.kind(i).letter + net.kind(j).letter
        if kind not in ("rr", "sr", "rl"):
            continue
        try:
            tau = payload_length(net, state, i, j, caps, p.unit_energy)
        except InfeasibleTransferError:
            continue
        lp = net.line_params(i, j)
        tc = lp.capacitance * (lp.resistance + (lp.load_resistance or 0.0))
        if tau > REGIME_LIMIT * tc:
            out.append(Issue(
                "warning", f"edge {i}->{j}",
                f"payload {tau:.4g} s is {tau / tc:.3g} of the RC time constant (limit {REGIME_LIMIT})",
            ))
        if tau > p.slot_length:
            out.append(Issue(
                "warning", f"edge {i}->{j}",
                f"payload {tau:.4g} s exceeds the slot length {p.slot_length:.4g} s",
            ))
    return out


# -- file I/O ---------------------------------------------------------------


def read_scenario(path) -> ScenarioConfig:
    """Parse and default-fill a scenario file without validating it."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: top level must be an object")
    return ScenarioConfig.from_dict(raw)


def load_scenario(path) -> ScenarioConfig:
    """Read, default-fill and validate a scenario; raises on any error."""
    cfg = read_scenario(path)
    issues = validate_scenario(cfg)
    errors = [i for i in issues if i.level == "error"]
    if errors:
        raise ScenarioError("; ".join(map(str, errors)), issues)
    for w in issues:
        log.warning("%s", w)
    return cfg


def save_scenario(cfg: ScenarioConfig, path):
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


def resolve(name_or_path) -> ScenarioConfig:
    """Preset by name, else a scenario file."""
    if str(name_or_path) in PRESETS:
        return preset(str(name_or_path))
    return load_scenario(name_or_path)


# -- presets ----------------------------------------------------------------

# Router voltages of the presets (routers 1..9, row-major):
#
#   case1 (explicit)       case2 / case3 (gradient)
#   11.5  11.0  10.5       11.300 10.910 10.520
#   11.3  10.7  10.3       11.040 10.650 10.260
#   10.8  10.5  10.0       10.780 10.390 10.000
#
# The source figures only show colour maps, so these distributions are
# chosen here: case1 makes the down-right staircase 10-1-4-5-8-9-11 the
# cheapest path, and the case2/case3 gradient makes the selected source
# switch from node 11 to node 10 when the source voltages change.

CASE1_ROUTERS = {
    1: [11.5], 2: [11.0], 3: [10.5],
    4: [11.3], 5: [10.7], 6: [10.3],
    7: [10.8], 8: [10.5], 9: [10.0],
}
CASE23_GRADIENT = Gradient(anchor=1, high=11.3, low=10.0, row_weight=1.0, col_weight=1.5)


def _case(name, sources, load_router, initial, demand_source):
    n_src = len(sources)
    load_id = 9 + n_src + 1
    return ScenarioConfig(
        name=name,
        topology={"lattice": {
            "rows": 3, "cols": 3,
            "sources": [{"router": r, "voltage": v} for r, v in sources],
            "loads": [{"router": load_router, "resistance": 10.0}],
        }},
        initial_voltages=copy.deepcopy(initial),
        demands=[{"load": load_id, "source": demand_source}],
    )


def preset_case1() -> ScenarioConfig:
    """Fixed source: 12 V source (node 10) at router 1, 10 ohm load (node 11) at router 9."""
    return _case("case1", [(1, 12.0)], 9, InitialVoltages(routers=CASE1_ROUTERS), 10)


def preset_case2() -> ScenarioConfig:
    """Any source: 12 V sources at routers 1 (node 10) and 7 (node 11), load node 12 at router 9."""
    return _case("case2", [(1, 12.0), (7, 12.0)], 9, InitialVoltages(gradient=CASE23_GRADIENT), None)


def preset_case3() -> ScenarioConfig:
    """As case2 with the source voltages moved to 11.5 V and 12.5 V."""
    return _case("case3", [(1, 11.5), (7, 12.5)], 9, InitialVoltages(gradient=CASE23_GRADIENT), None)


PRESETS = {"case1": preset_case1, "case2": preset_case2, "case3": preset_case3}


def preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ScenarioError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None

