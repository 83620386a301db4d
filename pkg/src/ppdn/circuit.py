"""Closed-form RC physics of a single power-packet transfer.

Three connection types exist in a dispatching network:

* router-router (RR): a charged capacitor discharges into a capacitor of
  the neighbouring router through the line resistance ``R``;
* source-router (SR): an ideal voltage source charges a router capacitor;
* router-load (RL): a router capacitor discharges into a resistive load.

Every function accepts plain floats or numpy arrays (broadcast
element-wise) so that the property tests can sweep thousands of samples
in one call. Durations are payload durations ``T0``; the slot length only
enters through the callers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InfeasibleTransferError, InvalidParameterError


@dataclass(frozen=True)
class LineParams:
    """Electrical parameters of one connection.

    ``load_resistance`` is only meaningful (and only required) for
    router-load connections.
    """

    capacitance: float
    resistance: float
    load_resistance: float | None = None

    def __post_init__(self):
        # arrays are allowed so that sweeps can share one parameter object
        if not np.all(np.asarray(self.capacitance) > 0):
            raise InvalidParameterError(f"capacitance must be > 0, got {self.capacitance}")
        if not np.all(np.asarray(self.resistance) > 0):
            raise InvalidParameterError(f"resistance must be > 0, got {self.resistance}")
        if self.load_resistance is not None and not np.all(np.asarray(self.load_resistance) > 0):
            raise InvalidParameterError(
                f"load resistance must be > 0, got {self.load_resistance}"
            )

    @property
    def time_constant(self) -> float:
        return self.capacitance * self.resistance


class EnergyTriple(NamedTuple):
    send: float
    receive: float
    loss: float


def _check_duration(t0):
    if np.any(np.asarray(t0) < 0):
        raise InvalidParameterError("payload duration must be >= 0")


def _load_resistance(p: LineParams) -> float:
    if p.load_resistance is None:
        raise InvalidParameterError("router-load connection needs a load resistance")
    return p.load_resistance


# -- router-router ---------------------------------------------------------


def rr_update(v1, v2, p: LineParams, t0):
    """Capacitor voltages after a router-router transfer of length ``t0``."""
    _check_duration(t0)
    e = np.exp(-2.0 * t0 / p.time_constant)
    dv = v1 - v2
    total = v1 + v2
    return 0.5 * (dv * e + total), 0.5 * (-dv * e + total)


def rr_energies(v1, v2, p: LineParams, t0) -> EnergyTriple:
    _check_duration(t0)
    x = -2.0 * t0 / p.time_constant
    e = np.exp(x)
    one_minus_e = -np.expm1(x)
    dv = v1 - v2
    c = p.capacitance
    send = c / 8.0 * dv * one_minus_e * ((3.0 * v1 + v2) + dv * e)
    receive = c / 8.0 * dv * one_minus_e * ((v1 + 3.0 * v2) - dv * e)
    loss = c / 4.0 * dv**2 * -np.expm1(2.0 * x)
    return EnergyTriple(send, receive, loss)


def rr_payload_length(v1, v2, resistance, unit_energy):
    """Linearised payload length delivering ``unit_energy`` to the receiver.

    Only accurate while the result is small against ``C * R``; the caller
    is responsible for checking that regime.
    """
    denom = (v1 - v2) * v2
    if not np.all(denom > 0):
        raise InfeasibleTransferError(
            f"router-router transfer {v1!r} V -> {v2!r} V cannot deliver energy"
        )
    return resistance * unit_energy / denom


# -- source-router ---------------------------------------------------------


def sr_update(v_src, v2, p: LineParams, t0):
    _check_duration(t0)
    e = np.exp(-t0 / p.time_constant)
    return (v2 - v_src) * e + v_src


def sr_energies(v_src, v2, p: LineParams, t0) -> EnergyTriple:
    _check_duration(t0)
    x = -t0 / p.time_constant
    e = np.exp(x)
    one_minus_e = -np.expm1(x)
    dv = v_src - v2
    c = p.capacitance
    send = c * v_src * dv * one_minus_e
    receive = 0.5 * c * dv * one_minus_e * (v_src * one_minus_e + v2 * (1.0 + e))
    loss = 0.5 * c * dv**2 * -np.expm1(2.0 * x)
    return EnergyTriple(send, receive, loss)


def sr_payload_length(v_src, v2, resistance, unit_energy):
    denom = (v_src - v2) * v2
    if not np.all(denom > 0):
        raise InfeasibleTransferError(
            f"source-router transfer {v_src!r} V -> {v2!r} V cannot deliver energy"
        )
    return resistance * unit_energy / denom


# -- router-load -----------------------------------------------------------


def rl_update(v1, p: LineParams, t0):
    _check_duration(t0)
    rl = _load_resistance(p)
    return v1 * np.exp(-t0 / (p.capacitance * (p.resistance + rl)))


def rl_energies(v1, p: LineParams, t0) -> EnergyTriple:
    _check_duration(t0)
    rl = _load_resistance(p)
    r = p.resistance
    send = 0.5 * p.capacitance * v1**2 * -np.expm1(-2.0 * t0 / (p.capacitance * (r + rl)))
    return EnergyTriple(send, send * (rl / (r + rl)), send * (r / (r + rl)))


def rl_payload_length(v1, resistance, load_resistance, unit_energy):
    if not np.all(np.asarray(v1) > 0):
        raise InfeasibleTransferError(f"router at {v1!r} V cannot supply a load")
    return (resistance + load_resistance) ** 2 * unit_energy / (load_resistance * v1**2)
