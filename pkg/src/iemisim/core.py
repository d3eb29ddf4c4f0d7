"""Domain types shared across the simulator.

Converters are described by their regulation limits plus one feedback network
per regulated quantity.  A feedback network maps the real output (volts or
amps) to the small feedback voltage compared against a reference inside the
regulator; the network variant determines how an injected offset at that
comparison translates to the output.  All quantities are SI base units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Union

from .battery import BatteryState


class Topology(str, Enum):
    BUCK = "buck"
    BOOST = "boost"
    BUCK_BOOST = "buck_boost"
    SEPIC = "sepic"
    ISOLATED_FLYBACK = "isolated_flyback"


# ---------------------------------------------------------------------------
# Feedback networks
#
# polarity +1: feedback voltage rises with the output (non-isolated DC-DC).
# polarity -1: feedback voltage falls as the output rises (opto-coupled
# AC-DC convention); an identical injected offset then moves the output the
# opposite way.  measure() is the raw network map and ignores polarity;
# polarity enters only at the comparison (regulated_setpoint).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdjustableDivider:
    """Resistive divider tuned to pick the output; the reference is fixed.

    f(V) = beta * V.  Retargeting the output changes beta, so a fixed
    feedback-referred offset always shifts the output by the same fraction.
    """

    beta: float
    v_ref: float
    polarity: int = 1

    kind = "adjustable_divider"

    @property
    def reference(self) -> float:
        return self.v_ref

    def measure(self, value: float) -> float:
        return self.beta * value

    def invert(self, v_feedback: float) -> float:
        return v_feedback / self.beta

    def with_setpoint(self, target: float) -> "AdjustableDivider":
        if target <= 0:
            raise ValueError("setpoint must be positive")
        return replace(self, beta=self.v_ref / target)


@dataclass(frozen=True)
class FixedDividerAdjustableRef:
    """Fixed divider with a settable reference (typical adjustable supplies).

    f(V) = beta * V.  Retargeting changes v_ref, so a fixed offset shifts the
    output by the same absolute amount at every setting.
    """

    beta: float
    v_ref: float
    polarity: int = 1

    kind = "fixed_divider_adjustable_ref"

    @property
    def reference(self) -> float:
        return self.v_ref

    def measure(self, value: float) -> float:
        return self.beta * value

    def invert(self, v_feedback: float) -> float:
        return v_feedback / self.beta

    def with_setpoint(self, target: float) -> "FixedDividerAdjustableRef":
        return replace(self, v_ref=self.beta * target)


@dataclass(frozen=True)
class ZenerDrop:
    """Fixed voltage drop in series with the feedback (opto-coupled AC-DC).

    f(V) = V - v_z.  v_ref is the conduction threshold the dropped voltage is
    regulated against; the nominal output is v_ref + v_z.  An injected offset
    moves the output one-for-one regardless of v_z.
    """

    v_z: float
    v_ref: float
    polarity: int = 1

    kind = "zener"

    @property
    def reference(self) -> float:
        return self.v_ref

    def measure(self, value: float) -> float:
        return value - self.v_z

    def invert(self, v_feedback: float) -> float:
        return v_feedback + self.v_z

    def with_setpoint(self, target: float) -> "ZenerDrop":
        return replace(self, v_ref=target - self.v_z)


@dataclass(frozen=True)
class CurrentSense:
    """Shunt (or field sensor) plus amplifier feeding the current loop.

    f(I) = amp_gain * shunt_r * I, compared against a settable reference
    voltage, so attacks shift the regulated current by a constant amount
    independent of the current setting.
    """

    shunt_r: float
    amp_gain: float
    i_ref_voltage: float
    polarity: int = 1

    kind = "current_sense"

    @property
    def reference(self) -> float:
        return self.i_ref_voltage

    def measure(self, value: float) -> float:
        return self.amp_gain * self.shunt_r * value

    def invert(self, v_feedback: float) -> float:
        return v_feedback / (self.amp_gain * self.shunt_r)

    def with_setpoint(self, target: float) -> "CurrentSense":
        return replace(self, i_ref_voltage=self.amp_gain * self.shunt_r * target)


FeedbackNetwork = Union[AdjustableDivider, FixedDividerAdjustableRef, ZenerDrop, CurrentSense]


# ---------------------------------------------------------------------------
# Converter and attack source
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConverterSpec:
    topology: Topology
    v_in: float
    voltage_network: FeedbackNetwork
    current_network: FeedbackNetwork | None = None
    i_abs_max: float = math.inf         # hard device limit; output plateaus here
    v_abs_max: float = math.inf


@dataclass(frozen=True)
class AttackSource:
    """One transmitter: a pure tone at some power and distance.

    coupling_gain aggregates antenna gains and geometry into one constant, so
    received power is coupling_gain * power_tx / distance**2.
    """

    frequency: float        # hertz
    power_tx: float         # watts
    distance: float         # meters
    coupling_gain: float = 1.0

    def __post_init__(self) -> None:
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        if self.power_tx < 0:
            raise ValueError("power_tx must be non-negative")
        if self.distance <= 0:
            raise ValueError("distance must be positive")
        if self.coupling_gain <= 0:
            raise ValueError("coupling_gain must be positive")


# ---------------------------------------------------------------------------
# Loads
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Open:
    kind = "open"

    def current_at(self, v: float) -> float:
        return 0.0

    def voltage_at(self, i: float) -> float:
        return 0.0

    def open_circuit_voltage(self) -> float:
        return 0.0


@dataclass(frozen=True)
class ConstantResistance:
    r: float

    kind = "constant_resistance"

    def current_at(self, v: float) -> float:
        return v / self.r

    def voltage_at(self, i: float) -> float:
        return i * self.r

    def open_circuit_voltage(self) -> float:
        return 0.0


@dataclass(frozen=True)
class ConstantCurrent:
    """Electronic load sinking a fixed current whenever voltage is available.

    If the source cannot supply the demand its current limit wins and the
    terminal voltage collapses toward zero.
    """

    i: float

    kind = "constant_current"

    def current_at(self, v: float) -> float:
        return self.i

    def voltage_at(self, i: float) -> float:
        return 0.0

    def open_circuit_voltage(self) -> float:
        return 0.0


@dataclass(frozen=True)
class ConstantVoltage:
    """Electronic load clamping its terminals to a fixed voltage."""

    v: float

    kind = "constant_voltage"

    def current_at(self, v: float) -> float:
        return math.inf if v > self.v else 0.0

    def voltage_at(self, i: float) -> float:
        return self.v

    def open_circuit_voltage(self) -> float:
        return self.v


@dataclass(frozen=True)
class BatteryLoad:
    battery: BatteryState

    kind = "battery"

    def current_at(self, v: float) -> float:
        return (v - self.battery.ocv()) / self.battery.r_esr

    def voltage_at(self, i: float) -> float:
        return self.battery.ocv() + i * self.battery.r_esr

    def open_circuit_voltage(self) -> float:
        return self.battery.ocv()


@dataclass(frozen=True)
class BatterySimRig:
    """Bench stand-in for a battery: CV sink behind lead resistance, with a
    small parallel source so a charger sees a cell voltage when idle."""

    v_internal: float
    esr: float
    source_capability: float = 0.1      # amps the rig can source when idle

    kind = "battery_sim_rig"

    def current_at(self, v: float) -> float:
        return (v - self.v_internal) / self.esr

    def voltage_at(self, i: float) -> float:
        return self.v_internal + i * self.esr

    def open_circuit_voltage(self) -> float:
        return self.v_internal


LoadModel = Union[Open, ConstantResistance, ConstantCurrent, ConstantVoltage, BatteryLoad, BatterySimRig]


class LimitingMode(str, Enum):
    VOLTAGE_LIMITED = "voltage_limited"
    CURRENT_LIMITED = "current_limited"
    SATURATED = "saturated"
    OVERLOADED = "overloaded"


@dataclass(frozen=True)
class OperatingPoint:
    """Solved steady state: real output, what the converter believes, and
    which constraint is binding."""

    v_real: float
    i_real: float
    v_measured: float
    i_measured: float
    limiting_mode: LimitingMode


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.field}: {self.rule}"


def _validate_network(prefix: str, net: FeedbackNetwork) -> list[Violation]:
    out: list[Violation] = []
    if isinstance(net, (AdjustableDivider, FixedDividerAdjustableRef)):
        if not (0.0 < net.beta <= 1.0):
            out.append(Violation(f"{prefix}.beta", "beta must be in (0,1]"))
    if isinstance(net, ZenerDrop) and not net.v_z >= 0.0:
        out.append(Violation(f"{prefix}.v_z", "v_z must be >= 0"))
    if isinstance(net, CurrentSense):
        if not net.shunt_r > 0.0:
            out.append(Violation(f"{prefix}.shunt_r", "shunt_r must be > 0"))
        if not net.amp_gain > 0.0:
            out.append(Violation(f"{prefix}.amp_gain", "amp_gain must be > 0"))
    if net.polarity not in (1, -1):
        out.append(Violation(f"{prefix}.polarity", "polarity must be +1 or -1"))
    if math.isnan(net.reference):
        out.append(Violation(f"{prefix}.reference", "reference must be a number"))
    return out


def _nominal_setpoint(net: FeedbackNetwork) -> float | None:
    try:
        value = net.invert(net.reference)
    except ZeroDivisionError:
        return None
    return value if math.isfinite(value) else None


def validate_spec(spec: ConverterSpec) -> list[Violation]:
    """Check every structural invariant; violations are data, not errors.

    Returns an empty list for a valid spec.  Never raises for finite numeric
    field values.
    """
    out: list[Violation] = []
    out += _validate_network("voltage_network", spec.voltage_network)
    if isinstance(spec.voltage_network, CurrentSense):
        out.append(Violation("voltage_network", "voltage channel cannot use a current-sense network"))
    if spec.current_network is not None:
        out += _validate_network("current_network", spec.current_network)
        if not isinstance(spec.current_network, CurrentSense):
            out.append(Violation("current_network", "current channel requires a current-sense network"))
    if not spec.v_in > 0.0:
        out.append(Violation("v_in", "v_in must be > 0"))
    if not spec.i_abs_max > 0.0:
        out.append(Violation("i_abs_max", "i_abs_max must be > 0"))
    if not spec.v_abs_max > 0.0:
        out.append(Violation("v_abs_max", "v_abs_max must be > 0"))

    setpoint = _nominal_setpoint(spec.voltage_network)
    if setpoint is not None and spec.v_in > 0.0:
        if spec.topology is Topology.BUCK and setpoint > spec.v_in:
            out.append(Violation("voltage_network", "buck saturation: setpoint exceeds input voltage"))
        if spec.topology is Topology.BOOST and setpoint < spec.v_in:
            out.append(Violation("voltage_network", "boost saturation: setpoint below input voltage"))
        if setpoint > spec.v_abs_max:
            out.append(Violation("voltage_network", "setpoint exceeds v_abs_max"))
    return out


def validate_load(load: LoadModel) -> list[Violation]:
    """Structural checks for load parameters (all strictly positive)."""
    out: list[Violation] = []
    checks: dict[str, float] = {}
    if isinstance(load, ConstantResistance):
        checks["load.r"] = load.r
    elif isinstance(load, ConstantCurrent):
        checks["load.i"] = load.i
    elif isinstance(load, ConstantVoltage):
        checks["load.v"] = load.v
    elif isinstance(load, BatterySimRig):
        checks["load.v_internal"] = load.v_internal
        checks["load.esr"] = load.esr
    elif isinstance(load, BatteryLoad):
        checks["battery.capacity"] = load.battery.capacity
        checks["battery.r_esr"] = load.battery.r_esr
    for name, value in checks.items():
        if not value > 0.0:
            out.append(Violation(name, "must be > 0"))
    return out
