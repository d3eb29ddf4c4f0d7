"""Steady-state solver for a feedback-regulated converter under attack.

The regulator holds its feedback voltage equal to the reference.  An offset
injected at the comparison therefore shifts the regulated setpoint to
f^-1(reference - polarity * offset).  The converter then drives the highest
output voltage whose load current stays within the (equally attackable)
current limit; whichever constraint binds defines the operating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .core import (
    ConstantVoltage,
    ConverterSpec,
    FeedbackNetwork,
    LimitingMode,
    LoadModel,
    OperatingPoint,
    Topology,
)


class ShutdownSignal(Exception):
    """The attacked reference left the network's invertible range; the
    regulator cuts its output rather than regulate to a negative target."""


class NoOperatingPoint(Exception):
    """Load characteristic and converter limits do not intersect."""


@dataclass(frozen=True)
class RegulationCommand:
    """Effective (possibly attacked) setpoints before saturation clamps."""

    v_limit_effective: float
    i_limit_effective: float


def measure(network: FeedbackNetwork, real_value: float) -> float:
    """Feedback voltage produced by the raw network map (polarity excluded)."""
    return network.measure(real_value)


def regulated_setpoint(network: FeedbackNetwork, v_attack: float = 0.0) -> float:
    """Output value the loop settles to when v_attack rides on the comparison.

    Raises ShutdownSignal when the attacked target falls below the network's
    operating range (the regulator turns the output off).
    """
    target_feedback = network.reference - network.polarity * v_attack
    setpoint = network.invert(target_feedback)
    if setpoint < 0.0:
        raise ShutdownSignal(
            f"attacked reference {target_feedback!r} V implies negative setpoint"
        )
    return setpoint


def perceived_value(network: FeedbackNetwork, real_value: float, v_attack: float = 0.0) -> float:
    """What the regulator believes the output is, in output units."""
    return network.invert(network.measure(real_value) + network.polarity * v_attack)


def effective_command(
    spec: ConverterSpec, v_attack_voltage: float = 0.0, v_attack_current: float = 0.0
) -> RegulationCommand:
    """Attacked voltage/current setpoints, before topology or device clamps."""
    v_limit = regulated_setpoint(spec.voltage_network, v_attack_voltage)
    if spec.current_network is not None:
        i_limit = regulated_setpoint(spec.current_network, v_attack_current)
    else:
        i_limit = math.inf
    return RegulationCommand(v_limit, i_limit)


def solve_operating_point(
    spec: ConverterSpec,
    load: LoadModel,
    v_attack_voltage: float = 0.0,
    v_attack_current: float = 0.0,
) -> OperatingPoint:
    """Solve the unique steady state of converter + load under attack.

    The voltage limit is tried first; if the load would then draw more than
    the current limit the point switches to current-limited (ties report
    current-limited).  Topology constraints clamp the voltage limit
    (saturated), and the hard device limit i_abs_max caps the current limit
    (overloaded: the plateaus seen when an attack exceeds what the device
    can deliver).  Loads cannot push current back into the converter;
    negative solutions clamp to zero current.
    """
    command = effective_command(spec, v_attack_voltage, v_attack_current)
    v_limit, i_limit = command.v_limit_effective, command.i_limit_effective

    v_saturated = False
    if spec.topology is Topology.BUCK and v_limit > spec.v_in:
        v_limit, v_saturated = spec.v_in, True
    elif spec.topology is Topology.BOOST and v_limit < spec.v_in:
        v_limit, v_saturated = spec.v_in, True
    if v_limit > spec.v_abs_max:
        v_limit, v_saturated = spec.v_abs_max, True

    overloaded = i_limit > spec.i_abs_max
    i_cap = min(i_limit, spec.i_abs_max)

    if isinstance(load, ConstantVoltage):
        if load.v > v_limit:
            raise NoOperatingPoint(
                f"constant-voltage load at {load.v} V exceeds the {v_limit} V limit"
            )
        v_real, i_real = load.v, i_cap
        mode = LimitingMode.OVERLOADED if overloaded else LimitingMode.CURRENT_LIMITED
    else:
        i_demand = load.current_at(v_limit)
        if i_demand < 0.0:
            # Load's open-circuit voltage sits above the limit; no current flows.
            v_real, i_real = load.open_circuit_voltage(), 0.0
            mode = LimitingMode.SATURATED
        elif i_demand < i_cap:
            v_real, i_real = v_limit, i_demand
            mode = LimitingMode.SATURATED if v_saturated else LimitingMode.VOLTAGE_LIMITED
        else:
            i_real = i_cap
            v_real = load.voltage_at(i_real)
            mode = LimitingMode.OVERLOADED if overloaded else LimitingMode.CURRENT_LIMITED

    v_measured = perceived_value(spec.voltage_network, v_real, v_attack_voltage)
    if spec.current_network is not None:
        i_measured = perceived_value(spec.current_network, i_real, v_attack_current)
    else:
        i_measured = i_real
    return OperatingPoint(v_real, i_real, v_measured, i_measured, mode)


def command_converter(spec: ConverterSpec, command: RegulationCommand) -> ConverterSpec:
    """Retune the converter's references so its nominal setpoints equal the
    command (how a charger drives its power stage)."""
    voltage_network = spec.voltage_network.with_setpoint(command.v_limit_effective)
    current_network = spec.current_network
    if current_network is not None and math.isfinite(command.i_limit_effective):
        current_network = current_network.with_setpoint(command.i_limit_effective)
    return replace(spec, voltage_network=voltage_network, current_network=current_network)
