"""Thevenin-equivalent lithium cell with charge, heat, and failure dynamics.

The cell is an ideal voltage source behind a series resistance.  Charge
current follows I = (V_charger - V_cell) / R_esr, state of charge is coulomb
counted, and a first-order lumped thermal model accumulates resistive plus
overcharge heat against ambient dissipation.  Damage is modeled as a state
ladder (nominal -> bulged -> failed / thermal runaway) that never recovers.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, replace
from enum import Enum


class BatteryHealth(str, Enum):
    NOMINAL = "nominal"
    BULGED = "bulged"
    FAILED = "failed"
    THERMAL_RUNAWAY = "thermal_runaway"


_HEALTH_RANK = {
    BatteryHealth.NOMINAL: 0,
    BatteryHealth.BULGED: 1,
    BatteryHealth.FAILED: 2,
    BatteryHealth.THERMAL_RUNAWAY: 3,
}


@dataclass(frozen=True)
class OcvCurve:
    """Strictly increasing piecewise-linear map from state of charge to volts.

    Above the last knot the final segment slope is continued, so overcharge
    states (soc > 1) keep raising the cell voltage.  Below the first knot the
    initial slope is continued symmetrically.
    """

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.knots) < 2:
            raise ValueError("ocv curve needs at least two knots")
        socs = [s for s, _ in self.knots]
        volts = [v for _, v in self.knots]
        if any(b <= a for a, b in zip(socs, socs[1:])):
            raise ValueError("ocv knots must be strictly increasing in soc")
        if any(b <= a for a, b in zip(volts, volts[1:])):
            raise ValueError("ocv curve must be strictly increasing in volts")

    def __call__(self, soc: float) -> float:
        socs = [s for s, _ in self.knots]
        idx = bisect.bisect_right(socs, soc) - 1
        idx = max(0, min(idx, len(self.knots) - 2))
        (s0, v0), (s1, v1) = self.knots[idx], self.knots[idx + 1]
        return v0 + (v1 - v0) * (soc - s0) / (s1 - s0)


#: Generic Li-ion shape; real cells override per config.
DEFAULT_OCV_CURVE = OcvCurve(((0.0, 3.0), (0.1, 3.5), (0.9, 4.0), (1.0, 4.2)))

KELVIN_0C = 273.15

# Failure-timing constants below (thermal_mass, dissipation, overcharge_heat,
# tau_bulge, collapse_rate) are fitted to a single destructive overcharge
# timeline, not datasheet values.  See tests/test_acceptance.py.
_DEFAULT_THERMAL_MASS = 40.0
_DEFAULT_DISSIPATION = 0.05
_DEFAULT_OVERCHARGE_HEAT = 3.24


@dataclass(frozen=True)
class BatteryState:
    """One cell's electrical, thermal, and health state.

    All step functions return new values; instances are never mutated.
    """

    capacity: float                     # coulombs
    soc: float
    ocv_curve: OcvCurve = DEFAULT_OCV_CURVE
    r_esr: float = 0.066                # ohms
    temperature: float = 293.15         # kelvin
    t_ambient: float = 293.15
    thermal_mass: float = _DEFAULT_THERMAL_MASS     # joules/kelvin
    dissipation: float = _DEFAULT_DISSIPATION       # watts/kelvin
    v_fail: float = 4.3                 # sustained cell volts above this bulge the can
    t_runaway: float = 120.0 + KELVIN_0C
    t_collapse: float = 80.0 + KELVIN_0C
    tau_bulge: float = 300.0            # seconds above v_fail before bulging
    overcharge_heat: float = _DEFAULT_OVERCHARGE_HEAT   # watts per (volt over v_fail * amp)
    collapse_rate: float = 0.02         # volts/second of forced ocv decay once failed
    health: BatteryHealth = BatteryHealth.NOMINAL
    time_over_v_fail: float = 0.0       # internal accumulator
    collapse_drop: float = 0.0          # internal accumulator

    def ocv(self) -> float:
        """Effective open-circuit voltage, including post-failure collapse."""
        return max(0.0, self.ocv_curve(self.soc) - self.collapse_drop)


def charge_current(v_charger: float, battery: BatteryState) -> float:
    """Current into the cell when an external voltage is applied.

    Negative values mean the cell discharges into the source.
    """
    return (v_charger - battery.ocv()) / battery.r_esr


def terminal_voltage(battery: BatteryState, i: float) -> float:
    """Voltage at the cell terminals while current i flows in."""
    return battery.ocv() + i * battery.r_esr


def step(battery: BatteryState, i: float, dt: float) -> BatteryState:
    """Advance the cell by dt seconds at constant current i (forward Euler).

    Heat input is resistive loss plus an overcharge term proportional to how
    far the cell voltage sits above v_fail; temperature relaxes toward
    ambient through the dissipation coefficient.  Health transitions are
    one-way: failure states are never left, a failed cell's voltage decays at
    collapse_rate until it is fully dead.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")

    soc = battery.soc + i * dt / battery.capacity
    raw_ocv = battery.ocv_curve(soc)
    over_v = max(0.0, raw_ocv - battery.v_fail)

    heat = i * i * battery.r_esr * dt
    heat += battery.overcharge_heat * over_v * max(i, 0.0) * dt
    cooling = battery.dissipation * (battery.temperature - battery.t_ambient) * dt
    temperature = battery.temperature + (heat - cooling) / battery.thermal_mass

    effective_ocv = max(0.0, raw_ocv - battery.collapse_drop)
    time_over = battery.time_over_v_fail + dt if effective_ocv > battery.v_fail else 0.0

    health = battery.health
    if temperature >= battery.t_runaway:
        health = _escalate(health, BatteryHealth.THERMAL_RUNAWAY)
    if health == BatteryHealth.BULGED and temperature >= battery.t_collapse:
        health = _escalate(health, BatteryHealth.FAILED)
    if health == BatteryHealth.NOMINAL and time_over >= battery.tau_bulge:
        health = _escalate(health, BatteryHealth.BULGED)

    # Collapse keeps accruing once started, even if the cell later escalates
    # from failed to thermal runaway.
    collapse_drop = battery.collapse_drop
    if health == BatteryHealth.FAILED or collapse_drop > 0.0:
        collapse_drop += battery.collapse_rate * dt

    return replace(
        battery,
        soc=soc,
        temperature=temperature,
        health=health,
        time_over_v_fail=time_over,
        collapse_drop=collapse_drop,
    )


def _escalate(current: BatteryHealth, target: BatteryHealth) -> BatteryHealth:
    return target if _HEALTH_RANK[target] > _HEALTH_RANK[current] else current
