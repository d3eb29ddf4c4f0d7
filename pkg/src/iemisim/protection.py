"""Countermeasure models: feedback filters, resettable fuses, redundant
monitors, and a detection hook.

Filters attenuate the coupling coefficient (not the legitimate loop, which
the quasi-static solver has no dynamics for), and leak above a parasitic
floor.  PPTC fuses trip on sustained overcurrent and reset after cooling.
Redundant monitors watch their own (attackable) measurements and latch a
disconnect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .core import AttackSource
from .coupling import CouplingProfile, InjectionPoint, attack_offset


@dataclass(frozen=True)
class LowPassFilterModel:
    """First-order-style rolloff that stops attenuating at a parasitic floor.

    Real filters leak well above their rated cutoff; the floor caps total
    attenuation no matter how far above cutoff the attack sits.
    """

    cutoff: float                   # hertz
    rolloff_per_decade: float = 20.0    # dB
    parasitic_floor: float = 40.0       # dB, maximum attenuation ever reached

    def __post_init__(self) -> None:
        if self.cutoff <= 0:
            raise ValueError("cutoff must be positive")
        if self.rolloff_per_decade <= 0:
            raise ValueError("rolloff_per_decade must be positive")
        if self.parasitic_floor < 0:
            raise ValueError("parasitic_floor must be >= 0")


def filter_attenuation(filt: LowPassFilterModel, f: float) -> float:
    """Multiplicative factor in (0, 1] applied to kappa at frequency f."""
    if f <= 0:
        raise ValueError("frequency must be positive")
    if f <= filt.cutoff:
        return 1.0
    db = filt.rolloff_per_decade * math.log10(f / filt.cutoff)
    db = min(db, filt.parasitic_floor)
    return 10.0 ** (-db / 20.0)


class FuseState(str, Enum):
    CONDUCTING = "conducting"
    TRIPPED = "tripped"


@dataclass(frozen=True)
class PptcFuse:
    """Polymeric resettable fuse: trips on sustained current above i_trip,
    resets after the demand stays below i_hold for reset_delay.

    A thermal (one-shot) fuse is the same model with resettable=False.
    The step input is the current that would flow if the fuse conducted;
    while tripped the downstream current is capped at the leakage bound.
    """

    i_trip: float
    i_hold: float
    trip_delay: float = 1.0         # seconds of sustained overcurrent before tripping
    reset_delay: float | None = None    # defaults to trip_delay
    resettable: bool = True
    leakage: float = 1e-3           # amps through a tripped fuse
    state: FuseState = FuseState.CONDUCTING
    heat: float = 0.0               # internal: seconds spent above i_trip
    cool: float = 0.0               # internal: seconds spent below i_hold while tripped

    def __post_init__(self) -> None:
        if not self.i_hold < self.i_trip:
            raise ValueError("i_hold must be below i_trip")

    @property
    def effective_reset_delay(self) -> float:
        return self.trip_delay if self.reset_delay is None else self.reset_delay


def thermal_fuse(i_trip: float, trip_delay: float = 1.0) -> PptcFuse:
    """One-shot fuse: identical trip behavior, no reset path."""
    return PptcFuse(i_trip=i_trip, i_hold=i_trip / 2.0, trip_delay=trip_delay, resettable=False)


def pptc_step(fuse: PptcFuse, i: float, dt: float) -> PptcFuse:
    """Advance the fuse by dt seconds with demanded current i."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if fuse.state is FuseState.CONDUCTING:
        heat = fuse.heat + dt if i >= fuse.i_trip else 0.0
        if heat >= fuse.trip_delay:
            return replace(fuse, state=FuseState.TRIPPED, heat=0.0, cool=0.0)
        return replace(fuse, heat=heat)
    if not fuse.resettable:
        return fuse
    cool = fuse.cool + dt if i <= fuse.i_hold else 0.0
    if cool >= fuse.effective_reset_delay:
        return replace(fuse, state=FuseState.CONDUCTING, heat=0.0, cool=0.0)
    return replace(fuse, cool=cool)


def fused_current(fuse: PptcFuse, i: float) -> float:
    """Current actually delivered downstream of the fuse."""
    if fuse.state is FuseState.TRIPPED:
        return min(i, fuse.leakage)
    return i


class MonitorVerdict(str, Enum):
    PASS = "pass"
    DISCONNECT = "disconnect"


@dataclass(frozen=True)
class RedundantMonitor:
    """Independent protection circuit that opens a switch on over-voltage or
    over-current -- judged from its own measurements, which couple to the
    attacker through their own profile.  An empty profile is immune."""

    v_trip: float
    i_trip: float
    own_coupling: CouplingProfile = CouplingProfile((), InjectionPoint.PROTECTION_MONITOR)
    latched: bool = False

    def __post_init__(self) -> None:
        if self.v_trip <= 0 or self.i_trip <= 0:
            raise ValueError("monitor thresholds must be positive")


def monitor_step(
    mon: RedundantMonitor,
    real_v: float,
    real_i: float,
    src: AttackSource | None = None,
) -> tuple[RedundantMonitor, MonitorVerdict]:
    """Evaluate the monitor against one operating point; disconnect latches.

    The monitor's measurement offset applies to both of its channels (the
    model does not distinguish which of its sense wires resonates).
    """
    if mon.latched:
        return mon, MonitorVerdict.DISCONNECT
    offset = 0.0
    if src is not None and mon.own_coupling.peaks:
        offset = attack_offset(mon.own_coupling, src)
    measured_v = real_v + offset
    measured_i = real_i + offset
    if measured_v > mon.v_trip or measured_i > mon.i_trip:
        return replace(mon, latched=True), MonitorVerdict.DISCONNECT
    return mon, MonitorVerdict.PASS


@dataclass(frozen=True)
class AttackDetector:
    """Hook for cross-check detection schemes: raises an event when the
    sensor reading and an independent reference channel disagree by more
    than a threshold.  Detection only; it takes no action."""

    v_threshold: float = math.inf   # volts of measured-vs-reference disagreement
    i_threshold: float = math.inf   # amps

    def events(self, v_measured: float, v_reference: float, i_measured: float, i_reference: float) -> list[str]:
        out = []
        if abs(v_measured - v_reference) > self.v_threshold:
            out.append("attack_detected_voltage")
        if abs(i_measured - i_reference) > self.i_threshold:
            out.append("attack_detected_current")
        return out
