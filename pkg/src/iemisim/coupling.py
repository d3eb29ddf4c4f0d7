"""RF-to-offset coupling: how a transmission becomes a DC feedback offset.

A wire near the feedback comparison acts as a resonant receiving antenna;
the front-end nonlinearity squares the induced tone and the loop's low-pass
keeps only the DC term, so the injected offset is proportional to received
power with a signed, strongly frequency-dependent coefficient kappa(f).
Each injection point gets its own profile, a sum of Lorentzian peaks.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .core import AttackSource


class InjectionPoint(str, Enum):
    VOLTAGE_FEEDBACK = "voltage"
    CURRENT_FEEDBACK = "current"
    PROTECTION_MONITOR = "monitor"


@dataclass(frozen=True)
class ResonancePeak:
    center_freq: float      # hertz
    quality_q: float
    peak_kappa: float       # volts*m^2/watt, signed

    def __post_init__(self) -> None:
        if self.center_freq <= 0:
            raise ValueError("center_freq must be positive")
        if self.quality_q <= 0:
            raise ValueError("quality_q must be positive")


@dataclass(frozen=True)
class CouplingProfile:
    """Resonance response of one injection point.

    An empty peak tuple means the point is immune (seen in practice: some
    devices show no measurable response anywhere in the swept band).
    """

    peaks: tuple[ResonancePeak, ...] = ()
    injection_point: InjectionPoint = InjectionPoint.VOLTAGE_FEEDBACK


def received_power(src: AttackSource) -> float:
    """Power picked up by the victim wire: coupling_gain * P_tx / d^2."""
    if src.distance <= 0:
        raise ValueError("distance must be positive")
    return src.coupling_gain * src.power_tx / (src.distance * src.distance)


def demodulated_offset(amplitude: float, c: float) -> float:
    """DC term left after a quadratic nonlinearity and low-pass: c * A^2 / 4.

    The sign of c alone fixes the offset direction; power only scales it.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    return c * amplitude * amplitude / 4.0


def kappa_at(profile: CouplingProfile, f: float) -> float:
    """Signed coupling coefficient at frequency f (volts per received watt).

    Sum of Lorentzians in normalized detuning; each peak contributes exactly
    its peak_kappa at its own center frequency.
    """
    if f <= 0:
        raise ValueError("frequency must be positive")
    total = 0.0
    for peak in profile.peaks:
        detune = f / peak.center_freq - peak.center_freq / f
        total += peak.peak_kappa / (1.0 + peak.quality_q * peak.quality_q * detune * detune)
    return total


def attack_offset(profile: CouplingProfile, src: AttackSource) -> float:
    """DC offset (volts) injected at the feedback comparison point.

    Linear in transmit power, inverse-square in distance; the sign comes
    from kappa alone.
    """
    return kappa_at(profile, src.frequency) * received_power(src)


def calibrate_kappa(observed_offset: float, src: AttackSource) -> float:
    """Invert attack_offset: the kappa that reproduces an observed offset."""
    power = received_power(src)
    if power <= 0:
        raise ValueError("received power must be positive to calibrate")
    return observed_offset / power
