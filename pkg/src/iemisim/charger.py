"""CC-CV battery charger state machine.

The charger is a current/voltage-limited supply stepped by *measured*
voltage and current: every phase transition and protection check uses the
values its (attackable) sensors report, never the real ones.  Deeply
depleted packs get a reduced precharge current first; charging ends when the
measured current in the constant-voltage phase drops to the cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from .equilibrium import RegulationCommand


class PhaseName(str, Enum):
    IDLE = "idle"
    PRECHARGE = "precharge"
    CONSTANT_CURRENT = "constant_current"
    CONSTANT_VOLTAGE = "constant_voltage"
    DONE = "done"
    FAULTED = "faulted"


@dataclass(frozen=True)
class ChargerPhase:
    name: PhaseName
    fault_reason: str = ""

    @property
    def is_terminal(self) -> bool:
        return self.name in (PhaseName.DONE, PhaseName.FAULTED)


IDLE = ChargerPhase(PhaseName.IDLE)
PRECHARGE = ChargerPhase(PhaseName.PRECHARGE)
CONSTANT_CURRENT = ChargerPhase(PhaseName.CONSTANT_CURRENT)
CONSTANT_VOLTAGE = ChargerPhase(PhaseName.CONSTANT_VOLTAGE)
DONE = ChargerPhase(PhaseName.DONE)


def faulted(reason: str) -> ChargerPhase:
    return ChargerPhase(PhaseName.FAULTED, reason)


@dataclass(frozen=True)
class OverVoltage:
    threshold: float

    kind = "over_voltage"

    def check(self, v_measured: float, i_measured: float, t_measured: float) -> str | None:
        return "over_voltage" if v_measured > self.threshold else None


@dataclass(frozen=True)
class OverCurrent:
    threshold: float

    kind = "over_current"

    def check(self, v_measured: float, i_measured: float, t_measured: float) -> str | None:
        return "over_current" if i_measured > self.threshold else None


@dataclass(frozen=True)
class OverTemperature:
    threshold: float    # kelvin

    kind = "over_temperature"

    def check(self, v_measured: float, i_measured: float, t_measured: float) -> str | None:
        return "over_temperature" if t_measured > self.threshold else None


ChargerProtection = Union[OverVoltage, OverCurrent, OverTemperature]


@dataclass(frozen=True)
class ChargerConfig:
    i_precharge: float
    v_precharge_threshold: float    # per cell
    i_cc: float
    v_cv: float                     # per cell
    i_terminate: float
    cells_in_series: int = 1
    protections: tuple[ChargerProtection, ...] = ()
    power_ceiling: float | None = None  # watts; exceeding it reboots the charger

    def __post_init__(self) -> None:
        if not self.i_precharge < self.i_cc:
            raise ValueError("i_precharge must be below i_cc")
        if not self.i_terminate < self.i_cc:
            raise ValueError("i_terminate must be below i_cc")
        if not self.v_precharge_threshold < self.v_cv:
            raise ValueError("v_precharge_threshold must be below v_cv")
        for name in ("i_precharge", "v_precharge_threshold", "i_cc", "v_cv", "i_terminate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.cells_in_series < 1:
            raise ValueError("cells_in_series must be >= 1")

    @property
    def pack_v_cv(self) -> float:
        return self.v_cv * self.cells_in_series

    @property
    def pack_precharge_threshold(self) -> float:
        return self.v_precharge_threshold * self.cells_in_series


_OFF = RegulationCommand(0.0, 0.0)


def charger_step(
    cfg: ChargerConfig,
    phase: ChargerPhase,
    v_measured: float,
    i_measured: float,
    t_measured: float,
) -> tuple[ChargerPhase, RegulationCommand]:
    """Advance the FSM one step on measured inputs and emit the new command.

    At most one transition per step (idle may jump straight to constant
    current for a pack above the precharge threshold).  Protections trip to
    a latched faulted state; done and faulted command zero output.
    """
    if phase.is_terminal:
        return phase, _OFF

    for protection in cfg.protections:
        reason = protection.check(v_measured, i_measured, t_measured)
        if reason is not None:
            return faulted(reason), _OFF

    name = phase.name
    if name is PhaseName.IDLE:
        name = (
            PhaseName.PRECHARGE
            if v_measured < cfg.pack_precharge_threshold
            else PhaseName.CONSTANT_CURRENT
        )
    elif name is PhaseName.PRECHARGE:
        if v_measured >= cfg.pack_precharge_threshold:
            name = PhaseName.CONSTANT_CURRENT
    elif name is PhaseName.CONSTANT_CURRENT:
        if v_measured >= cfg.pack_v_cv:
            name = PhaseName.CONSTANT_VOLTAGE
    elif name is PhaseName.CONSTANT_VOLTAGE:
        if i_measured <= cfg.i_terminate:
            name = PhaseName.DONE

    if name is PhaseName.DONE:
        return DONE, _OFF
    if name is PhaseName.PRECHARGE:
        return PRECHARGE, RegulationCommand(cfg.pack_v_cv, cfg.i_precharge)
    if name is PhaseName.CONSTANT_CURRENT:
        return CONSTANT_CURRENT, RegulationCommand(cfg.pack_v_cv, cfg.i_cc)
    return CONSTANT_VOLTAGE, RegulationCommand(cfg.pack_v_cv, cfg.i_cc)
