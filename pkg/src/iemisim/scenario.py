"""Scenario engine: executable experiments over the component models.

A scenario wires a converter (optionally driven by a charger FSM), a load or
battery, per-injection-point coupling profiles, protections, and an attack
into either a sweep (frequency, power, or distance) or a time-domain run.
Sweep points are independent quasi-static solves and may be evaluated in
parallel; time-domain steps are strictly sequential.  Identical configs
produce bit-identical record streams regardless of thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

from . import battery as battery_model
from .battery import BatteryHealth, BatteryState
from .charger import IDLE, ChargerConfig, ChargerPhase, PhaseName, charger_step, faulted
from .core import AttackSource, BatteryLoad, ConverterSpec, LoadModel
from .coupling import CouplingProfile, InjectionPoint, attack_offset
from .equilibrium import (
    NoOperatingPoint,
    RegulationCommand,
    ShutdownSignal,
    command_converter,
    effective_command,
    perceived_value,
    solve_operating_point,
)
from .protection import (
    AttackDetector,
    FuseState,
    LowPassFilterModel,
    MonitorVerdict,
    PptcFuse,
    RedundantMonitor,
    filter_attenuation,
    fused_current,
    monitor_step,
    pptc_step,
)

_AMBIENT_K = 293.15
_COLLAPSE_FLOOR_V = 0.05


class CalibrationAmbiguous(Exception):
    """The target responds non-monotonically to the calibration knob."""


class CalibrationUnreachable(Exception):
    """The response saturates before reaching the requested target."""


class SweepVariable(str, Enum):
    FREQUENCY = "frequency"
    POWER = "power"
    DISTANCE = "distance"


@dataclass(frozen=True)
class SweepSpec:
    variable: SweepVariable
    start: float
    stop: float
    points: int = 2048
    spacing: str = "log"    # linear | log

    def __post_init__(self) -> None:
        if self.start <= 0 or self.stop <= 0:
            raise ValueError("sweep bounds must be positive")
        if not self.start < self.stop:
            raise ValueError("sweep start must be below stop")
        if self.points < 2:
            raise ValueError("sweep needs at least 2 points")
        if self.spacing not in ("linear", "log"):
            raise ValueError("spacing must be 'linear' or 'log'")

    def values(self) -> list[float]:
        n = self.points
        if self.spacing == "linear":
            step = (self.stop - self.start) / (n - 1)
            out = [self.start + k * step for k in range(n)]
        else:
            lo, hi = math.log(self.start), math.log(self.stop)
            step = (hi - lo) / (n - 1)
            out = [math.exp(lo + k * step) for k in range(n)]
        out[0], out[-1] = self.start, self.stop
        return out


@dataclass(frozen=True)
class AttackStep:
    """Schedule entry: from time t onward this source is active."""

    t: float
    source: AttackSource


@dataclass(frozen=True)
class Scenario:
    converter: ConverterSpec
    load: LoadModel
    coupling: dict[InjectionPoint, CouplingProfile] = field(default_factory=dict)
    filters: dict[InjectionPoint, LowPassFilterModel] = field(default_factory=dict)
    charger: ChargerConfig | None = None
    attack: AttackSource | None = None
    schedule: tuple[AttackStep, ...] = ()
    sweep: SweepSpec | None = None
    duration: float = 0.0
    dt: float = 0.1
    pptc: PptcFuse | None = None
    monitor: RedundantMonitor | None = None
    detector: AttackDetector | None = None
    shield_factor: float = 1.0      # scalar kappa multiplier (shielding)
    seed: int = 0
    label: str = ""


@dataclass(frozen=True)
class ScenarioRecord:
    """One sweep point or one time step."""

    sweep_or_time: float
    frequency_hz: float
    power_w: float
    distance_m: float
    v_real: float
    i_real: float
    v_measured: float
    i_measured: float
    phase: str              # charger phase, "" without a charger
    mode: str               # limiting mode, "" when the solve failed
    soc: float              # nan without a battery
    temperature: float      # kelvin, nan without a battery
    health: str             # "" without a battery
    events: str             # semicolon-joined event tokens


# ---------------------------------------------------------------------------
# Offsets and single-point solving
# ---------------------------------------------------------------------------


def channel_offsets(scenario: Scenario, src: AttackSource | None) -> tuple[float, float]:
    """Injected feedback offsets (voltage channel, current channel) for src."""
    if src is None:
        return 0.0, 0.0
    return (
        _point_offset(scenario, src, InjectionPoint.VOLTAGE_FEEDBACK),
        _point_offset(scenario, src, InjectionPoint.CURRENT_FEEDBACK),
    )


def _point_offset(scenario: Scenario, src: AttackSource, point: InjectionPoint) -> float:
    profile = scenario.coupling.get(point)
    if profile is None or not profile.peaks:
        return 0.0
    offset = attack_offset(profile, src) * scenario.shield_factor
    filt = scenario.filters.get(point)
    if filt is not None:
        offset *= filter_attenuation(filt, src.frequency)
    return offset


def _battery_fields(load: LoadModel) -> tuple[float, float, str]:
    if isinstance(load, BatteryLoad):
        b = load.battery
        return b.soc, b.temperature, b.health.value
    return math.nan, math.nan, ""


def _src_fields(src: AttackSource | None) -> tuple[float, float, float]:
    if src is None:
        return 0.0, 0.0, 0.0
    return src.frequency, src.power_tx, src.distance


def solve_record(
    scenario: Scenario,
    src: AttackSource | None,
    sweep_value: float,
    phase: ChargerPhase | None = None,
    command: RegulationCommand | None = None,
) -> ScenarioRecord:
    """Quasi-static solve of one point, with solver errors turned into events."""
    events: list[str] = []
    spec = scenario.converter
    if command is not None:
        spec = command_converter(spec, command)
    va_v, va_i = channel_offsets(scenario, src)
    try:
        pt = solve_operating_point(spec, scenario.load, va_v, va_i)
        v_real, i_real = pt.v_real, pt.i_real
        v_meas, i_meas = pt.v_measured, pt.i_measured
        mode = pt.limiting_mode.value
    except ShutdownSignal:
        v_real = i_real = v_meas = i_meas = 0.0
        mode = ""
        events.append("shutdown")
    except NoOperatingPoint:
        v_real = i_real = v_meas = i_meas = 0.0
        mode = ""
        events.append("no_operating_point")
    if scenario.detector is not None:
        events += scenario.detector.events(v_meas, v_real, i_meas, i_real)
    soc, temp, health = _battery_fields(scenario.load)
    freq, power, dist = _src_fields(src)
    return ScenarioRecord(
        sweep_or_time=sweep_value,
        frequency_hz=freq,
        power_w=power,
        distance_m=dist,
        v_real=v_real,
        i_real=i_real,
        v_measured=v_meas,
        i_measured=i_meas,
        phase=phase.name.value if phase is not None else "",
        mode=mode,
        soc=soc,
        temperature=temp,
        health=health,
        events=";".join(events),
    )


def steady_charger_state(scenario: Scenario) -> tuple[ChargerPhase, RegulationCommand]:
    """Phase and command the charger settles into with no attack applied.

    Sweeps against a charger hold this state fixed across points, matching a
    bench sweep against a charger sitting in a steady phase.
    """
    cfg = scenario.charger
    assert cfg is not None
    v_meas = scenario.load.open_circuit_voltage()
    i_meas = 0.0
    phase: ChargerPhase = IDLE
    command = RegulationCommand(0.0, 0.0)
    for _ in range(6):
        new_phase, command = charger_step(cfg, phase, v_meas, i_meas, _AMBIENT_K)
        if new_phase.is_terminal:
            return new_phase, command
        pt = solve_operating_point(
            command_converter(scenario.converter, command), scenario.load
        )
        v_meas, i_meas = pt.v_measured, pt.i_measured
        if new_phase == phase:
            break
        phase = new_phase
    return phase, command


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def _run_parallel(fn: Callable[[float], ScenarioRecord], values: list[float], threads: int) -> list[ScenarioRecord]:
    if threads <= 1:
        return [fn(v) for v in values]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, values))


def _sweep_base(scenario: Scenario, variable: SweepVariable) -> tuple[AttackSource, ChargerPhase | None, RegulationCommand | None]:
    if scenario.sweep is None or scenario.sweep.variable is not variable:
        raise ValueError(f"scenario is not configured for a {variable.value} sweep")
    if scenario.attack is None:
        raise ValueError("sweep scenarios need an attack source")
    phase = command = None
    if scenario.charger is not None:
        phase, command = steady_charger_state(scenario)
    return scenario.attack, phase, command


def run_frequency_sweep(scenario: Scenario, threads: int = 1) -> list[ScenarioRecord]:
    base, phase, command = _sweep_base(scenario, SweepVariable.FREQUENCY)

    def point(f: float) -> ScenarioRecord:
        return solve_record(scenario, replace(base, frequency=f), f, phase, command)

    return _run_parallel(point, scenario.sweep.values(), threads)


def run_power_sweep(scenario: Scenario, threads: int = 1) -> list[ScenarioRecord]:
    base, phase, command = _sweep_base(scenario, SweepVariable.POWER)

    def point(p: float) -> ScenarioRecord:
        return solve_record(scenario, replace(base, power_tx=p), p, phase, command)

    return _run_parallel(point, scenario.sweep.values(), threads)


def run_distance_sweep(scenario: Scenario, threads: int = 1) -> list[ScenarioRecord]:
    base, phase, command = _sweep_base(scenario, SweepVariable.DISTANCE)

    def point(d: float) -> ScenarioRecord:
        return solve_record(scenario, replace(base, distance=d), d, phase, command)

    return _run_parallel(point, scenario.sweep.values(), threads)


def run_sweep(scenario: Scenario, threads: int = 1) -> list[ScenarioRecord]:
    """Dispatch on the configured sweep variable."""
    if scenario.sweep is None:
        raise ValueError("scenario has no sweep section")
    runner = {
        SweepVariable.FREQUENCY: run_frequency_sweep,
        SweepVariable.POWER: run_power_sweep,
        SweepVariable.DISTANCE: run_distance_sweep,
    }[scenario.sweep.variable]
    return runner(scenario, threads)


# ---------------------------------------------------------------------------
# Time domain
# ---------------------------------------------------------------------------


def _source_at(scenario: Scenario, t: float) -> AttackSource | None:
    active = scenario.attack
    for step in scenario.schedule:
        if step.t <= t:
            active = step.source
        else:
            break
    return active


def run_timeline(scenario: Scenario) -> list[ScenarioRecord]:
    """Step the full system through time at fixed dt.

    Each step: advance the charger FSM on last step's measured values, solve
    the quasi-static operating point under the scheduled attack, apply fuse
    and monitor protections to the delivered current, then integrate the
    battery.  The run stops at charger done/fault, thermal runaway, a fully
    collapsed failed cell, or the configured duration.
    """
    if scenario.dt <= 0:
        raise ValueError("dt must be positive")
    if scenario.duration <= 0:
        raise ValueError("duration must be positive")

    cfg = scenario.charger
    battery = scenario.load.battery if isinstance(scenario.load, BatteryLoad) else None
    pptc, monitor = scenario.pptc, scenario.monitor
    phase: ChargerPhase | None = IDLE if cfg is not None else None
    v_meas_prev = scenario.load.open_circuit_voltage()
    i_meas_prev = 0.0

    records: list[ScenarioRecord] = []
    steps = int(round(scenario.duration / scenario.dt))
    for k in range(steps):
        t = k * scenario.dt
        src = _source_at(scenario, t)
        events: list[str] = []
        command: RegulationCommand | None = None

        if cfg is not None:
            t_meas = battery.temperature if battery is not None else _AMBIENT_K
            phase, command = charger_step(cfg, phase, v_meas_prev, i_meas_prev, t_meas)
            if phase.name is PhaseName.FAULTED:
                events.append(f"fault:{phase.fault_reason}")
            if phase.is_terminal:
                records.append(_off_record(scenario, t, src, phase, battery, events))
                break

        load = BatteryLoad(battery) if battery is not None else scenario.load
        spec = scenario.converter if command is None else command_converter(scenario.converter, command)
        va_v, va_i = channel_offsets(scenario, src)

        if cfg is not None and cfg.power_ceiling is not None:
            try:
                eff = effective_command(spec, va_v, va_i)
                commanded_power = eff.v_limit_effective * min(eff.i_limit_effective, scenario.converter.i_abs_max)
            except ShutdownSignal:
                commanded_power = 0.0
            if commanded_power > cfg.power_ceiling:
                phase = faulted("overload")
                events.append("fault:overload")
                records.append(_off_record(scenario, t, src, phase, battery, events))
                break

        mode = ""
        try:
            pt = solve_operating_point(spec, load, va_v, va_i)
            v_real, i_real = pt.v_real, pt.i_real
            v_meas, i_meas = pt.v_measured, pt.i_measured
            mode = pt.limiting_mode.value
        except ShutdownSignal:
            v_real = i_real = v_meas = i_meas = 0.0
            events.append("shutdown")
        except NoOperatingPoint:
            v_real = i_real = v_meas = i_meas = 0.0
            events.append("no_operating_point")

        if pptc is not None:
            before = pptc.state
            pptc = pptc_step(pptc, i_real, scenario.dt)
            if pptc.state is not before:
                events.append("pptc_tripped" if pptc.state is FuseState.TRIPPED else "pptc_reset")
            if pptc.state is FuseState.TRIPPED:
                i_real = fused_current(pptc, i_real)
                if battery is not None:
                    v_real = battery_model.terminal_voltage(battery, i_real)
                i_meas = _re_measure_current(spec, i_real, va_i)

        if monitor is not None:
            was_latched = monitor.latched
            monitor, verdict = monitor_step(monitor, v_real, i_real, src)
            if verdict is MonitorVerdict.DISCONNECT:
                if not was_latched:
                    events.append("monitor_disconnect")
                i_real = 0.0
                if battery is not None:
                    v_real = battery_model.terminal_voltage(battery, 0.0)
                i_meas = _re_measure_current(spec, i_real, va_i)

        if scenario.detector is not None:
            events += scenario.detector.events(v_meas, v_real, i_meas, i_real)

        if battery is not None:
            battery = battery_model.step(battery, i_real, scenario.dt)

        soc, temp, health = _battery_fields(BatteryLoad(battery) if battery is not None else scenario.load)
        freq, power, dist = _src_fields(src)
        records.append(
            ScenarioRecord(
                sweep_or_time=t,
                frequency_hz=freq,
                power_w=power,
                distance_m=dist,
                v_real=v_real,
                i_real=i_real,
                v_measured=v_meas,
                i_measured=i_meas,
                phase=phase.name.value if phase is not None else "",
                mode=mode,
                soc=soc,
                temperature=temp,
                health=health,
                events=";".join(events),
            )
        )
        v_meas_prev, i_meas_prev = v_meas, i_meas

        if battery is not None:
            if battery.health is BatteryHealth.THERMAL_RUNAWAY:
                break
            # A failed cell keeps stepping until its voltage has fully
            # collapsed, so the timeline captures the failure signature.
            if battery.health is BatteryHealth.FAILED and battery.ocv() <= _COLLAPSE_FLOOR_V:
                break
    return records


def _re_measure_current(spec: ConverterSpec, i_real: float, va_i: float) -> float:
    if spec.current_network is None:
        return i_real
    return perceived_value(spec.current_network, i_real, va_i)


def _off_record(
    scenario: Scenario,
    t: float,
    src: AttackSource | None,
    phase: ChargerPhase,
    battery: BatteryState | None,
    events: list[str],
) -> ScenarioRecord:
    if battery is not None:
        v_real = battery_model.terminal_voltage(battery, 0.0)
        soc, temp, health = battery.soc, battery.temperature, battery.health.value
    else:
        v_real = scenario.load.open_circuit_voltage()
        soc, temp, health = math.nan, math.nan, ""
    freq, power, dist = _src_fields(src)
    return ScenarioRecord(
        sweep_or_time=t,
        frequency_hz=freq,
        power_w=power,
        distance_m=dist,
        v_real=v_real,
        i_real=0.0,
        v_measured=v_real,
        i_measured=0.0,
        phase=phase.name.value,
        mode="",
        soc=soc,
        temperature=temp,
        health=health,
        events=";".join(events),
    )


def run_charging_attack(scenario: Scenario) -> list[ScenarioRecord]:
    """Time-domain charging run; requires a charger and a battery load."""
    if scenario.charger is None:
        raise ValueError("charging runs need a [charger] section")
    if not isinstance(scenario.load, BatteryLoad):
        raise ValueError("charging runs need a battery load")
    return run_timeline(scenario)


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationTarget:
    """Desired record value at the scenario's base attack point.

    field is one of v_real, i_real, delta_v, delta_i; delta fields are
    relative to the unattacked baseline.
    """

    field: str
    value: float

    def __post_init__(self) -> None:
        if self.field not in ("v_real", "i_real", "delta_v", "delta_i"):
            raise ValueError(f"unknown calibration field {self.field!r}")


_CAL_REL_TOL = 1e-3


def calibrate_scenario(
    scenario: Scenario,
    target: CalibrationTarget,
    injection_point: InjectionPoint = InjectionPoint.CURRENT_FEEDBACK,
    peak_index: int = 0,
) -> Scenario:
    """Adjust one resonance peak's kappa so the scenario hits a target value.

    The response is linear in kappa until a clamp binds, so a two-point
    linear solve lands exactly in the unsaturated region; otherwise bisection
    refines within the monotone bracket.  Raises CalibrationUnreachable when
    the response plateaus short of the target and CalibrationAmbiguous when
    it is not monotone in the knob.
    """
    profile = scenario.coupling.get(injection_point)
    if profile is None or not profile.peaks:
        raise ValueError(f"no coupling peaks configured at {injection_point.value!r}")
    if not 0 <= peak_index < len(profile.peaks):
        raise ValueError("peak_index out of range")
    if scenario.attack is None:
        raise ValueError("calibration needs an attack source")

    phase = command = None
    if scenario.charger is not None:
        phase, command = steady_charger_state(scenario)
    baseline = solve_record(scenario, None, 0.0, phase, command)

    def respond(kappa: float) -> float:
        trial = _with_kappa(scenario, injection_point, peak_index, kappa)
        rec = solve_record(trial, trial.attack, 0.0, phase, command)
        if rec.events:
            return math.nan
        if target.field == "v_real":
            return rec.v_real
        if target.field == "i_real":
            return rec.i_real
        if target.field == "delta_v":
            return rec.v_real - baseline.v_real
        return rec.i_real - baseline.i_real

    want = target.value
    m0 = respond(0.0)
    if _close(m0, want):
        return _with_kappa(scenario, injection_point, peak_index, 0.0)

    slope, probe = 0.0, 1e-9
    while probe <= 1e12:
        for signed in (probe, -probe):
            m = respond(signed)
            if not math.isnan(m) and m != m0:
                slope = (m - m0) / signed
                break
        if slope != 0.0:
            break
        probe *= 1e3
    if slope == 0.0:
        raise CalibrationUnreachable("target does not respond to this kappa")

    guess = (want - m0) / slope
    achieved = respond(guess)
    if _close(achieved, want):
        return _with_kappa(scenario, injection_point, peak_index, guess)

    # Saturation or a clamp inside the bracket: check monotonicity, then bisect.
    samples = [respond(guess * frac) for frac in (0.0, 0.25, 0.5, 0.75, 1.0, 2.0)]
    finite = [m for m in samples if not math.isnan(m)]
    diffs = [b - a for a, b in zip(finite, finite[1:])]
    if any(d > 0 for d in diffs) and any(d < 0 for d in diffs):
        raise CalibrationAmbiguous("response is not monotone in kappa")

    hi = guess
    for _ in range(60):
        m = respond(hi)
        if math.isnan(m) or _between(want, m0, m):
            break
        m2 = respond(hi * 2.0)
        if not math.isnan(m2) and abs(m2 - m) <= 1e-12 * max(1.0, abs(m)):
            raise CalibrationUnreachable(
                f"response plateaus at {m!r} before reaching {want!r}"
            )
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        m = respond(mid)
        if _close(m, want):
            return _with_kappa(scenario, injection_point, peak_index, mid)
        if math.isnan(m) or _between(want, m0, m):
            hi = mid
        else:
            lo = mid
    raise CalibrationUnreachable("bisection failed to reach the target")


def _close(value: float, want: float) -> bool:
    if math.isnan(value):
        return False
    tol = _CAL_REL_TOL * abs(want) if want != 0.0 else 1e-9
    return abs(value - want) <= tol


def _between(want: float, lo: float, hi: float) -> bool:
    return min(lo, hi) <= want <= max(lo, hi)


def _with_kappa(
    scenario: Scenario, point: InjectionPoint, peak_index: int, kappa: float
) -> Scenario:
    profile = scenario.coupling[point]
    peaks = list(profile.peaks)
    peaks[peak_index] = replace(peaks[peak_index], peak_kappa=kappa)
    coupling = dict(scenario.coupling)
    coupling[point] = replace(profile, peaks=tuple(peaks))
    return replace(scenario, coupling=coupling)
