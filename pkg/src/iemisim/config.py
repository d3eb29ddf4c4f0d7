"""Scenario configuration files: TOML in, TOML out.

One file describes one scenario.  Parsing validates everything it can and
reports every violation at once, each with a best-effort line number.
Unknown keys are rejected.  dump_config() round-trips: serializing a parsed
scenario and re-parsing yields field-identical objects (floats are written
with their shortest exact representation).

Run ``python -m iemisim.config`` to print the generated key reference.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .battery import BatteryState, OcvCurve
from .charger import ChargerConfig, OverCurrent, OverTemperature, OverVoltage
from .core import (
    AdjustableDivider,
    AttackSource,
    BatteryLoad,
    BatterySimRig,
    ConstantCurrent,
    ConstantResistance,
    ConstantVoltage,
    ConverterSpec,
    CurrentSense,
    FeedbackNetwork,
    FixedDividerAdjustableRef,
    LoadModel,
    Open,
    Topology,
    ZenerDrop,
    validate_load,
    validate_spec,
)
from .coupling import CouplingProfile, InjectionPoint, ResonancePeak
from .protection import AttackDetector, LowPassFilterModel, PptcFuse, RedundantMonitor
from .scenario import AttackStep, Scenario, SweepSpec, SweepVariable


@dataclass(frozen=True)
class ConfigViolation:
    line: int
    key: str
    rule: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.key}: {self.rule}"


class ConfigError(Exception):
    def __init__(self, violations: list[ConfigViolation]):
        self.violations = violations
        super().__init__("\n".join(str(v) for v in violations))


_REQUIRED = object()
_HEADER_RE = re.compile(r"^\s*\[\[?\s*([A-Za-z0-9_.\-]+)\s*\]\]?")


class _Parser:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.violations: list[ConfigViolation] = []

    # -- error reporting ----------------------------------------------------

    def locate(self, keypath: str) -> int:
        """Best-effort 1-based line of a dotted key; 0 when not found."""
        parts = [p for p in re.sub(r"\[\d+\]", "", keypath).split(".") if p]
        for depth in range(len(parts) - 1, 0, -1):
            section = ".".join(parts[:depth])
            header_line = self._find_header(section)
            if header_line:
                key_line = self._find_key(parts[-1], start=header_line)
                return key_line or header_line
        if parts:
            return self._find_header(parts[0]) or self._find_key(parts[-1], start=0)
        return 0

    def _find_header(self, section: str) -> int:
        for i, line in enumerate(self.lines):
            m = _HEADER_RE.match(line)
            if m and m.group(1) == section:
                return i + 1
        return 0

    def _find_key(self, key: str, start: int) -> int:
        pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
        for i in range(start, len(self.lines)):
            if _HEADER_RE.match(self.lines[i]):
                break
            if pat.match(self.lines[i]):
                return i + 1
        return 0

    def error(self, keypath: str, rule: str) -> None:
        self.violations.append(ConfigViolation(self.locate(keypath), keypath, rule))

    # -- table helpers ------------------------------------------------------

    def take(self, table: dict, section: str, key: str, kind: type, default=_REQUIRED):
        path = f"{section}.{key}" if section else key
        if key not in table:
            if default is _REQUIRED:
                self.error(path, "required key missing")
                return None
            return default
        value = table.pop(key)
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
            self.error(path, f"expected {kind.__name__}")
            return None
        return value

    def reject_unknown(self, table: dict, section: str) -> None:
        for key in table:
            self.error(f"{section}.{key}" if section else key, "unknown key")

    def section(self, table: dict, parent: str, key: str, required: bool = False) -> dict | None:
        path = f"{parent}.{key}" if parent else key
        if key not in table:
            if required:
                self.error(path, "required section missing")
            return None
        value = table.pop(key)
        if not isinstance(value, dict):
            self.error(path, "expected a table")
            return None
        return value

    def build(self, section: str, factory, /, **kwargs):
        """Construct a model object, converting ValueError into a violation."""
        if any(v is None for v in kwargs.values()):
            return None
        try:
            return factory(**kwargs)
        except ValueError as exc:
            self.error(section, str(exc))
            return None


def parse_config(path: str | Path) -> Scenario:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def parse_config_text(text: str) -> Scenario:
    parser = _Parser(text)
    try:
        root = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", 0) or _guess_line(str(exc))
        raise ConfigError([ConfigViolation(line, "<syntax>", str(exc))]) from exc

    scenario = _parse_root(parser, root)
    if parser.violations:
        raise ConfigError(parser.violations)
    assert scenario is not None
    return scenario


def _guess_line(message: str) -> int:
    m = re.search(r"line (\d+)", message)
    return int(m.group(1)) if m else 0


# ---------------------------------------------------------------------------
# Section parsers
# ---------------------------------------------------------------------------


def _parse_root(p: _Parser, root: dict) -> Scenario | None:
    seed = p.take(root, "", "seed", int, 0)
    label = ""

    feedback = p.section(root, "", "feedback", required=True)
    converter_tbl = p.section(root, "", "converter", required=True)
    converter = _parse_converter(p, converter_tbl, feedback)

    coupling = _parse_coupling(p, p.section(root, "", "coupling"))
    battery_tbl = p.section(root, "", "battery")
    load = _parse_load(p, p.section(root, "", "load", required=True), battery_tbl)
    charger = _parse_charger(p, p.section(root, "", "charger"))
    protection = _parse_protection(p, p.section(root, "", "protection"))
    attack, schedule = _parse_attack(p, p.section(root, "", "attack"))
    sweep = _parse_sweep(p, p.section(root, "", "sweep"))
    duration, dt = _parse_timeline(p, p.section(root, "", "timeline"))

    output_tbl = p.section(root, "", "output")
    if output_tbl is not None:
        label = p.take(output_tbl, "output", "label", str, "")
        p.reject_unknown(output_tbl, "output")

    p.reject_unknown(root, "")

    if sweep is None and duration is None:
        p.error("sweep", "config needs a [sweep] or a [timeline] section")
    if sweep is not None and duration is not None:
        p.error("sweep", "config cannot have both [sweep] and [timeline]")
    if sweep is not None and attack is None:
        p.error("attack", "sweep scenarios need an [attack] section")
    if schedule and duration is None:
        p.error("attack.schedule", "attack schedules need a [timeline] section")

    if converter is None or load is None:
        return None

    for violation in validate_spec(converter):
        p.error(_map_spec_field(violation.field), violation.rule)
    for violation in validate_load(load):
        p.error(violation.field, violation.rule)

    filters, pptc, monitor, detector, shield = protection
    return Scenario(
        converter=converter,
        load=load,
        coupling=coupling,
        filters=filters,
        charger=charger,
        attack=attack,
        schedule=schedule,
        sweep=sweep,
        duration=duration if duration is not None else 0.0,
        dt=dt,
        pptc=pptc,
        monitor=monitor,
        detector=detector,
        shield_factor=shield,
        seed=seed if seed is not None else 0,
        label=label or "",
    )


def _map_spec_field(field: str) -> str:
    out = field.replace("voltage_network", "feedback.voltage")
    out = out.replace("current_network", "feedback.current")
    if out in ("v_in", "i_abs_max", "v_abs_max"):
        out = f"converter.{out}"
    return out


def _parse_converter(p: _Parser, table: dict | None, feedback: dict | None) -> ConverterSpec | None:
    if table is None:
        return None
    topology_raw = p.take(table, "converter", "topology", str)
    v_in = p.take(table, "converter", "v_in", float)
    v_abs_max = p.take(table, "converter", "v_abs_max", float, math.inf)
    i_abs_max = p.take(table, "converter", "i_abs_max", float, math.inf)
    p.reject_unknown(table, "converter")

    topology = None
    if topology_raw is not None:
        try:
            topology = Topology(topology_raw)
        except ValueError:
            choices = ", ".join(t.value for t in Topology)
            p.error("converter.topology", f"must be one of: {choices}")

    voltage_net = current_net = None
    if feedback is not None:
        vtbl = p.section(feedback, "feedback", "voltage", required=True)
        voltage_net = _parse_network(p, "feedback.voltage", vtbl)
        ctbl = p.section(feedback, "feedback", "current")
        if ctbl is not None:
            current_net = _parse_network(p, "feedback.current", ctbl)
        p.reject_unknown(feedback, "feedback")

    if None in (topology, v_in, voltage_net):
        return None
    return ConverterSpec(
        topology=topology,
        v_in=v_in,
        voltage_network=voltage_net,
        current_network=current_net,
        i_abs_max=i_abs_max,
        v_abs_max=v_abs_max,
    )


_NETWORK_KINDS = ("adjustable_divider", "fixed_divider_adjustable_ref", "zener", "current_sense")


def _parse_network(p: _Parser, section: str, table: dict | None) -> FeedbackNetwork | None:
    if table is None:
        return None
    kind = p.take(table, section, "kind", str)
    polarity = p.take(table, section, "polarity", int, 1)
    net = None
    if kind == "adjustable_divider":
        beta = p.take(table, section, "beta", float)
        v_ref = p.take(table, section, "v_ref", float)
        net = p.build(section, AdjustableDivider, beta=beta, v_ref=v_ref, polarity=polarity)
    elif kind == "fixed_divider_adjustable_ref":
        beta = p.take(table, section, "beta", float)
        v_ref = p.take(table, section, "v_ref", float)
        net = p.build(section, FixedDividerAdjustableRef, beta=beta, v_ref=v_ref, polarity=polarity)
    elif kind == "zener":
        v_z = p.take(table, section, "v_z", float)
        v_ref = p.take(table, section, "v_ref", float)
        net = p.build(section, ZenerDrop, v_z=v_z, v_ref=v_ref, polarity=polarity)
    elif kind == "current_sense":
        shunt_r = p.take(table, section, "shunt_r", float)
        amp_gain = p.take(table, section, "amp_gain", float)
        i_ref = p.take(table, section, "i_ref_voltage", float)
        net = p.build(
            section, CurrentSense, shunt_r=shunt_r, amp_gain=amp_gain,
            i_ref_voltage=i_ref, polarity=polarity,
        )
    elif kind is not None:
        p.error(f"{section}.kind", f"must be one of: {', '.join(_NETWORK_KINDS)}")
    p.reject_unknown(table, section)
    return net


def _parse_peaks(p: _Parser, section: str, table: dict, point: InjectionPoint) -> CouplingProfile | None:
    raw = table.pop("peaks", [])
    if not isinstance(raw, list):
        p.error(f"{section}.peaks", "expected an array of peak tables")
        return None
    peaks = []
    ok = True
    for i, entry in enumerate(raw):
        key = f"{section}.peaks[{i}]"
        if not isinstance(entry, dict):
            p.error(key, "expected a table")
            ok = False
            continue
        center = p.take(entry, key, "center_freq", float)
        q = p.take(entry, key, "quality_q", float)
        kappa = p.take(entry, key, "peak_kappa", float)
        p.reject_unknown(entry, key)
        peak = p.build(key, ResonancePeak, center_freq=center, quality_q=q, peak_kappa=kappa)
        if peak is None:
            ok = False
        else:
            peaks.append(peak)
    p.reject_unknown(table, section)
    if not ok:
        return None
    return CouplingProfile(tuple(peaks), point)


def _parse_coupling(p: _Parser, table: dict | None) -> dict[InjectionPoint, CouplingProfile]:
    out: dict[InjectionPoint, CouplingProfile] = {}
    if table is None:
        return out
    for point in (InjectionPoint.VOLTAGE_FEEDBACK, InjectionPoint.CURRENT_FEEDBACK, InjectionPoint.PROTECTION_MONITOR):
        sub = p.section(table, "coupling", point.value)
        if sub is not None:
            profile = _parse_peaks(p, f"coupling.{point.value}", sub, point)
            if profile is not None:
                out[point] = profile
    p.reject_unknown(table, "coupling")
    return out


def _parse_load(p: _Parser, table: dict | None, battery_tbl: dict | None) -> LoadModel | None:
    if table is None:
        return None
    kind = p.take(table, "load", "kind", str)
    load: LoadModel | None = None
    if kind == "open":
        load = Open()
    elif kind == "constant_resistance":
        r = p.take(table, "load", "r", float)
        load = ConstantResistance(r) if r is not None else None
    elif kind == "constant_current":
        i = p.take(table, "load", "i", float)
        load = ConstantCurrent(i) if i is not None else None
    elif kind == "constant_voltage":
        v = p.take(table, "load", "v", float)
        load = ConstantVoltage(v) if v is not None else None
    elif kind == "battery_sim_rig":
        v_internal = p.take(table, "load", "v_internal", float)
        esr = p.take(table, "load", "esr", float)
        capability = p.take(table, "load", "source_capability", float, 0.1)
        if v_internal is not None and esr is not None:
            load = BatterySimRig(v_internal, esr, capability)
    elif kind == "battery":
        battery = _parse_battery(p, battery_tbl)
        load = BatteryLoad(battery) if battery is not None else None
    elif kind is not None:
        p.error("load.kind", "must be one of: open, constant_resistance, constant_current, constant_voltage, battery, battery_sim_rig")
    p.reject_unknown(table, "load")
    if kind != "battery" and battery_tbl is not None:
        p.error("battery", "a [battery] section requires load.kind = 'battery'")
    return load


def _parse_battery(p: _Parser, table: dict | None) -> BatteryState | None:
    if table is None:
        p.error("battery", "load.kind = 'battery' needs a [battery] section")
        return None
    defaults = BatteryState(capacity=1.0, soc=0.0)
    capacity = p.take(table, "battery", "capacity", float)
    soc = p.take(table, "battery", "soc", float)
    kwargs = {}
    for key in (
        "r_esr", "temperature", "t_ambient", "thermal_mass", "dissipation",
        "v_fail", "t_runaway", "t_collapse", "tau_bulge", "overcharge_heat",
        "collapse_rate",
    ):
        kwargs[key] = p.take(table, "battery", key, float, getattr(defaults, key))
    knots_raw = table.pop("ocv_knots", None)
    curve = defaults.ocv_curve
    if knots_raw is not None:
        knots = []
        valid = True
        if not isinstance(knots_raw, list):
            p.error("battery.ocv_knots", "expected an array of [soc, volts] pairs")
            valid = False
        else:
            for entry in knots_raw:
                if (
                    not isinstance(entry, list)
                    or len(entry) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
                ):
                    p.error("battery.ocv_knots", "expected an array of [soc, volts] pairs")
                    valid = False
                    break
                knots.append((float(entry[0]), float(entry[1])))
        if valid:
            curve = p.build("battery.ocv_knots", OcvCurve, knots=tuple(knots))
    p.reject_unknown(table, "battery")
    if capacity is None or soc is None or curve is None:
        return None
    return p.build("battery", BatteryState, capacity=capacity, soc=soc, ocv_curve=curve, **kwargs)


def _parse_charger(p: _Parser, table: dict | None) -> ChargerConfig | None:
    if table is None:
        return None
    i_precharge = p.take(table, "charger", "i_precharge", float)
    v_pre = p.take(table, "charger", "v_precharge_threshold", float)
    i_cc = p.take(table, "charger", "i_cc", float)
    v_cv = p.take(table, "charger", "v_cv", float)
    i_term = p.take(table, "charger", "i_terminate", float)
    cells = p.take(table, "charger", "cells_in_series", int, 1)
    ceiling = p.take(table, "charger", "power_ceiling", float, None)
    raw_prot = table.pop("protection", [])
    p.reject_unknown(table, "charger")

    protections = []
    if not isinstance(raw_prot, list):
        p.error("charger.protection", "expected an array of tables")
    else:
        factories = {"over_voltage": OverVoltage, "over_current": OverCurrent, "over_temperature": OverTemperature}
        for i, entry in enumerate(raw_prot):
            key = f"charger.protection[{i}]"
            if not isinstance(entry, dict):
                p.error(key, "expected a table")
                continue
            kind = p.take(entry, key, "kind", str)
            threshold = p.take(entry, key, "threshold", float)
            p.reject_unknown(entry, key)
            if kind not in factories:
                p.error(f"{key}.kind", "must be one of: over_voltage, over_current, over_temperature")
            elif threshold is not None:
                protections.append(factories[kind](threshold))

    if None in (i_precharge, v_pre, i_cc, v_cv, i_term, cells):
        return None
    try:
        return ChargerConfig(
            i_precharge=i_precharge, v_precharge_threshold=v_pre, i_cc=i_cc,
            v_cv=v_cv, i_terminate=i_term, cells_in_series=cells,
            protections=tuple(protections), power_ceiling=ceiling,
        )
    except ValueError as exc:
        p.error("charger", str(exc))
        return None


def _parse_protection(p: _Parser, table: dict | None):
    filters: dict[InjectionPoint, LowPassFilterModel] = {}
    pptc = monitor = detector = None
    shield = 1.0
    if table is None:
        return filters, pptc, monitor, detector, shield

    shield = p.take(table, "protection", "shield_factor", float, 1.0)
    if shield is not None and not 0.0 < shield <= 1.0:
        p.error("protection.shield_factor", "must be in (0, 1]")

    filt_tbl = p.section(table, "protection", "filter")
    if filt_tbl is not None:
        for point in (InjectionPoint.VOLTAGE_FEEDBACK, InjectionPoint.CURRENT_FEEDBACK, InjectionPoint.PROTECTION_MONITOR):
            sub = p.section(filt_tbl, "protection.filter", point.value)
            if sub is None:
                continue
            key = f"protection.filter.{point.value}"
            cutoff = p.take(sub, key, "cutoff", float)
            rolloff = p.take(sub, key, "rolloff_per_decade", float, 20.0)
            floor = p.take(sub, key, "parasitic_floor", float, 40.0)
            p.reject_unknown(sub, key)
            filt = p.build(key, LowPassFilterModel, cutoff=cutoff, rolloff_per_decade=rolloff, parasitic_floor=floor)
            if filt is not None:
                filters[point] = filt
        p.reject_unknown(filt_tbl, "protection.filter")

    pptc_tbl = p.section(table, "protection", "pptc")
    if pptc_tbl is not None:
        i_trip = p.take(pptc_tbl, "protection.pptc", "i_trip", float)
        i_hold = p.take(pptc_tbl, "protection.pptc", "i_hold", float)
        trip_delay = p.take(pptc_tbl, "protection.pptc", "trip_delay", float, 1.0)
        reset_delay = p.take(pptc_tbl, "protection.pptc", "reset_delay", float, None)
        resettable = p.take(pptc_tbl, "protection.pptc", "resettable", bool, True)
        leakage = p.take(pptc_tbl, "protection.pptc", "leakage", float, 1e-3)
        p.reject_unknown(pptc_tbl, "protection.pptc")
        if None not in (i_trip, i_hold, trip_delay, resettable, leakage):
            try:
                pptc = PptcFuse(
                    i_trip=i_trip, i_hold=i_hold, trip_delay=trip_delay,
                    reset_delay=reset_delay, resettable=resettable, leakage=leakage,
                )
            except ValueError as exc:
                p.error("protection.pptc", str(exc))

    mon_tbl = p.section(table, "protection", "monitor")
    if mon_tbl is not None:
        v_trip = p.take(mon_tbl, "protection.monitor", "v_trip", float)
        i_trip = p.take(mon_tbl, "protection.monitor", "i_trip", float)
        profile = _parse_peaks(p, "protection.monitor", mon_tbl, InjectionPoint.PROTECTION_MONITOR)
        if profile is None:
            profile = CouplingProfile((), InjectionPoint.PROTECTION_MONITOR)
        monitor = p.build(
            "protection.monitor", RedundantMonitor,
            v_trip=v_trip, i_trip=i_trip, own_coupling=profile,
        )

    det_tbl = p.section(table, "protection", "detector")
    if det_tbl is not None:
        v_thr = p.take(det_tbl, "protection.detector", "v_threshold", float, math.inf)
        i_thr = p.take(det_tbl, "protection.detector", "i_threshold", float, math.inf)
        p.reject_unknown(det_tbl, "protection.detector")
        detector = AttackDetector(v_threshold=v_thr, i_threshold=i_thr)

    p.reject_unknown(table, "protection")
    return filters, pptc, monitor, detector, shield if shield is not None else 1.0


def _parse_attack(p: _Parser, table: dict | None) -> tuple[AttackSource | None, tuple[AttackStep, ...]]:
    if table is None:
        return None, ()
    frequency = p.take(table, "attack", "frequency", float)
    power = p.take(table, "attack", "power_tx", float)
    distance = p.take(table, "attack", "distance", float)
    gain = p.take(table, "attack", "coupling_gain", float, 1.0)
    raw_schedule = table.pop("schedule", [])
    p.reject_unknown(table, "attack")

    base = p.build("attack", AttackSource, frequency=frequency, power_tx=power, distance=distance, coupling_gain=gain)
    if base is None:
        return None, ()

    steps: list[AttackStep] = []
    if not isinstance(raw_schedule, list):
        p.error("attack.schedule", "expected an array of tables")
        return base, ()
    last_t = -math.inf
    for i, entry in enumerate(raw_schedule):
        key = f"attack.schedule[{i}]"
        if not isinstance(entry, dict):
            p.error(key, "expected a table")
            continue
        t = p.take(entry, key, "t", float)
        freq = p.take(entry, key, "frequency", float, base.frequency)
        pw = p.take(entry, key, "power_tx", float, base.power_tx)
        dist = p.take(entry, key, "distance", float, base.distance)
        g = p.take(entry, key, "coupling_gain", float, base.coupling_gain)
        p.reject_unknown(entry, key)
        if t is None:
            continue
        if t < 0:
            p.error(f"{key}.t", "must be >= 0")
            continue
        if t <= last_t:
            p.error(f"{key}.t", "schedule times must be strictly increasing")
        last_t = t
        src = p.build(key, AttackSource, frequency=freq, power_tx=pw, distance=dist, coupling_gain=g)
        if src is not None:
            steps.append(AttackStep(t, src))
    return base, tuple(steps)


def _parse_sweep(p: _Parser, table: dict | None) -> SweepSpec | None:
    if table is None:
        return None
    # the default sweep is the standard bench methodology: 50 MHz to 3 GHz,
    # log spaced, 2048 points
    variable_raw = p.take(table, "sweep", "variable", str, "frequency")
    start = p.take(table, "sweep", "start", float, 5.0e7)
    stop = p.take(table, "sweep", "stop", float, 3.0e9)
    points = p.take(table, "sweep", "points", int, 2048)
    spacing = p.take(table, "sweep", "spacing", str, "log")
    p.reject_unknown(table, "sweep")
    variable = None
    if variable_raw is not None:
        try:
            variable = SweepVariable(variable_raw)
        except ValueError:
            p.error("sweep.variable", "must be one of: frequency, power, distance")
    return p.build("sweep", SweepSpec, variable=variable, start=start, stop=stop, points=points, spacing=spacing)


def _parse_timeline(p: _Parser, table: dict | None) -> tuple[float | None, float]:
    if table is None:
        return None, 0.1
    duration = p.take(table, "timeline", "duration", float)
    dt = p.take(table, "timeline", "dt", float, 0.1)
    p.reject_unknown(table, "timeline")
    if duration is not None and duration <= 0:
        p.error("timeline.duration", "must be > 0")
    if dt is not None and dt <= 0:
        p.error("timeline.dt", "must be > 0")
    return duration, dt if dt is not None else 0.1


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = repr(value)
        return text if any(c in text for c in ".einf") else text + ".0"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot serialize {value!r}")


def _kv(lines: list[str], key: str, value) -> None:
    lines.append(f"{key} = {_fmt(value)}")


def dump_config(scenario: Scenario) -> str:
    """Serialize a scenario to TOML; parse_config_text() round-trips it."""
    out: list[str] = []
    _kv(out, "seed", scenario.seed)
    out.append("")

    out.append("[converter]")
    _kv(out, "topology", scenario.converter.topology.value)
    _kv(out, "v_in", scenario.converter.v_in)
    _kv(out, "v_abs_max", scenario.converter.v_abs_max)
    _kv(out, "i_abs_max", scenario.converter.i_abs_max)
    out.append("")

    _dump_network(out, "feedback.voltage", scenario.converter.voltage_network)
    if scenario.converter.current_network is not None:
        _dump_network(out, "feedback.current", scenario.converter.current_network)

    for point, profile in scenario.coupling.items():
        for peak in profile.peaks:
            out.append(f"[[coupling.{point.value}.peaks]]")
            _kv(out, "center_freq", peak.center_freq)
            _kv(out, "quality_q", peak.quality_q)
            _kv(out, "peak_kappa", peak.peak_kappa)
            out.append("")
        if not profile.peaks:
            out.append(f"[coupling.{point.value}]")
            out.append("peaks = []")
            out.append("")

    _dump_load(out, scenario.load)
    if scenario.charger is not None:
        _dump_charger(out, scenario.charger)
    _dump_protection(out, scenario)

    if scenario.attack is not None:
        out.append("[attack]")
        _kv(out, "frequency", scenario.attack.frequency)
        _kv(out, "power_tx", scenario.attack.power_tx)
        _kv(out, "distance", scenario.attack.distance)
        _kv(out, "coupling_gain", scenario.attack.coupling_gain)
        out.append("")
        for step in scenario.schedule:
            out.append("[[attack.schedule]]")
            _kv(out, "t", step.t)
            _kv(out, "frequency", step.source.frequency)
            _kv(out, "power_tx", step.source.power_tx)
            _kv(out, "distance", step.source.distance)
            _kv(out, "coupling_gain", step.source.coupling_gain)
            out.append("")

    if scenario.sweep is not None:
        out.append("[sweep]")
        _kv(out, "variable", scenario.sweep.variable.value)
        _kv(out, "start", scenario.sweep.start)
        _kv(out, "stop", scenario.sweep.stop)
        _kv(out, "points", scenario.sweep.points)
        _kv(out, "spacing", scenario.sweep.spacing)
        out.append("")
    else:
        out.append("[timeline]")
        _kv(out, "duration", scenario.duration)
        _kv(out, "dt", scenario.dt)
        out.append("")

    if scenario.label:
        out.append("[output]")
        _kv(out, "label", scenario.label)
        out.append("")
    return "\n".join(out)


def _dump_network(out: list[str], section: str, net: FeedbackNetwork) -> None:
    out.append(f"[{section}]")
    _kv(out, "kind", net.kind)
    if isinstance(net, (AdjustableDivider, FixedDividerAdjustableRef)):
        _kv(out, "beta", net.beta)
        _kv(out, "v_ref", net.v_ref)
    elif isinstance(net, ZenerDrop):
        _kv(out, "v_z", net.v_z)
        _kv(out, "v_ref", net.v_ref)
    else:
        _kv(out, "shunt_r", net.shunt_r)
        _kv(out, "amp_gain", net.amp_gain)
        _kv(out, "i_ref_voltage", net.i_ref_voltage)
    _kv(out, "polarity", net.polarity)
    out.append("")


def _dump_load(out: list[str], load: LoadModel) -> None:
    out.append("[load]")
    _kv(out, "kind", load.kind)
    if isinstance(load, ConstantResistance):
        _kv(out, "r", load.r)
    elif isinstance(load, ConstantCurrent):
        _kv(out, "i", load.i)
    elif isinstance(load, ConstantVoltage):
        _kv(out, "v", load.v)
    elif isinstance(load, BatterySimRig):
        _kv(out, "v_internal", load.v_internal)
        _kv(out, "esr", load.esr)
        _kv(out, "source_capability", load.source_capability)
    out.append("")
    if isinstance(load, BatteryLoad):
        b = load.battery
        out.append("[battery]")
        _kv(out, "capacity", b.capacity)
        _kv(out, "soc", b.soc)
        for key in (
            "r_esr", "temperature", "t_ambient", "thermal_mass", "dissipation",
            "v_fail", "t_runaway", "t_collapse", "tau_bulge", "overcharge_heat",
            "collapse_rate",
        ):
            _kv(out, key, getattr(b, key))
        knots = ", ".join(f"[{_fmt(s)}, {_fmt(v)}]" for s, v in b.ocv_curve.knots)
        out.append(f"ocv_knots = [{knots}]")
        out.append("")


def _dump_charger(out: list[str], cfg: ChargerConfig) -> None:
    out.append("[charger]")
    _kv(out, "i_precharge", cfg.i_precharge)
    _kv(out, "v_precharge_threshold", cfg.v_precharge_threshold)
    _kv(out, "i_cc", cfg.i_cc)
    _kv(out, "v_cv", cfg.v_cv)
    _kv(out, "i_terminate", cfg.i_terminate)
    _kv(out, "cells_in_series", cfg.cells_in_series)
    if cfg.power_ceiling is not None:
        _kv(out, "power_ceiling", cfg.power_ceiling)
    out.append("")
    for prot in cfg.protections:
        out.append("[[charger.protection]]")
        _kv(out, "kind", prot.kind)
        _kv(out, "threshold", prot.threshold)
        out.append("")


def _dump_protection(out: list[str], scenario: Scenario) -> None:
    has_any = (
        scenario.filters or scenario.pptc is not None or scenario.monitor is not None
        or scenario.detector is not None or scenario.shield_factor != 1.0
    )
    if not has_any:
        return
    if scenario.shield_factor != 1.0:
        out.append("[protection]")
        _kv(out, "shield_factor", scenario.shield_factor)
        out.append("")
    for point, filt in scenario.filters.items():
        out.append(f"[protection.filter.{point.value}]")
        _kv(out, "cutoff", filt.cutoff)
        _kv(out, "rolloff_per_decade", filt.rolloff_per_decade)
        _kv(out, "parasitic_floor", filt.parasitic_floor)
        out.append("")
    if scenario.pptc is not None:
        fuse = scenario.pptc
        out.append("[protection.pptc]")
        _kv(out, "i_trip", fuse.i_trip)
        _kv(out, "i_hold", fuse.i_hold)
        _kv(out, "trip_delay", fuse.trip_delay)
        if fuse.reset_delay is not None:
            _kv(out, "reset_delay", fuse.reset_delay)
        _kv(out, "resettable", fuse.resettable)
        _kv(out, "leakage", fuse.leakage)
        out.append("")
    if scenario.monitor is not None:
        mon = scenario.monitor
        out.append("[protection.monitor]")
        _kv(out, "v_trip", mon.v_trip)
        _kv(out, "i_trip", mon.i_trip)
        out.append("")
        for peak in mon.own_coupling.peaks:
            out.append("[[protection.monitor.peaks]]")
            _kv(out, "center_freq", peak.center_freq)
            _kv(out, "quality_q", peak.quality_q)
            _kv(out, "peak_kappa", peak.peak_kappa)
            out.append("")
    if scenario.detector is not None:
        out.append("[protection.detector]")
        _kv(out, "v_threshold", scenario.detector.v_threshold)
        _kv(out, "i_threshold", scenario.detector.i_threshold)
        out.append("")


# ---------------------------------------------------------------------------
# Reference page
# ---------------------------------------------------------------------------

_REFERENCE_ROWS = [
    ("(top level)", "seed", "int", "0", "Seed reserved for randomized extensions."),
    ("[converter]", "topology", "string", "required", "buck / boost / buck_boost / sepic / isolated_flyback."),
    ("[converter]", "v_in", "float", "required", "Input voltage, volts."),
    ("[converter]", "v_abs_max", "float", "inf", "Hard output voltage ceiling, volts."),
    ("[converter]", "i_abs_max", "float", "inf", "Hard output current ceiling, amps; attacks plateau here."),
    ("[feedback.voltage]", "kind", "string", "required", "adjustable_divider / fixed_divider_adjustable_ref / zener / current_sense."),
    ("[feedback.voltage]", "beta", "float", "per kind", "Divider ratio in (0, 1] (divider kinds)."),
    ("[feedback.voltage]", "v_ref", "float", "per kind", "Comparison reference, volts (divider and zener kinds)."),
    ("[feedback.voltage]", "v_z", "float", "per kind", "Fixed voltage drop, volts (zener kind)."),
    ("[feedback.voltage]", "shunt_r", "float", "per kind", "Shunt resistance, ohms (current_sense kind)."),
    ("[feedback.voltage]", "amp_gain", "float", "per kind", "Sense amplifier gain (current_sense kind)."),
    ("[feedback.voltage]", "i_ref_voltage", "float", "per kind", "Current-loop reference, volts (current_sense kind)."),
    ("[feedback.voltage]", "polarity", "int", "1", "+1, or -1 for feedback that falls as output rises."),
    ("[feedback.current]", "(same keys)", "", "optional", "Current-channel network; same keys as [feedback.voltage]."),
    ("[[coupling.<point>.peaks]]", "center_freq", "float", "required", "Peak center, hertz. <point> is voltage / current / monitor."),
    ("[[coupling.<point>.peaks]]", "quality_q", "float", "required", "Resonance quality factor."),
    ("[[coupling.<point>.peaks]]", "peak_kappa", "float", "required", "Signed volts per received watt at the peak."),
    ("[load]", "kind", "string", "required", "open / constant_resistance / constant_current / constant_voltage / battery / battery_sim_rig."),
    ("[load]", "r", "float", "per kind", "Ohms (constant_resistance)."),
    ("[load]", "i", "float", "per kind", "Amps (constant_current)."),
    ("[load]", "v", "float", "per kind", "Volts (constant_voltage)."),
    ("[load]", "v_internal", "float", "per kind", "Rig internal voltage, volts (battery_sim_rig)."),
    ("[load]", "esr", "float", "per kind", "Rig series resistance, ohms (battery_sim_rig)."),
    ("[load]", "source_capability", "float", "0.1", "Amps the rig can source when idle (battery_sim_rig)."),
    ("[battery]", "capacity", "float", "required", "Coulombs."),
    ("[battery]", "soc", "float", "required", "Initial state of charge (1.0 = full)."),
    ("[battery]", "r_esr", "float", "0.066", "Series resistance, ohms."),
    ("[battery]", "temperature", "float", "293.15", "Initial temperature, kelvin."),
    ("[battery]", "t_ambient", "float", "293.15", "Ambient temperature, kelvin."),
    ("[battery]", "thermal_mass", "float", "40.0", "Joules per kelvin (fitted default)."),
    ("[battery]", "dissipation", "float", "0.05", "Watts per kelvin to ambient (fitted default)."),
    ("[battery]", "v_fail", "float", "4.3", "Cell volts; sustained excess bulges the cell."),
    ("[battery]", "t_runaway", "float", "393.15", "Thermal runaway temperature, kelvin."),
    ("[battery]", "t_collapse", "float", "353.15", "Bulged cell fails at this temperature, kelvin."),
    ("[battery]", "tau_bulge", "float", "300.0", "Seconds above v_fail before bulging."),
    ("[battery]", "overcharge_heat", "float", "3.24", "Watts per (volt over v_fail x amp); fitted default."),
    ("[battery]", "collapse_rate", "float", "0.02", "Volts per second of voltage collapse once failed."),
    ("[battery]", "ocv_knots", "array", "generic Li-ion", "[soc, volts] pairs, strictly increasing."),
    ("[charger]", "i_precharge", "float", "required", "Precharge current, amps."),
    ("[charger]", "v_precharge_threshold", "float", "required", "Per-cell precharge exit voltage, volts."),
    ("[charger]", "i_cc", "float", "required", "Constant-current phase current, amps."),
    ("[charger]", "v_cv", "float", "required", "Per-cell constant-voltage level, volts."),
    ("[charger]", "i_terminate", "float", "required", "Measured current ending the charge, amps."),
    ("[charger]", "cells_in_series", "int", "1", "Cell count; thresholds scale by it."),
    ("[charger]", "power_ceiling", "float", "none", "Watts of commanded power that reboot (fault) the charger."),
    ("[[charger.protection]]", "kind", "string", "required", "over_voltage / over_current / over_temperature (measured inputs)."),
    ("[[charger.protection]]", "threshold", "float", "required", "Volts, amps, or kelvin per kind."),
    ("[protection]", "shield_factor", "float", "1.0", "Scalar multiplier on every kappa (shielding)."),
    ("[protection.filter.<point>]", "cutoff", "float", "required", "Filter cutoff, hertz."),
    ("[protection.filter.<point>]", "rolloff_per_decade", "float", "20.0", "dB per decade above cutoff."),
    ("[protection.filter.<point>]", "parasitic_floor", "float", "40.0", "dB cap on attenuation (parasitic leakage)."),
    ("[protection.pptc]", "i_trip", "float", "required", "Amps; sustained current that trips the fuse."),
    ("[protection.pptc]", "i_hold", "float", "required", "Amps; demand below this lets the fuse reset."),
    ("[protection.pptc]", "trip_delay", "float", "1.0", "Seconds of sustained overcurrent before tripping."),
    ("[protection.pptc]", "reset_delay", "float", "trip_delay", "Seconds below i_hold before resetting."),
    ("[protection.pptc]", "resettable", "bool", "true", "false models a one-shot thermal fuse."),
    ("[protection.pptc]", "leakage", "float", "0.001", "Amps through a tripped fuse."),
    ("[protection.monitor]", "v_trip", "float", "required", "Volts; measured voltage disconnect threshold."),
    ("[protection.monitor]", "i_trip", "float", "required", "Amps; measured current disconnect threshold."),
    ("[[protection.monitor.peaks]]", "(peak keys)", "", "none", "Monitor's own coupling; empty means immune."),
    ("[protection.detector]", "v_threshold", "float", "inf", "Volts of measured-vs-reference disagreement flagged."),
    ("[protection.detector]", "i_threshold", "float", "inf", "Amps of disagreement flagged."),
    ("[attack]", "frequency", "float", "required", "Transmit frequency, hertz."),
    ("[attack]", "power_tx", "float", "required", "Transmit power, watts."),
    ("[attack]", "distance", "float", "required", "Antenna distance, meters."),
    ("[attack]", "coupling_gain", "float", "1.0", "Aggregate antenna/geometry constant."),
    ("[[attack.schedule]]", "t", "float", "required", "Seconds; entry applies from t onward (timeline runs)."),
    ("[[attack.schedule]]", "(source keys)", "float", "base [attack]", "frequency / power_tx / distance / coupling_gain overrides."),
    ("[sweep]", "variable", "string", "frequency", "frequency / power / distance."),
    ("[sweep]", "start", "float", "5e7", "Sweep start (SI units of the variable)."),
    ("[sweep]", "stop", "float", "3e9", "Sweep stop."),
    ("[sweep]", "points", "int", "2048", "Number of sweep points."),
    ("[sweep]", "spacing", "string", "log", "linear / log."),
    ("[timeline]", "duration", "float", "required", "Simulated seconds."),
    ("[timeline]", "dt", "float", "0.1", "Integration step, seconds."),
    ("[output]", "label", "string", "\"\"", "Free-form label carried into outputs."),
]


def reference_page() -> str:
    """Markdown reference for every config key and its default."""
    out = [
        "# Scenario configuration reference",
        "",
        "One TOML file describes one scenario. Unknown keys are rejected.",
        "All quantities are SI base units (volts, amps, ohms, watts, hertz,",
        "meters, seconds, kelvin). A config needs either a [sweep] or a",
        "[timeline] section.",
        "",
        "| Section | Key | Type | Default | Meaning |",
        "|---|---|---|---|---|",
    ]
    for section, key, kind, default, doc in _REFERENCE_ROWS:
        out.append(f"| `{section}` | `{key}` | {kind} | {default} | {doc} |")
    return "\n".join(out) + "\n"


if __name__ == "__main__":
    print(reference_page(), end="")
