"""Bundled reference scenarios, runnable by id through `iemisim reproduce`.

Each id maps to one or more runs of a bundled config (variants differing
only in a setting or load are looped here, keeping the configs themselves
single-scenario).  Every run writes its own CSV; the figure-level SVG
overlays one series per variant.
"""

from __future__ import annotations

from dataclasses import replace
from importlib import resources
from pathlib import Path

from .config import parse_config_text
from .core import ConstantResistance, ConstantVoltage
from .results import write_results
from .scenario import (
    Scenario,
    ScenarioRecord,
    run_charging_attack,
    run_distance_sweep,
    run_frequency_sweep,
    run_power_sweep,
    solve_record,
    steady_charger_state,
)
from .svgplot import emit_plot


class UnknownFigure(Exception):
    pass


def bundled_config_text(name: str) -> str:
    return (resources.files(__package__) / "scenarios" / name).read_text(encoding="utf-8")


def load_bundled(name: str) -> Scenario:
    return parse_config_text(bundled_config_text(name))


def figure_ids() -> list[str]:
    return sorted(_FIGURES)


def reproduce(figure_id: str, out_dir: Path, fmt: str = "both", threads: int = 1) -> list[Path]:
    if figure_id not in _FIGURES:
        raise UnknownFigure(
            f"unknown figure id {figure_id!r}; available: {', '.join(figure_ids())}"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return _FIGURES[figure_id](out_dir, fmt, threads)


# ---------------------------------------------------------------------------
# Variant helpers
# ---------------------------------------------------------------------------


def _with_voltage_setpoint(scenario: Scenario, v_set: float) -> Scenario:
    converter = scenario.converter
    converter = replace(converter, voltage_network=converter.voltage_network.with_setpoint(v_set))
    return replace(scenario, converter=converter)


def _with_current_setpoint(scenario: Scenario, i_set: float) -> Scenario:
    converter = scenario.converter
    converter = replace(converter, current_network=converter.current_network.with_setpoint(i_set))
    return replace(scenario, converter=converter)


def _with_charge_current(scenario: Scenario, i_cc: float) -> Scenario:
    return replace(scenario, charger=replace(scenario.charger, i_cc=i_cc))


def _baseline(scenario: Scenario) -> ScenarioRecord:
    """Zero-attack solve of the scenario's single operating point."""
    phase = command = None
    if scenario.charger is not None:
        phase, command = steady_charger_state(scenario)
    return solve_record(scenario, None, 0.0, phase, command)


def _write(out_dir: Path, name: str, records, fmt: str, written: list[Path]) -> None:
    if fmt in ("csv", "both"):
        path = out_dir / f"{name}.csv"
        write_results(records, path)
        written.append(path)


def _plot(out_dir: Path, name: str, series, fmt: str, written: list[Path], **kwargs) -> None:
    if fmt in ("svg", "both"):
        path = out_dir / f"{name}.svg"
        emit_plot(series, path, **kwargs)
        written.append(path)


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------


def _fig3(out_dir: Path, fmt: str, threads: int) -> list[Path]:
    base = load_bundled("fig3_divider_invariance.toml")
    written: list[Path] = []
    series = {}
    for v_set in (5.0, 12.0, 24.0):
        for r_load in (10.0, 100.0):
            variant = _with_voltage_setpoint(base, v_set)
            variant = replace(variant, load=ConstantResistance(r_load))
            records = run_frequency_sweep(variant, threads)
            v0 = _baseline(variant).v_real
            label = f"{v_set:g} V, {r_load:g} ohm"
            _write(out_dir, f"fig3_v{v_set:g}_r{r_load:g}", records, fmt, written)
            series[label] = [(rec.sweep_or_time, (rec.v_real - v0) / v0) for rec in records]
    _plot(
        out_dir, "fig3", series, fmt, written,
        title="Fractional output shift vs frequency (adjustable divider)",
        x_label="frequency [Hz]", y_label="delta V / V", log_x=True,
    )
    return written


def _fig7(out_dir: Path, fmt: str, threads: int) -> list[Path]:
    base = load_bundled("skyrc_cc.toml")
    written: list[Path] = []
    series = {}
    for i_cc in (1.0, 2.0, 3.0):
        variant = _with_charge_current(base, i_cc)
        records = run_frequency_sweep(variant, threads)
        i0 = _baseline(variant).i_real
        _write(out_dir, f"fig7_icc{i_cc:g}", records, fmt, written)
        series[f"{i_cc:g} A setting"] = [(rec.sweep_or_time, rec.i_real - i0) for rec in records]
    _plot(
        out_dir, "fig7", series, fmt, written,
        title="Charge-current offset vs frequency (charger constant-current phase)",
        x_label="frequency [Hz]", y_label="delta I [A]", log_x=True,
    )
    return written


def _fig9(out_dir: Path, fmt: str, threads: int) -> list[Path]:
    scenario = load_bundled("fig9_power_linearity.toml")
    records = run_power_sweep(scenario, threads)
    i0 = _baseline(scenario).i_real
    written: list[Path] = []
    _write(out_dir, "fig9", records, fmt, written)
    series = {"current offset [A]": [(rec.sweep_or_time, rec.i_real - i0) for rec in records]}
    _plot(
        out_dir, "fig9", series, fmt, written,
        title="Attack effect vs transmit power",
        x_label="transmit power [W]", y_label="delta I [A]", log_x=True,
    )
    return written


def _fig12(out_dir: Path, fmt: str, threads: int) -> list[Path]:
    base = load_bundled("fig12_cc_supply_invariance.toml")
    written: list[Path] = []
    series = {}
    for i_cc in (0.5, 1.0, 2.0):
        for v_load in (3.0, 5.0, 7.0):
            variant = _with_current_setpoint(base, i_cc)
            variant = replace(variant, load=ConstantVoltage(v_load))
            records = run_frequency_sweep(variant, threads)
            i0 = _baseline(variant).i_real
            _write(out_dir, f"fig12_icc{i_cc:g}_v{v_load:g}", records, fmt, written)
            series[f"{i_cc:g} A, {v_load:g} V"] = [
                (rec.sweep_or_time, rec.i_real - i0) for rec in records
            ]
    _plot(
        out_dir, "fig12", series, fmt, written,
        title="Current offset vs frequency (constant-current supply)",
        x_label="frequency [Hz]", y_label="delta I [A]", log_x=True,
    )
    return written


def _ranged(out_dir: Path, fmt: str, threads: int) -> list[Path]:
    scenario = load_bundled("ranged.toml")
    records = run_distance_sweep(scenario, threads)
    written: list[Path] = []
    _write(out_dir, "ranged", records, fmt, written)
    series = {"charge current [A]": [(rec.sweep_or_time, rec.i_real) for rec in records]}
    _plot(
        out_dir, "ranged", series, fmt, written,
        title="Attack impact vs distance",
        x_label="distance [m]", y_label="current [A]",
    )
    return written


def _timeline_figure(name: str, config: str, out_dir: Path, fmt: str) -> list[Path]:
    scenario = load_bundled(config)
    records = run_charging_attack(scenario)
    written: list[Path] = []
    _write(out_dir, name, records, fmt, written)
    xs = [rec.sweep_or_time for rec in records]
    series = {
        "real voltage [V]": list(zip(xs, (rec.v_real for rec in records))),
        "measured voltage [V]": list(zip(xs, (rec.v_measured for rec in records))),
        "real current [A]": list(zip(xs, (rec.i_real for rec in records))),
    }
    _plot(
        out_dir, name, series, fmt, written,
        title=scenario.label or name, x_label="time [s]", y_label="output",
    )
    temp_series = {"cell temperature [K]": list(zip(xs, (rec.temperature for rec in records)))}
    _plot(
        out_dir, f"{name}_temperature", temp_series, fmt, written,
        title=f"{scenario.label or name} (temperature)",
        x_label="time [s]", y_label="temperature [K]",
    )
    return written


def _overcurrent(out_dir: Path, fmt: str, threads: int) -> list[Path]:
    return _timeline_figure("overcurrent", "overcurrent_18650.toml", out_dir, fmt)


def _overvoltage(out_dir: Path, fmt: str, threads: int) -> list[Path]:
    return _timeline_figure("overvoltage", "overvoltage_18650.toml", out_dir, fmt)


_FIGURES = {
    "fig3": _fig3,
    "fig7": _fig7,
    "fig9": _fig9,
    "fig12": _fig12,
    "ranged": _ranged,
    "overcurrent": _overcurrent,
    "overvoltage": _overvoltage,
}
