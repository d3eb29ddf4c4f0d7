"""CSV result files: fixed column set, 9 significant digits, deterministic.

The CSV is the source of truth for a run; plots are derived from it.
Missing values (no battery, no charger) serialize as empty cells.
"""

from __future__ import annotations

import math
from decimal import Decimal
from pathlib import Path

from .scenario import ScenarioRecord

COLUMNS = (
    "sweep_or_time",
    "frequency_hz",
    "power_w",
    "distance_m",
    "v_real_v",
    "i_real_a",
    "v_meas_v",
    "i_meas_a",
    "phase",
    "mode",
    "soc",
    "temp_k",
    "health",
    "events",
)


def format_number(x: float) -> str:
    """Decimal (positional) notation with 9 significant digits; nan -> ''."""
    if math.isnan(x):
        return ""
    s = f"{x:.9g}"
    if "e" in s or "E" in s:
        s = format(Decimal(s), "f")
    return s


def _row(record: ScenarioRecord) -> str:
    numbers = (
        record.sweep_or_time,
        record.frequency_hz,
        record.power_w,
        record.distance_m,
        record.v_real,
        record.i_real,
        record.v_measured,
        record.i_measured,
    )
    cells = [format_number(x) for x in numbers]
    cells += [record.phase, record.mode]
    cells += [format_number(record.soc), format_number(record.temperature)]
    cells += [record.health, record.events]
    return ",".join(cells)


def render_results(records: list[ScenarioRecord]) -> str:
    lines = [",".join(COLUMNS)]
    lines += [_row(r) for r in records]
    return "\n".join(lines) + "\n"


def write_results(records: list[ScenarioRecord], path: str | Path) -> None:
    Path(path).write_text(render_results(records), encoding="utf-8")


def read_results(path: str | Path) -> list[ScenarioRecord]:
    """Parse a result file back into records (numbers at the 9-digit precision)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln]
    header = lines[0].split(",")
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected result columns: {header}")
    out = []
    for line in lines[1:]:
        cells = line.split(",", len(COLUMNS) - 1)
        if len(cells) != len(COLUMNS):
            raise ValueError(f"malformed result row: {line!r}")
        nums = [float(c) if c else math.nan for c in cells[:8]]
        out.append(
            ScenarioRecord(
                sweep_or_time=nums[0],
                frequency_hz=nums[1],
                power_w=nums[2],
                distance_m=nums[3],
                v_real=nums[4],
                i_real=nums[5],
                v_measured=nums[6],
                i_measured=nums[7],
                phase=cells[8],
                mode=cells[9],
                soc=float(cells[10]) if cells[10] else math.nan,
                temperature=float(cells[11]) if cells[11] else math.nan,
                health=cells[12],
                events=cells[13],
            )
        )
    return out
