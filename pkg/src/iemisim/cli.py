"""Command-line entry points.

Exit codes: 0 on success, 1 on validation failure (bad config, unknown
reproduction id), 2 on runtime errors.  Diagnostics go to stderr; results go
to files and stdout only.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import figures
from .config import ConfigError, dump_config, parse_config
from .coupling import InjectionPoint
from .results import write_results
from .scenario import (
    CalibrationTarget,
    SweepVariable,
    calibrate_scenario,
    run_charging_attack,
    run_sweep,
)
from .svgplot import emit_plot


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for violation in exc.violations:
            print(str(violation), file=sys.stderr)
        return 1
    except figures.UnknownFigure as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iemisim",
        description="Simulate electromagnetic sensor-spoofing attacks on power converters and chargers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario config and report violations")
    p.add_argument("config")
    _common_flags(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("sweep", help="run the configured frequency/power/distance sweep")
    p.add_argument("config")
    _common_flags(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("charge", help="run a time-domain charging attack")
    p.add_argument("config")
    _common_flags(p)
    p.set_defaults(func=_cmd_charge)

    p = sub.add_parser("calibrate", help="fit one coupling peak so a target effect is reproduced")
    p.add_argument("config")
    p.add_argument("--target", required=True, metavar="FIELD=VALUE",
                   help="e.g. delta_i=1.0 or v_real=5.5 (fields: v_real, i_real, delta_v, delta_i)")
    p.add_argument("--knob", default="current", metavar="POINT[:INDEX]",
                   help="injection point (voltage|current|monitor) and peak index, default current:0")
    _common_flags(p)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("reproduce", help="run a bundled reference scenario by figure id")
    p.add_argument("figure_id", help=f"one of: {', '.join(figures.figure_ids())}")
    _common_flags(p)
    p.set_defaults(func=_cmd_reproduce)
    return parser


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=".", help="output directory (default: current directory)")
    p.add_argument("--format", choices=("csv", "svg", "both"), default="both",
                   help="which result files to write (default: both)")
    p.add_argument("--threads", type=int, default=1, help="sweep-point parallelism (default: 1)")
    p.add_argument("--quiet", action="store_true", help="suppress progress notes")


def _note(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_validate(args) -> int:
    parse_config(args.config)
    _note(args, f"{args.config}: ok")
    return 0


_X_LABELS = {
    SweepVariable.FREQUENCY: "frequency [Hz]",
    SweepVariable.POWER: "transmit power [W]",
    SweepVariable.DISTANCE: "distance [m]",
}


def _cmd_sweep(args) -> int:
    scenario = parse_config(args.config)
    if scenario.sweep is None:
        print("error: config has no [sweep] section (use `charge` for timelines)", file=sys.stderr)
        return 1
    records = run_sweep(scenario, threads=max(1, args.threads))
    stem = Path(args.config).stem
    out = _out_dir(args)
    if args.format in ("csv", "both"):
        path = out / f"{stem}.csv"
        write_results(records, path)
        _note(args, f"wrote {path}")
    if args.format in ("svg", "both"):
        path = out / f"{stem}.svg"
        xs = [r.sweep_or_time for r in records]
        emit_plot(
            {
                "output voltage [V]": list(zip(xs, (r.v_real for r in records))),
                "output current [A]": list(zip(xs, (r.i_real for r in records))),
            },
            path,
            title=scenario.label or stem,
            x_label=_X_LABELS[scenario.sweep.variable],
            y_label="output",
            log_x=scenario.sweep.spacing == "log",
        )
        _note(args, f"wrote {path}")
    return 0


def _cmd_charge(args) -> int:
    scenario = parse_config(args.config)
    records = run_charging_attack(scenario)
    stem = Path(args.config).stem
    out = _out_dir(args)
    if args.format in ("csv", "both"):
        path = out / f"{stem}.csv"
        write_results(records, path)
        _note(args, f"wrote {path}")
    if args.format in ("svg", "both"):
        xs = [r.sweep_or_time for r in records]
        path = out / f"{stem}.svg"
        emit_plot(
            {
                "real voltage [V]": list(zip(xs, (r.v_real for r in records))),
                "measured voltage [V]": list(zip(xs, (r.v_measured for r in records))),
                "real current [A]": list(zip(xs, (r.i_real for r in records))),
            },
            path,
            title=scenario.label or stem,
            x_label="time [s]",
            y_label="output",
        )
        _note(args, f"wrote {path}")
        temp_path = out / f"{stem}_temperature.svg"
        emit_plot(
            {"cell temperature [K]": list(zip(xs, (r.temperature for r in records)))},
            temp_path,
            title=(scenario.label or stem) + " (temperature)",
            x_label="time [s]",
            y_label="temperature [K]",
        )
        _note(args, f"wrote {temp_path}")
    return 0


def _cmd_calibrate(args) -> int:
    scenario = parse_config(args.config)
    field, _, raw_value = args.target.partition("=")
    if not raw_value:
        print("error: --target must look like FIELD=VALUE", file=sys.stderr)
        return 1
    try:
        target = CalibrationTarget(field.strip(), float(raw_value))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    point_name, _, index_raw = args.knob.partition(":")
    try:
        point = InjectionPoint(point_name.strip())
    except ValueError:
        print("error: --knob point must be voltage, current, or monitor", file=sys.stderr)
        return 1
    peak_index = int(index_raw) if index_raw else 0

    calibrated = calibrate_scenario(scenario, target, point, peak_index)
    kappa = calibrated.coupling[point].peaks[peak_index].peak_kappa
    out = _out_dir(args)
    path = out / f"{Path(args.config).stem}_calibrated.toml"
    path.write_text(dump_config(calibrated), encoding="utf-8")
    _note(args, f"wrote {path}")
    print(f"peak_kappa = {kappa!r}")
    return 0


def _cmd_reproduce(args) -> int:
    written = figures.reproduce(
        args.figure_id,
        out_dir=_out_dir(args),
        fmt=args.format,
        threads=max(1, args.threads),
    )
    for path in written:
        _note(args, f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
