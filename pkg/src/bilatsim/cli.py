"""Command-line front end.

Three subcommands share one option set:

``run``
    Simulate each (scheme, rate) cell and write ``<scheme>_<rate>.csv``
    traces, plus a two-panel ``.svg`` per cell unless plotting is off.
``compare``
    Run at least two schemes, analyze every cell, and write a single
    ``comparison.csv`` with one metric row per cell plus percentage-change
    columns against the fastest rate; with plots on, an overlay figure.
``sweep``
    Run a rate grid and write ``sweep.csv`` (one metric row per cell) and,
    with plots on, a summary figure of speed and rebound versus rate.

Exit codes: 0 success, 1 bad configuration or arguments, 2 numeric
divergence, 3 filesystem trouble. Traces written to disk are decimated by
``--decimate``; metrics are always computed on the full-rate trace.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import parse_config
from .engine import (
    SCHEMES,
    DERIVATIVE_MODES,
    RateConfig,
    ScenarioConfig,
    SchemeConfig,
    Trace,
    run_scenario,
)
from .errors import BilatsimError, ConfigError, DivergenceError, ValidationError
from .metrics import MetricReport, build_report, rate_sensitivity
from .plots import save_comparison_figure, save_sweep_figure, save_trace_figure
from .traceio import write_trace

__all__ = ["RunManifest", "cmd_compare", "cmd_run", "cmd_sweep", "main"]

_CHANGE_COLUMNS = ("speed_change_pct", "error_change_pct")


@dataclasses.dataclass(frozen=True)
class RunManifest:
    """Everything one invocation needs: the scenario plus the cell grid."""

    config: ScenarioConfig
    schemes: tuple[str, ...] = SCHEMES
    rates: tuple[float, ...] = ()  # empty means the config's own rate
    out_dir: str = "out"
    decimate: int = 10
    plots: bool = True

    def __post_init__(self):
        if not self.schemes:
            raise ValidationError("at least one scheme is required")
        for name in self.schemes:
            if name not in SCHEMES:
                raise ValidationError(
                    f"unknown scheme {name!r}, choose from {', '.join(SCHEMES)}"
                )
        if len(set(self.schemes)) != len(self.schemes):
            raise ValidationError(f"duplicate schemes in {self.schemes}")
        if not isinstance(self.decimate, int) or self.decimate < 1:
            raise ValidationError(f"decimate must be an int >= 1, got {self.decimate!r}")
        for rate in self.rates:
            # validates divisibility against the configured servo rate
            RateConfig(f_high=rate, f_edge=self.config.rates.f_edge)

    @property
    def cells(self) -> list[tuple[str, float]]:
        rates = self.rates or (self.config.rates.f_high,)
        return [(scheme, rate) for scheme in self.schemes for rate in rates]


def _cell_config(manifest: RunManifest, scheme: str, rate: float) -> ScenarioConfig:
    base = manifest.config
    return dataclasses.replace(
        base,
        scheme=dataclasses.replace(base.scheme, scheme=scheme),
        rates=dataclasses.replace(base.rates, f_high=rate),
    )


def _run_cell(manifest: RunManifest, scheme: str, rate: float) -> Trace:
    try:
        return run_scenario(_cell_config(manifest, scheme, rate))
    except DivergenceError as exc:
        raise DivergenceError(
            f"{scheme} at f_high={rate:g}: {exc}", step=exc.step
        ) from exc


def _stem(scheme: str, rate: float) -> str:
    return f"{scheme}_{rate:g}"


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _write_table(path: str, header: tuple[str, ...], rows: list[tuple]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_format_cell(value) for value in row) for row in rows]
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def cmd_run(manifest: RunManifest) -> list[str]:
    """Write one trace file (and optionally one figure) per cell."""
    os.makedirs(manifest.out_dir, exist_ok=True)
    written = []
    for scheme, rate in manifest.cells:
        trace = _run_cell(manifest, scheme, rate)
        thin = trace.decimate(manifest.decimate)
        stem = os.path.join(manifest.out_dir, _stem(scheme, rate))
        write_trace(thin, stem + ".csv")
        written.append(stem + ".csv")
        if manifest.plots:
            save_trace_figure(thin, stem + ".svg")
            written.append(stem + ".svg")
    return written


def _report_rows(manifest: RunManifest) -> list[tuple[str, float, MetricReport, Trace]]:
    rows = []
    for scheme, rate in manifest.cells:
        trace = _run_cell(manifest, scheme, rate)
        rows.append((scheme, rate, build_report(trace), trace))
    return rows


def _metric_header() -> tuple[str, ...]:
    return ("scheme", "f_high") + MetricReport.FIELDS


def cmd_compare(manifest: RunManifest) -> list[str]:
    """Metric table across schemes, with change columns against the fastest rate."""
    if len(manifest.schemes) < 2:
        raise ValidationError("compare needs at least two schemes")
    os.makedirs(manifest.out_dir, exist_ok=True)
    rows = _report_rows(manifest)
    fastest = max(rate for _, rate, _, _ in rows)
    baseline = {
        scheme: report for scheme, rate, report, _ in rows if rate == fastest
    }
    table = []
    for scheme, rate, report, _ in rows:
        base = baseline[scheme]
        changes = []
        for metric in ("mean_free_motion_speed", "steady_state_error"):
            ours, ref = getattr(report, metric), getattr(base, metric)
            if ours is None or ref in (None, 0.0):
                changes.append(None)
            else:
                changes.append(rate_sensitivity(ours, ref))
        table.append((scheme, rate) + tuple(report.as_dict().values()) + tuple(changes))
    out = os.path.join(manifest.out_dir, "comparison.csv")
    _write_table(out, _metric_header() + _CHANGE_COLUMNS, table)
    written = [out]
    if manifest.plots:
        figure = os.path.join(manifest.out_dir, "comparison.svg")
        save_comparison_figure(
            [trace.decimate(manifest.decimate) for _, _, _, trace in rows], figure
        )
        written.append(figure)
    return written


def cmd_sweep(manifest: RunManifest) -> list[str]:
    """Metric table over a rate grid, one row per (scheme, rate)."""
    os.makedirs(manifest.out_dir, exist_ok=True)
    rows = _report_rows(manifest)
    table = [
        (scheme, rate) + tuple(report.as_dict().values())
        for scheme, rate, report, _ in rows
    ]
    out = os.path.join(manifest.out_dir, "sweep.csv")
    _write_table(out, _metric_header(), table)
    written = [out]
    if manifest.plots:
        figure = os.path.join(manifest.out_dir, "sweep.svg")
        save_sweep_figure(
            [
                {"scheme": scheme, "f_high": rate, **report.as_dict()}
                for scheme, rate, report, _ in rows
            ],
            figure,
        )
        written.append(figure)
    return written


_COMMANDS = {"run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep}


class _Parser(argparse.ArgumentParser):
    # route argparse's own failures to exit code 1, not its default 2
    def error(self, message):
        raise ConfigError(message)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _parse_schemes(text: str) -> tuple[str, ...]:
    return tuple(part.strip().upper() for part in text.split(",") if part.strip())


def _parse_rates(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bilatsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler in _COMMANDS.items():
        cmd = sub.add_parser(name, help=handler.__doc__.splitlines()[0])
        cmd.add_argument("--config", help="scenario file; omit for the baseline")
        cmd.add_argument("--out", default="out", help="output directory (default out)")
        cmd.add_argument(
            "--schemes",
            type=_parse_schemes,
            default=SCHEMES,
            help="comma-separated couplings (default all three)",
        )
        cmd.add_argument(
            "--f-high",
            type=_parse_rates,
            default=(),
            help="comma-separated coordinator rates in Hz (default: the config's rate)",
        )
        cmd.add_argument(
            "--decimate", type=int, default=10,
            help="keep every n-th trace row on disk (default 10)",
        )
        cmd.add_argument(
            "--plots", type=_parse_bool, default=True,
            help="also render figures: true/false (default true)",
        )
        cmd.add_argument(
            "--derivative-mode", choices=DERIVATIVE_MODES, default=None,
            help="override the servo velocity-reference mode",
        )
    return parser


def _load_config(args) -> ScenarioConfig:
    if args.config is None:
        config = ScenarioConfig()
    else:
        with open(args.config, "r", encoding="utf-8") as handle:
            config = parse_config(handle.read())
    if args.derivative_mode is not None:
        config = dataclasses.replace(config, derivative_mode=args.derivative_mode)
    return config


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        manifest = RunManifest(
            config=_load_config(args),
            schemes=args.schemes,
            rates=args.f_high,
            out_dir=args.out,
            decimate=args.decimate,
            plots=args.plots,
        )
        written = _COMMANDS[args.command](manifest)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (BilatsimError, argparse.ArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
