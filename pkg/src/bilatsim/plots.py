"""Static vector-graphic renderings of traces and sweep summaries.

All figures are SVG files rendered headless with a pinned hash salt and no
timestamp metadata, so a rerun over identical data produces identical bytes. Axis limits always come from the data plus a 5%
margin; nothing is hard coded to a particular scenario.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .engine import Trace

__all__ = ["save_comparison_figure", "save_sweep_figure", "save_trace_figure"]

_SALT = "bilatsim"

_SCHEME_COLORS = {"SPBT": "tab:blue", "FRBT": "tab:red", "IGBT": "tab:green"}


def _new_figure(n_rows: int):
    plt.rcParams["svg.hashsalt"] = _SALT
    fig, axes = plt.subplots(
        n_rows, 1, figsize=(7.0, 2.6 * n_rows), sharex=True, constrained_layout=True
    )
    axes = [axes] if n_rows == 1 else list(axes)
    for ax in axes:
        ax.margins(x=0.05, y=0.05)
        ax.grid(True, alpha=0.3)
    return fig, axes


def _save(fig, path: str | os.PathLike) -> None:
    # a None date keeps rerun bytes identical
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _label(trace: Trace) -> str:
    rate = f"{trace.f_high:g} Hz" if trace.f_high else "?"
    return f"{trace.scheme or 'trace'} @ {rate}"


def _color(trace: Trace):
    return _SCHEME_COLORS.get(trace.scheme)


def save_trace_figure(trace: Trace, path: str | os.PathLike) -> None:
    """Two stacked panels: follower position, then position error, versus time."""
    fig, (top, bottom) = _new_figure(2)
    top.plot(trace.t, trace.y_f, color=_color(trace), linewidth=1.0)
    top.set_ylabel("follower position [rad]")
    top.set_title(_label(trace))
    bottom.plot(trace.t, trace.y_l - trace.y_f, color="black", linewidth=1.0)
    bottom.set_ylabel("position error [rad]")
    bottom.set_xlabel("time [s]")
    _save(fig, path)


def save_comparison_figure(traces: list[Trace], path: str | os.PathLike) -> None:
    """Overlay of several runs, same two-panel layout as the single-run figure."""
    fig, (top, bottom) = _new_figure(2)
    solid = True
    for trace in traces:
        style = "-" if solid else "--"
        solid = not solid
        top.plot(
            trace.t, trace.y_f, style, color=_color(trace),
            linewidth=1.0, label=_label(trace),
        )
        bottom.plot(
            trace.t, trace.y_l - trace.y_f, style, color=_color(trace), linewidth=1.0
        )
    top.set_ylabel("follower position [rad]")
    top.legend(loc="best", fontsize="small")
    bottom.set_ylabel("position error [rad]")
    bottom.set_xlabel("time [s]")
    _save(fig, path)


def save_sweep_figure(rows: list[dict], path: str | os.PathLike) -> None:
    """Summary of a coordinator-rate sweep.

    ``rows`` are flat records with at least ``scheme``, ``f_high``,
    ``mean_free_motion_speed``, and ``max_rebound`` keys: speed shows how
    operability holds up as the exchange rate drops, rebound how contact
    stability does.
    """
    fig, (top, bottom) = _new_figure(2)
    schemes = sorted({row["scheme"] for row in rows})
    for scheme in schemes:
        cells = sorted(
            (row for row in rows if row["scheme"] == scheme),
            key=lambda row: row["f_high"],
        )
        rates = [row["f_high"] for row in cells]
        color = _SCHEME_COLORS.get(scheme)
        speeds = [
            float("nan") if row["mean_free_motion_speed"] is None
            else row["mean_free_motion_speed"]
            for row in cells
        ]
        top.plot(rates, speeds, "o-", color=color, label=scheme)
        bottom.plot(rates, [row["max_rebound"] for row in cells], "o-", color=color)
    top.set_ylabel("free-motion speed [rad/s]")
    top.legend(loc="best", fontsize="small")
    bottom.set_ylabel("max rebound [rad]")
    bottom.set_xlabel("coordinator rate [Hz]")
    for ax in (top, bottom):
        ax.set_xscale("log")
    _save(fig, path)
