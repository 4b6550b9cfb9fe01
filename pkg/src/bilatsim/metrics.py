"""Trace analysis: free-motion operability, contact stability, tracking error.

All functions are pure reads of a Trace; nothing here mutates or simulates.
Contact is wherever the wall-reaction column f_f is nonzero. A "bounce" is a
complete separation: a maximal interval of at least two consecutive rows with
f_f = 0 after first contact whose rebound (wall position minus follower
position) exceeds ``min_rebound``. The amplitude floor exists because a stiff
lossless wall gives every scheme a sub-milliradian elastic rebound on first
impact; only a controller that actually retreats clears the floor. Shallow
grazing intervals can still be inspected by passing ``min_rebound=0.0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import Trace
from .errors import AnalysisError, NonFiniteInputError

__all__ = [
    "DEFAULT_FREE_WINDOW",
    "MIN_REBOUND",
    "SETTLE_BAND",
    "MetricReport",
    "action_reaction_residual",
    "bounce_events",
    "build_report",
    "contact_force_peak_to_peak",
    "error_peak_to_peak",
    "free_motion_speed",
    "rate_sensitivity",
    "steady_state_error",
]

MIN_REBOUND = 5.0e-4  # rad; separations shallower than this are impact ripple
SETTLE_BAND = 1.0e-5  # rad; peak-to-peak error below this counts as settled
DEFAULT_FREE_WINDOW = (0.5, 1.0)  # s


def _window_rows(trace: Trace, window) -> tuple[int, int]:
    """Inclusive row range covering [t0, t1]; rejects empty or out-of-range."""
    try:
        t0, t1 = float(window[0]), float(window[1])
    except (TypeError, ValueError, IndexError):
        raise AnalysisError(f"window must be a (t0, t1) pair, got {window!r}") from None
    if not (math.isfinite(t0) and math.isfinite(t1)) or t0 >= t1:
        raise AnalysisError(f"need finite t0 < t1, got ({t0}, {t1})")
    t = trace.t
    if t0 < t[0] - 1e-12 or t1 > t[-1] + 1e-12:
        raise AnalysisError(
            f"window [{t0}, {t1}] outside trace range [{t[0]}, {t[-1]}]"
        )
    i = int(np.searchsorted(t, t0 - 1e-12, side="left"))
    j = int(np.searchsorted(t, t1 + 1e-12, side="right")) - 1
    if j <= i:
        raise AnalysisError(f"window [{t0}, {t1}] covers fewer than two rows")
    return i, j


def _first_contact_index(trace: Trace, start: int = 0) -> int | None:
    hits = np.flatnonzero(trace.f_f[start:] != 0.0)
    return int(hits[0]) + start if hits.size else None


def _wall_position(trace: Trace, first_contact: int) -> float:
    """The wall sits where the follower was when it was captured; recover it
    from the last pre-contact row if the trace lacks the metadata."""
    if trace.wall_position is not None:
        return trace.wall_position
    return float(trace.y_f[max(first_contact - 1, 0)])


def free_motion_speed(trace: Trace, window=DEFAULT_FREE_WINDOW) -> float:
    """Mean follower speed over a pre-contact window: displacement over time."""
    i, j = _window_rows(trace, window)
    first = _first_contact_index(trace)
    if first is not None and first <= j:
        raise AnalysisError(
            f"free-motion window ends at t={trace.t[j]:.6g} but contact "
            f"starts at t={trace.t[first]:.6g}"
        )
    return float((trace.y_f[j] - trace.y_f[i]) / (trace.t[j] - trace.t[i]))


def bounce_events(
    trace: Trace, contact_onset: float, min_rebound: float = MIN_REBOUND
) -> tuple[int, float]:
    """Count complete separations after first contact; also their deepest
    rebound. Returns (count, max_rebound)."""
    if not math.isfinite(contact_onset):
        raise NonFiniteInputError(f"contact_onset must be finite, got {contact_onset}")
    if not (math.isfinite(min_rebound) and min_rebound >= 0.0):
        raise AnalysisError(f"min_rebound must be finite and >= 0, got {min_rebound}")
    start = int(np.searchsorted(trace.t, contact_onset - 1e-12, side="left"))
    first = _first_contact_index(trace, start)
    if first is None:
        raise AnalysisError(f"no contact at or after t={contact_onset:.6g}")
    wall = _wall_position(trace, first)
    free = trace.f_f[first:] == 0.0
    edges = np.flatnonzero(np.diff(np.concatenate(([False], free, [False]))))
    count = 0
    max_rebound = 0.0
    for s, e in edges.reshape(-1, 2):  # [s, e) rows of one separation
        if e - s < 2:
            continue
        rebound = float(np.max(wall - trace.y_f[first + s : first + e]))
        if rebound > min_rebound:
            count += 1
            if rebound > max_rebound:
                max_rebound = rebound
    return count, max_rebound


def steady_state_error(trace: Trace, window) -> float:
    """Mean |y_l - y_f| over the window."""
    i, j = _window_rows(trace, window)
    return float(np.mean(np.abs(trace.y_l[i : j + 1] - trace.y_f[i : j + 1])))


def contact_force_peak_to_peak(trace: Trace, window) -> float:
    """Peak-to-peak of the wall reaction over the window.

    Diagnostic for grazing oscillation: force dips that never reach full
    separation do not count as bounce events but do widen this band.
    """
    i, j = _window_rows(trace, window)
    return float(np.ptp(trace.f_f[i : j + 1]))


def error_peak_to_peak(trace: Trace, window) -> float:
    """Peak-to-peak of y_l - y_f over the window, for settling checks."""
    i, j = _window_rows(trace, window)
    err = trace.y_l[i : j + 1] - trace.y_f[i : j + 1]
    return float(np.max(err) - np.min(err))


def action_reaction_residual(trace: Trace, window) -> float:
    """Worst |u_l_star + u_f_star| over the window; zero means the two sides
    transmit the interaction force exactly."""
    i, j = _window_rows(trace, window)
    return float(np.max(np.abs(trace.u_l_star[i : j + 1] + trace.u_f_star[i : j + 1])))


def rate_sensitivity(metric_slow: float, metric_fast: float) -> float:
    """Percent change of a metric when the coordinator rate drops."""
    if not (math.isfinite(metric_slow) and math.isfinite(metric_fast)):
        raise NonFiniteInputError(
            f"rate_sensitivity needs finite inputs, got {metric_slow}, {metric_fast}"
        )
    if metric_fast == 0.0:
        raise AnalysisError("rate_sensitivity is undefined for a zero baseline")
    return 100.0 * (metric_slow - metric_fast) / metric_fast


@dataclass(frozen=True)
class MetricReport:
    """Flat per-trace summary. Contact-dependent fields are None when the
    trace never touches the wall; reported numbers are always finite."""

    mean_free_motion_speed: float | None
    time_to_contact: float | None
    displacement_at_contact_onset: float | None
    bounce_count: int
    max_rebound: float
    steady_state_error: float
    action_reaction_residual: float
    settled: bool

    FIELDS = (
        "mean_free_motion_speed",
        "time_to_contact",
        "displacement_at_contact_onset",
        "bounce_count",
        "max_rebound",
        "steady_state_error",
        "action_reaction_residual",
        "settled",
    )

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}


def build_report(
    trace: Trace,
    free_window=DEFAULT_FREE_WINDOW,
    steady_window=None,
    min_rebound: float = MIN_REBOUND,
) -> MetricReport:
    """Extract the full metric set from one trace.

    ``steady_window`` defaults to the final 0.5 s (the whole trace if it is
    shorter). The free-motion speed is None when ``free_window`` overlaps
    contact; time-to-contact, onset displacement, bounce count and rebound
    describe the first contact and are None/zero when there is none.
    """
    t = trace.t
    steady = steady_window
    if steady is None:
        steady = (max(float(t[-1]) - 0.5, float(t[0])), float(t[-1]))
    first = _first_contact_index(trace)
    try:
        speed = free_motion_speed(trace, free_window)
    except AnalysisError:
        speed = None
    if first is None:
        time_to_contact = None
        displacement = None
        bounce_count, max_rebound = 0, 0.0
    else:
        time_to_contact = float(t[first])
        # travel up to the obstacle face; the row where force first shows is
        # already one step of penetration past it
        displacement = float(_wall_position(trace, first) - trace.y_f[0])
        bounce_count, max_rebound = bounce_events(
            trace, time_to_contact, min_rebound=min_rebound
        )
    return MetricReport(
        mean_free_motion_speed=speed,
        time_to_contact=time_to_contact,
        displacement_at_contact_onset=displacement,
        bounce_count=bounce_count,
        max_rebound=max_rebound,
        steady_state_error=steady_state_error(trace, steady),
        action_reaction_residual=action_reaction_residual(trace, steady),
        settled=error_peak_to_peak(trace, steady) < SETTLE_BAND,
    )
