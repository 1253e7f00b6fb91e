"""Windowed Pearson correlation and synchronization verdicts.

C(t) correlates the fluctuations of <sx_q> and <sx_p> over the trailing
window [t - dt, t]; C -> +1 flags in-phase locking, C -> -1 anti-phase,
|C| ~ 0 no synchronization.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedCorrelationError, ValidationError
from .quantum import Trajectory

DEFAULT_THRESHOLD_SYNC = 0.9
DEFAULT_THRESHOLD_NULL = 0.3


class SyncPhase(enum.Enum):
    IN_PHASE = "in_phase"
    ANTI_PHASE = "anti_phase"
    UNSYNCHRONIZED = "unsynchronized"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class PearsonSeries:
    times: np.ndarray
    values: np.ndarray
    window: float
    n_skipped: int = 0


@dataclass(frozen=True)
class SyncVerdict:
    phase: SyncPhase
    c_value: float
    threshold_sync: float
    threshold_null: float


def _window_slice(times: np.ndarray, t: float, delta_t: float) -> np.ndarray:
    eps = 1e-9 * max(1.0, abs(t))
    return (times >= t - delta_t - eps) & (times <= t + eps)


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xf = x - x.mean()
    yf = y - y.mean()
    vx = float(xf @ xf)
    vy = float(yf @ yf)
    if vx == 0.0 or vy == 0.0:
        raise UndefinedCorrelationError("constant series on window")
    return float((xf @ yf) / np.sqrt(vx * vy))


def pearson_windowed(x: Trajectory, y: Trajectory, t: float, delta_t: float) -> float:
    """Sample Pearson correlation of the two series on [t - dt, t]."""
    if x.times.shape != y.times.shape or np.max(np.abs(x.times - y.times)) > 1e-12:
        raise ValidationError("trajectories must share the same time grid")
    sel = _window_slice(x.times, t, delta_t)
    if np.count_nonzero(sel) < 3:
        raise ValidationError("window contains fewer than 3 samples")
    return _pearson(x.values[sel], y.values[sel])


def pearson_series(x: Trajectory, y: Trajectory, delta_t: float) -> PearsonSeries:
    """pearson_windowed at every grid time with a full trailing window.

    Windows with an undefined correlation are omitted and counted in
    n_skipped.
    """
    if x.times.shape != y.times.shape or np.max(np.abs(x.times - y.times)) > 1e-12:
        raise ValidationError("trajectories must share the same time grid")
    times, values, skipped = [], [], 0
    for t in x.times:
        if t < delta_t - 1e-9:
            continue
        sel = _window_slice(x.times, t, delta_t)
        if np.count_nonzero(sel) < 3:
            continue
        try:
            values.append(_pearson(x.values[sel], y.values[sel]))
            times.append(t)
        except UndefinedCorrelationError:
            skipped += 1
    return PearsonSeries(
        times=np.array(times), values=np.array(values), window=delta_t, n_skipped=skipped
    )


def classify_sync(
    c: float,
    threshold_sync: float = DEFAULT_THRESHOLD_SYNC,
    threshold_null: float = DEFAULT_THRESHOLD_NULL,
) -> SyncVerdict:
    if not -1.0 - 1e-12 <= c <= 1.0 + 1e-12:
        raise ValidationError(f"Pearson value {c} outside [-1, 1]")
    if c >= threshold_sync:
        phase = SyncPhase.IN_PHASE
    elif c <= -threshold_sync:
        phase = SyncPhase.ANTI_PHASE
    elif abs(c) <= threshold_null:
        phase = SyncPhase.UNSYNCHRONIZED
    else:
        phase = SyncPhase.INDETERMINATE
    return SyncVerdict(
        phase=phase,
        c_value=float(c),
        threshold_sync=threshold_sync,
        threshold_null=threshold_null,
    )
