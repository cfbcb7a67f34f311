"""Exponential ground-intensity kernel: intensity, compensator and the O(n) recursion."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .errors import EventAfterHorizon, NonSimpleEvents, StabilityWarning, UnsortedEvents

MIN_GAP = 1e-12


@dataclass(frozen=True)
class GroundParams:
    """mu + K * sum_i exp(-beta (t - t_i)) over past event times."""

    mu: float
    K: float
    beta: float

    def __post_init__(self):
        if not (self.mu >= 0 and self.K >= 0 and self.beta > 0):
            raise ValueError(f"need mu >= 0, K >= 0, beta > 0; got {self}")

    @property
    def branching_ratio(self) -> float:
        return self.K / self.beta

    @property
    def stable(self) -> bool:
        return self.branching_ratio < 1

    def warn_if_unstable(self) -> None:
        if not self.stable:
            warnings.warn(f"K/beta = {self.branching_ratio:.4g} >= 1: process is supercritical",
                          StabilityWarning, stacklevel=3)


def check_times(times, min_gap: float = MIN_GAP) -> np.ndarray:
    t = np.asarray(times, dtype=np.float64)
    if t.size > 1:
        gaps = np.diff(t)
        if np.any(gaps <= 0):
            raise UnsortedEvents("event times must be strictly increasing")
        if np.any(gaps < min_gap):
            raise NonSimpleEvents(f"events closer than {min_gap:g} are not simple")
    return t


def ground_intensity(t: float, event_times, p: GroundParams) -> float:
    times = np.asarray(event_times, dtype=np.float64)
    past = times[times < t]
    return p.mu + p.K * float(np.exp(-p.beta * (t - past)).sum())


def excitation_sum_recursive(event_times, beta: float) -> np.ndarray:
    """A_i = sum_{j<i} exp(-beta (t_i - t_j)) via A_i = e^{-beta dt}(1 + A_{i-1})."""
    return _k.excitation_sums(check_times(event_times), float(beta))


def compensator(T: float, event_times, p: GroundParams) -> float:
    """Integral of the ground intensity over [0, T]."""
    t = np.asarray(event_times, dtype=np.float64)
    if t.size and t[-1] > T:
        raise EventAfterHorizon(f"event at {t[-1]!r} after horizon {T!r}")
    return p.mu * T + p.K / p.beta * float((-np.expm1(-p.beta * (T - t))).sum())


def compensator_at_events(event_times, p: GroundParams) -> np.ndarray:
    """Compensator evaluated at each event time (O(n))."""
    t = check_times(event_times)
    a = excitation_sum_recursive(t, p.beta)
    return p.mu * t + p.K / p.beta * (np.arange(t.size) - a)


def ground_loglik(event_times, T: float, p: GroundParams) -> float:
    """sum_i log(mu + K A_i) - compensator(T); -inf when an event has zero intensity."""
    t = np.asarray(event_times, dtype=np.float64)
    if t.size == 0:
        return -p.mu * T
    a = excitation_sum_recursive(t, p.beta)
    lam = p.mu + p.K * a
    with np.errstate(divide="ignore"):
        return float(np.log(lam).sum()) - compensator(T, t, p)

