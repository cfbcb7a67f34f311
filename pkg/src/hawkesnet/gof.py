"""Goodness of fit in the time dimension via the random time change.

Under a correctly specified ground intensity the compensator maps event
times to a unit-rate Poisson process, so the rescaled inter-arrivals are
i.i.d. Exp(1). The mark distribution is integrated out by this transform,
so these checks carry no information about the mark parameters.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .dynet import EventRecord
from .errors import HawkesNetError, TooFewSamples
from .estimate import fit_ground
from .kernel import GroundParams, compensator_at_events
from .process import ModelSpec, child_seed, ground_only, simulate

log = logging.getLogger(__name__)

MIN_KS_SAMPLES = 8
EXACT_BELOW = 35
MARK_CAVEAT = ("Residuals test the event times only: the time change integrates over "
               "the marks, so it says nothing about how well the mark parameters fit.")


@dataclass
class ResidualSeries:
    transformed: np.ndarray
    source: str = ""

    @property
    def inter_arrivals(self) -> np.ndarray:
        return np.diff(self.transformed, prepend=0.0)

    def __len__(self):
        return self.transformed.size

    def to_csv(self) -> str:
        lines = ["index,transformed_time"]
        lines += [f"{i},{x:.17g}" for i, x in enumerate(self.transformed)]
        return "\n".join(lines) + "\n"


def _times(events) -> np.ndarray:
    if len(events) and isinstance(events[0], EventRecord):
        return np.array([ev.time for ev in events], dtype=np.float64)
    return np.asarray(events, dtype=np.float64)


def rescale(events: Sequence[EventRecord] | np.ndarray, ground: GroundParams, source: str = "") -> ResidualSeries:
    """Compensator at each event time under ``ground``."""
    return ResidualSeries(compensator_at_events(_times(events), ground), source)


@dataclass
class KSResult:
    statistic: float
    pvalue: float
    n: int
    method: str


def ks_test(samples, method: str = "auto") -> KSResult:
    """One-sample KS test against Exp(1).

    ``method="auto"`` uses the exact distribution below 35 samples and the
    asymptotic one otherwise.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < MIN_KS_SAMPLES:
        raise TooFewSamples(f"KS test needs at least {MIN_KS_SAMPLES} samples, got {x.size}")
    if method == "auto":
        method = "exact" if x.size < EXACT_BELOW else "asymp"
    res = stats.kstest(x, "expon", method=method)
    return KSResult(float(res.statistic), float(res.pvalue), int(x.size), method)


def residual_ks(events, ground: GroundParams) -> KSResult:
    return ks_test(rescale(events, ground).inter_arrivals)


def _boot_one(args):
    spec, index, master, refit = args
    try:
        real = simulate(spec, child_seed(master, index))
        t = real.times
        g = spec.ground
        if refit and t.size >= 2:
            g = fit_ground(t, spec.T, g, restarts=1, seed=index)[0]
        return ks_test(rescale(t, g).inter_arrivals).statistic
    except HawkesNetError as exc:
        log.warning("bootstrap replication %d failed: %s", index, exc)
        return None


@dataclass
class BootstrapResult:
    pvalue: float
    observed: float
    simulated: np.ndarray
    failures: int
    reps: int


def bootstrap_pvalue(events, spec: ModelSpec, reps: int = 99, seed: int = 0, jobs: int = 1,
                     refit: bool = True, max_failure_rate: float = 0.2) -> BootstrapResult:
    """Parametric-bootstrap p-value of the residual KS statistic.

    Datasets are simulated from the fitted ground process (marks do not
    affect event times) and, with ``refit``, the ground parameters are
    re-estimated on each before computing D. The p-value is
    (1 + #{D_sim >= D_obs}) / (reps + 1).
    """
    if reps < 99:
        raise ValueError("bootstrap needs reps >= 99")
    d_obs = residual_ks(events, spec.ground).statistic
    g_spec = ground_only(spec)
    args = [(g_spec, r, seed, refit) for r in range(reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_boot_one, args))
    else:
        out = [_boot_one(a) for a in args]
    failures = sum(d is None for d in out)
    if failures > max_failure_rate * reps:
        raise HawkesNetError(f"{failures} of {reps} bootstrap replications failed")
    sim = np.array([d for d in out if d is not None])
    p = (1 + int((sim >= d_obs).sum())) / (sim.size + 1)
    return BootstrapResult(p, d_obs, sim, failures, reps)


def gof_report(events, spec: ModelSpec, boot: BootstrapResult | None = None) -> str:
    ks = residual_ks(events, spec.ground)
    lines = [
        f"n = {ks.n}",
        f"ks_statistic = {ks.statistic:.17g}",
        f"ks_pvalue = {ks.pvalue:.17g}",
        f"ks_method = {ks.method}",
    ]
    if boot is not None:
        lines += [f"bootstrap_pvalue = {boot.pvalue:.17g}", f"bootstrap_reps = {boot.reps}",
                  f"bootstrap_failures = {boot.failures}"]
    lines.append(f"caveat = {MARK_CAVEAT}")
    return "\n".join(lines) + "\n"
