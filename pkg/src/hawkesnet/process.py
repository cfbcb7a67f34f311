"""Network-marked Hawkes process: joint intensity, thinning simulation and stability diagnostics."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dynet import DynamicNetwork, EventRecord, Mark, replay
from .errors import (
    ExplosionGuard,
    InvalidMark,
    HawkesNetError,
    NonIntegrableKernel,
    StabilityWarning,
    Unstable,
)
from .kernel import MIN_GAP, GroundParams, ground_intensity
from .markmodel import MarkModelSpec, NodeAux, log_prob_mark, sample_mark

DEFAULT_MAX_EVENTS = 10_000_000


@dataclass(frozen=True)
class ModelSpec:
    ground: GroundParams
    mark: MarkModelSpec
    T: float
    node_cutoff: float | None = None

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        if self.node_cutoff is not None and not 0 < self.node_cutoff <= 1:
            raise ValueError("node_cutoff must lie in (0, 1]")

    @property
    def cutoff_time(self) -> float | None:
        return None if self.node_cutoff is None else self.node_cutoff * self.T

    def params(self) -> dict[str, float]:
        g = self.ground
        return {"mu": g.mu, "K": g.K, "beta": g.beta, **self.mark.params()}

    def with_params(self, values: dict[str, float]) -> "ModelSpec":
        g = self.ground
        ground = GroundParams(float(values.get("mu", g.mu)), float(values.get("K", g.K)),
                              float(values.get("beta", g.beta)))
        return replace(self, ground=ground, mark=self.mark.with_params(values))

    def to_dict(self) -> dict:
        d = {"mu": self.ground.mu, "K": self.ground.K, "beta": self.ground.beta, "T": self.T,
             "mark": self.mark.to_dict()}
        if self.node_cutoff is not None:
            d["node_cutoff"] = self.node_cutoff
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(GroundParams(d["mu"], d["K"], d["beta"]), MarkModelSpec.from_dict(d["mark"]),
                   d["T"], d.get("node_cutoff"))


@dataclass
class Realization:
    events: list[EventRecord]
    aux: NodeAux
    spec: ModelSpec | None = None
    seed: int | None = None
    T: float | None = None
    clamp_events: int = 0
    empty_marks: int = 0

    def __post_init__(self):
        if self.T is None and self.spec is not None:
            self.T = self.spec.T

    @property
    def times(self) -> np.ndarray:
        return np.array([ev.time for ev in self.events], dtype=np.float64)

    def network(self) -> DynamicNetwork:
        return replay(self.events)


TRIVIAL_MARK = MarkModelSpec("cs", stats=(), theta=(), lambda_nodes=0.0)


def ground_only(spec: ModelSpec) -> ModelSpec:
    """Same ground process with marks that never add anything."""
    return replace(spec, mark=TRIVIAL_MARK, node_cutoff=None)


def child_seed(master: int, index: int) -> int:
    """Seed of replication ``index`` derived from ``master``.

    Rule: first 64-bit word of ``SeedSequence([master, index])``; independent
    of how replications are scheduled across workers.
    """
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1, np.uint64)[0])


def _rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def simulate(spec: ModelSpec, seed=None, max_events: int = DEFAULT_MAX_EVENTS) -> Realization:
    """Ogata thinning with a dominating rate refreshed after every candidate.

    Between events the exponential ground intensity only decays, so the
    intensity just after the current point bounds it until the next one.
    """
    rng = _rng(seed)
    g, T = spec.ground, spec.T
    g.warn_if_unstable()
    mu, K, beta = g.mu, g.K, g.beta
    cutoff = spec.cutoff_time
    net, aux = DynamicNetwork(), NodeAux()
    events: list[EventRecord] = []
    t, excite, last = 0.0, 0.0, -math.inf
    clamps = empties = 0
    while True:
        bound = mu + K * excite
        if bound <= 0:
            break
        step = rng.exponential(1.0 / bound)
        if t + step > T:
            break
        t += step
        excite *= math.exp(-beta * step)
        lam = mu + K * excite
        assert lam <= bound * (1 + 1e-12), "dominating rate violated"
        if rng.random() * bound > lam:
            continue
        if t - last < MIN_GAP:
            continue
        mark, c = sample_mark(spec.mark, net, aux, t, rng, node_rate_on=cutoff is None or t <= cutoff)
        net.apply(t, mark)
        aux.record(t, mark)
        events.append(EventRecord(t, mark))
        clamps += c
        empties += mark.is_empty
        excite += 1.0
        last = t
        if len(events) >= max_events:
            partial = Realization(events, aux, spec, seed if isinstance(seed, int) else None,
                                  clamp_events=clamps, empty_marks=empties)
            raise ExplosionGuard(f"event ceiling {max_events} reached at t={t:.6g}", partial)
    return Realization(events, aux, spec, seed if not isinstance(seed, np.random.Generator) else None,
                       clamp_events=clamps, empty_marks=empties)


def joint_intensity(spec: ModelSpec, events_before_t: Sequence[EventRecord], t: float, m: Mark,
                    aux: NodeAux | None = None) -> float:
    """q(m | t, H_t) * ground intensity at t; 0 for marks invalid against the state at t-."""
    net = replay(events_before_t)
    if aux is None:
        aux = NodeAux()
        for ev in events_before_t:
            aux.record(ev.time, ev.mark)
    rate = ground_intensity(t, [ev.time for ev in events_before_t], spec.ground)
    cutoff = spec.cutoff_time
    try:
        lq = log_prob_mark(spec.mark, net, aux, t, m, node_rate_on=cutoff is None or t <= cutoff)
    except (InvalidMark, HawkesNetError):
        return 0.0
    return math.exp(lq) * rate


def branching_ratio(spec: ModelSpec | GroundParams) -> float:
    """K / beta for the exponential ground kernel; warns when >= 1."""
    g = spec.ground if isinstance(spec, ModelSpec) else spec
    r = g.K / g.beta
    if r >= 1:
        warnings.warn(f"branching ratio {r:.4g} >= 1", StabilityWarning, stacklevel=2)
    return r


def mean_intensity_estimate(spec: ModelSpec | GroundParams) -> float:
    """Long-run event rate mu / (1 - K/beta) of a stationary process."""
    g = spec.ground if isinstance(spec, ModelSpec) else spec
    r = g.K / g.beta
    if r >= 1:
        raise Unstable(f"branching ratio {r:.4g} >= 1 has no stationary mean")
    return g.mu / (1 - r)


# ---------------------------------------------------------------------------
# Monte Carlo branching-ratio diagnostic for history-dependent kernels


class DiagnosticKernel:
    """A kernel g(s, m_i | H) = amplitude(m_i, H) * shape(s)."""

    def amplitude(self, mark: Mark, net: DynamicNetwork) -> float:
        raise NotImplementedError

    def integral(self, horizon: float) -> float:
        """Integral of the time shape over [0, horizon]."""
        raise NotImplementedError


@dataclass(frozen=True)
class ExponentialKernel(DiagnosticKernel):
    K: float
    beta: float

    def amplitude(self, mark, net):
        return self.K

    def integral(self, horizon):
        return -math.expm1(-self.beta * horizon) / self.beta


def triangles_touching(mark: Mark, net: DynamicNetwork) -> int:
    tris = set()
    for u, v in mark.new_edges:
        for w in net.adj[u] & net.adj[v]:
            tris.add(frozenset((u, v, w)))
    return len(tris)


@dataclass(frozen=True)
class TriangleFeedbackKernel(DiagnosticKernel):
    """alpha (1 + gamma * #triangles containing the mark's edges) e^{-beta s}."""

    alpha: float
    beta: float
    gamma: float

    def amplitude(self, mark, net):
        return self.alpha * (1 + self.gamma * triangles_touching(mark, net))

    def integral(self, horizon):
        return -math.expm1(-self.beta * horizon) / self.beta


@dataclass(frozen=True)
class DegreePowerLawKernel(DiagnosticKernel):
    """(sum of degrees of the mark's nodes / N)^alpha (1 + s/c)^{-p}."""

    alpha: float
    c: float
    p: float

    def __post_init__(self):
        if self.p <= 1:
            raise NonIntegrableKernel(f"power-law kernel with p={self.p} <= 1 is not integrable")

    def amplitude(self, mark, net):
        nodes = mark.touched_nodes()
        if not nodes or net.n_nodes == 0:
            return 0.0
        return (sum(net.degree(v) for v in nodes) / net.n_nodes) ** self.alpha

    def integral(self, horizon):
        if math.isinf(horizon):
            return self.c / (self.p - 1)
        return self.c / (1 - self.p) * ((1 + horizon / self.c) ** (1 - self.p) - 1)


@dataclass
class BranchingEstimate:
    mean: float
    se: float
    per_history: list[float] = field(default_factory=list)
    max_event: float = 0.0

    @property
    def violated(self) -> bool:
        """Heuristic: some sampled history averaged at least one offspring per event."""
        return any(x >= 1 for x in self.per_history)


def estimate_branching_ratio_mc(kernel: DiagnosticKernel, spec: ModelSpec, horizon: float, reps: int,
                                seed=None) -> BranchingEstimate:
    """Mean expected offspring per event along simulated histories.

    Each replication simulates a history from ``spec`` and averages, over its
    events, the kernel integrated over [0, horizon] with the amplitude taken
    against the final network. This is a heuristic stand-in for the supremum
    over all histories, which cannot be computed.
    """
    master = _rng(seed)
    vals, top = [], 0.0
    for _ in range(reps):
        real = simulate(spec, master.integers(2**63))
        net = real.network()
        shape = kernel.integral(horizon)
        per = [kernel.amplitude(ev.mark, net) * shape for ev in real.events]
        if per:
            vals.append(float(np.mean(per)))
            top = max(top, max(per))
    arr = np.asarray(vals)
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else math.nan
    return BranchingEstimate(float(arr.mean()) if arr.size else math.nan, se, vals, top)
