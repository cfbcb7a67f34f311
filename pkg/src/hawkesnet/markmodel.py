"""Mark distributions q(m | t, H_t): which nodes and edges an event adds.

Every variant draws a number of new nodes and then treats each candidate edge
as an independent Bernoulli trial, so

    log q(m) = sum_c [e_c log p_c + (1 - e_c) log(1 - p_c)] + log P(#new nodes).

Edge probabilities decay with the time since the candidate's activity time,
``exp(-tau * dt)``:

* ``ba``  -- one new node; p_i = d_i e^{-tau dt_i} / sum_k d_k e^{-tau dt_k}
* ``cs``  -- p = (nu + e^{-tau dt}) * logistic(theta . change_stats)
* ``sbm`` -- p = e^{-tau dt} * C[x_i, x_new]
* ``ls``  -- p = e^{-tau dt} * logistic(theta * ||x_i - x_new||)

Probabilities of ``cs``/``sbm``/``ls`` are clamped to ``1 - 1e-12``.

The same vectorised evaluator serves single events (sampling, density
evaluation) and whole realisations (:class:`MarkDesign`, used by the
likelihood), so both paths share one definition of every probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from . import _kernels as _k
from .dynet import DynamicNetwork, EventRecord, Mark, change_stat_matrix, get_statistic
from .errors import InvalidMark, MissingCommunity, MissingPosition

VARIANTS = ("ba", "cs", "sbm", "ls")
SCOPES = ("new_node_only", "all_pairs")
ACTIVITY_MODES = ("arrival", "last_edge")
DEFAULT_STATS = ("edges", "triangles", "2-star", "3-star")
CLAMP_MAX = 1.0 - 1e-12
LOG_CLAMP_MAX = math.log1p(-1e-12)


@dataclass(frozen=True)
class MarkModelSpec:
    variant: str = "ba"
    tau: float = 0.0
    theta: tuple[float, ...] = ()
    stats: tuple[str, ...] = DEFAULT_STATS
    nu: float = 0.0
    lambda_nodes: float = 1.0
    block_probs: tuple[float, ...] = ()
    block_matrix: tuple[tuple[float, ...], ...] = ()
    latent_dim: int = 2
    sigma_ls: float = 1.0
    edge_scope: str | None = None
    activity: str = "arrival"

    def __post_init__(self):
        variant = self.variant.lower()
        object.__setattr__(self, "variant", variant)
        object.__setattr__(self, "theta", tuple(float(x) for x in self.theta))
        object.__setattr__(self, "stats", tuple(self.stats))
        object.__setattr__(self, "block_probs", tuple(float(x) for x in self.block_probs))
        object.__setattr__(self, "block_matrix", tuple(tuple(float(x) for x in r) for r in self.block_matrix))
        if variant not in VARIANTS:
            raise ValueError(f"unknown mark model {self.variant!r}; expected one of {VARIANTS}")
        if self.edge_scope is None:
            object.__setattr__(self, "edge_scope", "all_pairs" if variant == "cs" else "new_node_only")
        if self.edge_scope not in SCOPES:
            raise ValueError(f"edge_scope must be one of {SCOPES}")
        if self.activity not in ACTIVITY_MODES:
            raise ValueError(f"activity must be one of {ACTIVITY_MODES}")
        if min(self.tau, self.nu, self.lambda_nodes, self.sigma_ls) < 0:
            raise ValueError("tau, nu, lambda_nodes and sigma_ls must be nonnegative")
        if variant == "cs":
            for s in self.stats:
                get_statistic(s)
            if len(self.theta) != len(self.stats):
                raise ValueError(f"cs needs one theta per statistic {self.stats}, got {self.theta}")
        if variant == "ls" and len(self.theta) != 1:
            raise ValueError("ls needs a single distance coefficient theta")
        if variant == "sbm":
            c = np.asarray(self.block_probs)
            C = np.asarray(self.block_matrix)
            if c.size == 0 or abs(c.sum() - 1) > 1e-9 or np.any(c < 0):
                raise ValueError("block_probs must be a probability vector")
            if C.shape != (c.size, c.size) or not np.allclose(C, C.T) or np.any((C < 0) | (C > 1)):
                raise ValueError("block_matrix must be a symmetric r x r matrix in [0, 1]")

    @property
    def scope(self) -> str:
        return self.edge_scope

    @property
    def has_node_count(self) -> bool:
        return self.variant != "ba"

    # named-parameter view used by the estimator
    def params(self) -> dict[str, float]:
        out = {"tau": self.tau}
        if self.variant == "cs":
            out["nu"] = self.nu
            out.update(zip(self.stats, self.theta))
        if self.variant == "ls":
            out["theta"] = self.theta[0]
        if self.variant == "sbm":
            r = len(self.block_probs)
            for a in range(r):
                for b in range(a, r):
                    out[f"C_{a}_{b}"] = self.block_matrix[a][b]
        if self.has_node_count:
            out["lambda_nodes"] = self.lambda_nodes
        return out

    def with_params(self, values: dict[str, float]) -> "MarkModelSpec":
        kw = {}
        for k in ("tau", "nu", "lambda_nodes"):
            if k in values:
                kw[k] = float(values[k])
        if self.variant == "cs" and any(s in values for s in self.stats):
            kw["theta"] = tuple(float(values.get(s, th)) for s, th in zip(self.stats, self.theta))
        if self.variant == "ls" and "theta" in values:
            kw["theta"] = (float(values["theta"]),)
        if self.variant == "sbm":
            C = [list(r) for r in self.block_matrix]
            for a in range(len(C)):
                for b in range(a, len(C)):
                    key = f"C_{a}_{b}"
                    if key in values:
                        C[a][b] = C[b][a] = float(values[key])
            kw["block_matrix"] = tuple(tuple(r) for r in C)
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = {
            "variant": self.variant,
            "tau": self.tau,
            "edge_scope": self.scope,
            "activity": self.activity,
        }
        if self.variant == "cs":
            d.update(theta=list(self.theta), stats=list(self.stats), nu=self.nu)
        if self.variant == "ls":
            d.update(theta=list(self.theta), latent_dim=self.latent_dim, sigma_ls=self.sigma_ls)
        if self.variant == "sbm":
            d.update(block_probs=list(self.block_probs), block_matrix=[list(r) for r in self.block_matrix])
        if self.has_node_count:
            d["lambda_nodes"] = self.lambda_nodes
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MarkModelSpec":
        d = dict(d)
        for k in ("theta", "stats", "block_probs"):
            if k in d:
                d[k] = tuple(d[k])
        if "block_matrix" in d:
            d["block_matrix"] = tuple(tuple(r) for r in d["block_matrix"])
        return cls(**d)


@dataclass
class NodeAux:
    """Per-node auxiliary state, indexed by node label.

    ``community`` (sbm) and ``position`` (ls) are filled when a node is
    created, possibly before the node is added to the network. ``last_edge``
    holds the time of the node's latest edge, or its arrival time.
    """

    community: list[int] = field(default_factory=list)
    position: list[np.ndarray] = field(default_factory=list)
    last_edge: list[float] = field(default_factory=list)

    def record(self, t: float, mark: Mark) -> None:
        for _ in mark.new_nodes:
            self.last_edge.append(t)
        for u, v in mark.new_edges:
            self.last_edge[u] = t
            self.last_edge[v] = t

    def copy(self) -> "NodeAux":
        return NodeAux(list(self.community), [p.copy() for p in self.position], list(self.last_edge))

    def to_dict(self) -> dict:
        d = {}
        if self.community:
            d["community"] = [int(c) for c in self.community]
        if self.position:
            d["position"] = [[float(x) for x in p] for p in self.position]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NodeAux":
        return cls(community=[int(c) for c in d.get("community", [])],
                   position=[np.asarray(p, dtype=float) for p in d.get("position", [])])


# ---------------------------------------------------------------------------
# candidate edges and their features


def candidate_pairs(net: DynamicNetwork, n_new: int, scope: str, adjacency=None) -> tuple[np.ndarray, np.ndarray]:
    """Candidate edges (u < v) for an event adding ``n_new`` nodes.

    ``new_node_only`` pairs every new node with every existing node;
    ``all_pairs`` takes every absent edge among existing and new nodes.
    """
    n = net.n_nodes
    if scope == "new_node_only":
        old = np.arange(n, dtype=np.int64)
        return np.tile(old, n_new), np.repeat(np.arange(n, n + n_new, dtype=np.int64), n)
    total = n + n_new
    iu, iv = np.triu_indices(total, 1)
    if net.n_edges:
        a = net.adjacency_matrix() if adjacency is None else adjacency
        old = iv < n
        keep = np.ones(iu.size, dtype=bool)
        keep[old] = a[iu[old], iv[old]] == 0
        iu, iv = iu[keep], iv[keep]
    return iu.astype(np.int64), iv.astype(np.int64)


def activity_times(net: DynamicNetwork, aux: NodeAux | None, mode: str) -> np.ndarray:
    if mode == "last_edge":
        if aux is None or len(aux.last_edge) < net.n_nodes:
            raise ValueError("last_edge activity needs NodeAux.last_edge for every node")
        return np.asarray(aux.last_edge[: net.n_nodes], dtype=np.float64)
    return np.asarray(net.node_birth, dtype=np.float64)


def pair_elapsed(act: np.ndarray, t: float, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Time since the most recent activity among a pair's existing endpoints (0 if both new)."""
    n = act.size
    au = np.where(u < n, act[np.minimum(u, n - 1)] if n else -np.inf, -np.inf)
    av = np.where(v < n, act[np.minimum(v, n - 1)] if n else -np.inf, -np.inf)
    last = np.maximum(au, av)
    return np.where(np.isfinite(last), t - last, 0.0)


@dataclass
class MarkDesign:
    """Candidate edges of one or many events, stacked for vectorised evaluation.

    Entries are grouped by event (``seg`` is nondecreasing). ``x`` holds the
    variant-specific feature: log degree (ba), change statistics (cs), the two
    endpoint communities (sbm) or endpoint distance (ls).
    """

    variant: str
    seg: np.ndarray
    dt: np.ndarray
    x: np.ndarray
    e: np.ndarray
    event_times: np.ndarray
    node_counts: np.ndarray
    impossible: int = 0

    @property
    def n_events(self) -> int:
        return self.event_times.size

    def __post_init__(self):
        self._prepare()

    def _prepare(self):
        if self.seg.size:
            starts = np.flatnonzero(np.r_[True, self.seg[1:] != self.seg[:-1]])
        else:
            starts = np.zeros(0, dtype=np.int64)
        self.starts = starts
        local = np.zeros(self.seg.size, dtype=np.int64)
        if starts.size:
            local[starts[1:]] = 1
            local = np.cumsum(local)
        self.local = local
        self.sizes = np.diff(np.r_[starts, self.seg.size])
        self.e_idx = np.flatnonzero(self.e)
        self._packed = None

    def packed(self):
        """Deduplicated (features, elapsed time, outcome) rows with counts, built once."""
        if self._packed is None:
            ux, xi = np.unique(self.x, axis=0, return_inverse=True)
            udt, di = np.unique(self.dt, return_inverse=True)
            key = (xi.reshape(-1).astype(np.int64) * udt.size + di) * 2 + self.e
            keys, cnt = np.unique(key, return_counts=True)
            self._packed = (np.ascontiguousarray(ux, dtype=np.float64), udt, keys // 2 // udt.size,
                            keys // 2 % udt.size, (keys % 2).astype(np.bool_), cnt.astype(np.int64))
        return self._packed


def _empty_x(spec: MarkModelSpec, m: int = 0):
    if spec.variant == "cs":
        return np.zeros((m, len(spec.stats)))
    if spec.variant == "sbm":
        return np.zeros((m, 2), dtype=np.int64)
    return np.zeros(m)


def event_features(spec: MarkModelSpec, net: DynamicNetwork, aux: NodeAux | None, t: float,
                   n_new: int, adjacency=None):
    """(u, v, dt, x) for every candidate edge of an event adding ``n_new`` nodes at ``t``."""
    if spec.variant == "ba":
        if n_new != 1:
            return (np.zeros(0, np.int64),) * 2 + (np.zeros(0), _empty_x(spec))
        scope = "new_node_only"
    else:
        scope = spec.scope
    u, v = candidate_pairs(net, n_new, scope, adjacency)
    act = activity_times(net, aux, spec.activity)
    dt = pair_elapsed(act, t, u, v)
    n = net.n_nodes
    if spec.variant == "ba":
        with np.errstate(divide="ignore"):
            x = np.log(net.degrees().astype(float))[u]
    elif spec.variant == "cs":
        x = change_stat_matrix(net, u, v, spec.stats, n_total=n + n_new, adjacency=adjacency)
    elif spec.variant == "sbm":
        if aux is None or len(aux.community) < n + n_new:
            raise MissingCommunity("every node, including new ones, needs a community label")
        comm = np.asarray(aux.community[: n + n_new], dtype=np.int64)
        x = np.stack([comm[u], comm[v]], axis=1) if u.size else _empty_x(spec)
    else:
        if aux is None or len(aux.position) < n + n_new:
            raise MissingPosition("every node, including new ones, needs a latent position")
        pos = np.asarray(aux.position[: n + n_new], dtype=float).reshape(n + n_new, -1)
        x = np.linalg.norm(pos[u] - pos[v], axis=1) if u.size else _empty_x(spec)
    return u, v, dt, x


def _log_sigmoid(z):
    return -np.logaddexp(0.0, -z)


def edge_logprobs(spec: MarkModelSpec, design: MarkDesign) -> tuple[np.ndarray, int]:
    """log p for every design entry, and the number of clamped probabilities."""
    dt, x = design.dt, design.x
    if dt.size == 0:
        return np.zeros(0), 0
    decay = -spec.tau * dt
    if spec.variant == "ba":
        lw = x + decay
        mx = np.maximum.reduceat(lw, design.starts)
        safe = np.where(np.isfinite(mx), mx, 0.0)
        s = np.add.reduceat(np.exp(lw - safe[design.local]), design.starts)
        with np.errstate(divide="ignore", invalid="ignore"):
            lse = safe + np.log(s)
            logp = lw - lse[design.local]
        # no positive degree anywhere: uniform over existing nodes
        dead = ~np.isfinite(mx)
        if dead.any():
            rows = dead[design.local]
            logp[rows] = -np.log(design.sizes[design.local[rows]])
        return logp, 0
    if spec.variant == "cs":
        if spec.nu > 0:
            decay = np.logaddexp(math.log(spec.nu), decay)
        logp = decay + _log_sigmoid(x @ np.asarray(spec.theta))
    elif spec.variant == "sbm":
        with np.errstate(divide="ignore"):
            logC = np.log(np.asarray(spec.block_matrix))
        logp = decay + logC[x[:, 0], x[:, 1]]
    else:
        logp = decay + _log_sigmoid(spec.theta[0] * x)
    over = logp > LOG_CLAMP_MAX
    n_clamped = int(over.sum())
    if n_clamped:
        logp = np.where(over, LOG_CLAMP_MAX, logp)
    return logp, n_clamped


@dataclass
class MarkLogLik:
    value: float
    edge_term: float
    node_term: float
    clamped: int = 0
    zero_edges: int = 0
    impossible: int = 0


def _log1m_exp(logp):
    with np.errstate(divide="ignore"):
        return np.log1p(-np.exp(logp))


def node_count_loglik(lam: float, counts: np.ndarray, rate_on: np.ndarray | None = None) -> float:
    counts = np.asarray(counts)
    if rate_on is None:
        rate_on = np.ones(counts.size, dtype=bool)
    if np.any(counts[~rate_on] > 0):
        return -math.inf
    k = counts[rate_on]
    if lam == 0:
        return 0.0 if not k.any() else -math.inf
    return float((k * math.log(lam) - lam - gammaln(k + 1)).sum())


def design_loglik(spec: MarkModelSpec, design: MarkDesign, cutoff_time: float | None = None,
                  include_nodes: bool = True) -> MarkLogLik:
    """Sum of log q(m_i) over the events held in ``design``."""
    if spec.variant in ("ba", "cs") and design.dt.size:
        edge, zero, clamped = _compiled_edge_loglik(spec, design)
        logp = None
    else:
        logp, clamped = edge_logprobs(spec, design)
    if logp is None:
        pass
    elif logp.size:
        log1m = _log1m_exp(logp)
        edge = float(log1m.sum())
        ei = design.e_idx
        if ei.size:
            lp = logp[ei]
            zero = int(np.sum(np.isneginf(lp)))
            edge = edge + float((lp - log1m[ei]).sum()) if not zero else -math.inf
        else:
            zero = 0
        if np.isnan(edge):
            # log1m is -inf only where p == 1, which is fine when that edge was observed
            keep = np.ones(logp.size, dtype=bool)
            keep[ei] = False
            edge = float(log1m[keep].sum() + logp[ei].sum())
    else:
        edge, zero = 0.0, 0
    node = 0.0
    if include_nodes and spec.has_node_count:
        rate_on = None if cutoff_time is None else design.event_times <= cutoff_time
        node = node_count_loglik(spec.lambda_nodes, design.node_counts, rate_on)
    value = edge + node
    if design.impossible:
        value = -math.inf
    return MarkLogLik(value, edge, node, clamped, zero, design.impossible)


# designs at least this large are deduplicated before evaluation
PACK_MIN_ROWS = 4096


def _compiled_edge_loglik(spec: MarkModelSpec, design: MarkDesign):
    if spec.variant == "ba":
        value, zero = _k.ba_loglik(design.x, design.dt, design.e, design.starts, design.sizes, spec.tau)
        return value, zero, 0
    theta = np.asarray(spec.theta, dtype=np.float64)
    if design.dt.size >= PACK_MIN_ROWS:
        value, clamped = _k.cs_loglik_packed(*design.packed(), theta, spec.tau, spec.nu, LOG_CLAMP_MAX)
    else:
        value, clamped = _k.cs_loglik(design.x, design.dt, design.e, theta, spec.tau, spec.nu, LOG_CLAMP_MAX)
    zero = 0
    if value == -math.inf:
        zero = int(np.isneginf(edge_logprobs(spec, design)[0][design.e_idx]).sum())
    return value, zero, clamped


def _edge_codes(u, v, base):
    return u.astype(np.int64) * base + v.astype(np.int64)


def single_event_design(spec: MarkModelSpec, net: DynamicNetwork, aux: NodeAux | None, t: float,
                        mark: Mark | None = None, n_new: int | None = None) -> tuple[MarkDesign, np.ndarray, np.ndarray]:
    if mark is not None:
        net.validate(t, mark)
        n_new = len(mark.new_nodes)
    u, v, dt, x = event_features(spec, net, aux, t, n_new)
    e = np.zeros(u.size, dtype=bool)
    impossible = 0
    if mark is not None:
        if spec.variant == "ba" and n_new != 1:
            impossible = 1
        if mark.new_edges:
            base = net.n_nodes + n_new + 1
            me = np.array(mark.new_edges, dtype=np.int64)
            codes = _edge_codes(me[:, 0], me[:, 1], base)
            cand = _edge_codes(u, v, base)
            e = np.isin(cand, codes)
            impossible += len(codes) - int(e.sum())
    design = MarkDesign(spec.variant, np.zeros(u.size, dtype=np.int64), dt, x, e,
                        np.array([t]), np.array([n_new]), impossible)
    return design, u, v


def log_prob_mark_detail(spec: MarkModelSpec, net: DynamicNetwork, aux: NodeAux | None, t: float,
                         m: Mark, node_rate_on: bool = True) -> MarkLogLik:
    design, _, _ = single_event_design(spec, net, aux, t, mark=m)
    cutoff = None if node_rate_on else -math.inf
    return design_loglik(spec, design, cutoff_time=cutoff)


def log_prob_mark(spec: MarkModelSpec, net: DynamicNetwork, aux: NodeAux | None, t: float,
                  m: Mark, node_rate_on: bool = True) -> float:
    """log q(m | t, H_t); -inf for marks the model cannot produce."""
    return log_prob_mark_detail(spec, net, aux, t, m, node_rate_on).value


def edge_probs(spec: MarkModelSpec, net: DynamicNetwork, aux: NodeAux | None, t: float, n_new: int):
    """(u, v, p, x) for the candidate edges of an event adding ``n_new`` nodes."""
    design, u, v = single_event_design(spec, net, aux, t, n_new=n_new)
    logp, _ = edge_logprobs(spec, design)
    return u, v, np.exp(logp), design.x


def ba_edge_probs(net: DynamicNetwork, aux: NodeAux | None, t: float, tau: float,
                  activity: str = "arrival") -> np.ndarray:
    """Attachment probability of the incoming node to each existing node."""
    from .errors import EmptyNetwork

    if net.n_nodes == 0:
        raise EmptyNetwork("no existing nodes to attach to")
    spec = MarkModelSpec("ba", tau=tau, activity=activity)
    return edge_probs(spec, net, aux, t, 1)[2]


def cs_edge_probs(net: DynamicNetwork, aux: NodeAux | None, t: float, theta: Sequence[float], tau: float,
                  nu: float = 0.0, candidate_edges=None, stats: Sequence[str] = DEFAULT_STATS,
                  activity: str = "arrival", n_new: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Change-statistic edge probabilities and the change statistics used.

    ``candidate_edges`` defaults to every absent pair among existing and
    ``n_new`` pending nodes.
    """
    spec = MarkModelSpec("cs", tau=tau, theta=tuple(theta), stats=tuple(stats), nu=nu,
                         activity=activity, edge_scope="all_pairs")
    if candidate_edges is None:
        u, v = candidate_pairs(net, n_new, "all_pairs")
    else:
        ce = np.asarray(candidate_edges, dtype=np.int64).reshape(-1, 2)
        u, v = ce.min(axis=1), ce.max(axis=1)
    n_total = max(net.n_nodes + n_new, int(v.max(initial=-1)) + 1)
    act = activity_times(net, aux, activity)
    x = change_stat_matrix(net, u, v, spec.stats, n_total=n_total)
    design = MarkDesign("cs", np.zeros(u.size, dtype=np.int64), pair_elapsed(act, t, u, v), x,
                        np.zeros(u.size, dtype=bool), np.array([t]), np.array([n_new]))
    logp, _ = edge_logprobs(spec, design)
    return np.exp(logp), x


def sbm_edge_probs(net: DynamicNetwork, aux: NodeAux, t: float, C, tau: float,
                   activity: str = "arrival") -> np.ndarray:
    """Edge probability between the pending node ``net.n_nodes`` and each existing node."""
    C = np.asarray(C, dtype=float)
    r = C.shape[0]
    spec = MarkModelSpec("sbm", tau=tau, block_probs=(1.0 / r,) * r, block_matrix=C, activity=activity)
    return edge_probs(spec, net, aux, t, 1)[2]


def ls_edge_probs(net: DynamicNetwork, aux: NodeAux, t: float, theta: Sequence[float], tau: float,
                  activity: str = "arrival") -> np.ndarray:
    """Edge probability between the pending node ``net.n_nodes`` and each existing node."""
    spec = MarkModelSpec("ls", tau=tau, theta=tuple(theta), activity=activity)
    return edge_probs(spec, net, aux, t, 1)[2]


def sample_new_node_aux(spec: MarkModelSpec, aux: NodeAux, k: int, rng: np.random.Generator) -> None:
    if spec.variant == "sbm" and k:
        aux.community.extend(int(c) for c in rng.choice(len(spec.block_probs), size=k, p=spec.block_probs))
    elif spec.variant == "ls" and k:
        aux.position.extend(rng.normal(0.0, spec.sigma_ls, size=(k, spec.latent_dim)))


def sample_mark(spec: MarkModelSpec, net: DynamicNetwork, aux: NodeAux, t: float,
                rng: np.random.Generator, node_rate_on: bool = True) -> tuple[Mark, int]:
    """Draw a mark given the state just before ``t``; returns (mark, clamp count).

    Auxiliary state for the new nodes is appended to ``aux``.
    """
    n = net.n_nodes
    if spec.variant == "ba":
        k = 1
    else:
        lam = spec.lambda_nodes if node_rate_on else 0.0
        k = int(rng.poisson(lam)) if lam > 0 else 0
    sample_new_node_aux(spec, aux, k, rng)
    nodes = tuple(range(n, n + k))
    if spec.variant != "ba" and (n + k < 2 or spec.scope == "new_node_only" and (k == 0 or n == 0)):
        return Mark(nodes, ()), 0
    design, u, v = single_event_design(spec, net, aux, t, n_new=k)
    if u.size == 0:
        return Mark(nodes, ()), 0
    logp, clamped = edge_logprobs(spec, design)
    hit = rng.random(u.size) < np.exp(logp)
    return Mark(nodes, tuple(zip(u[hit].tolist(), v[hit].tolist()))), clamped


def build_design(spec: MarkModelSpec, events: Sequence[EventRecord], aux: NodeAux | None = None) -> MarkDesign:
    """Replay ``events`` once and stack every event's candidate edges.

    Each event is evaluated against the network just before it. The result
    depends on the data and on the structural options of ``spec`` (variant,
    statistics, scope, activity mode) but not on its numeric parameters.
    """
    total = sum(len(ev.mark.new_nodes) for ev in events)
    net = DynamicNetwork()
    state = NodeAux(community=list(aux.community) if aux else [],
                    position=list(aux.position) if aux else [])
    track_adj = spec.variant == "cs"
    adj = np.zeros((total, total)) if track_adj else None
    segs, dts, xs, es = [], [], [], []
    counts = np.zeros(len(events), dtype=np.int64)
    times = np.zeros(len(events))
    impossible = 0
    for i, ev in enumerate(events):
        t, m = ev.time, ev.mark
        net.validate(t, m)
        k = len(m.new_nodes)
        counts[i], times[i] = k, t
        if spec.variant == "ba" and k != 1:
            impossible += 1
        u, v, dt, x = event_features(spec, net, state, t, k, adjacency=adj)
        e = np.zeros(u.size, dtype=bool)
        if m.new_edges:
            base = total + 1
            me = np.array(m.new_edges, dtype=np.int64)
            codes = _edge_codes(me[:, 0], me[:, 1], base)
            e = np.isin(_edge_codes(u, v, base), codes)
            impossible += len(codes) - int(e.sum())
        if u.size:
            segs.append(np.full(u.size, i, dtype=np.int64))
            dts.append(dt)
            xs.append(x)
            es.append(e)
        net.apply(t, m)
        state.record(t, m)
        if track_adj:
            for a, b in m.new_edges:
                adj[a, b] = adj[b, a] = 1.0
    cat = np.concatenate
    if segs:
        design = MarkDesign(spec.variant, cat(segs), cat(dts), cat(xs), cat(es), times, counts, impossible)
    else:
        design = MarkDesign(spec.variant, np.zeros(0, np.int64), np.zeros(0), _empty_x(spec),
                            np.zeros(0, bool), times, counts, impossible)
    return design
