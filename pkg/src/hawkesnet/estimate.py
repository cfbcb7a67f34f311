"""Exact log-likelihood and maximum-likelihood fitting.

The log-likelihood of a realization on [0, T] is

    sum_i [log q(m_i | t_i, H) + log(mu + K A_i)] - compensator(T),

because the mark density integrates to one at every time. The ground terms
depend only on (mu, K, beta), the edge terms only on the mark parameters and
the node-count term only on lambda_nodes, so the maximisation splits into
independent blocks, each searched with Nelder-Mead in transformed coordinates.
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from . import _kernels as _k
from .dynet import EventRecord
from .errors import (
    BudgetExhausted,
    HawkesNetError,
    NonFiniteLikelihoodAtInit,
    ParseError,
    SingularHessian,
    ZeroIntensityAtEvent,
)
from .kernel import GroundParams, check_times, excitation_sum_recursive
from .markmodel import MarkDesign, MarkLogLik, NodeAux, build_design, design_loglik, node_count_loglik
from .process import ModelSpec, Realization, child_seed, simulate

log = logging.getLogger(__name__)

GROUND = ("mu", "K", "beta")
POSITIVE = {"mu", "K", "beta", "tau", "lambda_nodes", "nu"}
CONVERGENCE_DIAMETER = 1e-8


def transform_of(name: str) -> str:
    if name in POSITIVE:
        return "log"
    if name.startswith("C_"):
        return "logit"
    return "identity"


_FORWARD = {"log": np.log, "logit": logit, "identity": lambda x: x}
_BACKWARD = {"log": np.exp, "logit": expit, "identity": lambda x: x}


def block_of(name: str) -> str:
    if name in GROUND:
        return "ground"
    if name == "lambda_nodes":
        return "nodes"
    return "edges"


# ---------------------------------------------------------------------------
# likelihood


def ground_loglik(times: np.ndarray, T: float, g: GroundParams, start: float = 0.0,
                  excitation: np.ndarray | None = None) -> float:
    if times.size == 0:
        return -g.mu * (T - start)
    a = _k.excitation_sums(times, float(g.beta)) if excitation is None else excitation
    lam = g.mu + g.K * a
    if np.any(lam <= 0):
        return -math.inf
    comp = g.mu * (T - start) + g.K / g.beta * float((-np.expm1(-g.beta * (T - times))).sum())
    return float(np.log(lam).sum()) - comp


class Likelihood:
    """Log-likelihood of one realization, with the mark replay cached.

    The mark design is built once from the events; evaluating a new parameter
    vector only touches arrays.
    """

    def __init__(self, events: Sequence[EventRecord], spec: ModelSpec, T: float | None = None,
                 aux: NodeAux | None = None, start: float = 0.0):
        self.events = list(events)
        self.spec = spec
        self.T = spec.T if T is None else T
        self.start = start
        self.times = check_times([ev.time for ev in self.events])
        if self.times.size and self.times[-1] > self.T:
            raise HawkesNetError(f"event at {self.times[-1]!r} after horizon {self.T!r}")
        self.design: MarkDesign = build_design(spec.mark, self.events, aux)

    @property
    def cutoff_time(self):
        if self.spec.node_cutoff is None:
            return None
        return self.start + self.spec.node_cutoff * (self.T - self.start)

    def ground(self, g: GroundParams) -> float:
        return ground_loglik(self.times, self.T, g, self.start)

    def mark(self, spec: ModelSpec, include_nodes: bool = True) -> MarkLogLik:
        return design_loglik(spec.mark, self.design, self.cutoff_time, include_nodes)

    def nodes(self, lam: float) -> float:
        rate_on = None if self.cutoff_time is None else self.design.event_times <= self.cutoff_time
        return node_count_loglik(lam, self.design.node_counts, rate_on)

    def __call__(self, spec: ModelSpec) -> float:
        return self.ground(spec.ground) + self.mark(spec).value


def log_likelihood(events: Sequence[EventRecord], spec: ModelSpec, T: float | None = None,
                   aux: NodeAux | None = None, start: float = 0.0) -> float:
    g = spec.ground
    if events and g.mu == 0 and g.K == 0:
        raise ZeroIntensityAtEvent("mu = K = 0 gives zero intensity at every event")
    return Likelihood(events, spec, T, aux, start)(spec)


# ---------------------------------------------------------------------------
# fitting


@dataclass
class FitOptions:
    fixed: dict[str, float] = field(default_factory=dict)
    init: dict[str, float] = field(default_factory=dict)
    free: Sequence[str] | None = None
    max_evals: int = 20000
    restarts: int = 5
    mark_restarts: int = 1
    restart_scale: float = 0.5
    seed: int = 0


@dataclass
class FitResult:
    estimates: dict[str, float]
    std_errors: dict[str, float]
    loglik: float
    aic: float
    converged: bool
    iterations: int
    clamp_events: int = 0
    se_method: str | None = None
    fixed: dict[str, float] = field(default_factory=dict)
    spec: ModelSpec | None = None
    n_events: int = 0
    zero_edges: int = 0
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def free_parameters(self) -> list[str]:
        return list(self.estimates)


def default_free(spec: ModelSpec) -> list[str]:
    return [k for k in spec.params() if k != "nu"]


def initial_guess(events: Sequence[EventRecord], spec: ModelSpec, start: float = 0.0) -> dict[str, float]:
    """Data-scaled starting values for fitting observed data without a prior guess."""
    n = max(len(events), 1)
    rate = n / (spec.T - start)
    guess = {"mu": 0.5 * rate, "beta": rate, "K": 0.5 * rate, "tau": 0.1 * rate}
    m = spec.mark
    if m.has_node_count:
        counts = np.array([len(ev.mark.new_nodes) for ev in events])
        times = np.array([ev.time for ev in events])
        cut = None if spec.node_cutoff is None else start + spec.node_cutoff * (spec.T - start)
        on = counts if cut is None else counts[times <= cut]
        guess["lambda_nodes"] = max(float(on.mean()) if on.size else 1.0, 1e-3)
    if m.variant == "cs":
        nodes = sum(len(ev.mark.new_nodes) for ev in events)
        edges = sum(len(ev.mark.new_edges) for ev in events)
        density = min(max(edges / max(nodes * (nodes - 1) / 2, 1), 1e-4), 0.5)
        for s in m.stats:
            guess[s] = 0.0
        if "edges" in m.stats:
            guess["edges"] = float(logit(density))
    if m.variant == "ls":
        guess["theta"] = -1.0
    if m.variant == "sbm":
        for k in m.params():
            if k.startswith("C_"):
                guess[k] = 0.1
    return guess


def _simplex_diameter(simplex: np.ndarray) -> float:
    d = simplex[:, None, :] - simplex[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


@dataclass
class _BlockFit:
    x: np.ndarray
    value: float
    converged: bool
    nit: int
    nfev: int


def nelder_mead(fun: Callable[[np.ndarray], float], x0: np.ndarray, max_evals: int, restarts: int,
                rng: np.random.Generator, scale: float = 0.5, step: float = 0.3) -> _BlockFit:
    """Minimise ``fun`` with Nelder-Mead from ``x0`` plus ``restarts`` perturbed starts.

    Every run is re-started once from its own optimum with a fresh simplex to
    guard against a collapsed simplex. Returns the best run.
    """
    d = x0.size
    xatol = CONVERGENCE_DIAMETER / (4 * math.sqrt(d))

    def safe(x):
        v = fun(x)
        return v if np.isfinite(v) else np.inf

    best: _BlockFit | None = None
    nit = nfev = 0
    budget = max_evals
    starts = [x0] + [None] * restarts
    for k, start in enumerate(starts):
        if start is None:
            start = best.x + rng.normal(0.0, scale, size=d)
            if not np.isfinite(safe(start)):
                continue
        x, conv = start, False
        for _polish in range(2):
            if budget <= 0:
                break
            simplex = np.vstack([x, x + step * np.eye(d)])
            res = minimize(safe, x, method="Nelder-Mead",
                           options={"initial_simplex": simplex, "xatol": xatol, "fatol": 1e-10,
                                    "maxfev": budget, "adaptive": d > 3})
            budget -= res.nfev
            nit += res.nit
            nfev += res.nfev
            x = res.x
            conv = _simplex_diameter(res.final_simplex[0]) < CONVERGENCE_DIAMETER
            step = 0.05
            if not conv:
                break
        val = safe(x)
        if best is None or val < best.value:
            best = _BlockFit(x, val, conv, 0, 0)
        step = 0.3
    best.nit, best.nfev = nit, nfev
    if budget <= 0 and not best.converged:
        warnings.warn("optimizer budget exhausted before convergence", BudgetExhausted, stacklevel=3)
    return best


def fit_mle(events: Sequence[EventRecord], spec: ModelSpec, options: FitOptions | None = None,
            aux: NodeAux | None = None, lik: Likelihood | None = None) -> FitResult:
    """Maximum-likelihood fit; ``spec`` fixes the model family and supplies starting values."""
    options = options or FitOptions()
    if len(events) < 2:
        raise HawkesNetError("need at least two events to fit")
    lik = lik or Likelihood(events, spec, aux=aux)
    start = dict(spec.params())
    start.update(options.init)
    start.update(options.fixed)
    free = [k for k in (options.free or default_free(spec)) if k not in options.fixed]
    unknown = set(free) - set(start)
    if unknown:
        raise HawkesNetError(f"unknown parameters {sorted(unknown)} for model {spec.mark.variant}")
    if not free:
        raise HawkesNetError("no free parameters")
    base = spec.with_params(start)
    if not np.isfinite(lik(base)):
        m = lik.mark(base)
        parts = f"ground {lik.ground(base.ground):.6g}, edges {m.edge_term:.6g}, nodes {m.node_term:.6g}"
        if m.impossible:
            parts += f", {m.impossible} marks the model cannot produce"
        raise NonFiniteLikelihoodAtInit(f"log-likelihood is not finite at the initial values {start} ({parts})")
    rng = np.random.default_rng(options.seed)
    values = dict(start)
    converged, nit = True, 0
    for block in ("ground", "edges", "nodes"):
        names = [k for k in free if block_of(k) == block]
        if not names:
            continue
        tf = [transform_of(k) for k in names]

        def to_values(z, names=names, tf=tf):
            out = dict(values)
            with np.errstate(over="ignore"):
                for k, f, zi in zip(names, tf, z):
                    out[k] = float(_BACKWARD[f](zi))
            return out

        if block == "ground":
            def objective(z):
                v = to_values(z)
                if v["beta"] <= 0:
                    return np.inf
                return -lik.ground(GroundParams(v["mu"], v["K"], v["beta"]))
        elif block == "nodes":
            def objective(z):
                return -lik.nodes(to_values(z)["lambda_nodes"])
        else:
            def objective(z):
                return -lik.mark(base.with_params(to_values(z)), include_nodes=False).value

        z0 = np.array([_FORWARD[f](values[k]) for k, f in zip(names, tf)], dtype=float)
        restarts = options.restarts if block == "ground" else options.mark_restarts
        bf = nelder_mead(objective, z0, options.max_evals, restarts, rng, options.restart_scale)
        values = to_values(bf.x)
        converged &= bf.converged
        nit += bf.nit
    fitted = spec.with_params(values)
    mark = lik.mark(fitted)
    ll = lik.ground(fitted.ground) + mark.value
    est = {k: values[k] for k in free}
    fixed = {k: v for k, v in values.items() if k not in est}
    return FitResult(est, {}, ll, 2 * len(est) - 2 * ll, bool(converged), nit, mark.clamped,
                     fixed=fixed, spec=fitted, n_events=len(events), zero_edges=mark.zero_edges)


def fit_ground(times, T: float, init: GroundParams, restarts: int = 2, seed: int = 0,
               max_evals: int = 5000, start: float = 0.0) -> tuple[GroundParams, float, bool]:
    """Maximise the ground log-likelihood alone; returns (params, loglik, converged)."""
    t = check_times(times)
    rng = np.random.default_rng(seed)

    def objective(z):
        with np.errstate(all="ignore"):
            mu, K, beta = np.exp(z)
            if not np.all(np.isfinite([mu, K, beta])) or beta <= 0:
                return np.inf
            return -ground_loglik(t, T, GroundParams(mu, K, beta), start)

    z0 = np.log([max(init.mu, 1e-8), max(init.K, 1e-8), init.beta])
    bf = nelder_mead(objective, z0, max_evals, restarts, rng)
    mu, K, beta = np.exp(bf.x)
    return GroundParams(float(mu), float(K), float(beta)), -bf.value, bf.converged


# ---------------------------------------------------------------------------
# standard errors


def numerical_hessian(fun: Callable[[np.ndarray], float], x: np.ndarray, rel_step: float = 1e-4,
                      lower: np.ndarray | None = None) -> np.ndarray:
    """Central-difference Hessian with steps scaled to each coordinate.

    Steps are halved (up to 8 times) while any stencil value is not finite,
    and kept inside ``lower`` bounds when given.
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    h = rel_step * np.maximum(np.abs(x), 1e-2)
    if lower is not None:
        room = (x - lower) / 2
        h = np.where(np.isfinite(room) & (room > 0), np.minimum(h, room), h)
    for _ in range(9):
        f0 = fun(x)
        H = np.empty((d, d))
        ok = np.isfinite(f0)
        for i in range(d):
            ei = np.zeros(d)
            ei[i] = h[i]
            fp, fm = fun(x + ei), fun(x - ei)
            H[i, i] = (fp - 2 * f0 + fm) / h[i] ** 2
            for j in range(i):
                ej = np.zeros(d)
                ej[j] = h[j]
                H[i, j] = H[j, i] = (fun(x + ei + ej) - fun(x + ei - ej) - fun(x - ei + ej)
                                     + fun(x - ei - ej)) / (4 * h[i] * h[j])
        ok = ok and np.all(np.isfinite(H))
        if ok:
            return H
        h = h / 2
    return H


def hessian_std_errors(loglik: Callable[[np.ndarray], float], x: np.ndarray,
                       lower: np.ndarray | None = None) -> np.ndarray:
    """sqrt(diag((-H)^-1)) of a log-likelihood at its maximiser."""
    H = numerical_hessian(loglik, x, lower=lower)
    info = -H
    if not np.all(np.isfinite(info)):
        raise SingularHessian("Hessian has non-finite entries")
    try:
        np.linalg.cholesky(info)
    except np.linalg.LinAlgError:
        raise SingularHessian("negative Hessian is not positive definite") from None
    cov = np.linalg.inv(info)
    return np.sqrt(np.diag(cov))


def std_errors(events: Sequence[EventRecord], fit: FitResult, method: str = "hessian",
               aux: NodeAux | None = None, reps: int = 50, seed: int = 0,
               options: FitOptions | None = None, lik: Likelihood | None = None) -> dict[str, float]:
    """Standard errors of ``fit`` by numerical Hessian or parametric bootstrap.

    A singular Hessian falls back to the bootstrap with a warning.
    """
    if method not in ("hessian", "replication"):
        raise ValueError(f"unknown standard-error method {method!r}")
    names = list(fit.estimates)
    spec = fit.spec
    if method == "hessian":
        lik = lik or Likelihood(events, spec, aux=aux)

        def f(x):
            vals = dict(zip(names, x))
            if any(vals.get(k, 1.0) < 0 for k in POSITIVE) or vals.get("beta", 1.0) <= 0:
                return -math.inf
            return lik(spec.with_params(vals))

        x = np.array([fit.estimates[k] for k in names])
        lower = np.array([0.0 if k in POSITIVE else (0.0 if k.startswith("C_") else -np.inf) for k in names])
        try:
            se = hessian_std_errors(f, x, lower)
            fit.se_method = "hessian"
            fit.std_errors = dict(zip(names, se.tolist()))
            return fit.std_errors
        except SingularHessian as exc:
            warnings.warn(f"{exc}; falling back to parametric bootstrap", RuntimeWarning, stacklevel=2)
    opts = options or FitOptions(restarts=1)
    opts = FitOptions(fixed=fit.fixed, free=names, max_evals=opts.max_evals, restarts=opts.restarts,
                      seed=opts.seed)
    table = replicate_experiment(spec, reps, seed, opts)
    fit.se_method = "replication"
    fit.std_errors = {row.name: row.sd for row in table.rows}
    return fit.std_errors


# ---------------------------------------------------------------------------
# replication studies


@dataclass
class ReplicationRow:
    name: str
    truth: float
    mean: float
    sd: float
    n: int
    failures: int


@dataclass
class ReplicationTable:
    rows: list[ReplicationRow]
    estimates: list[dict[str, float] | None]
    master_seed: int
    reps: int

    @property
    def failures(self) -> int:
        return sum(e is None for e in self.estimates)

    def row(self, name: str) -> ReplicationRow:
        return next(r for r in self.rows if r.name == name)

    def to_csv(self) -> str:
        lines = ["parameter,truth,mean,sd,n,failures"]
        for r in self.rows:
            sd = "" if not np.isfinite(r.sd) else f"{r.sd:.10g}"
            lines.append(f"{r.name},{r.truth:.10g},{r.mean:.10g},{sd},{r.n},{r.failures}")
        return "\n".join(lines) + "\n"


def _one_replication(args):
    truth, index, master, options = args
    seed = child_seed(master, index)
    try:
        real = simulate(truth, seed)
        fit = fit_mle(real.events, truth, options, aux=real.aux)
        return fit.estimates
    except (HawkesNetError, ValueError, FloatingPointError) as exc:
        log.warning("replication %d failed: %s", index, exc)
        return None


def replicate_experiment(truth: ModelSpec, reps: int, seed: int = 0, options: FitOptions | None = None,
                         jobs: int = 1) -> ReplicationTable:
    """Simulate ``reps`` realizations from ``truth``, fit each, summarise the estimates.

    Replication ``r`` uses ``child_seed(seed, r)``, so the table does not
    depend on ``jobs``. Fits start from the true values.
    """
    options = options or FitOptions()
    args = [(truth, r, seed, options) for r in range(reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one_replication, args))
    else:
        results = [_one_replication(a) for a in args]
    ok = [r for r in results if r is not None]
    names = list(ok[0]) if ok else [k for k in default_free(truth) if k not in options.fixed]
    tv = truth.params()
    rows = []
    for k in names:
        vals = np.array([r[k] for r in ok])
        sd = float(vals.std(ddof=1)) if vals.size > 1 else math.nan
        rows.append(ReplicationRow(k, tv[k], float(vals.mean()) if vals.size else math.nan, sd,
                                   int(vals.size), reps - len(ok)))
    if reps < 2:
        warnings.warn("fewer than two replications: no standard deviation", RuntimeWarning, stacklevel=2)
    return ReplicationTable(rows, results, seed, reps)


# ---------------------------------------------------------------------------
# report file


REPORT_FORMAT = "hawkesnet-fit/1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_report(fit: FitResult) -> str:
    lines = ["# hawkesnet fit report", f"format = {REPORT_FORMAT}"]
    spec = fit.spec
    kv = {
        "model": spec.mark.variant if spec else "",
        "events": str(fit.n_events),
        "T": _fmt(spec.T) if spec else "",
        "loglik": _fmt(fit.loglik),
        "aic": _fmt(fit.aic),
        "free_parameters": str(len(fit.estimates)),
        "converged": "true" if fit.converged else "false",
        "iterations": str(fit.iterations),
        "clamp_events": str(fit.clamp_events),
        "zero_edges": str(fit.zero_edges),
        "activity": spec.mark.activity if spec else "",
        "edge_scope": spec.mark.scope if spec else "",
        "node_cutoff": "none" if spec is None or spec.node_cutoff is None else _fmt(spec.node_cutoff),
        "se_method": fit.se_method or "none",
    }
    kv.update(fit.meta)
    for k, v in fit.fixed.items():
        kv[f"fixed.{k}"] = _fmt(v)
    if spec is not None:
        kv["spec"] = json.dumps(spec.to_dict(), sort_keys=True)
    lines += [f"{k} = {v}" for k, v in kv.items()]
    lines.append("[parameters]")
    lines.append("parameter,estimate,std_error")
    for k, v in fit.estimates.items():
        se = fit.std_errors.get(k)
        lines.append(f"{k},{_fmt(v)},{'' if se is None or not np.isfinite(se) else _fmt(se)}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> FitResult:
    kv: dict[str, str] = {}
    est, se = {}, {}
    in_table = False
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "[parameters]":
            in_table = True
            continue
        if in_table:
            if line.startswith("parameter,"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ParseError("expected parameter,estimate,std_error", no)
            est[parts[0]] = float(parts[1])
            if parts[2]:
                se[parts[0]] = float(parts[2])
        else:
            if " = " not in line:
                raise ParseError("expected 'key = value'", no)
            k, v = line.split(" = ", 1)
            kv[k] = v
    if kv.get("format") != REPORT_FORMAT:
        raise ParseError(f"not a {REPORT_FORMAT} report")
    spec = ModelSpec.from_dict(json.loads(kv["spec"])) if "spec" in kv else None
    fixed = {k[6:]: float(v) for k, v in kv.items() if k.startswith("fixed.")}
    known = {"format", "model", "events", "T", "loglik", "aic", "free_parameters", "converged", "iterations",
             "clamp_events", "zero_edges", "activity", "edge_scope", "node_cutoff", "se_method", "spec"}
    meta = {k: v for k, v in kv.items() if k not in known and not k.startswith("fixed.")}
    return FitResult(est, se, float(kv["loglik"]), float(kv["aic"]), kv["converged"] == "true",
                     int(kv["iterations"]), int(kv["clamp_events"]),
                     None if kv.get("se_method", "none") == "none" else kv["se_method"], fixed, spec,
                     int(kv.get("events", 0)), int(kv.get("zero_edges", 0)), meta)
