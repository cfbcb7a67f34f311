import math

import numpy as np
import pytest
from scipy import stats

from hawkesnet.dynet import EventRecord, Mark, replay
from hawkesnet.errors import EmptyNetwork, MissingCommunity, MissingPosition
from hawkesnet.markmodel import (
    LOG_CLAMP_MAX,
    MarkModelSpec,
    NodeAux,
    ba_edge_probs,
    build_design,
    candidate_pairs,
    cs_edge_probs,
    design_loglik,
    edge_logprobs,
    edge_probs,
    log_prob_mark,
    log_prob_mark_detail,
    pair_elapsed,
    sample_mark,
)
from hawkesnet.process import simulate

from conftest import ba_spec, cs_spec, ls_spec, sbm_spec
from oracles import NaiveState, enumerate_mark_mass, naive_log_q


def small_state(n, edges, t0=0.0):
    return replay([EventRecord(t0 + 0.5, Mark(tuple(range(n)), tuple(edges)))])


def aux_for(spec, n_total, rng, net=None):
    aux = NodeAux()
    if spec.variant == "sbm":
        aux.community = rng.choice(len(spec.block_probs), size=n_total).tolist()
    if spec.variant == "ls":
        aux.position = list(rng.normal(size=(n_total, spec.latent_dim)))
    if net is not None:
        aux.last_edge = list(net.node_birth)
    return aux


def enumerate_mass(spec, net, aux, t, kmax, node_rate_on=True):
    ks = [1] if spec.variant == "ba" else range(kmax + 1)
    scope = "new_node_only" if spec.variant == "ba" else spec.scope
    return enumerate_mark_mass(
        lambda nodes, edges: log_prob_mark(spec, net, aux, t, Mark(nodes, edges), node_rate_on), net, ks, scope)


def normalisation_cases():
    rng = np.random.default_rng(7)
    out = []
    net = small_state(6, [(0, 1), (1, 2), (2, 3), (1, 4)])
    out.append(("ba", MarkModelSpec("ba", tau=0.7), net, 0, 1.3))
    net = small_state(6, [])
    out.append(("ba-empty", MarkModelSpec("ba", tau=0.7), net, 0, 1.3))
    theta = (-0.5, 0.4, 0.3, -0.1)
    net = small_state(2, [(0, 1)])
    out.append(("cs", MarkModelSpec("cs", tau=0.4, theta=theta, lambda_nodes=1e-3, nu=0.2), net, 3, 2.0))
    net = small_state(3, [(0, 1)])
    out.append(("cs3", MarkModelSpec("cs", tau=0.4, theta=theta, lambda_nodes=1e-4), net, 2, 2.0))
    net = small_state(3, [(0, 1), (1, 2)])
    sb = sbm_spec(lam=1e-3).mark
    out.append(("sbm", sb, net, 3, 1.5))
    out.append(("ls", ls_spec(lam=1e-3).mark, net, 3, 1.5))
    out.append(("cs-last-edge", MarkModelSpec("cs", tau=0.4, theta=theta, lambda_nodes=1e-3,
                                              activity="last_edge"), small_state(2, [(0, 1)]), 3, 2.0))
    del rng
    return out


@pytest.mark.parametrize("case", normalisation_cases(), ids=lambda c: c[0])
def test_mark_distribution_sums_to_one(case):
    _, spec, net, kmax, t = case
    rng = np.random.default_rng(1)
    aux = aux_for(spec, net.n_nodes + max(kmax, 1), rng, net)
    total = enumerate_mass(spec, net, aux, t, kmax)
    tail = 0.0 if spec.variant == "ba" else stats.poisson.sf(kmax, spec.lambda_nodes)
    assert tail <= 1e-12
    assert total == pytest.approx(1.0 - tail, abs=1e-10)


def test_node_rate_off_puts_all_mass_on_zero_nodes():
    spec = MarkModelSpec("cs", tau=0.4, theta=(-0.5, 0.4, 0.3, -0.1), lambda_nodes=2.0)
    net = small_state(3, [(0, 1)])
    aux = aux_for(spec, 5, np.random.default_rng(0), net)
    assert enumerate_mass(spec, net, aux, 2.0, 0, node_rate_on=False) == pytest.approx(1.0, abs=1e-12)
    assert log_prob_mark(spec, net, aux, 2.0, Mark((3,)), node_rate_on=False) == -math.inf


def test_ba_requires_exactly_one_node():
    spec = MarkModelSpec("ba", tau=0.5)
    net = small_state(3, [(0, 1)])
    assert log_prob_mark(spec, net, None, 1.0, Mark((3, 4))) == -math.inf
    assert log_prob_mark(spec, net, None, 1.0, Mark(())) == -math.inf
    with pytest.raises(EmptyNetwork):
        ba_edge_probs(small_state(0, []), None, 1.0, 0.5)


def test_ba_probabilities_example():
    # degrees (1, 1, 0) born together: weights proportional to degree
    p = ba_edge_probs(small_state(3, [(0, 1)]), None, 2.0, 0.5)
    np.testing.assert_allclose(p, [0.5, 0.5, 0.0])
    # all degrees zero: uniform
    np.testing.assert_allclose(ba_edge_probs(small_state(4, []), None, 2.0, 0.5), [0.25] * 4)


def test_ba_decay_prefers_recent_nodes():
    ev = [EventRecord(0.5, Mark((0, 1), ((0, 1),))), EventRecord(3.0, Mark((2, 3), ((2, 3),)))]
    p = ba_edge_probs(replay(ev), None, 4.0, tau=1.0)
    assert p[2] > p[0]
    assert p.sum() == pytest.approx(1.0)
    assert p[2] / p[0] == pytest.approx(math.exp(2.5))


def test_cs_saturation_example():
    net = small_state(5, [])
    p, _ = cs_edge_probs(net, None, 1.0, (-20.0,), 0.5, stats=("edges",))
    assert p.max() < 1e-8


def test_cs_clamp_is_counted():
    spec = MarkModelSpec("cs", tau=0.0, theta=(40.0,), stats=("edges",), nu=1.0, lambda_nodes=1.0)
    net = small_state(3, [])
    d = log_prob_mark_detail(spec, net, None, 1.0, Mark((), ((0, 1), (0, 2), (1, 2))))
    assert d.clamped == 3
    assert d.edge_term == pytest.approx(3 * LOG_CLAMP_MAX)


def test_missing_aux_raises():
    net = small_state(3, [])
    with pytest.raises(MissingCommunity):
        log_prob_mark(sbm_spec().mark, net, NodeAux(), 1.0, Mark((3,)))
    with pytest.raises(MissingPosition):
        log_prob_mark(ls_spec().mark, net, NodeAux(), 1.0, Mark((3,)))


def test_pair_elapsed_rules():
    act = np.array([1.0, 3.0])
    dt = pair_elapsed(act, 5.0, np.array([0, 0, 2]), np.array([1, 2, 3]))
    np.testing.assert_allclose(dt, [2.0, 4.0, 0.0])


def test_candidate_scopes():
    net = small_state(3, [(0, 1)])
    u, v = candidate_pairs(net, 2, "new_node_only")
    assert sorted(zip(u.tolist(), v.tolist())) == sorted((a, b) for a in range(3) for b in (3, 4))
    u, v = candidate_pairs(net, 1, "all_pairs")
    assert sorted(zip(u.tolist(), v.tolist())) == [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


@pytest.mark.parametrize("make", [cs_spec, sbm_spec, ls_spec], ids=["cs", "sbm", "ls"])
def test_sampling_matches_probabilities(make):
    spec = make().mark
    rng = np.random.default_rng(11)
    net = small_state(6, [(0, 1), (1, 2), (2, 3)])
    aux = aux_for(spec, 6, rng, net)
    u, v, p, _ = edge_probs(spec, net, aux, 1.5, 0)
    counts = np.zeros(u.size)
    n_draw = 4000
    nodes = []
    for _ in range(n_draw):
        a = aux.copy()
        m, _ = sample_mark(spec, net, a, 1.5, rng)
        nodes.append(len(m.new_nodes))
        if not m.new_nodes:
            hit = set(m.new_edges)
            counts += [(a_, b_) in hit for a_, b_ in zip(u.tolist(), v.tolist())]
    k0 = nodes.count(0)
    if u.size and k0:
        freq = counts / k0
        se = np.sqrt(p * (1 - p) / k0) + 1e-3
        assert np.all(np.abs(freq - p) < 5 * se)
    lam = spec.lambda_nodes
    assert np.mean(nodes) == pytest.approx(lam, abs=5 * math.sqrt(lam / n_draw))


def test_ba_sampling_matches_probabilities():
    spec = MarkModelSpec("ba", tau=0.3)
    ev = [EventRecord(0.5, Mark((0, 1, 2), ((0, 1), (1, 2)))), EventRecord(1.0, Mark((3,), ((1, 3),)))]
    net = replay(ev)
    p = ba_edge_probs(net, None, 2.0, 0.3)
    rng = np.random.default_rng(2)
    n_draw = 5000
    counts = np.zeros(net.n_nodes)
    for _ in range(n_draw):
        m, _ = sample_mark(spec, net, NodeAux(), 2.0, rng)
        assert m.new_nodes == (4,)
        for a, _b in m.new_edges:
            counts[a] += 1
    se = np.sqrt(p * (1 - p) / n_draw) + 1e-3
    assert np.all(np.abs(counts / n_draw - p) < 5 * se)


def _naive_realisation_check(spec, seed):
    real = simulate(spec, seed)
    state = NaiveState()
    state.comm, state.pos = list(real.aux.community), list(real.aux.position)
    net_events = []
    aux = NodeAux(community=list(real.aux.community), position=list(real.aux.position))
    for ev in real.events[:40]:
        net = replay(net_events)
        a = NodeAux(aux.community, aux.position, list(state.last))
        got = log_prob_mark(spec.mark, net, a, ev.time, ev.mark)
        want = naive_log_q(spec.mark, state, ev.time, ev.mark)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-9)
        state.apply(ev.time, ev.mark)
        net_events.append(ev)


@pytest.mark.parametrize("make", [lambda: ba_spec(T=3.0), lambda: cs_spec(T=2.0), sbm_spec, ls_spec,
                                  lambda: cs_spec(T=2.0, activity="last_edge", nu=0.1)],
                         ids=["ba", "cs", "sbm", "ls", "cs-last-edge"])
def test_log_prob_matches_naive(make):
    _naive_realisation_check(make(), 5)


@pytest.mark.parametrize("make", [lambda: ba_spec(T=20.0), lambda: cs_spec(T=5.0),
                                  lambda: cs_spec(T=5.0, nu=0.3, activity="last_edge")], ids=["ba", "cs", "cs-nu"])
def test_compiled_matches_numpy(make):
    spec = make()
    real = simulate(spec, 9)
    d = build_design(spec.mark, real.events, real.aux)
    got = design_loglik(spec.mark, d, include_nodes=False)
    logp, _ = edge_logprobs(spec.mark, d)
    with np.errstate(divide="ignore"):
        log1m = np.log1p(-np.exp(logp))
    want = float(np.where(d.e, logp, log1m).sum())
    assert got.edge_term == pytest.approx(want, rel=1e-10)
    other = spec.mark.with_params({"tau": 1.3})
    logp, _ = edge_logprobs(other, d)
    with np.errstate(divide="ignore"):
        log1m = np.log1p(-np.exp(logp))
    assert design_loglik(other, d, include_nodes=False).edge_term == pytest.approx(
        float(np.where(d.e, logp, log1m).sum()), rel=1e-10)


def test_design_equals_sum_of_event_terms():
    spec = cs_spec(T=3.0)
    real = simulate(spec, 4)
    d = build_design(spec.mark, real.events, real.aux)
    total = design_loglik(spec.mark, d).value
    acc = 0.0
    for i, ev in enumerate(real.events):
        net = replay(real.events[:i])
        acc += log_prob_mark(spec.mark, net, NodeAux(last_edge=list(net.node_birth)), ev.time, ev.mark)
    assert total == pytest.approx(acc, rel=1e-10)


def test_spec_round_trip_and_validation():
    for s in (ba_spec().mark, cs_spec().mark, sbm_spec().mark, ls_spec().mark):
        assert MarkModelSpec.from_dict(s.to_dict()) == MarkModelSpec.from_dict(s.to_dict())
        assert s.with_params(s.params()).params() == s.params()
    with pytest.raises(ValueError):
        MarkModelSpec("cs", theta=(1.0,))
    with pytest.raises(ValueError):
        MarkModelSpec("xyz")
    with pytest.raises(ValueError):
        MarkModelSpec("sbm", block_probs=(0.5, 0.5), block_matrix=((0.1, 0.2), (0.3, 0.1)))


@pytest.mark.parametrize("nu,theta", [(0.0, (-6.0, 0.5, 0.3, -0.1)), (0.3, (-1.0, 0.5, 0.3, -0.1)),
                                      (0.5, (30.0, 0.0, 0.0, 0.0))], ids=["plain", "nu", "clamped"])
def test_packed_cs_kernel_matches_rowwise(nu, theta):
    from hawkesnet import _kernels
    from hawkesnet.estimate import Likelihood

    real = simulate(cs_spec(T=6.0), 3)
    d = Likelihood(real.events, cs_spec(T=6.0), aux=real.aux).design
    th = np.array(theta)
    rows = _kernels.cs_loglik(d.x, d.dt, d.e, th, 0.5, nu, LOG_CLAMP_MAX)
    packed = _kernels.cs_loglik_packed(*d.packed(), th, 0.5, nu, LOG_CLAMP_MAX)
    assert packed[1] == rows[1]
    assert packed[0] == pytest.approx(rows[0], rel=1e-11)
    assert d.packed()[5].sum() == d.dt.size
