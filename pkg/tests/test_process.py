import math
import warnings

import numpy as np
import pytest
from scipy import stats

from hawkesnet.dynet import EventRecord, Mark
from hawkesnet.errors import ExplosionGuard, NonIntegrableKernel, StabilityWarning, Unstable
from hawkesnet.kernel import GroundParams, ground_intensity
from hawkesnet.markmodel import MarkModelSpec
from hawkesnet.process import (
    DegreePowerLawKernel,
    ExponentialKernel,
    ModelSpec,
    TriangleFeedbackKernel,
    branching_ratio,
    child_seed,
    estimate_branching_ratio_mc,
    joint_intensity,
    mean_intensity_estimate,
    simulate,
)

from conftest import ba_spec, cs_spec, ls_spec, sbm_spec, trivial_spec


def test_simulate_is_deterministic():
    a = simulate(cs_spec(T=3.0), 42)
    b = simulate(cs_spec(T=3.0), 42)
    assert a.events == b.events
    assert simulate(cs_spec(T=3.0), 43).events != a.events


@pytest.mark.parametrize("make", [ba_spec, cs_spec, sbm_spec, ls_spec], ids=["ba", "cs", "sbm", "ls"])
def test_realisations_are_valid(make):
    spec = make(T=3.0)
    real = simulate(spec, 1)
    t = real.times
    assert np.all(np.diff(t) > 0) and (t.size == 0 or t[-1] <= spec.T)
    net = real.network()
    if spec.mark.variant == "ba":
        assert all(len(ev.mark.new_nodes) == 1 for ev in real.events)
        assert net.n_nodes == len(real.events)
    if spec.mark.variant == "sbm":
        assert len(real.aux.community) == net.n_nodes
    if spec.mark.variant == "ls":
        assert len(real.aux.position) == net.n_nodes


def test_zero_background_gives_empty_stream():
    assert simulate(trivial_spec(mu=0.0), 1).events == []


def test_node_cutoff_stops_node_arrivals():
    spec = cs_spec(T=5.0, cutoff=0.4)
    real = simulate(spec, 3)
    late = [ev for ev in real.events if ev.time > 2.0]
    assert late and all(not ev.mark.new_nodes for ev in late)


def test_poisson_counts_and_gaps():
    spec = trivial_spec(T=50.0, mu=4.0)
    counts, gaps = [], []
    for r in range(100):
        t = simulate(spec, child_seed(5, r)).times
        counts.append(t.size)
        gaps.extend(np.diff(np.r_[0.0, t]))
    assert abs(np.mean(counts) - 200) < 3 * math.sqrt(200 / 100)
    assert stats.kstest(gaps, "expon", args=(0, 0.25)).pvalue > 1e-3


def test_explosion_guard_returns_partial():
    spec = trivial_spec(T=1e6, mu=1.0, K=3.0, beta=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StabilityWarning)
        with pytest.raises(ExplosionGuard) as err:
            simulate(spec, 0, max_events=500)
    assert len(err.value.partial.events) == 500


def test_child_seed_rule():
    assert child_seed(7, 3) == int(np.random.SeedSequence([7, 3]).generate_state(1, np.uint64)[0])
    assert len({child_seed(1, r) for r in range(100)}) == 100


def test_branching_ratio_and_mean_intensity():
    assert branching_ratio(GroundParams(10, 0.5, 2)) == pytest.approx(0.25)
    assert mean_intensity_estimate(GroundParams(10, 0.5, 2)) == pytest.approx(40 / 3)
    with pytest.warns(StabilityWarning):
        branching_ratio(GroundParams(1, 2, 1))
    with pytest.raises(Unstable):
        mean_intensity_estimate(GroundParams(1, 2, 1))


def test_joint_intensity_factorises():
    spec = ba_spec()
    ev = [EventRecord(0.5, Mark((0, 1), ((0, 1),))), EventRecord(1.0, Mark((2,), ((1, 2),)))]
    m = Mark((3,), ((1, 3),))
    lam = joint_intensity(spec, ev, 2.0, m)
    rate = ground_intensity(2.0, [0.5, 1.0], spec.ground)
    assert 0 < lam < rate
    assert joint_intensity(spec, ev, 2.0, Mark((3,), ((0, 1),))) == 0.0


def test_mc_branching_diagnostic():
    spec = cs_spec(T=2.0)
    est = estimate_branching_ratio_mc(ExponentialKernel(0.5, 2.0), spec, math.inf, 5, seed=1)
    assert est.mean == pytest.approx(0.25)
    assert not est.violated
    hot = estimate_branching_ratio_mc(TriangleFeedbackKernel(0.5, 2.0, 5.0), spec, math.inf, 5, seed=1)
    assert hot.mean >= est.mean
    with pytest.raises(NonIntegrableKernel):
        DegreePowerLawKernel(1.0, 1.0, 1.0)
    pl = DegreePowerLawKernel(0.5, 1.0, 2.0)
    assert pl.integral(math.inf) == pytest.approx(1.0)
    assert pl.integral(1.0) == pytest.approx(0.5)


def test_modelspec_round_trip():
    spec = cs_spec(cutoff=0.3)
    assert ModelSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValueError):
        ModelSpec(GroundParams(1, 0, 1), MarkModelSpec("ba"), 0.0)
