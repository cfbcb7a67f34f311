import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hawkesnet.errors import EventAfterHorizon, NonSimpleEvents, StabilityWarning, UnsortedEvents
from hawkesnet.estimate import ground_loglik
from hawkesnet.kernel import (
    GroundParams,
    compensator,
    compensator_at_events,
    excitation_sum_recursive,
    ground_intensity,
)

from oracles import excitation_double_loop, intensity, quad_compensator


def test_compensator_trivial_cases():
    assert compensator(10.0, [], GroundParams(1.0, 0.0, 1.0)) == pytest.approx(10.0)
    assert compensator(10.0, [0.0], GroundParams(0.0, 1.0, 1.0)) == pytest.approx(1 - math.exp(-10))


def test_compensator_rejects_late_event():
    with pytest.raises(EventAfterHorizon):
        compensator(1.0, [0.5, 1.5], GroundParams(1, 1, 1))


def test_event_at_horizon_allowed():
    assert np.isfinite(compensator(1.0, [0.5, 1.0], GroundParams(1, 1, 1)))


def test_times_must_be_simple_and_sorted():
    with pytest.raises(UnsortedEvents):
        excitation_sum_recursive([1.0, 0.5], 1.0)
    with pytest.raises(NonSimpleEvents):
        excitation_sum_recursive([1.0, 1.0 + 1e-14], 1.0)


def test_recursion_matches_double_loop(rng):
    for _ in range(20):
        t = np.sort(rng.uniform(0, 20, size=rng.integers(1, 60)))
        beta = rng.uniform(0.1, 5)
        np.testing.assert_allclose(excitation_sum_recursive(t, beta), excitation_double_loop(t, beta),
                                   rtol=1e-12, atol=1e-14)


def test_intensity_matches_definition(rng):
    t = np.sort(rng.uniform(0, 10, 30))
    g = GroundParams(1.3, 0.7, 2.1)
    for s in rng.uniform(0, 12, 10):
        assert ground_intensity(s, t, g) == pytest.approx(intensity(s, t, g.mu, g.K, g.beta))


def test_compensator_against_quadrature(rng):
    for _ in range(10):
        n = int(rng.integers(0, 80))
        T = rng.uniform(1, 30)
        t = np.sort(rng.uniform(0, T, n))
        g = GroundParams(rng.uniform(0.01, 5), rng.uniform(0, 3), rng.uniform(0.1, 5))
        assert compensator(T, t, g) == pytest.approx(quad_compensator(T, t, g.mu, g.K, g.beta), rel=1e-8)


def test_compensator_at_events_is_compensator_prefix(rng):
    t = np.sort(rng.uniform(0, 10, 40))
    g = GroundParams(1.0, 0.8, 1.5)
    at = compensator_at_events(t, g)
    for i in (0, 5, 39):
        assert at[i] == pytest.approx(compensator(t[i], t[:i], g), rel=1e-12)
    assert np.all(np.diff(at) > 0)


def test_stability_warning():
    with pytest.warns(StabilityWarning):
        GroundParams(1, 3, 2).warn_if_unstable()
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        GroundParams(1, 1, 2).warn_if_unstable()
    with pytest.raises(ValueError):
        GroundParams(-1, 1, 1)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 50), min_size=1, max_size=40, unique=True),
       st.floats(0.1, 5), st.floats(0, 3), st.floats(0.1, 5), st.floats(-100, 100))
def test_loglik_time_shift_invariance(raw, mu, K, beta, shift):
    t = np.sort(np.array(raw))
    if np.any(np.diff(t) < 1e-6):
        return
    T = t[-1] + 1.0
    g = GroundParams(mu, K, beta)
    a = ground_loglik(t, T, g)
    b = ground_loglik(t + shift, T + shift, g, start=shift)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 20), min_size=2, max_size=30, unique=True), st.floats(0.05, 4))
def test_recursion_property(raw, beta):
    t = np.sort(np.array(raw))
    if np.any(np.diff(t) < 1e-9):
        return
    np.testing.assert_allclose(excitation_sum_recursive(t, beta), excitation_double_loop(t, beta),
                               rtol=1e-10, atol=1e-12)
