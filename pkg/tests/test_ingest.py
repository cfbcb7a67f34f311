import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hawkesnet.dynet import EventRecord, Mark, replay
from hawkesnet.errors import DuplicateEdge, EmptyInput, NonMonotoneTime, ParseError
from hawkesnet.ingest import (
    contacts_to_events,
    dumps_events,
    edges_as_contacts,
    parse_events,
    read_contacts,
    read_id_map,
)
from hawkesnet.process import simulate

from conftest import cs_spec, sbm_spec

HEAD = "#format=hawkesnet-events/1\n#T=10\n"


@pytest.mark.parametrize("make", [cs_spec, sbm_spec], ids=["cs", "sbm"])
def test_round_trip_is_byte_identical(make):
    real = simulate(make(T=3.0), 7)
    text = dumps_events(real)
    stream = parse_events(io.StringIO(text))
    assert dumps_events(stream) == text
    assert stream.events == real.events
    assert stream.spec == real.spec and stream.seed == 7
    assert stream.aux.to_dict() == real.aux.to_dict()


def test_grammar_example():
    s = parse_events(io.StringIO(HEAD + "1\t0,1,2\t-\n1.5\t3\t0-3,1-3\n"))
    assert s.events[1] == EventRecord(1.5, Mark((3,), ((0, 3), (1, 3))))


@pytest.mark.parametrize("body,line", [("1.5\t3\n", 3), ("x\t0\t-\n", 3), ("1\t0\t0-1-2\n", 3),
                                       ("1\t0,1\t1-0\n", 3), ("1\t0\t-\n#T=3\n", 4)])
def test_parse_errors_carry_line(body, line):
    with pytest.raises(ParseError) as err:
        parse_events(io.StringIO(HEAD + body))
    assert err.value.line == line


def test_parse_replay_errors():
    with pytest.raises(NonMonotoneTime):
        parse_events(io.StringIO(HEAD + "2\t0,1\t0-1\n1\t2\t-\n"))
    with pytest.raises(DuplicateEdge):
        parse_events(io.StringIO(HEAD + "1\t0,1\t0-1\n2\t-\t0-1\n"))
    with pytest.raises(ParseError):
        parse_events(io.StringIO("#T=1\n"))


def test_contacts_first_occurrence_example():
    conv = contacts_to_events([(10, "a", "b"), (10, "a", "c"), (20, "a", "b")])
    assert len(conv.events) == 1
    ev = conv.events[0]
    assert ev.time == 10 and ev.mark == Mark((0, 1, 2), ((0, 1), (0, 2)))
    assert conv.ids == ["a", "b", "c"]
    assert conv.repeats == 1 and conv.dropped_times == 1


def test_contacts_single_row_and_errors():
    conv = contacts_to_events([(3.0, "x", "y")])
    net = conv.stream.network()
    assert len(conv.events) == 1 and net.n_nodes == 2 and net.n_edges == 1
    with pytest.raises(EmptyInput):
        contacts_to_events([])
    with pytest.raises(EmptyInput):
        contacts_to_events([(1, "a", "a")])
    conv = contacts_to_events([(1, "a", "a"), (2, "a", "b")])
    assert conv.self_loops == 1


def test_contacts_rescale_is_affine():
    rows = [(100, 1, 2), (150, 2, 3), (300, 1, 3)]
    conv = contacts_to_events(rows, rescale_to=1.0)
    np.testing.assert_allclose(conv.stream.times, [0.0, 0.25, 1.0])
    assert conv.stream.T == 1.0


def test_read_contacts_and_id_map():
    rows = read_contacts(io.StringIO("# t i j\n20 5 7 extra\n20\t5\t9\n"))
    assert rows == [(20.0, "5", "7"), (20.0, "5", "9")]
    with pytest.raises(ParseError):
        read_contacts(io.StringIO("1 2\n"))
    conv = contacts_to_events(rows)
    assert read_id_map(io.StringIO(conv.id_map_csv())) == ["5", "7", "9"]


contact_rows = st.lists(st.tuples(st.integers(0, 30), st.integers(0, 12), st.integers(0, 12)), min_size=1, max_size=60)


@settings(max_examples=80, deadline=None)
@given(contact_rows)
def test_counts_match_distinct_nodes_and_pairs(rows):
    good = [r for r in rows if r[1] != r[2]]
    if not good:
        return
    conv = contacts_to_events(rows)
    net = conv.stream.network()
    assert net.n_nodes == len({x for _, a, b in good for x in (a, b)})
    assert net.n_edges == len({frozenset((a, b)) for _, a, b in good})
    assert np.all(np.diff(conv.stream.times) > 0)


@settings(max_examples=80, deadline=None)
@given(contact_rows)
def test_conversion_is_idempotent(rows):
    if all(a == b for _, a, b in rows):
        return
    first = contacts_to_events(rows).events
    again = contacts_to_events(edges_as_contacts(first)).events
    assert again == first
    assert replay(again) == replay(first)
