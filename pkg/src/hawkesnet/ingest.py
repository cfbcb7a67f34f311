"""Event-stream files and conversion of raw contact logs into event streams.

File format (UTF-8, one record per line)::

    #format=hawkesnet-events/1
    #T=100
    #key=value            (optional: seed, start, spec and aux as JSON)
    <time>\t<nodes>\t<edges>

``<nodes>`` is a comma-separated list of labels, ``<edges>`` a comma-separated
list of ``u-v`` pairs with ``u < v``; ``-`` stands for an empty list. Times
are written with 17 significant digits, so parsing and writing again gives
the same bytes.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .dynet import DynamicNetwork, EventRecord, Mark
from .errors import EmptyInput, HawkesNetError, InvalidMark, NonMonotoneTime, ParseError
from .markmodel import NodeAux
from .process import ModelSpec, Realization

FORMAT = "hawkesnet-events/1"


def fmt_time(t: float) -> str:
    return format(float(t), ".17g")


@dataclass
class EventStream:
    events: list[EventRecord]
    T: float
    header: dict[str, str] = field(default_factory=dict)

    @property
    def start(self) -> float:
        return float(self.header.get("start", 0.0))

    @property
    def seed(self) -> int | None:
        return int(self.header["seed"]) if "seed" in self.header else None

    @property
    def spec(self) -> ModelSpec | None:
        return ModelSpec.from_dict(json.loads(self.header["spec"])) if "spec" in self.header else None

    @property
    def aux(self) -> NodeAux:
        return NodeAux.from_dict(json.loads(self.header["aux"])) if "aux" in self.header else NodeAux()

    @property
    def times(self) -> np.ndarray:
        return np.array([ev.time for ev in self.events], dtype=np.float64)

    def network(self) -> DynamicNetwork:
        net = DynamicNetwork()
        for ev in self.events:
            net.apply(ev.time, ev.mark)
        return net

    def to_realization(self) -> Realization:
        return Realization(self.events, self.aux, self.spec, self.seed, self.T)


def stream_from_realization(real: Realization) -> EventStream:
    header = {"format": FORMAT, "T": fmt_time(real.T)}
    if real.seed is not None:
        header["seed"] = str(int(real.seed))
    if real.spec is not None:
        header["spec"] = json.dumps(real.spec.to_dict(), sort_keys=True)
    aux = real.aux.to_dict() if real.aux is not None else {}
    if aux:
        header["aux"] = json.dumps(aux, sort_keys=True)
    return EventStream(list(real.events), float(real.T), header)


def format_event(ev: EventRecord) -> str:
    nodes = ",".join(str(n) for n in ev.mark.new_nodes) or "-"
    edges = ",".join(f"{u}-{v}" for u, v in ev.mark.new_edges) or "-"
    return f"{fmt_time(ev.time)}\t{nodes}\t{edges}"


def dumps_events(stream: EventStream | Realization) -> str:
    if isinstance(stream, Realization):
        stream = stream_from_realization(stream)
    header = {"format": FORMAT, "T": fmt_time(stream.T), **stream.header}
    lines = [f"#{k}={v}" for k, v in header.items()]
    lines += [format_event(ev) for ev in stream.events]
    return "\n".join(lines) + "\n"


def write_events(stream: EventStream | Realization, sink: str | os.PathLike | IO[str]) -> None:
    text = dumps_events(stream)
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _ints(field_: str, no: int, what: str) -> list[int]:
    if field_ == "-":
        return []
    try:
        return [int(x) for x in field_.split(",")]
    except ValueError:
        raise ParseError(f"bad {what} list {field_!r}", no) from None


def _edges(field_: str, no: int) -> list[tuple[int, int]]:
    if field_ == "-":
        return []
    out = []
    for item in field_.split(","):
        parts = item.split("-")
        if len(parts) != 2:
            raise ParseError(f"bad edge {item!r}", no)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"bad edge {item!r}", no) from None
        if not u < v:
            raise ParseError(f"edge {item!r} must be written u-v with u < v", no)
        out.append((u, v))
    return out


def parse_events(source: str | os.PathLike | IO[str], validate: bool = True) -> EventStream:
    """Read an event-stream file; with ``validate`` the events are replayed."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    header: dict[str, str] = {}
    events: list[EventRecord] = []
    last = -np.inf
    net = DynamicNetwork()
    for no, raw in enumerate(text.split("\n"), 1):
        line = raw.rstrip("\r")
        if not line:
            continue
        if line.startswith("#"):
            if events:
                raise ParseError("header line after the first event", no)
            key, sep, value = line[1:].partition("=")
            if not sep or not key:
                raise ParseError("header lines must read #key=value", no)
            header[key] = value
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(parts)}", no)
        try:
            t = float(parts[0])
        except ValueError:
            raise ParseError(f"bad time {parts[0]!r}", no) from None
        if not np.isfinite(t):
            raise ParseError("time must be finite", no)
        if not t > last:
            raise NonMonotoneTime(f"line {no}: time {t!r} does not exceed {last!r}")
        try:
            mark = Mark(tuple(_ints(parts[1], no, "node")), tuple(_edges(parts[2], no)))
        except InvalidMark as exc:
            raise ParseError(str(exc), no) from None
        ev = EventRecord(t, mark)
        if validate:
            net.apply(t, mark)
        events.append(ev)
        last = t
    if header.get("format") != FORMAT:
        raise ParseError(f"missing or unsupported format header (expected #format={FORMAT})", 1)
    if "T" not in header:
        raise ParseError("missing #T header", 1)
    T = float(header["T"])
    if events and events[-1].time > T:
        raise ParseError(f"event at {events[-1].time!r} after horizon T={T!r}")
    return EventStream(events, T, header)


# ---------------------------------------------------------------------------
# contact data


@dataclass
class ContactConversion:
    stream: EventStream
    ids: list[str]
    rows: int
    self_loops: int
    repeats: int
    dropped_times: int
    scale: float = 1.0
    offset: float = 0.0

    @property
    def events(self) -> list[EventRecord]:
        return self.stream.events

    def id_map_csv(self) -> str:
        return "label,raw_id\n" + "".join(f"{i},{r}\n" for i, r in enumerate(self.ids))


def read_contacts(source: str | os.PathLike | IO[str] | Iterable[str]) -> list[tuple[float, str, str]]:
    """Whitespace-separated ``t i j`` rows; extra columns and ``#`` comments are ignored."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    elif hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        lines = list(source)
    rows = []
    for no, line in enumerate(lines, 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) < 3:
            raise ParseError("expected at least three columns 't i j'", no)
        try:
            t = float(parts[0])
        except ValueError:
            raise ParseError(f"bad time {parts[0]!r}", no) from None
        rows.append((t, parts[1], parts[2]))
    return rows


def _natural(x: str):
    try:
        return (0, int(x), "")
    except ValueError:
        return (1, 0, x)


def contacts_to_events(rows: Sequence[tuple[float, object, object]], rescale_to: float | None = None,
                       T: float | None = None) -> ContactConversion:
    """Turn contact rows into an event stream keeping first occurrences only.

    A node's first contact adds the node, a pair's first contact adds the
    edge, and all additions at one timestamp form one event. Raw identifiers
    are relabelled densely in order of appearance (ties at one timestamp broken
    by natural order of the identifiers). With ``rescale_to`` the
    times are mapped affinely onto [0, rescale_to]; otherwise they are kept
    and the observation window is [first time, last time] (or ``T``).
    """
    if not rows:
        raise EmptyInput("no contact rows")
    order = sorted(range(len(rows)), key=lambda k: float(rows[k][0]))
    ids: dict[str, int] = {}
    seen: set[tuple[int, int]] = set()
    self_loops = repeats = 0
    groups: list[tuple[float, list[int], list[tuple[int, int]]]] = []
    pos = 0
    while pos < len(order):
        t = float(rows[order[pos]][0])
        batch = []
        while pos < len(order) and float(rows[order[pos]][0]) == t:
            _, a, b = rows[order[pos]]
            pos += 1
            a, b = str(a), str(b)
            if a == b:
                self_loops += 1
            else:
                batch.append((a, b))
        fresh = sorted({x for ab in batch for x in ab if x not in ids}, key=_natural)
        nodes = []
        for x in fresh:
            ids[x] = len(ids)
            nodes.append(ids[x])
        edges = []
        for a, b in batch:
            e = (min(ids[a], ids[b]), max(ids[a], ids[b]))
            if e in seen:
                repeats += 1
                continue
            seen.add(e)
            edges.append(e)
        groups.append((t, nodes, edges))
    if not ids:
        raise EmptyInput("every contact row was a self-loop")
    kept = [g for g in groups if g[1] or g[2]]
    t0, t1 = kept[0][0], max(kept[-1][0], groups[-1][0])
    header: dict[str, str] = {}
    if rescale_to is not None:
        if not rescale_to > 0:
            raise ValueError("rescale_to must be positive")
        span = t1 - t0
        scale = rescale_to / span if span > 0 else 1.0
        offset = t0
        horizon = float(rescale_to)
        header["start"] = fmt_time(0.0)
    else:
        scale, offset = 1.0, 0.0
        horizon = float(T) if T is not None else t1
        if horizon < kept[-1][0]:
            raise HawkesNetError(f"horizon {horizon!r} precedes the last contact")
        header["start"] = fmt_time(t0)
    events = []
    for t, nodes, edges in kept:
        tt = (t - offset) * scale
        events.append(EventRecord(tt, Mark(tuple(nodes), tuple(edges))))
    header["time_scale"] = fmt_time(scale)
    header["time_offset"] = fmt_time(offset)
    stream = EventStream(events, horizon, header)
    names = [None] * len(ids)
    for raw, i in ids.items():
        names[i] = raw
    return ContactConversion(stream, names, len(rows), self_loops, repeats, len(groups) - len(kept),
                             scale, offset)


def edges_as_contacts(events: Sequence[EventRecord]) -> list[tuple[float, int, int]]:
    """Edge births as ``(t, u, v)`` rows; inverse of :func:`contacts_to_events` for edge-bearing streams."""
    return [(ev.time, u, v) for ev in events for u, v in ev.mark.new_edges]


def read_id_map(source: str | os.PathLike | IO[str]) -> list[str]:
    text = source.read() if hasattr(source, "read") else open(source, encoding="utf-8").read()
    lines = text.splitlines()
    if not lines or lines[0] != "label,raw_id":
        raise ParseError("expected header 'label,raw_id'", 1)
    out = []
    for no, line in enumerate(lines[1:], 2):
        label, _, raw = line.partition(",")
        if int(label) != len(out):
            raise ParseError("labels must be dense and ordered", no)
        out.append(raw)
    return out
