"""Events and partially ordered histories.

A history is a finite set of operation events together with a strict
partial order over their ids (the real-time order), stored transitively
closed.  Uncompleted events carry the TODO result and may only appear as
maximal elements of the order.  The order must additionally be an
interval order, i.e. consistent with assigning each event a time span.

All operations here are pure: they never mutate their inputs and return
fresh histories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator


class _Todo:
    """Placeholder result of an operation that has not returned yet."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "todo"

    def __deepcopy__(self, memo):
        return self

    def __copy__(self):
        return self


TODO = _Todo()

#: Unit value for operations that take or return nothing.
UNIT = None


class HistoryError(Exception):
    """Base class for history update errors."""


class CycleError(HistoryError):
    """Adding the requested edges would make the order cyclic."""


class SourceUncompleted(HistoryError):
    """An edge would leave an uncompleted event, breaking maximality."""


class AlreadyCompleted(HistoryError):
    """The event already carries a return value."""


@dataclass(frozen=True)
class Event:
    id: int
    thread: int
    op: str
    arg: Any
    result: Any = TODO

    @property
    def completed(self) -> bool:
        return self.result is not TODO

    def label(self) -> str:
        res = "?" if not self.completed else _fmt_value(self.result)
        return f"{self.thread}:{self.op}({_fmt_value(self.arg)}):{res}"


def _fmt_value(v: Any) -> str:
    if v is UNIT:
        return "⊥"
    return str(v)


@dataclass(frozen=True)
class Violation:
    """A broken history invariant, identified by tag plus witness ids."""

    invariant: str
    witness: tuple[int, ...]


@dataclass(frozen=True)
class History:
    """Immutable event map plus transitively closed strict order."""

    events: dict[int, Event] = field(default_factory=dict)
    order: frozenset[tuple[int, int]] = frozenset()

    def ids(self) -> list[int]:
        return sorted(self.events)

    def completed_ids(self) -> list[int]:
        return sorted(i for i, e in self.events.items() if e.completed)

    def uncompleted_ids(self) -> list[int]:
        return sorted(i for i, e in self.events.items() if not e.completed)

    def precedes(self, a: int, b: int) -> bool:
        return (a, b) in self.order

    def copy(self) -> "History":
        return History(dict(self.events), self.order)

    def with_event(self, event: Event, new_edges: Iterable[tuple[int, int]]) -> "History":
        events = dict(self.events)
        events[event.id] = event
        return History(events, frozenset(self.order) | frozenset(new_edges))

    def thread_events(self, t: int) -> list[int]:
        return sorted(i for i, e in self.events.items() if e.thread == t)


EMPTY_HISTORY = History()

#: A sequential history: completed events in execution order.
SeqHistory = tuple  # tuple[Event, ...]


def fresh_id(h: History) -> int:
    return max(h.events) + 1 if h.events else 0


def check_wf(h: History) -> list[Violation]:
    """Check the five well-formedness invariants, returning all breaks."""
    out: list[Violation] = []
    ids = set(h.events)
    order = h.order
    for (a, b) in sorted(order):
        if a not in ids or b not in ids:
            out.append(Violation("order-dangling", (a, b)))
    if out:
        return out
    for (a, b) in sorted(order):
        if a == b:
            out.append(Violation("order-irreflexive", (a,)))
    succs: dict[int, set[int]] = {i: set() for i in ids}
    for (a, b) in order:
        succs[a].add(b)
    for (a, b) in sorted(order):
        for c in sorted(succs[b]):
            if (a, c) not in order:
                out.append(Violation("order-transitive", (a, b, c)))
    # Events of one thread must be totally ordered.
    by_thread: dict[int, list[int]] = {}
    for i, e in sorted(h.events.items()):
        by_thread.setdefault(e.thread, []).append(i)
    for t, evs in sorted(by_thread.items()):
        for x in range(len(evs)):
            for y in range(x + 1, len(evs)):
                i, j = evs[x], evs[y]
                if (i, j) not in order and (j, i) not in order:
                    out.append(Violation("thread-total", (i, j)))
    # Only maximal events may be uncompleted.
    for i, e in sorted(h.events.items()):
        if not e.completed:
            for j in sorted(succs[i]):
                out.append(Violation("uncompleted-maximal", (i, j)))
    # Interval order: i1<i2 and i3<i4 imply i1<i4 or i3<i2.
    pairs = sorted(order)
    for (i1, i2) in pairs:
        for (i3, i4) in pairs:
            if (i1, i4) not in order and (i3, i2) not in order:
                out.append(Violation("interval-order", (i1, i2, i3, i4)))
    return out


def add_edges(h: History, edges: Iterable[tuple[int, int]]) -> History:
    """Add edges and close transitively.

    Raises CycleError if closure would create a self-loop and
    SourceUncompleted if an edge would leave an uncompleted event; either
    one means an instrumentation commitment was wrong.
    """
    order = set(h.order)
    for (a, b) in sorted(set(edges)):
        if a not in h.events or b not in h.events:
            raise KeyError(f"edge ({a},{b}) references unknown event")
        if a == b or (b, a) in order:
            raise CycleError(f"edge ({a},{b}) closes a cycle")
        if not h.events[a].completed:
            raise SourceUncompleted(f"edge ({a},{b}) leaves uncompleted event {a}")
        if (a, b) in order:
            continue
        pre = {a} | {x for (x, y) in order if y == a}
        post = {b} | {y for (x, y) in order if x == b}
        for x in pre:
            for y in post:
                if x == y or (y, x) in order:
                    raise CycleError(f"closure of ({a},{b}) creates cycle at ({x},{y})")
                order.add((x, y))
    return History(h.events, frozenset(order))


def complete_event(h: History, i: int, r: Any) -> History:
    if i not in h.events:
        raise KeyError(i)
    e = h.events[i]
    if e.completed:
        raise AlreadyCompleted(f"event {i} already completed")
    events = dict(h.events)
    events[i] = Event(e.id, e.thread, e.op, e.arg, r)
    return History(events, h.order)


def floor(h: History) -> History:
    """Restrict to completed events, dropping their incident edges."""
    keep = {i for i, e in h.events.items() if e.completed}
    events = {i: e for i, e in h.events.items() if i in keep}
    order = frozenset((a, b) for (a, b) in h.order if a in keep and b in keep)
    return History(events, order)


def refines(h1: History, h2: History) -> bool:
    """Real-time order preservation: same events, order can only grow."""
    return h1.events == h2.events and h1.order <= h2.order


@dataclass
class ExtensionStats:
    """Side information from a pruned linear-extension scan."""

    rejected: bool = False
    witness: SeqHistory | None = None
    yielded: int = 0


def linear_extensions(h: History, prune=None, stats: ExtensionStats | None = None) -> Iterator[SeqHistory]:
    """Enumerate the linear extensions of a fully completed history.

    With ``prune`` set to a sequential spec, extensions whose prefix is
    already rejected by the spec are cut and only spec-satisfying
    extensions are yielded; ``stats.rejected`` records whether any
    extension was cut, with one fully expanded rejected extension as
    witness.
    """
    if h.uncompleted_ids():
        raise ValueError("linear_extensions requires a fully completed history")
    ids = h.ids()
    preds = {i: {a for (a, b) in h.order if b == i} for i in ids}

    def topo_rest(remaining: set[int]) -> list[int]:
        rest, rem = [], set(remaining)
        while rem:
            m = min(i for i in rem if not (preds[i] & rem))
            rest.append(m)
            rem.discard(m)
        return rest

    def walk(chosen: list[int], remaining: set[int], states):
        if not remaining:
            if stats is not None:
                stats.yielded += 1
            yield tuple(h.events[i] for i in chosen)
            return
        for m in sorted(i for i in remaining if not (preds[i] & remaining)):
            ev = h.events[m]
            if prune is not None:
                nxt = _advance(states, prune, ev)
                if not nxt:
                    if stats is not None:
                        stats.rejected = True
                        if stats.witness is None:
                            tail = topo_rest(remaining - {m})
                            stats.witness = tuple(
                                h.events[i] for i in chosen + [m] + tail
                            )
                    continue
            else:
                nxt = states
            chosen.append(m)
            remaining.discard(m)
            yield from walk(chosen, remaining, nxt)
            remaining.add(m)
            chosen.pop()

    init = frozenset([prune.initial]) if prune is not None else None
    yield from walk([], set(ids), init)


def _advance(states: frozenset, spec, ev: Event) -> frozenset:
    out = set()
    for st in states:
        for (st2, r) in spec.apply(st, ev.op, ev.arg):
            if r == ev.result:
                out.add(st2)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Serialization: one-line JSON and DOT for the CLI.

def _result_to_json(e: Event) -> Any:
    return {"todo": True} if not e.completed else {"done": e.result}


def to_json_line(h: History) -> str:
    events = [
        {
            "id": e.id,
            "thread": e.thread,
            "op": e.op,
            "arg": e.arg,
            "result": _result_to_json(e),
        }
        for _, e in sorted(h.events.items())
    ]
    order = [list(p) for p in sorted(h.order)]
    return json.dumps({"events": events, "order": order}, separators=(",", ":"))


def from_json_line(line: str) -> History:
    raw = json.loads(line)
    events = {}
    for d in raw["events"]:
        res = TODO if d["result"].get("todo") else d["result"]["done"]
        events[d["id"]] = Event(d["id"], d["thread"], d["op"], d["arg"], res)
    order = frozenset((a, b) for a, b in raw["order"])
    return History(events, order)


def transitive_reduction(h: History) -> set[tuple[int, int]]:
    red = set()
    for (a, b) in h.order:
        if not any((a, c) in h.order and (c, b) in h.order for c in h.events):
            red.add((a, b))
    return red


def to_dot(h: History) -> str:
    lines = ["digraph history {", "  rankdir=LR;"]
    for i, e in sorted(h.events.items()):
        style = ' style=dashed' if not e.completed else ""
        lines.append(f'  n{i} [label="{e.label()}"{style}];')
    for (a, b) in sorted(transitive_reduction(h)):
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return "\n".join(lines)
