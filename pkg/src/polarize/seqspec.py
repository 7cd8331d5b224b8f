"""Sequential specifications as replayable state machines.

A spec is an initial state plus a nondeterministic apply function; a
sequential history belongs to the spec if some replay reproduces every
recorded return value.  The two instances here (FIFO queue, integer set)
happen to be deterministic, but membership search handles the general
case.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .history import SeqHistory, UNIT


@dataclass(frozen=True)
class SeqSpec:
    name: str
    initial: Any
    apply: Callable[[Any, str, Any], tuple]


def queue_apply(st: tuple, op: str, arg: Any) -> tuple:
    """FIFO queue. A dequeue removes the oldest value.

    Dequeue of an empty queue is deliberately undefined (empty result
    set), not an EMPTY return: sequences needing it are rejected.
    """
    if op == "Enq":
        return ((st + (arg,), UNIT),)
    if op == "Deq":
        if not st:
            return ()
        return ((st[1:], st[0]),)
    raise ValueError(f"queue spec has no operation {op!r}")


def set_apply(st: frozenset, op: str, arg: Any) -> tuple:
    if op == "insert":
        if arg in st:
            return ((st, False),)
        return ((st | {arg}, True),)
    if op == "remove":
        if arg in st:
            return ((st - {arg}, True),)
        return ((st, False),)
    if op == "contains":
        return ((st, arg in st),)
    raise ValueError(f"set spec has no operation {op!r}")


QUEUE_SPEC = SeqSpec("queue", (), queue_apply)
SET_SPEC = SeqSpec("set", frozenset(), set_apply)

SPECS = {"queue": QUEUE_SPEC, "set": SET_SPEC}


def spec_by_name(name: str) -> SeqSpec:
    try:
        return SPECS[name]
    except KeyError:
        raise ValueError(f"unknown spec {name!r}") from None


def member(seq: SeqHistory, spec: SeqSpec) -> bool:
    """Does some replay of the spec reproduce every recorded result?

    Thread ids are irrelevant to membership.  Rejection is prefix
    monotone: once the reachable state set becomes empty no extension of
    the prefix can be accepted, which is what enables pruned
    linear-extension enumeration.
    """
    frontier = {spec.initial}
    for ev in seq:
        nxt = set()
        for st in frontier:
            for (st2, r) in spec.apply(st, ev.op, ev.arg):
                if r == ev.result:
                    nxt.add(st2)
        if not nxt:
            return False
        frontier = nxt
    return True
