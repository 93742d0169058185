"""Explicit global protocols (GCLTS) and their well-formedness conditions."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from ..core import SyncEvent


class UnknownSymbol(ValueError):
    """An event mentions a participant or value that was never declared."""


@dataclass(frozen=True)
class Transition:
    src: str
    event: SyncEvent
    dst: str

    def __str__(self) -> str:
        return f"{self.src} {self.event} {self.dst}"


@dataclass(frozen=True)
class Gclts:
    """A finite global protocol.

    ``states`` and ``transitions`` keep declaration order; every
    deterministic tie-break in the package refers to it.
    """

    name: str
    participants: Tuple[str, ...]
    values: Tuple[str, ...]
    states: Tuple[str, ...]
    transitions: Tuple[Transition, ...]
    initial: str
    finals: FrozenSet[str]

    @classmethod
    def build(
        cls,
        name: str,
        participants: Iterable[str],
        values: Iterable[str],
        initial: str,
        finals: Iterable[str],
        transitions: Iterable[Tuple[str, SyncEvent, str]],
        states: Optional[Iterable[str]] = None,
    ) -> "Gclts":
        trans = tuple(t if isinstance(t, Transition) else Transition(*t) for t in transitions)
        finals = tuple(finals)
        order: Dict[str, None] = {}
        for s in states or ():
            order.setdefault(s)
        order.setdefault(initial)
        for t in trans:
            order.setdefault(t.src)
            order.setdefault(t.dst)
        for s in finals:
            order.setdefault(s)
        return cls(name, tuple(participants), tuple(values), tuple(order), trans, initial, frozenset(finals))

    @cached_property
    def state_index(self) -> Dict[str, int]:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def outgoing(self) -> Dict[str, Tuple[int, ...]]:
        """Transition indices leaving each state, in declaration order."""
        out: Dict[str, List[int]] = {s: [] for s in self.states}
        for i, t in enumerate(self.transitions):
            out[t.src].append(i)
        return {s: tuple(v) for s, v in out.items()}

    def reachable_states(self) -> List[str]:
        seen = {self.initial}
        order = [self.initial]
        queue = deque([self.initial])
        while queue:
            s = queue.popleft()
            for i in self.outgoing[s]:
                d = self.transitions[i].dst
                if d not in seen:
                    seen.add(d)
                    order.append(d)
                    queue.append(d)
        return order

    def __str__(self) -> str:
        return f"Gclts({self.name}: {len(self.states)} states, {len(self.transitions)} transitions)"


class Rule(enum.Enum):
    SINK_FINALITY = "SinkFinality"
    SENDER_DRIVEN = "SenderDriven"
    DEADLOCK_FREEDOM = "DeadlockFreedom"
    DETERMINISM = "Determinism"


@dataclass(frozen=True)
class Failure:
    rule: Rule
    states: Tuple[str, ...]
    transitions: Tuple[Transition, ...] = ()
    detail: str = ""

    def __str__(self) -> str:
        where = ", ".join(self.states)
        text = f"{self.rule.value} at {where}"
        if self.transitions:
            text += ": " + "; ".join(str(t) for t in self.transitions)
        if self.detail:
            text += f" ({self.detail})"
        return text


@dataclass(frozen=True)
class WellFormednessReport:
    failures: Tuple[Failure, ...] = ()
    notes: Tuple[str, ...] = field(default=(), compare=False)

    @property
    def ok(self) -> bool:
        return not self.failures

    def render(self) -> str:
        if self.ok:
            lines = ["ok"]
        else:
            lines = ["ill-formed"] + [f"  {f}" for f in self.failures]
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines)


def check_symbols(g: Gclts) -> None:
    participants, values = set(g.participants), set(g.values)
    for t in g.transitions:
        for who in (t.event.sender, t.event.receiver):
            if who not in participants:
                raise UnknownSymbol(f"undeclared participant {who!r} in {t}")
        if t.event.value not in values:
            raise UnknownSymbol(f"undeclared value {t.event.value!r} in {t}")
    if g.initial not in g.state_index:
        raise UnknownSymbol(f"initial state {g.initial!r} is not a state")


def validate_gclts(g: Gclts) -> WellFormednessReport:
    check_symbols(g)
    failures: List[Failure] = []
    for s in g.states:
        out = [g.transitions[i] for i in g.outgoing[s]]
        if s in g.finals and out:
            failures.append(Failure(Rule.SINK_FINALITY, (s,), (out[0],), "final state has outgoing transitions"))
        senders = sorted({t.event.sender for t in out})
        if len(senders) > 1:
            first = {}
            for t in out:
                first.setdefault(t.event.sender, t)
            failures.append(Failure(Rule.SENDER_DRIVEN, (s,), tuple(first[p] for p in senders[:2]),
                                    f"senders {', '.join(senders)}"))
        by_label: Dict[SyncEvent, Transition] = {}
        for t in out:
            prev = by_label.setdefault(t.event, t)
            if prev.dst != t.dst:
                failures.append(Failure(Rule.SENDER_DRIVEN, (s,), (prev, t), "nondeterministic: equal labels, different targets"))
    for s in g.reachable_states():
        if s not in g.finals and not g.outgoing[s]:
            failures.append(Failure(Rule.DEADLOCK_FREEDOM, (s,), (), "reachable non-final state without outgoing transitions"))
    notes = ()
    if not any(s in g.finals for s in g.reachable_states()):
        notes = ("no final state is reachable; the protocol has only infinite runs",)
    return WellFormednessReport(tuple(failures), notes)


@dataclass(frozen=True)
class LocalRestriction:
    """The protocol seen by one participant: other participants' exchanges become epsilon."""

    participant: str
    protocol: Gclts
    labels: Tuple[Optional[SyncEvent], ...]

    def label(self, index: int) -> Optional[SyncEvent]:
        return self.labels[index]

    def eps_count(self) -> int:
        return sum(1 for lab in self.labels if lab is None)


def restrict_to_participant(g: Gclts, p: str) -> LocalRestriction:
    return LocalRestriction(p, g, tuple(t.event if t.event.involves(p) else None for t in g.transitions))


def dot_id(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: Gclts) -> str:
    lines = [f"digraph {dot_id(g.name)} {{", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for s in g.states:
        shape = "doublecircle" if s in g.finals else "circle"
        lines.append(f"  {dot_id(s)} [shape={shape}];")
    lines.append(f"  __start -> {dot_id(g.initial)};")
    for t in g.transitions:
        lines.append(f"  {dot_id(t.src)} -> {dot_id(t.dst)} [label={dot_id(str(t.event))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def rename_states(g: Gclts, mapping: Dict[str, str]) -> Gclts:
    return Gclts(
        g.name,
        g.participants,
        g.values,
        tuple(mapping[s] for s in g.states),
        tuple(Transition(mapping[t.src], t.event, mapping[t.dst]) for t in g.transitions),
        mapping[g.initial],
        frozenset(mapping[s] for s in g.finals),
    )


def with_transition_order(g: Gclts, order: Sequence[int]) -> Gclts:
    return Gclts(g.name, g.participants, g.values, g.states,
                 tuple(g.transitions[i] for i in order), g.initial, g.finals)
