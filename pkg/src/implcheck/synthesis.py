"""Canonical implementations: project, then determinize with epsilon closure."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from .core import AsyncEvent, parse_async_event
from .protocol.gclts import Gclts, dot_id


@dataclass(frozen=True)
class LocalMachine:
    participant: str
    states: Tuple[str, ...]
    transitions: Tuple[Tuple[str, AsyncEvent, str], ...]
    initial: str
    finals: FrozenSet[str]
    # macro-state name -> member states of the global protocol (empty for parsed machines)
    members: Tuple[Tuple[str, FrozenSet[str]], ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for src, e, _ in self.transitions:
            if e.owner != self.participant:
                raise ValueError(f"event {e} does not belong to {self.participant}")
            if (src, e) in seen:
                raise ValueError(f"two {e} transitions leave {src}")
            seen.add((src, e))

    @cached_property
    def delta(self) -> Dict[str, Dict[AsyncEvent, str]]:
        out: Dict[str, Dict[AsyncEvent, str]] = {s: {} for s in self.states}
        for src, e, dst in self.transitions:
            out[src][e] = dst
        return out

    def member_sets(self) -> Dict[str, FrozenSet[str]]:
        return dict(self.members)

    def run(self, word: Iterable[AsyncEvent]) -> Optional[str]:
        """State reached on ``word``, or None if the machine gets stuck."""
        state = self.initial
        for e in word:
            state = self.delta[state].get(e)
            if state is None:
                return None
        return state


@dataclass(frozen=True)
class Clts:
    name: str
    machines: Tuple[LocalMachine, ...]

    @cached_property
    def by_participant(self) -> Dict[str, LocalMachine]:
        return {m.participant: m for m in self.machines}

    @property
    def participants(self) -> Tuple[str, ...]:
        return tuple(m.participant for m in self.machines)

    def __getitem__(self, p: str) -> LocalMachine:
        return self.by_participant[p]


def macro_name(members: Iterable[str]) -> str:
    return "{" + ",".join(sorted(members)) + "}"


def determinize_local(g: Gclts, p: str) -> LocalMachine:
    if p not in g.participants:
        raise ValueError(f"{p} is not a participant of {g.name}")
    eps: Dict[str, List[str]] = {s: [] for s in g.states}
    moves: Dict[str, List[Tuple[AsyncEvent, str]]] = {s: [] for s in g.states}
    for t in g.transitions:
        e = t.event
        if e.sender == p:
            moves[t.src].append((e.send, t.dst))
        elif e.receiver == p:
            moves[t.src].append((e.receive, t.dst))
        else:
            eps[t.src].append(t.dst)

    def closure(seed: Iterable[str]) -> FrozenSet[str]:
        seen = set(seed)
        stack = list(seen)
        while stack:
            s = stack.pop()
            for d in eps[s]:
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
        return frozenset(seen)

    start = closure([g.initial])
    names = {start: macro_name(start)}
    queue = deque([start])
    transitions = []
    while queue:
        macro = queue.popleft()
        succ: Dict[AsyncEvent, set] = {}
        for s in macro:
            for e, d in moves[s]:
                succ.setdefault(e, set()).add(d)
        for e in sorted(succ):
            target = closure(succ[e])
            if target not in names:
                names[target] = macro_name(target)
                queue.append(target)
            transitions.append((names[macro], e, names[target]))
    finals = frozenset(n for m, n in names.items() if m & g.finals)
    return LocalMachine(p, tuple(names.values()), tuple(transitions), names[start], finals,
                        tuple((n, m) for m, n in names.items()))


def synthesize_canonical(g: Gclts) -> Clts:
    return Clts(g.name, tuple(determinize_local(g, p) for p in g.participants))


# -- text formats ------------------------------------------------------------


def dump_lclts(m: LocalMachine, name: str = "") -> str:
    lines = [
        f"local {name or m.participant}",
        f"participant {m.participant}",
        f"initial {m.initial}",
        " ".join(["finals"] + [s for s in m.states if s in m.finals]),
    ]
    lines += [f"trans {src} {e} {dst}" for src, e, dst in m.transitions]
    return "\n".join(lines) + "\n"


_LTRANS = re.compile(r"^trans\s+(\S+)\s+(\S+)\s+(\S+)$")


def parse_lclts(text: str, source: str = "<input>") -> LocalMachine:
    from .protocol.formats import ParseError

    participant = initial = None
    finals: Tuple[str, ...] = ()
    order: Dict[str, None] = {}
    transitions = []
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        if key == "local":
            continue
        if key == "participant":
            participant = rest.strip()
        elif key == "initial":
            initial = rest.strip()
            order.setdefault(initial)
        elif key == "finals":
            finals = tuple(rest.split())
        elif key == "trans":
            m = _LTRANS.match(line)
            if not m:
                raise ParseError("expected `trans SRC EVENT DST`", number, source)
            try:
                e = parse_async_event(m.group(2))
            except ValueError as exc:
                raise ParseError(str(exc), number, source) from None
            order.setdefault(m.group(1))
            order.setdefault(m.group(3))
            transitions.append((m.group(1), e, m.group(3)))
        else:
            raise ParseError(f"unrecognised line {line!r}", number, source)
    if participant is None or initial is None:
        raise ParseError("missing `participant` or `initial` header", None, source)
    for s in finals:
        order.setdefault(s)
    try:
        return LocalMachine(participant, tuple(order), tuple(transitions), initial, frozenset(finals))
    except ValueError as exc:
        raise ParseError(str(exc), None, source) from None


def local_to_dot(m: LocalMachine) -> str:
    lines = [f"digraph {dot_id(m.participant)} {{", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for s in m.states:
        shape = "doublecircle" if s in m.finals else "circle"
        lines.append(f"  {dot_id(s)} [shape={shape}];")
    lines.append(f"  __start -> {dot_id(m.initial)};")
    for src, e, dst in m.transitions:
        lines.append(f"  {dot_id(src)} -> {dot_id(dst)} [label={dot_id(str(e))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_clts(c: Clts, directory: Path) -> List[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for m in c.machines:
        for suffix, text in ((".lclts", dump_lclts(m, f"{c.name}_{m.participant}")), (".dot", local_to_dot(m))):
            path = directory / f"{c.name}_{m.participant}{suffix}"
            path.write_text(text, encoding="utf-8")
            written.append(path)
    return written
