"""Global multiparty session types and their translation to explicit protocols."""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

from ..core import SyncEvent
from .gclts import Gclts

log = logging.getLogger(__name__)


class GlobalTypeError(ValueError):
    pass


class Unguarded(GlobalTypeError):
    pass


class DuplicateBranch(GlobalTypeError):
    pass


class UnboundVariable(GlobalTypeError):
    pass


@dataclass(frozen=True)
class End:
    def __str__(self) -> str:
        return "0"


@dataclass(frozen=True)
class Branch:
    receiver: str
    value: str
    cont: "GlobalType"


@dataclass(frozen=True)
class Choice:
    sender: str
    branches: Tuple[Branch, ...]

    def __str__(self) -> str:
        parts = [f"{self.sender}->{b.receiver}:{b.value} . {b.cont}" for b in self.branches]
        return parts[0] if len(parts) == 1 else "(" + " + ".join(parts) + ")"


@dataclass(frozen=True)
class Rec:
    var: str
    body: "GlobalType"

    def __str__(self) -> str:
        return f"rec {self.var} . {self.body}"


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


GlobalType = Union[End, Choice, Rec, Var]


def check_global_type(g: GlobalType) -> None:
    """Raise if ``g`` breaks the grammar's side conditions."""

    def walk(term: GlobalType, bound: Dict[str, bool]) -> None:
        # bound maps a variable to whether a message was seen since its binder
        if isinstance(term, End):
            return
        if isinstance(term, Var):
            if term.name not in bound:
                raise UnboundVariable(f"free recursion variable {term.name}")
            if not bound[term.name]:
                raise Unguarded(f"no message between rec {term.name} and {term.name}")
            return
        if isinstance(term, Rec):
            walk(term.body, {**bound, term.var: False})
            return
        seen = set()
        for b in term.branches:
            if b.receiver == term.sender:
                raise GlobalTypeError(f"{term.sender} sends to itself")
            key = (b.receiver, b.value)
            if key in seen:
                raise DuplicateBranch(f"branch {term.sender}->{b.receiver}:{b.value} appears twice")
            seen.add(key)
            walk(b.cont, {v: True for v in bound})

    walk(g, {})


def _rename_apart(g: GlobalType) -> GlobalType:
    counter = itertools.count()

    def go(term: GlobalType, env: Dict[str, str]) -> GlobalType:
        if isinstance(term, End):
            return term
        if isinstance(term, Var):
            return Var(env[term.name])
        if isinstance(term, Rec):
            fresh = f"{term.var}#{next(counter)}"
            return Rec(fresh, go(term.body, {**env, term.var: fresh}))
        return Choice(term.sender, tuple(Branch(b.receiver, b.value, go(b.cont, env)) for b in term.branches))

    return go(g, {})


def from_global_type(g: GlobalType, participants=None, values=None, name: str = "G") -> Gclts:
    check_global_type(g)
    g = _rename_apart(g)

    # GAut: states are subterms; eps edges come from rec unfolding.
    binders: Dict[str, Rec] = {}
    eps: Dict[GlobalType, GlobalType] = {}
    moves: Dict[GlobalType, List[Tuple[SyncEvent, GlobalType]]] = {}
    stack = [g]
    seen = set()
    while stack:
        term = stack.pop()
        if term in seen:
            continue
        seen.add(term)
        if isinstance(term, Rec):
            binders[term.var] = term
            eps[term] = term.body
            stack.append(term.body)
        elif isinstance(term, Choice):
            moves[term] = [(SyncEvent(term.sender, b.receiver, b.value), b.cont) for b in term.branches]
            stack.extend(b.cont for b in reversed(term.branches))
    for term in seen:
        if isinstance(term, Var):
            eps[term] = binders[term.name]

    def contract(term: GlobalType) -> GlobalType:
        path = []
        while term in eps:
            if term in path:
                raise Unguarded("recursion reaches its variable without an intervening message")
            path.append(term)
            term = eps[term]
        return term

    start = contract(g)
    names: Dict[GlobalType, str] = {}
    order: List[GlobalType] = []
    queue = [start]
    while queue:
        term = queue.pop(0)
        if term in names:
            continue
        names[term] = f"g{len(names)}"
        order.append(term)
        for _, nxt in moves.get(term, ()):
            queue.append(contract(nxt))

    transitions = []
    for term in order:
        for event, nxt in moves.get(term, ()):
            transitions.append((names[term], event, names[contract(nxt)]))

    used_p: Dict[str, None] = {}
    used_v: Dict[str, None] = {}
    for _, e, _ in transitions:
        used_p.setdefault(e.sender)
        used_p.setdefault(e.receiver)
        used_v.setdefault(e.value)
    finals = [names[t] for t in order if isinstance(t, End)]
    if not finals:
        log.info("global type %s has no reachable end; all of its runs are infinite", name)
    return Gclts.build(
        name,
        participants if participants is not None else tuple(used_p),
        values if values is not None else tuple(used_v),
        names[start],
        finals,
        transitions,
        states=[names[t] for t in order],
    )


# -- text syntax -------------------------------------------------------------

_TOKEN = re.compile(r"\s*(->|[().+:]|[A-Za-z0-9_]+)")


class _Parser:
    def __init__(self, text: str):
        self.tokens: List[Tuple[str, int]] = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                raise GlobalTypeError(f"unexpected character {text[pos]!r} at offset {pos}")
            self.tokens.append((m.group(1), m.start(1)))
            pos = m.end()
        self.i = 0

    def peek(self) -> Optional[str]:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def take(self, expected: Optional[str] = None) -> str:
        tok = self.peek()
        if tok is None:
            raise GlobalTypeError(f"unexpected end of input, expected {expected or 'a token'}")
        if expected is not None and tok != expected:
            raise GlobalTypeError(f"expected {expected!r}, found {tok!r}")
        self.i += 1
        return tok

    def expr(self) -> GlobalType:
        tok = self.peek()
        if tok == "0":
            self.take()
            return End()
        if tok == "rec":
            self.take()
            var = self.take()
            self.take(".")
            return Rec(var, self.expr())
        if tok == "(":
            self.take()
            alts = [self.expr()]
            while self.peek() == "+":
                self.take()
                alts.append(self.expr())
            self.take(")")
            if len(alts) == 1:
                return alts[0]
            return _merge(alts)
        if tok is None or not re.fullmatch(r"[A-Za-z0-9_]+", tok):
            raise GlobalTypeError(f"unexpected token {tok!r}")
        name = self.take()
        if self.peek() != "->":
            return Var(name)
        self.take("->")
        receiver = self.take()
        self.take(":")
        value = self.take()
        self.take(".")
        return Choice(name, (Branch(receiver, value, self.expr()),))


def _merge(alts: List[GlobalType]) -> Choice:
    if not all(isinstance(a, Choice) for a in alts):
        raise GlobalTypeError("every alternative of a choice must start with a message")
    senders = {a.sender for a in alts}
    if len(senders) != 1:
        raise GlobalTypeError(f"choice alternatives have different senders: {', '.join(sorted(senders))}")
    return Choice(alts[0].sender, tuple(b for a in alts for b in a.branches))


def parse_global_type(text: str) -> GlobalType:
    parser = _Parser(text)
    term = parser.expr()
    if parser.peek() is not None:
        raise GlobalTypeError(f"trailing input starting at {parser.peek()!r}")
    return term
