"""Finite-domain symbolic protocols with propositional guards.

A guard constrains the current register values (``r``), the next register
values (``r'``) and the exchanged value ``x``.  Registers are Boolean or
range over a declared enumeration; the payload ranges over the protocol's
declared values.  Concretization enumerates everything, so every domain
must be finite.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from ..core import SyncEvent
from .gclts import Failure, Gclts, Rule, UnknownSymbol, WellFormednessReport, validate_gclts

BOOL = ("false", "true")


class GuardSyntaxError(ValueError):
    pass


# -- guard AST ------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Ref:
    """A register (``primed`` for its next value) or, with ``name == 'x'``, the payload."""

    name: str
    primed: bool = False

    def __str__(self) -> str:
        return self.name + ("'" if self.primed else "")


@dataclass(frozen=True)
class Label:
    name: str


@dataclass(frozen=True)
class Eq:
    left: Ref
    right: Union[Ref, Label]


@dataclass(frozen=True)
class Not:
    arg: "Guard"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of & | -> <->
    left: "Guard"
    right: "Guard"


Guard = Union[Const, Ref, Eq, Not, BinOp]

TRUE = Const(True)
FALSE = Const(False)

_PREC = {"<->": 1, "->": 2, "|": 3, "&": 4}


def conj(parts: Iterable[Guard]) -> Guard:
    out: Optional[Guard] = None
    for p in parts:
        out = p if out is None else BinOp("&", out, p)
    return TRUE if out is None else out


def disj(parts: Iterable[Guard]) -> Guard:
    out: Optional[Guard] = None
    for p in parts:
        out = p if out is None else BinOp("|", out, p)
    return FALSE if out is None else out


def render_guard(g: Guard, parent: int = 0) -> str:
    if isinstance(g, Const):
        return "true" if g.value else "false"
    if isinstance(g, Ref):
        return str(g)
    if isinstance(g, Eq):
        right = g.right.name if isinstance(g.right, Label) else str(g.right)
        return f"{g.left} = {right}"
    if isinstance(g, Not):
        return "!" + render_guard(g.arg, 10)
    prec = _PREC[g.op]
    # -> is right associative, the others are rendered left-nested
    lp, rp = (prec + 1, prec) if g.op == "->" else (prec, prec + 1)
    text = f"{render_guard(g.left, lp)} {g.op} {render_guard(g.right, rp)}"
    return f"({text})" if prec < parent else text


_GUARD_TOKEN = re.compile(r"\s*(<->|->|[!&|()=']|[A-Za-z_][A-Za-z0-9_]*|[0-9][A-Za-z0-9_]*)")


def parse_guard(text: str, registers: Iterable[str] = ()) -> Guard:
    """Parse a guard; ``registers`` decides how a bare name right of ``=`` is read."""
    registers = set(registers)
    tokens: List[str] = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _GUARD_TOKEN.match(text, pos)
        if not m or not m.group(1):
            raise GuardSyntaxError(f"unexpected character {text[pos]!r} in guard {text!r}")
        tokens.append(m.group(1))
        pos = m.end()
    i = 0

    def peek() -> Optional[str]:
        return tokens[i] if i < len(tokens) else None

    def take(expected: Optional[str] = None) -> str:
        nonlocal i
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise GuardSyntaxError(f"expected {expected or 'more input'} in guard {text!r}, found {tok!r}")
        i += 1
        return tok

    def term() -> Ref:
        name = take()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
            raise GuardSyntaxError(f"expected a name in guard {text!r}, found {name!r}")
        primed = False
        if peek() == "'":
            take()
            primed = True
        if name == "x" and primed:
            raise GuardSyntaxError("the payload x has no primed copy")
        return Ref(name, primed)

    def atom() -> Guard:
        tok = peek()
        if tok == "!":
            take()
            return Not(atom())
        if tok == "(":
            take()
            g = binary(0)
            take(")")
            return g
        if tok in ("true", "false"):
            take()
            return Const(tok == "true")
        left = term()
        if peek() == "=":
            take()
            name = take()
            if peek() == "'" or name == "x" or name in registers:
                primed = False
                if peek() == "'":
                    take()
                    primed = True
                return Eq(left, Ref(name, primed))
            return Eq(left, Label(name))
        return left

    def binary(min_prec: int) -> Guard:
        left = atom()
        while peek() in _PREC and _PREC[peek()] >= min_prec:
            op = take()
            prec = _PREC[op]
            right = binary(prec if op == "->" else prec + 1)
            left = BinOp(op, left, right)
        return left

    g = binary(0)
    if peek() is not None:
        raise GuardSyntaxError(f"trailing input {peek()!r} in guard {text!r}")
    return g


def guard_refs(g: Guard) -> List[Ref]:
    if isinstance(g, Ref):
        return [g]
    if isinstance(g, Eq):
        return [g.left] + ([g.right] if isinstance(g.right, Ref) else [])
    if isinstance(g, Not):
        return guard_refs(g.arg)
    if isinstance(g, BinOp):
        return guard_refs(g.left) + guard_refs(g.right)
    return []


Env = Tuple[Mapping[str, str], Mapping[str, str], str]


def compile_guard(g: Guard) -> Callable[[Mapping[str, str], Mapping[str, str], str], bool]:
    """Turn a guard into a predicate over (pre valuation, post valuation, payload).

    All values are labels; Boolean registers hold ``"true"``/``"false"``.
    """

    def value_of(ref: Ref) -> Callable[[Mapping[str, str], Mapping[str, str], str], str]:
        if ref.name == "x":
            return lambda pre, post, x: x
        if ref.primed:
            return lambda pre, post, x, n=ref.name: post[n]
        return lambda pre, post, x, n=ref.name: pre[n]

    if isinstance(g, Const):
        return (lambda pre, post, x: True) if g.value else (lambda pre, post, x: False)
    if isinstance(g, Ref):
        get = value_of(g)
        return lambda pre, post, x: get(pre, post, x) == "true"
    if isinstance(g, Eq):
        left = value_of(g.left)
        if isinstance(g.right, Label):
            label = g.right.name
            return lambda pre, post, x: left(pre, post, x) == label
        right = value_of(g.right)
        return lambda pre, post, x: left(pre, post, x) == right(pre, post, x)
    if isinstance(g, Not):
        arg = compile_guard(g.arg)
        return lambda pre, post, x: not arg(pre, post, x)
    a, b = compile_guard(g.left), compile_guard(g.right)
    if g.op == "&":
        return lambda pre, post, x: a(pre, post, x) and b(pre, post, x)
    if g.op == "|":
        return lambda pre, post, x: a(pre, post, x) or b(pre, post, x)
    if g.op == "->":
        return lambda pre, post, x: (not a(pre, post, x)) or b(pre, post, x)
    return lambda pre, post, x: a(pre, post, x) == b(pre, post, x)


# -- protocols ------------------------------------------------------------------


@dataclass(frozen=True)
class Register:
    name: str
    domain: Tuple[str, ...]
    initial: str
    is_bool: bool = False

    def __post_init__(self) -> None:
        if self.initial not in self.domain:
            raise ValueError(f"initial value {self.initial!r} of {self.name} not in its domain")

    @classmethod
    def boolean(cls, name: str, initial: bool = False) -> "Register":
        return cls(name, BOOL, "true" if initial else "false", True)


@dataclass(frozen=True)
class SymbolicTransition:
    src: str
    sender: str
    receiver: str
    guard: Guard
    dst: str

    def __str__(self) -> str:
        return f"{self.src} {self.sender}->{self.receiver}:x [{render_guard(self.guard)}] {self.dst}"


@dataclass(frozen=True)
class SymbolicProtocol:
    name: str
    participants: Tuple[str, ...]
    values: Tuple[str, ...]
    registers: Tuple[Register, ...]
    states: Tuple[str, ...]
    transitions: Tuple[SymbolicTransition, ...]
    initial: str
    finals: frozenset

    def check(self) -> None:
        names = {r.name for r in self.registers}
        if "x" in names:
            raise UnknownSymbol("a register may not be called x")
        labels = set(self.values)
        for r in self.registers:
            if not r.is_bool:
                labels.update(r.domain)
        for t in self.transitions:
            for who in (t.sender, t.receiver):
                if who not in self.participants:
                    raise UnknownSymbol(f"undeclared participant {who!r} in {t}")
            for ref in guard_refs(t.guard):
                if ref.name != "x" and ref.name not in names:
                    raise UnknownSymbol(f"undeclared register {ref.name!r} in {t}")
            stack = [t.guard]
            while stack:
                g = stack.pop()
                if isinstance(g, Eq) and isinstance(g.right, Label) and g.right.name not in labels | set(BOOL):
                    raise UnknownSymbol(f"undeclared label {g.right.name!r} in {t}")
                if isinstance(g, Not):
                    stack.append(g.arg)
                elif isinstance(g, BinOp):
                    stack.extend((g.left, g.right))


def render_state(ctrl: str, registers: Sequence[Register], valuation: Sequence[str]) -> str:
    if not registers:
        return ctrl
    inner = ",".join(f"{r.name}={v}" for r, v in zip(registers, valuation))
    return f"{ctrl}[{inner}]"


@dataclass(frozen=True)
class Concretization:
    protocol: Gclts
    report: WellFormednessReport

    @property
    def state_count(self) -> int:
        return len(self.protocol.states)


def concretize_symbolic(sp: SymbolicProtocol) -> Concretization:
    sp.check()
    regs = sp.registers
    names = [r.name for r in regs]
    guards = [compile_guard(t.guard) for t in sp.transitions]
    outgoing: Dict[str, List[int]] = {s: [] for s in sp.states}
    for i, t in enumerate(sp.transitions):
        outgoing[t.src].append(i)
    valuations = list(itertools.product(*(r.domain for r in regs)))

    start = (sp.initial, tuple(r.initial for r in regs))
    seen = {start: render_state(sp.initial, regs, start[1])}
    queue = deque([start])
    transitions: List[Tuple[str, SyncEvent, str]] = []
    while queue:
        ctrl, val = queue.popleft()
        pre = dict(zip(names, val))
        for i in outgoing[ctrl]:
            t = sp.transitions[i]
            for v in sp.values:
                for post_val in valuations:
                    if not guards[i](pre, dict(zip(names, post_val)), v):
                        continue
                    nxt = (t.dst, post_val)
                    if nxt not in seen:
                        seen[nxt] = render_state(t.dst, regs, post_val)
                        queue.append(nxt)
                    transitions.append((seen[(ctrl, val)], SyncEvent(t.sender, t.receiver, v), seen[nxt]))

    finals = [name for (ctrl, _), name in seen.items() if ctrl in sp.finals]
    g = Gclts.build(sp.name, sp.participants, sp.values, seen[start], finals, transitions, states=list(seen.values()))
    report = validate_gclts(g)
    relabelled = tuple(
        Failure(Rule.DETERMINISM, f.states, f.transitions, f.detail)
        if f.rule is Rule.SENDER_DRIVEN and f.detail.startswith("nondeterministic")
        else f
        for f in report.failures
    )
    return Concretization(g, WellFormednessReport(relabelled, report.notes))
