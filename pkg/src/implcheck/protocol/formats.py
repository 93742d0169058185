"""Readers and writers for ``.gclts``, ``.gt`` and ``.sgclts`` files."""

from __future__ import annotations

import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from ..core import SyncEvent
from .gclts import Gclts, UnknownSymbol
from .globaltype import GlobalType, GlobalTypeError, from_global_type, parse_global_type
from .symbolic import (
    BOOL,
    GuardSyntaxError,
    Register,
    SymbolicProtocol,
    SymbolicTransition,
    concretize_symbolic,
    parse_guard,
    render_guard,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, source: str = "<input>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


_NAME = r"[A-Za-z0-9_.\[\]=,{}#$-]+"
_TRANS = re.compile(rf"^trans\s+({_NAME})\s+([A-Za-z0-9_]+)->([A-Za-z0-9_]+):([A-Za-z0-9_]+)\s+({_NAME})$")
_STRANS = re.compile(rf"^trans\s+({_NAME})\s+([A-Za-z0-9_]+)->([A-Za-z0-9_]+):x\s*\[(.*)\]\s*({_NAME})$")
_REGISTER = re.compile(r"^register\s+([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(bool|enum\s*\{([^}]*)\})\s*=\s*([A-Za-z0-9_]+)$")


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line


class _Header:
    def __init__(self, source: str, kind: str):
        self.source = source
        self.kind = kind
        self.name: Optional[str] = None
        self.participants: Optional[Tuple[str, ...]] = None
        self.values: Optional[Tuple[str, ...]] = None
        self.initial: Optional[str] = None
        self.finals: Optional[Tuple[str, ...]] = None

    def feed(self, number: int, line: str) -> bool:
        key, _, rest = line.partition(" ")
        words = tuple(rest.split())
        if key == self.kind:
            if len(words) != 1:
                raise ParseError(f"expected `{self.kind} NAME`", number, self.source)
            self.name = words[0]
        elif key == "participants":
            if len(set(words)) != len(words):
                raise ParseError("duplicate participant", number, self.source)
            self.participants = words
        elif key == "values":
            if len(set(words)) != len(words):
                raise ParseError("duplicate value", number, self.source)
            self.values = words
        elif key == "initial":
            if len(words) != 1:
                raise ParseError("expected `initial STATE`", number, self.source)
            self.initial = words[0]
        elif key == "finals":
            self.finals = words
        else:
            return False
        return True

    def require(self, *fields: str) -> None:
        for f in fields:
            if getattr(self, f) is None:
                raise ParseError(f"missing `{f}` header", None, self.source)

    def check_event(self, number: int, sender: str, receiver: str, value: Optional[str]) -> None:
        for who in (sender, receiver):
            if who not in self.participants:
                raise ParseError(f"undeclared participant {who!r}", number, self.source)
        if sender == receiver:
            raise ParseError(f"{sender} sends to itself", number, self.source)
        if value is not None and value not in self.values:
            raise ParseError(f"undeclared value {value!r}", number, self.source)


def parse_gclts(text: str, source: str = "<input>") -> Gclts:
    head = _Header(source, "protocol")
    transitions: List[Tuple[str, SyncEvent, str]] = []
    seen = set()
    for number, line in _lines(text):
        if head.feed(number, line):
            continue
        if line.startswith("trans"):
            head.require("participants", "values")
            m = _TRANS.match(line)
            if not m:
                raise ParseError("expected `trans SRC SENDER->RECEIVER:VALUE DST`", number, source)
            src, p, q, v, dst = m.groups()
            head.check_event(number, p, q, v)
            key = (src, p, q, v, dst)
            if key in seen:
                raise ParseError("duplicate transition", number, source)
            seen.add(key)
            transitions.append((src, SyncEvent(p, q, v), dst))
            continue
        raise ParseError(f"unrecognised line {line!r}", number, source)
    head.require("name", "participants", "values", "initial", "finals")
    return Gclts.build(head.name, head.participants, head.values, head.initial, head.finals, transitions)


def dump_gclts(g: Gclts) -> str:
    lines = [
        f"protocol {g.name}",
        "participants " + " ".join(g.participants),
        "values " + " ".join(g.values),
        f"initial {g.initial}",
        " ".join(["finals"] + [s for s in g.states if s in g.finals]),
    ]
    lines += [f"trans {t.src} {t.event} {t.dst}" for t in g.transitions]
    return "\n".join(lines) + "\n"


def parse_gt(text: str, source: str = "<input>") -> Tuple[GlobalType, Dict[str, object]]:
    head = _Header(source, "globaltype")
    body: List[Tuple[int, str]] = []
    for number, line in _lines(text):
        if not body and head.feed(number, line):
            continue
        body.append((number, line))
    head.require("name", "participants", "values")
    if not body:
        raise ParseError("missing global type expression", None, source)
    try:
        g = parse_global_type(" ".join(line for _, line in body))
    except GlobalTypeError as exc:
        raise ParseError(str(exc), body[0][0], source) from None
    return g, {"name": head.name, "participants": head.participants, "values": head.values, "line": body[0][0]}


def gclts_from_gt(text: str, source: str = "<input>") -> Gclts:
    g, meta = parse_gt(text, source)
    try:
        protocol = from_global_type(g, meta["participants"], meta["values"], meta["name"])
        _check_alphabet(protocol)
    except (GlobalTypeError, UnknownSymbol) as exc:
        raise ParseError(str(exc), meta["line"], source) from None
    return protocol


def _check_alphabet(g: Gclts) -> None:
    for t in g.transitions:
        for who in (t.event.sender, t.event.receiver):
            if who not in g.participants:
                raise UnknownSymbol(f"undeclared participant {who!r}")
        if t.event.value not in g.values:
            raise UnknownSymbol(f"undeclared value {t.event.value!r}")


def parse_sgclts(text: str, source: str = "<input>") -> SymbolicProtocol:
    head = _Header(source, "protocol")
    registers: List[Register] = []
    raw: List[Tuple[int, str, str, str, str, str]] = []
    for number, line in _lines(text):
        if head.feed(number, line):
            continue
        if line.startswith("register"):
            m = _REGISTER.match(line)
            if not m:
                raise ParseError("expected `register NAME : bool = INIT` or `register NAME : enum {A,B} = INIT`",
                                 number, source)
            name, kind, members, init = m.groups()
            if any(r.name == name for r in registers):
                raise ParseError(f"duplicate register {name!r}", number, source)
            try:
                if kind == "bool":
                    if init not in BOOL:
                        raise ValueError(f"Boolean register {name} needs initial true or false")
                    registers.append(Register.boolean(name, init == "true"))
                else:
                    domain = tuple(x.strip() for x in members.split(",") if x.strip())
                    if not domain:
                        raise ValueError(f"enum register {name} has an empty domain")
                    registers.append(Register(name, domain, init))
            except ValueError as exc:
                raise ParseError(str(exc), number, source) from None
            continue
        if line.startswith("trans"):
            head.require("participants", "values")
            m = _STRANS.match(line)
            if not m:
                raise ParseError("expected `trans SRC SENDER->RECEIVER:x [GUARD] DST`", number, source)
            src, p, q, guard, dst = m.groups()
            head.check_event(number, p, q, None)
            raw.append((number, src, p, q, guard, dst))
            continue
        raise ParseError(f"unrecognised line {line!r}", number, source)
    head.require("name", "participants", "values", "initial", "finals")

    reg_names = [r.name for r in registers]
    transitions = []
    for number, src, p, q, guard, dst in raw:
        try:
            transitions.append(SymbolicTransition(src, p, q, parse_guard(guard, reg_names), dst))
        except GuardSyntaxError as exc:
            raise ParseError(str(exc), number, source) from None
    states: Dict[str, None] = {head.initial: None}
    for t in transitions:
        states.setdefault(t.src)
        states.setdefault(t.dst)
    for s in head.finals:
        states.setdefault(s)
    sp = SymbolicProtocol(head.name, head.participants, head.values, tuple(registers), tuple(states),
                          tuple(transitions), head.initial, frozenset(head.finals))
    try:
        sp.check()
    except UnknownSymbol as exc:
        raise ParseError(str(exc), None, source) from None
    return sp


def dump_sgclts(sp: SymbolicProtocol) -> str:
    lines = [
        f"protocol {sp.name}",
        "participants " + " ".join(sp.participants),
        "values " + " ".join(sp.values),
    ]
    for r in sp.registers:
        kind = "bool" if r.is_bool else "enum {" + ",".join(r.domain) + "}"
        lines.append(f"register {r.name} : {kind} = {r.initial}")
    lines.append(f"initial {sp.initial}")
    lines.append(" ".join(["finals"] + [s for s in sp.states if s in sp.finals]))
    lines += [f"trans {t.src} {t.sender}->{t.receiver}:x [{render_guard(t.guard)}] {t.dst}" for t in sp.transitions]
    return "\n".join(lines) + "\n"


Loaded = Union[Gclts, SymbolicProtocol]


def load_protocol(path: Union[str, Path]) -> Gclts:
    """Read any supported protocol file and return its explicit form."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    source = str(path)
    if path.suffix == ".gclts":
        return parse_gclts(text, source)
    if path.suffix == ".gt":
        return gclts_from_gt(text, source)
    if path.suffix == ".sgclts":
        return concretize_symbolic(parse_sgclts(text, source)).protocol
    raise ParseError(f"unknown protocol file extension {path.suffix!r}", None, source)
