"""Coherence Conditions: Send Coherence, Receive Coherence and No Mixed Choice.

A finite protocol is checked directly on its global form.  Simultaneous
reachability is product reachability over two copies of a participant's
restriction; Receive Coherence asks the blocked-set availability question.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .core import AsyncEvent, AsyncWord, SyncEvent, SyncWord, render_word, split_word
from .protocol.gclts import Gclts, Transition, WellFormednessReport, validate_gclts

MODES = ("strict", "generalized")
# strict misses some non-implementable protocols; see README
DEFAULT_MODE = "generalized"


class IllFormed(ValueError):
    def __init__(self, report: WellFormednessReport):
        self.report = report
        super().__init__("protocol is not well-formed:\n" + report.render())


class Kind(enum.Enum):
    SC = "SC"
    RC = "RC"
    NMC = "NMC"


_KIND_ORDER = {Kind.SC: 0, Kind.RC: 1, Kind.NMC: 2}


@dataclass(frozen=True)
class SimPair:
    """States ``s1`` and ``s2`` reachable by runs ``runs[0]``/``runs[1]`` that look alike to ``p``."""

    p: str
    s1: str
    s2: str
    witness_u: SyncWord
    runs: Tuple[Tuple[int, ...], Tuple[int, ...]] = field(default=((), ()), compare=False)


@dataclass(frozen=True)
class Violation:
    kind: Kind
    transitions: Tuple[Transition, ...]
    indices: Tuple[int, ...]
    sim_pair: SimPair
    detail: Tuple[Transition, ...] = ()
    witness_trace: AsyncWord = ()

    def sort_key(self, g: Gclts) -> tuple:
        partner = g.state_index[self.sim_pair.s2]
        return (_KIND_ORDER[self.kind], self.indices, partner)

    def render(self) -> str:
        lines = [f"{self.kind.value} violation"]
        for t in self.transitions:
            lines.append(f"  transition: {t}")
        sp = self.sim_pair
        lines.append(f"  simultaneous for {sp.p}: {sp.s1}, {sp.s2} on u = {render_word(sp.witness_u)}")
        if self.kind is Kind.RC:
            path = "; ".join(str(t) for t in self.detail) or "eps"
            lines.append(f"  avail path: {path}")
        if self.witness_trace:
            lines.append(f"  witness: {render_word(self.witness_trace)}")
        return "\n".join(lines)


@dataclass(frozen=True)
class Verdict:
    implementable: bool
    violations: Tuple[Violation, ...] = ()
    mode: str = DEFAULT_MODE

    def render(self, witness: bool = False) -> str:
        if self.implementable:
            return "implementable"
        n = len(self.violations)
        lines = [f"not implementable: {n} violation{'s' if n != 1 else ''}"]
        for v in self.violations:
            block = v.render() if witness else v.render().split("\n  witness:")[0]
            lines.append(block)
        return "\n".join(lines)


# -- simultaneous reachability ---------------------------------------------------


class _Product:
    """BFS over pairs of states of two copies of one participant's restriction."""

    def __init__(self, g: Gclts, p: str):
        self.g = g
        self.p = p
        labels = [t.event if t.event.involves(p) else None for t in g.transitions]
        self.labels = labels
        start = (g.initial, g.initial)
        # parent: node -> (previous node, left transition or None, right transition or None)
        parent: Dict[Tuple[str, str], Optional[Tuple[Tuple[str, str], Optional[int], Optional[int]]]] = {start: None}
        queue = deque([start])
        out = g.outgoing
        while queue:
            node = queue.popleft()
            a, b = node
            succ = []
            for i in out[a]:
                if labels[i] is None:
                    succ.append(((g.transitions[i].dst, b), i, None))
            for j in out[b]:
                if labels[j] is None:
                    succ.append(((a, g.transitions[j].dst), None, j))
            for i in out[a]:
                if labels[i] is None:
                    continue
                for j in out[b]:
                    if labels[j] == labels[i]:
                        succ.append(((g.transitions[i].dst, g.transitions[j].dst), i, j))
            for nxt, i, j in succ:
                if nxt not in parent:
                    parent[nxt] = (node, i, j)
                    queue.append(nxt)
        self.parent = parent

    def pairs(self) -> Iterable[Tuple[str, str]]:
        return self.parent.keys()

    def __contains__(self, pair: Tuple[str, str]) -> bool:
        return pair in self.parent

    def sim_pair(self, a: str, b: str) -> SimPair:
        left: List[int] = []
        right: List[int] = []
        u: List[SyncEvent] = []
        node = (a, b)
        while self.parent[node] is not None:
            prev, i, j = self.parent[node]
            if i is not None:
                left.append(i)
            if j is not None:
                right.append(j)
            if i is not None and j is not None:
                u.append(self.labels[i])
            node = prev
        return SimPair(self.p, a, b, tuple(reversed(u)), (tuple(reversed(left)), tuple(reversed(right))))


def simultaneous_pairs(g: Gclts, p: str) -> List[SimPair]:
    """All simultaneously reachable (s1, s2) for ``p`` with s1 not after s2 in state order."""
    prod = _Product(g, p)
    idx = g.state_index
    pairs = sorted(((a, b) for a, b in prod.pairs() if idx[a] <= idx[b]), key=lambda ab: (idx[ab[0]], idx[ab[1]]))
    return [prod.sim_pair(a, b) for a, b in pairs]


def eps_reachable(g: Gclts, p: str, s: str) -> FrozenSet[str]:
    seen = {s}
    stack = [s]
    while stack:
        cur = stack.pop()
        for i in g.outgoing[cur]:
            t = g.transitions[i]
            if not t.event.involves(p) and t.dst not in seen:
                seen.add(t.dst)
                stack.append(t.dst)
    return frozenset(seen)


# -- availability ------------------------------------------------------------


def avail(g: Gclts, p: str, q: str, m: str, s: str, blocked: Iterable[str]) -> Tuple[bool, Tuple[int, ...]]:
    """Can ``p->q:m`` become available at ``q`` from ``s`` while ``blocked`` cannot send freely?

    Returns the verdict and, when true, the transition indices leading to a
    state with an outgoing ``p->q:m`` (that transition itself excluded).
    Nodes are (state, blocked set); the blocked set only grows.
    """
    if p == q:
        raise ValueError("avail needs two distinct participants")
    start = (s, frozenset(blocked))
    parent: Dict[Tuple[str, FrozenSet[str]], Optional[Tuple[Tuple[str, FrozenSet[str]], int]]] = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        state, b = node
        if p not in b:
            for i in g.outgoing[state]:
                e = g.transitions[i].event
                if e.sender == p and e.receiver == q and e.value == m:
                    path = []
                    while parent[node] is not None:
                        node, k = parent[node]
                        path.append(k)
                    return True, tuple(reversed(path))
        for i in g.outgoing[state]:
            t = g.transitions[i]
            r, dest = t.event.sender, t.event.receiver
            if r == p and dest == q:
                continue
            nb = b | {dest} if r in b else b
            nxt = (t.dst, nb)
            if nxt not in parent:
                parent[nxt] = (node, i)
                queue.append(nxt)
    return False, ()


# -- the three conditions ------------------------------------------------------


def _products(g: Gclts) -> Dict[str, _Product]:
    return {p: _Product(g, p) for p in g.participants}


def _partners(prod: _Product, g: Gclts) -> Dict[str, List[str]]:
    partners: Dict[str, List[str]] = {s: [] for s in g.states}
    for a, b in prod.pairs():
        partners[a].append(b)
    idx = g.state_index
    for lst in partners.values():
        lst.sort(key=idx.__getitem__)
    return partners


def check_send_coherence(g: Gclts, products: Optional[Dict[str, _Product]] = None) -> List[Violation]:
    products = products or _products(g)
    partners = {p: _partners(products[p], g) for p in g.participants}
    eps_cache: Dict[Tuple[str, str], FrozenSet[str]] = {}
    out: List[Violation] = []
    for i, t in enumerate(g.transitions):
        p = t.event.sender
        for other in partners[p][t.src]:
            if other == t.src:
                continue
            key = (p, other)
            if key not in eps_cache:
                eps_cache[key] = eps_reachable(g, p, other)
            if not any(g.transitions[k].event == t.event for s in eps_cache[key] for k in g.outgoing[s]):
                out.append(Violation(Kind.SC, (t,), (i,), products[p].sim_pair(t.src, other)))
    return out


def check_receive_coherence(g: Gclts, mode: str = DEFAULT_MODE, products: Optional[Dict[str, _Product]] = None) -> List[Violation]:
    """Pairs of transitions into the same receiver from different senders.

    In ``strict`` mode both carry the same value; ``generalized`` drops that
    requirement.  Each unordered pair is reported at most once.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    products = products or _products(g)
    by_receiver: Dict[str, List[int]] = {}
    for i, t in enumerate(g.transitions):
        by_receiver.setdefault(t.event.receiver, []).append(i)
    out: List[Violation] = []
    reported = set()
    for i, t1 in enumerate(g.transitions):
        p, q, m = t1.event.sender, t1.event.receiver, t1.event.value
        prod = products[q]
        for j in by_receiver[q]:
            t2 = g.transitions[j]
            if t2.event.sender == p or t2.src == t1.src:
                continue
            if mode == "strict" and t2.event.value != m:
                continue
            if (t1.src, t2.src) not in prod:
                continue
            pair = frozenset((i, j))
            if pair in reported:
                continue
            ok, path = avail(g, p, q, m, t2.dst, {q})
            if not ok:
                continue
            reported.add(pair)
            end = path[-1] if path else None
            last_state = g.transitions[end].dst if end is not None else t2.dst
            accept = next(k for k in g.outgoing[last_state] if g.transitions[k].event == t1.event)
            detail = tuple(g.transitions[k] for k in path + (accept,))
            out.append(Violation(Kind.RC, (t1, t2), (i, j), prod.sim_pair(t1.src, t2.src), detail))
    return out


def check_no_mixed_choice(g: Gclts, products: Optional[Dict[str, _Product]] = None) -> List[Violation]:
    products = products or _products(g)
    out: List[Violation] = []
    for i, t1 in enumerate(g.transitions):
        p = t1.event.sender
        prod = products[p]
        for j, t2 in enumerate(g.transitions):
            if t2.event.receiver != p:
                continue
            if (t1.src, t2.src) in prod:
                out.append(Violation(Kind.NMC, (t1, t2), (i, j), prod.sim_pair(t1.src, t2.src)))
    return out


# -- witnesses -----------------------------------------------------------------


def _split_run(g: Gclts, run: Sequence[int]) -> List[AsyncEvent]:
    return list(split_word(g.transitions[i].event for i in run))


def extract_witness(g: Gclts, v: Violation) -> AsyncWord:
    """A trace of the canonical implementation that no run of ``g`` explains."""
    run_other = v.sim_pair.runs[1]
    t1 = v.transitions[0]
    if v.kind is Kind.SC:
        return tuple(_split_run(g, run_other) + [t1.event.send])
    if v.kind is Kind.NMC:
        t2 = v.transitions[1]
        return tuple(_split_run(g, run_other) + [t2.event.send, t1.event.send])
    t2 = v.transitions[1]
    q = t1.event.receiver
    word = _split_run(g, run_other) + [t2.event.send]
    blocked = {q}
    for t in v.detail:
        e = t.event
        if e.sender not in blocked:
            word.append(e.send)
            if e.receiver not in blocked:
                word.append(e.receive)
        else:
            blocked.add(e.receiver)
    word.append(t1.event.receive)
    return tuple(word)


def check_implementability(g: Gclts, mode: str = DEFAULT_MODE, witnesses: bool = True) -> Verdict:
    report = validate_gclts(g)
    if not report.ok:
        raise IllFormed(report)
    products = _products(g)
    found = (check_send_coherence(g, products)
             + check_receive_coherence(g, mode, products)
             + check_no_mixed_choice(g, products))
    found.sort(key=lambda v: v.sort_key(g))
    if witnesses:
        found = [Violation(v.kind, v.transitions, v.indices, v.sim_pair, v.detail, extract_witness(g, v)) for v in found]
    return Verdict(not found, tuple(found), mode)
