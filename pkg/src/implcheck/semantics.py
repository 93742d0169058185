"""FIFO execution of local machines and the bounded language oracle.

The oracle never consults the checker.  Prefix membership searches runs of
the global protocol that are consistent with every participant's local
view of a word; bounded refutation explores the canonical implementation
and asks that question of each trace it meets.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .core import AsyncEvent, AsyncWord, is_channel_compliant, project, split_word
from .protocol.gclts import Gclts
from .synthesis import Clts, synthesize_canonical


class NotEnabled(ValueError):
    pass


@dataclass(frozen=True)
class Configuration:
    """Local states in participant order and one FIFO queue per ordered pair."""

    locals: Tuple[Tuple[str, str], ...]
    channels: Tuple[Tuple[Tuple[str, str], Tuple[str, ...]], ...]

    def local(self, p: str) -> str:
        return dict(self.locals)[p]

    def channel(self, sender: str, receiver: str) -> Tuple[str, ...]:
        return dict(self.channels)[(sender, receiver)]

    def render(self) -> str:
        states = ", ".join(f"{p}={s}" for p, s in self.locals)
        queues = ", ".join(f"{a}->{b}:[{' '.join(v)}]" for (a, b), v in self.channels if v)
        return f"({states}; {queues or 'channels empty'})"


def initial_configuration(c: Clts) -> Configuration:
    ps = c.participants
    return Configuration(tuple((p, c[p].initial) for p in ps),
                         tuple(((a, b), ()) for a in ps for b in ps if a != b))


def is_final(c: Clts, cfg: Configuration) -> bool:
    return all(s in c[p].finals for p, s in cfg.locals) and all(not v for _, v in cfg.channels)


def enabled_events(c: Clts, cfg: Configuration) -> List[AsyncEvent]:
    chans = dict(cfg.channels)
    out = []
    for p, s in cfg.locals:
        for e in c[p].delta[s]:
            if e.is_send:
                out.append(e)
            else:
                queue = chans[e.channel]
                if queue and queue[0] == e.value:
                    out.append(e)
    return sorted(out)


def step(c: Clts, cfg: Configuration, e: AsyncEvent) -> Configuration:
    locs = dict(cfg.locals)
    chans = dict(cfg.channels)
    if e.owner not in locs:
        raise NotEnabled(f"{e.owner} is not a participant")
    nxt = c[e.owner].delta[locs[e.owner]].get(e)
    if nxt is None:
        raise NotEnabled(f"{e} is not offered by {e.owner} in state {locs[e.owner]}")
    if e.is_send:
        chans[e.channel] = chans[e.channel] + (e.value,)
    else:
        queue = chans[e.channel]
        if not queue or queue[0] != e.value:
            raise NotEnabled(f"{e} needs {e.value} at the head of channel {e.channel[0]}->{e.channel[1]}")
        chans[e.channel] = queue[1:]
    locs[e.owner] = nxt
    return Configuration(tuple((p, locs[p]) for p, _ in cfg.locals), tuple(chans.items()))


def replay(c: Clts, word: Sequence[AsyncEvent]) -> Optional[Configuration]:
    cfg = initial_configuration(c)
    for e in word:
        try:
            cfg = step(c, cfg, e)
        except NotEnabled:
            return None
    return cfg


def is_trace(c: Clts, word: Sequence[AsyncEvent]) -> bool:
    return replay(c, word) is not None


@dataclass
class ExploreReport:
    bound: int
    configurations: int = 0
    deadlocks: List[Tuple[Configuration, AsyncWord]] = field(default_factory=list)
    maximal_finite_traces: List[AsyncWord] = field(default_factory=list)
    traces: Optional[set] = None
    truncated: bool = False

    def render(self) -> str:
        lines = [f"explored {self.configurations} configurations up to {self.bound} events"
                 + (" (truncated)" if self.truncated else " (complete)")]
        for cfg, w in self.deadlocks:
            lines.append(f"deadlock {cfg.render()} after {' '.join(map(str, w)) or 'eps'}")
        for w in self.maximal_finite_traces:
            lines.append(f"final after {' '.join(map(str, w)) or 'eps'}")
        return "\n".join(lines)


def explore(c: Clts, bound: int, collect_traces: bool = False) -> ExploreReport:
    """Breadth-first search over configurations reachable within ``bound`` events.

    Each configuration is kept with a shortest trace reaching it.
    ``truncated`` means the search stopped with enabled events left at the
    bound, so configurations beyond it may exist.
    """
    if bound < 0:
        raise ValueError("bound must be non-negative")
    report = ExploreReport(bound)
    start = initial_configuration(c)
    seen: Dict[Configuration, AsyncWord] = {start: ()}
    frontier = [start]
    for depth in range(bound + 1):
        nxt_frontier = []
        for cfg in frontier:
            trace = seen[cfg]
            events = enabled_events(c, cfg)
            if not events:
                if is_final(c, cfg):
                    report.maximal_finite_traces.append(trace)
                else:
                    report.deadlocks.append((cfg, trace))
                continue
            if depth == bound:
                report.truncated = True
                continue
            for e in events:
                succ = step(c, cfg, e)
                if succ not in seen:
                    seen[succ] = trace + (e,)
                    nxt_frontier.append(succ)
        frontier = nxt_frontier
        if not frontier:
            break
    report.configurations = len(seen)
    if collect_traces:
        report.traces = set(all_traces(c, bound))
    return report


def all_traces(c: Clts, bound: int):
    """Every trace of length at most ``bound`` (exponential; for small bounds)."""
    stack = [((), initial_configuration(c))]
    while stack:
        word, cfg = stack.pop()
        yield word
        if len(word) < bound:
            for e in enabled_events(c, cfg):
                stack.append((word + (e,), step(c, cfg, e)))


@dataclass(frozen=True)
class RunResult:
    trace: AsyncWord
    outcome: str  # final | deadlock | max-steps
    configuration: Configuration


def random_run(c: Clts, seed: int, max_steps: int) -> RunResult:
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    rng = random.Random(seed)
    cfg = initial_configuration(c)
    trace: List[AsyncEvent] = []
    while True:
        if is_final(c, cfg):
            return RunResult(tuple(trace), "final", cfg)
        events = enabled_events(c, cfg)
        if not events:
            return RunResult(tuple(trace), "deadlock", cfg)
        if len(trace) >= max_steps:
            return RunResult(tuple(trace), "max-steps", cfg)
        e = rng.choice(events)
        trace.append(e)
        cfg = step(c, cfg, e)


# -- prefix membership ---------------------------------------------------------


@dataclass(frozen=True)
class RunSetQuery:
    word: AsyncWord
    member: bool
    run: Tuple[int, ...] = ()
    reason: str = ""

    def __bool__(self) -> bool:
        return self.member


def prefix_member(g: Gclts, w: Sequence[AsyncEvent]) -> RunSetQuery:
    """Is ``w`` a prefix of the protocol's asynchronous language?

    Requires channel compliance and a run of ``g`` whose split projections
    extend every participant's projection of ``w``.  The search is over
    (state, matched positions); no bound on the run length is needed because
    the node space is finite.
    """
    w = tuple(w)
    if not is_channel_compliant(w):
        return RunSetQuery(w, False, reason="not channel-compliant")
    ps = g.participants
    index = {p: i for i, p in enumerate(ps)}
    for e in w:
        if e.owner not in index or e.peer not in index:
            return RunSetQuery(w, False, reason=f"{e} mentions an unknown participant")
    projections = [project(w, p) for p in ps]
    target = tuple(len(x) for x in projections)
    steps = []
    for t in g.transitions:
        e = t.event
        steps.append((index[e.sender], e.send, index[e.receiver], e.receive))
    start = (g.initial, (0,) * len(ps))
    if start[1] == target:
        return RunSetQuery(w, True)
    parent: Dict[tuple, Optional[Tuple[tuple, int]]] = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        state, pos = node
        for k in g.outgoing[state]:
            a, send, b, recv = steps[k]
            pa, pb = pos[a], pos[b]
            if pa < target[a]:
                if projections[a][pa] != send:
                    continue
                pa += 1
            if pb < target[b]:
                if projections[b][pb] != recv:
                    continue
                pb += 1
            new = list(pos)
            new[a], new[b] = pa, pb
            nxt = (g.transitions[k].dst, tuple(new))
            if nxt in parent:
                continue
            parent[nxt] = (node, k)
            if nxt[1] == target:
                run = []
                cur = nxt
                while parent[cur] is not None:
                    cur, j = parent[cur]
                    run.append(j)
                return RunSetQuery(w, True, tuple(reversed(run)))
            queue.append(nxt)
    return RunSetQuery(w, False, reason="no run agrees with every participant")


# -- bounded oracle --------------------------------------------------------------
#
# For channel-compliant words, both prefix membership and being a trace of a
# deterministic implementation depend only on the tuple of per-participant
# projections.  The searches below therefore visit one representative word
# per projection tuple.


class _Classes:
    def __init__(self, participants: Sequence[str]):
        self.ps = tuple(participants)
        self.index = {p: i for i, p in enumerate(self.ps)}

    def start(self):
        return tuple(() for _ in self.ps)

    def extend(self, cls, e: AsyncEvent):
        i = self.index[e.owner]
        return cls[:i] + (cls[i] + (e,),) + cls[i + 1:]

    def head(self, cls, sender: str, receiver: str) -> Optional[str]:
        sent = [e.value for e in cls[self.index[sender]] if e.is_send and e.peer == receiver]
        got = sum(1 for e in cls[self.index[receiver]] if not e.is_send and e.peer == sender)
        return sent[got] if got < len(sent) else None


@dataclass
class FidelityReport:
    bound: int
    non_prefix_traces: List[AsyncWord] = field(default_factory=list)
    missing_traces: List[AsyncWord] = field(default_factory=list)
    deadlocks: List[Tuple[Configuration, AsyncWord]] = field(default_factory=list)
    truncated: bool = False
    classes: int = 0

    @property
    def ok(self) -> bool:
        return not (self.non_prefix_traces or self.missing_traces or self.deadlocks)

    def render(self) -> str:
        lines = [f"bounded fidelity up to {self.bound} events: {'ok' if self.ok else 'FAILED'}"]
        for w in self.non_prefix_traces:
            lines.append(f"  (1) trace outside the protocol: {' '.join(map(str, w))}")
        for w in self.missing_traces:
            lines.append(f"  (2) protocol prefix the implementation cannot produce: {' '.join(map(str, w))}")
        for cfg, w in self.deadlocks:
            lines.append(f"  (3) deadlock {cfg.render()} after {' '.join(map(str, w)) or 'eps'}")
        if self.truncated:
            lines.append("  note: search reached the bound")
        return "\n".join(lines)


def _implementation_classes(g: Gclts, c: Clts, bound: int, report: FidelityReport, stop_early: bool) -> None:
    """Clauses (1) and (3): traces of ``c`` outside the protocol, and deadlocks."""
    classes = _Classes(c.participants)
    start = classes.start()
    cfg0 = initial_configuration(c)
    seen = {start}
    frontier = [(start, cfg0, ())]
    for depth in range(bound + 1):
        nxt = []
        for cls, cfg, word in frontier:
            if not prefix_member(g, word):
                report.non_prefix_traces.append(word)
                if stop_early:
                    return
                continue
            events = enabled_events(c, cfg)
            if not events:
                if not is_final(c, cfg):
                    report.deadlocks.append((cfg, word))
                    if stop_early:
                        return
                continue
            if depth == bound:
                report.truncated = True
                continue
            for e in events:
                ncls = classes.extend(cls, e)
                if ncls in seen:
                    continue
                seen.add(ncls)
                nxt.append((ncls, step(c, cfg, e), word + (e,)))
        report.classes += len(frontier)
        frontier = nxt
        if not frontier:
            break


def _protocol_classes(g: Gclts, c: Clts, bound: int, report: FidelityReport) -> None:
    """Clause (2): protocol prefixes the implementation cannot produce."""
    classes = _Classes(g.participants)
    alphabet = sorted({t.event.send for t in g.transitions} | {t.event.receive for t in g.transitions})
    start = classes.start()
    seen = {start}
    frontier = [(start, ())]
    for depth in range(bound):
        nxt = []
        for cls, word in frontier:
            for e in alphabet:
                if not e.is_send and classes.head(cls, e.peer, e.owner) != e.value:
                    continue
                ncls = classes.extend(cls, e)
                if ncls in seen:
                    continue
                nword = word + (e,)
                if not prefix_member(g, nword):
                    continue
                seen.add(ncls)
                if not is_trace(c, nword):
                    report.missing_traces.append(nword)
                    continue
                nxt.append((ncls, nword))
        frontier = nxt
        if not frontier:
            break


def bounded_fidelity(g: Gclts, c: Clts, bound: int) -> FidelityReport:
    if set(c.participants) != set(g.participants):
        raise ValueError("implementation and protocol disagree on participants")
    report = FidelityReport(bound)
    _implementation_classes(g, c, bound, report, stop_early=False)
    _protocol_classes(g, c, bound, report)
    return report


@dataclass(frozen=True)
class Refutation:
    kind: str  # "trace" or "deadlock"
    trace: AsyncWord
    configuration: Optional[Configuration] = None

    def render(self) -> str:
        text = " ".join(map(str, self.trace)) or "eps"
        if self.kind == "trace":
            return f"counterexample: the canonical implementation produces {text}, which is not a protocol prefix"
        return f"counterexample: the canonical implementation deadlocks in {self.configuration.render()} after {text}"


@dataclass(frozen=True)
class RefuteResult:
    counterexample: Optional[Refutation]
    truncated: bool
    classes: int

    @property
    def refuted(self) -> bool:
        return self.counterexample is not None


def bounded_refute(g: Gclts, bound: int) -> RefuteResult:
    """Search the canonical implementation for a definitive counterexample.

    Only trace inclusion and deadlocks can refute; a missing protocol prefix
    is never a proof on its own, so that clause is skipped here.
    """
    c = synthesize_canonical(g)
    report = FidelityReport(bound)
    _implementation_classes(g, c, bound, report, stop_early=True)
    if report.non_prefix_traces:
        return RefuteResult(Refutation("trace", report.non_prefix_traces[0]), report.truncated, report.classes)
    if report.deadlocks:
        cfg, w = report.deadlocks[0]
        return RefuteResult(Refutation("deadlock", w, cfg), report.truncated, report.classes)
    return RefuteResult(None, report.truncated, report.classes)


def split_prefixes(g: Gclts, bound: int):
    """Split traces of run prefixes of ``g`` up to ``bound`` events (for tests)."""
    stack = [(g.initial, ())]
    while stack:
        s, word = stack.pop()
        yield word
        if len(word) + 2 <= bound:
            for k in g.outgoing[s]:
                t = g.transitions[k]
                stack.append((t.dst, word + split_word([t.event])))
