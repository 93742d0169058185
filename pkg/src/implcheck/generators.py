"""Protocol generators and the brute-force oracles that judge them.

The oracles here (truth tables, marking search, a fixpoint evaluation of
availability) share no code with the checker.
"""

from __future__ import annotations

import itertools
import random
import re
import string
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .core import SyncEvent
from .protocol.gclts import Gclts
from .protocol.symbolic import (
    BinOp,
    Eq,
    Label,
    Not,
    Ref,
    Register,
    SymbolicProtocol,
    SymbolicTransition,
    conj,
)

# -- 3-SAT ----------------------------------------------------------------------

Literal = Tuple[int, bool]  # (variable, positive)


@dataclass(frozen=True)
class CnfFormula:
    variables: int
    clauses: Tuple[Tuple[Literal, Literal, Literal], ...]

    def __post_init__(self) -> None:
        if self.variables < 1:
            raise ValueError("a formula needs at least one variable")
        for clause in self.clauses:
            if len(clause) != 3:
                raise ValueError(f"clause {clause} does not have exactly three literals")
            for var, _ in clause:
                if not 1 <= var <= self.variables:
                    raise ValueError(f"variable {var} out of range 1..{self.variables}")

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.variables} {len(self.clauses)}"]
        for clause in self.clauses:
            lines.append(" ".join(str(v if pos else -v) for v, pos in clause) + " 0")
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    """Read DIMACS CNF.  Clauses shorter than three literals are padded by repetition."""
    header = None
    numbers: List[int] = []
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"line {number}: malformed problem line {line!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        try:
            numbers.extend(int(tok) for tok in line.split())
        except ValueError:
            raise ValueError(f"line {number}: expected integers, got {line!r}") from None
    if header is None:
        raise ValueError("missing `p cnf` problem line")
    clauses = []
    current: List[int] = []
    for lit in numbers:
        if lit == 0:
            if not current:
                raise ValueError("empty clause")
            if len(current) > 3:
                raise ValueError(f"clause {current} has more than three literals")
            while len(current) < 3:
                current.append(current[-1])
            clauses.append(tuple((abs(v), v > 0) for v in current))
            current = []
        else:
            current.append(lit)
    if current:
        raise ValueError("last clause is not terminated by 0")
    if len(clauses) != header[1]:
        raise ValueError(f"header announces {header[1]} clauses, found {len(clauses)}")
    return CnfFormula(header[0], tuple(clauses))


def brute_force_sat(f: CnfFormula) -> Optional[Tuple[bool, ...]]:
    """A satisfying assignment (index 0 is variable 1), or None."""
    for bits in itertools.product((False, True), repeat=f.variables):
        if all(any(bits[v - 1] == pos for v, pos in clause) for clause in f.clauses):
            return bits
    return None


def random_cnf(seed: int, max_vars: int = 8, max_clauses: int = 12) -> CnfFormula:
    rng = random.Random(seed)
    n = rng.randint(1, max_vars)
    k = rng.randint(1, max_clauses)
    clauses = tuple(
        tuple((rng.randint(1, n), rng.random() < 0.5) for _ in range(3)) for _ in range(k)
    )
    return CnfFormula(n, clauses)


@dataclass(frozen=True)
class AvailQuery:
    p: str
    q: str
    m: str
    state: str
    blocked: FrozenSet[str]


def _literal_participant(lit: Literal) -> str:
    var, pos = lit
    return f"x{var}" if pos else f"nx{var}"


def from_cnf(f: CnfFormula) -> Tuple[Gclts, AvailQuery]:
    """The reduction from 3-SAT to availability.

    A chain picks, for each variable, which of its two literal participants
    q informs (and thereby blocks); each clause then needs p to talk to an
    unblocked literal and hear back.  Only then can p still send m to q.
    """
    if not f.clauses:
        raise ValueError("the reduction needs at least one clause")
    n, k = f.variables, len(f.clauses)
    participants = ["p", "q"] + [x for i in range(1, n + 1) for x in (f"x{i}", f"nx{i}")]
    values = ["m", "m1", "m2", "m3"]

    def s(i: int) -> str:
        return f"s{i}"

    def t(i: int) -> str:
        if i == 1:
            return s(n + 1)
        return f"t{i}"

    trans = []
    for i in range(1, n + 1):
        trans.append((s(i), SyncEvent("q", f"x{i}", "m"), s(i + 1)))
        trans.append((s(i), SyncEvent("q", f"nx{i}", "m"), s(i + 1)))
    for i, clause in enumerate(f.clauses, 1):
        for j, lit in enumerate(clause, 1):
            mid = f"t{i}_{j}"
            who = _literal_participant(lit)
            trans.append((t(i), SyncEvent("p", who, f"m{j}"), mid))
            trans.append((mid, SyncEvent(who, "p", "m"), t(i + 1)))
    trans.append((t(k + 1), SyncEvent("p", "q", "m"), "q2"))
    g = Gclts.build(f"sat_n{n}_k{k}", participants, values, s(1), ["q2"], trans)
    return g, AvailQuery("p", "q", "m", s(1), frozenset({"q"}))


def avail_fixpoint(g: Gclts, p: str, q: str, m: str, s: str, blocked: Iterable[str]) -> bool:
    """Availability as the least fixpoint of its three rules, over every blocked set."""
    ps = tuple(g.participants)
    subsets = [frozenset(c) for r in range(len(ps) + 1) for c in itertools.combinations(ps, r)]
    holds: Set[Tuple[str, FrozenSet[str]]] = set()
    changed = True
    while changed:
        changed = False
        for state in g.states:
            out = [g.transitions[i] for i in g.outgoing[state]]
            for b in subsets:
                if (state, b) in holds:
                    continue
                ok = p not in b and any(t.event == SyncEvent(p, q, m) for t in out)
                for t in out:
                    if ok:
                        break
                    r, dest = t.event.sender, t.event.receiver
                    if (r, dest) == (p, q):
                        continue
                    nb = b | {dest} if r in b else b
                    ok = (t.dst, nb) in holds
                if ok:
                    holds.add((state, b))
                    changed = True
    return (s, frozenset(blocked)) in holds


def check_avail_path(g: Gclts, p: str, q: str, m: str, s: str, blocked: Iterable[str], path: Sequence[int]) -> bool:
    """Replay an availability path against the rules."""
    b = frozenset(blocked)
    state = s
    for i in path:
        t = g.transitions[i]
        if t.src != state or (t.event.sender, t.event.receiver) == (p, q):
            return False
        if t.event.sender in b:
            b = b | {t.event.receiver}
        state = t.dst
    return p not in b and any(g.transitions[i].event == SyncEvent(p, q, m) for i in g.outgoing[state])


# -- 1-safe Petri nets --------------------------------------------------------------


class NotSafe(ValueError):
    """Firing a transition would put a second token on a place."""


@dataclass(frozen=True)
class PetriTransition:
    name: str
    pre: FrozenSet[str]
    post: FrozenSet[str]


@dataclass(frozen=True)
class PetriNet:
    places: Tuple[str, ...]
    transitions: Tuple[PetriTransition, ...]
    initial: FrozenSet[str]

    def to_text(self) -> str:
        lines = [f"place {pl}" + (" marked" if pl in self.initial else "") for pl in self.places]
        for t in self.transitions:
            pre = " ".join(pl for pl in self.places if pl in t.pre)
            post = " ".join(pl for pl in self.places if pl in t.post)
            lines.append(f"trans {t.name} : {pre} -> {post}".replace("  ", " "))
        return "\n".join(lines) + "\n"


_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"


def parse_petri(text: str) -> PetriNet:
    places: Dict[str, None] = {}
    marked = set()
    transitions = []
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(rf"place\s+({_IDENT})(\s+marked)?", line)
        if m:
            if m.group(1) in places:
                raise ValueError(f"line {number}: duplicate place {m.group(1)}")
            places.setdefault(m.group(1))
            if m.group(2):
                marked.add(m.group(1))
            continue
        m = re.fullmatch(rf"trans\s+({_IDENT})\s*:\s*(.*?)\s*->\s*(.*)", line)
        if m:
            pre, post = frozenset(m.group(2).split()), frozenset(m.group(3).split())
            for pl in pre | post:
                if pl not in places:
                    raise ValueError(f"line {number}: undeclared place {pl}")
            if any(t.name == m.group(1) for t in transitions):
                raise ValueError(f"line {number}: duplicate transition {m.group(1)}")
            transitions.append(PetriTransition(m.group(1), pre, post))
            continue
        raise ValueError(f"line {number}: unrecognised line {line!r}")
    if not places:
        raise ValueError("a net needs at least one place")
    return PetriNet(tuple(places), tuple(transitions), frozenset(marked))


def fire(net: PetriNet, marking: FrozenSet[str], t: PetriTransition) -> Optional[FrozenSet[str]]:
    if not t.pre <= marking:
        return None
    rest = marking - t.pre
    if rest & t.post:
        raise NotSafe(f"firing {t.name} in {sorted(marking)} puts a second token on {sorted(rest & t.post)}")
    return rest | t.post


def reachable_markings(net: PetriNet) -> Set[FrozenSet[str]]:
    seen = {net.initial}
    queue = deque([net.initial])
    while queue:
        marking = queue.popleft()
        for t in net.transitions:
            nxt = fire(net, marking, t)
            if nxt is not None and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def marking_reachable(net: PetriNet, target: Iterable[str]) -> bool:
    return frozenset(target) in reachable_markings(net)


def random_net(seed: int, max_places: int = 6, max_transitions: int = 6) -> Tuple[PetriNet, FrozenSet[str]]:
    """A random 1-safe net and a target marking (reachable about half the time).

    Places are split into components that each hold one token; a transition
    moves the token inside one or two components, so no marking can ever put
    two tokens on a place.
    """
    rng = random.Random(seed)
    n = rng.randint(2, max(2, max_places))
    places = [f"P{i}" for i in range(n)]
    k = rng.randint(1, min(3, n))
    cuts = sorted(rng.sample(range(1, n), k - 1))
    components = [places[a:b] for a, b in zip([0] + cuts, cuts + [n])]
    initial = frozenset(rng.choice(c) for c in components)
    transitions = []
    for j in range(rng.randint(1, max(1, max_transitions))):
        pre, post = set(), set()
        for c in rng.sample(components, rng.randint(1, min(2, len(components)))):
            pre.add(rng.choice(c))
            post.add(rng.choice(c))
        transitions.append(PetriTransition(f"T{j}", frozenset(pre), frozenset(post)))
    net = PetriNet(tuple(places), tuple(transitions), initial)
    markings = reachable_markings(net)
    if rng.random() < 0.5:
        target = rng.choice(sorted(markings, key=sorted))
    else:
        target = frozenset(rng.choice(c) for c in components)
    return net, target


def from_petri(net: PetriNet, target: Iterable[str], name: str = "petri") -> SymbolicProtocol:
    """Encode net simulation by r and s, with p's final message to q hinging on the target.

    r picks a branch: in ``m2`` p sends ``l`` to q at once; in ``m1`` r and s
    simulate the net and p may send ``l`` only after ``reach_M``.  Since p
    cannot see the branch, the protocol is implementable exactly when the
    target marking is reachable.
    """
    target = frozenset(target)
    unknown = target - set(net.places)
    if unknown:
        raise ValueError(f"target mentions unknown places {sorted(unknown)}")
    regs = [Register.boolean(f"v_{pl}", pl in net.initial) for pl in net.places]

    def lit(pl: str, value: bool, primed: bool = False):
        ref = Ref(f"v_{pl}", primed)
        return ref if value else Not(ref)

    def msg(label: str):
        return Eq(Ref("x"), Label(label))

    frame = conj(BinOp("<->", Ref(f"v_{pl}", True), Ref(f"v_{pl}")) for pl in net.places)
    reset = conj(lit(pl, pl in net.initial, True) for pl in net.places)
    at_target = conj(lit(pl, pl in target) for pl in net.places)

    values = ["m1", "m2", "l", "restart", "reach_M"] + [f"m_{t.name}" for t in net.transitions]
    trans = [
        SymbolicTransition("root", "r", "s", conj([msg("m1"), reset]), "loop"),
        SymbolicTransition("root", "r", "s", conj([msg("m2"), frame]), "low"),
        SymbolicTransition("low", "p", "q", conj([msg("l"), frame]), "end"),
    ]
    for t in net.transitions:
        enabled = [lit(pl, True) for pl in net.places if pl in t.pre]
        update = []
        for pl in net.places:
            # v' <-> ((v & !pre) | post), simplified per place
            if pl in t.post:
                update.append(lit(pl, True, True))
            elif pl in t.pre:
                update.append(lit(pl, False, True))
            else:
                update.append(BinOp("<->", Ref(f"v_{pl}", True), Ref(f"v_{pl}")))
        trans.append(SymbolicTransition("loop", "r", "s", conj([msg(f"m_{t.name}")] + enabled + update), "loop"))
    trans.append(SymbolicTransition("loop", "r", "s", conj([msg("restart"), reset]), "loop"))
    trans.append(SymbolicTransition("loop", "r", "s", conj([msg("reach_M"), at_target, frame]), "reached"))
    trans.append(SymbolicTransition("reached", "p", "q", conj([msg("l"), frame]), "end"))
    return SymbolicProtocol(name, ("r", "s", "p", "q"), tuple(values), tuple(regs),
                            ("root", "loop", "low", "reached", "end"), tuple(trans), "root", frozenset({"end"}))


# -- random protocols ------------------------------------------------------------


@dataclass(frozen=True)
class RandomSpec:
    states: int = 5
    participants: int = 3
    values: int = 3
    branching: int = 2
    loop_prob: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.states, self.values, self.branching) < 1:
            raise ValueError("counts must be at least 1")
        if self.participants < 2:
            raise ValueError("a protocol needs at least two participants")
        if not 0.0 <= self.loop_prob <= 1.0:
            raise ValueError("loop_prob must lie in [0, 1]")


def _names(count: int, first: str) -> List[str]:
    letters = string.ascii_lowercase[string.ascii_lowercase.index(first):] + string.ascii_lowercase
    if count <= len(letters):
        return list(letters[:count])
    return [f"{first}{i}" for i in range(count)]


def random_protocol(spec: RandomSpec) -> Gclts:
    """A well-formed protocol determined by ``spec.seed``.

    States form a chain to the single final state (so every state can finish);
    extra branches jump forward or, with ``loop_prob``, backward.  At least two
    states are always produced.
    """
    rng = random.Random(spec.seed)
    n = max(2, spec.states)
    participants = _names(spec.participants, "p")
    values = _names(spec.values, "a")
    states = [f"s{i}" for i in range(n)]
    labels = [(q, v) for q in participants for v in values]
    trans = []
    for i in range(n - 1):
        sender = rng.choice(participants)
        options = [(q, v) for q, v in labels if q != sender]
        chosen = rng.sample(options, rng.randint(1, min(spec.branching, len(options))))
        for k, (q, v) in enumerate(chosen):
            if k == 0:
                dst = i + 1
            elif rng.random() < spec.loop_prob:
                dst = rng.randint(0, i)
            else:
                dst = rng.randint(i + 1, n - 1)
            trans.append((states[i], SyncEvent(sender, q, v), states[dst]))
    return Gclts.build(f"random_{spec.seed}", participants, values, states[0], [states[-1]], trans, states=states)
