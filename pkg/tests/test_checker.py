import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from implcheck.checker import (
    IllFormed,
    Kind,
    avail,
    check_implementability,
    check_no_mixed_choice,
    check_receive_coherence,
    check_send_coherence,
    eps_reachable,
    extract_witness,
    simultaneous_pairs,
)
from implcheck.core import SyncEvent, parse_async_word, project
from implcheck.generators import CnfFormula, avail_fixpoint, check_avail_path, from_cnf
from implcheck.protocol import Gclts
from implcheck.protocol.gclts import rename_states, with_transition_order

from .conftest import load
from .strategies import protocols


def build(trans, finals, ps=("p", "q", "r")):
    vals = sorted({e.split()[2] for _, e, _ in trans})
    return Gclts.build("t", ps, vals, trans[0][0], finals, [(s, SyncEvent(*e.split()), d) for s, e, d in trans])


def pairs(g, p):
    return {(sp.s1, sp.s2): sp for sp in simultaneous_pairs(g, p)}


def test_simultaneous_examples(p_rc):
    g = build([("s0", "q p a", "s1"), ("s0", "q r b", "s2")], ["s1", "s2"])
    sim = pairs(g, "p")
    assert sim[("s0", "s0")].witness_u == ()
    assert sim[("s0", "s2")].witness_u == ()
    assert ("s1", "s2") not in sim
    assert pairs(p_rc, "r")[("s1", "s2")].witness_u == ()


def test_eps_reachable_examples():
    g = build([("s", "q r a", "t")], ["t"])
    assert eps_reachable(g, "p", "s") == {"s", "t"}
    g = build([("s", "p q a", "t")], ["t"])
    assert eps_reachable(g, "p", "s") == {"s"}


def test_send_coherence_examples(p_sc):
    assert check_send_coherence(build([("s0", "p q m", "s1")], ["s1"])) == []
    (v,) = check_send_coherence(p_sc)
    assert str(v.transitions[0]) == "s3 p->q:o s4"
    assert (v.sim_pair.s1, v.sim_pair.s2) == ("s3", "s5")
    assert v.sim_pair.witness_u == (SyncEvent("q", "p", "4"),)


def test_avail_examples():
    g = build([("s0", "p q m", "s1")], ["s1"])
    assert avail(g, "p", "q", "m", "s0", {"q"}) == (True, ())
    g = build([("s0", "q p m", "s1")], ["s1"])
    assert avail(g, "p", "q", "m", "s0", {"q"}) == (False, ())
    # a blocked sender blocks its receiver
    g = build([("s0", "q r a", "s1"), ("s1", "r p b", "s2"), ("s2", "p q m", "s3")], ["s3"])
    assert avail(g, "p", "q", "m", "s0", {"q"}) == (False, ())
    assert avail(g, "p", "q", "m", "s0", set()) == (True, (0, 1))
    with pytest.raises(ValueError):
        avail(g, "p", "p", "m", "s0", set())


def test_avail_on_sat_reduction():
    one = CnfFormula(1, (((1, True),) * 3,))
    g, q = from_cnf(one)
    assert avail(g, q.p, q.q, q.m, q.state, q.blocked)[0]
    two = CnfFormula(1, (((1, True),) * 3, ((1, False),) * 3))
    g, q = from_cnf(two)
    assert not avail(g, q.p, q.q, q.m, q.state, q.blocked)[0]


def test_receive_coherence_examples(p_rc):
    binary = load("loop.gt")
    assert check_receive_coherence(binary) == []
    (v,) = check_receive_coherence(p_rc)
    assert [str(t) for t in v.transitions] == ["s1 p->r:m s3", "s2 q->r:m s5"]
    assert [str(t) for t in v.detail] == ["s5 p->r:m s6"]
    assert v.sim_pair.witness_u == ()


def test_strict_mode_misses_reordering():
    g = load("strict_gap.gclts")
    assert check_implementability(g, "strict").implementable
    v = check_implementability(g, "generalized")
    assert [x.kind for x in v.violations] == [Kind.RC]


def test_no_mixed_choice_examples(p_nmc):
    assert check_no_mixed_choice(build([("s0", "p q m", "s1")], ["s1"])) == []
    (v,) = check_no_mixed_choice(p_nmc)
    assert [t.src for t in v.transitions] == ["s1", "s3"]
    assert v.sim_pair.witness_u == (SyncEvent("q", "p", "a"),)


def test_verdicts(p_sc, p_rc, p_nmc, bidders):
    assert check_implementability(bidders).implementable
    assert [v.kind for v in check_implementability(p_sc).violations] == [Kind.SC]
    assert [v.kind for v in check_implementability(p_rc).violations] == [Kind.RC]
    assert [v.kind for v in check_implementability(p_nmc).violations] == [Kind.SC, Kind.NMC]


def test_witnesses(p_sc, p_rc, p_nmc):
    W = parse_async_word
    assert check_implementability(p_sc).violations[0].witness_trace == W(
        "s|>q!r q<|s?r q|>p!4 p<|q?4 p|>q!o")
    assert check_implementability(p_rc).violations[0].witness_trace == W(
        "p|>q!go2 q<|p?go2 q|>r!m p|>r!m r<|p?m")
    nmc = check_implementability(p_nmc).violations[1]
    assert nmc.witness_trace == W("q|>r!b r<|q?b q|>p!a p<|q?a r|>p!c p|>q!m")
    assert extract_witness(p_nmc, nmc) == nmc.witness_trace


def test_ill_formed_rejected():
    with pytest.raises(IllFormed) as err:
        check_implementability(load("bad_sender.gclts"))
    assert not err.value.report.ok


def test_render(p_rc):
    text = check_implementability(p_rc).render(witness=True)
    assert "avail path: s5 p->r:m s6" in text
    assert "witness: p|>q!go2" in text
    assert "witness" not in check_implementability(p_rc).render()


# -- properties ------------------------------------------------------------------


def _runs(g, length):
    """All run prefixes with at most ``length`` transitions."""
    stack = [(g.initial, ())]
    while stack:
        s, run = stack.pop()
        yield s, run
        if len(run) < length:
            for i in g.outgoing[s]:
                stack.append((g.transitions[i].dst, run + (i,)))


@settings(max_examples=150)
@given(protocols(max_states=5, max_participants=3))
def test_simultaneity_reflexive_symmetric_and_witnessed(g):
    for p in g.participants:
        sim = pairs(g, p)
        assert sim[(g.initial, g.initial)].witness_u == ()
        full = set()
        for sp in simultaneous_pairs(g, p):
            full |= {(sp.s1, sp.s2), (sp.s2, sp.s1)}
            for run, end in zip(sp.runs, (sp.s1, sp.s2)):
                state = g.initial
                for i in run:
                    assert g.transitions[i].src == state
                    state = g.transitions[i].dst
                assert state == end
                assert project(tuple(g.transitions[i].event for i in run), p) == sp.witness_u
        # every state some run reaches is simultaneous with itself
        for s, _ in _runs(g, 4):
            assert (s, s) in full
        # brute force over short runs: equal projections imply simultaneity
        seen = {}
        for s, run in _runs(g, 4):
            seen.setdefault(project(tuple(g.transitions[i].event for i in run), p), set()).add(s)
        for states in seen.values():
            for a, b in itertools.product(states, repeat=2):
                assert (a, b) in full


@settings(max_examples=300)
@given(protocols(max_states=6, max_participants=4), st.data())
def test_avail_matches_fixpoint_and_is_antitone(g, data):
    p, q = data.draw(st.permutations(g.participants))[:2]
    m = data.draw(st.sampled_from(g.values))
    s = data.draw(st.sampled_from(g.states))
    small = frozenset(data.draw(st.sets(st.sampled_from(g.participants))))
    big = small | frozenset(data.draw(st.sets(st.sampled_from(g.participants))))
    ok, path = avail(g, p, q, m, s, small)
    assert ok == avail_fixpoint(g, p, q, m, s, small)
    if ok:
        assert check_avail_path(g, p, q, m, s, small, path)
    if avail(g, p, q, m, s, big)[0]:
        assert ok


@settings(max_examples=100)
@given(protocols(max_states=6, max_participants=2, min_participants=2))
def test_binary_protocols_are_implementable(g):
    assert check_implementability(g).implementable


@settings(max_examples=100)
@given(protocols(max_states=6, max_participants=3), st.randoms(use_true_random=False))
def test_verdict_invariant_under_renaming_and_reordering(g, rnd):
    base = check_implementability(g)
    names = list(g.states)
    rnd.shuffle(names)
    mapping = {s: f"x{n}" for s, n in zip(g.states, names)}
    renamed = check_implementability(rename_states(g, mapping))
    order = list(range(len(g.transitions)))
    rnd.shuffle(order)
    shuffled = check_implementability(with_transition_order(g, order))
    assert base.implementable == renamed.implementable == shuffled.implementable

    # an RC pair is reported once, oriented by declaration order
    def shape(v, tmap=lambda t: t):
        return sorted((x.kind.value, tuple(sorted(map(str, map(tmap, x.transitions))))) for x in v.violations)

    inv = {v: k for k, v in mapping.items()}
    back = lambda t: type(t)(inv[t.src], t.event, inv[t.dst])
    assert shape(base) == shape(renamed, back)
    assert shape(base) == shape(shuffled)
