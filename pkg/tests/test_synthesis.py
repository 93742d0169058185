from hypothesis import given, settings

from implcheck.core import project, split_word
from implcheck.protocol.formats import parse_gclts
from implcheck.semantics import split_prefixes
from implcheck.synthesis import (
    determinize_local,
    dump_lclts,
    local_to_dot,
    parse_lclts,
    synthesize_canonical,
    write_clts,
)

from .strategies import protocols

SIMPLE = "protocol one\nparticipants p q\nvalues m\ninitial s0\nfinals s1\ntrans s0 p->q:m s1\n"


def test_single_message():
    g = parse_gclts(SIMPLE)
    p = determinize_local(g, "p")
    assert len(p.states) == 2
    assert [str(e) for _, e, _ in p.transitions] == ["p|>q!m"]
    assert p.transitions[0][2] in p.finals
    q = determinize_local(g, "q")
    assert [str(e) for _, e, _ in q.transitions] == ["q<|p?m"]
    assert len(synthesize_canonical(g).machines) == 2


def test_p_rc_receiver_is_confused(p_rc):
    r = determinize_local(p_rc, "r")
    members = r.member_sets()[r.initial]
    assert {"s0", "s1", "s2"} <= members
    offered = {str(e) for e in r.delta[r.initial]}
    assert offered == {"r<|p?m", "r<|q?m"}


def test_p_sc_mixes_send_and_final(p_sc):
    p = determinize_local(p_sc, "p")
    assert "{s3,s5}" in p.states
    assert "{s3,s5}" in p.finals
    assert any(str(e) == "p|>q!o" for e in p.delta["{s3,s5}"])


def _cyclic(m):
    colour = {}

    def visit(s):
        colour[s] = 1
        for d in m.delta[s].values():
            if colour.get(d) == 1 or (d not in colour and visit(d)):
                return True
        colour[s] = 2
        return False

    return visit(m.initial)


def test_two_bidder_shapes(bidders):
    c = synthesize_canonical(bidders)
    assert c.participants == ("B1", "B2", "S")
    assert len(c["S"].states) == 6
    assert not _cyclic(c["S"])
    assert _cyclic(c["B1"]) and _cyclic(c["B2"])


def test_serialization_is_deterministic(tmp_path, bidders):
    a = [dump_lclts(m) for m in synthesize_canonical(bidders).machines]
    b = [dump_lclts(m) for m in synthesize_canonical(bidders).machines]
    assert a == b
    m = synthesize_canonical(bidders)["B1"]
    back = parse_lclts(dump_lclts(m))
    assert (back.states, back.transitions, back.initial, back.finals) == (m.states, m.transitions, m.initial, m.finals)
    assert local_to_dot(m).startswith('digraph "B1"')
    files = write_clts(synthesize_canonical(bidders), tmp_path)
    assert sorted(f.name for f in files)[:2] == ["two_bidder_finite_B1.dot", "two_bidder_finite_B1.lclts"]


@settings(max_examples=150)
@given(protocols(max_states=6, max_participants=3))
def test_projections_of_protocol_prefixes_are_accepted(g):
    c = synthesize_canonical(g)
    for m in c.machines:
        assert len({(s, e) for s, e, _ in m.transitions}) == len(m.transitions)
        assert all(e.owner == m.participant for _, e, _ in m.transitions)
    for w in split_prefixes(g, 8):
        for p in g.participants:
            assert c[p].run(project(w, p)) is not None


@settings(max_examples=100)
@given(protocols(max_states=5, max_participants=3))
def test_finished_runs_end_in_final_macro_states(g):
    c = synthesize_canonical(g)
    stack = [(g.initial, ())]
    while stack:
        s, run = stack.pop()
        if s in g.finals:
            w = split_word(g.transitions[i].event for i in run)
            for p in g.participants:
                assert c[p].run(project(w, p)) in c[p].finals
        if len(run) < 4:
            stack.extend((g.transitions[i].dst, run + (i,)) for i in g.outgoing[s])


def _explains(g, p, word):
    """Some run of ``g`` has ``word`` as a prefix of its split projection onto ``p``."""
    seen = {(g.initial, 0)}
    stack = list(seen)
    while stack:
        s, i = stack.pop()
        if i == len(word):
            return True
        for k in g.outgoing[s]:
            e = g.transitions[k].event
            j = i
            if e.involves(p):
                local = e.send if e.sender == p else e.receive
                if local != word[i]:
                    continue
                j += 1
            node = (g.transitions[k].dst, j)
            if node not in seen:
                seen.add(node)
                stack.append(node)
    return False


@settings(max_examples=100)
@given(protocols(max_states=5, max_participants=3))
def test_machine_words_are_protocol_projections(g):
    for m in synthesize_canonical(g).machines:
        stack = [(m.initial, ())]
        while stack:
            s, word = stack.pop()
            assert _explains(g, m.participant, word)
            if len(word) < 4:
                stack.extend((d, word + (e,)) for e, d in m.delta[s].items())
