import pytest
from hypothesis import given
from hypothesis import strategies as st

from implcheck.core import SyncEvent
from implcheck.protocol import (
    Gclts,
    ParseError,
    Rule,
    UnknownSymbol,
    concretize_symbolic,
    dump_gclts,
    dump_sgclts,
    from_global_type,
    parse_gclts,
    parse_global_type,
    parse_sgclts,
    restrict_to_participant,
    to_dot,
    validate_gclts,
)
from implcheck.protocol.formats import gclts_from_gt
from implcheck.protocol.globaltype import DuplicateBranch, GlobalTypeError, UnboundVariable, Unguarded
from implcheck.protocol.symbolic import parse_guard, render_guard

from .strategies import protocols


def build(trans, finals, initial="s0", ps=("p", "q", "r"), vs=("a", "b", "m")):
    return Gclts.build("t", ps, vs, initial, finals, [(s, SyncEvent(*e.split()), d) for s, e, d in trans])


def test_validate_examples():
    assert validate_gclts(build([("s0", "p q m", "s1")], ["s1"])).ok
    r = validate_gclts(build([("s0", "p q a", "s1"), ("s0", "r q b", "s2")], ["s1", "s2"]))
    assert [f.rule for f in r.failures] == [Rule.SENDER_DRIVEN]
    assert r.failures[0].states == ("s0",)
    r = validate_gclts(build([("s0", "p q a", "s1")], []))
    assert [(f.rule, f.states) for f in r.failures] == [(Rule.DEADLOCK_FREEDOM, ("s1",))]


def test_validate_sink_finality_and_determinism():
    r = validate_gclts(build([("s0", "p q a", "s1"), ("s1", "q p a", "s2")], ["s1", "s2"]))
    assert [f.rule for f in r.failures] == [Rule.SINK_FINALITY]
    r = validate_gclts(build([("s0", "p q a", "s1"), ("s0", "p q a", "s2")], ["s1", "s2"]))
    assert [f.rule for f in r.failures] == [Rule.SENDER_DRIVEN]
    assert r.failures[0].detail.startswith("nondeterministic")


def test_unreachable_dead_end_is_fine():
    g = build([("s0", "p q a", "s1"), ("s2", "p q a", "s3")], ["s1"])
    assert validate_gclts(g).ok


def test_unknown_symbol():
    g = Gclts.build("t", ("p", "q"), ("a",), "s0", ["s1"], [("s0", SyncEvent("p", "z", "a"), "s1")])
    with pytest.raises(UnknownSymbol):
        validate_gclts(g)


def test_restriction_examples():
    g = build([("s0", "p q m", "s1")], ["s1"])
    assert restrict_to_participant(g, "p").labels == (SyncEvent("p", "q", "m"),)
    assert restrict_to_participant(g, "r").labels == (None,)
    g = build([("s0", "p q m", "s1"), ("s1", "q r m", "s2"), ("s2", "r p m", "s3")], ["s3"])
    assert restrict_to_participant(g, "q").eps_count() == 1


@given(protocols())
def test_restriction_preserves_shape(g):
    for p in g.participants:
        r = restrict_to_participant(g, p)
        assert r.protocol.states == g.states
        assert len(r.labels) == len(g.transitions)
        assert all((lab is None) != t.event.involves(p) for lab, t in zip(r.labels, g.transitions))


@given(protocols())
def test_generated_protocols_are_well_formed(g):
    assert validate_gclts(g).ok


# -- global types ---------------------------------------------------------------


def test_global_type_examples():
    g = from_global_type(parse_global_type("0"))
    assert (len(g.states), g.transitions, g.finals) == (1, (), frozenset(g.states))
    g = from_global_type(parse_global_type("p->q:m . 0"))
    assert len(g.states) == 2 and len(g.transitions) == 1
    g = from_global_type(parse_global_type("rec t . (p->q:a . t + p->q:b . 0)"))
    assert g.states == ("g0", "g1")
    assert [str(t) for t in g.transitions] == ["g0 p->q:a g0", "g0 p->q:b g1"]
    assert g.finals == {"g1"}
    assert validate_gclts(g).ok


def test_global_type_errors():
    with pytest.raises(Unguarded):
        from_global_type(parse_global_type("rec t . t"))
    with pytest.raises(Unguarded):
        from_global_type(parse_global_type("rec t . rec u . t"))
    with pytest.raises(DuplicateBranch):
        from_global_type(parse_global_type("(p->q:a . 0 + p->q:a . 0)"))
    with pytest.raises(UnboundVariable):
        from_global_type(parse_global_type("p->q:a . t"))
    with pytest.raises(GlobalTypeError):
        parse_global_type("(p->q:a . 0 + r->q:a . 0)")
    with pytest.raises(GlobalTypeError):
        from_global_type(parse_global_type("p->p:a . 0"))


def test_nested_recursion_and_shadowing():
    g = from_global_type(parse_global_type(
        "rec t . p->q:a . rec t . (q->p:b . t + q->p:c . 0)"))
    assert validate_gclts(g).ok
    assert [str(t) for t in g.transitions] == ["g0 p->q:a g1", "g1 q->p:b g1", "g1 q->p:c g2"]


def test_infinite_global_type_has_no_finals():
    g = from_global_type(parse_global_type("rec t . p->q:a . t"))
    assert g.finals == frozenset()
    r = validate_gclts(g)
    assert r.ok and r.notes


def test_gt_file_line_numbers():
    text = "globaltype g\nparticipants p q\nvalues a\n\np->q:b . 0\n"
    with pytest.raises(ParseError) as err:
        gclts_from_gt(text, "x.gt")
    assert err.value.line == 5


# -- text formats ---------------------------------------------------------------


@given(protocols())
def test_gclts_round_trip(g):
    h = parse_gclts(dump_gclts(g))
    assert (h.transitions, h.initial, h.finals, h.participants, h.values) == (
        g.transitions, g.initial, g.finals, g.participants, g.values)


@pytest.mark.parametrize("text, line", [
    ("protocol x\nparticipants p q\nvalues a\ninitial s0\nfinals s1\ntrans s0 p->q:b s1\n", 6),
    ("protocol x\nparticipants p q\nvalues a\ninitial s0\nfinals s1\ntrans s0 p-q:a s1\n", 6),
    ("protocol x\nparticipants p q\n# comment\nbogus\n", 4),
    ("protocol x\nparticipants p p\n", 2),
])
def test_gclts_parse_errors(text, line):
    with pytest.raises(ParseError) as err:
        parse_gclts(text, "f.gclts")
    assert err.value.line == line
    assert f"f.gclts:{line}:" in str(err.value)


def test_missing_header():
    with pytest.raises(ParseError, match="initial"):
        parse_gclts("protocol x\nparticipants p q\nvalues a\nfinals\n")


def test_dot_export(p_sc):
    dot = to_dot(p_sc)
    assert dot.startswith('digraph "p_sc"')
    assert '"s3" -> "s4" [label="p->q:o"];' in dot
    assert '"s4" [shape=doublecircle];' in dot


# -- symbolic protocols -------------------------------------------------------------

FLIP = """protocol flip
participants p q
values true false
register b : bool = false
initial s0
finals s1
trans s0 p->q:x [{guard}] s1
"""


def concrete(guard):
    return concretize_symbolic(parse_sgclts(FLIP.format(guard=guard)))


def test_concretize_examples():
    c = concrete("b' <-> x")
    assert sorted(str(t) for t in c.protocol.transitions) == [
        "s0[b=false] p->q:false s1[b=false]", "s0[b=false] p->q:true s1[b=true]"]
    assert c.report.ok
    c = concrete("false")
    assert c.protocol.states == ("s0[b=false]",)
    assert [f.rule for f in c.report.failures] == [Rule.DEADLOCK_FREEDOM]


def test_concretize_without_registers_is_isomorphic():
    text = "protocol x\nparticipants p q\nvalues a\ninitial s0\nfinals s1\ntrans s0 p->q:x [true] s1\n"
    c = concretize_symbolic(parse_sgclts(text))
    assert [str(t) for t in c.protocol.transitions] == ["s0 p->q:a s1"]


def test_underdetermined_guard_reported_as_determinism():
    c = concrete("true")
    assert {f.rule for f in c.report.failures} == {Rule.DETERMINISM}


def test_enum_registers_and_labels():
    text = """protocol e
participants p q
values go stop
register mode : enum {idle,busy} = idle
initial s0
finals s1
trans s0 p->q:x [x = go & mode = idle & mode' = busy] s0
trans s0 p->q:x [x = stop & mode' = mode] s1
"""
    c = concretize_symbolic(parse_sgclts(text))
    assert c.state_count == 4
    assert "s0[mode=idle] p->q:go s0[mode=busy]" in [str(t) for t in c.protocol.transitions]
    sp = parse_sgclts(text)
    assert parse_sgclts(dump_sgclts(sp)) == sp


@pytest.mark.parametrize("text", [
    "a & b | !c -> d <-> e",
    "(a -> b) -> c",
    "a -> b -> c",
    "x = m1 & (v' <-> v)",
    "!(a | b) & true",
])
def test_guard_print_parse_round_trip(text):
    g = parse_guard(text, ["a", "b", "c", "d", "e", "v"])
    assert parse_guard(render_guard(g), ["a", "b", "c", "d", "e", "v"]) == g


def test_guard_precedence():
    g = parse_guard("a | b & c", ["a", "b", "c"])
    assert render_guard(g) == "a | b & c"
    assert g.op == "|"
    assert parse_guard("a -> b -> c", "abc").right.op == "->"


@pytest.mark.parametrize("guard, line", [("a &", 7), ("zz", None), ("x = nope", None)])
def test_symbolic_errors(guard, line):
    with pytest.raises(ParseError) as err:
        parse_sgclts(FLIP.format(guard=guard))
    assert err.value.line == line


def test_register_declaration_errors():
    bad = FLIP.replace("bool = false", "bool = maybe")
    with pytest.raises(ParseError) as err:
        parse_sgclts(bad)
    assert err.value.line == 4


@given(st.lists(st.booleans(), min_size=2, max_size=2))
def test_concretization_respects_bound(bits):
    text = f"""protocol two
participants p q
values true false
register a : bool = {str(bits[0]).lower()}
register b : bool = {str(bits[1]).lower()}
initial s0
finals s1
trans s0 p->q:x [a' <-> !a & b' <-> x] s0
trans s0 q->p:x [a' <-> a & b' <-> b] s1
"""
    c = concretize_symbolic(parse_sgclts(text))
    assert c.state_count <= 2 * 4
