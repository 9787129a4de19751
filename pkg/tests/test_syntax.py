"""Unit and property tests for formulas and positions."""

from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, strategies as st

from posnd.syntax import (
    And,
    Atom,
    Bottom,
    Box,
    Dia,
    Imp,
    Or,
    ParseError,
    concat,
    degree,
    init_set,
    neg,
    parse_formula,
    parse_position,
    prefix_replace,
    print_formula,
    print_position,
    step_holds,
    valid_user_token,
)

P = Atom("p")
Q = Atom("q")


# ---------------------------------------------------------------------------
# concat
# ---------------------------------------------------------------------------


def test_concat_examples():
    assert concat(("a",), ("b", "c")) == ("a", "b", "c")
    assert concat((), ("x",)) == ("x",)
    assert concat(("x",), ()) == ("x",)
    assert concat((), ()) == ()


def test_concat_associative_and_unital_exhaustive():
    # Exhaustive over a 3-token alphabet with each operand of length <= 2,
    # covering composite lengths up to 6.
    alphabet = ("a", "b", "c")
    positions = [()] + [
        tuple(p)
        for n in (1, 2)
        for p in itertools.product(alphabet, repeat=n)
    ]
    for s in positions:
        assert concat(s, ()) == s == concat((), s)
        for t in positions:
            for u in positions:
                assert concat(concat(s, t), u) == concat(s, concat(t, u))


# ---------------------------------------------------------------------------
# prefix_replace
# ---------------------------------------------------------------------------


def test_prefix_replace_examples():
    assert prefix_replace(("a", "b", "c"), ("a", "b"), ("d",)) == ("d", "c")
    # Non-prefix: identity.
    assert prefix_replace(("a", "b"), ("b",), ("z",)) == ("a", "b")
    # Empty pattern always matches and prepends.
    assert prefix_replace(("a",), (), ("z",)) == ("z", "a")
    assert prefix_replace((), (), ()) == ()
    # Whole-position match.
    assert prefix_replace(("a", "b"), ("a", "b"), ()) == ()


@given(
    st.lists(st.sampled_from("abc"), max_size=4).map(tuple),
    st.lists(st.sampled_from("abc"), max_size=4).map(tuple),
)
def test_prefix_replace_roundtrip(s, v):
    # Replacing a prefix by itself is the identity.
    for i in range(len(s) + 1):
        u = s[:i]
        assert prefix_replace(s, u, u) == s
    # Replacing the empty prefix prepends.
    assert prefix_replace(s, (), v) == v + s


# ---------------------------------------------------------------------------
# step_holds
# ---------------------------------------------------------------------------


def test_step_holds_examples():
    assert step_holds("succ", ("a",), ("a", "b"))
    assert not step_holds("succ", ("a",), ("a",))
    assert not step_holds("succ", ("a",), ("a", "b", "c"))
    assert step_holds("succ-refl", ("a",), ("a",))
    assert step_holds("succ-refl", ("a",), ("a", "b"))
    assert not step_holds("succ-refl", ("a",), ("a", "b", "c"))
    assert step_holds("trans", ("a",), ("a", "b", "c"))
    assert not step_holds("trans", ("a",), ("a",))
    assert step_holds("refl-trans", ("a",), ("a",))
    assert step_holds("refl-trans", (), ("a", "b"))
    assert not step_holds("refl-trans", ("a",), ("b", "a"))
    with pytest.raises(ValueError):
        step_holds("nope", (), ())


def test_step_holds_relationships_exhaustive():
    alphabet = ("a", "b")
    positions = [
        tuple(p)
        for n in range(4)
        for p in itertools.product(alphabet, repeat=n)
    ]
    for s in positions:
        for t in positions:
            succ = step_holds("succ", s, t)
            succ_refl = step_holds("succ-refl", s, t)
            trans = step_holds("trans", s, t)
            refl_trans = step_holds("refl-trans", s, t)
            assert succ_refl == (succ or s == t)
            assert refl_trans == (trans or s == t)
            if succ:
                assert trans
            if trans:
                assert refl_trans


# ---------------------------------------------------------------------------
# init_set
# ---------------------------------------------------------------------------


def test_init_set_examples():
    assert init_set([("a", "b")]) == {(), ("a",), ("a", "b")}
    assert init_set([]) == frozenset()
    assert init_set([()]) == {()}
    assert init_set([("a",), ("b",)]) == {(), ("a",), ("b",)}


@given(st.lists(st.lists(st.sampled_from("ab"), max_size=3).map(tuple), max_size=4))
def test_init_set_is_minimal_prefix_closed(ps):
    closure = init_set(ps)
    # Contains the inputs.
    for p in ps:
        assert p in closure
    # Prefix-closed.
    for p in closure:
        for i in range(len(p)):
            assert p[:i] in closure
    # Minimal: every member is a prefix of some input.
    for p in closure:
        assert any(q[: len(p)] == p for q in ps)
    if ps:
        assert () in closure


# ---------------------------------------------------------------------------
# degree
# ---------------------------------------------------------------------------


def test_degree_examples():
    assert degree(P) == 0
    assert degree(Bottom()) == 0
    assert degree(Box(P)) == 1
    assert degree(And(Box(P), Q)) == 2
    assert degree(neg(P)) == 1
    assert degree(neg(neg(P))) == 2
    assert degree(Imp(And(P, Q), Dia(P))) == 2
    assert degree(Box(Box(Dia(P)))) == 3


# ---------------------------------------------------------------------------
# concrete syntax
# ---------------------------------------------------------------------------


def _random_formula(rng: random.Random, depth: int):
    choices = ["atom", "bot"]
    if depth > 0:
        choices += ["and", "or", "imp", "box", "dia"]
    kind = rng.choice(choices)
    if kind == "atom":
        return Atom(rng.choice(["p", "q", "r"]))
    if kind == "bot":
        return Bottom()
    if kind in ("box", "dia"):
        ctor = Box if kind == "box" else Dia
        return ctor(_random_formula(rng, depth - 1))
    ctor = {"and": And, "or": Or, "imp": Imp}[kind]
    return ctor(_random_formula(rng, depth - 1), _random_formula(rng, depth - 1))


def test_formula_roundtrip_random():
    rng = random.Random(20260822)
    for _ in range(1000):
        f = _random_formula(rng, 4)
        assert parse_formula(print_formula(f)) == f


def test_formula_parsing_examples():
    assert parse_formula("bot") == Bottom()
    assert parse_formula("p") == P
    assert parse_formula("(imp p (box q))") == Imp(P, Box(Q))
    assert parse_formula("(not p)") == Imp(P, Bottom())
    assert print_formula(Imp(P, Bottom())) == "(imp p bot)"
    assert parse_formula("(dia (and p q))") == Dia(And(P, Q))


def test_formula_parse_errors():
    for bad in ["(and p)", "(frob p q)", "(not)", "()", "(box p q)"]:
        with pytest.raises(ParseError):
            parse_formula(bad)
    with pytest.raises(ParseError):
        parse_formula("(and p q) extra")


def test_position_roundtrip_and_validation():
    assert parse_position("()") == ()
    assert parse_position("(a b c)") == ("a", "b", "c")
    assert print_position(("a", "b")) == "(a b)"
    assert print_position(()) == "()"
    with pytest.raises(ParseError):
        parse_position("(_fresh)")  # reserved prefix is not user syntax
    assert not valid_user_token("_z")
    assert not valid_user_token("")
    assert valid_user_token("x1")
