from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import random_system
from oracles import brute_minimal, brute_solutions
from patternforge.counts import (
    EquationError, EquationSystem, enumerate_solutions, evaluate, format_assignment, is_feasible,
    minimal_solutions, parse_relation, parse_system, provably_infeasible,
)


def rows(sols, variables):
    return [tuple(s[v] for v in variables) for s in sols]


def test_parse_and_print_round_trip():
    text = "AbstractFactory>=0, factories>0, absProducts>0, factories=concProducts"
    assert str(parse_system(text)) == text


def test_operator_precedence():
    r = parse_relation("a+b*2=c")
    assert evaluate(r, {"a": 1, "b": 2, "c": 5})
    assert not evaluate(r, {"a": 1, "b": 2, "c": 6})
    assert str(parse_relation("(a+b)*2=c")) == "(a+b)*2=c"


def test_unicode_relations_normalized():
    assert str(parse_relation("a ≥ 1")) == "a>=1"
    assert str(parse_relation("a≤b")) == "a<=b"


@pytest.mark.parametrize("bad", ["a>", "a>>1", "a=1)", "(a=1", "a ? 1", "1 2 = 3"])
def test_malformed_equations(bad):
    with pytest.raises(EquationError):
        parse_system(bad)


def test_undeclared_variable_rejected():
    with pytest.raises(EquationError):
        parse_system("a>0, b>0", ["a"])


def test_enumeration_is_lexicographic():
    sys = parse_system("x+y=2", ["x", "y"])
    assert rows(enumerate_solutions(sys, 3), ["x", "y"]) == [(0, 2), (1, 1), (2, 0)]


def test_unmentioned_variables_range_freely():
    sys = parse_system("a>0", ["a", "b"])
    assert len(enumerate_solutions(sys, 2)) == 2 * 3


def test_minimal_solutions():
    sys = parse_system("factories>0, absProducts>0, factories=concProducts")
    assert minimal_solutions(sys, 4) == [{"factories": 1, "absProducts": 1, "concProducts": 1}]
    sys = parse_system("a+b>=2", ["a", "b"])
    assert rows(minimal_solutions(sys, 3), ["a", "b"]) == [(0, 2), (1, 1), (2, 0)]


def test_subtraction_is_over_integers():
    sys = parse_system("a-b>0", ["a", "b"])
    assert all(s["a"] > s["b"] for s in enumerate_solutions(sys, 3))


def test_feasibility_and_proofs():
    assert is_feasible(parse_system("a>1"), 2)
    assert not is_feasible(parse_system("a>5"), 3)
    assert not provably_infeasible(parse_system("a>5"), 3)
    assert provably_infeasible(parse_system("a<1, a>0"), 8)
    assert provably_infeasible(parse_system("a<0"), 8)


def test_empty_system_has_single_empty_solution():
    assert enumerate_solutions(EquationSystem(()), 5) == [{}]


def test_negative_bound_rejected():
    with pytest.raises(EquationError):
        enumerate_solutions(parse_system("a>0"), -1)


def test_format_assignment():
    assert format_assignment({"a": 1, "b": 0}) == "a=1, b=0"


@pytest.mark.parametrize("seed", range(25))
def test_solver_matches_nested_loops(seed):
    variables, relations, sys = random_system(random.Random(seed))
    expected = brute_solutions(relations, variables, 6)
    assert rows(enumerate_solutions(sys, 6), variables) == expected
    assert rows(minimal_solutions(sys, 6), variables) == brute_minimal(expected)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000), st.integers(0, 5))
def test_minimal_solutions_are_antichain_and_cover(seed, bound):
    variables, _, sys = random_system(random.Random(seed))
    sols = rows(enumerate_solutions(sys, bound), variables)
    mins = rows(minimal_solutions(sys, bound), variables)
    assert set(mins) <= set(sols)
    for s in sols:
        assert any(all(m_i <= s_i for m_i, s_i in zip(m, s)) for m in mins)
    for m in mins:
        assert not any(o != m and all(o_i <= m_i for o_i, m_i in zip(o, m)) for o in mins)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_solutions_grow_with_the_bound(seed):
    variables, _, sys = random_system(random.Random(seed))
    small = set(rows(enumerate_solutions(sys, 3), variables))
    large = set(rows(enumerate_solutions(sys, 4), variables))
    assert small == {s for s in large if max(s, default=0) <= 3}


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 100_000))
def test_infeasibility_proofs_are_sound(seed):
    variables, _, sys = random_system(random.Random(seed))
    if provably_infeasible(sys, 3):
        assert enumerate_solutions(sys, 10) == []


def test_partially_boxed_system_is_proved_infeasible():
    assert provably_infeasible(parse_system("leaves>0, leaves<1, operations>0"))
    assert not provably_infeasible(parse_system("leaves<1, operations>0"))
