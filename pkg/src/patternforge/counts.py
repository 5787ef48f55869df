"""Replica-count equations over the naturals.

Terms are built from natural constants, count variables, ``+``, ``-`` and
``*``; relations use ``<``, ``<=``, ``=``, ``>``, ``>=``. Subtraction is
evaluated over the integers, only the variables themselves range over N.

Solving is bounded exhaustive search. Products of variables make general
feasibility undecidable, so every query takes an explicit bound.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

import numpy as np

DEFAULT_BOUND = 8

RELATIONS = ("<", "<=", "=", ">", ">=")


class EquationError(Exception):
    pass


class UnboundVariable(EquationError):
    pass


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Count:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # "+", "-", "*"
    left: CountTerm
    right: CountTerm


CountTerm = Union[Num, Count, BinOp]

_PREC = {"+": 1, "-": 1, "*": 2}


def term_variables(t: CountTerm) -> list[str]:
    if isinstance(t, Count):
        return [t.name]
    if isinstance(t, BinOp):
        return list(dict.fromkeys(term_variables(t.left) + term_variables(t.right)))
    return []


def format_term(t: CountTerm, parent: int = 0, right_side: bool = False) -> str:
    if isinstance(t, Num):
        return str(t.value)
    if isinstance(t, Count):
        return t.name
    prec = _PREC[t.op]
    text = f"{format_term(t.left, prec)}{t.op}{format_term(t.right, prec, True)}"
    if prec < parent or (prec == parent and right_side):
        return f"({text})"
    return text


def eval_term(t: CountTerm, a: Mapping[str, int]):
    """Evaluate ``t``; values may be ints or numpy arrays."""
    if isinstance(t, Num):
        return t.value
    if isinstance(t, Count):
        try:
            return a[t.name]
        except KeyError:
            raise UnboundVariable(f"variable {t.name!r} has no value") from None
    l, r = eval_term(t.left, a), eval_term(t.right, a)
    if t.op == "+":
        return l + r
    if t.op == "-":
        return l - r
    return l * r


@dataclass(frozen=True)
class CountRelation:
    lhs: CountTerm
    rel: str
    rhs: CountTerm

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise EquationError(f"unknown relation symbol {self.rel!r}")

    def variables(self) -> list[str]:
        return list(dict.fromkeys(term_variables(self.lhs) + term_variables(self.rhs)))

    def __str__(self) -> str:
        return f"{format_term(self.lhs)}{self.rel}{format_term(self.rhs)}"


def _compare(rel: str, l, r):
    if rel == "<":
        return l < r
    if rel == "<=":
        return l <= r
    if rel == "=":
        return l == r
    if rel == ">":
        return l > r
    return l >= r


def evaluate(rel: CountRelation, a: Mapping[str, int]) -> bool:
    """Truth of ``rel`` under assignment ``a`` with ordinary integer arithmetic."""
    return bool(_compare(rel.rel, eval_term(rel.lhs, a), eval_term(rel.rhs, a)))


@dataclass(frozen=True)
class EquationSystem:
    relations: tuple[CountRelation, ...] = ()
    variables: tuple[str, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        derived: list[str] = []
        for r in self.relations:
            derived.extend(r.variables())
        derived = list(dict.fromkeys(derived))
        if self.variables is None:
            object.__setattr__(self, "variables", tuple(derived))
        else:
            object.__setattr__(self, "variables", tuple(self.variables))
            missing = [v for v in derived if v not in self.variables]
            if missing:
                raise EquationError(f"relations use undeclared variables {missing}")

    def __str__(self) -> str:
        return ", ".join(str(r) for r in self.relations)

    def holds(self, a: Mapping[str, int]) -> bool:
        return all(evaluate(r, a) for r in self.relations)

    def restrict(self, names: Iterable[str]) -> EquationSystem:
        """Relations mentioning only ``names``; the variable list becomes ``names``."""
        keep = list(names)
        return EquationSystem(tuple(r for r in self.relations if set(r.variables()) <= set(keep)), tuple(keep))


# --------------------------------------------------------------------------
# Surface syntax: "Composite>=0, operations>0, leaves>0"

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(<=|>=|≤|≥|[-+*()<>=,]))")


def _tokens(text: str) -> list[str]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise EquationError(f"unexpected character {text[pos:].strip()[:1]!r} at offset {pos}")
        out.append(m.group(m.lastindex))
        pos = m.end()
    return [{"≤": "<=", "≥": ">="}.get(t, t) for t in out]


class _TermParser:
    def __init__(self, toks: list[str]):
        self.toks, self.i = toks, 0

    def peek(self) -> str | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise EquationError("unexpected end of equation")
        self.i += 1
        return tok

    def term(self) -> CountTerm:
        t = self.factor()
        while self.peek() in ("+", "-"):
            op = self.take()
            t = BinOp(op, t, self.factor())
        return t

    def factor(self) -> CountTerm:
        t = self.atom()
        while self.peek() == "*":
            self.take()
            t = BinOp("*", t, self.atom())
        return t

    def atom(self) -> CountTerm:
        tok = self.take()
        if tok.isdigit():
            return Num(int(tok))
        if tok == "(":
            t = self.term()
            if self.take() != ")":
                raise EquationError("missing ')'")
            return t
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            return Count(tok)
        raise EquationError(f"unexpected token {tok!r}")

    def relation(self) -> CountRelation:
        lhs = self.term()
        rel = self.take()
        if rel not in RELATIONS:
            raise EquationError(f"expected one of {' '.join(RELATIONS)}, found {rel!r}")
        return CountRelation(lhs, rel, self.term())


def parse_relation(text: str) -> CountRelation:
    p = _TermParser(_tokens(text))
    r = p.relation()
    if p.peek() is not None:
        raise EquationError(f"trailing input {p.peek()!r}")
    return r


def parse_system(text: str, variables: Iterable[str] | None = None) -> EquationSystem:
    """Parse comma-separated relations, e.g. ``"factories>0, factories=concProducts"``."""
    toks = _tokens(text)
    p = _TermParser(toks)
    rels = []
    if toks:
        rels.append(p.relation())
        while p.peek() == ",":
            p.take()
            rels.append(p.relation())
        if p.peek() is not None:
            raise EquationError(f"trailing input {p.peek()!r}")
    return EquationSystem(tuple(rels), tuple(variables) if variables is not None else None)


# --------------------------------------------------------------------------
# Solving

_CHUNK = 1 << 18


def _grid_solutions(sys: EquationSystem, bound: int) -> Iterator[np.ndarray]:
    names = list(sys.variables)
    n = len(names)
    side = bound + 1
    # Vectorise over the trailing variables, iterate over the leading ones.
    tail = n
    while tail > 0 and side ** tail > _CHUNK:
        tail -= 1
    head = n - tail
    tail_grid = np.indices((side,) * tail).reshape(tail, -1).astype(np.int64) if tail else np.zeros((0, 1), np.int64)
    width = tail_grid.shape[1]
    for prefix in np.ndindex(*((side,) * head)):
        a = {names[i]: prefix[i] for i in range(head)}
        for j in range(tail):
            a[names[head + j]] = tail_grid[j]
        mask = np.ones(width, dtype=bool)
        for r in sys.relations:
            mask &= np.broadcast_to(_compare(r.rel, eval_term(r.lhs, a), eval_term(r.rhs, a)), (width,))
            if not mask.any():
                break
        if mask.any():
            block = np.empty((n, int(mask.sum())), dtype=np.int64)
            block[:head] = np.array(prefix, dtype=np.int64).reshape(head, 1)
            block[head:] = tail_grid[:, mask]
            yield block.T


def _solution_array(sys: EquationSystem, bound: int) -> np.ndarray:
    if bound < 0:
        raise EquationError("bound must be >= 0")
    blocks = list(_grid_solutions(sys, bound))
    if not blocks:
        return np.zeros((0, len(sys.variables)), dtype=np.int64)
    return np.concatenate(blocks)


def enumerate_solutions(sys: EquationSystem, bound: int = DEFAULT_BOUND) -> list[dict[str, int]]:
    """Every assignment with all values <= ``bound`` satisfying ``sys``, in lexicographic order."""
    names = sys.variables
    return [dict(zip(names, map(int, row))) for row in _solution_array(sys, bound)]


def minimal_solutions(sys: EquationSystem, bound: int = DEFAULT_BOUND) -> list[dict[str, int]]:
    """Component-wise minimal elements of :func:`enumerate_solutions`."""
    sols = _solution_array(sys, bound)
    minimal: list[np.ndarray] = []
    # Lexicographic order puts every dominator before what it dominates, so the
    # first remaining row is minimal; drop everything it dominates and repeat.
    while len(sols):
        row = sols[0]
        minimal.append(row)
        sols = sols[~np.all(sols >= row, axis=1)]
    names = sys.variables
    return [dict(zip(names, map(int, row))) for row in minimal]


def is_feasible(sys: EquationSystem, bound: int = DEFAULT_BOUND) -> bool:
    return next(_grid_solutions(sys, bound), None) is not None


def _constant_upper_bounds(sys: EquationSystem) -> dict[str, int]:
    """Upper bounds ``x < c``, ``x <= c``, ``x = c`` read off single-variable relations."""
    out: dict[str, int] = {}
    for r in sys.relations:
        lhs, rel, rhs = r.lhs, r.rel, r.rhs
        if isinstance(rhs, Count) and isinstance(lhs, Num):
            lhs, rhs, rel = rhs, lhs, {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "="}[rel]
        if isinstance(lhs, Count) and isinstance(rhs, Num):
            cap = {"<": rhs.value - 1, "<=": rhs.value, "=": rhs.value}.get(rel)
            if cap is not None:
                out[lhs.name] = min(out.get(lhs.name, cap), cap)
    return out


def provably_infeasible(sys: EquationSystem, bound: int = DEFAULT_BOUND) -> bool:
    """True only when no natural solution exists at all (not just within ``bound``).

    Sound but incomplete: the relations that only mention variables with a
    constant upper bound form a subsystem confined to a finite box; if
    exhaustive search of that box finds nothing, the whole system is infeasible.
    """
    caps = _constant_upper_bounds(sys)
    if any(c < 0 for c in caps.values()):
        return True
    boxed = sys.restrict([v for v in sys.variables if v in caps])
    if not boxed.relations:
        return False
    return not is_feasible(boxed, max(caps.values(), default=0))


def format_assignment(a: Mapping[str, int]) -> str:
    return ", ".join(f"{k}={v}" for k, v in a.items())


__all__ = [
    "BinOp", "Count", "CountRelation", "CountTerm", "DEFAULT_BOUND", "EquationError", "EquationSystem",
    "Num", "RELATIONS", "UnboundVariable", "enumerate_solutions", "evaluate", "format_assignment",
    "format_term", "is_feasible", "minimal_solutions", "parse_relation", "parse_system",
    "provably_infeasible", "term_variables",
]
