"""Patterns: a root graph, a tree of nested variable parts, count equations,
invariants, role labels, and synchronization with secondary patterns."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from .counts import (
    DEFAULT_BOUND, Count, CountRelation, EquationSystem, is_feasible, provably_infeasible,
)
from .diagnostics import SourceSpan
from .graph import GraphMorphism, Metamodel, TypedGraph, Violation, validate_graph


@dataclass(frozen=True)
class VariablePart:
    """One variability region. ``embedding`` maps the parent's graph into ``graph``."""

    name: str
    graph: TypedGraph
    parent: str | None = None
    embedding: GraphMorphism | None = None
    role_labels: Mapping[str, str] = field(default_factory=dict)
    span: SourceSpan | None = None

    __hash__ = object.__hash__

    def new_nodes(self) -> list[str]:
        image = set(self.embedding.node_map.values()) if self.embedding else set()
        return [n for n in self.graph.nodes if n not in image]

    def new_edges(self) -> list[str]:
        image = set(self.embedding.edge_map.values()) if self.embedding else set()
        return [e for e in self.graph.edges if e not in image]


@dataclass(frozen=True)
class AtomicConstraint:
    """``premise: V_anchor -> X`` with consequences ``X -> C_j``; none means a NAC."""

    anchor: str
    premise: GraphMorphism
    consequences: tuple[GraphMorphism, ...] = ()
    label: str = ""
    span: SourceSpan | None = None

    __hash__ = object.__hash__

    @property
    def is_nac(self) -> bool:
        return not self.consequences


@dataclass(frozen=True)
class Pattern:
    name: str
    metamodel: Metamodel
    parts: tuple[VariablePart, ...]
    equations: EquationSystem = field(default_factory=EquationSystem)
    constraints: tuple[AtomicConstraint, ...] = ()
    roles: tuple[str, ...] = ()
    intent: str = ""
    title: str = ""
    span: SourceSpan | None = None
    equations_span: SourceSpan | None = None

    __hash__ = object.__hash__

    @property
    def root(self) -> VariablePart:
        return self.parts[0]

    @property
    def root_variable(self) -> str:
        return self.root.name

    def part(self, name: str) -> VariablePart:
        for p in self.parts:
            if p.name == name:
                return p
        raise KeyError(name)

    def has_part(self, name: str) -> bool:
        return any(p.name == name for p in self.parts)

    def children(self, name: str) -> list[VariablePart]:
        return [p for p in self.parts if p.parent == name]

    @property
    def variable_parts(self) -> list[VariablePart]:
        return list(self.parts[1:])

    def part_system(self) -> EquationSystem:
        """Equations on variable-part counts alone, over every non-root part.

        Parts the equations never mention still appear as variables, so they
        range freely over 0..bound.
        """
        root = self.root_variable
        rels = tuple(r for r in self.equations.relations if root not in r.variables())
        order: list[str] = []
        for r in rels:
            order.extend(r.variables())
        order.extend(p.name for p in self.variable_parts)
        return EquationSystem(rels, tuple(dict.fromkeys(order)))

    def root_relations(self) -> tuple[CountRelation, ...]:
        root = self.root_variable
        return tuple(r for r in self.equations.relations if root in r.variables())

    def role_of(self, part: str, node: str) -> str | None:
        """Role label of ``node`` as seen from ``part`` (labels are inherited down the tree)."""
        p = self.part(part)
        while True:
            if node in p.role_labels:
                return p.role_labels[node]
            if p.embedding is None or p.parent is None:
                return None
            inverse = {v: k for k, v in p.embedding.node_map.items()}
            if node not in inverse:
                return None
            node, p = inverse[node], self.part(p.parent)

    def display_name(self) -> str:
        return self.title or self.name


def _v(code: str, subject: str, message: str, span=None, severity: str = "error") -> Violation:
    return Violation(code, subject, message, severity, span)


def validate_pattern(p: Pattern, bound: int = DEFAULT_BOUND) -> list[Violation]:
    """Every well-formedness violation of ``p``; an empty list means valid.

    Warnings (severity ``"warning"``) do not make a pattern invalid.
    """
    out: list[Violation] = []
    if not p.parts:
        return [_v("no-root", p.name, "pattern has no root part", p.span)]
    names = [part.name for part in p.parts]
    for name, n in Counter(names).items():
        if n > 1:
            spans = [q.span for q in p.parts if q.name == name]
            out.append(_v("part-name-not-injective", name,
                          f"{n} parts are named {name!r}; part names must be distinct", spans[-1]))
    roots = [q for q in p.parts if q.parent is None]
    if len(roots) != 1 or roots[0] is not p.root:
        out.append(_v("root", p.name, "exactly one root part, declared first, is required", p.span))

    by_name = {q.name: q for q in p.parts}
    for q in p.parts:
        out.extend(_v(x.code, f"{q.name}/{x.subject}", x.message, q.span) for x in validate_graph(q.graph, p.metamodel))
        if q.graph.metamodel != p.metamodel:
            out.append(_v("metamodel", q.name, "part graph uses a different metamodel", q.span))
        if not q.graph.nodes and not q.graph.edges:
            out.append(_v("empty-part", q.name, "variable parts must be non-empty graphs", q.span))
        if q.parent is None:
            continue
        parent = by_name.get(q.parent)
        if parent is None:
            out.append(_v("unknown-parent", q.name, f"parent part {q.parent!r} is not declared", q.span))
            continue
        seen, cur = {q.name}, parent
        while cur is not None and cur.parent is not None:
            if cur.name in seen:
                out.append(_v("cycle", q.name, "part nesting is cyclic", q.span))
                break
            seen.add(cur.name)
            cur = by_name.get(cur.parent)
        emb = q.embedding
        if emb is None:
            out.append(_v("embedding", q.name, "non-root part lacks an embedding", q.span))
            continue
        if emb.source is not parent.graph:
            out.append(_v("embedding", q.name, f"embedding does not start at the graph of {parent.name!r}", q.span))
        if emb.target is not q.graph:
            out.append(_v("embedding", q.name, "embedding does not end at the part graph", q.span))
        if not emb.is_injective():
            out.append(_v("embedding", q.name, "embedding is not injective", q.span))
        for problem in emb.problems():
            out.append(_v("embedding", q.name, problem, q.span))
        if not q.new_nodes() and not q.new_edges():
            out.append(_v("empty-part", q.name, "part adds nothing to its parent", q.span))

    roles = set(p.roles)
    for name, n in Counter(p.roles).items():
        if n > 1:
            out.append(_v("duplicate-role", name, "role declared twice", p.span))
    for q in p.parts:
        new = set(q.new_nodes())
        for node, role in q.role_labels.items():
            if node not in q.graph.nodes:
                out.append(_v("role-label", f"{q.name}/{node}", "labelled node does not exist", q.span))
            elif node not in new:
                out.append(_v("role-label", f"{q.name}/{node}", "roles may only label nodes the part introduces", q.span))
            if role not in roles:
                out.append(_v("undeclared-role", f"{q.name}/{node}", f"role {role!r} is not declared in roles", q.span))

    declared = set(names)
    root_var = p.root.name
    for r in p.equations.relations:
        unknown = [v for v in r.variables() if v not in declared]
        for v in unknown:
            out.append(_v("unknown-variable", v, f"equation '{r}' mentions undeclared variable {v!r}", p.equations_span))
        vs = set(r.variables())
        if root_var in vs and len(vs) > 1:
            out.append(_v("mixed-root-relation", str(r),
                          "a relation may constrain the root count or part counts, not both", p.equations_span))
    if not any(x.code == "unknown-variable" for x in out):
        system = p.part_system()
        if provably_infeasible(system, bound):
            out.append(_v("infeasible", p.name, "the equations have no solution in the natural numbers",
                          p.equations_span))
        elif not is_feasible(system, bound):
            out.append(_v("infeasible-within-bound", p.name, f"no solution with counts <= {bound}",
                          p.equations_span, "warning"))

    for i, c in enumerate(p.constraints):
        subject = c.label or f"constraint {i + 1}"
        anchor = by_name.get(c.anchor)
        if anchor is None:
            out.append(_v("unknown-anchor", subject, f"constraint anchored at undeclared part {c.anchor!r}", c.span))
            continue
        if c.premise.source is not anchor.graph:
            out.append(_v("constraint", subject, "premise does not start at the anchor part graph", c.span))
        if not c.premise.is_injective():
            out.append(_v("constraint", subject, "premise morphism is not injective", c.span))
        for problem in c.premise.problems():
            out.append(_v("constraint", subject, f"premise: {problem}", c.span))
        for x in validate_graph(c.premise.target, p.metamodel):
            out.append(_v(x.code, subject, x.message, c.span))
        for j, cons in enumerate(c.consequences):
            if cons.source is not c.premise.target:
                out.append(_v("constraint", subject, f"consequence {j + 1} does not start at the premise", c.span))
            if not cons.is_injective():
                out.append(_v("constraint", subject, f"consequence {j + 1} is not injective", c.span))
            for problem in cons.problems():
                out.append(_v("constraint", subject, f"consequence {j + 1}: {problem}", c.span))
            for x in validate_graph(cons.target, p.metamodel):
                out.append(_v(x.code, subject, x.message, c.span))
    return out


def errors(report: list[Violation]) -> list[Violation]:
    return [v for v in report if v.severity == "error"]


def list_roles(p: Pattern) -> list[str]:
    """Declared role names in declaration order."""
    return list(p.roles)


# --------------------------------------------------------------------------
# Synchronization


@dataclass(frozen=True)
class SyncLink:
    primary_part: str
    primary_node: str
    secondary_index: int
    secondary_part: str
    secondary_node: str
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SynchronizedPatternSet:
    primary: Pattern
    secondaries: tuple[Pattern, ...] = ()
    links: tuple[SyncLink, ...] = ()

    __hash__ = object.__hash__


class SyncError(Exception):
    pass


def validate_sync(s: SynchronizedPatternSet) -> list[Violation]:
    out: list[Violation] = []
    all_parts = [q.name for q in s.primary.parts] + [q.name for sec in s.secondaries for q in sec.parts]
    for name, n in Counter(all_parts).items():
        if n > 1:
            out.append(_v("sync-part-clash", name, "synchronized patterns must use distinct part names"))
    for link in s.links:
        subject = f"{link.primary_part}.{link.primary_node} ~ {link.secondary_part}.{link.secondary_node}"
        if not 0 <= link.secondary_index < len(s.secondaries):
            out.append(_v("sync-link", subject, "secondary pattern index out of range", link.span))
            continue
        sec = s.secondaries[link.secondary_index]
        ends = []
        for pat, part, node in ((s.primary, link.primary_part, link.primary_node),
                                (sec, link.secondary_part, link.secondary_node)):
            if not pat.has_part(part):
                out.append(_v("sync-link", subject, f"{pat.name} has no part {part!r}", link.span))
                continue
            if node not in pat.part(part).graph.nodes:
                out.append(_v("sync-link", subject, f"part {part!r} of {pat.name} has no node {node!r}", link.span))
                continue
            ends.append(pat.role_of(part, node))
        if len(ends) == 2 and (ends[0] is None or ends[0] != ends[1]):
            out.append(_v("sync-role", subject, f"linked nodes carry roles {ends[0]!r} and {ends[1]!r}", link.span))
    return out


def joint_equation_system(s: SynchronizedPatternSet) -> EquationSystem:
    """All member equations plus one count equality per synchronized part pair."""
    bad = errors(validate_sync(s))
    if bad:
        raise SyncError(str(bad[0]))
    rels = list(s.primary.equations.relations)
    for sec in s.secondaries:
        rels.extend(sec.equations.relations)
    pairs = dict.fromkeys((l.primary_part, l.secondary_part) for l in s.links)
    for a, b in pairs:
        eq = CountRelation(Count(a), "=", Count(b))
        if eq not in rels:
            rels.append(eq)
    return EquationSystem(tuple(rels))


__all__ = [
    "AtomicConstraint", "Pattern", "SyncError", "SyncLink", "SynchronizedPatternSet", "VariablePart",
    "errors", "joint_equation_system", "list_roles", "validate_pattern", "validate_sync",
]
