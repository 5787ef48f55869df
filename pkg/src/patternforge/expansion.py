"""Instantiate a pattern for a replica assignment: the colimit of the
replicated part tree, with per-element provenance and induced roles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

from .counts import DEFAULT_BOUND, enumerate_solutions, evaluate
from .graph import DiagramNode, GraphMorphism, TypedGraph, colimit_tree
from .pattern import Pattern


class ExpansionError(Exception):
    pass


@dataclass(frozen=True)
class Provenance:
    part: str
    replica: int
    local: str
    key: str  # full replica path, e.g. "outer#1/inner#0"


@dataclass(frozen=True)
class Replica:
    part: str
    index: int
    parent: str | None


@dataclass(frozen=True)
class Expansion:
    graph: TypedGraph
    provenance: Mapping[str, Provenance]
    role_map: Mapping[str, str]
    assignment: Mapping[str, int]
    injections: Mapping[str, GraphMorphism]
    replicas: Mapping[str, Replica]

    __hash__ = object.__hash__

    def keys_of(self, part: str) -> list[str]:
        return [k for k, r in self.replicas.items() if r.part == part]


def root_key(p: Pattern) -> str:
    return f"{p.root.name}#0"


def replica_key(parent_key: str, part: str, index: int, root: str) -> str:
    if parent_key == root:
        return f"{part}#{index}"
    return f"{parent_key}/{part}#{index}"


def check_assignment(p: Pattern, a: Mapping[str, int]) -> dict[str, int]:
    """Normalise ``a`` to the part-count variables, raising on gaps or violations."""
    system = p.part_system()
    known = set(system.variables) | {p.root_variable}
    unknown = sorted(set(a) - known)
    if unknown:
        raise ExpansionError(f"assignment names unknown parts: {', '.join(unknown)}")
    missing = [v for v in system.variables if v not in a]
    if missing:
        raise ExpansionError(f"assignment is not total, missing: {', '.join(missing)}")
    out = {v: int(a[v]) for v in system.variables}
    negative = [v for v, n in out.items() if n < 0]
    if negative:
        raise ExpansionError(f"replica counts must be natural numbers: {', '.join(negative)}")
    failed = [str(r) for r in system.relations if not evaluate(r, out)]
    if failed:
        raise ExpansionError(f"assignment violates {', '.join(failed)}")
    return out


def expand(p: Pattern, a: Mapping[str, int]) -> Expansion:
    """Build the expansion of ``p`` with ``a[part]`` replicas of each part per parent replica."""
    counts = check_assignment(p, a)
    root = root_key(p)
    replicas = {root: Replica(p.root.name, 0, None)}

    def build(part_name: str, key: str) -> DiagramNode:
        part = p.part(part_name)
        node = DiagramNode(key, part.graph, part.embedding)
        for child in p.children(part_name):
            for i in range(counts[child.name]):
                ck = replica_key(key, child.name, i, root)
                replicas[ck] = Replica(child.name, i, key)
                node.children.append(build(child.name, ck))
        return node

    graph, injections = colimit_tree(build(p.root.name, root))

    provenance: dict = {}
    roles: dict = {}
    for key, rep in replicas.items():
        part, inj = p.part(rep.part), injections[key]
        for n in part.new_nodes():
            provenance[inj.node_map[n]] = Provenance(rep.part, rep.index, n, key)
        for e in part.new_edges():
            provenance[inj.edge_map[e]] = Provenance(rep.part, rep.index, e, key)
        for n, role in part.role_labels.items():
            roles[inj.node_map[n]] = role
    role_map = {n: roles[n] for n in graph.nodes if n in roles}
    return Expansion(graph, provenance, role_map, counts, injections, replicas)


def enumerate_expansions(p: Pattern, bound: int = DEFAULT_BOUND) -> Iterator[Expansion]:
    """One expansion per solution of the part-count equations within ``bound``."""
    for a in enumerate_solutions(p.part_system(), bound):
        yield expand(p, a)


__all__ = [
    "Expansion", "ExpansionError", "Provenance", "Replica", "check_assignment", "enumerate_expansions",
    "expand", "replica_key", "root_key",
]
