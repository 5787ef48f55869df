"""Decide whether a model satisfies a pattern and enumerate occurrences.

The search matches the root part first and then grows variable parts replica
by replica, each replica being an injective extension of its parent's match
that is disjoint from everything matched so far. Because a smaller expansion
always embeds into a larger one, satisfaction only has to try the minimal
solutions of the count equations.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .counts import (
    DEFAULT_BOUND, EquationSystem, enumerate_solutions, evaluate, minimal_solutions, provably_infeasible,
)
from .expansion import Expansion, expand, replica_key, root_key
from .graph import (
    Const, GraphMorphism, TypedGraph, Var, combinations_disjoint, find_injective_morphisms,
    iter_injective_morphisms, validate_graph,
)
from .pattern import (
    AtomicConstraint, Pattern, SynchronizedPatternSet, VariablePart, joint_equation_system,
)

MODES = ("satisfy", "find_all", "find_maximal")


class MatchError(Exception):
    pass


class InvalidModel(MatchError):
    pass


@dataclass(frozen=True)
class MatchConfig:
    replica_bound: int = DEFAULT_BOUND
    max_occurrences: int | None = None
    mode: str = "find_all"
    enforce_constraints: bool = True

    def __post_init__(self):
        if self.replica_bound < 1:
            raise ValueError("replica_bound must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


@dataclass(frozen=True)
class RoleBinding:
    element: str
    role: str
    part: str
    replica: int


@dataclass(frozen=True)
class Occurrence:
    pattern_name: str
    assignment: Mapping[str, int]
    embedding: GraphMorphism = field(repr=False)
    role_bindings: tuple[RoleBinding, ...]
    expansion: Expansion = field(compare=False, repr=False)

    __hash__ = object.__hash__

    def image(self) -> frozenset:
        return self.embedding.image()

    def replica_match(self, key: str) -> GraphMorphism:
        """The match of one part replica: its colimit injection followed by the embedding."""
        return self.expansion.injections[key].compose(self.embedding)


class OccurrenceList(list):
    """Occurrences plus search flags."""

    truncated: bool = False
    inconclusive: bool = False


@dataclass(frozen=True)
class Verdict:
    satisfied: bool
    witness: Occurrence | None = None
    inconclusive: bool = False


@dataclass(frozen=True)
class ConstraintViolation:
    constraint: str
    kind: str  # "nac" | "consequence"
    part: str
    replica: str
    premise_match: Mapping[str, str]

    def describe(self) -> str:
        what = "forbidden premise found" if self.kind == "nac" else "no consequence holds"
        where = ", ".join(f"{k}->{v}" for k, v in sorted(self.premise_match.items()))
        return f"{self.constraint} [{self.part} {self.replica}]: {what} ({where})"


def _match_key(m: GraphMorphism) -> tuple:
    return (tuple(sorted(m.node_map.items())), tuple(sorted(m.edge_map.items())))


@dataclass
class _Candidate:
    match: GraphMorphism
    new: frozenset


def _seeds(step: GraphMorphism, m: GraphMorphism) -> dict:
    """Seeds for extending ``m`` (defined on ``step.source``) along ``step``."""
    nodes = {step.node_map[n]: h for n, h in m.node_map.items()}
    edges = {step.edge_map[e]: f for e, f in m.edge_map.items()}
    vars_ = {}
    for x, v in m.var_subst.items():
        t = step.var_subst.get(x)
        if isinstance(t, Var):
            vars_[t.name] = v
    return {"node_seed": nodes, "edge_seed": edges, "var_seed": vars_}


def constraint_violations(model: TypedGraph, c: AtomicConstraint, match: GraphMorphism,
                          replica: str = "", label: str | None = None) -> list[ConstraintViolation]:
    """Violations of one constraint for one anchor-part match, searched in the whole model."""
    out = []
    name = label or c.label or f"constraint@{c.anchor}"
    for x in iter_injective_morphisms(c.premise.target, model, **_seeds(c.premise, match)):
        if c.is_nac:
            out.append(ConstraintViolation(name, "nac", c.anchor, replica, dict(x.node_map)))
            continue
        if not any(next(iter_injective_morphisms(cons.target, model, **_seeds(cons, x)), None) is not None
                   for cons in c.consequences):
            out.append(ConstraintViolation(name, "consequence", c.anchor, replica, dict(x.node_map)))
    out.sort(key=lambda v: sorted(v.premise_match.items()))
    return out


class _Engine:
    def __init__(self, model: TypedGraph, pattern: Pattern, bound: int, enforce: bool = True):
        self.model, self.p, self.bound = model, pattern, bound
        self.root = root_key(pattern)
        self.system = pattern.part_system()
        self._expansions: dict[tuple, Expansion] = {}
        self._cands: dict[tuple, list[_Candidate]] = {}
        self._children = {q.name: pattern.children(q.name) for q in pattern.parts}
        self._anchored: dict[str, list[tuple[int, AtomicConstraint]]] = {}
        for i, c in enumerate(pattern.constraints if enforce else ()):
            self._anchored.setdefault(c.anchor, []).append((i, c))
        self.overflow = False

    def expansion(self, a: Mapping[str, int]) -> Expansion:
        key = tuple(sorted(a.items()))
        if key not in self._expansions:
            self._expansions[key] = expand(self.p, a)
        return self._expansions[key]

    def _passes(self, part: VariablePart, m: GraphMorphism) -> bool:
        for i, c in self._anchored.get(part.name, ()):
            if constraint_violations(self.model, c, m):
                return False
        return True

    def root_matches(self) -> list[GraphMorphism]:
        root = self.p.root
        return [m for m in find_injective_morphisms(root.graph, self.model) if self._passes(root, m)]

    def candidates(self, part: VariablePart, parent_match: GraphMorphism) -> list[_Candidate]:
        key = (part.name, _match_key(parent_match))
        if key not in self._cands:
            new_nodes, new_edges = part.new_nodes(), part.new_edges()
            found = []
            for m in find_injective_morphisms(part.graph, self.model, **_seeds(part.embedding, parent_match)):
                if self._passes(part, m):
                    new = frozenset([("n", m.node_map[n]) for n in new_nodes] + [("e", m.edge_map[e]) for e in new_edges])
                    found.append(_Candidate(m, new))
            self._cands[key] = found
            if len(found) > self.bound:
                self.overflow = True
        return self._cands[key]

    def grow(self, a: Mapping[str, int], root_match: GraphMorphism) -> Iterator[dict[str, GraphMorphism]]:
        tasks = [(c, self.root, root_match) for c in self._children[self.p.root.name]]
        yield from self._grow(a, tasks, root_match.image(), {self.root: root_match})

    def _grow(self, a, tasks, used, chosen) -> Iterator[dict[str, GraphMorphism]]:
        if not tasks:
            yield dict(chosen)
            return
        (part, pkey, pmatch), rest = tasks[0], tasks[1:]
        k = a[part.name]
        if k == 0:
            yield from self._grow(a, rest, used, chosen)
            return
        cands = [c for c in self.candidates(part, pmatch) if c.new.isdisjoint(used)]
        if len(cands) < k:
            return
        for combo in combinations_disjoint(cands, k, key=lambda c: c.new):
            nxt = dict(chosen)
            more = []
            added: set = set()
            for i, c in enumerate(combo):
                key = replica_key(pkey, part.name, i, self.root)
                nxt[key] = c.match
                added |= c.new
                more.extend((child, key, c.match) for child in self._children[part.name])
            yield from self._grow(a, more + rest, used | added, nxt)

    def occurrence(self, a: Mapping[str, int], chosen: Mapping[str, GraphMorphism]) -> Occurrence:
        exp = self.expansion(a)
        return occurrence_from_replicas(self.p, exp, self.model, chosen)

    def explore_capacity(self, root_matches: Sequence[GraphMorphism]) -> None:
        """Visit every candidate extension reachable from the root matches (sets ``overflow``)."""
        def visit(part: VariablePart, match: GraphMorphism, depth: int):
            for child in self._children[part.name]:
                for c in self.candidates(child, match):
                    if self.overflow:
                        return
                    visit(child, c.match, depth + 1)
        for rm in root_matches:
            visit(self.p.root, rm, 0)
            if self.overflow:
                return


def occurrence_from_replicas(p: Pattern, exp: Expansion, model: TypedGraph,
                             chosen: Mapping[str, GraphMorphism]) -> Occurrence:
    nmap, emap, vsub = {}, {}, {}
    for key, m in chosen.items():
        inj = exp.injections[key]
        for n, h in m.node_map.items():
            nmap[inj.node_map[n]] = h
        for e, f in m.edge_map.items():
            emap[inj.edge_map[e]] = f
        for x, v in m.var_subst.items():
            t = inj.var_subst[x]
            if isinstance(t, Var):
                vsub[t.name] = v
    embedding = GraphMorphism(exp.graph, model, nmap, emap, vsub)
    return occurrence_from_embedding(p, exp, embedding)


def occurrence_from_embedding(p: Pattern, exp: Expansion, embedding: GraphMorphism) -> Occurrence:
    bindings = []
    for n, role in exp.role_map.items():
        prov = exp.provenance[n]
        bindings.append(RoleBinding(embedding.node_map[n], role, prov.part, prov.replica))
    return Occurrence(p.name, dict(exp.assignment), embedding, tuple(bindings), exp)


def _require_valid(model: TypedGraph, p: Pattern) -> None:
    if model.metamodel != p.metamodel:
        raise InvalidModel(f"pattern {p.name} expects a {p.metamodel.name} model, got {model.metamodel.name}")
    problems = validate_graph(model)
    if problems:
        raise InvalidModel(f"invalid model: {problems[0]}")


def decide(model: TypedGraph, p: Pattern, cfg: MatchConfig | None = None) -> Verdict:
    """Satisfaction with a witness and an ``inconclusive`` flag for bound overruns."""
    cfg = cfg or MatchConfig(mode="satisfy")
    _require_valid(model, p)
    eng = _Engine(model, p, cfg.replica_bound, cfg.enforce_constraints)
    roots = eng.root_matches()
    minimal = minimal_solutions(eng.system, cfg.replica_bound)
    for rm in roots:
        for a in minimal:
            for chosen in eng.grow(a, rm):
                return Verdict(True, eng.occurrence(a, chosen))
    if not roots or provably_infeasible(eng.system, cfg.replica_bound):
        return Verdict(False)
    eng.explore_capacity(roots)
    return Verdict(False, None, eng.overflow)


def satisfies(model: TypedGraph, p: Pattern, cfg: MatchConfig | None = None) -> tuple[bool, Occurrence | None]:
    """``model |= p``: some expansion within the bound embeds injectively and meets every constraint."""
    v = decide(model, p, cfg)
    return v.satisfied, v.witness


def find_occurrences(model: TypedGraph, p: Pattern, cfg: MatchConfig | None = None) -> OccurrenceList:
    """All occurrences (deduplicated by image) or, in ``find_maximal`` mode, the non-extendable ones."""
    cfg = cfg or MatchConfig()
    _require_valid(model, p)
    out = OccurrenceList()
    if cfg.mode == "satisfy":
        v = decide(model, p, cfg)
        out.extend([v.witness] if v.witness else [])
        out.inconclusive = v.inconclusive
        return out
    eng = _Engine(model, p, cfg.replica_bound, cfg.enforce_constraints)
    solutions = enumerate_solutions(eng.system, cfg.replica_bound)
    seen: set = set()
    found: list[Occurrence] = []
    limit = cfg.max_occurrences if cfg.mode == "find_all" else None
    for rm in eng.root_matches():
        for a in solutions:
            for chosen in eng.grow(a, rm):
                occ = eng.occurrence(a, chosen)
                img = occ.image()
                if img in seen:
                    continue
                seen.add(img)
                found.append(occ)
                if limit is not None and len(found) > limit:
                    break
            if limit is not None and len(found) > limit:
                break
        if limit is not None and len(found) > limit:
            break
    if cfg.mode == "find_maximal":
        images = [o.image() for o in found]
        found = [o for o, img in zip(found, images) if not any(img < other for other in images)]
    if cfg.max_occurrences is not None and len(found) > cfg.max_occurrences:
        out.truncated = True
        found = found[:cfg.max_occurrences]
    out.extend(found)
    out.inconclusive = eng.overflow
    return out


def check_constraints(model: TypedGraph, occ: Occurrence, p: Pattern) -> list[ConstraintViolation]:
    """Check every constraint once per replica of its anchor part."""
    out = []
    for i, c in enumerate(p.constraints):
        label = c.label or f"constraint {i + 1}"
        for key in occ.expansion.keys_of(c.anchor):
            out.extend(constraint_violations(model, c, occ.replica_match(key), key, label))
    return out


@dataclass(frozen=True)
class RootCheck:
    relation: str
    count: int
    passed: bool


def check_root_cardinality(model: TypedGraph, p: Pattern, cfg: MatchConfig | None = None) -> list[RootCheck]:
    """Evaluate the root-count relations with the root variable bound to the number of maximal occurrences."""
    cfg = MatchConfig(cfg.replica_bound if cfg else DEFAULT_BOUND, None, "find_maximal",
                      cfg.enforce_constraints if cfg else True)
    count = len(find_occurrences(model, p, cfg))
    a = {p.root_variable: count}
    return [RootCheck(str(r), count, evaluate(r, a)) for r in p.root_relations()]


# --------------------------------------------------------------------------
# Synchronization


@dataclass(frozen=True)
class SyncReport:
    accepted: tuple[tuple[Occurrence, ...], ...]
    rejected: tuple[tuple[tuple[Occurrence, ...], str], ...]
    joint_system: EquationSystem


def _shared_slots(pa: VariablePart, na: str, pb: VariablePart, nb: str) -> list[tuple[str, str, str]]:
    """(variable, attribute in a, attribute in b) for variables both linked nodes carry."""
    a_attrs, b_attrs = pa.graph.nodes[na].attrs, pb.graph.nodes[nb].attrs
    out = []
    for aa, va in a_attrs.items():
        if not isinstance(va, Var) or va.name.startswith("_"):
            continue
        for ab, vb in b_attrs.items():
            if isinstance(vb, Var) and vb.name == va.name:
                out.append((va.name, aa, ab))
    return out


def _values_per_replica(occ: Occurrence, part: str, node: str, attrs: list[str], model: TypedGraph) -> list[tuple]:
    rows = []
    for key in occ.expansion.keys_of(part):
        host = occ.replica_match(key).node_map[node]
        rows.append(tuple(model.nodes[host].attrs[a] for a in attrs))
    return rows


def _value_text(v) -> str:
    return str(v.value) if isinstance(v, Const) else str(v)


def check_sync(model_primary: TypedGraph, model_secondaries: Sequence[TypedGraph], s: SynchronizedPatternSet,
               cfg: MatchConfig | None = None) -> SyncReport:
    """Pair primary and secondary occurrences whose linked elements agree and whose joint counts solve."""
    cfg = MatchConfig(cfg.replica_bound if cfg else DEFAULT_BOUND, None, "find_maximal")
    if len(model_secondaries) != len(s.secondaries):
        raise MatchError(f"{len(s.secondaries)} secondary model(s) required, got {len(model_secondaries)}")
    joint = joint_equation_system(s)
    primary_occs = find_occurrences(model_primary, s.primary, cfg)
    if not s.secondaries:
        return SyncReport(tuple((o,) for o in primary_occs), (), joint)
    secondary_occs = [find_occurrences(m, sec, cfg) for m, sec in zip(model_secondaries, s.secondaries)]
    models = [model_primary, *model_secondaries]
    accepted, rejected = [], []
    for combo in itertools.product(primary_occs, *secondary_occs):
        reason = _sync_reason(combo, models, s, joint)
        if reason is None:
            accepted.append(tuple(combo))
        else:
            rejected.append((tuple(combo), reason))
    return SyncReport(tuple(accepted), tuple(rejected), joint)


def _sync_reason(combo, models, s: SynchronizedPatternSet, joint: EquationSystem) -> str | None:
    primary = combo[0]
    groups: dict[tuple, list] = {}
    for link in s.links:
        groups.setdefault((link.primary_part, link.secondary_index, link.secondary_part), []).append(link)
    for (pp, si, sp), links in groups.items():
        sec_pat, sec_occ = s.secondaries[si], combo[si + 1]
        n_p = len(primary.expansion.keys_of(pp))
        n_s = len(sec_occ.expansion.keys_of(sp))
        if n_p != n_s:
            return f"count-mismatch: {pp} has {n_p} replica(s), {sp} has {n_s}"
        left_cols, right_cols, names = [], [], []
        for link in links:
            slots = _shared_slots(s.primary.part(pp), link.primary_node, sec_pat.part(sp), link.secondary_node)
            if not slots:
                continue
            names.extend(f"{link.primary_node}.{a}~{link.secondary_node}.{b}" for _, a, b in slots)
            left_cols.append(_values_per_replica(primary, pp, link.primary_node, [a for _, a, _ in slots], models[0]))
            right_cols.append(_values_per_replica(sec_occ, sp, link.secondary_node, [b for _, _, b in slots],
                                                  models[si + 1]))
        if not names:
            continue
        left = Counter(tuple(itertools.chain.from_iterable(row)) for row in zip(*left_cols))
        right = Counter(tuple(itertools.chain.from_iterable(row)) for row in zip(*right_cols))
        if left != right:
            only_l = sorted(left - right, key=str)
            only_r = sorted(right - left, key=str)
            show = lambda rows: "; ".join("(" + ", ".join(_value_text(v) for v in r) + ")" for r in rows)
            return (f"attribute-mismatch: {', '.join(names)}: primary has {show(only_l)}, "
                    f"{sec_pat.name} has {show(only_r)}")
    a: dict[str, int] = {}
    for pat, occ in zip([s.primary, *s.secondaries], combo):
        a.update(occ.assignment)
        a[pat.root_variable] = 1
    failed = [str(r) for r in joint.relations if not evaluate(r, a)]
    if failed:
        return f"equation-mismatch: joint assignment violates {', '.join(failed)}"
    return None


# --------------------------------------------------------------------------
# Annotation (the correspondence part of the triple graph)


class AnnotationError(Exception):
    pass


@dataclass(frozen=True)
class Annotation:
    pattern: str
    assignment: Mapping[str, int]
    bindings: tuple[RoleBinding, ...]


def annotate(model: TypedGraph, occs: Sequence[Occurrence]) -> list[Annotation]:
    """One correspondence entry list per occurrence; an element may appear in several."""
    out = []
    for occ in occs:
        for b in occ.role_bindings:
            if b.element not in model.nodes and b.element not in model.edges:
                raise AnnotationError(f"occurrence of {occ.pattern_name} binds missing element {b.element!r}")
        out.append(Annotation(occ.pattern_name, dict(occ.assignment), tuple(occ.role_bindings)))
    return out


__all__ = [
    "Annotation", "AnnotationError", "ConstraintViolation", "InvalidModel", "MatchConfig", "MatchError",
    "Occurrence", "OccurrenceList", "RoleBinding", "RootCheck", "SyncReport", "Verdict", "annotate",
    "check_constraints", "check_root_cardinality", "check_sync", "constraint_violations", "decide",
    "find_occurrences", "occurrence_from_embedding", "occurrence_from_replicas", "satisfies",
]
