"""Typed attributed graphs, morphisms, injective matching and tree colimits.

Graphs are symbolic: an attribute slot holds either a constant or a sorted
variable, and a graph may carry relational atoms over its variables. All
objects here are treated as immutable once built.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Mapping, Union


class GraphError(Exception):
    """Base class for graph-layer failures."""


class MetamodelMismatch(GraphError):
    pass


class PushoutError(GraphError):
    pass


class DiagramError(GraphError):
    pass


# --------------------------------------------------------------------------
# Metamodel


@dataclass(frozen=True)
class Sort:
    name: str
    kind: str  # "string" | "boolean" | "integer" | "enum"
    values: tuple = ()
    minimum: int | None = None

    def accepts(self, value: object) -> bool:
        if self.kind == "string":
            return isinstance(value, str)
        if self.kind == "boolean":
            return isinstance(value, bool)
        if self.kind == "integer":
            if isinstance(value, bool) or not isinstance(value, int):
                return False
            return self.minimum is None or value >= self.minimum
        if self.kind == "enum":
            return value in self.values
        return False


STRING = Sort("string", "string")
BOOLEAN = Sort("boolean", "boolean")
INTEGER = Sort("integer", "integer")
NATURAL = Sort("natural", "integer", minimum=0)


@dataclass(frozen=True)
class NodeType:
    name: str
    attributes: tuple[tuple[str, Sort], ...] = ()

    @cached_property
    def attrs(self) -> dict[str, Sort]:
        return dict(self.attributes)


@dataclass(frozen=True)
class EdgeType:
    name: str
    source: str
    target: str


@dataclass(frozen=True)
class Metamodel:
    name: str
    node_types: tuple[NodeType, ...]
    edge_types: tuple[EdgeType, ...]

    @cached_property
    def nodes(self) -> dict[str, NodeType]:
        return {t.name: t for t in self.node_types}

    @cached_property
    def edges(self) -> dict[str, EdgeType]:
        return {t.name: t for t in self.edge_types}

    @cached_property
    def sorts(self) -> dict[str, Sort]:
        out = {s.name: s for s in (STRING, BOOLEAN, INTEGER, NATURAL)}
        for t in self.node_types:
            for _, sort in t.attributes:
                out[sort.name] = sort
        return out

    def problems(self) -> list[str]:
        out = []
        names = [t.name for t in self.node_types]
        for name, n in Counter(names).items():
            if n > 1:
                out.append(f"duplicate node type {name!r}")
        enames = [t.name for t in self.edge_types]
        for name, n in Counter(enames).items():
            if n > 1:
                out.append(f"duplicate edge type {name!r}")
        for et in self.edge_types:
            for end in (et.source, et.target):
                if end not in self.nodes:
                    out.append(f"edge type {et.name!r} references undeclared node type {end!r}")
        return out


# --------------------------------------------------------------------------
# Attribute values and atoms


@dataclass(frozen=True)
class Const:
    sort: str
    value: Union[str, bool, int]

    def __str__(self) -> str:
        if isinstance(self.value, bool):
            return "true" if self.value else "false"
        return repr(self.value) if isinstance(self.value, str) else str(self.value)


@dataclass(frozen=True)
class Var:
    name: str
    sort: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("variable name must be nonempty")

    def __str__(self) -> str:
        return self.name


Value = Union[Const, Var]

RELOPS = ("=", "!=", "<", "<=", ">", ">=")
_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}


def _vkey(v: Value) -> tuple:
    if isinstance(v, Var):
        return (1, v.sort, v.name)
    return (0, v.sort, type(v.value).__name__, str(v.value))


@dataclass(frozen=True)
class Atom:
    left: Value
    op: str
    right: Value

    def __post_init__(self):
        if self.op not in RELOPS:
            raise ValueError(f"unknown relation {self.op!r}")

    def variables(self) -> set[str]:
        return {v.name for v in (self.left, self.right) if isinstance(v, Var)}

    def is_ground(self) -> bool:
        return isinstance(self.left, Const) and isinstance(self.right, Const)

    def holds(self) -> bool:
        """Truth value of a ground atom."""
        a, b = self.left.value, self.right.value
        if self.op == "=":
            return self.left == self.right
        if self.op == "!=":
            return self.left != self.right
        try:
            return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[self.op]
        except TypeError:
            return False

    def normalized(self) -> Atom:
        op, l, r = self.op, self.left, self.right
        if op in (">", ">="):
            op, l, r = _FLIP[op], r, l
        if op in ("=", "!=") and _vkey(r) < _vkey(l):
            l, r = r, l
        return Atom(l, op, r)

    def is_trivial(self) -> bool:
        return self.left == self.right and self.op in ("=", "<=", ">=")

    def substitute(self, f: Callable[[Value], Value]) -> Atom:
        return Atom(f(self.left), self.op, f(self.right))

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


# --------------------------------------------------------------------------
# Graphs


@dataclass(frozen=True)
class Node:
    id: str
    type: str
    attrs: Mapping[str, Value] = field(default_factory=dict)


@dataclass(frozen=True)
class Edge:
    id: str
    type: str
    source: str
    target: str
    label: str | None = field(default=None, compare=False)


@dataclass(frozen=True, eq=True)
class TypedGraph:
    metamodel: Metamodel
    nodes: Mapping[str, Node] = field(default_factory=dict)
    edges: Mapping[str, Edge] = field(default_factory=dict)
    atoms: tuple[Atom, ...] = ()

    __hash__ = object.__hash__

    @classmethod
    def build(cls, metamodel: Metamodel, nodes: Iterable[Node] = (), edges: Iterable[Edge] = (),
              atoms: Iterable[Atom] = ()) -> TypedGraph:
        return cls(metamodel, {n.id: n for n in nodes}, {e.id: e for e in edges}, tuple(atoms))

    @classmethod
    def empty(cls, metamodel: Metamodel) -> TypedGraph:
        return cls(metamodel, {}, {}, ())

    def variables(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for n in self.nodes.values():
            for v in n.attrs.values():
                if isinstance(v, Var):
                    out.setdefault(v.name, v.sort)
        return out

    def size(self) -> int:
        return len(self.nodes) + len(self.edges)

    @cached_property
    def _incidence(self) -> dict[str, list[Edge]]:
        inc: dict[str, list[Edge]] = defaultdict(list)
        for e in self.edges.values():
            inc[e.source].append(e)
            if e.target != e.source:
                inc[e.target].append(e)
        return inc

    @cached_property
    def _between(self) -> dict[tuple[str, str], list[Edge]]:
        idx: dict[tuple[str, str], list[Edge]] = defaultdict(list)
        for e in sorted(self.edges.values(), key=lambda e: e.id):
            idx[(e.source, e.target)].append(e)
        return idx

    def incident(self, node_id: str) -> list[Edge]:
        return self._incidence.get(node_id, [])

    def between(self, source: str, target: str) -> list[Edge]:
        return self._between.get((source, target), [])

    def degree(self, node_id: str) -> int:
        return len(self.incident(node_id))

    def substitute(self, f: Callable[[Value], Value]) -> TypedGraph:
        nodes = {i: Node(n.id, n.type, {a: f(v) for a, v in n.attrs.items()}) for i, n in self.nodes.items()}
        return TypedGraph(self.metamodel, nodes, dict(self.edges), _dedup(a.substitute(f) for a in self.atoms))

    def entails(self, atom: Atom) -> bool:
        """Whether ``atom`` holds in every model of this graph's atoms (syntactic check)."""
        if atom.is_ground():
            return atom.holds()
        if atom.is_trivial():
            return True
        norm = atom.normalized()
        return any(a.normalized() == norm for a in self.atoms)


def _dedup(atoms: Iterable[Atom]) -> tuple[Atom, ...]:
    seen: dict[Atom, None] = {}
    for a in atoms:
        seen.setdefault(a, None)
    return tuple(seen)


# --------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    message: str
    severity: str = "error"
    span: object = None

    def __str__(self) -> str:
        return f"{self.severity}: {self.code}: {self.subject}: {self.message}"


def validate_graph(g: TypedGraph, mm: Metamodel | None = None) -> list[Violation]:
    """Return every metamodel violation of ``g``; empty iff the graph is well-formed."""
    mm = mm or g.metamodel
    out: list[Violation] = []
    var_sorts: dict[str, str] = {}
    for key, n in g.nodes.items():
        if key != n.id:
            out.append(Violation("node-id", key, f"keyed as {key!r} but has id {n.id!r}"))
        nt = mm.nodes.get(n.type)
        if nt is None:
            out.append(Violation("unknown-node-type", n.id, f"node {n.id!r} has undeclared type {n.type!r}"))
            continue
        for a in nt.attrs:
            if a not in n.attrs:
                out.append(Violation("missing-attribute", n.id, f"attribute {a!r} of {n.type} is not set"))
        for a, v in n.attrs.items():
            sort = nt.attrs.get(a)
            if sort is None:
                out.append(Violation("unknown-attribute", n.id, f"{n.type} declares no attribute {a!r}"))
                continue
            if isinstance(v, Const):
                if v.sort != sort.name or not sort.accepts(v.value):
                    out.append(Violation("attribute-sort", n.id,
                                         f"attribute {a!r} = {v} is not a valid {sort.name}"))
            else:
                if v.sort != sort.name:
                    out.append(Violation("attribute-sort", n.id,
                                         f"variable {v.name} has sort {v.sort}, slot {a!r} expects {sort.name}"))
                prev = var_sorts.setdefault(v.name, v.sort)
                if prev != v.sort:
                    out.append(Violation("variable-sort-clash", v.name, f"used with sorts {prev} and {v.sort}"))
    for key, e in g.edges.items():
        if key != e.id:
            out.append(Violation("edge-id", key, f"keyed as {key!r} but has id {e.id!r}"))
        et = mm.edges.get(e.type)
        if et is None:
            out.append(Violation("unknown-edge-type", e.id, f"edge {e.id!r} has undeclared type {e.type!r}"))
            continue
        missing = [end for end in (e.source, e.target) if end not in g.nodes]
        if missing:
            out.append(Violation("dangling-edge", e.id, f"edge {e.id!r} references missing node(s) {', '.join(missing)}"))
            continue
        s, t = g.nodes[e.source], g.nodes[e.target]
        if s.type != et.source or t.type != et.target:
            out.append(Violation("edge-endpoint-type", e.id,
                                 f"{e.type} must connect {et.source} -> {et.target}, got {s.type} -> {t.type}"))
    for atom in g.atoms:
        for v in (atom.left, atom.right):
            if isinstance(v, Var) and v.name not in var_sorts:
                out.append(Violation("atom-variable", v.name, f"atom '{atom}' mentions a variable used in no attribute slot"))
        sorts = {v.sort for v in (atom.left, atom.right)}
        numeric = all(mm.sorts.get(s, STRING).kind == "integer" for s in sorts)
        if len(sorts) > 1 and not numeric:
            out.append(Violation("atom-sort", str(atom), f"compares values of sorts {sorted(sorts)}"))
        elif atom.op in ("<", "<=", ">", ">=") and not numeric:
            out.append(Violation("atom-sort", str(atom), "ordering relations need integer operands"))
    return out


# --------------------------------------------------------------------------
# Morphisms


@dataclass(frozen=True)
class GraphMorphism:
    source: TypedGraph
    target: TypedGraph
    node_map: Mapping[str, str]
    edge_map: Mapping[str, str]
    var_subst: Mapping[str, Value] = field(default_factory=dict)

    __hash__ = object.__hash__

    @classmethod
    def identity(cls, g: TypedGraph) -> GraphMorphism:
        return cls(g, g, {n: n for n in g.nodes}, {e: e for e in g.edges},
                   {v: Var(v, s) for v, s in g.variables().items()})

    def apply(self, v: Value) -> Value:
        if isinstance(v, Var):
            return self.var_subst.get(v.name, v)
        return v

    def is_injective(self) -> bool:
        return (len(set(self.node_map.values())) == len(self.node_map)
                and len(set(self.edge_map.values())) == len(self.edge_map))

    def compose(self, then: GraphMorphism) -> GraphMorphism:
        """``then ∘ self``."""
        return GraphMorphism(
            self.source, then.target,
            {n: then.node_map[m] for n, m in self.node_map.items()},
            {e: then.edge_map[f] for e, f in self.edge_map.items()},
            {x: then.apply(v) for x, v in self.var_subst.items()},
        )

    def image(self) -> frozenset[tuple[str, str]]:
        return frozenset([("n", n) for n in self.node_map.values()] + [("e", e) for e in self.edge_map.values()])

    def problems(self) -> list[str]:
        """Violated morphism invariants (typing, commutation, attributes, atoms)."""
        out = []
        src, tgt = self.source, self.target
        if set(self.node_map) != set(src.nodes):
            out.append("node map is not total")
        if set(self.edge_map) != set(src.edges):
            out.append("edge map is not total")
        missing_vars = set(src.variables()) - set(self.var_subst)
        if missing_vars:
            out.append(f"substitution misses variables {sorted(missing_vars)}")
        for n, m in self.node_map.items():
            if n not in src.nodes or m not in tgt.nodes:
                out.append(f"node {n} -> {m} out of range")
                continue
            sn, tn = src.nodes[n], tgt.nodes[m]
            if sn.type != tn.type:
                out.append(f"node {n} ({sn.type}) mapped to {m} ({tn.type})")
                continue
            for a, v in sn.attrs.items():
                if self.apply(v) != tn.attrs.get(a):
                    out.append(f"attribute {a} of {n}: {self.apply(v)} != {tn.attrs.get(a)}")
        for e, f in self.edge_map.items():
            if e not in src.edges or f not in tgt.edges:
                out.append(f"edge {e} -> {f} out of range")
                continue
            se, te = src.edges[e], tgt.edges[f]
            if se.type != te.type:
                out.append(f"edge {e} ({se.type}) mapped to {f} ({te.type})")
            if self.node_map.get(se.source) != te.source or self.node_map.get(se.target) != te.target:
                out.append(f"edge {e} does not commute with its endpoints")
        for atom in src.atoms:
            if not tgt.entails(atom.substitute(self.apply)):
                out.append(f"atom '{atom}' is not preserved")
        return out


# --------------------------------------------------------------------------
# Gluing: disjoint union, pushout, tree colimit


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def classes(self) -> list[list]:
        groups: dict = defaultdict(list)
        for x in list(self.parent):
            groups[self.find(x)].append(x)
        return list(groups.values())


def _fresh(name: str, taken: set[str]) -> str:
    while name in taken:
        name += "'"
    return name


def pushout(span_left: GraphMorphism, span_right: GraphMorphism, *,
            node_id: Callable[[str], str] | None = None,
            var_name: Callable[[str], str] | None = None,
            ) -> tuple[TypedGraph, GraphMorphism, GraphMorphism]:
    """Glue ``span_left.target`` and ``span_right.target`` along their common source.

    Elements of the left target keep their ids. Elements that only exist in
    the right target are renamed with ``node_id`` (also used for edges) and
    their private variables with ``var_name``; by default names are kept and
    primed on collision.
    """
    K, L, R = span_left.source, span_left.target, span_right.target
    if span_right.source is not K and span_right.source != K:
        raise PushoutError("span legs do not share a source graph")
    if L.metamodel != R.metamodel:
        raise MetamodelMismatch(f"cannot glue {L.metamodel.name} with {R.metamodel.name} graphs")
    for leg, side in ((span_left, "left"), (span_right, "right")):
        if not leg.is_injective():
            raise PushoutError(f"{side} span leg is not injective")
        bad = leg.problems()
        if bad:
            raise PushoutError(f"{side} span leg is not a morphism: {bad[0]}")

    def term(side: str, v: Value):
        return ("C", v.sort, v.value) if isinstance(v, Const) else (side, v.name)

    uf = _UnionFind()
    for v in L.variables():
        uf.find(("L", v))
    for v in R.variables():
        uf.find(("R", v))
    for x in K.variables():
        uf.union(term("L", span_left.apply(Var(x, ""))), term("R", span_right.apply(Var(x, ""))))
    for k in K.nodes:
        ln, rn = L.nodes[span_left.node_map[k]], R.nodes[span_right.node_map[k]]
        for a, lv in ln.attrs.items():
            uf.union(term("L", lv), term("R", rn.attrs[a]))

    l_vars, r_vars = L.variables(), R.variables()
    taken = set(l_vars)
    rep: dict = {}
    for cls_ in sorted(uf.classes(), key=lambda c: sorted(map(str, c))):
        consts = {t for t in cls_ if t[0] == "C"}
        if len(consts) > 1:
            shown = ", ".join(repr(c[2]) for c in sorted(consts, key=str))
            raise PushoutError(f"attribute-constant clash while gluing: {shown}")
        if consts:
            (c,) = consts
            value: Value = Const(c[1], c[2])
        else:
            lefts = sorted(t[1] for t in cls_ if t[0] == "L")
            if lefts:
                value = Var(lefts[0], l_vars[lefts[0]])
            else:
                r0 = sorted(t[1] for t in cls_ if t[0] == "R")[0]
                name = _fresh(var_name(r0) if var_name else r0, taken)
                taken.add(name)
                value = Var(name, r_vars[r0])
        for t in cls_:
            rep[t] = value

    def subst(side: str) -> Callable[[Value], Value]:
        return lambda v: rep.get(term(side, v), v) if isinstance(v, Var) else v

    sub_l, sub_r = subst("L"), subst("R")

    k_nodes_r = {span_right.node_map[k]: span_left.node_map[k] for k in K.nodes}
    k_edges_r = {span_right.edge_map[k]: span_left.edge_map[k] for k in K.edges}

    nodes = {i: Node(n.id, n.type, {a: sub_l(v) for a, v in n.attrs.items()}) for i, n in L.nodes.items()}
    edges = dict(L.edges)
    used_ids = set(nodes) | set(edges)
    r_node_map, r_edge_map = dict(k_nodes_r), dict(k_edges_r)
    for i, n in R.nodes.items():
        if i in k_nodes_r:
            continue
        new = _fresh(node_id(i) if node_id else i, used_ids)
        used_ids.add(new)
        r_node_map[i] = new
        nodes[new] = Node(new, n.type, {a: sub_r(v) for a, v in n.attrs.items()})
    for i, e in R.edges.items():
        if i in k_edges_r:
            continue
        new = _fresh(node_id(i) if node_id else i, used_ids)
        used_ids.add(new)
        r_edge_map[i] = new
        edges[new] = Edge(new, e.type, r_node_map[e.source], r_node_map[e.target], e.label)
    atoms = _dedup([a.substitute(sub_l) for a in L.atoms] + [a.substitute(sub_r) for a in R.atoms])
    P = TypedGraph(L.metamodel, nodes, edges, atoms)
    m_left = GraphMorphism(L, P, {i: i for i in L.nodes}, {i: i for i in L.edges},
                           {v: sub_l(Var(v, s)) for v, s in l_vars.items()})
    m_right = GraphMorphism(R, P, r_node_map, r_edge_map, {v: sub_r(Var(v, s)) for v, s in r_vars.items()})
    return P, m_left, m_right


def disjoint_union(g1: TypedGraph, g2: TypedGraph) -> tuple[TypedGraph, GraphMorphism, GraphMorphism]:
    """Coproduct of two graphs; clashing ids and variables of ``g2`` get primed."""
    if g1.metamodel != g2.metamodel:
        raise MetamodelMismatch(f"cannot unite {g1.metamodel.name} with {g2.metamodel.name} graphs")
    K = TypedGraph.empty(g1.metamodel)
    return pushout(GraphMorphism(K, g1, {}, {}, {}), GraphMorphism(K, g2, {}, {}, {}))


@dataclass
class DiagramNode:
    """One vertex of a tree-shaped diagram: a graph plus its arrow from the parent."""

    key: str
    graph: TypedGraph
    from_parent: GraphMorphism | None = None
    children: list[DiagramNode] = field(default_factory=list)


def relabel(g: TypedGraph, node_id: Callable[[str], str]) -> tuple[TypedGraph, GraphMorphism]:
    nmap = {i: node_id(i) for i in g.nodes}
    emap = {i: node_id(i) for i in g.edges}
    if len(set(nmap.values()) | set(emap.values())) != len(nmap) + len(emap):
        raise GraphError("relabelling is not injective")
    nodes = {nmap[i]: Node(nmap[i], n.type, dict(n.attrs)) for i, n in g.nodes.items()}
    edges = {emap[i]: Edge(emap[i], e.type, nmap[e.source], nmap[e.target], e.label) for i, e in g.edges.items()}
    h = TypedGraph(g.metamodel, nodes, edges, g.atoms)
    return h, GraphMorphism(g, h, nmap, emap, {v: Var(v, s) for v, s in g.variables().items()})


def colimit_tree(root: DiagramNode) -> tuple[TypedGraph, dict[str, GraphMorphism]]:
    """Colimit of a tree of graphs with injective parent-to-child arrows.

    Computed as iterated pushouts, root first. Element ids of the result are
    ``<key>.<local id>`` where ``key`` is the diagram vertex that introduced the
    element; variables private to a non-root vertex become ``<name>@<key>``.
    Returns the colimit and one injection per diagram key.
    """
    keys: set[str] = set()
    stack = [root]
    while stack:
        d = stack.pop()
        if d.key in keys:
            raise DiagramError(f"diagram key {d.key!r} occurs twice; the diagram is not a tree")
        keys.add(d.key)
        for c in d.children:
            if c.from_parent is None:
                raise DiagramError(f"diagram vertex {c.key!r} has no arrow from its parent")
            if c.from_parent.source is not d.graph and c.from_parent.source != d.graph:
                raise DiagramError(f"arrow into {c.key!r} does not start at the graph of {d.key!r}")
            if c.from_parent.target is not c.graph and c.from_parent.target != c.graph:
                raise DiagramError(f"arrow into {c.key!r} does not end at its graph")
            stack.append(c)

    colim, inj0 = relabel(root.graph, lambda i: f"{root.key}.{i}")
    injections = {root.key: inj0}

    def attach(parent: DiagramNode) -> None:
        nonlocal colim
        for child in parent.children:
            key = child.key
            P, m_left, m_right = pushout(
                injections[parent.key], child.from_parent,
                node_id=lambda i, key=key: f"{key}.{i}",
                var_name=lambda v, key=key: f"{v}@{key}",
            )
            for k, inj in injections.items():
                injections[k] = inj.compose(m_left)
            injections[key] = m_right
            colim = P
            attach(child)

    attach(root)
    return colim, injections


# --------------------------------------------------------------------------
# Injective matching


class _Matcher:
    def __init__(self, pat: TypedGraph, host: TypedGraph, node_seed: Mapping[str, str],
                 edge_seed: Mapping[str, str], var_seed: Mapping[str, Value]):
        self.pat, self.host = pat, host
        self.node_seed, self.edge_seed = dict(node_seed), dict(edge_seed)
        self.var_seed = dict(var_seed)
        self.host_by_type: dict[str, list[str]] = defaultdict(list)
        for h in sorted(host.nodes, key=lambda i: (-host.degree(i), i)):
            self.host_by_type[host.nodes[h].type].append(h)
        self.order = self._order()
        self.atom_vars = [(a, a.variables()) for a in pat.atoms]

    def _order(self) -> list[str]:
        pat = self.pat
        placed = [n for n in sorted(self.node_seed) if n in pat.nodes]
        rest = set(pat.nodes) - set(placed)
        placed_set = set(placed)
        while rest:
            def rank(n):
                links = sum(1 for e in pat.incident(n) if (e.source in placed_set or e.target in placed_set))
                return (-links, -pat.degree(n), n)
            nxt = min(rest, key=rank)
            placed.append(nxt)
            placed_set.add(nxt)
            rest.discard(nxt)
        return placed

    def _edge_demand(self, p: str, q: str) -> Counter:
        return Counter((e.type, e.source == p) for e in self.pat.between(p, q)) + \
            (Counter((e.type, False) for e in self.pat.between(q, p)) if q != p else Counter())

    def _edge_supply(self, h: str, k: str) -> Counter:
        return Counter((e.type, e.source == h) for e in self.host.between(h, k)) + \
            (Counter((e.type, False) for e in self.host.between(k, h)) if k != h else Counter())

    def _bind_attrs(self, p: str, h: str, subst: dict, trail: list) -> bool:
        pn, hn = self.pat.nodes[p], self.host.nodes[h]
        for a, pv in pn.attrs.items():
            hv = hn.attrs.get(a)
            if hv is None:
                return False
            if isinstance(pv, Const):
                if pv != hv:
                    return False
            elif pv.name in subst:
                if subst[pv.name] != hv:
                    return False
            else:
                if hv.sort != pv.sort:
                    return False
                subst[pv.name] = hv
                trail.append(pv.name)
        return True

    def _atoms_ok(self, subst: dict, fresh: Iterable[str]) -> bool:
        fresh = set(fresh)
        if not fresh:
            return True
        for atom, vs in self.atom_vars:
            if vs & fresh and vs <= subst.keys():
                inst = atom.substitute(lambda v: subst[v.name] if isinstance(v, Var) else v)
                if not self.host.entails(inst):
                    return False
        return True

    def run(self) -> Iterator[GraphMorphism]:
        pat, host = self.pat, self.host
        if len(pat.nodes) > len(host.nodes) or len(pat.edges) > len(host.edges):
            return
        need = Counter(n.type for n in pat.nodes.values())
        have = Counter(n.type for n in host.nodes.values())
        if any(have[t] < c for t, c in need.items()):
            return
        for p, h in self.node_seed.items():
            if p not in pat.nodes or h not in host.nodes:
                return
        subst = dict(self.var_seed)
        if not self._atoms_ok(subst, list(subst)):
            return
        yield from self._extend(0, {}, set(), subst)

    def _candidates(self, p: str) -> list[str]:
        if p in self.node_seed:
            return [self.node_seed[p]]
        return self.host_by_type.get(self.pat.nodes[p].type, [])

    def _extend(self, i: int, nmap: dict, used: set, subst: dict) -> Iterator[GraphMorphism]:
        if i == len(self.order):
            yield from self._edges(nmap, subst)
            return
        p = self.order[i]
        for h in self._candidates(p):
            if h in used:
                continue
            ok = True
            for q in dict.fromkeys([p] + [e.target if e.source == p else e.source for e in self.pat.incident(p)]):
                if q != p and q not in nmap:
                    continue
                k = h if q == p else nmap[q]
                demand = self._edge_demand(p, q)
                if demand and demand - self._edge_supply(h, k):
                    ok = False
                    break
            if not ok:
                continue
            trail: list = []
            if self._bind_attrs(p, h, subst, trail) and self._atoms_ok(subst, trail):
                nmap[p] = h
                used.add(h)
                yield from self._extend(i + 1, nmap, used, subst)
                used.discard(h)
                del nmap[p]
            for v in trail:
                del subst[v]

    def _edges(self, nmap: dict, subst: dict) -> Iterator[GraphMorphism]:
        pedges = sorted(self.pat.edges.values(), key=lambda e: e.id)
        options = []
        for e in pedges:
            if e.id in self.edge_seed:
                f = self.host.edges.get(self.edge_seed[e.id])
                if f is None or f.type != e.type or f.source != nmap[e.source] or f.target != nmap[e.target]:
                    return
                options.append([f.id])
            else:
                options.append([f.id for f in self.host.between(nmap[e.source], nmap[e.target]) if f.type == e.type])

        def pick(j: int, emap: dict, used: set) -> Iterator[dict]:
            if j == len(pedges):
                yield dict(emap)
                return
            for f in options[j]:
                if f not in used:
                    emap[pedges[j].id] = f
                    used.add(f)
                    yield from pick(j + 1, emap, used)
                    used.discard(f)
                    del emap[pedges[j].id]

        pvars = self.pat.variables()
        for emap in pick(0, {}, set()):
            yield GraphMorphism(self.pat, self.host, dict(nmap), emap, {v: subst[v] for v in pvars})


def _morphism_key(m: GraphMorphism) -> tuple:
    return (tuple(sorted(m.node_map.items())), tuple(sorted(m.edge_map.items())),
            tuple(sorted((k, _vkey(v)) for k, v in m.var_subst.items())))


def iter_injective_morphisms(pat: TypedGraph, host: TypedGraph, *,
                             node_seed: Mapping[str, str] | None = None,
                             edge_seed: Mapping[str, str] | None = None,
                             var_seed: Mapping[str, Value] | None = None) -> Iterator[GraphMorphism]:
    """Lazily yield injective morphisms ``pat -> host`` extending the seed (search order)."""
    return _Matcher(pat, host, node_seed or {}, edge_seed or {}, var_seed or {}).run()


def find_injective_morphisms(pat: TypedGraph, host: TypedGraph, *,
                             node_seed: Mapping[str, str] | None = None,
                             edge_seed: Mapping[str, str] | None = None,
                             var_seed: Mapping[str, Value] | None = None) -> list[GraphMorphism]:
    """All total injective morphisms extending the seed, sorted by node map."""
    found = iter_injective_morphisms(pat, host, node_seed=node_seed, edge_seed=edge_seed, var_seed=var_seed)
    return sorted(found, key=_morphism_key)


def find_isomorphism(g1: TypedGraph, g2: TypedGraph) -> GraphMorphism | None:
    """An isomorphism ``g1 -> g2`` (bijective on elements and variables), if any."""
    if (len(g1.nodes), len(g1.edges)) != (len(g2.nodes), len(g2.edges)):
        return None
    v1, v2 = g1.variables(), g2.variables()
    if len(v1) != len(v2) or len(set(g1.atoms)) != len(set(g2.atoms)):
        return None
    for m in iter_injective_morphisms(g1, g2):
        targets = list(m.var_subst.values())
        if all(isinstance(t, Var) for t in targets) and len({t.name for t in targets}) == len(v2):
            if all(g1.entails(a.substitute(lambda v: _inverse(m, v))) for a in g2.atoms):
                return m
    return None


def _inverse(m: GraphMorphism, v: Value) -> Value:
    if isinstance(v, Var):
        for x, t in m.var_subst.items():
            if t == v:
                return Var(x, v.sort)
    return v


def is_isomorphic(g1: TypedGraph, g2: TypedGraph) -> bool:
    return find_isomorphism(g1, g2) is not None


def combinations_disjoint(items: list, k: int, key: Callable) -> Iterator[tuple]:
    """k-subsets of ``items`` (in index order) whose ``key`` sets are pairwise disjoint."""
    def rec(start: int, chosen: list, used: frozenset):
        if len(chosen) == k:
            yield tuple(chosen)
            return
        for i in range(start, len(items) - (k - len(chosen)) + 1):
            ks = key(items[i])
            if used.isdisjoint(ks):
                chosen.append(items[i])
                yield from rec(i + 1, chosen, used | ks)
                chosen.pop()
    yield from rec(0, [], frozenset())


__all__ = [
    "Atom", "BOOLEAN", "Const", "DiagramError", "DiagramNode", "Edge", "EdgeType", "GraphError",
    "GraphMorphism", "INTEGER", "Metamodel", "MetamodelMismatch", "NATURAL", "Node", "NodeType",
    "PushoutError", "STRING", "Sort", "TypedGraph", "Value", "Var", "Violation", "colimit_tree",
    "combinations_disjoint", "disjoint_union", "find_injective_morphisms", "find_isomorphism",
    "is_isomorphic", "iter_injective_morphisms", "pushout", "relabel", "validate_graph",
]
