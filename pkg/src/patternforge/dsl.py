"""Text formats: the pattern language (``.pat``) and the model format (``.model``).

Both share one lexer and the same element syntax; see ``docs/grammar.md``.
In patterns an identifier in value position starting with an upper-case
letter or ``_`` is a variable; everything else is a constant. In models every
value is a constant.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .counts import BinOp, Count, CountRelation, CountTerm, EquationSystem, Num
from .diagnostics import Diagnostic, InputError, SourceSpan
from .graph import (
    RELOPS, Atom, Const, Edge, GraphMorphism, Metamodel, Node, TypedGraph, Value, Var, _UnionFind,
    validate_graph,
)
from .metamodels import CLASSDIAGRAM, METAMODELS
from .pattern import (
    AtomicConstraint, Pattern, SyncLink, SynchronizedPatternSet, VariablePart, errors, validate_pattern,
    validate_sync,
)

# --------------------------------------------------------------------------
# Lexer

_LEX = re.compile(r"""
    (?P<ws>[ \t\r\f]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<badstring>"[^\n]*)
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct><<|>>|->|<=|>=|!=|≤|≥|[{}()\[\],:~.<>=+*\-])
""", re.X)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | string | number | punct | eof
    text: str
    span: SourceSpan

    @property
    def value(self) -> str:
        return json.loads(self.text) if self.kind == "string" else self.text


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    out: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _LEX.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise InputError(Diagnostic(f"unexpected character {text[pos]!r}", SourceSpan(file, line, col)))
        kind = m.lastgroup
        tok = m.group()
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind == "badstring":
            raise InputError(Diagnostic("unterminated string", SourceSpan(file, line, col, len(tok))))
        elif kind == "string":
            try:
                json.loads(tok)
            except ValueError:
                raise InputError(Diagnostic("invalid escape in string", SourceSpan(file, line, col, len(tok)))) from None
            out.append(Token(kind, tok, SourceSpan(file, line, col, len(tok))))
        elif kind not in ("ws", "comment"):
            tok = {"≤": "<=", "≥": ">="}.get(tok, tok)
            out.append(Token(kind, tok, SourceSpan(file, line, col, len(m.group()))))
        pos = m.end()
    out.append(Token("eof", "", SourceSpan(file, line, pos - line_start + 1, 0)))
    return out


# --------------------------------------------------------------------------
# Graph construction

_DEFAULTS = {
    "Class": {"abstract": False},
    "Operation": {"abstract": False, "visibility": "public", "static": False},
    "Attribute": {"visibility": "private", "static": False},
    "Note": {"text": ""},
    "Message": {"order": 0},
}
_NAME_SLOTS = ("name", "op_name")
_VISIBILITY = ("public", "private", "protected")


def _ident_safe(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]", "_", s)


def is_variable_name(text: str) -> bool:
    return bool(text) and (text[0].isupper() or text[0] == "_")


class _Builder:
    """A graph under construction, optionally extending a base graph by inclusion."""

    def __init__(self, mm: Metamodel, pattern_mode: bool, base: TypedGraph | None = None):
        self.mm, self.pattern_mode, self.base = mm, pattern_mode, base
        self.nodes: dict[str, tuple[str, dict]] = {}
        self.edges: dict[str, Edge] = {}
        self.atoms: list[Atom] = []
        self.roles: dict[str, str] = {}
        self.spans: dict[str, SourceSpan] = {}
        self.subst: dict[str, Value] = {}
        if base is not None:
            self.nodes = {i: (n.type, dict(n.attrs)) for i, n in base.nodes.items()}
            self.edges = dict(base.edges)
            self.atoms = list(base.atoms)

    # values ---------------------------------------------------------------
    def resolve(self, v: Value) -> Value:
        seen = set()
        while isinstance(v, Var) and v.name in self.subst and v.name not in seen:
            seen.add(v.name)
            v = self.subst[v.name]
        return v

    def var_sort(self, name: str) -> str | None:
        for _, attrs in self.nodes.values():
            for v in attrs.values():
                if isinstance(v, Var) and v.name == name:
                    return v.sort
        return None

    # nodes -----------------------------------------------------------------
    def has(self, node_id: str) -> bool:
        return node_id in self.nodes

    def node_type(self, node_id: str) -> str:
        return self.nodes[node_id][0]

    def add_node(self, node_id: str, type_name: str, attrs: Mapping[str, Value], span: SourceSpan) -> None:
        nt = self.mm.nodes.get(type_name)
        if nt is None:
            raise InputError(Diagnostic(f"metamodel {self.mm.name} has no node type {type_name!r}", span))
        full: dict[str, Value] = {}
        for a, sort in nt.attributes:
            if a in attrs:
                full[a] = attrs[a]
            elif self.pattern_mode:
                full[a] = Var(f"_{_ident_safe(node_id)}_{a}", sort.name)
            elif a in _NAME_SLOTS:
                full[a] = Const(sort.name, node_id)
            else:
                full[a] = Const(sort.name, _DEFAULTS.get(type_name, {}).get(a, ""))
        for a, v in attrs.items():
            if a not in nt.attrs:
                raise InputError(Diagnostic(f"{type_name} has no attribute {a!r}", span))
        self.nodes[node_id] = (type_name, full)
        self.spans[node_id] = span

    def set_attr(self, node_id: str, attr: str, value: Value, span: SourceSpan) -> None:
        type_name, attrs = self.nodes[node_id]
        if attr not in attrs:
            raise InputError(Diagnostic(f"{type_name} has no attribute {attr!r}", span))
        cur = self.resolve(attrs[attr])
        value = self.resolve(value)
        if cur == value:
            return
        if isinstance(cur, Var):
            self.subst[cur.name] = value
        elif isinstance(value, Var):
            self.subst[value.name] = cur
        elif self.pattern_mode:
            raise InputError(Diagnostic(f"{node_id}.{attr} is already {cur}; cannot change it to {value}", span))
        else:
            attrs[attr] = value

    def add_role(self, node_id: str, role: str | None, span: SourceSpan) -> None:
        if role is None:
            return
        prev = self.roles.get(node_id)
        if prev is not None and prev != role:
            raise InputError(Diagnostic(f"{node_id} already has role {prev!r}", span))
        self.roles[node_id] = role

    # edges -----------------------------------------------------------------
    def add_edge(self, type_name: str, source: str, target: str, span: SourceSpan, label: str | None = None) -> str:
        if type_name not in self.mm.edges:
            raise InputError(Diagnostic(f"metamodel {self.mm.name} has no edge type {type_name!r}", span))
        for end in (source, target):
            if end not in self.nodes:
                raise InputError(Diagnostic(f"unknown node {end!r}", span))
        base = f"{source}-{type_name}->{target}"
        eid, k = base, 1
        while eid in self.edges:
            k += 1
            eid = f"{base}#{k}"
        self.edges[eid] = Edge(eid, type_name, source, target, label)
        self.spans[eid] = span
        return eid

    def finish(self) -> tuple[TypedGraph, GraphMorphism | None]:
        nodes = [Node(i, t, {a: self.resolve(v) for a, v in attrs.items()}) for i, (t, attrs) in self.nodes.items()]
        atoms = []
        for a in self.atoms:
            a = a.substitute(self.resolve)
            if a not in atoms:
                atoms.append(a)
        g = TypedGraph.build(self.mm, nodes, self.edges.values(), atoms)
        if self.base is None:
            return g, None
        emb = GraphMorphism(self.base, g, {n: n for n in self.base.nodes}, {e: e for e in self.base.edges},
                            {v: self.resolve(Var(v, s)) for v, s in self.base.variables().items()})
        return g, emb


# --------------------------------------------------------------------------
# Parser


@dataclass
class PatternFile:
    patterns: list[Pattern] = field(default_factory=list)
    syncs: list[SynchronizedPatternSet] = field(default_factory=list)
    sync_names: list[str] = field(default_factory=list)
    source: str = ""

    def pattern(self, name: str) -> Pattern:
        for p in self.patterns:
            if p.name == name:
                return p
        raise KeyError(name)


@dataclass(frozen=True)
class ModelDocument:
    metamodel: str
    graph: TypedGraph
    spans: Mapping[str, SourceSpan] = field(default_factory=dict)
    name: str = ""


_ELEMENT_KEYWORDS = ("class", "note", "lifeline", "message", "edge", "where", "set", "node")
_PATTERN_ITEMS = ("title", "intent", "metamodel", "roles", "root", "part", "equations", "nac", "require")
_OP_MODS = ("abstract", "static", "public", "private", "protected")
_ATTR_MODS = ("static", "public", "private", "protected")


class _Parser:
    def __init__(self, text: str, file: str):
        self.file = file
        self.toks = tokenize(text, file)
        self.i = 0

    # token helpers ---------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, message: str, tok: Token | None = None) -> InputError:
        return InputError(Diagnostic(message, (tok or self.tok).span))

    def describe(self, tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "ident") and self.tok.text == text

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.describe(self.tok)}")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected {what}, found {self.describe(self.tok)}")
        return self.advance()

    def string(self, what: str = "string") -> str:
        if self.tok.kind != "string":
            raise self.error(f"expected {what}, found {self.describe(self.tok)}")
        return self.advance().value

    def ref(self) -> tuple[str, Token]:
        first = self.ident("node reference")
        parts = [first.text]
        while self.at(".") and self.peek().kind == "ident":
            self.advance()
            parts.append(self.advance().text)
        return ".".join(parts), first

    def role(self) -> str | None:
        if not self.accept("<<"):
            return None
        name = self.ident("role name").text
        self.expect(">>")
        return name

    # values ----------------------------------------------------------------
    def raw_value(self) -> tuple[str, object, Token]:
        """(kind, payload, token) with kind in str/int/bool/var/ident."""
        t = self.tok
        if t.kind == "string":
            self.advance()
            return "str", t.value, t
        if t.kind == "number":
            self.advance()
            return "int", int(t.text), t
        if self.at("-") and self.peek().kind == "number":
            self.advance()
            return "int", -int(self.advance().text), t
        if t.kind == "ident":
            self.advance()
            if t.text in ("true", "false"):
                return "bool", t.text == "true", t
            return "ident", t.text, t
        raise self.error(f"expected a value, found {self.describe(t)}")

    def value_for(self, b: _Builder, sort_name: str) -> Value:
        kind, payload, tok = self.raw_value()
        if kind == "ident" and b.pattern_mode and is_variable_name(payload):
            return Var(payload, sort_name)
        return Const(sort_name, payload)

    def slot_value(self, b: _Builder, type_name: str, attr: str, tok: Token) -> Value:
        nt = b.mm.nodes[type_name]
        if attr not in nt.attrs:
            raise self.error(f"{type_name} has no attribute {attr!r}", tok)
        return self.value_for(b, nt.attrs[attr].name)

    def free_value(self, b: _Builder) -> Value:
        kind, payload, tok = self.raw_value()
        if kind == "ident" and b.pattern_mode and is_variable_name(payload):
            sort = b.var_sort(payload)
            if sort is None:
                raise self.error(f"variable {payload!r} does not occur in any attribute", tok)
            return Var(payload, sort)
        sort = {"str": "string", "ident": "string", "int": "integer", "bool": "boolean"}[kind]
        return Const(sort, payload)

    # elements --------------------------------------------------------------
    def block(self, b: _Builder) -> None:
        self.expect("{")
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated block: expected '}'")
            self.element(b)
        self.advance()

    def element(self, b: _Builder) -> None:
        t = self.tok
        if t.kind != "ident" or t.text not in _ELEMENT_KEYWORDS:
            raise self.error(f"expected an element ({', '.join(_ELEMENT_KEYWORDS)}), found {self.describe(t)}")
        getattr(self, f"el_{t.text}")(b)

    def _declare(self, b: _Builder, node_id: str, type_name: str, tok: Token, attrs: dict | None = None) -> bool:
        """Create ``node_id`` or check a re-declaration; True when newly created."""
        if b.has(node_id):
            if b.node_type(node_id) != type_name:
                raise self.error(f"{node_id!r} is already declared as a {b.node_type(node_id)}", tok)
            for a, v in (attrs or {}).items():
                b.set_attr(node_id, a, v, tok.span)
            return False
        b.add_node(node_id, type_name, attrs or {}, tok.span)
        return True

    def el_class(self, b: _Builder) -> None:
        self.advance()
        name_tok = self.ident("class name")
        cid = name_tok.text
        attrs: dict[str, Value] = {}
        if self.at("abstract") or self.at("concrete"):
            attrs["abstract"] = Const("boolean", self.advance().text == "abstract")
        self._declare(b, cid, "Class", name_tok, attrs)
        b.add_role(cid, self.role(), name_tok.span)
        if not self.at("{"):
            return
        self.advance()
        while not self.accept("}"):
            t = self.tok
            if t.kind == "eof":
                raise self.error("unterminated class body: expected '}'")
            if self.accept("ops"):
                self.expect(":")
                self.op_decl(b, cid)
                while self.accept(","):
                    self.op_decl(b, cid)
            elif self.accept("attrs"):
                self.expect(":")
                self.attr_decl(b, cid)
                while self.accept(","):
                    self.attr_decl(b, cid)
            elif self.at("abstract") or self.at("concrete"):
                self.advance()
                b.set_attr(cid, "abstract", Const("boolean", t.text == "abstract"), t.span)
            elif t.kind == "ident" and self.peek().text == ":":
                self.advance()
                self.advance()
                b.set_attr(cid, t.text, self.slot_value(b, "Class", t.text, t), t.span)
            else:
                raise self.error(f"expected 'ops:', 'attrs:', 'abstract' or 'attribute: value', found {self.describe(t)}")
            self.accept(",")

    def _mods(self, allowed: tuple[str, ...]) -> dict[str, Value]:
        out: dict[str, Value] = {}
        # A modifier keyword directly followed by '(' is the member's name, not a modifier.
        while self.tok.kind == "ident" and self.tok.text in allowed and self.peek().text != "(":
            t = self.advance()
            if t.text in _VISIBILITY:
                if "visibility" in out:
                    raise self.error("visibility given twice", t)
                out["visibility"] = Const("visibility", t.text)
            else:
                out[t.text] = Const("boolean", True)
        return out

    def _member_name(self, b: _Builder) -> tuple[str, Value, Token]:
        kind, payload, tok = self.raw_value()
        if kind not in ("ident", "str"):
            raise self.error("expected a member name", tok)
        if kind == "ident" and b.pattern_mode and is_variable_name(payload):
            return payload, Var(payload, "string"), tok
        return str(payload), Const("string", payload), tok

    def op_decl(self, b: _Builder, cid: str) -> None:
        mods = self._mods(_OP_MODS)
        text, name, tok = self._member_name(b)
        self.expect("(")
        self.expect(")")
        oid = f"{cid}.{text}"
        if self._declare(b, oid, "Operation", tok, {"name": name, **mods}):
            b.add_edge("owns_op", cid, oid, tok.span)
        b.add_role(oid, self.role(), tok.span)

    def attr_decl(self, b: _Builder, cid: str) -> None:
        mods = self._mods(_ATTR_MODS)
        text, name, tok = self._member_name(b)
        aid = f"{cid}.{text}"
        if self._declare(b, aid, "Attribute", tok, {"name": name, **mods}):
            b.add_edge("owns_attr", cid, aid, tok.span)
        b.add_role(aid, self.role(), tok.span)

    def _optional_value(self, b: _Builder, type_name: str, attr: str) -> dict[str, Value]:
        t = self.tok
        if t.kind in ("string", "number") or (t.kind == "ident" and t.text not in ("on", "order")
                                              and not self._starts_statement(t)):
            return {attr: self.slot_value(b, type_name, attr, t)}
        return {}

    def _starts_statement(self, t: Token) -> bool:
        return t.text in _ELEMENT_KEYWORDS and (self.peek().kind == "ident" or self.peek().text == "{")

    def el_note(self, b: _Builder) -> None:
        self.advance()
        tok = self.ident("note name")
        attrs = self._optional_value(b, "Note", "text")
        self._declare(b, tok.text, "Note", tok, attrs)
        if self.accept("on"):
            target, ttok = self.ref()
            b.add_edge("annotates", tok.text, target, ttok.span)
        b.add_role(tok.text, self.role(), tok.span)

    def el_lifeline(self, b: _Builder) -> None:
        self.advance()
        tok = self.ident("lifeline name")
        attrs = self._optional_value(b, "Lifeline", "name")
        self._declare(b, tok.text, "Lifeline", tok, attrs)
        b.add_role(tok.text, self.role(), tok.span)

    def el_message(self, b: _Builder) -> None:
        self.advance()
        tok = self.ident("message name")
        if b.has(tok.text):
            raise self.error(f"{tok.text!r} is already declared", tok)
        src, stok = self.ref()
        self.expect("->")
        dst, dtok = self.ref()
        for end, t in ((src, stok), (dst, dtok)):
            if not b.has(end) or b.node_type(end) != "Lifeline":
                raise self.error(f"{end!r} is not a declared lifeline", t)
        attrs = {"op_name": self.slot_value(b, "Message", "op_name", self.tok)}
        if self.accept("order"):
            attrs["order"] = self.slot_value(b, "Message", "order", self.tok)
        b.add_node(tok.text, "Message", attrs, tok.span)
        b.add_edge("sends", src, tok.text, tok.span)
        b.add_edge("receives", tok.text, dst, tok.span)
        b.add_role(tok.text, self.role(), tok.span)

    def el_edge(self, b: _Builder) -> None:
        kw = self.advance()
        type_tok = self.ident("edge type")
        src, stok = self.ref()
        self.expect("->")
        dst, dtok = self.ref()
        for end, t in ((src, stok), (dst, dtok)):
            if not b.has(end):
                raise self.error(f"unknown node {end!r}", t)
        label = self.string() if self.tok.kind == "string" else None
        if type_tok.text not in b.mm.edges:
            raise self.error(f"metamodel {b.mm.name} has no edge type {type_tok.text!r}", type_tok)
        b.add_edge(type_tok.text, src, dst, kw.span, label)

    def el_where(self, b: _Builder) -> None:
        kw = self.advance()
        left = self.free_value(b)
        op = self.tok
        if op.text not in RELOPS or op.kind != "punct":
            raise self.error(f"expected a relation ({' '.join(RELOPS)}), found {self.describe(op)}")
        self.advance()
        right = self.free_value(b)
        b.atoms.append(Atom(left, op.text, right))
        b.spans.setdefault(f"where@{kw.span.line}", kw.span)

    def el_set(self, b: _Builder) -> None:
        self.advance()
        path, tok = self.ref()
        if "." not in path:
            raise self.error("expected node.attribute", tok)
        node_id, attr = path.rsplit(".", 1)
        if not b.has(node_id):
            raise self.error(f"unknown node {node_id!r}", tok)
        self.expect("=")
        value = self.slot_value(b, b.node_type(node_id), attr, self.tok)
        b.set_attr(node_id, attr, value, tok.span)

    def el_node(self, b: _Builder) -> None:
        self.advance()
        type_tok = self.ident("node type")
        if type_tok.text not in b.mm.nodes:
            raise self.error(f"metamodel {b.mm.name} has no node type {type_tok.text!r}", type_tok)
        node_id, tok = self.ref()
        role = self.role()
        attrs: dict[str, Value] = {}
        if self.accept("{"):
            while not self.accept("}"):
                at = self.ident("attribute name")
                self.expect(":")
                if at.text in attrs:
                    raise self.error(f"attribute {at.text!r} given twice", at)
                attrs[at.text] = self.slot_value(b, type_tok.text, at.text, at)
                if not self.accept(","):
                    self.expect("}")
                    break
        self._declare(b, node_id, type_tok.text, tok, attrs)
        b.add_role(node_id, role, tok.span)

    # equations ---------------------------------------------------------------
    def relation(self) -> CountRelation:
        lhs = self.term()
        t = self.tok
        if t.kind != "punct" or t.text not in ("<", "<=", "=", ">", ">="):
            raise self.error(f"expected one of < <= = > >=, found {self.describe(t)}")
        self.advance()
        return CountRelation(lhs, t.text, self.term())

    def term(self) -> CountTerm:
        t = self.factor()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            t = BinOp(op, t, self.factor())
        return t

    def factor(self) -> CountTerm:
        t = self.count_atom()
        while self.accept("*"):
            t = BinOp("*", t, self.count_atom())
        return t

    def count_atom(self) -> CountTerm:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Num(int(t.text))
        if t.kind == "ident":
            self.advance()
            return Count(t.text)
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        raise self.error(f"expected a count term, found {self.describe(t)}")

    # patterns ------------------------------------------------------------------
    def pattern(self) -> Pattern:
        kw = self.expect("pattern")
        name_tok = self.ident("pattern name")
        self.expect("{")
        mm = CLASSDIAGRAM
        title = intent = ""
        roles: list[str] = []
        parts: list[VariablePart] = []
        spans: dict[str, SourceSpan] = {}
        relations: list[CountRelation] = []
        eq_span = None
        constraints: list[AtomicConstraint] = []
        while not self.accept("}"):
            t = self.tok
            if t.kind == "eof":
                raise self.error(f"unterminated pattern {name_tok.text!r}: expected '}}'")
            if t.kind != "ident" or t.text not in _PATTERN_ITEMS:
                raise self.error(f"expected a pattern item ({', '.join(_PATTERN_ITEMS)}), found {self.describe(t)}")
            self.advance()
            if t.text == "title":
                title = self.string("title string")
            elif t.text == "intent":
                intent = self.string("intent string")
            elif t.text == "metamodel":
                mt = self.ident("metamodel name")
                if parts:
                    raise self.error("metamodel must be declared before the root", mt)
                if mt.text not in METAMODELS:
                    raise self.error(f"unknown metamodel {mt.text!r} (known: {', '.join(METAMODELS)})", mt)
                mm = METAMODELS[mt.text]
            elif t.text == "roles":
                roles.append(self.ident("role name").text)
                while self.accept(","):
                    roles.append(self.ident("role name").text)
            elif t.text == "root":
                if parts:
                    raise self.error("the root is declared twice", t)
                b = _Builder(mm, True)
                self.block(b)
                g, _ = b.finish()
                parts.append(VariablePart(name_tok.text, g, None, None, dict(b.roles), t.span))
            elif t.text == "part":
                pname = self.ident("part name")
                self.expect("in")
                parent_tok = self.ident("parent part name")
                parent = next((q for q in parts if q.name == parent_tok.text), None)
                if not parts:
                    raise self.error("the root must be declared before variable parts", t)
                if parent is None:
                    raise self.error(f"unknown parent part {parent_tok.text!r} (parents must be declared first)",
                                     parent_tok)
                b = _Builder(mm, True, parent.graph)
                self.block(b)
                g, emb = b.finish()
                parts.append(VariablePart(pname.text, g, parent.name, emb, dict(b.roles), pname.span))
            elif t.text == "equations":
                eq_span = t.span
                relations.append(self.relation())
                while self.accept(","):
                    relations.append(self.relation())
            elif t.text in ("nac", "require"):
                constraints.append(self.constraint(t, parts))
        p = Pattern(name_tok.text, mm, tuple(parts), EquationSystem(tuple(relations)), tuple(constraints),
                    tuple(roles), intent, title, kw.span, eq_span)
        return p

    def constraint(self, kw: Token, parts: list[VariablePart]) -> AtomicConstraint:
        anchor_tok = self.ident("anchor part name")
        anchor = next((q for q in parts if q.name == anchor_tok.text), None)
        if anchor is None:
            raise self.error(f"unknown part {anchor_tok.text!r} (declare it before its constraints)", anchor_tok)
        label = self.string() if self.tok.kind == "string" else ""
        mm = anchor.graph.metamodel
        if kw.text == "nac":
            b = _Builder(mm, True, anchor.graph)
            self.block(b)
            _, premise = b.finish()
            return AtomicConstraint(anchor.name, premise, (), label, kw.span)
        self.expect("{")
        self.expect("premise")
        b = _Builder(mm, True, anchor.graph)
        self.block(b)
        x, premise = b.finish()
        consequences = []
        while self.accept("consequence"):
            cb = _Builder(mm, True, x)
            self.block(cb)
            consequences.append(cb.finish()[1])
        if not consequences:
            raise self.error("require needs at least one consequence block (use nac for a negative condition)")
        self.expect("}")
        return AtomicConstraint(anchor.name, premise, tuple(consequences), label, kw.span)

    def sync(self) -> tuple[Token, str, list[str], list[tuple[str, Token, str, Token]]]:
        kw = self.expect("sync")
        primary = self.ident("primary pattern name").text
        self.expect("with")
        secondaries = [self.ident("secondary pattern name").text]
        while self.accept(","):
            secondaries.append(self.ident("secondary pattern name").text)
        links = []
        self.expect("{")
        while not self.accept("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated sync block: expected '}'")
            left, ltok = self.ref()
            self.expect("~")
            right, rtok = self.ref()
            links.append((left, ltok, right, rtok))
        return kw, primary, secondaries, links

    def pattern_file(self, registry: Mapping[str, Pattern] | None) -> PatternFile:
        out = PatternFile()
        raw_syncs = []
        while self.tok.kind != "eof":
            if self.at("pattern"):
                p = self.pattern()
                if any(q.name == p.name for q in out.patterns):
                    raise InputError(Diagnostic(f"pattern {p.name!r} is defined twice", p.span))
                out.patterns.append(p)
            elif self.at("sync"):
                raw_syncs.append(self.sync())
            else:
                raise self.error(f"expected 'pattern' or 'sync', found {self.describe(self.tok)}")
        known = dict(registry or {})
        known.update({p.name: p for p in out.patterns})
        for kw, primary, secondaries, links in raw_syncs:
            out.syncs.append(self._resolve_sync(kw, primary, secondaries, links, known))
            out.sync_names.append(primary)
        return out

    def _resolve_sync(self, kw, primary, secondaries, links, known) -> SynchronizedPatternSet:
        def lookup(name):
            if name not in known:
                raise self.error(f"unknown pattern {name!r} in sync", kw)
            return known[name]
        prim = lookup(primary)
        secs = tuple(lookup(n) for n in secondaries)
        out_links = []
        for left, ltok, right, rtok in links:
            lpart, _, lnode = left.partition(".")
            rpart, _, rnode = right.partition(".")
            if not lnode or not rnode:
                raise self.error("sync links have the form part.node ~ part.node", ltok)
            if not prim.has_part(lpart):
                raise self.error(f"{prim.name} has no part {lpart!r}", ltok)
            idx = next((i for i, s in enumerate(secs) if s.has_part(rpart)), None)
            if idx is None:
                raise self.error(f"no secondary pattern has a part {rpart!r}", rtok)
            out_links.append(SyncLink(lpart, lnode, idx, rpart, rnode, ltok.span))
        s = SynchronizedPatternSet(prim, secs, tuple(out_links))
        problems = errors(validate_sync(s))
        if problems:
            raise InputError([Diagnostic(f"{v.code}: {v.subject}: {v.message}", v.span or kw.span) for v in problems])
        return s

    # models --------------------------------------------------------------------
    def model(self) -> ModelDocument:
        mm = CLASSDIAGRAM
        name = ""
        if self.accept("model"):
            name = self.ident("model name").text if self.tok.kind == "ident" and self.tok.text != "metamodel" else ""
        if self.at("metamodel"):
            self.advance()
            mt = self.ident("metamodel name")
            if mt.text not in METAMODELS:
                raise self.error(f"unknown metamodel {mt.text!r} (known: {', '.join(METAMODELS)})", mt)
            mm = METAMODELS[mt.text]
        b = _Builder(mm, False)
        while self.tok.kind != "eof":
            if self.at("where"):
                raise self.error("models cannot carry 'where' conditions")
            self.element(b)
        g, _ = b.finish()
        problems = validate_graph(g)
        if problems:
            fallback = SourceSpan(self.file, 1, 1)
            raise InputError([Diagnostic(f"{v.code}: {v.message}", b.spans.get(v.subject, fallback))
                              for v in problems])
        return ModelDocument(mm.name, g, dict(b.spans), name)


def _violations_to_error(p: Pattern, report, file: str) -> InputError:
    fallback = p.span or SourceSpan(file, 1, 1)
    return InputError([Diagnostic(f"{v.code}: {v.subject}: {v.message}", v.span or fallback) for v in report])


def parse_pattern_file(text: str, file: str = "<input>", *, validate: bool = True,
                       registry: Mapping[str, Pattern] | None = None) -> PatternFile:
    """Parse every pattern and sync block of a ``.pat`` document."""
    pf = _Parser(text, file).pattern_file(registry)
    pf.source = text
    if validate:
        for p in pf.patterns:
            bad = errors(validate_pattern(p))
            if bad:
                raise _violations_to_error(p, bad, file)
    return pf


def parse_pattern(text: str, file: str = "<input>", *, validate: bool = True) -> Pattern:
    """Parse a document holding one pattern (further patterns and syncs are allowed and ignored)."""
    pf = parse_pattern_file(text, file, validate=validate)
    if not pf.patterns:
        raise InputError(Diagnostic("no pattern defined", SourceSpan(file, 1, 1)))
    return pf.patterns[0]


def parse_model(text: str, file: str = "<input>") -> ModelDocument:
    return _Parser(text, file).model()


def load_model(path) -> ModelDocument:
    from pathlib import Path
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise InputError(Diagnostic(f"not valid UTF-8: {exc.reason}", SourceSpan(str(path), 1, 1))) from None
    return parse_model(text, str(path))


# --------------------------------------------------------------------------
# Printing


def _fmt_value(v: Value) -> str:
    if isinstance(v, Var):
        return v.name
    if isinstance(v.value, bool):
        return "true" if v.value else "false"
    if isinstance(v.value, int):
        return str(v.value)
    return json.dumps(v.value, ensure_ascii=False)


def _fmt_node(n: Node, ident: str, role: str | None) -> str:
    attrs = ", ".join(f"{a}: {_fmt_value(v)}" for a, v in n.attrs.items())
    r = f" <<{role}>>" if role else ""
    return f"node {n.type} {ident}{r} {{ {attrs} }}"


def _fmt_edge(e: Edge, ids: Mapping[str, str]) -> str:
    label = f" {json.dumps(e.label, ensure_ascii=False)}" if e.label else ""
    return f"edge {e.type} {ids[e.source]} -> {ids[e.target]}{label}"


def _fmt_atom(a: Atom) -> str:
    return f"where {_fmt_value(a.left)} {a.op} {_fmt_value(a.right)}"


class _Ids:
    """Printable identifiers, unique across one document."""

    def __init__(self):
        self.taken: set[str] = set()

    def fresh(self, raw: str) -> str:
        parts = [re.sub(r"[^A-Za-z0-9_]", "_", p) or "_" for p in raw.split(".")]
        parts = [p if re.match(r"[A-Za-z_]", p) else f"n{p}" for p in parts]
        base = ".".join(parts)
        out, k = base, 1
        while out in self.taken:
            k += 1
            out = f"{base}_{k}"
        self.taken.add(out)
        return out


def _extension_lines(base: TypedGraph | None, emb: GraphMorphism | None, g: TypedGraph, roles: Mapping[str, str],
                     base_ids: Mapping[str, str], ids: _Ids) -> tuple[list[str], dict[str, str]]:
    """Statements turning ``base`` (via ``emb``) into ``g``; returns them and ``g``'s printed ids."""
    lines: list[str] = []
    local: dict[str, str] = {}
    if emb is not None:
        for n, m in emb.node_map.items():
            local[m] = base_ids[n]
        for x, v in emb.var_subst.items():
            if isinstance(v, Var) and v.name == x:
                continue
            slot = next(((n, a) for n, node in base.nodes.items() for a, w in node.attrs.items()
                         if isinstance(w, Var) and w.name == x), None)
            if slot is not None:
                lines.append(f"set {base_ids[slot[0]]}.{slot[1]} = {_fmt_value(v)}")
    image_edges = set(emb.edge_map.values()) if emb else set()
    for n, node in g.nodes.items():
        if n in local:
            continue
        local[n] = ids.fresh(n)
        lines.append(_fmt_node(node, local[n], roles.get(n)))
    for e, edge in g.edges.items():
        if e not in image_edges:
            lines.append(_fmt_edge(edge, local))
    inherited = set()
    if base is not None and emb is not None:
        inherited = {a.substitute(emb.apply) for a in base.atoms}
    for a in g.atoms:
        if a not in inherited:
            lines.append(_fmt_atom(a))
    return lines, local


def _block(head: str, lines: list[str], indent: str) -> list[str]:
    return [f"{indent}{head} {{"] + [f"{indent}  {l}" for l in lines] + [f"{indent}}}"]


def format_pattern(p: Pattern) -> str:
    """Pretty-print ``p`` in the explicit ``node``/``edge`` form; re-parsing yields an isomorphic pattern."""
    out = [f"pattern {p.name} {{"]
    if p.title:
        out.append(f"  title {json.dumps(p.title, ensure_ascii=False)}")
    if p.intent:
        out.append(f"  intent {json.dumps(p.intent, ensure_ascii=False)}")
    if p.metamodel.name != CLASSDIAGRAM.name:
        out.append(f"  metamodel {p.metamodel.name}")
    if p.roles:
        out.append(f"  roles {', '.join(p.roles)}")
    ids = _Ids()
    printed: dict[str, dict[str, str]] = {}
    for q in p.parts:
        base = p.part(q.parent).graph if q.parent else None
        lines, local = _extension_lines(base, q.embedding, q.graph, q.role_labels,
                                        printed.get(q.parent, {}), ids)
        printed[q.name] = local
        head = "root" if q.parent is None else f"part {q.name} in {q.parent}"
        out.extend(_block(head, lines, "  "))
    if p.equations.relations:
        out.append(f"  equations {p.equations}")
    for c in p.constraints:
        anchor = p.part(c.anchor)
        label = f" {json.dumps(c.label, ensure_ascii=False)}" if c.label else ""
        xlines, xids = _extension_lines(anchor.graph, c.premise, c.premise.target, {}, printed[c.anchor], ids)
        if c.is_nac:
            out.extend(_block(f"nac {c.anchor}{label}", xlines, "  "))
            continue
        body = _block("premise", xlines, "")
        for cons in c.consequences:
            clines, _ = _extension_lines(c.premise.target, cons, cons.target, {}, xids, ids)
            body.extend(_block("consequence", clines, ""))
        out.extend(_block(f"require {c.anchor}{label}", body, "  "))
    out.append("}")
    return "\n".join(out) + "\n"


def format_sync(s: SynchronizedPatternSet) -> str:
    names = ", ".join(sec.name for sec in s.secondaries)
    lines = [f"sync {s.primary.name} with {names} {{"]
    for l in s.links:
        lines.append(f"  {l.primary_part}.{l.primary_node} ~ {l.secondary_part}.{l.secondary_node}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_model(g: TypedGraph, roles: Mapping[str, str] | None = None) -> str:
    """Print a ground graph in the model format with identifier-safe ids."""
    for n in g.nodes.values():
        for a, v in n.attrs.items():
            if isinstance(v, Var):
                raise ValueError(f"{n.id}.{a} holds variable {v.name}; ground the graph first")
    ids = _Ids()
    local = {n: ids.fresh(n) for n in g.nodes}
    lines = [f"metamodel {g.metamodel.name}"]
    lines.extend(_fmt_node(node, local[n], (roles or {}).get(n)) for n, node in g.nodes.items())
    lines.extend(_fmt_edge(e, local) for e in g.edges.values())
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Grounding a symbolic graph into a model


def ground(g: TypedGraph) -> tuple[TypedGraph, dict[str, Const]]:
    """Replace variables by constants that satisfy the graph's atoms.

    Variables related by ``=`` share a value; strings become the (sanitised)
    variable name, booleans ``false``, enumerations their first literal and
    integers the least values meeting the ordering atoms.
    """
    uf = _UnionFind()
    sorts = g.variables()
    for v in sorts:
        uf.find(v)
    fixed: dict[str, Const] = {}
    for a in g.atoms:
        if a.op != "=":
            continue
        l, r = a.left, a.right
        if isinstance(l, Var) and isinstance(r, Var):
            uf.union(l.name, r.name)
        elif isinstance(l, Var) and isinstance(r, Const):
            fixed[l.name] = r
        elif isinstance(r, Var) and isinstance(l, Const):
            fixed[r.name] = l
    rep_value: dict[str, Const] = {}
    for v, c in fixed.items():
        rep_value.setdefault(uf.find(v), c)
    mm_sorts = g.metamodel.sorts
    values: dict[str, Const] = {}
    ints: list[str] = []
    for v in sorted(sorts):
        rep = uf.find(v)
        sort = mm_sorts[sorts[v]]
        if rep in rep_value:
            values[v] = Const(sort.name, rep_value[rep].value)
        elif sort.kind == "string":
            values[v] = Const(sort.name, re.sub(r"[^A-Za-z0-9_]", "_", rep))
        elif sort.kind == "boolean":
            values[v] = Const(sort.name, False)
        elif sort.kind == "enum":
            values[v] = Const(sort.name, sort.values[0])
        else:
            ints.append(v)
    int_val = {v: max(0, mm_sorts[sorts[v]].minimum or 0) for v in ints}
    for v in ints:
        rep = uf.find(v)
        if rep in rep_value:
            int_val[v] = rep_value[rep].value
    for _ in range(len(ints) * max(1, len(g.atoms)) + 1):
        changed = False
        for a in g.atoms:
            a = a.normalized()
            if a.op not in ("<", "<=", "="):
                continue
            lv = int_val.get(a.left.name) if isinstance(a.left, Var) else a.left.value
            rv = int_val.get(a.right.name) if isinstance(a.right, Var) else a.right.value
            if lv is None or rv is None or not isinstance(lv, int) or not isinstance(rv, int):
                continue
            need = lv + 1 if a.op == "<" else lv
            if rv < need and isinstance(a.right, Var):
                for v in ints:
                    if uf.find(v) == uf.find(a.right.name):
                        int_val[v] = need
                changed = True
        if not changed:
            break
    for v in ints:
        values[v] = Const(sorts[v], int_val[v])
    ground_graph = g.substitute(lambda x: values.get(x.name, x) if isinstance(x, Var) else x)
    ground_graph = TypedGraph(g.metamodel, ground_graph.nodes, ground_graph.edges, ())
    return ground_graph, values


__all__ = [
    "ModelDocument", "PatternFile", "Token", "format_model", "format_pattern", "format_sync", "ground",
    "is_variable_name", "load_model", "parse_model", "parse_pattern", "parse_pattern_file", "tokenize",
]
