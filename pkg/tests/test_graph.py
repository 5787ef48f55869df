from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import random_graph, random_matching_instance
from oracles import brute_morphisms, morphism_set, nx_isomorphic
from patternforge.graph import (
    Atom, Const, DiagramError, DiagramNode, Edge, GraphMorphism, MetamodelMismatch, Node, PushoutError,
    TypedGraph, Var, colimit_tree, combinations_disjoint, disjoint_union, find_injective_morphisms,
    find_isomorphism, is_isomorphic, pushout, relabel, validate_graph,
)
from patternforge.metamodels import CLASSDIAGRAM, COLLABORATION


def cls(i, name, abstract=False):
    return Node(i, "Class", {"name": name if isinstance(name, Var) else Const("string", name),
                             "abstract": Const("boolean", abstract)})


def graph(nodes, edges=(), atoms=()):
    return TypedGraph.build(CLASSDIAGRAM, nodes, edges, atoms)


def test_atom_ground_evaluation():
    assert Atom(Const("integer", 1), "<", Const("integer", 2)).holds()
    assert not Atom(Const("string", "a"), "=", Const("string", "b")).holds()
    assert Atom(Const("string", "a"), "!=", Const("string", "b")).holds()
    assert not Atom(Const("string", "a"), "<", Const("integer", 1)).holds()


def test_atom_normalization_flips_and_orders():
    x, y = Var("X", "integer"), Var("Y", "integer")
    assert Atom(x, ">", y).normalized() == Atom(y, "<", x)
    assert Atom(y, "!=", x).normalized() == Atom(x, "!=", y).normalized()


def test_unknown_relation_rejected():
    with pytest.raises(ValueError):
        Atom(Const("integer", 1), "~", Const("integer", 1))


def test_entailment_is_syntactic_after_normalization():
    x, y = Var("X", "string"), Var("Y", "string")
    g = graph([cls("a", x), cls("b", y)], atoms=[Atom(x, "!=", y)])
    assert g.entails(Atom(y, "!=", x))
    assert g.entails(Atom(x, "=", x))
    assert not g.entails(Atom(x, "=", y))


def test_validate_graph_reports_typing_errors():
    bad = TypedGraph.build(CLASSDIAGRAM, [cls("a", "A"), Node("n", "Note", {"text": Const("string", "")})],
                           [Edge("e", "inherits", "a", "n"), Edge("f", "assoc", "a", "missing")])
    codes = {v.code for v in validate_graph(bad)}
    assert codes, "violations expected"
    assert len(validate_graph(bad)) >= 2


def test_validate_graph_rejects_negative_natural():
    g = TypedGraph.build(COLLABORATION, [Node("m", "Message", {"op_name": Const("string", "x"),
                                                                "order": Const("integer", -1)})])
    assert validate_graph(g)


def test_valid_graph_has_no_violations():
    assert validate_graph(graph([cls("a", "A"), cls("b", "B")], [Edge("e", "inherits", "a", "b")])) == []


def test_morphism_respects_types_and_attributes():
    x = Var("X", "string")
    pat = graph([cls("p", x), cls("q", x)], [Edge("e", "assoc", "p", "q")])
    host = graph([cls("a", "A"), cls("b", "A"), cls("c", "C")],
                 [Edge("ab", "assoc", "a", "b"), Edge("ac", "assoc", "a", "c")])
    ms = find_injective_morphisms(pat, host)
    assert [(m.node_map, m.var_subst) for m in ms] == [({"p": "a", "q": "b"}, {"X": Const("string", "A")})]
    assert all(m.is_injective() and not m.problems() for m in ms)


def test_morphisms_are_injective_on_nodes():
    pat = graph([cls("p", Var("X", "string")), cls("q", Var("Y", "string"))])
    host = graph([cls("a", "A")])
    assert find_injective_morphisms(pat, host) == []


def test_parallel_edges_need_distinct_images():
    pat = graph([cls("p", "A"), cls("q", "B")], [Edge("e1", "assoc", "p", "q"), Edge("e2", "assoc", "p", "q")])
    one = graph([cls("a", "A"), cls("b", "B")], [Edge("x", "assoc", "a", "b")])
    two = graph([cls("a", "A"), cls("b", "B")], [Edge("x", "assoc", "a", "b"), Edge("y", "assoc", "a", "b")])
    assert find_injective_morphisms(pat, one) == []
    assert len(find_injective_morphisms(pat, two)) == 2


def test_seeded_matching_extends_the_seed():
    pat = graph([cls("p", Var("X", "string"))])
    host = graph([cls("a", "A"), cls("b", "B")])
    ms = find_injective_morphisms(pat, host, node_seed={"p": "b"})
    assert [m.node_map for m in ms] == [{"p": "b"}]
    assert find_injective_morphisms(pat, host, var_seed={"X": Const("string", "A")})[0].node_map == {"p": "a"}


def test_results_sorted_by_node_map():
    pat = graph([cls("p", Var("X", "string"))])
    host = graph([cls(c, c.upper()) for c in "cab"])
    assert [m.node_map["p"] for m in find_injective_morphisms(pat, host)] == ["a", "b", "c"]


def test_atoms_filter_matches():
    x, y = Var("X", "string"), Var("Y", "string")
    pat = graph([cls("p", x), cls("q", y)], atoms=[Atom(x, "!=", y)])
    host = graph([cls("a", "A"), cls("b", "A"), cls("c", "C")])
    for m in find_injective_morphisms(pat, host):
        assert m.var_subst["X"] != m.var_subst["Y"]
    assert len(find_injective_morphisms(pat, host)) == 4


def test_compose_and_image():
    g = graph([cls("a", "A")])
    ident = GraphMorphism.identity(g)
    assert ident.compose(ident).node_map == {"a": "a"}
    assert ident.image() == frozenset({("n", "a")})


@pytest.mark.parametrize("seed", range(40))
def test_matching_agrees_with_exhaustive_search(seed):
    pat, host = random_matching_instance(random.Random(seed))
    assert morphism_set(find_injective_morphisms(pat, host)) == brute_morphisms(pat, host)


def test_pushout_glues_along_interface():
    k = graph([cls("k", Var("X", "string"))])
    l = graph([cls("k", Var("X", "string")), cls("l", "L")], [Edge("kl", "assoc", "k", "l")])
    r = graph([cls("k", Var("X", "string")), cls("r", "R")], [Edge("kr", "assoc", "r", "k")])
    leg = lambda tgt: GraphMorphism(k, tgt, {"k": "k"}, {}, {"X": Var("X", "string")})
    p, ml, mr = pushout(leg(l), leg(r))
    assert len(p.nodes) == 3 and len(p.edges) == 2
    assert ml.node_map["k"] == mr.node_map["k"]
    assert not ml.problems() and not mr.problems()


def test_pushout_constant_clash_raises():
    k = graph([cls("k", Var("X", "string"))])
    l = graph([cls("k", "A")])
    r = graph([cls("k", "B")])
    with pytest.raises(PushoutError):
        pushout(GraphMorphism(k, l, {"k": "k"}, {}, {"X": Const("string", "A")}),
                GraphMorphism(k, r, {"k": "k"}, {}, {"X": Const("string", "B")}))


def test_disjoint_union_primes_clashes():
    g = graph([cls("a", Var("X", "string"))])
    u, i1, i2 = disjoint_union(g, g)
    assert len(u.nodes) == 2 and len(u.variables()) == 2
    assert i1.node_map["a"] != i2.node_map["a"]


def test_metamodel_mismatch():
    with pytest.raises(MetamodelMismatch):
        disjoint_union(graph([cls("a", "A")]), TypedGraph.empty(COLLABORATION))


def test_colimit_tree_ids_and_private_variables():
    root = graph([cls("r", Var("X", "string"))])
    child = graph([cls("r", Var("X", "string")), cls("c", Var("Y", "string"))], [Edge("e", "inherits", "c", "r")])
    emb = GraphMorphism(root, child, {"r": "r"}, {}, {"X": Var("X", "string")})
    tree = DiagramNode("R#0", root, None, [DiagramNode("c#0", child, emb), DiagramNode("c#1", child, emb)])
    g, inj = colimit_tree(tree)
    assert sorted(g.nodes) == ["R#0.r", "c#0.c", "c#1.c"]
    assert sorted(g.variables()) == ["X", "Y@c#0", "Y@c#1"]
    assert inj["c#1"].node_map == {"r": "R#0.r", "c": "c#1.c"}


def test_colimit_tree_rejects_repeated_keys():
    root = graph([cls("r", "A")])
    ident = GraphMorphism.identity(root)
    with pytest.raises(DiagramError):
        colimit_tree(DiagramNode("k", root, None, [DiagramNode("k", root, ident)]))


def test_isomorphism_detects_renaming():
    g = random_graph(random.Random(3), 4, variables=True)
    h, _ = relabel(g, lambda i: "z" + i)
    assert is_isomorphic(g, h) and nx_isomorphic(g, h)
    assert find_isomorphism(g, graph([])) is None or not g.nodes


def test_combinations_disjoint():
    items = [{1, 2}, {2, 3}, {3, 4}, {5}]
    got = list(combinations_disjoint(items, 2, key=frozenset))
    assert ({1, 2}, {3, 4}) in got and ({1, 2}, {2, 3}) not in got
    assert all(a.isdisjoint(b) for a, b in got)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_every_found_morphism_is_a_valid_injective_morphism(seed):
    pat, host = random_matching_instance(random.Random(seed))
    for m in find_injective_morphisms(pat, host):
        assert m.is_injective()
        assert m.problems() == []
