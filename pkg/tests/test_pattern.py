from __future__ import annotations

import pytest

from patternforge.dsl import parse_pattern, parse_pattern_file
from patternforge.diagnostics import InputError
from patternforge.pattern import SyncError, errors, joint_equation_system, list_roles, validate_pattern, validate_sync

COMPOSITE = """
pattern Composite {
  roles Component, Composite, Leaf, Operation
  root {
    class Component abstract <<Component>>
    class Composite <<Composite>>
    edge inherits Composite -> Component
    edge aggregates Composite -> Component
  }
  part operations in Composite {
    class Component { ops: abstract Operation() <<Operation>> }
    class Composite { ops: Operation() }
  }
  part leaves in Composite {
    class Leaf <<Leaf>>
    edge inherits Leaf -> Component
  }
  equations Composite>=0, operations>0, leaves>0
}
"""


def codes(p, bound=8):
    return {v.code for v in validate_pattern(p, bound)}


def test_composite_is_valid():
    p = parse_pattern(COMPOSITE)
    assert validate_pattern(p) == []
    assert [q.name for q in p.parts] == ["Composite", "operations", "leaves"]
    assert p.root_variable == "Composite"
    assert list_roles(p) == ["Component", "Composite", "Leaf", "Operation"]


def test_part_system_excludes_root_relations():
    p = parse_pattern(COMPOSITE)
    assert str(p.part_system()) == "operations>0, leaves>0"
    assert [str(r) for r in p.root_relations()] == ["Composite>=0"]


def test_unmentioned_part_is_a_free_variable():
    p = parse_pattern(COMPOSITE.replace("operations>0, ", ""))
    assert set(p.part_system().variables) == {"operations", "leaves"}


def test_new_elements_of_a_part():
    p = parse_pattern(COMPOSITE)
    assert p.part("leaves").new_nodes() == ["Leaf"]
    assert sorted(p.part("operations").new_nodes()) == ["Component.Operation", "Composite.Operation"]


def test_role_inherited_down_the_tree():
    p = parse_pattern(COMPOSITE)
    assert p.role_of("leaves", "Component") == "Component"
    assert p.role_of("leaves", "Leaf") == "Leaf"


def test_unknown_equation_variable():
    p = parse_pattern(COMPOSITE.replace("leaves>0", "leafs>0"), validate=False)
    assert "unknown-variable" in codes(p)


def test_mixed_root_relation():
    p = parse_pattern(COMPOSITE.replace("leaves>0", "leaves>Composite"), validate=False)
    assert "mixed-root-relation" in codes(p)


def test_infeasible_equations_are_errors():
    p = parse_pattern(COMPOSITE.replace("leaves>0", "leaves>0, leaves<1"), validate=False)
    assert "infeasible" in codes(p)


def test_infeasible_within_bound_is_a_warning():
    p = parse_pattern(COMPOSITE.replace("leaves>0", "leaves>4"))
    report = validate_pattern(p, 3)
    assert [v.code for v in report] == ["infeasible-within-bound"]
    assert errors(report) == []


def test_undeclared_role():
    p = parse_pattern(COMPOSITE.replace("class Leaf <<Leaf>>", "class Leaf <<Leaves>>"), validate=False)
    assert "undeclared-role" in codes(p)


def test_empty_part_rejected():
    text = COMPOSITE.replace("class Leaf <<Leaf>>\n    edge inherits Leaf -> Component", "")
    with pytest.raises(InputError):
        parse_pattern(text)


def test_duplicate_part_names():
    text = COMPOSITE.replace("part leaves in Composite", "part operations in Composite")
    p = parse_pattern(text, validate=False)
    assert "part-name-not-injective" in codes(p)


SYNC = COMPOSITE + """
pattern Paint {
  metamodel collaboration
  roles Composite, Leaf
  root { lifeline C <<Composite>> }
  part lines in Paint { lifeline L <<Leaf>> message m C -> L draw }
  equations Paint>=0, lines>0
}
sync Composite with Paint {
  Composite.Composite ~ Paint.C
  leaves.Leaf ~ lines.L
}
"""


def test_sync_joint_system():
    pf = parse_pattern_file(SYNC)
    (s,) = pf.syncs
    assert validate_sync(s) == []
    joint = joint_equation_system(s)
    assert "Composite=Paint" in str(joint) and "leaves=lines" in str(joint)


def test_sync_rejects_role_mismatch():
    with pytest.raises(InputError) as err:
        parse_pattern_file(SYNC.replace("leaves.Leaf ~ lines.L", "leaves.Leaf ~ Paint.C"))
    assert "sync-role" in str(err.value)


def test_joint_system_refuses_invalid_sync():
    pf = parse_pattern_file(SYNC)
    s = pf.syncs[0]
    bad = type(s)(s.primary, s.secondaries, (type(s.links[0])("leaves", "Leaf", 0, "lines", "nope"),))
    assert errors(validate_sync(bad))
    with pytest.raises(SyncError):
        joint_equation_system(bad)
