"""The two shipped metamodels: class diagrams and collaborations."""

from __future__ import annotations

from .graph import BOOLEAN, NATURAL, STRING, EdgeType, Metamodel, NodeType, Sort

VISIBILITY = Sort("visibility", "enum", ("public", "private", "protected"))

CLASSDIAGRAM = Metamodel(
    "classdiagram",
    (
        NodeType("Class", (("name", STRING), ("abstract", BOOLEAN))),
        NodeType("Operation", (("name", STRING), ("abstract", BOOLEAN), ("visibility", VISIBILITY),
                               ("static", BOOLEAN))),
        NodeType("Attribute", (("name", STRING), ("visibility", VISIBILITY), ("static", BOOLEAN))),
        NodeType("Note", (("text", STRING),)),
    ),
    (
        EdgeType("inherits", "Class", "Class"),
        EdgeType("assoc", "Class", "Class"),
        EdgeType("aggregates", "Class", "Class"),
        EdgeType("creates", "Class", "Class"),
        EdgeType("owns_op", "Class", "Operation"),
        EdgeType("owns_attr", "Class", "Attribute"),
        EdgeType("annotates", "Note", "Operation"),
    ),
)

COLLABORATION = Metamodel(
    "collaboration",
    (
        NodeType("Lifeline", (("name", STRING),)),
        NodeType("Message", (("op_name", STRING), ("order", NATURAL))),
    ),
    (
        EdgeType("sends", "Lifeline", "Message"),
        EdgeType("receives", "Message", "Lifeline"),
        EdgeType("next", "Message", "Message"),
    ),
)

METAMODELS = {m.name: m for m in (CLASSDIAGRAM, COLLABORATION)}

__all__ = ["CLASSDIAGRAM", "COLLABORATION", "METAMODELS", "VISIBILITY"]
