"""Serialization of occurrences and annotations.

The JSON document is ``{"occurrences": [{"pattern", "assignment", "bindings":
[{"element", "role", "part", "replica"}]}]}`` with keys in exactly that order.
"""

from __future__ import annotations

import json
from typing import Iterable, Sequence

from .matcher import Annotation, Occurrence, RoleBinding


def _as_annotation(x: Occurrence | Annotation) -> Annotation:
    if isinstance(x, Annotation):
        return x
    return Annotation(x.pattern_name, dict(x.assignment), tuple(x.role_bindings))


def _binding_key(b: RoleBinding) -> tuple:
    return (b.part, b.replica, b.role, b.element)


def occurrence_record(x: Occurrence | Annotation) -> dict:
    a = _as_annotation(x)
    return {
        "pattern": a.pattern,
        "assignment": {k: int(v) for k, v in a.assignment.items()},
        "bindings": [
            {"element": b.element, "role": b.role, "part": b.part, "replica": b.replica}
            for b in sorted(a.bindings, key=_binding_key)
        ],
    }


def dumps(obj, pretty: bool = False) -> str:
    if pretty:
        return json.dumps(obj, indent=2, ensure_ascii=False)
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def serialize_occurrences(occs: Sequence[Occurrence | Annotation], format: str = "json", *,
                          pretty: bool = False) -> str:
    """Render occurrences as the annotation JSON document or as a role table."""
    if format == "json":
        return dumps({"occurrences": [occurrence_record(o) for o in occs]}, pretty)
    if format == "table":
        return format_table(occs)
    raise ValueError(f"unknown format {format!r}")


def format_table(occs: Sequence[Occurrence | Annotation]) -> str:
    if not occs:
        return "no occurrences"
    blocks = []
    for i, x in enumerate(occs, 1):
        a = _as_annotation(x)
        counts = ", ".join(f"{k}={v}" for k, v in a.assignment.items()) or "-"
        rows = sorted(a.bindings, key=_binding_key)
        w_el = max((len(b.element) for b in rows), default=7)
        w_role = max((len(b.role) for b in rows), default=4)
        lines = [f"#{i} {a.pattern}  [{counts}]"]
        lines.extend(f"  {b.element:<{w_el}}  {b.role:<{w_role}}  {b.part}#{b.replica}" for b in rows)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


class ReportError(ValueError):
    pass


def load_occurrences(text: str) -> list[Annotation]:
    """Parse an annotation document back into annotations."""
    try:
        doc = json.loads(text)
        out = []
        for rec in doc["occurrences"]:
            bindings = tuple(RoleBinding(str(b["element"]), str(b["role"]), str(b["part"]), int(b["replica"]))
                             for b in rec["bindings"])
            out.append(Annotation(str(rec["pattern"]), {str(k): int(v) for k, v in rec["assignment"].items()},
                                  bindings))
        return out
    except (ValueError, KeyError, TypeError) as exc:
        raise ReportError(f"not an annotation document: {exc}") from None


def binding_multiset(annotations: Iterable[Annotation]) -> list[tuple]:
    return sorted((a.pattern, b.element, b.role, b.part, b.replica) for a in annotations for b in a.bindings)


__all__ = [
    "ReportError", "binding_multiset", "dumps", "format_table", "load_occurrences", "occurrence_record",
    "serialize_occurrences",
]
