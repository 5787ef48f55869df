"""Deterministic corpus of malformed pattern and model files.

Every case is malformed by construction: truncation inside an open block,
an unknown keyword or edge type, an unterminated string, bad bytes, and so on.
"""
from __future__ import annotations

from pathlib import Path

from patternforge.catalog import default_catalog_dir, default_fixtures_dir
from patternforge.dsl import tokenize

HANDWRITTEN: dict[str, str | bytes] = {
    "empty.pat": "",
    "comment_only.pat": "# nothing here\n",
    "no_brace.pat": "pattern P\n",
    "unclosed_root.pat": "pattern P { root { class C }\n",
    "bad_equation.pat": "pattern P { root { class C } equations P>=0, >1 }\n",
    "unknown_part_var.pat": "pattern P { root { class C } equations P>=0, ghost>0 }\n",
    "unknown_parent.pat": "pattern P { root { class C } part x in nowhere { class D } }\n",
    "undeclared_role.pat": "pattern P { root { class C <<R>> } }\n",
    "duplicate_pattern.pat": "pattern P { root { class C } }\npattern P { root { class C } }\n",
    "bad_metamodel.pat": "pattern P { metamodel uml2 root { class C } }\n",
    "edge_unknown_node.pat": "pattern P { root { class C edge inherits C -> D } }\n",
    "edge_bad_type.pat": "pattern P { root { class C class D edge teleports C -> D } }\n",
    "nac_unknown_anchor.pat": "pattern P { root { class C } nac missing { class D } }\n",
    "sync_unknown.pat": "sync P with Q { }\n",
    "unterminated_string.pat": 'pattern P { intent "never closed\n root { class C } }\n',
    "deep_nesting.pat": "pattern P { root " + "{" * 5000 + "\n",
    "stray_symbol.pat": "pattern P { root { class C } } @\n",
    "latin1.pat": b"pattern P { intent \"caf\xe9\" root { class C } }\n",
    "nul_bytes.pat": b"\x00\x00pattern\x00",
    "unclosed_class.model": "class A {\n",
    "lone_class.model": "class\n",
    "edge_unknown_node.model": "class A\nedge inherits A -> B\n",
    "edge_bad_type.model": "class A\nedge flies A -> A\n",
    "unterminated_note.model": 'note n "unterminated\n',
    "note_on_class.model": 'class A\nnote n "x" on A\n',
    "wrong_metamodel.model": "metamodel nonsense\nclass A\n",
    "message_in_classdiagram.model": "class A\nmessage m A -> A go\n",
    "negative_order.model": "metamodel collaboration\nlifeline a\nlifeline b\nmessage m a -> b go order -1\n",
    "redeclared.model": "class A\nclass A { ops: f() }\nlifeline x\n",
    "bad_bytes.model": b"\xff\xfe\x00class A",
    "keyword_typo.model": "klass A\n",
}


def _truncate_after_brace(text: str, k: int) -> str:
    braces = [t for t in tokenize(text, "t") if (t.kind, t.value) == ("punct", "{")]
    tok = braces[k % len(braces)]
    lines = text.splitlines(keepends=True)
    offset = sum(len(l) for l in lines[: tok.span.line - 1]) + tok.span.column
    return text[:offset] + "\n"


MODEL_MUTATIONS = [
    lambda t: t + "edge warps_into A1 -> A1\n",
    lambda t: t + "class {\n",
    lambda t: t + 'note dangling "open\n',
    lambda t: t.replace("class ", "klass ", 1),
    lambda t: t + "lifeline 3x\n",
]


def build_corpus(directory: Path) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, content in HANDWRITTEN.items():
        path = directory / name
        (path.write_bytes if isinstance(content, bytes) else path.write_text)(content)
        paths.append(path)
    for i, src in enumerate(sorted(default_catalog_dir().glob("*.pat"))):
        path = directory / f"truncated_{src.stem}.pat"
        path.write_text(_truncate_after_brace(src.read_text(encoding="utf-8"), i))
        paths.append(path)
    for i, src in enumerate(sorted(default_fixtures_dir().glob("*/positive.model"))):
        path = directory / f"mutated_{src.parent.name}.model"
        path.write_text(MODEL_MUTATIONS[i % len(MODEL_MUTATIONS)](src.read_text(encoding="utf-8")))
        paths.append(path)
    return paths


def cli_args(path: Path) -> list[str]:
    if path.suffix == ".pat":
        return ["lint", str(path)]
    return ["check", str(path), "--pattern", "Composite"]
