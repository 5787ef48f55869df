"""The shipped pattern catalog: one ``.pat`` file per structural pattern,
grouped into entries by display title."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .counts import EquationSystem
from .diagnostics import Diagnostic, InputError, SourceSpan
from .dsl import parse_pattern_file
from .pattern import Pattern, SynchronizedPatternSet, errors, validate_pattern

CATALOG_ENV = "PATTERNFORGE_CATALOG"
DERIVED_MARKER = "# derived from GoF94"
CATALOG_BOUND = 2


def default_catalog_dir() -> Path:
    env = os.environ.get(CATALOG_ENV)
    return Path(env) if env else Path(__file__).parent / "catalog"


def default_fixtures_dir() -> Path:
    return Path(__file__).parent / "fixtures"


def slug(title: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", title.lower()).strip("_")


@dataclass
class CatalogEntry:
    """One named pattern; Adapter is the single entry with two variants."""

    name: str
    intent: str
    paths: tuple[Path, ...]
    patterns: tuple[Pattern, ...]
    syncs: tuple[SynchronizedPatternSet, ...] = ()
    derived_equations: bool = False
    secondaries: tuple[Pattern, ...] = field(default=())

    @property
    def slug(self) -> str:
        return slug(self.name)

    @property
    def pattern(self) -> Pattern:
        return self.patterns[0]

    @property
    def path(self) -> Path:
        return self.paths[0]

    @property
    def equations(self) -> str:
        return str(self.pattern.equations)

    @property
    def has_collaboration(self) -> bool:
        return bool(self.syncs)

    def sync_for(self, pattern_name: str) -> SynchronizedPatternSet | None:
        return next((s for s in self.syncs if s.primary.name == pattern_name), None)


@dataclass
class Catalog:
    entries: list[CatalogEntry]
    directory: Path

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def patterns(self) -> list[Pattern]:
        """Every structural pattern (both Adapter variants), in catalog order."""
        return [p for e in self.entries for p in e.patterns]

    def entry(self, name: str) -> CatalogEntry:
        """Look up by entry title, slug or pattern name (case-insensitive)."""
        key = name.lower()
        for e in self.entries:
            if key in (e.name.lower(), e.slug, e.slug.replace("_", "")) or any(p.name.lower() == key for p in e.patterns):
                return e
        raise KeyError(name)

    def find_pattern(self, name: str) -> Pattern:
        key = name.lower()
        for e in self.entries:
            for p in e.patterns + e.secondaries:
                if p.name.lower() == key:
                    return p
        return self.entry(name).pattern

    def sync_for(self, pattern_name: str) -> SynchronizedPatternSet | None:
        for e in self.entries:
            s = e.sync_for(pattern_name)
            if s is not None:
                return s
        return None


def load_catalog(directory: str | Path | None = None, *, bound: int = CATALOG_BOUND) -> Catalog:
    """Parse and validate every ``.pat`` file of ``directory``.

    The first pattern of a file is structural; further patterns in the same
    file are collaborations referenced by its ``sync`` blocks. Entries are
    ordered by title.
    """
    directory = Path(directory) if directory is not None else default_catalog_dir()
    files = sorted(directory.glob("*.pat"))
    if not files:
        raise InputError(Diagnostic(f"no .pat files in {directory}", SourceSpan(str(directory), 1, 1)))
    grouped: dict[str, list] = {}
    for path in files:
        text = path.read_text(encoding="utf-8")
        pf = parse_pattern_file(text, str(path))
        if not pf.patterns:
            raise InputError(Diagnostic("catalog file defines no pattern", SourceSpan(str(path), 1, 1)))
        primary = pf.patterns[0]
        for p in pf.patterns:
            report = validate_pattern(p, bound)
            bad = errors(report) + [v for v in report if v.code == "infeasible-within-bound"]
            if bad:
                raise InputError([Diagnostic(f"{v.code}: {v.subject}: {v.message}", v.span or p.span or
                                             SourceSpan(str(path), 1, 1)) for v in bad])
        title = primary.display_name()
        grouped.setdefault(title, []).append((path, pf, DERIVED_MARKER in _equations_line(text)))
    entries = []
    for title in sorted(grouped):
        items = grouped[title]
        intents = {pf.patterns[0].intent for _, pf, _ in items}
        if len(intents) != 1:
            raise InputError(Diagnostic(f"variants of {title!r} disagree on the intent",
                                        SourceSpan(str(items[1][0]), 1, 1)))
        entries.append(CatalogEntry(
            name=title,
            intent=intents.pop(),
            paths=tuple(path for path, _, _ in items),
            patterns=tuple(pf.patterns[0] for _, pf, _ in items),
            syncs=tuple(s for _, pf, _ in items for s in pf.syncs),
            derived_equations=any(d for _, _, d in items),
            secondaries=tuple(p for _, pf, _ in items for p in pf.patterns[1:]),
        ))
    return Catalog(entries, directory)


def _equations_line(text: str) -> str:
    return "\n".join(line for line in text.splitlines() if line.strip().startswith("equations"))


def normalize_equations(text: str) -> str:
    """Whitespace-free form used to compare equation strings."""
    return re.sub(r"\s+", "", text)


def equation_string(system: EquationSystem) -> str:
    return str(system)


__all__ = [
    "CATALOG_ENV", "Catalog", "CatalogEntry", "DERIVED_MARKER", "default_catalog_dir", "default_fixtures_dir",
    "load_catalog", "normalize_equations", "slug",
]
