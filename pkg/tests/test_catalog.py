from __future__ import annotations

import shutil

import pytest

from conftest import CATALOG_DIR, FIXTURES, model
from patternforge.catalog import CATALOG_ENV, DERIVED_MARKER, default_catalog_dir, load_catalog, slug
from patternforge.diagnostics import InputError
from patternforge.matcher import MatchConfig, satisfies
from patternforge.pattern import validate_pattern

DERIVED = {"Adapter", "Bridge", "Iterator", "Mediator", "Memento", "Observer", "Visitor"}


def test_catalog_size(catalog):
    assert len(catalog) == 23
    assert len(catalog.patterns()) == 24
    assert [e.name for e in catalog] == sorted(e.name for e in catalog)


def test_adapter_has_two_variants(catalog):
    adapter = catalog.entry("Adapter")
    assert [p.name for p in adapter.patterns] == ["ClassAdapter", "ObjectAdapter"]
    assert catalog.entry("ObjectAdapter") is adapter


def test_derived_equations_are_marked(catalog):
    assert {e.name for e in catalog if e.derived_equations} == DERIVED
    for e in catalog:
        for path in e.paths:
            line = next(l for l in path.read_text(encoding="utf-8").splitlines() if l.strip().startswith("equations"))
            assert (DERIVED_MARKER in line) == (e.name in DERIVED), path.name


def test_every_pattern_is_valid(catalog):
    for e in catalog:
        for p in e.patterns + e.secondaries:
            assert validate_pattern(p, 3) == [], p.name
            assert p.roles, p.name
        assert all(p.intent for p in e.patterns), e.name


def test_intents_are_distinct(catalog):
    intents = [e.intent for e in catalog]
    assert len(set(intents)) == len(intents)


def test_collaborations(catalog):
    assert {e.name for e in catalog if e.has_collaboration} == {"Command", "Observer", "Proxy"}
    assert catalog.sync_for("Observer").secondaries[0].name == "ObserverCollaboration"
    assert catalog.sync_for("Composite") is None


def test_lookup_by_title_slug_and_name(catalog):
    assert catalog.entry("chain of responsibility") is catalog.entry("chain_of_responsibility")
    assert catalog.entry("ChainOfResponsibility").slug == "chain_of_responsibility"
    assert catalog.find_pattern("ObserverCollaboration").metamodel.name == "collaboration"
    with pytest.raises(KeyError):
        catalog.entry("Nonexistent")


def test_slug():
    assert slug("Template Method") == "template_method"


def test_every_entry_has_fixture_pair(catalog):
    for e in catalog:
        for kind in ("positive", "negative"):
            assert (FIXTURES / e.slug / f"{kind}.model").is_file(), e.slug
        first = (FIXTURES / e.slug / "negative.model").read_text(encoding="utf-8").splitlines()[0]
        assert first.startswith("# Breaking edit:"), e.slug


@pytest.mark.parametrize("slug_", sorted(p.name for p in FIXTURES.iterdir() if p.name != "misc"))
def test_fixture_verdicts(catalog, slug_):
    entry = catalog.entry(slug_)
    cfg = MatchConfig(3, mode="satisfy")
    assert any(satisfies(model(slug_, "positive"), p, cfg)[0] for p in entry.patterns)
    assert not any(satisfies(model(slug_, "negative"), p, cfg)[0] for p in entry.patterns)


def test_env_var_selects_catalog(tmp_path, monkeypatch):
    shutil.copy(CATALOG_DIR / "singleton.pat", tmp_path)
    monkeypatch.setenv(CATALOG_ENV, str(tmp_path))
    assert default_catalog_dir() == tmp_path
    assert [e.name for e in load_catalog()] == ["Singleton"]


def test_broken_catalog_rejected(tmp_path):
    (tmp_path / "bad.pat").write_text("pattern Bad { root { class C } equations Bad>=0, nope>0 }\n")
    with pytest.raises(InputError) as err:
        load_catalog(tmp_path)
    assert err.value.diagnostics[0].span.file.endswith("bad.pat")


def test_empty_catalog_rejected(tmp_path):
    with pytest.raises(InputError):
        load_catalog(tmp_path)


def test_infeasible_within_bound_rejected(tmp_path):
    (tmp_path / "big.pat").write_text(
        "pattern Big { root { class C } part xs in Big { class D } equations Big>=0, xs>5 }\n")
    with pytest.raises(InputError):
        load_catalog(tmp_path, bound=2)
