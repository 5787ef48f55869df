"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
from __future__ import annotations

import random
import re
import subprocess
import sys
import time

import pytest

from cli_cases import CASES, golden_path, run_cli
from conftest import model
from fuzz_corpus import build_corpus, cli_args
from generators import random_assignment, random_matching_instance, random_part_tree, random_system
from oracles import (
    brute_minimal, brute_morphisms, brute_solutions, morphism_set, naive_expansion, naive_satisfies, nx_isomorphic,
)
from patternforge.counts import enumerate_solutions, minimal_solutions
from patternforge.dsl import ground
from patternforge.expansion import expand
from patternforge.graph import find_injective_morphisms
from patternforge.matcher import MatchConfig, check_constraints, check_sync, find_occurrences, satisfies

CAPTIONS = [
    "AbstractFactory>=0, factories>0, absProducts>0, factories=concProducts",
    "Builder>=0, concreteBuilders>0, parts>0",
    "ChainOfResponsibility>=0, concreteHandlers>0",
    "Command>=0, concreteCommands>0",
    "Composite>=0, operations>0, leaves>0",
    "Decorator>=0, concComps>0, concDecos>0",
    "Facade>=0, facInterface>0, subsystems>0",
    "FactoryMethod>=0, ops>0, creators>0",
    "Flyweight>=0, concFlyweights>0, unsharedFlyweights>=0",
    "Interpreter>=0, terminals>0, nonTerminals>0",
    "Prototype>=0, prototypes>0",
    "Proxy>=0, requests>0",
    "Singleton>=0",
    "State>=0, states>0",
    "Strategy>=0, strategies>0, algInterface>0",
    "TemplateMethod>=0, primOperations>0, subclasses>0",
]


@pytest.fixture
def report(capsys):
    def emit(number: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail
    return emit


def rows(sols, variables):
    return [tuple(s[v] for v in variables) for s in sols]


def test_01_caption_fidelity(catalog, report):
    misses = []
    for caption in CAPTIONS:
        name = caption.split(">=", 1)[0]
        printed = str(catalog.find_pattern(name).equations)
        if printed != caption:
            misses.append(f"{name}: {printed!r}")
    report(1, "caption fidelity", not misses, f"{len(CAPTIONS) - len(misses)}/{len(CAPTIONS)} exact {misses}")


def test_02_solver_oracle(report):
    start, mismatches = time.perf_counter(), 0
    for seed in range(200):
        variables, relations, sys_ = random_system(random.Random(seed))
        expected = brute_solutions(relations, variables, 10)
        if rows(enumerate_solutions(sys_, 10), variables) != expected:
            mismatches += 1
        elif rows(minimal_solutions(sys_, 10), variables) != brute_minimal(expected):
            mismatches += 1
    elapsed = time.perf_counter() - start
    report(2, "solver oracle", mismatches == 0 and elapsed < 10,
           f"{mismatches} mismatches over 200 systems, {elapsed:.2f}s")


def test_03_colimit_oracle(report):
    mismatches = []
    for seed in range(100):
        rng = random.Random(50_000 + seed)
        p = random_part_tree(rng, max_depth=3, max_nodes=4)
        a = random_assignment(rng, p, 3)
        if not nx_isomorphic(expand(p, a).graph, naive_expansion(p, a)):
            mismatches.append(seed)
    report(3, "colimit oracle", not mismatches, f"{len(mismatches)} mismatches over 100 part-trees {mismatches}")


def test_04_incremental_equals_naive(catalog, report):
    start, bad, checks = time.perf_counter(), [], 0
    cfg = MatchConfig(3, mode="satisfy")
    for entry in catalog:
        for kind, expected in (("positive", True), ("negative", False)):
            m = model(entry.slug, kind)
            incremental = any(satisfies(m, p, cfg)[0] for p in entry.patterns)
            naive = any(naive_satisfies(m, p, 3) for p in entry.patterns)
            checks += 1
            if not incremental == naive == expected:
                bad.append(f"{entry.slug}/{kind}")
    elapsed = time.perf_counter() - start
    report(4, "incremental vs naive satisfaction", not bad and checks == 46 and elapsed < 30,
           f"{checks - len(bad)}/{checks} agree, {elapsed:.2f}s {bad}")


def test_05_self_satisfaction(catalog, report):
    failed = []
    for entry in catalog:
        for p in entry.patterns:
            exp = expand(p, minimal_solutions(p.part_system(), 3)[0])
            g, _ = ground(exp.graph)
            if not satisfies(g, p, MatchConfig(3, mode="satisfy"))[0]:
                failed.append(p.name)
    ok_entries = sum(1 for e in catalog if not {p.name for p in e.patterns} & set(failed))
    report(5, "self-satisfaction", not failed, f"{ok_entries}/{len(catalog)} entries {failed}")


def test_06_constraint_semantics(catalog, report):
    p = catalog.find_pattern("Singleton")
    relaxed = MatchConfig(mode="satisfy", enforce_constraints=False)
    nac_pass = satisfies(model("singleton", "positive"), p)[0]
    bad = model("singleton", "negative")
    nac_violations = [v for o in find_occurrences(bad, p, relaxed) for v in check_constraints(bad, o, p)]
    nac_ok = nac_pass and not satisfies(bad, p)[0] and [v.kind for v in nac_violations] == ["nac"]
    note_pass = satisfies(model("singleton", "note_positive"), p)[0]
    mutant = model("singleton", "note_negative")
    note_violations = [v for o in find_occurrences(mutant, p, relaxed) for v in check_constraints(mutant, o, p)]
    note_ok = note_pass and not satisfies(mutant, p)[0] and [v.kind for v in note_violations] == ["consequence"]
    report(6, "constraint semantics", nac_ok and note_ok,
           f"NAC pair {'ok' if nac_ok else 'wrong'} ({len(nac_violations)} violation), "
           f"premise/consequence pair {'ok' if note_ok else 'wrong'}")


def test_07_synchronization(catalog, report):
    s = catalog.sync_for("Observer")
    good = check_sync(model("observer", "positive"), [model("observer", "collaboration")], s)
    renamed = check_sync(model("observer", "positive"), [model("observer", "collaboration_renamed")], s)
    accepted = len(good.accepted) >= 1
    rejected = not renamed.accepted and any(r.startswith("attribute-mismatch") for _, r in renamed.rejected)
    joint = "observers=observerLines" in str(good.joint_system).split(", ")
    report(7, "synchronization", accepted and rejected and joint,
           f"accepted={accepted}, renamed rejected with attribute-mismatch={rejected}, joint equality={joint}")


def test_08_matching_oracle(report):
    mismatches, with_vars = [], 0
    for seed in range(300):
        pat, host = random_matching_instance(random.Random(70_000 + seed))
        with_vars += bool(pat.variables())
        if morphism_set(find_injective_morphisms(pat, host)) != brute_morphisms(pat, host):
            mismatches.append(seed)
    report(8, "matching oracle", not mismatches and with_vars > 0,
           f"{len(mismatches)} mismatches over 300 instances ({with_vars} with attribute variables)")


def test_09_cli_determinism(report):
    differing = []
    for name, (args, code) in CASES.items():
        golden = golden_path(name).read_text(encoding="utf-8")
        runs = [run_cli(args, hashseed="0"), run_cli(args, hashseed="4242"), run_cli([*args, "--jobs", "4"])]
        if any(r.stdout != golden or r.returncode != code for r in runs):
            differing.append(name)
    report(9, "CLI determinism", len(CASES) >= 10 and not differing,
           f"{len(CASES) - len(differing)}/{len(CASES)} golden invocations byte-identical "
           f"across runs and thread counts {differing}")


def test_10_robustness(tmp_path, report):
    corpus = build_corpus(tmp_path)
    failures = []
    for path in corpus:
        try:
            r = subprocess.run([sys.executable, "-m", "patternforge", *cli_args(path)],
                               capture_output=True, text=True, timeout=5)
        except subprocess.TimeoutExpired:
            failures.append(f"{path.name}: timeout")
            continue
        diag = re.match(rf"^{re.escape(str(path))}:(\d+):(\d+): error: \S", r.stderr)
        if r.returncode != 2 or not diag or "Traceback" in r.stderr:
            failures.append(f"{path.name}: exit {r.returncode}")
    report(10, "robustness", len(corpus) >= 50 and not failures,
           f"{len(corpus) - len(failures)}/{len(corpus)} malformed files diagnosed with exit 2 {failures}")
