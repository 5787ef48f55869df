"""Golden CLI invocations shared by the CLI tests and the acceptance suite."""
from __future__ import annotations

import os
import subprocess
import sys
from pathlib import Path

from patternforge.catalog import default_fixtures_dir

GOLDEN = Path(__file__).parent / "golden"
FIXTURES = default_fixtures_dir()

# name -> (arguments, expected exit code); paths are relative to the fixtures directory
CASES: dict[str, tuple[list[str], int]] = {
    "check_composite_positive": (["check", "composite/positive.model", "--pattern", "Composite"], 0),
    "check_composite_negative": (["check", "composite/negative.model", "--pattern", "Composite"], 1),
    "check_singleton_nac_json": (["check", "singleton/negative.model", "--pattern", "Singleton", "--format", "json"], 1),
    "check_singleton_note": (["check", "singleton/note_negative.model", "--pattern", "Singleton"], 1),
    "check_observer_sync": (["check", "observer/positive.model", "--pattern", "Observer",
                             "--with-collab", "observer/collaboration.model"], 0),
    "check_observer_renamed": (["check", "observer/positive.model", "--pattern", "Observer",
                                "--with-collab", "observer/collaboration_renamed.model"], 1),
    "check_mediator_inconclusive": (["check", "mediator/positive.model", "--pattern", "Mediator", "--bound", "1"], 1),
    "find_composite_all": (["find", "composite/three_leaves.model", "--pattern", "Composite", "--bound", "3"], 0),
    "find_composite_maximal": (["find", "composite/three_leaves.model", "--pattern", "Composite", "--maximal"], 0),
    "annotate_overlap_json": (["annotate", "misc/overlap.model", "--format", "json"], 0),
    "annotate_overlap_table": (["annotate", "misc/overlap.model"], 0),
    "expand_composite": (["expand", "--pattern", "Composite", "--counts", "leaves=2"], 0),
    "expand_observer_json": (["expand", "--pattern", "Observer", "--format", "json", "--provenance"], 0),
    "solve_abstract_factory": (["solve", "--pattern", "AbstractFactory", "--minimal", "--bound", "3"], 0),
    "catalog_list": (["catalog", "list"], 0),
    "lint_observer": (["lint", "../catalog/observer.pat"], 0),
}


def run_cli(args: list[str], hashseed: str = "0", timeout: float = 60) -> subprocess.CompletedProcess:
    env = dict(os.environ, PYTHONHASHSEED=hashseed)
    env.pop("PATTERNFORGE_CATALOG", None)
    return subprocess.run([sys.executable, "-m", "patternforge", *args], cwd=FIXTURES, env=env,
                          capture_output=True, text=True, timeout=timeout)


def golden_path(name: str) -> Path:
    return GOLDEN / f"{name}.out"


def regenerate() -> None:
    GOLDEN.mkdir(exist_ok=True)
    for name, (args, _) in CASES.items():
        golden_path(name).write_text(run_cli(args).stdout, encoding="utf-8")


if __name__ == "__main__":
    regenerate()
