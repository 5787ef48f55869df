"""Command-line interface.

Exit codes: 0 success / satisfied, 1 not satisfied or violations found
(including results that are inconclusive within the bound), 2 usage or
input error. Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence, TextIO

from .catalog import Catalog, default_catalog_dir, load_catalog
from .counts import DEFAULT_BOUND, enumerate_solutions, format_assignment, minimal_solutions
from .diagnostics import Diagnostic, InputError, SourceSpan
from .dsl import format_model, ground, load_model, parse_pattern_file
from .expansion import ExpansionError, expand
from .graph import Const
from .matcher import (
    InvalidModel, MatchConfig, check_constraints, check_root_cardinality, check_sync, decide, find_occurrences,
)
from .pattern import Pattern, SynchronizedPatternSet, errors, validate_pattern
from .report import dumps, format_table, occurrence_record, serialize_occurrences

OK, FAIL, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _global_options(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--bound", type=int, default=d(DEFAULT_BOUND), metavar="N",
                   help="replica and solver bound (default %(default)s)" if not suppress else argparse.SUPPRESS)
    p.add_argument("--catalog", default=d(None), metavar="DIR",
                   help="catalog directory (default: $PATTERNFORGE_CATALOG or the shipped catalog)"
                   if not suppress else argparse.SUPPRESS)
    p.add_argument("--format", choices=("json", "table"), default=d("table"),
                   help="output format (default %(default)s)" if not suppress else argparse.SUPPRESS)
    p.add_argument("--jobs", type=int, default=d(1), metavar="N",
                   help="worker threads for multi-pattern runs" if not suppress else argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patternforge",
                                     description="Check, find and expand design patterns in class-diagram models.")
    _global_options(parser, False)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, True)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("check", parents=[common], help="decide whether a model satisfies a pattern")
    p.add_argument("model")
    p.add_argument("--pattern", required=True, help="catalog name or .pat file")
    p.add_argument("--with-collab", action="append", default=[], metavar="MODEL",
                   help="collaboration model to synchronize with (repeatable)")

    p = sub.add_parser("find", parents=[common], help="list occurrences of a pattern")
    p.add_argument("model")
    p.add_argument("--pattern", required=True)
    p.add_argument("--maximal", action="store_true", help="only occurrences that cannot be extended")
    p.add_argument("--limit", type=int, default=None, metavar="N", help="stop after N occurrences")

    p = sub.add_parser("annotate", parents=[common], help="annotate a model with catalog pattern roles")
    p.add_argument("model")
    p.add_argument("--patterns", default="all", help="'all' or comma-separated pattern names")
    p.add_argument("-o", "--output", metavar="FILE", help="write the annotation document here")

    p = sub.add_parser("expand", parents=[common], help="build the expansion for given replica counts")
    p.add_argument("--pattern", required=True)
    p.add_argument("--counts", default="", help="k=v,... replica counts (default: first minimal solution)")
    p.add_argument("-o", "--output", metavar="FILE")
    p.add_argument("--provenance", action="store_true", help="also list where each element comes from")

    p = sub.add_parser("solve", parents=[common], help="list solutions of a pattern's count equations")
    p.add_argument("--pattern", required=True)
    p.add_argument("--minimal", action="store_true", help="only component-wise minimal solutions")

    p = sub.add_parser("lint", parents=[common], help="parse and validate pattern files")
    p.add_argument("files", nargs="+")

    p = sub.add_parser("catalog", parents=[common], help="inspect the pattern catalog")
    p.add_argument("action", choices=("list",))
    return parser


# --------------------------------------------------------------------------


class _Context:
    def __init__(self, args, out: TextIO, err: TextIO):
        self.args, self.out, self.err = args, out, err
        self._catalog: Catalog | None = None
        if args.bound < 1:
            raise UsageError("--bound must be at least 1")
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")

    @property
    def catalog(self) -> Catalog:
        if self._catalog is None:
            self._catalog = load_catalog(self.args.catalog or default_catalog_dir())
        return self._catalog

    def cfg(self, mode: str, **kw) -> MatchConfig:
        return MatchConfig(self.args.bound, mode=mode, **kw)

    def emit(self, text: str) -> None:
        self.out.write(text if text.endswith("\n") else text + "\n")

    def warn(self, text: str) -> None:
        self.err.write(text + "\n")

    def pattern(self, ref: str) -> tuple[Pattern, SynchronizedPatternSet | None]:
        path = Path(ref)
        if ref.endswith(".pat") or path.is_file():
            pf = parse_pattern_file(_read(path), str(path))
            if not pf.patterns:
                raise InputError(Diagnostic("no pattern defined", SourceSpan(str(path), 1, 1)))
            p = pf.patterns[0]
            return p, next((s for s in pf.syncs if s.primary.name == p.name), None)
        try:
            p = self.catalog.find_pattern(ref)
        except KeyError:
            raise UsageError(f"unknown pattern {ref!r}; see 'patternforge catalog list'") from None
        return p, self.catalog.sync_for(p.name)


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(Diagnostic("no such file", SourceSpan(str(path), 1, 1))) from None
    except IsADirectoryError:
        raise InputError(Diagnostic("is a directory", SourceSpan(str(path), 1, 1))) from None
    except UnicodeDecodeError as exc:
        raise InputError(Diagnostic(f"not valid UTF-8: {exc.reason}", SourceSpan(str(path), 1, 1))) from None


def _model(path: str):
    p = Path(path)
    _read(p)
    return load_model(p)


def cmd_check(ctx: _Context) -> int:
    a = ctx.args
    p, sync = ctx.pattern(a.pattern)
    model = _model(a.model).graph
    verdict = decide(model, p, ctx.cfg("satisfy"))
    violations = []
    if not verdict.satisfied and p.constraints:
        relaxed = find_occurrences(model, p, ctx.cfg("satisfy", enforce_constraints=False))
        if relaxed:
            violations = check_constraints(model, relaxed[0], p)
    roots = check_root_cardinality(model, p, ctx.cfg("find_maximal")) if verdict.satisfied else []
    root_ok = all(r.passed for r in roots)
    sync_report = None
    if a.with_collab:
        if sync is None:
            raise UsageError(f"pattern {p.name} has no collaboration to synchronize with")
        collabs = [_model(m).graph for m in a.with_collab]
        if len(collabs) != len(sync.secondaries):
            raise UsageError(f"{p.name} synchronizes with {len(sync.secondaries)} collaboration model(s), "
                             f"got {len(collabs)}")
        sync_report = check_sync(model, collabs, sync, ctx.cfg("find_maximal"))
    ok = verdict.satisfied and root_ok and (sync_report is None or bool(sync_report.accepted))

    if a.format == "json":
        doc = {
            "pattern": p.name,
            "satisfied": ok,
            "inconclusive": verdict.inconclusive,
            "bound": a.bound,
            "witness": occurrence_record(verdict.witness) if verdict.witness else None,
            "violations": [{"constraint": v.constraint, "kind": v.kind, "part": v.part, "replica": v.replica,
                            "match": dict(sorted(v.premise_match.items()))} for v in violations],
            "root_relations": [{"relation": r.relation, "count": r.count, "passed": r.passed} for r in roots],
        }
        if sync_report is not None:
            doc["sync"] = {
                "joint_equations": str(sync_report.joint_system),
                "accepted": len(sync_report.accepted),
                "rejected": [reason for _, reason in sync_report.rejected],
            }
        ctx.emit(dumps(doc))
        return OK if ok else FAIL

    lines = []
    if verdict.satisfied:
        lines.append(f"{p.name}: satisfied (bound {a.bound})")
        lines.append("witness:")
        lines.append(format_table([verdict.witness]))
        for r in roots:
            lines.append(f"root relation {r.relation} with {p.root_variable}={r.count}: "
                         f"{'holds' if r.passed else 'violated'}")
    elif verdict.inconclusive:
        lines.append(f"{p.name}: inconclusive beyond bound {a.bound} (not satisfied within the bound)")
    else:
        lines.append(f"{p.name}: not satisfied (bound {a.bound})")
    for v in violations:
        lines.append(f"violation: {v.describe()}")
    if sync_report is not None:
        lines.append(f"joint equations: {sync_report.joint_system}")
        lines.append(f"synchronized tuples accepted: {len(sync_report.accepted)}")
        for _, reason in sync_report.rejected:
            lines.append(f"rejected: {reason}")
        if verdict.satisfied and not sync_report.accepted:
            lines.append(f"{p.name}: not satisfied together with the collaboration")
    ctx.emit("\n".join(lines))
    return OK if ok else FAIL


def cmd_find(ctx: _Context) -> int:
    a = ctx.args
    p, _ = ctx.pattern(a.pattern)
    model = _model(a.model).graph
    occs = find_occurrences(model, p, ctx.cfg("find_maximal" if a.maximal else "find_all", max_occurrences=a.limit))
    if a.format == "json":
        doc = {"occurrences": [occurrence_record(o) for o in occs]}
        if occs.inconclusive:
            doc["inconclusive"] = True
        if occs.truncated:
            doc["truncated"] = True
        ctx.emit(dumps(doc))
    else:
        text = format_table(occs)
        if occs.truncated:
            text += f"\n(truncated after {a.limit})"
        if occs.inconclusive:
            text += f"\n(inconclusive beyond bound {a.bound})"
        ctx.emit(text)
    return OK if occs and not occs.inconclusive else FAIL


def cmd_annotate(ctx: _Context) -> int:
    a = ctx.args
    doc = _model(a.model)
    if a.patterns.strip() == "all":
        patterns = [p for p in ctx.catalog.patterns() if p.metamodel.name == doc.metamodel]
    else:
        patterns = [ctx.pattern(name.strip())[0] for name in a.patterns.split(",") if name.strip()]
        if not patterns:
            raise UsageError("--patterns needs 'all' or at least one name")
    cfg = ctx.cfg("find_maximal")

    def run(p: Pattern):
        if p.metamodel.name != doc.metamodel:
            return p, []
        return p, find_occurrences(doc.graph, p, cfg)

    if a.jobs > 1:
        with ThreadPoolExecutor(max_workers=a.jobs) as pool:
            results = list(pool.map(run, patterns))
    else:
        results = [run(p) for p in patterns]
    occs = [o for _, found in results for o in found]
    inconclusive = sorted(p.name for p, found in results if getattr(found, "inconclusive", False))
    if a.output:
        Path(a.output).write_text(serialize_occurrences(occs, "json", pretty=True) + "\n", encoding="utf-8")
        summary = [f"{p.name}: {len(found)}" for p, found in results if found]
        ctx.emit(f"wrote {len(occs)} occurrence(s) to {a.output}" + ("\n" + "\n".join(summary) if summary else ""))
    elif a.format == "json":
        ctx.emit(serialize_occurrences(occs, "json"))
    else:
        ctx.emit(format_table(occs))
    for name in inconclusive:
        ctx.warn(f"warning: {name}: inconclusive beyond bound {a.bound}")
    return OK


def _parse_counts(text: str) -> dict[str, int]:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"--counts expects k=v pairs, got {item!r}")
        try:
            out[key.strip()] = int(value)
        except ValueError:
            raise UsageError(f"--counts value for {key.strip()!r} is not an integer") from None
    return out


def cmd_expand(ctx: _Context) -> int:
    a = ctx.args
    p, _ = ctx.pattern(a.pattern)
    given = _parse_counts(a.counts)
    system = p.part_system()
    unknown = sorted(set(given) - set(system.variables))
    if unknown:
        raise UsageError(f"{p.name} has no variable part named {', '.join(unknown)}")
    if set(given) == set(system.variables):
        counts = given
    else:
        # complete a partial assignment with the smallest matching solution
        bound = max([a.bound, *given.values()])
        matching = [s for s in enumerate_solutions(system, bound) if all(s[k] == v for k, v in given.items())]
        if not matching:
            ctx.warn(f"{p.name}: no solution within bound {bound} extends {format_assignment(given) or 'the empty assignment'}")
            return FAIL
        counts = min(matching, key=lambda s: (sum(s.values()), tuple(s.values())))
    try:
        exp = expand(p, counts)
    except ExpansionError as exc:
        ctx.warn(f"error: {exc}")
        return FAIL
    g, _ = ground(exp.graph)
    if a.format == "json":
        nodes = [{"id": n.id, "type": n.type,
                  "attrs": {k: v.value for k, v in n.attrs.items() if isinstance(v, Const)},
                  **({"role": exp.role_map[n.id]} if n.id in exp.role_map else {})} for n in g.nodes.values()]
        edges = [{"id": e.id, "type": e.type, "source": e.source, "target": e.target} for e in g.edges.values()]
        doc = {"pattern": p.name, "assignment": dict(exp.assignment), "nodes": nodes, "edges": edges}
        if a.provenance:
            doc["provenance"] = {k: {"part": v.part, "replica": v.replica, "local": v.local}
                                 for k, v in exp.provenance.items()}
        text = dumps(doc)
    else:
        head = [f"# expansion of {p.name} with {format_assignment(exp.assignment) or 'no variable parts'}"]
        if a.provenance:
            head.extend(f"# {k}: {v.part}#{v.replica} {v.local}" for k, v in exp.provenance.items())
        text = "\n".join(head) + "\n" + format_model(g, exp.role_map)
    if a.output:
        Path(a.output).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
        ctx.emit(f"wrote expansion of {p.name} to {a.output}")
    else:
        ctx.emit(text)
    return OK


def cmd_solve(ctx: _Context) -> int:
    a = ctx.args
    p, _ = ctx.pattern(a.pattern)
    system = p.part_system()
    sols = minimal_solutions(system, a.bound) if a.minimal else enumerate_solutions(system, a.bound)
    if a.format == "json":
        ctx.emit(dumps({"pattern": p.name, "equations": str(p.equations), "bound": a.bound,
                        "minimal": a.minimal, "solutions": sols}))
    else:
        lines = [f"{p.name}: {p.equations}"]
        lines.append(f"{len(sols)} {'minimal ' if a.minimal else ''}solution(s) with counts <= {a.bound}")
        lines.extend(f"  {format_assignment(s) or '(no variable parts)'}" for s in sols)
        ctx.emit("\n".join(lines))
    return OK if sols else FAIL


def cmd_lint(ctx: _Context) -> int:
    status = OK
    records = []
    for f in ctx.args.files:
        path = Path(f)
        pf = parse_pattern_file(_read(path), str(path), validate=False)
        if not pf.patterns:
            raise InputError(Diagnostic("no pattern defined", SourceSpan(str(path), 1, 1)))
        for p in pf.patterns:
            report = validate_pattern(p, ctx.args.bound)
            bad = errors(report)
            for v in report:
                span = v.span or p.span or SourceSpan(str(path), 1, 1)
                ctx.warn(f"{span}: {v.severity}: {v.code}: {v.subject}: {v.message}")
            if bad:
                status = USAGE
                verdict = f"{len(bad)} error(s)"
            elif report:
                verdict = "valid, equations infeasible within bound" if any(
                    v.code == "infeasible-within-bound" for v in report) else "valid, with warnings"
            else:
                verdict = "valid, equations feasible"
            records.append({"file": str(path), "pattern": p.name, "status": verdict,
                            "errors": len(bad), "warnings": len(report) - len(bad)})
        if status == OK:
            for s in pf.syncs:
                records.append({"file": str(path), "pattern": s.primary.name, "status": "sync valid",
                                "errors": 0, "warnings": 0})
    if ctx.args.format == "json":
        ctx.emit(dumps({"results": records}))
    else:
        ctx.emit("\n".join(f"{r['file']}: {r['pattern']}: {r['status']}" for r in records))
    return status


def cmd_catalog(ctx: _Context) -> int:
    cat = ctx.catalog
    if ctx.args.format == "json":
        ctx.emit(dumps({"entries": [{
            "name": e.name, "patterns": [p.name for p in e.patterns], "equations": [str(p.equations) for p in e.patterns],
            "derived_equations": e.derived_equations, "has_collaboration": e.has_collaboration,
            "intent": e.intent, "files": [q.name for q in e.paths]} for e in cat]}))
        return OK
    width = max(len(e.name) for e in cat)
    lines = []
    for e in cat:
        flags = ("derived" if e.derived_equations else "") + (" +collab" if e.has_collaboration else "")
        for i, p in enumerate(e.patterns):
            name = e.name if i == 0 else ""
            lines.append(f"{name:<{width}}  {p.name:<22}  {p.equations}" + (f"  [{flags.strip()}]" if flags.strip() and i == 0 else ""))
    lines.append(f"{len(cat)} entries")
    ctx.emit("\n".join(lines))
    return OK


COMMANDS = {"check": cmd_check, "find": cmd_find, "annotate": cmd_annotate, "expand": cmd_expand,
            "solve": cmd_solve, "lint": cmd_lint, "catalog": cmd_catalog}


def main(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        old_err, sys.stderr = sys.stderr, err
        try:
            args = parser.parse_args(argv)
        finally:
            sys.stderr = old_err
    except SystemExit as exc:
        return USAGE if exc.code not in (0, None) else OK
    try:
        ctx = _Context(args, out, err)
        return COMMANDS[args.command](ctx)
    except UsageError as exc:
        err.write(f"patternforge: error: {exc}\n")
        return USAGE
    except InputError as exc:
        for d in exc.diagnostics:
            err.write(f"{d}\n")
        return USAGE
    except InvalidModel as exc:
        err.write(f"patternforge: error: {exc}\n")
        return USAGE
    except OSError as exc:
        err.write(f"patternforge: error: {exc}\n")
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
