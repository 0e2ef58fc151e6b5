"""Command-line entry point.

Subcommands cover the whole pipeline: `transform` runs rules over a graph,
`compile` emits openCypher scripts, `check` analyzes a rule set for
write-write conflicts, `sat` decides query satisfiability, `ingest` turns
relational CSV into a graph, `validate` checks a graph document, and `eval`
prints query bindings.

Exit codes are contracts: 0 success, 1 failure or runtime error, 2 usage
error, 3 conflicts found (transform with conflicts recorded, check with a
proven conflict, sat answering unsatisfiable), 4 unknown within bounds.
"""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .consistency import SatStatus, UnsupportedFeature, check_transformation, sat_check
from .cypher import CompileOptions, IndexChoice, Variant, emit_bundle
from .cypher import MultiLabelEdge
from .executor import ConflictPolicy, TransformationConflictError, run
from .graph import GraphError, validate
from .io import (
    Cell,
    FormatError,
    InvalidConfig,
    MissingFile,
    atomic_write_text,
    dumps_document,
    ingest_csv,
    load_graph,
    parse_cell,
    read_csv_table,
    save_graph,
    write_document,
)
from .matching import evaluate_plus
from .parser import ParseError, parse_query, parse_transformation
from .patterns import PatternTypeError
from .rules import RuleTypeError, UndefinedPropertyError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_CONFLICTS = 3
EXIT_UNKNOWN = 4

_POLICY_BY_FLAG = {
    "last-write": ConflictPolicy.LAST_WRITE_WINS,
    "record": ConflictPolicy.RECORD_AND_CONTINUE,
    "fail": ConflictPolicy.FAIL_FAST,
}


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.exists():
        raise MissingFile(path)
    return p.read_text(encoding="utf-8")


def _load_rules(path: str):
    return parse_transformation(_read_text(path))


def _load_query(spec: str):
    """Query argument: a file path when one exists, else inline text."""
    p = Path(spec)
    text = p.read_text(encoding="utf-8") if p.exists() else spec
    return parse_query(text)


def _parse_params(pairs: Optional[Sequence[str]]) -> dict:
    params = {}
    for pair in pairs or ():
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise InvalidConfig(f"--param needs key=value, got {pair!r}")
        params[key] = parse_cell(Cell(raw, False))
    return params


def _cmd_transform(args) -> int:
    rules = _load_rules(args.rules)
    graph = load_graph(args.graph)
    params = _parse_params(args.param)
    import random

    rng = random.Random(args.seed)
    try:
        out, metrics = run(
            rules,
            graph,
            policy=_POLICY_BY_FLAG[args.policy],
            params=params,
            undefined=args.undefined,
            conflict_likelihood=args.conflict_likelihood,
            conflict_rng=rng,
        )
    except TransformationConflictError as exc:
        print(f"conflict: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.out:
        save_graph(out, args.out)
    if args.report:
        doc = [
            {
                "element": c.element,
                "key": c.key,
                "existing": c.existing,
                "attempted": c.attempted,
                "rule": c.rule,
                "binding": dict(c.binding),
            }
            for c in metrics.conflicts
        ]
        write_document(doc, args.report)
    if args.metrics:
        write_document(_metrics_doc(metrics), args.metrics)
    summary = (
        f"nodes={out.node_count} edges={out.edge_count} "
        f"bindings={metrics.bindings_total} conflicts={len(metrics.conflicts)}"
    )
    print(summary)
    return EXIT_CONFLICTS if metrics.conflicts else EXIT_OK


def _metrics_doc(metrics) -> dict:
    return {
        "rules": metrics.n_rules,
        "constructors": metrics.n_constructors,
        "bindings_total": metrics.bindings_total,
        "merge_operations": metrics.merge_operations(),
        "writes_total": metrics.writes_total,
        "out_nodes": metrics.out_nodes,
        "out_edges": metrics.out_edges,
        "seconds": metrics.seconds,
        "cost_naive": metrics.cost_naive(),
        "cost_indexed": metrics.cost_indexed(),
        "cost_conflict_detect": metrics.cost_conflict_detect(),
        "per_rule": [
            {
                "name": st.name,
                "bindings": st.bindings,
                "skipped": st.skipped,
                "seconds": st.seconds,
            }
            for st in metrics.rule_stats
        ],
        "skipped_bindings": len(metrics.diagnostics),
    }


def _cmd_compile(args) -> int:
    rules = _load_rules(args.rules)
    opts = CompileOptions(
        variant=Variant(args.variant),
        indexes=IndexChoice(args.indexes),
        uniqueness=args.uc,
        conflict_detection=args.conflict_detection,
        escaped=args.escaped,
    )
    name = Path(args.rules).stem
    files = emit_bundle(name, rules, opts)
    base = Path(args.out_dir) / name
    for rel, contents in files.items():
        atomic_write_text(base / rel, contents)
    print(f"wrote {len(files)} files under {base}")
    return EXIT_OK


def _cmd_check(args) -> int:
    rules = _load_rules(args.rules)
    report = check_transformation(
        rules,
        max_repeat=args.max_repeat,
        max_states=args.max_states,
        brute_nodes=args.max_nodes,
    )
    doc = {
        "verdict": report.verdict,
        "candidates_checked": report.candidates_checked,
        "findings": [
            {
                "kind": f.kind,
                "rule1": f.rule1,
                "rule2": f.rule2,
                "key": f.key,
                "status": f.status.value,
                "reason": f.reason,
            }
            for f in report.findings
        ],
    }
    if args.report:
        write_document(doc, args.report)
    print(f"verdict: {report.verdict} ({report.candidates_checked} candidates)")
    for f in report.findings:
        line = f"  {f.status.value}: {f.rule1} vs {f.rule2} on key {f.key!r}"
        if f.reason:
            line += f" ({f.reason})"
        print(line)
    if report.verdict == "conflicting":
        return EXIT_CONFLICTS
    if report.verdict == "unknown":
        return EXIT_UNKNOWN
    return EXIT_OK


def _cmd_sat(args) -> int:
    query = _load_query(args.query)
    try:
        res = sat_check(
            query,
            max_repeat=args.max_repeat,
            max_states=args.max_states,
            brute_nodes=args.max_nodes,
        )
    except UnsupportedFeature as exc:
        print(f"unknown: {exc}")
        return EXIT_UNKNOWN
    if res.status is SatStatus.SAT:
        print("satisfiable")
        if args.witness and res.witness is not None:
            save_graph(res.witness, args.witness)
            print(f"witness written to {args.witness}")
        return EXIT_OK
    if res.status is SatStatus.UNSAT:
        print("unsatisfiable")
        return EXIT_CONFLICTS
    print(f"unknown: {res.reason}")
    return EXIT_UNKNOWN


def _cmd_ingest(args) -> int:
    root = Path(args.csv)
    if root.is_dir():
        paths = sorted(root.glob("*.csv"))
    else:
        paths = [Path(p) for p in args.csv.split(",")]
    tables = []
    for p in paths:
        header, rows = read_csv_table(p)
        tables.append((p.stem, header, rows))
    g = ingest_csv(tables)
    save_graph(g, args.out)
    print(f"nodes={g.node_count} edges={g.edge_count}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    g = load_graph(args.graph, allow_synthetic=True)
    violations = validate(g)
    for v in violations:
        print(f"{v.code}: {v.detail}")
    if violations:
        return EXIT_FAIL
    print("ok")
    return EXIT_OK


def _cmd_eval(args) -> int:
    query = _load_query(args.query)
    g = load_graph(args.graph, allow_synthetic=True)
    params = _parse_params(args.param)
    rows = evaluate_plus(query, g, params)
    text = dumps_document(rows)
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="pgtransform",
        description="Property-graph transformations: run, compile, analyze.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    t = sub.add_parser("transform", help="apply rules to a graph")
    t.add_argument("--rules", required=True)
    t.add_argument("--graph", required=True)
    t.add_argument("--policy", choices=sorted(_POLICY_BY_FLAG), default="record")
    t.add_argument("--out")
    t.add_argument("--report")
    t.add_argument("--metrics")
    t.add_argument("--param", action="append", metavar="KEY=VALUE")
    t.add_argument("--undefined", choices=["skip", "error"], default="skip")
    t.add_argument("--conflict-likelihood", type=float, default=0.0)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=_cmd_transform)

    c = sub.add_parser("compile", help="emit openCypher scripts")
    c.add_argument("--rules", required=True)
    c.add_argument("--variant", choices=[v.value for v in Variant], default="pi")
    c.add_argument("--indexes", choices=[i.value for i in IndexChoice], default="ni")
    c.add_argument("--uc", action="store_true")
    c.add_argument("--conflict-detection", action="store_true")
    c.add_argument("--escaped", action="store_true")
    c.add_argument("--out-dir", required=True)
    c.set_defaults(func=_cmd_compile)

    k = sub.add_parser("check", help="static conflict analysis")
    k.add_argument("--rules", required=True)
    k.add_argument("--max-repeat", type=int, default=16)
    k.add_argument("--max-states", type=int, default=60000)
    k.add_argument("--max-nodes", type=int, default=3)
    k.add_argument("--report")
    k.set_defaults(func=_cmd_check)

    s = sub.add_parser("sat", help="query satisfiability")
    s.add_argument("--query", required=True, help="query file or inline text")
    s.add_argument("--max-repeat", type=int, default=16)
    s.add_argument("--max-states", type=int, default=60000)
    s.add_argument("--max-nodes", type=int, default=3)
    s.add_argument("--witness", help="where to write a witness graph")
    s.set_defaults(func=_cmd_sat)

    i = sub.add_parser("ingest", help="CSV tables to a graph document")
    i.add_argument("--csv", required=True, help="directory or comma list of files")
    i.add_argument("--out", required=True)
    i.set_defaults(func=_cmd_ingest)

    v = sub.add_parser("validate", help="check a graph document")
    v.add_argument("--graph", required=True)
    v.set_defaults(func=_cmd_validate)

    e = sub.add_parser("eval", help="print query bindings")
    e.add_argument("--query", required=True, help="query file or inline text")
    e.add_argument("--graph", required=True)
    e.add_argument("--param", action="append", metavar="KEY=VALUE")
    e.add_argument("--out")
    e.set_defaults(func=_cmd_eval)

    return top


_EXPECTED_ERRORS = (
    ParseError,
    FormatError,
    MissingFile,
    InvalidConfig,
    GraphError,
    PatternTypeError,
    RuleTypeError,
    UndefinedPropertyError,
    MultiLabelEdge,
    UnsupportedFeature,
    ValueError,
)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _EXPECTED_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
