#!/usr/bin/env python3
"""Run a scenario file and print what happened.

A scenario bundles an input graph (JSON document or CSV tables), a rule
file, and execution options. This driver applies the rules, prints the
run metrics, and can save the output graph and the compiled openCypher
bundle next to it.
"""

import argparse
import pathlib
import random
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from pgtransform.cypher import emit_bundle
from pgtransform.executor import run
from pgtransform.graph import validate
from pgtransform.io import atomic_write_text, load_scenario, save_graph


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenario", type=pathlib.Path)
    ap.add_argument("--out", type=pathlib.Path, help="save the output graph here")
    ap.add_argument(
        "--emit-dir", type=pathlib.Path, help="write the compiled bundle here"
    )
    args = ap.parse_args()

    sc = load_scenario(args.scenario)
    rng = random.Random(sc.seed)
    out, metrics = run(
        sc.rules,
        sc.graph,
        policy=sc.policy,
        params=sc.params,
        conflict_likelihood=sc.conflict_likelihood,
        conflict_rng=rng,
    )
    bad = validate(out)
    for v in bad:
        print(f"violation {v.code}: {v.detail}", file=sys.stderr)

    print(f"scenario: {sc.name}")
    print(f"input:    {sc.graph.node_count} nodes, {sc.graph.edge_count} edges")
    print(f"output:   {out.node_count} nodes, {out.edge_count} edges")
    print(f"rules:    {metrics.n_rules} shapes, {metrics.n_constructors} constructors")
    print(f"bindings: {metrics.bindings_total}")
    print(f"writes:   {metrics.writes_total} ({metrics.merge_operations()} merges)")
    print(f"time:     {metrics.seconds:.3f}s")
    print(f"conflicts: {len(metrics.conflicts)}")
    for c in metrics.conflicts[:10]:
        print(f"  {c.element} .{c.key}: {c.existing!r} vs {c.attempted!r} ({c.rule})")
    if len(metrics.conflicts) > 10:
        print(f"  ... and {len(metrics.conflicts) - 10} more")

    if args.out:
        save_graph(out, args.out)
        print(f"graph written to {args.out}")
    if args.emit_dir:
        files = emit_bundle(sc.name, sc.rules, sc.compile_options)
        for rel, contents in files.items():
            atomic_write_text(args.emit_dir / sc.name / rel, contents)
        print(f"bundle written to {args.emit_dir / sc.name}")

    if bad:
        return 1
    return 3 if metrics.conflicts else 0


if __name__ == "__main__":
    raise SystemExit(main())
