#!/usr/bin/env python3
"""Scaling benchmark on the flight-hotel join scenario.

Synthesizes two relational tables, ingests them through the CSV reader,
applies the join-and-pivot rule, and reports wall time, peak memory, the
cost-model figures, and the overhead of conflict recording relative to
last-write execution. The dataset is deterministic for a given size and
seed: flight i lands in city i mod C, hotel j sits in city j mod C, and a
city's country is a function of the city index, so the run is conflict
free and every output count has a closed form.
"""

import argparse
import pathlib
import random
import resource
import sys
import tempfile
import time
from collections import Counter
from dataclasses import dataclass

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from pgtransform.executor import ConflictPolicy, run
from pgtransform.graph import validate
from pgtransform.io import load_scenario

RULES = """\
RULE connect
  MATCH (f:Flight), (h:Hotel)
  WHERE f.dest = h.city
  => x = ((f):T_Flight {code = f.code, city = f.dest}),
     y = ((h):T_Hotel {name = h.name, stars = h.stars, city = h.city}),
     z = ((f.dest):T_City {city = h.city, country = h.country}),
     (x) -[:T_STOPS]-> (z),
     (y) -[:T_IN]-> (z)
"""

SCENARIO = """\
[input]
csv = Flight.csv, Hotel.csv

[rules]
file = connect.gpt

[options]
policy = record
variant = pi
indexes = ni
seed = 0
"""


def city_name(c: int) -> str:
    return f"City{c:04d}"


def country_name(c: int) -> str:
    # one country per 37-city block keeps the value set small but plural
    return f"Country{c % 37:02d}"


def write_dataset(
    root: pathlib.Path, flights: int, hotels: int, cities: int, seed: int
) -> pathlib.Path:
    """Write Flight.csv, Hotel.csv, the rule file, and a scenario INI."""
    rng = random.Random(seed)
    flight_rows = [
        f"F{i:05d},{city_name(i % cities)}" for i in range(flights)
    ]
    hotel_rows = [
        f"Hotel {j},{j % 5 + 1},{city_name(j % cities)},{country_name(j % cities)}"
        for j in range(hotels)
    ]
    rng.shuffle(flight_rows)
    rng.shuffle(hotel_rows)

    root.mkdir(parents=True, exist_ok=True)
    (root / "Flight.csv").write_text(
        "code,dest\n" + "\n".join(flight_rows) + "\n", encoding="utf-8"
    )
    (root / "Hotel.csv").write_text(
        "name,stars,city,country\n" + "\n".join(hotel_rows) + "\n",
        encoding="utf-8",
    )
    (root / "connect.gpt").write_text(RULES, encoding="utf-8")
    scenario = root / "scaling.ini"
    scenario.write_text(SCENARIO, encoding="utf-8")
    return scenario


def expected_counts(flights: int, hotels: int, cities: int) -> dict:
    """Closed-form output sizes for the deterministic dataset."""
    per_city_f = Counter(i % cities for i in range(flights))
    per_city_h = Counter(j % cities for j in range(hotels))
    reached = {c for c in per_city_f if per_city_h.get(c)}
    return {
        "join_pairs": sum(per_city_f[c] * per_city_h[c] for c in reached),
        "t_flight": sum(per_city_f[c] for c in reached),
        "t_hotel": sum(per_city_h[c] for c in reached),
        "t_city": len(reached),
        "nodes": sum(per_city_f[c] + per_city_h[c] for c in reached) + len(reached),
        "edges": sum(per_city_f[c] + per_city_h[c] for c in reached),
    }


@dataclass
class BenchResult:
    seconds_record: float
    seconds_last_write: float
    peak_rss_bytes: int
    nodes: int
    edges: int
    join_pairs: int
    conflicts: int
    metrics_doc: dict


def run_benchmark(flights: int, hotels: int, cities: int, seed: int) -> BenchResult:
    with tempfile.TemporaryDirectory(prefix="scaling_") as tmp:
        scenario_path = write_dataset(pathlib.Path(tmp), flights, hotels, cities, seed)
        sc = load_scenario(scenario_path)

    t0 = time.perf_counter()
    out, metrics = run(sc.rules, sc.graph, policy=ConflictPolicy.RECORD_AND_CONTINUE)
    t_record = time.perf_counter() - t0

    t0 = time.perf_counter()
    out2, _ = run(sc.rules, sc.graph, policy=ConflictPolicy.LAST_WRITE_WINS)
    t_last = time.perf_counter() - t0

    if validate(out) or validate(out2):
        raise AssertionError("benchmark output failed validation")

    # every rewrite shape shares the one join query, so each sees the same rows
    per_shape = {st.bindings for st in metrics.rule_stats}
    if len(per_shape) != 1:
        raise AssertionError(f"uneven binding counts across shapes: {per_shape}")

    return BenchResult(
        seconds_record=t_record,
        seconds_last_write=t_last,
        peak_rss_bytes=resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024,
        nodes=out.node_count,
        edges=out.edge_count,
        join_pairs=per_shape.pop(),
        conflicts=len(metrics.conflicts),
        metrics_doc={
            "merge_operations": metrics.merge_operations(),
            "writes_total": metrics.writes_total,
            "cost_naive": metrics.cost_naive(),
            "cost_indexed": metrics.cost_indexed(),
            "cost_conflict_detect": metrics.cost_conflict_detect(),
        },
    )


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--flights", type=int, default=10_000)
    ap.add_argument("--hotels", type=int, default=10_000)
    ap.add_argument("--cities", type=int, default=1_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    want = expected_counts(args.flights, args.hotels, args.cities)
    res = run_benchmark(args.flights, args.hotels, args.cities, args.seed)

    print(f"dataset: {args.flights} flights, {args.hotels} hotels, {args.cities} cities")
    print(f"join pairs: {res.join_pairs} (expected {want['join_pairs']})")
    print(f"output:   {res.nodes} nodes (expected {want['nodes']}), "
          f"{res.edges} edges (expected {want['edges']})")
    print(f"conflicts: {res.conflicts}")
    print(f"time:     record={res.seconds_record:.2f}s "
          f"last-write={res.seconds_last_write:.2f}s "
          f"overhead={res.seconds_record / res.seconds_last_write:.2f}x")
    print(f"peak rss: {res.peak_rss_bytes / 2**20:.0f} MiB")
    for key, val in res.metrics_doc.items():
        print(f"{key}: {val}")

    ok = (
        res.join_pairs == want["join_pairs"]
        and res.nodes == want["nodes"]
        and res.edges == want["edges"]
        and res.conflicts == 0
    )
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
