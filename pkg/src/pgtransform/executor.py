"""Transformation execution.

Runs in three passes so that partial effects never leak into the output:

1. Resolution. For every rule, evaluate its query once, then resolve every
   constructor piece (ids, labels, property values) for every binding. A
   binding whose resolution hits an undefined property is dropped for that
   whole rule (or aborts the run, per the `undefined` option) before
   anything is written.
2. Node phase. Apply node constructors in rule order; an edge rule
   contributes its source endpoint constructor, then its target endpoint
   constructor. After this pass every endpoint an edge needs exists.
3. Edge phase. Apply edge constructors in rule order.

Two writes of the same property with equal values (typed equality: True
and 1 differ) are idempotent. Divergent writes are conflicts, handled per
policy: last-write overwrites silently, record keeps the first value and
logs each divergent attempt, fail raises at the first divergence. Label
sets only grow, so labels never conflict.

Test knobs: `shuffle` reorders bindings per rule, `id_codec` swaps the id
encoding (a lossy codec demonstrates why injective encoding matters), and
`conflict_likelihood` rewrites a seeded fraction of property values with
globally distinct replacements to force conflicts on multiply-written
properties.
"""

import random
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence, Union

from .graph import PropertyGraph, Value, value_eq
from .matching import evaluate
from .rules import (
    Binding,
    EdgeRule,
    FlatRule,
    NodeCtor,
    NodeRule,
    Params,
    Rule,
    UndefinedPropertyError,
    desugar,
    encode_id,
    id_token,
    resolve_id_arg,
    resolve_props,
    validate_transformation,
)


class ConflictPolicy(Enum):
    LAST_WRITE_WINS = "last-write"
    RECORD_AND_CONTINUE = "record"
    FAIL_FAST = "fail"


class TransformationConflictError(Exception):
    def __init__(self, element: str, key: str, existing: Value, attempted: Value, rule: str):
        super().__init__(
            f"conflicting writes to {key!r} on {element!r}: "
            f"{existing!r} vs {attempted!r} (rule {rule})"
        )
        self.element = element
        self.key = key
        self.existing = existing
        self.attempted = attempted
        self.rule = rule


@dataclass(frozen=True)
class ConflictRecord:
    element: str
    key: str
    existing: Value
    attempted: Value
    existing_rule: str
    rule: str
    binding: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class SkipDiagnostic:
    rule: str
    binding: tuple[tuple[str, str], ...]
    reason: str


@dataclass
class RuleStats:
    name: str
    bindings: int
    skipped: int
    seconds: float


@dataclass
class RunMetrics:
    n_rules: int = 0
    n_constructors: int = 0
    bindings_total: int = 0
    writes_total: int = 0
    out_nodes: int = 0
    out_edges: int = 0
    seconds: float = 0.0
    rule_stats: list[RuleStats] = field(default_factory=list)
    conflicts: list[ConflictRecord] = field(default_factory=list)
    diagnostics: list[SkipDiagnostic] = field(default_factory=list)
    _edge_rules: set = field(default_factory=set, repr=False)

    def merge_operations(self) -> int:
        """Constructor applications: one per node, three per edge binding."""
        total = 0
        for st in self.rule_stats:
            total += st.bindings * (3 if st.name in self._edge_rules else 1)
        return total

    def conflict_summary(self) -> dict[tuple[str, str], list[Value]]:
        """Distinct values seen per conflicted (element, key) pair."""
        out: dict[tuple[str, str], list[Value]] = {}
        for c in self.conflicts:
            vals = out.setdefault((c.element, c.key), [c.existing])
            if not any(value_eq(v, c.attempted) for v in vals):
                vals.append(c.attempted)
            if not any(value_eq(v, c.existing) for v in vals):
                vals.append(c.existing)
        return out

    # Analytic cost estimates for the three execution strategies: each
    # constructor application is one merge, which costs a full scan of the
    # output without an id index, one lookup with it, and one lookup plus a
    # compare per property write with conflict detection on.
    def cost_naive(self) -> int:
        return self.merge_operations() * max(1, self.out_nodes + self.out_edges)

    def cost_indexed(self) -> int:
        return self.merge_operations()

    def cost_conflict_detect(self) -> int:
        return self.merge_operations() + self.writes_total


IdCodec = Callable[[Sequence[str]], str]


@dataclass
class _Resolved:
    rule: FlatRule
    binding: Binding
    node_ids: list[str]            # in node-phase order for this rule
    node_ctors: list[NodeCtor]
    node_props: list[dict[str, Value]]
    edge_id: Optional[str] = None
    edge_labels: tuple[str, ...] = ()
    edge_props: Optional[dict[str, Value]] = None
    edge_ends: Optional[tuple[str, str]] = None


class _Writer:
    """Property writes with conflict handling and forced-divergence knob."""

    def __init__(self, out: PropertyGraph, policy: ConflictPolicy, metrics: RunMetrics,
                 likelihood: float, rng: random.Random):
        self.out = out
        self.policy = policy
        self.metrics = metrics
        self.likelihood = likelihood
        self.rng = rng
        self.counter = 0
        self.writers: dict[tuple[str, str], str] = {}

    def write(self, element: str, key: str, value: Value, rule: str,
              binding: Optional[Binding] = None) -> None:
        if self.likelihood > 0.0 and self.rng.random() < self.likelihood:
            value = f"__forced_{self.counter}"
            self.counter += 1
        self.metrics.writes_total += 1
        existing = self.out.get_property(element, key)
        if existing is None:
            self.out.set_property(element, key, value)
            self.writers[(element, key)] = rule
            return
        if value_eq(existing, value):
            return
        prior_rule = self.writers.get((element, key), "?")
        if self.policy is ConflictPolicy.FAIL_FAST:
            raise TransformationConflictError(element, key, existing, value, rule)
        if self.policy is ConflictPolicy.RECORD_AND_CONTINUE:
            packed = tuple(sorted(binding.items())) if binding else ()
            self.metrics.conflicts.append(
                ConflictRecord(element, key, existing, value, prior_rule, rule, packed)
            )
            return
        self.out.set_property(element, key, value)
        self.writers[(element, key)] = rule


def _node_pieces(rule: FlatRule) -> list[NodeCtor]:
    if isinstance(rule, NodeRule):
        return [rule.ctor]
    return [rule.src, rule.tgt]


def run(
    rules: Sequence[Union[Rule, FlatRule]],
    g: PropertyGraph,
    *,
    policy: ConflictPolicy = ConflictPolicy.RECORD_AND_CONTINUE,
    params: Optional[Params] = None,
    undefined: str = "skip",
    shuffle: Optional[random.Random] = None,
    id_codec: IdCodec = encode_id,
    conflict_likelihood: float = 0.0,
    conflict_rng: Optional[random.Random] = None,
) -> tuple[PropertyGraph, RunMetrics]:
    """Apply a transformation to a graph; returns (output graph, metrics)."""
    if undefined not in ("skip", "error"):
        raise ValueError(f"undefined must be 'skip' or 'error', not {undefined!r}")
    params = params or {}
    started = time.perf_counter()

    sugared = [r for r in rules if isinstance(r, Rule)]
    validate_transformation(sugared)
    flat: list[FlatRule] = []
    for r in rules:
        if isinstance(r, Rule):
            flat.extend(desugar([r]))
        else:
            flat.append(r)

    metrics = RunMetrics()
    metrics.n_rules = len(flat)
    metrics.n_constructors = sum(3 if isinstance(r, EdgeRule) else 1 for r in flat)
    metrics._edge_rules = {r.name for r in flat if isinstance(r, EdgeRule)}

    out = PropertyGraph()
    writer = _Writer(out, policy, metrics, conflict_likelihood,
                     conflict_rng or random.Random(0))

    # Pass 1: evaluate and resolve. Rules split from one source rule share
    # the same query object, so cache binding lists by query identity.
    eval_cache: dict[int, list[Binding]] = {}
    resolved_per_rule: list[list[_Resolved]] = []
    for rule in flat:
        t0 = time.perf_counter()
        key = id(rule.query)
        if key not in eval_cache:
            eval_cache[key] = evaluate(rule.query, g, params)
        bindings = list(eval_cache[key])
        if shuffle is not None:
            shuffle.shuffle(bindings)
        kept: list[_Resolved] = []
        skipped = 0
        for binding in bindings:
            try:
                ctors = _node_pieces(rule)
                node_ids = [
                    id_codec([resolve_id_arg(a, binding, g, params) for a in c.id_args])
                    for c in ctors
                ]
                node_props = [resolve_props(c.props, binding, g, params) for c in ctors]
                item = _Resolved(rule, binding, node_ids, ctors, node_props)
                if isinstance(rule, EdgeRule):
                    tokens = [id_token(node_ids[0])]
                    tokens.extend(
                        resolve_id_arg(a, binding, g, params) for a in rule.ctor.id_args
                    )
                    tokens.append(id_token(node_ids[1]))
                    item.edge_id = id_codec(tokens)
                    item.edge_labels = rule.ctor.labels
                    item.edge_props = resolve_props(rule.ctor.props, binding, g, params)
                    item.edge_ends = (node_ids[0], node_ids[1])
            except UndefinedPropertyError as exc:
                if undefined == "error":
                    raise
                skipped += 1
                metrics.diagnostics.append(
                    SkipDiagnostic(rule.name, tuple(sorted(binding.items())), exc.detail)
                )
                continue
            kept.append(item)
        resolved_per_rule.append(kept)
        metrics.bindings_total += len(kept)
        metrics.rule_stats.append(
            RuleStats(rule.name, len(kept), skipped, time.perf_counter() - t0)
        )

    # Pass 2: node constructors, in rule order (source endpoint before
    # target endpoint for edge rules).
    for rule, items in zip(flat, resolved_per_rule):
        for pos in range(len(_node_pieces(rule))):
            for item in items:
                node_id = item.node_ids[pos]
                out.add_node(node_id)
                out.add_labels(node_id, item.node_ctors[pos].labels)
                for key2, value in item.node_props[pos].items():
                    writer.write(node_id, key2, value, rule.name, item.binding)

    # Pass 3: edge constructors.
    for rule, items in zip(flat, resolved_per_rule):
        if not isinstance(rule, EdgeRule):
            continue
        for item in items:
            assert item.edge_id is not None and item.edge_ends is not None
            out.add_edge(item.edge_id, *item.edge_ends)
            out.add_labels(item.edge_id, item.edge_labels)
            for key2, value in (item.edge_props or {}).items():
                writer.write(item.edge_id, key2, value, rule.name, item.binding)

    metrics.out_nodes = out.node_count
    metrics.out_edges = out.edge_count
    metrics.seconds = time.perf_counter() - started
    return out, metrics
