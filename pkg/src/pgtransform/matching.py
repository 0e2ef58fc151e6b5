"""Query evaluation over property graphs.

Matches are whole paths: alternating node/edge sequences that start and end
at a node (a single node is a zero-length path). Every atom match is
node-delimited, so concatenation is uniformly "join at the shared junction
node". Restrictors prune during composition - a partial path that already
repeats an edge (trail) or node (simple) can never extend to a valid whole
path - which keeps unbounded repetition finite. Shortest paths are found by
capping unbounded repetition at the graph's node count (a minimal-length
match never needs more iterations: removing a cycle of junction nodes from
an iteration sequence only shortens the path) and filtering to minimal
length per endpoint pair afterwards.

Conditions follow two-valued semantics: an equality atom holds only when
both sides are defined and equal, so negation holds whenever either side
is undefined.

Results are deterministic: bindings are sorted lexicographically by
(variable name, bound id) pairs.
"""

from typing import Iterable, Optional

from .graph import PropertyGraph, Value, value_eq, value_kind
from .patterns import (
    And,
    Card,
    Concat,
    CondPat,
    Condition,
    Const,
    Direction,
    EdgeAtom,
    Eq,
    GpcPlusQuery,
    GpcQuery,
    Lower,
    NodeAtom,
    Not,
    Operand,
    Or,
    Param,
    PathPattern,
    Pattern,
    PropRef,
    Repeat,
    Restrictor,
    UnionPat,
    condition_vars,
    conjuncts,
    infer_schema,
    pattern_vars,
    singleton_vars,
    validate_plus,
)

Binding = dict[str, str]
Params = dict[str, Value]


class EvaluationError(Exception):
    pass


class PathMatch:
    """One matched path with its variable assignment."""

    __slots__ = ("path", "assignment")

    def __init__(self, path: tuple[str, ...], assignment: Binding) -> None:
        self.path = path
        self.assignment = assignment

    @property
    def src(self) -> str:
        return self.path[0]

    @property
    def tgt(self) -> str:
        return self.path[-1]

    @property
    def length(self) -> int:
        return (len(self.path) - 1) // 2

    def key(self) -> tuple:
        return (self.path, tuple(sorted(self.assignment.items())))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PathMatch) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"PathMatch(path={self.path!r}, assignment={self.assignment!r})"


# -- condition evaluation ----------------------------------------------------

_UNDEFINED = object()


def _operand_value(op: Operand, assignment: Binding, g: PropertyGraph, params: Params):
    if isinstance(op, Const):
        return op.value
    if isinstance(op, Param):
        if op.name not in params:
            raise EvaluationError(f"unresolved parameter ${op.name}")
        return params[op.name]
    if isinstance(op, PropRef):
        element = assignment.get(op.var)
        if element is None:
            raise EvaluationError(f"condition variable {op.var!r} is unbound")
        v = g.get_property(element, op.key)
        return _UNDEFINED if v is None else v
    if isinstance(op, Lower):
        v = _operand_value(op.inner, assignment, g, params)
        if v is _UNDEFINED or not isinstance(v, str):
            return _UNDEFINED
        return v.lower()
    raise TypeError(f"not an operand: {op!r}")


def eval_condition(
    cond: Condition, assignment: Binding, g: PropertyGraph, params: Optional[Params] = None
) -> bool:
    params = params or {}
    if isinstance(cond, Eq):
        left = _operand_value(cond.left, assignment, g, params)
        right = _operand_value(cond.right, assignment, g, params)
        if left is _UNDEFINED or right is _UNDEFINED:
            return False
        return value_eq(left, right)
    if isinstance(cond, Not):
        return not eval_condition(cond.inner, assignment, g, params)
    if isinstance(cond, And):
        return eval_condition(cond.left, assignment, g, params) and eval_condition(
            cond.right, assignment, g, params
        )
    if isinstance(cond, Or):
        return eval_condition(cond.left, assignment, g, params) or eval_condition(
            cond.right, assignment, g, params
        )
    raise TypeError(f"not a condition: {cond!r}")


# -- path matching -----------------------------------------------------------


class _GraphView:
    """Immutable snapshot of the pieces matching needs."""

    def __init__(self, g: PropertyGraph) -> None:
        self.g = g
        self.node_ids = g.nodes()
        self.edge_info = [(e, *g.endpoints(e)) for e in g.edges()]

    def node_has_label(self, node: str, label: str) -> bool:
        return label in self.g.labels(node)

    def edge_has_label(self, edge: str, label: str) -> bool:
        return label in self.g.labels(edge)


def _unify(a: Binding, b: Binding) -> Optional[Binding]:
    merged = dict(a)
    for var, elem in b.items():
        prior = merged.get(var)
        if prior is None:
            merged[var] = elem
        elif prior != elem:
            return None
    return merged


def _compose_paths(p1: tuple, p2: tuple, restrictor: Restrictor) -> Optional[tuple]:
    if p1[-1] != p2[0]:
        return None
    if restrictor is Restrictor.TRAIL:
        if set(p1[1::2]) & set(p2[1::2]):
            return None
    elif restrictor is Restrictor.SIMPLE:
        if set(p1[0::2]) & set(p2[2::2]):
            return None
    return p1 + p2[1:]


def _compose(m1: PathMatch, m2: PathMatch, restrictor: Restrictor) -> Optional[PathMatch]:
    path = _compose_paths(m1.path, m2.path, restrictor)
    if path is None:
        return None
    assignment = _unify(m1.assignment, m2.assignment)
    if assignment is None:
        return None
    return PathMatch(path, assignment)


def _repeat_paths(
    inner_paths: list[tuple],
    lo: int,
    hi: Optional[int],
    restrictor: Restrictor,
    view: _GraphView,
) -> set[tuple]:
    """Paths matched by k-fold composition of inner_paths, lo <= k <= hi."""
    by_start: dict[str, list[tuple]] = {}
    for p in inner_paths:
        by_start.setdefault(p[0], []).append(p)

    if hi is None and restrictor is Restrictor.SHORTEST:
        # A minimal-length match never needs more iterations than there are
        # nodes: a repeated junction node marks a removable cycle.
        hi = max(lo, len(view.node_ids))

    results: set[tuple] = set()
    if hi is not None:
        level: set[tuple] = {(n,) for n in view.node_ids}
        if lo == 0:
            results |= level
        for k in range(1, hi + 1):
            nxt: set[tuple] = set()
            for p in level:
                for ext in by_start.get(p[-1], ()):
                    combined = _compose_paths(p, ext, restrictor)
                    if combined is not None:
                        nxt.add(combined)
            level = nxt
            if not level:
                break
            if k >= lo:
                results |= level
        return results

    # Unbounded repetition under trail or simple: restrictor-valid paths are
    # finite, so explore (path, min(k, lo)) states to a fixpoint.
    seen: set[tuple] = set()
    frontier = {((n,), 0) for n in view.node_ids}
    seen |= frontier
    while frontier:
        nxt_frontier = set()
        for path, kc in frontier:
            for ext in by_start.get(path[-1], ()):
                combined = _compose_paths(path, ext, restrictor)
                if combined is None:
                    continue
                state = (combined, min(kc + 1, lo))
                if state not in seen:
                    seen.add(state)
                    nxt_frontier.add(state)
        frontier = nxt_frontier
    return {path for path, kc in seen if kc >= lo}


def _match(
    p: Pattern, view: _GraphView, restrictor: Restrictor, params: Params
) -> list[PathMatch]:
    if isinstance(p, NodeAtom):
        out = []
        for n in view.node_ids:
            if p.label is not None and not view.node_has_label(n, p.label):
                continue
            out.append(PathMatch((n,), {p.var: n} if p.var else {}))
        return out
    if isinstance(p, EdgeAtom):
        out = []
        for e, src, tgt in view.edge_info:
            if p.label is not None and not view.edge_has_label(e, p.label):
                continue
            # a loop edge visits its node twice, so it is never a simple path
            if restrictor is Restrictor.SIMPLE and src == tgt:
                continue
            if p.direction is Direction.FORWARD:
                path = (src, e, tgt)
            else:
                path = (tgt, e, src)
            out.append(PathMatch(path, {p.var: e} if p.var else {}))
        return out
    if isinstance(p, Concat):
        left = _match(p.left, view, restrictor, params)
        right = _match(p.right, view, restrictor, params)
        by_start: dict[str, list[PathMatch]] = {}
        for m in right:
            by_start.setdefault(m.path[0], []).append(m)
        seen: dict[tuple, PathMatch] = {}
        for m1 in left:
            for m2 in by_start.get(m1.path[-1], ()):
                combined = _compose(m1, m2, restrictor)
                if combined is not None:
                    seen[combined.key()] = combined
        return list(seen.values())
    if isinstance(p, UnionPat):
        shared = set(pattern_vars(p.left)) & set(pattern_vars(p.right))
        seen = {}
        for branch in (p.left, p.right):
            for m in _match(branch, view, restrictor, params):
                kept = PathMatch(
                    m.path, {v: e for v, e in m.assignment.items() if v in shared}
                )
                seen[kept.key()] = kept
        return list(seen.values())
    if isinstance(p, CondPat):
        return [
            m
            for m in _match(p.inner, view, restrictor, params)
            if eval_condition(p.condition, m.assignment, view.g, params)
        ]
    if isinstance(p, Repeat):
        inner = _match(p.inner, view, restrictor, params)
        inner_paths = sorted({m.path for m in inner})
        paths = _repeat_paths(inner_paths, p.lo, p.hi, restrictor, view)
        return [PathMatch(path, {}) for path in sorted(paths)]
    raise TypeError(f"not a pattern: {p!r}")


def match_path(
    pp: PathPattern, g: PropertyGraph, params: Optional[Params] = None
) -> list[PathMatch]:
    """All restrictor-valid matches of one path pattern, in sorted order."""
    view = _GraphView(g)
    matches = _match(pp.pattern, view, pp.restrictor, params or {})
    if pp.restrictor is Restrictor.SHORTEST:
        best: dict[tuple[str, str], int] = {}
        for m in matches:
            pair = (m.src, m.tgt)
            if pair not in best or m.length < best[pair]:
                best[pair] = m.length
        matches = [m for m in matches if m.length == best[(m.src, m.tgt)]]
    return sorted(matches, key=PathMatch.key)


# -- joins -------------------------------------------------------------------


def _equi_sides(c: Condition) -> Optional[tuple[Operand, Operand]]:
    """The two property sides of a plain equality conjunct, if it is one."""
    if not isinstance(c, Eq):
        return None

    def strip(op: Operand):
        return op.inner if isinstance(op, Lower) else op

    if isinstance(strip(c.left), PropRef) and isinstance(strip(c.right), PropRef):
        return (c.left, c.right)
    return None


def _key_fn(op: Operand, g: PropertyGraph):
    lowered = isinstance(op, Lower)
    ref = op.inner if lowered else op
    assert isinstance(ref, PropRef)

    def fn(row: Binding):
        v = g.get_property(row[ref.var], ref.key)
        if v is None:
            return None
        if lowered:
            if not isinstance(v, str):
                return None
            v = v.lower()
        return (value_kind(v), v)

    return fn


def evaluate(
    q: GpcQuery, g: PropertyGraph, params: Optional[Params] = None
) -> list[Binding]:
    """All bindings of the query's singleton variables, canonically sorted."""
    params = params or {}
    schema = infer_schema(q)
    out_vars = singleton_vars(q)

    remaining = conjuncts(q.condition)
    rows: list[Binding] = [{}]
    bound: set[str] = set()

    for pp in q.paths:
        path_rows_seen: dict[tuple, Binding] = {}
        for m in match_path(pp, g, params):
            item = tuple(sorted(m.assignment.items()))
            path_rows_seen.setdefault(item, m.assignment)
        new_rows = list(path_rows_seen.values())
        new_vars = {v for v in pattern_vars(pp.pattern) if schema[v].card is Card.ONE}

        # Conjuncts decided entirely by this path filter it up front.
        local = [c for c in remaining if set(condition_vars(c)) <= new_vars]
        for c in local:
            new_rows = [r for r in new_rows if eval_condition(c, r, g, params)]
            remaining.remove(c)

        shared = sorted(bound & new_vars)
        # Cross-path equality conjuncts become hash-join keys.
        probe_keys = []
        build_keys = []
        consumed = []
        for c in remaining:
            sides = _equi_sides(c)
            if sides is None:
                continue
            cv = set(condition_vars(c))
            if len(cv) != 2:
                continue
            a, b = sides
            a_ref = a.inner if isinstance(a, Lower) else a
            b_ref = b.inner if isinstance(b, Lower) else b
            if a_ref.var in bound and b_ref.var in new_vars:
                probe_keys.append(_key_fn(a, g))
                build_keys.append(_key_fn(b, g))
                consumed.append(c)
            elif b_ref.var in bound and a_ref.var in new_vars:
                probe_keys.append(_key_fn(b, g))
                build_keys.append(_key_fn(a, g))
                consumed.append(c)
        for c in consumed:
            remaining.remove(c)

        index: dict[tuple, list[Binding]] = {}
        for r in new_rows:
            kv = tuple(r[v] for v in shared) + tuple(fn(r) for fn in build_keys)
            if None in kv[len(shared) :]:
                continue
            index.setdefault(kv, []).append(r)

        joined: list[Binding] = []
        for row in rows:
            kv = tuple(row[v] for v in shared) + tuple(fn(row) for fn in probe_keys)
            if None in kv[len(shared) :]:
                continue
            for r in index.get(kv, ()):
                joined.append({**row, **r})
        rows = joined
        bound |= new_vars

        ready = [c for c in remaining if set(condition_vars(c)) <= bound]
        for c in ready:
            rows = [r for r in rows if eval_condition(c, r, g, params)]
            remaining.remove(c)
        if not rows:
            break

    for c in remaining:
        rows = [r for r in rows if eval_condition(c, r, g, params)]

    final: dict[tuple, Binding] = {}
    for r in rows:
        projected = {v: r[v] for v in out_vars}
        final[tuple(sorted(projected.items()))] = projected
    return [final[k] for k in sorted(final)]


def evaluate_plus(
    q: GpcPlusQuery, g: PropertyGraph, params: Optional[Params] = None
) -> list[Binding]:
    """Deduplicated union over the disjuncts, projected if a projection is set."""
    validate_plus(q)
    final: dict[tuple, Binding] = {}
    for d in q.disjuncts:
        for row in evaluate(d, g, params):
            if q.projection:
                row = {v: row[v] for v in q.projection}
            final[tuple(sorted(row.items()))] = row
    return [final[k] for k in sorted(final)]
