"""Reference implementations the engine is tested against.

Everything here favors obviousness over speed: walks are enumerated
explicitly, joins are nested loops, and restrictors are applied as whole-walk
filters. Nothing in this module imports the engine's matching code.
"""

from typing import Optional

from pgtransform.patterns import (
    And,
    Card,
    Concat,
    CondPat,
    Const,
    Direction,
    EdgeAtom,
    Eq,
    GpcQuery,
    Lower,
    NodeAtom,
    Not,
    Or,
    Param,
    PropRef,
    Repeat,
    Restrictor,
    UnionPat,
    infer_schema,
)

# A walk alternates node and edge ids: (n0, e1, n1, ..., ek, nk).
Walk = tuple


def _typed_eq(a, b) -> bool:
    # bool is an int subclass, so type identity keeps True and 1 apart
    return type(a) is type(b) and a == b


def _operand_value(op, assignment, g, params):
    """Value of an operand, or None for undefined."""
    if isinstance(op, Const):
        return op.value
    if isinstance(op, Param):
        return params.get(op.name)
    if isinstance(op, PropRef):
        element = assignment.get(op.var)
        if element is None:
            return None
        return g.get_property(element, op.key)
    if isinstance(op, Lower):
        v = _operand_value(op.inner, assignment, g, params)
        return v.lower() if isinstance(v, str) else None
    raise TypeError(f"unknown operand {op!r}")


def eval_condition(cond, assignment, g, params) -> bool:
    if isinstance(cond, Eq):
        left = _operand_value(cond.left, assignment, g, params)
        right = _operand_value(cond.right, assignment, g, params)
        return left is not None and right is not None and _typed_eq(left, right)
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
    raise TypeError(f"unknown condition {cond!r}")


def _merge_assignments(a: dict, b: dict) -> Optional[dict]:
    for k, v in b.items():
        if k in a and a[k] != v:
            return None
    return {**a, **b}


def _walk_ok_partial(walk: Walk, restrictor: Restrictor) -> bool:
    """Prune during repetition: a violated restrictor never recovers."""
    if restrictor is Restrictor.SIMPLE:
        nodes = walk[::2]
        return len(set(nodes)) == len(nodes)
    if restrictor is Restrictor.TRAIL:
        edges = walk[1::2]
        return len(set(edges)) == len(edges)
    return True


def _repeat_walks(inner_walks, lo, hi, g, restrictor):
    if hi is None:
        # Unbounded: trail and simple walks cannot revisit an edge or node, so
        # iteration depth is bounded by the graph; a minimal-length (shortest)
        # match never needs more junction visits than lo plus one per node.
        hi = lo + g.node_count + g.edge_count
    produced = set()
    results = []
    level = {(n,) for n in g.nodes()}
    for k in range(0, hi + 1):
        if k >= lo:
            for w in sorted(level):
                if w not in produced:
                    produced.add(w)
                    results.append((w, {}))
        if k == hi:
            break
        nxt = set()
        for w in level:
            for ext in inner_walks:
                if w[-1] == ext[0]:
                    combined = w + ext[1:]
                    if _walk_ok_partial(combined, restrictor):
                        nxt.add(combined)
        if not nxt:
            break
        level = nxt
    return results


def _walks(p, g, restrictor, params, group_depth=0):
    """All (walk, assignment) pairs structurally matching p.

    Assignments cover variables outside repetitions only; repeated
    subpatterns contribute their walks but no bindings.
    """
    if isinstance(p, NodeAtom):
        out = []
        for n in g.nodes():
            if p.label is not None and p.label not in g.labels(n):
                continue
            a = {} if (p.var is None or group_depth) else {p.var: n}
            out.append(((n,), a))
        return out
    if isinstance(p, EdgeAtom):
        out = []
        for e in g.edges():
            if p.label is not None and p.label not in g.labels(e):
                continue
            s, t = g.src(e), g.tgt(e)
            if p.direction is Direction.BACKWARD:
                s, t = t, s
            a = {} if (p.var is None or group_depth) else {p.var: e}
            out.append(((s, e, t), a))
        return out
    if isinstance(p, Concat):
        left = _walks(p.left, g, restrictor, params, group_depth)
        right = _walks(p.right, g, restrictor, params, group_depth)
        out = []
        for w1, a1 in left:
            for w2, a2 in right:
                if w1[-1] != w2[0]:
                    continue
                merged = _merge_assignments(a1, a2)
                if merged is not None:
                    out.append((w1 + w2[1:], merged))
        return out
    if isinstance(p, UnionPat):
        return _walks(p.left, g, restrictor, params, group_depth) + _walks(
            p.right, g, restrictor, params, group_depth
        )
    if isinstance(p, CondPat):
        return [
            (w, a)
            for w, a in _walks(p.inner, g, restrictor, params, group_depth)
            if eval_condition(p.condition, a, g, params)
        ]
    if isinstance(p, Repeat):
        inner = _walks(p.inner, g, restrictor, params, group_depth + 1)
        return _repeat_walks([w for w, _ in inner], p.lo, p.hi, g, restrictor)
    raise TypeError(f"unknown pattern {p!r}")


def _restrict(pairs, restrictor):
    if restrictor is Restrictor.SIMPLE:
        return [(w, a) for w, a in pairs if len(set(w[::2])) == len(w[::2])]
    if restrictor is Restrictor.TRAIL:
        return [(w, a) for w, a in pairs if len(set(w[1::2])) == len(w[1::2])]
    best: dict[tuple, int] = {}
    for w, _ in pairs:
        pair = (w[0], w[-1])
        n = len(w) // 2
        if pair not in best or n < best[pair]:
            best[pair] = n
    return [(w, a) for w, a in pairs if len(w) // 2 == best[(w[0], w[-1])]]


def evaluate_oracle(q: GpcQuery, g, params: Optional[dict] = None) -> list[dict]:
    """Binding set of q on g by exhaustive walk enumeration."""
    params = params or {}
    schema = infer_schema(q)
    out_vars = [v for v, vt in schema.items() if vt.card is Card.ONE]

    rows = [{}]
    for path in q.paths:
        pairs = _restrict(_walks(path.pattern, g, path.restrictor, params), path.restrictor)
        assignments = {tuple(sorted(a.items())): a for _, a in pairs}
        joined = []
        for row in rows:
            for a in assignments.values():
                merged = _merge_assignments(row, a)
                if merged is not None:
                    joined.append(merged)
        rows = joined
    if q.condition is not None:
        rows = [r for r in rows if eval_condition(q.condition, r, g, params)]

    final = {}
    for r in rows:
        projected = {v: r[v] for v in out_vars if v in r}
        final[tuple(sorted(projected.items()))] = projected
    return list(final.values())


def binding_set(rows) -> set:
    return {tuple(sorted(r.items())) for r in rows}


# -- similarity closure oracle ----------------------------------------------


def similarity_pairs(g) -> set[tuple[str, str]]:
    """(o, p) officer pairs connected by the chained-similarity shape:

    o -similar*-> o2 -registered_address-> a1 -similar-> a2
      <-registered_address- o3 <-similar*- p

    with all edges distinct along one walk (trail) and case-insensitive
    equality of the two officers' names. Only the explicit junction atoms
    constrain labels; nodes inside a chain are unconstrained.
    """

    def lname(n):
        v = g.get_property(n, "name")
        return v.lower() if isinstance(v, str) else None

    sim_edges = [e for e in g.edges() if "similar" in g.labels(e)]
    ra_edges = [e for e in g.edges() if "registered_address" in g.labels(e)]

    def reach(start, used, back):
        """(node, used-edges) states reachable via 0+ distinct similar edges;
        back walks against edge direction."""
        out = [(start, used)]
        frontier = [(start, used)]
        while frontier:
            nxt = []
            for node, u in frontier:
                for e in sim_edges:
                    if e in u:
                        continue
                    s, t = g.src(e), g.tgt(e)
                    if back:
                        s, t = t, s
                    if s != node:
                        continue
                    item = (t, u | {e})
                    nxt.append(item)
                    out.append(item)
            frontier = nxt
            if len(out) > 200000:
                raise RuntimeError("fixture too dense for the oracle")
        return out

    officers = [n for n in g.nodes() if "Officer" in g.labels(n)]
    pairs = set()
    for o in officers:
        if lname(o) is None:
            continue
        for o2, used1 in reach(o, frozenset(), back=False):
            if "Officer" not in g.labels(o2):
                continue
            for e_ra in ra_edges:
                if e_ra in used1 or g.src(e_ra) != o2:
                    continue
                a1 = g.tgt(e_ra)
                if "Address" not in g.labels(a1):
                    continue
                for e_sim in sim_edges:
                    if e_sim in used1 or e_sim == e_ra or g.src(e_sim) != a1:
                        continue
                    a2 = g.tgt(e_sim)
                    if "Address" not in g.labels(a2):
                        continue
                    used2 = used1 | {e_ra, e_sim}
                    for e_ra2 in ra_edges:
                        if e_ra2 in used2 or g.tgt(e_ra2) != a2:
                            continue
                        o3 = g.src(e_ra2)
                        if "Officer" not in g.labels(o3):
                            continue
                        for p, _ in reach(o3, used2 | {e_ra2}, back=True):
                            if "Officer" not in g.labels(p):
                                continue
                            if lname(p) is not None and lname(p) == lname(o):
                                pairs.add((o, p))
    return pairs


# -- CNF truth table ----------------------------------------------------------


def cnf_satisfiable(clauses: list[list[int]], n_vars: int) -> bool:
    """Exhaustive truth-table check; literals are +-(i+1) for variable i."""
    for mask in range(2 ** n_vars):
        assign = [(mask >> i) & 1 == 1 for i in range(n_vars)]
        if all(
            any(assign[abs(lit) - 1] == (lit > 0) for lit in clause)
            for clause in clauses
        ):
            return True
    return False
