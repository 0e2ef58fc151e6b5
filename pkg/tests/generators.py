"""Seeded random corpora: graphs, queries, transformations.

All generators take an explicit random.Random so every test case is
reproducible from its seed.
"""

import random
from typing import Optional, Sequence

from pgtransform.graph import PropertyGraph
from pgtransform.patterns import (
    And,
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
    PathPattern,
    PropRef,
    Repeat,
    Restrictor,
    UnionPat,
)
from pgtransform.rules import (
    ConstArg,
    EdgeCtor,
    NodeCtor,
    PropArg,
    Rule,
    VarArg,
)

LABELS = ("A", "B")
KEYS = ("a", "b")
# 1, True and 1.0 deliberately collide under untyped equality
VALUES = (1, 2, "x", True, 1.0)
# no int/float aliasing: openCypher compares numbers across types, the
# engine does not, so script-parity corpora must not depend on the gap
SCRIPT_SAFE_VALUES = (1, 2, "x", True, 1.5)


def rand_graph(
    rng: random.Random,
    max_nodes: int = 6,
    max_edges: int = 8,
    labels: Sequence[str] = LABELS,
    keys: Sequence[str] = KEYS,
    values: Sequence = VALUES,
    dense: bool = False,
) -> PropertyGraph:
    """Random small graph; dense=True defines every key on every element."""
    g = PropertyGraph()
    n = rng.randint(1, max_nodes)
    for i in range(n):
        nid = f"n{i}"
        g.add_node(nid)
        g.add_labels(nid, [lb for lb in labels if rng.random() < 0.5])
        for k in keys:
            if dense or rng.random() < 0.6:
                g.set_property(nid, k, rng.choice(values))
    ids = g.nodes()
    for j in range(rng.randint(0, max_edges)):
        eid = f"e{j}"
        g.add_edge(eid, rng.choice(ids), rng.choice(ids))
        g.add_labels(eid, [lb for lb in labels if rng.random() < 0.5])
        for k in keys:
            if dense or rng.random() < 0.4:
                g.set_property(eid, k, rng.choice(values))
    return g


def _rand_operand(rng, variables, keys, consts, allow_lower=True):
    roll = rng.random()
    if roll < 0.45 and variables:
        ref = PropRef(rng.choice(variables), rng.choice(keys))
        if allow_lower and rng.random() < 0.15:
            return Lower(ref)
        return ref
    return Const(rng.choice(consts))


def rand_condition(rng, variables, keys=KEYS, consts=VALUES, depth: int = 2,
                   allow_lower: bool = True):
    if depth > 0 and rng.random() < 0.4:
        kind = rng.randrange(3)
        if kind == 0:
            return Not(rand_condition(rng, variables, keys, consts, depth - 1, allow_lower))
        left = rand_condition(rng, variables, keys, consts, depth - 1, allow_lower)
        right = rand_condition(rng, variables, keys, consts, depth - 1, allow_lower)
        return And(left, right) if kind == 1 else Or(left, right)
    return Eq(
        _rand_operand(rng, variables, keys, consts, allow_lower),
        _rand_operand(rng, variables, keys, consts, allow_lower),
    )


def rand_query(
    rng: random.Random,
    labels: Sequence[str] = LABELS,
    keys: Sequence[str] = KEYS,
    consts: Sequence = VALUES,
    max_atoms: int = 4,
    allow_repeat: bool = True,
    restrictors: Sequence[Restrictor] = tuple(Restrictor),
    two_paths: bool = True,
) -> GpcQuery:
    counter = [0]
    seen: dict[str, list[str]] = {"node": [], "edge": []}

    def fresh(kind: str) -> Optional[str]:
        if rng.random() < 0.3:
            return None
        # reusing a name forces a join on that variable
        if seen[kind] and rng.random() < 0.25:
            return rng.choice(seen[kind])
        counter[0] += 1
        name = f"v{counter[0]}"
        seen[kind].append(name)
        return name

    def label_or_none():
        return rng.choice(labels) if rng.random() < 0.6 else None

    def build_path(n_atoms: int, allow_rep: bool) -> PathPattern:
        pattern = NodeAtom(fresh("node"), label_or_none())
        used_repeat = False
        atoms = 1
        while atoms < n_atoms:
            edge = EdgeAtom(_rand_dir(rng), fresh("edge"), label_or_none())
            if allow_rep and not used_repeat and rng.random() < 0.35:
                lo = rng.randint(0, 2)
                hi = rng.choice([lo, lo + 1, lo + 2, None])
                edge = Repeat(EdgeAtom(_rand_dir(rng), None, label_or_none()), lo, hi)
                used_repeat = True
            elif rng.random() < 0.25:
                # one-sided variables under a union become optional bindings
                if rng.random() < 0.5:
                    alt = EdgeAtom(_rand_dir(rng), fresh("edge"), label_or_none())
                else:
                    alt = Concat(
                        Concat(
                            EdgeAtom(_rand_dir(rng), None, label_or_none()),
                            NodeAtom(fresh("node"), label_or_none()),
                        ),
                        EdgeAtom(_rand_dir(rng), None, label_or_none()),
                    )
                edge = UnionPat(edge, alt)
            pattern = Concat(pattern, edge)
            pattern = Concat(pattern, NodeAtom(fresh("node"), label_or_none()))
            atoms += 2
        local_vars = _singleton_names(pattern)
        if local_vars and rng.random() < 0.3:
            pattern = CondPat(pattern, rand_condition(rng, local_vars, keys, consts, 1))
        return PathPattern(pattern, rng.choice(list(restrictors)))

    n_paths = 2 if (two_paths and rng.random() < 0.35) else 1
    budget = rng.randint(1, max_atoms)
    paths = []
    for i in range(n_paths):
        n_atoms = max(1, budget if n_paths == 1 else rng.randint(1, max(1, budget - 1)))
        if n_atoms % 2 == 0:
            n_atoms -= 1
        paths.append(build_path(max(1, n_atoms), allow_repeat and i == 0))

    all_vars = []
    for pp in paths:
        all_vars.extend(v for v in _singleton_names(pp.pattern) if v not in all_vars)
    condition = None
    if all_vars and rng.random() < 0.6:
        condition = rand_condition(rng, all_vars, keys, consts)
    return GpcQuery(tuple(paths), condition)


def _rand_dir(rng):
    return Direction.FORWARD if rng.random() < 0.7 else Direction.BACKWARD


def _singleton_names(pattern) -> list[str]:
    """Variables bound outside any repetition, in syntactic order.

    Variables from union branches are included: conditions may reference
    them even though a given match might leave them unbound.
    """
    out: list[str] = []

    def visit(p, inside_repeat: bool) -> None:
        if isinstance(p, (NodeAtom, EdgeAtom)):
            if p.var is not None and not inside_repeat and p.var not in out:
                out.append(p.var)
        elif isinstance(p, (Concat, UnionPat)):
            visit(p.left, inside_repeat)
            visit(p.right, inside_repeat)
        elif isinstance(p, CondPat):
            visit(p.inner, inside_repeat)
        elif isinstance(p, Repeat):
            visit(p.inner, True)

    visit(pattern, False)
    return out


def rand_transformation(
    rng: random.Random,
    max_rules: int = 4,
    labels: Sequence[str] = LABELS,
    keys: Sequence[str] = KEYS,
    consts: Sequence = VALUES,
    out_labels: Sequence[str] = ("X", "Y"),
    lhs_always_labeled: bool = False,
    allow_lower: bool = True,
) -> list[Rule]:
    """Random well-typed transformation.

    lhs_always_labeled + a label alphabet disjoint from out_labels keeps
    matches on the input schema, which script-parity corpora rely on.
    """
    rules = []
    for i in range(rng.randint(1, max_rules)):
        # LHS: one or two node atoms, possibly one edge between them
        def lhs_label():
            if lhs_always_labeled or rng.random() < 0.6:
                return rng.choice(labels)
            return None

        u = "u"
        atoms: list = [NodeAtom(u, lhs_label())]
        node_vars = [u]
        pattern = atoms[0]
        if rng.random() < 0.5:
            v = "v"
            node_vars.append(v)
            if rng.random() < 0.5:
                pattern = Concat(
                    Concat(pattern, EdgeAtom(_rand_dir(rng), None, lhs_label())),
                    NodeAtom(v, lhs_label()),
                )
            else:
                query_paths = [
                    PathPattern(pattern, Restrictor.TRAIL),
                    PathPattern(NodeAtom(v, lhs_label()), Restrictor.TRAIL),
                ]
                pattern = None
        condition = None
        if rng.random() < 0.4:
            condition = rand_condition(rng, node_vars, keys, consts, 1, allow_lower)
        if pattern is not None:
            query = GpcQuery((PathPattern(pattern, Restrictor.TRAIL),), condition)
        else:
            query = GpcQuery(tuple(query_paths), condition)

        def rand_id_args():
            n = rng.randint(1, 2)
            args = []
            for _ in range(n):
                roll = rng.random()
                if roll < 0.4:
                    args.append(VarArg(rng.choice(node_vars)))
                elif roll < 0.8:
                    args.append(PropArg(rng.choice(node_vars), rng.choice(keys)))
                else:
                    args.append(ConstArg(rng.choice(consts)))
            return tuple(args)

        def rand_props():
            props = []
            for key in keys:
                if rng.random() < 0.5:
                    roll = rng.random()
                    if roll < 0.6:
                        props.append((key, PropRef(rng.choice(node_vars), rng.choice(keys))))
                    else:
                        props.append((key, Const(rng.choice(consts))))
            return tuple(props)

        def rand_node_ctor(alias=None):
            n_labels = rng.randint(0, 2)
            return NodeCtor(
                id_args=rand_id_args(),
                labels=tuple(rng.sample(out_labels, n_labels)),
                props=rand_props(),
                alias=alias,
            )

        if rng.random() < 0.5:
            ctors: tuple = (rand_node_ctor(),)
        else:
            ctors = (
                EdgeCtor(
                    src=rand_node_ctor(),
                    tgt=rand_node_ctor(),
                    id_args=rand_id_args() if rng.random() < 0.5 else (),
                    labels=(rng.choice(out_labels),),
                    props=rand_props(),
                ),
            )
        rules.append(Rule(name=f"r{i}", query=query, ctors=ctors))
    return rules
