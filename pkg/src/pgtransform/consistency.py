"""Static conflict analysis for transformations.

Two constructor applications conflict when they write different values for
the same property of the same output element. Whether that can ever happen
is reduced to query satisfiability: for each candidate pair of constructors
(same id argument shape, at least one shared property key) we build a
"conflict query" - both rule queries renamed apart, variables at matching
id positions identified, value arguments equated, and the two value
expressions for the shared key required to differ. The transformation is
consistent if and only if every conflict query is unsatisfiable over all
input graphs.

Satisfiability is decided by a bounded symbolic search. A state is an
equality graph: symbols for the nodes and edges a path touches, an
eq/neq relation between them, the labels and property records each symbol
must carry, and for each edge symbol its graph-oriented endpoint
occurrences. Saturation closes the state: occurrences of one edge symbol
equate its endpoints role-wise, distinct endpoints force edges apart, and
equated symbols must agree exactly on their records. Path concatenation
merges states at the junction symbol and adds the restrictor's
distinctness constraints (simple: all nodes pairwise distinct; trail: all
edges pairwise distinct). Repetition works over interface summaries
(source descriptor, target descriptor, eq/neq relation) with the concrete
block kept as a splice-in recipe, iterated to a fixpoint for unbounded
bounds.

Property values range over small per-key-class domains: the constants a
key class is compared against, plus enough fresh values to realize every
disequality (one more than the number of negated comparisons touching the
class). Restricting to these domains loses nothing: conditions only
compare values for equality, so any witness can be remapped class-wise
onto the domain without changing any comparison it has to satisfy.

Every satisfiable outcome carries a concrete witness graph, which is then
re-checked by actually evaluating the query on it; a witness that fails
validation demotes the answer rather than shipping a wrong Sat. Unsat is
only reported when no bound was hit. `brute_force_sat` independently
enumerates small graphs over a single global alphabet and never reports
Unsat, which makes it a useful cross-check.
"""

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

from .graph import PropertyGraph, Value, value_kind
from .matching import evaluate
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
    conjoin,
    infer_schema,
)
from .rules import (
    ConstArg,
    EdgeRule,
    FlatRule,
    IdArg,
    LabelArg,
    NodeCtor,
    NodeRule,
    PropArg,
    Rule,
    VarArg,
    desugar,
)


class UnsupportedFeature(Exception):
    """The satisfiability procedure cannot handle this query feature."""


class UnsupportedShortestShape(UnsupportedFeature):
    """A shortest path whose inner variables escape cannot be analyzed."""


class SatStatus(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass
class SatResult:
    status: SatStatus
    witness: Optional[PropertyGraph] = None
    binding: Optional[dict] = None
    reason: str = ""


class _StateBudget(Exception):
    pass


# -- conditions and value domains ---------------------------------------------


def _pattern_conditions(p: Pattern) -> list[Condition]:
    if isinstance(p, (NodeAtom, EdgeAtom)):
        return []
    if isinstance(p, (Concat, UnionPat)):
        return _pattern_conditions(p.left) + _pattern_conditions(p.right)
    if isinstance(p, CondPat):
        return [p.condition] + _pattern_conditions(p.inner)
    if isinstance(p, Repeat):
        return _pattern_conditions(p.inner)
    raise TypeError(f"not a pattern: {p!r}")


def _all_conditions(q: GpcQuery) -> list[Condition]:
    out = []
    for pp in q.paths:
        out.extend(_pattern_conditions(pp.pattern))
    if q.condition is not None:
        out.append(q.condition)
    return out


def _scan_operand(op: Operand) -> None:
    if isinstance(op, Lower):
        raise UnsupportedFeature("toLower is outside the analyzable fragment")
    if isinstance(op, Param):
        raise UnsupportedFeature("parameters are outside the analyzable fragment")


def _eq_atoms_with_polarity(cond: Condition, negated: bool = False) -> list[tuple[Eq, bool]]:
    if isinstance(cond, Eq):
        return [(cond, negated)]
    if isinstance(cond, Not):
        return _eq_atoms_with_polarity(cond.inner, not negated)
    if isinstance(cond, (And, Or)):
        return _eq_atoms_with_polarity(cond.left, negated) + _eq_atoms_with_polarity(
            cond.right, negated
        )
    raise TypeError(f"not a condition: {cond!r}")


# symbolic property values: ('c', kind, value) or ('f', class_rep, index)
_SymVal = tuple


def _const_sym(v: Value) -> _SymVal:
    return ("c", value_kind(v), v)


class _KeyClasses:
    """Union-find over property keys linked by comparisons."""

    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def add(self, k: str) -> None:
        self.parent.setdefault(k, k)

    def find(self, k: str) -> str:
        self.add(k)
        while self.parent[k] != k:
            self.parent[k] = self.parent[self.parent[k]]
            k = self.parent[k]
        return k

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            lo, hi = sorted((ra, rb))
            self.parent[hi] = lo


class _Domains:
    """Per-variable tracked keys and per-key-class value domains."""

    def __init__(self, q: GpcQuery) -> None:
        conds = _all_conditions(q)
        atoms: list[tuple[Eq, bool]] = []
        for c in conds:
            atoms.extend(_eq_atoms_with_polarity(c))

        classes = _KeyClasses()
        var_keys: dict[str, set[str]] = {}
        for eq, _ in atoms:
            _scan_operand(eq.left)
            _scan_operand(eq.right)
            refs = [op for op in (eq.left, eq.right) if isinstance(op, PropRef)]
            for ref in refs:
                classes.add(ref.key)
                var_keys.setdefault(ref.var, set()).add(ref.key)
            if len(refs) == 2:
                classes.union(refs[0].key, refs[1].key)

        consts: dict[str, list[_SymVal]] = {}
        negs: dict[str, int] = {}
        for eq, negated in atoms:
            refs = [op for op in (eq.left, eq.right) if isinstance(op, PropRef)]
            cs = [op for op in (eq.left, eq.right) if isinstance(op, Const)]
            if not refs:
                continue
            rep = classes.find(refs[0].key)
            for c in cs:
                bucket = consts.setdefault(rep, [])
                sym = _const_sym(c.value)
                if sym not in bucket:
                    bucket.append(sym)
            if negated:
                negs[rep] = negs.get(rep, 0) + 1

        self._classes = classes
        self.var_keys: dict[str, tuple[str, ...]] = {
            v: tuple(sorted(ks)) for v, ks in var_keys.items()
        }
        self.class_values: dict[str, tuple[_SymVal, ...]] = {}
        for key in classes.parent:
            rep = classes.find(key)
            if rep in self.class_values:
                continue
            pool = tuple(("f", rep, i) for i in range(negs.get(rep, 0) + 1))
            self.class_values[rep] = tuple(consts.get(rep, ())) + pool

    def values_for(self, key: str) -> tuple[_SymVal, ...]:
        return self.class_values.get(self._classes.find(key), ())


# -- equality-graph states ------------------------------------------------------

_EMPTY_LABELS: frozenset = frozenset()


@dataclass
class _Fragment:
    """Concrete witness piece; property values are still symbolic."""

    nodes: dict[str, tuple[set, dict]]
    edges: dict[str, tuple[str, str, set, dict]]
    src_id: str
    tgt_id: str

    def copy(self) -> "_Fragment":
        return _Fragment(
            {k: (set(l), dict(p)) for k, (l, p) in self.nodes.items()},
            {k: (s, t, set(l), dict(p)) for k, (s, t, l, p) in self.edges.items()},
            self.src_id,
            self.tgt_id,
        )


class _State:
    __slots__ = ("parent", "labels", "record", "edge", "neq", "occ",
                 "var_sym", "src", "tgt", "repeats")

    def __init__(self) -> None:
        self.parent: dict[int, int] = {}
        self.labels: dict[int, frozenset] = {}
        self.record: dict[int, dict[str, Optional[_SymVal]]] = {}
        self.edge: dict[int, bool] = {}
        self.neq: set[frozenset] = set()
        self.occ: list[tuple[int, int, int]] = []
        self.var_sym: dict[str, int] = {}
        self.src: int = -1
        self.tgt: int = -1
        self.repeats: tuple = ()

    def copy(self) -> "_State":
        st = _State.__new__(_State)
        st.parent = dict(self.parent)
        st.labels = dict(self.labels)
        st.record = {k: dict(v) for k, v in self.record.items()}
        st.edge = dict(self.edge)
        st.neq = set(self.neq)
        st.occ = list(self.occ)
        st.var_sym = dict(self.var_sym)
        st.src = self.src
        st.tgt = self.tgt
        st.repeats = self.repeats
        return st

    def find(self, s: int) -> int:
        while self.parent[s] != s:
            self.parent[s] = self.parent[self.parent[s]]
            s = self.parent[s]
        return s

    def add_sym(self, sym: int, is_edge: bool, labels: frozenset,
                record: dict[str, Optional[_SymVal]]) -> None:
        self.parent[sym] = sym
        self.labels[sym] = labels
        self.record[sym] = record
        self.edge[sym] = is_edge

    def union(self, a: int, b: int) -> bool:
        """Merge two symbols; False when their constraints clash."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return True
        if self.edge[ra] != self.edge[rb]:
            return False
        rec_a, rec_b = self.record[ra], self.record[rb]
        for k, v in rec_b.items():
            if k in rec_a and rec_a[k] != v:
                return False
        self.parent[rb] = ra
        self.labels[ra] = self.labels[ra] | self.labels[rb]
        merged = dict(rec_a)
        merged.update(rec_b)
        self.record[ra] = merged
        return True

    def is_neq(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        return any(
            {self.find(x), self.find(y)} == {ra, rb} for x, y in (tuple(p) for p in self.neq)
        )

    def saturate(self) -> bool:
        changed = True
        while changed:
            changed = False
            # one edge symbol has one source and one target
            for i in range(len(self.occ)):
                e1, s1, t1 = self.occ[i]
                for j in range(i + 1, len(self.occ)):
                    e2, s2, t2 = self.occ[j]
                    if self.find(e1) != self.find(e2):
                        continue
                    for a, b in ((s1, s2), (t1, t2)):
                        if self.find(a) != self.find(b):
                            if not self.union(a, b):
                                return False
                            changed = True
            # a disequality inside one class is a contradiction
            neq_roots = set()
            for pair in self.neq:
                a, b = tuple(pair)
                ra, rb = self.find(a), self.find(b)
                if ra == rb:
                    return False
                neq_roots.add(frozenset((ra, rb)))
            # edges with provably different endpoints (same role) differ
            for i in range(len(self.occ)):
                e1, s1, t1 = self.occ[i]
                for j in range(i + 1, len(self.occ)):
                    e2, s2, t2 = self.occ[j]
                    if self.find(e1) == self.find(e2):
                        continue
                    if frozenset((self.find(e1), self.find(e2))) in neq_roots:
                        continue
                    if (
                        frozenset((self.find(s1), self.find(s2))) in neq_roots
                        or frozenset((self.find(t1), self.find(t2))) in neq_roots
                    ):
                        self.neq.add(frozenset((e1, e2)))
                        changed = True
        return True

    def node_syms(self) -> list[int]:
        return [s for s in self.parent if not self.edge[s]]

    def edge_syms(self) -> list[int]:
        return [s for s in self.parent if self.edge[s]]


@dataclass
class _Ctx:
    domains: _Domains
    max_states: int
    max_repeat: int
    counter: list
    created: list
    truncated: list

    def new_sym(self) -> int:
        self.counter[0] += 1
        return self.counter[0]

    def charge(self) -> None:
        self.created[0] += 1
        if self.created[0] > self.max_states:
            raise _StateBudget


def _record_choices(ctx: _Ctx, var: Optional[str]) -> list[dict[str, Optional[_SymVal]]]:
    keys = ctx.domains.var_keys.get(var, ()) if var is not None else ()
    if not keys:
        return [{}]
    options = [[None, *ctx.domains.values_for(k)] for k in keys]
    return [dict(zip(keys, combo)) for combo in itertools.product(*options)]


def _node_states(ctx: _Ctx, atom: NodeAtom) -> list[_State]:
    labels = frozenset((atom.label,)) if atom.label else _EMPTY_LABELS
    out = []
    for record in _record_choices(ctx, atom.var):
        ctx.charge()
        st = _State()
        n = ctx.new_sym()
        st.add_sym(n, False, labels, record)
        if atom.var:
            st.var_sym[atom.var] = n
        st.src = st.tgt = n
        out.append(st)
    return out


def _edge_states(ctx: _Ctx, atom: EdgeAtom, restrictor: Restrictor) -> list[_State]:
    labels = frozenset((atom.label,)) if atom.label else _EMPTY_LABELS
    out = []
    for record in _record_choices(ctx, atom.var):
        ctx.charge()
        st = _State()
        u, v, e = ctx.new_sym(), ctx.new_sym(), ctx.new_sym()
        st.add_sym(u, False, _EMPTY_LABELS, {})
        st.add_sym(v, False, _EMPTY_LABELS, {})
        st.add_sym(e, True, labels, record)
        if atom.var:
            st.var_sym[atom.var] = e
        if atom.direction is Direction.FORWARD:
            st.occ.append((e, u, v))
        else:
            st.occ.append((e, v, u))
        st.src, st.tgt = u, v
        if restrictor is Restrictor.SIMPLE:
            st.neq.add(frozenset((u, v)))
        out.append(st)
    return out


def _merge_states(
    ctx: _Ctx,
    s1: _State,
    s2: _State,
    junction: bool,
    restrictor: Optional[Restrictor],
) -> Optional[_State]:
    ctx.charge()
    st = _State.__new__(_State)
    st.parent = {**s1.parent, **s2.parent}
    st.labels = {**s1.labels, **s2.labels}
    st.record = {**{k: dict(v) for k, v in s1.record.items()},
                 **{k: dict(v) for k, v in s2.record.items()}}
    st.edge = {**s1.edge, **s2.edge}
    st.neq = s1.neq | s2.neq
    st.occ = s1.occ + s2.occ
    st.var_sym = {**s2.var_sym, **s1.var_sym}
    st.src = s1.src
    st.tgt = s2.tgt if junction else s1.tgt
    st.repeats = s1.repeats + s2.repeats

    if restrictor is Restrictor.TRAIL:
        for e1 in s1.edge_syms():
            for e2 in s2.edge_syms():
                st.neq.add(frozenset((e1, e2)))
    elif restrictor is Restrictor.SIMPLE:
        left = [n for n in s1.node_syms() if s1.find(n) != s1.find(s1.tgt)]
        right = [n for n in s2.node_syms() if s2.find(n) != s2.find(s2.src)]
        for n1 in left:
            for n2 in right:
                st.neq.add(frozenset((n1, n2)))

    pairs = []
    if junction:
        pairs.append((s1.tgt, s2.src))
    for var, sym in s2.var_sym.items():
        if var in s1.var_sym:
            pairs.append((s1.var_sym[var], sym))
    for a, b in pairs:
        if not st.union(a, b):
            return None
    if not st.saturate():
        return None
    return st


# -- symbolic condition evaluation ---------------------------------------------


def _sym_operand(state: _State, op: Operand) -> Optional[_SymVal]:
    if isinstance(op, Const):
        return _const_sym(op.value)
    if isinstance(op, PropRef):
        sym = state.var_sym.get(op.var)
        if sym is None:
            return None  # unbound variable: the reference is undefined
        return state.record[state.find(sym)].get(op.key)
    _scan_operand(op)
    raise TypeError(f"not an operand: {op!r}")


def _eval_sym(state: _State, cond: Condition) -> bool:
    if isinstance(cond, Eq):
        a = _sym_operand(state, cond.left)
        b = _sym_operand(state, cond.right)
        return a is not None and b is not None and a == b
    if isinstance(cond, Not):
        return not _eval_sym(state, cond.inner)
    if isinstance(cond, And):
        return _eval_sym(state, cond.left) and _eval_sym(state, cond.right)
    if isinstance(cond, Or):
        return _eval_sym(state, cond.left) or _eval_sym(state, cond.right)
    raise TypeError(f"not a condition: {cond!r}")


# -- canonical forms for deduplication ------------------------------------------


def _desc_key(labels: frozenset, record: dict) -> tuple:
    return (tuple(sorted(labels)), tuple(sorted(record.items(), key=repr)))


def _canon(state: _State) -> tuple:
    order: dict[int, int] = {}

    def visit(sym: int) -> int:
        root = state.find(sym)
        if root not in order:
            order[root] = len(order)
        return order[root]

    seed = [visit(state.src), visit(state.tgt)]
    vars_part = tuple((v, visit(s)) for v, s in sorted(state.var_sym.items()))
    reps = tuple(sorted((visit(j0), visit(jk)) for j0, jk, _ in state.repeats))
    occ_part = tuple(sorted((visit(e), visit(s), visit(t)) for e, s, t in state.occ))
    rest = sorted(
        {state.find(s) for s in state.parent} - set(order),
        key=lambda r: (_desc_key(state.labels[r], state.record[r]), r),
    )
    for r in rest:
        visit(r)
    descs = tuple(
        sorted(
            (order[r], state.edge[r], _desc_key(state.labels[r], state.record[r]))
            for r in {state.find(s) for s in state.parent}
        )
    )
    neqs = tuple(sorted(tuple(sorted((visit(a), visit(b)))) for a, b in
                        ((tuple(p)) for p in state.neq)))
    return (tuple(seed), vars_part, reps, occ_part, descs, neqs)


def _dedup(states: Iterable[_State]) -> list[_State]:
    seen: dict[tuple, _State] = {}
    for st in states:
        key = _canon(st)
        if key not in seen:
            seen[key] = st
    return list(seen.values())


# -- witness fragments -----------------------------------------------------------


def _fragment_of(state: _State) -> _Fragment:
    node_ids: dict[int, str] = {}
    edge_ids: dict[int, str] = {}
    for root in sorted({state.find(s) for s in state.parent}):
        if state.edge[root]:
            edge_ids[root] = f"e{len(edge_ids)}"
        else:
            node_ids[root] = f"n{len(node_ids)}"

    def props(root: int) -> dict:
        return {k: v for k, v in state.record[root].items() if v is not None}

    frag = _Fragment({}, {}, "", "")
    for root, nid in node_ids.items():
        frag.nodes[nid] = (set(state.labels[root]), props(root))
    placed = set()
    for e, s, t in state.occ:
        root = state.find(e)
        if root in placed:
            continue
        placed.add(root)
        frag.edges[edge_ids[root]] = (
            node_ids[state.find(s)],
            node_ids[state.find(t)],
            set(state.labels[root]),
            props(root),
        )
    for i, (j0, jk, recipe) in enumerate(state.repeats):
        _splice(frag, recipe, f"r{i}_", node_ids[state.find(j0)], node_ids[state.find(jk)])
    frag.src_id = node_ids[state.find(state.src)]
    frag.tgt_id = node_ids[state.find(state.tgt)]
    return frag


def _splice(frag: _Fragment, recipe: _Fragment, prefix: str, src_to: str, tgt_to: str) -> None:
    mapping: dict[str, str] = {recipe.src_id: src_to, recipe.tgt_id: tgt_to}
    for nid, (labels, props) in recipe.nodes.items():
        target = mapping.get(nid)
        if target is None:
            target = prefix + nid
            mapping[nid] = target
            frag.nodes[target] = (set(labels), dict(props))
        else:
            have = frag.nodes[target]
            have[0].update(labels)
            have[1].update(props)
    for eid, (s, t, labels, props) in recipe.edges.items():
        frag.edges[prefix + eid] = (mapping[s], mapping[t], set(labels), dict(props))


def _materialize(frag: _Fragment, fresh_names: dict) -> PropertyGraph:
    def concrete(v: _SymVal) -> Value:
        if v[0] == "c":
            return v[2]
        if v not in fresh_names:
            fresh_names[v] = f"__fresh_{len(fresh_names)}"
        return fresh_names[v]

    g = PropertyGraph()
    for nid, (labels, props) in sorted(frag.nodes.items()):
        g.add_node(nid)
        g.add_labels(nid, labels)
        for k, v in sorted(props.items()):
            g.set_property(nid, k, concrete(v))
    for eid, (s, t, labels, props) in sorted(frag.edges.items()):
        g.add_edge(eid, s, t)
        g.add_labels(eid, labels)
        for k, v in sorted(props.items()):
            g.set_property(eid, k, concrete(v))
    return g


# -- repetition -------------------------------------------------------------------

_Desc = tuple  # (labels frozenset, record items tuple)


def _state_desc(state: _State, sym: int) -> _Desc:
    root = state.find(sym)
    return (state.labels[root], tuple(sorted(state.record[root].items(), key=repr)))


_FREE_DESC: _Desc = (_EMPTY_LABELS, ())


def _unify_desc(d1: _Desc, d2: _Desc) -> Optional[_Desc]:
    r1, r2 = dict(d1[1]), dict(d2[1])
    for k, v in r2.items():
        if k in r1 and r1[k] != v:
            return None
    merged = dict(r1)
    merged.update(r2)
    return (d1[0] | d2[0], tuple(sorted(merged.items(), key=repr)))


def _compose_rel(r1: str, r2: str, restrictor: Restrictor) -> str:
    if r1 == "eq":
        return r2
    if r2 == "eq":
        return r1
    return "neq" if restrictor is Restrictor.SIMPLE else "none"


def _identity_fragment() -> _Fragment:
    return _Fragment({"j": (set(), {})}, {}, "j", "j")


def _glue_chain(frag: _Fragment, block: _Fragment, step: int) -> tuple[_Fragment, str]:
    out = frag.copy()
    prefix = f"k{step}_"
    mapping = {block.src_id: out.tgt_id}
    for nid, (labels, props) in block.nodes.items():
        target = mapping.get(nid)
        if target is None:
            target = prefix + nid
            mapping[nid] = target
            out.nodes[target] = (set(labels), dict(props))
        else:
            have = out.nodes[target]
            have[0].update(labels)
            have[1].update(props)
    for eid, (s, t, labels, props) in block.edges.items():
        out.edges[prefix + eid] = (mapping[s], mapping[t], set(labels), dict(props))
    out.tgt_id = mapping[block.tgt_id]
    return out, out.tgt_id


def _repeat_states(
    ctx: _Ctx,
    inner: list[_State],
    lo: int,
    hi: Optional[int],
    restrictor: Restrictor,
) -> list[_State]:
    blocks = []
    seen_blocks = set()
    for st in inner:
        frag = _fragment_of(st)
        rs, rt = st.find(st.src), st.find(st.tgt)
        if rs == rt:
            rel = "eq"
        elif st.is_neq(st.src, st.tgt):
            rel = "neq"
        else:
            rel = "none"
        if restrictor is Restrictor.SIMPLE and rel == "eq" and frag.edges:
            continue
        sd, td = _state_desc(st, st.src), _state_desc(st, st.tgt)
        key = (sd, td, rel)
        if key in seen_blocks:
            continue
        seen_blocks.add(key)
        blocks.append((sd, td, rel, frag))

    bound = max(lo, ctx.max_repeat)
    cap = bound if hi is None else min(hi, bound)

    start_key = (_FREE_DESC, _FREE_DESC, "eq", 0)
    seen: dict[tuple, _Fragment] = {start_key: _identity_fragment()}
    level = dict(seen)
    k = 0
    while level and k < cap:
        k += 1
        nxt: dict[tuple, _Fragment] = {}
        for (sd, td, rel, kc), frag in level.items():
            for bsd, btd, brel, bfrag in blocks:
                jd = _unify_desc(td, bsd)
                if jd is None:
                    continue
                nsd = jd if rel == "eq" else sd
                ntd = jd if brel == "eq" else btd
                nrel = _compose_rel(rel, brel, restrictor)
                nkc = min(kc + 1, lo)
                new_frag, _ = _glue_chain(frag, bfrag, k)
                key = (nsd, ntd, nrel, nkc)
                if key not in seen:
                    seen[key] = new_frag
                    nxt[key] = new_frag
                    ctx.charge()
        level = nxt
    # stopping with growth pending means longer iterates were never summarized
    if level and (hi is None or cap < hi):
        ctx.truncated[0] = True

    out = []
    for (sd, td, rel, kc), frag in seen.items():
        if kc < lo:
            continue
        st = _State()
        j0 = ctx.new_sym()
        st.add_sym(j0, False, sd[0], dict(sd[1]))
        if rel == "eq":
            jk = j0
            merged = _unify_desc(sd, td)
            if merged is None:
                continue
            st.labels[j0] = merged[0]
            st.record[j0] = dict(merged[1])
        else:
            jk = ctx.new_sym()
            st.add_sym(jk, False, td[0], dict(td[1]))
            if rel == "neq":
                st.neq.add(frozenset((j0, jk)))
        st.src, st.tgt = j0, jk
        st.repeats = ((j0, jk, frag),)
        out.append(st)
    return out


# -- pattern enumeration ------------------------------------------------------------


def _pattern_states(ctx: _Ctx, p: Pattern, restrictor: Restrictor) -> list[_State]:
    if isinstance(p, NodeAtom):
        return _node_states(ctx, p)
    if isinstance(p, EdgeAtom):
        return _edge_states(ctx, p, restrictor)
    if isinstance(p, Concat):
        left = _pattern_states(ctx, p.left, restrictor)
        right = _pattern_states(ctx, p.right, restrictor)
        out = []
        for s1 in left:
            for s2 in right:
                merged = _merge_states(ctx, s1, s2, True, restrictor)
                if merged is not None:
                    out.append(merged)
        return _dedup(out)
    if isinstance(p, UnionPat):
        return _dedup(
            _pattern_states(ctx, p.left, restrictor)
            + _pattern_states(ctx, p.right, restrictor)
        )
    if isinstance(p, CondPat):
        return [st for st in _pattern_states(ctx, p.inner, restrictor)
                if _eval_sym(st, p.condition)]
    if isinstance(p, Repeat):
        inner = _pattern_states(ctx, p.inner, restrictor)
        return _repeat_states(ctx, inner, p.lo, p.hi, restrictor)
    raise TypeError(f"not a pattern: {p!r}")


def _spine_end_var(p: Pattern, left: bool) -> Optional[str]:
    while isinstance(p, Concat):
        p = p.left if left else p.right
    if isinstance(p, CondPat):
        p = p.inner
    if isinstance(p, NodeAtom):
        return p.var
    return None


def _check_shortest_shape(pp: PathPattern) -> None:
    schema = infer_schema(GpcQuery((pp,)))
    allowed = {_spine_end_var(pp.pattern, True), _spine_end_var(pp.pattern, False)}
    for var, vt in schema.items():
        if vt.card is Card.ONE and var not in allowed:
            raise UnsupportedShortestShape(
                f"shortest path binds inner variable {var!r}; only endpoint "
                "variables can be analyzed"
            )


def sat_check(
    query: Union[GpcQuery, GpcPlusQuery],
    *,
    max_states: int = 60000,
    max_repeat: int = 16,
    max_witness_tries: int = 12,
    brute_nodes: int = 3,
) -> SatResult:
    """Bounded satisfiability of a query over all input graphs."""
    disjuncts = query.disjuncts if isinstance(query, GpcPlusQuery) else (query,)
    any_unknown = False
    reason = ""
    for q in disjuncts:
        res = _sat_one(q, max_states, max_repeat, max_witness_tries, brute_nodes)
        if res.status is SatStatus.SAT:
            return res
        if res.status is SatStatus.UNKNOWN:
            any_unknown = True
            reason = res.reason
    if any_unknown:
        return SatResult(SatStatus.UNKNOWN, reason=reason)
    return SatResult(SatStatus.UNSAT)


def _sat_one(
    q: GpcQuery, max_states: int, max_repeat: int, tries: int, brute_nodes: int
) -> SatResult:
    infer_schema(q)
    for cond in _all_conditions(q):
        for eq, _ in _eq_atoms_with_polarity(cond):
            _scan_operand(eq.left)
            _scan_operand(eq.right)
    for pp in q.paths:
        if pp.restrictor is Restrictor.SHORTEST:
            _check_shortest_shape(pp)

    ctx = _Ctx(_Domains(q), max_states, max_repeat, [0], [0], [False])
    try:
        combined: Optional[list[_State]] = None
        for pp in q.paths:
            states = _dedup(_pattern_states(ctx, pp.pattern, pp.restrictor))
            if combined is None:
                combined = states
            else:
                merged = []
                for s1 in combined:
                    for s2 in states:
                        m = _merge_states(ctx, s1, s2, False, None)
                        if m is not None:
                            merged.append(m)
                combined = _dedup(merged)
            if not combined:
                break
        assert combined is not None
        if q.condition is not None:
            combined = [st for st in combined if _eval_sym(st, q.condition)]
    except _StateBudget:
        return SatResult(SatStatus.UNKNOWN, reason="state budget exhausted")

    if not combined:
        if ctx.truncated[0]:
            return SatResult(SatStatus.UNKNOWN, reason="repetition bound reached")
        return SatResult(SatStatus.UNSAT)

    sized = [(_fragment_of(st), i) for i, st in enumerate(combined)]
    sized.sort(key=lambda fi: (len(fi[0].nodes) + len(fi[0].edges), fi[1]))
    for frag, _ in sized[:tries]:
        wit = _materialize(frag, {})
        rows = evaluate(q, wit)
        if rows:
            return SatResult(SatStatus.SAT, witness=wit, binding=rows[0])
    fallback = brute_force_sat(q, max_nodes=brute_nodes, max_edges=3, max_evals=3000)
    if fallback.status is SatStatus.SAT:
        return fallback
    return SatResult(SatStatus.UNKNOWN, reason="witness validation failed")


# -- brute force over small graphs ----------------------------------------------


@dataclass(frozen=True)
class FiniteAlphabet:
    """Global label, key, and value universes for exhaustive search."""

    labels: tuple[str, ...]
    keys: tuple[str, ...]
    values: tuple[Value, ...]


def _atom_labels(p: Pattern) -> set[str]:
    if isinstance(p, (NodeAtom, EdgeAtom)):
        return {p.label} if p.label else set()
    if isinstance(p, (Concat, UnionPat)):
        return _atom_labels(p.left) | _atom_labels(p.right)
    if isinstance(p, (CondPat, Repeat)):
        return _atom_labels(p.inner)
    raise TypeError(f"not a pattern: {p!r}")


def derive_alphabet(query: Union[GpcQuery, GpcPlusQuery]) -> FiniteAlphabet:
    disjuncts = query.disjuncts if isinstance(query, GpcPlusQuery) else (query,)
    labels: set[str] = set()
    keys: set[str] = set()
    consts: list[Value] = []
    n_atoms = 0
    for q in disjuncts:
        for pp in q.paths:
            labels |= _atom_labels(pp.pattern)
        for cond in _all_conditions(q):
            for eq, _ in _eq_atoms_with_polarity(cond):
                n_atoms += 1
                for op in (eq.left, eq.right):
                    if isinstance(op, PropRef):
                        keys.add(op.key)
                    elif isinstance(op, Const):
                        sym = _const_sym(op.value)
                        if sym not in map(_const_sym, consts):
                            consts.append(op.value)
    taken = {v for v in consts if isinstance(v, str)}
    fresh = []
    i = 0
    while len(fresh) < n_atoms + 1:
        name = f"__fresh_{i}"
        i += 1
        if name not in taken:
            fresh.append(name)
    return FiniteAlphabet(tuple(sorted(labels)), tuple(sorted(keys)), tuple(consts + fresh))


def brute_force_sat(
    query: Union[GpcQuery, GpcPlusQuery],
    *,
    max_nodes: int = 3,
    max_edges: int = 3,
    max_evals: int = 5000,
) -> SatResult:
    """Enumerate small graphs over the query's alphabet; never answers Unsat."""
    disjuncts = query.disjuncts if isinstance(query, GpcPlusQuery) else (query,)
    fa = derive_alphabet(query)
    n_descs = 2 ** len(fa.labels) * (1 + len(fa.values)) ** len(fa.keys)
    if n_descs > 4096:
        return SatResult(SatStatus.UNKNOWN, reason="alphabet too large to enumerate")
    label_sets = [frozenset(c) for r in range(len(fa.labels) + 1)
                  for c in itertools.combinations(fa.labels, r)]
    records = [dict(zip(fa.keys, combo)) for combo in
               itertools.product([None, *fa.values], repeat=len(fa.keys))]
    descs = [(ls, {k: v for k, v in rec.items() if v is not None})
             for ls in label_sets for rec in records]

    evals = 0
    for n in range(1, max_nodes + 1):
        for node_descs in itertools.combinations_with_replacement(range(len(descs)), n):
            endpoint_pairs = [(i, j) for i in range(n) for j in range(n)]
            for e in range(0, max_edges + 1):
                choices = itertools.combinations_with_replacement(
                    itertools.product(endpoint_pairs, range(len(descs))), e
                )
                for edge_choice in choices:
                    g = PropertyGraph()
                    for i, di in enumerate(node_descs):
                        nid = f"n{i}"
                        g.add_node(nid)
                        labels, props = descs[di]
                        g.add_labels(nid, labels)
                        for k, v in props.items():
                            g.set_property(nid, k, v)
                    for idx, ((i, j), di) in enumerate(edge_choice):
                        eid = f"e{idx}"
                        g.add_edge(eid, f"n{i}", f"n{j}")
                        labels, props = descs[di]
                        g.add_labels(eid, labels)
                        for k, v in props.items():
                            g.set_property(eid, k, v)
                    for q in disjuncts:
                        evals += 1
                        if evals > max_evals:
                            return SatResult(
                                SatStatus.UNKNOWN, reason="evaluation budget exceeded"
                            )
                        rows = evaluate(q, g)
                        if rows:
                            return SatResult(SatStatus.SAT, witness=g, binding=rows[0])
    return SatResult(SatStatus.UNKNOWN, reason="no witness within size bounds")


# -- conflict candidates and queries ---------------------------------------------


def expand_constructors(rules: Sequence[FlatRule]) -> list[NodeRule]:
    """Every node constructor as its own rule; edge endpoints get ::src/::tgt."""
    out: list[NodeRule] = []
    for r in rules:
        if isinstance(r, NodeRule):
            out.append(r)
        else:
            out.append(NodeRule(f"{r.name}::src", r.query, r.src))
            out.append(NodeRule(f"{r.name}::tgt", r.query, r.tgt))
    return out


def _arg_class(a: IdArg) -> str:
    if isinstance(a, VarArg):
        return "id"
    if isinstance(a, LabelArg):
        return "label"
    return "value"


def _args_compatible(args1, schema1, args2, schema2) -> bool:
    if len(args1) != len(args2):
        return False
    for a, b in zip(args1, args2):
        ca, cb = _arg_class(a), _arg_class(b)
        if ca != cb:
            return False
        if ca == "id" and schema1[a.var].kind is not schema2[b.var].kind:
            return False
        if ca == "label" and a.label != b.label:
            return False
    return True


def _shared_keys(props1, props2) -> list[str]:
    map1, map2 = dict(props1), dict(props2)
    out = []
    for k in map1:
        if k not in map2:
            continue
        v1, v2 = map1[k], map2[k]
        if (
            isinstance(v1, Const)
            and isinstance(v2, Const)
            and _const_sym(v1.value) == _const_sym(v2.value)
        ):
            continue  # literally the same constant can never diverge
        out.append(k)
    return sorted(out)


@dataclass(frozen=True)
class ConflictCandidate:
    kind: str  # "node" or "edge"
    rule1: str
    rule2: str
    key: str
    query: GpcQuery


def _query_vars(q: GpcQuery) -> set[str]:
    from .patterns import condition_vars, pattern_vars

    out: set[str] = set()
    for pp in q.paths:
        out |= set(pattern_vars(pp.pattern))
    for cond in _all_conditions(q):
        out |= set(condition_vars(cond))
    return out


def _rename_operand(op: Operand, m: dict[str, str]) -> Operand:
    if isinstance(op, PropRef):
        return PropRef(m.get(op.var, op.var), op.key)
    if isinstance(op, Lower):
        return Lower(_rename_operand(op.inner, m))
    return op


def _rename_condition(c: Condition, m: dict[str, str]) -> Condition:
    if isinstance(c, Eq):
        return Eq(_rename_operand(c.left, m), _rename_operand(c.right, m))
    if isinstance(c, Not):
        return Not(_rename_condition(c.inner, m))
    if isinstance(c, And):
        return And(_rename_condition(c.left, m), _rename_condition(c.right, m))
    if isinstance(c, Or):
        return Or(_rename_condition(c.left, m), _rename_condition(c.right, m))
    raise TypeError(f"not a condition: {c!r}")


def _rename_pattern(p: Pattern, m: dict[str, str]) -> Pattern:
    if isinstance(p, NodeAtom):
        return NodeAtom(m.get(p.var, p.var) if p.var else None, p.label)
    if isinstance(p, EdgeAtom):
        return EdgeAtom(p.direction, m.get(p.var, p.var) if p.var else None, p.label)
    if isinstance(p, Concat):
        return Concat(_rename_pattern(p.left, m), _rename_pattern(p.right, m))
    if isinstance(p, UnionPat):
        return UnionPat(_rename_pattern(p.left, m), _rename_pattern(p.right, m))
    if isinstance(p, CondPat):
        return CondPat(_rename_pattern(p.inner, m), _rename_condition(p.condition, m))
    if isinstance(p, Repeat):
        return Repeat(_rename_pattern(p.inner, m), p.lo, p.hi)
    raise TypeError(f"not a pattern: {p!r}")


def _rename_query(q: GpcQuery, m: dict[str, str]) -> GpcQuery:
    paths = tuple(PathPattern(_rename_pattern(pp.pattern, m), pp.restrictor)
                  for pp in q.paths)
    cond = _rename_condition(q.condition, m) if q.condition is not None else None
    return GpcQuery(paths, cond)


def _freshen(avoid: set[str], q: GpcQuery) -> tuple[GpcQuery, dict[str, str]]:
    mapping: dict[str, str] = {}
    used = set(avoid)
    for v in sorted(_query_vars(q)):
        candidate = f"{v}__2"
        while candidate in used:
            candidate += "_"
        mapping[v] = candidate
        used.add(candidate)
    return _rename_query(q, mapping), mapping


_FALSE_COND = Eq(Const(True), Const(False))


def _arg_operand(a: IdArg, m: dict[str, str]) -> Optional[Operand]:
    if isinstance(a, ConstArg):
        return Const(a.value)
    if isinstance(a, PropArg):
        return PropRef(m.get(a.var, a.var), a.key)
    return None


class _VarClasses:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def find(self, v: str) -> str:
        self.parent.setdefault(v, v)
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            lo, hi = sorted((ra, rb))
            self.parent[hi] = lo

    def mapping(self) -> dict[str, str]:
        return {v: self.find(v) for v in self.parent}


def _positional_constraints(
    args1, args2, m2: dict[str, str], classes: _VarClasses, conjs: list[Condition]
) -> None:
    for a, b in zip(args1, args2):
        ca, cb = _arg_class(a), _arg_class(b)
        if ca != cb:
            conjs.append(_FALSE_COND)
            continue
        if ca == "id":
            classes.union(a.var, m2.get(b.var, b.var))
        elif ca == "label":
            if a.label != b.label:
                conjs.append(_FALSE_COND)
        else:
            left = _arg_operand(a, {})
            right = _arg_operand(b, m2)
            assert left is not None and right is not None
            conjs.append(Eq(left, right))


def _value_operand(props, key: str, m: dict[str, str]) -> Operand:
    for k, op in props:
        if k == key:
            return _rename_operand(op, m)
    raise KeyError(key)


def _graph_dependent(op: Operand) -> bool:
    if isinstance(op, PropRef):
        return True
    if isinstance(op, Lower):
        return _graph_dependent(op.inner)
    return False


def _conflict_query(
    q1: GpcQuery,
    q2: GpcQuery,
    arg_pairs: list[tuple[tuple, tuple]],
    props1,
    props2,
    key: str,
) -> GpcQuery:
    q2f, m2 = _freshen(_query_vars(q1), q2)
    classes = _VarClasses()
    conjs: list[Condition] = []
    for args1, args2 in arg_pairs:
        _positional_constraints(args1, args2, m2, classes, conjs)
    rep = classes.mapping()
    q1r = _rename_query(q1, rep)
    q2r = _rename_query(q2f, rep)
    m2r = {v: rep.get(w, w) for v, w in m2.items()}

    left_val = _value_operand(props1, key, rep)
    right_val = _value_operand(props2, key, m2r)
    conjs = [_rename_condition(c, rep) for c in conjs]
    # A write happens only when its value resolves, so an undefined operand
    # can never conflict: guard each side with a self-equality, which holds
    # exactly when the operand is defined.
    for val in (left_val, right_val):
        if _graph_dependent(val):
            conjs.append(Eq(val, val))
    conjs.append(Not(Eq(left_val, right_val)))

    parts = []
    if q1r.condition is not None:
        parts.append(q1r.condition)
    if q2r.condition is not None:
        parts.append(q2r.condition)
    parts.extend(conjs)
    return GpcQuery(q1r.paths + q2r.paths, conjoin(parts))


def build_conflict_query(u1: NodeRule, u2: NodeRule, key: str) -> GpcQuery:
    return _conflict_query(
        u1.query, u2.query, [(u1.ctor.id_args, u2.ctor.id_args)],
        u1.ctor.props, u2.ctor.props, key,
    )


def build_edge_conflict_query(r1: EdgeRule, r2: EdgeRule, key: str) -> GpcQuery:
    pairs = [
        (r1.src.id_args, r2.src.id_args),
        (r1.tgt.id_args, r2.tgt.id_args),
        (r1.ctor.id_args, r2.ctor.id_args),
    ]
    return _conflict_query(r1.query, r2.query, pairs, r1.ctor.props, r2.ctor.props, key)


def _flatten(rules: Sequence[Union[Rule, FlatRule]]) -> list[FlatRule]:
    flat: list[FlatRule] = []
    for r in rules:
        if isinstance(r, Rule):
            flat.extend(desugar([r]))
        else:
            flat.append(r)
    return flat


def conflict_candidates(rules: Sequence[Union[Rule, FlatRule]]) -> list[ConflictCandidate]:
    flat = _flatten(rules)
    schemas: dict[int, dict] = {}

    def schema_of(q: GpcQuery) -> dict:
        if id(q) not in schemas:
            schemas[id(q)] = infer_schema(q)
        return schemas[id(q)]

    out: list[ConflictCandidate] = []
    units = expand_constructors(flat)
    for i in range(len(units)):
        for j in range(i, len(units)):
            u1, u2 = units[i], units[j]
            s1, s2 = schema_of(u1.query), schema_of(u2.query)
            if not _args_compatible(u1.ctor.id_args, s1, u2.ctor.id_args, s2):
                continue
            for key in _shared_keys(u1.ctor.props, u2.ctor.props):
                out.append(
                    ConflictCandidate(
                        "node", u1.name, u2.name, key,
                        build_conflict_query(u1, u2, key),
                    )
                )
    edge_rules = [r for r in flat if isinstance(r, EdgeRule)]
    for i in range(len(edge_rules)):
        for j in range(i, len(edge_rules)):
            r1, r2 = edge_rules[i], edge_rules[j]
            s1, s2 = schema_of(r1.query), schema_of(r2.query)
            if not (
                _args_compatible(r1.src.id_args, s1, r2.src.id_args, s2)
                and _args_compatible(r1.tgt.id_args, s1, r2.tgt.id_args, s2)
                and _args_compatible(r1.ctor.id_args, s1, r2.ctor.id_args, s2)
            ):
                continue
            for key in _shared_keys(r1.ctor.props, r2.ctor.props):
                out.append(
                    ConflictCandidate(
                        "edge", r1.name, r2.name, key,
                        build_edge_conflict_query(r1, r2, key),
                    )
                )
    return out


# -- whole-transformation verdicts --------------------------------------------------


@dataclass(frozen=True)
class ConsistencyFinding:
    kind: str
    rule1: str
    rule2: str
    key: str
    status: SatStatus
    reason: str = ""
    witness: Optional[PropertyGraph] = None
    binding: Optional[dict] = None


@dataclass
class ConsistencyReport:
    verdict: str  # "consistent", "conflicting", or "unknown"
    findings: list[ConsistencyFinding]
    candidates_checked: int

    @property
    def conflicts(self) -> list[ConsistencyFinding]:
        return [f for f in self.findings if f.status is SatStatus.SAT]


def check_transformation(
    rules: Sequence[Union[Rule, FlatRule]],
    *,
    max_states: int = 60000,
    max_repeat: int = 16,
    brute_nodes: int = 3,
) -> ConsistencyReport:
    """Prove the transformation conflict-free, exhibit a conflict, or say unknown."""
    findings: list[ConsistencyFinding] = []
    candidates = conflict_candidates(rules)
    for cand in candidates:
        try:
            res = sat_check(
                cand.query,
                max_states=max_states,
                max_repeat=max_repeat,
                brute_nodes=brute_nodes,
            )
        except UnsupportedFeature as exc:
            findings.append(
                ConsistencyFinding(
                    cand.kind, cand.rule1, cand.rule2, cand.key,
                    SatStatus.UNKNOWN, reason=str(exc),
                )
            )
            continue
        if res.status is SatStatus.UNSAT:
            continue
        findings.append(
            ConsistencyFinding(
                cand.kind, cand.rule1, cand.rule2, cand.key,
                res.status, reason=res.reason,
                witness=res.witness, binding=res.binding,
            )
        )
    if any(f.status is SatStatus.SAT for f in findings):
        verdict = "conflicting"
    elif findings:
        verdict = "unknown"
    else:
        verdict = "consistent"
    return ConsistencyReport(verdict, findings, len(candidates))


# -- reductions ----------------------------------------------------------------------


def cnf_satisfiability_query(clauses: Sequence[Sequence[int]]) -> GpcQuery:
    """A query satisfiable exactly when the CNF (ints as +-literals) is.

    One matched node encodes an assignment: key "v{k}" holds variable k's
    value and "nv{k}" its complement, both forced into {0, 1}.
    """
    x = "x"
    variables = sorted({abs(lit) for cl in clauses for lit in cl})
    if not variables:
        raise ValueError("need at least one clause with literals")
    conj: list[Condition] = []
    for k in variables:
        pos, neg = PropRef(x, f"v{k}"), PropRef(x, f"nv{k}")
        one, zero = Const(1), Const(0)
        conj.append(
            Or(
                And(Eq(pos, one), Eq(neg, zero)),
                And(Eq(pos, zero), Eq(neg, one)),
            )
        )
    for cl in clauses:
        if not cl:
            raise ValueError("empty clause is trivially unsatisfiable")
        lits: list[Condition] = []
        for lit in cl:
            ref = PropRef(x, f"v{lit}") if lit > 0 else PropRef(x, f"nv{-lit}")
            lits.append(Eq(ref, Const(1)))
        clause_cond = lits[0]
        for extra in lits[1:]:
            clause_cond = Or(clause_cond, extra)
        conj.append(clause_cond)
    return GpcQuery((PathPattern(NodeAtom(x)),), conjoin(conj))


def assignment_from_witness(
    witness: PropertyGraph, binding: dict, n_vars: int
) -> dict[int, bool]:
    node = binding["x"]
    out = {}
    for k in range(1, n_vars + 1):
        out[k] = witness.get_property(node, f"v{k}") == 1
    return out


def satisfiability_gadget(q: GpcQuery) -> list[Rule]:
    """Two rules that conflict on some input exactly when the query matches.

    The base rule stamps a constant-id probe node with one value whenever
    the input has any node at all; the second stamps a different value
    whenever the query fires. A query witness is nonempty, so both rules
    fire on it and collide on the probe's property.
    """
    probe = (ConstArg("probe"),)
    base = Rule(
        "base",
        GpcQuery((PathPattern(NodeAtom("any_node")),)),
        (NodeCtor(probe, (), (("flag", Const(5)),)),),
    )
    hit = Rule("hit", q, (NodeCtor(probe, (), (("flag", Const(7)),)),))
    return [base, hit]
