"""Pattern ASTs for graph queries, plus schema (variable typing) inference.

A query is a join of path patterns with an optional condition. A path
pattern pairs a restrictor (simple / trail / shortest) with a pattern
built from node atoms, directed edge atoms, concatenation, union,
conditioning, and bounded or unbounded repetition.

Typing rules:
  * a variable is node- or edge-kinded by the atoms that mention it, and
    the two kinds must not mix;
  * variables under a repetition are group-typed: they collect one value
    per iteration and cannot be mentioned outside their repetition, in
    conditions, or in outputs;
  * a variable occurring on only one side of a union is maybe-typed and
    is likewise excluded from conditions and outputs;
  * concatenation alternates node-shaped and edge-shaped ends.

Only singleton (exactly-once) variables surface in bindings.
"""

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

from .graph import Value


class PatternTypeError(Exception):
    """A query failed well-typedness; carries the offending variable."""

    def __init__(self, var: Optional[str], reason: str) -> None:
        super().__init__(f"{reason}" if var is None else f"{var}: {reason}")
        self.var = var
        self.reason = reason


class Direction(enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


class Restrictor(enum.Enum):
    SIMPLE = "simple"
    TRAIL = "trail"
    SHORTEST = "shortest"


# -- conditions -------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class PropRef:
    var: str
    key: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Lower:
    """toLower(operand); defined only when the operand is text."""

    inner: "Operand"


Operand = Union[Const, PropRef, Param, Lower]


@dataclass(frozen=True)
class Eq:
    """left = right; holds only when both sides are defined and equal."""

    left: Operand
    right: Operand


@dataclass(frozen=True)
class Not:
    inner: "Condition"


@dataclass(frozen=True)
class And:
    left: "Condition"
    right: "Condition"


@dataclass(frozen=True)
class Or:
    left: "Condition"
    right: "Condition"


Condition = Union[Eq, Not, And, Or]


def condition_vars(cond: Condition) -> list[str]:
    """Variables read by a condition, in first-mention order."""
    out: list[str] = []

    def visit_operand(op: Operand) -> None:
        if isinstance(op, PropRef):
            if op.var not in out:
                out.append(op.var)
        elif isinstance(op, Lower):
            visit_operand(op.inner)

    def visit(c: Condition) -> None:
        if isinstance(c, Eq):
            visit_operand(c.left)
            visit_operand(c.right)
        elif isinstance(c, Not):
            visit(c.inner)
        else:
            visit(c.left)
            visit(c.right)

    visit(cond)
    return out


def condition_atoms(cond: Condition) -> list[Eq]:
    """All equality atoms regardless of polarity, left to right."""
    out: list[Eq] = []

    def visit(c: Condition) -> None:
        if isinstance(c, Eq):
            out.append(c)
        elif isinstance(c, Not):
            visit(c.inner)
        else:
            visit(c.left)
            visit(c.right)

    visit(cond)
    return out


def conjuncts(cond: Optional[Condition]) -> list[Condition]:
    """Split the top-level conjunction; None means the empty conjunction."""
    if cond is None:
        return []
    if isinstance(cond, And):
        return conjuncts(cond.left) + conjuncts(cond.right)
    return [cond]


def conjoin(parts: list[Condition]) -> Optional[Condition]:
    out: Optional[Condition] = None
    for p in parts:
        out = p if out is None else And(out, p)
    return out


# -- patterns ---------------------------------------------------------------


@dataclass(frozen=True)
class NodeAtom:
    var: Optional[str] = None
    label: Optional[str] = None


@dataclass(frozen=True)
class EdgeAtom:
    direction: Direction = Direction.FORWARD
    var: Optional[str] = None
    label: Optional[str] = None


@dataclass(frozen=True)
class Concat:
    left: "Pattern"
    right: "Pattern"


@dataclass(frozen=True)
class UnionPat:
    left: "Pattern"
    right: "Pattern"


@dataclass(frozen=True)
class CondPat:
    inner: "Pattern"
    condition: Condition


@dataclass(frozen=True)
class Repeat:
    inner: "Pattern"
    lo: int
    hi: Optional[int]  # None means unbounded


Pattern = Union[NodeAtom, EdgeAtom, Concat, UnionPat, CondPat, Repeat]


@dataclass(frozen=True)
class PathPattern:
    pattern: Pattern
    restrictor: Restrictor = Restrictor.TRAIL


@dataclass(frozen=True)
class GpcQuery:
    paths: tuple[PathPattern, ...]
    condition: Optional[Condition] = None


@dataclass(frozen=True)
class GpcPlusQuery:
    """Union of queries with a shared projection list."""

    disjuncts: tuple[GpcQuery, ...]
    projection: tuple[str, ...] = ()


# -- schema inference -------------------------------------------------------


class Kind(enum.Enum):
    NODE = "node"
    EDGE = "edge"


class Card(enum.Enum):
    ONE = "one"
    GROUP = "group"
    MAYBE = "maybe"


@dataclass(frozen=True)
class VarType:
    kind: Kind
    card: Card


Schema = dict[str, VarType]

_NODE_END = "node"
_EDGE_END = "edge"


@dataclass
class _Info:
    start: str
    end: str
    # variable name -> (kind, card), in first-occurrence order
    vars: dict[str, VarType] = field(default_factory=dict)


def _merge_var(info: dict[str, VarType], name: str, vt: VarType, joining: bool) -> None:
    prior = info.get(name)
    if prior is None:
        info[name] = vt
        return
    if prior.kind is not vt.kind:
        raise PatternTypeError(name, "used both as a node and as an edge")
    if joining:
        if prior.card is not Card.ONE or vt.card is not Card.ONE:
            raise PatternTypeError(name, "group or maybe variable reused elsewhere")
        info[name] = VarType(prior.kind, Card.ONE)
    else:
        raise PatternTypeError(name, "duplicate variable in incompatible positions")


def _pattern_info(p: Pattern) -> _Info:
    if isinstance(p, NodeAtom):
        info = _Info(_NODE_END, _NODE_END)
        if p.var is not None:
            info.vars[p.var] = VarType(Kind.NODE, Card.ONE)
        return info
    if isinstance(p, EdgeAtom):
        info = _Info(_EDGE_END, _EDGE_END)
        if p.var is not None:
            info.vars[p.var] = VarType(Kind.EDGE, Card.ONE)
        return info
    if isinstance(p, Concat):
        left = _pattern_info(p.left)
        right = _pattern_info(p.right)
        if left.end == right.start:
            raise PatternTypeError(
                None, f"concatenation does not alternate ({left.end} meets {right.start})"
            )
        merged = dict(left.vars)
        for name, vt in right.vars.items():
            _merge_var(merged, name, vt, joining=True)
        return _Info(left.start, right.end, merged)
    if isinstance(p, UnionPat):
        left = _pattern_info(p.left)
        right = _pattern_info(p.right)
        if (left.start, left.end) != (right.start, right.end):
            raise PatternTypeError(None, "union branches have different shapes")
        merged: dict[str, VarType] = {}
        for name in list(left.vars) + [n for n in right.vars if n not in left.vars]:
            lv, rv = left.vars.get(name), right.vars.get(name)
            if lv is not None and rv is not None:
                if lv.kind is not rv.kind:
                    raise PatternTypeError(name, "used both as a node and as an edge")
                if lv.card is Card.GROUP or rv.card is Card.GROUP:
                    card = Card.GROUP
                elif lv.card is Card.MAYBE or rv.card is Card.MAYBE:
                    card = Card.MAYBE
                else:
                    card = Card.ONE
                merged[name] = VarType(lv.kind, card)
            else:
                present = lv if lv is not None else rv
                assert present is not None
                card = Card.GROUP if present.card is Card.GROUP else Card.MAYBE
                merged[name] = VarType(present.kind, card)
        return _Info(left.start, left.end, merged)
    if isinstance(p, CondPat):
        info = _pattern_info(p.inner)
        for var in condition_vars(p.condition):
            vt = info.vars.get(var)
            if vt is None:
                raise PatternTypeError(var, "condition references an unbound variable")
            if vt.card is not Card.ONE:
                raise PatternTypeError(var, "condition references a non-singleton variable")
        return info
    if isinstance(p, Repeat):
        if p.lo < 0 or (p.hi is not None and p.hi < p.lo):
            raise PatternTypeError(None, f"bad repetition bounds {p.lo}..{p.hi}")
        info = _pattern_info(p.inner)
        grouped = {name: VarType(vt.kind, Card.GROUP) for name, vt in info.vars.items()}
        return _Info(info.start, info.end, grouped)
    raise TypeError(f"not a pattern: {p!r}")


def infer_schema(q: GpcQuery) -> Schema:
    """Type every variable of a query or raise PatternTypeError."""
    merged: dict[str, VarType] = {}
    for path in q.paths:
        info = _pattern_info(path.pattern)
        for name, vt in info.vars.items():
            prior = merged.get(name)
            if prior is None:
                merged[name] = vt
            else:
                if prior.kind is not vt.kind:
                    raise PatternTypeError(name, "used both as a node and as an edge")
                if prior.card is not Card.ONE or vt.card is not Card.ONE:
                    raise PatternTypeError(name, "group or maybe variable reused across paths")
    if q.condition is not None:
        for var in condition_vars(q.condition):
            vt = merged.get(var)
            if vt is None:
                raise PatternTypeError(var, "condition references an unbound variable")
            if vt.card is not Card.ONE:
                raise PatternTypeError(var, "condition references a non-singleton variable")
    return merged


def singleton_vars(q: GpcQuery) -> list[str]:
    """Singleton variables in first-occurrence order."""
    schema = infer_schema(q)
    order: list[str] = []

    def visit(p: Pattern) -> None:
        if isinstance(p, (NodeAtom, EdgeAtom)):
            if p.var is not None and p.var not in order:
                order.append(p.var)
        elif isinstance(p, (Concat, UnionPat)):
            visit(p.left)
            visit(p.right)
        elif isinstance(p, (CondPat, Repeat)):
            visit(p.inner)

    for path in q.paths:
        visit(path.pattern)
    return [v for v in order if schema[v].card is Card.ONE]


def pattern_vars(p: Pattern) -> list[str]:
    """All variables syntactically present, in first-occurrence order."""
    order: list[str] = []

    def visit(pp: Pattern) -> None:
        if isinstance(pp, (NodeAtom, EdgeAtom)):
            if pp.var is not None and pp.var not in order:
                order.append(pp.var)
        elif isinstance(pp, (Concat, UnionPat)):
            visit(pp.left)
            visit(pp.right)
        elif isinstance(pp, (CondPat, Repeat)):
            visit(pp.inner)

    visit(p)
    return order


def validate_plus(q: GpcPlusQuery) -> None:
    """Check every projected variable is singleton in every disjunct."""
    for disjunct in q.disjuncts:
        schema = infer_schema(disjunct)
        for var in q.projection:
            vt = schema.get(var)
            if vt is None or vt.card is not Card.ONE:
                raise PatternTypeError(var, "projected variable is not singleton in a disjunct")
