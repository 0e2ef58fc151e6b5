"""Transformation rules: output constructors over query bindings.

A rule pairs a query with constructors. Each node constructor mints an
output node whose identity is a deterministic function of its id
arguments; binding the same arguments twice yields the same node, which is
how separate rules (or bindings) conflate output elements on purpose. Edge
constructors name their endpoints either inline or through an alias
defined by a sibling constructor in the same rule.

Output ids are synthetic: a sigil prefix, then the argument tokens. Each
token carries a kind tag (element id, label, or value with its type) and
a backslash-escaped payload, so distinct argument lists always produce
distinct ids and ids never collide with the input id space (input ids
containing the sigil are rejected at load time). Edge ids additionally
embed the two already-encoded endpoint ids, so no extra bookkeeping is
needed to keep edges between different endpoints apart.

`desugar` splits a multi-constructor rule into single-constructor rules
(suffixed "#i") and inlines alias references, producing the flat rule
forms the executor and the static analyses consume.
"""

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

from .graph import SKOLEM_SIGIL, Value, value_kind
from .patterns import (
    Card,
    Const,
    GpcQuery,
    Lower,
    Operand,
    Param,
    PropRef,
    Schema,
    infer_schema,
)


class RuleTypeError(Exception):
    """A rule is malformed: bad alias use, non-singleton variable, etc."""


class UndefinedPropertyError(Exception):
    """A constructor needs a property the matched element does not carry."""

    def __init__(self, detail: str) -> None:
        super().__init__(detail)
        self.detail = detail


# -- constructor arguments ---------------------------------------------------


@dataclass(frozen=True)
class VarArg:
    """Identity argument: the id of the element bound to a variable."""

    var: str


@dataclass(frozen=True)
class ConstArg:
    value: Value


@dataclass(frozen=True)
class LabelArg:
    label: str


@dataclass(frozen=True)
class PropArg:
    """Identity argument: the value of a property on a bound element."""

    var: str
    key: str


IdArg = Union[VarArg, ConstArg, LabelArg, PropArg]


# -- constructors and rules --------------------------------------------------


@dataclass(frozen=True)
class NodeCtor:
    id_args: tuple[IdArg, ...]
    labels: tuple[str, ...] = ()
    props: tuple[tuple[str, Operand], ...] = ()
    alias: Optional[str] = None


@dataclass(frozen=True)
class AliasRef:
    name: str


@dataclass(frozen=True)
class EdgeCtor:
    src: Union[NodeCtor, AliasRef]
    tgt: Union[NodeCtor, AliasRef]
    id_args: tuple[IdArg, ...]
    labels: tuple[str, ...] = ()
    props: tuple[tuple[str, Operand], ...] = ()


Ctor = Union[NodeCtor, EdgeCtor]


@dataclass(frozen=True)
class Rule:
    """One query with one or more output constructors."""

    name: str
    query: GpcQuery
    ctors: tuple[Ctor, ...]


@dataclass(frozen=True)
class NodeRule:
    name: str
    query: GpcQuery
    ctor: NodeCtor


@dataclass(frozen=True)
class EdgeRule:
    name: str
    query: GpcQuery
    src: NodeCtor
    ctor: EdgeCtor  # src/tgt fields inside are ignored once desugared
    tgt: NodeCtor


FlatRule = Union[NodeRule, EdgeRule]


# -- validation --------------------------------------------------------------


def _ctor_vars(id_args: tuple[IdArg, ...], props: tuple[tuple[str, Operand], ...]):
    for a in id_args:
        if isinstance(a, (VarArg, PropArg)):
            yield a.var
    for _, op in props:
        yield from _operand_vars(op)


def _operand_vars(op: Operand):
    if isinstance(op, PropRef):
        yield op.var
    elif isinstance(op, Lower):
        yield from _operand_vars(op.inner)


def _check_ctor(name: str, kind: str, id_args, labels, props, schema: Schema) -> None:
    seen_keys = set()
    for key, _ in props:
        if key in seen_keys:
            raise RuleTypeError(f"rule {name}: duplicate property key {key!r} in {kind}")
        seen_keys.add(key)
    for var in _ctor_vars(id_args, props):
        if var not in schema:
            raise RuleTypeError(f"rule {name}: constructor uses unbound variable {var!r}")
        if schema[var].card is not Card.ONE:
            raise RuleTypeError(
                f"rule {name}: constructor uses non-singleton variable {var!r}"
            )


def resolve_aliases(rule: Rule) -> Rule:
    """Replace alias references in edge constructors by their definitions."""
    defs: dict[str, NodeCtor] = {}
    for c in rule.ctors:
        if isinstance(c, NodeCtor) and c.alias is not None:
            if c.alias in defs:
                raise RuleTypeError(f"rule {rule.name}: duplicate alias {c.alias!r}")
            defs[c.alias] = c

    def deref(ref: Union[NodeCtor, AliasRef]) -> NodeCtor:
        if isinstance(ref, AliasRef):
            if ref.name not in defs:
                raise RuleTypeError(f"rule {rule.name}: unknown alias {ref.name!r}")
            return defs[ref.name]
        return ref

    resolved = []
    for c in rule.ctors:
        if isinstance(c, EdgeCtor):
            c = replace(c, src=deref(c.src), tgt=deref(c.tgt))
        resolved.append(c)
    return replace(rule, ctors=tuple(resolved))


def validate_rule(rule: Rule) -> Schema:
    """Type-check one rule; returns the query schema."""
    schema = infer_schema(rule.query)
    if not rule.ctors:
        raise RuleTypeError(f"rule {rule.name}: no constructors")
    resolved = resolve_aliases(rule)
    for c in resolved.ctors:
        if isinstance(c, NodeCtor):
            _check_ctor(rule.name, "node constructor", c.id_args, c.labels, c.props, schema)
        else:
            _check_ctor(rule.name, "edge constructor", c.id_args, c.labels, c.props, schema)
            for end in (c.src, c.tgt):
                _check_ctor(
                    rule.name, "endpoint constructor", end.id_args, end.labels, end.props, schema
                )
    return schema


def validate_transformation(rules: Sequence[Rule]) -> None:
    names = set()
    for r in rules:
        if r.name in names:
            raise RuleTypeError(f"duplicate rule name {r.name!r}")
        names.add(r.name)
        validate_rule(r)


def desugar(rules: Sequence[Rule]) -> list[FlatRule]:
    """Flatten to single-constructor rules with aliases inlined.

    A rule with one constructor keeps its name; a rule with several yields
    "name#0", "name#1", ... in constructor order.
    """
    flat: list[FlatRule] = []
    for rule in rules:
        resolved = resolve_aliases(rule)
        many = len(resolved.ctors) > 1
        for i, c in enumerate(resolved.ctors):
            name = f"{rule.name}#{i}" if many else rule.name
            if isinstance(c, NodeCtor):
                flat.append(NodeRule(name, rule.query, replace(c, alias=None)))
            else:
                src = replace(c.src, alias=None)
                tgt = replace(c.tgt, alias=None)
                flat.append(EdgeRule(name, rule.query, src, c, tgt))
    return flat


# -- synthetic ids -----------------------------------------------------------


def _escape(payload: str) -> str:
    out = []
    for ch in payload:
        if ch in "\\,()":
            out.append("\\")
        out.append(ch)
    return "".join(out)


def _unescape(payload: str) -> str:
    out = []
    i = 0
    while i < len(payload):
        if payload[i] == "\\":
            i += 1
        out.append(payload[i])
        i += 1
    return "".join(out)


_VALUE_TAGS = {"text": "Vs", "int": "Vi", "float": "Vf", "bool": "Vb"}


def value_token(v: Value) -> str:
    kind = value_kind(v)
    if kind == "bool":
        payload = "true" if v else "false"
    elif kind == "float":
        payload = repr(v)  # round-trips, so distinct floats stay distinct
    else:
        payload = str(v)
    return f"{_VALUE_TAGS[kind]}:{_escape(payload)}"


def id_token(element_id: str) -> str:
    return f"I:{_escape(element_id)}"


def label_token(label: str) -> str:
    return f"L:{_escape(label)}"


def encode_id(tokens: Sequence[str]) -> str:
    return f"{SKOLEM_SIGIL}({','.join(tokens)})"


def is_synthetic_id(element_id: str) -> bool:
    return element_id.startswith(SKOLEM_SIGIL)


_PARSERS = {
    "I": lambda p: p,
    "L": lambda p: p,
    "Vs": lambda p: p,
    "Vi": int,
    "Vf": float,
    "Vb": lambda p: p == "true",
}


def parse_synthetic_id(element_id: str) -> list[tuple[str, object]]:
    """Recover (tag, payload) argument pairs from a synthetic id."""
    if not element_id.startswith(f"{SKOLEM_SIGIL}(") or not element_id.endswith(")"):
        raise ValueError(f"not a synthetic id: {element_id!r}")
    body = element_id[len(SKOLEM_SIGIL) + 1 : -1]
    tokens: list[str] = []
    cur: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            cur.append(body[i : i + 2])
            i += 2
            continue
        if ch == ",":
            tokens.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
        i += 1
    if cur or tokens:
        tokens.append("".join(cur))
    out = []
    for tok in tokens:
        tag, _, payload = tok.partition(":")
        if tag not in _PARSERS:
            raise ValueError(f"bad token tag {tag!r} in {element_id!r}")
        out.append((tag, _PARSERS[tag](_unescape(payload))))
    return out


# -- constructor resolution --------------------------------------------------

Binding = dict[str, str]
Params = dict[str, Value]


def resolve_operand(op: Operand, binding: Binding, g, params: Params) -> Value:
    """Value of a content expression under a binding.

    Raises UndefinedPropertyError when the expression is undefined for this
    binding (missing property, lowercase of a non-text value); the caller
    decides whether that skips the binding or aborts the run.
    """
    if isinstance(op, Const):
        return op.value
    if isinstance(op, Param):
        if op.name not in params:
            raise KeyError(f"unresolved parameter ${op.name}")
        return params[op.name]
    if isinstance(op, PropRef):
        v = g.get_property(binding[op.var], op.key)
        if v is None:
            raise UndefinedPropertyError(
                f"property {op.key!r} undefined on element {binding[op.var]!r} (via {op.var})"
            )
        return v
    if isinstance(op, Lower):
        v = resolve_operand(op.inner, binding, g, params)
        if not isinstance(v, str):
            raise UndefinedPropertyError(f"lowercase of non-text value {v!r}")
        return v.lower()
    raise TypeError(f"not an operand: {op!r}")


def resolve_id_arg(arg: IdArg, binding: Binding, g, params: Params) -> str:
    if isinstance(arg, VarArg):
        return id_token(binding[arg.var])
    if isinstance(arg, ConstArg):
        return value_token(arg.value)
    if isinstance(arg, LabelArg):
        return label_token(arg.label)
    if isinstance(arg, PropArg):
        v = g.get_property(binding[arg.var], arg.key)
        if v is None:
            raise UndefinedPropertyError(
                f"property {arg.key!r} undefined on element {binding[arg.var]!r} (via {arg.var})"
            )
        return value_token(v)
    raise TypeError(f"not an id argument: {arg!r}")


def node_output_id(ctor: NodeCtor, binding: Binding, g, params: Params) -> str:
    return encode_id([resolve_id_arg(a, binding, g, params) for a in ctor.id_args])


def edge_output_id(
    src_id: str, ctor: EdgeCtor, binding: Binding, g, params: Params, tgt_id: str
) -> str:
    tokens = [id_token(src_id)]
    tokens.extend(resolve_id_arg(a, binding, g, params) for a in ctor.id_args)
    tokens.append(id_token(tgt_id))
    return encode_id(tokens)


def resolve_props(
    props: tuple[tuple[str, Operand], ...], binding: Binding, g, params: Params
) -> dict[str, Value]:
    return {key: resolve_operand(op, binding, g, params) for key, op in props}
