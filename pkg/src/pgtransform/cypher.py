"""Compilation of transformation rules to executable openCypher scripts.

Each rule becomes one standalone script: a MATCH/WHERE block for the rule's
query, one MERGE per node constructor keyed on the synthetic `_id` property,
and one MERGE per edge constructor whose `_id` embeds the endpoint ids. The
MERGE-on-_id idiom implements set-union semantics: an element is created on
first touch and retrieved afterwards, so independently fired rules agree on
output identity without coordination.

Two identity layouts are supported. The plain variant (PI) puts every output
node behind the auxiliary label `_dummy` and builds `_id` by naive string
concatenation, mirroring how such scripts are written by hand; this layout
is NOT injective (the engine's escaped encoding is, and `escaped=True`
reproduces it with string surgery at a small readability cost). The
separate-indexes variant (SI) folds constructor labels into the `_id`
argument list and merges through the real label, so per-label indexes apply.

With conflict detection on, property writes use MERGE's ON CREATE / ON MATCH
split: a re-visit compares the incoming value against the stored one and
writes the sentinel text "Conflict detected!" when they differ. Absent
properties compare as non-equal `<>` never holds, so a node first created by
a label-only rule is filled in silently.

Only trail semantics compile: openCypher MATCH already forbids repeated
relationships inside one path, while simple and shortest restrictors have no
faithful rendering in openCypher 9 and are rejected.

Faithfulness caveats. The engine compares values with type identity while
openCypher compares numbers across int/float, so a WHERE clause like
`u.k = 1` also accepts 1.0 in the target store. toLower on a non-text value
makes the engine treat the enclosing comparison as undefined, but raises a
type error once compiled. And since a compiled script matches whatever is in
the store, match patterns should name input labels explicitly when output
labels overlap them; the engine itself always matches the input graph only.
"""

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .patterns import (
    And,
    Concat,
    CondPat,
    Condition,
    Const,
    Direction,
    EdgeAtom,
    Eq,
    GpcQuery,
    Lower,
    NodeAtom,
    Not,
    Operand,
    Or,
    Param,
    Pattern,
    PropRef,
    Repeat,
    Restrictor,
    UnionPat,
    condition_vars,
    conjuncts,
    pattern_vars,
)
from .rules import (
    ConstArg,
    EdgeCtor,
    IdArg,
    LabelArg,
    NodeCtor,
    PropArg,
    Rule,
    VarArg,
    resolve_aliases,
    validate_rule,
    validate_transformation,
    value_token,
    _escape,
    _unescape,
)

SENTINEL = "Conflict detected!"
DUMMY_LABEL = "_dummy"
ID_KEY = "_id"


class MultiLabelEdge(Exception):
    """Edge constructors must carry exactly one label to compile."""


class UnsupportedFeature(Exception):
    """The construct has no openCypher rendering."""


class Variant(Enum):
    PLAIN = "pi"
    SEPARATE_INDEXES = "si"


class IndexChoice(Enum):
    NODES_ONLY = "ni"
    RELS_ONLY = "ri"
    BOTH = "ni-ri"
    NONE = "wi"


@dataclass(frozen=True)
class CompileOptions:
    variant: Variant = Variant.PLAIN
    indexes: IndexChoice = IndexChoice.NODES_ONLY
    uniqueness: bool = False
    conflict_detection: bool = False
    escaped: bool = False


# -- lexical helpers -------------------------------------------------------------

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _ident(name: str) -> str:
    if _IDENT_RE.match(name):
        return name
    return "`" + name.replace("`", "``") + "`"


def _cypher_str(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _literal(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return _cypher_str(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _value_text(v) -> str:
    # how a value shows up inside a plain concatenated _id
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


# -- operand and condition rendering ----------------------------------------------


def _operand_text(op: Operand) -> str:
    if isinstance(op, Const):
        return _literal(op.value)
    if isinstance(op, PropRef):
        return f"{_ident(op.var)}.{_ident(op.key)}"
    if isinstance(op, Lower):
        return f"toLower({_operand_text(op.inner)})"
    if isinstance(op, Param):
        return f"${_ident(op.name)}"
    raise TypeError(f"not an operand: {op!r}")


def _definedness_guard(c: Condition):
    # p = p on a single property reference is the engine idiom for "defined"
    if (
        isinstance(c, Eq)
        and isinstance(c.left, PropRef)
        and c.left == c.right
    ):
        return c.left
    return None


def _cond_text(c: Condition, prec: int = 0) -> str:
    # prec: 0 = or-level, 1 = and-level, 2 = atom
    if isinstance(c, Eq):
        guard = _definedness_guard(c)
        if guard is not None:
            # self-equality is never true on null in Cypher, so spell it out
            return f"{_operand_text(guard)} IS NOT NULL"
        return f"{_operand_text(c.left)} = {_operand_text(c.right)}"
    if isinstance(c, Not):
        guard = _definedness_guard(c.inner)
        if guard is not None:
            # x <> x would be unsatisfiable in Cypher; the engine reads it as "undefined"
            return f"{_operand_text(guard)} IS NULL"
        if isinstance(c.inner, Eq):
            eq = c.inner
            return f"{_operand_text(eq.left)} <> {_operand_text(eq.right)}"
        return f"NOT ({_cond_text(c.inner, 0)})"
    if isinstance(c, And):
        text = f"{_cond_text(c.left, 1)} AND {_cond_text(c.right, 1)}"
        return f"({text})" if prec > 1 else text
    if isinstance(c, Or):
        text = f"{_cond_text(c.left, 0)} OR {_cond_text(c.right, 0)}"
        return f"({text})" if prec > 0 else text
    raise TypeError(f"not a condition: {c!r}")


# -- MATCH block -------------------------------------------------------------------


@dataclass
class _NodePiece:
    var: Optional[str]
    labels: list


@dataclass
class _EdgePiece:
    direction: Direction
    var: Optional[str]
    label: Optional[str]
    lo: Optional[int] = None  # repetition bounds; None means a single hop
    hi: Optional[int] = None
    unbounded: bool = False


def _flatten_pattern(p: Pattern, conds: list) -> list:
    if isinstance(p, NodeAtom):
        return [_NodePiece(p.var, [p.label] if p.label else [])]
    if isinstance(p, EdgeAtom):
        return [_EdgePiece(p.direction, p.var, p.label)]
    if isinstance(p, Concat):
        return _flatten_pattern(p.left, conds) + _flatten_pattern(p.right, conds)
    if isinstance(p, CondPat):
        conds.append(p.condition)
        return _flatten_pattern(p.inner, conds)
    if isinstance(p, Repeat):
        inner = p.inner
        if isinstance(inner, CondPat):
            raise UnsupportedFeature("conditions inside repetition do not compile")
        if not isinstance(inner, EdgeAtom):
            raise UnsupportedFeature("only single-edge repetition compiles")
        return [
            _EdgePiece(
                inner.direction, inner.var, inner.label,
                lo=p.lo, hi=p.hi, unbounded=p.hi is None,
            )
        ]
    if isinstance(p, UnionPat):
        raise UnsupportedFeature("pattern alternation does not compile")
    raise TypeError(f"not a pattern: {p!r}")


def _edge_text(e: _EdgePiece) -> str:
    inner = _ident(e.var) if e.var else ""
    if e.label:
        inner += f":{_ident(e.label)}"
    if e.lo is not None or e.unbounded:
        lo = e.lo if e.lo is not None else 0
        if e.unbounded:
            inner += f"*{lo}.."
        elif e.hi == lo:
            inner += f"*{lo}"
        else:
            inner += f"*{lo}..{e.hi}"
    body = f"[{inner}]" if inner else "[]"
    if e.direction is Direction.FORWARD:
        return f"-{body}->"
    return f"<-{body}-"


def _node_text(n: Optional[_NodePiece]) -> str:
    if n is None:
        return "()"
    inner = _ident(n.var) if n.var else ""
    for lab in n.labels:
        inner += f":{_ident(lab)}"
    return f"({inner})"


def _render_path(p: Pattern, conds: list) -> str:
    pieces = _flatten_pattern(p, conds)
    out: list[str] = []
    pending: Optional[_NodePiece] = None
    has_pending = False
    for piece in pieces:
        if isinstance(piece, _NodePiece):
            if not has_pending:
                pending, has_pending = piece, True
            else:
                if pending is None:
                    pending = piece
                elif piece.var and pending.var and piece.var != pending.var:
                    raise UnsupportedFeature(
                        "two named node atoms meet at one junction"
                    )
                else:
                    pending = _NodePiece(
                        pending.var or piece.var, pending.labels + piece.labels
                    )
        else:
            out.append(_node_text(pending if has_pending else None))
            out.append(_edge_text(piece))
            pending, has_pending = None, False
    out.append(_node_text(pending if has_pending else None))
    return "".join(out)


def _match_block(q: GpcQuery) -> tuple[list[str], list[str]]:
    """Render one MATCH line per path; returns (lines, match variables)."""
    path_texts: list[str] = []
    path_conds: list[list[str]] = []
    bound: list[set] = []
    seen: set = set()
    for pp in q.paths:
        if pp.restrictor is not Restrictor.TRAIL:
            raise UnsupportedFeature(
                f"{pp.restrictor.value} restrictor does not compile; "
                "openCypher matching is trail-based"
            )
        local: list = []
        path_texts.append(_render_path(pp.pattern, local))
        # and-level: the rendered pieces get glued with AND below
        path_conds.append([_cond_text(c, 1) for c in local])
        seen |= set(pattern_vars(pp.pattern))
        bound.append(set(seen))
    if q.condition is not None:
        for c in conjuncts(q.condition):
            need = set(condition_vars(c))
            target = len(path_texts) - 1
            for i, b in enumerate(bound):
                if need <= b:
                    target = i
                    break
            path_conds[target].append(_cond_text(c, 1))
    lines = []
    for text, conds in zip(path_texts, path_conds):
        line = f"MATCH {text}"
        if conds:
            line += " WHERE " + " AND ".join(conds)
        lines.append(line)
    return lines, sorted(seen)


# -- identity expressions -------------------------------------------------------


def _escape_expr(expr: str) -> str:
    # engine escaping, reproduced with string surgery: backslash first
    out = f'replace({expr}, "\\\\", "\\\\\\\\")'
    for ch in ("(", ")", ","):
        out = f'replace({out}, "{ch}", "\\\\{ch}")'
    return out


def _tagged_const(v) -> str:
    return _cypher_str(value_token(v))


def _prop_token_escaped(ref: str) -> str:
    return (
        f'CASE WHEN {ref} IS :: STRING THEN "Vs:" + {_escape_expr(ref)} '
        f'WHEN {ref} IS :: BOOLEAN THEN "Vb:" + toString({ref}) '
        f'WHEN {ref} IS :: INTEGER THEN "Vi:" + toString({ref}) '
        f'ELSE "Vf:" + toString({ref}) END'
    )


def _arg_expr(arg: IdArg, escaped: bool) -> str:
    if isinstance(arg, VarArg):
        ref = f"elementId({_ident(arg.var)})"
        return f'"I:" + {_escape_expr(ref)}' if escaped else ref
    if isinstance(arg, PropArg):
        ref = f"{_ident(arg.var)}.{_ident(arg.key)}"
        return _prop_token_escaped(ref) if escaped else ref
    if isinstance(arg, ConstArg):
        return _tagged_const(arg.value) if escaped else _cypher_str(_value_text(arg.value))
    if isinstance(arg, LabelArg):
        if escaped:
            return _cypher_str("L:" + _escape(arg.label))
        return _cypher_str(arg.label)
    raise TypeError(f"not an id argument: {arg!r}")


def _endpoint_expr(var: str, escaped: bool) -> str:
    ref = f"elementId({var})"
    return f'"I:" + {_escape_expr(ref)}' if escaped else ref


def _id_expr(parts: list[str], escaped: bool) -> str:
    opening = '"$skolem$("' if escaped else '"("'
    pieces = [opening]
    for i, part in enumerate(parts):
        if i:
            pieces.append('","')
        pieces.append(part)
    pieces.append('")"')
    return " + ".join(pieces)


def _check_ctor_operands(ctor) -> None:
    for _, op in ctor.props:
        if isinstance(op, Param) or (isinstance(op, Lower) and isinstance(op.inner, Param)):
            raise UnsupportedFeature("parameters in constructors do not compile")
    for arg in ctor.id_args:
        if isinstance(arg, PropArg) and arg.key == "":
            raise UnsupportedFeature("empty property key")


# -- constructor rendering --------------------------------------------------------


def _set_clause(var: str, labels: Sequence[str], assignments: list[str]) -> list[str]:
    if not labels and not assignments:
        return []
    head = f"SET {var}" + "".join(f":{_ident(lab)}" for lab in labels)
    if not assignments:
        return [head]
    if labels:
        return [head + ",", "    " + ", ".join(assignments)]
    return ["SET " + ", ".join(assignments)]


def _cd_clauses(var: str, labels: Sequence[str], props) -> list[str]:
    label_text = "".join(f":{_ident(lab)}" for lab in labels)
    if not label_text and not props:
        return []
    creates = [f"{var}.{_ident(k)} = {_operand_text(op)}" for k, op in props]
    matches = [
        f"{var}.{_ident(k)} = CASE WHEN {var}.{_ident(k)} <> {_operand_text(op)} "
        f'THEN "{SENTINEL}" ELSE {_operand_text(op)} END'
        for k, op in props
    ]
    if props and label_text:
        return [
            f"ON CREATE SET {var}{label_text}, " + ", ".join(creates),
            f"ON MATCH SET {var}{label_text}, " + ", ".join(matches),
        ]
    if props:
        return [
            "ON CREATE SET " + ", ".join(creates),
            "ON MATCH SET " + ", ".join(matches),
        ]
    return [f"ON CREATE SET {var}{label_text}", f"ON MATCH SET {var}{label_text}"]


def _node_merge(
    var: str, ctor: NodeCtor, opts: CompileOptions, lines: list[str]
) -> None:
    _check_ctor_operands(ctor)
    parts = [_arg_expr(a, opts.escaped) for a in ctor.id_args]
    if opts.variant is Variant.SEPARATE_INDEXES:
        if not ctor.labels:
            raise UnsupportedFeature(
                "separate-indexes variant needs labeled node constructors"
            )
        extra = (
            [_cypher_str("L:" + _escape(l)) for l in ctor.labels]
            if opts.escaped
            else [_cypher_str(l) for l in ctor.labels]
        )
        parts = parts + extra
        anchor = _ident(ctor.labels[0])
        set_labels = list(ctor.labels[1:])
    else:
        anchor = DUMMY_LABEL
        set_labels = list(ctor.labels)
    lines.append(
        f"MERGE ({var}:{anchor} {{ {ID_KEY}: {_id_expr(parts, opts.escaped)} }})"
    )
    if opts.conflict_detection:
        lines.extend(_cd_clauses(var, set_labels, ctor.props))
    else:
        assigns = [f"{var}.{_ident(k)} = {_operand_text(op)}" for k, op in ctor.props]
        lines.extend(_set_clause(var, set_labels, assigns))


def _edge_merge(
    var: str,
    ctor: EdgeCtor,
    src_var: str,
    tgt_var: str,
    opts: CompileOptions,
    lines: list[str],
) -> None:
    _check_ctor_operands(ctor)
    if len(ctor.labels) != 1:
        raise MultiLabelEdge(
            f"edge constructor has {len(ctor.labels)} labels; openCypher "
            "relationships need exactly one"
        )
    label = ctor.labels[0]
    parts = (
        [_endpoint_expr(src_var, opts.escaped)]
        + [_arg_expr(a, opts.escaped) for a in ctor.id_args]
        + [_endpoint_expr(tgt_var, opts.escaped)]
    )
    lines.append(
        f"MERGE ({src_var})-[{var}:{_ident(label)} {{ {ID_KEY}: "
        f"{_id_expr(parts, opts.escaped)} }}]->({tgt_var})"
    )
    if opts.conflict_detection:
        lines.extend(_cd_clauses(var, [], ctor.props))
    else:
        assigns = [f"{var}.{_ident(k)} = {_operand_text(op)}" for k, op in ctor.props]
        lines.extend(_set_clause(var, [], assigns))


def compile_rule(rule: Rule, opts: CompileOptions = CompileOptions()) -> str:
    """One openCypher script implementing the rule."""
    rule = resolve_aliases(rule)
    validate_rule(rule)
    lines, _ = _match_block(rule.query)

    node_vars: dict[tuple, str] = {}
    counter = [0]

    def fresh() -> str:
        name = f"x{counter[0]}"
        counter[0] += 1
        return name

    node_order: list[tuple] = []
    edge_jobs: list[tuple] = []
    for ctor in rule.ctors:
        if isinstance(ctor, NodeCtor):
            key = (ctor.id_args, ctor.labels, ctor.props)
            if key not in node_vars:
                node_vars[key] = fresh()
                node_order.append((node_vars[key], ctor))
        else:
            pair = []
            for end in (ctor.src, ctor.tgt):
                key = (end.id_args, end.labels, end.props)
                if key not in node_vars:
                    node_vars[key] = fresh()
                    node_order.append((node_vars[key], end))
                pair.append(node_vars[key])
            edge_jobs.append((ctor, pair[0], pair[1]))

    for var, ctor in node_order:
        _node_merge(var, ctor, opts, lines)
    for ctor, src_var, tgt_var in edge_jobs:
        _edge_merge(fresh(), ctor, src_var, tgt_var, opts, lines)
    return "\n".join(lines) + "\n"


# -- DDL and cleanup ---------------------------------------------------------------


def _slug(name: str) -> str:
    return re.sub(r"\W", "_", name).lower()


def _output_node_labels(rules: Sequence[Rule]) -> list[str]:
    labels: list[str] = []
    for rule in rules:
        for ctor in resolve_aliases(rule).ctors:
            ends = [ctor] if isinstance(ctor, NodeCtor) else [ctor.src, ctor.tgt]
            for end in ends:
                for lab in end.labels:
                    if lab not in labels:
                        labels.append(lab)
    return labels


def _output_edge_labels(rules: Sequence[Rule]) -> list[str]:
    labels: list[str] = []
    for rule in rules:
        for ctor in resolve_aliases(rule).ctors:
            if isinstance(ctor, EdgeCtor):
                for lab in ctor.labels:
                    if lab not in labels:
                        labels.append(lab)
    return labels


def compile_ddl(rules: Sequence[Rule], opts: CompileOptions = CompileOptions()) -> list[str]:
    """Index or uniqueness-constraint statements for the identity property."""
    stmts: list[str] = []
    want_nodes = opts.indexes in (IndexChoice.NODES_ONLY, IndexChoice.BOTH)
    want_rels = opts.indexes in (IndexChoice.RELS_ONLY, IndexChoice.BOTH)
    if want_nodes:
        if opts.variant is Variant.PLAIN:
            targets = [(f"pg_{_slug(DUMMY_LABEL)}_id", DUMMY_LABEL)]
        else:
            targets = [
                (f"pg_id_{_slug(lab)}", lab) for lab in _output_node_labels(rules)
            ]
        for name, lab in targets:
            if opts.uniqueness:
                stmts.append(
                    f"CREATE CONSTRAINT {name}_unique IF NOT EXISTS "
                    f"FOR (n:{_ident(lab)}) REQUIRE n.{ID_KEY} IS UNIQUE"
                )
            else:
                stmts.append(
                    f"CREATE INDEX {name} IF NOT EXISTS "
                    f"FOR (n:{_ident(lab)}) ON (n.{ID_KEY})"
                )
    if want_rels:
        for lab in _output_edge_labels(rules):
            name = f"pg_rel_id_{_slug(lab)}"
            if opts.uniqueness:
                stmts.append(
                    f"CREATE CONSTRAINT {name}_unique IF NOT EXISTS "
                    f"FOR ()-[r:{_ident(lab)}]-() REQUIRE r.{ID_KEY} IS UNIQUE"
                )
            else:
                stmts.append(
                    f"CREATE INDEX {name} IF NOT EXISTS "
                    f"FOR ()-[r:{_ident(lab)}]-() ON (r.{ID_KEY})"
                )
    return stmts


def compile_cleanup() -> list[str]:
    """Strip the internal identity plumbing from a finished output graph."""
    return [
        f"MATCH (n) WHERE n.{ID_KEY} IS NOT NULL REMOVE n.{ID_KEY}",
        f"MATCH (n:{DUMMY_LABEL}) REMOVE n:{DUMMY_LABEL}",
        f"MATCH ()-[r]->() WHERE r.{ID_KEY} IS NOT NULL REMOVE r.{ID_KEY}",
    ]


def emit_bundle(
    name: str, rules: Sequence[Rule], opts: CompileOptions = CompileOptions()
) -> dict[str, str]:
    """All output files for a transformation, keyed by relative path."""
    validate_transformation(list(rules))
    files: dict[str, str] = {}
    order = []
    for rule in rules:
        fname = f"{rule.name}.cypher"
        files[fname] = compile_rule(rule, opts)
        order.append(fname)
    ddl = compile_ddl(rules, opts)
    files["ddl.cypher"] = "".join(s + ";\n" for s in ddl)
    files["cleanup.cypher"] = "".join(s + ";\n" for s in compile_cleanup())
    manifest = {
        "transformation": name,
        "options": {
            "variant": opts.variant.value,
            "indexes": opts.indexes.value,
            "uniqueness": opts.uniqueness,
            "conflict_detection": opts.conflict_detection,
            "escaped": opts.escaped,
        },
        "order": order,
        "ddl": "ddl.cypher",
        "cleanup": "cleanup.cypher",
    }
    files["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    return files


# -- plain identity codec ------------------------------------------------------------


def plain_id_codec(tokens: Sequence[str]) -> str:
    """Identity builder matching the plain scripts' string concatenation.

    Strips the engine's type tags and escaping so executor output ids line
    up one-to-one with what the compiled scripts compute via elementId and
    naive `+`. Not injective, exactly like the scripts.
    """
    payloads = []
    for tok in tokens:
        _, _, payload = tok.partition(":")
        payloads.append(_unescape(payload))
    return "(" + ",".join(payloads) + ")"


# -- golden-test normalization --------------------------------------------------------

_VAR_BIND_RE = re.compile(r"[(\[]\s*([A-Za-z_][A-Za-z0-9_]*)\s*[:)\]{]")


def normalize_script(text: str) -> str:
    """Whitespace-insensitive, variable-name-insensitive canonical form."""
    collapsed = " ".join(text.split())
    order: list[str] = []
    for m in _VAR_BIND_RE.finditer(collapsed):
        name = m.group(1)
        if name not in order:
            order.append(name)
    renames = {name: f"v{i}" for i, name in enumerate(order)}
    if not renames:
        return collapsed
    pattern = re.compile(
        r"\b(" + "|".join(re.escape(n) for n in sorted(renames, key=len, reverse=True)) + r")\b"
    )
    return pattern.sub(lambda m: renames[m.group(1)], collapsed)
