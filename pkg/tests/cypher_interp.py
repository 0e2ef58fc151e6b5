"""Executable model of the compiled openCypher subset.

Used to check that interpreting an emitted script reproduces the engine's
own output. The statements are re-parsed from their text form; nothing in
here touches the compiler's internals.

Scope: node patterns, single-edge patterns, WHERE, MERGE with an _id
property, SET, ON CREATE SET / ON MATCH SET, CASE WHEN. Variable-length
patterns (`*`) are out of scope and rejected.

Conventions where openCypher leaves room (or full Neo4j behavior is out of
reach for a model this size):
 - elementId(x) is the element's store id; merged elements use their _id
   string as store id, so elementId is injective and stable.
 - rows are processed in a canonical sorted order, since statement-level
   row order is unspecified in the target language.
 - `+` concatenates once either side is text, rendering numbers and
   booleans the way the compiler's literal emitter does.
"""

import re
from typing import Optional

from pgtransform.graph import PropertyGraph


class InterpError(Exception):
    pass


def plain_id_codec(tokens) -> str:
    """Mirror of the plain variant's _id concatenation.

    Passing this as the engine's id codec makes engine output ids equal the
    _id strings a script run produces, so graphs compare directly.
    """
    parts = []
    for tok in tokens:
        _, _, payload = tok.partition(":")
        out, i = [], 0
        while i < len(payload):
            if payload[i] == "\\":
                i += 1
            out.append(payload[i])
            i += 1
        parts.append("".join(out))
    return "(" + ",".join(parts) + ")"


# -- expression tokenizer ----------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    \s*(
        "(?:[^"\\]|\\.)*"          # string literal
      | [A-Za-z_][A-Za-z0-9_]*     # identifier / keyword
      | \d+\.\d+(?:[eE][+-]?\d+)? # float
      | \d+                        # int
      | <>|<-|->|[()\[\]{}:.,+=*-]
    )
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[str]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise InterpError(f"cannot tokenize at {text[pos:pos+30]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def _unquote(tok: str) -> str:
    body = tok[1:-1]
    out, i = [], 0
    while i < len(body):
        if body[i] == "\\":
            out.append(body[i + 1])
            i += 2
        else:
            out.append(body[i])
            i += 1
    return "".join(out)


class _Toks:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self) -> Optional[str]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise InterpError("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.next()
        if got != tok:
            raise InterpError(f"expected {tok!r}, got {got!r}")

    def done(self) -> bool:
        return self.i >= len(self.toks)


# -- expression parser (precedence: OR < AND < NOT < cmp < +) ----------------


def _parse_expr(t: _Toks):
    return _parse_or(t)


def _parse_or(t: _Toks):
    node = _parse_and(t)
    while t.peek() == "OR":
        t.next()
        node = ("or", node, _parse_and(t))
    return node


def _parse_and(t: _Toks):
    node = _parse_not(t)
    while t.peek() == "AND":
        t.next()
        node = ("and", node, _parse_not(t))
    return node


def _parse_not(t: _Toks):
    if t.peek() == "NOT":
        t.next()
        return ("not", _parse_not(t))
    return _parse_cmp(t)


def _parse_cmp(t: _Toks):
    node = _parse_sum(t)
    if t.peek() in ("=", "<>"):
        op = t.next()
        right = _parse_sum(t)
        return ("eq" if op == "=" else "ne", node, right)
    if t.peek() == "IS":
        t.next()
        negated = False
        if t.peek() == "NOT":
            t.next()
            negated = True
        t.expect("NULL")
        return ("isnotnull" if negated else "isnull", node)
    return node


def _parse_sum(t: _Toks):
    node = _parse_atom(t)
    while t.peek() == "+":
        t.next()
        node = ("+", node, _parse_atom(t))
    return node


def _parse_atom(t: _Toks):
    tok = t.next()
    if tok == "-":
        inner = _parse_atom(t)
        if inner[0] != "lit" or not _is_number(inner[1]):
            raise InterpError("unary minus only applies to number literals")
        return ("lit", -inner[1])
    if tok.startswith('"'):
        return ("lit", _unquote(tok))
    if tok == "(":
        node = _parse_expr(t)
        t.expect(")")
        return node
    if re.fullmatch(r"\d+\.\d+(?:[eE][+-]?\d+)?", tok):
        return ("lit", float(tok))
    if re.fullmatch(r"\d+", tok):
        return ("lit", int(tok))
    if tok == "true":
        return ("lit", True)
    if tok == "false":
        return ("lit", False)
    if tok == "null":
        return ("lit", None)
    if tok == "CASE":
        arms = []
        while t.peek() == "WHEN":
            t.next()
            cond = _parse_expr(t)
            t.expect("THEN")
            arms.append((cond, _parse_expr(t)))
        t.expect("ELSE")
        other = _parse_expr(t)
        t.expect("END")
        return ("case", arms, other)
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
        if t.peek() == "(":
            t.next()
            arg = _parse_expr(t)
            t.expect(")")
            if tok in ("toLower", "toString", "elementId"):
                return (tok, arg)
            raise InterpError(f"unknown function {tok}")
        if t.peek() == ".":
            t.next()
            key = t.next()
            return ("prop", tok, key)
        return ("var", tok)
    raise InterpError(f"unexpected token {tok!r}")


# -- evaluation ---------------------------------------------------------------


def _text_of(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _cy_eq(a, b) -> Optional[bool]:
    # three-valued equality: null propagates, numbers compare across
    # int/float, any other cross-type comparison is plain false
    if a is None or b is None:
        return None
    if _is_number(a) and _is_number(b):
        return a == b
    if type(a) is not type(b):
        return False
    return a == b


def _truthy(v) -> bool:
    return v is True


def _eval(expr, env, g: PropertyGraph, created_marker=None):
    op = expr[0]
    if op == "lit":
        return expr[1]
    if op == "var":
        raise InterpError(f"bare variable {expr[1]!r} used as a value")
    if op == "prop":
        element = env.get(expr[1])
        if element is None:
            raise InterpError(f"unbound variable {expr[1]!r}")
        return g.get_property(element, expr[2])
    if op == "elementId":
        inner = expr[1]
        if inner[0] != "var":
            raise InterpError("elementId takes a variable")
        element = env.get(inner[1])
        if element is None:
            raise InterpError(f"unbound variable {inner[1]!r}")
        return element
    if op == "toLower":
        v = _eval(expr[1], env, g)
        if v is None:
            return None
        if not isinstance(v, str):
            raise InterpError(f"toLower on non-text {v!r}")
        return v.lower()
    if op == "toString":
        v = _eval(expr[1], env, g)
        return None if v is None else _text_of(v)
    if op == "+":
        left = _eval(expr[1], env, g)
        right = _eval(expr[2], env, g)
        if left is None or right is None:
            return None
        if isinstance(left, str) or isinstance(right, str):
            return _text_of(left) + _text_of(right)
        if _is_number(left) and _is_number(right):
            return left + right
        raise InterpError(f"cannot add {left!r} and {right!r}")
    if op == "eq":
        return _cy_eq(_eval(expr[1], env, g), _eval(expr[2], env, g))
    if op == "ne":
        v = _cy_eq(_eval(expr[1], env, g), _eval(expr[2], env, g))
        return None if v is None else not v
    if op == "not":
        v = _eval(expr[1], env, g)
        return None if v is None else not v
    if op == "isnull":
        return _eval(expr[1], env, g) is None
    if op == "isnotnull":
        return _eval(expr[1], env, g) is not None
    if op == "and":
        left = _eval(expr[1], env, g)
        right = _eval(expr[2], env, g)
        if left is False or right is False:
            return False
        if left is None or right is None:
            return None
        return True
    if op == "or":
        left = _eval(expr[1], env, g)
        right = _eval(expr[2], env, g)
        if left is True or right is True:
            return True
        if left is None or right is None:
            return None
        return False
    if op == "case":
        for cond, val in expr[1]:
            if _truthy(_eval(cond, env, g)):
                return _eval(val, env, g)
        return _eval(expr[2], env, g)
    raise InterpError(f"unknown expression {expr!r}")


# -- clause parsing -----------------------------------------------------------


def _logical_lines(text: str) -> list[str]:
    lines: list[str] = []
    for raw in text.splitlines():
        if not raw.strip():
            continue
        if raw[0] in " \t" and lines:
            lines[-1] += " " + raw.strip()
        else:
            lines.append(raw.rstrip())
    return lines


def _parse_node_piece(t: _Toks):
    """( var? (:Label)* ( { _id: expr } )? )"""
    t.expect("(")
    var = None
    labels = []
    id_expr = None
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", t.peek() or ""):
        var = t.next()
    while t.peek() == ":":
        t.next()
        labels.append(t.next())
    if t.peek() == "{":
        t.next()
        key = t.next()
        t.expect(":")
        id_expr = (key, _parse_expr(t))
        t.expect("}")
    t.expect(")")
    return var, labels, id_expr


def _parse_edge_piece(t: _Toks):
    """-[ var? (:Label)? ({...})? ]-> or <-[ ... ]-; returns (var, label, id_expr, forward)"""
    forward = t.peek() == "-"
    if forward:
        t.expect("-")
    else:
        t.expect("<-")
    t.expect("[")
    var = None
    label = None
    id_expr = None
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", t.peek() or ""):
        var = t.next()
    if t.peek() == ":":
        t.next()
        label = t.next()
    if t.peek() == "*":
        raise InterpError("variable-length patterns are out of scope")
    if t.peek() == "{":
        t.next()
        key = t.next()
        t.expect(":")
        id_expr = (key, _parse_expr(t))
        t.expect("}")
    t.expect("]")
    if forward:
        t.expect("->")
    else:
        t.expect("-")
    return var, label, id_expr, forward


def _parse_set_items(t: _Toks):
    items = []
    while True:
        var = t.next()
        if t.peek() == ":":
            labels = []
            while t.peek() == ":":
                t.next()
                labels.append(t.next())
            items.append(("labels", var, labels))
        else:
            t.expect(".")
            key = t.next()
            t.expect("=")
            items.append(("prop", var, key, _parse_expr(t)))
        if t.peek() == ",":
            t.next()
            continue
        break
    return items


def parse_statement(text: str) -> list[tuple]:
    """One emitted rule body -> list of clause tuples."""
    clauses: list[tuple] = []
    for line in _logical_lines(text):
        t = _Toks(_tokenize(line))
        head = t.next()
        if head == "MATCH":
            nodes = [_parse_node_piece(t)]
            edges = []
            while t.peek() in ("-", "<-"):
                edges.append(_parse_edge_piece(t))
                nodes.append(_parse_node_piece(t))
            where = None
            if t.peek() == "WHERE":
                t.next()
                where = _parse_expr(t)
            if not t.done():
                raise InterpError(f"trailing tokens in MATCH: {line!r}")
            clauses.append(("match", nodes, edges, where))
        elif head == "MERGE":
            first = _parse_node_piece(t)
            if t.peek() in ("-", "<-"):
                edge = _parse_edge_piece(t)
                second = _parse_node_piece(t)
                clauses.append(("merge_edge", first, edge, second))
            else:
                clauses.append(("merge_node", first))
            if not t.done():
                raise InterpError(f"trailing tokens in MERGE: {line!r}")
        elif head == "SET":
            clauses.append(("set", None, _parse_set_items(t)))
        elif head == "ON":
            mode = t.next()
            t.expect("SET")
            clauses.append(("set", "created" if mode == "CREATE" else "matched", _parse_set_items(t)))
        else:
            raise InterpError(f"unknown clause {head!r}")
    return clauses


# -- matching -----------------------------------------------------------------


def _match_line(clause, g: PropertyGraph, env: dict) -> list[dict]:
    _, nodes, edges, where = clause
    rows: list[tuple[dict, frozenset]] = [({}, frozenset())]

    def node_ok(nid, labels):
        return all(lb in g.labels(nid) for lb in labels)

    # first node piece
    var0, labels0, _ = nodes[0]
    nxt = []
    for nid in g.nodes():
        if not node_ok(nid, labels0):
            continue
        pinned = env.get(var0) if var0 else None
        if pinned is not None and pinned != nid:
            continue
        local = {var0: nid} if var0 else {}
        nxt.append((local, frozenset(), nid))
    states = nxt

    for (evar, elabel, _, forward), (nvar, nlabels, _) in zip(edges, nodes[1:]):
        nxt = []
        for local, used, at in states:
            for eid in g.edges():
                if eid in used:
                    continue
                if elabel is not None and elabel not in g.labels(eid):
                    continue
                s, t_ = g.src(eid), g.tgt(eid)
                if forward:
                    if s != at:
                        continue
                    other = t_
                else:
                    if t_ != at:
                        continue
                    other = s
                if not node_ok(other, nlabels):
                    continue
                local2 = dict(local)
                for var, element in ((evar, eid), (nvar, other)):
                    if var is None:
                        continue
                    prior = local2.get(var, env.get(var))
                    if prior is not None and prior != element:
                        local2 = None
                        break
                    local2[var] = element
                if local2 is None:
                    continue
                nxt.append((local2, used | {eid}, other))
        states = nxt

    out = []
    for local, _, _ in states:
        merged = dict(env)
        merged.update(local)
        if where is not None and not _truthy(_eval(where, merged, g)):
            continue
        out.append(merged)
    return out


# -- execution ----------------------------------------------------------------


def _clone(g: PropertyGraph) -> PropertyGraph:
    out = PropertyGraph()
    for nid in g.nodes():
        out.add_node(nid)
        out.add_labels(nid, g.labels(nid))
        for key, value in g.properties(nid).items():
            out.set_property(nid, key, value)
    for eid in g.edges():
        out.add_edge(eid, g.src(eid), g.tgt(eid))
        out.add_labels(eid, g.labels(eid))
        for key, value in g.properties(eid).items():
            out.set_property(eid, key, value)
    return out


def run_statements(stmts, g0: PropertyGraph):
    """Execute statements in order against a copy of g0.

    Returns (store, created_ids): the full graph including bookkeeping
    labels and _id properties, plus the set of ids MERGE created.
    """
    g = _clone(g0)
    created_ids: set[str] = set()

    def merge_node(piece, env):
        var, labels, id_expr = piece
        if id_expr is None:
            raise InterpError("node MERGE needs an id property")
        key, expr = id_expr
        val = _eval(expr, env, g)
        if val is None:
            raise InterpError("cannot MERGE on a null id value")
        for nid in g.nodes():
            if labels and not all(lb in g.labels(nid) for lb in labels):
                continue
            if g.get_property(nid, key) == val and type(g.get_property(nid, key)) is type(val):
                return nid, False
        if not isinstance(val, str):
            raise InterpError(f"id value {val!r} is not text")
        if val in set(g.nodes()) | set(g.edges()):
            raise InterpError(f"store id collision on {val!r}")
        g.add_node(val)
        g.add_labels(val, labels)
        g.set_property(val, key, val)
        created_ids.add(val)
        return val, True

    def merge_edge(first, edge, second, env):
        for var, _, _ in (first, second):
            if var is None or env.get(var) is None:
                raise InterpError("edge MERGE endpoints must be bound")
        evar, elabel, id_expr, forward = edge
        src = env[first[0]] if forward else env[second[0]]
        tgt = env[second[0]] if forward else env[first[0]]
        if id_expr is None:
            raise InterpError("edge MERGE needs an id property")
        key, expr = id_expr
        val = _eval(expr, env, g)
        if val is None:
            raise InterpError("cannot MERGE on a null id value")
        for eid in g.edges():
            if elabel is not None and elabel not in g.labels(eid):
                continue
            if g.src(eid) != src or g.tgt(eid) != tgt:
                continue
            existing = g.get_property(eid, key)
            if existing == val and type(existing) is type(val):
                return eid, False
        if not isinstance(val, str):
            raise InterpError(f"id value {val!r} is not text")
        if val in set(g.nodes()) | set(g.edges()):
            raise InterpError(f"store id collision on {val!r}")
        g.add_edge(val, src, tgt)
        if elabel is not None:
            g.add_labels(val, [elabel])
        g.set_property(val, key, val)
        created_ids.add(val)
        return val, True

    def apply_set(items, env):
        for item in items:
            if item[0] == "labels":
                _, var, labels = item
                g.add_labels(env[var], labels)
            else:
                _, var, key, expr = item
                val = _eval(expr, env, g)
                if val is None:
                    # null SET removes the property in the target language;
                    # the corpora here never rely on that
                    raise InterpError(f"SET {var}.{key} to null is out of scope")
                g.set_property(env[var], key, val)

    for text in stmts:
        clauses = parse_statement(text)
        rows = [{}]
        i = 0
        while i < len(clauses) and clauses[i][0] == "match":
            nxt = []
            for row in rows:
                nxt.extend(_match_line(clauses[i], g, row))
            rows = nxt
            i += 1
        rows.sort(key=lambda r: tuple(sorted(r.items())))
        write_clauses = clauses[i:]
        for clause in write_clauses:
            if clause[0] == "match":
                raise InterpError("MATCH after a writing clause is out of scope")
        for row in rows:
            env = dict(row)
            last_created = None
            for clause in write_clauses:
                if clause[0] == "merge_node":
                    piece = clause[1]
                    element, was_created = merge_node(piece, env)
                    if piece[0] is not None:
                        env[piece[0]] = element
                    last_created = was_created
                elif clause[0] == "merge_edge":
                    _, first, edge, second = clause
                    element, was_created = merge_edge(first, edge, second, env)
                    if edge[0] is not None:
                        env[edge[0]] = element
                    last_created = was_created
                elif clause[0] == "set":
                    _, mode, items = clause
                    if mode == "created" and last_created is not True:
                        continue
                    if mode == "matched" and last_created is not False:
                        continue
                    apply_set(items, env)
    return g, created_ids


def output_graph(store: PropertyGraph, created_ids) -> PropertyGraph:
    """The created elements, with bookkeeping stripped: comparable to the
    engine's output under the plain id codec."""
    out = PropertyGraph()
    for nid in store.nodes():
        if nid not in created_ids:
            continue
        out.add_node(nid)
        out.add_labels(nid, [lb for lb in store.labels(nid) if lb != "_dummy"])
        for key, value in store.properties(nid).items():
            if key != "_id":
                out.set_property(nid, key, value)
    for eid in store.edges():
        if eid not in created_ids:
            continue
        out.add_edge(eid, store.src(eid), store.tgt(eid))
        out.add_labels(eid, [lb for lb in store.labels(eid) if lb != "_dummy"])
        for key, value in store.properties(eid).items():
            if key != "_id":
                out.set_property(eid, key, value)
    return out
