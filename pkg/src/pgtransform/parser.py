"""Text format for rules and queries.

One file holds any number of rules:

    RULE CityNodes
      MATCH (u:User)-[:HasAddress]->(a:Address)
      WHERE NOT a.cityName = "N/A"
      => ((a.cityName):City {name = a.cityName})

Grammar sketch (keywords are case-insensitive, identifiers are not):

    rule       := RULE name MATCH path ("," path)* (WHERE cond)? "=>" ctor ("," ctor)*
    path       := (TRAIL | SIMPLE | SHORTEST)? element+
    element    := atom | group, optionally followed by ^{lo}, ^{lo..hi} or ^{lo..INF}
    atom       := "(" var? (":" label)? cond-braces? ")"
                | "-[" var? (":" label)? cond-braces? "]->"
                | "<-[" var? (":" label)? cond-braces? "]-"
    group      := "[" element+ ("+" element+)* "]" cond-braces?
    cond       := equality atoms (x.key = y.key, x.key <> 3) under NOT/AND/OR,
                  with "(" ")" grouping; operands are var.key, literals,
                  $param, toLower(...). Inside an atom's braces a bare key
                  refers to that atom's variable.
    ctor       := (alias "=")? node-ctor | endpoint "-[" ctor-core "]->" endpoint
    node-ctor  := "(" "(" id-args ")" (":" label)* content? ")"
    endpoint   := node-ctor | "(" alias ")"
    ctor-core  := ("(" id-args ")")? (":" label)* content?
    id-arg     := var | var.key | @Label | literal
    content    := "{" key "=" operand ("," key "=" operand)* "}"

"//" starts a line comment. A group "[ ... ]" is a plain grouping with one
branch and a union with several "+"-separated branches. Standalone query
files use the same syntax without the RULE frame:

    MATCH path ("," path)* (WHERE cond)? (UNION MATCH ...)*

Parsing a whole file recovers at rule boundaries, so one bad rule reports
its error and the rest still parse. `print_transformation` renders rules
back to this format; printing then reparsing reproduces the same rule
objects.
"""

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

from .patterns import (
    And,
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
)
from .rules import (
    AliasRef,
    ConstArg,
    Ctor,
    EdgeCtor,
    IdArg,
    LabelArg,
    NodeCtor,
    PropArg,
    Rule,
    VarArg,
)

_KEYWORDS = {
    "RULE", "MATCH", "WHERE", "TRAIL", "SIMPLE", "SHORTEST",
    "AND", "OR", "NOT", "TRUE", "FALSE", "TOLOWER", "INF", "UNION",
}

_RESTRICTORS = {
    "TRAIL": Restrictor.TRAIL,
    "SIMPLE": Restrictor.SIMPLE,
    "SHORTEST": Restrictor.SHORTEST,
}


@dataclass(frozen=True)
class SourceSpan:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'int', 'float', 'string', 'param', 'kw', 'eof', or punctuation
    value: object
    span: SourceSpan


_PUNCT = ["]->", "<-[", "-[", "]-", "=>", "..", "<>", "(", ")", "[", "]",
          "{", "}", ",", ":", "=", "+", ".", "^", "@"]

_STRING_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    line_start = 0

    def span(pos: int) -> SourceSpan:
        return SourceSpan(line, pos - line_start + 1)

    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            i += 1
            line_start = i
            continue
        if ch in " \t\r":
            i += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start = i
        if ch == '"':
            i += 1
            out = []
            while i < n and text[i] != '"':
                if text[i] == "\\":
                    esc = text[i + 1] if i + 1 < n else ""
                    if esc not in _STRING_ESCAPES:
                        raise ParseError(f"bad string escape \\{esc}", span(i))
                    out.append(_STRING_ESCAPES[esc])
                    i += 2
                elif text[i] == "\n":
                    raise ParseError("unterminated string", span(start))
                else:
                    out.append(text[i])
                    i += 1
            if i >= n:
                raise ParseError("unterminated string", span(start))
            i += 1
            tokens.append(Token("string", "".join(out), span(start)))
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            i += 1 if ch == "-" else 0
            while i < n and text[i].isdigit():
                i += 1
            is_float = False
            if i + 1 < n and text[i] == "." and text[i + 1].isdigit():
                is_float = True
                i += 1
                while i < n and text[i].isdigit():
                    i += 1
            if i < n and text[i] in "eE":
                j = i + 1
                if j < n and text[j] in "+-":
                    j += 1
                if j < n and text[j].isdigit():
                    is_float = True
                    i = j
                    while i < n and text[i].isdigit():
                        i += 1
            lit = text[start:i]
            if is_float:
                tokens.append(Token("float", float(lit), span(start)))
            else:
                tokens.append(Token("int", int(lit), span(start)))
            continue
        if ch.isalpha() or ch == "_":
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            word = text[start:i]
            if word.upper() in _KEYWORDS:
                tokens.append(Token("kw", word.upper(), span(start)))
            else:
                tokens.append(Token("ident", word, span(start)))
            continue
        if ch == "$":
            i += 1
            j = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            if i == j:
                raise ParseError("expected a parameter name after $", span(start))
            tokens.append(Token("param", text[j:i], span(start)))
            continue
        for punct in _PUNCT:
            if text.startswith(punct, i):
                tokens.append(Token(punct, punct, span(start)))
                i += len(punct)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", span(start))
    tokens.append(Token("eof", None, span(i)))
    return tokens


_ELEMENT_STARTS = ("(", "-[", "<-[", "[")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def at(self, kind: str) -> bool:
        return self.peek().kind == kind

    def at_kw(self, kw: str) -> bool:
        t = self.peek()
        return t.kind == "kw" and t.value == kw

    def take(self, kind: str, what: Optional[str] = None) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {what or kind}, found {self._show(t)}", t.span)
        self.i += 1
        return t

    def take_kw(self, kw: str) -> Token:
        t = self.peek()
        if t.kind != "kw" or t.value != kw:
            raise ParseError(f"expected {kw}, found {self._show(t)}", t.span)
        self.i += 1
        return t

    @staticmethod
    def _show(t: Token) -> str:
        if t.kind == "eof":
            return "end of input"
        return repr(t.value if isinstance(t.value, str) else str(t.value))

    def fail(self, message: str) -> None:
        raise ParseError(message, self.peek().span)

    # -- rules ----------------------------------------------------------

    def transformation(self) -> tuple[list[Rule], list[ParseError]]:
        rules: list[Rule] = []
        errors: list[ParseError] = []
        while not self.at("eof"):
            if not self.at_kw("RULE"):
                errors.append(
                    ParseError(
                        f"expected RULE, found {self._show(self.peek())}", self.peek().span
                    )
                )
                self._sync()
                continue
            try:
                rules.append(self.rule())
            except ParseError as exc:
                errors.append(exc)
                self._sync()
        return rules, errors

    def _sync(self) -> None:
        if not self.at("eof"):
            self.i += 1
        while not self.at("eof") and not self.at_kw("RULE"):
            self.i += 1

    def rule(self) -> Rule:
        self.take_kw("RULE")
        name = self.take("ident", "a rule name").value
        query = self.query_body()
        self.take("=>", "'=>'")
        ctors = [self.ctor()]
        while self.at(","):
            self.i += 1
            ctors.append(self.ctor())
        return Rule(str(name), query, tuple(ctors))

    def query_body(self) -> GpcQuery:
        self.take_kw("MATCH")
        paths = [self.path()]
        while self.at(","):
            self.i += 1
            paths.append(self.path())
        cond = None
        if self.at_kw("WHERE"):
            self.i += 1
            cond = self.condition(None)
        return GpcQuery(tuple(paths), cond)

    # -- paths and patterns ----------------------------------------------

    def path(self) -> PathPattern:
        restrictor = Restrictor.TRAIL
        t = self.peek()
        if t.kind == "kw" and t.value in _RESTRICTORS:
            restrictor = _RESTRICTORS[t.value]
            self.i += 1
        return PathPattern(self.sequence(), restrictor)

    def sequence(self) -> Pattern:
        parts = [self.element()]
        while self.peek().kind in _ELEMENT_STARTS:
            parts.append(self.element())
        pattern = parts[0]
        for nxt in parts[1:]:
            pattern = Concat(pattern, nxt)
        return pattern

    def element(self) -> Pattern:
        t = self.peek()
        if t.kind == "(":
            elem = self.node_atom()
        elif t.kind in ("-[", "<-["):
            elem = self.edge_atom()
        elif t.kind == "[":
            elem = self.group()
        else:
            self.fail(f"expected a pattern element, found {self._show(t)}")
        if self.at("^"):
            elem = self.repetition(elem)
        return elem

    def node_atom(self) -> Pattern:
        self.take("(")
        var = self.take("ident").value if self.at("ident") else None
        label = None
        if self.at(":"):
            self.i += 1
            label = self.take("ident", "a label").value
        cond = self.brace_condition(var) if self.at("{") else None
        self.take(")", "')'")
        atom: Pattern = NodeAtom(var=var, label=label)
        return CondPat(atom, cond) if cond is not None else atom

    def edge_atom(self) -> Pattern:
        opener = self.peek().kind
        self.i += 1
        var = self.take("ident").value if self.at("ident") else None
        label = None
        if self.at(":"):
            self.i += 1
            label = self.take("ident", "a label").value
        cond = self.brace_condition(var) if self.at("{") else None
        if opener == "-[":
            self.take("]->", "']->'")
            direction = Direction.FORWARD
        else:
            self.take("]-", "']-'")
            direction = Direction.BACKWARD
        atom: Pattern = EdgeAtom(direction=direction, var=var, label=label)
        return CondPat(atom, cond) if cond is not None else atom

    def group(self) -> Pattern:
        self.take("[")
        branches = [self.sequence()]
        while self.at("+"):
            self.i += 1
            branches.append(self.sequence())
        self.take("]", "']'")
        pattern = branches[0]
        for nxt in branches[1:]:
            pattern = UnionPat(pattern, nxt)
        if self.at("{"):
            pattern = CondPat(pattern, self.brace_condition(None))
        return pattern

    def repetition(self, inner: Pattern) -> Pattern:
        self.take("^")
        self.take("{")
        lo = self.take("int", "a repetition bound").value
        hi: Optional[int] = lo
        if self.at(".."):
            self.i += 1
            if self.at_kw("INF"):
                self.i += 1
                hi = None
            else:
                hi = self.take("int", "a repetition bound or INF").value
        self.take("}", "'}'")
        return Repeat(inner, int(lo), None if hi is None else int(hi))

    # -- conditions -------------------------------------------------------

    def brace_condition(self, sugar_var: Optional[str]) -> Condition:
        self.take("{")
        cond = self.condition(sugar_var)
        self.take("}", "'}'")
        return cond

    def condition(self, sugar_var: Optional[str]) -> Condition:
        cond = self._cond_and(sugar_var)
        while self.at_kw("OR"):
            self.i += 1
            cond = Or(cond, self._cond_and(sugar_var))
        return cond

    def _cond_and(self, sugar_var: Optional[str]) -> Condition:
        cond = self._cond_not(sugar_var)
        while self.at_kw("AND"):
            self.i += 1
            cond = And(cond, self._cond_not(sugar_var))
        return cond

    def _cond_not(self, sugar_var: Optional[str]) -> Condition:
        if self.at_kw("NOT"):
            self.i += 1
            return Not(self._cond_not(sugar_var))
        return self._cond_atom(sugar_var)

    def _cond_atom(self, sugar_var: Optional[str]) -> Condition:
        if self.at("("):
            self.i += 1
            cond = self.condition(sugar_var)
            self.take(")", "')'")
            return cond
        left = self.operand(sugar_var)
        if self.at("="):
            self.i += 1
            return Eq(left, self.operand(sugar_var))
        if self.at("<>"):
            self.i += 1
            return Not(Eq(left, self.operand(sugar_var)))
        self.fail(f"expected = or <>, found {self._show(self.peek())}")

    def operand(self, sugar_var: Optional[str]) -> Operand:
        t = self.peek()
        if t.kind == "string":
            self.i += 1
            return Const(t.value)
        if t.kind == "int" or t.kind == "float":
            self.i += 1
            return Const(t.value)
        if t.kind == "param":
            self.i += 1
            return Param(str(t.value))
        if t.kind == "kw" and t.value in ("TRUE", "FALSE"):
            self.i += 1
            return Const(t.value == "TRUE")
        if t.kind == "kw" and t.value == "TOLOWER":
            self.i += 1
            self.take("(")
            inner = self.operand(sugar_var)
            self.take(")", "')'")
            return Lower(inner)
        if t.kind == "ident":
            self.i += 1
            if self.at("."):
                self.i += 1
                key = self.take("ident", "a property name").value
                return PropRef(str(t.value), str(key))
            if sugar_var is None:
                raise ParseError(
                    f"bare property name {t.value!r} is only allowed inside the "
                    "braces of an atom with a variable",
                    t.span,
                )
            return PropRef(sugar_var, str(t.value))
        self.fail(f"expected an operand, found {self._show(t)}")

    # -- constructors -----------------------------------------------------

    def ctor(self) -> Ctor:
        alias = None
        if self.at("ident") and self.peek(1).kind == "=":
            alias = str(self.take("ident").value)
            self.take("=")
        first = self.ctor_endpoint()
        if alias is not None:
            if isinstance(first, AliasRef):
                self.fail("an alias must name a node constructor, not another alias")
            if self.at("-["):
                self.fail("an alias definition cannot prefix an edge constructor")
            return replace(first, alias=alias)
        if self.at("-["):
            self.i += 1
            id_args: tuple[IdArg, ...] = ()
            if self.at("("):
                self.i += 1
                id_args = self.id_args()
                self.take(")", "')'")
            labels = self.label_list()
            props = self.content() if self.at("{") else ()
            self.take("]->", "']->'")
            tgt = self.ctor_endpoint()
            return EdgeCtor(src=first, tgt=tgt, id_args=id_args, labels=labels, props=props)
        if isinstance(first, AliasRef):
            self.fail("an alias reference can only appear as an edge endpoint")
        return first

    def ctor_endpoint(self) -> Union[NodeCtor, AliasRef]:
        self.take("(", "a constructor")
        if self.at("("):
            self.i += 1
            id_args = self.id_args()
            self.take(")", "')'")
            labels = self.label_list()
            props = self.content() if self.at("{") else ()
            self.take(")", "')'")
            return NodeCtor(id_args=id_args, labels=labels, props=props)
        name = self.take("ident", "an alias or constructor").value
        self.take(")", "')'")
        return AliasRef(str(name))

    def id_args(self) -> tuple[IdArg, ...]:
        if self.at(")"):
            return ()
        args = [self.id_arg()]
        while self.at(","):
            self.i += 1
            args.append(self.id_arg())
        return tuple(args)

    def id_arg(self) -> IdArg:
        t = self.peek()
        if t.kind == "@":
            self.i += 1
            return LabelArg(str(self.take("ident", "a label").value))
        if t.kind in ("string", "int", "float"):
            self.i += 1
            return ConstArg(t.value)
        if t.kind == "kw" and t.value in ("TRUE", "FALSE"):
            self.i += 1
            return ConstArg(t.value == "TRUE")
        if t.kind == "ident":
            self.i += 1
            if self.at("."):
                self.i += 1
                key = self.take("ident", "a property name").value
                return PropArg(str(t.value), str(key))
            return VarArg(str(t.value))
        self.fail(f"expected an id argument, found {self._show(t)}")

    def label_list(self) -> tuple[str, ...]:
        labels = []
        while self.at(":"):
            self.i += 1
            labels.append(str(self.take("ident", "a label").value))
        return tuple(labels)

    def content(self) -> tuple[tuple[str, Operand], ...]:
        self.take("{")
        if self.at("}"):
            self.i += 1
            return ()
        pairs = [self._assignment()]
        while self.at(","):
            self.i += 1
            pairs.append(self._assignment())
        self.take("}", "'}'")
        return tuple(pairs)

    def _assignment(self) -> tuple[str, Operand]:
        key = self.take("ident", "a property name").value
        self.take("=", "'='")
        return (str(key), self.operand(None))

    # -- standalone queries -------------------------------------------------

    def query_file(self) -> GpcPlusQuery:
        disjuncts = [self.query_body()]
        while self.at_kw("UNION"):
            self.i += 1
            disjuncts.append(self.query_body())
        self.take("eof", "end of input")
        return GpcPlusQuery(tuple(disjuncts))


def parse_with_errors(text: str) -> tuple[list[Rule], list[ParseError]]:
    """Parse a rule file, recovering at rule boundaries."""
    try:
        tokens = tokenize(text)
    except ParseError as exc:
        return [], [exc]
    return _Parser(tokens).transformation()


def parse_transformation(text: str) -> list[Rule]:
    rules, errors = parse_with_errors(text)
    if errors:
        raise errors[0]
    return rules


def parse_query(text: str) -> GpcPlusQuery:
    return _Parser(tokenize(text)).query_file()


def parse_single_query(text: str) -> GpcQuery:
    q = parse_query(text)
    if len(q.disjuncts) != 1:
        raise ParseError("expected a single query without UNION", SourceSpan(1, 1))
    return q.disjuncts[0]


# -- printing -----------------------------------------------------------------


def _quote(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _literal(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return _quote(v)
    return repr(v)


def print_operand(op: Operand) -> str:
    if isinstance(op, Const):
        return _literal(op.value)
    if isinstance(op, PropRef):
        return f"{op.var}.{op.key}"
    if isinstance(op, Param):
        return f"${op.name}"
    if isinstance(op, Lower):
        return f"toLower({print_operand(op.inner)})"
    raise TypeError(f"not an operand: {op!r}")


def print_condition(cond: Condition, _prec: int = 0) -> str:
    if isinstance(cond, Or):
        s = f"{print_condition(cond.left, 0)} OR {print_condition(cond.right, 1)}"
        return f"({s})" if _prec > 0 else s
    if isinstance(cond, And):
        s = f"{print_condition(cond.left, 1)} AND {print_condition(cond.right, 2)}"
        return f"({s})" if _prec > 1 else s
    if isinstance(cond, Not):
        if isinstance(cond.inner, Eq):
            eq = cond.inner
            return f"{print_operand(eq.left)} <> {print_operand(eq.right)}"
        return f"NOT {print_condition(cond.inner, 2)}"
    if isinstance(cond, Eq):
        return f"{print_operand(cond.left)} = {print_operand(cond.right)}"
    raise TypeError(f"not a condition: {cond!r}")


def _atom_text(atom: Union[NodeAtom, EdgeAtom], cond: Optional[Condition]) -> str:
    middle = atom.var or ""
    if atom.label is not None:
        middle += f":{atom.label}"
    if cond is not None:
        middle += f"{' ' if middle else ''}{{{print_condition(cond)}}}"
    if isinstance(atom, NodeAtom):
        return f"({middle})"
    if atom.direction is Direction.FORWARD:
        return f"-[{middle}]->"
    return f"<-[{middle}]-"


def _union_branches(p: Pattern) -> list[Pattern]:
    if isinstance(p, UnionPat):
        return _union_branches(p.left) + [p.right]
    return [p]


def _element_text(p: Pattern) -> str:
    if isinstance(p, (NodeAtom, EdgeAtom)):
        return _atom_text(p, None)
    if isinstance(p, CondPat) and isinstance(p.inner, (NodeAtom, EdgeAtom)):
        return _atom_text(p.inner, p.condition)
    if isinstance(p, CondPat):
        return f"[{print_pattern(p.inner)}] {{{print_condition(p.condition)}}}"
    if isinstance(p, UnionPat):
        return f"[{' + '.join(print_pattern(b) for b in _union_branches(p))}]"
    if isinstance(p, Repeat):
        if isinstance(p.inner, (NodeAtom, EdgeAtom)) or (
            isinstance(p.inner, CondPat) and isinstance(p.inner.inner, (NodeAtom, EdgeAtom))
        ) or isinstance(p.inner, UnionPat):
            inner = _element_text(p.inner)
        else:
            inner = f"[{print_pattern(p.inner)}]"
        if p.hi is None:
            bounds = f"{p.lo}..INF"
        elif p.hi == p.lo:
            bounds = f"{p.lo}"
        else:
            bounds = f"{p.lo}..{p.hi}"
        return f"{inner}^{{{bounds}}}"
    # a bare Concat used as one element needs brackets
    return f"[{print_pattern(p)}]"


def print_pattern(p: Pattern) -> str:
    parts = []
    stack = [p]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Concat):
            stack.append(cur.right)
            stack.append(cur.left)
        else:
            parts.append(_element_text(cur))
    return "".join(parts)


def print_path(pp: PathPattern) -> str:
    prefix = ""
    if pp.restrictor is Restrictor.SIMPLE:
        prefix = "SIMPLE "
    elif pp.restrictor is Restrictor.SHORTEST:
        prefix = "SHORTEST "
    return prefix + print_pattern(pp.pattern)


def print_query(q: GpcQuery) -> str:
    s = "MATCH " + ", ".join(print_path(pp) for pp in q.paths)
    if q.condition is not None:
        s += f" WHERE {print_condition(q.condition)}"
    return s


def print_plus_query(q: GpcPlusQuery) -> str:
    return "\nUNION\n".join(print_query(d) for d in q.disjuncts)


def _id_arg_text(a: IdArg) -> str:
    if isinstance(a, VarArg):
        return a.var
    if isinstance(a, PropArg):
        return f"{a.var}.{a.key}"
    if isinstance(a, LabelArg):
        return f"@{a.label}"
    if isinstance(a, ConstArg):
        return _literal(a.value)
    raise TypeError(f"not an id argument: {a!r}")


def _content_text(props: tuple[tuple[str, Operand], ...]) -> str:
    if not props:
        return ""
    inner = ", ".join(f"{k} = {print_operand(op)}" for k, op in props)
    return f" {{{inner}}}"


def _node_ctor_text(c: NodeCtor, with_alias: bool = True) -> str:
    args = ", ".join(_id_arg_text(a) for a in c.id_args)
    labels = "".join(f":{l}" for l in c.labels)
    body = f"(({args}){labels}{_content_text(c.props)})"
    if with_alias and c.alias is not None:
        return f"{c.alias} = {body}"
    return body


def _endpoint_text(e: Union[NodeCtor, AliasRef]) -> str:
    if isinstance(e, AliasRef):
        return f"({e.name})"
    return _node_ctor_text(e, with_alias=False)


def print_ctor(c: Ctor) -> str:
    if isinstance(c, NodeCtor):
        return _node_ctor_text(c)
    args = ", ".join(_id_arg_text(a) for a in c.id_args)
    middle = f"({args})" if c.id_args else ""
    middle += "".join(f":{l}" for l in c.labels)
    middle += _content_text(c.props)
    return f"{_endpoint_text(c.src)}-[{middle}]->{_endpoint_text(c.tgt)}"


def print_rule(r: Rule) -> str:
    lines = [f"RULE {r.name}"]
    lines.append("  MATCH " + ", ".join(print_path(pp) for pp in r.query.paths))
    if r.query.condition is not None:
        lines.append(f"  WHERE {print_condition(r.query.condition)}")
    lines.append("  => " + ",\n     ".join(print_ctor(c) for c in r.ctors))
    return "\n".join(lines)


def print_transformation(rules: Sequence[Rule]) -> str:
    return "\n\n".join(print_rule(r) for r in rules) + "\n"
