"""File formats: canonical graph documents, relational CSV, scenario configs.

The graph document is UTF-8 JSON with top-level "nodes" and "edges" lists.
A node is {"id", "labels", "properties"}; an edge adds "src" and "tgt".
Saving sorts elements by id and labels/keys lexicographically, so equal
graphs serialize to equal bytes and a canonical file round-trips through
load/save unchanged.

CSV ingestion treats each row of each table as one node: the relation name
becomes the label, columns become properties, and the node id is
"<relation>:<row index>". Cells parse as int, then float, then the bool
literals true/false, else text; RFC-4180 quoting forces text, which is why
this module carries its own reader - stock readers discard quoted-ness.

All writes are atomic (temp file in the target directory, then rename).
"""

import configparser
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

from .cypher import CompileOptions, IndexChoice, Variant
from .executor import ConflictPolicy
from .graph import SKOLEM_SIGIL, PropertyGraph, Value
from .parser import parse_transformation
from .rules import Rule


class FormatError(Exception):
    """Malformed input document; carries a location string."""

    def __init__(self, message: str, location: str = "") -> None:
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class SigilViolation(FormatError):
    """An input id begins with the synthetic-id sigil reserved for outputs."""


class RaggedRow(FormatError):
    pass


class DuplicateHeader(FormatError):
    pass


class MissingFile(Exception):
    pass


class InvalidConfig(Exception):
    pass


# -- atomic writes ----------------------------------------------------------------


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_document(obj, path: Union[str, Path]) -> None:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    atomic_write_text(path, dumps_document(obj))


def dumps_document(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# -- graph documents ---------------------------------------------------------------


def _check_value(v, location: str) -> Value:
    if isinstance(v, bool) or isinstance(v, (int, str)):
        return v
    if isinstance(v, float):
        if v != v or v in (float("inf"), float("-inf")):
            raise FormatError("non-finite number", location)
        return v
    raise FormatError(f"unsupported value type {type(v).__name__}", location)


def graph_to_document(g: PropertyGraph) -> dict:
    nodes = []
    for nid in g.nodes():
        nodes.append(
            {
                "id": nid,
                "labels": sorted(g.labels(nid)),
                "properties": {k: v for k, v in sorted(g.properties(nid).items())},
            }
        )
    edges = []
    for eid in g.edges():
        src, tgt = g.endpoints(eid)
        edges.append(
            {
                "id": eid,
                "src": src,
                "tgt": tgt,
                "labels": sorted(g.labels(eid)),
                "properties": {k: v for k, v in sorted(g.properties(eid).items())},
            }
        )
    return {"nodes": nodes, "edges": edges}


def graph_from_document(doc, *, allow_synthetic: bool = False) -> PropertyGraph:
    if not isinstance(doc, dict):
        raise FormatError("top level must be an object", "$")
    g = PropertyGraph()
    nodes = doc.get("nodes", [])
    edges = doc.get("edges", [])
    if not isinstance(nodes, list) or not isinstance(edges, list):
        raise FormatError('"nodes" and "edges" must be lists', "$")
    for i, entry in enumerate(nodes):
        loc = f"nodes[{i}]"
        nid = _entry_id(entry, loc, allow_synthetic)
        g.add_node(nid)
        _apply_content(g, nid, entry, loc)
    for i, entry in enumerate(edges):
        loc = f"edges[{i}]"
        eid = _entry_id(entry, loc, allow_synthetic)
        for end in ("src", "tgt"):
            if not isinstance(entry.get(end), str):
                raise FormatError(f'missing or non-text "{end}"', loc)
        g.add_edge(eid, entry["src"], entry["tgt"])
        _apply_content(g, eid, entry, loc)
    return g


def _entry_id(entry, loc: str, allow_synthetic: bool) -> str:
    if not isinstance(entry, dict):
        raise FormatError("element must be an object", loc)
    nid = entry.get("id")
    if not isinstance(nid, str) or not nid:
        raise FormatError('missing or empty "id"', loc)
    if not allow_synthetic and nid.startswith(SKOLEM_SIGIL):
        raise SigilViolation(
            f"input id {nid!r} carries the reserved output-id prefix", loc
        )
    return nid


def _apply_content(g: PropertyGraph, eid: str, entry: dict, loc: str) -> None:
    labels = entry.get("labels", [])
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise FormatError('"labels" must be a list of text', loc)
    g.add_labels(eid, labels)
    props = entry.get("properties", {})
    if not isinstance(props, dict):
        raise FormatError('"properties" must be an object', loc)
    for k, v in props.items():
        g.set_property(eid, k, _check_value(v, f"{loc}.properties.{k}"))


def save_graph(g: PropertyGraph, path: Union[str, Path]) -> None:
    atomic_write_text(path, dumps_document(graph_to_document(g)))


def load_graph(path: Union[str, Path], *, allow_synthetic: bool = False) -> PropertyGraph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingFile(str(path)) from None
    if not text.strip():
        return PropertyGraph()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(str(exc), f"line {exc.lineno}") from None
    return graph_from_document(doc, allow_synthetic=allow_synthetic)


# -- CSV -----------------------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    text: str
    quoted: bool


def _read_csv_records(text: str, where: str) -> list[list[Cell]]:
    # RFC 4180 with quoted-ness kept: "5" is text, 5 is a number
    records: list[list[Cell]] = []
    row: list[Cell] = []
    buf: list[str] = []
    quoted = False
    in_quotes = False
    i, n = 0, len(text)
    line = 1

    def end_field() -> None:
        nonlocal quoted
        row.append(Cell("".join(buf), quoted))
        buf.clear()
        quoted = False

    def end_row() -> None:
        end_field()
        records.append(list(row))
        row.clear()

    while i < n:
        ch = text[i]
        if in_quotes:
            if ch == '"':
                if i + 1 < n and text[i + 1] == '"':
                    buf.append('"')
                    i += 2
                    continue
                in_quotes = False
                i += 1
                continue
            if ch == "\n":
                line += 1
            buf.append(ch)
            i += 1
            continue
        if ch == '"':
            if buf:
                raise FormatError("quote inside unquoted field", f"{where}:{line}")
            in_quotes = True
            quoted = True
            i += 1
            continue
        if ch == ",":
            end_field()
            i += 1
            continue
        if ch == "\r":
            i += 2 if i + 1 < n and text[i + 1] == "\n" else 1
            end_row()
            line += 1
            continue
        if ch == "\n":
            end_row()
            i += 1
            line += 1
            continue
        buf.append(ch)
        i += 1
    if in_quotes:
        raise FormatError("unterminated quoted field", f"{where}:{line}")
    if buf or quoted or row:
        end_row()
    return records


def parse_cell(cell: Cell) -> Value:
    if cell.quoted:
        return cell.text
    t = cell.text
    try:
        return int(t)
    except ValueError:
        pass
    if any(c in t for c in ".eE") and t not in ("", ".", "e", "E"):
        try:
            v = float(t)
        except ValueError:
            v = None
        if v is not None and v == v and v not in (float("inf"), float("-inf")):
            return v
    if t == "true":
        return True
    if t == "false":
        return False
    return t


def read_csv_table(path: Union[str, Path]) -> tuple[list[str], list[list[Value]]]:
    """Header plus typed rows; the relation name is up to the caller."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingFile(str(path)) from None
    records = _read_csv_records(text, str(path))
    if not records:
        return [], []
    header = [c.text for c in records[0]]
    rows = [[parse_cell(c) for c in rec] for rec in records[1:]]
    return header, rows


def write_csv_table(
    path: Union[str, Path], header: Sequence[str], rows: Sequence[Sequence[Value]]
) -> None:
    def render(v: Value) -> str:
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, float)):
            return repr(v) if isinstance(v, float) else str(v)
        # quote when delimiters demand it or when a bare cell would
        # re-parse as something other than this text
        reparsed = parse_cell(Cell(v, False))
        if any(ch in v for ch in ',"\r\n') or reparsed != v or not isinstance(reparsed, str):
            return '"' + v.replace('"', '""') + '"'
        return v

    lines = [",".join(render(h) for h in header)]
    for row in rows:
        lines.append(",".join(render(v) for v in row))
    atomic_write_text(path, "\r\n".join(lines) + "\r\n")


def ingest_csv(
    tables: Sequence[tuple[str, Sequence[str], Sequence[Sequence[Value]]]]
) -> PropertyGraph:
    """One node per row; label = relation name; id = relation ":" row index."""
    g = PropertyGraph()
    for relation, header, rows in tables:
        seen = set()
        for col in header:
            if col in seen:
                raise DuplicateHeader(f"column {col!r} repeats", relation)
            seen.add(col)
        for i, row in enumerate(rows):
            if len(row) != len(header):
                raise RaggedRow(
                    f"row {i} has {len(row)} cells, header has {len(header)}",
                    relation,
                )
            nid = f"{relation}:{i}"
            g.add_node(nid)
            g.add_labels(nid, [relation])
            for col, value in zip(header, row):
                g.set_property(nid, col, value)
    return g


# -- scenarios --------------------------------------------------------------------


@dataclass
class Scenario:
    """Everything one experiment run needs, loaded from one config file."""

    graph: PropertyGraph
    rules: list[Rule]
    policy: ConflictPolicy = ConflictPolicy.RECORD_AND_CONTINUE
    compile_options: CompileOptions = field(default_factory=CompileOptions)
    conflict_likelihood: float = 0.0
    seed: int = 0
    params: dict = field(default_factory=dict)
    name: str = ""


_POLICIES = {p.value: p for p in ConflictPolicy}
_VARIANTS = {v.value: v for v in Variant}
_INDEXES = {i.value: i for i in IndexChoice}


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    cp = configparser.ConfigParser()
    try:
        cp.read_string(path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise InvalidConfig(str(exc)) from None
    base = path.parent

    if "input" not in cp:
        raise InvalidConfig("missing [input] section")
    inp = cp["input"]
    if "graph" in inp:
        graph = load_graph(base / inp["graph"])
    elif "csv" in inp:
        tables = []
        for spec in inp["csv"].split(","):
            spec = spec.strip()
            if not spec:
                continue
            csv_path = base / spec
            header, rows = read_csv_table(csv_path)
            tables.append((csv_path.stem, header, rows))
        graph = ingest_csv(tables)
    else:
        raise InvalidConfig("[input] needs a graph= or csv= entry")

    if "rules" not in cp or "file" not in cp["rules"]:
        raise InvalidConfig("missing [rules] file= entry")
    rules_path = base / cp["rules"]["file"]
    if not rules_path.exists():
        raise MissingFile(str(rules_path))
    rules = parse_transformation(rules_path.read_text(encoding="utf-8"))

    opts = cp["options"] if "options" in cp else {}

    def pick(table: dict, key: str, default):
        raw = opts.get(key)
        if raw is None:
            return default
        if raw not in table:
            raise InvalidConfig(f"{key} must be one of {sorted(table)}, got {raw!r}")
        return table[raw]

    try:
        likelihood = float(opts.get("conflict_likelihood", "0"))
        seed = int(opts.get("seed", "0"))
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from None
    if not 0.0 <= likelihood <= 1.0:
        raise InvalidConfig("conflict_likelihood must be within [0, 1]")

    def flag(key: str) -> bool:
        raw = opts.get(key, "false").strip().lower()
        if raw not in ("true", "false"):
            raise InvalidConfig(f"{key} must be true or false")
        return raw == "true"

    params = {}
    if "params" in cp:
        for k, v in cp["params"].items():
            params[k] = parse_cell(Cell(v, False))

    return Scenario(
        graph=graph,
        rules=rules,
        policy=pick(_POLICIES, "policy", ConflictPolicy.RECORD_AND_CONTINUE),
        compile_options=CompileOptions(
            variant=pick(_VARIANTS, "variant", Variant.PLAIN),
            indexes=pick(_INDEXES, "indexes", IndexChoice.NODES_ONLY),
            uniqueness=flag("uniqueness"),
            conflict_detection=flag("conflict_detection"),
            escaped=flag("escaped"),
        ),
        conflict_likelihood=likelihood,
        seed=seed,
        params=params,
        name=path.stem,
    )
