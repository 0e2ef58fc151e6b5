"""In-memory property graphs.

A graph holds two disjoint id sets (nodes and edges), a label set per
element, endpoint maps for edges, and a partial (element, key) -> value
record. Values are plain Python text/int/float/bool. Value equality is
exact and type-aware: the integer 1457 and the text "1457" differ, and so
do True and 1 even though Python compares them equal.

Element ids live in two disjoint spaces: ids of loaded input data, and ids
minted for transformation output. Output ids are recognizable by a fixed
sigil prefix, which keeps the two spaces disjoint by construction; loaders
refuse input elements whose id starts with the sigil.

Iteration order is deterministic everywhere: nodes, edges, labels and
property keys are reported in lexicographic order. Mutation requires
exclusive access; any number of readers may share a graph nobody is
mutating. There is no internal locking.
"""

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

Value = Union[str, int, float, bool]

# Prefix reserved for ids minted by transformation output. Input ids must
# never start with it.
SKOLEM_SIGIL = "$skolem$"

_VALUE_KINDS = {str: "text", bool: "bool", int: "int", float: "float"}


def value_kind(v: Value) -> str:
    """Classify a value; bool is checked before int (bool subclasses int)."""
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, float):
        return "float"
    if isinstance(v, str):
        return "text"
    raise TypeError(f"unsupported value type: {type(v).__name__}")


def value_eq(a: Value, b: Value) -> bool:
    """Exact typed equality: values of different kinds are never equal."""
    return value_kind(a) == value_kind(b) and a == b


def id_space(element_id: str) -> str:
    """'output' for ids minted by a transformation, 'input' otherwise."""
    return "output" if element_id.startswith(SKOLEM_SIGIL) else "input"


class GraphError(Exception):
    """Base class for graph integrity violations."""


class InvalidIdError(GraphError):
    pass


class IdCollisionError(GraphError):
    pass


class UnknownElementError(GraphError):
    pass


class DanglingEndpointError(GraphError):
    pass


class EndpointMismatchError(GraphError):
    pass


@dataclass(frozen=True)
class Violation:
    code: str
    element: Optional[str]
    detail: str


class PropertyGraph:
    """Mutable multigraph with labels and typed properties.

    Nodes and edges share one id namespace but must stay disjoint; adding
    an edge whose id is already a node id (or vice versa) raises
    IdCollisionError. Re-adding an existing node is a no-op; re-adding an
    existing edge is a no-op only when the endpoints agree, otherwise
    EndpointMismatchError.
    """

    def __init__(self) -> None:
        self._nodes: set[str] = set()
        self._edges: dict[str, tuple[str, str]] = {}
        self._labels: dict[str, set[str]] = {}
        self._props: dict[str, dict[str, Value]] = {}

    # -- construction ------------------------------------------------------

    def add_node(self, node_id: str) -> None:
        _check_id(node_id)
        if node_id in self._edges:
            raise IdCollisionError(f"id {node_id!r} already names an edge")
        self._nodes.add(node_id)

    def add_edge(self, edge_id: str, src: str, tgt: str) -> None:
        _check_id(edge_id)
        if edge_id in self._nodes:
            raise IdCollisionError(f"id {edge_id!r} already names a node")
        if src not in self._nodes or tgt not in self._nodes:
            raise DanglingEndpointError(
                f"edge {edge_id!r} endpoints ({src!r}, {tgt!r}) must be existing nodes"
            )
        existing = self._edges.get(edge_id)
        if existing is not None and existing != (src, tgt):
            raise EndpointMismatchError(
                f"edge {edge_id!r} already exists with endpoints {existing!r}"
            )
        self._edges[edge_id] = (src, tgt)

    def add_labels(self, element_id: str, labels: Iterable[str]) -> None:
        self._require(element_id)
        self._labels.setdefault(element_id, set()).update(labels)

    def set_property(self, element_id: str, key: str, value: Value) -> Optional[Value]:
        """Write one property; returns the previous value, None if absent."""
        self._require(element_id)
        value_kind(value)  # reject unsupported types early
        record = self._props.setdefault(element_id, {})
        previous = record.get(key)
        record[key] = value
        return previous

    def _require(self, element_id: str) -> None:
        if element_id not in self._nodes and element_id not in self._edges:
            raise UnknownElementError(f"unknown element {element_id!r}")

    # -- read access -------------------------------------------------------

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def has_edge(self, edge_id: str) -> bool:
        return edge_id in self._edges

    def has_element(self, element_id: str) -> bool:
        return element_id in self._nodes or element_id in self._edges

    def nodes(self) -> list[str]:
        return sorted(self._nodes)

    def edges(self) -> list[str]:
        return sorted(self._edges)

    def endpoints(self, edge_id: str) -> tuple[str, str]:
        try:
            return self._edges[edge_id]
        except KeyError:
            raise UnknownElementError(f"unknown edge {edge_id!r}") from None

    def src(self, edge_id: str) -> str:
        return self.endpoints(edge_id)[0]

    def tgt(self, edge_id: str) -> str:
        return self.endpoints(edge_id)[1]

    def labels(self, element_id: str) -> frozenset[str]:
        self._require(element_id)
        return frozenset(self._labels.get(element_id, ()))

    def properties(self, element_id: str) -> dict[str, Value]:
        self._require(element_id)
        record = self._props.get(element_id, {})
        return {k: record[k] for k in sorted(record)}

    def get_property(self, element_id: str, key: str) -> Optional[Value]:
        self._require(element_id)
        return self._props.get(element_id, {}).get(key)

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PropertyGraph):
            return NotImplemented
        return (
            self._nodes == other._nodes
            and self._edges == other._edges
            and _trimmed(self._labels) == _trimmed(other._labels)
            and _typed_props(self._props) == _typed_props(other._props)
        )

    def __repr__(self) -> str:
        return f"PropertyGraph(nodes={len(self._nodes)}, edges={len(self._edges)})"


def _check_id(element_id: str) -> None:
    if not isinstance(element_id, str) or not element_id:
        raise InvalidIdError("element ids must be non-empty text")


def _trimmed(labels: dict[str, set[str]]) -> dict[str, set[str]]:
    return {k: v for k, v in labels.items() if v}


def _typed_props(props: dict[str, dict[str, Value]]) -> dict:
    # Compare property values with kind tags so 1 != 1.0 != True.
    return {
        e: {k: (value_kind(v), v) for k, v in rec.items()}
        for e, rec in props.items()
        if rec
    }


def validate(g: PropertyGraph) -> list[Violation]:
    """Check every structural invariant; an empty report means valid."""
    report: list[Violation] = []
    overlap = set(g._nodes) & set(g._edges)
    for eid in sorted(overlap):
        report.append(Violation("id-overlap", eid, "id names both a node and an edge"))
    for eid in sorted(g._edges):
        src, tgt = g._edges[eid]
        if src not in g._nodes:
            report.append(Violation("dangling-src", eid, f"src {src!r} is not a node"))
        if tgt not in g._nodes:
            report.append(Violation("dangling-tgt", eid, f"tgt {tgt!r} is not a node"))
    elements = set(g._nodes) | set(g._edges)
    for eid in sorted(g._labels):
        if g._labels[eid] and eid not in elements:
            report.append(Violation("orphan-labels", eid, "labels on unknown element"))
    for eid in sorted(g._props):
        record = g._props[eid]
        if record and eid not in elements:
            report.append(Violation("orphan-props", eid, "properties on unknown element"))
        for key in sorted(record):
            try:
                value_kind(record[key])
            except TypeError:
                report.append(
                    Violation("bad-value", eid, f"property {key!r} has unsupported type")
                )
    for eid in sorted(elements):
        if not eid:
            report.append(Violation("empty-id", eid, "empty element id"))
    return report


def copy_graph(g: PropertyGraph) -> PropertyGraph:
    out = PropertyGraph()
    out._nodes = set(g._nodes)
    out._edges = dict(g._edges)
    out._labels = {k: set(v) for k, v in g._labels.items()}
    out._props = {k: dict(v) for k, v in g._props.items()}
    return out
