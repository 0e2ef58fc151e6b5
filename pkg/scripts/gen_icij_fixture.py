#!/usr/bin/env python3
"""Build the miniature offshore-registry fixture graph.

The graph is laid out by hand so that every branch of the address rules
fires, the name-similarity rule sees chains, cycles, zero-iteration
bridges, a self-similar address, and several near misses, and the
jurisdiction rule hits both a missing-description and a
missing-jurisdiction entity. Node counts stay small enough that the
brute-force closure oracle in the test suite finishes instantly.
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from pgtransform.graph import PropertyGraph
from pgtransform.io import save_graph

OFFICERS = [
    # same lowercase name, bridged through a1 -> a2
    ("o1", "John Doe"),
    ("o2", "JOHN DOE"),
    ("o3", "john DOE"),
    # two-officer similarity cycle, bridged through a7 -> a9
    ("o4", "Mary Major"),
    ("o5", "MARY MAJOR"),
    # registered at both ends of a3 -> a8, pairs with itself
    ("o6", "Ana Ruiz"),
    # chain o7 -> o16 -> o8 feeding the a5 -> a6 bridge
    ("o7", "Chen Wei"),
    ("o8", "CHEN WEI"),
    ("o9", "chen wei"),
    # bridged but the names differ
    ("o10", "Priya Nair"),
    ("o11", "Priya Nayar"),
    # bridged but nameless
    ("o12", None),
    # bridged but the name is not text
    ("o13", 42),
    # share the self-similar address a4
    ("o14", "Omar Haddad"),
    ("o15", "OMAR HADDAD"),
    # chain interior with a non-matching name
    ("o16", "Lena Fischer"),
    # matching names, registered at an address with no similarity edge
    ("o17", "Tomas Oliveira"),
    ("o18", "tomas oliveira"),
]

# id, sourceID, address, country_code, country_codes, country
ADDRESSES = [
    ("a1", "Malta registry", "1 Harbour Rd, Valletta", "MLT", None, "Malta"),
    ("a2", "Malta registry", "2 Harbour Rd, Valletta", "MLT", None, "Malta"),
    ("a3", "Malta registry", None, None, None, None),
    ("a4", "Panama Papers", "Calle 50, Panama City", None, "PAN", "Panama"),
    ("a5", "Paradise Papers", None, None, None, None),
    ("a6", "Panama Papers", "Bay St, Nassau", None, "BHS", "Bahamas"),
    ("a7", "Malta registry", "3 Republic St, Valletta", "MLT", None, "Malta"),
    ("a8", "Paradise Papers", "Via Roma 9, Panama City", None, "PAN", "Panama"),
    ("a9", "Panama Papers", None, None, None, None),
    ("a10", "Malta registry", None, None, None, None),
]

# id, jurisdiction, jurisdiction_desc
ENTITIES = [
    ("e1", "MLT", "Malta"),
    ("e2", "PAN", "Panama"),
    ("e3", "BHS", None),
    ("e4", "PAN", "Panama"),
    ("e5", "VGB", "British Virgin Islands"),
    ("e6", None, "Malta"),
]

INTERMEDIARIES = [
    ("i1", "Fonseca Ltd"),
    ("i2", "Harbour Trust"),
    ("i3", "Nominee Services SA"),
    ("i4", "Island Agents"),
]

SIMILAR_OFFICERS = [
    ("os1", "o1", "o2"),
    ("os2", "o2", "o3"),
    ("os3", "o4", "o5"),
    ("os4", "o5", "o4"),
    ("os5", "o7", "o16"),
    ("os6", "o16", "o8"),
    ("os7", "o8", "o9"),
    ("os8", "o3", "o10"),
]

SIMILAR_ADDRESSES = [
    ("as1", "a1", "a2"),
    ("as2", "a4", "a4"),
    ("as3", "a5", "a6"),
    ("as4", "a7", "a9"),
    ("as5", "a3", "a8"),
]

REGISTERED_AT = [
    ("ra1", "o1", "a1"),
    ("ra2", "o2", "a2"),
    ("ra3", "o3", "a2"),
    ("ra4", "o4", "a9"),
    ("ra5", "o5", "a7"),
    ("ra6", "o6", "a3"),
    ("ra7", "o6", "a8"),
    ("ra8", "o8", "a5"),
    ("ra9", "o9", "a6"),
    ("ra10", "o10", "a3"),
    ("ra11", "o11", "a8"),
    ("ra12", "o12", "a3"),
    ("ra13", "o13", "a3"),
    ("ra14", "o14", "a4"),
    ("ra15", "o15", "a4"),
    ("ra16", "o17", "a10"),
    ("ra17", "o18", "a10"),
]

INTERMEDIARY_OF = [
    ("io1", "i1", "e1"),
    ("io2", "i2", "e2"),
    ("io3", "i3", "e4"),
    ("io4", "i4", "e5"),
]

SAME_AS = [
    ("sa1", "i1", "o1"),
    ("sa2", "i2", "o4"),
    ("sa3", "e2", "e4"),
]


def build() -> PropertyGraph:
    g = PropertyGraph()
    for nid, name in OFFICERS:
        g.add_node(nid)
        g.add_labels(nid, ["Officer"])
        if name is not None:
            g.set_property(nid, "name", name)
    for nid, source, addr, code, codes, country in ADDRESSES:
        g.add_node(nid)
        g.add_labels(nid, ["Address"])
        g.set_property(nid, "sourceID", source)
        for key, val in (
            ("address", addr),
            ("country_code", code),
            ("country_codes", codes),
            ("country", country),
        ):
            if val is not None:
                g.set_property(nid, key, val)
    for nid, juris, desc in ENTITIES:
        g.add_node(nid)
        g.add_labels(nid, ["Entity"])
        if juris is not None:
            g.set_property(nid, "jurisdiction", juris)
        if desc is not None:
            g.set_property(nid, "jurisdiction_desc", desc)
    for nid, name in INTERMEDIARIES:
        g.add_node(nid)
        g.add_labels(nid, ["Intermediary"])
        g.set_property(nid, "name", name)

    for eid, label, triples in (
        ("similar", "similar", SIMILAR_OFFICERS + SIMILAR_ADDRESSES),
        ("registered_address", "registered_address", REGISTERED_AT),
        ("intermediary_of", "intermediary_of", INTERMEDIARY_OF),
        ("same_as", "same_as", SAME_AS),
    ):
        del eid
        for edge_id, src, tgt in triples:
            g.add_edge(edge_id, src, tgt)
            g.add_labels(edge_id, [label])
    return g


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    default_out = (
        pathlib.Path(__file__).resolve().parents[1]
        / "tests"
        / "fixtures"
        / "offshore_mini.json"
    )
    ap.add_argument("--out", type=pathlib.Path, default=default_out)
    args = ap.parse_args()

    g = build()
    save_graph(g, args.out)
    print(f"{args.out}: {g.node_count} nodes, {g.edge_count} edges")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
