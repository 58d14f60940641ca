"""Circuit + rectangle-family JSON bundles.

    {"n": 6, "k": 3, "fanin": "binary" | "unbounded",
     "nodes": [{"id": 0, "op": "x", "edge": [0, 1]},
               {"id": 1, "op": "y", "oracle": 0},
               {"id": 2, "op": "and", "args": [0, 1]},
               {"id": 3, "op": "const", "value": 1}, ...],
     "output": 2,
     "family": {"n": 6, "k": 3, "rects": [{"U": <set expr>, "V": <set expr>}, ...]}}

``family`` may be replaced by ``"family_ref": "<path>"`` pointing at a
separate family file, resolved relative to the bundle.
"""

from __future__ import annotations

import heapq
import json
from pathlib import Path
from typing import Any

import jsonschema

from .circuits import BINARY, GATES, Circuit, Node
from .errors import ParameterError, SchemaError
from .rectangles import RectFamily
from .testsets import edge_endpoints, edge_index

_INT = {"type": "integer", "minimum": 0}

NODE_SCHEMA = {
    "type": "object",
    "required": ["id", "op"],
    "properties": {
        "id": _INT,
        "op": {"enum": ["x", "y", "and", "or", "const"]},
        "edge": {"type": "array", "items": _INT, "minItems": 2, "maxItems": 2},
        "oracle": _INT,
        "args": {"type": "array", "items": _INT},
        "value": {"enum": [0, 1]},
    },
    "allOf": [
        {"if": {"properties": {"op": {"const": "x"}}}, "then": {"required": ["edge"]}},
        {"if": {"properties": {"op": {"const": "y"}}}, "then": {"required": ["oracle"]}},
        {"if": {"properties": {"op": {"enum": ["and", "or"]}}}, "then": {"required": ["args"]}},
        {"if": {"properties": {"op": {"const": "const"}}}, "then": {"required": ["value"]}},
    ],
}

SET_EXPR_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"enum": ["all", "none", "explicit", "smallest_pair", "split_pair",
                                     "lex_first", "contains_clique", "not_edge_u", "not_edge_v",
                                     "union", "intersection", "complement"]}},
}

FAMILY_SCHEMA = {
    "type": "object",
    "required": ["rects"],
    "properties": {
        "n": _INT, "k": _INT,
        "rects": {"type": "array", "items": {
            "type": "object", "required": ["U", "V"],
            "properties": {"U": SET_EXPR_SCHEMA, "V": SET_EXPR_SCHEMA}}},
    },
}

BUNDLE_SCHEMA = {
    "type": "object",
    "required": ["n", "k", "nodes", "output"],
    "properties": {
        "n": {"type": "integer", "minimum": 2},
        "k": {"type": "integer", "minimum": 2},
        "fanin": {"enum": ["binary", "unbounded"]},
        "nodes": {"type": "array", "minItems": 1, "items": NODE_SCHEMA},
        "output": _INT,
        "family": FAMILY_SCHEMA,
        "family_ref": {"type": "string"},
    },
}


def _validate(obj: Any, schema: dict, what: str) -> None:
    try:
        jsonschema.validate(obj, schema)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"{what}: {exc.message}", exc.json_path) from None


def circuit_from_json(obj: dict) -> Circuit:
    n = obj["n"]
    nodes = obj["nodes"]
    pos: dict[int, int] = {}
    for t, nd in enumerate(nodes):
        if nd["id"] in pos:
            raise SchemaError(f"duplicate node id {nd['id']}", f"$.nodes[{t}].id")
        pos[nd["id"]] = t
    children: list[list[int]] = []
    for t, nd in enumerate(nodes):
        kids = []
        for a in nd.get("args", []) if nd["op"] in GATES else []:
            if a not in pos:
                raise SchemaError(f"dangling node id {a}", f"$.nodes[{t}].args")
            kids.append(pos[a])
        children.append(kids)
    if obj["output"] not in pos:
        raise SchemaError(f"dangling output id {obj['output']}", "$.output")

    # Kahn's algorithm, always taking the earliest listed ready node
    parents: list[list[int]] = [[] for _ in nodes]
    pending = [len(set(c)) for c in children]
    for t, kids in enumerate(children):
        for c in set(kids):
            parents[c].append(t)
    ready = [t for t, c in enumerate(pending) if c == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        t = heapq.heappop(ready)
        order.append(t)
        for p in parents[t]:
            pending[p] -= 1
            if pending[p] == 0:
                heapq.heappush(ready, p)
    if len(order) < len(nodes):
        stuck = sorted(nodes[t]["id"] for t in range(len(nodes)) if pending[t] > 0)
        raise SchemaError(f"cycle among node ids {stuck}", "$.nodes")

    new = {t: i for i, t in enumerate(order)}
    out = []
    for t in order:
        nd = nodes[t]
        op = nd["op"]
        path = f"$.nodes[{t}]"
        if op == "x":
            i, j = nd["edge"]
            if i == j or i >= n or j >= n:
                raise SchemaError(f"bad edge {nd['edge']} for n={n}", path + ".edge")
            out.append(Node("x", edge_index(i, j)))
        elif op == "y":
            out.append(Node("y", nd["oracle"]))
        elif op == "const":
            out.append(Node("const", nd["value"]))
        else:
            out.append(Node(op, tuple(new[c] for c in children[t])))
    try:
        return Circuit(n, tuple(out), new[pos[obj["output"]]], obj.get("fanin", BINARY))
    except ParameterError as exc:
        raise SchemaError(str(exc), "$.nodes") from None


def circuit_to_json(C: Circuit) -> dict:
    ends = edge_endpoints(C.n)
    nodes = []
    for idx, (op, arg) in enumerate(C.nodes):
        if op == "x":
            nodes.append({"id": idx, "op": "x", "edge": list(ends[arg])})
        elif op == "y":
            nodes.append({"id": idx, "op": "y", "oracle": arg})
        elif op == "const":
            nodes.append({"id": idx, "op": "const", "value": arg})
        else:
            nodes.append({"id": idx, "op": op, "args": list(arg)})
    return {"fanin": C.fanin, "nodes": nodes, "output": C.output}


def emit_bundle(C: Circuit, W: RectFamily, n: int, k: int) -> dict:
    return {"n": n, "k": k, **circuit_to_json(C), "family": W.to_json(n, k)}


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def load_bundle(obj: dict, base: Path | None = None) -> tuple[Circuit, RectFamily, int, int]:
    _validate(obj, BUNDLE_SCHEMA, "bundle")
    n, k = obj["n"], obj["k"]
    C = circuit_from_json(obj)
    if "family" in obj:
        fam_obj, fam_path = obj["family"], "$.family"
    elif "family_ref" in obj:
        ref = Path(obj["family_ref"])
        if base is not None and not ref.is_absolute():
            ref = base / ref
        try:
            fam_obj = json.loads(ref.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read family file {ref}: {exc}", "$.family_ref") from None
        _validate(fam_obj, FAMILY_SCHEMA, "family")
        fam_path = "$"
    else:
        fam_obj, fam_path = {"rects": []}, "$.family"
    W = RectFamily.from_json(fam_obj, fam_path)
    if ("n" in fam_obj and fam_obj["n"] != n) or ("k" in fam_obj and fam_obj["k"] != k):
        raise SchemaError("family (n, k) differs from the circuit's", fam_path)
    missing = sorted({nd.arg for nd in C.nodes if nd.op == "y" and nd.arg >= len(W)})
    if missing:
        raise SchemaError(f"oracle leaves {missing} reference missing rectangles "
                          f"(family has {len(W)})", "$.nodes")
    return C, W, n, k


def parse_circuit_bundle(path) -> tuple[Circuit, RectFamily, int, int]:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return load_bundle(obj, path.parent)
