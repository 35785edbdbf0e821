"""
JSON circuit files.

Every complex number is a two-element ``[re, im]`` array, including real
tables, so one schema covers all families. Output uses sorted keys and
Python's shortest round-trip float repr, so writing is byte-deterministic.
"""

from __future__ import annotations

import json
from typing import Any, Iterable, Union

import numpy as np

from punc import api
from punc.d_punc import (
    DPunc,
    DProbCircuit,
    LeafUnit,
    ProductUnit,
    ScalarLeafUnit,
    ScalarSumUnit,
    SumUnit,
)
from punc.errors import ParseError, PuncError, require_valid
from punc.families import NoisePunc, ProbCircuitPT, PsdCircuit
from punc.partition import COMBINE_MODES, PartitionCircuit, PartitionNode
from punc.quantum import DensityMatrix, Povm, QuantumOperation
from punc.sd_punc import SdPunc

FORMAT_VERSION = 1
FAMILY_TAGS = {
    SdPunc: "sd_punc",
    PsdCircuit: "psd_circuit",
    ProbCircuitPT: "prob_circuit_pt",
    DPunc: "d_punc",
    DProbCircuit: "d_prob_circuit",
    NoisePunc: "noise_punc",
}

Circuit = Union[SdPunc, PsdCircuit, ProbCircuitPT, DPunc, DProbCircuit, NoisePunc]


def family_of(c: Circuit) -> str:
    try:
        return FAMILY_TAGS[type(c)]
    except KeyError:
        raise PuncError(f"{type(c).__name__} is not a circuit family") from None


# --------------------------------------------------------------------------- writing


def _pairs(a) -> Any:
    a = np.asarray(a)
    if a.ndim == 0:
        z = complex(a)
        return [float(z.real), float(z.imag)]
    return [_pairs(v) for v in a]


def _tree_nodes(tree: PartitionCircuit, extra) -> list[dict]:
    out = []
    for n in tree.nodes:
        d = {"id": n.id, "kind": n.kind}
        if n.is_leaf:
            d["variable"] = n.variable
        else:
            d.update(left=n.left, right=n.right, combine_mode=n.combine_mode)
        d.update(extra(n))
        out.append(d)
    return out


def _sd_body(c: SdPunc) -> dict:
    def extra(n):
        if n.is_leaf:
            return {"povm": [_pairs(e) for e in c.leaf_povms[n.id].elements]}
        return {"kraus": [_pairs(k) for k in c.internal_ops[n.id].kraus]}

    return {"nodes": _tree_nodes(c.tree, extra), "root": c.tree.root, "rho": _pairs(c.rho.mat)}


def _pc_body(c: ProbCircuitPT) -> dict:
    def extra(n):
        if n.is_leaf:
            return {"table": _pairs(c.leaf_tables[n.id])}
        return {"weights": _pairs(c.internal_weights[n.id])}

    return {"nodes": _tree_nodes(c.tree, extra), "root": c.tree.root}


def _body(c: Circuit) -> dict:
    if isinstance(c, SdPunc):
        return _sd_body(c)
    if isinstance(c, ProbCircuitPT):
        return _pc_body(c)
    if isinstance(c, PsdCircuit):
        return {
            "nodes": _tree_nodes(c.tree, lambda n: {"u": _pairs(c.unitaries[n.id])}),
            "root": c.tree.root,
            "rho": _pairs(c.rho.mat),
        }
    if isinstance(c, NoisePunc):
        return {"q": _pc_body(c.q), "o": _sd_body(c.o)}
    units = []
    for k in sorted(c.units):
        u = c.units[k]
        if isinstance(u, LeafUnit):
            units.append({"id": k, "kind": "leaf", "variable": u.variable,
                          "povm": [_pairs(e) for e in u.povm.elements]})
        elif isinstance(u, ScalarLeafUnit):
            units.append({"id": k, "kind": "leaf", "variable": u.variable, "table": _pairs(u.table)})
        elif isinstance(u, ProductUnit):
            units.append({"id": k, "kind": "product", "inputs": list(u.inputs)})
        else:
            d = {"id": k, "kind": "sum", "inputs": list(u.inputs), "weights": [float(w) for w in u.weights]}
            if isinstance(u, SumUnit):
                d["kraus"] = [[_pairs(kr) for kr in op.kraus] for op in u.ops]
            units.append(d)
    body = {"units": units, "root": c.root}
    if isinstance(c, DPunc):
        body["rho"] = _pairs(c.rho.mat)
    return body


def to_dict(c: Circuit) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "family": family_of(c),
        "variables": [{"index": i, "cardinality": k} for i, k in enumerate(api.cardinalities(c))],
        **_body(c),
    }


def write(c: Circuit) -> bytes:
    return (json.dumps(to_dict(c), sort_keys=True, indent=1, allow_nan=False) + "\n").encode()


# --------------------------------------------------------------------------- parsing


def _fields(obj: Any, loc: str, required: Iterable[str], optional: Iterable[str] = (), strict: bool = True) -> dict:
    if not isinstance(obj, dict):
        raise ParseError("expected an object", loc)
    required = tuple(required)
    missing = [k for k in required if k not in obj]
    if missing:
        raise ParseError(f"missing fields {missing}", loc)
    if strict:
        unknown = sorted(set(obj) - set(required) - set(optional))
        if unknown:
            raise ParseError(f"unknown fields {unknown}", loc)
    return obj


def _int(v: Any, loc: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError("expected an integer", loc)
    return v


def _list(v: Any, loc: str) -> list:
    if not isinstance(v, list):
        raise ParseError("expected an array", loc)
    return v


def _complex_array(v: Any, loc: str, ndim: int) -> np.ndarray:
    try:
        a = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("expected a rectangular array of [re, im] pairs", loc) from None
    if a.ndim != ndim + 1 or a.shape[-1] != 2 or 0 in a.shape:
        raise ParseError(f"expected a {ndim}-d array of [re, im] pairs, got shape {a.shape}", loc)
    if not np.all(np.isfinite(a)):
        raise ParseError("non-finite number", loc)
    return a[..., 0] + 1j * a[..., 1]


def _matrix(v: Any, loc: str) -> np.ndarray:
    return _complex_array(v, loc, 2)


def _real(v: Any, loc: str, ndim: int) -> np.ndarray:
    a = _complex_array(v, loc, ndim)
    if np.any(a.imag != 0):
        raise ParseError("expected real values (imaginary parts must be 0)", loc)
    return a.real.copy()


def _floats(v: Any, loc: str) -> tuple[float, ...]:
    items = _list(v, loc)
    if not all(isinstance(w, (int, float)) and not isinstance(w, bool) for w in items):
        raise ParseError("expected an array of numbers", loc)
    return tuple(float(w) for w in items)


def _tree(nodes: Any, root: Any, cards: tuple[int, ...], loc: str, leaf_extra, internal_extra, strict: bool):
    nodes = _list(nodes, f"{loc}.nodes")
    built, leaf_params, internal_params = [], {}, {}
    for i, raw in enumerate(nodes):
        where = f"{loc}.nodes[{i}]"
        kind = raw.get("kind") if isinstance(raw, dict) else None
        if kind == "leaf":
            d = _fields(raw, where, ("id", "kind", "variable", *leaf_extra), strict=strict)
            var = _int(d["variable"], f"{where}.variable")
            if not 0 <= var < len(cards):
                raise ParseError(f"unknown variable {var}", f"{where}.variable")
            node = PartitionNode(_int(d["id"], f"{where}.id"), "leaf", variable=var, cardinality=cards[var])
            leaf_params[node.id] = d
        elif kind == "internal":
            d = _fields(raw, where, ("id", "kind", "left", "right", "combine_mode", *internal_extra), strict=strict)
            if d["combine_mode"] not in COMBINE_MODES:
                raise ParseError(f"unknown combine mode {d['combine_mode']!r}", f"{where}.combine_mode")
            node = PartitionNode(
                _int(d["id"], f"{where}.id"), "internal",
                left=_int(d["left"], f"{where}.left"), right=_int(d["right"], f"{where}.right"),
                combine_mode=d["combine_mode"],
            )
            internal_params[node.id] = d
        else:
            raise ParseError(f"unknown node kind {kind!r}", f"{where}.kind")
        built.append(node)
    try:
        tree = PartitionCircuit(tuple(built), _int(root, f"{loc}.root"), cards)
    except PuncError as exc:
        raise ParseError(str(exc), f"{loc}.nodes") from None
    return tree, leaf_params, internal_params


def _wrap(loc: str, fn, *args):
    """Turn constructor errors (bad shapes etc.) into located parse errors."""
    try:
        return fn(*args)
    except ParseError:
        raise
    except PuncError as exc:
        raise ParseError(str(exc), loc) from None


def _parse_sd(d: dict, cards, loc: str, strict: bool) -> SdPunc:
    tree, leaves, internal = _tree(d["nodes"], d["root"], cards, loc, ("povm",), ("kraus",), strict)
    povms = {
        k: _wrap(f"{loc}.nodes[{k}].povm", lambda v, w: Povm(tuple(_matrix(e, f"{w}[{j}]") for j, e in enumerate(_list(v, w)))), p["povm"], f"{loc}.nodes[{k}].povm")
        for k, p in leaves.items()
    }
    ops = {
        k: _wrap(f"{loc}.nodes[{k}].kraus", lambda v, w: QuantumOperation(tuple(_matrix(e, f"{w}[{j}]") for j, e in enumerate(_list(v, w)))), p["kraus"], f"{loc}.nodes[{k}].kraus")
        for k, p in internal.items()
    }
    rho = _wrap(f"{loc}.rho", lambda: DensityMatrix(_matrix(d["rho"], f"{loc}.rho")))
    return SdPunc(tree, povms, ops, rho)


def _parse_pc(d: dict, cards, loc: str, strict: bool) -> ProbCircuitPT:
    tree, leaves, internal = _tree(d["nodes"], d["root"], cards, loc, ("table",), ("weights",), strict)
    tables = {k: _real(p["table"], f"{loc}.nodes[{k}].table", 2) for k, p in leaves.items()}
    weights = {k: _real(p["weights"], f"{loc}.nodes[{k}].weights", 2) for k, p in internal.items()}
    return ProbCircuitPT(tree, tables, weights)


def _parse_psd(d: dict, cards, loc: str, strict: bool) -> PsdCircuit:
    tree, leaves, internal = _tree(d["nodes"], d["root"], cards, loc, ("u",), ("u",), strict)
    mats = {k: _matrix(p["u"], f"{loc}.nodes[{k}].u") for k, p in {**leaves, **internal}.items()}
    rho = _wrap(f"{loc}.rho", lambda: DensityMatrix(_matrix(d["rho"], f"{loc}.rho")))
    return PsdCircuit(tree, mats, rho)


def _parse_dag(d: dict, cards, loc: str, strict: bool, scalar: bool):
    units = {}
    for i, raw in enumerate(_list(d["units"], f"{loc}.units")):
        where = f"{loc}.units[{i}]"
        kind = raw.get("kind") if isinstance(raw, dict) else None
        if kind == "leaf":
            f = _fields(raw, where, ("id", "kind", "variable", "table" if scalar else "povm"), strict=strict)
            k = _int(f["id"], f"{where}.id")
            var = _int(f["variable"], f"{where}.variable")
            if scalar:
                unit = ScalarLeafUnit(k, var, _real(f["table"], f"{where}.table", 1))
            else:
                elems = tuple(_matrix(e, f"{where}.povm[{j}]") for j, e in enumerate(_list(f["povm"], f"{where}.povm")))
                unit = LeafUnit(k, var, _wrap(f"{where}.povm", Povm, elems))
        elif kind == "product":
            f = _fields(raw, where, ("id", "kind", "inputs"), strict=strict)
            k = _int(f["id"], f"{where}.id")
            unit = ProductUnit(k, tuple(_int(v, f"{where}.inputs") for v in _list(f["inputs"], f"{where}.inputs")))
        elif kind == "sum":
            f = _fields(raw, where, ("id", "kind", "inputs", "weights", *(() if scalar else ("kraus",))), strict=strict)
            k = _int(f["id"], f"{where}.id")
            inputs = tuple(_int(v, f"{where}.inputs") for v in _list(f["inputs"], f"{where}.inputs"))
            weights = _floats(f["weights"], f"{where}.weights")
            if scalar:
                unit = ScalarSumUnit(k, inputs, weights)
            else:
                ops = []
                for j, ks in enumerate(_list(f["kraus"], f"{where}.kraus")):
                    mats = tuple(_matrix(m, f"{where}.kraus[{j}][{t}]") for t, m in enumerate(_list(ks, f"{where}.kraus[{j}]")))
                    ops.append(_wrap(f"{where}.kraus[{j}]", QuantumOperation, mats))
                unit = SumUnit(k, inputs, weights, tuple(ops))
        else:
            raise ParseError(f"unknown unit kind {kind!r}", f"{where}.kind")
        if k in units:
            raise ParseError(f"duplicate unit id {k}", f"{where}.id")
        units[k] = unit
    root = _int(d["root"], f"{loc}.root")
    if scalar:
        return DProbCircuit(units, root, cards)
    rho = _wrap(f"{loc}.rho", lambda: DensityMatrix(_matrix(d["rho"], f"{loc}.rho")))
    return DPunc(units, root, rho, cards)


_BODY_FIELDS = {
    "sd_punc": ("nodes", "root", "rho"),
    "psd_circuit": ("nodes", "root", "rho"),
    "prob_circuit_pt": ("nodes", "root"),
    "d_punc": ("units", "root", "rho"),
    "d_prob_circuit": ("units", "root"),
    "noise_punc": ("q", "o"),
}


def from_dict(d: Any, strict: bool = True) -> Circuit:
    header = ("format_version", "family", "variables")
    if not isinstance(d, dict):
        raise ParseError("expected a JSON object", "$")
    if d.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {d.get('format_version')!r}", "$.format_version")
    family = d.get("family")
    if family not in _BODY_FIELDS:
        raise ParseError(f"unknown family {family!r}", "$.family")
    _fields(d, "$", header + _BODY_FIELDS[family], strict=strict)
    cards = []
    for i, v in enumerate(_list(d["variables"], "$.variables")):
        v = _fields(v, f"$.variables[{i}]", ("index", "cardinality"), strict=strict)
        if _int(v["index"], f"$.variables[{i}].index") != i:
            raise ParseError("variables must be listed in index order", f"$.variables[{i}].index")
        k = _int(v["cardinality"], f"$.variables[{i}].cardinality")
        if k < 1:
            raise ParseError("cardinality must be positive", f"$.variables[{i}].cardinality")
        cards.append(k)
    cards = tuple(cards)
    if family == "sd_punc":
        return _parse_sd(d, cards, "$", strict)
    if family == "psd_circuit":
        return _parse_psd(d, cards, "$", strict)
    if family == "prob_circuit_pt":
        return _parse_pc(d, cards, "$", strict)
    if family == "noise_punc":
        q = _fields(d["q"], "$.q", _BODY_FIELDS["prob_circuit_pt"], strict=strict)
        o = _fields(d["o"], "$.o", _BODY_FIELDS["sd_punc"], strict=strict)
        return NoisePunc(_parse_pc(q, cards, "$.q", strict), _parse_sd(o, cards, "$.o", strict))
    return _parse_dag(d, cards, "$", strict, scalar=family == "d_prob_circuit")


def parse(data: Union[bytes, str], strict: bool = True, validate: bool = True) -> Circuit:
    """
    Parse a circuit file.

    Raises
    ------
    ParseError
        On malformed JSON, an unsupported version or schema violations; the
        message starts with a JSON-path-like location.
    InvalidCircuitError
        If ``validate`` and the circuit breaks one of its family's invariants.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8: {exc}", "$") from None
    if not data.strip():
        raise ParseError("empty file", "$")
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"syntax error: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    c = from_dict(raw, strict)
    if validate:
        require_valid(api.validate(c), family_of(c))
    return c


def read_file(path: str, strict: bool = True, validate: bool = True) -> Circuit:
    with open(path, "rb") as fh:
        return parse(fh.read(), strict, validate)


def write_file(c: Circuit, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(write(c))
