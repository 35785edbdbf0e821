"""
Decomposable positive unital circuits on DAGs.

Units are leaves (a POVM over one variable), binary products (Kronecker
combination of disjoint-scope inputs) and sums (``sum_j w_j Phi_j(o_j)`` over
same-scope inputs, one unital operation per edge). Units may be shared by
several parents.
"""

from __future__ import annotations

import graphlib
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt

from punc.errors import InvalidCircuitError, StructureError, Violation
from punc.families import rewrite_hadamard
from punc.linalg import DEFAULT_TOL, Matrix, identity, max_abs
from punc.partition import AssignmentLike, MarginalQuery, normalize_assignment
from punc.quantum import (
    DensityMatrix,
    Povm,
    QuantumOperation,
    apply_operation,
    compose_convex,
    trace_probability,
    unitality_residual,
    validate_density,
    validate_povm,
)
from punc.sd_punc import SdPunc


@dataclass(frozen=True, eq=False)
class LeafUnit:
    id: int
    variable: int
    povm: Povm


@dataclass(frozen=True)
class ProductUnit:
    id: int
    inputs: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class SumUnit:
    id: int
    inputs: tuple[int, ...]
    weights: tuple[float, ...]
    ops: tuple[QuantumOperation, ...]


Unit = Union[LeafUnit, ProductUnit, SumUnit]


@dataclass(frozen=True, eq=False)
class DPunc:
    units: Mapping[int, Unit]
    root: int
    rho: DensityMatrix
    cardinalities: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class ScalarLeafUnit:
    """Leaf of a scalar circuit; ``table[x]`` is ``f(x)``."""

    id: int
    variable: int
    table: npt.NDArray[np.float64]


@dataclass(frozen=True)
class ScalarSumUnit:
    id: int
    inputs: tuple[int, ...]
    weights: tuple[float, ...]


ScalarUnit = Union[ScalarLeafUnit, ProductUnit, ScalarSumUnit]


@dataclass(frozen=True, eq=False)
class DProbCircuit:
    units: Mapping[int, ScalarUnit]
    root: int
    cardinalities: tuple[int, ...]


AnyDag = Union[DPunc, DProbCircuit]


def _inputs(u) -> tuple[int, ...]:
    return getattr(u, "inputs", ())


def _is_leaf(u) -> bool:
    return isinstance(u, (LeafUnit, ScalarLeafUnit))


def topological_order(c: AnyDag) -> list[int]:
    """Units reachable from the root, inputs before their parents."""
    if c.root not in c.units:
        raise StructureError(f"root {c.root} is not a unit")
    graph: dict[int, tuple[int, ...]] = {}
    stack = [c.root]
    while stack:
        k = stack.pop()
        if k in graph:
            continue
        if k not in c.units:
            raise StructureError(f"unit {k} is referenced but not defined")
        graph[k] = _inputs(c.units[k])
        stack.extend(graph[k])
    try:
        return list(graphlib.TopologicalSorter(graph).static_order())
    except graphlib.CycleError as exc:
        raise StructureError(f"cycle through units {exc.args[1]}") from exc


def compute_scopes(c: AnyDag) -> dict[int, frozenset[int]]:
    """Leaf: its variable; product: union of inputs; sum: scope of its first input."""
    scopes: dict[int, frozenset[int]] = {}
    for k in topological_order(c):
        u = c.units[k]
        if _is_leaf(u):
            scopes[k] = frozenset({u.variable})
        elif isinstance(u, ProductUnit):
            scopes[k] = frozenset().union(*(scopes[i] for i in u.inputs))
        else:
            scopes[k] = scopes[u.inputs[0]] if u.inputs else frozenset()
    return scopes


def _structure_violations(c: AnyDag, tol: float) -> tuple[list[Violation], Optional[dict[int, frozenset[int]]]]:
    violations: list[Violation] = []
    for k, u in c.units.items():
        if u.id != k:
            violations.append(Violation("unit-id", f"unit {k}", message=f"stored under {k} but has id {u.id}"))
    try:
        scopes = compute_scopes(c)
    except StructureError as exc:
        return [*violations, Violation("structure", "dag", message=str(exc))], None
    n = len(c.cardinalities)
    for k in topological_order(c):
        u = c.units[k]
        where = f"unit {k}"
        if _is_leaf(u):
            if not 0 <= u.variable < n:
                violations.append(Violation("leaf-variable", where, message=f"variable {u.variable}"))
        elif isinstance(u, ProductUnit):
            if len(u.inputs) != 2:
                violations.append(Violation("product-arity", where, message=f"{len(u.inputs)} inputs"))
            elif scopes[u.inputs[0]] & scopes[u.inputs[1]]:
                overlap = sorted(scopes[u.inputs[0]] & scopes[u.inputs[1]])
                violations.append(Violation("not-decomposable", where, message=f"inputs share variables {overlap}"))
        else:
            if not u.inputs:
                violations.append(Violation("sum-arity", where, message="no inputs"))
                continue
            if len(u.weights) != len(u.inputs):
                violations.append(Violation("weight-count", where, message=f"{len(u.weights)} weights for {len(u.inputs)} inputs"))
            w = np.asarray(u.weights, dtype=float)
            if np.any(w < -tol) or abs(w.sum() - 1.0) > tol:
                violations.append(Violation("weights", where, abs(float(w.sum()) - 1.0), f"weights {w.tolist()}"))
            if any(scopes[i] != scopes[u.inputs[0]] for i in u.inputs):
                violations.append(Violation("not-smooth", where, message="inputs have different scopes"))
    if scopes.get(c.root) != frozenset(range(n)):
        violations.append(Violation("root-scope", f"unit {c.root}", message=f"root scope {sorted(scopes.get(c.root, ()))}"))
    return violations, scopes


def validate(c: DPunc, tol: float = DEFAULT_TOL) -> list[Violation]:
    violations, scopes = _structure_violations(c, tol)
    if scopes is None:
        return violations
    dims: dict[int, int] = {}
    for k in topological_order(c):
        u = c.units[k]
        where = f"unit {k}"
        if isinstance(u, LeafUnit):
            dims[k] = u.povm.dim
            if 0 <= u.variable < len(c.cardinalities) and u.povm.outcomes != c.cardinalities[u.variable]:
                violations.append(Violation("povm-outcomes", where, message=f"{u.povm.outcomes} elements"))
            violations += validate_povm(u.povm, tol, where)
        elif isinstance(u, ProductUnit):
            dims[k] = int(np.prod([dims.get(i, 0) for i in u.inputs]))
        else:
            if len(u.ops) != len(u.inputs):
                violations.append(Violation("operation-count", where, message=f"{len(u.ops)} operations for {len(u.inputs)} inputs"))
                continue
            outs = {op.out_dim for op in u.ops}
            if len(outs) != 1:
                violations.append(Violation("dimension", where, message=f"edge operations emit dims {sorted(outs)}"))
                continue
            dims[k] = outs.pop()
            for i, op in zip(u.inputs, u.ops):
                if op.in_dim != dims.get(i):
                    violations.append(Violation("dimension", f"{where} edge {i}", message=f"operation input {op.in_dim}, unit emits {dims.get(i)}"))
                    continue
                residual = unitality_residual(op)
                if residual > tol:
                    violations.append(Violation("non-unital", f"{where} edge {i}", residual))
    root_dim = dims.get(c.root)
    if root_dim != c.rho.dim:
        violations.append(Violation("dimension", "rho", message=f"rho is {c.rho.dim}, root emits {root_dim}"))
    else:
        violations += validate_density(c.rho, tol)
    return violations


def validate_dprob(c: DProbCircuit, tol: float = DEFAULT_TOL) -> list[Violation]:
    violations, scopes = _structure_violations(c, tol)
    if scopes is None:
        return violations
    for k in topological_order(c):
        u = c.units[k]
        if isinstance(u, ScalarLeafUnit):
            t = np.asarray(u.table, dtype=float)
            where = f"unit {k}"
            if 0 <= u.variable < len(c.cardinalities) and t.shape != (c.cardinalities[u.variable],):
                violations.append(Violation("dimension", where, message=f"table shape {t.shape}"))
            if np.any(t < -tol) or abs(t.sum() - 1.0) > tol:
                violations.append(Violation("leaf-normalization", where, abs(float(t.sum()) - 1.0)))
    return violations


def is_structured_decomposable(c: AnyDag, tol: float = DEFAULT_TOL) -> bool:
    """Every pair of products with equal scope splits it into the same unordered pair of child scopes."""
    check = validate if isinstance(c, DPunc) else validate_dprob
    violations = check(c, tol)
    if violations:
        raise InvalidCircuitError(violations, "circuit")
    scopes = compute_scopes(c)
    splits: dict[frozenset[int], frozenset[frozenset[int]]] = {}
    for k in topological_order(c):
        u = c.units[k]
        if not isinstance(u, ProductUnit):
            continue
        split = frozenset(scopes[i] for i in u.inputs)
        if splits.setdefault(scopes[k], split) != split:
            return False
    return True


# --------------------------------------------------------------------------- evaluation


def _unit_value(c: DPunc, u: Unit, values: Mapping[int, Matrix], leaf_value: Callable[[LeafUnit], Matrix]) -> Matrix:
    if isinstance(u, LeafUnit):
        return leaf_value(u)
    if isinstance(u, ProductUnit):
        a, b = (values[i] for i in u.inputs)
        return np.kron(a, b)
    out = 0
    for i, w, op in zip(u.inputs, u.weights, u.ops):
        out = out + w * apply_operation(op, values[i])
    return out


def forward(c: DPunc, leaf_value: Callable[[LeafUnit], Matrix]) -> dict[int, Matrix]:
    """Every reachable unit evaluated exactly once."""
    values: dict[int, Matrix] = {}
    for k in topological_order(c):
        values[k] = _unit_value(c, c.units[k], values, leaf_value)
    return values


def evaluate(c: DPunc, x: AssignmentLike) -> Matrix:
    vals = normalize_assignment(x, c.cardinalities)
    return forward(c, lambda u: u.povm.elements[vals[u.variable]])[c.root]


def probability(c: DPunc, x: AssignmentLike, tol: float = DEFAULT_TOL) -> float:
    return trace_probability(c.rho.mat, evaluate(c, x), tol)


def marginal(c: DPunc, q: MarginalQuery, tol: float = DEFAULT_TOL) -> float:
    q.check(c.cardinalities)

    def leaf(u: LeafUnit) -> Matrix:
        if u.variable in q.marginalized:
            return identity(u.povm.dim)
        return u.povm.elements[q.evidence[u.variable]]

    return trace_probability(c.rho.mat, forward(c, leaf)[c.root], tol)


def sum_unit_operation(u: SumUnit, tol: float = DEFAULT_TOL) -> QuantumOperation:
    """The convex combination of a sum unit's edge operations, when all inputs are the same unit."""
    if len(set(u.inputs)) != 1:
        raise StructureError(f"sum unit {u.id} has distinct inputs; no single operation exists")
    return compose_convex(u.weights, u.ops, tol)


# --------------------------------------------------------------------------- scalar circuits


def _scalar_forward(c: DProbCircuit, leaf_value: Callable[[ScalarLeafUnit], float]) -> dict[int, float]:
    values: dict[int, float] = {}
    for k in topological_order(c):
        u = c.units[k]
        if isinstance(u, ScalarLeafUnit):
            values[k] = leaf_value(u)
        elif isinstance(u, ProductUnit):
            values[k] = float(np.prod([values[i] for i in u.inputs]))
        else:
            values[k] = float(sum(w * values[i] for i, w in zip(u.inputs, u.weights)))
    return values


def eval_dprob_circuit(c: DProbCircuit, x: AssignmentLike) -> float:
    vals = normalize_assignment(x, c.cardinalities)
    return _scalar_forward(c, lambda u: float(u.table[vals[u.variable]]))[c.root]


def dprob_marginal(c: DProbCircuit, q: MarginalQuery) -> float:
    q.check(c.cardinalities)

    def leaf(u: ScalarLeafUnit) -> float:
        if u.variable in q.marginalized:
            return float(np.sum(u.table))
        return float(u.table[q.evidence[u.variable]])

    return _scalar_forward(c, leaf)[c.root]


# --------------------------------------------------------------------------- conversions


def embed_sd(c: SdPunc) -> DPunc:
    """
    Copy a tree circuit into a DAG: each internal node becomes a product unit
    feeding a single-input sum unit of weight 1 that carries the node's
    operation. Hadamard nodes are rewritten to Kronecker form first.
    """
    c = rewrite_hadamard(c)
    units: dict[int, Unit] = {}
    unit_of: dict[int, int] = {}
    for n in c.tree.nodes:
        if n.is_leaf:
            k = len(units)
            units[k] = LeafUnit(k, n.variable, c.leaf_povms[n.id])
        else:
            p = len(units)
            units[p] = ProductUnit(p, (unit_of[n.left], unit_of[n.right]))
            k = p + 1
            units[k] = SumUnit(k, (p,), (1.0,), (c.internal_ops[n.id],))
        unit_of[n.id] = k
    return DPunc(units, unit_of[c.tree.root], c.rho, c.cardinalities)


def scalar_shadow(c: DPunc, tol: float = DEFAULT_TOL) -> DProbCircuit:
    """The scalar circuit behind a circuit whose operators are all 1x1."""
    units: dict[int, ScalarUnit] = {}
    for k in topological_order(c):
        u = c.units[k]
        if isinstance(u, LeafUnit):
            if u.povm.dim != 1:
                raise StructureError(f"leaf {k} has dimension {u.povm.dim}")
            units[k] = ScalarLeafUnit(k, u.variable, np.array([e[0, 0].real for e in u.povm.elements]))
        elif isinstance(u, ProductUnit):
            units[k] = u
        else:
            gains = []
            for op in u.ops:
                if op.in_dim != 1 or op.out_dim != 1:
                    raise StructureError(f"sum {k} has a non-scalar operation")
                gains.append(sum(abs(kr[0, 0]) ** 2 for kr in op.kraus))
            units[k] = ScalarSumUnit(k, u.inputs, tuple(float(w * g) for w, g in zip(u.weights, gains)))
    if c.rho.dim != 1 or max_abs(c.rho.mat - 1.0) > tol:
        raise StructureError("a scalar circuit needs rho = [[1]]")
    return DProbCircuit(units, c.root, c.cardinalities)


def dprob_to_dpunc(c: DProbCircuit) -> DPunc:
    """Embed a scalar circuit as 1x1 operators with identity edge operations."""
    one = QuantumOperation((identity(1),))
    units: dict[int, Unit] = {}
    for k, u in c.units.items():
        if isinstance(u, ScalarLeafUnit):
            units[k] = LeafUnit(k, u.variable, Povm(tuple(np.array([[v]]) for v in u.table)))
        elif isinstance(u, ProductUnit):
            units[k] = u
        else:
            units[k] = SumUnit(k, u.inputs, u.weights, (one,) * len(u.inputs))
    return DPunc(units, c.root, DensityMatrix(identity(1)), c.cardinalities)


def scopes_by_layer(c: AnyDag, kinds: Sequence[type] = (ProductUnit,)) -> list[frozenset[int]]:
    """Distinct scopes of units of the given kinds, ordered by size then contents."""
    scopes = compute_scopes(c)
    found = {scopes[k] for k in topological_order(c) if isinstance(c.units[k], tuple(kinds))}
    return sorted(found, key=lambda s: (len(s), sorted(s)))
