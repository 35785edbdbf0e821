"""
Structured-decomposable positive unital circuits over a partition tree.

Leaves emit POVM elements, internal nodes apply a unital quantum operation to
the Kronecker (or Hadamard) combination of their children, and the root
operator is traced against a density matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from punc.errors import DimensionError, Violation
from punc.linalg import DEFAULT_TOL, Matrix, identity, max_abs
from punc.partition import (
    HADAMARD,
    AssignmentLike,
    MarginalQuery,
    PartitionCircuit,
    PartitionNode,
    normalize_assignment,
)
from punc.quantum import (
    DensityMatrix,
    Povm,
    QuantumOperation,
    apply_operation,
    trace_probability,
    unitality_residual,
    validate_density,
    validate_povm,
)


@dataclass(frozen=True, eq=False)
class SdPunc:
    tree: PartitionCircuit
    leaf_povms: Mapping[int, Povm]
    internal_ops: Mapping[int, QuantumOperation]
    rho: DensityMatrix

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return self.tree.cardinalities

    def node_dims(self) -> list[int]:
        dims = []
        for n in self.tree.nodes:
            dims.append(self.leaf_povms[n.id].dim if n.is_leaf else self.internal_ops[n.id].out_dim)
        return dims


def combine(node: PartitionNode, left: Matrix, right: Matrix) -> Matrix:
    if node.combine_mode == HADAMARD:
        if left.shape != right.shape:
            raise DimensionError(f"hadamard node {node.id} has children {left.shape} and {right.shape}")
        return left * right
    return np.kron(left, right)


def forward(c: SdPunc, leaf_value: Callable[[PartitionNode], Matrix]) -> list[Matrix]:
    """Evaluate every node once, leaves first; returns the operator of each node id."""
    values: list[Matrix] = []
    for n in c.tree.nodes:
        if n.is_leaf:
            values.append(leaf_value(n))
        else:
            joint = combine(n, values[n.left], values[n.right])
            values.append(apply_operation(c.internal_ops[n.id], joint))
    return values


def validate(c: SdPunc, tol: float = DEFAULT_TOL) -> list[Violation]:
    violations: list[Violation] = []
    dims: dict[int, int] = {}
    for n in c.tree.nodes:
        where = f"node {n.id}"
        if n.is_leaf:
            povm = c.leaf_povms.get(n.id)
            if povm is None:
                violations.append(Violation("missing-povm", where))
                continue
            if povm.outcomes != n.cardinality:
                violations.append(
                    Violation("povm-outcomes", where, message=f"{povm.outcomes} elements for cardinality {n.cardinality}")
                )
            violations += validate_povm(povm, tol, where)
            dims[n.id] = povm.dim
            continue
        op = c.internal_ops.get(n.id)
        if op is None:
            violations.append(Violation("missing-operation", where))
            continue
        dims[n.id] = op.out_dim
        dl, dr = dims.get(n.left), dims.get(n.right)
        if dl is None or dr is None:
            continue
        if n.combine_mode == HADAMARD:
            if dl != dr:
                violations.append(Violation("hadamard-dims", where, message=f"children dims {dl} and {dr}"))
                continue
            expected = dl
        else:
            expected = dl * dr
        if op.in_dim != expected:
            violations.append(Violation("dimension", where, message=f"operation input {op.in_dim}, children give {expected}"))
            continue
        residual = unitality_residual(op)
        if residual > tol:
            violations.append(Violation("non-unital", where, residual))
    root_dim = dims.get(c.tree.root)
    if root_dim is not None and c.rho.dim != root_dim:
        violations.append(Violation("dimension", "rho", message=f"rho is {c.rho.dim}, root emits {root_dim}"))
    else:
        violations += validate_density(c.rho, tol)
    return violations


def evaluate_nodes(c: SdPunc, x: AssignmentLike) -> list[Matrix]:
    values = normalize_assignment(x, c.cardinalities)
    return forward(c, lambda n: c.leaf_povms[n.id].elements[values[n.variable]])


def evaluate(c: SdPunc, x: AssignmentLike) -> Matrix:
    return evaluate_nodes(c, x)[c.tree.root]


def probability(c: SdPunc, x: AssignmentLike, tol: float = DEFAULT_TOL) -> float:
    return trace_probability(c.rho.mat, evaluate(c, x), tol)


def marginal_operator(c: SdPunc, q: MarginalQuery) -> Matrix:
    q.check(c.cardinalities)

    def leaf(n: PartitionNode) -> Matrix:
        povm = c.leaf_povms[n.id]
        if n.variable in q.marginalized:
            return identity(povm.dim)
        return povm.elements[q.evidence[n.variable]]

    return forward(c, leaf)[c.tree.root]


def marginal(c: SdPunc, q: MarginalQuery, tol: float = DEFAULT_TOL) -> float:
    """
    Probability of ``q.evidence`` with ``q.marginalized`` summed out.

    Sums are pushed into the leaves: a marginalized leaf emits the identity
    (its POVM elements sum to it), so one forward pass suffices.
    """
    return trace_probability(c.rho.mat, marginal_operator(c, q), tol)


def povm_residual(total: Matrix) -> float:
    return max_abs(total - identity(total.shape[0]))
