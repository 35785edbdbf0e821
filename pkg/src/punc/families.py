"""
Special circuit families and the converters between them.

* :class:`PsdCircuit` propagates vectors through semi-unitary maps; it is the
  pure-state special case of an :class:`~punc.sd_punc.SdPunc`.
* :class:`ProbCircuitPT` is a probabilistic circuit on a partition tree; it is
  isomorphic to a diagonal :class:`~punc.sd_punc.SdPunc`.
* :class:`NoisePunc` multiplies a PUnC by a [0, 1]-valued circuit ``q`` over
  the same vtree, giving a sub-complete distribution with a tractable
  normalizer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
import numpy.typing as npt

from punc import sd_punc
from punc.errors import (
    ConversionError,
    DimensionError,
    NormalizerError,
    PuncError,
    StructureError,
    Violation,
    require_valid,
)
from punc.linalg import (
    DEFAULT_TOL,
    Matrix,
    diagonal_selector,
    identity,
    is_semi_unitary,
    max_abs,
)
from punc.partition import (
    HADAMARD,
    KRONECKER,
    AssignmentLike,
    MarginalQuery,
    PartitionCircuit,
    PartitionNode,
    all_scopes,
    node_correspondence,
    normalize_assignment,
    same_vtree,
)
from punc.quantum import (
    DensityMatrix,
    Povm,
    QuantumOperation,
    apply_operation,
    trace_probability,
    validate_density,
)
from punc.sd_punc import SdPunc

DIAGONAL_TOL = 1e-10


def off_diagonal(m: Matrix) -> float:
    return max_abs(m - np.diag(np.diag(m)))


# --------------------------------------------------------------------------- PSD circuits


@dataclass(frozen=True, eq=False)
class PsdCircuit:
    """``V_leaf = U e_x``, ``V_k = U_k (V_l (x) V_r)``, ``p(x) = V* rho V``."""

    tree: PartitionCircuit
    unitaries: Mapping[int, Matrix]
    rho: DensityMatrix

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return self.tree.cardinalities


def validate_psd_circuit(c: PsdCircuit, tol: float = DEFAULT_TOL) -> list[Violation]:
    violations: list[Violation] = []
    dims: dict[int, int] = {}
    for n in c.tree.nodes:
        where = f"node {n.id}"
        u = c.unitaries.get(n.id)
        if u is None:
            violations.append(Violation("missing-unitary", where))
            continue
        dims[n.id] = u.shape[0]
        if n.is_leaf:
            expected = n.cardinality
        else:
            if n.combine_mode != KRONECKER:
                violations.append(Violation("combine-mode", where, message="PSD circuits use Kronecker nodes"))
                continue
            expected = dims.get(n.left, 0) * dims.get(n.right, 0)
        if u.shape[1] != expected:
            violations.append(Violation("dimension", where, message=f"U has {u.shape[1]} columns, expected {expected}"))
            continue
        if u.shape[0] > u.shape[1]:
            violations.append(Violation("orientation", where, message=f"U is {u.shape}, needs rows <= cols"))
            continue
        residual = max_abs(u @ u.conj().T - identity(u.shape[0]))
        if residual > tol:
            violations.append(Violation("not-semi-unitary", where, residual))
    if dims.get(c.tree.root) != c.rho.dim:
        violations.append(Violation("dimension", "rho", message=f"rho is {c.rho.dim}, root emits {dims.get(c.tree.root)}"))
    else:
        violations += validate_density(c.rho, tol)
    return violations


def psd_vectors(c: PsdCircuit, x: AssignmentLike) -> list[Matrix]:
    values = normalize_assignment(x, c.cardinalities)
    vecs: list[Matrix] = []
    for n in c.tree.nodes:
        u = c.unitaries[n.id]
        if n.is_leaf:
            vecs.append(u[:, values[n.variable]])
        else:
            vecs.append(u @ np.kron(vecs[n.left], vecs[n.right]))
    return vecs


def eval_psd_circuit(c: PsdCircuit, x: AssignmentLike, tol: float = DEFAULT_TOL) -> tuple[Matrix, float]:
    v = psd_vectors(c, x)[c.tree.root]
    return v, trace_probability(c.rho.mat, np.outer(v, v.conj()), tol)


def psd_to_pure_punc(c: PsdCircuit, tol: float = DEFAULT_TOL) -> SdPunc:
    """Single-Kraus operations ``K_k = U_k`` and projector leaves ``U e_x e_x* U*``."""
    for n in c.tree.nodes:
        u = c.unitaries[n.id]
        if u.shape[0] > u.shape[1] or not is_semi_unitary(u, tol):
            raise ConversionError(f"node {n.id}: U is not semi-unitary")
    require_valid(validate_psd_circuit(c, tol), "PSD circuit")
    leaves = {}
    ops = {}
    for n in c.tree.nodes:
        u = c.unitaries[n.id]
        if n.is_leaf:
            cols = [u[:, i] for i in range(n.cardinality)]
            leaves[n.id] = Povm(tuple(np.outer(col, col.conj()) for col in cols))
        else:
            ops[n.id] = QuantumOperation((u,))
    return SdPunc(c.tree, leaves, ops, c.rho)


# --------------------------------------------------------------------------- probabilistic circuits


@dataclass(frozen=True, eq=False)
class ProbCircuitPT:
    """
    Probabilistic circuit on a partition tree.

    ``leaf_tables[k]`` has shape ``(cardinality, dim)``; row ``x`` is the leaf
    vector for value ``x``. ``internal_weights[k]`` maps the combined child
    vector to the node vector. The distribution reads entry 0 of the root.
    """

    tree: PartitionCircuit
    leaf_tables: Mapping[int, npt.NDArray[np.float64]]
    internal_weights: Mapping[int, npt.NDArray[np.float64]]

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return self.tree.cardinalities


def validate_prob_circuit(c: ProbCircuitPT, tol: float = DEFAULT_TOL, complete: bool = True) -> list[Violation]:
    """
    With ``complete=False`` the leaf columns only need entries in [0, 1] and
    weight rows may sum to less than one; that is the ``q`` of a NoisePunc.
    """
    violations: list[Violation] = []
    dims: dict[int, int] = {}
    for n in c.tree.nodes:
        where = f"node {n.id}"
        if n.is_leaf:
            t = c.leaf_tables.get(n.id)
            if t is None:
                violations.append(Violation("missing-table", where))
                continue
            if t.ndim != 2 or t.shape[0] != n.cardinality:
                violations.append(Violation("dimension", where, message=f"table shape {t.shape}"))
                continue
            dims[n.id] = t.shape[1]
            if np.any(t < -tol) or (not complete and np.any(t > 1 + tol)):
                violations.append(Violation("leaf-range", where))
            if complete:
                residual = max_abs(t.sum(axis=0) - 1.0)
                if residual > tol:
                    violations.append(Violation("leaf-completeness", where, residual))
            continue
        w = c.internal_weights.get(n.id)
        if w is None:
            violations.append(Violation("missing-weights", where))
            continue
        dims[n.id] = w.shape[0]
        dl, dr = dims.get(n.left), dims.get(n.right)
        if dl is None or dr is None:
            continue
        if n.combine_mode == HADAMARD and dl != dr:
            violations.append(Violation("hadamard-dims", where, message=f"children dims {dl} and {dr}"))
            continue
        expected = dl if n.combine_mode == HADAMARD else dl * dr
        if w.ndim != 2 or w.shape[1] != expected:
            violations.append(Violation("dimension", where, message=f"W is {w.shape}, children give {expected}"))
            continue
        if np.any(w < -tol):
            violations.append(Violation("negative-weight", where))
        rows = w.sum(axis=1)
        if complete:
            residual = max_abs(rows - 1.0)
            if residual > tol:
                violations.append(Violation("row-normalization", where, residual))
        elif np.any(rows > 1 + tol):
            violations.append(Violation("row-normalization", where, float(rows.max() - 1.0)))
    return violations


def _combine_vectors(n: PartitionNode, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a * b if n.combine_mode == HADAMARD else np.kron(a, b)


def prob_forward(c: ProbCircuitPT, leaf_vector) -> list[np.ndarray]:
    vecs: list[np.ndarray] = []
    for n in c.tree.nodes:
        if n.is_leaf:
            vecs.append(leaf_vector(n))
        else:
            vecs.append(c.internal_weights[n.id] @ _combine_vectors(n, vecs[n.left], vecs[n.right]))
    return vecs


def eval_prob_circuit(c: ProbCircuitPT, x: AssignmentLike) -> np.ndarray:
    values = normalize_assignment(x, c.cardinalities)
    return prob_forward(c, lambda n: c.leaf_tables[n.id][values[n.variable]])[c.tree.root]


def pc_probability(c: ProbCircuitPT, x: AssignmentLike) -> float:
    return float(eval_prob_circuit(c, x)[0])


def pc_marginal(c: ProbCircuitPT, q: MarginalQuery) -> float:
    q.check(c.cardinalities)

    def leaf(n: PartitionNode) -> np.ndarray:
        t = c.leaf_tables[n.id]
        return t.sum(axis=0) if n.variable in q.marginalized else t[q.evidence[n.variable]]

    return float(prob_forward(c, leaf)[c.tree.root][0])


# --------------------------------------------------------------------------- diagonal PUnCs


def selector_matrix(j: int, out_dim: int, in_dim: int) -> Matrix:
    """Zero everywhere except row ``j``, which is all ones."""
    m = np.zeros((out_dim, in_dim), dtype=np.complex128)
    m[j, :] = 1.0
    return m


@dataclass(frozen=True, eq=False)
class DiagonalOperation:
    """Factors ``D_j``; the operation's Kraus operators are ``J_j D_j`` for ``j < len(factors)``."""

    diag_factors: tuple[Matrix, ...]

    @classmethod
    def from_weights(cls, w: npt.ArrayLike) -> "DiagonalOperation":
        w = np.asarray(w, dtype=float)
        if np.any(w < 0):
            raise PuncError("weights must be nonnegative")
        return cls(tuple(np.diag(np.sqrt(row)).astype(np.complex128) for row in w))

    @property
    def out_dim(self) -> int:
        return len(self.diag_factors)


def make_diagonal_operation(d: DiagonalOperation, tol: float = DEFAULT_TOL) -> QuantumOperation:
    if not d.diag_factors:
        raise DimensionError("a diagonal operation needs at least one factor")
    in_dim = d.diag_factors[0].shape[0]
    kraus = []
    for j, dj in enumerate(d.diag_factors):
        dj = np.asarray(dj, dtype=np.complex128)
        if dj.shape != (in_dim, in_dim) or off_diagonal(dj) > 0:
            raise StructureError(f"factor {j} is not an {in_dim}x{in_dim} diagonal matrix")
        norm = float(np.trace(dj @ dj.conj().T).real)
        if abs(norm - 1.0) > tol:
            raise PuncError(f"factor {j} has Tr[D D*] = {norm!r}, expected 1")
        kraus.append(selector_matrix(j, d.out_dim, in_dim) @ dj)
    return QuantumOperation(tuple(kraus))


def pc_to_diagonal_punc(c: ProbCircuitPT, tol: float = DEFAULT_TOL) -> SdPunc:
    """Leaves ``diag(P_x)`` (from ``Delta = diag(sqrt P_x)``), weights as diagonal operations, ``rho = e0 e0*``."""
    require_valid(validate_prob_circuit(c, tol), "probabilistic circuit")
    leaves = {}
    for n in c.tree.leaves():
        table = np.clip(c.leaf_tables[n.id], 0.0, None)
        deltas = [np.diag(np.sqrt(row)).astype(np.complex128) for row in table]
        leaves[n.id] = Povm(tuple(d @ d.conj().T for d in deltas))
    ops = {
        n.id: make_diagonal_operation(DiagonalOperation.from_weights(np.clip(c.internal_weights[n.id], 0.0, None)), tol=1e-6)
        for n in c.tree.internal()
    }
    root_dim = _prob_dims(c)[c.tree.root]
    rho = np.zeros((root_dim, root_dim), dtype=np.complex128)
    rho[0, 0] = 1.0
    return SdPunc(c.tree, leaves, ops, DensityMatrix(rho))


def _prob_dims(c: ProbCircuitPT) -> list[int]:
    return [
        c.leaf_tables[n.id].shape[1] if n.is_leaf else c.internal_weights[n.id].shape[0]
        for n in c.tree.nodes
    ]


def diagonal_punc_to_pc(c: SdPunc, tol: float = DEFAULT_TOL) -> ProbCircuitPT:
    """
    Recover the probabilistic circuit behind a diagonal PUnC.

    ``W[i, j]`` is read off as entry ``(i, i)`` of the operation applied to the
    basis projector ``e_j e_j*``. Diagonality is detected numerically, so
    hand-built circuits qualify. Only ``diag(rho)`` matters; unless it is
    ``e0`` it is folded into row 0 of the root.
    """
    require_valid(sd_punc.validate(c, tol), "PUnC")
    tables: dict[int, np.ndarray] = {}
    weights: dict[int, np.ndarray] = {}
    for n in c.tree.leaves():
        elems = c.leaf_povms[n.id].elements
        for i, e in enumerate(elems):
            if off_diagonal(e) > DIAGONAL_TOL:
                raise ConversionError(f"leaf {n.id} element {i} is not diagonal")
        tables[n.id] = np.array([np.real(np.diag(e)) for e in elems])
    for n in c.tree.internal():
        op = c.internal_ops[n.id]
        w = np.zeros((op.out_dim, op.in_dim))
        for j in range(op.in_dim):
            basis = np.zeros((op.in_dim, op.in_dim), dtype=np.complex128)
            basis[j, j] = 1.0
            image = apply_operation(op, basis)
            if off_diagonal(image) > DIAGONAL_TOL:
                raise ConversionError(f"node {n.id} does not map diagonal matrices to diagonal matrices")
            w[:, j] = np.real(np.diag(image))
        weights[n.id] = w

    readout = np.real(np.diag(c.rho.mat))
    e0 = np.zeros_like(readout)
    e0[0] = 1.0
    if max_abs(readout - e0) > 0:
        root = c.tree.root
        if c.tree.nodes[root].is_leaf:
            t = tables[root].copy()
            t[:, 0] = t @ readout
            tables[root] = t
        else:
            w = weights[root].copy()
            w[0, :] = readout @ w
            weights[root] = w
    return ProbCircuitPT(c.tree, tables, weights)


# --------------------------------------------------------------------------- Hadamard rewrite


def rewrite_hadamard(c: SdPunc) -> SdPunc:
    """Replace every Hadamard node by a Kronecker node whose Kraus operators absorb the selector."""
    dims = c.node_dims()
    ops = dict(c.internal_ops)
    for n in c.tree.internal():
        if n.combine_mode != HADAMARD:
            continue
        p = diagonal_selector(dims[n.left]).matrix()
        ops[n.id] = QuantumOperation(tuple(k @ p for k in c.internal_ops[n.id].kraus))
    return SdPunc(c.tree.with_modes(KRONECKER), c.leaf_povms, ops, c.rho)


# --------------------------------------------------------------------------- NoisePUnCs


@dataclass(frozen=True, eq=False)
class NoisePunc:
    """``Q(x) = q(x) O(x)`` with ``q`` read from entry 0 of a [0, 1]-valued circuit."""

    q: ProbCircuitPT
    o: SdPunc

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return self.o.cardinalities


def validate_noise_punc(c: NoisePunc, tol: float = DEFAULT_TOL) -> list[Violation]:
    if not same_vtree(c.q.tree, c.o.tree):
        return [Violation("vtree-mismatch", "q/o", message="q and o do not share a partition tree")]
    violations = [
        Violation(v.kind, f"q {v.where}", v.residual, v.message)
        for v in validate_prob_circuit(c.q, tol, complete=False)
    ]
    violations += [Violation(v.kind, f"o {v.where}", v.residual, v.message) for v in sd_punc.validate(c.o, tol)]
    return violations


def noise_q(c: NoisePunc, x: AssignmentLike) -> float:
    return pc_probability(c.q, x)


def noisy_punc_unnormalized(c: NoisePunc, x: AssignmentLike, tol: float = DEFAULT_TOL) -> float:
    return noise_q(c, x) * sd_punc.probability(c.o, x, tol)


def _joint_pass(c: NoisePunc, q: MarginalQuery) -> list[Matrix]:
    """
    Per o-node ``k``, the stack ``S_k[i] = sum_{x_k} q_{k,i}(x_k) O_k(x_k)``
    over the completions allowed by the query (shape ``(dim_q, d, d)``).
    """
    q.check(c.cardinalities)
    to_q = node_correspondence(c.o.tree, c.q.tree)
    scopes_o = all_scopes(c.o.tree)
    scopes_q = all_scopes(c.q.tree)
    stacks: list[np.ndarray] = []
    for n in c.o.tree.nodes:
        qn = c.q.tree.nodes[to_q[n.id]]
        if n.is_leaf:
            table = c.q.leaf_tables[qn.id]
            elems = np.stack(c.o.leaf_povms[n.id].elements)
            values = range(n.cardinality) if n.variable in q.marginalized else [q.evidence[n.variable]]
            stacks.append(sum(np.einsum("i,ab->iab", table[v], elems[v]) for v in values))
            continue
        left, right = stacks[n.left], stacks[n.right]
        # q's children may be stored in the opposite order.
        q_left_first = scopes_q[qn.left] == scopes_o[n.left]
        ql, qr = (left, right) if q_left_first else (right, left)
        w = c.q.internal_weights[qn.id]
        if qn.combine_mode == HADAMARD:
            pairs = [(j, j) for j in range(ql.shape[0])]
        else:
            pairs = [(a, b) for a in range(ql.shape[0]) for b in range(qr.shape[0])]
        op = c.o.internal_ops[n.id]
        out = []
        for i in range(w.shape[0]):
            joint = 0
            for col, (a, b) in enumerate(pairs):
                if w[i, col] == 0:
                    continue
                sa, sb = (ql[a], qr[b]) if q_left_first else (qr[b], ql[a])
                joint = joint + w[i, col] * sd_punc.combine(n, sa, sb)
            if isinstance(joint, int):
                d = op.out_dim
                out.append(np.zeros((d, d), dtype=np.complex128))
            else:
                out.append(apply_operation(op, joint))
        stacks.append(np.stack(out))
    return stacks


def noisy_punc_marginal(c: NoisePunc, q: MarginalQuery) -> float:
    """Sub-complete mass of the evidence, all other variables summed out, in one joint pass."""
    root = _joint_pass(c, q)[c.o.tree.root][0]
    value = complex(np.sum(c.o.rho.mat * root.T))
    return value.real


def noisy_punc_normalizer(c: NoisePunc) -> float:
    return noisy_punc_marginal(c, MarginalQuery({}, frozenset(range(len(c.cardinalities)))))


def noisy_punc_conditional(c: NoisePunc, x: AssignmentLike, tol: float = DEFAULT_TOL) -> float:
    z = noisy_punc_normalizer(c)
    if z <= tol:
        raise NormalizerError(f"normalizer {z!r} is not positive")
    return noisy_punc_unnormalized(c, x, tol) / z


def expand_operator_mixture(
    c: NoisePunc, node_id: int, i: int, x: AssignmentLike
) -> tuple[np.ndarray, list[Matrix]]:
    """
    Write ``q_{k,i}(x) O_k(x)`` as ``sum_j w_{kij} Qt_{kj}(x)``.

    Each summand ``Qt_{kj} = Phi_k(q_{l,a} O_l (x) q_{r,b} O_r)``, where
    ``(a, b)`` is the child-entry pair of column ``j`` of ``W_k``
    (``a == b == j`` for Hadamard nodes of ``q``).
    """
    n = c.o.tree.node(node_id)
    if n.is_leaf:
        raise StructureError(f"node {node_id} is a leaf")
    to_q = node_correspondence(c.o.tree, c.q.tree)
    values = normalize_assignment(x, c.cardinalities)
    ops = sd_punc.evaluate_nodes(c.o, values)
    qvec = prob_forward(c.q, lambda m: c.q.leaf_tables[m.id][values[m.variable]])
    qn = c.q.tree.nodes[to_q[node_id]]
    swapped = all_scopes(c.q.tree)[qn.left] != all_scopes(c.o.tree)[n.left]
    q_for_o_left, q_for_o_right = (qvec[qn.right], qvec[qn.left]) if swapped else (qvec[qn.left], qvec[qn.right])
    w = c.q.internal_weights[qn.id]
    if not 0 <= i < w.shape[0]:
        raise StructureError(f"entry {i} outside node {node_id}'s {w.shape[0]} entries")
    qr_len = len(qvec[qn.right])
    op = c.o.internal_ops[node_id]
    summands = []
    for col in range(w.shape[1]):
        if qn.combine_mode == HADAMARD:
            a = b = col
        else:
            a, b = divmod(col, qr_len)
        # a indexes q's left child, b its right child.
        if swapped:
            sl, sr = q_for_o_left[b], q_for_o_right[a]
        else:
            sl, sr = q_for_o_left[a], q_for_o_right[b]
        summands.append(apply_operation(op, sd_punc.combine(n, sl * ops[n.left], sr * ops[n.right])))
    return w[i].copy(), summands


def noise_operator(c: NoisePunc, node_id: int, i: int, x: AssignmentLike) -> Matrix:
    """``q_{k,i}(x) O_k(x)`` computed directly, for checking mixtures."""
    values = normalize_assignment(x, c.cardinalities)
    to_q = node_correspondence(c.o.tree, c.q.tree)
    qvec = prob_forward(c.q, lambda m: c.q.leaf_tables[m.id][values[m.variable]])
    return qvec[to_q[node_id]][i] * sd_punc.evaluate_nodes(c.o, values)[node_id]

