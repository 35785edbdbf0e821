"""POVMs, density matrices and Kraus-form quantum operations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import numpy.typing as npt

from punc.errors import DimensionError, PuncError, Violation
from punc.linalg import (
    DEFAULT_TOL,
    Matrix,
    as_matrix,
    block_columns,
    frozen,
    hermitian_residual,
    identity,
    is_psd,
    loewner_leq,
    max_abs,
    random_semi_unitary,
)

IMAG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Povm:
    """One PSD element per outcome; the elements should sum to the identity."""

    elements: tuple[Matrix, ...]

    def __post_init__(self) -> None:
        if not self.elements:
            raise DimensionError("a POVM needs at least one element")
        elems = tuple(frozen(e, "POVM element") for e in self.elements)
        shapes = {e.shape for e in elems}
        if len(shapes) != 1 or elems[0].shape[0] != elems[0].shape[1]:
            raise DimensionError(f"POVM elements must share one square shape, got {shapes}")
        object.__setattr__(self, "elements", elems)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def outcomes(self) -> int:
        return len(self.elements)

    def total(self) -> Matrix:
        return np.sum(self.elements, axis=0)


@dataclass(frozen=True, eq=False)
class NoisyPovm:
    """PSD elements whose sum ``bound`` is Loewner-below the identity."""

    elements: tuple[Matrix, ...]
    bound: Matrix = field(init=False)
    strict: bool = field(init=False)

    def __post_init__(self) -> None:
        elems = Povm(self.elements).elements
        bound = np.sum(elems, axis=0)
        bound.flags.writeable = False
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "bound", bound)
        object.__setattr__(self, "strict", max_abs(bound - identity(bound.shape[0])) > DEFAULT_TOL)

    @property
    def dim(self) -> int:
        return self.bound.shape[0]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    mat: Matrix

    def __post_init__(self) -> None:
        m = frozen(self.mat, "density matrix")
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True, eq=False)
class QuantumOperation:
    """``E -> sum_j K_j E K_j*`` with every Kraus operator shaped ``out_dim x in_dim``."""

    kraus: tuple[Matrix, ...]

    def __post_init__(self) -> None:
        if not self.kraus:
            raise DimensionError("a quantum operation needs at least one Kraus operator")
        ks = tuple(frozen(k, "Kraus operator") for k in self.kraus)
        shapes = {k.shape for k in ks}
        if len(shapes) != 1:
            raise DimensionError(f"Kraus operators must share one shape, got {shapes}")
        object.__setattr__(self, "kraus", ks)

    @property
    def in_dim(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.kraus[0].shape[0]


def validate_povm(p: Povm, tol: float = DEFAULT_TOL, where: str = "povm") -> list[Violation]:
    violations = []
    for i, e in enumerate(p.elements):
        if not is_psd(e, tol):
            violations.append(Violation("non-psd-element", f"{where}[{i}]"))
    residual = max_abs(p.total() - identity(p.dim))
    if residual > tol:
        violations.append(
            Violation("povm-sum", where, residual, "elements do not sum to the identity")
        )
    return violations


def validate_noisy_povm(p: NoisyPovm, tol: float = DEFAULT_TOL, where: str = "noisy-povm") -> list[Violation]:
    violations = [
        Violation("non-psd-element", f"{where}[{i}]")
        for i, e in enumerate(p.elements)
        if not is_psd(e, tol)
    ]
    if not loewner_leq(p.bound, identity(p.dim), tol):
        violations.append(Violation("bound-exceeds-identity", where))
    return violations


def validate_density(rho: DensityMatrix, tol: float = DEFAULT_TOL, where: str = "rho") -> list[Violation]:
    violations = []
    if not is_psd(rho.mat, tol):
        violations.append(Violation("non-psd-density", where, hermitian_residual(rho.mat)))
    residual = abs(np.trace(rho.mat) - 1.0)
    if residual > tol:
        violations.append(Violation("density-trace", where, float(residual)))
    return violations


def trace_probability(rho: Matrix, e: Matrix, tol: float = DEFAULT_TOL) -> float:
    """``Re Tr[rho e]`` after checking the imaginary residue and the [0, 1] range."""
    if rho.shape != e.shape:
        raise DimensionError(f"operator {e.shape} does not match density matrix {rho.shape}")
    value = complex(np.sum(rho * e.T))
    if abs(value.imag) > IMAG_TOL:
        raise PuncError(f"probability has imaginary part {value.imag:.3g}")
    p = value.real
    if p < -tol or p > 1.0 + tol:
        raise PuncError(f"probability {p!r} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def event_probability(rho: DensityMatrix, e: npt.ArrayLike, tol: float = DEFAULT_TOL) -> float:
    e = as_matrix(e, "event")
    if e.shape != rho.mat.shape:
        raise DimensionError(f"event {e.shape} does not match density matrix {rho.mat.shape}")
    if not is_psd(e, tol):
        raise PuncError("event operator is not PSD")
    return trace_probability(rho.mat, e, tol)


def apply_operation(phi: QuantumOperation, e: npt.ArrayLike) -> Matrix:
    e = as_matrix(e, "operand")
    if e.shape != (phi.in_dim, phi.in_dim):
        raise DimensionError(
            f"operation expects {phi.in_dim}x{phi.in_dim} input, got {e.shape}"
        )
    out = np.zeros((phi.out_dim, phi.out_dim), dtype=np.complex128)
    for k in phi.kraus:
        out += k @ e @ k.conj().T
    return out


def unitality_residual(phi: QuantumOperation) -> float:
    return max_abs(apply_operation(phi, identity(phi.in_dim)) - identity(phi.out_dim))


def is_unital(phi: QuantumOperation, tol: float = DEFAULT_TOL) -> bool:
    return unitality_residual(phi) <= tol


def check_validity(phi: QuantumOperation, tol: float = DEFAULT_TOL) -> bool:
    """Kraus side condition ``sum_j K_j* K_j <= 1``."""
    gram = sum(k.conj().T @ k for k in phi.kraus)
    return loewner_leq(gram, identity(phi.in_dim), tol)


def compose_convex(
    weights: Sequence[float], ops: Sequence[QuantumOperation], tol: float = DEFAULT_TOL
) -> QuantumOperation:
    """Single operation equal to ``sum_j w_j ops[j]`` (Kraus sets scaled by ``sqrt(w_j)``)."""
    if len(weights) != len(ops) or not ops:
        raise DimensionError("need one weight per operation")
    w = np.asarray(weights, dtype=float)
    if np.any(w < -tol) or abs(w.sum() - 1.0) > tol:
        raise PuncError(f"weights must be nonnegative and sum to 1, got {w.tolist()}")
    shapes = {(op.out_dim, op.in_dim) for op in ops}
    if len(shapes) != 1:
        raise DimensionError(f"operations have different shapes {shapes}")
    kraus = [np.sqrt(max(wj, 0.0)) * k for wj, op in zip(w, ops) for k in op.kraus]
    return QuantumOperation(tuple(kraus))


def identity_operation(n: int) -> QuantumOperation:
    return QuantumOperation((identity(n),))


def random_unital_operation(
    rng: np.random.Generator, in_dim: int, out_dim: int, kraus_count: int = 1
) -> QuantumOperation:
    """
    Haar-random unital operation.

    The first ``out_dim`` rows of a random unitary of size
    ``kraus_count * in_dim`` are cut into ``kraus_count`` column blocks, so
    ``sum_j K_j K_j* = 1`` holds by construction.
    """
    if out_dim > kraus_count * in_dim:
        raise DimensionError(
            f"a unital map {in_dim}->{out_dim} needs at least "
            f"{-(-out_dim // in_dim)} Kraus operators, got {kraus_count}"
        )
    m = random_semi_unitary(rng, out_dim, kraus_count * in_dim)
    return QuantumOperation(tuple(block_columns(m, kraus_count)))


def random_povm(rng: np.random.Generator, dim: int, outcomes: int) -> Povm:
    """Random POVM ``E_i = B_i* B_i`` from the row blocks of an isometry."""
    v = random_semi_unitary(rng, dim, outcomes * dim).conj().T
    blocks = [v[i * dim : (i + 1) * dim, :] for i in range(outcomes)]
    return Povm(tuple(b.conj().T @ b for b in blocks))


def random_density_matrix(rng: np.random.Generator, dim: int) -> DensityMatrix:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(m / np.trace(m).real)


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(identity(dim) / dim)
