"""
Dense complex matrix kernels and spectral/order predicates.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Everything here
is a pure function; inputs are never modified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt

from punc.errors import (
    ConvergenceError,
    DimensionError,
    NotHermitianError,
    StructureError,
)

DEFAULT_TOL = 1e-9
MAX_ENTRIES = 2**20

Matrix = npt.NDArray[np.complex128]


def as_matrix(a: npt.ArrayLike, name: str = "matrix") -> Matrix:
    """Coerce to a finite 2-D complex array (a copy is made only when needed)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DimensionError(f"{name} has non-finite entries")
    return m


def frozen(a: npt.ArrayLike, name: str = "matrix") -> Matrix:
    m = np.array(as_matrix(a, name), copy=True)
    m.flags.writeable = False
    return m


def _square(a: npt.ArrayLike, name: str = "matrix") -> Matrix:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def identity(n: int) -> Matrix:
    return np.eye(n, dtype=np.complex128)


def max_abs(a: npt.ArrayLike) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def kron(a: npt.ArrayLike, b: npt.ArrayLike, max_entries: int = MAX_ENTRIES) -> Matrix:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows * cols > max_entries:
        raise DimensionError(f"kron result {rows}x{cols} exceeds the {max_entries}-entry cap")
    return np.kron(a, b)


def hadamard(a: npt.ArrayLike, b: npt.ArrayLike) -> Matrix:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"hadamard shape mismatch {a.shape} vs {b.shape}")
    return a * b


def conj_transpose(a: npt.ArrayLike) -> Matrix:
    return as_matrix(a).conj().T


def trace(a: npt.ArrayLike) -> complex:
    return complex(np.trace(_square(a)))


def hermitian_residual(a: Matrix) -> float:
    return max_abs(a - a.conj().T)


def _rotate(h: Matrix, v: Matrix, p: int, q: int, scale: float) -> None:
    apq = h[p, q]
    mag = abs(apq)
    if mag <= 1e-300 or mag <= 1e-18 * scale:
        h[p, q] = h[q, p] = 0.0
        return
    phase = apq / mag
    app = h[p, p].real
    aqq = h[q, q].real
    tau = (aqq - app) / (2.0 * mag)
    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c
    # Phase on column q makes the (p, q) entry real, then a real Givens rotation kills it.
    g_qp = -s * phase.conjugate()
    g_qq = c * phase.conjugate()

    col_p = h[:, p].copy()
    col_q = h[:, q].copy()
    h[:, p] = c * col_p + g_qp * col_q
    h[:, q] = s * col_p + g_qq * col_q
    row_p = h[p, :].copy()
    row_q = h[q, :].copy()
    h[p, :] = c * row_p + g_qp.conjugate() * row_q
    h[q, :] = s * row_p + g_qq.conjugate() * row_q
    h[p, q] = h[q, p] = 0.0
    h[p, p] = h[p, p].real
    h[q, q] = h[q, q].real

    vp = v[:, p].copy()
    vq = v[:, q].copy()
    v[:, p] = c * vp + g_qp * vq
    v[:, q] = s * vp + g_qq * vq


def hermitian_eig(
    a: npt.ArrayLike, tol: float = DEFAULT_TOL, max_sweeps: int = 100
) -> tuple[npt.NDArray[np.float64], Matrix]:
    """
    Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.

    The input is symmetrized as ``(a + a*) / 2`` after the Hermitian check.
    Sweeps visit pairs ``(p, q)`` with ``p < q`` in row-major order, so the
    result is fully deterministic.

    Returns
    -------
    eigenvalues : ndarray of float
        Sorted in descending order.
    eigenvectors : ndarray
        Unitary ``V`` with ``a = V diag(eigenvalues) V*``; column ``i``
        belongs to ``eigenvalues[i]``.

    Raises
    ------
    NotHermitianError
        If ``max |a - a*| > tol``.
    ConvergenceError
        If the off-diagonal mass does not vanish within ``max_sweeps``.
    """
    m = _square(a)
    if hermitian_residual(m) > tol:
        raise NotHermitianError(f"matrix is not Hermitian (residual {hermitian_residual(m):.3g})")
    h = 0.5 * (m + m.conj().T)
    n = h.shape[0]
    v = identity(n)
    scale = float(np.sqrt(np.sum(np.abs(h) ** 2)))
    threshold = 1e-15 * max(scale, 1e-300) * n

    for _ in range(max_sweeps):
        off = np.abs(h - np.diag(np.diag(h)))
        if float(np.sqrt(np.sum(off**2))) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                _rotate(h, v, p, q, scale)
    else:
        off = np.abs(h - np.diag(np.diag(h)))
        if float(np.sqrt(np.sum(off**2))) > threshold:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")

    eigenvalues = np.real(np.diag(h)).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], v[:, order]


def is_psd(a: npt.ArrayLike, tol: float = DEFAULT_TOL) -> bool:
    m = _square(a)
    if hermitian_residual(m) > tol:
        return False
    eigenvalues, _ = hermitian_eig(m, tol)
    return bool(eigenvalues[-1] >= -tol)


def loewner_leq(a: npt.ArrayLike, b: npt.ArrayLike, tol: float = DEFAULT_TOL) -> bool:
    """``a <= b`` in the Loewner order, i.e. ``b - a`` is PSD."""
    a = _square(a, "a")
    b = _square(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"loewner_leq shape mismatch {a.shape} vs {b.shape}")
    return is_psd(b - a, tol)


def is_semi_unitary(u: npt.ArrayLike, tol: float = DEFAULT_TOL) -> bool:
    u = as_matrix(u, "u")
    if u.shape[0] > u.shape[1]:
        raise StructureError(
            f"semi-unitary matrices here are wide (rows <= cols), got shape {u.shape}"
        )
    return max_abs(u @ u.conj().T - identity(u.shape[0])) <= tol


@dataclass(frozen=True)
class PartialPermutation:
    """Row selector: row ``i`` of the matrix has a single 1 at column ``selected[i]``."""

    in_dim: int
    selected: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.in_dim < 1:
            raise StructureError("in_dim must be positive")
        if len(set(self.selected)) != len(self.selected):
            raise StructureError("selected indices must be distinct")
        if any(not 0 <= s < self.in_dim for s in self.selected):
            raise StructureError(f"selected indices must lie in [0, {self.in_dim})")

    def matrix(self) -> Matrix:
        p = np.zeros((len(self.selected), self.in_dim), dtype=np.complex128)
        p[np.arange(len(self.selected)), list(self.selected)] = 1.0
        return p


def diagonal_selector(n: int) -> PartialPermutation:
    """The selector of positions ``i*n + i`` that turns ``A (x) B`` into ``A o B``."""
    return PartialPermutation(n * n, tuple(i * n + i for i in range(n)))


def hadamard_rewrite(p: PartialPermutation, a: npt.ArrayLike, b: npt.ArrayLike) -> Matrix:
    """Hadamard product computed as ``P (a (x) b) P*``."""
    a = _square(a, "a")
    b = _square(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"hadamard_rewrite shape mismatch {a.shape} vs {b.shape}")
    n = a.shape[0]
    if p != diagonal_selector(n):
        raise StructureError(
            f"selector must pick indices i*{n}+i from dimension {n * n}, got {p.selected}"
        )
    pm = p.matrix()
    return pm @ kron(a, b) @ pm.conj().T


def random_unitary(rng: np.random.Generator, n: int) -> Matrix:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    phases = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0), 1.0)
    return q * phases


def random_semi_unitary(rng: np.random.Generator, rows: int, cols: int) -> Matrix:
    """A ``rows x cols`` matrix with orthonormal rows (``rows <= cols``)."""
    if rows > cols:
        raise DimensionError(f"cannot have {rows} orthonormal rows in dimension {cols}")
    return random_unitary(rng, cols)[:rows, :]


def block_columns(m: Matrix, count: int) -> Sequence[Matrix]:
    """Split ``m`` into ``count`` equal-width column blocks."""
    width = m.shape[1] // count
    return [m[:, j * width : (j + 1) * width] for j in range(count)]
