"""Small dense complex linear algebra for qubit operators and states.

Matrices are plain ``numpy`` complex arrays. Qubit 0 is the leftmost tensor
factor, i.e. the most significant bit of a computational-basis index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

HERMITICITY_TOL = 1e-12
POSITIVITY_TOL = 1e-10
UNITARITY_TOL = 1e-12
TRACE_TOL = 1e-12

ComplexMatrix = np.ndarray


class ShapeError(ValueError):
    """Operand dimensions are incompatible."""


class ValidationError(ValueError):
    """A value violates the invariants of its type."""


def as_matrix(a) -> ComplexMatrix:
    """Return ``a`` as a finite 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.size == 0:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=np.complex128, copy=True)
    m.flags.writeable = False
    return m


_PAULI = {
    "x": ((0, 1), (1, 0)),
    "y": ((0, -1j), (1j, 0)),
    "z": ((1, 0), (0, -1)),
}


def pauli(axis: str) -> ComplexMatrix:
    try:
        return np.array(_PAULI[axis.lower()], dtype=np.complex128)
    except (KeyError, AttributeError):
        raise ValueError(f"unknown Pauli axis {axis!r}; expected 'x', 'y' or 'z'") from None


def identity(dim: int = 2) -> ComplexMatrix:
    return np.eye(dim, dtype=np.complex128)


def dagger(a) -> ComplexMatrix:
    return np.conj(as_matrix(a)).T


def matmul(a, b) -> ComplexMatrix:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def kron(a, b) -> ComplexMatrix:
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(*factors) -> ComplexMatrix:
    out = np.ones((1, 1), dtype=np.complex128)
    for f in factors:
        out = kron(out, f)
    return out


def is_hermitian(a, tol: float = HERMITICITY_TOL) -> bool:
    a = as_matrix(a)
    return a.shape[0] == a.shape[1] and np.linalg.norm(a - a.conj().T) <= tol


def ket_projector(ket) -> ComplexMatrix:
    v = np.asarray(ket, dtype=np.complex128).reshape(-1, 1)
    return v @ v.conj().T


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    """A square matrix with U^dagger U = I."""

    matrix: ComplexMatrix

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise ShapeError(f"unitary must be square, got {m.shape}")
        err = np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]))
        if err >= UNITARITY_TOL:
            raise ValidationError(f"matrix is not unitary (||U^dag U - I||_F = {err:.3g})")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> UnitaryOperator:
        return UnitaryOperator(self.matrix.conj().T)


def rotation(axis: str, angle: float) -> UnitaryOperator:
    """exp(-i sigma_axis angle / 2), evaluated in closed form."""
    half = 0.5 * angle
    return UnitaryOperator(np.cos(half) * identity(2) - 1j * np.sin(half) * pauli(axis))


StateLike = Union["DensityMatrix", np.ndarray]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite state of ``num_qubits`` qubits."""

    matrix: ComplexMatrix

    def __post_init__(self):
        m = as_matrix(self.matrix)
        dim = m.shape[0]
        if m.shape[0] != m.shape[1] or dim < 2 or dim & (dim - 1):
            raise ShapeError(f"density matrix must be 2^n x 2^n, got {m.shape}")
        if np.linalg.norm(m - m.conj().T) > HERMITICITY_TOL:
            raise ValidationError("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1) > TRACE_TOL:
            raise ValidationError(f"density matrix trace is {tr.real:.15g}, expected 1")
        lowest = np.linalg.eigvalsh(m)[0]
        if lowest < -POSITIVITY_TOL:
            raise ValidationError(f"density matrix has negative eigenvalue {lowest:.3g}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.dim.bit_length() - 1

    @classmethod
    def maximally_mixed(cls, num_qubits: int = 1) -> DensityMatrix:
        dim = 2**num_qubits
        return cls(identity(dim) / dim)

    @classmethod
    def from_ket(cls, ket) -> DensityMatrix:
        v = np.asarray(ket, dtype=np.complex128).ravel()
        return cls(ket_projector(v / np.linalg.norm(v)))

    @classmethod
    def basis(cls, bits: str) -> DensityMatrix:
        """Computational basis state, e.g. ``basis("10")`` is |1><1| (x) |0><0|."""
        ket = np.zeros(2 ** len(bits))
        ket[int(bits, 2)] = 1.0
        return cls.from_ket(ket)

    @classmethod
    def from_bloch(cls, r) -> DensityMatrix:
        """Single-qubit state (I + r.sigma)/2 for a Bloch vector with |r| <= 1."""
        rx, ry, rz = (float(c) for c in r)
        return cls(0.5 * (identity(2) + rx * pauli("x") + ry * pauli("y") + rz * pauli("z")))

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()


def _mat(x: StateLike) -> ComplexMatrix:
    return x.matrix if isinstance(x, (DensityMatrix, UnitaryOperator)) else as_matrix(x)


def expectation(rho: StateLike, obs) -> complex:
    """Tr[rho obs]."""
    r, o = _mat(rho), as_matrix(obs)
    if r.shape != o.shape:
        raise ShapeError(f"state {r.shape} and observable {o.shape} differ in dimension")
    return complex(np.einsum("ij,ji->", r, o))


def conjugate_by(u: UnitaryOperator, obs) -> ComplexMatrix:
    """U^dagger obs U."""
    m, o = _mat(u), as_matrix(obs)
    if m.shape != o.shape:
        raise ShapeError(f"unitary {m.shape} and operator {o.shape} differ in dimension")
    return m.conj().T @ o @ m


def embed(op, qubit: int, num_qubits: int) -> ComplexMatrix:
    """Lift a single-qubit operator acting on ``qubit`` to the full register."""
    op = _mat(op)
    if op.shape != (2, 2):
        raise ShapeError(f"expected a single-qubit operator, got {op.shape}")
    if not 0 <= qubit < num_qubits:
        raise ValueError(f"qubit {qubit} outside a {num_qubits}-qubit register")
    return kron_all(identity(2**qubit), op, identity(2 ** (num_qubits - qubit - 1)))


def evolve(rho: DensityMatrix, u) -> DensityMatrix:
    """U rho U^dagger."""
    m = _mat(u)
    if m.shape != rho.matrix.shape:
        raise ShapeError(f"operator {m.shape} does not act on a state of shape {rho.matrix.shape}")
    out = m @ rho.matrix @ m.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T))
