"""Gate-level simulation of the two ancilla-assisted measurement protocols.

INRM: the system (qubit 0) is measured three times in rotated bases; the first
two outcomes are copied onto ancillas 1 and 2 by a CNOT or anti-CNOT. Four runs
with every gate combination are post-selected on the ancilla records where the
gate did not fire and stitched into the three-time joint distribution.

Moussa: an ancilla (qubit 1) prepared in |+> controls each observable in turn
on the system (qubit 0); its transverse polarization then carries the trace of
the operator product.

Outcome x = +1 corresponds to |0> and x = -1 to |1> throughout.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .qcore import (
    DensityMatrix,
    ShapeError,
    UnitaryOperator,
    ValidationError,
    embed,
    identity,
    kron,
    ket_projector,
    pauli,
    rotation,
)
from .moments import MomentVector
from .sequential import (
    DichotomicObservable,
    EvolutionParams,
    JointDistribution,
    observables,
    outcome_index,
)

_HADAMARD = UnitaryOperator(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
_NOT = UnitaryOperator(pauli("x"))
_PROJ = (ket_projector([1, 0]), ket_projector([0, 1]))


@dataclass(frozen=True)
class Hadamard:
    qubit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)

    def operator(self, num_qubits: int) -> np.ndarray:
        return embed(_HADAMARD, self.qubit, num_qubits)

    def inverse(self) -> Hadamard:
        return self


@dataclass(frozen=True)
class DelayZ:
    """Free z-precession exp(-i sigma_z angle/2)."""

    qubit: int
    angle: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)

    def operator(self, num_qubits: int) -> np.ndarray:
        return embed(rotation("z", self.angle), self.qubit, num_qubits)

    def inverse(self) -> DelayZ:
        return DelayZ(self.qubit, -self.angle)


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    qubit: int
    op: UnitaryOperator

    def __post_init__(self):
        if self.op.dim != 2:
            raise ShapeError("local unitaries act on a single qubit")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)

    def operator(self, num_qubits: int) -> np.ndarray:
        return embed(self.op, self.qubit, num_qubits)

    def inverse(self) -> LocalUnitary:
        return LocalUnitary(self.qubit, self.op.dagger())


@dataclass(frozen=True, eq=False)
class ControlledOp:
    """Apply ``op`` to ``target`` when ``control`` is |polarity>.

    polarity=1 is the usual controlled gate; polarity=0 fires on |0>
    (anti-CNOT when ``op`` is NOT).
    """

    control: int
    target: int
    op: UnitaryOperator
    polarity: int = 1

    def __post_init__(self):
        if self.control == self.target:
            raise ValueError("control and target must be distinct qubits")
        if self.polarity not in (0, 1):
            raise ValueError("polarity must be 0 or 1")
        if self.op.dim != 2:
            raise ShapeError("controlled operation must act on a single qubit")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.target)

    def operator(self, num_qubits: int) -> np.ndarray:
        fire = embed(_PROJ[self.polarity], self.control, num_qubits)
        idle = embed(_PROJ[1 - self.polarity], self.control, num_qubits)
        return fire @ embed(self.op, self.target, num_qubits) + idle

    def inverse(self) -> ControlledOp:
        return ControlledOp(self.control, self.target, self.op.dagger(), self.polarity)


Gate = Union[Hadamard, DelayZ, LocalUnitary, ControlledOp]


def cnot(control: int, target: int) -> ControlledOp:
    return ControlledOp(control, target, _NOT, 1)


def anti_cnot(control: int, target: int) -> ControlledOp:
    return ControlledOp(control, target, _NOT, 0)


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        gates = tuple(self.gates)
        for g in gates:
            if any(not 0 <= q < self.num_qubits for q in g.qubits):
                raise ValueError(f"{g} addresses a qubit outside 0..{self.num_qubits - 1}")
        object.__setattr__(self, "gates", gates)

    def __len__(self) -> int:
        return len(self.gates)

    def unitary(self) -> np.ndarray:
        u = identity(2**self.num_qubits)
        for g in self.gates:
            u = g.operator(self.num_qubits) @ u
        return u


def run_circuit(circuit: Circuit, initial: DensityMatrix) -> DensityMatrix:
    if initial.num_qubits != circuit.num_qubits:
        raise ShapeError(
            f"{circuit.num_qubits}-qubit circuit given a {initial.num_qubits}-qubit state"
        )
    rho = initial.matrix
    for g in circuit.gates:
        u = g.operator(circuit.num_qubits)
        rho = u @ rho @ u.conj().T
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def _check_epsilon(epsilon: float) -> None:
    if not 0 < epsilon <= 1:
        raise ValueError(f"purity factor must lie in (0, 1], got {epsilon!r}")


def pseudopure_state(epsilon: float, num_ancillas: int = 2) -> DensityMatrix:
    """(1-eps)/2^n I + eps (I_S/2 (x) |0..0><0..0|_A) on one system qubit plus ancillas."""
    _check_epsilon(epsilon)
    if num_ancillas < 0:
        raise ValueError("num_ancillas must be non-negative")
    dim = 2 ** (num_ancillas + 1)
    ancillas = np.zeros((dim // 2, dim // 2))
    ancillas[0, 0] = 1.0
    target = kron(identity(2) / 2, ancillas)
    return DensityMatrix((1 - epsilon) / dim * identity(dim) + epsilon * target)


def remove_background(values: np.ndarray, epsilon: float, background: float) -> np.ndarray:
    """Undo the pseudopure mixture: the identity part adds ``background`` to every value."""
    return (values - (1 - epsilon) * background) / epsilon


def rotated_basis_block(time_index: int, params: EvolutionParams, qubit: int = 0) -> list:
    """Gates applying U_i = exp(-i sigma_x omega t_i/2) as H . Delay_z . H."""
    angle = params.phase(time_index)
    return [Hadamard(qubit), DelayZ(qubit, angle), Hadamard(qubit)]


def inverse_block(block: Sequence) -> list:
    return [g.inverse() for g in reversed(block)]


class Encoding(enum.Enum):
    """Controlled gate copying a measurement outcome onto an ancilla."""

    CNOT = "CNOT"
    ANTI_CNOT = "anti-CNOT"

    @property
    def polarity(self) -> int:
        return 1 if self is Encoding.CNOT else 0

    @property
    def recorded_outcome(self) -> int:
        """The outcome that leaves the ancilla untouched (and the system undisturbed)."""
        return 1 if self is Encoding.CNOT else -1

    def gate(self, control: int, target: int) -> ControlledOp:
        return ControlledOp(control, target, _NOT, self.polarity)


@dataclass(frozen=True)
class InrmVariant:
    first_gate: Encoding
    second_gate: Encoding

    def __str__(self) -> str:
        return f"{self.first_gate.value}; {self.second_gate.value}"


INRM_VARIANTS = (
    InrmVariant(Encoding.CNOT, Encoding.CNOT),
    InrmVariant(Encoding.ANTI_CNOT, Encoding.CNOT),
    InrmVariant(Encoding.CNOT, Encoding.ANTI_CNOT),
    InrmVariant(Encoding.ANTI_CNOT, Encoding.ANTI_CNOT),
)

SYSTEM, ANCILLA_1, ANCILLA_2 = 0, 1, 2


def build_inrm_circuit(variant: InrmVariant, params: EvolutionParams) -> Circuit:
    params.require_default_grid()
    gates = []
    for step, (encoding, ancilla) in enumerate(
        ((variant.first_gate, ANCILLA_1), (variant.second_gate, ANCILLA_2)), start=1
    ):
        block = rotated_basis_block(step, params, SYSTEM)
        gates += block
        gates.append(encoding.gate(SYSTEM, ancilla))
        gates += inverse_block(block)
    gates += rotated_basis_block(3, params, SYSTEM)
    return Circuit(3, tuple(gates))


def inrm_experiment(variant: InrmVariant, params: EvolutionParams, epsilon: float = 1.0) -> np.ndarray:
    """Background-corrected final diagonal, shape (2, 2, 2) over (system, ancilla 1, ancilla 2)."""
    final = run_circuit(build_inrm_circuit(variant, params), pseudopure_state(epsilon, 2))
    return remove_background(final.diagonal(), epsilon, 1 / 8).reshape(2, 2, 2)


def extract_ttjp_inrm(params: EvolutionParams, epsilon: float = 1.0) -> JointDistribution:
    """Three-time joint probabilities from the four post-selected INRM experiments."""
    _check_epsilon(epsilon)
    weights = np.zeros(8)
    for variant in INRM_VARIANTS:
        diag = inrm_experiment(variant, params, epsilon)
        x1 = variant.first_gate.recorded_outcome
        x2 = variant.second_gate.recorded_outcome
        # accepted sector: both ancillas still |0>; x3 is read off the system bit
        for bit, x3 in ((0, 1), (1, -1)):
            weights[outcome_index((x1, x2, x3))] = diag[bit, 0, 0]
    return JointDistribution(weights)


@dataclass(frozen=True)
class AncillaReadout:
    """Ancilla spin expectations <I_x>, <I_y> with I = sigma/2."""

    exp_ix: float
    exp_iy: float

    def __post_init__(self):
        if abs(self.exp_ix) > 0.5 + 1e-10 or abs(self.exp_iy) > 0.5 + 1e-10:
            raise ValidationError("spin-1/2 expectations must lie in [-1/2, 1/2]")

    @property
    def moment(self) -> complex:
        """Tr[rho X_1 X_2 ... X_m], recovered from the two transverse components."""
        return 2 * complex(self.exp_ix, -self.exp_iy)


MOUSSA_SYSTEM, MOUSSA_ANCILLA = 0, 1


def build_moussa_circuit(observables: Sequence[DichotomicObservable]) -> Circuit:
    if not observables:
        raise ValueError("need at least one observable")
    gates = []
    for obs in observables:
        try:
            op = UnitaryOperator(obs.matrix)
        except ValidationError as exc:
            raise ValidationError(f"observable is not unitary: {exc}") from None
        gates.append(ControlledOp(MOUSSA_ANCILLA, MOUSSA_SYSTEM, op, 1))
    return Circuit(2, tuple(gates))


def moussa_readout(
    observables: Sequence[DichotomicObservable],
    rho_system: DensityMatrix | None = None,
    epsilon: float = 1.0,
) -> AncillaReadout:
    _check_epsilon(epsilon)
    rho_system = rho_system if rho_system is not None else DensityMatrix.maximally_mixed(1)
    if rho_system.num_qubits != 1:
        raise ShapeError("the Moussa protocol here takes a single system qubit")
    plus = ket_projector(np.array([1, 1]) / np.sqrt(2))
    initial = DensityMatrix((1 - epsilon) / 4 * identity(4) + epsilon * kron(rho_system.matrix, plus))
    final = run_circuit(build_moussa_circuit(observables), initial).matrix
    # the identity background carries no transverse polarization
    ix = np.trace(final @ embed(pauli("x") / 2, MOUSSA_ANCILLA, 2)).real / epsilon
    iy = np.trace(final @ embed(pauli("y") / 2, MOUSSA_ANCILLA, 2)).real / epsilon
    return AncillaReadout(float(ix), float(iy))


def moussa_moment(
    observables: Sequence[DichotomicObservable],
    rho_system: DensityMatrix | None = None,
    epsilon: float = 1.0,
) -> complex:
    """Complex moment Tr[rho X_1 ... X_m]; its real part is the symmetrized correlator."""
    return moussa_readout(observables, rho_system, epsilon).moment


def moussa_moment_vector(
    params: EvolutionParams,
    rho_system: DensityMatrix | None = None,
    epsilon: float = 1.0,
) -> MomentVector:
    """All eight three-time moments, each from its own Moussa run (real parts)."""
    params.require_default_grid()
    obs = observables(params)
    values = np.ones(8)
    for idx in range(1, 8):
        chosen = [o for o, bit in zip(obs, format(idx, "03b")) if bit == "1"]
        values[idx] = moussa_moment(chosen, rho_system, epsilon).real
    return MomentVector(values)
