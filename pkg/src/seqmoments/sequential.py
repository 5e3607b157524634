"""Heisenberg-picture observables and Lüders-rule measurement chains.

The system precesses under H = omega sigma_x / 2 (hbar = 1), so the
dichotomic observable measured at time t is

    X(t) = U(t)^dagger sigma_z U(t) = sigma_z cos(omega t) + sigma_y sin(omega t).

Outcome tuples are enumerated with x_1 most significant and +1 before -1,
which is the same as reading the binary index with bit 0 <-> +1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .qcore import (
    HERMITICITY_TOL,
    DensityMatrix,
    ShapeError,
    ValidationError,
    as_matrix,
    identity,
    pauli,
)

DEGENERACY_TOL = 1e-14
WEIGHT_TOL = 1e-12
NORMALIZATION_TOL = 1e-10
MAX_CHAIN = 10


@dataclass(frozen=True)
class EvolutionParams:
    omega: float
    delta_t: float
    times: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if not times:
            raise ValueError("at least one measurement time is required")
        if not all(np.isfinite(times)) or not np.isfinite(self.omega):
            raise ValueError("omega and times must be finite")
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError(f"measurement times must be non-decreasing, got {times}")
        object.__setattr__(self, "times", times)

    @classmethod
    def equally_spaced(cls, omega: float, delta_t: float, k: int = 3) -> EvolutionParams:
        """Times 0, dt, 2 dt, ... (k of them)."""
        if delta_t < 0:
            raise ValueError("delta_t must be non-negative")
        return cls(float(omega), float(delta_t), tuple(i * float(delta_t) for i in range(k)))

    @classmethod
    def from_angle(cls, omega_dt: float, k: int = 3) -> EvolutionParams:
        """Grid parameterized by the dimensionless phase omega*dt (|omega| = 1).

        A negative phase is carried by the sign of omega so that times stay ordered.
        """
        omega = -1.0 if omega_dt < 0 else 1.0
        return cls.equally_spaced(omega, abs(omega_dt), k)

    @property
    def k(self) -> int:
        return len(self.times)

    @property
    def omega_dt(self) -> float:
        return self.omega * self.delta_t

    def phase(self, index: int) -> float:
        """omega * t_index for a 1-based index."""
        if not 1 <= index <= self.k:
            raise ValueError(f"time index {index} outside 1..{self.k}")
        return self.omega * self.times[index - 1]

    def require_default_grid(self) -> None:
        if self.k != 3 or not np.allclose(
            self.times, (0.0, self.delta_t, 2 * self.delta_t), rtol=0, atol=1e-12
        ):
            raise ValueError(f"expected the grid (0, dt, 2dt), got {self.times}")


@dataclass(frozen=True, eq=False)
class DichotomicObservable:
    """Hermitian 2x2 involution, spectrum {+1, -1}."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape != (2, 2):
            raise ShapeError(f"dichotomic observable must be 2x2, got {m.shape}")
        if np.linalg.norm(m - m.conj().T) > HERMITICITY_TOL:
            raise ValidationError("observable is not Hermitian")
        if np.linalg.norm(m @ m - identity(2)) > HERMITICITY_TOL:
            raise ValidationError("observable does not square to the identity")
        if abs(np.trace(m)) > HERMITICITY_TOL:
            # +-I are involutions too, but they are not dichotomic
            raise ValidationError("observable must have both eigenvalues +1 and -1")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def along(cls, n) -> DichotomicObservable:
        """n . sigma for a (not necessarily normalized) real direction n."""
        n = np.asarray(n, dtype=float)
        n = n / np.linalg.norm(n)
        return cls(n[0] * pauli("x") + n[1] * pauli("y") + n[2] * pauli("z"))


def observable_at_time(params: EvolutionParams, index: int) -> DichotomicObservable:
    theta = params.phase(index)
    return DichotomicObservable(np.cos(theta) * pauli("z") + np.sin(theta) * pauli("y"))


def observables(params: EvolutionParams) -> list[DichotomicObservable]:
    return [observable_at_time(params, i) for i in range(1, params.k + 1)]


def projector(obs: DichotomicObservable, outcome: int) -> np.ndarray:
    """(I + outcome X)/2, the projector onto the ``outcome`` eigenspace."""
    if outcome not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")
    return 0.5 * (identity(2) + outcome * obs.matrix)


def lueders_update(rho: DensityMatrix, proj) -> tuple[float, DensityMatrix | None]:
    """Outcome probability and post-measurement state; state is None for a null branch."""
    p_mat = as_matrix(proj)
    if p_mat.shape != rho.matrix.shape:
        raise ShapeError(f"projector {p_mat.shape} does not match state {rho.matrix.shape}")
    post = p_mat @ rho.matrix @ p_mat
    # Tr[P rho P] = Tr[rho P]; normalizing by the former keeps tiny branches at unit trace
    prob = np.trace(post).real
    if prob <= DEGENERACY_TOL:
        return max(prob, 0.0), None
    post = post / prob
    return min(prob, 1.0), DensityMatrix(0.5 * (post + post.conj().T))


def outcome_tuples(k: int) -> list[tuple[int, ...]]:
    """All of {+1,-1}^k, x_1 most significant, +1 first."""
    return list(itertools.product((1, -1), repeat=k))


def outcome_index(outcome: Sequence[int]) -> int:
    idx = 0
    for x in outcome:
        if x not in (1, -1):
            raise ValueError(f"outcome entries must be +1 or -1, got {x!r}")
        idx = (idx << 1) | (x == -1)
    return idx


def outcome_label(outcome: Sequence[int]) -> str:
    return "".join("p" if x == 1 else "m" for x in outcome)


class _Distribution:
    """Real weights over {+1,-1}^k stored densely in outcome-enumeration order."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float).ravel()
        k = w.size.bit_length() - 1
        if w.size < 2 or w.size != 2**k:
            raise ShapeError(f"need 2^k weights, got {w.size}")
        if not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite")
        if abs(w.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"weights sum to {w.sum():.15g}, expected 1")
        w = self._check_weights(w)
        w.flags.writeable = False
        self._weights = w
        self._k = k

    def _check_weights(self, w: np.ndarray) -> np.ndarray:
        return w.copy()

    @property
    def k(self) -> int:
        return self._k

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    def __getitem__(self, outcome: Sequence[int]) -> float:
        if len(outcome) != self._k:
            raise ValueError(f"expected an outcome of length {self._k}")
        return float(self._weights[outcome_index(outcome)])

    def items(self):
        return zip(outcome_tuples(self._k), self._weights.tolist())

    def as_tensor(self) -> np.ndarray:
        """Weights reshaped to (2,)*k; axis i is x_{i+1}, position 0 is +1."""
        return self._weights.reshape((2,) * self._k)

    def __repr__(self) -> str:
        body = ", ".join(f"{outcome_label(o)}={w:.6g}" for o, w in self.items())
        return f"{type(self).__name__}(k={self._k}, {body})"


class JointDistribution(_Distribution):
    """A genuine (nonnegative) probability distribution over dichotomic outcomes."""

    def _check_weights(self, w):
        if np.any(w < -WEIGHT_TOL) or np.any(w > 1 + WEIGHT_TOL):
            raise ValidationError("probabilities must lie in [0, 1]")
        return np.clip(w, 0.0, 1.0)


def sequential_joint_distribution(
    rho: DensityMatrix, observables: Sequence[DichotomicObservable]
) -> JointDistribution:
    """Joint outcome statistics of measuring ``observables`` one after another.

    Each weight is Tr[P_k ... P_1 rho P_1 ... P_k], accumulated along the
    branch as a product of Lüders-rule outcome probabilities.
    """
    k = len(observables)
    if not 1 <= k <= MAX_CHAIN:
        raise ValueError(f"chain length must be in 1..{MAX_CHAIN}, got {k}")
    if rho.matrix.shape != (2, 2):
        raise ShapeError("sequential chains act on a single qubit")
    projs = [(projector(o, 1), projector(o, -1)) for o in observables]

    weights = np.zeros(2**k)
    # depth-first over branches; a null branch leaves its whole subtree at 0
    stack = [(0, 0, 1.0, rho)]
    while stack:
        depth, idx, prob, state = stack.pop()
        if depth == k:
            weights[idx] = prob
            continue
        for bit, proj in enumerate(projs[depth]):
            p, post = lueders_update(state, proj)
            if post is not None:
                stack.append((depth + 1, (idx << 1) | bit, prob * p, post))
    return JointDistribution(weights)


def analytic_two_time(params: EvolutionParams, i: int, j: int, xi: int, xj: int) -> float:
    """1/4 [1 + xi xj cos(omega (t_j - t_i))] for the maximally mixed initial state."""
    if not i < j:
        raise ValueError(f"need i < j, got i={i}, j={j}")
    if xi not in (1, -1) or xj not in (1, -1):
        raise ValueError("outcomes must be +1 or -1")
    dphi = params.phase(j) - params.phase(i)
    return 0.25 * (1 + xi * xj * np.cos(dphi))


def analytic_direct_ttjp(params: EvolutionParams) -> JointDistribution:
    params.require_default_grid()
    c = np.cos(params.omega_dt)
    same = (1 + c) ** 2 / 8
    flip = (1 - c**2) / 8
    alt = (1 - c) ** 2 / 8
    table = {
        (1, 1, 1): same, (-1, -1, -1): same,
        (1, -1, 1): alt, (-1, 1, -1): alt,
    }
    return JointDistribution([table.get(o, flip) for o in outcome_tuples(3)])


def marginalize(dist, keep: Iterable[int]):
    """Sum out every variable not in ``keep`` (1-based); returns the same distribution type."""
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep must name at least one variable")
    if keep[0] < 1 or keep[-1] > dist.k:
        raise ValueError(f"variable indices must lie in 1..{dist.k}, got {keep}")
    drop = tuple(i for i in range(dist.k) if i + 1 not in keep)
    return type(dist)(dist.as_tensor().sum(axis=drop).ravel())


@dataclass(frozen=True)
class MarginalConsistencyRow:
    outcome: tuple[int, int]
    two_time: float
    marginalized: float

    @property
    def difference(self) -> float:
        return abs(self.marginalized - self.two_time)


@dataclass(frozen=True)
class MarginalConsistencyReport:
    omega_dt: float
    rows: tuple[MarginalConsistencyRow, ...]

    @property
    def max_difference(self) -> float:
        return max(r.difference for r in self.rows)

    def consistent(self, tol: float = 1e-10) -> bool:
        return self.max_difference <= tol


def marginal_consistency_report(params: EvolutionParams) -> MarginalConsistencyReport:
    """Compare P(x1, x3) from a two-time experiment with sum_x2 P_d(x1, x2, x3)."""
    params.require_default_grid()
    direct = sequential_joint_distribution(DensityMatrix.maximally_mixed(1), observables(params))
    marg = marginalize(direct, {1, 3})
    rows = tuple(
        MarginalConsistencyRow((x1, x3), analytic_two_time(params, 1, 3, x1, x3), marg[(x1, x3)])
        for x1, x3 in outcome_tuples(2)
    )
    return MarginalConsistencyReport(params.omega_dt, rows)
