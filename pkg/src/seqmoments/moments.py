"""Moments of dichotomic variables, their inversion, and the quantum moment set.

A moment vector of order k holds mu_n = <X_1^{n_1} ... X_k^{n_k}> for every
bit pattern n in {0,1}^k, indexed with n_1 as the most significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .qcore import DensityMatrix, ShapeError, ValidationError, expectation
from .sequential import (
    EvolutionParams,
    JointDistribution,
    _Distribution,
    observable_at_time,
    outcome_tuples,
    sequential_joint_distribution,
)

MOMENT_RANGE_TOL = 1e-10
NORMALIZATION_TOL = 1e-10
NEGATIVITY_TOL = 1e-12


class QuasiDistribution(_Distribution):
    """Normalized signed weights; negative entries are kept, never clipped."""


@lru_cache(maxsize=None)
def _sign_matrix(k: int) -> np.ndarray:
    # entry [outcome, n] = prod_i x_i^{n_i}, the 2^k x 2^k Sylvester-Hadamard matrix
    h = np.array([[1.0, 1.0], [1.0, -1.0]])
    out = np.ones((1, 1))
    for _ in range(k):
        out = np.kron(out, h)
    out.flags.writeable = False
    return out


class MomentVector:
    """Dense moments mu_{n_1...n_k}; the all-zero entry is exactly 1."""

    def __init__(self, values):
        v = np.array(values, dtype=float).ravel()
        k = v.size.bit_length() - 1
        if v.size < 2 or v.size != 2**k:
            raise ShapeError(f"need 2^k moments, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("moments must be finite")
        if abs(v[0] - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"mu_0...0 must equal 1, got {v[0]!r}")
        if np.any(np.abs(v) > 1 + MOMENT_RANGE_TOL):
            raise ValidationError("dichotomic moments must lie in [-1, 1]")
        v[0] = 1.0
        v.flags.writeable = False
        self._values = v
        self._k = k

    @property
    def k(self) -> int:
        return self._k

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __getitem__(self, bits) -> float:
        """Look up by bit string (``"101"``) or bit sequence (``(1, 0, 1)``)."""
        bits = [int(b) for b in bits]
        if len(bits) != self._k or any(b not in (0, 1) for b in bits):
            raise ValueError(f"expected {self._k} bits in {{0,1}}, got {bits}")
        return float(self._values[int("".join(map(str, bits)), 2)])

    def items(self):
        for i, v in enumerate(self._values.tolist()):
            yield format(i, f"0{self._k}b"), v

    def __repr__(self) -> str:
        body = ", ".join(f"mu_{b}={v:.6g}" for b, v in self.items())
        return f"MomentVector({body})"


def moments_from_distribution(dist: _Distribution) -> MomentVector:
    # sign matrix is symmetric: mu_n = sum_x (prod x_i^{n_i}) P(x)
    return MomentVector(_sign_matrix(dist.k) @ dist.weights)


def invert_moments(mv: MomentVector) -> QuasiDistribution:
    """P(x) = 2^-k sum_n (prod x_i^{n_i}) mu_n."""
    return QuasiDistribution(_sign_matrix(mv.k) @ mv.values / 2**mv.k)


def sample_distribution(
    dist: JointDistribution, shots: int, rng: np.random.Generator
) -> JointDistribution:
    """Empirical distribution of ``shots`` multinomial draws."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    p = np.clip(dist.weights, 0.0, None)
    counts = rng.multinomial(shots, p / p.sum())
    return JointDistribution(counts / shots)


def _product_moment(dist: JointDistribution) -> float:
    """<X_1 ... X_k> of a k-variable distribution, i.e. its all-ones moment."""
    return moments_from_distribution(dist).values[-1]


# bit patterns of the seven nontrivial order-3 moments and the times each experiment measures
_MOMENT_EXPERIMENTS = {
    "100": (1,),
    "010": (2,),
    "001": (3,),
    "110": (1, 2),
    "011": (2, 3),
    "101": (1, 3),
    "111": (1, 2, 3),
}


def quantum_moment_assembly(
    params: EvolutionParams,
    rho: DensityMatrix | None = None,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> MomentVector:
    """The eight moments, each from its own experiment on a fresh copy of ``rho``.

    Single moments are plain expectation values; pair and triple moments come
    from sequential measurement of exactly the observables involved. With
    ``shots`` set, every experiment is replaced by that many simulated runs
    drawn from ``rng``.
    """
    params.require_default_grid()
    rho = rho if rho is not None else DensityMatrix.maximally_mixed(1)
    if shots is not None and rng is None:
        raise ValueError("sampling mode needs an explicit random generator")

    values = np.zeros(8)
    values[0] = 1.0
    for bits, times in _MOMENT_EXPERIMENTS.items():
        obs = [observable_at_time(params, i) for i in times]
        if len(obs) == 1 and shots is None:
            mu = expectation(rho, obs[0].matrix).real
        else:
            dist = sequential_joint_distribution(rho, obs)
            if shots is not None:
                dist = sample_distribution(dist, shots, rng)
            mu = _product_moment(dist)
        values[int(bits, 2)] = mu
    return MomentVector(values)


def analytic_moments(params: EvolutionParams) -> MomentVector:
    """Closed-form moments at the maximally mixed state: only the pair moments survive."""
    params.require_default_grid()
    c1 = np.cos(params.omega_dt)
    c2 = np.cos(2 * params.omega_dt)
    values = np.zeros(8)
    values[0b000] = 1.0
    values[0b110] = values[0b011] = c1
    values[0b101] = c2
    return MomentVector(values)


def analytic_moment_inverted_ttjp(params: EvolutionParams) -> QuasiDistribution:
    params.require_default_grid()
    c1 = np.cos(params.omega_dt)
    c2 = np.cos(2 * params.omega_dt)
    same = (1 + 2 * c1 + c2) / 8
    flip = (1 - c2) / 8
    alt = (1 - 2 * c1 + c2) / 8
    table = {
        (1, 1, 1): same, (-1, -1, -1): same,
        (1, -1, 1): alt, (-1, 1, -1): alt,
    }
    return QuasiDistribution([table.get(o, flip) for o in outcome_tuples(3)])


@dataclass(frozen=True)
class GapReport:
    omega_dt: float
    direct: JointDistribution
    inverted: QuasiDistribution

    @property
    def differences(self) -> np.ndarray:
        """P_d - P_mu per outcome, in enumeration order."""
        return self.direct.weights - self.inverted.weights

    @property
    def max_gap(self) -> float:
        return float(np.max(np.abs(self.differences)))

    @property
    def min_quasi_weight(self) -> float:
        return float(np.min(self.inverted.weights))

    @property
    def negative(self) -> bool:
        """True when the inverted weights certify that no joint distribution exists."""
        return self.min_quasi_weight < -NEGATIVITY_TOL


def incompatibility_gap(params: EvolutionParams) -> GapReport:
    """Direct Lüders-chain TTJP against the TTJP inverted from the assembled moments."""
    params.require_default_grid()
    rho = DensityMatrix.maximally_mixed(1)
    obs = [observable_at_time(params, i) for i in (1, 2, 3)]
    direct = sequential_joint_distribution(rho, obs)
    inverted = invert_moments(quantum_moment_assembly(params, rho))
    return GapReport(params.omega_dt, direct, inverted)
