"""Invariant suite run by ``seqmoments selftest``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import circuits, moments, sequential
from .qcore import DensityMatrix
from .sequential import EvolutionParams, JointDistribution, outcome_tuples

GRID = np.linspace(0.0, np.pi, 100)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def random_distribution(k: int, rng: np.random.Generator) -> JointDistribution:
    w = rng.random(2**k)
    # sprinkle exact zeros so the boundary of the simplex is exercised too
    w[rng.random(2**k) < 0.2] = 0.0
    if w.sum() == 0:
        w[0] = 1.0
    return JointDistribution(w / w.sum())


def random_bloch(rng: np.random.Generator, inside: bool = True) -> np.ndarray:
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return v * rng.random() ** (1 / 3) if inside else v


def random_state(rng: np.random.Generator) -> DensityMatrix:
    return DensityMatrix.from_bloch(random_bloch(rng))


def random_observable(rng: np.random.Generator) -> sequential.DichotomicObservable:
    return sequential.DichotomicObservable.along(random_bloch(rng, inside=False))


def _max_err(pairs) -> float:
    return max((abs(a - b) for a, b in pairs), default=0.0)


def check_round_trip(rng: np.random.Generator, count: int = 1000) -> CheckResult:
    err = 0.0
    for i in range(count):
        p = random_distribution(1 + i % 6, rng)
        back = moments.invert_moments(moments.moments_from_distribution(p))
        err = max(err, float(np.max(np.abs(back.weights - p.weights))))
    return CheckResult("moment inversion round trip, k=1..6", err <= 1e-12, f"max error {err:.2e} over {count} distributions")


def check_forward_round_trip(rng: np.random.Generator, count: int = 200) -> CheckResult:
    err = 0.0
    for i in range(count):
        k = 1 + i % 6
        values = rng.uniform(-1, 1, 2**k)
        values[0] = 1.0
        mv = moments.MomentVector(values)
        back = moments.moments_from_distribution(moments.invert_moments(mv))
        err = max(err, float(np.max(np.abs(back.values - mv.values))))
    return CheckResult("moments -> quasi -> moments round trip", err <= 1e-12, f"max error {err:.2e}")


def check_two_time() -> CheckResult:
    rho = DensityMatrix.maximally_mixed(1)
    err = 0.0
    for a in GRID:
        p = EvolutionParams.from_angle(a)
        for i, j in ((1, 2), (2, 3), (1, 3)):
            dist = sequential.sequential_joint_distribution(
                rho, [sequential.observable_at_time(p, i), sequential.observable_at_time(p, j)]
            )
            err = max(err, _max_err(
                (w, sequential.analytic_two_time(p, i, j, *o)) for o, w in dist.items()
            ))
    return CheckResult("two-time Lüders vs closed form", err <= 1e-12, f"max error {err:.2e}")


def check_direct_ttjp() -> CheckResult:
    rho = DensityMatrix.maximally_mixed(1)
    err = 0.0
    for a in GRID:
        p = EvolutionParams.from_angle(a)
        d = sequential.sequential_joint_distribution(rho, sequential.observables(p))
        err = max(err, float(np.max(np.abs(d.weights - sequential.analytic_direct_ttjp(p).weights))))
    return CheckResult("three-time Lüders vs closed form", err <= 1e-12, f"max error {err:.2e}")


def check_inverted_ttjp() -> CheckResult:
    err = 0.0
    for a in GRID:
        p = EvolutionParams.from_angle(a)
        q = moments.invert_moments(moments.quantum_moment_assembly(p))
        err = max(err, float(np.max(np.abs(q.weights - moments.analytic_moment_inverted_ttjp(p).weights))))
    return CheckResult("moment-inverted TTJP vs closed form", err <= 1e-12, f"max error {err:.2e}")


def check_gap_and_negativity() -> CheckResult:
    gap_err, neg_err, all_negative = 0.0, 0.0, True
    for a in GRID:
        rep = moments.incompatibility_gap(EvolutionParams.from_angle(a))
        gap_err = max(gap_err, abs(rep.max_gap - np.sin(a) ** 2 / 8))
        if 0 < a < np.pi / 2:
            c = np.cos(a)
            neg_err = max(neg_err, abs(rep.min_quasi_weight - c * (c - 1) / 4))
            all_negative &= rep.negative
    ok = gap_err <= 1e-10 and neg_err <= 1e-12 and all_negative
    return CheckResult(
        "incompatibility gap and negativity",
        ok,
        f"gap error {gap_err:.2e}, min-weight error {neg_err:.2e}, negative on (0, pi/2): {all_negative}",
    )


def check_marginals() -> CheckResult:
    rho = DensityMatrix.maximally_mixed(1)
    gap_err, x3_err = 0.0, 0.0
    for a in GRID:
        p = EvolutionParams.from_angle(a)
        rep = sequential.marginal_consistency_report(p)
        expected = np.sin(a) ** 2 / 4
        gap_err = max(gap_err, _max_err((r.difference, expected) for r in rep.rows if r.outcome[0] == r.outcome[1]))
        direct = sequential.sequential_joint_distribution(rho, sequential.observables(p))
        m12 = sequential.marginalize(direct, {1, 2})
        x3_err = max(x3_err, _max_err((w, sequential.analytic_two_time(p, 1, 2, *o)) for o, w in m12.items()))
    ok = gap_err <= 1e-10 and x3_err <= 1e-12
    return CheckResult("marginal (in)consistency", ok, f"x2-gap error {gap_err:.2e}, x3-marginal error {x3_err:.2e}")


def check_chain_rule(rng: np.random.Generator, count: int = 200) -> CheckResult:
    err = 0.0
    for _ in range(count):
        rho = random_state(rng)
        x1, x2, x3 = (random_observable(rng) for _ in range(3))
        seq = sequential.sequential_joint_distribution
        d = seq(rho, [x1, x2, x3])
        p12, p23, p2 = seq(rho, [x1, x2]), seq(rho, [x2, x3]), seq(rho, [x2])
        for o in outcome_tuples(3):
            if p2[(o[1],)] > 1e-12:
                lhs = d[o] * p2[(o[1],)]
                rhs = p12[o[:2]] * p23[o[1:]]
                err = max(err, abs(lhs - rhs))
    return CheckResult("chain-rule identity, random states", err <= 1e-12, f"max error {err:.2e}")


def check_inrm(epsilons=(1.0, 0.5, 1e-3)) -> CheckResult:
    errs = {}
    for eps in epsilons:
        e = 0.0
        for a in GRID:
            p = EvolutionParams.from_angle(a)
            got = circuits.extract_ttjp_inrm(p, eps).weights
            e = max(e, float(np.max(np.abs(got - sequential.analytic_direct_ttjp(p).weights))))
        errs[eps] = e
    ok = all(e <= (1e-10 if eps == 1.0 else 1e-8) for eps, e in errs.items())
    detail = ", ".join(f"eps={eps:g}: {e:.2e}" for eps, e in errs.items())
    return CheckResult("INRM circuit vs direct TTJP", ok, detail)


def check_moussa(rng: np.random.Generator, count: int = 200) -> CheckResult:
    sym_err = 0.0
    for i in range(count):
        rho = random_state(rng)
        obs = [random_observable(rng) for _ in range(1 + i % 4)]
        fwd = np.linalg.multi_dot([o.matrix for o in obs] + [np.eye(2)])
        rev = np.linalg.multi_dot([o.matrix for o in reversed(obs)] + [np.eye(2)])
        sym = 0.5 * np.trace(rho.matrix @ (fwd + rev)).real
        sym_err = max(sym_err, abs(circuits.moussa_moment(obs, rho).real - sym))
    grid_err = 0.0
    for a in GRID:
        p = EvolutionParams.from_angle(a)
        mv = circuits.moussa_moment_vector(p)
        grid_err = max(grid_err, float(np.max(np.abs(mv.values - moments.quantum_moment_assembly(p).values))))
    ok = sym_err <= 1e-12 and grid_err <= 1e-10
    return CheckResult("Moussa readout", ok, f"symmetrized-trace error {sym_err:.2e}, vs assembly {grid_err:.2e}")


def run_all(seed: int = 2024) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    suite: list[Callable[[], CheckResult]] = [
        lambda: check_round_trip(rng),
        lambda: check_forward_round_trip(rng),
        check_two_time,
        check_direct_ttjp,
        check_inverted_ttjp,
        check_gap_and_negativity,
        check_marginals,
        lambda: check_chain_rule(rng),
        check_inrm,
        lambda: check_moussa(rng),
    ]
    results = []
    for check in suite:
        try:
            results.append(check())
        except Exception as exc:  # a crash is a failed property, not a crashed suite
            name = getattr(check, "__name__", "check")
            results.append(CheckResult(name, False, f"raised {type(exc).__name__}: {exc}"))
    return results
