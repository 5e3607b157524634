"""Command-line front end: ``sweep``, ``compare`` and ``selftest``.

Exit status is 0 on success, 1 on a computation or property failure and 2 on
a usage error.
"""

from __future__ import annotations

import argparse
import csv
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import checks, circuits
from .moments import (
    MomentVector,
    QuasiDistribution,
    analytic_moments,
    invert_moments,
    quantum_moment_assembly,
    sample_distribution,
)
from .qcore import DensityMatrix, ValidationError
from .sequential import (
    EvolutionParams,
    JointDistribution,
    analytic_direct_ttjp,
    marginal_consistency_report,
    marginalize,
    observables,
    outcome_label,
    outcome_tuples,
    sequential_joint_distribution,
)

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

ENGINES = ("analytic", "lueders", "inrm", "moments", "moussa")
# first selected engine in each list supplies the CSV column; the rest are cross-checks
DIRECT_SOURCES = ("lueders", "inrm", "analytic")
MOMENT_SOURCES = ("moments", "moussa", "analytic")
CROSS_CHECK_TOL = 1e-8

MOMENT_LABELS = ("100", "010", "001", "110", "011", "101", "111")
CSV_COLUMNS = (
    ["omega_dt"]
    + [f"pd_{outcome_label(o)}" for o in outcome_tuples(3)]
    + [f"pmu_{outcome_label(o)}" for o in outcome_tuples(3)]
    + [f"mu_{b}" for b in MOMENT_LABELS]
    + ["max_gap", "min_quasi", "marginal_gap"]
)


class UsageError(Exception):
    pass


class ComputationError(Exception):
    pass


_ANGLE = re.compile(r"^\s*(?:([-+]?[0-9.]+(?:e[-+]?\d+)?)\s*\*?\s*)?(-?)pi\s*(?:/\s*([0-9.]+))?\s*$", re.I)


def parse_angle(text: str) -> float:
    """Parse a float or a multiple of pi such as ``pi/3``, ``2*pi/3``, ``-pi``."""
    text = str(text).strip()
    try:
        value = float(text)
    except ValueError:
        m = _ANGLE.match(text)
        if not m:
            raise UsageError(f"cannot parse angle {text!r}") from None
        coeff = float(m.group(1)) if m.group(1) else 1.0
        value = coeff * math.pi * (-1 if m.group(2) else 1) / (float(m.group(3)) if m.group(3) else 1.0)
    if not math.isfinite(value):
        raise UsageError(f"angle must be finite, got {text!r}")
    return value


@dataclass
class SweepConfig:
    start: float = 0.0
    end: float = math.pi
    points: int = 101
    epsilon: float = 1.0
    engines: tuple[str, ...] = ENGINES
    shots: int | None = None
    seed: int = 0
    out: Path | None = None
    omega: float | None = None

    def validate(self) -> None:
        if self.points < 2:
            raise UsageError("--points must be at least 2")
        if not self.start < self.end:
            raise UsageError("--start must be smaller than --end")
        if not 0 < self.epsilon <= 1:
            raise UsageError("--epsilon must lie in (0, 1]")
        if self.shots is not None and self.shots < 1:
            raise UsageError("--shots must be at least 1")
        if self.omega is not None and not self.omega > 0:
            raise UsageError("--omega must be positive")
        unknown = set(self.engines) - set(ENGINES)
        if unknown:
            raise UsageError(f"unknown engine(s): {', '.join(sorted(unknown))}")
        if not any(e in self.engines for e in DIRECT_SOURCES):
            raise UsageError("need at least one of analytic, lueders, inrm for the direct TTJP")
        if not any(e in self.engines for e in MOMENT_SOURCES):
            raise UsageError("need at least one of analytic, moments, moussa for the moments")

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.end, self.points)


@dataclass
class SweepRow:
    omega_dt: float
    direct: JointDistribution
    moments: MomentVector
    inverted: QuasiDistribution = field(init=False)

    def __post_init__(self):
        self.inverted = invert_moments(self.moments)

    @property
    def max_gap(self) -> float:
        return float(np.max(np.abs(self.direct.weights - self.inverted.weights)))

    @property
    def min_quasi(self) -> float:
        return float(np.min(self.inverted.weights))

    @property
    def marginal_gap(self) -> float:
        # the inverted quasi-distribution reproduces the measured (x1, x3) statistics exactly
        d13 = marginalize(self.direct, {1, 3}).weights
        q13 = marginalize(self.inverted, {1, 3}).weights
        return float(np.max(np.abs(d13 - q13)))

    def values(self) -> list[float]:
        mu = [self.moments[b] for b in MOMENT_LABELS]
        return (
            [self.omega_dt]
            + self.direct.weights.tolist()
            + self.inverted.weights.tolist()
            + mu
            + [self.max_gap, self.min_quasi, self.marginal_gap]
        )


def _direct_engine(name: str, params: EvolutionParams, epsilon: float) -> JointDistribution:
    if name == "lueders":
        return sequential_joint_distribution(DensityMatrix.maximally_mixed(1), observables(params))
    if name == "inrm":
        return circuits.extract_ttjp_inrm(params, epsilon)
    return analytic_direct_ttjp(params)


def _moment_engine(name: str, params: EvolutionParams, epsilon: float) -> MomentVector:
    if name == "moments":
        return quantum_moment_assembly(params)
    if name == "moussa":
        return circuits.moussa_moment_vector(params, epsilon=epsilon)
    return analytic_moments(params)


def _sample_moments(exact: MomentVector, shots: int, rng: np.random.Generator) -> MomentVector:
    # each moment is the mean of a +-1 product outcome, i.e. a binomial estimate
    p_plus = np.clip((1 + exact.values[1:]) / 2, 0.0, 1.0)
    est = 2 * rng.binomial(shots, p_plus) / shots - 1
    return MomentVector(np.concatenate(([1.0], est)))


def compute_row(
    omega_dt: float, config: SweepConfig, rng: np.random.Generator | None = None
) -> SweepRow:
    params = EvolutionParams.from_angle(omega_dt)
    direct_names = [e for e in DIRECT_SOURCES if e in config.engines]
    moment_names = [e for e in MOMENT_SOURCES if e in config.engines]

    direct = {n: _direct_engine(n, params, config.epsilon) for n in direct_names}
    if config.shots is None:
        mus = {n: _moment_engine(n, params, config.epsilon) for n in moment_names}
        _cross_check(omega_dt, {n: d.weights for n, d in direct.items()}, "direct TTJP")
        _cross_check(omega_dt, {n: m.values for n, m in mus.items()}, "moments")
        return SweepRow(omega_dt, direct[direct_names[0]], mus[moment_names[0]])

    pd = sample_distribution(direct[direct_names[0]], config.shots, rng)
    if moment_names[0] == "moments":
        mu = quantum_moment_assembly(params, shots=config.shots, rng=rng)
    else:
        mu = _sample_moments(_moment_engine(moment_names[0], params, config.epsilon), config.shots, rng)
    return SweepRow(omega_dt, pd, mu)


def _cross_check(omega_dt: float, results: dict, what: str) -> None:
    names = list(results)
    for other in names[1:]:
        err = float(np.max(np.abs(results[other] - results[names[0]])))
        if err > CROSS_CHECK_TOL:
            raise ComputationError(
                f"{what}: engine {other!r} disagrees with {names[0]!r} by {err:.3g} at omega_dt={omega_dt:.17g}"
            )


def _fmt(x: float) -> str:
    return format(float(x) + 0.0, ".17g")


def run_sweep(config: SweepConfig) -> list[SweepRow]:
    config.validate()
    grid = config.grid()
    rngs = [None] * len(grid)
    if config.shots is not None:
        # one independent stream per grid point keeps rows reproducible in isolation
        rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(len(grid))]
    return [compute_row(float(a), config, rng) for a, rng in zip(grid, rngs)]


def write_csv(rows: Sequence[SweepRow], config: SweepConfig, stream) -> None:
    header = list(CSV_COLUMNS)
    if config.omega is not None:
        header.append("delta_t")
    if config.shots is not None:
        header.append("shots")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        cells = [_fmt(v) for v in row.values()]
        if config.omega is not None:
            cells.append(_fmt(row.omega_dt / config.omega))
        if config.shots is not None:
            cells.append(str(config.shots))
        writer.writerow(cells)


def cmd_sweep(config: SweepConfig) -> int:
    rows = run_sweep(config)
    if config.out is None:
        write_csv(rows, config, sys.stdout)
        return EXIT_OK
    try:
        with open(config.out, "w", newline="", encoding="utf-8") as fh:
            write_csv(rows, config, fh)
    except OSError as exc:
        print(f"error: cannot write {config.out}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"wrote {len(rows)} rows to {config.out}", file=sys.stderr)
    return EXIT_OK


def cmd_compare(omega_dt: float, epsilon: float = 1.0, omega: float | None = None, out=None) -> int:
    out = out or sys.stdout
    if not math.isfinite(omega_dt):
        raise UsageError("omega_dt must be finite")
    if not 0 < epsilon <= 1:
        raise UsageError("--epsilon must lie in (0, 1]")
    params = EvolutionParams.from_angle(omega_dt)
    row = SweepRow(omega_dt, _direct_engine("lueders", params, epsilon), quantum_moment_assembly(params))

    def say(line: str = "") -> None:
        print(line, file=out)

    say(f"omega*dt = {omega_dt:.10g} rad" + (f"  (dt = {omega_dt / omega:.6g} at omega = {omega:g} rad/s)" if omega else ""))
    say()
    say(f"{'outcome':>10} {'P_d':>12} {'P_mu':>12} {'P_d - P_mu':>12}")
    for o, pd, pm in zip(outcome_tuples(3), row.direct.weights, row.inverted.weights):
        label = "(" + ",".join(f"{x:+d}" for x in o) + ")"
        say(f"{label:>10} {pd:12.8f} {pm:12.8f} {pd - pm:12.8f}")
    say(f"max |P_d - P_mu| = {row.max_gap:.10g}")
    say()

    rep = marginal_consistency_report(params)
    say("marginal consistency, P(x1,x3) vs sum_x2 P_d(x1,x2,x3):")
    for r in rep.rows:
        say(f"  ({r.outcome[0]:+d},{r.outcome[1]:+d})  two-time {r.two_time:.8f}  marginal {r.marginalized:.8f}  diff {r.difference:.8f}")
    if rep.consistent():
        say("  marginals are consistent: the moments and the direct TTJP are compatible")
    else:
        say(f"  marginals are inconsistent (max diff {rep.max_difference:.8g})")
    say()

    if row.min_quasi < -1e-12:
        worst = outcome_tuples(3)[int(np.argmin(row.inverted.weights))]
        say(f"negativity certificate: P_mu{worst} = {row.min_quasi:.10g} < 0; no joint distribution reproduces these moments")
    else:
        say(f"no negativity: min P_mu = {row.min_quasi:.10g}")
    say()

    inrm = circuits.extract_ttjp_inrm(params, epsilon)
    analytic = analytic_direct_ttjp(params)
    moussa = circuits.moussa_moment_vector(params, epsilon=epsilon)
    say(f"circuit residuals (epsilon = {epsilon:g}):")
    say(f"  INRM vs analytic TTJP:        {np.max(np.abs(inrm.weights - analytic.weights)):.3e}")
    say(f"  Lueders vs analytic TTJP:     {np.max(np.abs(row.direct.weights - analytic.weights)):.3e}")
    say(f"  Moussa vs assembled moments:  {np.max(np.abs(moussa.values - row.moments.values)):.3e}")
    return EXIT_OK


def cmd_selftest(out=None) -> int:
    out = out or sys.stdout
    results = checks.run_all()
    for r in results:
        print(r.line(), file=out)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} properties passed", file=out)
    return EXIT_OK if failed == 0 else EXIT_FAILURE


def read_config_file(path: str) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _config_from(args: argparse.Namespace) -> SweepConfig:
    raw = read_config_file(args.config) if args.config else {}
    for key in ("start", "end", "points", "epsilon", "shots", "seed", "out", "engines", "omega"):
        flag = getattr(args, key)
        if flag is not None:
            raw[key] = flag
    unknown = set(raw) - set(SweepConfig.__dataclass_fields__)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")

    cfg = SweepConfig()
    try:
        if "start" in raw:
            cfg.start = parse_angle(raw["start"])
        if "end" in raw:
            cfg.end = parse_angle(raw["end"])
        if "points" in raw:
            cfg.points = int(raw["points"])
        if "epsilon" in raw:
            cfg.epsilon = float(raw["epsilon"])
        if "shots" in raw:
            cfg.shots = int(raw["shots"])
        if "seed" in raw:
            cfg.seed = int(raw["seed"])
        if "omega" in raw:
            cfg.omega = float(raw["omega"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if "out" in raw:
        cfg.out = Path(raw["out"])
    if "engines" in raw:
        cfg.engines = tuple(e.strip() for e in str(raw["engines"]).split(",") if e.strip())
    cfg.validate()
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqmoments",
        description="Moment inversion versus direct joint probabilities for sequential qubit measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="tabulate P_d, P_mu and the moments over a grid of omega*dt")
    sweep.add_argument("--start", help="first omega*dt in radians, e.g. 0 or pi/6 (default 0)")
    sweep.add_argument("--end", help="last omega*dt (default pi)")
    sweep.add_argument("--points", help="number of grid points (default 101)")
    sweep.add_argument("--epsilon", help="pseudopure purity factor for the circuit engines (default 1)")
    sweep.add_argument("--shots", help="simulate finite statistics with this many runs per experiment")
    sweep.add_argument("--seed", help="seed for --shots (default 0)")
    sweep.add_argument("--out", help="CSV output path (default stdout)")
    sweep.add_argument("--engines", help=f"comma list from {','.join(ENGINES)} (default all)")
    sweep.add_argument("--omega", help="angular frequency in rad/s; adds a delta_t column")
    sweep.add_argument("--config", help="key=value file; flags override its values")

    compare = sub.add_parser("compare", help="report P_d vs P_mu at one omega*dt")
    compare.add_argument("omega_dt", help="omega*dt in radians, e.g. 1.047 or pi/3")
    compare.add_argument("--epsilon", type=float, default=1.0)
    compare.add_argument("--omega", type=float, help="angular frequency, only used to print dt")

    sub.add_parser("selftest", help="run the invariant suite")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "sweep":
            return cmd_sweep(_config_from(args))
        if args.command == "compare":
            return cmd_compare(parse_angle(args.omega_dt), args.epsilon, args.omega)
        return cmd_selftest()
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ComputationError, ValidationError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
