import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqmoments.circuits import (
    INRM_VARIANTS,
    AncillaReadout,
    Circuit,
    ControlledOp,
    DelayZ,
    Encoding,
    Hadamard,
    InrmVariant,
    build_inrm_circuit,
    build_moussa_circuit,
    cnot,
    anti_cnot,
    extract_ttjp_inrm,
    inrm_experiment,
    inverse_block,
    moussa_moment,
    moussa_moment_vector,
    moussa_readout,
    pseudopure_state,
    rotated_basis_block,
    run_circuit,
)
from seqmoments.moments import quantum_moment_assembly
from seqmoments.qcore import DensityMatrix, ShapeError, ValidationError, kron, pauli, rotation
from seqmoments.sequential import (
    DichotomicObservable,
    EvolutionParams,
    observables,
    sequential_joint_distribution,
)

MIXED = DensityMatrix.maximally_mixed(1)
bloch_inside = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) <= 1)
directions = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-2)


def test_empty_circuit_is_identity():
    rho = DensityMatrix.from_bloch([0.1, 0.2, 0.3])
    np.testing.assert_allclose(run_circuit(Circuit(1, ()), rho).matrix, rho.matrix)


def test_hadamard_on_zero():
    out = run_circuit(Circuit(1, (Hadamard(0),)), DensityMatrix.basis("0"))
    np.testing.assert_allclose(out.matrix, 0.5 * np.ones((2, 2)), atol=1e-15)


def test_cnot_basis_action():
    out = run_circuit(Circuit(2, (cnot(0, 1),)), DensityMatrix.basis("10"))
    np.testing.assert_allclose(out.matrix, DensityMatrix.basis("11").matrix)
    out = run_circuit(Circuit(2, (anti_cnot(0, 1),)), DensityMatrix.basis("00"))
    np.testing.assert_allclose(out.matrix, DensityMatrix.basis("01").matrix)
    out = run_circuit(Circuit(2, (anti_cnot(0, 1),)), DensityMatrix.basis("10"))
    np.testing.assert_allclose(out.matrix, DensityMatrix.basis("10").matrix)


def test_cnot_encodes_populations_as_in_the_protocol():
    # (p0|0><0| + p1|1><1| + a|1><0| + a*|0><1|) (x) |0><0|  -> diagonal copied to the ancilla
    p0, a = 0.3, 0.2 + 0.1j
    sys_state = np.array([[p0, np.conj(a)], [a, 1 - p0]])
    rho = DensityMatrix(kron(sys_state, np.diag([1, 0])))
    out = run_circuit(Circuit(2, (cnot(0, 1),)), rho).matrix
    np.testing.assert_allclose(out.diagonal().real, [p0, 0, 0, 1 - p0])
    assert out[3, 0] == pytest.approx(a)


def test_circuit_validation():
    with pytest.raises(ValueError):
        Circuit(2, (cnot(0, 2),))
    with pytest.raises(ValueError):
        cnot(1, 1)
    with pytest.raises(ShapeError):
        run_circuit(Circuit(2, ()), MIXED)


@settings(max_examples=30, deadline=None)
@given(bloch_inside, st.lists(st.floats(-7, 7), min_size=1, max_size=6))
def test_run_circuit_preserves_trace_and_positivity(r, angles):
    gates = []
    for i, a in enumerate(angles):
        gates += [Hadamard(i % 2), DelayZ(i % 2, a), ControlledOp(i % 2, 1 - i % 2, rotation("y", a), i % 2)]
    rho = DensityMatrix(kron(DensityMatrix.from_bloch(r).matrix, np.diag([0.3, 0.7])))
    out = run_circuit(Circuit(2, tuple(gates)), rho)
    assert np.trace(out.matrix).real == pytest.approx(1, abs=1e-12)
    assert np.linalg.eigvalsh(out.matrix).min() > -1e-10


def test_pseudopure_state():
    np.testing.assert_allclose(
        pseudopure_state(1.0, 2).matrix, kron(np.eye(2) / 2, DensityMatrix.basis("00").matrix)
    )
    rho = pseudopure_state(0.5, 2)
    assert np.trace(rho.matrix).real == pytest.approx(1)
    # eigenvalues: 0.5/8 + 0.5/2 twice, 0.5/8 six times
    np.testing.assert_allclose(sorted(np.linalg.eigvalsh(rho.matrix)), sorted([0.3125] * 2 + [0.0625] * 6))
    rho = pseudopure_state(1e-5, 2)
    trace_distance = 0.5 * np.abs(np.linalg.eigvalsh(rho.matrix - np.eye(8) / 8)).sum()
    assert trace_distance <= 1e-5
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            pseudopure_state(bad, 2)


def test_rotated_block():
    p = EvolutionParams.from_angle(np.pi / 2)
    block = rotated_basis_block(1, p)
    assert Circuit(1, tuple(block)).unitary() == pytest.approx(np.eye(2))
    block = rotated_basis_block(3, p)  # omega t_3 = pi
    np.testing.assert_allclose(Circuit(1, tuple(block)).unitary(), rotation("x", np.pi).matrix, atol=1e-15)
    both = block + inverse_block(block)
    np.testing.assert_allclose(Circuit(1, tuple(both)).unitary(), np.eye(2), atol=1e-12)


@given(st.floats(-10, 10))
def test_rotated_block_measures_in_the_heisenberg_basis(a):
    p = EvolutionParams.from_angle(a, k=2)
    u = Circuit(1, tuple(rotated_basis_block(2, p))).unitary()
    x2 = observables(p)[1].matrix
    np.testing.assert_allclose(u.conj().T @ pauli("z") @ u, x2, atol=1e-12)


def test_inrm_structure():
    p = EvolutionParams.from_angle(0.4)
    c = build_inrm_circuit(InrmVariant(Encoding.CNOT, Encoding.CNOT), p)
    assert c.num_qubits == 3 and len(c) == 3 + 1 + 3 + 3 + 1 + 3 + 3
    controlled = [g for g in c.gates if isinstance(g, ControlledOp)]
    assert [(g.control, g.target, g.polarity) for g in controlled] == [(0, 1, 1), (0, 2, 1)]
    anti = build_inrm_circuit(InrmVariant(Encoding.ANTI_CNOT, Encoding.ANTI_CNOT), p)
    for g, h in zip(c.gates, anti.gates):
        if isinstance(g, ControlledOp):
            assert (h.control, h.target, h.polarity) == (g.control, g.target, 1 - g.polarity)
        else:
            assert g == h
    assert len(INRM_VARIANTS) == 4 and len(set(INRM_VARIANTS)) == 4


def test_inrm_commuting_limit_keeps_ancillas_consistent():
    p = EvolutionParams.from_angle(0.0)
    diag = inrm_experiment(InrmVariant(Encoding.CNOT, Encoding.CNOT), p)
    # system |0>: nothing fires; system |1>: both ancillas flip
    assert diag[0, 0, 0] == pytest.approx(0.5)
    assert diag[1, 1, 1] == pytest.approx(0.5)
    assert diag.sum() == pytest.approx(1)


def test_inrm_spot_values():
    d = extract_ttjp_inrm(EvolutionParams.from_angle(np.pi / 2))
    np.testing.assert_allclose(d.weights, 0.125, atol=1e-12)
    assert extract_ttjp_inrm(EvolutionParams.from_angle(np.pi / 3))[(1, 1, 1)] == pytest.approx(0.28125)
    d0 = extract_ttjp_inrm(EvolutionParams.from_angle(0.0))
    assert d0[(1, 1, 1)] == pytest.approx(0.5) and d0[(1, -1, 1)] == pytest.approx(0, abs=1e-15)


@pytest.mark.parametrize("eps", [1.0, 0.5, 1e-3])
@pytest.mark.parametrize("a", np.linspace(0, np.pi, 7))
def test_inrm_matches_lueders_chain(a, eps):
    p = EvolutionParams.from_angle(a)
    got = extract_ttjp_inrm(p, eps).weights
    want = sequential_joint_distribution(MIXED, observables(p)).weights
    np.testing.assert_allclose(got, want, atol=1e-10 if eps == 1.0 else 1e-8)


def test_moussa_structure():
    p = EvolutionParams.from_angle(0.0)
    obs = observables(p)
    c = build_moussa_circuit(obs[:1])
    assert len(c) == 1 and c.gates[0].control == 1 and c.gates[0].target == 0
    np.testing.assert_array_equal(c.gates[0].op.matrix, pauli("z"))
    c = build_moussa_circuit(obs)
    assert len(c) == 3
    assert all(np.allclose(g.op.matrix, pauli("z")) for g in c.gates)
    with pytest.raises(ValueError):
        build_moussa_circuit([])


def test_moussa_spot_values():
    assert moussa_moment([DichotomicObservable(pauli("z"))], MIXED) == pytest.approx(0)
    p = EvolutionParams.from_angle(np.pi / 3)
    obs = observables(p)
    assert moussa_moment(obs[:2], MIXED).real == pytest.approx(0.5)
    for a in (0.3, 1.1, 2.5):
        assert moussa_moment(observables(EvolutionParams.from_angle(a)), MIXED).real == pytest.approx(0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(bloch_inside, st.lists(directions, min_size=1, max_size=4))
def test_moussa_reads_the_operator_product(r, dirs):
    rho = DensityMatrix.from_bloch(r)
    obs = [DichotomicObservable.along(n) for n in dirs]
    fwd = np.eye(2)
    for o in obs:
        fwd = fwd @ o.matrix
    rev = np.eye(2)
    for o in reversed(obs):
        rev = rev @ o.matrix
    m = moussa_moment(obs, rho)
    assert m == pytest.approx(np.trace(rho.matrix @ fwd), abs=1e-12)
    assert m.real == pytest.approx(0.5 * np.trace(rho.matrix @ (fwd + rev)).real, abs=1e-12)
    ro = moussa_readout(obs, rho)
    assert abs(ro.exp_ix) <= 0.5 + 1e-12 and abs(ro.exp_iy) <= 0.5 + 1e-12


def test_moussa_pseudopure_background_is_removed():
    rho = DensityMatrix.from_bloch([0.2, -0.5, 0.4])
    obs = [DichotomicObservable.along(n) for n in ([1, 0, 1], [0, 1, 1])]
    assert moussa_moment(obs, rho, 1e-3) == pytest.approx(moussa_moment(obs, rho), abs=1e-10)


@pytest.mark.parametrize("a", np.linspace(0, np.pi, 9))
def test_moussa_vector_matches_assembly(a):
    p = EvolutionParams.from_angle(a)
    np.testing.assert_allclose(moussa_moment_vector(p).values, quantum_moment_assembly(p).values, atol=1e-10)


def test_ancilla_readout_bounds():
    with pytest.raises(ValidationError):
        AncillaReadout(0.7, 0.0)
    assert AncillaReadout(0.25, -0.25).moment == pytest.approx(0.5 + 0.5j)
