"""Moment inversion versus direct joint probabilities in sequential qubit measurements."""

from .circuits import (
    INRM_VARIANTS,
    AncillaReadout,
    Circuit,
    InrmVariant,
    build_inrm_circuit,
    build_moussa_circuit,
    extract_ttjp_inrm,
    moussa_moment,
    moussa_moment_vector,
    pseudopure_state,
    run_circuit,
)
from .moments import (
    MomentVector,
    QuasiDistribution,
    analytic_moment_inverted_ttjp,
    incompatibility_gap,
    invert_moments,
    moments_from_distribution,
    quantum_moment_assembly,
)
from .qcore import DensityMatrix, ShapeError, UnitaryOperator, ValidationError
from .sequential import (
    DichotomicObservable,
    EvolutionParams,
    JointDistribution,
    analytic_direct_ttjp,
    analytic_two_time,
    marginal_consistency_report,
    marginalize,
    observable_at_time,
    sequential_joint_distribution,
)

__version__ = "0.1.0"
