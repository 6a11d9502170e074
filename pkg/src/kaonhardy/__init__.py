"""Hardy-type tests of local realism with entangled neutral kaon pairs."""

from .hardy import (
    FeasibilityReport,
    HardyCertificate,
    LhvStrategy,
    Verdict,
    contradiction_verdict,
    enumerate_strategies,
    hardy_residuals,
    lhv_feasibility,
    lhv_range,
    solve_hardy_time,
)
from .kaon import (
    Basis,
    EvolutionResult,
    PhysicsParams,
    RegenParams,
    TwoKaonState,
    apply_regenerator,
    compute_R,
    compute_Rprime,
    evolve_undecayed,
    hardy_family_state,
    hardy_state,
    make_antisymmetric,
    prepare_state,
    states_equal,
    transform_basis,
)
from .measurement import (
    DetectorModel,
    JointOutcome,
    Outcome,
    ProbabilityTable,
    Setting,
    fold_detector,
    hardy_observables,
    joint_probabilities,
)
from .montecarlo import CountsTable, ExperimentConfig, StatReport, run_experiment, sample_event, significance_report

__version__ = "0.1.0"

__all__ = [
    "FeasibilityReport",
    "HardyCertificate",
    "LhvStrategy",
    "Verdict",
    "contradiction_verdict",
    "enumerate_strategies",
    "hardy_residuals",
    "lhv_feasibility",
    "lhv_range",
    "solve_hardy_time",
    "Basis",
    "EvolutionResult",
    "PhysicsParams",
    "RegenParams",
    "TwoKaonState",
    "apply_regenerator",
    "compute_R",
    "compute_Rprime",
    "evolve_undecayed",
    "hardy_family_state",
    "hardy_state",
    "make_antisymmetric",
    "prepare_state",
    "states_equal",
    "transform_basis",
    "DetectorModel",
    "JointOutcome",
    "Outcome",
    "ProbabilityTable",
    "Setting",
    "fold_detector",
    "hardy_observables",
    "joint_probabilities",
    "CountsTable",
    "ExperimentConfig",
    "StatReport",
    "run_experiment",
    "sample_event",
    "significance_report",
]
