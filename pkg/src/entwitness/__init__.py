"""Optimal entanglement witnesses from Procrustean distillation of photon pairs."""

__version__ = "0.1.0"

from .distill import DistillationResult, distill_iterate, distill_iterate_sampled, normal_form
from .estimators import OptimalWitness, ProcrusteanDistiller, check_states
from .oracle import EfficiencyReport, efficiency_compare, qst_reconstruct, wootters_concurrence
from .pipeline import ExperimentConfig, PipelineResult, measure_witness, run_experiment
from .qstate import InvalidStateError, NonPhysicalStateWarning, StokesTensor, parse_state, stokes_tensor
from .slocc import CompositeArmOperator, ExtinctionError, LocalFilter
from .witness import WitnessReport, best_witness_bound, lambda_svd, materialize_witness, witness_value

__all__ = [
    "__version__",
    "CompositeArmOperator",
    "DistillationResult",
    "EfficiencyReport",
    "ExperimentConfig",
    "ExtinctionError",
    "InvalidStateError",
    "LocalFilter",
    "NonPhysicalStateWarning",
    "OptimalWitness",
    "PipelineResult",
    "ProcrusteanDistiller",
    "StokesTensor",
    "WitnessReport",
    "best_witness_bound",
    "check_states",
    "distill_iterate",
    "distill_iterate_sampled",
    "efficiency_compare",
    "lambda_svd",
    "materialize_witness",
    "measure_witness",
    "normal_form",
    "parse_state",
    "qst_reconstruct",
    "run_experiment",
    "stokes_tensor",
    "witness_value",
    "wootters_concurrence",
]
