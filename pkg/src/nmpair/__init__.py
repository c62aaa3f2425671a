"""Exact weak-coupling dynamics of two qubits in a common vacuum field."""
from .entanglement import (ConcurrenceSeries, EntanglementClass, SuddenDeathReport, concurrence, concurrence_series,
                           detect_sudden_death)
from .errors import ConsistencyError, DomainError, NumericalError, NumericalRangeError, UsageError
from .evolution import Basis, DensityMatrix4, Trajectory, propagate, propagate_grid
from .markov import compare_markov, ficek_tanas_elements, transfer_matrix, transfer_matrix_evolve
from .master_eq import GeneratorSource, alpha_coefficients, integrate_master
from .propagator import PropagatorKernel, eval_kappa_closed, eval_kappa_exact, eval_mu_nu, eval_u_v, evaluate_kernel
from .rates import Rates, SystemParams, cin_integral, compute_rates, rates_with_sigma_override, sine_integral
from .scenarios import ScenarioKind, ScenarioSpec, decoherence_report, evolve_scenario, reduce_qubit

__all__ = [
    "Basis", "ConcurrenceSeries", "ConsistencyError", "DensityMatrix4", "DomainError", "EntanglementClass",
    "GeneratorSource", "NumericalError", "NumericalRangeError", "PropagatorKernel", "Rates", "ScenarioKind",
    "ScenarioSpec", "SuddenDeathReport", "SystemParams", "Trajectory", "UsageError", "alpha_coefficients",
    "cin_integral", "compare_markov", "compute_rates", "concurrence", "concurrence_series", "decoherence_report",
    "detect_sudden_death", "eval_kappa_closed", "eval_kappa_exact", "eval_mu_nu", "eval_u_v", "evaluate_kernel",
    "evolve_scenario", "ficek_tanas_elements", "integrate_master", "propagate", "propagate_grid",
    "rates_with_sigma_override", "reduce_qubit", "sine_integral", "transfer_matrix", "transfer_matrix_evolve",
]
