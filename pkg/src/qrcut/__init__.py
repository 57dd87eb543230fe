"""Circuit cutting with qubit reuse: wire/gate cut planning by integer
programming, instance execution, and exact reconstruction."""
from .circuit import Circuit, CircuitBuilder, Gate, ObservableSpec, emit_circuit, parse_circuit
from .dag import QrDag, build_dag
from .model import IlpModel, Solution, SolverConfig, build_model, cost_report, effective_cuts, surrogate_cost
from .plan import CutPlan, enumerate_instances, extract_subcircuits, schedule_reuse
from .reconstruct import reconstruct_expectation, reconstruct_probabilities
from .runner import run_plan
from .sim import expectation, probabilities, simulate
from .solver import SolveBudget, SolveOutcome, brute_force_solve, export_lp, solve, validate_solution

__all__ = [
    "Circuit", "CircuitBuilder", "Gate", "ObservableSpec", "emit_circuit", "parse_circuit",
    "QrDag", "build_dag",
    "IlpModel", "Solution", "SolverConfig", "build_model", "cost_report", "effective_cuts", "surrogate_cost",
    "CutPlan", "enumerate_instances", "extract_subcircuits", "schedule_reuse",
    "reconstruct_expectation", "reconstruct_probabilities", "run_plan",
    "expectation", "probabilities", "simulate",
    "SolveBudget", "SolveOutcome", "brute_force_solve", "export_lp", "solve", "validate_solution",
]
