import os

from hypothesis import settings

from qrcut.circuit import CircuitBuilder
from qrcut.dag import build_dag
from qrcut.model import SolverConfig, build_model, solution_from_assignment
from qrcut.plan import extract_subcircuits, schedule_plan

settings.register_profile("ci", max_examples=40, deadline=None)
settings.register_profile("dev", max_examples=15, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


def circuit(width, *gates, observable=None):
    """circuit(3, ("h", 0), ("cx", 0, 1), ("rz", 2, 0.5)); trailing floats are params."""
    b = CircuitBuilder(width)
    for g in gates:
        name, rest = g[0], g[1:]
        qubits = tuple(x for x in rest if isinstance(x, int))
        params = tuple(x for x in rest if isinstance(x, float))
        b.add(name, *qubits, params=params)
    return b.build(observable)


def slots_by_rule(d, rule):
    """Port->slot map from rule(qubit, layer)."""
    return {(n.id, p): rule(q, n.layer) for n in d.nodes for p, q in enumerate(n.qubits)}


def split_nodes(d, port_slot):
    return [n.id for n in d.nodes if n.node_class == "V" and port_slot[(n.id, 0)] != port_slot[(n.id, 1)]]


def hand_plan(c, rule, N, gate_cuts=False):
    """Model, solution and scheduled plan for a hand-chosen assignment."""
    d = build_dag(c, gate_cut_enabled=gate_cuts)
    m = build_model(d, SolverConfig(D=c.width, N=N, gate_cut_enabled=gate_cuts))
    ps = slots_by_rule(d, rule)
    sol = solution_from_assignment(m, ps, split_nodes(d, ps))
    plan = schedule_plan(extract_subcircuits(d, sol.port_slot, sol.gate_cuts, N), N)
    return m, sol, plan
