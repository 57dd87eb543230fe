import functools
import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrcut.circuit import pauli_exp_descriptor
from qrcut.dag import build_dag
from qrcut.plan import (
    CutPlan,
    Endpoint,
    GateCutRecord,
    LogicalWire,
    PlanError,
    ReuseError,
    Subcircuit,
    build_instance,
    check_gate_conservation,
    enumerate_instances,
    extract_subcircuits,
    gate_coefficient,
    half_ops,
    instance_count,
    peak_occupancy,
    schedule_reuse,
)

from conftest import circuit, hand_plan, slots_by_rule, split_nodes

I2 = np.eye(2, dtype=complex)
PAULIS = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}


def rot(axis, t):
    return math.cos(t / 2) * I2 - 1j * math.sin(t / 2) * PAULIS[axis]


LOCAL = {
    "rz": lambda p: rot("Z", p[0]), "rx": lambda p: rot("X", p[0]), "ry": lambda p: rot("Y", p[0]),
    "x": lambda p: PAULIS["X"], "y": lambda p: PAULIS["Y"], "z": lambda p: PAULIS["Z"],
}

TEXTBOOK = {
    "cx": lambda p: np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "cz": lambda p: np.diag([1, 1, 1, -1]).astype(complex),
    "cp": lambda p: np.diag([1, 1, 1, np.exp(1j * p[0])]),
    "rzz": lambda p: np.diag(np.exp(-0.5j * p[0] * np.array([1, -1, -1, 1]))),
}


def signed_kraus(seq):
    """Single-qubit signed map as [(sign, K)], from a sequence of half ops."""
    out = [(1.0, I2)]
    for item in seq:
        if item[0] == "measure":
            p = PAULIS[item[1]]
            step = [(1.0, (I2 + p) / 2), (-1.0, (I2 - p) / 2)]
        else:
            step = [(1.0, LOCAL[item[0]](item[1]))]
        out = [(s1 * s2, k2 @ k1) for s1, k1 in out for s2, k2 in step]
    return out


def apply_expansion(name, params, rho):
    desc = pauli_exp_descriptor(name, params)
    rec = GateCutRecord(0, 0, name, desc.a1, desc.a2, desc.theta, Endpoint(0, 0, 0), Endpoint(1, 0, 0))
    total = np.zeros_like(rho)
    for i in range(1, 7):
        top, bot = signed_kraus(half_ops(rec, params, "top", i)), signed_kraus(half_ops(rec, params, "bottom", i))
        c = gate_coefficient(rec, params, i)
        for (s1, a), (s2, b) in itertools.product(top, bot):
            k = np.kron(a, b)
            total += c * s1 * s2 * k @ rho @ k.conj().T
    return total


@pytest.mark.parametrize("name,params", [("cz", ()), ("cx", ()), ("cp", (0.7,)), ("cp", (-2.1,)),
                                         ("rzz", (0.9,)), ("rzz", (math.pi / 2,))])
def test_gate_expansion_reproduces_channel(name, params):
    rng = np.random.default_rng(7)
    for _ in range(4):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        rho = np.outer(v, v.conj()) / np.vdot(v, v)
        u = TEXTBOOK[name](params)
        assert np.allclose(apply_expansion(name, params, rho), u @ rho @ u.conj().T, atol=1e-12)


def test_cz_coefficients_sum():
    rec = GateCutRecord(0, 0, "cz", "Z", "Z", math.pi / 4, Endpoint(0, 0, 0), Endpoint(1, 0, 0))
    coeffs = [gate_coefficient(rec, (), i) for i in range(1, 7)]
    assert coeffs == [0.5, 0.5, -0.5, 0.5, -0.5, 0.5]


def test_no_cut_plan_is_the_circuit():
    c = circuit(3, ("h", 0), ("cx", 0, 1), ("cx", 1, 2))
    d = build_dag(c)
    p = extract_subcircuits(d, {(n.id, q): 0 for n in d.nodes for q in n.ports})
    assert len(p.subcircuits) == 1 and instance_count(p) == 1
    assert p.subcircuits[0].gate_ids() == [0, 1, 2]
    inst = enumerate_instances(p)[0]
    assert [(op.name, op.qubits) for op in inst.ops] == [(g.name, g.qubits) for g in c.gates]
    assert inst.coefficient == 1.0 and inst.points == []


def chain_plan():
    # q0, q1 in slot 0 at layer 0; q1 moves to slot 1 at layer 1
    c = circuit(3, ("cx", 0, 1), ("cx", 1, 2))
    return hand_plan(c, lambda q, layer: 0 if q == 0 or (q, layer) == (1, 0) else 1, N=2)


def test_single_wire_cut_plan():
    m, sol, p = chain_plan()
    assert sol.k1 == 1 and len(p.wire_cuts) == 1
    w = p.wire_cuts[0]
    assert (w.qubit, w.layer) == (1, 1)
    up, down = p.subcircuits[w.upstream.subcircuit], p.subcircuits[w.downstream.subcircuit]
    assert up.ops[w.upstream.position].kind == "cut_measure"
    assert down.ops[w.downstream.position].kind == "cut_init"
    assert down.ops[0].kind == "cut_init"
    assert instance_count(p) == 7 == len(enumerate_instances(p))
    assert check_gate_conservation(p)


def test_measure_basis_ops():
    _, _, p = chain_plan()
    w = p.wire_cuts[0]
    s = w.upstream.subcircuit
    inst = build_instance(p, s, ("Y",))
    names = [op.name for op in inst.ops]
    assert names[-3:] == ["rz", "h", "measure"]
    assert inst.ops[-3].params == pytest.approx((-math.pi / 2,))
    assert inst.ops[-1].pauli == "Z" and inst.coefficient == 0.5
    inst = build_instance(p, w.downstream.subcircuit, ("i",))
    assert [op.name for op in inst.ops[:2]] == ["h", "s"]
    with pytest.raises(PlanError):
        build_instance(p, s, ("Y", "Z"))


def wire_and_gate_plan():
    """One gate cut (cz q0-q1) and one wire cut (q0 moving into the other device)."""
    c = circuit(4, ("cz", 0, 1), ("h", 3), ("cx", 1, 2), ("cx", 0, 2), ("t", 3))
    home = {0: 0, 1: 1, 2: 1, 3: 0}
    rule = lambda q, layer: 1 if q == 0 and layer >= 2 else home[q]
    return hand_plan(c, rule, N=3, gate_cuts=True)


def test_wire_plus_gate_cut_count():
    m, sol, p = wire_and_gate_plan()
    assert (sol.k1, sol.k2) == (1, 1)
    assert instance_count(p) == 3 * 6 + 4 * 6 == 42
    assert check_gate_conservation(p)
    assert all(s.physical_width <= 3 for s in p.subcircuits)


def test_extraction_errors():
    c = circuit(2, ("cx", 0, 1))
    d = build_dag(c)
    split = {(0, 0): 0, (0, 1): 1}
    with pytest.raises(PlanError):
        extract_subcircuits(d, split)
    with pytest.raises(PlanError):
        extract_subcircuits(d, {(0, 0): 0, (0, 1): 0}, gate_cuts=[0])
    sw = build_dag(circuit(2, ("swap", 0, 1)))
    with pytest.raises(PlanError):
        extract_subcircuits(sw, split, gate_cuts=[0])
    with pytest.raises(PlanError):
        extract_subcircuits(d, {(0, 0): 0})


def _sub(intervals):
    """intervals: (start, end, measured_out)"""
    wires = [LogicalWire(0, a, b, None, k if m else None) for k, (a, b, m) in enumerate(intervals)]
    return Subcircuit(0, wires, [])


def test_reuse_strict_and_lowest_slot():
    s = schedule_reuse(_sub([(0, 1, True), (2, 4, False), (1, 3, False)]))
    # wire 2 starts at layer 1 while wire 0 is still measured at layer 1: no reuse
    assert s.physical_width == 2
    assert s.reuse == {0: [0, 1], 1: [2]}
    s = schedule_reuse(_sub([(0, 2, False), (0, 2, False)]))
    assert s.physical_width == 2 and s.reuse == {0: [0], 1: [1]}
    with pytest.raises(ReuseError):
        schedule_reuse(_sub([(0, 2, False)] * 3), N=2)


@given(st.lists(st.tuples(st.integers(0, 8), st.integers(0, 4), st.booleans()), min_size=1, max_size=10))
def test_reuse_width_is_peak_occupancy(raw):
    s = schedule_reuse(_sub([(a, a + length, m) for a, length, m in raw]))
    assert s.physical_width == peak_occupancy(s)
    # a slot never holds two overlapping wires
    for wires in s.reuse.values():
        for i, j in zip(wires, wires[1:]):
            assert s.wires[i].measure_cut is not None and s.wires[i].end_layer < s.wires[j].start_layer


def test_json_roundtrip():
    for make in (chain_plan, wire_and_gate_plan):
        p = make()[2]
        again = CutPlan.from_json(json.loads(p.dumps()))
        assert again.dumps() == p.dumps()
        assert [i.key for i in enumerate_instances(again)] == [i.key for i in enumerate_instances(p)]
    with pytest.raises(PlanError):
        CutPlan.from_json({"schema": "other"})


gate_st = st.one_of(
    st.tuples(st.just("h"), st.integers(0, 3)),
    st.tuples(st.sampled_from(["cx", "cz"]), st.integers(0, 3), st.integers(0, 3)).filter(lambda t: t[1] != t[2]),
)


@given(st.lists(gate_st, min_size=2, max_size=10), st.lists(st.integers(0, 2), min_size=24, max_size=24))
def test_conservation_for_arbitrary_assignments(gates, raw):
    c = circuit(4, *gates)
    d = build_dag(c, gate_cut_enabled=True)
    ps = slots_by_rule(d, lambda q, layer: raw[(q * 6 + layer) % 24])
    p = extract_subcircuits(d, ps, split_nodes(d, ps))
    assert check_gate_conservation(p)
    # every wire cut has one upstream and one downstream endpoint in distinct subcircuits
    for w in p.wire_cuts:
        assert w.upstream.subcircuit != w.downstream.subcircuit
    expected = sum(math.prod({"up": 3, "down": 4, "top": 6, "bottom": 6}[r] for _, r in p.axes(s.index))
                   for s in p.subcircuits)
    assert instance_count(p) == expected
