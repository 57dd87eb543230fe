import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrcut.dag import build_dag, padded_circuit, strip_identities, validate_dag
from qrcut.sim import probabilities, simulate

from conftest import circuit

import numpy as np


def small_example():
    # two CNOTs sharing qubit 1, one single-qubit gate, one idle slot on q2
    return circuit(3, ("cx", 0, 1), ("h", 0), ("cx", 1, 2))


def test_node_classes_and_layers():
    d = build_dag(small_example(), "full")
    rows = [(n.node_class, n.layer, n.qubits, n.gate_id) for n in d.nodes]
    assert rows == [
        ("V", 0, (0, 1), 0),
        ("F", 0, (2,), None),
        ("S", 1, (0,), 1),
        ("V", 1, (1, 2), 2),
    ]
    assert d.num_layers == 2
    assert validate_dag(d) == []


def test_candidates():
    d = build_dag(small_example(), "full", gate_cut_enabled=True)
    kinds = sorted((c.kind, c.node) for c in d.cut_candidates)
    # first-layer nodes carry no wire-cut candidates
    assert kinds == [("G", 0), ("G", 3), ("WB", 3), ("WS", 2), ("WT", 3)]
    assert all(c.kind == "G" for c in d.cut_candidates if d.by_id[c.node].layer == 0)
    assert not any(c.kind == "G" for c in build_dag(small_example()).cut_candidates)


def test_swap_not_gate_cuttable():
    d = build_dag(circuit(2, ("swap", 0, 1)), gate_cut_enabled=True)
    assert d.cut_candidates == []


def test_sparse_padding_positions():
    # q1 idle for layers 1..6 under sparse padding gets start/middle/end fillers
    c = circuit(2, ("cx", 0, 1), *[("h", 0)] * 6, ("cx", 0, 1))
    d = build_dag(c, "sparse")
    q1 = [n.layer for n in d.nodes if n.qubits == (1,)]
    assert q1 == [1, 4, 6]
    assert validate_dag(d) == []
    assert [w for w in d.wires if w.qubit == 1 and len(d.gap_layers(w))]
    full = build_dag(c, "full")
    assert [n.layer for n in full.nodes if n.qubits == (1,)] == list(range(1, 7))


def test_validate_detects_broken_dag():
    d = build_dag(small_example(), "full")
    d.nodes.pop(1)
    d._index()
    kinds = {v.kind for v in validate_dag(d)}
    assert {"MissingPadding", "DanglingWire"} <= kinds


gate_st = st.one_of(
    st.tuples(st.sampled_from(["h", "t", "rx"]), st.integers(0, 4)),
    st.tuples(st.sampled_from(["cx", "cz", "swap"]), st.integers(0, 4), st.integers(0, 4)).filter(lambda t: t[1] != t[2]),
)


@given(st.lists(gate_st, max_size=20), st.sampled_from(["full", "sparse"]), st.booleans())
def test_random_dags_valid(gates, padding, gc):
    gates = [g if g[0] != "rx" else (g[0], g[1], 0.3) for g in gates]
    c = circuit(5, *gates)
    d = build_dag(c, padding, gc)
    assert validate_dag(d) == []
    assert strip_identities(d) == c
    for q in range(5):
        layers = [n.layer for n, _ in d.qubit_nodes(q)]
        assert layers == sorted(set(layers))
        if padding == "full":
            assert layers == list(range(d.num_layers))


@given(st.lists(gate_st, max_size=10))
def test_padding_preserves_state(gates):
    gates = [g if g[0] != "rx" else (g[0], g[1], 0.3) for g in gates]
    c = circuit(5, *gates)
    p = padded_circuit(build_dag(c, "full"))
    assert np.allclose(probabilities(simulate(p)), probabilities(simulate(c)))


def test_bad_padding():
    with pytest.raises(ValueError):
        build_dag(small_example(), "dense")
