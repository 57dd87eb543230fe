import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrcut.circuit import (
    CircuitError,
    CircuitSyntaxError,
    ObservableSpec,
    QubitOutOfRange,
    UnknownGate,
    emit_circuit,
    gate_census,
    parse_circuit,
)
from qrcut.sim import two_qubit_matrix

from conftest import circuit


def test_parse_basic():
    c = parse_circuit("""
        # bell pair
        qreg 2;
        h 0;
        cx 0 1;
        rz 1 (pi/4);
    """)
    assert c.width == 2
    assert [g.name for g in c.gates] == ["h", "cx", "rz"]
    assert c.gates[1].qubits == (0, 1)
    assert c.gates[2].params == pytest.approx((math.pi / 4,))
    assert [g.id for g in c.gates] == [0, 1, 2]


def test_parse_observable_and_alias():
    c = parse_circuit("qreg 2; cnot 0 1; obs -0.5 ZZ; obs 2 XI; offset 0.5;")
    assert c.gates[0].name == "cx"
    assert c.observable.terms == ((-0.5, "ZZ"), (2.0, "XI"))
    assert c.observable.constant_offset == 0.5


def test_unknown_gate_position():
    with pytest.raises(UnknownGate) as e:
        parse_circuit("qreg 2;\nh 0;\n  foo 1;")
    assert (e.value.line, e.value.col) == (3, 3)


def test_qubit_out_of_range():
    with pytest.raises(QubitOutOfRange) as e:
        parse_circuit("qreg 2; cx 0 2;")
    assert e.value.line == 1


@pytest.mark.parametrize("text", [
    "h 0;",  # missing qreg
    "qreg 0;",
    "qreg 2; h 0",  # missing semicolon
    "qreg 2; cx 0 0;",
    "qreg 2; rz 0;",  # missing parameter
    "qreg 2; h 0 (1);",
    "qreg 2; rz 0 (import os);",
    "qreg 2; obs 1 ZZZ;",
])
def test_syntax_errors(text):
    with pytest.raises(CircuitSyntaxError):
        parse_circuit(text)


def test_circuit_validation():
    with pytest.raises(CircuitError):
        circuit(2, ("cx", 0, 2))
    with pytest.raises(CircuitError):
        circuit(2, ("h", 0), observable=ObservableSpec(((1.0, "ZZZ"),)))
    with pytest.raises(CircuitError):
        ObservableSpec(((float("nan"), "Z"),))


gate_st = st.one_of(
    st.tuples(st.sampled_from(["h", "x", "s", "t", "sx"]), st.integers(0, 3)),
    st.tuples(st.sampled_from(["rx", "ry", "rz"]), st.integers(0, 3),
              st.floats(-7, 7, allow_nan=False, allow_infinity=False)),
    st.tuples(st.sampled_from(["cx", "cz", "swap"]), st.integers(0, 3), st.integers(0, 3)).filter(
        lambda t: t[1] != t[2]),
    st.tuples(st.sampled_from(["cp", "rzz"]), st.integers(0, 3), st.integers(0, 3),
              st.floats(-7, 7, allow_nan=False, allow_infinity=False)).filter(lambda t: t[1] != t[2]),
)


@given(st.lists(gate_st, max_size=12))
def test_emit_parse_roundtrip(gates):
    c = circuit(4, *gates, observable=ObservableSpec(((0.25, "ZIXY"),), 1.5))
    again = parse_circuit(emit_circuit(c))
    assert again == c


def test_census():
    c = circuit(3, ("h", 0), ("cx", 0, 1), ("cx", 1, 2), ("rz", 2, 0.1))
    assert gate_census(c) == {"h": 1, "cx": 2, "rz": 1, "two_qubit": 2}


def _controlled(u):
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = u
    return m


@pytest.mark.parametrize("name,params,expected", [
    ("cx", (), _controlled(np.array([[0, 1], [1, 0]]))),
    ("cz", (), np.diag([1, 1, 1, -1])),
    ("cp", (0.7,), np.diag([1, 1, 1, np.exp(0.7j)])),
    ("rzz", (0.9,), np.diag(np.exp(-0.45j * np.array([1, -1, -1, 1])))),
])
def test_descriptor_matches_textbook_matrix(name, params, expected):
    # descriptor-built matrix (top qubit most significant) vs textbook form, exactly
    assert np.allclose(two_qubit_matrix(name, params), expected, atol=1e-12)


def test_gate_cuttable():
    c = circuit(2, ("cx", 0, 1), ("swap", 0, 1), ("h", 0))
    assert [g.gate_cuttable for g in c.gates] == [True, False, False]


def test_builder_rejects_unknown_or_malformed():
    with pytest.raises(CircuitError):
        circuit(2, ("sdg", 0))
    with pytest.raises(CircuitError):
        circuit(2, ("rz", 0))
    with pytest.raises(CircuitError):
        circuit(2, ("h", 0, 1))
