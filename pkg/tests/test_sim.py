import functools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrcut.circuit import ObservableSpec
from qrcut.generators import gen_ghz, gen_qft
from qrcut.sim import (
    Op,
    SimulationError,
    StateVector,
    apply_matrix,
    expectation,
    gate_matrix,
    marginal,
    probabilities,
    run_ops,
    sign_index,
    simulate,
)

from conftest import circuit

I2 = np.eye(2)


def full_operator(n, matrix, qubits):
    """Dense 2^n operator by explicit basis mapping (independent of the tensordot kernel)."""
    k = len(qubits)
    out = np.zeros((2**n, 2**n), dtype=complex)
    for col in range(2**n):
        sub_in = sum(((col >> q) & 1) << (k - 1 - j) for j, q in enumerate(qubits))
        for sub_out in range(2**k):
            amp = matrix[sub_out, sub_in]
            if amp == 0:
                continue
            row = col
            for j, q in enumerate(qubits):
                bit = (sub_out >> (k - 1 - j)) & 1
                row = (row & ~(1 << q)) | (bit << q)
            out[row, col] += amp
    return out


def test_little_endian_convention():
    sv = simulate(circuit(3, ("x", 0)))
    assert probabilities(sv)[1] == pytest.approx(1.0)
    sv = simulate(circuit(3, ("x", 2)))
    assert probabilities(sv)[4] == pytest.approx(1.0)


def test_bell_and_ghz():
    p = probabilities(simulate(circuit(2, ("h", 0), ("cx", 0, 1))))
    assert np.allclose(p, [0.5, 0, 0, 0.5])
    p = probabilities(simulate(gen_ghz(5)))
    assert p[0] == pytest.approx(0.5) and p[31] == pytest.approx(0.5)


@pytest.mark.parametrize("n", [1, 4, 8, 10])
def test_qft_zero_state_uniform(n):
    assert np.allclose(probabilities(simulate(gen_qft(n))), 1 / 2**n, atol=1e-12)


def test_zz_on_cz_plus_plus():
    sv = simulate(circuit(2, ("h", 0), ("h", 1), ("cz", 0, 1)))
    assert expectation(sv, ObservableSpec(((1.0, "ZZ"),))) == pytest.approx(0.0, abs=1e-12)
    assert expectation(sv, ObservableSpec(((1.0, "XZ"),))) == pytest.approx(1.0)


names1 = st.sampled_from(["h", "x", "y", "z", "s", "t", "sx"])
rots = st.sampled_from(["rx", "ry", "rz"])
angles = st.floats(-6.3, 6.3, allow_nan=False)
gates3 = st.one_of(
    st.tuples(names1, st.integers(0, 2)),
    st.tuples(rots, st.integers(0, 2), angles),
    st.tuples(st.sampled_from(["cx", "cz", "swap"]), st.integers(0, 2), st.integers(0, 2)).filter(lambda t: t[1] != t[2]),
    st.tuples(st.sampled_from(["cp", "rzz"]), st.integers(0, 2), st.integers(0, 2), angles).filter(lambda t: t[1] != t[2]),
)


@given(st.lists(gates3, max_size=10))
def test_matches_full_unitary_oracle(gates):
    c = circuit(3, *gates)
    u = np.eye(8, dtype=complex)
    for g in c.gates:
        u = full_operator(3, gate_matrix(g.name, g.params, len(g.qubits)), g.qubits) @ u
    want = u[:, 0]
    assert np.allclose(simulate(c).amplitudes, want, atol=1e-10)
    assert simulate(c).norm2() == pytest.approx(1.0)


@given(st.lists(gates3, max_size=8), st.integers(0, 2), st.sampled_from("XYZ"))
def test_branch_masses_match_dephasing(gates, q, pauli):
    """Signed Pauli measurement branches vs a density-matrix projector oracle."""
    c = circuit(3, *gates)
    psi = simulate(c).amplitudes
    rho = np.outer(psi, psi.conj())
    ops = [Op(g.name, g.qubits, g.params) for g in c.gates] + [Op("measure", (q,), (), pauli, 0)]
    branches = run_ops(3, ops)
    p_mat = gate_matrix(pauli.lower())
    for sign in (+1, -1):
        proj = full_operator(3, (I2 + sign * p_mat) / 2, (q,))
        post = proj @ rho @ proj
        got = sum(np.outer(b.amplitudes, b.amplitudes.conj()) for b in branches if b.signs == (sign,))
        got = got if isinstance(got, np.ndarray) else np.zeros((8, 8))
        assert np.allclose(got, post, atol=1e-10)
    assert sum(np.vdot(b.amplitudes, b.amplitudes).real for b in branches) == pytest.approx(1.0)


def test_measure_plus_state_branches():
    br = run_ops(1, [Op("h", (0,)), Op("measure", (0,), (), "Z", 0)])
    assert sorted(b.signs for b in br) == [(-1,), (1,)]
    assert all(np.vdot(b.amplitudes, b.amplitudes).real == pytest.approx(0.5) for b in br)
    # deterministic outcome drops the empty branch
    br = run_ops(1, [Op("measure", (0,), (), "Z", 0)])
    assert [b.signs for b in br] == [(1,)]


def test_sign_index():
    assert sign_index((1, -1, -1)) == 6
    assert sign_index(()) == 0


def test_marginal_order():
    psi = simulate(circuit(3, ("x", 2))).amplitudes
    assert np.allclose(marginal(psi, 3, [2, 0]), [0, 1, 0, 0])
    assert np.allclose(marginal(psi, 3, [0, 2]), [0, 0, 1, 0])
    assert marginal(psi, 3, []) == pytest.approx([1.0])


@given(st.lists(gates3, max_size=6), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_apply_is_linear(gates, z):
    rng = np.random.default_rng(0)
    a = rng.normal(size=8) + 1j * rng.normal(size=8)
    b = rng.normal(size=8) + 1j * rng.normal(size=8)
    c = circuit(3, *gates)

    def run(v):
        for g in c.gates:
            v = apply_matrix(v, 3, gate_matrix(g.name, g.params, len(g.qubits)), g.qubits)
        return v

    assert np.allclose(run(a + z * b), run(a) + z * run(b), atol=1e-9)


def test_caps():
    with pytest.raises(SimulationError):
        simulate(gen_ghz(5), max_qubits=4)
    ops = [Op("measure", (0,), (), "Z", k) for k in range(3)]
    with pytest.raises(SimulationError):
        run_ops(1, ops, max_measurements=2)


def test_y_rotation_phase():
    # ry(pi/2)|0> = |+>
    sv = simulate(circuit(1, ("ry", 0, math.pi / 2)))
    assert np.allclose(sv.amplitudes, [1 / math.sqrt(2)] * 2)
    assert StateVector.zero(2).norm2() == 1.0
