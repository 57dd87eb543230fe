"""Dense statevector simulation.

Qubit order is little-endian throughout the package: basis index
``sum(bit_q << q)``, so qubit 0 is the least significant bit. Mid-circuit
Pauli measurements are simulated exactly by keeping every unnormalised
branch together with the observed eigenvalue signs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, CircuitError, ObservableSpec, pauli_exp_descriptor

DEFAULT_MAX_QUBITS = 26
DEFAULT_MAX_MEASUREMENTS = 10

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class SimulationError(RuntimeError):
    pass


def _rot(pauli: str, angle: float) -> np.ndarray:
    return math.cos(angle / 2) * PAULI["I"] - 1j * math.sin(angle / 2) * PAULI[pauli]


_FIXED_1Q = {
    "id": PAULI["I"],
    "x": PAULI["X"],
    "y": PAULI["Y"],
    "z": PAULI["Z"],
    "h": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "s": np.diag([1, 1j]).astype(complex),
    "t": np.diag([1, np.exp(1j * math.pi / 4)]).astype(complex),
    "sx": 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex),
}

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def single_qubit_matrix(name: str, params=()) -> np.ndarray:
    if name in _FIXED_1Q:
        return _FIXED_1Q[name]
    if name in ("rx", "ry", "rz"):
        return _rot(name[1].upper(), params[0])
    raise SimulationError(f"unknown single-qubit gate {name!r}")


def pauli_exp(a1: str, a2: str, theta: float) -> np.ndarray:
    """exp(i*theta*A1⊗A2), exact because (A1⊗A2)^2 = I."""
    return math.cos(theta) * np.eye(4, dtype=complex) + 1j * math.sin(theta) * np.kron(PAULI[a1], PAULI[a2])


def _local(seq) -> np.ndarray:
    m = np.eye(2, dtype=complex)
    for name, params in seq:
        m = single_qubit_matrix(name, params) @ m
    return m


def two_qubit_matrix(name: str, params=()) -> np.ndarray:
    """4x4 matrix in the (top, bottom) basis with the top qubit most significant."""
    if name == "swap":
        return SWAP
    d = pauli_exp_descriptor(name, tuple(params))
    if d is None:
        raise SimulationError(f"unknown two-qubit gate {name!r}")
    local = np.kron(_local(d.top_local), _local(d.bottom_local))
    return np.exp(1j * d.phase) * local @ pauli_exp(d.a1, d.a2, d.theta)


def gate_matrix(name: str, params=(), nqubits: int | None = None) -> np.ndarray:
    if nqubits == 2 or (nqubits is None and name in ("cx", "cz", "cp", "rzz", "swap")):
        return two_qubit_matrix(name, params)
    return single_qubit_matrix(name, params)


@dataclass(frozen=True)
class Op:
    """Executable instruction. ``name == "measure"`` is a signed Pauli
    measurement of ``pauli`` on ``qubits[0]``; ``point`` identifies it."""

    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    pauli: str = ""
    point: int = -1

    def to_json(self) -> list:
        if self.name == "measure":
            return ["measure", list(self.qubits), self.pauli, self.point]
        return [self.name, list(self.qubits), list(self.params)]

    @classmethod
    def from_json(cls, data) -> "Op":
        if data[0] == "measure":
            return cls("measure", tuple(data[1]), (), data[2], data[3])
        return cls(data[0], tuple(data[1]), tuple(data[2]))


@dataclass
class StateVector:
    amplitudes: np.ndarray
    num_qubits: int

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        amp = np.zeros(2**n, dtype=complex)
        amp[0] = 1.0
        return cls(amp, n)

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


def apply_matrix(psi: np.ndarray, n: int, matrix: np.ndarray, qubits) -> np.ndarray:
    """Apply a 1- or 2-qubit matrix; ``qubits`` ordered as the matrix's (top, bottom)."""
    t = psi.reshape((2,) * n)
    axes = [n - 1 - q for q in qubits]
    k = len(axes)
    m = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(m, t, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(-1)


def _check_width(n: int, max_qubits: int) -> None:
    if n > max_qubits:
        raise SimulationError(f"{n} qubits exceeds the simulator cap of {max_qubits}")


def simulate(c: Circuit, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    _check_width(c.width, max_qubits)
    sv = StateVector.zero(c.width)
    psi = sv.amplitudes
    for g in c.gates:
        psi = apply_matrix(psi, c.width, gate_matrix(g.name, g.params, len(g.qubits)), g.qubits)
    sv.amplitudes = psi
    return sv


def probabilities(sv: StateVector) -> np.ndarray:
    return np.abs(sv.amplitudes) ** 2


def pauli_expectation(psi: np.ndarray, n: int, pauli: dict[int, str]) -> complex:
    """<psi|P|psi> for a Pauli given as {qubit: letter}; psi may be unnormalised."""
    phi = psi
    for q, letter in pauli.items():
        if letter != "I":
            phi = apply_matrix(phi, n, PAULI[letter], (q,))
    return np.vdot(psi, phi)


def expectation(sv: StateVector, obs: ObservableSpec) -> float:
    if obs.width is not None and obs.width != sv.num_qubits:
        raise CircuitError(f"observable width {obs.width} != state width {sv.num_qubits}")
    total = 0j
    for coef, string in obs.terms:
        total += coef * pauli_expectation(sv.amplitudes, sv.num_qubits, dict(enumerate(string)))
    if abs(total.imag) > 1e-10:
        raise SimulationError(f"expectation has imaginary residue {total.imag:.3e}")
    return float(total.real) + obs.constant_offset


@dataclass
class Branch:
    signs: tuple[int, ...]
    amplitudes: np.ndarray


def run_ops(n: int, ops, max_qubits: int = DEFAULT_MAX_QUBITS,
            max_measurements: int = DEFAULT_MAX_MEASUREMENTS) -> list[Branch]:
    """Execute ``ops`` from |0...0>, branching on every measurement.

    Branch signs are listed in order of the measurement points encountered.
    Zero-weight branches are dropped.
    """
    _check_width(n, max_qubits)
    if sum(1 for op in ops if op.name == "measure") > max_measurements:
        raise SimulationError(f"more than {max_measurements} measurement points")
    branches = [Branch((), StateVector.zero(n).amplitudes)]
    for op in ops:
        if op.name == "measure":
            p = PAULI[op.pauli]
            proj = {+1: (PAULI["I"] + p) / 2, -1: (PAULI["I"] - p) / 2}
            nxt = []
            for b in branches:
                for sign in (+1, -1):
                    amp = apply_matrix(b.amplitudes, n, proj[sign], op.qubits)
                    if np.vdot(amp, amp).real > 1e-30:
                        nxt.append(Branch(b.signs + (sign,), amp))
            branches = nxt
        else:
            m = gate_matrix(op.name, op.params, len(op.qubits))
            for b in branches:
                b.amplitudes = apply_matrix(b.amplitudes, n, m, op.qubits)
    return branches


def sign_index(signs) -> int:
    """Bit j set when measurement j observed eigenvalue -1."""
    return sum(1 << j for j, s in enumerate(signs) if s < 0)


def marginal(psi: np.ndarray, n: int, keep) -> np.ndarray:
    """Probability over ``keep`` qubits, little-endian in the order given."""
    p = (np.abs(psi) ** 2).reshape((2,) * n)
    axes = [n - 1 - q for q in keep]
    drop = tuple(a for a in range(n) if a not in axes)
    p = p.sum(axis=drop) if drop else p
    # remaining axes are in increasing axis order; reorder so keep[-1] is most significant
    remaining = sorted(axes)
    order = [remaining.index(a) for a in reversed(axes)]
    return np.transpose(p, order).reshape(-1) if keep else p.reshape(1)


def sample_counts(probs: np.ndarray, shots: int, seed: int) -> np.ndarray:
    """Shot-sampled frequencies; demonstration mode only."""
    rng = np.random.default_rng(seed)
    p = np.clip(probs, 0, None)
    return rng.multinomial(shots, p / p.sum()) / shots
