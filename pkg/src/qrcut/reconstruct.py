"""Classical recombination of instance results.

Each subcircuit becomes an attributed tensor with one axis per cut endpoint
(wire endpoints indexed by the Pauli M in I, Z, X, Y; gate halves by the
instance 1..6) followed by output-qubit axes (probabilities) or a term axis
(expectations). Tensors are merged smallest subcircuit first and every cut
is contracted as soon as both of its endpoints are present.
"""
from __future__ import annotations

import itertools
import json
import string
from dataclasses import dataclass, field

import numpy as np

from .plan import GATE_INSTANCES, INIT_STATES, MEASURE_BASES, CutPlan, build_instance, gate_coefficients
from .runner import InstanceResult

RECON_SCHEMA = "qrcut.reconstruction/1"
PAULI_ORDER = ("I", "Z", "X", "Y")

# rows M in (I, Z, X, Y), columns init state in (|0>, |1>, |+>, |i>)
INIT_WEIGHTS = np.array([
    [1, 1, 0, 0],
    [1, -1, 0, 0],
    [-1, -1, 2, 0],
    [-1, -1, 0, 2],
], dtype=float)

NEGATIVE_TOL = 1e-9


class ReconstructionError(ValueError):
    pass


@dataclass
class AttributedTensor:
    """``labels[k]`` names axis k: an int is an original qubit, a (cut, role)
    tuple is a cut endpoint, and "terms" is a shared batch axis."""

    data: np.ndarray
    labels: tuple

    def __post_init__(self):
        if self.data.ndim != len(self.labels):
            raise ReconstructionError(f"{self.data.ndim} axes but {len(self.labels)} labels")
        if len(set(self.labels)) != len(self.labels):
            raise ReconstructionError(f"duplicate labels {self.labels}")

    @classmethod
    def scalar(cls, value: float = 1.0) -> "AttributedTensor":
        return cls(np.array(value, dtype=float), ())

    @classmethod
    def from_distribution(cls, probs: np.ndarray, qubits) -> "AttributedTensor":
        """Little-endian vector over ``qubits`` (first listed = least significant)."""
        qubits = list(qubits)
        data = np.asarray(probs, dtype=float).reshape((2,) * len(qubits))
        return cls(data, tuple(reversed(qubits)))

    def qubit_labels(self) -> list[int]:
        return [lab for lab in self.labels if isinstance(lab, int)]

    def to_distribution(self) -> np.ndarray:
        """Flatten the qubit axes, highest qubit most significant."""
        if any(not isinstance(lab, int) for lab in self.labels):
            raise ReconstructionError(f"uncontracted axes remain: {self.labels}")
        order = sorted(range(len(self.labels)), key=lambda k: -self.labels[k])
        return np.transpose(self.data, order).reshape(-1)


def _letters(n: int) -> str:
    if n > 52:
        raise ReconstructionError("too many tensor axes")
    return string.ascii_letters[:n]


def kron_combine(a: AttributedTensor, b: AttributedTensor) -> AttributedTensor:
    """Tensor product over distinct axes; non-qubit labels present in both
    (the term batch axis) are multiplied elementwise."""
    shared = set(a.labels) & set(b.labels)
    overlap = [lab for lab in shared if isinstance(lab, int)]
    if overlap:
        raise ReconstructionError(f"overlapping qubits {sorted(overlap)}")
    labels = list(a.labels) + [lab for lab in b.labels if lab not in shared]
    letter = dict(zip(labels, _letters(len(labels))))
    spec = "".join(letter[x] for x in a.labels) + "," + "".join(letter[x] for x in b.labels)
    spec += "->" + "".join(letter[x] for x in labels)
    return AttributedTensor(np.einsum(spec, a.data, b.data), tuple(labels))


def contract_cut(t: AttributedTensor, first, second, weights) -> AttributedTensor:
    """sum_i weights[i] * t[..first=i..second=i..]"""
    i, j = t.labels.index(first), t.labels.index(second)
    diag = np.diagonal(t.data, axis1=i, axis2=j)  # diagonal index moved last
    data = np.tensordot(diag, np.asarray(weights, dtype=float), axes=([-1], [0]))
    labels = tuple(lab for k, lab in enumerate(t.labels) if k not in (i, j))
    return AttributedTensor(data, labels)


def merge_contract(a: AttributedTensor, b: AttributedTensor, cuts) -> AttributedTensor:
    """kron_combine(a, b) followed by contract_cut for each (first, second,
    weights) in ``cuts``, done as one einsum so the product is never formed.
    Each cut must have one endpoint in ``a`` and the other in ``b``."""
    shared = set(a.labels) & set(b.labels)
    overlap = [lab for lab in shared if isinstance(lab, int)]
    if overlap:
        raise ReconstructionError(f"overlapping qubits {sorted(overlap)}")
    pair = {}
    for k, (first, second, _) in enumerate(cuts):
        if first in a.labels and second in b.labels:
            pair[first], pair[second] = ("cut", k), ("cut", k)
        elif second in a.labels and first in b.labels:
            pair[second], pair[first] = ("cut", k), ("cut", k)
        else:
            raise ReconstructionError(f"cut {first}/{second} does not join the two tensors")
    keys = [pair.get(x, x) for x in a.labels] + [pair.get(x, x) for x in b.labels]
    out = [x for x in a.labels if x not in pair] + [x for x in b.labels if x not in pair and x not in shared]
    letter = {}
    for x in keys + out:
        letter.setdefault(x, None)
    letter = dict(zip(letter, _letters(len(letter))))
    spec = "".join(letter[pair.get(x, x)] for x in a.labels) + "," + "".join(letter[pair.get(x, x)] for x in b.labels)
    operands = [a.data, b.data]
    for k, (_, _, w) in enumerate(cuts):
        spec += "," + letter[("cut", k)]
        operands.append(np.asarray(w, dtype=float))
    spec += "->" + "".join(letter[x] for x in out)
    return AttributedTensor(np.einsum(spec, *operands, optimize=True), tuple(out))


def _signed_weights(npts: int, signed) -> np.ndarray:
    """Weight per sign pattern: product over signed points of the eigenvalue."""
    w = np.ones(2**npts)
    idx = np.arange(2**npts)
    for j, s in enumerate(signed):
        if s:
            w *= 1 - 2 * ((idx >> j) & 1)
    return w


def subcircuit_tensor(plan: CutPlan, s: int, results: dict[str, InstanceResult], mode: str) -> AttributedTensor:
    axes = plan.axes(s)
    sub = plan.subcircuits[s]
    dims = [6 if role in ("top", "bottom") else 4 for _, role in axes]
    outs = sub.output_qubits
    width = None
    tensor = None
    up_pos = [k for k, (_, r) in enumerate(axes) if r == "up"]
    down_pos = [k for k, (_, r) in enumerate(axes) if r == "down"]
    values_of = {"up": MEASURE_BASES, "down": INIT_STATES, "top": GATE_INSTANCES, "bottom": GATE_INSTANCES}
    for variant in itertools.product(*(values_of[r] for _, r in axes)):
        inst = build_instance(plan, s, variant)
        res = results.get(inst.key)
        if res is None:
            raise ReconstructionError(f"missing result for instance {inst.key}")
        R = res.values
        if tensor is None:
            width = R.shape[1]
            tensor = np.zeros(dims + [width])
        point_axis = [axes.index((pt.label, pt.role)) for pt in inst.points]
        base = [0] * len(axes)
        for k, (_, role) in enumerate(axes):
            if role in ("top", "bottom"):
                base[k] = variant[k] - 1
        # Z-basis runs give both the unsigned (I) and signed (Z) attribution
        up_options = [[(0, False), (1, True)] if variant[k] == "Z" else
                      [(PAULI_ORDER.index(variant[k]), True)] for k in up_pos]
        for choice in itertools.product(*up_options):
            signed_axis = dict(zip(up_pos, (sg for _, sg in choice)))
            signed = [signed_axis.get(a, True) for a in point_axis]
            val = _signed_weights(len(inst.points), signed) @ R
            idx = list(base)
            for k, (m, _) in zip(up_pos, choice):
                idx[k] = m
            init_cols = [INIT_STATES.index(variant[k]) for k in down_pos]
            for ms in itertools.product(range(4), repeat=len(down_pos)):
                factor = 1.0
                for m, col in zip(ms, init_cols):
                    factor *= INIT_WEIGHTS[m, col]
                if factor == 0.0:
                    continue
                for k, m in zip(down_pos, ms):
                    idx[k] = m
                tensor[tuple(idx)] += factor * val
    labels = tuple(axes)
    if mode == "probability":
        tensor = tensor.reshape(dims + [2] * len(outs))
        labels = labels + tuple(q for _, q in reversed(outs))
    else:
        labels = labels + ("terms",)
    return AttributedTensor(tensor, labels)


@dataclass
class ReconstructionResult:
    kind: str  # "probability_vector" | "expectation"
    value: np.ndarray | float
    instance_count: int
    term_count: int
    negative_clip_total: float = 0.0
    min_value: float = 0.0
    imaginary_residue: float = 0.0
    term_values: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        value = self.value.tolist() if isinstance(self.value, np.ndarray) else self.value
        return {
            "schema": RECON_SCHEMA,
            "kind": self.kind,
            "value": value,
            "term_values": self.term_values,
            "diagnostics": {
                "instance_count": self.instance_count,
                "combination_terms": self.term_count,
                "negative_clip_total": self.negative_clip_total,
                "min_value": self.min_value,
                "imaginary_residue": self.imaginary_residue,
            },
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _fold(plan: CutPlan, tensors: dict[int, AttributedTensor]) -> tuple[AttributedTensor, int]:
    coeffs = gate_coefficients(plan)
    cuts = [(w.label, (w.label, "up"), (w.label, "down"), np.full(4, 0.5)) for w in plan.wire_cuts]
    cuts += [(g.label, (g.label, "top"), (g.label, "bottom"), np.array(coeffs[g.label])) for g in plan.gate_cuts]
    order = sorted(plan.subcircuits, key=lambda s: (s.logical_width, s.index))
    acc = None
    done = set()
    terms = 1
    for sub in order:
        t = tensors[sub.index]
        if acc is None:
            acc = t
        else:
            joining = [c for c in cuts if c[0] not in done and
                       ((c[1] in acc.labels and c[2] in t.labels) or (c[2] in acc.labels and c[1] in t.labels))]
            acc = merge_contract(acc, t, [c[1:] for c in joining])
            for label, _, _, weights in joining:
                done.add(label)
                terms *= len(weights)
        # cuts with both ends inside one subcircuit
        for label, first, second, weights in cuts:
            if label not in done and first in acc.labels and second in acc.labels:
                acc = contract_cut(acc, first, second, weights)
                done.add(label)
                terms *= len(weights)
    if len(done) != len(cuts):
        raise ReconstructionError("some cuts were never contracted")
    return acc, terms


def reconstruct_probabilities(plan: CutPlan, results: dict[str, InstanceResult]) -> ReconstructionResult:
    if plan.gate_cuts:
        raise ReconstructionError("gate cuts cannot reconstruct a probability distribution")
    tensors = {s.index: subcircuit_tensor(plan, s.index, results, "probability") for s in plan.subcircuits}
    acc, terms = _fold(plan, tensors)
    if sorted(acc.qubit_labels()) != list(range(plan.origin.width)):
        raise ReconstructionError(f"output qubits {sorted(acc.qubit_labels())} do not cover the circuit")
    vec = acc.to_distribution()
    min_value = float(vec.min())
    clip = float(-vec[vec < 0].sum())
    vec = np.clip(vec, 0.0, None)
    return ReconstructionResult("probability_vector", vec, len(results), terms, clip, min_value)


def reconstruct_expectation(plan: CutPlan, results: dict[str, InstanceResult], obs) -> ReconstructionResult:
    for _, pauli in obs.terms:
        if len(pauli) != plan.origin.width:
            raise ReconstructionError(f"term {pauli!r} does not match the circuit width")
    tensors = {s.index: subcircuit_tensor(plan, s.index, results, "expectation") for s in plan.subcircuits}
    acc, terms = _fold(plan, tensors)
    if acc.labels != ("terms",):
        raise ReconstructionError(f"unexpected leftover axes {acc.labels}")
    per_term = acc.data
    value = float(sum(c * v for (c, _), v in zip(obs.terms, per_term))) + obs.constant_offset
    return ReconstructionResult("expectation", value, len(results), terms, term_values=[float(v) for v in per_term])
