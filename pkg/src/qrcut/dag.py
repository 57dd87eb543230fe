"""Layered, identity-padded gate graph with enumerated cut locations.

A layer is the m-th operation of every qubit after alignment: each gate is
placed ASAP and idle (qubit, layer) slots are filled with identity nodes.
Nodes are classed V (two-qubit), S (single-qubit) or F (identity). A wire
cut sits on the wire segment entering a node, so every cut candidate is
named by its consumer node and port.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .circuit import Circuit, CircuitBuilder

FULL_PADDING_MAX_WIDTH = 24


@dataclass(frozen=True)
class DagNode:
    id: int
    gate_id: int | None  # None for inserted padding
    node_class: str  # "V", "S" or "F"
    layer: int
    qubits: tuple[int, ...]

    @property
    def ports(self) -> range:
        return range(len(self.qubits))


@dataclass(frozen=True)
class Wire:
    """Segment of qubit ``qubit`` from (producer node, port) to (consumer node, port)."""

    qubit: int
    producer: tuple[int, int]
    consumer: tuple[int, int]


@dataclass(frozen=True)
class CutCandidate:
    kind: str  # "WS", "WT", "WB" or "G"
    node: int
    wire: Wire | None = None

    @property
    def port(self) -> int:
        return 1 if self.kind == "WB" else 0


@dataclass
class QrDag:
    circuit: Circuit
    padding: str
    num_layers: int
    nodes: list[DagNode]
    wires: list[Wire]
    gate_cut_enabled: bool = False
    cut_candidates: list[CutCandidate] = field(default_factory=list)

    def __post_init__(self):
        self._index()

    def _index(self):
        self.gates = {g.id: g for g in self.circuit.gates}
        self.by_id = {n.id: n for n in self.nodes}
        self.wire_into = {w.consumer: w for w in self.wires}
        self.wire_out = {w.producer: w for w in self.wires}

    def port_of(self, node_id: int, qubit: int) -> int:
        return self.by_id[node_id].qubits.index(qubit)

    def layer_nodes(self, layer: int) -> list[DagNode]:
        return [n for n in self.nodes if n.layer == layer]

    def qubit_nodes(self, qubit: int) -> list[tuple[DagNode, int]]:
        """(node, port) pairs along a qubit wire, in layer order."""
        out = [(n, n.qubits.index(qubit)) for n in self.nodes if qubit in n.qubits]
        return sorted(out, key=lambda t: t[0].layer)

    def gap_layers(self, w: Wire) -> range:
        """Layers strictly between producer and consumer (non-empty only under sparse padding)."""
        return range(self.by_id[w.producer[0]].layer + 1, self.by_id[w.consumer[0]].layer)

    def dump(self) -> str:
        lines = ["node class layer qubits gate"]
        for n in self.nodes:
            gate = "-" if n.gate_id is None else str(n.gate_id)
            lines.append(f"{n.id} {n.node_class} {n.layer} {','.join(map(str, n.qubits))} {gate}")
        return "\n".join(lines) + "\n"


def _asap_layers(c: Circuit) -> list[int]:
    nxt = [0] * c.width
    layers = []
    for g in c.gates:
        layer = max(nxt[q] for q in g.qubits)
        for q in g.qubits:
            nxt[q] = layer + 1
        layers.append(layer)
    return layers


def _sparse_fill(idle: list[int]) -> list[int]:
    """Padding layers for one idle stretch: all of it if short, else start/middle/end."""
    runs, run = [], []
    for layer in idle:
        if run and layer != run[-1] + 1:
            runs.append(run)
            run = []
        run.append(layer)
    if run:
        runs.append(run)
    out = []
    for r in runs:
        out.extend(r if len(r) <= 3 else [r[0], r[len(r) // 2], r[-1]])
    return out


def build_dag(c: Circuit, padding: str = "auto", gate_cut_enabled: bool = False) -> QrDag:
    if padding == "auto":
        padding = "full" if c.width <= FULL_PADDING_MAX_WIDTH else "sparse"
    if padding not in ("full", "sparse"):
        raise ValueError(f"unknown padding {padding!r}")
    layers = _asap_layers(c)
    num_layers = max(layers, default=-1) + 1
    if num_layers == 0:
        num_layers = 1
    raw = []  # (layer, top qubit, gate_id, class, qubits)
    busy = [set() for _ in range(c.width)]
    for g, layer in zip(c.gates, layers):
        cls = {"two_qubit": "V", "single": "S", "identity": "F"}[g.kind]
        raw.append((layer, min(g.qubits), g.id, cls, g.qubits))
        for q in g.qubits:
            busy[q].add(layer)
    for q in range(c.width):
        idle = [layer for layer in range(num_layers) if layer not in busy[q]]
        fill = idle if padding == "full" else _sparse_fill(idle)
        raw.extend((layer, q, None, "F", (q,)) for layer in fill)
    raw.sort(key=lambda r: (r[0], r[1]))
    nodes = [DagNode(i, gid, cls, layer, qs) for i, (layer, _, gid, cls, qs) in enumerate(raw)]
    wires = []
    for q in range(c.width):
        chain = sorted((n for n in nodes if q in n.qubits), key=lambda n: n.layer)
        for a, b in zip(chain, chain[1:]):
            wires.append(Wire(q, (a.id, a.qubits.index(q)), (b.id, b.qubits.index(q))))
    d = QrDag(c, padding, num_layers, nodes, wires, gate_cut_enabled)
    d.cut_candidates = enumerate_cut_candidates(d, gate_cut_enabled)
    return d


def enumerate_cut_candidates(d: QrDag, gate_cut_enabled: bool) -> list[CutCandidate]:
    out = []
    for n in d.nodes:
        if n.node_class == "V":
            for port, kind in ((0, "WT"), (1, "WB")):
                w = d.wire_into.get((n.id, port))
                if w is not None:
                    out.append(CutCandidate(kind, n.id, w))
            gate = d.gates.get(n.gate_id)
            if gate_cut_enabled and gate is not None and gate.gate_cuttable:
                out.append(CutCandidate("G", n.id))
        else:
            w = d.wire_into.get((n.id, 0))
            if w is not None:
                out.append(CutCandidate("WS", n.id, w))
    return out


@dataclass(frozen=True)
class DagViolation:
    kind: str
    detail: str


def validate_dag(d: QrDag) -> list[DagViolation]:
    out = []
    by_id = {n.id: n for n in d.nodes}
    for n in d.nodes:
        gate = d.gates.get(n.gate_id)
        expected = "F" if gate is None else {"two_qubit": "V", "single": "S", "identity": "F"}[gate.kind]
        if n.node_class != expected:
            out.append(DagViolation("ClassMismatch", f"node {n.id} is {n.node_class}, gate says {expected}"))
        if not 0 <= n.layer < d.num_layers:
            out.append(DagViolation("LayerOrderViolation", f"node {n.id} layer {n.layer} out of range"))
    for w in d.wires:
        if w.producer[0] not in by_id or w.consumer[0] not in by_id:
            out.append(DagViolation("DanglingWire", f"wire q{w.qubit}: {w.producer} -> {w.consumer}"))
            continue
        p, c = by_id[w.producer[0]], by_id[w.consumer[0]]
        if c.layer <= p.layer:
            out.append(DagViolation("LayerOrderViolation", f"wire q{w.qubit}: {p.id}@{p.layer} -> {c.id}@{c.layer}"))
    if d.padding == "full":
        for q in range(d.circuit.width):
            have = sorted(n.layer for n in d.nodes if q in n.qubits)
            if have != list(range(d.num_layers)):
                out.append(DagViolation("MissingPadding", f"qubit {q} layers {have}"))
    for cand in d.cut_candidates:
        n = by_id.get(cand.node)
        if n is None:
            out.append(DagViolation("CandidateClassViolation", f"{cand.kind} on unknown node {cand.node}"))
            continue
        ok = n.node_class in ("S", "F") if cand.kind == "WS" else n.node_class == "V"
        if not ok:
            out.append(DagViolation("CandidateClassViolation", f"{cand.kind} on {n.node_class} node {n.id}"))
        if cand.kind != "G" and (n.id, cand.port) not in d.wire_into:
            out.append(DagViolation("FirstLayerCandidate", f"{cand.kind} on node {n.id} has no input wire"))
    return out


def strip_identities(d: QrDag) -> Circuit:
    """Original gates recovered from the DAG, in gate-id order."""
    gate_ids = sorted(n.gate_id for n in d.nodes if n.gate_id is not None)
    return Circuit(d.circuit.width, tuple(d.gates[i] for i in gate_ids), d.circuit.observable)


def padded_circuit(d: QrDag) -> Circuit:
    """Layer-major circuit including the inserted identity gates."""
    b = CircuitBuilder(d.circuit.width)
    for n in d.nodes:
        if n.gate_id is None:
            b.add("id", *n.qubits)
        else:
            g = d.gates[n.gate_id]
            b.add(g.name, *g.qubits, params=g.params)
    return b.build()
