"""Turn a validated solution into subcircuits, schedule qubit reuse, and
enumerate the concrete instance circuits.

Wire cut ``w{k}``: the upstream subcircuit measures the cut qubit in a Pauli
basis (Z, X or Y; the I attribution is read from the Z run without signs) and
the downstream subcircuit starts a fresh qubit in |0>, |1>, |+> or |i>.

Gate cut ``g{j}`` of ``exp(i*theta*A1⊗A2)``: six weighted pairs of
single-qubit operations replace the gate, one half in each subcircuit.
"""
from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import dataclass, field

from .circuit import Circuit, emit_circuit, parse_circuit, pauli_exp_descriptor
from .dag import QrDag
from .sim import Op

PLAN_SCHEMA = "qrcut.plan/1"

MEASURE_BASES = ("Z", "X", "Y")
INIT_STATES = ("0", "1", "+", "i")
GATE_INSTANCES = (1, 2, 3, 4, 5, 6)

_INIT_OPS = {"0": (), "1": (("x", ()),), "+": (("h", ()),), "i": (("h", ()), ("s", ()))}
# rotations taking the Pauli eigenbasis to the computational basis before a Z measurement
_BASIS_CHANGE = {"Z": (), "X": (("h", ()),), "Y": (("rz", (-math.pi / 2,)), ("h", ()))}
_QUARTER = {"Z": "rz", "X": "rx", "Y": "ry"}


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class Endpoint:
    subcircuit: int
    qubit: int  # logical qubit in the subcircuit
    position: int  # index into the subcircuit op list


@dataclass
class WireCutRecord:
    index: int
    qubit: int  # original qubit
    layer: int  # layer of the first downstream node
    upstream: Endpoint
    downstream: Endpoint

    @property
    def label(self) -> str:
        return f"w{self.index}"


@dataclass
class GateCutRecord:
    index: int
    gate_id: int
    name: str
    a1: str
    a2: str
    theta: float
    top: Endpoint
    bottom: Endpoint

    @property
    def label(self) -> str:
        return f"g{self.index}"


@dataclass
class LogicalWire:
    original_qubit: int
    start_layer: int
    end_layer: int
    init_cut: int | None = None  # wire cut index feeding this wire
    measure_cut: int | None = None  # wire cut index measuring it out


@dataclass
class PlanOp:
    """``kind``: gate | cut_init | cut_measure | gate_half."""

    kind: str
    layer: int
    qubits: tuple[int, ...]
    name: str = ""
    params: tuple[float, ...] = ()
    gate_id: int | None = None
    cut: int | None = None
    role: str = ""  # "top" / "bottom" for gate halves


@dataclass
class Subcircuit:
    index: int
    wires: list[LogicalWire]
    ops: list[PlanOp]
    reuse: dict[int, list[int]] | None = None  # physical slot -> logical wires in order
    physical_width: int | None = None

    @property
    def logical_width(self) -> int:
        return len(self.wires)

    @property
    def output_qubits(self) -> list[tuple[int, int]]:
        """(logical, original) pairs for wires that reach the end of the circuit."""
        return [(i, w.original_qubit) for i, w in enumerate(self.wires) if w.measure_cut is None]

    def gate_ids(self) -> list[int]:
        return [op.gate_id for op in self.ops if op.kind == "gate" and op.gate_id is not None]


@dataclass
class CutPlan:
    origin: Circuit
    subcircuits: list[Subcircuit]
    wire_cuts: list[WireCutRecord]
    gate_cuts: list[GateCutRecord]
    device_size: int | None = None

    @property
    def k1(self) -> int:
        return len(self.wire_cuts)

    @property
    def k2(self) -> int:
        return len(self.gate_cuts)

    def axes(self, s: int) -> list[tuple[str, str]]:
        """Variant axes of subcircuit ``s`` as (label, role) in a fixed order:
        role is "up", "down", "top" or "bottom"."""
        out = []
        for w in self.wire_cuts:
            if w.upstream.subcircuit == s:
                out.append((w.label, "up"))
            if w.downstream.subcircuit == s:
                out.append((w.label, "down"))
        for g in self.gate_cuts:
            if g.top.subcircuit == s:
                out.append((g.label, "top"))
            if g.bottom.subcircuit == s:
                out.append((g.label, "bottom"))
        return out

    def to_json(self) -> dict:
        return {
            "schema": PLAN_SCHEMA,
            "origin": emit_circuit(self.origin),
            "device_size": self.device_size,
            "subcircuits": [
                {
                    "index": s.index,
                    "wires": [vars(w) for w in s.wires],
                    "ops": [
                        {"kind": op.kind, "layer": op.layer, "qubits": list(op.qubits), "name": op.name,
                         "params": list(op.params), "gate_id": op.gate_id, "cut": op.cut, "role": op.role}
                        for op in s.ops
                    ],
                    "reuse": None if s.reuse is None else {str(k): v for k, v in s.reuse.items()},
                    "physical_width": s.physical_width,
                    "axes": [list(a) for a in self.axes(s.index)],
                }
                for s in self.subcircuits
            ],
            "wire_cuts": [
                {"index": w.index, "qubit": w.qubit, "layer": w.layer,
                 "upstream": vars(w.upstream), "downstream": vars(w.downstream)}
                for w in self.wire_cuts
            ],
            "gate_cuts": [
                {"index": g.index, "gate_id": g.gate_id, "name": g.name, "a1": g.a1, "a2": g.a2,
                 "theta": g.theta, "top": vars(g.top), "bottom": vars(g.bottom)}
                for g in self.gate_cuts
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, data: dict) -> "CutPlan":
        if data.get("schema") != PLAN_SCHEMA:
            raise PlanError(f"unsupported plan schema {data.get('schema')!r}")
        subs = []
        for s in data["subcircuits"]:
            ops = [PlanOp(o["kind"], o["layer"], tuple(o["qubits"]), o["name"], tuple(o["params"]),
                          o["gate_id"], o["cut"], o["role"]) for o in s["ops"]]
            reuse = None if s["reuse"] is None else {int(k): v for k, v in s["reuse"].items()}
            subs.append(Subcircuit(s["index"], [LogicalWire(**w) for w in s["wires"]], ops, reuse,
                                   s["physical_width"]))
        wires = [WireCutRecord(w["index"], w["qubit"], w["layer"], Endpoint(**w["upstream"]),
                               Endpoint(**w["downstream"])) for w in data["wire_cuts"]]
        gates = [GateCutRecord(g["index"], g["gate_id"], g["name"], g["a1"], g["a2"], g["theta"],
                               Endpoint(**g["top"]), Endpoint(**g["bottom"])) for g in data["gate_cuts"]]
        return cls(parse_circuit(data["origin"]), subs, wires, gates, data.get("device_size"))


# ---------------------------------------------------------------- extraction

def extract_subcircuits(d: QrDag, port_slot: dict, gate_cuts=(), device_size: int | None = None) -> CutPlan:
    """Group DAG nodes by slot. ``port_slot`` maps (node, port) -> slot and
    ``gate_cuts`` lists gate-cut node ids (as in :class:`qrcut.model.Solution`)."""
    gate_cuts = set(gate_cuts)
    for n in d.nodes:
        for p in n.ports:
            if (n.id, p) not in port_slot:
                raise PlanError(f"node {n.id} port {p} has no slot")
        if n.node_class == "V":
            split = port_slot[(n.id, 0)] != port_slot[(n.id, 1)]
            if split and n.id not in gate_cuts:
                raise PlanError(f"two-qubit node {n.id} split across slots without a gate cut")
            if not split and n.id in gate_cuts:
                raise PlanError(f"gate-cut node {n.id} has both halves in one slot")
            if n.id in gate_cuts and not d.gates[n.gate_id].gate_cuttable:
                raise PlanError(f"node {n.id} ({d.gates[n.gate_id].name}) cannot be gate-cut")
    # compact slot ids to 0..C-1 in order of first use
    order: dict[int, int] = {}
    for n in d.nodes:
        for p in n.ports:
            order.setdefault(port_slot[(n.id, p)], len(order))

    # segments: maximal same-slot runs along each qubit
    segments = []  # (slot, qubit, [(node, port), ...])
    for q in range(d.circuit.width):
        run = None
        for node, port in d.qubit_nodes(q):
            s = order[port_slot[(node.id, port)]]
            if run is None or run[0] != s:
                run = (s, q, [])
                segments.append(run)
            run[2].append((node, port))
    seg_first = {}
    for s, q, members in segments:
        seg_first.setdefault(q, members[0][0].id)

    # wire cuts between consecutive segments of a qubit, ordered by (layer, qubit)
    cut_list = []
    per_qubit: dict[int, list] = {}
    for seg in segments:
        per_qubit.setdefault(seg[1], []).append(seg)
    for q, segs in per_qubit.items():
        for a, b in zip(segs, segs[1:]):
            cut_list.append((b[2][0][0].layer, q, a, b))
    cut_list.sort(key=lambda t: (t[0], t[1]))
    cut_index = {}
    for k, (_, q, a, b) in enumerate(cut_list):
        cut_index[(id(a), "measure")] = k
        cut_index[(id(b), "init")] = k

    num_subs = len(order)
    sub_segments = [[] for _ in range(num_subs)]
    for seg in segments:
        sub_segments[seg[0]].append(seg)
    subs = []
    logical_of = {}  # (node id, port) -> (sub, logical qubit)
    for si in range(num_subs):
        segs = sorted(sub_segments[si], key=lambda t: (t[2][0][0].layer, t[1]))
        wires = []
        for li, seg in enumerate(segs):
            _, q, members = seg
            wires.append(LogicalWire(q, members[0][0].layer, members[-1][0].layer,
                                     cut_index.get((id(seg), "init")), cut_index.get((id(seg), "measure"))))
            for node, port in members:
                logical_of[(node.id, port)] = (si, li)
        subs.append(Subcircuit(si, wires, []))

    ep_up, ep_down, ep_half = {}, {}, {}
    for si, sub in enumerate(subs):
        events = []  # (layer, phase, node order, op)
        for li, w in enumerate(sub.wires):
            if w.init_cut is not None:
                events.append((w.start_layer, 0, -1, li, PlanOp("cut_init", w.start_layer, (li,), cut=w.init_cut)))
            if w.measure_cut is not None:
                events.append((w.end_layer, 2, 1 << 30, li,
                               PlanOp("cut_measure", w.end_layer, (li,), cut=w.measure_cut)))
        for n in d.nodes:
            if n.gate_id is None:
                continue
            mine = [p for p in n.ports if logical_of[(n.id, p)][0] == si]
            if not mine:
                continue
            g = d.gates[n.gate_id]
            if n.id in gate_cuts:
                p = mine[0]
                role = "top" if p == 0 else "bottom"
                op = PlanOp("gate_half", n.layer, (logical_of[(n.id, p)][1],), g.name, g.params, g.id, role=role)
            else:
                op = PlanOp("gate", n.layer, tuple(logical_of[(n.id, p)][1] for p in n.ports), g.name, g.params,
                            g.id)
            events.append((n.layer, 1, n.id, 0, op))
        events.sort(key=lambda e: e[:4])
        sub.ops = [e[4] for e in events]

    for si, sub in enumerate(subs):
        for pos, op in enumerate(sub.ops):
            if op.kind == "cut_measure":
                ep_up[op.cut] = Endpoint(si, op.qubits[0], pos)
            elif op.kind == "cut_init":
                ep_down[op.cut] = Endpoint(si, op.qubits[0], pos)
            elif op.kind == "gate_half":
                ep_half[(op.gate_id, op.role)] = Endpoint(si, op.qubits[0], pos)
    wire_records = [WireCutRecord(k, q, layer, ep_up[k], ep_down[k]) for k, (layer, q, _, _) in enumerate(cut_list)]

    gate_records = []
    for j, node_id in enumerate(sorted(gate_cuts, key=lambda i: (d.by_id[i].layer, i))):
        g = d.gates[d.by_id[node_id].gate_id]
        desc = g.descriptor
        gate_records.append(GateCutRecord(j, g.id, g.name, desc.a1, desc.a2, desc.theta,
                                          ep_half[(g.id, "top")], ep_half[(g.id, "bottom")]))
    gate_label = {r.gate_id: r.index for r in gate_records}
    for sub in subs:
        for op in sub.ops:
            if op.kind == "gate_half":
                op.cut = gate_label[op.gate_id]
    return CutPlan(d.circuit, subs, wire_records, gate_records, device_size)


def plan_from_solution(d: QrDag, sol, device_size: int | None = None) -> CutPlan:
    return extract_subcircuits(d, sol.port_slot, sol.gate_cuts, device_size)


def check_gate_conservation(p: CutPlan) -> bool:
    kept = sorted(gid for s in p.subcircuits for gid in s.gate_ids())
    removed = [g.gate_id for g in p.gate_cuts]
    return sorted(kept + removed) == sorted(g.id for g in p.origin.gates)


# ---------------------------------------------------------------- qubit reuse

class ReuseError(PlanError):
    pass


def schedule_reuse(sub: Subcircuit, N: int | None = None) -> Subcircuit:
    """Greedy interval allocation: a wire measured out at layer l frees its
    physical slot for wires starting at layer > l; lowest free slot first."""
    order = sorted(range(len(sub.wires)), key=lambda i: (sub.wires[i].start_layer, i))
    free: list[int] = []
    busy: list[tuple[int, int, int]] = []  # (end layer, slot, wire) for measured-out wires
    reuse: dict[int, list[int]] = {}
    next_slot = 0

    for i in order:
        w = sub.wires[i]
        busy.sort()
        while busy and busy[0][0] < w.start_layer:
            _, slot, _ = busy.pop(0)
            heapq.heappush(free, slot)
        if free:
            slot = heapq.heappop(free)
        else:
            slot = next_slot
            next_slot += 1
        reuse.setdefault(slot, []).append(i)
        if w.measure_cut is not None:
            busy.append((w.end_layer, slot, i))
        else:
            busy.append((math.inf, slot, i))
    width = len(reuse)
    if N is not None and width > N:
        raise ReuseError(f"subcircuit {sub.index} needs {width} physical qubits > device size {N}")
    return Subcircuit(sub.index, sub.wires, sub.ops, reuse, width)


def peak_occupancy(sub: Subcircuit) -> int:
    if not sub.wires:
        return 0
    last = max(w.end_layer for w in sub.wires)
    best = 0
    for layer in range(last + 1):
        alive = sum(1 for w in sub.wires
                    if w.start_layer <= layer and (w.measure_cut is None or layer <= w.end_layer))
        best = max(best, alive)
    return best


def schedule_plan(p: CutPlan, N: int | None = None) -> CutPlan:
    p.subcircuits = [schedule_reuse(s, N) for s in p.subcircuits]
    return p


# ---------------------------------------------------------------- instances

def _quarter(pauli: str, sign: int) -> tuple[str, tuple[float, ...]]:
    """exp(sign * i*pi/4 * P) as a rotation gate."""
    return _QUARTER[pauli], (-sign * math.pi / 2,)


def _pauli_gate(pauli: str) -> tuple[str, tuple[float, ...]]:
    return pauli.lower(), ()


def generic_instance_table(a1: str, a2: str, theta: float):
    """Six (top ops, bottom ops, coefficient) entries for exp(i*theta*A1⊗A2).
    An op of the form ("measure", P) is a signed measurement of P."""
    c, s = math.cos(theta), math.sin(theta)
    m1, m2 = ("measure", a1), ("measure", a2)
    return [
        ((), (), c * c),
        ((_pauli_gate(a1),), (_pauli_gate(a2),), s * s),
        ((m1,), (_quarter(a2, +1),), c * s),
        ((m1,), (_quarter(a2, -1),), -c * s),
        ((_quarter(a1, +1),), (m2,), c * s),
        ((_quarter(a1, -1),), (m2,), -c * s),
    ]


def cz_instance_table():
    """Six CZ replacements with the single-qubit phases already folded in."""
    half_turn = ("rz", (-math.pi,))  # exp(i*pi/2*Z) up to a global phase
    mz = ("measure", "Z")
    return [
        ((("rz", (-math.pi / 2,)),), (("rz", (-math.pi / 2,)),), 0.5),
        ((("rz", (math.pi / 2,)),), (("rz", (math.pi / 2,)),), 0.5),
        ((mz,), (half_turn,), -0.5),
        ((mz,), (), 0.5),
        ((half_turn,), (mz,), -0.5),
        ((), (mz,), 0.5),
    ]


def half_ops(g: GateCutRecord, params: tuple[float, ...], role: str, instance: int):
    """Single-qubit operations replacing one half of a cut gate."""
    if g.name == "cz":
        entry = cz_instance_table()[instance - 1]
        return entry[0] if role == "top" else entry[1]
    desc = pauli_exp_descriptor(g.name, tuple(params))
    if desc is None:
        raise PlanError(f"gate cut {g.label} ({g.name}) has no exponential form")
    entry = generic_instance_table(desc.a1, desc.a2, desc.theta)[instance - 1]
    local = desc.top_local if role == "top" else desc.bottom_local
    return tuple(entry[0] if role == "top" else entry[1]) + tuple(local)


def gate_coefficient(g: GateCutRecord, params: tuple[float, ...], instance: int) -> float:
    if g.name == "cz":
        return cz_instance_table()[instance - 1][2]
    desc = pauli_exp_descriptor(g.name, tuple(params))
    return generic_instance_table(desc.a1, desc.a2, desc.theta)[instance - 1][2]


def gate_coefficients(p: CutPlan) -> dict[str, list[float]]:
    params = {g.id: g.params for g in p.origin.gates}
    return {g.label: [gate_coefficient(g, params[g.gate_id], i) for i in GATE_INSTANCES] for g in p.gate_cuts}


@dataclass
class MeasurementPoint:
    label: str  # cut label
    role: str  # "up" for wire cuts, "top"/"bottom" for gate halves


@dataclass
class InstanceCircuit:
    subcircuit: int
    variant: tuple  # one entry per axis of CutPlan.axes(subcircuit)
    width: int
    ops: list[Op]
    points: list[MeasurementPoint]
    coefficient: float
    output_qubits: list[int] = field(default_factory=list)  # logical qubits, in output order

    @property
    def key(self) -> str:
        return f"{self.subcircuit}:" + ",".join(str(v) for v in self.variant)


def _axis_values(role: str):
    return {"up": MEASURE_BASES, "down": INIT_STATES, "top": GATE_INSTANCES, "bottom": GATE_INSTANCES}[role]


def build_instance(p: CutPlan, s: int, variant: tuple) -> InstanceCircuit:
    sub = p.subcircuits[s]
    axes = p.axes(s)
    if len(variant) != len(axes):
        raise PlanError(f"variant {variant} does not match axes {axes}")
    choice = {(lab, role): v for (lab, role), v in zip(axes, variant)}
    params = {g.id: g.params for g in p.origin.gates}
    records = {g.gate_id: g for g in p.gate_cuts}
    ops: list[Op] = []
    points: list[MeasurementPoint] = []
    coef = 1.0

    def emit_local(seq, q):
        for name, prm in seq:
            ops.append(Op(name, (q,), tuple(prm)))

    def emit_measure(pauli, q, label, role):
        emit_local(_BASIS_CHANGE[pauli], q)
        ops.append(Op("measure", (q,), (), "Z", len(points)))
        points.append(MeasurementPoint(label, role))

    for op in sub.ops:
        if op.kind == "gate":
            ops.append(Op(op.name, op.qubits, op.params))
        elif op.kind == "cut_init":
            emit_local(_INIT_OPS[choice[(f"w{op.cut}", "down")]], op.qubits[0])
        elif op.kind == "cut_measure":
            emit_measure(choice[(f"w{op.cut}", "up")], op.qubits[0], f"w{op.cut}", "up")
            coef *= 0.5
        elif op.kind == "gate_half":
            g = records[op.gate_id]
            i = choice[(g.label, op.role)]
            for item in half_ops(g, params[g.gate_id], op.role, i):
                if item[0] == "measure":
                    emit_measure(item[1], op.qubits[0], g.label, op.role)
                else:
                    emit_local((item,), op.qubits[0])
            if op.role == "top":
                coef *= gate_coefficient(g, params[g.gate_id], i)
        else:
            raise PlanError(f"unknown plan op {op.kind!r}")
    outputs = [li for li, _ in sub.output_qubits]
    return InstanceCircuit(s, tuple(variant), sub.logical_width, ops, points, coef, outputs)


def enumerate_instances(p: CutPlan) -> list[InstanceCircuit]:
    out = []
    for sub in p.subcircuits:
        axes = p.axes(sub.index)
        for variant in itertools.product(*(_axis_values(role) for _, role in axes)):
            out.append(build_instance(p, sub.index, variant))
    return out


def instance_count(p: CutPlan) -> int:
    total = 0
    for sub in p.subcircuits:
        total += math.prod(len(_axis_values(role)) for _, role in p.axes(sub.index))
    return total
