"""Binary ILP for joint wire cutting, gate cutting and qubit reuse.

Variable roles (``role_node_slot`` naming):

========  ==========================================================
V, S, F   two-qubit / single-qubit / identity node x sits in slot c
WS        wire into single-qubit or identity node x is cut
U         two-qubit node x is not cut at all
WT, WB    top / bottom input wire of two-qubit node x is cut
G         two-qubit node x is gate-cut
GT, GB    top / bottom half of a gate-cut node x sits in slot c
T         |occupancy difference| across a wire, per slot
Y         slot c is used
TE        largest two-qubit gate count over slots
========  ==========================================================

"Occupancy" of a node port in slot c is the 0/1 expression saying that the
qubit passing through that port belongs to subcircuit c: ``S``/``F`` for
one-qubit nodes, ``V + GT`` (top) or ``V + GB`` (bottom) for two-qubit ones.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .dag import CutCandidate, QrDag

LOG4_6 = math.log(6) / math.log(4)


class ModelError(ValueError):
    pass


@dataclass
class SolverConfig:
    D: int
    N: int
    G_max: int = 100
    W_max: int = 100
    C_min: int = 1
    C_max: int = 2
    delta: float = 1.0
    gate_cut_enabled: bool = False
    alpha: float = 3.25
    beta: float = 4.2
    fidelity_slope: float = 0.75
    fidelity_intercept: float = 23.0
    symmetry_breaking: bool = True

    def __post_init__(self):
        if not self.D > self.N > 0:
            raise ModelError(f"need D > N > 0, got D={self.D}, N={self.N}")
        if not 1 <= self.C_min <= self.C_max:
            raise ModelError(f"need 1 <= C_min <= C_max, got {self.C_min}, {self.C_max}")
        if not 0 <= self.delta <= 1:
            raise ModelError("delta must lie in [0, 1]")
        if self.alpha <= 0 or self.beta <= 0:
            raise ModelError("alpha and beta must be positive")
        if self.G_max < 0 or self.W_max < 0:
            raise ModelError("cut budgets must be non-negative")


PROFILES = {"cost-only": 1.0, "balanced": 0.75}


@dataclass(frozen=True)
class Var:
    index: int
    name: str
    role: str
    node: int | None = None
    slot: int | None = None
    port: int | None = None
    integer_ub: int = 1  # 1 for binaries

    @property
    def is_binary(self) -> bool:
        return self.integer_ub == 1


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[tuple[int, int], ...]
    sense: str  # "<=", ">=", "="
    rhs: int
    tag: str
    key: tuple = ()

    def activity(self, x) -> int:
        return sum(c * x[i] for i, c in self.coeffs)

    def satisfied(self, x, tol: float = 0) -> bool:
        a = self.activity(x)
        if self.sense == "<=":
            return a <= self.rhs + tol
        if self.sense == ">=":
            return a >= self.rhs - tol
        return abs(a - self.rhs) <= tol


CUT_ROLES = ("WS", "WT", "WB", "G")
ASSIGN_ROLES = ("V", "S", "F", "GT", "GB")


@dataclass
class IlpModel:
    """Minimisation ILP. ``dag``/``cfg`` are None for hand-written models."""

    dag: QrDag | None
    cfg: SolverConfig | None
    vars: list[Var] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    objective_constant: float = 0.0

    def __post_init__(self):
        self.index: dict[str, int] = {}

    @property
    def num_slots(self) -> int:
        return self.cfg.C_max

    def dangling(self) -> list[str]:
        referenced = {i for con in self.constraints for i, _ in con.coeffs}
        return [v.name for v in self.vars if v.index not in referenced]

    def add_var(self, role, node=None, slot=None, port=None, ub=1) -> int:
        parts = [role] + [str(p) for p in (node, port, slot) if p is not None]
        name = "_".join(parts)
        v = Var(len(self.vars), name, role, node, slot, port, ub)
        self.vars.append(v)
        self.index[name] = v.index
        return v.index

    def var(self, name: str) -> int:
        return self.index[name]

    def has(self, name: str) -> bool:
        return name in self.index

    def add(self, terms, sense, rhs, tag, key=()):
        merged: dict[int, int] = {}
        for i, c in terms:
            merged[i] = merged.get(i, 0) + c
        coeffs = tuple((i, c) for i, c in sorted(merged.items()) if c != 0)
        self.constraints.append(Constraint(coeffs, sense, rhs, tag, tuple(key)))

    # occupancy expression of a node port in a slot
    def occ(self, node: int, port: int, c: int) -> list[tuple[int, int]]:
        n = self.dag.by_id[node]
        if n.node_class != "V":
            return [(self.var(f"{n.node_class}_{node}_{c}"), 1)]
        terms = [(self.var(f"V_{node}_{c}"), 1)]
        half = f"{'GT' if port == 0 else 'GB'}_{node}_{c}"
        if self.has(half):
            terms.append((self.var(half), 1))
        return terms

    def cut_var(self, node: int, port: int) -> int:
        n = self.dag.by_id[node]
        if n.node_class != "V":
            return self.var(f"WS_{node}")
        return self.var(f"{'WT' if port == 0 else 'WB'}_{node}")

    def ports(self) -> list[tuple[int, int]]:
        return [(n.id, p) for n in self.dag.nodes for p in n.ports]

    def census(self) -> str:
        """Deterministic counts of variables per role and constraints per tag."""
        vc = Counter(v.role for v in self.vars)
        cc = Counter(c.tag for c in self.constraints)
        lines = [f"variables {len(self.vars)}"]
        lines += [f"  {k} {vc[k]}" for k in sorted(vc)]
        lines.append(f"constraints {len(self.constraints)}")
        lines += [f"  {k} {cc[k]}" for k in sorted(cc)]
        return "\n".join(lines) + "\n"

    def matrices(self):
        """Sparse (A_ub, b_ub, A_eq, b_eq) with >= rows negated into <=, plus dense c."""
        n = len(self.vars)
        parts = {"ub": ([], [], [], []), "eq": ([], [], [], [])}
        for con in self.constraints:
            kind = "eq" if con.sense == "=" else "ub"
            rows, cols, vals, rhs = parts[kind]
            sign = -1 if con.sense == ">=" else 1
            r = len(rhs)
            for i, c in con.coeffs:
                rows.append(r)
                cols.append(i)
                vals.append(sign * c)
            rhs.append(sign * con.rhs)
        out = []
        for kind in ("ub", "eq"):
            rows, cols, vals, rhs = parts[kind]
            out.append(sp.csr_matrix((vals, (rows, cols)), shape=(len(rhs), n), dtype=float))
            out.append(np.array(rhs, dtype=float))
        c = np.zeros(n)
        for i, v in self.objective.items():
            c[i] = v
        return (*out, c)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(len(self.vars)), np.array([v.integer_ub for v in self.vars], dtype=float)

    def objective_value(self, x) -> float:
        return float(sum(c * x[i] for i, c in self.objective.items()) + self.objective_constant)


def build_model(d: QrDag, cfg: SolverConfig) -> IlpModel:
    if cfg.gate_cut_enabled != d.gate_cut_enabled:
        raise ModelError("gate_cut_enabled differs between config and DAG candidate list")
    if cfg.D != d.circuit.width:
        raise ModelError(f"config D={cfg.D} but circuit has {d.circuit.width} qubits")
    if cfg.C_max > max(1, len(d.circuit.gates)):
        raise ModelError(f"C_max={cfg.C_max} exceeds the gate count {len(d.circuit.gates)}")
    m = IlpModel(d, cfg)
    slots = range(cfg.C_max)
    gate_cut_nodes = {cand.node for cand in d.cut_candidates if cand.kind == "G"}

    for n in d.nodes:
        for c in slots:
            m.add_var(n.node_class, n.id, c)
    for cand in d.cut_candidates:
        if cand.kind == "WS":
            m.add_var("WS", cand.node)
    for n in d.nodes:
        if n.node_class != "V":
            continue
        m.add_var("U", n.id)
        for port, role in ((0, "WT"), (1, "WB")):
            if (n.id, port) in d.wire_into:
                m.add_var(role, n.id)
        if n.id in gate_cut_nodes:
            m.add_var("G", n.id)
            for c in slots:
                m.add_var("GT", n.id, c)
                m.add_var("GB", n.id, c)
    for w in d.wires:
        for c in slots:
            m.add_var("T", w.consumer[0], c, port=w.consumer[1])
    for c in slots:
        m.add_var("Y", slot=c)
    te = m.add_var("TE", ub=sum(1 for n in d.nodes if n.node_class == "V"))

    def opt(name):
        return [(m.var(name), 1)] if m.has(name) else []

    # a two-qubit gate is uncut, or wire-cut on some input, or gate-cut
    for n in d.nodes:
        if n.node_class != "V":
            continue
        u = [(m.var(f"U_{n.id}"), 1)]
        wt, wb, g = opt(f"WT_{n.id}"), opt(f"WB_{n.id}"), opt(f"G_{n.id}")
        m.add(u + wt + wb + g, ">=", 1, "cut-exclusivity")
        m.add(u + wt, "<=", 1, "cut-exclusivity")
        m.add(u + wb, "<=", 1, "cut-exclusivity")
        m.add(u + g, "<=", 1, "cut-exclusivity")

    # every node in exactly one slot; gate-cut halves placed apart
    for n in d.nodes:
        terms = [(m.var(f"{n.node_class}_{n.id}_{c}"), 1) for c in slots]
        if n.node_class == "V" and n.id in gate_cut_nodes:
            g = m.var(f"G_{n.id}")
            m.add(terms + [(g, 1)], "=", 1, "assignment")
            m.add([(m.var(f"GT_{n.id}_{c}"), 1) for c in slots] + [(g, -1)], "=", 0, "assignment")
            m.add([(m.var(f"GB_{n.id}_{c}"), 1) for c in slots] + [(g, -1)], "=", 0, "assignment")
            for c in slots:
                m.add([(m.var(f"GT_{n.id}_{c}"), 1), (m.var(f"GB_{n.id}_{c}"), 1)], "<=", 1, "gate-cut-halves")
        else:
            m.add(terms, "=", 1, "assignment")

    # device capacity per slot and layer, including idle wire stretches under sparse padding
    gaps: dict[int, list] = {}
    for w in d.wires:
        for layer in d.gap_layers(w):
            gaps.setdefault(layer, []).append(w.producer)
    for c in slots:
        for layer in range(d.num_layers):
            terms = []
            for n in d.layer_nodes(layer):
                for p in n.ports:
                    terms += m.occ(n.id, p, c)
            for node, port in gaps.get(layer, []):
                terms += m.occ(node, port, c)
            m.add(terms, "<=", cfg.N, "layer-capacity", key=(c, layer))

    g_vars = [(v.index, 1) for v in m.vars if v.role == "G"]
    w_vars = [(v.index, 1) for v in m.vars if v.role in ("WS", "WT", "WB")]
    if g_vars:
        m.add(g_vars, "<=", cfg.G_max, "cut-budget")
    if w_vars:
        m.add(w_vars, "<=", cfg.W_max, "cut-budget")

    # wire cut iff the two ends of the wire sit in different slots:
    # 2*W = sum_c |occ_p - occ_c|, linearised with t >= |a| and t <= min(p+q, 2-p-q)
    for w in d.wires:
        wvar = m.cut_var(*w.consumer)
        ts = [m.var(f"T_{w.consumer[0]}_{w.consumer[1]}_{c}") for c in slots]
        m.add([(t, 1) for t in ts] + [(wvar, -2)], "=", 0, "wire-consistency")
        for c, t in zip(slots, ts):
            p = m.occ(*w.producer, c)
            q = m.occ(*w.consumer, c)
            neg_q = [(i, -k) for i, k in q]
            m.add([(t, 1)] + [(i, -k) for i, k in p] + q, ">=", 0, "linearization-aux")
            m.add([(t, 1)] + p + neg_q, ">=", 0, "linearization-aux")
            m.add([(t, 1)] + [(i, -k) for i, k in p] + neg_q, "<=", 0, "linearization-aux")
            m.add([(t, 1)] + p + q, "<=", 2, "linearization-aux")

    for c in slots:
        vs = [(m.var(f"V_{n.id}_{c}"), -1) for n in d.nodes if n.node_class == "V"]
        m.add([(te, 1)] + vs, ">=", 0, "two-qubit-load")

    ports = m.ports()
    for c in slots:
        terms = []
        for node, port in ports:
            terms += [(i, -k) for i, k in m.occ(node, port, c)]
        m.add([(m.var(f"Y_{c}"), 1)] + terms, "<=", 0, "slot-usage")
    m.add([(m.var(f"Y_{c}"), 1) for c in slots], ">=", cfg.C_min, "slot-usage")

    if cfg.symmetry_breaking:
        # the first port of slot c must come after the first port of slot c-1;
        # PF_k_c records whether slot c holds any of the ports 0..k
        for c in slots[:-1]:
            prev = None
            for node, port in ports:
                occ_now = m.occ(node, port, c)
                occ_next = m.occ(node, port, c + 1)
                pf = m.add_var("PF", node, c, port=port)
                if prev is None:
                    m.add(occ_next, "<=", 0, "symmetry")
                    m.add([(pf, 1)] + [(i, -k) for i, k in occ_now], "=", 0, "symmetry")
                else:
                    m.add(occ_next + [(prev, -1)], "<=", 0, "symmetry")
                    m.add([(pf, 1), (prev, -1)], ">=", 0, "symmetry")
                    m.add([(pf, 1)] + [(i, -k) for i, k in occ_now], ">=", 0, "symmetry")
                    m.add([(pf, 1), (prev, -1)] + [(i, -k) for i, k in occ_now], "<=", 0, "symmetry")
                prev = pf

    for v in m.vars:
        if v.role in ("WS", "WT", "WB"):
            m.objective[v.index] = cfg.delta * cfg.alpha
        elif v.role == "G":
            m.objective[v.index] = cfg.delta * cfg.beta
    m.objective[te] = (1 - cfg.delta) * cfg.fidelity_slope
    m.objective_constant = (1 - cfg.delta) * cfg.fidelity_intercept

    dangling = m.dangling()
    if dangling:
        raise ModelError(f"variables without constraints: {dangling[:5]}")
    return m


@dataclass
class Solution:
    values: np.ndarray
    port_slot: dict[tuple[int, int], int]
    wire_cuts: list[CutCandidate]
    gate_cuts: list[int]
    k1: int
    k2: int
    te_value: int
    objective_value: float
    ppcost_value: float
    cerror_value: float
    num_subcircuits: int

    def node_slots(self, node: int) -> tuple[int, ...]:
        out = []
        port = 0
        while (node, port) in self.port_slot:
            out.append(self.port_slot[(node, port)])
            port += 1
        return tuple(out)


def surrogate_cost(k1: int, k2: int, cfg: SolverConfig | None = None) -> float:
    alpha, beta = (cfg.alpha, cfg.beta) if cfg else (3.25, 4.2)
    return alpha * k1 + beta * k2


def effective_cuts(k1: int, k2: int) -> float:
    """Wire-cut-equivalent exponent k3 with 4**k3 == 4**k1 * 6**k2."""
    return k1 + k2 * LOG4_6


def calibrate_fidelity(pp_range: tuple[float, float], te_range: tuple[float, float]) -> tuple[float, float]:
    """Linear f(TE) mapping the TE range onto the post-processing cost range."""
    (p0, p1), (t0, t1) = pp_range, te_range
    if t1 == t0:
        return 0.0, float(p0)
    slope = (p1 - p0) / (t1 - t0)
    return slope, p0 - slope * t0


def calibrate_from_presolve(sol: Solution, cfg: SolverConfig, total_two_qubit: int,
                            extra_wire_cuts: int = 2, extra_gate_cuts: int = 2) -> tuple[float, float]:
    """Derive (slope, intercept) from a cost-only solution: assume perfect
    balancing costs a few extra cuts and brings TE down to its even share."""
    pp0 = sol.ppcost_value
    pp1 = pp0 + cfg.alpha * extra_wire_cuts + (cfg.beta * extra_gate_cuts if cfg.gate_cut_enabled else 0)
    te_low = math.ceil(total_two_qubit / max(1, sol.num_subcircuits))
    return calibrate_fidelity((pp0, pp1), (te_low, max(te_low, sol.te_value)))


def canonical_slots(port_slot: dict, ports) -> dict:
    """Relabel slots 0,1,... in order of first appearance along ``ports``."""
    relabel: dict[int, int] = {}
    for p in ports:
        s = port_slot[p]
        if s not in relabel:
            relabel[s] = len(relabel)
    return {p: relabel[s] for p, s in port_slot.items()}


def solution_from_assignment(m: IlpModel, port_slot: dict, gate_cuts=(), canonical: bool = True) -> Solution:
    """Complete a variable vector from a port-to-slot map and gate-cut set.

    No feasibility check happens here; pass the result to
    :func:`qrcut.solver.validate_solution`.
    """
    d = m.dag
    if canonical:
        port_slot = canonical_slots(port_slot, m.ports())
    gate_cuts = set(gate_cuts)
    x = np.zeros(len(m.vars), dtype=np.int64)
    for n in d.nodes:
        if n.node_class == "V":
            if n.id in gate_cuts:
                x[m.var(f"G_{n.id}")] = 1
                x[m.var(f"GT_{n.id}_{port_slot[(n.id, 0)]}")] = 1
                x[m.var(f"GB_{n.id}_{port_slot[(n.id, 1)]}")] = 1
            else:
                x[m.var(f"V_{n.id}_{port_slot[(n.id, 0)]}")] = 1
        else:
            x[m.var(f"{n.node_class}_{n.id}_{port_slot[(n.id, 0)]}")] = 1
    for w in d.wires:
        a, b = port_slot[w.producer], port_slot[w.consumer]
        if a != b:
            x[m.cut_var(*w.consumer)] = 1
            for c in (a, b):
                if c < m.num_slots:
                    x[m.var(f"T_{w.consumer[0]}_{w.consumer[1]}_{c}")] = 1
    for n in d.nodes:
        if n.node_class == "V":
            cut = any(x[m.var(nm)] for nm in (f"WT_{n.id}", f"WB_{n.id}", f"G_{n.id}") if m.has(nm))
            x[m.var(f"U_{n.id}")] = 0 if cut else 1
    for s in set(port_slot.values()):
        if s < m.num_slots:
            x[m.var(f"Y_{s}")] = 1
    loads = Counter(port_slot[(n.id, 0)] for n in d.nodes if n.node_class == "V" and n.id not in gate_cuts)
    x[m.var("TE")] = max(loads.values(), default=0)
    seen: set[int] = set()
    for node, port in m.ports():
        seen.add(port_slot[(node, port)])
        for c in seen:
            name = f"PF_{node}_{port}_{c}"
            if m.has(name):
                x[m.var(name)] = 1
    return solution_from_values(m, x, port_slot)


def solution_from_values(m: IlpModel, x, port_slot: dict | None = None) -> Solution:
    x = np.asarray(np.rint(x), dtype=np.int64)
    if port_slot is None:
        port_slot = {}
        for node, port in m.ports():
            for c in range(m.num_slots):
                if sum(k * x[i] for i, k in m.occ(node, port, c)) >= 1:
                    port_slot[(node, port)] = c
                    break
    cands = {(cand.kind, cand.node): cand for cand in m.dag.cut_candidates}
    wire_cuts, gate_cuts = [], []
    for v in m.vars:
        if x[v.index] and v.role in ("WS", "WT", "WB"):
            wire_cuts.append(cands[(v.role, v.node)])
        elif x[v.index] and v.role == "G":
            gate_cuts.append(v.node)
    k1, k2 = len(wire_cuts), len(gate_cuts)
    cfg = m.cfg
    te = int(x[m.var("TE")])
    loads = Counter(port_slot.get((n.id, 0)) for n in m.dag.nodes
                    if n.node_class == "V" and n.id not in gate_cuts)
    te = max(loads.values(), default=0) if cfg.delta == 1 else te
    pp = surrogate_cost(k1, k2, cfg)
    ce = cfg.fidelity_slope * te + cfg.fidelity_intercept
    return Solution(
        values=x, port_slot=dict(port_slot), wire_cuts=wire_cuts, gate_cuts=gate_cuts,
        k1=k1, k2=k2, te_value=te, objective_value=m.objective_value(x),
        ppcost_value=pp, cerror_value=ce, num_subcircuits=len(set(port_slot.values())),
    )


def cost_report(s: Solution, cfg: SolverConfig) -> dict:
    return {
        "#SC": s.num_subcircuits,
        "#Cuts": s.k1,
        "#G-cuts": s.k2,
        "#EffCuts": round(effective_cuts(s.k1, s.k2), 2),
        "#MS": s.te_value,
        "PPCost": round(surrogate_cost(s.k1, s.k2, cfg), 6),
        "CError": round(cfg.fidelity_slope * s.te_value + cfg.fidelity_intercept, 6),
    }
