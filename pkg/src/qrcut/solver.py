"""Branch-and-bound over LP relaxations, an exhaustive oracle, LP export and
solution validation."""
from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .lp import solve_lp
from .model import (
    CUT_ROLES,
    IlpModel,
    ModelError,
    Solution,
    solution_from_assignment,
    solution_from_values,
)

log = logging.getLogger(__name__)

INT_TOL = 1e-6
DP_MAX_WIDTH = 18


class TooManyVariables(ModelError):
    pass


@dataclass
class SolveBudget:
    time_limit: float = 60.0
    node_limit: int = 100_000
    gap_tolerance: float = 1e-9
    seed: int = 0
    lp_backend: str = "auto"
    warm_start: bool = True
    log_every: int = 100

    def __post_init__(self):
        if self.time_limit <= 0 or self.node_limit <= 0:
            raise ValueError("time_limit and node_limit must be positive")
        if self.gap_tolerance < 0:
            raise ValueError("gap_tolerance must be >= 0")


@dataclass
class SolveOutcome:
    status: str  # optimal | feasible_with_gap | infeasible | budget_exhausted
    solution: Solution | None
    bound: float
    nodes_explored: int
    objective: float = math.inf
    values: np.ndarray | None = None
    bound_history: list[float] = field(default_factory=list)
    log_lines: list[str] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def gap(self) -> float:
        if self.values is None:
            return math.inf
        return self.objective - self.bound


# ---------------------------------------------------------------- propagation

class Propagator:
    """Integer bound tightening over the model rows (all rows as <=)."""

    def __init__(self, m: IlpModel):
        self.rows: list[tuple[list[int], list[int], int]] = []
        for con in m.constraints:
            idx = [i for i, _ in con.coeffs]
            coef = [c for _, c in con.coeffs]
            if con.sense in ("<=", "="):
                self.rows.append((idx, coef, con.rhs))
            if con.sense in (">=", "="):
                self.rows.append((idx, [-c for c in coef], -con.rhs))
        self.var_rows: list[list[int]] = [[] for _ in m.vars]
        for r, (idx, _, _) in enumerate(self.rows):
            for i in idx:
                self.var_rows[i].append(r)

    def propagate(self, lb: list[int], ub: list[int], changed=None) -> bool:
        """Tighten ``lb``/``ub`` in place; False if infeasible."""
        queue = list(range(len(self.rows))) if changed is None else sorted(
            {r for i in changed for r in self.var_rows[i]})
        queued = set(queue)
        while queue:
            r = queue.pop()
            queued.discard(r)
            idx, coef, rhs = self.rows[r]
            minact = 0
            for i, a in zip(idx, coef):
                minact += a * (lb[i] if a > 0 else ub[i])
            if minact > rhs:
                return False
            slack = rhs - minact
            for i, a in zip(idx, coef):
                if a > 0:
                    new = lb[i] + slack // a
                    if new < ub[i]:
                        ub[i] = new
                    else:
                        continue
                else:
                    new = ub[i] - slack // (-a)
                    if new > lb[i]:
                        lb[i] = new
                    else:
                        continue
                if lb[i] > ub[i]:
                    return False
                for r2 in self.var_rows[i]:
                    if r2 != r and r2 not in queued:
                        queued.add(r2)
                        queue.append(r2)
        return True


def is_feasible(m: IlpModel, x) -> bool:
    if any(not 0 <= int(x[v.index]) <= v.integer_ub for v in m.vars):
        return False
    xi = [int(v) for v in x]
    return all(con.satisfied(xi) for con in m.constraints)


# ---------------------------------------------------------------- branch and bound

def _priority(m: IlpModel) -> np.ndarray:
    rank = np.empty(len(m.vars), dtype=np.int64)
    for v in m.vars:
        if v.role in CUT_ROLES:
            rank[v.index] = 0
        elif v.role in ("V", "S", "F", "GT", "GB"):
            rank[v.index] = 1
        elif v.is_binary:
            rank[v.index] = 2
        else:
            rank[v.index] = 3
    return rank


def _outcome_solution(m: IlpModel, x) -> Solution | None:
    if m.dag is None or x is None:
        return None
    return solution_from_values(m, x)


def solve(m: IlpModel, budget: SolveBudget | None = None, initial=None) -> SolveOutcome:
    """Best-first branch and bound (depth-first until the first incumbent)."""
    budget = budget or SolveBudget()
    dangling = m.dangling()
    if dangling:
        raise ModelError(f"malformed model: variables without constraints {dangling[:5]}")
    t0 = time.monotonic()
    A_ub, b_ub, A_eq, b_eq, c = m.matrices()
    const = m.objective_constant
    prop = Propagator(m)
    rank = _priority(m)
    lb0 = [0] * len(m.vars)
    ub0 = [v.integer_ub for v in m.vars]
    lines: list[str] = []
    history: list[float] = []

    def emit(nodes, inc, bound):
        line = f"nodes={nodes} incumbent={inc:.6g} bound={bound:.6g}"
        lines.append(line)
        log.info(line)

    if not prop.propagate(lb0, ub0):
        return SolveOutcome("infeasible", None, math.inf, 0, elapsed=time.monotonic() - t0)

    best_x, best_val = None, math.inf
    seeds = []
    if initial is not None:
        seeds.append(initial.values if isinstance(initial, Solution) else np.asarray(initial))
    if budget.warm_start and m.dag is not None:
        seeds += [s.values for s in warm_start(m)]
    for x in seeds:
        if is_feasible(m, x):
            val = m.objective_value(x)
            if val < best_val - 1e-12:
                best_x, best_val = np.asarray(x, dtype=np.int64), val

    def gap_closed(bound):
        return best_x is not None and best_val - bound <= budget.gap_tolerance * max(1.0, abs(best_val))

    seq = itertools.count()
    open_nodes: list = [(-math.inf, next(seq), 0, lb0, ub0)]
    diving = best_x is None
    nodes = 0
    global_bound = -math.inf
    status = None
    while open_nodes:
        if nodes >= budget.node_limit or time.monotonic() - t0 >= budget.time_limit:
            status = "budget"
            break
        if diving:
            bound_now = min(n[0] for n in open_nodes)
            node = open_nodes.pop()
        else:
            node = heapq.heappop(open_nodes)
            bound_now = node[0]
        global_bound = max(global_bound, min(bound_now, best_val))
        if gap_closed(global_bound):
            open_nodes.clear()
            break
        parent_bound, _, depth, lb, ub = node
        if parent_bound >= best_val - budget.gap_tolerance * max(1.0, abs(best_val)) and best_x is not None:
            continue
        nodes += 1
        history.append(global_bound)
        if nodes % budget.log_every == 0:
            emit(nodes, best_val, global_bound)
        remaining = budget.time_limit - (time.monotonic() - t0)
        res = solve_lp(c, A_ub, b_ub, A_eq, b_eq, np.array(lb, float), np.array(ub, float), budget.lp_backend,
                       time_limit=remaining)
        if res.status == "iteration_limit":
            # the relaxation was not finished, so the node stays open
            nodes -= 1
            history.pop()
            open_nodes.append(node) if diving else heapq.heappush(open_nodes, node)
            status = "budget"
            break
        if res.status != "optimal":
            continue
        bound = max(parent_bound, res.fun + const)
        if best_x is not None and bound >= best_val - budget.gap_tolerance * max(1.0, abs(best_val)):
            continue
        x = res.x
        frac = np.abs(x - np.rint(x))
        fractional = np.flatnonzero(frac > INT_TOL)
        if fractional.size == 0:
            xr = np.rint(x).astype(np.int64)
            if is_feasible(m, xr):
                val = m.objective_value(xr)
                if val < best_val:
                    best_x, best_val = xr, val
                    if diving:
                        diving = False
                        heapq.heapify(open_nodes)
                continue
            # rounding broke a row: branch on any unfixed variable
            fractional = np.array([i for i in range(len(lb)) if lb[i] < ub[i]], dtype=np.int64)
            if fractional.size == 0:
                continue
        # priority class, then most fractional, then lowest id
        key = np.lexsort((fractional, -frac[fractional], rank[fractional]))
        j = int(fractional[key[0]])
        v = x[j]
        children = []
        for lo, hi in ((lb[j], math.floor(v + INT_TOL) if frac[j] > INT_TOL else lb[j]),
                       (math.ceil(v - INT_TOL) if frac[j] > INT_TOL else lb[j] + 1, ub[j])):
            if lo > hi:
                continue
            clb, cub = list(lb), list(ub)
            clb[j], cub[j] = lo, hi
            if prop.propagate(clb, cub, [j]):
                children.append((bound, next(seq), depth + 1, clb, cub))
        if diving:
            # push the child closer to the LP value last so the dive follows it
            if len(children) == 2 and v - math.floor(v) >= 0.5:
                children.reverse()
            if len(children) == 2 and frac[j] <= INT_TOL:
                children.reverse()
            open_nodes.extend(children)
        else:
            for ch in children:
                heapq.heappush(open_nodes, ch)

    if not open_nodes and status is None:
        global_bound = best_val if best_x is not None else math.inf
    elif open_nodes:
        rest = min(n[0] for n in open_nodes)
        global_bound = max(global_bound, min(rest, best_val))
    history.append(global_bound)
    emit(nodes, best_val, global_bound)
    elapsed = time.monotonic() - t0
    if best_x is None:
        st = "infeasible" if status is None else "budget_exhausted"
        return SolveOutcome(st, None, global_bound, nodes, math.inf, None, history, lines, elapsed)
    st = "optimal" if gap_closed(global_bound) else "feasible_with_gap"
    return SolveOutcome(st, _outcome_solution(m, best_x), global_bound, nodes, best_val, best_x,
                        history, lines, elapsed)


# ---------------------------------------------------------------- exhaustive oracle

def brute_force_solve(m: IlpModel, max_free: int = 24) -> SolveOutcome:
    """Enumerate every assignment of the free binaries (after root bound
    fixing); remaining integers are scanned over their propagated ranges."""
    t0 = time.monotonic()
    prop = Propagator(m)
    lb = [0] * len(m.vars)
    ub = [v.integer_ub for v in m.vars]
    if not prop.propagate(lb, ub):
        return SolveOutcome("infeasible", None, math.inf, 0, elapsed=time.monotonic() - t0)
    # prefix indicators are functions of the assignment; propagation fixes them
    free_bin = [v.index for v in m.vars if v.is_binary and v.role != "PF" and lb[v.index] < ub[v.index]]
    if len(free_bin) > max_free:
        raise TooManyVariables(f"{len(free_bin)} free binaries exceed the limit of {max_free}")
    ints = [v.index for v in m.vars if not v.is_binary or v.role == "PF"]
    best = [math.inf, None]
    leaves = [0]

    def leaf(lb, ub):
        leaves[0] += 1
        x = list(lb)
        free_int = [i for i in ints if lb[i] < ub[i]]
        for combo in itertools.product(*(range(lb[i], ub[i] + 1) for i in free_int)):
            for i, val in zip(free_int, combo):
                x[i] = val
            if is_feasible(m, x):
                val = m.objective_value(x)
                if val < best[0]:
                    best[0], best[1] = val, list(x)

    def dfs(k, lb, ub):
        while k < len(free_bin) and lb[free_bin[k]] == ub[free_bin[k]]:
            k += 1
        if k == len(free_bin):
            leaf(lb, ub)
            return
        j = free_bin[k]
        for val in (0, 1):
            clb, cub = list(lb), list(ub)
            clb[j] = cub[j] = val
            if prop.propagate(clb, cub, [j]):
                dfs(k + 1, clb, cub)

    dfs(0, lb, ub)
    elapsed = time.monotonic() - t0
    if best[1] is None:
        return SolveOutcome("infeasible", None, math.inf, leaves[0], elapsed=elapsed)
    x = np.array(best[1], dtype=np.int64)
    return SolveOutcome("optimal", _outcome_solution(m, x), best[0], leaves[0], best[0], x, [best[0]], [], elapsed)


# ---------------------------------------------------------------- LP export

def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _terms(pairs, names) -> list[str]:
    out = []
    for i, coef in pairs:
        sign = "-" if coef < 0 else "+"
        out.append(f"{sign} {_fmt(abs(coef))} {names[i]}")
    if out and out[0].startswith("+ "):
        out[0] = out[0][2:]
    return out


def _wrap(head: str, tokens: list[str], tail: str = "") -> list[str]:
    lines, cur = [], head
    for tok in tokens + ([tail] if tail else []):
        if len(cur) + len(tok) + 1 > 78 and cur.strip():
            lines.append(cur)
            cur = "   "
        cur += " " + tok
    lines.append(cur)
    return lines


def export_lp(m: IlpModel) -> str:
    """CPLEX LP text. The objective constant is recorded as a comment."""
    names = [v.name for v in m.vars]
    out = ["\\ qrcut cutting model", f"\\ objective constant: {_fmt(m.objective_constant)}", "Minimize"]
    obj = sorted((i, c) for i, c in m.objective.items() if c != 0)
    if not obj and names:
        obj = [(0, 0)]
    out += _wrap(" obj:", _terms(obj, names) if obj[0][1] else [f"0 {names[0]}"])
    out.append("Subject To")
    for r, con in enumerate(m.constraints):
        tag = con.tag.replace("-", "_")
        terms = _terms(con.coeffs, names) or [f"0 {names[0]}"]
        out += _wrap(f" r{r}_{tag}:", terms, f"{con.sense} {_fmt(con.rhs)}")
    gen = [v for v in m.vars if not v.is_binary]
    if gen:
        out.append("Bounds")
        out += [f" 0 <= {v.name} <= {v.integer_ub}" for v in gen]
    bins = [v.name for v in m.vars if v.is_binary]
    if bins:
        out.append("Binaries")
        out += _wrap("", bins)
    if gen:
        out.append("Generals")
        out += _wrap("", [v.name for v in gen])
    out.append("End")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- validation

VIOLATION_KIND = {
    "cut-exclusivity": "CutExclusivityViolated",
    "assignment": "AssignmentViolated",
    "gate-cut-halves": "GateCutHalvesCollocated",
    "layer-capacity": "LayerCapacityExceeded",
    "cut-budget": "CutBudgetExceeded",
    "wire-consistency": "WireConsistencyViolated",
    "linearization-aux": "WireConsistencyViolated",
    "two-qubit-load": "TwoQubitLoadViolated",
    "slot-usage": "SlotUsageViolated",
    "symmetry": "SymmetryViolated",
}


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    key: tuple = ()


def validate_solution(m: IlpModel, s) -> list[Violation]:
    """Every row in integer arithmetic, plus a direct recheck of wire cuts,
    per-layer qubit counts and the two-qubit load from the slot map."""
    x = s.values if isinstance(s, Solution) else np.asarray(s)
    xi = [int(v) for v in np.rint(x)]
    out: list[Violation] = []
    for v in m.vars:
        if not 0 <= xi[v.index] <= v.integer_ub:
            out.append(Violation("BoundViolated", f"{v.name}={xi[v.index]}"))
    for con in m.constraints:
        if not con.satisfied(xi):
            kind = VIOLATION_KIND.get(con.tag, "ConstraintViolated")
            out.append(Violation(kind, f"{con.tag} {con.sense} {con.rhs}: activity {con.activity(xi)}", con.key))
    if m.dag is None:
        return out

    d = m.dag
    port_slot: dict = {}
    for node, port in m.ports():
        slots = [c for c in range(m.num_slots) if sum(k * xi[i] for i, k in m.occ(node, port, c)) == 1]
        if len(slots) != 1:
            out.append(Violation("PortUnassigned", f"node {node} port {port} in slots {slots}"))
            return out
        port_slot[(node, port)] = slots[0]
    for n in d.nodes:
        if n.node_class == "V" and port_slot[(n.id, 0)] == port_slot[(n.id, 1)]:
            g = f"G_{n.id}"
            if m.has(g) and xi[m.var(g)]:
                out.append(Violation("GateCutHalvesCollocated", f"node {n.id}"))
    for w in d.wires:
        cut = port_slot[w.producer] != port_slot[w.consumer]
        if bool(xi[m.cut_var(*w.consumer)]) != cut:
            out.append(Violation("AbsValueMismatch", f"wire into {w.consumer}: cut flag {xi[m.cut_var(*w.consumer)]}"))
    load = np.zeros((m.num_slots, d.num_layers), dtype=np.int64)
    for (node, port), c in port_slot.items():
        load[c, d.by_id[node].layer] += 1
    for w in d.wires:
        for layer in d.gap_layers(w):
            load[port_slot[w.producer], layer] += 1
    for c, layer in zip(*np.nonzero(load > m.cfg.N)):
        out.append(Violation("LayerCapacityExceeded", f"slot {c} layer {layer}: {load[c, layer]} > {m.cfg.N}",
                             (int(c), int(layer))))
    k1 = sum(xi[v.index] for v in m.vars if v.role in ("WS", "WT", "WB"))
    k2 = sum(xi[v.index] for v in m.vars if v.role == "G")
    if k1 > m.cfg.W_max or k2 > m.cfg.G_max:
        out.append(Violation("CutBudgetExceeded", f"k1={k1}, k2={k2}"))
    gate_cut = {v.node for v in m.vars if v.role == "G" and xi[v.index]}
    counts = [0] * m.num_slots
    for n in d.nodes:
        if n.node_class == "V" and n.id not in gate_cut:
            counts[port_slot[(n.id, 0)]] += 1
    if xi[m.var("TE")] < max(counts, default=0):
        out.append(Violation("TwoQubitLoadViolated", f"TE={xi[m.var('TE')]} < {max(counts)}"))
    return out


# ---------------------------------------------------------------- warm start

def _popcount(size: int, width: int) -> np.ndarray:
    idx = np.arange(size, dtype=np.int64)
    pop = np.zeros(size, dtype=np.int64)
    for q in range(width):
        pop += (idx >> q) & 1
    return pop


def _peel(m: IlpModel, allowed: list[int], remaining: int, alpha: float, beta: float,
          idx: np.ndarray, pop: np.ndarray):
    """Split the cells in ``allowed`` (a qubit mask per layer) into one slot
    (bit 0) and ``remaining - 1`` later slots (bit 1) by exact DP over masks.
    Returns per-layer masks of the later slots, or None."""
    d, N, D = m.dag, m.cfg.N, m.dag.circuit.width
    gate_nodes = {cand.node for cand in d.cut_candidates if cand.kind == "G"}
    later_cap = (remaining - 1) * N
    layers = d.num_layers
    f_all = []
    f = None
    for layer in range(layers):
        a = allowed[layer]
        n_allowed = int(pop[a])
        inside = (idx & ~a) == 0
        cost = np.where(inside & (pop <= later_cap) & (n_allowed - pop <= N), 0.0, np.inf)
        # uncuttable pairs left for the later slots must still pack into them
        pairs = np.zeros(len(idx), dtype=np.int64)
        for n in d.layer_nodes(layer):
            if n.node_class != "V":
                continue
            q, r = n.qubits
            if not (a >> q) & 1 or not (a >> r) & 1:
                continue
            differ = ((idx >> q) ^ (idx >> r)) & 1
            if n.id in gate_nodes:
                cost = cost + beta * differ
            else:
                cost = np.where(differ == 1, np.inf, cost)
                pairs += (idx >> q) & (idx >> r) & 1
        cost = np.where(pairs <= (remaining - 1) * (N // 2), cost, np.inf)
        if f is None:
            f = cost
        else:
            g = f.copy()
            prev = allowed[layer - 1]
            for q in range(D):
                if (prev >> q) & 1 and (a >> q) & 1:
                    g = np.minimum(g, g[idx ^ (1 << q)] + alpha)
                else:
                    g = np.minimum(g, g[idx ^ (1 << q)])
            f = g + cost
        f_all.append(f)
    if not np.isfinite(f.min()):
        return None
    masks = [0] * layers
    masks[-1] = int(np.argmin(f))
    for layer in range(layers - 2, -1, -1):
        nxt = masks[layer + 1]
        dist = np.zeros(len(idx))
        for q in range(D):
            w = alpha if (allowed[layer] >> q) & 1 and (allowed[layer + 1] >> q) & 1 else 0.0
            if w:
                dist += w * (((idx ^ nxt) >> q) & 1)
        masks[layer] = int(np.argmin(f_all[layer] + dist))
    return masks


def _dp_partition(m: IlpModel, slots: int, alpha: float, beta: float) -> Solution | None:
    d = m.dag
    D = d.circuit.width
    size = 1 << D
    idx = np.arange(size, dtype=np.int64)
    pop = _popcount(size, D)
    allowed = [size - 1] * d.num_layers
    slot_of = [[-1] * D for _ in range(d.num_layers)]
    for k in range(slots):
        if k == slots - 1:
            later = [0] * d.num_layers
            if any(pop[a] > m.cfg.N for a in allowed):
                return None
        else:
            later = _peel(m, allowed, slots - k, alpha, beta, idx, pop)
            if later is None:
                return None
        for layer in range(d.num_layers):
            here = allowed[layer] & ~later[layer]
            for q in range(D):
                if (here >> q) & 1:
                    slot_of[layer][q] = k
        allowed = later
    port_slot = {}
    gate_cuts = []
    for n in d.nodes:
        for p, q in enumerate(n.qubits):
            port_slot[(n.id, p)] = slot_of[n.layer][q]
        if n.node_class == "V" and port_slot[(n.id, 0)] != port_slot[(n.id, 1)]:
            gate_cuts.append(n.id)
    return solution_from_assignment(m, port_slot, gate_cuts)


def warm_start(m: IlpModel) -> list[Solution]:
    """Validated incumbents from the mask DP (full padding, modest width)."""
    d, cfg = m.dag, m.cfg
    if d is None or d.padding != "full" or d.circuit.width > DP_MAX_WIDTH:
        return []
    lo = max(cfg.C_min, math.ceil(cfg.D / cfg.N), 2)
    out = []
    for slots in range(lo, min(cfg.C_max, lo + 2) + 1):
        for a, b in ((cfg.alpha, cfg.beta), (cfg.alpha * 100, cfg.beta), (cfg.alpha, cfg.beta * 100)):
            s = _dp_partition(m, slots, a, b)
            if s is not None and not validate_solution(m, s):
                out.append(s)
                break
    return out
