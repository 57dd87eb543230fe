"""plan -> run -> reconstruct -> verify orchestration and benchmark reports."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .circuit import Circuit, parse_circuit
from .dag import build_dag
from .generators import from_spec
from .model import PROFILES, SolverConfig, build_model, cost_report, effective_cuts
from .plan import CutPlan, extract_subcircuits, instance_count, schedule_plan
from .reconstruct import ReconstructionResult, reconstruct_expectation, reconstruct_probabilities
from .runner import dump_results, load_results, run_plan
from .sim import expectation, probabilities, simulate
from .solver import SolveBudget, export_lp, solve, validate_solution

log = logging.getLogger(__name__)

MODES = ("plan", "run", "reconstruct", "verify", "full")
EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 1, 2, 3
RANDOM_KINDS = ("spm", "supremacy", "qaoa")
NOT_COMPARABLE = "random instance; seeds differ from the published runs, not directly comparable"


class PipelineError(RuntimeError):
    exit_code = EXIT_USAGE


class InfeasibleError(PipelineError):
    exit_code = EXIT_INFEASIBLE


class VerificationError(PipelineError):
    exit_code = EXIT_VERIFY


@dataclass
class PipelineConfig:
    input_path: str | None = None
    gen: str | None = None
    device_size: int = 4
    subcircuits: tuple[int, int] = (1, 2)
    max_wire_cuts: int = 100
    max_gate_cuts: int = 100
    delta: float = 1.0
    enable_gate_cuts: bool = False
    seed: int = 0
    time_limit: float = 60.0
    node_limit: int = 2000
    mode: str = "full"
    out_dir: str | None = None
    report_format: str = "table"
    export_lp: str | None = None
    output: str = "auto"  # probability | expectation | auto
    tolerance: float = 1e-9
    padding: str = "auto"
    name: str | None = None
    max_instances: int = 100_000
    max_tensor_cells: int = 1 << 26

    def __post_init__(self):
        if self.mode not in MODES:
            raise PipelineError(f"unknown mode {self.mode!r}")
        if self.mode in ("plan", "full") and (self.input_path is None) == (self.gen is None):
            raise PipelineError("give exactly one of --input / --gen")
        if self.mode in ("run", "reconstruct", "verify") and self.out_dir is None:
            raise PipelineError(f"mode {self.mode} reads artifacts from --out")
        if self.device_size < 1:
            raise PipelineError("device size must be positive")
        lo, hi = self.subcircuits
        if not 1 <= lo <= hi:
            raise PipelineError("need 1 <= MIN <= MAX subcircuits")
        if self.report_format not in ("table", "json"):
            raise PipelineError("format must be table or json")
        if self.output not in ("auto", "probability", "expectation"):
            raise PipelineError("output must be auto, probability or expectation")

    def load_circuit(self) -> Circuit:
        if self.gen:
            return from_spec(self.gen)
        try:
            return parse_circuit(Path(self.input_path).read_text())
        except OSError as e:
            raise PipelineError(f"cannot read {self.input_path}: {e}") from None


@dataclass
class RunReport:
    rows: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    COLUMNS = ("name", "D", "N", "#SC", "#Cuts", "#G-cuts", "#EffCuts", "#MS", "objective", "status",
               "gap", "instances", "error")

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows, "notes": self.notes}, indent=1, sort_keys=True)

    def to_table(self) -> str:
        def cell(v):
            if v is None:
                return "-"
            if isinstance(v, float):
                return f"{v:.3g}" if abs(v) < 1e-3 and v != 0 else f"{v:.2f}"
            return str(v)

        table = [list(self.COLUMNS)] + [[cell(r.get(c)) for c in self.COLUMNS] for r in self.rows]
        widths = [max(len(row[k]) for row in table) for k in range(len(self.COLUMNS))]
        lines = ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in table]
        lines.insert(1, "  ".join("-" * w for w in widths))
        lines += [f"* {n}" for n in self.notes]
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_json() + "\n" if fmt == "json" else self.to_table()


def _capacity_analysis(c: Circuit, cfg: SolverConfig) -> str:
    if cfg.C_max * cfg.N < cfg.D:
        return f"every layer carries D={cfg.D} qubits but C_max*N={cfg.C_max * cfg.N}"
    if cfg.W_max == 0 and not cfg.gate_cut_enabled:
        return "no wire cuts allowed and gate cuts disabled"
    return (f"no assignment of {cfg.D} qubits into {cfg.C_min}..{cfg.C_max} subcircuits of {cfg.N} qubits "
            f"fits within W_max={cfg.W_max}, G_max={cfg.G_max}")


def _output_mode(cfg: PipelineConfig, c: Circuit) -> str:
    if cfg.output != "auto":
        return cfg.output
    return "expectation" if c.observable is not None else "probability"


def plan_phase(cfg: PipelineConfig, c: Circuit) -> tuple[CutPlan, dict]:
    """Solve the cutting model and build the scheduled plan."""
    D, N = c.width, cfg.device_size
    row = {"name": cfg.name or cfg.gen or Path(cfg.input_path or "circuit").stem, "D": D, "N": N}
    if D <= N:
        d = build_dag(c, cfg.padding)
        port_slot = {(n.id, p): 0 for n in d.nodes for p in n.ports}
        plan = schedule_plan(extract_subcircuits(d, port_slot, (), N), N)
        row.update({"#SC": 1, "#Cuts": 0, "#G-cuts": 0, "#EffCuts": 0.0, "#MS": c.num_two_qubit,
                    "objective": 0.0, "status": "no_cut_needed", "gap": 0.0})
        return plan, row
    lo, hi = cfg.subcircuits
    scfg = SolverConfig(D=D, N=N, G_max=cfg.max_gate_cuts, W_max=cfg.max_wire_cuts, C_min=lo, C_max=hi,
                        delta=cfg.delta, gate_cut_enabled=cfg.enable_gate_cuts)
    d = build_dag(c, cfg.padding, cfg.enable_gate_cuts)
    m = build_model(d, scfg)
    if cfg.export_lp:
        Path(cfg.export_lp).write_text(export_lp(m))
    out = solve(m, SolveBudget(time_limit=cfg.time_limit, node_limit=cfg.node_limit, seed=cfg.seed))
    if out.solution is None:
        why = "infeasible" if out.status == "infeasible" else "no feasible solution within the budget"
        raise InfeasibleError(f"{why}: {_capacity_analysis(c, scfg)}")
    violations = validate_solution(m, out.solution)
    if violations:
        raise PipelineError(f"solver returned an invalid solution: {violations[:3]}")
    plan = schedule_plan(extract_subcircuits(d, out.solution.port_slot, out.solution.gate_cuts, N), N)
    rep = cost_report(out.solution, scfg)
    row.update({k: rep[k] for k in ("#SC", "#Cuts", "#G-cuts", "#EffCuts", "#MS")})
    row.update({"objective": round(out.objective, 6), "status": out.status,
                "gap": round(out.objective - out.bound, 6) if math.isfinite(out.bound) else None,
                "nodes": out.nodes_explored})
    return plan, row


def _write(out_dir: str | None, name: str, text: str) -> None:
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / name).write_text(text)


def _read(out_dir: str, name: str) -> str:
    path = Path(out_dir) / name
    if not path.exists():
        raise PipelineError(f"missing phase input {path}")
    return path.read_text()


def reconstruct_phase(plan: CutPlan, results, mode: str, terms) -> ReconstructionResult:
    if mode == "probability":
        return reconstruct_probabilities(plan, results)
    from .circuit import ObservableSpec

    obs = plan.origin.observable or ObservableSpec(tuple(terms))
    return reconstruct_expectation(plan, results, obs)


def verify_phase(plan: CutPlan, rec: ReconstructionResult) -> float:
    sv = simulate(plan.origin)
    if rec.kind == "probability_vector":
        return float(np.abs(np.asarray(rec.value) - probabilities(sv)).max())
    return abs(float(rec.value) - expectation(sv, plan.origin.observable))


def _check_size(plan: CutPlan, cfg: PipelineConfig, mode: str, terms) -> None:
    """Refuse plans whose execution or recombination would not fit in memory."""
    count = instance_count(plan)
    if count > cfg.max_instances:
        raise PipelineError(f"plan needs {count} instances, above the limit of {cfg.max_instances}")
    dims = {"up": 4, "down": 4, "top": 6, "bottom": 6}
    for sub in plan.subcircuits:
        out = 2 ** len(sub.output_qubits) if mode == "probability" else len(terms)
        cells = math.prod(dims[r] for _, r in plan.axes(sub.index)) * out
        if cells > cfg.max_tensor_cells:
            raise PipelineError(f"subcircuit {sub.index} tensor needs {cells} cells, "
                                f"above the limit of {cfg.max_tensor_cells}")


def run_pipeline(cfg: PipelineConfig) -> tuple[RunReport, dict]:
    """Run the requested phases; returns the report and in-memory artifacts."""
    report = RunReport()
    art: dict = {}
    phases = {"plan": ["plan"], "run": ["run"], "reconstruct": ["reconstruct"], "verify": ["verify"],
              "full": ["plan", "run", "reconstruct", "verify"]}[cfg.mode]
    row: dict = {}
    plan = results = rec = None
    mode = terms = None
    if "plan" in phases:
        c = cfg.load_circuit()
        mode = _output_mode(cfg, c)
        if cfg.enable_gate_cuts and mode != "expectation":
            raise PipelineError("gate cuts need an observable (expectation output)")
        plan, row = plan_phase(cfg, c)
        if cfg.gen and cfg.gen.split(":")[0].lower() in RANDOM_KINDS:
            row["note"] = NOT_COMPARABLE
        row["instances"] = instance_count(plan)
        art["plan"] = plan
        _write(cfg.out_dir, "plan.json", plan.dumps())
    if "run" in phases:
        if plan is None:
            plan = CutPlan.from_json(json.loads(_read(cfg.out_dir, "plan.json")))
            mode = "expectation" if (plan.origin.observable is not None and cfg.output != "probability") \
                else "probability"
        terms = plan.origin.observable.terms if mode == "expectation" else None
        _check_size(plan, cfg, mode, terms)
        results = run_plan(plan, mode, terms)
        art["results"] = results
        _write(cfg.out_dir, "results.json", dump_results(results, mode, terms))
    if "reconstruct" in phases:
        if plan is None:
            plan = CutPlan.from_json(json.loads(_read(cfg.out_dir, "plan.json")))
        if results is None:
            results, mode, terms = load_results(_read(cfg.out_dir, "results.json"))
        rec = reconstruct_phase(plan, results, mode, terms)
        art["reconstruction"] = rec
        _write(cfg.out_dir, "reconstruction.json", rec.dumps())
    if "verify" in phases:
        if plan is None:
            plan = CutPlan.from_json(json.loads(_read(cfg.out_dir, "plan.json")))
        if rec is None:
            doc = json.loads(_read(cfg.out_dir, "reconstruction.json"))
            value = np.array(doc["value"]) if doc["kind"] == "probability_vector" else doc["value"]
            rec = ReconstructionResult(doc["kind"], value, doc["diagnostics"]["instance_count"],
                                       doc["diagnostics"]["combination_terms"])
        err = verify_phase(plan, rec)
        row["error"] = err
        art["error"] = err
    if plan is not None and "name" not in row:
        row = {"name": cfg.name or "plan", "D": plan.origin.width, "N": plan.device_size,
               "#SC": len(plan.subcircuits), "#Cuts": plan.k1, "#G-cuts": plan.k2,
               "#EffCuts": round(effective_cuts(plan.k1, plan.k2), 2), "instances": instance_count(plan), **row}
    if row:
        report.rows.append(row)
    if "note" in row:
        report.notes.append(f"{row['name']}: {row['note']}")
    if "error" in row and row["error"] > cfg.tolerance:
        raise VerificationError(f"verification error {row['error']:.3e} exceeds {cfg.tolerance:g}")
    return report, art


# ---------------------------------------------------------------- benchmark suites

@dataclass(frozen=True)
class Benchmark:
    gen: str
    N: int
    C_max: int
    gate_cuts: bool = False
    published: tuple | None = None  # (#SC, #Cuts[, #G-cuts]) from the reference runs


TABLE1_LIKE = (
    Benchmark("qft:n=15", 9, 2, published=(2, 12)),
    Benchmark("qft:n=15", 7, 3, published=(3, 20)),
    Benchmark("adder:bits=7", 7, 4, published=(3, 4)),
    Benchmark("spm:n=15,depth=8,seed=0", 7, 3, published=(3, 5)),
)

TABLE2_LIKE = (
    Benchmark("qaoa:kind=REG,m=3,n=12,seed=0", 8, 2),
    Benchmark("qaoa:kind=ERD,p=0.3,n=12,seed=0", 8, 2),
    Benchmark("qaoa:kind=BAR,m=2,n=12,seed=0", 8, 2),
)


def reproduce_tables(suite: str, node_limit: int = 40, time_limit: float = 120.0,
                     profiles=("cost-only",)) -> RunReport:
    """Deterministic desk-scale rerun of the benchmark table layouts (node
    budgets, not wall-clock, bound every solve)."""
    if suite == "table1_like":
        rows = []
        for b in TABLE1_LIKE:
            for prof in profiles:
                cfg = PipelineConfig(gen=b.gen, device_size=b.N, subcircuits=(2, b.C_max), mode="plan",
                                     delta=PROFILES[prof], node_limit=node_limit, time_limit=time_limit,
                                     name=f"{b.gen} [{prof}]")
                rep, _ = run_pipeline(cfg)
                row = rep.rows[0]
                if b.published:
                    row["published"] = {"#SC": b.published[0], "#Cuts": b.published[1]}
                rows.append(row)
        notes = [f"{r['name']}: {NOT_COMPARABLE}" for r in rows if "note" in r]
        return RunReport(rows, notes)
    if suite == "table2_like":
        rows = []
        for b in TABLE2_LIKE:
            for gate in (False, True):
                cfg = PipelineConfig(gen=b.gen, device_size=b.N, subcircuits=(2, b.C_max), mode="plan",
                                     enable_gate_cuts=gate, node_limit=node_limit, time_limit=time_limit,
                                     name=f"{b.gen} [{'W+G' if gate else 'W'}]")
                rep, _ = run_pipeline(cfg)
                rows.append(rep.rows[0])
        notes = [f"{r['name']}: {NOT_COMPARABLE}" for r in rows if "note" in r]
        return RunReport(rows, notes)
    raise PipelineError(f"unknown suite {suite!r}")


def config_dict(cfg: PipelineConfig) -> dict:
    return asdict(cfg)
