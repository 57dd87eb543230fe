"""Execute instance circuits and keep per-measurement-point sign attribution."""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .plan import CutPlan, InstanceCircuit, enumerate_instances
from .sim import marginal, pauli_expectation, run_ops, sign_index

RESULTS_SCHEMA = "qrcut.results/1"


@dataclass
class InstanceResult:
    """``values[s, k]``: mass (probability mode) or Pauli-term value
    (expectation mode) of branch sign pattern ``s`` (bit j set = point j
    observed -1) for output bitstring / term ``k``."""

    key: str
    values: np.ndarray


def restricted_paulis(plan: CutPlan, s: int, terms) -> list[dict[int, str]]:
    outs = plan.subcircuits[s].output_qubits
    return [{li: pauli[q] for li, q in outs if pauli[q] != "I"} for _, pauli in terms]


def run_instance(inst: InstanceCircuit, mode: str = "probability", paulis=None) -> InstanceResult:
    n = inst.width
    branches = run_ops(n, inst.ops)
    npts = len(inst.points)
    if mode == "probability":
        values = np.zeros((2**npts, 2 ** len(inst.output_qubits)))
        for b in branches:
            values[sign_index(b.signs)] += marginal(b.amplitudes, n, inst.output_qubits)
    elif mode == "expectation":
        values = np.zeros((2**npts, len(paulis)))
        for b in branches:
            cache: dict[tuple, float] = {}
            row = values[sign_index(b.signs)]
            for k, p in enumerate(paulis):
                key = tuple(sorted(p.items()))
                if key not in cache:
                    cache[key] = pauli_expectation(b.amplitudes, n, p).real
                row[k] += cache[key]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return InstanceResult(inst.key, values)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("QCUT_THREADS", "1")))
    except ValueError:
        return 1


def run_plan(plan: CutPlan, mode: str = "probability", terms=None, workers: int | None = None) -> dict[str, InstanceResult]:
    """Run every instance of ``plan``; results keyed by instance key."""
    if mode == "expectation" and terms is None:
        raise ValueError("expectation mode needs observable terms")
    instances = enumerate_instances(plan)
    paulis = {}
    if mode == "expectation":
        paulis = {s.index: restricted_paulis(plan, s.index, terms) for s in plan.subcircuits}

    def job(inst):
        return run_instance(inst, mode, paulis.get(inst.subcircuit))

    workers = workers or worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(job, instances))
    else:
        results = [job(i) for i in instances]
    return {r.key: r for r in results}


def dump_results(results: dict[str, InstanceResult], mode: str, terms=None) -> str:
    doc = {
        "schema": RESULTS_SCHEMA,
        "mode": mode,
        "terms": None if terms is None else [[c, p] for c, p in terms],
        "results": {k: {"shape": list(r.values.shape), "data": r.values.ravel().tolist()}
                    for k, r in sorted(results.items())},
    }
    return json.dumps(doc, sort_keys=True)


def load_results(text: str) -> tuple[dict[str, InstanceResult], str, list | None]:
    doc = json.loads(text)
    if doc.get("schema") != RESULTS_SCHEMA:
        raise ValueError(f"unsupported results schema {doc.get('schema')!r}")
    results = {k: InstanceResult(k, np.array(v["data"], dtype=float).reshape(v["shape"]))
               for k, v in doc["results"].items()}
    terms = None if doc["terms"] is None else [(float(c), p) for c, p in doc["terms"]]
    return results, doc["mode"], terms
