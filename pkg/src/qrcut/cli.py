"""Command-line entry point."""
from __future__ import annotations

import argparse
import logging
import sys

from .circuit import CircuitError
from .model import PROFILES, ModelError
from .pipeline import (
    EXIT_OK,
    EXIT_USAGE,
    MODES,
    PipelineConfig,
    PipelineError,
    reproduce_tables,
    run_pipeline,
)


def _subcircuits(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    try:
        lo_i = int(lo)
        return lo_i, int(hi) if hi else lo_i
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN[:MAX], got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qrcut", description="Cut circuits for small devices and reconstruct results.")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", help="circuit file in the qreg text format")
    src.add_argument("--gen", help="generator spec, e.g. qft:n=15 or qaoa:kind=REG,m=2,n=7")
    p.add_argument("--device-size", "-N", type=int, default=4, help="qubits per device (N)")
    p.add_argument("--subcircuits", type=_subcircuits, default=(1, 2), metavar="MIN[:MAX]")
    p.add_argument("--max-wire-cuts", type=int, default=100)
    p.add_argument("--max-gate-cuts", type=int, default=100)
    w = p.add_mutually_exclusive_group()
    w.add_argument("--delta", type=float, help="weight of post-processing cost vs. fidelity term")
    w.add_argument("--profile", choices=sorted(PROFILES), help="named delta preset")
    p.add_argument("--enable-gate-cuts", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit", type=float, default=60.0, help="solver wall-clock budget in seconds")
    p.add_argument("--node-limit", type=int, default=2000, help="solver branch-and-bound node budget")
    p.add_argument("--mode", choices=MODES, default="full")
    p.add_argument("--out", help="artifact directory for plan.json / results.json / reconstruction.json")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--export-lp", metavar="PATH", help="write the cutting model in CPLEX LP format")
    p.add_argument("--output", choices=("auto", "probability", "expectation"), default="auto")
    p.add_argument("--reproduce", choices=("table1_like", "table2_like"), help="run a benchmark suite")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.reproduce:
            rep = reproduce_tables(args.reproduce, node_limit=args.node_limit, time_limit=args.time_limit)
            sys.stdout.write(rep.render(args.format))
            return EXIT_OK
        delta = PROFILES[args.profile] if args.profile else (1.0 if args.delta is None else args.delta)
        cfg = PipelineConfig(
            input_path=args.input, gen=args.gen, device_size=args.device_size, subcircuits=args.subcircuits,
            max_wire_cuts=args.max_wire_cuts, max_gate_cuts=args.max_gate_cuts, delta=delta,
            enable_gate_cuts=args.enable_gate_cuts, seed=args.seed, time_limit=args.time_limit,
            node_limit=args.node_limit, mode=args.mode, out_dir=args.out, report_format=args.format,
            export_lp=args.export_lp, output=args.output,
        )
        report, _ = run_pipeline(cfg)
        sys.stdout.write(report.render(args.format))
        return EXIT_OK
    except PipelineError as e:
        print(f"qrcut: {e}", file=sys.stderr)
        return e.exit_code
    except (CircuitError, ModelError, ValueError, OSError) as e:
        print(f"qrcut: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
