"""Plan, run, reconstruct and verify one circuit end to end, e.g.

    python scripts/cut_and_verify.py --gen qft:n=6 -N 4
    python scripts/cut_and_verify.py --gen qaoa:kind=REG,m=2,n=7 -N 4 --enable-gate-cuts
"""
import sys

from qrcut.cli import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:] + (["--format", "table"] if "--format" not in sys.argv else [])))
