"""Rerun the desk-scale benchmark suites and print their tables."""
import argparse

from qrcut.pipeline import reproduce_tables


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("suite", nargs="*", default=["table1_like", "table2_like"],
                   choices=["table1_like", "table2_like"])
    p.add_argument("--node-limit", type=int, default=40)
    p.add_argument("--time-limit", type=float, default=120.0)
    p.add_argument("--format", choices=("table", "json"), default="table")
    args = p.parse_args()
    for suite in args.suite:
        print(f"== {suite}")
        rep = reproduce_tables(suite, node_limit=args.node_limit, time_limit=args.time_limit)
        print(rep.render(args.format))


if __name__ == "__main__":
    main()
