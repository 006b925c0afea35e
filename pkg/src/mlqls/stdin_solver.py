"""Reference external solver for the stdin/stdout JSON protocol.

Reads one sub-QUBO JSON document on stdin and prints {"spins": [...]}.
``--mode echo`` answers all +1 without looking at the problem; ``--mode
exhaustive`` returns the proven optimum. Used in tests and as a template for
wiring real backends.

    python -m mlqls.stdin_solver --mode exhaustive < subqubo.json
"""

from __future__ import annotations

import argparse
import json
import sys

from .solvers import solve_exhaustive
from .subqubo import SubQubo


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--mode", choices=["echo", "exhaustive"],
                        default="exhaustive")
    args = parser.parse_args(argv)
    q = SubQubo.from_json(sys.stdin.read())
    if args.mode == "echo":
        spins = [1] * q.k
    else:
        spins = [int(s) for s in solve_exhaustive(q).spins]
    json.dump({"spins": spins}, sys.stdout)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
