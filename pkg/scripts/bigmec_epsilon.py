"""Solve the BigMec ring after the stopping transform with the Condon program.

Prints, per chain length m, the certified float value at the initial state and
its distance from the true value 2/5.
"""
import argparse
import json
import time

from sgsolve.models import bigmec
from sgsolve.qp import build_condon_qp
from sgsolve.qp_solver import QpSolverConfig, solve_qp
from sgsolve.transforms import cnf_violations, to_cnf

TRUE_VALUE = 0.4


def run(n: int, m: int, config: QpSolverConfig) -> dict:
    start = time.perf_counter()
    tr = to_cnf(bigmec(n), m)
    if cnf_violations(tr.game):
        raise RuntimeError(f"m={m}: transformed game is not in normal form")
    res = solve_qp(build_condon_qp(tr.game), config)
    v0 = float(res.values[tr.game.initial])
    return {
        "m": m,
        "states": tr.game.n,
        "success": res.success,
        "value": v0,
        "deviation": abs(v0 - TRUE_VALUE),
        "objective": res.stats.get("objective"),
        "max_violation": res.stats.get("max_violation"),
        "seconds": round(time.perf_counter() - start, 3),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3, help="ring size parameter")
    ap.add_argument("--m", type=int, nargs="+", default=[17, 25, 33], help="chain lengths")
    ap.add_argument("--restarts", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    config = QpSolverConfig(restarts=args.restarts, seed=args.seed)
    for m in args.m:
        print(json.dumps(run(args.n, m, config)))


if __name__ == "__main__":
    main()
