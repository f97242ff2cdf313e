"""Compare every solver against exhaustive enumeration on the seeded corpus."""
import argparse
import json
import time

import numpy as np

from sgsolve.generate import corpus
from sgsolve.graph import nontrivial_mecs
from sgsolve.oracle import enumerate_solve
from sgsolve.qp_solver import QpSolverConfig, solve_game_qp
from sgsolve.si import SiConfig, solve_si, topological_si


def _gap(res, ref) -> float:
    return float(np.max(np.abs(res.float_values() - ref)))


def sweep(count: int, seed: int, tolerance: float, restarts: int) -> dict:
    games = corpus(count, seed)
    qp_config = QpSolverConfig(restarts=restarts)
    tally = {"games": len(games), "with_mec": 0, "si_exact_mismatch": 0, "si_vi_mismatch": 0,
             "topological_mismatch": 0, "qp_success": 0, "qp_correct": 0, "qp_wrong_success": 0,
             "warm_success": 0, "warm_differs": 0}
    start = time.perf_counter()
    for g in games:
        tally["with_mec"] += bool(nontrivial_mecs(g))
        exact = enumerate_solve(g).values
        ref = np.array([float(v) for v in exact])
        tally["si_exact_mismatch"] += tuple(solve_si(g).values) != exact
        tally["si_vi_mismatch"] += _gap(solve_si(g, SiConfig(opponent="vi")), ref) > tolerance
        tally["topological_mismatch"] += _gap(topological_si(g), ref) > tolerance
        cold = solve_game_qp(g, qp_config)
        warm = solve_game_qp(g, qp_config, warm_start="vi")
        ok = cold.success and _gap(cold, ref) <= tolerance
        tally["qp_success"] += cold.success
        tally["qp_correct"] += ok
        tally["qp_wrong_success"] += cold.success and not ok
        tally["warm_success"] += warm.success
        tally["warm_differs"] += warm.success != cold.success or (
            cold.success and float(np.max(np.abs(warm.values - cold.values))) > tolerance)
    tally["seconds"] = round(time.perf_counter() - start, 2)
    return tally


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--tolerance", type=float, default=1e-6)
    ap.add_argument("--restarts", type=int, default=16)
    args = ap.parse_args()
    print(json.dumps(sweep(args.count, args.seed, args.tolerance, args.restarts), indent=2))


if __name__ == "__main__":
    main()
