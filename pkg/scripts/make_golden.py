"""Regenerate the LP golden files under tests/golden (review the diff before committing)."""

import argparse
import pathlib

from sgsolve.models import lp_fixtures
from sgsolve.qp import build_condon_qp, build_improved_qp, export_lp

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parents[1] / "tests" / "golden")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, (game, variant) in lp_fixtures().items():
        qp = build_condon_qp(game) if variant == "condon" else build_improved_qp(game)
        (args.out / f"{name}.lp").write_text(export_lp(qp))
        print("wrote", args.out / f"{name}.lp")
