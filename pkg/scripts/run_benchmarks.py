#!/usr/bin/env python3
"""Run the bundled benchmark experiments and print their summary tables.

Usage:
    python scripts/run_benchmarks.py [--fast]

--fast skips the 2D diffusion benchmark (the slowest entry, ~15 s).
Outputs land in results/ (override with HERMITE_TR_OUTPUT_DIR per run).
"""

import argparse
import sys
import time
from pathlib import Path

from hermite_tr.harness import emit_outputs, format_table, load_config, run_experiment

CONFIG_DIR = Path(__file__).parent / "configs"


def run_one(name):
    cfg = load_config(CONFIG_DIR / f"{name}.yaml")
    t0 = time.monotonic()
    rows, reports, meta = run_experiment(cfg)
    out = emit_outputs(rows, reports, meta, cfg)
    print(f"== {name}  ({time.monotonic() - t0:.1f}s, outputs in {out})")
    print(format_table(rows))
    print(f"reference J = {meta['reference_j']:.12g}\n")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fast", action="store_true", help="skip the 2D PDE benchmark")
    args = parser.parse_args(argv)

    run_one("one_d")
    run_one("one_d_sweep")
    run_one("rosenbrock")
    if not args.fast:
        run_one("pde2d")
    return 0


if __name__ == "__main__":
    sys.exit(main())
