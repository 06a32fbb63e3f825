#!/usr/bin/env python3
"""Run the bundled long-horizon benchmark and emit plots.

Thin wrapper over the CLI: simulates configs/benchmark.json, writes the
trajectory CSV, manifest, and gnuplot scripts into out/benchmark, and exits
with the CLI's status code.
"""

import os
import sys

from adaptive_pp.cli import main

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIG = os.path.join(HERE, "..", "configs", "benchmark.json")
OUT = os.path.join(HERE, "..", "out", "benchmark")

if __name__ == "__main__":
    sys.exit(main(["run", CONFIG, "--out", OUT, "--plots"] + sys.argv[1:]))
