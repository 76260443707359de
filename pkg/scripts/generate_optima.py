"""Regenerate the stored optimal sequences in src/chaincontrol/data/optima.json.

Usage: python scripts/generate_optima.py [name ...]

Without arguments every recipe is run. Existing entries not named on the
command line are kept. Runs are deterministic, so regenerating gives the
same file.
"""

import json
import sys
import time
from pathlib import Path

from chaincontrol.optima import DATA_FILE, RECIPES, generate_optimum

OUT = Path(__file__).resolve().parents[1] / "src" / "chaincontrol" / "data" / DATA_FILE


def main(names):
    data = json.loads(OUT.read_text()) if OUT.exists() else {}
    for name in names or list(RECIPES):
        t0 = time.perf_counter()
        data[name] = generate_optimum(name)
        print(f"{name}: F = {data[name]['fidelity']:.12f} "
              f"({time.perf_counter() - t0:.0f} s)", flush=True)
        tmp = OUT.with_suffix(".tmp")
        tmp.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
        tmp.replace(OUT)


if __name__ == "__main__":
    main(sys.argv[1:])
