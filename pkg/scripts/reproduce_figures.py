"""Regenerate the data behind every figure preset into one output directory.

    python scripts/reproduce_figures.py --out results/ [--only fig4 fig7] [--threads 4]
"""

import argparse
import sys
import time

from sgdlimits.cli import main

COMMANDS = {
    "fig1": ["simulate"], "fig2": ["simulate"], "fig3": ["ar1", "--rescale"],
    "fig4": ["basin"], "fig5": ["basin"], "fig6": ["simulate"],
    "fig7": ["basin"], "fig8": ["basin"], "fig9": ["simulate"],
}


def run(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results")
    p.add_argument("--only", nargs="*", choices=sorted(COMMANDS))
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args(argv)
    for name in args.only or sorted(COMMANDS):
        cmd, *extra = COMMANDS[name]
        t0 = time.perf_counter()
        code = main([cmd, "--preset", name, "--out", args.out, "--threads", str(args.threads), *extra])
        print(f"{name}: exit {code} in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
