"""Run the three verification experiments for a map given by a CLI config.

    python scripts/verify_suite.py scripts/configs/product.json --out out/product
"""

import argparse
import os
import sys

from pluridim import cli


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("config")
    p.add_argument("--out", default="out/verify")
    p.add_argument("--seed", type=int, default=None)
    args = p.parse_args()
    worst = 0
    for cmd in ("verify-lemma1", "verify-lemma2", "verify-covering"):
        argv = [cmd, "--config", args.config, "--out", os.path.join(args.out, cmd)]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        code = cli.main(argv)
        print(f"{cmd}: exit {code}")
        worst = max(worst, code)
    sys.exit(worst)


if __name__ == "__main__":
    main()
