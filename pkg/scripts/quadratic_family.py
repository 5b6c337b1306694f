"""Dimension of the maximal-entropy measure across real quadratics z^2 + c.

For each c the Lyapunov exponent L and both dimension estimates are
compared with log 2 / L.  Values of c with a connected Julia set (c in
[-2, 1/4]) should give L = log 2; for c < -2 the set is a Cantor set and
the dimension drops below 1.

    python scripts/quadratic_family.py --c -6 -4 -3 -2.5 -2 -1 0
"""

import argparse
from dataclasses import dataclass, field

from pluridim import endomorphism as E
from pluridim.dimension import estimate_dimension, mane_formula
from pluridim.lyapunov import estimate_exponents
from pluridim.sampler import sample_measure


@dataclass
class FamilyConfig:
    c_values: list = field(default_factory=lambda: [-6.0, -4.0, -3.0, -2.5, -2.0, -1.0, 0.0])
    n_points: int = 20_000
    cocycle: int = 50
    seed: int = 1


def run(cfg):
    for c in cfg.c_values:
        F = E.one_d([c, 0, 1])
        S = sample_measure(F, cfg.n_points, seed=cfg.seed)
        lam = estimate_exponents(F, S, cfg.cocycle, seed=cfg.seed).lambda_max
        rep = estimate_dimension(S.points, seed=cfg.seed)
        flag = "  unreliable" if rep.unreliable else ""
        print(f"c = {c:>6}: L = {lam:.4f}  log2/L = {mane_formula(2, lam):.4f}  "
              f"correlation = {rep.correlation_dim:.4f}  knn = {rep.knn_dim:.4f}{flag}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--c", type=float, nargs="+", default=FamilyConfig().c_values)
    p.add_argument("--n-points", type=int, default=FamilyConfig.n_points)
    p.add_argument("--seed", type=int, default=FamilyConfig.seed)
    args = p.parse_args()
    run(FamilyConfig(args.c, args.n_points, FamilyConfig.cocycle, args.seed))


if __name__ == "__main__":
    main()
