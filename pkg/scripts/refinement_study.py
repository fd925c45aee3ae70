"""Grid refinement of the translator run: steadiness error and W-equation residual.

    python scripts/refinement_study.py --hs 0.1,0.05,0.025
"""

import argparse

import numpy as np

from mcflab.monitors import w_evolution_residual
from mcflab.solitons import translator_profile
from mcflab.solver import SolverConfig, evolve


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--hs", default="0.1,0.05,0.025")
    ap.add_argument("--rmax", type=float, default=20.0)
    ap.add_argument("--tend", type=float, default=1.0)
    ap.add_argument("--speed", type=float, default=1.0)
    args = ap.parse_args()

    prev = None
    print(f"{'h':>8} {'steady err':>12} {'ratio':>7} {'W residual':>12} {'ratio':>7} {'C = res/h^2':>12}")
    for h in (float(x) for x in args.hs.split(",")):
        sol = translator_profile(args.speed, 2, args.rmax, h)
        stride = max(1, int(round(100 * (0.05 / h) ** 2)))
        traj = evolve(sol.profile, SolverConfig(t_end=args.tend, sample_stride=stride))
        err = float(np.max(np.abs(traj.samples[-1].profile.u - (sol.u + args.speed * traj.times[-1]))))
        res = w_evolution_residual(traj).extra["max_residual"]
        r1 = f"{prev[0] / err:7.2f}" if prev else " " * 7
        r2 = f"{prev[1] / res:7.2f}" if prev else " " * 7
        print(f"{h:>8g} {err:>12.4e} {r1} {res:>12.4e} {r2} {res / h**2:>12.4f}")
        prev = (err, res)


if __name__ == "__main__":
    main()
