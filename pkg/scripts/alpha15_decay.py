"""Axis curvature decay for the mollified |y|^1.5 graph across rigs.

Prints |A|(0,t_end)/|A|(0,1) and the fitted late-time exponent of |A|(0,t),
to compare with the self-similar prediction (alpha - 2)/2.

    python scripts/alpha15_decay.py --rmax 30,60 --eps 0.05,0.1,0.2
"""

import argparse

import numpy as np

from mcflab.geometry import GraphProfile, RadialGrid
from mcflab.initial_data import power_graph
from mcflab.monitors import loglog_slope
from mcflab.solver import SolverConfig, evolve


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--alpha", type=float, default=1.5)
    ap.add_argument("--rmax", default="30")
    ap.add_argument("--h", default="0.05")
    ap.add_argument("--eps", default="0.1")
    ap.add_argument("--tend", type=float, default=5.0)
    args = ap.parse_args()

    print(f"predicted exponent {(args.alpha - 2) / 2:+.3f}, predicted ratio {args.tend ** ((args.alpha - 2) / 2):.4f}")
    print(f"{'r_max':>6} {'h':>7} {'eps':>6} {'ratio':>8} {'exponent':>9}")
    for R in (float(x) for x in args.rmax.split(",")):
        for h in (float(x) for x in args.h.split(",")):
            for eps in (float(x) for x in args.eps.split(",")):
                grid = RadialGrid.uniform(2, R, h)
                traj = evolve(GraphProfile(grid, power_graph(args.alpha, eps)(grid.r)), SolverConfig(t_end=args.tend))
                axis = np.sqrt(traj.field("A2")[:, 0])
                t = traj.times
                ratio = axis[traj.nearest(args.tend)] / axis[traj.nearest(1.0)]
                late = t >= 0.5 * t[-1]
                print(f"{R:>6g} {h:>7g} {eps:>6g} {ratio:>8.4f} {loglog_slope(t[late], axis[late]):>+9.3f}")


if __name__ == "__main__":
    main()
