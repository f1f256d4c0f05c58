"""Mesh-refinement table for the branch energies of the reference problem.

    python3 scripts/refinement_study.py [--dim 1|2] [--p 2]
"""

import argparse

from nehari_fem.assembly import ProblemParams, WeightField
from nehari_fem.mesh import build_interval_mesh, build_rect_mesh
from nehari_fem.optimize import SolverConfig, minimize_on_branch


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, choices=(1, 2), default=1)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--lam", type=float, default=1.0)
    args = ap.parse_args()

    params = ProblemParams(args.p, 0.5, 4.0, args.lam)
    sizes = (16, 32, 64, 128, 256, 512) if args.dim == 1 else (8, 16, 32, 48)
    prev = None
    print(f"{'n':>5} {'m_plus':>16} {'m_minus':>16} {'gap_plus':>10} {'gap_minus':>10} {'iters':>6}")
    for n in sizes:
        mesh = build_interval_mesh(0.0, 1.0, n) if args.dim == 1 else build_rect_mesh((0, 1), (0, 1), n, n)
        w = WeightField.constant(mesh)
        res = [minimize_on_branch(mesh, w, params, SolverConfig(branch=b)) for b in ("plus", "minus")]
        e = [r.energy for r in res]
        gaps = ["" if prev is None else f"{abs(a - b) / abs(a):.2e}" for a, b in zip(e, prev or e)]
        its = res[0].iterations + res[1].iterations
        print(f"{n:>5} {e[0]:>16.10g} {e[1]:>16.10g} {gaps[0]:>10} {gaps[1]:>10} {its:>6}")
        prev = e


if __name__ == "__main__":
    main()
