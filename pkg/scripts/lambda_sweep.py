"""Branch energies m+ and m- over a lambda grid, with the feasibility limit of each start direction.

    python3 scripts/lambda_sweep.py [--nx 128] [--out sweep.csv]
"""

import argparse
import csv

import numpy as np

from nehari_fem import assembly, nehari
from nehari_fem.assembly import ProblemParams, WeightField
from nehari_fem.errors import NoIntersectionError
from nehari_fem.mesh import build_interval_mesh
from nehari_fem.optimize import SolverConfig, initial_fields, minimize_on_branch


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nx", type=int, default=128)
    ap.add_argument("--out", default="sweep.csv")
    ap.add_argument("--points", type=int, default=12)
    args = ap.parse_args()

    mesh = build_interval_mesh(0.0, 1.0, args.nx)
    weights = WeightField.constant(mesh)
    base = ProblemParams(2.0, 0.5, 4.0, 1.0)
    lc = nehari.lambda_crit(*assembly.fiber_integrals(mesh, weights, base, mesh.bump()), base)
    print(f"lambda_crit along the bump: {lc:.6g}")
    for k, u0 in enumerate(initial_fields(mesh, SolverConfig())):
        print(f"  start {k}: lambda_crit {nehari.lambda_crit(*assembly.fiber_integrals(mesh, weights, base, u0), base):.6g}")

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "lambda_over_crit", "m_plus", "m_minus", "converged"])
        for lam in np.geomspace(1e-2, 1.2, args.points) * lc:
            prm = base.with_lambda(lam)
            try:
                res = [minimize_on_branch(mesh, weights, prm, SolverConfig(branch=b)) for b in ("plus", "minus")]
            except NoIntersectionError:
                w.writerow([f"{lam:.17g}", f"{lam / lc:.6g}", "nan", "nan", "false"])
                print(f"lambda {lam:10.4g}: infeasible")
                continue
            conv = all(r.converged for r in res)
            w.writerow([f"{lam:.17g}", f"{lam / lc:.6g}", f"{res[0].energy:.17g}", f"{res[1].energy:.17g}", str(conv).lower()])
            print(f"lambda {lam:10.4g}: m+ {res[0].energy:12.6g}  m- {res[1].energy:12.6g}  converged {conv}")


if __name__ == "__main__":
    main()
