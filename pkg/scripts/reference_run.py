"""Both branch minimizers for the reference problem, in 1D and on the unit square.

    python3 scripts/reference_run.py [--out DIR] [--seed N]
"""

import argparse
import dataclasses
from pathlib import Path

from nehari_fem.cli import cmd_solve
from nehari_fem.config import MeshSpec, RunConfig, format_config

CASES = {
    "interval_p2": RunConfig(mesh=MeshSpec(kind="interval", nx=256)),
    "square_p2": RunConfig(mesh=MeshSpec(kind="rect", nx=32, ny=32)),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs/reference"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for name, cfg in CASES.items():
        out = args.out / name
        out.mkdir(parents=True, exist_ok=True)
        cfg = dataclasses.replace(cfg, seed=args.seed, out=str(out))
        (out / "config.txt").write_text(format_config(cfg))
        code = cmd_solve(cfg, out)
        print(f"{name}: exit {code}, report in {out / 'report.json'}")


if __name__ == "__main__":
    main()
