"""Command-line driver.

    nehari-fem {solve,fiber,sweep,verify,mesh} [--config PATH] [--out DIR] [--seed N] [--lambda X]

Exit status: 0 when every requested check passes, 1 when a check fails,
2 on invalid input (one ``error: ...`` line on stderr), 3 when a branch solve
does not converge (artifacts are still written).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import assembly, nehari, verify
from .config import RunConfig, fmt, format_config, load_config
from .errors import DomainError, InvalidInputError, NoIntersectionError, SingularityGuardError
from .mesh import Mesh, write_mesh
from .optimize import minimize_on_branch

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3


def to_json(obj, indent=0) -> str:
    """JSON with floats written to 17 significant digits; non-finite floats become null."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + to_json(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_json(path: Path, obj) -> None:
    path.write_text(to_json(obj) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _mesh_summary(cfg: RunConfig, mesh: Mesh) -> dict:
    return {
        "kind": cfg.mesh.kind,
        "dimension": mesh.dimension,
        "n_nodes": mesh.n_nodes,
        "n_elements": mesh.n_elements,
        "x": list(cfg.mesh.x),
        "y": list(cfg.mesh.y) if mesh.dimension == 2 else None,
    }


def _params_summary(params) -> dict:
    return {"p": params.p, "gamma": params.gamma, "r": params.r, "lambda": params.lam}


def _checks_json(checks) -> list:
    return [
        {"name": c.name, "max_relative_error": c.max_relative_error, "tolerance": c.tolerance, "pass": c.passed}
        for c in checks
    ]


def _problem() -> dict:
    return {
        "equation": "-div(xi |grad u|^(p-2) grad u) = a u^(-gamma) + lambda u^(r-1), u = 0 on boundary",
    }


def solve_branches(cfg: RunConfig, mesh, weights):
    results = {}
    for branch in ("plus", "minus"):
        conf = dataclasses.replace(cfg.solver, branch=branch, seed=cfg.seed)
        results[branch] = minimize_on_branch(mesh, weights, cfg.params, conf)
    return results


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    mesh, weights = cfg.validate()
    results = solve_branches(cfg, mesh, weights)
    branch_json = []
    ok = True
    for branch, res in results.items():
        rep = verify.verify_solution(mesh, weights, cfg.params, res.u)
        good = res.converged and rep.passed(branch)
        ok &= good
        assembly.write_field_csv(out / f"u_{branch}.csv", res.u)
        branch_json.append(
            {
                "branch": branch,
                "energy": res.energy,
                "nehari_residual": res.nehari_residual,
                "d_value": res.d_value,
                "grad_norm": res.grad_norm,
                "iterations": res.iterations,
                "converged": res.converged,
                "restart": res.restart,
                "weak_residual_rel": rep.weak_residual_rel,
                "min_interior": rep.min_interior,
                "max_value": rep.max_value,
                "class": rep.nehari_class.tag.value,
                "identity_checks": _checks_json(rep.identity_checks),
                "pass": good,
            }
        )
    ordered = results["plus"].energy < 0.0 <= results["minus"].energy
    suite = verify.run_invariant_suite(mesh, weights, cfg.params, cfg.seed, cfg.verify_n_directions)
    lam_star = verify.estimate_lambda_star(mesh, weights, cfg.params, cfg.verify_n_directions, cfg.seed)
    passed = ok and ordered and verify.suite_passed(suite)
    _write_json(
        out / "report.json",
        {
            "problem": _problem(),
            "mesh": _mesh_summary(cfg, mesh),
            "params": _params_summary(cfg.params),
            "branch_results": branch_json,
            "energy_ordering": ordered,
            "identity_checks": _checks_json(suite),
            "lambda_star_estimate": {"value": lam_star, "label": "sampled upper bound"},
            "pass": passed,
        },
    )
    rows = [
        tuple(float(c) for c in mesh.nodes[i]) + (float(results["plus"].u[i]), float(results["minus"].u[i]))
        for i in range(mesh.n_nodes)
    ]
    coords = ["x", "y"][: mesh.dimension]
    _write_csv(out / "profile.csv", coords + ["u_plus", "u_minus"], rows)
    if not all(r.converged for r in results.values()):
        return EXIT_NONCONVERGED
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def _fiber_direction(cfg: RunConfig, mesh: Mesh) -> np.ndarray:
    kind = cfg.fiber_direction
    if kind == "bump":
        return mesh.bump()
    if kind == "random":
        rng = np.random.default_rng(cfg.seed)
        return verify.random_directions(mesh, 1, rng)[0]
    return assembly.read_field_csv(kind, mesh)


def cmd_fiber(cfg: RunConfig, out: Path) -> int:
    mesh, weights = cfg.validate()
    u = _fiber_direction(cfg, mesh)
    fa = nehari.analyze_field(mesh, weights, cfg.params, u)
    table = nehari.fiber_table(fa.B, fa.A, fa.R, cfg.params, cfg.fiber_t_min, cfg.fiber_t_max, cfg.fiber_n)
    _write_csv(out / "fiber.csv", ["t", "eta", "psi", "psi_prime"], [tuple(map(float, r)) for r in table])
    roots = fa.roots
    _write_json(
        out / "fiber.json",
        {
            "B": fa.B,
            "A": fa.A,
            "R": fa.R,
            "t_hat": fa.t_hat,
            "t0": fa.t0,
            "t1": roots.t1 if roots else None,
            "t2": roots.t2 if roots else None,
            "lambda_crit": fa.lambda_crit,
        },
    )
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    mesh, weights = cfg.validate()
    u = _fiber_direction(cfg, mesh)
    B, A, R = assembly.fiber_integrals(mesh, weights, cfg.params, u)
    lc = nehari.lambda_crit(B, A, R, cfg.params)
    rows = []
    first_infeasible = None
    for lam in cfg.sweep_lambdas:
        params = cfg.params.with_lambda(lam)
        feasible = nehari.fibering_roots(B, A, R, params) is not None
        if not feasible and first_infeasible is None:
            first_infeasible = lam
        m_plus = m_minus = math.nan
        conv = False
        if feasible and cfg.sweep_solve:
            try:
                res = solve_branches(dataclasses.replace(cfg, params=params), mesh, weights)
                m_plus, m_minus = res["plus"].energy, res["minus"].energy
                conv = all(r.converged for r in res.values())
            except NoIntersectionError:
                pass
        rows.append((float(lam), m_plus, m_minus, "true" if feasible else "false", "true" if conv else "false"))
    _write_csv(out / "sweep.csv", ["lambda", "m_plus", "m_minus", "feasible", "converged"], rows)
    _write_json(
        out / "sweep.json",
        {"direction": cfg.fiber_direction, "lambda_crit": lc, "first_infeasible_lambda": first_infeasible},
    )
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    mesh, weights = cfg.validate()
    suite = verify.run_invariant_suite(mesh, weights, cfg.params, cfg.seed, cfg.verify_n_directions)
    lam_star = verify.estimate_lambda_star(mesh, weights, cfg.params, cfg.verify_n_directions, cfg.seed)
    passed = verify.suite_passed(suite)
    _write_json(
        out / "verify.json",
        {
            "problem": _problem(),
            "mesh": _mesh_summary(cfg, mesh),
            "params": _params_summary(cfg.params),
            "identity_checks": _checks_json(suite),
            "lambda_star_estimate": {"value": lam_star, "label": "sampled upper bound"},
            "pass": passed,
        },
    )
    for c in suite:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} {fmt(c.max_relative_error)} <= {fmt(c.tolerance)}")
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_mesh(cfg: RunConfig, out: Path) -> int:
    write_mesh(cfg.mesh.build(), out / "mesh.txt")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "fiber": cmd_fiber,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "mesh": cmd_mesh,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nehari-fem", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="key = value configuration file")
    ap.add_argument("--out", type=Path, help="output directory (overrides run.out)")
    ap.add_argument("--seed", type=int, help="overrides run.seed")
    ap.add_argument("--lambda", dest="lam", type=float, help="overrides params.lambda")
    return ap


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.out is not None:
        changes["out"] = str(args.out)
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.lam is not None:
        changes["params"] = cfg.params.with_lambda(args.lam)
    return dataclasses.replace(cfg, **changes)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(format_config(cfg))
        return COMMANDS[args.command](cfg, out)
    except (InvalidInputError, DomainError, SingularityGuardError) as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
