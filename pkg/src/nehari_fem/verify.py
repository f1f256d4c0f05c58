"""Numerical certificates for computed solutions and the fibering identities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import assembly, nehari
from .assembly import ProblemParams, WeightField
from .mesh import Mesh
from .optimize import SolveResult

WEAK_RESIDUAL_TOL = 1e-5
ENERGY_IDENTITY_TOL = 1e-8


def rel_err(x, y) -> float:
    scale = max(abs(x), abs(y))
    return 0.0 if scale == 0.0 else abs(x - y) / scale


class IdentityCheck(NamedTuple):
    name: str
    max_relative_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_relative_error <= self.tolerance


@dataclass
class VerificationReport:
    weak_residual_rel: float
    min_interior: float
    max_value: float
    energy: float
    nehari_class: nehari.NehariClass
    identity_checks: list = field(default_factory=list)
    lambda_star_estimate: float = math.nan

    def passed(self, branch: nehari.Branch) -> bool:
        want = nehari.NehariTag.PLUS if branch == "plus" else nehari.NehariTag.MINUS
        return (
            self.weak_residual_rel <= WEAK_RESIDUAL_TOL
            and self.min_interior > 0.0
            and math.isfinite(self.max_value)
            and self.nehari_class.tag == want
            and all(c.passed for c in self.identity_checks)
        )


def weak_residual(mesh: Mesh, weights: WeightField, params: ProblemParams, u):
    """Residual of the discrete weak form per interior hat, and its norm relative to the operator term."""
    res = assembly.energy_gradient(mesh, weights, params, u)
    scale = np.linalg.norm(assembly.operator_apply(mesh, weights, params, u))
    return res, float(np.linalg.norm(res) / scale)


def check_positivity(mesh: Mesh, u) -> tuple[float, float]:
    u = np.asarray(u, dtype=float)
    inner = u[mesh.interior]
    return float(inner.min()) if inner.size else 0.0, float(u.max())


def nehari_energy_identity(B, A, R, params: ProblemParams) -> tuple[float, float]:
    """Energy and its Nehari-reduced form (1/p - 1/r) B - (1/(1-gamma) - 1/r) A."""
    p, g, r = params.p, params.gamma, params.r
    reduced = (1.0 / p - 1.0 / r) * B - (1.0 / (1.0 - g) - 1.0 / r) * A
    return assembly.energy_from_integrals(B, A, R, params), reduced


def verify_solution(mesh: Mesh, weights: WeightField, params: ProblemParams, u) -> VerificationReport:
    _, rel = weak_residual(mesh, weights, params, u)
    lo, hi = check_positivity(mesh, u)
    B, A, R = assembly.fiber_integrals(mesh, weights, params, u)
    e, reduced = nehari_energy_identity(B, A, R, params)
    return VerificationReport(
        weak_residual_rel=rel,
        min_interior=lo,
        max_value=hi,
        energy=e,
        nehari_class=nehari.classify_integrals(B, A, R, params),
        identity_checks=[IdentityCheck("nehari_energy_identity", rel_err(e, reduced), ENERGY_IDENTITY_TOL)],
    )


def random_directions(mesh: Mesh, n: int, rng: np.random.Generator) -> list[np.ndarray]:
    return [assembly.field_from_interior(mesh, rng.uniform(0.05, 1.0, mesh.interior.size)) for _ in range(n)]


def estimate_lambda_star(
    mesh: Mesh, weights: WeightField, params: ProblemParams, n_directions: int, seed: int = 0
) -> float:
    """Sampled upper bound on lambda*: min of lambda_crit over the bump and random rays."""
    rng = np.random.default_rng(seed)
    dirs = [mesh.bump()] + random_directions(mesh, n_directions, rng)
    return min(nehari.lambda_crit(*assembly.fiber_integrals(mesh, weights, params, u), params) for u in dirs)


# -- invariant suite ----------------------------------------------------------


def _max(values) -> float:
    values = list(values)
    return max(values) if values else 0.0


def run_invariant_suite(
    mesh: Mesh,
    weights: WeightField,
    params: ProblemParams,
    seed: int = 0,
    n_directions: int = 100,
    n_times: int = 100,
) -> list[IdentityCheck]:
    """Assembly and fibering identities on seeded random positive fields.

    Checks that count sign violations report the count as their error with tolerance 0.
    """
    rng = np.random.default_rng(seed)
    dirs = random_directions(mesh, n_directions, rng)
    trip = [assembly.fiber_integrals(mesh, weights, params, u) for u in dirs]
    p, g, r = params.p, params.gamma, params.r
    checks = []

    # assembly
    hom = []
    for u, (B, A, R) in zip(dirs[:20], trip):
        for c in (0.5, 2.0, 10.0):
            Bc, Ac, Rc = assembly.fiber_integrals(mesh, weights, params, c * u)
            hom += [rel_err(Bc, c**p * B), rel_err(Ac, c ** (1 - g) * A), rel_err(Rc, c**r * R)]
    checks.append(IdentityCheck("homogeneity", _max(hom), 1e-12))

    euler = [
        rel_err(assembly.operator_apply(mesh, weights, params, u) @ u[mesh.interior], B)
        for u, (B, _, _) in zip(dirs, trip)
    ]
    checks.append(IdentityCheck("euler_identity", _max(euler), 1e-12))

    fd = []
    for u in dirs[:5]:
        grad = assembly.energy_gradient(mesh, weights, params, u)
        for k in rng.choice(mesh.interior.size, size=min(3, mesh.interior.size), replace=False):
            h = np.zeros(mesh.n_nodes)
            h[mesh.interior[k]] = 1e-6
            num = (
                assembly.energy(mesh, weights, params, u + h)
                - assembly.energy(mesh, weights, params, u - h)
            ) / 2e-6
            fd.append(rel_err(grad[k], num))
    checks.append(IdentityCheck("gradient_finite_difference", _max(fd), 1e-4))

    kappa = 3.0
    wk = weights.scaled(xi_factor=kappa)
    ws = []
    for u, (B, _, _) in zip(dirs[:10], trip):
        ws.append(rel_err(assembly.integral_gradient_p(mesh, wk, params, u), kappa * B))
        a1 = assembly.operator_apply(mesh, weights, params, u)
        a2 = assembly.operator_apply(mesh, wk, params, u)
        ws.append(float(np.max(np.abs(a2 - kappa * a1)) / np.max(np.abs(kappa * a1))))
    checks.append(IdentityCheck("weight_scaling", _max(ws), 1e-12))

    zero = abs(assembly.energy(mesh, weights, params, np.zeros(mesh.n_nodes)))
    checks.append(IdentityCheck("energy_at_zero", zero, 0.0))

    # fibering, each ray at half its critical parameter
    psi_id, root_res, curv, sign_viol, eta_hat, scale_err, nehari_id, plus_sign = ([] for _ in range(8))
    for B, A, R in trip:
        lc = nehari.lambda_crit(B, A, R, params)
        pl = params.with_lambda(0.5 * lc)
        for t in np.exp(rng.uniform(math.log(0.01), math.log(10.0), n_times)):
            lhs = nehari.psi_prime(B, A, R, pl, t)
            rhs = t ** (r - 1) * (nehari.eta(B, A, pl, t) - pl.lam * R)
            psi_id.append(abs(lhs - rhs) / max(abs(lhs), abs(rhs), t ** (r - 1) * pl.lam * R))
        t1, t2, _ = nehari.fibering_roots(B, A, R, pl)
        level = pl.lam * R
        root_res += [abs(nehari.eta(B, A, pl, t) - level) / max(1.0, level) for t in (t1, t2)]
        for t, sgn in ((t1, 1.0), (t2, -1.0)):
            d2 = nehari.psi_double_prime(B, A, R, pl, t)
            alt = t ** (r - 1) * nehari.eta_prime(B, A, pl, t)
            curv.append(rel_err(d2, alt))
            sign_viol.append(0.0 if sgn * d2 > 0 and sgn * alt > 0 else 1.0)
        th = nehari.t_hat(B, A, pl)
        eta_hat.append(abs(nehari.eta(B, A, pl, th)) / (th ** (p - r) * B))
        for c in (0.5, 2.0, 10.0):
            Bc, Ac, Rc = c**p * B, c ** (1 - g) * A, c**r * R
            rc = nehari.fibering_roots(Bc, Ac, Rc, pl)
            scale_err += [
                rel_err(c * nehari.t_hat(Bc, Ac, pl), th),
                rel_err(c * nehari.t_zero(Bc, Ac, pl), nehari.t_zero(B, A, pl)),
                rel_err(c * rc.t1, t1),
                rel_err(c * rc.t2, t2),
                rel_err(nehari.lambda_crit(Bc, Ac, Rc, pl), lc),
            ]
        for t in (t1, t2):
            Bt, At, Rt = t**p * B, t ** (1 - g) * A, t**r * R
            e, reduced = nehari_energy_identity(Bt, At, Rt, pl)
            nehari_id.append(rel_err(e, reduced))
        plus_sign.append(0.0 if nehari.psi(B, A, R, pl, t1) < 0.0 else 1.0)

    checks += [
        IdentityCheck("psi_prime_identity", _max(psi_id), 1e-10),
        IdentityCheck("root_residual", _max(root_res), 1e-12),
        IdentityCheck("curvature_at_roots", _max(curv), 1e-8),
        IdentityCheck("curvature_sign_violations", sum(sign_viol), 0.0),
        IdentityCheck("eta_zero_at_t_hat", _max(eta_hat), 1e-10),
        IdentityCheck("ray_scaling", _max(scale_err), 1e-10),
        IdentityCheck("nehari_energy_identity", _max(nehari_id), 1e-10),
        IdentityCheck("plus_energy_sign_violations", sum(plus_sign), 0.0),
    ]

    lam_star = min(nehari.lambda_crit(B, A, R, params) for B, A, R in trip)
    small = params.with_lambda(1e-3 * lam_star)
    minus_viol = 0
    for B, A, R in trip:
        t2 = nehari.fibering_roots(B, A, R, small).t2
        minus_viol += nehari.psi(B, A, R, small, t2) < 0.0
    checks.append(IdentityCheck("minus_energy_sign_violations_small_lambda", float(minus_viol), 0.0))
    return checks


def suite_passed(checks) -> bool:
    return all(c.passed for c in checks)


def refinement_gap(coarse: SolveResult, fine: SolveResult) -> float:
    """|m(h) - m(h/2)| / |m(h/2)|."""
    return abs(coarse.energy - fine.energy) / abs(fine.energy)
