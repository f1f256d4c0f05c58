"""Ray-projected preconditioned descent of the energy on N+ and N-.

Each iterate lies on the chosen branch: the trial point |u - s d| is rescaled
along its ray to t1 (plus) or t2 (minus). Since psi'(1) = 0 at a Nehari point,
the energy gradient is a descent direction for the reduced functional
w -> energy(t(w) w), and the projection enforces the constraint exactly.

Two SPD preconditioners solve P d = g for the direction d:

``"stiffness"``
    the fixed xi-weighted linear stiffness matrix.
``"convex"`` (default)
    the second variation of the convex part of the energy at the current
    iterate: stiffness with coefficient (p-1) xi |grad u|^(p-2) plus the mass
    matrix of gamma a u^(-gamma-1). The concave lambda-term is left out so the
    matrix stays positive definite on both branches. For p = 2 the first part
    coincides with ``"stiffness"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import assembly, nehari
from .assembly import ProblemParams, WeightField
from .errors import InfeasibleRayError, InvalidInputError, NoIntersectionError
from .mesh import Mesh
from .nehari import Branch

MAX_SHRINKS = 40
SUFFICIENT_DECREASE = 1e-12
STALL_COUNT = 3
STALL_LIMIT = 50
LAGGED_GRADIENT_FLOOR = 1e-3


@dataclass(frozen=True)
class SolverConfig:
    branch: Branch = "plus"
    max_iters: int = 2000
    step_init: float = 1.0
    step_shrink: float = 0.5
    tol_energy: float = 1e-10
    tol_grad: float = 1e-6
    restarts: int = 2
    seed: int = 0
    preconditioner: str = "convex"

    def __post_init__(self):
        if self.preconditioner not in ("convex", "stiffness"):
            raise InvalidInputError(f"unknown preconditioner {self.preconditioner!r}")
        if self.branch not in ("plus", "minus"):
            raise InvalidInputError(f"branch must be 'plus' or 'minus', got {self.branch!r}")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if not 0.0 < self.step_shrink < 1.0:
            raise InvalidInputError("step_shrink must lie in (0, 1)")
        if not (self.step_init > 0 and self.tol_energy > 0 and self.tol_grad > 0):
            raise InvalidInputError("step_init and tolerances must be positive")
        if self.restarts < 0:
            raise InvalidInputError("restarts must be >= 0")


@dataclass
class SolveResult:
    u: np.ndarray
    energy: float
    nehari_residual: float
    d_value: float
    grad_norm: float
    iterations: int
    converged: bool
    branch: Branch = "plus"
    restart: int = 0
    energy_history: list = None


class Step(NamedTuple):
    u: np.ndarray
    energy: float
    integrals: tuple


def _assemble_interior(mesh: Mesh, local: np.ndarray) -> sp.csc_matrix:
    k = mesh.dimension + 1
    rows = np.repeat(mesh.elements, k, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, k)).ravel()
    M = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes))
    return M[mesh.interior][:, mesh.interior].tocsc()


def _stiffness_local(mesh: Mesh, coef: np.ndarray) -> np.ndarray:
    G = mesh.basis_gradients
    return np.einsum("ekd,eld->ekl", G, G) * (coef * mesh.element_measures)[:, None, None]


@lru_cache(maxsize=16)
def stiffness_factor(mesh: Mesh, weights: WeightField):
    """Sparse LU of the xi-weighted linear stiffness matrix on interior nodes."""
    return spla.splu(_assemble_interior(mesh, _stiffness_local(mesh, weights.xi)))


def convex_part_matrix(mesh: Mesh, weights: WeightField, params: ProblemParams, u) -> sp.csc_matrix:
    """Second variation of B/p - A/(1-gamma) at u, with lagged gradient magnitudes."""
    gnorm = np.linalg.norm(assembly.element_gradients(mesh, u), axis=1)
    gnorm = np.maximum(gnorm, LAGGED_GRADIENT_FLOOR * gnorm.max())
    local = _stiffness_local(mesh, weights.xi * (params.p - 1.0) * gnorm ** (params.p - 2.0))
    bary, W = assembly.element_rules(mesh)
    U = np.einsum("ek,eqk->eq", u[mesh.elements], bary)
    sing = np.zeros_like(U)
    pos = U > 0.0
    sing[pos] = params.gamma * U[pos] ** (-params.gamma - 1.0)
    f = weights.a[:, None] * sing * W
    local = local + np.einsum("eq,eqk,eql->ekl", f, bary, bary)
    return _assemble_interior(mesh, local)


def grad_norm(mesh, weights, params, u, g=None) -> float:
    """Weak residual norm relative to the operator term."""
    if g is None:
        g = assembly.energy_gradient(mesh, weights, params, u)
    scale = np.linalg.norm(assembly.operator_apply(mesh, weights, params, u))
    return float(np.linalg.norm(g) / scale)


def descent_direction(mesh, weights, params, u, g=None, preconditioner="convex") -> np.ndarray:
    if g is None:
        g = assembly.energy_gradient(mesh, weights, params, u)
    if preconditioner == "stiffness":
        return stiffness_factor(mesh, weights).solve(g)
    return spla.splu(convex_part_matrix(mesh, weights, params, u)).solve(g)


def _clamp(mesh: Mesh, v: np.ndarray) -> np.ndarray | None:
    v = np.abs(v)
    v[mesh.boundary_nodes] = 0.0
    vmax = v.max()
    if vmax == 0.0:
        return None
    floor = assembly.POSITIVITY_FLOOR * vmax
    inner = v[mesh.interior]
    v[mesh.interior] = np.maximum(inner, floor)
    return v


def descent_step(
    mesh: Mesh,
    weights: WeightField,
    params: ProblemParams,
    u: np.ndarray,
    step: float,
    branch: Branch,
    direction: np.ndarray | None = None,
    u_energy: float | None = None,
    decrease: float = SUFFICIENT_DECREASE,
) -> Step | None:
    """One trial step from a branch point; None when the trial is rejected.

    A trial is accepted when the projected energy drops below
    ``u_energy - decrease * |u_energy|``.
    """
    if direction is None:
        direction = descent_direction(mesh, weights, params, u)
    if u_energy is None:
        u_energy = assembly.energy(mesh, weights, params, u)
    v = u.copy()
    v[mesh.interior] -= step * direction
    w = _clamp(mesh, v)
    if w is None:
        return None
    B, A, R = assembly.fiber_integrals(mesh, weights, params, w)
    try:
        t = nehari.ray_time(B, A, R, params, branch)
    except NoIntersectionError:
        return None
    e = nehari.psi(B, A, R, params, t)
    if not e < u_energy - decrease * abs(u_energy):
        return None
    p, g, r = params.p, params.gamma, params.r
    return Step(t * w, e, (t**p * B, t ** (1.0 - g) * A, t**r * R))


def initial_fields(mesh: Mesh, config: SolverConfig) -> list[np.ndarray]:
    """Bump first, then seeded uniform-random positive interior fields."""
    fields = [mesh.bump()]
    rng = np.random.default_rng(config.seed)
    for _ in range(config.restarts):
        fields.append(assembly.field_from_interior(mesh, rng.uniform(0.1, 1.0, mesh.interior.size)))
    return fields


def _line_search(mesh, weights, params, config, u, d, E, decrease):
    step = config.step_init
    for _ in range(MAX_SHRINKS + 1):
        trial = descent_step(mesh, weights, params, u, step, config.branch, d, E, decrease)
        if trial is not None:
            return trial
        step *= config.step_shrink
    return None


def _descend(mesh, weights, params, config, u0, restart) -> SolveResult:
    u = nehari.project(mesh, weights, params, u0, config.branch)
    E = assembly.energy(mesh, weights, params, u)
    history = [E]
    stalls = 0
    converged = False
    it = 0
    while True:
        g = assembly.energy_gradient(mesh, weights, params, u)
        gn = grad_norm(mesh, weights, params, u, g)
        if stalls >= STALL_COUNT and gn <= config.tol_grad:
            converged = True
            break
        if it >= config.max_iters or stalls >= STALL_LIMIT:
            break
        d = descent_direction(mesh, weights, params, u, g, config.preconditioner)
        trial = _line_search(mesh, weights, params, config, u, d, E, SUFFICIENT_DECREASE)
        if trial is None and gn > config.tol_grad:
            # Decrease below the relative threshold but residual still too large: polish.
            trial = _line_search(mesh, weights, params, config, u, d, E, 0.0)
        if trial is None:
            # No admissible decrease along d: stationary to working precision.
            converged = gn <= config.tol_grad
            break
        it += 1
        rel = abs(E - trial.energy) / max(abs(E), np.finfo(float).tiny)
        stalls = stalls + 1 if rel <= config.tol_energy else 0
        u, E = trial.u, trial.energy
        history.append(E)
    cls = nehari.classify(mesh, weights, params, u)
    want = nehari.NehariTag.PLUS if config.branch == "plus" else nehari.NehariTag.MINUS
    converged = converged and cls.tag == want
    return SolveResult(
        u=u,
        energy=E,
        nehari_residual=cls.nehari_residual,
        d_value=cls.d_value,
        grad_norm=gn,
        iterations=it,
        converged=converged,
        branch=config.branch,
        restart=restart,
        energy_history=history,
    )


def minimize_on_branch(
    mesh: Mesh,
    weights: WeightField,
    params: ProblemParams,
    config: SolverConfig,
    initial: np.ndarray | None = None,
) -> SolveResult:
    """Lowest-energy converged result over all restarts (best iterate if none converged)."""
    params.check_dimension(mesh.dimension)
    assembly.check_weights(mesh, weights)
    starts = [initial] if initial is not None else initial_fields(mesh, config)
    results = []
    for k, u0 in enumerate(starts):
        try:
            results.append(_descend(mesh, weights, params, config, u0, k))
        except NoIntersectionError:
            continue
    if not results:
        raise InfeasibleRayError(
            f"no starting ray meets the Nehari manifold at lambda={params.lam!r}; try a smaller lambda"
        )
    pool = [r for r in results if r.converged] or results
    return min(pool, key=lambda r: (r.energy, r.restart))
