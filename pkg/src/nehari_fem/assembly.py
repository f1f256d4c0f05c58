"""Integrals, energy, operator action and energy gradient on P1 fields.

Conventions
-----------
A field is a full nodal vector (one value per mesh node) with exact zeros on
the boundary nodes. Residual-type outputs are interior vectors ordered like
``mesh.interior``.

The gradient term is integrated exactly (P1 gradients and per-element weights
are constant). The terms involving ``|u|**(1 - gamma)``, ``u**(-gamma)`` and
``|u|**r`` use a fixed rule: 7-point Gauss-Legendre per interval (graded on
cells touching the boundary) and a 16-point symmetric degree-8 rule per
triangle. The energy gradient is the exact derivative of the discrete energy
built with that same rule.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, SingularityGuardError
from .mesh import Mesh

POSITIVITY_FLOOR = 1e-10


@dataclass(frozen=True)
class ProblemParams:
    """Exponents and parameter of the problem; ``lam`` is the coefficient lambda."""

    p: float
    gamma: float
    r: float
    lam: float

    def __post_init__(self):
        for name in ("p", "gamma", "r", "lam"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InvalidInputError(f"{name} must be a finite real, got {v!r}")
        if not 0.0 < self.gamma < 1.0:
            raise InvalidInputError(f"need 0 < gamma < 1, got gamma={self.gamma}")
        if not 1.0 < self.p < self.r:
            raise InvalidInputError(f"need 1 < p < r, got p={self.p}, r={self.r}")
        if not self.lam > 0.0:
            raise InvalidInputError(f"need lambda > 0, got {self.lam}")

    def critical_exponent(self, dimension: int) -> float:
        if self.p < dimension:
            return dimension * self.p / (dimension - self.p)
        return math.inf

    def check_dimension(self, dimension: int) -> None:
        p_star = self.critical_exponent(dimension)
        if not self.r < p_star:
            raise InvalidInputError(
                f"need r < p* = {p_star} in dimension {dimension}, got r={self.r}"
            )

    def with_lambda(self, lam: float) -> ProblemParams:
        return ProblemParams(self.p, self.gamma, self.r, lam)


@dataclass(frozen=True, eq=False)
class WeightField:
    """Per-element diffusion weight ``xi`` and singular-term weight ``a``."""

    xi: np.ndarray
    a: np.ndarray
    xi0: float

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        a = np.asarray(self.a, dtype=float)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "a", a)
        if xi.ndim != 1 or a.shape != xi.shape:
            raise InvalidInputError("xi and a must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(xi)) and np.all(np.isfinite(a))):
            raise InvalidInputError("weights must be finite")
        if not self.xi0 > 0.0:
            raise InvalidInputError(f"xi0 must be positive, got {self.xi0}")
        if xi.min() < self.xi0:
            raise InvalidInputError(f"min(xi) = {xi.min()} is below xi0 = {self.xi0}")
        if not np.all(a > 0.0):
            raise InvalidInputError("a must be strictly positive on every element")
        xi.setflags(write=False)
        a.setflags(write=False)

    @classmethod
    def constant(cls, mesh: Mesh, xi: float = 1.0, a: float = 1.0) -> WeightField:
        m = mesh.n_elements
        return cls(np.full(m, float(xi)), np.full(m, float(a)), float(xi))

    @classmethod
    def step(cls, mesh: Mesh, xi_left, xi_right, a_left=1.0, a_right=1.0, split=None):
        """Values jump across the plane x = split (domain midpoint by default)."""
        cx = mesh.element_centroids()[:, 0]
        if split is None:
            split = 0.5 * (mesh.nodes[:, 0].min() + mesh.nodes[:, 0].max())
        left = cx < split
        xi = np.where(left, float(xi_left), float(xi_right))
        a = np.where(left, float(a_left), float(a_right))
        return cls(xi, a, float(min(xi_left, xi_right)))

    def scaled(self, xi_factor=1.0, a_factor=1.0) -> WeightField:
        return WeightField(self.xi * xi_factor, self.a * a_factor, self.xi0 * xi_factor)


def check_weights(mesh: Mesh, weights: WeightField) -> None:
    if weights.xi.shape[0] != mesh.n_elements:
        raise InvalidInputError(
            f"weights have {weights.xi.shape[0]} entries, mesh has {mesh.n_elements} elements"
        )


def check_field(mesh: Mesh, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_nodes,):
        raise InvalidInputError(f"field has shape {u.shape}, expected ({mesh.n_nodes},)")
    if not np.all(np.isfinite(u)):
        raise InvalidInputError("field values must be finite")
    if np.any(u[mesh.boundary_nodes] != 0.0):
        raise InvalidInputError("field must vanish on boundary nodes")
    return u


def field_from_interior(mesh: Mesh, values) -> np.ndarray:
    u = np.zeros(mesh.n_nodes)
    u[mesh.interior] = values
    return u


# -- quadrature -------------------------------------------------------------


@lru_cache(maxsize=None)
def quadrature_rule(dimension: int):
    """Barycentric points (q, d+1) and weights (q,) normalized to sum to 1."""
    if dimension == 1:
        x, w = np.polynomial.legendre.leggauss(7)
        s = 0.5 * (x + 1.0)
        return np.column_stack([1.0 - s, s]), 0.5 * w
    pts = [(1 / 3, 1 / 3, 1 / 3)]
    wts = [0.144315607677787]
    for w, a in (
        (0.095091634267285, 0.459292588292723),
        (0.103217370534718, 0.170569307751760),
        (0.032458497623198, 0.050547228317031),
    ):
        orbit = sorted(set(itertools.permutations((a, a, 1.0 - 2.0 * a))))
        pts += orbit
        wts += [w] * len(orbit)
    a, b = 0.008394777409958, 0.263112829634638
    orbit = sorted(set(itertools.permutations((a, b, 1.0 - a - b))))
    pts += orbit
    wts += [0.027230314174435] * len(orbit)
    return np.array(pts), np.array(wts)


@lru_cache(maxsize=32)
def element_rules(mesh: Mesh):
    """Per-element barycentric points (m, q, d+1) and absolute weights (m, q).

    On intervals with a boundary vertex the Gauss points are graded toward that
    vertex by s = tau**2; fields vanish there and the graded rule integrates
    s**(1 - gamma), s**(-gamma) * s and polynomials of degree <= 6 exactly.
    """
    bary, w = quadrature_rule(mesh.dimension)
    m = mesh.n_elements
    B = np.broadcast_to(bary, (m,) + bary.shape).copy()
    W = mesh.element_measures[:, None] * w[None, :]
    if mesh.dimension == 1:
        s = bary[:, 1]
        graded = np.column_stack([1.0 - s**2, s**2])
        gw = w * 2.0 * s
        on_bdry = np.isin(mesh.elements, mesh.boundary_nodes)
        for e in np.flatnonzero(on_bdry[:, 0] & ~on_bdry[:, 1]):
            B[e] = graded
            W[e] = mesh.element_measures[e] * gw
        for e in np.flatnonzero(on_bdry[:, 1] & ~on_bdry[:, 0]):
            B[e] = graded[:, ::-1]
            W[e] = mesh.element_measures[e] * gw
    B.setflags(write=False)
    W.setflags(write=False)
    return B, W


def _at_quad_points(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    bary, _ = element_rules(mesh)
    return np.einsum("ek,eqk->eq", u[mesh.elements], bary)  # (m, q)


def _quad_weights(mesh: Mesh) -> np.ndarray:
    return element_rules(mesh)[1]


def _scatter_interior(mesh: Mesh, local: np.ndarray) -> np.ndarray:
    """Sum (m, d+1) element contributions into nodes; keep interior entries."""
    full = np.bincount(mesh.elements.ravel(), weights=local.ravel(), minlength=mesh.n_nodes)
    return full[mesh.interior]


def element_gradients(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    return np.einsum("ek,ekd->ed", u[mesh.elements], mesh.basis_gradients)


# -- integrals ---------------------------------------------------------------


def integral_gradient_p(mesh: Mesh, weights: WeightField, params: ProblemParams, u) -> float:
    u = check_field(mesh, u)
    check_weights(mesh, weights)
    g = np.linalg.norm(element_gradients(mesh, u), axis=1)
    return float(np.sum(weights.xi * g**params.p * mesh.element_measures))


def integral_singular(mesh: Mesh, weights: WeightField, params: ProblemParams, u) -> float:
    u = check_field(mesh, u)
    check_weights(mesh, weights)
    U = np.abs(_at_quad_points(mesh, u))
    return float(np.sum(weights.a[:, None] * U ** (1.0 - params.gamma) * _quad_weights(mesh)))


def integral_r(mesh: Mesh, params: ProblemParams, u) -> float:
    u = check_field(mesh, u)
    U = np.abs(_at_quad_points(mesh, u))
    return float(np.sum(U**params.r * _quad_weights(mesh)))


def fiber_integrals(mesh: Mesh, weights: WeightField, params: ProblemParams, u):
    """The triple (B, A, R) of gradient, singular and power integrals."""
    return (
        integral_gradient_p(mesh, weights, params, u),
        integral_singular(mesh, weights, params, u),
        integral_r(mesh, params, u),
    )


def energy_from_integrals(B: float, A: float, R: float, params: ProblemParams) -> float:
    p, g, r, lam = params.p, params.gamma, params.r, params.lam
    return B / p - A / (1.0 - g) - lam * R / r


def energy(mesh: Mesh, weights: WeightField, params: ProblemParams, u) -> float:
    return energy_from_integrals(*fiber_integrals(mesh, weights, params, u), params)


# -- operator and gradient ---------------------------------------------------


def operator_apply(mesh: Mesh, weights: WeightField, params: ProblemParams, u) -> np.ndarray:
    """Interior vector of <A(u), phi_i> for the weighted p-Laplacian."""
    u = check_field(mesh, u)
    check_weights(mesh, weights)
    grad = element_gradients(mesh, u)
    norm = np.linalg.norm(grad, axis=1)
    coef = np.zeros_like(norm)
    nz = norm > 0.0
    coef[nz] = weights.xi[nz] * norm[nz] ** (params.p - 2.0) * mesh.element_measures[nz]
    local = np.einsum("ed,ekd->ek", coef[:, None] * grad, mesh.basis_gradients)
    return _scatter_interior(mesh, local)


def check_floor(mesh: Mesh, u: np.ndarray) -> None:
    umax = float(np.max(np.abs(u))) if u.size else 0.0
    floor = POSITIVITY_FLOOR * umax
    vals = u[mesh.interior]
    if umax == 0.0 or np.any(vals < floor):
        raise SingularityGuardError(
            f"interior minimum {vals.min() if vals.size else 0.0!r} below floor {floor!r}"
        )


def reaction_load(mesh: Mesh, weights: WeightField, params: ProblemParams, u) -> np.ndarray:
    """Interior vector of int (a u^-gamma + lambda u^(r-1)) phi_i, by quadrature."""
    u = check_field(mesh, u)
    check_weights(mesh, weights)
    check_floor(mesh, u)
    bary, _ = element_rules(mesh)
    U = _at_quad_points(mesh, u)
    sing = np.zeros_like(U)
    pos = U > 0.0
    # U == 0 only on elements without interior nodes, where every interior hat vanishes.
    sing[pos] = U[pos] ** (-params.gamma)
    f = (weights.a[:, None] * sing + params.lam * U ** (params.r - 1.0)) * _quad_weights(mesh)
    return _scatter_interior(mesh, np.einsum("eq,eqk->ek", f, bary))


def energy_gradient(mesh: Mesh, weights: WeightField, params: ProblemParams, u) -> np.ndarray:
    return operator_apply(mesh, weights, params, u) - reaction_load(mesh, weights, params, u)


# -- CSV interfaces ----------------------------------------------------------


def write_field_csv(path, u) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_index", "value"])
        for i, v in enumerate(u):
            w.writerow([i, format(float(v), ".17g")])


def read_field_csv(path, mesh: Mesh | None = None) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        idx = np.array([int(r["node_index"]) for r in rows])
        vals = np.array([float(r["value"]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f"malformed field CSV {path}: {exc}") from exc
    u = np.zeros(idx.max() + 1 if idx.size else 0)
    u[idx] = vals
    return check_field(mesh, u) if mesh is not None else u


def write_weights_csv(path, weights: WeightField) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["element_index", "xi", "a"])
        for i, (x, a) in enumerate(zip(weights.xi, weights.a)):
            w.writerow([i, format(float(x), ".17g"), format(float(a), ".17g")])


def read_weights_csv(path, mesh: Mesh | None = None, xi0: float | None = None) -> WeightField:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        order = np.argsort([int(r["element_index"]) for r in rows])
        xi = np.array([float(rows[k]["xi"]) for k in order])
        a = np.array([float(rows[k]["a"]) for k in order])
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f"malformed weights CSV {path}: {exc}") from exc
    wf = WeightField(xi, a, float(xi.min()) if xi0 is None else xi0)
    if mesh is not None:
        check_weights(mesh, wf)
    return wf
