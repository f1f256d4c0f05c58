"""Fibering-map analysis along rays {t u : t > 0}.

Everything here is a function of the integral triple

    B = int xi |grad u|^p,   A = int a |u|^(1-gamma),   R = int |u|^r

so the ray through ``c u`` is handled exactly by rescaling t. With these,

    psi(t) = t^p B / p - t^(1-gamma) A / (1-gamma) - lam t^r R / r     (energy of t u)
    eta(t) = t^(p-r) B - t^(1-gamma-r) A
    psi'(t) = t^(r-1) (eta(t) - lam R)

and t u lies on the Nehari manifold exactly when eta(t) = lam R.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

from . import assembly
from .assembly import ProblemParams, WeightField
from .errors import DomainError, NoIntersectionError
from .mesh import Mesh

Branch = Literal["plus", "minus"]

BISECT_WIDTH = 1e-3
MAX_BRACKET_DOUBLINGS = 200
ROOT_RTOL = 1e-12
COLLISION_RTOL = 1e-12
STEP_RTOL = 4.0 * np.finfo(float).eps
MEMBERSHIP_RTOL = 1e-8
CLASS_RTOL = 1e-10


def _check_t(t):
    if not np.all(np.asarray(t) > 0.0):
        raise DomainError(f"t must be positive, got {t!r}")


def _check_triple(B, A, R=None):
    vals = (B, A) if R is None else (B, A, R)
    if not all(v > 0.0 and math.isfinite(v) for v in vals):
        raise DomainError(f"fibering integrals must be positive and finite, got {vals}")


def eta(B, A, params: ProblemParams, t):
    _check_t(t)
    p, g, r = params.p, params.gamma, params.r
    return t ** (p - r) * B - t ** (1.0 - g - r) * A


def eta_prime(B, A, params: ProblemParams, t):
    _check_t(t)
    p, g, r = params.p, params.gamma, params.r
    return (p - r) * t ** (p - r - 1.0) * B + (r + g - 1.0) * t ** (-g - r) * A


def t_hat(B, A, params: ProblemParams) -> float:
    """Zero of eta: negative below, positive above."""
    _check_triple(B, A)
    return (A / B) ** (1.0 / (params.p + params.gamma - 1.0))


def t_zero(B, A, params: ProblemParams) -> float:
    """Unique maximizer of eta."""
    _check_triple(B, A)
    p, g, r = params.p, params.gamma, params.r
    return ((r + g - 1.0) * A / ((r - p) * B)) ** (1.0 / (p + g - 1.0))


def psi(B, A, R, params: ProblemParams, t):
    _check_t(t)
    p, g, r, lam = params.p, params.gamma, params.r, params.lam
    return t**p * B / p - t ** (1.0 - g) * A / (1.0 - g) - lam * t**r * R / r


def psi_prime(B, A, R, params: ProblemParams, t):
    _check_t(t)
    p, g, r, lam = params.p, params.gamma, params.r, params.lam
    return t ** (p - 1.0) * B - t ** (-g) * A - lam * t ** (r - 1.0) * R


def psi_double_prime(B, A, R, params: ProblemParams, t):
    _check_t(t)
    p, g, r, lam = params.p, params.gamma, params.r, params.lam
    return (
        (p - 1.0) * t ** (p - 2.0) * B
        + g * t ** (-g - 1.0) * A
        - lam * (r - 1.0) * t ** (r - 2.0) * R
    )


def lambda_crit(B, A, R, params: ProblemParams) -> float:
    """Largest lambda for which the ray meets the Nehari manifold."""
    _check_triple(B, A, R)
    return eta(B, A, params, t_zero(B, A, params)) / R


class FiberRoots(NamedTuple):
    t1: float
    t2: float
    degenerate: bool = False


def _solve_monotone(f, fp, lo, hi, t_scale, ftol):
    """Root of f on [lo, hi] where f(lo) and f(hi) have opposite signs.

    Bisection until the bracket is narrower than BISECT_WIDTH * t_scale, then
    Newton steps that fall back to bisection whenever they leave the bracket.
    Newton runs until |f| <= ftol and the step is at rounding level, so the
    root is accurate relative to t even where eta is flat.
    """
    flo = f(lo)
    if flo == 0.0:
        return lo
    if f(hi) == 0.0:
        return hi
    sign_lo = flo > 0.0
    while hi - lo > BISECT_WIDTH * t_scale:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == sign_lo:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    for _ in range(100):
        ft = f(t)
        if ft == 0.0:
            return t
        if (ft > 0.0) == sign_lo:
            lo = t
        else:
            hi = t
        d = fp(t)
        t_new = t - ft / d if d != 0.0 else math.nan
        if not lo < t_new < hi:
            t_new = 0.5 * (lo + hi)
        if not lo < t_new < hi:
            return t  # bracket collapsed to adjacent floats
        if abs(t_new - t) <= STEP_RTOL * t and abs(ft) <= ftol:
            return t_new
        t = t_new
    return t


def fibering_roots(B, A, R, params: ProblemParams) -> FiberRoots | None:
    """Nehari times t1 < t0 < t2 on the ray, or None when the ray misses the manifold.

    On the knife edge |lam R - eta(t0)| <= 1e-12 lam R the result is
    ``FiberRoots(t0, t0, True)``. Both roots satisfy |eta(t) - lam R| <= 1e-12 lam R.
    """
    _check_triple(B, A, R)
    level = params.lam * R
    t0 = t_zero(B, A, params)
    peak = eta(B, A, params, t0)
    # relative to the level, so the outcome is invariant under u -> c u
    if abs(level - peak) <= COLLISION_RTOL * level:
        return FiberRoots(t0, t0, True)
    if level > peak:
        return None

    ftol = ROOT_RTOL * level

    def f(t):
        return eta(B, A, params, t) - level

    def fp(t):
        return eta_prime(B, A, params, t)

    th = t_hat(B, A, params)
    t1 = _solve_monotone(f, fp, th * (1.0 + 1e-12), t0, t0, ftol)
    hi = 2.0 * t0
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if f(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise DomainError("could not bracket the outer Nehari time")
    t2 = _solve_monotone(f, fp, t0, hi, t0, ftol)
    return FiberRoots(t1, t2)


@dataclass(frozen=True)
class FiberingAnalysis:
    B: float
    A: float
    R: float
    t_hat: float
    t0: float
    lambda_crit: float
    roots: FiberRoots | None


def analyze(B, A, R, params: ProblemParams) -> FiberingAnalysis:
    return FiberingAnalysis(
        B=B,
        A=A,
        R=R,
        t_hat=t_hat(B, A, params),
        t0=t_zero(B, A, params),
        lambda_crit=lambda_crit(B, A, R, params),
        roots=fibering_roots(B, A, R, params),
    )


def analyze_field(mesh: Mesh, weights: WeightField, params: ProblemParams, u) -> FiberingAnalysis:
    B, A, R = assembly.fiber_integrals(mesh, weights, params, u)
    if B == 0.0:
        raise DomainError("the zero field spans no ray")
    return analyze(B, A, R, params)


# -- manifold membership ---------------------------------------------------


class NehariTag(str, enum.Enum):
    NOT_ON_MANIFOLD = "NotOnManifold"
    PLUS = "Nplus"
    ZERO = "Nzero"
    MINUS = "Nminus"


@dataclass(frozen=True)
class NehariClass:
    tag: NehariTag
    nehari_residual: float
    d_value: float


def nehari_residual(B, A, R, params: ProblemParams) -> float:
    return B - A - params.lam * R


def d_value(B, A, R, params: ProblemParams) -> float:
    p, g, r, lam = params.p, params.gamma, params.r, params.lam
    return (p + g - 1.0) * B - lam * (r + g - 1.0) * R


def classify_integrals(B, A, R, params: ProblemParams) -> NehariClass:
    res = nehari_residual(B, A, R, params)
    d = d_value(B, A, R, params)
    if abs(res) > MEMBERSHIP_RTOL * max(B, A, params.lam * R):
        tag = NehariTag.NOT_ON_MANIFOLD
    else:
        tol = CLASS_RTOL * (params.p + params.gamma - 1.0) * B
        if d > tol:
            tag = NehariTag.PLUS
        elif d < -tol:
            tag = NehariTag.MINUS
        else:
            tag = NehariTag.ZERO
    return NehariClass(tag, res, d)


def classify(mesh: Mesh, weights: WeightField, params: ProblemParams, u) -> NehariClass:
    B, A, R = assembly.fiber_integrals(mesh, weights, params, u)
    if B == 0.0:
        raise DomainError("cannot classify the zero field")
    return classify_integrals(B, A, R, params)


def ray_time(B, A, R, params: ProblemParams, branch: Branch) -> float:
    """t1 (plus) or t2 (minus) for the ray with integrals (B, A, R)."""
    if branch not in ("plus", "minus"):
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    roots = fibering_roots(B, A, R, params)
    if roots is None:
        raise NoIntersectionError(
            f"lambda={params.lam!r} exceeds lambda_crit={lambda_crit(B, A, R, params)!r} of this ray"
        )
    if roots.degenerate:
        raise NoIntersectionError("ray touches the manifold only at its degenerate part")
    return roots.t1 if branch == "plus" else roots.t2


def project(mesh: Mesh, weights: WeightField, params: ProblemParams, u, branch: Branch):
    """Rescale u onto the plus (t1) or minus (t2) part of the Nehari manifold."""
    u = assembly.check_field(mesh, u)
    B, A, R = assembly.fiber_integrals(mesh, weights, params, u)
    if B == 0.0:
        raise DomainError("cannot project the zero field")
    return ray_time(B, A, R, params, branch) * u


def fiber_table(B, A, R, params: ProblemParams, t_min=1e-2, t_max=1e2, n=201) -> np.ndarray:
    """Rows (t, eta, psi, psi') on a log-spaced grid."""
    ts = np.geomspace(t_min, t_max, n)
    return np.array(
        [
            (t, eta(B, A, params, t), psi(B, A, R, params, t), psi_prime(B, A, R, params, t))
            for t in ts
        ]
    )
