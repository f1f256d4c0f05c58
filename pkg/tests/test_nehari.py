import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import optimize as sopt

from nehari_fem import assembly, nehari
from nehari_fem.assembly import ProblemParams, WeightField
from nehari_fem.errors import DomainError, NoIntersectionError
from nehari_fem.mesh import build_interval_mesh
from nehari_fem.nehari import NehariTag

REF = dict(B=4.0, A=2.0 / 3.0, R=0.2)


def _ref(lam=1.0):
    return ProblemParams(2.0, 0.5, 4.0, lam)


def _eta(B, A, p, g, r, t):
    return t ** (p - r) * B - t ** (1 - g - r) * A


def _grid_argmax(B, A, p, g, r, lo, hi, step=1e-6):
    ts = np.arange(lo, hi, step)
    return ts[np.argmax(_eta(B, A, p, g, r, ts))]


exponents = st.tuples(
    st.floats(1.2, 4.0),  # p
    st.floats(0.05, 0.95),  # gamma
    st.floats(0.3, 3.0),  # r - p
)


# -- reference instance --------------------------------------------------------


def test_ref_eta_at_one():
    # eta(1) = B - A
    assert nehari.eta(REF["B"], REF["A"], _ref(), 1.0) == pytest.approx(4 - 2 / 3, rel=1e-14)
    # eta'(1) = (p - r) B + (r + gamma - 1) A
    assert nehari.eta_prime(REF["B"], REF["A"], _ref(), 1.0) == pytest.approx(-2 * 4 + 3.5 * (2 / 3), rel=1e-14)


def test_ref_times():
    prm = _ref()
    assert nehari.t_hat(REF["B"], REF["A"], prm) == pytest.approx(0.302853, abs=1e-6)
    assert nehari.t_zero(REF["B"], REF["A"], prm) == pytest.approx(0.439803, abs=1e-6)
    assert nehari.lambda_crit(REF["B"], REF["A"], REF["R"], prm) == pytest.approx(44.313645519, rel=1e-9)


def test_ref_roots_against_brentq():
    prm = _ref()
    B, A, R = REF["B"], REF["A"], REF["R"]
    f = lambda t: _eta(B, A, 2, 0.5, 4, t) - R
    t0 = nehari.t_zero(B, A, prm)
    t1_o = sopt.brentq(f, nehari.t_hat(B, A, prm), t0, xtol=1e-14)
    t2_o = sopt.brentq(f, t0, 100.0, xtol=1e-14)
    roots = nehari.fibering_roots(B, A, R, prm)
    assert roots.t1 == pytest.approx(t1_o, rel=1e-10)
    assert roots.t2 == pytest.approx(t2_o, rel=1e-10)
    assert roots.t1 == pytest.approx(0.303789, abs=1e-6)
    assert roots.t2 == pytest.approx(4.432014, abs=1e-6)
    assert not roots.degenerate


def test_ref_psi_matches_energy(ref_mesh, ref_weights, ref_params, hat):
    e = assembly.energy(ref_mesh, ref_weights, ref_params, hat)
    assert nehari.psi(REF["B"], REF["A"], REF["R"], ref_params, 1.0) == pytest.approx(e, rel=1e-12)


def test_ref_no_intersection_above_threshold():
    lc = nehari.lambda_crit(REF["B"], REF["A"], REF["R"], _ref())
    assert nehari.fibering_roots(REF["B"], REF["A"], REF["R"], _ref(2 * lc)) is None
    with pytest.raises(NoIntersectionError):
        nehari.ray_time(REF["B"], REF["A"], REF["R"], _ref(2 * lc), "plus")


def test_ref_classification(ref_mesh, ref_weights, ref_params, hat):
    c = nehari.classify(ref_mesh, ref_weights, ref_params, hat)
    assert c.tag == NehariTag.NOT_ON_MANIFOLD
    assert c.nehari_residual == pytest.approx(4 - 2 / 3 - 0.2, rel=1e-12)
    assert nehari.classify(ref_mesh, ref_weights, ref_params, 0.303789 * hat).tag in (  # rounded time
        NehariTag.NOT_ON_MANIFOLD,
        NehariTag.PLUS,
    )


def test_ref_projection(ref_mesh, ref_weights, ref_params, hat):
    up = nehari.project(ref_mesh, ref_weights, ref_params, hat, "plus")
    um = nehari.project(ref_mesh, ref_weights, ref_params, hat, "minus")
    assert up[1] == pytest.approx(0.303789, abs=1e-6)
    assert um[1] == pytest.approx(4.432014, abs=1e-6)
    cp = nehari.classify(ref_mesh, ref_weights, ref_params, up)
    cm = nehari.classify(ref_mesh, ref_weights, ref_params, um)
    assert cp.tag == NehariTag.PLUS and abs(cp.nehari_residual) <= 1e-10
    assert cm.tag == NehariTag.MINUS and abs(cm.nehari_residual) <= 1e-10
    assert cp.d_value == pytest.approx(0.5478, abs=1e-4)


def test_zero_field_rejected(ref_mesh, ref_weights, ref_params):
    with pytest.raises(DomainError):
        nehari.project(ref_mesh, ref_weights, ref_params, np.zeros(3), "plus")
    with pytest.raises(DomainError):
        nehari.classify(ref_mesh, ref_weights, ref_params, np.zeros(3))


def test_nonpositive_t_rejected():
    with pytest.raises(DomainError):
        nehari.psi(1.0, 1.0, 1.0, _ref(), 0.0)
    with pytest.raises(DomainError):
        nehari.eta(1.0, 1.0, _ref(), np.array([1.0, -1.0]))


def test_bad_branch():
    with pytest.raises(ValueError):
        nehari.ray_time(*REF.values(), _ref(), "middle")


# -- closed forms against brute force --------------------------------------------


@settings(max_examples=20, deadline=None)
@given(exp=exponents, B=st.floats(0.1, 10.0), A=st.floats(0.1, 10.0))
def test_t_zero_grid_argmax(exp, B, A):
    p, g, dr = exp
    r = p + dr
    prm = ProblemParams(p, g, r, 1.0)
    t0 = nehari.t_zero(B, A, prm)
    th = nehari.t_hat(B, A, prm)
    assert th < t0
    h = 1e-6
    lo, hi = max(t0 - 2e-3 * t0, h), t0 + 2e-3 * t0
    grid = _grid_argmax(B, A, p, g, r, lo, hi, h * t0)
    assert abs(grid - t0) <= h * t0 * (1 + 1e-9)
    assert abs(nehari.eta(B, A, prm, th)) <= 1e-10 * th ** (p - r) * B


@settings(max_examples=50, deadline=None)
@given(exp=exponents, B=st.floats(0.1, 10.0), A=st.floats(0.1, 10.0), R=st.floats(0.1, 10.0), frac=st.floats(1e-4, 0.999))
def test_roots_against_brentq(exp, B, A, R, frac):
    p, g, dr = exp
    prm = ProblemParams(p, g, p + dr, 1.0)
    lam = frac * nehari.lambda_crit(B, A, R, prm)
    prm = prm.with_lambda(lam)
    t1, t2, deg = nehari.fibering_roots(B, A, R, prm)
    assert not deg
    f = lambda t: _eta(B, A, p, g, p + dr, t) - lam * R
    t0 = nehari.t_zero(B, A, prm)
    hi = 2 * t0
    while f(hi) > 0:
        hi *= 2
    assert t1 == pytest.approx(sopt.brentq(f, nehari.t_hat(B, A, prm), t0, xtol=1e-15, rtol=1e-15), rel=1e-9)
    assert t2 == pytest.approx(sopt.brentq(f, t0, hi, xtol=1e-15, rtol=1e-15), rel=1e-9)
    assert t1 < t0 < t2


@settings(max_examples=50, deadline=None)
@given(exp=exponents, B=st.floats(0.1, 10.0), A=st.floats(0.1, 10.0), R=st.floats(0.1, 10.0), frac=st.floats(0.01, 0.99))
def test_curvature_signs_at_roots(exp, B, A, R, frac):
    p, g, dr = exp
    prm = ProblemParams(p, g, p + dr, 1.0)
    prm = prm.with_lambda(frac * nehari.lambda_crit(B, A, R, prm))
    t1, t2, _ = nehari.fibering_roots(B, A, R, prm)
    for t, sign in ((t1, 1), (t2, -1)):
        d2 = nehari.psi_double_prime(B, A, R, prm, t)
        alt = t ** (prm.r - 1) * nehari.eta_prime(B, A, prm, t)
        assert d2 == pytest.approx(alt, rel=1e-8)
        assert sign * d2 > 0
        assert abs(nehari.psi_prime(B, A, R, prm, t)) <= 1e-9 * t ** (prm.r - 1) * prm.lam * R


@settings(max_examples=50, deadline=None)
@given(exp=exponents, B=st.floats(0.1, 10.0), A=st.floats(0.1, 10.0), R=st.floats(0.1, 10.0),
       c=st.sampled_from([0.5, 2.0, 10.0]))
def test_ray_scaling(exp, B, A, R, c):
    p, g, dr = exp
    r = p + dr
    prm = ProblemParams(p, g, r, 1.0)
    prm = prm.with_lambda(0.5 * nehari.lambda_crit(B, A, R, prm))
    Bc, Ac, Rc = c**p * B, c ** (1 - g) * A, c**r * R
    base, scaled = nehari.analyze(B, A, R, prm), nehari.analyze(Bc, Ac, Rc, prm)
    assert c * scaled.t_hat == pytest.approx(base.t_hat, rel=1e-10)
    assert c * scaled.t0 == pytest.approx(base.t0, rel=1e-10)
    assert c * scaled.roots.t1 == pytest.approx(base.roots.t1, rel=1e-10)
    assert c * scaled.roots.t2 == pytest.approx(base.roots.t2, rel=1e-10)
    assert scaled.lambda_crit == pytest.approx(base.lambda_crit, rel=1e-10)


# -- threshold -----------------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(exp=exponents, B=st.floats(0.1, 10.0), A=st.floats(0.1, 10.0), R=st.floats(0.1, 10.0))
def test_threshold(exp, B, A, R):
    p, g, dr = exp
    prm = ProblemParams(p, g, p + dr, 1.0)
    lc = nehari.lambda_crit(B, A, R, prm)
    below = nehari.fibering_roots(B, A, R, prm.with_lambda((1 - 1e-6) * lc))
    assert below is not None and not below.degenerate and below.t1 < below.t2
    assert nehari.fibering_roots(B, A, R, prm.with_lambda((1 + 1e-6) * lc)) is None


def test_degenerate_at_threshold():
    prm = _ref()
    lc = nehari.lambda_crit(*REF.values(), prm)
    roots = nehari.fibering_roots(*REF.values(), prm.with_lambda(lc))
    assert roots.degenerate and roots.t1 == roots.t2
    with pytest.raises(NoIntersectionError):
        nehari.ray_time(*REF.values(), prm.with_lambda(lc), "minus")


def test_roots_continuous_and_monotone_in_lambda():
    # t1 rises and t2 falls as lambda grows toward lambda_crit; a 10x finer grid gives ~10x smaller jumps
    lc = nehari.lambda_crit(*REF.values(), _ref())

    def jumps(n):
        lams = np.geomspace(0.01, 0.99, n) * lc
        t = np.array([nehari.fibering_roots(*REF.values(), _ref(l))[:2] for l in lams])
        d = np.diff(np.log(t), axis=0)
        assert np.all(d[:, 0] > 0) and np.all(d[:, 1] < 0)
        return np.abs(d).max(axis=0)

    coarse, fine = jumps(100), jumps(1000)
    assert np.all(fine / coarse < 0.2)


def test_ray_times_continuous_in_direction():
    # sampled continuity of u -> t1(u), t2(u) under shrinking perturbations
    m = build_interval_mesh(0.0, 1.0, 32)
    w = WeightField.constant(m)
    prm = _ref(5.0)
    rng = np.random.default_rng(0)
    u = m.bump()
    v = assembly.field_from_interior(m, rng.uniform(-1, 1, m.interior.size))
    base = nehari.fibering_roots(*assembly.fiber_integrals(m, w, prm, u), prm)
    prev = math.inf
    for eps in (1e-1, 1e-2, 1e-3, 1e-4):
        ue = np.abs(u + eps * v)
        ue[m.boundary_nodes] = 0.0
        rt = nehari.fibering_roots(*assembly.fiber_integrals(m, w, prm, ue), prm)
        gap = abs(rt.t1 - base.t1) + abs(rt.t2 - base.t2)
        assert gap < prev
        prev = gap
    assert prev < 1e-3


# -- energy signs on the branches ---------------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(exp=exponents, B=st.floats(0.1, 10.0), A=st.floats(0.1, 10.0), R=st.floats(0.1, 10.0), frac=st.floats(0.001, 0.999))
def test_plus_energy_negative(exp, B, A, R, frac):
    p, g, dr = exp
    prm = ProblemParams(p, g, p + dr, 1.0)
    prm = prm.with_lambda(frac * nehari.lambda_crit(B, A, R, prm))
    t1 = nehari.fibering_roots(B, A, R, prm).t1
    assert nehari.psi(B, A, R, prm, t1) < 0


@settings(max_examples=50, deadline=None)
@given(exp=exponents, B=st.floats(0.1, 10.0), A=st.floats(0.1, 10.0), R=st.floats(0.1, 10.0))
def test_minus_energy_positive_small_lambda(exp, B, A, R):
    p, g, dr = exp
    prm = ProblemParams(p, g, p + dr, 1.0)
    prm = prm.with_lambda(1e-3 * nehari.lambda_crit(B, A, R, prm))
    t2 = nehari.fibering_roots(B, A, R, prm).t2
    assert nehari.psi(B, A, R, prm, t2) >= 0


@settings(max_examples=50, deadline=None)
@given(exp=exponents, B=st.floats(0.1, 10.0), A=st.floats(0.1, 10.0), R=st.floats(0.1, 10.0), frac=st.floats(0.01, 0.99))
def test_classify_integrals_at_roots(exp, B, A, R, frac):
    p, g, dr = exp
    r = p + dr
    prm = ProblemParams(p, g, r, 1.0)
    prm = prm.with_lambda(frac * nehari.lambda_crit(B, A, R, prm))
    t1, t2, _ = nehari.fibering_roots(B, A, R, prm)
    assume(t2 / t1 > 1 + 1e-4)
    c1 = nehari.classify_integrals(t1**p * B, t1 ** (1 - g) * A, t1**r * R, prm)
    c2 = nehari.classify_integrals(t2**p * B, t2 ** (1 - g) * A, t2**r * R, prm)
    assert c1.tag == NehariTag.PLUS
    assert c2.tag == NehariTag.MINUS


def test_classify_zero_tag():
    # B - A - lam R = 0 and (p + gamma - 1) B = lam (r + gamma - 1) R
    prm = _ref()
    B = 3.5
    R = 1.5 * B / 3.5
    A = B - R
    assert nehari.classify_integrals(B, A, R, prm).tag == NehariTag.ZERO


def test_fiber_table_columns():
    prm = _ref()
    tab = nehari.fiber_table(*REF.values(), prm, 0.1, 10.0, 11)
    assert tab.shape == (11, 4)
    np.testing.assert_allclose(tab[:, 0], np.geomspace(0.1, 10.0, 11))
    np.testing.assert_allclose(tab[:, 3], tab[:, 0] ** 3 * (tab[:, 1] - REF["R"]), rtol=1e-12, atol=1e-12)
