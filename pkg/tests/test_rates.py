"""Verification harness: order fits, slack policy, bound suites, sharpness."""

import math

import numpy as np
import pytest

from cmapprox import cmfun, opcalc, rates
from cmapprox.rates import (
    BoundReport,
    first_order_bounds,
    fit_order,
    second_order_bounds,
)


# ----------------------------------------------------------------------
# fit_order
# ----------------------------------------------------------------------

def test_fit_order_synthetic():
    ns = [2 ** k for k in range(2, 10)]
    fit = fit_order([(n, 3.0 / n) for n in ns])
    assert fit.slope == pytest.approx(-1.0, abs=1e-10)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    fit = fit_order([(n, 0.7 * n ** -1.5) for n in ns])
    assert fit.slope == pytest.approx(-1.5, abs=1e-10)


def test_fit_order_degenerate():
    assert fit_order([(n, 0.0) for n in (2, 4, 8, 16)]).flag == "exact"
    fit = fit_order([(2, 1.0), (4, 0.5)])
    assert fit.flag == "too-few-points" and math.isnan(fit.slope)
    # values at the noise floor relative to the max are dropped
    fit = fit_order([(2, 1.0), (4, 1e-17), (8, 1e-18), (16, 1e-19)])
    assert fit.flag == "too-few-points"


def test_slack_policy_boundary():
    mk = lambda err, bound: BoundReport("g", "A", 1.0, 2, 1.0, 0, err, bound, "t")
    assert mk(1.0, 1.0).passed
    assert mk(1.0 + 5e-10, 1.0).passed          # inside relative slack
    assert not mk(1.0 + 1e-8, 1.0).passed       # outside
    assert mk(5e-14, 0.0).passed                # inside absolute slack
    assert not mk(1e-12, 0.0).passed
    row = mk(0.5, 1.0).row()
    assert row["pass"] is True and row["slack"] == pytest.approx(0.5)


# ----------------------------------------------------------------------
# bound suites on small generators
# ----------------------------------------------------------------------

def test_first_order_exponential_zero_error():
    A = opcalc.diag_imag(16)
    vecs = opcalc.test_vectors(A, count=4)
    reports = first_order_bounds(cmfun.exponential(), A, 1.0, 4,
                                 (2.0, 1.0, 0.5), vecs, M=1.0)
    for r in reports:
        assert r.error <= 1e-12 and r.passed


def test_first_order_requires_b2():
    A = opcalc.diag_imag(8)
    vecs = opcalc.test_vectors(A, count=2)
    with pytest.raises(ValueError):
        first_order_bounds(cmfun.frac_tail(0.5), A, 1.0, 4, (1.0,), vecs, M=1.0)


def test_first_order_kendall_alpha2_is_exact_on_diagonal():
    # kendall at parameter t has g_t''(0) - 1 = t(1-t)/... : the alpha = 2
    # bound reduces to t(1-t)/(2n) ||A^2 x|| on unitary diagonal generators
    fam = cmfun.make_builtin("kendall")
    A = opcalc.diag_imag(32)
    vecs = opcalc.test_vectors(A, count=4)
    tt, n = 0.5, 8
    gt = fam.at(tt)
    h = gt.moments[2] - 1.0
    reports = first_order_bounds(fam, A, tt, n, (2.0,), vecs, M=1.0)
    A2 = opcalc.frac_power(A, 2.0)
    for r, x in zip(reports, vecs):
        want = 0.5 * h * tt ** 2 / n * float(np.linalg.norm(A2 @ x))
        assert r.bound == pytest.approx(want, rel=1e-12)
        assert r.passed


def test_second_order_exponential_zero_residual():
    A = opcalc.diag_positive(16)
    vecs = opcalc.test_vectors(A, count=4)
    for r in second_order_bounds(cmfun.exponential(), A, 1.0, 4, vecs, M=1.0):
        assert r.error <= 1e-10 and r.passed


def test_second_order_requires_b4():
    A = opcalc.diag_positive(8)
    vecs = opcalc.test_vectors(A, count=2)
    with pytest.raises(ValueError):
        second_order_bounds(cmfun.frac_tail(0.5), A, 1.0, 4, vecs, M=1.0)


def test_first_order_opnorm_slope_euler_laplacian():
    # on a fixed positive-spectrum generator the operator-norm error of
    # Euler's scheme decays like 1/n
    A = opcalc.laplacian_dirichlet_1d(32)
    g = cmfun.euler()
    pts = []
    for k in range(2, 10):
        n = 2 ** k
        D = opcalc.scheme_apply(g, A, 1.0, n) - opcalc.semigroup_at(A, 1.0)
        pts.append((n, opcalc.opnorm(D)))
    fit = fit_order(pts)
    assert fit.slope == pytest.approx(-1.0, abs=0.05)
    assert fit.r_squared > 0.999


def test_holomorphic_sharp_euler_closed_form_bounds():
    A = opcalc.diag_positive(32)
    Mc = opcalc.semigroup_constants(A)
    vecs = opcalc.test_vectors(A, count=4)
    g = cmfun.euler()
    for n in (4, 32):
        reports = rates.holomorphic_bounds(g, A, 1.0, n, (0.0, 0.5, 1.0),
                                           vecs, Mc, c_alpha_fn=rates.euler_sharp_r)
        assert reports and all(r.passed for r in reports)
        sharp = [r for r in reports if r.tag == "holo-sharp"]
        assert sharp
        for r in sharp:
            assert r.bound <= 2.0 / n + 1.0  # r_{alpha,n} ~ 1/(2n) scale


def test_optimality_inconclusive_flag():
    # one point cannot support a fit
    res = rates.optimality_lower(cmfun.euler(), 1.0, 1.0, [4], "positive")
    assert res["flag"] == "inconclusive"
    with pytest.raises(ValueError):
        rates.optimality_lower(cmfun.euler(), 1.0, 1.0, [4, 8], "sectorial")


# ----------------------------------------------------------------------
# sharpness experiments
# ----------------------------------------------------------------------

def test_euler_scalar_sharpness_limit():
    res = rates.euler_scalar_sharpness([64, 256, 1024])
    lead = 2.0 * math.exp(-2.0)
    assert res["limit"] == pytest.approx(lead)
    last = res["rows"][-1]
    assert last["n_sup"] == pytest.approx(lead, rel=2e-3)
    # the scalar sup of |(1+t/n)^{-n} - e^{-t}| sits near t = 2
    assert last["t_star"] == pytest.approx(2.0, abs=0.05)
    # n * sup increases towards the limit from below
    n_sups = [r["n_sup"] for r in res["rows"]]
    assert n_sups[0] < n_sups[1] < n_sups[2] <= lead + 1e-9


def test_shift_second_order_rows():
    res = rates.shift_second_order_sharpness([4, 16, 64])
    for row in res["rows"]:
        assert abs(row["I2"]) <= row["I2_bound"] * (1.0 + 1e-9) + 1e-13
        assert row["I1_scaled"] == pytest.approx(row["n"] ** 1.5 * abs(row["I1"]))
    assert res["rows"][-1]["I1_scaled"] >= res["target"]
    with pytest.raises(ValueError):
        rates.shift_second_order_sharpness([1])
