import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import lambertw as scipy_lambertw

from lifetime_aloha.special_fn import BRANCH_POINT, Branch, lambert_w0, lambert_wm1, lambertw

E_INV = math.exp(-1.0)


def bisect_w(x, lo, hi):
    # plain bisection on w*exp(w) - x, independent of the library's Halley solver
    f = lambda w: w * math.exp(w) - x
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if (f(mid) > 0) == (flo > 0):
            lo, flo = mid, f(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)


def close(w, ref):
    # W' ~ 1/(1+W) blows up at the branch point, so allow for the rounding of x
    return abs(w - ref) <= 1e-12 * abs(ref) + 1e-15 / abs(1.0 + ref) + 1e-300


def residual_ok(w, x, tol=1e-12):
    return abs(w * math.exp(w) - x) <= tol * max(1.0, abs(x))


def test_known_values():
    assert lambert_w0(1.0) == pytest.approx(0.5671432904097838, rel=1e-15)
    assert lambert_w0(math.e) == pytest.approx(1.0, rel=1e-15)
    assert lambert_w0(0.0) == 0.0
    x = -math.log(2.0) / 2.0
    assert lambert_w0(x) == pytest.approx(-math.log(2.0), rel=1e-14)
    assert lambert_wm1(x) == pytest.approx(-2.0 * math.log(2.0), rel=1e-14)
    assert lambert_wm1(-0.1) == pytest.approx(-3.577152063957297, rel=1e-14)


def test_branch_point_and_slack():
    assert lambert_w0(BRANCH_POINT) == -1.0
    assert lambert_wm1(BRANCH_POINT) == -1.0
    assert lambert_w0(BRANCH_POINT - 5e-16) == -1.0
    assert lambert_wm1(BRANCH_POINT - 5e-16) == -1.0
    for x in (BRANCH_POINT + 1e-15, BRANCH_POINT + 1e-12, BRANCH_POINT + 1e-8):
        w0, wm = lambert_w0(x), lambert_wm1(x)
        assert w0 >= -1.0 >= wm
        assert residual_ok(w0, x) and residual_ok(wm, x)


@pytest.mark.parametrize("x", [-1.0, BRANCH_POINT - 1e-10, math.nan])
def test_w0_out_of_domain(x):
    with pytest.raises(ValueError):
        lambert_w0(x)


@pytest.mark.parametrize("x", [0.0, 1.0, -1.0, math.nan])
def test_wm1_out_of_domain(x):
    with pytest.raises(ValueError):
        lambert_wm1(x)


def test_against_bisection_oracle():
    for x in np.concatenate([-np.logspace(-12, np.log10(E_INV) - 1e-9, 40), np.logspace(-12, 8, 40)]):
        hi = max(1.0, math.log1p(x) + 1.0) if x > 0 else 0.0
        assert close(lambert_w0(x), bisect_w(x, -1.0, hi))
    for x in -np.logspace(-12, np.log10(E_INV) - 1e-9, 40):
        assert close(lambert_wm1(x), bisect_w(x, -100.0, -1.0))


def test_against_scipy():
    xs = np.linspace(BRANCH_POINT + 1e-6, 50.0, 500)
    assert all(close(w, r) for w, r in zip(lambertw(xs, Branch.principal), scipy_lambertw(xs, 0).real))
    xs = np.linspace(BRANCH_POINT + 1e-6, -1e-9, 500)
    assert all(close(w, r) for w, r in zip(lambertw(xs, "lower"), scipy_lambertw(xs, -1).real))


def test_vectorized_shape_and_scalar():
    xs = np.array([[0.0, 1.0], [2.0, 3.0]])
    out = lambertw(xs)
    assert out.shape == (2, 2)
    assert out[0, 1] == lambert_w0(1.0)
    assert isinstance(lambertw(1.0), float)


@given(st.floats(min_value=BRANCH_POINT, max_value=1e12))
def test_w0_residual_property(x):
    w = lambert_w0(x)
    assert w >= -1.0
    assert residual_ok(w, x)


@given(st.floats(min_value=BRANCH_POINT, max_value=-1e-300))
def test_wm1_residual_property(x):
    w = lambert_wm1(x)
    assert w <= -1.0
    assert residual_ok(w, x)


def test_monotone_branches():
    xs = np.linspace(BRANCH_POINT, -1e-6, 2000)
    w0 = lambertw(xs)
    wm = lambertw(xs, Branch.lower)
    assert np.all(np.diff(w0) >= 0.0)
    assert np.all(np.diff(wm) <= 0.0)


@pytest.mark.parametrize("x", [-5e-324, -1e-300, -1e-251, -1e-249, -1e-100])
def test_wm1_tiny_arguments(x):
    import mpmath

    ref = float(mpmath.lambertw(mpmath.mpf(x), -1).real)
    assert lambert_wm1(x) == pytest.approx(ref, rel=1e-14)
