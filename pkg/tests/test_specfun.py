import math

import numpy as np
import pytest
import scipy.special as sps
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from secpat.specfun import (
    MathieuRangeError,
    MathieuSystem,
    bessel_j,
    bessel_j_orders,
    bessel_j_zeros,
    bessel_y0,
    mathieu_angular,
    mathieu_char,
    mathieu_mode,
    mathieu_radial,
    mathieu_radial_ratio,
)

EULER = 0.5772156649015329


def j_series(n, x, terms=50):
    """Independent oracle: the ascending power series of J_n."""
    term = (x / 2) ** n / math.factorial(n)
    total = term
    for m in range(1, terms):
        term *= -((x / 2) ** 2) / (m * (m + n))
        total += term
    return total


def bisect(f, lo, hi, tol=1e-14):
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo, flo = mid, f(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- Bessel -----------------------------------------------------------------


@pytest.mark.parametrize("n, x, expected", [(0, 0.0, 1.0), (1, 0.0, 0.0), (3, 0.0, 0.0)])
def test_bessel_j_at_zero(n, x, expected):
    assert bessel_j(n, x) == expected


def test_bessel_j_first_zero():
    z = bisect(lambda x: j_series(0, x), 2.0, 3.0)
    assert z == pytest.approx(2.404825557695773, abs=1e-12)
    assert abs(bessel_j(0, 2.404825557695773)) < 1e-9


@pytest.mark.parametrize("n", [0, 1, 2, 7, 30, 90])
def test_bessel_j_matches_reference(n):
    x = np.concatenate([np.linspace(0, 1, 11), np.linspace(1.01, 150, 300)])
    np.testing.assert_allclose(bessel_j(n, x), sps.jv(n, x), atol=1e-12)


@given(st.floats(0, 15), st.integers(0, 20))
def test_bessel_j_matches_series(x, n):
    # the alternating series keeps ~1e-13 absolute accuracy up to x = 15
    assert bessel_j(n, x) == pytest.approx(j_series(n, x, terms=80), abs=1e-10)


def test_bessel_orders_recurrence():
    x = np.linspace(0.5, 60, 200)
    J = bessel_j_orders(40, x)
    n = np.arange(1, 40)[:, None]
    np.testing.assert_allclose(J[:-2] + J[2:], 2 * n / x * J[1:-1], atol=1e-13)


def test_bessel_y0_domain():
    with pytest.raises(ValueError):
        bessel_y0(0.0)
    with pytest.raises(ValueError):
        bessel_y0(-1.0)


def test_bessel_y0_log_asymptote():
    x = 1e-6
    assert bessel_y0(x) - (2 / math.pi) * (math.log(x / 2) + EULER) * bessel_j(0, x) == pytest.approx(0, abs=1e-6)


def test_bessel_y0_first_zero():
    assert abs(bessel_y0(0.8935769662791675)) < 1e-7


def test_bessel_y0_large_argument():
    x = 50.0
    assert bessel_y0(x) == pytest.approx(math.sqrt(2 / (math.pi * x)) * math.sin(x - math.pi / 4), abs=1e-3)


def test_bessel_y0_matches_reference():
    x = np.concatenate([np.geomspace(1e-8, 1, 50), np.linspace(1, 200, 400)])
    np.testing.assert_allclose(bessel_y0(x), sps.y0(x), rtol=1e-8, atol=1e-12)


def _richardson_derivative(f, x, h=1e-2):
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


@pytest.mark.parametrize("x", [0.5, 1.0, 5.0, 20.0])
def test_bessel_wronskian(x):
    dj0 = -bessel_j(1, x)
    dy0 = _richardson_derivative(bessel_y0, x, h=1e-3 * max(x, 1))
    assert dj0 * bessel_y0(x) - bessel_j(0, x) * dy0 == pytest.approx(-2 / (math.pi * x), abs=1e-8)


@pytest.mark.parametrize("n", [0, 1, 4, 25, 80])
def test_bessel_zeros_match_reference(n):
    z = bessel_j_zeros(n, 120.0)
    ref = sps.jn_zeros(n, z.size)
    np.testing.assert_allclose(z, ref, atol=1e-12)
    assert sps.jn_zeros(n, z.size + 1)[-1] > 120.0


# --- Mathieu ----------------------------------------------------------------


@pytest.mark.parametrize("parity, n, expected", [("even", 3, 9.0), ("odd", 2, 4.0), ("even", 0, 0.0)])
def test_mathieu_char_q0(parity, n, expected):
    assert mathieu_char(parity, n, 0.0) == pytest.approx(expected, abs=1e-10)


def test_mathieu_char_truncation_convergence():
    n0 = mathieu_mode("even", 0, 1.0).truncation
    assert mathieu_char("even", 0, 1.0, size=n0) == pytest.approx(mathieu_char("even", 0, 1.0, size=2 * n0), abs=1e-10)


@pytest.mark.parametrize("q", [0.5, 5.0, 25.0, 120.0])
@pytest.mark.parametrize("n", [0, 1, 2, 5, 10])
def test_mathieu_char_matches_reference(q, n):
    assert mathieu_char("even", n, q) == pytest.approx(sps.mathieu_a(n, q), rel=1e-9, abs=1e-9)
    if n:
        assert mathieu_char("odd", n, q) == pytest.approx(sps.mathieu_b(n, q), rel=1e-9, abs=1e-9)


def _modes(q, top=10):
    return [mathieu_mode("even", n, q) for n in range(top + 1)] + [mathieu_mode("odd", n, q) for n in range(1, top + 1)]


@pytest.mark.parametrize("q", [0.0, 1.0, 5.0, 25.0])
def test_mathieu_orthonormality(q):
    s = np.arange(1024) * 2 * math.pi / 1024  # exact for trigonometric polynomials of degree < 512
    U = np.stack([mathieu_angular(m, s) for m in _modes(q)])
    gram = U @ U.T * (2 * math.pi / s.size) / math.pi
    np.testing.assert_allclose(gram, np.eye(len(U)), atol=1e-8)


@pytest.mark.parametrize("q", [0.0, 1.0, 5.0, 25.0, 400.0])
def test_mathieu_ode_residual(q):
    s = np.linspace(0, 2 * math.pi, 256)
    for m in _modes(q):
        res = mathieu_angular(m, s, deriv=2) + (m.char_value - 2 * q * np.cos(2 * s)) * mathieu_angular(m, s)
        assert np.max(np.abs(res)) < 1e-6 * max(1.0, abs(m.char_value))


@pytest.mark.parametrize("n", range(1, 11))
def test_mathieu_q0_degeneration(n):
    s = np.linspace(0, 2 * math.pi, 97)
    assert mathieu_char("odd", n, 0.0) == pytest.approx(n * n, abs=1e-10)
    np.testing.assert_allclose(mathieu_angular(mathieu_mode("even", n, 0.0), s), np.cos(n * s), atol=1e-10)
    np.testing.assert_allclose(mathieu_angular(mathieu_mode("odd", n, 0.0), s), np.sin(n * s), atol=1e-10)


def test_mathieu_sign_convention():
    for m in _modes(7.0):
        assert m.coeffs[np.argmax(np.abs(m.coeffs))] > 0


def test_mathieu_radial_q0():
    r = np.linspace(0, 2, 9)
    np.testing.assert_allclose(mathieu_radial(mathieu_mode("even", 2, 0.0), r), np.cosh(2 * r), rtol=1e-12)
    np.testing.assert_allclose(mathieu_radial(mathieu_mode("odd", 1, 0.0), r), np.sinh(r), rtol=1e-12)


def test_mathieu_radial_truncation_convergence():
    m = mathieu_mode("even", 0, 2.0)
    m2 = mathieu_mode("even", 0, 2.0, size=2 * m.truncation)
    assert mathieu_radial(m, 0.5) == pytest.approx(mathieu_radial(m2, 0.5), abs=1e-9)


def test_mathieu_radial_overflow_guard():
    m = mathieu_mode("even", 4, 1.0)
    with pytest.raises(MathieuRangeError):
        mathieu_radial(m, 100.0)


def _radial_oracle(parity, a, q, r):
    """Integrate R'' = (a - 2q cosh 2r) R with renormalization; returns R(r) / R(r[-1])."""
    y = np.array([1.0, 0.0]) if parity == "even" else np.array([0.0, 1.0])
    prev, log_scale = 0.0, 0.0
    vals, logs = [], []
    for x in r:
        if x > prev:
            sol = solve_ivp(lambda t, u: [u[1], (a - 2 * q * np.cosh(2 * t)) * u[0]], (prev, x), y,
                            method="DOP853", rtol=1e-12, atol=1e-40)
            y = sol.y[:, -1]
            scale = np.abs(y).max()
            y, log_scale, prev = y / scale, log_scale + math.log(scale), x
        vals.append(y[0])
        logs.append(log_scale)
    vals, logs = np.array(vals), np.array(logs)
    return vals * np.exp(logs - logs[-1]) / vals[-1]


@pytest.mark.parametrize("parity, n, q, r0", [
    ("even", 0, 0.5, 1.0), ("odd", 3, 4.0, 1.5), ("even", 12, 30.0, 2.0),
    ("odd", 40, 200.0, 1.2), ("even", 90, 20.0, 2.65), ("even", 5, 800.0, 0.6),
])
def test_mathieu_radial_ratio_matches_ode(parity, n, q, r0):
    m = mathieu_mode(parity, n, q)
    r = np.linspace(0, r0, 25)
    ref = _radial_oracle(parity, m.char_value, q, r)
    got = mathieu_radial_ratio(m, r, r0)
    assert np.max(np.abs(got - ref)) < 1e-7 * np.max(np.abs(ref))


def test_mathieu_system_index_convention():
    q = 3.0
    sysm = MathieuSystem(q, 9)
    s = np.linspace(0, 2 * math.pi, 33)
    table = sysm.angular(s)
    for k in range(9):
        mode = mathieu_mode("even", k // 2, q) if k % 2 == 0 else mathieu_mode("odd", k // 2 + 1, q)
        np.testing.assert_allclose(table[:, k], mathieu_angular(mode, s), atol=1e-12)
        assert sysm.char_values()[k] == pytest.approx(mode.char_value, rel=1e-12)


def test_mathieu_system_ratio_consistent_with_modes():
    q, r0 = 12.0, 1.3
    sysm = MathieuSystem(q, 7)
    r = np.linspace(0, r0, 11)
    tab = sysm.radial_ratio(r, r0)
    for k in range(7):
        mode = mathieu_mode("even", k // 2, q) if k % 2 == 0 else mathieu_mode("odd", k // 2 + 1, q)
        np.testing.assert_allclose(tab[:, k], mathieu_radial_ratio(mode, r, r0), rtol=1e-8, atol=1e-12)
