"""Bessel and Mathieu functions for the series reconstructions.

Bessel J_n is computed for all orders at once by Miller's backward
recurrence (ascending series for small arguments); Y_0 comes from the
Neumann series over even-order J's accumulated in the same sweep.
Mathieu characteristic values and Fourier coefficients come from the
symmetric tridiagonal form of the Fourier recurrence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

EULER_GAMMA = 0.5772156649015329
_SERIES_MAX_X = 1.0
_BIG = 1e250


class MathieuRangeError(OverflowError):
    """Radial Mathieu evaluation would overflow double precision."""


def _series_orders(nmax, x):
    # ascending series, fine for x <= 1 (terms shrink by (x/2)^2 / m^2)
    n = np.arange(nmax + 1)[:, None]
    half = x[None, :] / 2
    with np.errstate(divide="ignore"):
        term = np.exp(n * np.log(half) - gammaln(n + 1.0))
    total = term.copy()
    h2 = half**2
    for m in range(1, 30):
        term = -term * h2 / (m * (m + n))
        total += term
    return total


def _start_order(nmax, xmax):
    top = max(nmax, xmax)
    return 2 * int((top + 30 + 2 * math.sqrt(40 * top + 1) + 3 * top ** (1 / 3)) // 2 + 1)


def _miller(nmax, x, with_y0=False):
    """Backward recurrence for J_0..J_nmax at x > 0 (flat array)."""
    m = x.size
    N = _start_order(nmax, float(x.max()))
    out = np.zeros((nmax + 1, m))
    jp1 = np.zeros(m)
    j = np.full(m, 1e-30)
    norm = np.zeros(m)
    neumann = np.zeros(m)
    if N <= nmax:
        out[N] = j
    if N % 2 == 0:
        norm += 2 * j
        neumann += (-1) ** (N // 2) * j / (N // 2)
    inv_x = 1.0 / x
    for k in range(N, 0, -1):
        jm1 = (2 * k) * inv_x * j - jp1
        km1 = k - 1
        if km1 <= nmax:
            out[km1] = jm1
        if km1 % 2 == 0:
            if km1 == 0:
                norm += jm1
            else:
                norm += 2 * jm1
                if with_y0:
                    neumann += (-1) ** (km1 // 2) * jm1 / (km1 // 2)
        jp1, j = j, jm1
        big = np.abs(j) > _BIG
        if big.any():
            scale = 1.0 / _BIG
            j[big] *= scale
            jp1[big] *= scale
            norm[big] *= scale
            neumann[big] *= scale
            if km1 <= nmax:
                out[km1:, big] *= scale
    out /= norm
    if with_y0:
        return out, neumann / norm
    return out


def bessel_j_orders(nmax: int, x) -> np.ndarray:
    """J_0(x) ... J_nmax(x) for x >= 0, shape ``(nmax + 1,) + x.shape``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_j_orders needs x >= 0")
    flat = x.ravel()
    out = np.zeros((nmax + 1, flat.size))
    zero = flat == 0
    small = (flat > 0) & (flat <= _SERIES_MAX_X)
    large = flat > _SERIES_MAX_X
    out[0, zero] = 1.0
    if small.any():
        out[:, small] = _series_orders(nmax, flat[small])
    if large.any():
        out[:, large] = _miller(nmax, flat[large])
    return out.reshape((nmax + 1,) + x.shape)


def bessel_j(n: int, x):
    """Bessel function of the first kind J_n(x), integer n >= 0, x >= 0."""
    if n < 0:
        raise ValueError("order must be nonnegative")
    val = bessel_j_orders(int(n), x)[n]
    return val if val.ndim else float(val)


def bessel_y0(x):
    """Bessel function of the second kind Y_0(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("bessel_y0 is defined for x > 0 only")
    flat = x.ravel()
    out = np.empty(flat.size)
    small = flat <= _SERIES_MAX_X
    if small.any():
        xs = flat[small]
        q = (xs / 2) ** 2
        j0 = _series_orders(0, xs)[0]
        term = np.ones_like(xs)
        harmonic = 0.0
        acc = np.zeros_like(xs)
        for k in range(1, 30):
            term = -term * q / (k * k)
            harmonic += 1.0 / k
            acc -= harmonic * term
        out[small] = (2 / np.pi) * ((np.log(xs / 2) + EULER_GAMMA) * j0 + acc)
    if (~small).any():
        xl = flat[~small]
        js, neumann = _miller(0, xl, with_y0=True)
        out[~small] = (2 / np.pi) * (np.log(xl / 2) + EULER_GAMMA) * js[0] - (4 / np.pi) * neumann
    out = out.reshape(x.shape)
    return out if out.ndim else float(out)


def bessel_j_zeros(n: int, upper: float) -> np.ndarray:
    """Positive zeros of J_n below ``upper``, ascending."""
    if upper <= 0:
        return np.zeros(0)
    grid = np.arange(max(n, 1) * 0.5 + 1e-3, upper + 0.05, 0.05)
    grid = np.append(grid[grid < upper], upper)
    if grid.size < 2:
        return np.zeros(0)
    vals = bessel_j_orders(n, grid)[n]
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if idx.size == 0:
        return np.zeros(0)
    lo, hi = grid[idx], grid[idx + 1]
    f_lo = vals[idx]
    z = 0.5 * (lo + hi)
    # all brackets at once: Newton steps, falling back to bisection when a step leaves the bracket
    for _ in range(60):
        jj = bessel_j_orders(n + 1, z)
        fz = jj[n]
        dz = n / z * fz - jj[n + 1]
        same = np.sign(fz) == np.sign(f_lo)
        lo = np.where(same, z, lo)
        f_lo = np.where(same, fz, f_lo)
        hi = np.where(same, hi, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = z - fz / dz
        ok = np.isfinite(step) & (step > lo) & (step < hi)
        new = np.where(ok, step, 0.5 * (lo + hi))
        done = np.all(np.abs(new - z) <= 4e-16 * new)
        z = new
        if done:
            break
    return z


# --- Mathieu functions -------------------------------------------------------

# (parity, order % 2) -> harmonics start and step; each class has its own recurrence
_CLASSES = {
    ("even", 0): 0,
    ("even", 1): 1,
    ("odd", 1): 1,
    ("odd", 0): 2,
}


def _truncation(q: float, index: int) -> int:
    return max(25, math.ceil(1.5 * math.sqrt(q)) + 20, index + 25)


def _class_matrix(parity, cls_odd, q, size):
    first = _CLASSES[(parity, cls_odd)]
    harmonics = first + 2 * np.arange(size)
    diag = harmonics.astype(float) ** 2
    off = np.full(size - 1, float(q))
    if parity == "even" and cls_odd == 0:
        off[0] = math.sqrt(2) * q  # symmetrized A_0 row
    elif cls_odd == 1:
        diag[0] += q if parity == "even" else -q
    return diag, off, harmonics


def _class_index(parity, n):
    if parity == "even":
        if n < 0:
            raise ValueError("even Mathieu order must be >= 0")
        return n % 2, n // 2
    if n < 1:
        raise ValueError("odd Mathieu functions se_n need n >= 1")
    return n % 2, (n - 1) // 2


def _solve_class(parity, cls_odd, q, count, size=None):
    size = size or _truncation(q, count)
    diag, off, harmonics = _class_matrix(parity, cls_odd, q, size)
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))
    coeffs = vecs.T.copy()
    if parity == "even" and cls_odd == 0:
        coeffs[:, 0] /= math.sqrt(2)
    dominant = np.argmax(np.abs(coeffs), axis=1)
    signs = np.sign(coeffs[np.arange(count), dominant])
    coeffs *= signs[:, None]
    return vals, coeffs, harmonics


@dataclass(frozen=True)
class MathieuMode:
    """A 2 pi-periodic Mathieu function ce_n or se_n with its Fourier coefficients.

    ``coeffs[i]`` multiplies ``cos(harmonics[i] s)`` (even parity) or
    ``sin(harmonics[i] s)`` (odd parity); normalization is int u^2 = pi.
    """

    parity: str
    order: int
    q: float
    char_value: float
    coeffs: np.ndarray
    harmonics: np.ndarray

    @property
    def truncation(self) -> int:
        return len(self.coeffs)


def mathieu_char(parity: str, n: int, q: float, size: int | None = None) -> float:
    """Characteristic value a_n(q) (even) or b_n(q) (odd)."""
    return mathieu_mode(parity, n, q, size=size).char_value


def mathieu_mode(parity: str, n: int, q: float, size: int | None = None) -> MathieuMode:
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    if q < 0:
        raise ValueError("q must be nonnegative")
    cls_odd, idx = _class_index(parity, int(n))
    size = size or _truncation(q, idx + 1)
    vals, coeffs, harmonics = _solve_class(parity, cls_odd, q, idx + 1, size)
    return MathieuMode(parity, int(n), float(q), float(vals[idx]), coeffs[idx], harmonics)


def _basis(parity, harmonics, s, deriv=0):
    arg = np.multiply.outer(np.asarray(s, dtype=float), harmonics)
    m = harmonics.astype(float)
    if parity == "even":
        table = [np.cos, lambda z: -np.sin(z), lambda z: -np.cos(z)]
    else:
        table = [np.sin, np.cos, lambda z: -np.sin(z)]
    return table[deriv](arg) * m**deriv


def mathieu_angular(mode: MathieuMode, s, deriv: int = 0):
    """ce_n(s; q) or se_n(s; q), or their first/second derivative in s."""
    val = _basis(mode.parity, mode.harmonics, s, deriv) @ mode.coeffs
    return val if np.ndim(val) else float(val)


def _radial_fourier(parity, harmonics, coeffs, r):
    r = np.asarray(r, dtype=float)
    top = float(np.max(np.abs(r))) * float(harmonics.max()) if r.size else 0.0
    if top > 700:
        raise MathieuRangeError(f"cosh({top:.0f}) overflows double precision")
    arg = np.multiply.outer(r, harmonics)
    basis = np.cosh(arg) if parity == "even" else np.sinh(arg)
    vals = basis @ coeffs.T
    # eigenvector entries carry absolute error ~ eps * max|c|
    bound = np.abs(basis) @ np.abs(coeffs).T + np.abs(basis).sum(axis=1)[:, None] * np.abs(coeffs).max(axis=1)
    return vals, bound


def _radial_product(parity, harmonics, coeffs, q, r, with_bound=False):
    """Radial functions up to a per-mode constant, via products of Bessel functions.

    With u = sqrt(q) e^{-r}, v = sqrt(q) e^{r} and l the coefficient index:
      ce class, harmonics 2l:    sum (-1)^l A J_l(u) J_l(v)
      ce class, harmonics 2l+1:  sum (-1)^l A [J_l(u) J_{l+1}(v) + J_{l+1}(u) J_l(v)]
      se class, harmonics 2l+1:  sum (-1)^l B [J_l(u) J_{l+1}(v) - J_{l+1}(u) J_l(v)]
      se class, harmonics 2l+2:  sum (-1)^l B [J_l(u) J_{l+2}(v) - J_{l+2}(u) J_l(v)]
    Unlike the cosh expansion, no terms cancel for large q.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    h = math.sqrt(q)
    L = coeffs.shape[1]
    Ju = bessel_j_orders(L + 2, h * np.exp(-r))
    Jv = bessel_j_orders(L + 2, h * np.exp(r))
    l = np.arange(L)
    shift = 0 if parity == "even" and harmonics[0] == 0 else (2 if harmonics[0] == 2 else 1)
    if shift == 0:
        basis = Ju[l] * Jv[l]
    elif parity == "even":
        basis = Ju[l] * Jv[l + 1] + Ju[l + 1] * Jv[l]
    else:
        basis = Ju[l] * Jv[l + shift] - Ju[l + shift] * Jv[l]
    vals = basis.T @ (coeffs * (-1.0) ** l).T
    if with_bound:
        # eigenvector entries carry absolute error ~ eps * max|c|
        bound = np.abs(basis.T) @ np.abs(coeffs).T + np.abs(basis).sum(axis=0)[:, None] * np.abs(coeffs).max(axis=1)
        tail = np.abs(basis[-2:].T) @ np.abs(coeffs[:, -2:]).T
        return vals, bound, tail
    return vals


def _radial_numerov(parity, chars, q, r, kh=0.03):
    """Integrate y'' = (a - 2q cosh 2r) y outward from r = 0 for all a at once.

    Even solutions start from y(0) = 1, y'(0) = 0 and odd ones from y(0) = 0,
    y'(0) = 1. Every solution regular at the origin grows away from it, so the
    forward sweep is stable. Returns unscaled values at ``r``.
    """
    from scipy.interpolate import CubicSpline

    r = np.atleast_1d(np.asarray(r, dtype=float))
    chars = np.asarray(chars, dtype=float)
    r_max = float(r.max())
    g_max = float(np.max(np.abs(chars))) + 2.0 * q * math.cosh(2.0 * r_max) + 1.0
    n = max(64, int(math.ceil(r_max * math.sqrt(g_max) / kh)))
    h = r_max / n
    grid = np.linspace(0.0, r_max, n + 1)
    g = chars[None, :] - 2.0 * q * np.cosh(2.0 * grid)[:, None]
    g0 = g[0]
    g2 = -8.0 * q
    y = np.empty((n + 1, chars.size))
    if parity == "even":
        y[0] = 1.0
        y[1] = 1.0 + g0 * h**2 / 2 + (g2 + g0**2) * h**4 / 24
    else:
        y[0] = 0.0
        y[1] = h + g0 * h**3 / 6 + (3 * g2 + g0**2) * h**5 / 120
    w = 1.0 - h * h * g / 12.0
    for i in range(1, n):
        y[i + 1] = ((12.0 - 10.0 * w[i]) * y[i] - w[i - 1] * y[i - 1]) / w[i + 1]
        big = np.abs(y[i + 1]) > 1e200
        if big.any():
            y[: i + 2, big] *= 1e-200
    return CubicSpline(grid, y, axis=0)(r)


def _radial_ratio_table(parity, harmonics, coeffs, chars, q, r, r_ref):
    # per mode: cosh/sinh sum if it is neither cancelling nor truncated,
    # else Bessel products if those do not cancel, else outward integration
    r = np.atleast_1d(np.asarray(r, dtype=float))
    pts = np.append(r, r_ref)
    coeffs = np.atleast_2d(coeffs)
    chars = np.atleast_1d(chars)
    todo = np.ones(coeffs.shape[0], dtype=bool)
    vals = np.zeros((pts.size, coeffs.shape[0]))
    try:
        fv, bound = _radial_fourier(parity, harmonics, coeffs, pts)
        tail = np.abs(_radial_fourier(parity, harmonics[-2:], coeffs[:, -2:], pts)[0])
        scale = np.abs(fv).max(axis=0)
        ok = (bound.max(axis=0) < 1e5 * scale) & (tail.max(axis=0) < 1e-12 * scale)
        vals[:, ok] = fv[:, ok]
        todo &= ~ok
    except MathieuRangeError:
        pass
    if todo.any() and q > 0:
        sub = np.flatnonzero(todo)
        pv, pb, pt = _radial_product(parity, harmonics, coeffs[sub], q, pts, with_bound=True)
        scale = np.abs(pv).max(axis=0)
        ok = (pb.max(axis=0) < 1e5 * scale) & (pt.max(axis=0) < 1e-12 * scale)
        vals[:, sub[ok]] = pv[:, ok]
        todo[sub[ok]] = False
    if todo.any():
        vals[:, todo] = _radial_numerov(parity, chars[todo], q, pts)
    with np.errstate(divide="ignore", invalid="ignore"):
        return vals[:-1] / vals[-1]


def mathieu_radial(mode: MathieuMode, r):
    """Radial Mathieu function ce_n(i r; q) (even) or -i se_n(i r; q) (odd), real-valued.

    Evaluated from the Fourier coefficients with cos -> cosh, sin -> sinh;
    raises :class:`MathieuRangeError` when cosh(m r) overflows. For large q the
    sum cancels heavily; use :func:`mathieu_radial_ratio` there.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("radial argument must be >= 0")
    vals, _ = _radial_fourier(mode.parity, mode.harmonics, mode.coeffs[None, :], np.atleast_1d(r_arr))
    out = vals[:, 0].reshape(r_arr.shape)
    return out if out.ndim else float(out)


def mathieu_radial_ratio(mode: MathieuMode, r, r_ref: float):
    """R(r) / R(r_ref) for the radial function of ``mode``; stable for any q."""
    r_arr = np.asarray(r, dtype=float)
    out = _radial_ratio_table(
        mode.parity, mode.harmonics, mode.coeffs[None, :], mode.char_value, mode.q, r_arr.ravel(), r_ref
    )
    out = out[:, 0].reshape(r_arr.shape)
    return out if out.ndim else float(out)


class MathieuSystem:
    """All Mathieu modes Phi_0 .. Phi_{n_modes-1} for one q.

    Mode index k follows the series convention: Phi_{2j} = ce_j, Phi_{2j+1} = se_{j+1}.
    """

    def __init__(self, q: float, n_modes: int):
        self.q = float(q)
        self.n_modes = int(n_modes)
        n_ce = (n_modes + 1) // 2
        n_se = n_modes // 2
        # ce_j: j even -> class (even,0) index j//2 ; j odd -> (even,1) index j//2
        self._groups = []
        for parity, cls_odd, orders in (
            ("even", 0, [j for j in range(n_ce) if j % 2 == 0]),
            ("even", 1, [j for j in range(n_ce) if j % 2 == 1]),
            ("odd", 1, [j for j in range(1, n_se + 1) if j % 2 == 1]),
            ("odd", 0, [j for j in range(1, n_se + 1) if j % 2 == 0]),
        ):
            if not orders:
                continue
            count = len(orders)
            vals, coeffs, harmonics = _solve_class(parity, cls_odd, self.q, count)
            if parity == "even":
                k_index = [2 * j for j in orders]
            else:
                k_index = [2 * (j - 1) + 1 for j in orders]
            self._groups.append((parity, harmonics, coeffs, vals, np.array(k_index)))

    def char_values(self) -> np.ndarray:
        out = np.empty(self.n_modes)
        for _, _, _, vals, k_index in self._groups:
            out[k_index] = vals
        return out

    def angular(self, s) -> np.ndarray:
        """Phi_k(s) for all modes, shape (len(s), n_modes)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty((s.size, self.n_modes))
        for parity, harmonics, coeffs, _, k_index in self._groups:
            out[:, k_index] = _basis(parity, harmonics, s) @ coeffs.T
        return out

    def radial(self, r) -> np.ndarray:
        """R_k(r) for all modes from the cosh/sinh sums, shape (len(r), n_modes)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty((r.size, self.n_modes))
        for parity, harmonics, coeffs, _, k_index in self._groups:
            out[:, k_index] = _radial_fourier(parity, harmonics, coeffs, r)[0]
        return out

    def radial_ratio(self, r, r_ref: float) -> np.ndarray:
        """R_k(r) / R_k(r_ref) for all modes, shape (len(r), n_modes)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty((r.size, self.n_modes))
        for parity, harmonics, coeffs, chars, k_index in self._groups:
            out[:, k_index] = _radial_ratio_table(parity, harmonics, coeffs, chars, self.q, r, r_ref)
        return out

    def radial_unscaled(self, r) -> np.ndarray:
        """Radial functions up to a per-mode constant (Bessel products, q > 0)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if self.q == 0:
            return self.radial(r)
        out = np.empty((r.size, self.n_modes))
        for parity, harmonics, coeffs, _, k_index in self._groups:
            out[:, k_index] = _radial_product(parity, harmonics, coeffs, self.q, r)
        return out
