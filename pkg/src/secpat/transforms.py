"""Abel, Radon and circular-mean operators plus the 2D/3D wave bridges.

Endpoint square-root singularities are removed by substitution before any
quadrature; sampled data are interpolated linearly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.ndimage import map_coordinates
from scipy.signal import fftconvolve

_GL64 = np.polynomial.legendre.leggauss(64)


class StencilError(ValueError):
    """A finite-difference stencil does not fit inside the sampled range."""


# --------------------------------------------------------------------- types


@dataclass(frozen=True)
class RadialProfile:
    """Samples of a radial function psi on the uniform grid [0, r_max].

    The profile must have decayed at r_max; beyond it psi is taken as zero.
    """

    samples: np.ndarray
    r_max: float
    decay_tol: float = 1e-6

    def __post_init__(self):
        v = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", v)
        if v.ndim != 1 or v.size < 16:
            raise ValueError("a radial profile needs at least 16 samples")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")
        scale = float(np.max(np.abs(v)))
        if abs(v[-1]) > self.decay_tol * max(scale, 1e-300) and scale > 0:
            raise ValueError(f"profile has not decayed at r_max (last sample {v[-1]:.3g})")

    @classmethod
    def from_function(cls, fn: Callable, r_max: float, n: int = 2048, decay_tol: float = 1e-6):
        r = np.linspace(0.0, r_max, n)
        return cls(np.asarray(fn(r), dtype=float), r_max, decay_tol)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def step(self) -> float:
        return self.r_max / (self.n - 1)

    @property
    def radii(self) -> np.ndarray:
        return np.linspace(0.0, self.r_max, self.n)

    def __call__(self, r):
        return np.interp(r, self.radii, self.samples, right=0.0)


@dataclass(frozen=True)
class Sinogram:
    """Radon data on n_theta angles in [0, 2pi) times n_s offsets in [-s_max, s_max]."""

    values: np.ndarray
    s_max: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 2 or v.shape[1] < 3:
            raise ValueError("sinogram values must be (n_theta, n_s) with n_s >= 3")
        if not self.s_max > 0:
            raise ValueError("s_max must be positive")

    @property
    def n_theta(self) -> int:
        return self.values.shape[0]

    @property
    def n_s(self) -> int:
        return self.values.shape[1]

    @property
    def angles(self) -> np.ndarray:
        return np.linspace(0.0, 2 * np.pi, self.n_theta, endpoint=False)

    @property
    def offsets(self) -> np.ndarray:
        return np.linspace(-self.s_max, self.s_max, self.n_s)

    @property
    def step(self) -> float:
        return 2 * self.s_max / (self.n_s - 1)

    def evenness_defect(self) -> float:
        """max |R(s, theta) - R(-s, theta + pi)|; needs an even number of angles."""
        if self.n_theta % 2:
            raise ValueError("evenness check needs an even number of angles")
        flipped = np.roll(self.values, -self.n_theta // 2, axis=0)[:, ::-1]
        return float(np.max(np.abs(self.values - flipped)))


@dataclass(frozen=True)
class SphericalMeanData:
    """Circular means M(xi_j; r_i): ``values`` has shape (n_centers, n_radii)."""

    centers: np.ndarray
    radii: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        r = np.asarray(self.radii, dtype=float)
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if c.shape[1] != 2 or v.shape != (c.shape[0], r.size):
            raise ValueError("values must have shape (n_centers, n_radii)")
        if r.size < 2 or np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ValueError("radii must be increasing and non-negative")
        for name, val in (("centers", c), ("radii", r), ("values", v)):
            object.__setattr__(self, name, val)

    @property
    def step(self) -> float:
        return float(self.radii[1] - self.radii[0])

    def profile(self, j: int) -> Callable:
        """Linear interpolant of the j-th center's means, zero beyond the grid."""
        r, v = self.radii, self.values[j]
        return lambda x: np.interp(np.abs(x), r, v, right=0.0)


@dataclass(frozen=True)
class ImageGrid:
    """Values at pixel centers of an n_x by n_y raster over ``bbox``.

    ``bbox`` is (x_min, x_max, y_min, y_max); rows of ``values`` follow y.
    """

    values: np.ndarray
    bbox: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "bbox", tuple(float(b) for b in self.bbox))
        x0, x1, y0, y1 = self.bbox
        if v.ndim != 2 or not (x1 > x0 and y1 > y0):
            raise ValueError("image needs 2D values and a non-degenerate box")
        if not np.all(np.isfinite(v)):
            raise ValueError("image contains non-finite values")

    @classmethod
    def blank(cls, bbox, nx: int, ny: int | None = None) -> "ImageGrid":
        return cls(np.zeros((ny or nx, nx)), bbox)

    @classmethod
    def square(cls, half_width: float, n: int, center=(0.0, 0.0)) -> "ImageGrid":
        cx, cy = center
        return cls.blank((cx - half_width, cx + half_width, cy - half_width, cy + half_width), n)

    @property
    def shape(self):
        return self.values.shape

    @property
    def pitch(self):
        x0, x1, y0, y1 = self.bbox
        ny, nx = self.shape
        return (x1 - x0) / nx, (y1 - y0) / ny

    @property
    def xs(self) -> np.ndarray:
        x0, x1, _, _ = self.bbox
        nx = self.shape[1]
        return x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx

    @property
    def ys(self) -> np.ndarray:
        _, _, y0, y1 = self.bbox
        ny = self.shape[0]
        return y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny

    def points(self) -> np.ndarray:
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.stack([X, Y], axis=-1)

    def with_values(self, values) -> "ImageGrid":
        return ImageGrid(values, self.bbox)

    def same_grid(self, other: "ImageGrid") -> bool:
        return self.shape == other.shape and np.allclose(self.bbox, other.bbox)

    def sample(self, x, y) -> np.ndarray:
        """Bilinear interpolation at (x, y); zero outside the raster."""
        dx, dy = self.pitch
        col = (np.asarray(x) - self.bbox[0]) / dx - 0.5
        row = (np.asarray(y) - self.bbox[2]) / dy - 0.5
        return map_coordinates(self.values, [row, col], order=1, mode="constant", cval=0.0)


# --------------------------------------------------------------------- Abel


def _abel_eval(psi: RadialProfile, y: np.ndarray, n_panels: int) -> np.ndarray:
    # r = sqrt(y^2 + u^2) turns 2 int_y r psi / sqrt(r^2 - y^2) dr into 2 int psi du
    x, w = _GL64
    ref = ((np.arange(n_panels)[:, None] + 0.5 * (x + 1.0)) / n_panels).ravel()
    wref = np.tile(w, n_panels) / (2 * n_panels)
    upper = np.sqrt(np.maximum(psi.r_max**2 - y**2, 0.0))
    out = np.empty(y.size)
    for lo in range(0, y.size, 256):
        sl = slice(lo, lo + 256)
        r = np.sqrt(y[sl, None] ** 2 + (upper[sl, None] * ref) ** 2)
        out[sl] = 2.0 * upper[sl] * (psi(r) @ wref)
    return out


def abel_forward(psi: RadialProfile, y, n_panels: int = 64):
    """Abel transform A[psi](y) = 2 int_y^inf r psi(r) / sqrt(r^2 - y^2) dr."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(y >= psi.r_max):
        raise ValueError("Abel transform is evaluated for 0 <= y < r_max")
    out = _abel_eval(psi, np.atleast_1d(y).ravel(), n_panels).reshape(y.shape)
    return out if out.ndim else float(out)


def five_point_derivative(fn: Callable, x, h) -> np.ndarray:
    """Fourth-order central difference (Richardson on two central differences)."""
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    return (fn(x - 2 * h) - 8 * fn(x - h) + 8 * fn(x + h) - fn(x + 2 * h)) / (12 * h)


def abel_inverse(phi: RadialProfile, y, n_panels: int = 64):
    """A^{-1}[phi](y) = -(A[phi])'(y) / (2 pi y) with a 5-point stencil of one grid step."""
    y = np.asarray(y, dtype=float)
    h = phi.step
    if np.any(y < 2 * h) or np.any(y + 2 * h >= phi.r_max):
        raise StencilError("y must stay two grid steps away from 0 and r_max")
    flat = np.atleast_1d(y).ravel()
    # evaluate each distinct stencil node once
    nodes = (flat[:, None] + h * np.arange(-2, 3)[None, :]).ravel()
    uniq, inv = np.unique(np.round(nodes / h, 8), return_inverse=True)
    vals = _abel_eval(phi, uniq * h, n_panels)[inv].reshape(-1, 5)
    deriv = (vals[:, 0] - 8 * vals[:, 1] + 8 * vals[:, 3] - vals[:, 4]) / (12 * h)
    out = (-deriv / (2 * np.pi * flat)).reshape(y.shape)
    return out if out.ndim else float(out)


# --------------------------------------------------------------------- Radon


def radon_forward(image: ImageGrid, n_theta: int, n_s: int, s_max: float | None = None) -> Sinogram:
    """Line integrals by bilinear interpolation, sampled every half pixel along the line."""
    x0, x1, y0, y1 = image.bbox
    half_diag = 0.5 * np.hypot(x1 - x0, y1 - y0)
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    reach = np.hypot(abs(cx) + 0.5 * (x1 - x0), abs(cy) + 0.5 * (y1 - y0))
    if s_max is None:
        s_max = reach
    step = 0.5 * min(image.pitch)
    # integrate along u over the chord through the image box
    n_u = int(np.ceil(2 * half_diag / step)) + 1
    u = (np.arange(n_u) - (n_u - 1) / 2) * step
    s = np.linspace(-s_max, s_max, n_s)
    out = np.empty((n_theta, n_s))
    for j, th in enumerate(np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)):
        c, sn = np.cos(th), np.sin(th)
        # foot point of each line closest to the box center
        base = s - (cx * c + cy * sn)
        px = cx + base[:, None] * c - u[None, :] * sn
        py = cy + base[:, None] * sn + u[None, :] * c
        out[j] = image.sample(px, py).sum(axis=1) * step
    return Sinogram(out, s_max)


def hilbert_kernel(n_s: int, tau: float, cutoff: float = 1.0) -> np.ndarray:
    """Band-limited Hilbert kernel (1 - cos(W s)) / (pi s) at s = n tau, |n| < n_s.

    W = cutoff * pi / tau; cutoff = 1 is the Nyquist frequency, where the
    kernel reduces to 2 / (pi n tau) on odd n and 0 on even n.
    """
    n = np.arange(-(n_s - 1), n_s)
    k = np.zeros(n.size)
    nz = n != 0
    k[nz] = (1.0 - np.cos(cutoff * np.pi * n[nz])) / (np.pi * n[nz] * tau)
    return k


def radon_inverse(sino: Sinogram, target: ImageGrid, cutoff: float = 1.0) -> ImageGrid:
    """Filtered backprojection realizing f = (1/4pi) int_{S^1} H[d_s R f](<x, theta>) dtheta.

    d_s by central differences, then a Hilbert kernel band-limited at the
    sinogram Nyquist frequency (scaled by ``cutoff``), then linear-interpolation
    backprojection.
    """
    if not 0 < cutoff <= 1:
        raise ValueError("cutoff is a fraction of the Nyquist frequency in (0, 1]")
    tau = sino.step
    pts = target.points()
    X, Y = pts[..., 0], pts[..., 1]
    # data vanish beyond s_max, but the filtered data do not: zero-pad the
    # offsets so the filtered projections cover every pixel of the target
    reach = float(np.sqrt(np.max(X**2 + Y**2)))
    pad = max(0, int(np.ceil((reach - sino.s_max) / tau)) + 2)
    g = np.pad(sino.values, ((0, 0), (pad, pad)))
    n_s = g.shape[1]
    s = (np.arange(n_s) - (n_s - 1) / 2) * tau
    ds = np.zeros_like(g)
    ds[:, 1:-1] = (g[:, 2:] - g[:, :-2]) / (2 * tau)
    ds[:, 0] = g[:, 1] / (2 * tau)
    ds[:, -1] = -g[:, -2] / (2 * tau)
    kern = hilbert_kernel(n_s, tau, cutoff)
    filt = fftconvolve(ds, kern[None, :], mode="full", axes=1)[:, n_s - 1 : 2 * n_s - 1] * tau
    img = np.zeros(X.shape)
    for j, th in enumerate(sino.angles):
        proj = X * np.cos(th) + Y * np.sin(th)
        img += np.interp(proj, s, filt[j], left=0.0, right=0.0)
    img *= (2 * np.pi / sino.n_theta) / (4 * np.pi)
    return target.with_values(img)


# --------------------------------------------------------------------- wave bridges


def _cos_panels(edges, n_nodes):
    """GL nodes on each [edges[i], edges[i+1]] after x = a + (b-a) sin^2(pi v / 2).

    The substitution flattens square-root behaviour at both panel ends.
    """
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    v = 0.5 * (x + 1.0)
    a = edges[..., :-1, None]
    b = edges[..., 1:, None]
    pts = a + (b - a) * np.sin(0.5 * np.pi * v) ** 2
    jac = (b - a) * 0.5 * np.pi * np.sin(np.pi * v) * 0.5
    return pts, w * jac


def abel_means_integral(mean: Callable, t, kinks=None, n_nodes: int = 24) -> np.ndarray:
    """F(t) = int_0^t r M(r) / sqrt(t^2 - r^2) dr = t int_0^{pi/2} sin(a) M(t sin a) da.

    ``kinks`` lists radii where M is not smooth; they become panel edges in a.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    kinks = np.array([] if kinks is None else kinks, dtype=float).ravel()
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.clip(kinks[None, :] / t[:, None], 0.0, 1.0)
    inner = np.arcsin(ratio)
    inner = np.where((ratio > 0) & (ratio < 1), inner, 0.0)
    edges = np.sort(np.concatenate([np.zeros((t.size, 1)), inner, np.full((t.size, 1), np.pi / 2)], axis=1), axis=1)
    a, w = _cos_panels(edges, n_nodes)
    vals = np.sin(a) * mean(t[:, None, None] * np.sin(a))
    return t * np.sum(w * vals, axis=(1, 2))


def _mean_and_kinks(mean):
    if isinstance(mean, SphericalMeanData):
        if mean.centers.shape[0] != 1:
            raise ValueError("pass a single-center SphericalMeanData")
        return mean.profile(0), mean.radii, mean.step, float(mean.radii[-1])
    return mean, None, None, np.inf


def wave2d_from_spherical_means(mean, t, step: float | None = None, kinks=None):
    """2D wave solution p(xi; t) = d/dt int_0^t r M(xi; r) / sqrt(t^2 - r^2) dr.

    ``mean`` is a single-center SphericalMeanData or a callable r -> M(r). The
    derivative is a 5-point central stencil with h = min(step, t / 100).
    """
    fn, grid_kinks, grid_step, r_top = _mean_and_kinks(mean)
    if kinks is None:
        kinks = grid_kinks
    if step is None:
        step = grid_step if grid_step is not None else 1e-3
    t = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t).ravel()
    if np.any(flat <= 0) or np.any(flat >= r_top):
        raise ValueError("t must lie in (0, r_max)")
    h = np.minimum(step, flat / 100.0)
    out = five_point_derivative(lambda x: abel_means_integral(fn, x, kinks), flat, h)
    out = out.reshape(t.shape)
    return out if out.ndim else float(out)


def _product_weights(times: np.ndarray, r: np.ndarray) -> np.ndarray:
    """W with (W @ p)(r) = (2/pi) int_0^r p(t) / sqrt(r^2 - t^2) dt for p linear between samples.

    Below the first sample p is held at p(t_0). The integrals of 1 and t against
    the kernel are arcsin and square-root terms, so the quadrature is exact.
    """
    nodes = np.concatenate([[0.0], times])
    R = r[:, None]
    lo = np.minimum(nodes[:-1][None, :], R)
    hi = np.minimum(nodes[1:][None, :], R)
    with np.errstate(divide="ignore", invalid="ignore"):
        i0 = np.arcsin(np.clip(hi / R, 0, 1)) - np.arcsin(np.clip(lo / R, 0, 1))
        i1 = np.sqrt(np.maximum(R**2 - lo**2, 0)) - np.sqrt(np.maximum(R**2 - hi**2, 0))
    i0 = np.nan_to_num(i0)
    i1 = np.nan_to_num(i1)
    W = np.zeros((r.size, times.size))
    W[:, 0] += i0[:, 0]
    dt = np.diff(times)[None, :]
    upper = (i1[:, 1:] - times[:-1][None, :] * i0[:, 1:]) / dt
    W[:, 1:] += upper
    W[:, :-1] += i0[:, 1:] - upper
    return (2 / np.pi) * W


def spherical_means_from_wave_2d(times, p, r, method: str = "product", n_alpha: int = 512):
    """M(r) = (2/pi) int_0^r p(t) / sqrt(r^2 - t^2) dt = (2/pi) int_0^{pi/2} p(r sin a) da.

    ``p`` is sampled at ``times`` (uniform, may carry leading batch axes) and
    interpolated linearly. ``method="product"`` integrates that interpolant
    exactly against the kernel; ``method="trapezoid"`` uses an n_alpha-node
    trapezoid rule in a, which stops converging once dt < r pi / (2 n_alpha).
    """
    times = np.asarray(times, dtype=float)
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > times[-1] + 1e-12):
        raise ValueError("radius beyond the sampled time range")
    flat = r.ravel()
    out = np.empty(p.shape[:-1] + (flat.size,))
    if method == "product":
        chunk = max(1, 4_000_000 // times.size)
        for lo in range(0, flat.size, chunk):
            W = _product_weights(times, flat[lo : lo + chunk])
            out[..., lo : lo + chunk] = p @ W.T
        return out.reshape(p.shape[:-1] + r.shape)
    if method != "trapezoid":
        raise ValueError("method must be 'product' or 'trapezoid'")
    a = np.linspace(0.0, np.pi / 2, n_alpha)
    w = np.full(n_alpha, np.pi / 2 / (n_alpha - 1))
    w[[0, -1]] *= 0.5
    dt = times[1] - times[0]
    batch = max(1, int(np.prod(p.shape[:-1])))
    chunk = max(1, 2_000_000 // (batch * n_alpha))
    for lo in range(0, flat.size, chunk):
        arg = np.multiply.outer(flat[lo : lo + chunk], np.sin(a))
        # linear interpolation on the uniform grid, clamped below the first sample
        pos = np.clip((arg - times[0]) / dt, 0.0, times.size - 1)
        i0 = np.minimum(pos.astype(int), times.size - 2)
        frac = pos - i0
        vals = p[..., i0] * (1 - frac) + p[..., i0 + 1] * frac
        out[..., lo : lo + chunk] = (2 / np.pi) * (vals @ w)
    return out.reshape(p.shape[:-1] + r.shape)


def spherical_means_from_wave_3d(times, p, r):
    """M_3(r) = (1/r) int_0^r p(t) dt by the trapezoid rule on the sampled p.

    Samples need not start at zero; the first interval is closed by linear
    extrapolation to t = 0.
    """
    times = np.asarray(times, dtype=float)
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("radius must be positive")
    if np.any(r > times[-1] + 1e-12):
        raise ValueError("radius beyond the sampled time range")
    if times[0] > 0:
        slope = (p[1] - p[0]) / (times[1] - times[0])
        times = np.concatenate([[0.0], times])
        p = np.concatenate([[p[0] - slope * (times[1])], p])
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(times))])
    idx = np.clip(np.searchsorted(times, r) - 1, 0, times.size - 2)
    part = r - times[idx]
    # trapezoid over the partial interval with the linearly interpolated end value
    end = p[idx] + (p[idx + 1] - p[idx]) * part / (times[idx + 1] - times[idx])
    total = cum[idx] + 0.5 * (p[idx] + end) * part
    out = total / r
    return out if out.ndim else float(out)
