"""Exact reconstruction formulas for the four sectional measurement types.

m1: series inversions for the half-plane, the disk and the ellipse;
m1/m2 via circular means: the two log-kernel formulas on a circle and the
Dirichlet eigenfunction series on the disk; m3/m4: reindexing (m3) or a
reciprocal Abel transform (m4) followed by filtered backprojection.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .forward import MeasurementData
from .geometry import ConvexDomain, UnsupportedDomainError, from_angle
from .specfun import MathieuSystem, bessel_j_orders, bessel_j_zeros, bessel_y0
from .transforms import ImageGrid, Sinogram, SphericalMeanData, _product_weights, radon_inverse

log = logging.getLogger(__name__)


class GeometryMismatchError(ValueError):
    """Measurement layout and requested reconstruction geometry disagree."""


# --------------------------------------------------------------------- spectra


@dataclass(frozen=True)
class Truncation:
    """Series truncation knobs.

    K: largest angular order |k| (disk). n_modes: number of Mathieu modes
    (ellipse; default grows with omega). omega_max, n_omega: midpoint grid
    omega_l = (l + 1/2) omega_max / n_omega. guard: relative denominator
    threshold. n_radial/n_angular: synthesis grid before pixel interpolation.
    """

    K: int = 32
    omega_max: float = 64.0
    n_omega: int = 256
    n_modes: int | None = None
    guard: float = 1e-3
    n_radial: int = 256
    n_angular: int = 512

    def __post_init__(self):
        if self.K < 0 or self.n_omega < 1 or not self.omega_max > 0:
            raise ValueError("truncation needs K >= 0, n_omega >= 1, omega_max > 0")
        if not 0 <= self.guard < 1:
            raise ValueError("guard must lie in [0, 1)")

    @property
    def d_omega(self) -> float:
        return self.omega_max / self.n_omega

    @property
    def omegas(self) -> np.ndarray:
        return (np.arange(self.n_omega) + 0.5) * self.d_omega

    def modes_for(self, omega: float, domain: ConvexDomain) -> int:
        if self.n_modes is not None:
            return self.n_modes
        # angular bandwidth of the ellipse boundary at this frequency, plus margin
        return int(2 * math.ceil(omega * domain.a) + 24)


@dataclass
class SpectralData:
    """Fourier-cosine transform of m1 data.

    disk: values[k_index, l] for k in ``k`` (integers -K..K) and omega_l.
    ellipse: values[k, l] for Mathieu index k < n_modes(omega_l); unused
    entries are zero.
    halfspace: values[k_index, l] at omega = sqrt(k^2 + kappa_l^2), with
    ``omega`` holding that 2D array and ``kappa`` the 1D grid.
    """

    kind: str
    k: np.ndarray
    omega: np.ndarray
    values: np.ndarray
    domain: ConvexDomain
    truncation: Truncation
    kappa: np.ndarray | None = None
    d_k: float = 1.0
    n_modes: np.ndarray | None = None
    record: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError("spectral data contain non-finite values")

    def hermitian_defect(self) -> float:
        """max |m(-k, w) - conj m(k, w)| for the disk spectrum."""
        if self.kind != "disk":
            raise ValueError("Hermitian symmetry applies to the disk spectrum")
        return float(np.max(np.abs(self.values[::-1] - np.conj(self.values)))) if self.values.size else 0.0


def _check_m1(data: MeasurementData, domain: ConvexDomain):
    if data.mode != "m1":
        raise GeometryMismatchError(f"expected m1 data, got {data.mode}")
    if data.layout.domain != domain:
        raise GeometryMismatchError(
            f"data recorded on {data.layout.domain.describe()}, reconstruction asked for {domain.describe()}"
        )


def _cosine_transform(values: np.ndarray, times: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """int_0^inf m(t) cos(omega t) dt by the midpoint rule on the half-step grid."""
    dt = times[1] - times[0]
    return values @ (np.cos(np.multiply.outer(times, omega)) * dt)


@lru_cache(maxsize=512)
def _mathieu_system(q: float, n_modes: int) -> MathieuSystem:
    return MathieuSystem(q, n_modes)


def ellipse_boundary_angle(domain: ConvexDomain, vartheta) -> tuple:
    """Elliptic angle phi of the boundary point with normal angle vartheta, and d phi / d vartheta."""
    a, b = domain.a, domain.b
    c, s = np.cos(vartheta), np.sin(vartheta)
    h2 = a * a * c * c + b * b * s * s
    phi = np.mod(np.arctan2(b * s, a * c), 2 * np.pi)
    return phi, a * b / h2


def spectral_transform_m1(data: MeasurementData, domain: ConvexDomain, truncation: Truncation) -> SpectralData:
    """m~1(k, omega): cosine transform in t, Fourier or Mathieu projection along the boundary."""
    _check_m1(data, domain)
    lay = data.layout
    t = lay.times
    tr = truncation
    if domain.kind == "disk":
        n = lay.n_sensors
        if 2 * tr.K + 1 > n:
            raise ValueError(f"K={tr.K} needs at least {2 * tr.K + 1} sensors, have {n}")
        ks = np.arange(-tr.K, tr.K + 1)
        # (1/pi) int_0^{2pi} m e^{-ik phi} dphi with the exact trapezoid rule on uniform sensors
        ang = np.fft.fft(data.values, axis=0)[ks % n] * (2.0 / n)
        vals = _cosine_transform(ang, t, tr.omegas)
        return SpectralData("disk", ks, tr.omegas, vals, domain, tr, record={"K": tr.K})
    if domain.kind == "halfspace":
        xs = lay.abscissae
        dx = xs[1] - xs[0] if xs.size > 1 else 2 * lay.half_width
        n = xs.size
        d_k = 2 * np.pi / (n * dx)
        k_lim = min(tr.omega_max, np.pi / dx)
        ks = np.arange(-int(k_lim / d_k), int(k_lim / d_k) + 1) * d_k
        # (1/pi) int m e^{-ik xi1} d xi1 by the midpoint rule on the sensor cells
        ang = (np.exp(-1j * np.outer(ks, xs)) @ data.values) * (dx / np.pi)
        kappa = tr.omegas
        omega = np.sqrt(ks[:, None] ** 2 + kappa[None, :] ** 2)
        dt = t[1] - t[0]
        vals = np.empty(omega.shape, dtype=complex)
        for i in range(ks.size):
            vals[i] = (np.cos(np.outer(omega[i], t)) @ ang[i]) * dt
        return SpectralData(
            "halfspace", ks, omega, vals, domain, tr, kappa=kappa, d_k=d_k, record={"n_k": ks.size}
        )
    if domain.kind == "ellipse":
        eps = domain.eccentricity
        phi, jac = ellipse_boundary_angle(domain, lay.angles)
        dphi = jac * (2 * np.pi / lay.n_sensors)
        cos_t = _cosine_transform(data.values, t, tr.omegas)  # (n_sensors, n_omega)
        counts = np.array([tr.modes_for(w, domain) for w in tr.omegas])
        vals = np.zeros((counts.max(), tr.n_omega))
        for l, w in enumerate(tr.omegas):
            system = _mathieu_system(float(eps * eps * w * w / 4), int(counts[l]))
            Phi = system.angular(phi)
            vals[: counts[l], l] = (math.sqrt(2) / math.pi) * (Phi.T @ (cos_t[:, l] * dphi))
        return SpectralData(
            "ellipse", np.arange(counts.max()), tr.omegas, vals, domain, tr, n_modes=counts,
            record={"max_modes": int(counts.max())},
        )
    raise UnsupportedDomainError(domain.kind)


# --------------------------------------------------------------------- series images


def _finish(grid: ImageGrid, values: np.ndarray, what: str) -> ImageGrid:
    if np.iscomplexobj(values):
        peak = float(np.max(np.abs(values.real))) or 1.0
        residue = float(np.max(np.abs(values.imag)))
        if residue > 1e-6 * peak:
            log.warning("%s: imaginary residue %.3g of peak", what, residue / peak)
        values = values.real
    if not np.all(np.isfinite(values)):
        raise FloatingPointError(f"{what}: non-finite image values")
    return grid.with_values(values)


def _polar(grid: ImageGrid):
    pts = grid.points()
    r = np.hypot(pts[..., 0], pts[..., 1])
    phi = np.mod(np.arctan2(pts[..., 1], pts[..., 0]), 2 * np.pi)
    return r, phi


def recon_m1_disk_series(spec: SpectralData, domain: ConvexDomain, grid: ImageGrid, stats: dict | None = None) -> ImageGrid:
    """f(r, phi) = (1/pi) int sum_k J_|k|(omega r) / J_|k|(omega R) m~(k, omega) e^{ik phi} d omega.

    r is the physical radius, so the boundary r = R gives the argument omega R.
    Terms with |J_|k|(omega R)| under guard * (running max over omega) are
    dropped; pixels outside the disk are set to zero.
    """
    if domain.kind != "disk" or spec.kind != "disk":
        raise UnsupportedDomainError("disk series needs a disk domain and disk spectrum")
    R = domain.R
    tr = spec.truncation
    K = int(np.max(np.abs(spec.k)))
    w = spec.omega
    rg = np.linspace(0.0, R, tr.n_radial)
    den = bessel_j_orders(K, w * R)  # (K+1, n_omega)
    run = np.maximum.accumulate(np.abs(den), axis=1)
    # underflowed denominators (order far above omega R) carry no usable information
    keep = (np.abs(den) >= tr.guard * run) & (np.abs(den) > 1e-200)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inv = np.where(keep, 1.0 / den, 0.0)
    num = bessel_j_orders(K, np.multiply.outer(w, rg))  # (K+1, n_omega, n_r)
    weight = num * inv[:, :, None] * (tr.d_omega / math.pi)
    absk = np.abs(spec.k)
    coeff = np.einsum("kl,klr->kr", spec.values, weight[absk])
    dropped = int((~keep).sum())
    log.info("disk series: dropped %d of %d (k, omega) terms by the denominator guard", dropped, keep.size)
    if stats is not None:
        stats.update(guard_dropped=dropped, guard_total=int(keep.size))
    r, phi = _polar(grid)
    inside = r <= R
    out = np.zeros(r.shape, dtype=complex)
    ri = r[inside]
    for idx, k in enumerate(spec.k):
        ck = np.interp(ri, rg, coeff[idx].real) + 1j * np.interp(ri, rg, coeff[idx].imag)
        out[inside] += ck * np.exp(1j * k * phi[inside])
    return _finish(grid, out, "disk series")


def recon_m1_halfspace(spec: SpectralData, grid: ImageGrid) -> ImageGrid:
    """f(xi) = (2/pi) int int_{omega > |k|} m~(k, omega) e^{ik xi1} cos(xi2 sqrt(omega^2 - k^2)) d omega dk.

    With omega = sqrt(k^2 + kappa^2) the cone becomes kappa > 0 and
    d omega = (kappa / omega) d kappa, which removes the edge singularity.
    """
    if spec.kind != "halfspace":
        raise UnsupportedDomainError("half-space formula needs a half-space spectrum")
    kappa = spec.kappa
    d_kappa = kappa[1] - kappa[0] if kappa.size > 1 else spec.truncation.d_omega
    g = spec.values * (kappa[None, :] / spec.omega) * (2 / math.pi) * spec.d_k * d_kappa
    Ey = np.cos(np.outer(grid.ys, kappa))  # (n_y, n_kappa)
    Ex = np.exp(1j * np.outer(spec.k, grid.xs))  # (n_k, n_x)
    out = Ey @ g.T @ Ex
    return _finish(grid, out, "half-space series")


def elliptic_coordinates(domain: ConvexDomain, x, y):
    """(r, phi) with (x, y) = eps (cosh r cos phi, sinh r sin phi), phi in [0, 2pi)."""
    eps = domain.eccentricity
    w = np.arccosh((np.asarray(x) + 1j * np.asarray(y)) / eps)
    r = np.abs(w.real)
    phi = np.where(w.real < 0, -w.imag, w.imag)
    return r, np.mod(phi, 2 * np.pi)


def recon_m1_ellipse_series(spec: SpectralData, domain: ConvexDomain, grid: ImageGrid, stats: dict | None = None) -> ImageGrid:
    """f(psi(r, phi)) = (sqrt2/pi) int sum_k R_k(r) / R_k(r0) m~(k, omega) Phi_k(phi) d omega.

    Synthesized on an (r, phi) grid in elliptic coordinates and interpolated
    to pixels. A mode is dropped at a frequency where max_r |R_k(r)/R_k(r0)|
    exceeds 1/guard, i.e. where the boundary value is a near-zero.
    """
    if domain.kind != "ellipse" or spec.kind != "ellipse":
        raise UnsupportedDomainError("ellipse series needs an ellipse domain and spectrum")
    tr = spec.truncation
    eps = domain.eccentricity
    r0 = domain.elliptic_radius
    rg = np.linspace(0.0, r0, tr.n_radial)
    pg = np.linspace(0.0, 2 * np.pi, tr.n_angular, endpoint=False)
    acc = np.zeros((rg.size, pg.size))
    dropped = total = 0
    limit = 1.0 / tr.guard if tr.guard > 0 else np.inf
    for l, w in enumerate(spec.omega):
        n = int(spec.n_modes[l])
        system = _mathieu_system(float(eps * eps * w * w / 4), n)
        ratio = system.radial_ratio(rg, r0)  # (n_r, n)
        ok = np.all(np.isfinite(ratio), axis=0) & (np.max(np.abs(ratio), axis=0) <= limit)
        dropped += int((~ok).sum())
        total += n
        c = np.where(ok, spec.values[:n, l], 0.0)
        ratio = np.where(ok[None, :], ratio, 0.0)
        acc += (ratio * c[None, :]) @ system.angular(pg).T
    acc *= (math.sqrt(2) / math.pi) * tr.d_omega
    log.info("ellipse series: dropped %d of %d (k, omega) terms by the denominator guard", dropped, total)
    if stats is not None:
        stats.update(guard_dropped=dropped, guard_total=total)
    pts = grid.points()
    r, phi = elliptic_coordinates(domain, pts[..., 0], pts[..., 1])
    inside = r <= r0
    out = np.zeros(r.shape)
    out[inside] = _bilinear_periodic(acc, rg, pg, r[inside], phi[inside])
    return _finish(grid, out, "ellipse series")


def _bilinear_periodic(table, rg, pg, r, phi):
    """Bilinear interpolation of table[r, phi] with phi periodic on a uniform grid."""
    dr = rg[1] - rg[0]
    dp = pg[1] - pg[0]
    fr = np.clip(r / dr, 0, rg.size - 1)
    i = np.minimum(fr.astype(int), rg.size - 2)
    a = fr - i
    fp = phi / dp
    j = np.floor(fp).astype(int) % pg.size
    b = fp - np.floor(fp)
    j1 = (j + 1) % pg.size
    return (
        table[i, j] * (1 - a) * (1 - b)
        + table[i + 1, j] * a * (1 - b)
        + table[i, j1] * (1 - a) * b
        + table[i + 1, j1] * a * b
    )


# --------------------------------------------------------------------- circular means


def spherical_means_from_m2(data: MeasurementData) -> SphericalMeanData:
    """M(xi; t) = 2 int_0^t m2(xi; s) ds, cumulative trapezoid on the half-step grid.

    The half cell [0, t_0] uses m2(t_0), which vanishes whenever the support
    keeps a positive distance from the sensors.
    """
    if data.mode != "m2":
        raise GeometryMismatchError(f"expected m2 data, got {data.mode}")
    dt = data.layout.dt
    v = data.values
    cum = np.cumsum(v, axis=1) * dt - 0.5 * v * dt
    return SphericalMeanData(data.layout.positions(), data.times, 2.0 * cum)


def spherical_means_from_m1(data: MeasurementData) -> SphericalMeanData:
    """Circular means from m1 through the 2D wave relation."""
    from .transforms import spherical_means_from_wave_2d

    if data.mode != "m1":
        raise GeometryMismatchError(f"expected m1 data, got {data.mode}")
    t = data.times
    return SphericalMeanData(data.layout.positions(), t, spherical_means_from_wave_2d(t, data.values, t))


def _circle_of_centers(M: SphericalMeanData, tol: float = 1e-9):
    c = M.centers
    rad = np.hypot(c[:, 0], c[:, 1])
    R = float(rad.mean())
    n = c.shape[0]
    ang = np.mod(np.arctan2(c[:, 1], c[:, 0]), 2 * np.pi)
    expected = np.mod(ang[0] + 2 * np.pi * np.arange(n) / n, 2 * np.pi)
    gap = np.abs(np.angle(np.exp(1j * (ang - expected))))
    if np.max(np.abs(rad - R)) > tol * max(R, 1.0) or np.max(gap) > 1e-7 or n < 3:
        raise GeometryMismatchError("centers are not uniformly spaced on a circle about the origin")
    return R, ang


def _uniform_half_step(radii: np.ndarray) -> float:
    dr = radii[1] - radii[0]
    if not np.allclose(np.diff(radii), dr, rtol=1e-9, atol=0) or not math.isclose(radii[0], 0.5 * dr, rel_tol=1e-6):
        raise ValueError("log-kernel quadrature needs radii on the half-step grid (i + 1/2) dr")
    return dr


def recon_fhr(M: SphericalMeanData, grid: ImageGrid, variant: str = "lap") -> ImageGrid:
    """Log-kernel inversion of circular means on a circle of radius R.

    lap: f = (1/2pi) Lap int_{S^1} int_0^{2R} r M log|r^2 - |xi - R theta|^2| dr ds(theta)
    inv: f = (1/2pi) int_{S^1} int_0^{2R} (d_r r d_r M) log|r^2 - |xi - R theta|^2| dr ds(theta)
    Pixels outside the disk are set to zero. The r-integral is tabulated on a distance grid at integer steps while r sits
    on half steps, so the log is never evaluated at its singularity.
    """
    if variant not in ("lap", "inv"):
        raise ValueError("variant must be 'lap' or 'inv'")
    R, ang = _circle_of_centers(M)
    dr = _uniform_half_step(M.radii)
    r = M.radii
    use = r <= 2 * R + 2 * dr
    r = r[use]
    vals = M.values[:, use]
    if variant == "inv":
        # conservative central differences for d_r (r d_r M), M = 0 past the grid
        Mp = np.pad(vals, ((0, 0), (1, 1)))
        Mp[:, 0] = vals[:, 0]  # even extension across r = 0 (the flux r d_r M vanishes there anyway)
        r_hi = r + 0.5 * dr
        r_lo = r - 0.5 * dr
        vals = (r_hi * (Mp[:, 2:] - Mp[:, 1:-1]) - r_lo * (Mp[:, 1:-1] - Mp[:, :-2])) / dr**2
        weight_r = np.ones_like(r)
    else:
        weight_r = r
    # distances from pixels (plus a one-pixel frame for the Laplacian) to the centers
    px, py = grid.pitch
    xs = np.concatenate([[grid.xs[0] - px], grid.xs, [grid.xs[-1] + px]])
    ys = np.concatenate([[grid.ys[0] - py], grid.ys, [grid.ys[-1] + py]])
    X, Y = np.meshgrid(xs, ys)
    d_max = float(np.max(np.hypot(np.abs(X) + R, np.abs(Y)))) if variant == "lap" else float(
        np.max(np.hypot(np.abs(X[1:-1, 1:-1]) + R, np.abs(Y[1:-1, 1:-1])))
    )
    n_d = int(math.ceil(d_max / dr)) + 2
    d = np.arange(n_d) * dr
    kern = (weight_r * dr)[:, None] * np.log(np.abs(r[:, None] ** 2 - d[None, :] ** 2))
    table = vals @ kern  # (n_centers, n_d)
    if variant == "inv":
        X, Y = X[1:-1, 1:-1], Y[1:-1, 1:-1]
    u = np.zeros(X.shape)
    for j, a in enumerate(ang):
        dist = np.hypot(X - R * math.cos(a), Y - R * math.sin(a))
        u += np.interp(dist, d, table[j])
    u *= (2 * math.pi / ang.size) / (2 * math.pi)
    if variant == "lap":
        u = (
            (u[1:-1, 2:] - 2 * u[1:-1, 1:-1] + u[1:-1, :-2]) / px**2
            + (u[2:, 1:-1] - 2 * u[1:-1, 1:-1] + u[:-2, 1:-1]) / py**2
        )
    # the identity holds inside the disk only; outside it the integral is not f
    rr, _ = _polar(grid)
    return _finish(grid, np.where(rr <= R, u, 0.0), f"fhr-{variant}")


# --------------------------------------------------------------------- Kunyansky on the disk


@dataclass(frozen=True)
class DiskEigenmode:
    """Dirichlet eigenfunction J_|k|(alpha r / R) e^{ik phi} / (sqrt(pi) R |J_{|k|+1}(alpha)|)."""

    k: int
    j: int
    alpha: float
    R: float

    @property
    def eigenvalue(self) -> float:
        return (self.alpha / self.R) ** 2

    @property
    def norm_const(self) -> float:
        return 1.0 / (math.sqrt(math.pi) * self.R * abs(float(bessel_j_orders(abs(self.k) + 1, self.alpha)[-1])))

    def boundary_defect(self) -> float:
        return abs(float(bessel_j_orders(abs(self.k), self.alpha)[-1]))

    def __call__(self, x, y):
        r = np.hypot(x, y)
        phi = np.arctan2(y, x)
        m = abs(self.k)
        return self.norm_const * bessel_j_orders(m, self.alpha * r / self.R)[-1] * np.exp(1j * self.k * phi)

    def normal_derivative(self, phi):
        """<grad u, n> on the boundary: (alpha/R) J_|k|'(alpha) = -(alpha/R) J_{|k|+1}(alpha)."""
        m = abs(self.k)
        jp = -float(bessel_j_orders(m + 1, self.alpha)[-1])
        return self.norm_const * (self.alpha / self.R) * jp * np.exp(1j * self.k * np.asarray(phi))


def disk_eigenmodes(R: float, lam_max: float) -> list:
    """All Dirichlet modes of the disk with eigenvalue <= lam_max, both signs of k."""
    top = math.sqrt(lam_max) * R
    modes = []
    k = 0
    while True:
        zeros = bessel_j_zeros(k, top)
        if zeros.size == 0:
            break
        for j, a in enumerate(zeros, 1):
            modes.append(DiskEigenmode(k, j, float(a), float(R)))
            if k:
                modes.append(DiskEigenmode(-k, j, float(a), float(R)))
        k += 1
    return modes


def green_helmholtz(lam: float, r) -> np.ndarray:
    """Free-space Green's function -(1/4) Y0(sqrt(lam) r) of -(Lap + lam)."""
    return -0.25 * bessel_y0(math.sqrt(lam) * np.asarray(r, dtype=float))


def recon_kunyansky_disk(M: SphericalMeanData, modes: list, grid: ImageGrid, stats: dict | None = None) -> ImageGrid:
    """f = 2 pi sum_k M~_k u_k with M~_k = int_{dOmega} int r M G_lam(r) conj(d_n u_k) dr ds.

    The eigenfunctions are complex, so the boundary factor is conjugated. The
    boundary integral over uniform centers is an FFT per eigenvalue, and the
    synthesis collects each angular order on a radial grid first.
    """
    if not modes:
        raise ValueError("no eigenmodes supplied")
    R, ang = _circle_of_centers(M)
    if any(not math.isclose(m.R, R, rel_tol=1e-9) for m in modes):
        raise GeometryMismatchError("eigenmodes belong to a different disk")
    r = M.radii
    dr = r[1] - r[0]
    n = ang.size
    ks = np.array([m.k for m in modes])
    if np.max(np.abs(ks)) > (n - 1) // 2:
        raise ValueError(f"angular order {np.max(np.abs(ks))} is aliased by {n} centers")
    alphas = np.array([m.alpha for m in modes])
    uniq, inv = np.unique(np.round(alphas, 12), return_inverse=True)
    radial = np.empty((uniq.size, n))
    for c0 in range(0, uniq.size, 256):
        G = green_helmholtz(1.0, np.outer(uniq[c0:c0 + 256] / R, r))
        radial[c0:c0 + 256] = (G * (r * dr)[None, :]) @ M.values.T
    # sum_j I(phi_j) e^{-ik phi_j}, with the first center at angle ang[0]
    spec = np.fft.fft(radial, axis=1)
    shift = np.exp(-1j * ks * ang[0])
    ds = R * 2 * math.pi / n
    kmax = int(np.max(np.abs(ks)))
    jk1 = bessel_j_orders(kmax + 1, alphas)[np.abs(ks) + 1, np.arange(ks.size)]
    norm = 1.0 / (math.sqrt(math.pi) * R * np.abs(jk1))
    dn = norm * (alphas / R) * (-jk1)  # real amplitude of the normal derivative
    coeffs = spec[inv, ks % n] * shift * dn * ds
    if stats is not None:
        stats.update(n_modes=len(modes), coeffs=coeffs)
    rg = np.linspace(0.0, R, 512)
    rr, phi = _polar(grid)
    inside = rr <= R
    out = np.zeros(rr.shape, dtype=complex)
    for k in range(-kmax, kmax + 1):
        sel = ks == k
        if not sel.any():
            continue
        J = bessel_j_orders(abs(k), np.outer(alphas[sel] / R, rg))[-1]
        prof = (coeffs[sel] * norm[sel]) @ J
        vals = np.interp(rr[inside], rg, prof.real) + 1j * np.interp(rr[inside], rg, prof.imag)
        out[inside] += vals * np.exp(1j * k * phi[inside])
    return _finish(grid, 2 * math.pi * out, "kunyansky")


# --------------------------------------------------------------------- plane and line detectors


def _offset_grid(domain: ConvexDomain, dt: float, n_s: int | None):
    s_max = domain.diameter / 2
    if n_s is None:
        n_s = 2 * int(math.ceil(s_max / dt)) + 1
    return s_max, np.linspace(-s_max, s_max, n_s)


def _check_bounded(data: MeasurementData, mode: str):
    if data.mode != mode:
        raise GeometryMismatchError(f"expected {mode} data, got {data.mode}")
    data.layout.domain.require_bounded(f"{mode} reconstruction")


def m3_sinogram(data: MeasurementData, n_s: int | None = None) -> Sinogram:
    """m~3(s, theta) = m3(theta; h(theta) - s) for s < h(theta), zero otherwise (= R f / 2)."""
    _check_bounded(data, "m3")
    lay = data.layout
    s_max, s = _offset_grid(lay.domain, lay.dt, n_s)
    h = np.asarray(lay.domain.support_value(from_angle(lay.angles)))
    t = lay.times
    out = np.zeros((lay.n_sensors, s.size))
    for j in range(lay.n_sensors):
        tt = h[j] - s
        # m3 vanishes for t <= 0; below the first sample interpolate toward that zero
        tp = np.concatenate([[0.0], t])
        vp = np.concatenate([[0.0], data.values[j]])
        out[j] = np.where(tt > 0, np.interp(tt, tp, vp, right=0.0), 0.0)
    return Sinogram(out, s_max)


def recon_m3(data: MeasurementData, grid: ImageGrid, n_s: int | None = None, cutoff: float = 1.0) -> ImageGrid:
    """f = 2 R^{-1}[m~3] by filtered backprojection."""
    sino = m3_sinogram(data, n_s)
    img = radon_inverse(sino, grid, cutoff)
    return img.with_values(2.0 * img.values)


def m4_depth_profiles(data: MeasurementData, rho) -> np.ndarray:
    """F_theta(-rho) = 4 rho int_0^{pi/2} m4(theta; rho sin a) da for every sensor angle.

    This is twice the reciprocal-coordinate Abel transform of t^2 m4(theta; t),
    written in t; the linear interpolant of m4 is integrated exactly against
    1 / sqrt(rho^2 - t^2).
    """
    rho = np.asarray(rho, dtype=float)
    t = data.times
    flat = rho.ravel()
    pos = flat > 0
    out = np.zeros((data.layout.n_sensors, flat.size))
    if np.any(flat > t[-1] + 1e-12):
        raise ValueError("depth beyond the recorded time range")
    W = _product_weights(t, flat[pos])  # (2/pi) int_0^rho p / sqrt(rho^2 - t^2)
    out[:, pos] = (data.values @ W.T) * (2 * math.pi * flat[pos])
    return out.reshape((data.layout.n_sensors,) + rho.shape)


def m4_sinogram(data: MeasurementData, n_s: int | None = None) -> Sinogram:
    """F~(s, theta) = F_theta(-(h - s)) / 2 for s < h(theta), zero otherwise (= R f / 2)."""
    _check_bounded(data, "m4")
    lay = data.layout
    s_max, s = _offset_grid(lay.domain, lay.dt, n_s)
    h = np.asarray(lay.domain.support_value(from_angle(lay.angles)))
    out = np.zeros((lay.n_sensors, s.size))
    t = lay.times
    cache = {}
    for j in range(lay.n_sensors):
        rho = h[j] - s
        ok = (rho > 0) & (rho <= t[-1])
        key = round(float(h[j]), 12)
        if key not in cache:
            cache = {key: _product_weights(t, rho[ok]) * (math.pi * rho[ok])[:, None]}
        out[j, ok] = cache[key] @ data.values[j]
    return Sinogram(out, s_max)


def recon_m4(data: MeasurementData, grid: ImageGrid, n_s: int | None = None, cutoff: float = 1.0) -> ImageGrid:
    """f = 2 R^{-1}[F~] with F~ from the reciprocal Abel transform of the rescaled data."""
    sino = m4_sinogram(data, n_s)
    img = radon_inverse(sino, grid, cutoff)
    return img.with_values(2.0 * img.values)
