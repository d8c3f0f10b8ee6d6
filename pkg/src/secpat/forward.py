"""Exact synthesis of the four sectional measurement data sets.

Every model is an analytic reduction of the 3D wave problem:

* m1, the line-integrated pressure, solves the 2D wave equation and is
  obtained from the closed-form circular means of the phantom;
* m2, the point-detector pressure in the plane, is half the time derivative
  of those circular means;
* m3, the plane-detector signal, is half a Radon projection read backwards
  from the tangent point;
* m4, the tangent-line signal, is an Abel-type integral of Radon data.

Time samples sit on the half-step grid t_i = (i + 1/2) dt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    ConvexDomain,
    Phantom,
    UnsupportedDomainError,
    check_support,
    from_angle,
    phantom_radon,
    phantom_spherical_mean,
    support_point,
    tangency_radii,
)
from .transforms import _cos_panels, abel_means_integral, five_point_derivative

MODES = ("m1", "m2", "m3", "m4")


@dataclass(frozen=True)
class SensorLayout:
    """Sensor positions and the time grid of one measurement.

    m1/m2 sensors are boundary points, uniform in the normal angle for disk and
    ellipse and uniform in xi_1 on [-half_width, half_width] for the
    half-space. m3/m4 sensors are the normal angles themselves.
    """

    mode: str
    domain: ConvexDomain
    n_sensors: int
    n_t: int
    t_max: float
    half_width: float = 8.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.n_sensors < 1 or self.n_t < 8:
            raise ValueError("need at least one sensor and eight time samples")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.mode in ("m3", "m4"):
            self.domain.require_bounded(f"mode {self.mode}")
        if not self.domain.bounded and not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def dt(self) -> float:
        return self.t_max / self.n_t

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.n_t) + 0.5) * self.dt

    @property
    def angles(self) -> np.ndarray:
        """Normal angles of the sensors (bounded domains)."""
        self.domain.require_bounded("sensor angles")
        return np.linspace(0.0, 2 * np.pi, self.n_sensors, endpoint=False)

    @property
    def abscissae(self) -> np.ndarray:
        """xi_1 of the half-space sensors (cell centers of [-L, L])."""
        L = self.half_width
        return -L + (np.arange(self.n_sensors) + 0.5) * (2 * L / self.n_sensors)

    def positions(self) -> np.ndarray:
        """Sensor points on the boundary, shape (n_sensors, 2) (m1/m2)."""
        if self.domain.bounded:
            return support_point(self.domain, from_angle(self.angles))
        x = self.abscissae
        return np.stack([x, np.zeros_like(x)], axis=-1)

    def required_t_max(self, phantom: Phantom) -> float:
        """Smallest t_max that records complete data for ``phantom``."""
        if self.domain.bounded:
            return self.domain.diameter + phantom.extent()
        if not phantom.disks:
            return 0.0
        radii = tangency_radii(phantom, self.positions())
        return float(radii.max())

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "domain": self.domain.describe(),
            "n_sensors": self.n_sensors,
            "n_t": self.n_t,
            "t_max": self.t_max,
            "half_width": self.half_width,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SensorLayout":
        return cls(
            mode=d["mode"],
            domain=ConvexDomain.parse(d["domain"]),
            n_sensors=int(d["n_sensors"]),
            n_t=int(d["n_t"]),
            t_max=float(d["t_max"]),
            half_width=float(d.get("half_width", 8.0)),
        )


@dataclass(frozen=True)
class MeasurementData:
    """Sampled m_k: ``values[j, i]`` belongs to sensor j and time t_i."""

    layout: SensorLayout
    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.layout.n_sensors, self.layout.n_t):
            raise ValueError(f"values shape {v.shape} does not match the layout")
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("measurement contains non-finite values")

    @property
    def mode(self) -> str:
        return self.layout.mode

    @property
    def times(self) -> np.ndarray:
        return self.layout.times

    def with_values(self, values) -> "MeasurementData":
        return MeasurementData(self.layout, values, dict(self.provenance))


def _provenance(phantom: Phantom, layout: SensorLayout, **extra) -> dict:
    rec = {"phantom": phantom.digest(), "n_disks": len(phantom)}
    rec.update(layout.to_dict())
    rec.update(extra)
    return rec


def _prepare(phantom, domain, layout, mode):
    if layout.mode != mode:
        raise ValueError(f"layout is for {layout.mode}, not {mode}")
    if layout.domain != domain:
        raise ValueError("layout domain differs from the simulation domain")
    check_support(phantom, domain)
    need = layout.required_t_max(phantom)
    if layout.t_max < need - 1e-12:
        raise ValueError(f"t_max={layout.t_max:g} records incomplete data; need at least {need:.4g}")


def simulate_m1(phantom: Phantom, domain: ConvexDomain, layout: SensorLayout) -> MeasurementData:
    """Line-integrated pressure m1(xi; t), the 2D wave solution at boundary points.

    p(t) = d/dt int_0^t r M(xi; r) / sqrt(t^2 - r^2) dr with the exact circular
    means, quadrature panels split at the tangency radii and a 5-point time
    stencil of step min(dt, t / 100).
    """
    _prepare(phantom, domain, layout, "m1")
    t = layout.times
    h = np.minimum(layout.dt, t / 100.0)
    out = np.zeros((layout.n_sensors, layout.n_t))
    # one disk at a time so the quadrature, and hence the data, is linear in the phantom
    for disk in phantom.disks:
        single = Phantom((disk,))
        for j, xi in enumerate(layout.positions()):
            kinks = tangency_radii(single, xi)
            mean = lambda r, xi=xi: phantom_spherical_mean(single, xi, r)
            # causality: the integral vanishes identically until the disk is reached
            live = t + 2 * h > kinks.min()
            if live.any():
                out[j, live] += five_point_derivative(
                    lambda x: abel_means_integral(mean, x, kinks), t[live], h[live]
                )
    return MeasurementData(layout, out, _provenance(phantom, layout, stencil="5-point, h=min(dt,t/100)"))


def _grid_derivative(values: np.ndarray, dt: float) -> np.ndarray:
    # values sampled at t_{-2} .. t_{n+1}; 5-point derivative at t_0 .. t_{n-1}
    return (values[..., :-4] - 8 * values[..., 1:-3] + 8 * values[..., 3:-1] - values[..., 4:]) / (12 * dt)


def _extended_times(layout: SensorLayout) -> np.ndarray:
    return (np.arange(-2, layout.n_t + 2) + 0.5) * layout.dt


def simulate_m2(phantom: Phantom, domain: ConvexDomain, layout: SensorLayout) -> MeasurementData:
    """Point-detector data m2(xi; t) = 1/2 d/dt M(xi; t), stencil on the half-step grid."""
    _prepare(phantom, domain, layout, "m2")
    te = np.abs(_extended_times(layout))
    pos = layout.positions()
    means = phantom_spherical_mean(phantom, pos[:, None, :], te[None, :])
    out = 0.5 * _grid_derivative(means, layout.dt)
    return MeasurementData(layout, out, _provenance(phantom, layout, stencil="5-point, h=dt"))


def simulate_m3(phantom: Phantom, domain: ConvexDomain, layout: SensorLayout) -> MeasurementData:
    """Plane-detector data m3(theta; t) = 1/2 R f(<zeta(theta), theta> - t, theta)."""
    domain.require_bounded("m3 simulation")
    _prepare(phantom, domain, layout, "m3")
    th = from_angle(layout.angles)
    h = np.asarray(domain.support_value(th))
    s = h[:, None] - layout.times[None, :]
    out = 0.5 * phantom_radon(phantom, s, th[:, None, :])
    return MeasurementData(layout, out, _provenance(phantom, layout))


def radon_kinks(phantom: Phantom, domain: ConvexDomain, theta) -> np.ndarray:
    """Depths rho at which F_theta(-rho) = R f(h - rho, theta) is not smooth."""
    v = from_angle(theta) if np.ndim(theta) == 0 else np.asarray(theta, dtype=float)
    h = domain.support_value(v)
    if not phantom.disks:
        return np.zeros(0)
    proj = phantom.centers @ v
    return np.concatenate([h - proj - phantom.radii, h - proj + phantom.radii])


def tangent_line_integral(F, t, kinks, n_nodes: int = 24) -> np.ndarray:
    """G(t) = int_0^t F(rho) / sqrt(t^2 - rho^2) d rho = int_0^{pi/2} F(t sin a) da.

    Panels in a are split where t sin a hits a kink of F; each panel uses the
    sin^2 substitution against square-root endpoint behaviour.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    kinks = np.asarray(kinks, dtype=float).ravel()
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = kinks[None, :] / t[:, None]
    inner = np.where((ratio > 0) & (ratio < 1), np.arcsin(np.clip(ratio, 0, 1)), 0.0)
    edges = np.sort(np.concatenate([np.zeros((t.size, 1)), inner, np.full((t.size, 1), np.pi / 2)], axis=1), axis=1)
    a, w = _cos_panels(edges, n_nodes)
    return np.sum(w * F(t[:, None, None] * np.sin(a)), axis=(1, 2))


def simulate_m4(phantom: Phantom, domain: ConvexDomain, layout: SensorLayout) -> MeasurementData:
    """Tangent-line data m4(theta; t) = (1/2pi) d/dt int_0^t F_theta(-rho) / sqrt(t^2 - rho^2) d rho.

    F_theta(-rho) = R f(<zeta(theta), theta> - rho, theta) from the exact chords;
    the time derivative is the 5-point stencil on the half-step grid.
    """
    domain.require_bounded("m4 simulation")
    _prepare(phantom, domain, layout, "m4")
    te = np.abs(_extended_times(layout))
    out = np.zeros((layout.n_sensors, layout.n_t))
    # one disk at a time so the quadrature, and hence the data, is linear in the phantom
    for disk in phantom.disks:
        single = Phantom((disk,))
        for j, ang in enumerate(layout.angles):
            v = from_angle(ang)
            h = domain.support_value(v)
            F = lambda rho, v=v, h=h: phantom_radon(single, h - rho, v)
            G = tangent_line_integral(F, te, radon_kinks(single, domain, v))
            out[j] += _grid_derivative(G, layout.dt) / (2 * math.pi)
    return MeasurementData(layout, out, _provenance(phantom, layout, stencil="5-point, h=dt"))


SIMULATORS = {"m1": simulate_m1, "m2": simulate_m2, "m3": simulate_m3, "m4": simulate_m4}


def simulate(phantom: Phantom, domain: ConvexDomain, layout: SensorLayout) -> MeasurementData:
    return SIMULATORS[layout.mode](phantom, domain, layout)


def default_layout(mode: str, domain: ConvexDomain, n_sensors: int = 256, n_t: int = 1024,
                   t_max: float | None = None, half_width: float = 8.0) -> SensorLayout:
    """Layout with t_max covering full data for any phantom inside the domain."""
    if t_max is None:
        if domain.bounded:
            t_max = domain.diameter + 0.5 * domain.diameter
        else:
            t_max = 2.0 * half_width
    if not domain.bounded and mode in ("m3", "m4"):
        raise UnsupportedDomainError(f"mode {mode} requires a bounded strictly convex domain")
    return SensorLayout(mode, domain, n_sensors, n_t, float(t_max), half_width)
