"""Sensor domains, tangent frames and disk phantoms with closed-form transforms.

Angles are carried either as a float ``vartheta`` or as the unit vector
``(cos vartheta, sin vartheta)``; :func:`direction` normalizes both forms.
The phantom transforms here are exact and serve as oracles for the
numerical operators elsewhere in the package.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class UnsupportedDomainError(ValueError):
    """Raised when an operation needs a bounded, strictly convex domain."""


class PhantomSupportError(ValueError):
    """Raised when a phantom is not compactly supported inside its domain."""


def from_angle(vartheta) -> np.ndarray:
    """Unit vectors (cos, sin) for an angle or an array of angles, shape (..., 2)."""
    vt = np.asarray(vartheta, dtype=float)
    return np.stack([np.cos(vt), np.sin(vt)], axis=-1)


def direction(theta) -> np.ndarray:
    """Normalize a direction given as a scalar angle or as vector(s) with a trailing axis of 2.

    Arrays of angles must go through :func:`from_angle`; a bare array whose last
    axis has length 2 is always read as vectors.
    """
    arr = np.asarray(theta, dtype=float)
    if arr.ndim == 0:
        return from_angle(arr)
    if arr.shape[-1] != 2:
        raise ValueError("direction vectors need a trailing axis of length 2; use from_angle for angle arrays")
    norm = np.hypot(arr[..., 0], arr[..., 1])
    if np.any(norm == 0):
        raise ValueError("zero vector has no direction")
    return arr / norm[..., None]


def angle_of(theta) -> float:
    """Angle in [0, 2 pi) of a direction given as a vector or an angle."""
    v = direction(theta)
    return float(np.mod(np.arctan2(v[..., 1], v[..., 0]), 2 * np.pi))


@dataclass(frozen=True)
class ConvexDomain:
    """Measurement domain: a centered disk, an axis-aligned ellipse or the upper half-plane."""

    kind: str
    R: float = 1.0
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind == "disk":
            if not self.R > 0:
                raise ValueError("disk radius must be positive")
        elif self.kind == "ellipse":
            if not (self.a > self.b > 0):
                raise ValueError("ellipse requires a > b > 0")
        elif self.kind != "halfspace":
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def disk(cls, R: float = 1.0) -> "ConvexDomain":
        return cls("disk", R=float(R))

    @classmethod
    def ellipse(cls, a: float, b: float) -> "ConvexDomain":
        return cls("ellipse", R=0.0, a=float(a), b=float(b))

    @classmethod
    def halfspace(cls) -> "ConvexDomain":
        return cls("halfspace", R=0.0)

    @property
    def bounded(self) -> bool:
        return self.kind != "halfspace"

    @property
    def eccentricity(self) -> float:
        """Linear eccentricity sqrt(a^2 - b^2) of the ellipse."""
        self._need("ellipse")
        return math.sqrt(self.a**2 - self.b**2)

    @property
    def elliptic_radius(self) -> float:
        """Elliptic coordinate r0 = artanh(b/a) of the boundary."""
        self._need("ellipse")
        return math.atanh(self.b / self.a)

    @property
    def diameter(self) -> float:
        if self.kind == "disk":
            return 2 * self.R
        if self.kind == "ellipse":
            return 2 * self.a
        return math.inf

    def _need(self, kind):
        if self.kind != kind:
            raise UnsupportedDomainError(f"operation requires a {kind} domain, got {self.kind}")

    def require_bounded(self, what="this operation"):
        if not self.bounded:
            raise UnsupportedDomainError(
                f"{what} requires a bounded strictly convex domain (disk or ellipse), got halfspace"
            )

    def support_value(self, theta) -> np.ndarray:
        """<zeta(theta), theta>, the distance of the tangent line from the origin."""
        self.require_bounded("support_value")
        v = direction(theta)
        if self.kind == "disk":
            h = np.full(v.shape[:-1], self.R)
        else:
            h = np.sqrt(self.a**2 * v[..., 0] ** 2 + self.b**2 * v[..., 1] ** 2)
        return h if h.ndim else float(h)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "disk":
            return np.hypot(x[..., 0], x[..., 1]) < self.R
        if self.kind == "ellipse":
            return (x[..., 0] / self.a) ** 2 + (x[..., 1] / self.b) ** 2 < 1
        return x[..., 1] > 0

    def to_dict(self) -> dict:
        if self.kind == "disk":
            return {"kind": "disk", "R": self.R}
        if self.kind == "ellipse":
            return {"kind": "ellipse", "a": self.a, "b": self.b}
        return {"kind": "halfspace"}

    def describe(self) -> str:
        if self.kind == "disk":
            return f"disk:{self.R!r}"
        if self.kind == "ellipse":
            return f"ellipse:{self.a!r}:{self.b!r}"
        return "halfspace"

    @classmethod
    def parse(cls, text: str) -> "ConvexDomain":
        """Inverse of :meth:`describe` (``disk:R``, ``ellipse:a:b``, ``halfspace``)."""
        parts = text.strip().split(":")
        try:
            if parts[0] == "disk":
                return cls.disk(float(parts[1]) if len(parts) > 1 else 1.0)
            if parts[0] == "ellipse":
                return cls.ellipse(float(parts[1]), float(parts[2]))
            if parts[0] == "halfspace" and len(parts) == 1:
                return cls.halfspace()
        except (IndexError, ValueError) as exc:
            raise ValueError(f"bad domain spec {text!r}: {exc}") from None
        raise ValueError(f"bad domain spec {text!r}")


def support_point(domain: ConvexDomain, theta) -> np.ndarray:
    """Boundary point zeta(theta) whose outward unit normal is theta."""
    domain.require_bounded("support_point")
    v = direction(theta)
    if domain.kind == "disk":
        return domain.R * v
    a2, b2 = domain.a**2, domain.b**2
    h = np.sqrt(a2 * v[..., 0] ** 2 + b2 * v[..., 1] ** 2)
    return np.stack([a2 * v[..., 0] / h, b2 * v[..., 1] / h], axis=-1)


@dataclass(frozen=True)
class TangentFrame:
    """The line zeta(theta) + r theta + R theta_perp parallel to the tangent at zeta(theta)."""

    theta: np.ndarray
    zeta: np.ndarray
    r: float

    @property
    def normal(self) -> np.ndarray:
        return self.theta

    @property
    def tangent(self) -> np.ndarray:
        return np.array([-self.theta[1], self.theta[0]])

    @property
    def offset(self) -> float:
        """Signed distance of the line from the origin along theta."""
        return float(self.zeta @ self.theta + self.r)

    def point(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        base = self.zeta + self.r * self.theta
        return base + u[..., None] * self.tangent

    def signed_distance(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.theta - self.offset


def tangent_line(domain: ConvexDomain, theta, r: float = 0.0) -> TangentFrame:
    v = direction(theta)
    return TangentFrame(theta=v, zeta=support_point(domain, v), r=float(r))


@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")


@dataclass(frozen=True)
class Phantom:
    """Piecewise-constant f as a sum of disk indicators."""

    disks: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "disks", tuple(self.disks))

    def __len__(self):
        return len(self.disks)

    def __add__(self, other: "Phantom") -> "Phantom":
        return Phantom(self.disks + other.disks)

    def scaled(self, factor: float) -> "Phantom":
        return Phantom(tuple(Disk(d.center, d.radius, d.amplitude * factor) for d in self.disks))

    def translated(self, shift) -> "Phantom":
        sx, sy = shift
        return Phantom(
            tuple(Disk((d.center[0] + sx, d.center[1] + sy), d.radius, d.amplitude) for d in self.disks)
        )

    @property
    def centers(self) -> np.ndarray:
        return np.array([d.center for d in self.disks], dtype=float).reshape(-1, 2)

    @property
    def radii(self) -> np.ndarray:
        return np.array([d.radius for d in self.disks], dtype=float)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([d.amplitude for d in self.disks], dtype=float)

    @property
    def mass(self) -> float:
        return float(np.sum(self.amplitudes * np.pi * self.radii**2))

    def bounding_box(self, pad: float = 0.0):
        """(xmin, xmax, ymin, ymax) of the union of disks."""
        if not self.disks:
            return (0.0, 0.0, 0.0, 0.0)
        c, rho = self.centers, self.radii
        return (
            float(np.min(c[:, 0] - rho) - pad),
            float(np.max(c[:, 0] + rho) + pad),
            float(np.min(c[:, 1] - rho) - pad),
            float(np.max(c[:, 1] + rho) + pad),
        )

    def extent(self) -> float:
        """Radius of the smallest origin-centered disk containing the support."""
        if not self.disks:
            return 0.0
        return float(np.max(np.hypot(self.centers[:, 0], self.centers[:, 1]) + self.radii))

    def to_text(self) -> str:
        lines = [f"disk {d.center[0]!r} {d.center[1]!r} {d.radius!r} {d.amplitude!r}" for d in self.disks]
        return "\n".join(lines) + ("\n" if lines else "")

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


def parse_phantom(text: str) -> Phantom:
    """Read the one-primitive-per-line text format (``disk cx cy radius amplitude``)."""
    disks = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] != "disk":
            raise ValueError(f"line {lineno}: unknown primitive {fields[0]!r}")
        if len(fields) != 5:
            raise ValueError(f"line {lineno}: expected 'disk cx cy radius amplitude'")
        try:
            cx, cy, rho, amp = map(float, fields[1:])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric field") from None
        disks.append(Disk((cx, cy), rho, amp))
    return Phantom(tuple(disks))


def load_phantom(path) -> Phantom:
    return parse_phantom(Path(path).read_text())


def support_margin(phantom: Phantom, domain: ConvexDomain, n_dirs: int = 4096) -> float:
    """Smallest gap between a phantom disk and the domain boundary (negative if outside).

    For convex domains a disk c + rho B lies inside iff <c, theta> + rho < h(theta)
    for every direction, so the gap is min over theta of h(theta) - <c, theta> - rho.
    """
    if not phantom.disks:
        return math.inf
    c, rho = phantom.centers, phantom.radii
    if domain.kind == "halfspace":
        return float(np.min(c[:, 1] - rho))
    if domain.kind == "disk":
        return float(np.min(domain.R - np.hypot(c[:, 0], c[:, 1]) - rho))
    v = from_angle(np.linspace(0, 2 * np.pi, n_dirs, endpoint=False))
    h = domain.support_value(v)
    gaps = h[None, :] - c @ v.T - rho[:, None]
    return float(np.min(gaps))


def check_support(phantom: Phantom, domain: ConvexDomain) -> None:
    gap = support_margin(phantom, domain)
    if not gap > 0:
        raise PhantomSupportError(
            f"phantom is not compactly supported inside the {domain.kind} domain (gap {gap:.3g})"
        )


def phantom_eval(phantom: Phantom, xi) -> np.ndarray:
    """Pointwise f(xi); disk boundaries count as inside."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape[:-1])
    for d in phantom.disks:
        dist2 = (xi[..., 0] - d.center[0]) ** 2 + (xi[..., 1] - d.center[1]) ** 2
        out = out + d.amplitude * (dist2 <= d.radius**2)
    return out if out.ndim else float(out)


def phantom_radon(phantom: Phantom, s, theta) -> np.ndarray:
    """Exact line integrals R f(s, theta): sum of chord lengths times amplitude.

    ``theta`` is a scalar angle or direction vector(s) of shape (..., 2);
    the leading axes broadcast against ``s``.
    """
    s = np.asarray(s, dtype=float)
    v = direction(theta)
    c0, c1 = v[..., 0], v[..., 1]
    out = np.zeros(np.broadcast(s, c0).shape)
    for d in phantom.disks:
        dist = s - (d.center[0] * c0 + d.center[1] * c1)
        out = out + 2 * d.amplitude * np.sqrt(np.maximum(d.radius**2 - dist**2, 0.0))
    return out if out.ndim else float(out)


def _arc_fraction(dist, r, rho):
    """Fraction of the circle of radius r whose center is at distance dist from a
    disk of radius rho that lies inside the (closed) disk."""
    dist, r = np.broadcast_arrays(np.asarray(dist, dtype=float), np.asarray(r, dtype=float))
    out = np.zeros(dist.shape)
    # point on the circle at angle phi from the center direction is inside iff
    # cos(phi) >= (dist^2 + r^2 - rho^2) / (2 dist r)
    generic = (dist > 0) & (r > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = (dist**2 + r**2 - rho**2) / (2 * dist * r)
    out[generic] = np.arccos(np.clip(g[generic], -1.0, 1.0)) / np.pi
    degenerate = ~generic
    out[degenerate] = (np.maximum(dist, r)[degenerate] <= rho) * 1.0
    return out


def phantom_spherical_mean(phantom: Phantom, xi, r) -> np.ndarray:
    """Exact circular mean M f(xi; r) of the phantom.

    ``xi`` has shape (..., 2) and broadcasts against ``r`` after dropping the
    trailing axis. Means are even in r.
    """
    xi = np.asarray(xi, dtype=float)
    r = np.abs(np.asarray(r, dtype=float))
    out = np.zeros(np.broadcast(xi[..., 0], r).shape)
    for d in phantom.disks:
        dist = np.hypot(xi[..., 0] - d.center[0], xi[..., 1] - d.center[1])
        out = out + d.amplitude * _arc_fraction(dist, r, d.radius)
    return out if out.ndim else float(out)


def tangency_radii(phantom: Phantom, xi) -> np.ndarray:
    """Radii where circles around xi touch a phantom disk boundary, shape (..., 2 n_disks)."""
    xi = np.asarray(xi, dtype=float)
    if not phantom.disks:
        return np.zeros(xi.shape[:-1] + (0,))
    c, rho = phantom.centers, phantom.radii
    dist = np.hypot(xi[..., None, 0] - c[:, 0], xi[..., None, 1] - c[:, 1])
    return np.concatenate([np.abs(dist - rho), dist + rho], axis=-1)


def rasterize(phantom: Phantom, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Phantom sampled at pixel centers; rows follow ``ys``, columns ``xs``."""
    X, Y = np.meshgrid(xs, ys)
    return phantom_eval(phantom, np.stack([X, Y], axis=-1))


def two_disk_phantom(domain: ConvexDomain | None = None) -> Phantom:
    """Reference phantom used by the demos and acceptance runs."""
    base = Phantom((Disk((-0.15, 0.1), 0.45, 1.0), Disk((0.3, -0.2), 0.25, 0.5)))
    if domain is not None and domain.kind == "halfspace":
        return base.translated((0.0, 1.2))
    return base


def sample_angles(n: int) -> np.ndarray:
    return np.linspace(0.0, 2 * np.pi, n, endpoint=False)


def as_phantom(disks: Sequence) -> Phantom:
    return Phantom(tuple(d if isinstance(d, Disk) else Disk(*d) for d in disks))
