"""Run configuration shared by the command line and the scripts."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .forward import MODES
from .geometry import ConvexDomain
from .recon import Truncation

METHODS = ("auto", "series", "fhr-lap", "fhr-inv", "kunyansky", "radon")


class ConfigError(ValueError):
    """Incompatible or malformed settings."""


@dataclass
class RunConfig:
    """Every knob of a simulate/reconstruct run.

    grid_bbox=None means the domain's bounding box (bounded domains) or the
    phantom's bounding box padded by 10% (half-space). lam_max=None uses
    (96/R)^2 for the eigenfunction series.
    """

    domain: str = "disk:1.0"
    mode: str = "m1"
    method: str = "auto"
    n_sensors: int = 256
    n_t: int = 1024
    t_max: float | None = None
    half_width: float = 8.0
    K: int = 96
    omega_max: float = 200.0
    n_omega: int = 800
    n_modes: int | None = None
    guard: float = 1e-3
    lam_max: float | None = None
    grid_n: int = 256
    grid_bbox: list | None = None
    phantom: str | None = None
    measurement: str | None = None
    output: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def convex_domain(self) -> ConvexDomain:
        try:
            return ConvexDomain.parse(self.domain)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def truncation(self) -> Truncation:
        return Truncation(K=self.K, omega_max=self.omega_max, n_omega=self.n_omega, n_modes=self.n_modes, guard=self.guard)

    def resolved_method(self) -> str:
        if self.method != "auto":
            return self.method
        return {"m1": "series", "m2": "fhr-lap", "m3": "radon", "m4": "radon"}[self.mode]

    def validate(self, stage: str = "reconstruct") -> "RunConfig":
        """Check the (mode, method, domain) triple and the knobs.

        With ``stage="simulate"`` an ``auto`` method is not resolved, since
        data can be simulated for geometries that only some methods invert.
        """
        dom = self.convex_domain
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.mode in ("m3", "m4") and not dom.bounded:
            raise ConfigError(f"mode {self.mode} requires a bounded strictly convex domain (disk or ellipse)")
        m = self.resolved_method()
        if stage == "simulate" and self.method == "auto":
            m = None
        if m == "radon" and self.mode not in ("m3", "m4"):
            raise ConfigError("method radon applies to m3/m4 data only")
        if self.mode in ("m3", "m4") and m not in (None, "radon"):
            raise ConfigError(f"mode {self.mode} is reconstructed by method radon, not {m}")
        if m == "series" and self.mode != "m1":
            raise ConfigError("series methods invert m1 data only")
        if m in ("fhr-lap", "fhr-inv", "kunyansky") and dom.kind != "disk":
            raise ConfigError(f"method {m} is implemented for the disk only (centers on a circle)")
        for name in ("n_sensors", "n_t", "grid_n", "n_omega"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.t_max is not None and not self.t_max > 0:
            raise ConfigError("t_max must be positive")
        if self.grid_bbox is not None and len(self.grid_bbox) != 4:
            raise ConfigError("grid_bbox needs four numbers x0 x1 y0 y1")
        try:
            self.truncation
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data)

    def merged(self, overrides: dict) -> "RunConfig":
        d = self.to_dict()
        d.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_dict(d)
