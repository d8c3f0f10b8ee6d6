"""Glue between a RunConfig and the forward/inverse modules."""
from __future__ import annotations

import logging

import numpy as np

from .config import ConfigError, RunConfig
from .forward import MeasurementData, SensorLayout, default_layout, simulate
from .geometry import Phantom, check_support, rasterize
from .recon import (
    disk_eigenmodes,
    recon_fhr,
    recon_kunyansky_disk,
    recon_m1_disk_series,
    recon_m1_ellipse_series,
    recon_m1_halfspace,
    recon_m3,
    recon_m4,
    spectral_transform_m1,
    spherical_means_from_m1,
    spherical_means_from_m2,
)
from .transforms import ImageGrid

log = logging.getLogger(__name__)


def make_layout(cfg: RunConfig, phantom: Phantom | None = None) -> SensorLayout:
    dom = cfg.convex_domain
    lay = default_layout(cfg.mode, dom, cfg.n_sensors, cfg.n_t, cfg.t_max, cfg.half_width)
    if phantom is not None and cfg.t_max is None and phantom.disks:
        need = lay.required_t_max(phantom)
        if lay.t_max < need:
            lay = SensorLayout(cfg.mode, dom, cfg.n_sensors, cfg.n_t, need * 1.05, cfg.half_width)
    return lay


def run_simulation(cfg: RunConfig, phantom: Phantom) -> MeasurementData:
    cfg.validate("simulate")
    dom = cfg.convex_domain
    check_support(phantom, dom)
    return simulate(phantom, dom, make_layout(cfg, phantom))


def default_grid(cfg: RunConfig, phantom: Phantom | None = None) -> ImageGrid:
    dom = cfg.convex_domain
    if cfg.grid_bbox is not None:
        return ImageGrid.blank(cfg.grid_bbox, cfg.grid_n)
    if dom.kind == "disk":
        return ImageGrid.square(dom.R, cfg.grid_n)
    if dom.kind == "ellipse":
        return ImageGrid.blank((-dom.a, dom.a, -dom.b, dom.b), cfg.grid_n)
    if phantom is None or not phantom.disks:
        raise ConfigError("half-space reconstruction needs grid_bbox or a phantom to size the image")
    x0, x1, y0, y1 = phantom.bounding_box(0.0)
    pad = 0.1 * max(x1 - x0, y1 - y0)
    return ImageGrid.blank((x0 - pad, x1 + pad, max(y0 - pad, 0.0), y1 + pad), cfg.grid_n)


def reconstruct(cfg: RunConfig, data: MeasurementData, grid: ImageGrid, stats: dict | None = None) -> ImageGrid:
    """Dispatch on (mode, method, domain) after validating the triple."""
    cfg.validate()
    dom = cfg.convex_domain
    if data.mode != cfg.mode:
        raise ConfigError(f"measurement holds {data.mode} data but the config asks for {cfg.mode}")
    if data.layout.domain != dom:
        raise ConfigError(
            f"measurement was recorded on {data.layout.domain.describe()}, config names {dom.describe()}"
        )
    stats = {} if stats is None else stats
    method = cfg.resolved_method()
    if method == "radon":
        return recon_m3(data, grid) if cfg.mode == "m3" else recon_m4(data, grid)
    if method == "series":
        spec = spectral_transform_m1(data, dom, cfg.truncation)
        if dom.kind == "disk":
            img = recon_m1_disk_series(spec, dom, grid, stats)
        elif dom.kind == "ellipse":
            img = recon_m1_ellipse_series(spec, dom, grid, stats)
        else:
            img = recon_m1_halfspace(spec, grid)
        if "guard_dropped" in stats:
            log.info("guard dropped %d of %d terms", stats["guard_dropped"], stats["guard_total"])
        return img
    means = spherical_means_from_m1(data) if cfg.mode == "m1" else spherical_means_from_m2(data)
    if method in ("fhr-lap", "fhr-inv"):
        return recon_fhr(means, grid, method[4:])
    lam = cfg.lam_max if cfg.lam_max is not None else (96.0 / dom.R) ** 2
    return recon_kunyansky_disk(means, disk_eigenmodes(dom.R, lam), grid, stats)


def reference_image(phantom: Phantom, grid: ImageGrid) -> ImageGrid:
    return grid.with_values(rasterize(phantom, grid.xs, grid.ys))


def zero_like(grid: ImageGrid) -> ImageGrid:
    return grid.with_values(np.zeros(grid.shape))
