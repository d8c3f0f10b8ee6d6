"""File formats: measurement CSV, image CSV and an 8-bit PGM preview."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .forward import MeasurementData, SensorLayout
from .transforms import ImageGrid


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def _header(pairs: dict) -> str:
    lines = []
    for k, v in pairs.items():
        text = v if isinstance(v, str) else json.dumps(v, sort_keys=True)
        if "\n" in text:
            raise ValueError(f"header value for {k} spans lines")
        lines.append(f"# {k}={text}")
    return "\n".join(lines) + "\n"


def _read_header(lines) -> tuple:
    meta = {}
    body = []
    for ln in lines:
        if ln.startswith("#"):
            key, sep, val = ln[1:].strip().partition("=")
            if not sep:
                raise FormatError(f"malformed header line: {ln.strip()!r}")
            meta[key.strip()] = val.strip()
        elif ln.strip():
            body.append(ln)
    return meta, body


def _fmt(x) -> str:
    return f"{x:.17g}"


def write_measurement(path, data: MeasurementData) -> None:
    """Header of key=value provenance, then rows ``t, sensor_0, ..., sensor_{n-1}``."""
    meta = dict(data.layout.to_dict())
    for k, v in data.provenance.items():
        meta.setdefault(k, v)
    rows = np.column_stack([data.times, data.values.T])
    body = "\n".join(",".join(_fmt(x) for x in row) for row in rows)
    Path(path).write_text(_header(meta) + body + "\n")


def read_measurement(path) -> MeasurementData:
    text = Path(path).read_text().splitlines()
    meta, body = _read_header(text)
    try:
        layout = SensorLayout.from_dict(meta)
    except KeyError as exc:
        raise FormatError(f"measurement header lacks {exc}") from None
    try:
        rows = np.array([[float(x) for x in ln.split(",")] for ln in body])
    except ValueError as exc:
        raise FormatError(f"bad number in measurement body: {exc}") from None
    if rows.shape != (layout.n_t, layout.n_sensors + 1):
        raise FormatError(f"body shape {rows.shape} does not match the header layout")
    if not np.allclose(rows[:, 0], layout.times, rtol=1e-12, atol=1e-15):
        raise FormatError("time column disagrees with the header grid")
    known = set(layout.to_dict())
    prov = {k: v for k, v in meta.items() if k not in known}
    return MeasurementData(layout, rows[:, 1:].T, prov)


def write_image(path, image: ImageGrid) -> None:
    ny, nx = image.shape
    meta = {"bbox": list(image.bbox), "nx": nx, "ny": ny}
    body = "\n".join(",".join(_fmt(x) for x in row) for row in image.values)
    Path(path).write_text(_header(meta) + body + "\n")


def read_image(path) -> ImageGrid:
    meta, body = _read_header(Path(path).read_text().splitlines())
    try:
        bbox = json.loads(meta["bbox"])
        nx, ny = int(meta["nx"]), int(meta["ny"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"image header incomplete: {exc}") from None
    try:
        vals = np.array([[float(x) for x in ln.split(",")] for ln in body])
    except ValueError as exc:
        raise FormatError(f"bad number in image body: {exc}") from None
    if vals.shape != (ny, nx):
        raise FormatError(f"image body {vals.shape} does not match {ny}x{nx}")
    return ImageGrid(vals, bbox)


def write_pgm(path, image: ImageGrid) -> None:
    """Min-max normalized 8-bit preview, top row = largest y."""
    v = image.values[::-1]
    lo, hi = float(v.min()), float(v.max())
    scaled = np.zeros(v.shape, dtype=int) if hi == lo else np.rint(255 * (v - lo) / (hi - lo)).astype(int)
    ny, nx = v.shape
    lines = ["P2", f"{nx} {ny}", "255"] + [" ".join(map(str, row)) for row in scaled]
    Path(path).write_text("\n".join(lines) + "\n")
