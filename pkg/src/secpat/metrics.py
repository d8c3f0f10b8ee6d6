"""Image comparison metrics."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import binary_dilation

from .transforms import ImageGrid


class GridMismatchError(ValueError):
    pass


def _values(img):
    return img.values if isinstance(img, ImageGrid) else np.asarray(img, dtype=float)


def relative_l2(a, b, mask=None) -> float:
    """||a - b|| / ||a|| with ``a`` the reference; 0 when both vanish."""
    a, b = _values(a), _values(b)
    if a.shape != b.shape:
        raise GridMismatchError(f"shapes differ: {a.shape} vs {b.shape}")
    if mask is not None:
        a, b = a[mask], b[mask]
    den = np.linalg.norm(a)
    num = np.linalg.norm(a - b)
    if den == 0:
        return 0.0 if num == 0 else float("inf")
    return float(num / den)


def max_abs_error(a, b) -> float:
    return float(np.max(np.abs(_values(a) - _values(b))))


def peak_offset(a, b) -> float:
    """Distance in pixels between the argmax locations."""
    ia = np.unravel_index(np.argmax(_values(a)), _values(a).shape)
    ib = np.unravel_index(np.argmax(_values(b)), _values(b).shape)
    return float(np.hypot(ia[0] - ib[0], ia[1] - ib[1]))


def mass_outside(image, support: np.ndarray, dilation: int = 4) -> float:
    """Fraction of the L1 mass of ``image`` outside ``support`` dilated by ``dilation`` pixels."""
    v = np.abs(_values(image))
    total = v.sum()
    if total == 0:
        return 0.0
    grown = binary_dilation(np.asarray(support, bool), iterations=dilation) if dilation else np.asarray(support, bool)
    return float(v[~grown].sum() / total)


def box_mask(grid: ImageGrid, bbox) -> np.ndarray:
    """Pixels whose centers lie in the closed box (x0, x1, y0, y1)."""
    x0, x1, y0, y1 = bbox
    pts = grid.points()
    return (pts[..., 0] >= x0) & (pts[..., 0] <= x1) & (pts[..., 1] >= y0) & (pts[..., 1] <= y1)


@dataclass(frozen=True)
class Metrics:
    relative_l2: float
    max_abs_error: float
    peak_offset: float
    mass_outside: float

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v >= 0:
                raise ValueError(f"metric {k} must be non-negative, got {v}")

    def lines(self) -> list:
        return [f"{k}={v:.17g}" for k, v in asdict(self).items()]


def compare(reference: ImageGrid, other: ImageGrid, support=None, dilation: int = 4) -> Metrics:
    """All metrics of ``other`` against ``reference``; support defaults to reference != 0."""
    if not reference.same_grid(other):
        raise GridMismatchError("images live on different grids")
    if support is None:
        support = reference.values != 0
    return Metrics(
        relative_l2(reference, other),
        max_abs_error(reference, other),
        peak_offset(reference, other),
        mass_outside(other, support, dilation),
    )
