"""Raster data types and deterministic low-level kernels.

Binary masks are plain boolean ndarrays; label maps are integer ndarrays with
0 as background.  All kernels are pure functions and safe to call from
concurrent workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ParameterError

# 4-connectivity is the library-wide convention for components and holes.
FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass
class Radiograph:
    """A single 2D X-ray projection with physical pixel pitch.

    intensities are stored as float64; arbitrary linear units before
    normalization, [0, 1] after.
    """

    intensities: np.ndarray
    pixel_pitch: float  # micrometers per pixel
    id: str = ""

    def __post_init__(self):
        self.intensities = np.asarray(self.intensities, dtype=np.float64)
        if self.intensities.ndim != 2 or self.intensities.size == 0:
            raise ParameterError("radiograph must be a non-empty 2D grid")
        if not np.all(np.isfinite(self.intensities)):
            raise ParameterError(f"radiograph {self.id!r} contains non-finite values")
        if self.pixel_pitch <= 0:
            raise ParameterError("pixel_pitch must be positive")

    @property
    def height(self) -> int:
        return self.intensities.shape[0]

    @property
    def width(self) -> int:
        return self.intensities.shape[1]


@dataclass
class RegionProps:
    """Geometry summary of one labeled region.

    bounding_box is half-open: (min_row, min_col, max_row, max_col) with the
    max coordinates exclusive.
    """

    label: int
    area: int
    centroid: tuple[float, float]
    bounding_box: tuple[int, int, int, int]
    equivalent_radius: float  # micrometers: pitch * sqrt(area / pi)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1D Gaussian kernel truncated at radius ceil(4*sigma), unit sum."""
    if sigma <= 0:
        raise ParameterError("sigma must be positive")
    radius = int(np.ceil(4.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with edge-repeating reflect borders."""
    k = gaussian_kernel(sigma)
    img = np.asarray(img, dtype=np.float64)
    out = ndimage.convolve1d(img, k, axis=0, mode="reflect")
    return ndimage.convolve1d(out, k, axis=1, mode="reflect")


def disk(radius: int) -> np.ndarray:
    """Discrete disk structuring element {(dy,dx): dy^2+dx^2 <= r^2}."""
    if radius < 1:
        raise ParameterError("structuring element radius must be >= 1")
    y, x = np.ogrid[-radius:radius + 1, -radius:radius + 1]
    return (x * x + y * y) <= radius * radius


def erode(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary erosion by a disk; pixels outside the image are background."""
    return ndimage.binary_erosion(mask, structure=disk(radius), border_value=0)


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation by a disk; pixels outside the image are background."""
    return ndimage.binary_dilation(mask, structure=disk(radius), border_value=0)


def connected_components(mask: np.ndarray) -> np.ndarray:
    """Label 4-connected foreground components 1..K (0 = background)."""
    labels, _ = ndimage.label(mask, structure=FOUR_CONNECTED)
    return labels


def remove_small_regions(mask: np.ndarray, min_area: int) -> np.ndarray:
    """Drop 4-connected foreground components with area < min_area."""
    if min_area < 0:
        raise ParameterError("min_area must be >= 0")
    if min_area <= 1:
        return np.array(mask, dtype=bool)
    labels = connected_components(mask)
    if labels.max() == 0:
        return np.zeros_like(mask, dtype=bool)
    areas = np.bincount(labels.ravel())
    keep = areas >= min_area
    keep[0] = False
    return keep[labels]


def remove_small_holes(mask: np.ndarray, max_hole_area: int) -> np.ndarray:
    """Fill enclosed background components with area <= max_hole_area.

    A hole is a 4-connected background component that does not touch the
    image border.
    """
    if max_hole_area < 0:
        raise ParameterError("max_hole_area must be >= 0")
    mask = np.asarray(mask, dtype=bool)
    labels = connected_components(~mask)
    if labels.max() == 0:
        return mask.copy()
    areas = np.bincount(labels.ravel())
    border = np.zeros(labels.max() + 1, dtype=bool)
    border[labels[0, :]] = True
    border[labels[-1, :]] = True
    border[labels[:, 0]] = True
    border[labels[:, -1]] = True
    fill = (areas <= max_hole_area) & ~border
    fill[0] = False
    return mask | fill[labels]


def region_props(labels: np.ndarray, pixel_pitch: float = 1.0) -> list[RegionProps]:
    """Per-region area, centroid, bounding box, and equivalent radius."""
    n = int(labels.max())
    if n == 0:
        return []
    rows, cols = np.nonzero(labels)
    lab = labels[rows, cols]
    areas = np.bincount(lab, minlength=n + 1)
    rsum = np.bincount(lab, weights=rows, minlength=n + 1)
    csum = np.bincount(lab, weights=cols, minlength=n + 1)
    props = []
    for k in range(1, n + 1):
        sel = lab == k
        r, c = rows[sel], cols[sel]
        area = int(areas[k])
        props.append(RegionProps(
            label=k,
            area=area,
            centroid=(rsum[k] / area, csum[k] / area),
            bounding_box=(int(r.min()), int(c.min()), int(r.max()) + 1, int(c.max()) + 1),
            equivalent_radius=pixel_pitch * float(np.sqrt(area / np.pi)),
        ))
    return props
