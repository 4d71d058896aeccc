"""Raw radiograph -> normalized per-particle square cutouts (256x256)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DataError, ParameterError
from .raster import (Radiograph, connected_components, dilate, erode,
                     gaussian_blur, remove_small_holes, remove_small_regions)

CUTOUT_SIZE = 256
CUTOUT_PAD_PX = 4  # source-pixel padding around the square bounding box


@dataclass
class ParticleCutout:
    """Square single-particle view resized to 256x256.

    scale is source pixels per cutout pixel; source_bbox is the padded square
    (min_row, min_col, max_row, max_col), max-exclusive, in source coordinates.
    """

    image: np.ndarray
    particle_mask: np.ndarray
    source_id: str
    source_bbox: tuple[int, int, int, int]
    scale: float
    pixel_pitch: float = 1.0  # um per *source* pixel
    pore_truth: np.ndarray | None = None


def normalize(img: Radiograph) -> Radiograph:
    """Standardize to mean 0 / variance 1, then rescale linearly to [0, 1]."""
    a = img.intensities
    std = a.std()
    if std == 0:
        raise DataError(f"radiograph {img.id!r} is constant; cannot normalize")
    z = (a - a.mean()) / std
    z = (z - z.min()) / (z.max() - z.min())
    return Radiograph(z, pixel_pitch=img.pixel_pitch, id=img.id)


def otsu_threshold(img: np.ndarray, nbins: int = 256) -> float:
    """Threshold maximizing inter-class variance of the intensity histogram."""
    hist, edges = np.histogram(img.ravel(), bins=nbins)
    mids = 0.5 * (edges[:-1] + edges[1:])
    w0 = np.cumsum(hist).astype(np.float64)
    w1 = w0[-1] - w0
    s0 = np.cumsum(hist * mids)
    m0 = np.divide(s0, w0, out=np.zeros_like(s0), where=w0 > 0)
    m1 = np.divide(s0[-1] - s0, w1, out=np.zeros_like(s0), where=w1 > 0)
    between = w0 * w1 * (m0 - m1) ** 2
    return float(mids[np.argmax(between[:-1])])


def canny_edges(img: np.ndarray, sigma: float = 1.0,
                low_frac: float = 0.1, high_frac: float = 0.2) -> np.ndarray:
    """Canny edge map: Gaussian smoothing, Sobel gradients, non-maximum
    suppression, and hysteresis with thresholds as fractions of the gradient
    magnitude maximum."""
    sm = gaussian_blur(np.asarray(img, dtype=np.float64), sigma)
    kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
    gx = ndimage.convolve(sm, kx, mode="reflect")
    gy = ndimage.convolve(sm, kx.T, mode="reflect")
    mag = np.hypot(gx, gy)
    if mag.max() == 0:
        return np.zeros_like(mag, dtype=bool)

    # Quantize gradient direction into 4 sectors; suppress non-maxima.
    angle = np.mod(np.arctan2(gy, gx), np.pi)
    sector = ((angle + np.pi / 8) // (np.pi / 4)).astype(int) % 4
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    padded = np.pad(mag, 1, mode="constant")
    keep = np.zeros_like(mag, dtype=bool)
    for s, (dr, dc) in offsets.items():
        n1 = padded[1 + dr:mag.shape[0] + 1 + dr, 1 + dc:mag.shape[1] + 1 + dc]
        n2 = padded[1 - dr:mag.shape[0] + 1 - dr, 1 - dc:mag.shape[1] + 1 - dc]
        keep |= (sector == s) & (mag >= n1) & (mag >= n2)
    nms = np.where(keep, mag, 0.0)

    high = high_frac * mag.max()
    low = low_frac * mag.max()
    strong = nms >= high
    weak = nms >= low
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    strong_labels = np.unique(labels[strong])
    return np.isin(labels, strong_labels[strong_labels > 0])


def fill_holes(mask: np.ndarray) -> np.ndarray:
    return remove_small_holes(mask, mask.size)


def particle_masks(img: Radiograph, canny_sigma: float = 1.0,
                   canny_low: float = 0.1, canny_high: float = 0.2,
                   min_region: int = 64) -> np.ndarray:
    """Segment particle interiors in a normalized radiograph.

    Recipe: Otsu threshold (particles darker than background), union with the
    Canny edge map to close boundary gaps, hole filling, opening of radius 1,
    then removal of speck regions below min_region pixels.
    """
    a = img.intensities
    m = a < otsu_threshold(a)
    m = fill_holes(m)
    m |= canny_edges(a, sigma=canny_sigma, low_frac=canny_low, high_frac=canny_high)
    m = fill_holes(m)
    m = dilate(erode(m, 1), 1)
    return remove_small_regions(m, min_region)


def _resample(arr: np.ndarray, bbox, size: int, *, nearest: bool) -> np.ndarray:
    r0, c0, r1, c1 = bbox
    scale = (r1 - r0) / size
    t = (np.arange(size) + 0.5) * scale - 0.5
    rows = r0 + t
    cols = c0 + t
    coords = np.meshgrid(rows, cols, indexing="ij")
    if nearest:
        out = ndimage.map_coordinates(arr.astype(np.uint8), coords, order=0, mode="grid-constant", cval=0)
        return out.astype(bool)
    return ndimage.map_coordinates(np.asarray(arr, dtype=np.float64), coords,
                                   order=1, mode="nearest")


def make_cutouts(img: Radiograph, mask: np.ndarray,
                 pore_truth: np.ndarray | None = None,
                 size: int = CUTOUT_SIZE):
    """Extract one square, resized cutout per retained mask component.

    Components whose padded square box would leave the image are skipped.
    Returns (cutouts, skipped_labels).
    """
    h, w = img.intensities.shape
    labels = connected_components(mask)
    cutouts: list[ParticleCutout] = []
    skipped: list[int] = []
    for k in range(1, int(labels.max()) + 1):
        rows, cols = np.nonzero(labels == k)
        r0, r1 = rows.min(), rows.max() + 1
        c0, c1 = cols.min(), cols.max() + 1
        side = int(max(r1 - r0, c1 - c0)) + 2 * CUTOUT_PAD_PX
        cr = (r0 + r1) / 2.0
        cc = (c0 + c1) / 2.0
        br0 = int(round(cr - side / 2.0))
        bc0 = int(round(cc - side / 2.0))
        bbox = (br0, bc0, br0 + side, bc0 + side)
        if br0 < 0 or bc0 < 0 or bbox[2] > h or bbox[3] > w:
            skipped.append(k)
            continue
        cut = ParticleCutout(
            image=_resample(img.intensities, bbox, size, nearest=False),
            particle_mask=_resample(labels == k, bbox, size, nearest=True),
            source_id=img.id,
            source_bbox=bbox,
            scale=side / size,
            pixel_pitch=img.pixel_pitch,
            pore_truth=None if pore_truth is None
            else _resample(pore_truth & (labels == k), bbox, size, nearest=True),
        )
        cutouts.append(cut)
    return cutouts, skipped


def map_back(cutout: ParticleCutout, mask: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor mapping of a cutout-space mask into source coordinates."""
    r0, c0, r1, c1 = cutout.source_bbox
    out = np.zeros(shape, dtype=bool)
    rr = np.arange(max(r0, 0), min(r1, shape[0]))
    cc = np.arange(max(c0, 0), min(c1, shape[1]))
    size = mask.shape[0]
    ir = np.clip(np.round((rr - r0 + 0.5) / cutout.scale - 0.5).astype(int), 0, size - 1)
    ic = np.clip(np.round((cc - c0 + 0.5) / cutout.scale - 0.5).astype(int), 0, size - 1)
    out[np.ix_(rr, cc)] = mask[np.ix_(ir, ic)]
    return out


def split_sizes(n: int, fractions) -> list[int]:
    """Largest-remainder apportionment of n items into len(fractions) parts."""
    fractions = list(fractions)
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ParameterError("split fractions must sum to 1")
    quotas = [f * n for f in fractions]
    base = [int(np.floor(q)) for q in quotas]
    remainder = n - sum(base)
    order = sorted(range(len(fractions)), key=lambda i: quotas[i] - base[i], reverse=True)
    for i in order[:remainder]:
        base[i] += 1
    return base


def split_dataset(items, fractions, seed: int):
    """Deterministic by-particle split; returns one list per fraction."""
    items = list(items)
    if len(items) < len(list(fractions)):
        raise ParameterError(f"cannot split {len(items)} particles into "
                             f"{len(list(fractions))} parts")
    sizes = split_sizes(len(items), fractions)
    perm = np.random.default_rng(seed).permutation(len(items))
    parts = []
    start = 0
    for s in sizes:
        parts.append([items[i] for i in perm[start:start + s]])
        start += s
    return tuple(parts)
