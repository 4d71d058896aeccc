"""Deterministic pore segmentation: local threshold and attenuation-adjusted
threshold with iterative refinement, plus their validation-set calibration."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .attenuation import AttenuationFit, fit_attenuation, ideal_particle, subtract
from .distfield import binned_percentile_profile, distance_transform
from .errors import ParameterError, ProfileError
from .metrics import ConfusionCounts, confusion, f1_score
from .preprocess import ParticleCutout
from .raster import (RegionProps, connected_components, dilate, erode,
                     gaussian_blur, region_props, remove_small_holes,
                     remove_small_regions)

# Denoise order and sizes are frozen library defaults.
DEFAULT_DENOISE: list[tuple[str, float]] = [
    ("erode", 1), ("dilate", 1), ("remove_small_holes", 16), ("remove_small_regions", 4),
]

_MORPH_OPS = {
    "erode": erode,
    "dilate": dilate,
    "remove_small_regions": remove_small_regions,
    "remove_small_holes": remove_small_holes,
}


def apply_morphology(mask: np.ndarray, sequence) -> np.ndarray:
    """Apply an ordered (operation, parameter) denoising sequence."""
    for name, param in sequence:
        if name not in _MORPH_OPS:
            raise ParameterError(f"unknown morphology operation {name!r}")
        mask = _MORPH_OPS[name](mask, int(param))
    return mask


@dataclass
class LocalThresholdParams:
    sigma: float
    t_offset: float
    denoise: list = dc_field(default_factory=lambda: list(DEFAULT_DENOISE))

    def __post_init__(self):
        if self.sigma <= 0:
            raise ParameterError("sigma must be positive")


@dataclass
class AttAdjustParams:
    residual_threshold: float
    boundary_exclusion_radius: int = 3
    min_area_fraction: float = 0.0
    max_iterations: int = 6
    centroid_prior: bool = False
    denoise: list = dc_field(default_factory=lambda: list(DEFAULT_DENOISE))

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be >= 1")
        if self.boundary_exclusion_radius < 0:
            raise ParameterError("boundary_exclusion_radius must be >= 0")


@dataclass
class SegmentationResult:
    pore_mask: np.ndarray
    pore_regions: list[RegionProps]
    model: str
    iterations_run: int = 0
    fit: AttenuationFit | None = None
    warning: str | None = None


def _regions(mask: np.ndarray, cutout: ParticleCutout) -> list[RegionProps]:
    # equivalent_radius in source-image micrometers: pitch * scale per cutout px.
    return region_props(connected_components(mask), cutout.pixel_pitch * cutout.scale)


def local_threshold(cutout: ParticleCutout, params: LocalThresholdParams) -> SegmentationResult:
    """Adaptive threshold: pixels brighter than their Gaussian-blurred
    neighborhood by more than t_offset, inside the particle, then denoised."""
    img = cutout.image
    raw = (img > gaussian_blur(img, params.sigma) + params.t_offset) & cutout.particle_mask
    mask = apply_morphology(raw, params.denoise) & cutout.particle_mask
    return SegmentationResult(mask, _regions(mask, cutout), model="local")


def _boundary_band(mask: np.ndarray, radius: int) -> np.ndarray:
    boundary = mask & ~erode(mask, 1)
    return dilate(boundary, radius) if radius >= 1 else boundary


def att_adjusted_threshold(cutout: ParticleCutout, params: AttAdjustParams,
                           debug: bool = False,
                           trace: list | None = None) -> SegmentationResult:
    """Iteratively refined attenuation-adjusted thresholding.

    Each pass fits the pore-free model on a profile that excludes the current
    pore candidates, thresholds the residual, removes the boundary band,
    denoises, applies region priors, and repeats until the mask reaches a
    fixed point or max_iterations.
    """
    img = cutout.image
    mask = cutout.particle_mask
    field = distance_transform(mask)
    bbox_area = _particle_bbox_area(mask)
    min_area = params.min_area_fraction * bbox_area

    exclusion = None
    prev: np.ndarray | None = None
    fit = None
    warning = None
    rmse_trace: list[float] = []
    iterations = 0
    for iterations in range(1, params.max_iterations + 1):
        try:
            profile = binned_percentile_profile(field, img, mask, exclude=exclusion)
        except ProfileError:
            warning = "profile empty after exclusion; kept last mask"
            iterations -= 1
            break
        fit = fit_attenuation(profile)
        rmse_trace.append(fit.rmse)
        residual = subtract(img, ideal_particle(fit, field, mask, img), mask, fit).residual
        cand = (residual > params.residual_threshold) & mask
        cand &= ~_boundary_band(mask, params.boundary_exclusion_radius)
        cand = apply_morphology(cand, params.denoise) & mask
        cand = _apply_priors(cand, mask, min_area, params.centroid_prior)
        if trace is not None:
            trace.append(cand)
        if prev is not None and np.array_equal(cand, prev):
            prev = cand
            break
        prev = cand
        exclusion = cand
    if debug and len(rmse_trace) >= 2:
        assert rmse_trace[-1] <= rmse_trace[0] + 1e-12, "fit rmse increased over refinement"
    pore = prev if prev is not None else np.zeros_like(mask)
    return SegmentationResult(pore, _regions(pore, cutout), model="attadj",
                              iterations_run=iterations, fit=fit, warning=warning)


def _particle_bbox_area(mask: np.ndarray) -> float:
    rows, cols = np.nonzero(mask)
    if len(rows) == 0:
        return float(mask.size)
    return float((rows.max() - rows.min() + 1) * (cols.max() - cols.min() + 1))


def _apply_priors(cand: np.ndarray, particle_mask: np.ndarray,
                  min_area: float, centroid_prior: bool) -> np.ndarray:
    labels = connected_components(cand)
    n = int(labels.max())
    if n == 0:
        return cand
    areas = np.bincount(labels.ravel())
    keep = areas.astype(np.float64) >= min_area
    keep[0] = False
    if centroid_prior:
        rows, cols = np.nonzero(particle_mask)
        cr, cc = int(round(rows.mean())), int(round(cols.mean()))
        center_label = labels[cr, cc]
        if center_label > 0:
            only = np.zeros_like(keep)
            only[center_label] = True
            keep &= only
    return keep[labels]


def _micro_f1(pairs) -> tuple[float, bool]:
    """Micro-averaged F1 over (pred, truth, region) triples; returns (f1, degenerate)."""
    total = ConfusionCounts(0, 0, 0, 0)
    for pred, truth, region in pairs:
        c = confusion(pred, truth, region)
        total = ConfusionCounts(total.tp + c.tp, total.fp + c.fp,
                                total.tn + c.tn, total.fn + c.fn)
    degenerate = total.tp + total.fp + total.fn == 0
    return (0.0 if degenerate else f1_score(total)), degenerate


@dataclass
class GridsearchResult:
    sigma_grid: np.ndarray
    offset_grid: np.ndarray
    f1: np.ndarray  # shape (len(sigma_grid), len(offset_grid))
    degenerate: np.ndarray
    best: LocalThresholdParams


def gridsearch_local(validation_set: list[ParticleCutout], sigma_grid, offset_grid,
                     denoise=None) -> GridsearchResult:
    """Exhaustive F1 surface of the local-threshold model over the validation set.

    Ties break toward the smallest sigma, then the smallest offset.
    """
    sigma_grid = np.asarray(sigma_grid, dtype=np.float64)
    offset_grid = np.asarray(offset_grid, dtype=np.float64)
    if sigma_grid.size == 0 or offset_grid.size == 0:
        raise ParameterError("sigma and offset grids must be non-empty")
    denoise = list(DEFAULT_DENOISE) if denoise is None else denoise
    surface = np.zeros((len(sigma_grid), len(offset_grid)))
    degenerate = np.zeros_like(surface, dtype=bool)
    best = (-1.0, 0, 0)
    for i, sigma in enumerate(sigma_grid):
        for j, offset in enumerate(offset_grid):
            params = LocalThresholdParams(sigma=float(sigma), t_offset=float(offset),
                                          denoise=denoise)
            score, deg = _micro_f1(
                (local_threshold(c, params).pore_mask, c.pore_truth, c.particle_mask)
                for c in validation_set)
            surface[i, j] = score
            degenerate[i, j] = deg
            if score > best[0]:
                best = (score, i, j)
    params = LocalThresholdParams(sigma=float(sigma_grid[best[1]]),
                                  t_offset=float(offset_grid[best[2]]), denoise=denoise)
    return GridsearchResult(sigma_grid, offset_grid, surface, degenerate, params)


def calibrate_residual_threshold(validation_set: list[ParticleCutout], threshold_grid,
                                 base_params: AttAdjustParams):
    """Argmax-F1 residual threshold for the full attenuation-adjusted pipeline.

    Ties break toward the largest threshold (fewer false positives).
    Returns (best_threshold, f1_per_threshold).
    """
    threshold_grid = np.asarray(threshold_grid, dtype=np.float64)
    if threshold_grid.size == 0:
        raise ParameterError("threshold grid must be non-empty")
    scores = np.zeros(len(threshold_grid))
    for i, thr in enumerate(threshold_grid):
        params = AttAdjustParams(
            residual_threshold=float(thr),
            boundary_exclusion_radius=base_params.boundary_exclusion_radius,
            min_area_fraction=base_params.min_area_fraction,
            max_iterations=base_params.max_iterations,
            centroid_prior=base_params.centroid_prior,
            denoise=base_params.denoise)
        scores[i], _ = _micro_f1(
            (att_adjusted_threshold(c, params).pore_mask, c.pore_truth, c.particle_mask)
            for c in validation_set)
    best = len(scores) - 1 - int(np.argmax(scores[::-1]))
    return float(threshold_grid[best]), scores
