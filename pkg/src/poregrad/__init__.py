"""Pore-defect segmentation in 2D radiographs of metal powder particles."""

__version__ = "0.1.0"

from .attenuation import AttenuationFit, fit_attenuation, ideal_particle, subtract
from .distfield import BinnedProfile, binned_percentile_profile, distance_transform
from .errors import DataError, ParameterError, PoregradError
from .metrics import ConfusionCounts, bench, confusion, f1_score, report, roc
from .preprocess import ParticleCutout, make_cutouts, normalize, particle_masks, split_dataset
from .raster import Radiograph, RegionProps, connected_components, dilate, erode, gaussian_blur
from .segment import (AttAdjustParams, LocalThresholdParams, SegmentationResult,
                      att_adjusted_threshold, local_threshold)
from .synthgen import GroundTruthScene, SceneConfig, project_scene
