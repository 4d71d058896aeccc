"""Shared synthetic datasets, exchanged with the model code through the
on-disk cutout formats only (16-bit PNG images, 8-bit truth masks)."""
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from poregrad import imageio
from poregrad.attenuation import fit_attenuation, ideal_particle, subtract
from poregrad.distfield import binned_percentile_profile, distance_transform
from poregrad.pipeline import cutouts_from_scene, scene_seed
from poregrad.synthgen import SceneConfig, project_scene

# Large-pore single-particle scenes; same profile the segmentation test suite
# uses for calibrated checks.
LARGE_PORE_SCENE = SceneConfig(
    detector=(256, 256),
    pixel_pitch=1.0,
    particle_count=1,
    particle_diameter_range=(100.0, 150.0),
    pore_lognormal=(25.0, 0.3, 10.0),
    pores_per_particle_range=(2, 5),
    attenuation_coefficient=0.008,
    incident_intensity=1.0,
    noise=20_000.0,
    elastic=(2.0, 8.0),
)
# A visibly different distribution for the pretraining phase.
SMALL_PORE_SCENE = replace(LARGE_PORE_SCENE,
                           pore_lognormal=(8.0, 0.3, 3.0), noise=5_000.0)


def make_cutouts(n_scenes: int, root_seed: int, scene_cfg: SceneConfig):
    cutouts = []
    for k in range(n_scenes):
        scene = project_scene(replace(scene_cfg, rng_seed=scene_seed(root_seed, k)))
        cutouts += cutouts_from_scene(scene)
    return cutouts


def write_cutout_dir(directory: Path, cutouts) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    for i, c in enumerate(cutouts):
        imageio.save_radiograph(directory / f"c_p{i}.png", c.image)
        imageio.save_mask(directory / f"c_p{i}_truth.png", c.pore_truth)
    return directory


def write_residual_dir(directory: Path, cutouts) -> Path:
    """Attenuation-subtracted residual images, min-max scaled into [0, 1]."""
    directory.mkdir(parents=True, exist_ok=True)
    for i, c in enumerate(cutouts):
        field = distance_transform(c.particle_mask)
        fit = fit_attenuation(binned_percentile_profile(field, c.image, c.particle_mask))
        res = subtract(c.image, ideal_particle(fit, field, c.particle_mask, c.image),
                       c.particle_mask, fit).residual
        lo, hi = res.min(), res.max()
        scale = hi - lo if hi > lo else 1.0
        imageio.save_radiograph(directory / f"c_p{i}.png", (res - lo) / scale)
        imageio.save_mask(directory / f"c_p{i}_truth.png", c.pore_truth)
    return directory


@pytest.fixture(scope="session")
def data_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("unet_data")
    fine = make_cutouts(6, root_seed=500, scene_cfg=LARGE_PORE_SCENE)
    held = make_cutouts(3, root_seed=600, scene_cfg=LARGE_PORE_SCENE)
    write_cutout_dir(root / "pretrain",
                     make_cutouts(6, root_seed=400, scene_cfg=SMALL_PORE_SCENE))
    write_cutout_dir(root / "finetune", fine)
    write_cutout_dir(root / "heldout", held)
    write_residual_dir(root / "finetune_residual", fine)
    write_residual_dir(root / "heldout_residual", held)
    return root
