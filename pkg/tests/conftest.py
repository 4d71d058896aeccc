import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from poregrad.pipeline import cutouts_from_scene, scene_seed
from poregrad.synthgen import SceneConfig, project_scene

# Frozen scene profile used for calibrated segmentation tests: one particle
# per 256^2 scene, pores large enough to bias the initial attenuation fit.
TEST_SCENE = SceneConfig(
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


def make_test_cutouts(n_scenes: int, root_seed: int, scene_cfg: SceneConfig = TEST_SCENE):
    cutouts = []
    for k in range(n_scenes):
        scene = project_scene(replace(scene_cfg, rng_seed=scene_seed(root_seed, k)))
        cutouts += cutouts_from_scene(scene)
    return cutouts


@pytest.fixture(scope="session")
def small_cutout_set():
    """20 calibration-grade cutouts with pore truth."""
    return make_test_cutouts(20, root_seed=55)
