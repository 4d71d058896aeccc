import numpy as np
import pytest
from dataclasses import replace

import oracles
from poregrad.errors import GenerationError
from poregrad.synthgen import (ParticleSpec, PoreSpec, SceneConfig, chord_length,
                               elastic_deform, project_particles, project_scene,
                               sample_pore_diameter)


class TestPoreSampling:
    def test_mean_against_monte_carlo(self):
        # Frozen Monte-Carlo oracle value for theta + mu*exp(sigma*Z):
        # 10^6 draws give a sample mean of ~4.525 (= theta + mu*exp(sigma^2/2)).
        rng = np.random.default_rng(0)
        draws = np.array([sample_pore_diameter(rng) for _ in range(10 ** 6)])
        target = 0.50 + 3.70 * np.exp(0.41 ** 2 / 2)
        assert abs(draws.mean() - target) / target < 0.01

    def test_degenerate_sigma_limit(self):
        rng = np.random.default_rng(1)
        draws = [sample_pore_diameter(rng, sigma_shape=1e-9) for _ in range(100)]
        assert np.allclose(draws, 0.50 + 3.70, atol=1e-6)

    def test_support_bound(self):
        rng = np.random.default_rng(2)
        draws = [sample_pore_diameter(rng) for _ in range(10 ** 5)]
        assert min(draws) > 0.50


class TestChordLength:
    def test_central_ray(self):
        assert chord_length(50.0, 0.0) == 100.0

    def test_tangent_ray(self):
        assert chord_length(50.0, 50.0) == 0.0

    def test_three_four_five(self):
        assert chord_length(50.0, 30.0) == pytest.approx(80.0)


class TestProjector:
    def test_zero_particles_constant(self):
        img, pmask, pore = project_particles([], (16, 16), 1.0, 0.01, 2.0)
        assert np.allclose(img, 2.0)
        assert not pmask.any() and not pore.any()

    def test_half_intensity_at_center(self):
        # particle center on a pixel center; mu * 2R = ln 2
        R = 10.0
        mu = np.log(2) / (2 * R)
        img, _, _ = project_particles(
            [ParticleSpec(center=(16.5, 16.5), radius=R)],
            (32, 32), 1.0, mu, 1.0)
        assert abs(img[16, 16] - 0.5) < 1e-9

    def test_centered_pore_analytic(self):
        R, rho = 10.0, 4.0
        mu = 0.02
        img, _, pore = project_particles(
            [ParticleSpec(center=(16.5, 16.5), radius=R,
                          pores=[PoreSpec(offset=(0.0, 0.0, 0.0), radius=rho)])],
            (32, 32), 1.0, mu, 1.0)
        expected = np.exp(-mu * (2 * R - 2 * rho))
        assert abs(img[16, 16] - expected) < 1e-9
        assert pore[16, 16]

    def test_full_image_matches_ray_marching(self):
        particles = [ParticleSpec(center=(9.5, 10.5), radius=6.0,
                                  pores=[PoreSpec(offset=(1.0, -0.5, 2.0), radius=2.0)])]
        img, _, _ = project_particles(particles, (20, 20), 1.0, 0.03, 1.0)
        oracle = oracles.ray_march_intensity(
            [(9.5, 10.5, 0.0, 6.0, [(1.0, -0.5, 2.0, 2.0)])], (20, 20), 1.0, 0.03, 1.0,
            step=0.01)
        assert np.abs(img / oracle - 1).max() < 1e-3

    def test_physical_sanity(self):
        img, _, _ = project_particles(
            [ParticleSpec(center=(16.0, 16.0), radius=12.0)], (32, 32), 1.0, 0.05, 1.0)
        assert img.min() > 0
        assert img.max() <= 1.0


class TestElasticDeform:
    def test_alpha_zero_identity(self):
        rng = np.random.default_rng(0)
        img = rng.random((32, 32))
        assert np.array_equal(elastic_deform(img, 0.0, 8.0, rng), img)

    def test_deterministic(self):
        img = np.random.default_rng(1).random((32, 32))
        a = elastic_deform(img, 2.0, 8.0, np.random.default_rng(5))
        b = elastic_deform(img, 2.0, 8.0, np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_mask_area_change_bounded(self):
        # Calibration run on a radius-100 disk: area change ~1%; frozen at 10%.
        y, x = np.ogrid[:256, :256]
        m = (x - 128) ** 2 + (y - 128) ** 2 <= 100 ** 2
        warped = elastic_deform(m, 1.0, 8.0, np.random.default_rng(3))
        assert abs(warped.sum() - m.sum()) / m.sum() < 0.10


class TestProjectScene:
    def test_determinism(self):
        cfg = SceneConfig(rng_seed=9, particle_count=2, detector=(420, 420))
        a = project_scene(cfg)
        b = project_scene(cfg)
        assert np.array_equal(a.radiograph.intensities, b.radiograph.intensities)
        assert np.array_equal(a.pore_mask, b.pore_mask)

    def test_zero_particle_scene(self):
        cfg = SceneConfig(rng_seed=1, particle_count=0, noise=0, elastic=(0, 8))
        scene = project_scene(cfg)
        assert np.allclose(scene.radiograph.intensities, cfg.incident_intensity)
        assert not scene.particle_mask.any()
        assert not scene.pore_mask.any()

    def test_pore_mask_contained_after_deformation(self):
        for seed in range(5):
            scene = project_scene(SceneConfig(rng_seed=seed, particle_count=1,
                                              pores_per_particle_range=(2, 4)))
            assert not (scene.pore_mask & ~scene.particle_mask).any()

    def test_pore_fraction_reported(self):
        scene = project_scene(SceneConfig(rng_seed=3, particle_count=1,
                                          pore_lognormal=(25.0, 0.3, 10.0),
                                          pores_per_particle_range=(2, 4)))
        assert scene.pore_pixel_fraction > 0

    def test_placement_failure_names_particle(self):
        cfg = SceneConfig(rng_seed=0, detector=(200, 200), particle_count=50)
        with pytest.raises(GenerationError, match=r"particle \d+"):
            project_scene(cfg)

    def test_noiseless_intensities_bounded(self):
        scene = project_scene(SceneConfig(rng_seed=2, particle_count=1,
                                          noise=0, elastic=(0, 8)))
        img = scene.radiograph.intensities
        assert img.min() > 0
        assert img.max() <= 1.0 + 1e-12
