"""Synthetic powder radiographs with pixel-exact pore ground truth.

Spherical particles containing spherical pores are projected with a
parallel-beam Beer-Lambert model; the result is optionally warped by a
smooth elastic deformation and degraded with Poisson noise.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import ndimage

from .errors import GenerationError, ParameterError
from .raster import Radiograph, gaussian_blur

# Retries for rejection-sampled particle placement.
MAX_PLACEMENT_RETRIES = 10_000
# Clearance between projected particle outlines and to the detector margin, px.
PLACEMENT_GAP_PX = 2.0
MARGIN_PX = 10.0


@dataclass
class PoreSpec:
    """One spherical pore: 3D center offset from the particle center, radius (um)."""

    offset: tuple[float, float, float]
    radius: float


@dataclass
class ParticleSpec:
    """One spherical particle: projected center (x, y) in um, radius in um."""

    center: tuple[float, float]
    radius: float
    pores: list[PoreSpec] = field(default_factory=list)


@dataclass
class SceneConfig:
    rng_seed: int = 0
    detector: tuple[int, int] = (256, 256)  # (width, height) px
    pixel_pitch: float = 1.0  # um / px
    particle_count: int = 1
    particle_diameter_range: tuple[float, float] = (100.0, 150.0)  # um
    # (mu, sigma_shape, theta) of the pore-diameter log-normal, um.
    pore_lognormal: tuple[float, float, float] = (3.70, 0.41, 0.50)
    pores_per_particle_range: tuple[int, int] = (1, 4)
    attenuation_coefficient: float = 0.008  # 1 / um
    incident_intensity: float = 1.0
    noise: float = 20_000.0  # photon count at I0; 0 disables noise
    elastic: tuple[float, float] = (2.0, 8.0)  # (alpha px, sigma_elastic px)

    def validate(self) -> None:
        w, h = self.detector
        lo, hi = self.particle_diameter_range
        mu, sigma_shape, theta = self.pore_lognormal
        pmin, pmax = self.pores_per_particle_range
        if w <= 0 or h <= 0 or self.pixel_pitch <= 0:
            raise ParameterError("detector and pixel_pitch must be positive")
        if not (0 < lo <= hi):
            raise ParameterError("bad particle_diameter_range")
        if mu <= 0 or sigma_shape <= 0 or theta < 0:
            raise ParameterError("bad pore_lognormal parameters")
        if not (0 <= pmin <= pmax):
            raise ParameterError("bad pores_per_particle_range")
        if self.attenuation_coefficient <= 0 or self.incident_intensity <= 0:
            raise ParameterError("attenuation_coefficient and incident_intensity must be positive")
        if self.noise < 0 or self.particle_count < 0:
            raise ParameterError("noise and particle_count must be >= 0")


@dataclass
class GroundTruthScene:
    radiograph: Radiograph
    particle_mask: np.ndarray
    pore_mask: np.ndarray
    particles: list[ParticleSpec]
    pore_pixel_fraction: float  # pore pixels / particle pixels

    def geometry_dict(self) -> dict:
        return {
            "particles": [asdict(p) for p in self.particles],
            "pore_pixel_fraction": self.pore_pixel_fraction,
        }


def sample_pore_diameter(rng: np.random.Generator,
                         mu: float = 3.70, sigma_shape: float = 0.41,
                         theta: float = 0.50) -> float:
    """Draw a pore diameter (um) from the shifted log-normal x = theta + mu*exp(sigma*Z)."""
    return theta + mu * np.exp(sigma_shape * rng.standard_normal())


def chord_length(R: float, r_offset) -> np.ndarray:
    """Chord length of a ray through a sphere of radius R at lateral offset r_offset."""
    r_offset = np.asarray(r_offset, dtype=np.float64)
    inside = r_offset < R
    return np.where(inside, 2.0 * np.sqrt(np.maximum(R * R - r_offset * r_offset, 0.0)), 0.0)


def project_particles(particles: list[ParticleSpec], detector: tuple[int, int],
                      pixel_pitch: float, attenuation_coefficient: float,
                      incident_intensity: float):
    """Noiseless parallel-beam render of a particle list.

    Pixel (i, j) samples the ray through the physical point
    ((j + 0.5) * pitch, (i + 0.5) * pitch).  Returns (intensities,
    particle_mask, pore_mask).
    """
    w, h = detector
    xs = (np.arange(w) + 0.5) * pixel_pitch
    ys = (np.arange(h) + 0.5) * pixel_pitch
    path = np.zeros((h, w), dtype=np.float64)
    particle_mask = np.zeros((h, w), dtype=bool)
    pore_mask = np.zeros((h, w), dtype=bool)
    for p in particles:
        cx, cy = p.center
        r_off = np.hypot(xs[None, :] - cx, ys[:, None] - cy)
        t = chord_length(p.radius, r_off)
        particle_mask |= t > 0
        pore_chord = np.zeros_like(t)
        for pore in p.pores:
            d = np.hypot(xs[None, :] - (cx + pore.offset[0]),
                         ys[:, None] - (cy + pore.offset[1]))
            pore_chord += chord_length(pore.radius, d)
        pore_mask |= pore_chord > 0
        path += np.maximum(t - pore_chord, 0.0)
    intensities = incident_intensity * np.exp(-attenuation_coefficient * path)
    return intensities, particle_mask, pore_mask


def make_displacement_field(shape: tuple[int, int], alpha: float,
                            sigma_elastic: float, rng: np.random.Generator):
    """Smooth random displacement field (dy, dx), each Uniform(-1,1) blurred and scaled."""
    dy = gaussian_blur(rng.uniform(-1.0, 1.0, size=shape), sigma_elastic) * alpha
    dx = gaussian_blur(rng.uniform(-1.0, 1.0, size=shape), sigma_elastic) * alpha
    return dy, dx


def apply_displacement(arr: np.ndarray, field, *, nearest: bool) -> np.ndarray:
    dy, dx = field
    h, w = arr.shape
    rows, cols = np.meshgrid(np.arange(h, dtype=np.float64),
                             np.arange(w, dtype=np.float64), indexing="ij")
    coords = [rows + dy, cols + dx]
    if nearest:
        out = ndimage.map_coordinates(arr.astype(np.uint8), coords, order=0, mode="reflect")
        return out.astype(bool) if arr.dtype == bool else out.astype(arr.dtype)
    return ndimage.map_coordinates(arr, coords, order=1, mode="reflect")


def elastic_deform(arr: np.ndarray, alpha: float, sigma_elastic: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Elastic warp of one array; masks are resampled nearest, images bilinear."""
    if alpha == 0:
        return arr.copy()
    field = make_displacement_field(arr.shape, alpha, sigma_elastic, rng)
    return apply_displacement(arr, field, nearest=arr.dtype == bool)


def _sample_particles(cfg: SceneConfig, rng: np.random.Generator) -> list[ParticleSpec]:
    w, h = cfg.detector
    pitch = cfg.pixel_pitch
    margin = MARGIN_PX * pitch
    gap = PLACEMENT_GAP_PX * pitch
    mu, sigma_shape, theta = cfg.pore_lognormal
    particles: list[ParticleSpec] = []
    for k in range(cfg.particle_count):
        R = 0.5 * rng.uniform(*cfg.particle_diameter_range)
        lo_x, hi_x = R + margin, w * pitch - R - margin
        lo_y, hi_y = R + margin, h * pitch - R - margin
        if lo_x >= hi_x or lo_y >= hi_y:
            raise GenerationError(f"particle {k}: detector too small for radius {R:.1f} um")
        for attempt in range(MAX_PLACEMENT_RETRIES):
            cx = rng.uniform(lo_x, hi_x)
            cy = rng.uniform(lo_y, hi_y)
            if all(np.hypot(cx - p.center[0], cy - p.center[1]) > R + p.radius + gap
                   for p in particles):
                break
        else:
            raise GenerationError(f"could not place particle {k} after "
                                  f"{MAX_PLACEMENT_RETRIES} retries")
        pores = []
        n_pores = int(rng.integers(cfg.pores_per_particle_range[0],
                                   cfg.pores_per_particle_range[1] + 1))
        for _ in range(n_pores):
            # Re-draw pores too large to fit strictly inside the particle.
            for _ in range(100):
                rho = 0.5 * sample_pore_diameter(rng, mu, sigma_shape, theta)
                if rho < 0.8 * R:
                    break
            else:
                continue
            direction = rng.standard_normal(3)
            direction /= np.linalg.norm(direction)
            dist = (R - rho) * rng.uniform() ** (1.0 / 3.0)
            pores.append(PoreSpec(offset=tuple(direction * dist), radius=rho))
        particles.append(ParticleSpec(center=(cx, cy), radius=R, pores=pores))
    return particles


def project_scene(cfg: SceneConfig) -> GroundTruthScene:
    """Generate one scene; fully determined by cfg (including rng_seed)."""
    cfg.validate()
    rng = np.random.default_rng(cfg.rng_seed)
    particles = _sample_particles(cfg, rng)
    img, particle_mask, pore_mask = project_particles(
        particles, cfg.detector, cfg.pixel_pitch,
        cfg.attenuation_coefficient, cfg.incident_intensity)

    alpha, sigma_elastic = cfg.elastic
    if alpha > 0:
        field = make_displacement_field(img.shape, alpha, sigma_elastic, rng)
        img = apply_displacement(img, field, nearest=False)
        particle_mask = apply_displacement(particle_mask, field, nearest=True)
        pore_mask = apply_displacement(pore_mask, field, nearest=True)

    if cfg.noise > 0:
        expected = cfg.noise * np.maximum(img, 0.0) / cfg.incident_intensity
        img = cfg.incident_intensity * rng.poisson(expected) / cfg.noise

    particle_px = int(particle_mask.sum())
    fraction = float(pore_mask.sum() / particle_px) if particle_px else 0.0
    return GroundTruthScene(
        radiograph=Radiograph(img, pixel_pitch=cfg.pixel_pitch, id=f"scene_{cfg.rng_seed}"),
        particle_mask=particle_mask,
        pore_mask=pore_mask & particle_mask,
        particles=particles,
        pore_pixel_fraction=fraction,
    )
