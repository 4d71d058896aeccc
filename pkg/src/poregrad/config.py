"""Flat key-value config files (one `key = value` per line, # comments)."""
from __future__ import annotations

from pathlib import Path

from .errors import ParameterError
from .segment import AttAdjustParams, LocalThresholdParams, DEFAULT_DENOISE
from .synthgen import SceneConfig


def parse_kv(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{ln}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.replace(",", " ").split())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.replace(",", " ").split())


def scene_config(kv: dict[str, str]) -> SceneConfig:
    cfg = SceneConfig()
    if "rng_seed" in kv:
        cfg.rng_seed = int(kv["rng_seed"])
    if "detector" in kv:
        cfg.detector = _ints(kv["detector"])[:2]
    if "pixel_pitch" in kv:
        cfg.pixel_pitch = float(kv["pixel_pitch"])
    if "particle_count" in kv:
        cfg.particle_count = int(kv["particle_count"])
    if "particle_diameter_range" in kv:
        cfg.particle_diameter_range = _floats(kv["particle_diameter_range"])[:2]
    if "pore_lognormal" in kv:
        cfg.pore_lognormal = _floats(kv["pore_lognormal"])[:3]
    if "pores_per_particle_range" in kv:
        cfg.pores_per_particle_range = _ints(kv["pores_per_particle_range"])[:2]
    if "attenuation_coefficient" in kv:
        cfg.attenuation_coefficient = float(kv["attenuation_coefficient"])
    if "incident_intensity" in kv:
        cfg.incident_intensity = float(kv["incident_intensity"])
    if "noise" in kv:
        cfg.noise = float(kv["noise"])
    if "elastic" in kv:
        cfg.elastic = _floats(kv["elastic"])[:2]
    return cfg


def _denoise(kv: dict[str, str]) -> list:
    # e.g. denoise = erode:1 dilate:1 remove_small_holes:16 remove_small_regions:4
    if "denoise" not in kv:
        return list(DEFAULT_DENOISE)
    seq = []
    for item in kv["denoise"].split():
        name, _, param = item.partition(":")
        seq.append((name, float(param or 1)))
    return seq


def local_params(kv: dict[str, str]) -> LocalThresholdParams:
    try:
        return LocalThresholdParams(sigma=float(kv["sigma"]),
                                    t_offset=float(kv["t_offset"]),
                                    denoise=_denoise(kv))
    except KeyError as exc:
        raise ParameterError(f"local threshold params need key {exc}") from exc


def attadj_params(kv: dict[str, str]) -> AttAdjustParams:
    try:
        return AttAdjustParams(
            residual_threshold=float(kv["residual_threshold"]),
            boundary_exclusion_radius=int(kv.get("boundary_exclusion_radius", 3)),
            min_area_fraction=float(kv.get("min_area_fraction", 0.0)),
            max_iterations=int(kv.get("max_iterations", 6)),
            centroid_prior=kv.get("centroid_prior", "false").lower() in ("1", "true", "yes"),
            denoise=_denoise(kv))
    except KeyError as exc:
        raise ParameterError(f"attenuation-adjusted params need key {exc}") from exc
