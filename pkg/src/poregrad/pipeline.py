"""End-to-end experiment pipeline on synthetic data, with a hashed manifest."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path

import numpy as np

from . import imageio
from .errors import DataError, PoregradError
from .metrics import ConfusionCounts, confusion, report
from .preprocess import ParticleCutout, make_cutouts, normalize, particle_masks, split_dataset
from .raster import connected_components, region_props
from .segment import (AttAdjustParams, att_adjusted_threshold,
                      calibrate_residual_threshold, gridsearch_local, local_threshold)
from .synthgen import SceneConfig, project_scene

DEFAULT_FRACTIONS = (0.55, 0.18, 0.27)


@dataclass
class PipelineConfig:
    out_dir: str
    n_scenes: int = 20
    seed: int = 0
    scene: SceneConfig = field(default_factory=SceneConfig)
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS
    sigma_grid: tuple[float, ...] = (2.0, 4.0, 8.0)
    offset_grid: tuple[float, ...] = (0.01, 0.02, 0.04)
    threshold_grid: tuple[float, ...] = (0.01, 0.02, 0.04, 0.08)
    attadj: AttAdjustParams = field(default_factory=lambda: AttAdjustParams(residual_threshold=0.02))
    jobs: int = 1


class StageError(PoregradError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 4)


def scene_seed(root_seed: int, k: int) -> int:
    return int(np.random.SeedSequence(entropy=(root_seed, k)).generate_state(1)[0])


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def hash_file(path: Path, drop_keys: tuple[str, ...] = ("wall_time",)) -> str:
    """sha256 of a file; JSON files are hashed with timing keys removed."""
    if path.suffix == ".json":
        obj = json.loads(path.read_text())
        if isinstance(obj, dict):
            for key in drop_keys:
                obj.pop(key, None)
        data = json.dumps(obj, sort_keys=True).encode()
    else:
        data = path.read_bytes()
    return hashlib.sha256(data).hexdigest()


class _Stage:
    """Marks files written in the active stage; renames them to .partial on failure."""

    def __init__(self, name: str):
        self.name = name
        self.written: list[Path] = []

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None:
            for p in self.written:
                if p.exists():
                    p.rename(p.with_suffix(p.suffix + ".partial"))
            raise StageError(self.name, exc) from exc
        return False

    def track(self, path: Path) -> Path:
        self.written.append(path)
        return path


def generate_scenes(cfg: PipelineConfig, out: Path, stage: _Stage):
    scenes = []
    out.mkdir(parents=True, exist_ok=True)
    for k in range(cfg.n_scenes):
        scene_cfg = replace(cfg.scene, rng_seed=scene_seed(cfg.seed, k))
        scene = project_scene(scene_cfg)
        scene.radiograph.id = f"scene_{k}"
        base = out / f"scene_{k}"
        # Raw intensities can slightly exceed I0 under Poisson noise; store
        # them scaled by the max so the 16-bit file round-trips linearly.
        peak = scene.radiograph.intensities.max()
        imageio.save_radiograph(stage.track(base.with_suffix(".png")),
                                scene.radiograph.intensities / peak)
        imageio.save_mask(stage.track(out / f"scene_{k}_particles.png"), scene.particle_mask)
        imageio.save_mask(stage.track(out / f"scene_{k}_pores.png"), scene.pore_mask)
        _write_json(stage.track(base.with_suffix(".json")),
                    {"config": _scene_cfg_dict(scene_cfg), **scene.geometry_dict()})
        scenes.append(scene)
    return scenes


def _scene_cfg_dict(cfg: SceneConfig) -> dict:
    d = asdict(cfg)
    for key, value in d.items():
        if isinstance(value, tuple):
            d[key] = list(value)
    return d


def cutouts_from_scene(scene) -> list[ParticleCutout]:
    img = normalize(scene.radiograph)
    mask = particle_masks(img)
    cuts, _skipped = make_cutouts(img, mask, pore_truth=scene.pore_mask)
    return cuts


def _save_cutouts(cutouts: list[ParticleCutout], out: Path, stage: _Stage) -> None:
    out.mkdir(parents=True, exist_ok=True)
    index = {}
    for i, c in enumerate(cutouts):
        name = f"{c.source_id}_p{i}"
        imageio.save_radiograph(stage.track(out / f"{name}.png"), c.image)
        imageio.save_mask(stage.track(out / f"{name}_mask.png"), c.particle_mask)
        if c.pore_truth is not None:
            imageio.save_mask(stage.track(out / f"{name}_truth.png"), c.pore_truth)
        index[name] = {"source_bbox": list(c.source_bbox), "scale": c.scale,
                       "pixel_pitch": c.pixel_pitch}
    _write_json(stage.track(out / "cutouts.json"), index)


def _segment_and_eval(cutouts, model_name, segment_fn, out: Path, stage: _Stage):
    out.mkdir(parents=True, exist_ok=True)
    total = ConfusionCounts(0, 0, 0, 0, scope="aggregated")
    radii, truth_radii = [], []
    for i, c in enumerate(cutouts):
        res = segment_fn(c)
        name = f"{c.source_id}_p{i}"
        imageio.save_mask(stage.track(out / f"{name}_pores.png"), res.pore_mask)
        _write_json(stage.track(out / f"{name}_result.json"), {
            "model": res.model,
            "iterations_run": res.iterations_run,
            "fit": None if res.fit is None else asdict(res.fit),
            "regions": [asdict(r) for r in res.pore_regions],
            "warning": res.warning,
        })
        cc = confusion(res.pore_mask, c.pore_truth, c.particle_mask)
        total = ConfusionCounts(total.tp + cc.tp, total.fp + cc.fp,
                                total.tn + cc.tn, total.fn + cc.fn, scope="aggregated")
        radii += [r.equivalent_radius for r in res.pore_regions]
        truth_radii += [r.equivalent_radius for r in region_props(
            connected_components(c.pore_truth), c.pixel_pitch * c.scale)]
    rep = report(total, smallest_detected_pore=min(radii) if radii else None)
    return {"model": model_name,
            "eval_region": "union of particle masks",
            **rep.to_dict(),
            "pore_radii_um": sorted(radii),
            "truth_radii_um": sorted(truth_radii)}


def run_pipeline(cfg: PipelineConfig) -> Path:
    """synth -> cutout -> split -> calibrate -> segment -> eval -> manifest.

    Returns the manifest path; every stage's artifacts carry content hashes in
    the manifest (JSON timing fields excluded from hashing).
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    all_tracked: list[Path] = []

    with _Stage("synth") as stage:
        scenes = generate_scenes(cfg, out / "scenes", stage)
        all_tracked += stage.written

    with _Stage("cutout") as stage:
        per_scene = [cutouts_from_scene(s) for s in scenes]
        cutouts = [c for cs in per_scene for c in cs]
        if not cutouts:
            raise DataError("no usable cutouts were produced")
        _save_cutouts(cutouts, out / "cutouts", stage)
        all_tracked += stage.written

    with _Stage("split") as stage:
        train, val, test = split_dataset(cutouts, cfg.fractions, seed=cfg.seed)
        _write_json(stage.track(out / "split.json"), {
            "fractions": list(cfg.fractions),
            "sizes": {"train": len(train), "val": len(val), "test": len(test)}})
        all_tracked += stage.written

    with _Stage("calibrate") as stage:
        gs = gridsearch_local(val, cfg.sigma_grid, cfg.offset_grid)
        thr, thr_scores = calibrate_residual_threshold(val, cfg.threshold_grid, cfg.attadj)
        _write_json(stage.track(out / "calibration.json"), {
            "local": {"sigma": gs.best.sigma, "t_offset": gs.best.t_offset,
                      "sigma_grid": list(map(float, gs.sigma_grid)),
                      "offset_grid": list(map(float, gs.offset_grid)),
                      "f1_surface": gs.f1.tolist(),
                      "degenerate": gs.degenerate.tolist()},
            "attadj": {"residual_threshold": thr,
                       "threshold_grid": list(map(float, cfg.threshold_grid)),
                       "f1": thr_scores.tolist()}})
        all_tracked += stage.written

    with _Stage("segment") as stage:
        attadj = replace(cfg.attadj, residual_threshold=thr)
        report_local = _segment_and_eval(
            test, "local", lambda c: local_threshold(c, gs.best),
            out / "segmentation" / "local", stage)
        report_attadj = _segment_and_eval(
            test, "attadj", lambda c: att_adjusted_threshold(c, attadj),
            out / "segmentation" / "attadj", stage)
        all_tracked += stage.written

    with _Stage("eval") as stage:
        _write_json(stage.track(out / "report_local.json"), report_local)
        _write_json(stage.track(out / "report_attadj.json"), report_attadj)
        all_tracked += stage.written

    manifest = {
        "seed": cfg.seed,
        "n_scenes": cfg.n_scenes,
        "artifacts": sorted(
            ({"path": str(p.relative_to(out)), "sha256": hash_file(p)} for p in all_tracked),
            key=lambda e: e["path"]),
    }
    manifest_path = out / "manifest.json"
    _write_json(manifest_path, manifest)
    return manifest_path
