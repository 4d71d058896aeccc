"""`poregrad` command line interface."""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import imageio, plots
from .attenuation import fit_attenuation, ideal_particle, subtract
from .distfield import binned_percentile_profile, distance_transform
from .errors import DataError, ParameterError, PoregradError
from .metrics import ConfusionCounts, bench, confusion, report
from .pipeline import PipelineConfig, run_pipeline, scene_seed, _scene_cfg_dict
from .preprocess import ParticleCutout, make_cutouts, normalize, particle_masks
from .segment import (AttAdjustParams, att_adjusted_threshold,
                      calibrate_residual_threshold, gridsearch_local, local_threshold)
from .synthgen import project_scene


def _cmd_synth(args) -> int:
    cfg = cfgmod.scene_config(cfgmod.parse_kv(args.config) if args.config else {})
    if args.seed is not None:
        cfg.rng_seed = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        scene_cfg = replace(cfg, rng_seed=scene_seed(cfg.rng_seed, k))
        scene = project_scene(scene_cfg)
        peak = scene.radiograph.intensities.max()
        imageio.save_radiograph(out / f"scene_{k}.png", scene.radiograph.intensities / peak)
        imageio.save_mask(out / f"scene_{k}_particles.png", scene.particle_mask)
        imageio.save_mask(out / f"scene_{k}_pores.png", scene.pore_mask)
        (out / f"scene_{k}.json").write_text(json.dumps(
            {"config": _scene_cfg_dict(scene_cfg), **scene.geometry_dict()},
            indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.count} scene(s) to {out}")
    return 0


def _cmd_cutout(args) -> int:
    img = normalize(imageio.load_radiograph(args.infile, pixel_pitch=args.pitch))
    mask = particle_masks(img)
    truth = imageio.load_mask(args.truth) if args.truth else None
    cuts, skipped = make_cutouts(img, mask, pore_truth=truth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    index = {}
    for k, c in enumerate(cuts):
        name = f"{img.id}_p{k}"
        imageio.save_radiograph(out / f"{name}.png", c.image)
        imageio.save_mask(out / f"{name}_mask.png", c.particle_mask)
        if c.pore_truth is not None:
            imageio.save_mask(out / f"{name}_truth.png", c.pore_truth)
        index[name] = {"source_bbox": list(c.source_bbox), "scale": c.scale,
                       "pixel_pitch": c.pixel_pitch}
    (out / f"{img.id}_cutouts.json").write_text(
        json.dumps({"cutouts": index, "skipped_components": skipped},
                   indent=2, sort_keys=True) + "\n")
    print(f"{len(cuts)} cutout(s), {len(skipped)} skipped (border)")
    return 0


def _cmd_fit(args) -> int:
    img = imageio.load_radiograph(args.infile)
    mask = imageio.load_mask(args.mask)
    field = distance_transform(mask)
    profile = binned_percentile_profile(field, img.intensities, mask)
    fit = fit_attenuation(profile)
    Path(args.out).write_text(json.dumps(asdict(fit), indent=2, sort_keys=True) + "\n")
    if args.dump_profile:
        with open(args.dump_profile, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["bin_mid", "value", "count"])
            for m, v, n in zip(profile.midpoints, profile.bin_values, profile.counts):
                w.writerow([m, v, n])
    if args.dump_ideal or args.dump_residual:
        ideal = ideal_particle(fit, field, mask, img.intensities)
        if args.dump_ideal:
            imageio.save_radiograph(args.dump_ideal, ideal)
        if args.dump_residual:
            res = subtract(img.intensities, ideal, mask, fit).residual
            lo, hi = res.min(), res.max()
            scale = hi - lo if hi > lo else 1.0
            imageio.save_radiograph(args.dump_residual, (res - lo) / scale)
            side = json.loads(Path(args.out).read_text())
            side["residual_offset"] = float(lo)
            side["residual_scale"] = float(scale)
            Path(args.out).write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    return 0


def _load_cutout_dir(path, need_truth: bool = False) -> list[ParticleCutout]:
    path = Path(path)
    index = {}
    for idx_file in sorted(path.glob("*cutouts.json")):
        payload = json.loads(idx_file.read_text())
        index.update(payload.get("cutouts", payload))
    cuts = []
    for img_file in sorted(path.glob("*_p*.png")):
        name = img_file.stem
        if name.endswith(("_mask", "_truth", "_pores")):
            continue
        mask_file = path / f"{name}_mask.png"
        if not mask_file.exists():
            raise DataError(f"missing particle mask for cutout {name}")
        truth_file = path / f"{name}_truth.png"
        if need_truth and not truth_file.exists():
            raise DataError(f"cutout {name} has no pore truth mask")
        meta = index.get(name, {})
        cuts.append(ParticleCutout(
            image=imageio.load_radiograph(img_file).intensities,
            particle_mask=imageio.load_mask(mask_file),
            source_id=name,
            source_bbox=tuple(meta.get("source_bbox", (0, 0, 0, 0))),
            scale=float(meta.get("scale", 1.0)),
            pixel_pitch=float(meta.get("pixel_pitch", 1.0)),
            pore_truth=imageio.load_mask(truth_file) if truth_file.exists() else None))
    if not cuts:
        raise DataError(f"no cutouts found in {path}")
    return cuts


def _segmenter(model: str, params_file):
    kv = cfgmod.parse_kv(params_file) if params_file else {}
    if model == "local":
        params = cfgmod.local_params(kv)
        return lambda c: local_threshold(c, params)
    if model == "attadj":
        params = cfgmod.attadj_params(kv)
        return lambda c: att_adjusted_threshold(c, params)
    raise ParameterError(f"unknown model {model!r}")


def _cmd_segment(args) -> int:
    run = _segmenter(args.model, args.params)
    cuts = _load_cutout_dir(args.indir)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for c in cuts:
        t0 = time.perf_counter()
        res = run(c)
        wall = time.perf_counter() - t0
        imageio.save_mask(out / f"{c.source_id}_pores.png", res.pore_mask)
        (out / f"{c.source_id}_result.json").write_text(json.dumps({
            "model": res.model,
            "iterations_run": res.iterations_run,
            "fit": None if res.fit is None else asdict(res.fit),
            "regions": [asdict(r) for r in res.pore_regions],
            "warning": res.warning,
            "wall_time": wall,
        }, indent=2, sort_keys=True) + "\n")
    print(f"segmented {len(cuts)} cutout(s) with model {args.model}")
    return 0


def _cmd_gridsearch(args) -> int:
    cuts = _load_cutout_dir(args.indir, need_truth=True)
    gs = gridsearch_local(cuts, _floats(args.sigmas), _floats(args.offsets))
    Path(args.out).write_text(json.dumps({
        "sigma": gs.best.sigma, "t_offset": gs.best.t_offset,
        "sigma_grid": gs.sigma_grid.tolist(), "offset_grid": gs.offset_grid.tolist(),
        "f1_surface": gs.f1.tolist(), "degenerate": gs.degenerate.tolist(),
    }, indent=2, sort_keys=True) + "\n")
    print(f"best: sigma={gs.best.sigma} t_offset={gs.best.t_offset} "
          f"F1={gs.f1.max():.4f}")
    return 0


def _cmd_calibrate(args) -> int:
    cuts = _load_cutout_dir(args.indir, need_truth=True)
    base = cfgmod.attadj_params({"residual_threshold": "0", **(
        cfgmod.parse_kv(args.params) if args.params else {})})
    thr, scores = calibrate_residual_threshold(cuts, _floats(args.thresholds), base)
    Path(args.out).write_text(json.dumps({
        "residual_threshold": thr,
        "threshold_grid": list(_floats(args.thresholds)),
        "f1": scores.tolist()}, indent=2, sort_keys=True) + "\n")
    print(f"best residual_threshold={thr} F1={scores.max():.4f}")
    return 0


def _cmd_eval(args) -> int:
    pred_dir, truth_dir = Path(args.pred), Path(args.truth)
    total = ConfusionCounts(0, 0, 0, 0, scope="aggregated")
    n = 0
    for pred_file in sorted(pred_dir.glob("*_pores.png")):
        name = pred_file.stem[:-len("_pores")]
        truth_file = truth_dir / f"{name}_truth.png"
        if not truth_file.exists():
            raise DataError(f"eval requires truth: missing {truth_file}")
        mask_file = truth_dir / f"{name}_mask.png"
        region = imageio.load_mask(mask_file) if mask_file.exists() else None
        c = confusion(imageio.load_mask(pred_file), imageio.load_mask(truth_file), region)
        total = ConfusionCounts(total.tp + c.tp, total.fp + c.fp,
                                total.tn + c.tn, total.fn + c.fn, scope="aggregated")
        n += 1
    if n == 0:
        raise DataError(f"no predictions found in {pred_dir}")
    rep = report(total)
    payload = {"eval_region": "union of particle masks", "n_cutouts": n, **rep.to_dict()}
    if args.report.endswith(".csv"):
        with open(args.report, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["F1", "TNR", "FPR", "FNR", "TPR", "t_mean"])
            w.writerow([rep.f1, rep.tnr, rep.fpr, rep.fnr, rep.tpr, ""])
    else:
        Path(args.report).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"micro-F1 over {n} cutout(s): {rep.f1:.4f}")
    return 0


def _cmd_bench(args) -> int:
    run = _segmenter(args.model, args.params)
    cuts = _load_cutout_dir(args.indir)

    def run_batch(batch):
        return [run(c) for c in batch]

    sizes = sorted(set(int(s) for s in args.sizes.replace(",", " ").split()))
    rows = bench(run_batch, cuts, sizes, repeats=args.repeats)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["model", "n", "wall_seconds", "per_particle"])
        for r in rows:
            w.writerow([args.model, r.n, r.wall_seconds, r.per_particle])
    print(f"bench: {args.model} per-particle at n={rows[-1].n}: "
          f"{rows[-1].per_particle * 1000:.2f} ms")
    return 0


def _cmd_pipeline(args) -> int:
    scene = cfgmod.scene_config(cfgmod.parse_kv(args.config) if args.config else {})
    cfg = PipelineConfig(out_dir=args.out, n_scenes=args.scenes,
                         seed=args.seed if args.seed is not None else 0,
                         scene=scene, jobs=args.jobs)
    manifest = run_pipeline(cfg)
    print(f"pipeline done; manifest at {manifest}")
    return 0


def _cmd_plots(args) -> int:
    written = plots.emit_plots(args.reports, args.out)
    print("\n".join(str(p) for p in written))
    return 0


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.replace(",", " ").split())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="poregrad",
                                description="Pore segmentation in 2D powder radiographs")
    p.add_argument("--seed", type=int, default=None, help="root RNG seed")
    p.add_argument("--jobs", type=int, default=1, help="worker count for batch stages")
    p.add_argument("--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate synthetic scenes")
    s.add_argument("--config", default=None)
    s.add_argument("--out", required=True)
    s.add_argument("--count", type=int, default=1)
    s.set_defaults(func=_cmd_synth)

    s = sub.add_parser("cutout", help="normalize and extract particle cutouts")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--truth", default=None)
    s.add_argument("--pitch", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_cutout)

    s = sub.add_parser("fit", help="fit the attenuation model to one cutout")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--mask", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--dump-profile", default=None)
    s.add_argument("--dump-ideal", default=None)
    s.add_argument("--dump-residual", default=None)
    s.set_defaults(func=_cmd_fit)

    s = sub.add_parser("segment", help="segment pores in a cutout directory")
    s.add_argument("--model", choices=["local", "attadj"], required=True)
    s.add_argument("--params", default=None)
    s.add_argument("--in", dest="indir", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_segment)

    s = sub.add_parser("gridsearch", help="local-threshold hyperparameter search")
    s.add_argument("--in", dest="indir", required=True)
    s.add_argument("--sigmas", required=True)
    s.add_argument("--offsets", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_gridsearch)

    s = sub.add_parser("calibrate", help="residual-threshold calibration")
    s.add_argument("--in", dest="indir", required=True)
    s.add_argument("--thresholds", required=True)
    s.add_argument("--params", default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_calibrate)

    s = sub.add_parser("eval", help="confusion metrics of predictions vs truth")
    s.add_argument("--pred", required=True)
    s.add_argument("--truth", required=True)
    s.add_argument("--report", required=True)
    s.set_defaults(func=_cmd_eval)

    s = sub.add_parser("bench", help="batch throughput timing")
    s.add_argument("--model", choices=["local", "attadj"], required=True)
    s.add_argument("--params", default=None)
    s.add_argument("--in", dest="indir", required=True)
    s.add_argument("--sizes", default="1,8,64")
    s.add_argument("--repeats", type=int, default=5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_bench)

    s = sub.add_parser("pipeline", help="full synth->eval experiment")
    s.add_argument("--out", required=True)
    s.add_argument("--scenes", type=int, default=20)
    s.add_argument("--config", default=None)
    s.set_defaults(func=_cmd_pipeline)

    s = sub.add_parser("plots", help="render report files to CSV + charts")
    s.add_argument("--reports", nargs="+", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_plots)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PoregradError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # internal error
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
