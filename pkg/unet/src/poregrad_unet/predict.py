"""Inference: per-cutout probability maps written as 16-bit PNG (value/65535).

`predict` consumes raw cutout images; `combined_predict` consumes the
attenuation-residual images dumped by the segmentation package.  Both share
the same geometry contract as the checkpointed model.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .data import list_pairs, load_image, save_probability_map
from .train import load_checkpoint


def _predict_files(model, files, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    with torch.no_grad():
        for img_path in files:
            img = load_image(img_path)
            x = torch.from_numpy(img)[None, None]
            prob = model(x)[0, 0].numpy()
            dst = out_dir / f"{Path(img_path).stem}_prob.png"
            save_probability_map(dst, prob)
            written.append(dst)
    return written


def predict(checkpoint, cutout_dir, out_dir) -> list[Path]:
    model = load_checkpoint(checkpoint)
    files = [img for img, _ in list_pairs(cutout_dir, require_truth=False)]
    return _predict_files(model, files, Path(out_dir))


def combined_predict(checkpoint, residual_dir, out_dir) -> list[Path]:
    model = load_checkpoint(checkpoint)
    residual_dir = Path(residual_dir)
    files = sorted(p for p in residual_dir.glob("*.png")
                   if not p.stem.endswith(("_mask", "_truth", "_pores", "_prob")))
    if not files:
        raise ValueError(f"no residual images found in {residual_dir}")
    return _predict_files(model, files, Path(out_dir))


def predict_array(model, img: np.ndarray) -> np.ndarray:
    """In-memory single-image inference (used by the tests)."""
    with torch.no_grad():
        return model(torch.from_numpy(img.astype(np.float32))[None, None])[0, 0].numpy()
