"""File-format bridge to the segmentation package: 16-bit grayscale PNG images
(value/65535) and 8-bit 0/255 truth masks, named <id>_p<k>.png / _truth.png.

Only the on-disk formats are shared; no code is imported from the other
package.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torch.utils.data import Dataset

MAXVAL = 65535


def load_image(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("I;16", "I", "L"):
            raise ValueError(f"{path}: expected single-channel image, got {im.mode}")
        return np.asarray(im, dtype=np.float32) / MAXVAL


def load_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode != "L":
            raise ValueError(f"{path}: expected 8-bit mask, got {im.mode}")
        return (np.asarray(im) >= 128).astype(np.float32)


def save_probability_map(path, prob: np.ndarray) -> None:
    q = np.rint(np.clip(prob, 0.0, 1.0) * MAXVAL).astype(np.uint16)
    Image.fromarray(q).save(path, format="PNG")


def list_pairs(directory, require_truth: bool = True) -> list[tuple[Path, Path | None]]:
    directory = Path(directory)
    pairs = []
    for img in sorted(directory.glob("*_p*.png")):
        if img.stem.endswith(("_mask", "_truth", "_pores", "_residual")):
            continue
        truth = directory / f"{img.stem}_truth.png"
        if truth.exists():
            pairs.append((img, truth))
        elif require_truth:
            raise ValueError(f"missing truth mask for {img}")
        else:
            pairs.append((img, None))
    if not pairs:
        raise ValueError(f"no cutouts found in {directory}")
    return pairs


class CutoutDataset(Dataset):
    """Image/truth tensors with optional deterministic flip augmentation.

    Flips are derived from (seed, epoch, index) so a fixed seed reproduces the
    exact augmentation sequence.
    """

    def __init__(self, directory, augment: bool = False, seed: int = 0):
        self.pairs = list_pairs(directory, require_truth=True)
        self.augment = augment
        self.seed = seed
        self.epoch = 0

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, idx: int):
        img_path, truth_path = self.pairs[idx]
        img = load_image(img_path)
        truth = load_mask(truth_path)
        if img.shape != truth.shape:
            raise ValueError(f"{img_path}: image {img.shape} vs truth {truth.shape}")
        if self.augment:
            rng = np.random.default_rng((self.seed, self.epoch, idx))
            if rng.random() < 0.5:
                img, truth = img[:, ::-1], truth[:, ::-1]
            if rng.random() < 0.5:
                img, truth = img[::-1, :], truth[::-1, :]
        return (torch.from_numpy(np.ascontiguousarray(img))[None],
                torch.from_numpy(np.ascontiguousarray(truth))[None])
