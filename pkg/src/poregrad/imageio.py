"""Image file I/O: 16-bit grayscale PNG / PGM (P5) radiographs, 8-bit mask PNG."""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError
from .raster import Radiograph

MAXVAL = 65535


def save_radiograph(path, img: Radiograph | np.ndarray) -> None:
    """Write intensities in [0, 1] as a 16-bit single-channel PNG or PGM."""
    arr = img.intensities if isinstance(img, Radiograph) else np.asarray(img, dtype=np.float64)
    q = np.rint(np.clip(arr, 0.0, 1.0) * MAXVAL).astype(np.uint16)
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        with open(path, "wb") as f:
            f.write(f"P5\n{q.shape[1]} {q.shape[0]}\n{MAXVAL}\n".encode())
            f.write(q.astype(">u2").tobytes())
    else:
        Image.fromarray(q).save(path, format="PNG")


def load_radiograph(path, pixel_pitch: float = 1.0, id: str = "") -> Radiograph:
    """Load a 16-bit PNG or PGM radiograph, scaled to [0, 1]."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        arr = _read_pgm(path)
    else:
        with Image.open(path) as im:
            if im.mode not in ("I;16", "I", "L"):
                raise DataError(f"{path}: expected single-channel image, got mode {im.mode}")
            arr = np.asarray(im, dtype=np.float64)
    return Radiograph(arr / MAXVAL, pixel_pitch=pixel_pitch, id=id or path.stem)


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    m = re.match(rb"P5\s+(?:#.*\s+)*(\d+)\s+(\d+)\s+(\d+)\s", data)
    if not m:
        raise DataError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = (int(g) for g in m.groups())
    if maxval != MAXVAL:
        raise DataError(f"{path}: expected maxval {MAXVAL}, got {maxval}")
    raw = np.frombuffer(data, dtype=">u2", offset=m.end(), count=width * height)
    return raw.reshape(height, width).astype(np.float64)


def save_mask(path, mask: np.ndarray) -> None:
    """Write a boolean mask as an 8-bit 0/255 PNG."""
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(path, format="PNG")


def load_mask(path) -> np.ndarray:
    """Load an 8-bit 0/255 PNG mask as a boolean grid."""
    with Image.open(path) as im:
        if im.mode != "L":
            raise DataError(f"{path}: expected 8-bit single-channel mask, got mode {im.mode}")
        return np.asarray(im) >= 128
