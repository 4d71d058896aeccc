"""`poregrad-unet` command line interface.

Config files are flat `key = value` lines (same syntax the segmentation
package uses).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .model import UNetSpec
from .predict import combined_predict, predict
from .train import TrainConfig, train


def _parse_kv(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{ln}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _spec(kv: dict[str, str]) -> UNetSpec:
    return UNetSpec(depth=int(kv.get("depth", 4)),
                    base_channels=int(kv.get("base_channels", 16)))


def _train_config(kv: dict[str, str]) -> TrainConfig:
    cfg = TrainConfig()
    if "pretrain_epochs" in kv:
        cfg.pretrain_epochs = int(kv["pretrain_epochs"])
    if "finetune_epochs" in kv:
        cfg.finetune_epochs = int(kv["finetune_epochs"])
    if "lr" in kv:
        cfg.lr = float(kv["lr"])
    if "batch_size" in kv:
        cfg.batch_size = int(kv["batch_size"])
    if "val_fraction" in kv:
        cfg.val_fraction = float(kv["val_fraction"])
    if "patience" in kv:
        cfg.patience = int(kv["patience"])
    if "augment" in kv:
        cfg.augment = kv["augment"].lower() in ("1", "true", "yes")
    if "seed" in kv:
        cfg.seed = int(kv["seed"])
    return cfg


def _cmd_train(args) -> int:
    kv = _parse_kv(args.config) if args.config else {}
    ckpt = train(_spec(kv), _train_config(kv), finetune_dir=args.data,
                 pretrain_dir=args.pretrain, out_dir=args.out)
    print(f"checkpoint written to {ckpt}")
    return 0


def _cmd_predict(args) -> int:
    written = predict(args.checkpoint, args.indir, args.out)
    print(f"wrote {len(written)} probability map(s) to {args.out}")
    return 0


def _cmd_combined(args) -> int:
    written = combined_predict(args.checkpoint, args.indir, args.out)
    print(f"wrote {len(written)} probability map(s) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="poregrad-unet",
                                description="UNet pore-probability models on cutouts")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("train", help="train (optionally pretrain, then fine-tune)")
    s.add_argument("--config", default=None)
    s.add_argument("--data", required=True, help="fine-tuning cutout directory")
    s.add_argument("--pretrain", default=None, help="pretraining cutout directory")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_train)

    s = sub.add_parser("predict", help="probability maps for raw cutouts")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--in", dest="indir", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_predict)

    s = sub.add_parser("combined", help="probability maps for residual images")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--in", dest="indir", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_combined)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
