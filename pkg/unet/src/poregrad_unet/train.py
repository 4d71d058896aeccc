"""Training: optional pretraining on one dataset, fine-tuning on another,
early stopping on validation loss, per-epoch loss history CSV, and a
checkpoint holding the best-validation weights plus a config echo."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader, Subset

from .data import CutoutDataset
from .model import UNet, UNetSpec


@dataclass
class TrainConfig:
    pretrain_epochs: int = 7
    finetune_epochs: int = 25
    lr: float = 1e-4
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.0
    batch_size: int = 2
    val_fraction: float = 0.2
    patience: int = 10  # early-stopping patience, epochs without val improvement
    augment: bool = True
    seed: int = 0

    def validate(self) -> None:
        if self.finetune_epochs < 1 or self.pretrain_epochs < 0:
            raise ValueError("epochs must be >= 1 (finetune) / >= 0 (pretrain)")
        if not (0.0 < self.val_fraction < 1.0):
            raise ValueError("val_fraction must be in (0, 1)")


@dataclass
class EpochRow:
    epoch: int
    phase: str  # "pretrain" | "finetune"
    train_loss: float
    val_loss: float


def _split(dataset: CutoutDataset, val_fraction: float, seed: int):
    n = len(dataset)
    n_val = min(n - 1, int(round(n * val_fraction))) if n > 1 else 0
    perm = np.random.default_rng(seed).permutation(n)
    if n_val == 0:  # tiny datasets validate on the training data
        return Subset(dataset, perm.tolist()), Subset(dataset, perm.tolist())
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    return Subset(dataset, train_idx.tolist()), Subset(dataset, val_idx.tolist())


def _run_epoch(model, loader, optimizer=None) -> float:
    loss_fn = torch.nn.BCEWithLogitsLoss()
    total, count = 0.0, 0
    training = optimizer is not None
    model.train(training)
    with torch.set_grad_enabled(training):
        for img, truth in loader:
            logits = model.logits(img)
            loss = loss_fn(logits, truth)
            if training:
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
            total += loss.item() * img.shape[0]
            count += img.shape[0]
    return total / count


def train(spec: UNetSpec, cfg: TrainConfig, finetune_dir,
          pretrain_dir=None, out_dir="unet_run") -> Path:
    """Train and return the checkpoint path.

    With pretrain_dir set, the first cfg.pretrain_epochs run on that dataset,
    then cfg.finetune_epochs on finetune_dir; early stopping and the retained
    best-validation weights apply to the fine-tuning phase.
    """
    cfg.validate()
    torch.manual_seed(cfg.seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = UNet(spec)
    optimizer = torch.optim.Adamax(model.parameters(), lr=cfg.lr, betas=cfg.betas,
                                   eps=cfg.eps, weight_decay=cfg.weight_decay)
    history: list[EpochRow] = []
    epoch = 0

    phases = []
    if pretrain_dir is not None and cfg.pretrain_epochs > 0:
        phases.append(("pretrain", pretrain_dir, cfg.pretrain_epochs))
    phases.append(("finetune", finetune_dir, cfg.finetune_epochs))

    best_val = np.inf
    best_state = None
    for phase, directory, n_epochs in phases:
        dataset = CutoutDataset(directory, augment=cfg.augment, seed=cfg.seed)
        train_set, val_set = _split(dataset, cfg.val_fraction, cfg.seed)
        train_loader = DataLoader(train_set, batch_size=cfg.batch_size, shuffle=True,
                                  generator=torch.Generator().manual_seed(cfg.seed))
        val_loader = DataLoader(val_set, batch_size=cfg.batch_size)
        stale = 0
        for _ in range(n_epochs):
            epoch += 1
            dataset.set_epoch(epoch)
            train_loss = _run_epoch(model, train_loader, optimizer)
            val_loss = _run_epoch(model, val_loader)
            history.append(EpochRow(epoch, phase, train_loss, val_loss))
            if phase == "finetune":
                if val_loss < best_val - 1e-6:
                    best_val = val_loss
                    best_state = {k: v.detach().clone()
                                  for k, v in model.state_dict().items()}
                    stale = 0
                else:
                    stale += 1
                    if stale > cfg.patience:
                        break

    if best_state is not None:
        model.load_state_dict(best_state)

    with open(out / "loss_history.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["epoch", "phase", "train_loss", "val_loss"])
        for row in history:
            w.writerow([row.epoch, row.phase, row.train_loss, row.val_loss])
    ckpt = out / "checkpoint.pt"
    torch.save({"state_dict": model.state_dict(), "spec": asdict(spec)}, ckpt)
    (out / "checkpoint.json").write_text(json.dumps(
        {"spec": asdict(spec), "train": asdict(cfg), "best_val_loss":
         None if not np.isfinite(best_val) else best_val,
         "epochs_run": epoch}, indent=2, sort_keys=True) + "\n")
    return ckpt


def load_checkpoint(path) -> UNet:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = UNet(UNetSpec(**payload["spec"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
