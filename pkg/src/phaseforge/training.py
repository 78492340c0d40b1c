"""Training for the fringe transformation network: adaptive-moment gradient
descent on the mean-squared fringe error, with a monitor-only validation split
and JSONL logging. Single-threaded runs are bit-deterministic given the seed."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .dataset import DatasetManifest, RESTRICTED, load_fringe_stack
from .network import FptNet, NetworkSpec, Variant, VARIANT_U1, stack_loss


class TrainingDiverged(RuntimeError):
    """Raised when the loss goes non-finite."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 4
    epochs: int = 100
    seed: int = 0
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    normalization_enabled: bool = True
    checkpoint_every: int = 0       # epochs; 0 disables intermediate checkpoints

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


def _split_tensors(root, manifest: DatasetManifest, variant: Variant, split: str):
    """(inputs, targets) tensors for one split: the first image of each input
    frequency stacked as channels, and the full output stacks concatenated."""
    available = set(manifest.frequencies)
    for f in variant.input_frequencies:
        if f not in available:
            raise ValueError(f"dataset lacks input frequency {f:g}")
    for f, _ in variant.output_plan:
        if f not in available:
            raise ValueError(f"dataset lacks output frequency {f:g}")
    inputs, targets = [], []
    for sid in manifest.splits[split]["surfaces"]:
        chans = [load_fringe_stack(root, split, sid, f, manifest)[0]
                 for f in variant.input_frequencies]
        inputs.append(np.stack(chans))
        stacks = [load_fringe_stack(root, split, sid, f, manifest)[:n]
                  for f, n in variant.output_plan]
        targets.append(np.concatenate(stacks))
    return (torch.from_numpy(np.stack(inputs).astype(np.float32)),
            torch.from_numpy(np.stack(targets).astype(np.float32)))


def check_compatibility(manifest: DatasetManifest, variant: Variant) -> None:
    if variant.kind == VARIANT_U1 and manifest.regime != RESTRICTED:
        raise ValueError("single-input unwrapping variant requires a "
                         "restricted-depth dataset")
    missing = [f for f in variant.input_frequencies if f not in manifest.frequencies]
    if missing:
        raise ValueError(f"dataset lacks input frequencies {missing}")


def train(spec: NetworkSpec, dataset_root, manifest: DatasetManifest,
          variant: Variant, config: TrainConfig, log_path=None):
    """Fit the network; returns (model, log) with one log entry per epoch."""
    check_compatibility(manifest, variant)
    torch.manual_seed(config.seed)
    model = FptNet(spec)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate,
                                 betas=config.betas, eps=config.eps)
    train_x, train_y = _split_tensors(dataset_root, manifest, variant, "train")
    has_val = manifest.splits.get("validation", {}).get("count", 0) > 0
    if has_val:
        val_x, val_y = _split_tensors(dataset_root, manifest, variant, "validation")

    shuffle_rng = torch.Generator().manual_seed(config.seed)
    n = train_x.shape[0]
    log = []
    log_file = open(log_path, "w") if log_path else None
    start = time.monotonic()
    try:
        for epoch in range(config.epochs):
            model.train()
            perm = torch.randperm(n, generator=shuffle_rng)
            total = 0.0
            for lo in range(0, n, config.batch_size):
                idx = perm[lo:lo + config.batch_size]
                optimizer.zero_grad()
                loss = stack_loss(model(train_x[idx]), train_y[idx])
                if not torch.isfinite(loss):
                    raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
                loss.backward()
                optimizer.step()
                total += loss.item() * len(idx)
            train_loss = total / n

            val_loss = None
            if has_val:
                model.eval()
                with torch.no_grad():
                    val_loss = stack_loss(model(val_x), val_y).item()

            entry = {"epoch": epoch, "train_loss": train_loss,
                     "val_loss": val_loss,
                     "wall_time_s": time.monotonic() - start}
            log.append(entry)
            if log_file:
                log_file.write(json.dumps(entry) + "\n")
                log_file.flush()
    finally:
        if log_file:
            log_file.close()
    return model, log
