#!/usr/bin/env python3
"""Desk-scale end-to-end experiment: generate a restricted-depth dataset,
train the single-fringe-to-set network, and report held-out wrapped-phase
error of the transformed fringes.

Example:
    python scripts/run_desk_scale.py --out runs/desk --epochs 80
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np
import torch

from phaseforge.dataset import RESTRICTED, build_dataset, load_fringe_stack
from phaseforge.fringe import (
    FringeImage,
    FringeSet,
    RenderParams,
    TWO_PI,
    wrap,
    wrapped_phase,
)
from phaseforge.network import build_network, infer, save_weights, variant_c
from phaseforge.surface import SurfaceGenConfig
from phaseforge.training import TrainConfig, train


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--frequency", type=float, default=8.0)
    parser.add_argument("--phase-steps", type=int, default=4)
    parser.add_argument("--multiplier", type=float, default=0.25)
    parser.add_argument("--epochs", type=int, default=80)
    parser.add_argument("--learning-rate", type=float, default=2e-3)
    parser.add_argument("--train-count", type=int, default=30)
    parser.add_argument("--val-count", type=int, default=5)
    parser.add_argument("--test-count", type=int, default=5)
    args = parser.parse_args()

    torch.set_num_threads(1)
    args.out.mkdir(parents=True, exist_ok=True)

    # the carrier ramp disambiguates the cosine's sign for a single input fringe
    params = RenderParams(phase_constant=1.0 / args.frequency, carrier_enabled=True)
    surface_config = SurfaceGenConfig(seed=args.seed, size=(args.size, args.size),
                                      depth_range=(0.0, 6.28))
    data_root = args.out / "data"
    start = time.monotonic()
    manifest = build_dataset(
        regime=RESTRICTED,
        split_counts={"train": args.train_count, "validation": args.val_count,
                      "test": args.test_count},
        config=surface_config, frequencies=[args.frequency],
        phase_steps=args.phase_steps, out_path=data_root, params=params)
    print(f"dataset written to {data_root} ({time.monotonic() - start:.0f}s)")

    variant = variant_c(args.frequency, args.phase_steps)
    spec = build_network(variant, args.phase_steps,
                         width_multiplier=args.multiplier)
    model, log = train(spec, data_root, manifest, variant,
                       TrainConfig(learning_rate=args.learning_rate,
                                   epochs=args.epochs, seed=0),
                       log_path=args.out / "train_log.jsonl")
    save_weights(args.out / "weights.fptw", model)
    print(f"trained {args.epochs} epochs, final train loss "
          f"{log[-1]['train_loss']:.2e}, val loss {log[-1]['val_loss']:.2e}")

    errors = []
    for sid in manifest.splits["test"]["surfaces"]:
        stack = load_fringe_stack(data_root, "test", sid, args.frequency, manifest)
        predicted = infer(model, variant, [FringeImage(stack[0])])[0]
        truth = FringeSet(frequency=args.frequency,
                          images=tuple(FringeImage(img) for img in stack),
                          offsets=TWO_PI * np.arange(args.phase_steps)
                          / args.phase_steps)
        pred_map, true_map = wrapped_phase(predicted), wrapped_phase(truth)
        valid = pred_map.valid_mask & true_map.valid_mask
        errors.append(float(np.abs(
            wrap(pred_map.phase[valid] - true_map.phase[valid])).mean()))

    summary = {"per_surface_mean_phase_error_rad": errors,
               "mean_phase_error_rad": float(np.mean(errors)),
               "elapsed_s": time.monotonic() - start}
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
