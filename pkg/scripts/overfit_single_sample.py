#!/usr/bin/env python3
"""Single-sample overfit sanity check: fit the network to one rendered fringe
set and log the loss curve. A healthy implementation drives the loss several
orders of magnitude below its starting value within 2000 steps.

Example:
    python scripts/overfit_single_sample.py --steps 2000
"""

import argparse
import json
import time

import numpy as np
import torch

from phaseforge.fringe import RenderParams, render_set
from phaseforge.network import FptNet, build_network, stack_loss, variant_c
from phaseforge.surface import SurfaceGenConfig, generate_surface


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--multiplier", type=float, default=0.25)
    parser.add_argument("--learning-rate", type=float, default=3e-3)
    parser.add_argument("--frequency", type=float, default=8.0)
    parser.add_argument("--phase-steps", type=int, default=4)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--log-every", type=int, default=100)
    args = parser.parse_args()

    torch.set_num_threads(1)
    params = RenderParams(phase_constant=1.0 / args.frequency,
                          carrier_enabled=True)
    config = SurfaceGenConfig(seed=args.seed, size=(64, 64),
                              depth_range=(0.0, 6.28))
    surface = generate_surface(config, np.random.default_rng(args.seed))
    target_set = render_set(surface.depth, args.frequency, args.phase_steps,
                            params)
    x = torch.tensor(target_set.images[0].intensity,
                     dtype=torch.float32)[None, None]
    y = torch.tensor(np.stack([im.intensity for im in target_set.images]),
                     dtype=torch.float32)[None]

    variant = variant_c(args.frequency, args.phase_steps)
    spec = build_network(variant, args.phase_steps,
                         width_multiplier=args.multiplier, normalize=False)
    torch.manual_seed(0)
    model = FptNet(spec)
    optimizer = torch.optim.Adam(model.parameters(), lr=args.learning_rate)

    start = time.monotonic()
    initial = None
    for step in range(args.steps):
        optimizer.zero_grad()
        loss = stack_loss(model(x), y)
        loss.backward()
        optimizer.step()
        if initial is None:
            initial = loss.item()
        if (step + 1) % args.log_every == 0:
            print(json.dumps({"step": step + 1, "loss": loss.item(),
                              "elapsed_s": round(time.monotonic() - start, 1)}))
    final = loss.item()
    print(json.dumps({"initial_loss": initial, "final_loss": final,
                      "ratio": final / initial}))


if __name__ == "__main__":
    main()
