"""Command-line front end: dataset generation, training, inference, phase
retrieval, evaluation, and end-to-end runs.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numeric
failure. Errors go to stderr as one JSON object per line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import formats
from .config import RunConfig
from .dataset import DatasetManifest, build_dataset, freq_tag, split_seed
from .fringe import (
    AbsolutePhaseMap,
    FringeImage,
    FringeSet,
    FrequencyLadder,
    PhaseMap,
    TWO_PI,
    height_from_phase,
    unwrap_ladder,
    wrapped_phase,
)
from .metrics import evaluate, report
from .network import (
    FptNet,
    Variant,
    build_network,
    infer,
    load_weights,
    save_weights,
    variant_c,
    variant_u,
    VARIANT_C,
    VARIANT_U1,
    VARIANT_U2,
)
from .pipeline import LearnedTransformer, classical_retrieve, end_to_end_retrieve
from .surface import generate_surface, render_scene
from .training import TrainingDiverged, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _diag(message: str) -> None:
    print(json.dumps({"error": message}), file=sys.stderr)


def _apply_thread_cap() -> None:
    value = os.environ.get("PHASEFORGE_THREADS")
    if value is None:
        return
    import torch
    threads = int(value)
    torch.set_num_threads(max(1, threads))  # 0 means single-threaded deterministic


def build_variant(config: RunConfig) -> Variant:
    if config.variant == VARIANT_C:
        freqs = config.input_frequencies or (max(config.frequencies),)
        return variant_c(freqs[0], config.phase_steps)
    if config.variant == VARIANT_U1:
        freqs = config.input_frequencies or (max(config.ladder),)
        return variant_u(VARIANT_U1, config.ladder, config.phase_steps, freqs)
    freqs = config.input_frequencies
    if not freqs or len(freqs) != 2:
        raise ValueError("variant u2 needs two input_frequencies in the config")
    return variant_u(VARIANT_U2, config.ladder, config.phase_steps, freqs)


def _load_config(args) -> RunConfig:
    config = RunConfig.load(args.config)
    if getattr(args, "seed", None) is not None:
        config = RunConfig.from_json({**config.to_json(), "seed": args.seed})
    return config


def cmd_gen_data(args) -> int:
    config = _load_config(args)
    manifest = build_dataset(
        regime=config.regime,
        split_counts=config.split_counts,
        config=config.surface,
        frequencies=config.frequencies,
        phase_steps=config.phase_steps,
        out_path=args.out,
        params=config.render,
        quantize=config.quantize,
    )
    print(json.dumps({"manifest": str(Path(args.out) / "manifest.json"),
                      "surfaces": {k: v["count"] for k, v in manifest.splits.items()}}))
    return EXIT_OK


def cmd_train(args) -> int:
    config = _load_config(args)
    if args.variant:
        config = RunConfig.from_json({**config.to_json(), "variant": args.variant})
    data_root = args.data or config.dataset_path
    manifest = DatasetManifest.load(data_root)
    variant = build_variant(config)
    spec = build_network(variant, config.phase_steps, config.width_multiplier,
                         normalize=config.train.normalization_enabled)
    log_path = Path(args.out).with_suffix(".log.jsonl")
    model, log = train(spec, data_root, manifest, variant, config.train,
                       log_path=log_path)
    save_weights(args.out, model)
    print(json.dumps({"weights": str(args.out), "log": str(log_path),
                      "final_train_loss": log[-1]["train_loss"] if log else None}))
    return EXIT_OK


def cmd_infer(args) -> int:
    config = _load_config(args)
    if args.variant:
        config = RunConfig.from_json({**config.to_json(), "variant": args.variant})
    variant = build_variant(config)
    spec = build_network(variant, config.phase_steps, config.width_multiplier,
                         normalize=config.train.normalization_enabled)
    model = load_weights(args.weights, spec)
    inputs = [FringeImage(formats.read_pgm(p)) for p in args.input]
    sets = infer(model, variant, inputs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for fringe_set in sets:
        fdir = out / freq_tag(fringe_set.frequency)
        fdir.mkdir(exist_ok=True)
        for n, image in enumerate(fringe_set.images):
            formats.write_pgm(fdir / f"n{n:02d}.pgm", image.intensity)
    print(json.dumps({"stacks": len(sets), "out": str(out)}))
    return EXIT_OK


def _read_set(paths, frequency: float) -> FringeSet:
    images = tuple(FringeImage(formats.read_pgm(p)) for p in paths)
    n = len(images)
    return FringeSet(frequency=frequency, images=images,
                     offsets=TWO_PI * np.arange(n) / n)


def cmd_phase(args) -> int:
    if len(args.images) < 3:
        raise ValueError("demodulation needs at least 3 phase-shifted images")
    fringe_set = _read_set(args.images, args.freq)
    phase_map = wrapped_phase(fringe_set)
    formats.write_f32r(args.out, np.nan_to_num(phase_map.phase, nan=0.0).astype(np.float32))
    formats.write_pgm(str(args.out) + ".mask.pgm", phase_map.valid_mask.astype(np.float64))
    print(json.dumps({"out": str(args.out),
                      "valid_pixels": int(phase_map.valid_mask.sum())}))
    return EXIT_OK


def _parse_ladder(text: str):
    return tuple(float(f) for f in text.split(","))


def cmd_unwrap(args) -> int:
    frequencies = _parse_ladder(args.ladder)
    if len(frequencies) != len(args.phases):
        raise ValueError("ladder length must match the number of phase maps")
    FrequencyLadder(frequencies)
    maps = []
    for f, path in zip(frequencies, args.phases):
        phase = formats.read_f32r(path).astype(np.float64)
        maps.append(PhaseMap(phase=phase, valid_mask=np.isfinite(phase), frequency=f))
    absolute = unwrap_ladder(maps)
    final = absolute[-1]
    formats.write_f32r(args.out, final.phase.astype(np.float32))
    formats.write_f32r(str(args.out) + ".order.f32r", final.order.astype(np.float32))
    print(json.dumps({"out": str(args.out), "frequency": final.frequency}))
    return EXIT_OK


def cmd_height(args) -> int:
    config = _load_config(args)
    phase = formats.read_f32r(args.input[0]).astype(np.float64)
    abs_map = AbsolutePhaseMap(phase=phase,
                               order=np.zeros(phase.shape, dtype=np.int64),
                               valid_mask=np.isfinite(phase),
                               frequency=args.freq)
    height = height_from_phase(abs_map, config.render)
    formats.write_f32r(args.out, height.astype(np.float32))
    print(json.dumps({"out": str(args.out)}))
    return EXIT_OK


def cmd_eval(args) -> int:
    if len(args.input) != 2:
        raise ValueError("eval needs exactly two --input maps (prediction, truth)")
    maps = []
    for path in args.input:
        phase = formats.read_f32r(path).astype(np.float64)
        maps.append(PhaseMap(phase=phase, valid_mask=np.isfinite(phase),
                             frequency=args.freq))
    payload = report([evaluate(maps[0], maps[1])], args.out)
    print(json.dumps(payload["entries"][0]))
    return EXIT_OK


def _test_surfaces(config: RunConfig):
    count = config.split_counts.get("test", 0)
    for i in range(count):
        rng = np.random.Generator(np.random.PCG64(split_seed(config.seed, "test", i)))
        yield generate_surface(config.surface, rng=rng)


def cmd_run_e2e(args) -> int:
    config = _load_config(args)
    ladder = config.ladder
    results = []
    if args.classical:
        for surface in _test_surfaces(config):
            sets = render_scene(surface, ladder, config.phase_steps, config.render)
            retrieval = classical_retrieve(sets, config.render,
                                           config.modulation_threshold)
            valid = retrieval.absolute_phase.valid_mask
            err = np.abs(retrieval.height - surface.depth)[valid]
            results.append({"max_height_error": float(err.max()),
                            "mean_height_error": float(err.mean())})
    else:
        if not args.weights or not args.weights2:
            raise ValueError("learned run-e2e needs --weights (C) and --weights2 (U)")
        f_s = max(ladder)
        var_c = variant_c(f_s, config.phase_steps)
        in_freqs = config.input_frequencies or (f_s,)
        kind = VARIANT_U2 if len(in_freqs) == 2 else VARIANT_U1
        var_u = variant_u(kind, ladder, config.phase_steps, in_freqs)
        spec_c = build_network(var_c, config.phase_steps, config.width_multiplier,
                               normalize=config.train.normalization_enabled)
        spec_u = build_network(var_u, config.phase_steps, config.width_multiplier,
                               normalize=config.train.normalization_enabled)
        net_c = LearnedTransformer(load_weights(args.weights, spec_c), var_c)
        net_u = LearnedTransformer(load_weights(args.weights2, spec_u), var_u)
        for surface in _test_surfaces(config):
            inputs = [render_scene(surface, [f], config.phase_steps,
                                   config.render)[0].images[0] for f in in_freqs]
            retrieval = end_to_end_retrieve(inputs, net_c, net_u, config.render,
                                            config.modulation_threshold)
            valid = retrieval.absolute_phase.valid_mask
            err = np.abs(retrieval.height - surface.depth)[valid]
            results.append({"max_height_error": float(err.max()),
                            "mean_height_error": float(err.mean())})
    payload = {"scenes": results,
               "mean_height_error": float(np.mean([r["mean_height_error"]
                                                   for r in results])) if results else None}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        formats.write_json(Path(args.out) / "e2e_report.json", payload)
    print(json.dumps(payload))
    return EXIT_OK


def cmd_show_config(args) -> int:
    config = _load_config(args)
    print(json.dumps(config.to_json(), indent=2, sort_keys=True))
    return EXIT_OK


def make_parser() -> _Parser:
    parser = _Parser(prog="phaseforge",
                     description="Fringe projection simulation and learned "
                                 "fringe-to-fringe phase retrieval.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--config", required=True, help="run config JSON")
        p.add_argument("--seed", type=int, default=None)
        return p

    p = add("gen-data", cmd_gen_data, help="generate a fringe dataset tree")
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, help="train a transformation network")
    p.add_argument("--out", required=True, help="output weights path (.fptw)")
    p.add_argument("--data", default=None, help="dataset root (default: config)")
    p.add_argument("--variant", choices=[VARIANT_C, VARIANT_U1, VARIANT_U2])

    p = add("infer", cmd_infer, help="transform input fringe(s) into stacks")
    p.add_argument("--weights", required=True)
    p.add_argument("--variant", choices=[VARIANT_C, VARIANT_U1, VARIANT_U2])
    p.add_argument("--input", action="append", required=True,
                   help="input fringe PGM (repeatable, up to 2)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("phase", help="least-squares wrapped phase from a set")
    p.set_defaults(func=cmd_phase)
    p.add_argument("--freq", type=float, required=True)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("images", nargs="+")

    p = sub.add_parser("unwrap", help="temporal unwrapping over a ladder")
    p.set_defaults(func=cmd_unwrap)
    p.add_argument("--ladder", required=True, help="comma-separated frequencies")
    p.add_argument("--out", required=True)
    p.add_argument("phases", nargs="+", help="wrapped phase F32R maps, low to high")

    p = add("height", cmd_height, help="height from an absolute phase map")
    p.add_argument("--freq", type=float, required=True)
    p.add_argument("--input", action="append", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="compare two phase maps")
    p.set_defaults(func=cmd_eval)
    p.add_argument("--freq", type=float, default=1.0)
    p.add_argument("--input", action="append", required=True)
    p.add_argument("--out", required=True)

    p = add("run-e2e", cmd_run_e2e, help="end-to-end retrieval on test surfaces")
    p.add_argument("--classical", action="store_true")
    p.add_argument("--weights", default=None)
    p.add_argument("--weights2", default=None)
    p.add_argument("--out", default=None)

    add("show-config", cmd_show_config, help="print the normalized config")
    return parser


def cli_dispatch(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _diag(f"usage: {exc}")
        return EXIT_USAGE
    try:
        _apply_thread_cap()
        if len(getattr(args, "input", []) or []) > 2:
            raise ValueError("--input may be given at most twice")
        return args.func(args)
    except UsageError as exc:
        _diag(f"usage: {exc}")
        return EXIT_USAGE
    except TrainingDiverged as exc:
        _diag(str(exc))
        return EXIT_NUMERIC
    except (ValueError, FileNotFoundError, KeyError) as exc:
        _diag(str(exc))
        return EXIT_DATA


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
