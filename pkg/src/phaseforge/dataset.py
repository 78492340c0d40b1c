"""Dataset assembly: seeded surface splits rendered to fringe trees on disk.

Tree layout:
    <root>/manifest.json
    <root>/<split>/<surface-id>/surface.f32r
    <root>/<split>/<surface-id>/f<freq>/n<step>.pgm
    <root>/<split>/<surface-id>/f<freq>/phase_gt.f32r
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import formats
from .fringe import RenderParams, analytic_phase, restricted_depth_sim, wrap
from .surface import Surface, SurfaceGenConfig, generate_surface, render_scene

GENERATOR_VERSION = "phaseforge-dataset-1"

RESTRICTED = "RESTRICTED"
UNRESTRICTED = "UNRESTRICTED"

SPLITS = ("train", "validation", "test")

# domain-separation tags for per-split seed streams
_SPLIT_TAGS = {"train": 0x7261, "validation": 0x7661, "test": 0x7465}


@dataclass(frozen=True)
class DatasetManifest:
    """Everything needed to verify and reproduce a dataset tree."""

    regime: str
    splits: dict            # split -> {"count": int, "surfaces": [ids], "files": {rel: sha256}}
    frequencies: tuple
    phase_steps: int
    ground_truth_frequencies: tuple
    seed: int
    generator: str
    surface_config: dict
    render_params: dict
    quantize: bool

    def to_json(self) -> dict:
        return {
            "regime": self.regime,
            "splits": self.splits,
            "frequencies": list(self.frequencies),
            "phase_steps": self.phase_steps,
            "ground_truth_frequencies": list(self.ground_truth_frequencies),
            "seed": self.seed,
            "generator": self.generator,
            "surface_config": self.surface_config,
            "render_params": self.render_params,
            "quantize": self.quantize,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "DatasetManifest":
        return cls(
            regime=payload["regime"],
            splits=payload["splits"],
            frequencies=tuple(payload["frequencies"]),
            phase_steps=payload["phase_steps"],
            ground_truth_frequencies=tuple(payload["ground_truth_frequencies"]),
            seed=payload["seed"],
            generator=payload["generator"],
            surface_config=payload["surface_config"],
            render_params=payload["render_params"],
            quantize=payload["quantize"],
        )

    @classmethod
    def load(cls, root) -> "DatasetManifest":
        return cls.from_json(formats.read_json(Path(root) / "manifest.json"))

    def verify(self, root) -> None:
        """Check that every listed file exists with a matching checksum."""
        root = Path(root)
        for split_info in self.splits.values():
            for rel, digest in split_info["files"].items():
                path = root / rel
                if not path.exists():
                    raise FileNotFoundError(f"manifest lists missing file {rel}")
                actual = formats.sha256_file(path)
                if actual != digest:
                    raise ValueError(f"checksum mismatch for {rel}")


def split_seed(master_seed: int, split: str, index: int) -> np.random.SeedSequence:
    """Domain-separated seed stream: splits never share surfaces."""
    return np.random.SeedSequence(entropy=master_seed,
                                  spawn_key=(_SPLIT_TAGS[split], index))


def freq_tag(frequency: float) -> str:
    return f"f{frequency:g}"


def build_dataset(regime: str, split_counts: dict, config: SurfaceGenConfig,
                  frequencies, phase_steps: int, out_path,
                  params: RenderParams | None = None,
                  ground_truth_frequencies=None,
                  quantize: bool = True) -> DatasetManifest:
    """Generate surfaces, render fringe sets, write the tree and manifest."""
    if regime not in (RESTRICTED, UNRESTRICTED):
        raise ValueError(f"unknown regime {regime!r}")
    params = params or RenderParams()
    frequencies = [float(f) for f in frequencies]
    gt_freqs = ([float(f) for f in ground_truth_frequencies]
                if ground_truth_frequencies is not None else list(frequencies))

    if regime == RESTRICTED:
        z_th = restricted_depth_sim(params, max(frequencies))
        lo, hi = config.depth_range
        if lo < 0 or hi > z_th + 1e-9:
            raise ValueError(
                f"RESTRICTED regime requires depth_range within [0, {z_th:.4g}], "
                f"got {config.depth_range}"
            )

    root = Path(out_path)
    root.mkdir(parents=True, exist_ok=True)
    splits = {}
    for split in SPLITS:
        count = int(split_counts.get(split, 0))
        files = {}
        surface_ids = []
        for i in range(count):
            rng = np.random.Generator(np.random.PCG64(split_seed(config.seed, split, i)))
            surface = generate_surface(config, rng=rng)
            sid = f"s{i:04d}"
            surface_ids.append(sid)
            sdir = root / split / sid
            sdir.mkdir(parents=True, exist_ok=True)

            rel = f"{split}/{sid}/surface.f32r"
            formats.write_f32r(root / rel, surface.depth.astype(np.float32))
            files[rel] = formats.sha256_file(root / rel)

            for fringe_set in render_scene(surface, frequencies, phase_steps, params):
                fdir = sdir / freq_tag(fringe_set.frequency)
                fdir.mkdir(exist_ok=True)
                for n, image in enumerate(fringe_set.images):
                    rel = f"{split}/{sid}/{freq_tag(fringe_set.frequency)}/n{n:02d}.pgm"
                    if quantize:
                        formats.write_pgm(root / rel, image.intensity)
                    else:
                        rel = rel[:-4] + ".f32r"
                        formats.write_f32r(root / rel, image.intensity.astype(np.float32))
                    files[rel] = formats.sha256_file(root / rel)
                gt = wrap(analytic_phase(surface.depth, fringe_set.frequency, params))
                rel = f"{split}/{sid}/{freq_tag(fringe_set.frequency)}/phase_gt.f32r"
                formats.write_f32r(root / rel, gt.astype(np.float32))
                files[rel] = formats.sha256_file(root / rel)
        splits[split] = {"count": count, "surfaces": surface_ids, "files": files}

    manifest = DatasetManifest(
        regime=regime,
        splits=splits,
        frequencies=tuple(frequencies),
        phase_steps=phase_steps,
        ground_truth_frequencies=tuple(gt_freqs),
        seed=config.seed,
        generator=GENERATOR_VERSION,
        surface_config={
            "seed": config.seed,
            "size": list(config.size),
            "amplitude_range": list(config.amplitude_range),
            "sigma_range": list(config.sigma_range),
            "depth_range": list(config.depth_range),
        },
        render_params={
            "background": params.background,
            "modulation": params.modulation,
            "phase_constant": params.phase_constant,
            "carrier_enabled": params.carrier_enabled,
        },
        quantize=quantize,
    )
    formats.write_json(root / "manifest.json", manifest.to_json())
    return manifest


def load_fringe_stack(root, split: str, surface_id: str, frequency: float,
                      manifest: DatasetManifest) -> np.ndarray:
    """Load one (N, H, W) fringe stack from a dataset tree, normalized floats."""
    fdir = Path(root) / split / surface_id / freq_tag(frequency)
    images = []
    for n in range(manifest.phase_steps):
        if manifest.quantize:
            images.append(formats.read_pgm(fdir / f"n{n:02d}.pgm"))
        else:
            images.append(formats.read_f32r(fdir / f"n{n:02d}.f32r").astype(np.float64))
    return np.stack(images)


def load_surface(root, split: str, surface_id: str, manifest: DatasetManifest) -> Surface:
    depth = formats.read_f32r(Path(root) / split / surface_id / "surface.f32r")
    cfg = manifest.surface_config
    lo, hi = cfg["depth_range"]
    # float32 storage can nudge extremes past the declared range; clip back
    depth = np.clip(depth.astype(np.float64), lo, hi)
    return Surface(depth=depth, depth_range=(lo, hi))
