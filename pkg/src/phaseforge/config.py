"""One-file run configuration: every knob of a pipeline run, JSON round-trip
with unknown keys rejected."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import formats
from .dataset import RESTRICTED, UNRESTRICTED
from .fringe import DEFAULT_MODULATION_THRESHOLD, RenderParams
from .network import VARIANT_C, VARIANT_U1, VARIANT_U2
from .surface import SurfaceGenConfig
from .training import TrainConfig

DEFAULT_SPLIT_COUNTS = {"train": 30, "validation": 5, "test": 5}


def _take(payload: dict, context: str, **fields):
    unknown = set(payload) - set(fields)
    if unknown:
        raise ValueError(f"unknown keys in {context}: {sorted(unknown)}")
    return {k: payload.get(k, default) for k, default in fields.items()}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    regime: str = RESTRICTED
    frequencies: tuple = (8.0,)
    ladder: tuple = (1.0, 2.0, 4.0, 8.0)
    phase_steps: int = 4
    variant: str = VARIANT_C
    width_multiplier: float = 0.25
    normalize: bool = True
    modulation_threshold: float = DEFAULT_MODULATION_THRESHOLD
    noise_sigma: float = 0.0
    quantize: bool = True
    dataset_path: str = "dataset"
    input_frequencies: tuple | None = None
    split_counts: dict = None
    render: RenderParams = None
    surface: SurfaceGenConfig = None
    train: TrainConfig = None

    def __post_init__(self):
        if self.regime not in (RESTRICTED, UNRESTRICTED):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.variant not in (VARIANT_C, VARIANT_U1, VARIANT_U2):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.split_counts is None:
            object.__setattr__(self, "split_counts", dict(DEFAULT_SPLIT_COUNTS))
        if self.render is None:
            object.__setattr__(self, "render", RenderParams())
        if self.surface is None:
            object.__setattr__(self, "surface", SurfaceGenConfig(seed=self.seed))
        if self.train is None:
            object.__setattr__(self, "train", TrainConfig(seed=self.seed))

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "regime": self.regime,
            "frequencies": list(self.frequencies),
            "ladder": list(self.ladder),
            "phase_steps": self.phase_steps,
            "variant": self.variant,
            "width_multiplier": self.width_multiplier,
            "normalize": self.normalize,
            "modulation_threshold": self.modulation_threshold,
            "noise_sigma": self.noise_sigma,
            "quantize": self.quantize,
            "dataset_path": self.dataset_path,
            "input_frequencies": (list(self.input_frequencies)
                                  if self.input_frequencies is not None else None),
            "split_counts": dict(self.split_counts),
            "render": {
                "background": self.render.background,
                "modulation": self.render.modulation,
                "phase_constant": self.render.phase_constant,
                "carrier_enabled": self.render.carrier_enabled,
            },
            "surface": {
                "size": list(self.surface.size),
                "amplitude_range": list(self.surface.amplitude_range),
                "sigma_range": list(self.surface.sigma_range),
                "depth_range": list(self.surface.depth_range),
            },
            "train": {
                "learning_rate": self.train.learning_rate,
                "batch_size": self.train.batch_size,
                "epochs": self.train.epochs,
                "betas": list(self.train.betas),
                "eps": self.train.eps,
                "normalization_enabled": self.train.normalization_enabled,
                "checkpoint_every": self.train.checkpoint_every,
            },
        }

    @classmethod
    def from_json(cls, payload: dict) -> "RunConfig":
        top = _take(
            payload, "run config",
            seed=0, regime=RESTRICTED, frequencies=[8.0], ladder=[1.0, 2.0, 4.0, 8.0],
            phase_steps=4, variant=VARIANT_C, width_multiplier=0.25, normalize=True,
            modulation_threshold=DEFAULT_MODULATION_THRESHOLD, noise_sigma=0.0,
            quantize=True, dataset_path="dataset", input_frequencies=None,
            split_counts=dict(DEFAULT_SPLIT_COUNTS),
            render={}, surface={}, train={},
        )
        seed = top["seed"]
        render = _take(top["render"], "render", background=0.5, modulation=0.5,
                       phase_constant=1.0, carrier_enabled=False)
        surface = _take(top["surface"], "surface", size=[64, 64],
                        amplitude_range=[5.0, 55.0], sigma_range=[2.0, 125.0],
                        depth_range=[0.0, 6.28])
        train = _take(top["train"], "train", learning_rate=1e-3, batch_size=4,
                      epochs=100, betas=[0.9, 0.999], eps=1e-8,
                      normalization_enabled=True, checkpoint_every=0)
        return cls(
            seed=seed,
            regime=top["regime"],
            frequencies=tuple(float(f) for f in top["frequencies"]),
            ladder=tuple(float(f) for f in top["ladder"]),
            phase_steps=int(top["phase_steps"]),
            variant=top["variant"],
            width_multiplier=float(top["width_multiplier"]),
            normalize=bool(top["normalize"]),
            modulation_threshold=float(top["modulation_threshold"]),
            noise_sigma=float(top["noise_sigma"]),
            quantize=bool(top["quantize"]),
            dataset_path=top["dataset_path"],
            input_frequencies=(tuple(float(f) for f in top["input_frequencies"])
                               if top["input_frequencies"] is not None else None),
            split_counts={k: int(v) for k, v in top["split_counts"].items()},
            render=RenderParams(**render),
            surface=SurfaceGenConfig(
                seed=seed,
                size=tuple(surface["size"]),
                amplitude_range=tuple(surface["amplitude_range"]),
                sigma_range=tuple(surface["sigma_range"]),
                depth_range=tuple(surface["depth_range"]),
            ),
            train=TrainConfig(seed=seed, betas=tuple(train.pop("betas")), **train),
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_json(formats.read_json(path))

    def save(self, path) -> None:
        formats.write_json(path, self.to_json())
