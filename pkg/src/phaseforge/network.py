"""Fringe-to-fringe transformation network: an encoder-decoder of downsampler,
factorized-residual (ERF), and upsampler blocks, with variants that emit one
same-frequency phase-shifted stack (C) or the lower-frequency stacks of a
ladder from one input fringe (U-I) or two (U-II)."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn
import torch.nn.functional as F

from . import formats
from .fringe import FringeImage, FringeSet, TWO_PI

BASE_CHANNELS = (16, 64, 128)
SPATIAL_MULTIPLE = 8  # forward contract: pad inputs up to a multiple of 8

VARIANT_C = "c"
VARIANT_U1 = "u1"
VARIANT_U2 = "u2"


# ---------------------------------------------------------------------------
# variants and selection strategy

@dataclass(frozen=True)
class Variant:
    """What the network consumes and emits.

    kind "c" maps one fringe to the N-image stack at the same frequency;
    "u1"/"u2" map one/two fringes to the lower-frequency stacks of a ladder.
    """

    kind: str
    input_frequencies: tuple       # 1 or 2 entries
    output_plan: tuple             # ((frequency, phase_steps), ...)

    def __post_init__(self):
        if self.kind not in (VARIANT_C, VARIANT_U1, VARIANT_U2):
            raise ValueError(f"unknown variant kind {self.kind!r}")
        n_in = len(self.input_frequencies)
        expected = 2 if self.kind == VARIANT_U2 else 1
        if n_in != expected:
            raise ValueError(f"variant {self.kind} takes {expected} input fringe(s)")
        if not self.output_plan:
            raise ValueError("output plan must not be empty")
        if self.kind == VARIANT_C:
            if len(self.output_plan) != 1:
                raise ValueError("variant c outputs exactly one stack")
            if self.output_plan[0][0] != self.input_frequencies[0]:
                raise ValueError("variant c output frequency must match its input")

    @property
    def input_channels(self) -> int:
        return len(self.input_frequencies)

    @property
    def output_channels(self) -> int:
        return sum(n for _, n in self.output_plan)


def variant_c(frequency: float, phase_steps: int) -> Variant:
    return Variant(kind=VARIANT_C, input_frequencies=(float(frequency),),
                   output_plan=((float(frequency), phase_steps),))


def variant_u(kind: str, ladder_frequencies, phase_steps: int,
              input_frequencies) -> Variant:
    """U-I/U-II: outputs the sets below the highest ladder frequency."""
    freqs = [float(f) for f in ladder_frequencies]
    plan = tuple((f, phase_steps) for f in freqs[:-1])
    return Variant(kind=kind, output_plan=plan,
                   input_frequencies=tuple(float(f) for f in input_frequencies))


def select_variant(depth_range, z_th: float) -> str:
    """Single-input U-I suffices while the depth span stays within one fringe
    period of the highest frequency (inclusive); otherwise two inputs."""
    lo, hi = depth_range
    if hi < lo:
        raise ValueError("depth range min must not exceed max")
    return VARIANT_U1 if (hi - lo) <= z_th else VARIANT_U2


@dataclass(frozen=True)
class FrequencyAdvisory:
    safe: bool
    reason: str


def validate_fl_choice(f_s: float, f_l: float) -> FrequencyAdvisory:
    """Advise on a second input frequency: one that divides f_s leaves the
    period ambiguity unresolved in unrestricted depth."""
    if not 0 < f_l < f_s:
        raise ValueError("need 0 < f_l < f_s")
    ratio = f_s / f_l
    if abs(ratio - round(ratio)) < 1e-9:
        return FrequencyAdvisory(
            safe=False,
            reason=f"f_l={f_l:g} divides f_s={f_s:g}; period ambiguity persists "
                   "for unrestricted depth ranges",
        )
    return FrequencyAdvisory(safe=True, reason="frequencies are not harmonically related")


# ---------------------------------------------------------------------------
# layer plan

@dataclass(frozen=True)
class LayerSpec:
    kind: str              # "down" | "erf" | "up" | "output"
    in_channels: int
    out_channels: int
    dilation: int = 1
    stride: int = 1


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layer plan; width_multiplier 1.0 gives the full-width reference layout."""

    layers: tuple
    width_multiplier: float
    normalize: bool

    def __post_init__(self):
        prev = None
        for layer in self.layers:
            if prev is not None and layer.in_channels != prev:
                raise ValueError("layer channel chaining is inconsistent")
            prev = layer.out_channels

    @property
    def input_channels(self) -> int:
        return self.layers[0].in_channels

    @property
    def output_channels(self) -> int:
        return self.layers[-1].out_channels

    def to_json(self) -> dict:
        return {
            "layers": [[l.kind, l.in_channels, l.out_channels, l.dilation, l.stride]
                       for l in self.layers],
            "width_multiplier": self.width_multiplier,
            "normalize": self.normalize,
        }

    def fingerprint(self) -> int:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")


def _scaled(channels: int, multiplier: float) -> int:
    scaled = int(round(channels * multiplier))
    if scaled < 1:
        raise ValueError(f"width multiplier {multiplier} collapses {channels} "
                         "channels to zero")
    return scaled


def build_network(variant: Variant, phase_steps: int,
                  width_multiplier: float = 1.0,
                  normalize: bool = True) -> NetworkSpec:
    """Lay out the encoder-decoder: three downsamples to (16, 64, 128)-wide
    stages with plain and dilated ERF blocks, mirrored upsampling, and a
    linear 1x1 output convolution."""
    if phase_steps < 3:
        raise ValueError("need at least 3 phase steps")
    c16, c64, c128 = (_scaled(c, width_multiplier) for c in BASE_CHANNELS)
    in_ch = variant.input_channels
    out_ch = variant.output_channels

    # the first channel-expanding block keeps full resolution; only the two
    # later downsamplers halve the spatial size
    layers = [LayerSpec("down", in_ch, c16, stride=1)]
    layers.append(LayerSpec("down", c16, c64, stride=2))
    layers += [LayerSpec("erf", c64, c64) for _ in range(5)]
    layers.append(LayerSpec("down", c64, c128, stride=2))
    for _ in range(2):  # the dilated stage runs twice, second time without its downsample
        layers += [LayerSpec("erf", c128, c128, dilation=d) for d in (2, 4, 8, 16)]
    layers.append(LayerSpec("up", c128, c64))
    layers += [LayerSpec("erf", c64, c64) for _ in range(2)]
    layers.append(LayerSpec("up", c64, c16))
    layers += [LayerSpec("erf", c16, c16) for _ in range(2)]
    layers.append(LayerSpec("output", c16, out_ch))
    return NetworkSpec(layers=tuple(layers), width_multiplier=width_multiplier,
                       normalize=normalize)


# ---------------------------------------------------------------------------
# torch modules

class DownsamplerBlock(nn.Module):
    """3x3 conv producing (out - in) channels, concatenated with a pooled (or,
    at stride 1, unchanged) copy of the input."""

    def __init__(self, in_channels, out_channels, normalize, stride=2):
        super().__init__()
        if out_channels <= in_channels:
            raise ValueError("downsampler must grow the channel count")
        self.conv = nn.Conv2d(in_channels, out_channels - in_channels,
                              kernel_size=3, stride=stride, padding=1)
        self.pool = nn.MaxPool2d(2, stride=2) if stride == 2 else nn.Identity()
        self.norm = nn.BatchNorm2d(out_channels) if normalize else None

    def forward(self, x):
        out = torch.cat([self.conv(x), self.pool(x)], dim=1)
        if self.norm is not None:
            out = self.norm(out)
        return F.relu(out)


class ErfBlock(nn.Module):
    """Residual block of factorized 3x1/1x3 convolutions, second pair dilated."""

    def __init__(self, channels, dilation, normalize):
        super().__init__()
        self.conv1a = nn.Conv2d(channels, channels, (3, 1), padding=(1, 0))
        self.conv1b = nn.Conv2d(channels, channels, (1, 3), padding=(0, 1))
        self.conv2a = nn.Conv2d(channels, channels, (3, 1),
                                padding=(dilation, 0), dilation=(dilation, 1))
        self.conv2b = nn.Conv2d(channels, channels, (1, 3),
                                padding=(0, dilation), dilation=(1, dilation))
        self.norm = nn.BatchNorm2d(channels) if normalize else None

    def forward(self, x):
        out = F.relu(self.conv1a(x))
        out = F.relu(self.conv1b(out))
        out = F.relu(self.conv2a(out))
        out = self.conv2b(out)
        if self.norm is not None:
            out = self.norm(out)
        return F.relu(out + x)


class UpsamplerBlock(nn.Module):
    """Stride-2 transposed 3x3 convolution."""

    def __init__(self, in_channels, out_channels, normalize):
        super().__init__()
        self.conv = nn.ConvTranspose2d(in_channels, out_channels, kernel_size=3,
                                       stride=2, padding=1, output_padding=1)
        self.norm = nn.BatchNorm2d(out_channels) if normalize else None

    def forward(self, x):
        out = self.conv(x)
        if self.norm is not None:
            out = self.norm(out)
        return F.relu(out)


class FptNet(nn.Module):
    """The assembled encoder-decoder; input spatial size must be a multiple
    of 8 (use pad_to_multiple / crop_to first otherwise)."""

    def __init__(self, spec: NetworkSpec):
        super().__init__()
        self.spec = spec
        blocks = []
        for layer in spec.layers:
            if layer.kind == "down":
                blocks.append(DownsamplerBlock(layer.in_channels, layer.out_channels,
                                               spec.normalize, stride=layer.stride))
            elif layer.kind == "erf":
                blocks.append(ErfBlock(layer.in_channels, layer.dilation,
                                       spec.normalize))
            elif layer.kind == "up":
                blocks.append(UpsamplerBlock(layer.in_channels, layer.out_channels,
                                             spec.normalize))
            elif layer.kind == "output":
                blocks.append(nn.Conv2d(layer.in_channels, layer.out_channels,
                                        kernel_size=1))
            else:
                raise ValueError(f"unknown layer kind {layer.kind!r}")
        self.blocks = nn.ModuleList(blocks)

    def forward(self, x):
        if x.dim() != 4:
            raise ValueError("expected a (batch, channels, height, width) tensor")
        if x.shape[1] != self.spec.input_channels:
            raise ValueError(f"expected {self.spec.input_channels} input channels, "
                             f"got {x.shape[1]}")
        if x.shape[2] % SPATIAL_MULTIPLE or x.shape[3] % SPATIAL_MULTIPLE:
            raise ValueError(f"spatial size must be a multiple of {SPATIAL_MULTIPLE}; "
                             "pad the input first")
        for block in self.blocks:
            x = block(x)
        return x

    def layer_outputs(self, x):
        """Per-layer activations, for shape conformance checks."""
        outputs = []
        for block in self.blocks:
            x = block(x)
            outputs.append(x)
        return outputs


def pad_to_multiple(x: torch.Tensor, multiple: int = SPATIAL_MULTIPLE):
    """Reflect-pad the bottom/right edges up to the next multiple; returns the
    padded tensor and the original (height, width) for crop_to."""
    h, w = x.shape[-2], x.shape[-1]
    pad_h = (-h) % multiple
    pad_w = (-w) % multiple
    if pad_h or pad_w:
        x = F.pad(x, (0, pad_w, 0, pad_h), mode="reflect")
    return x, (h, w)


def crop_to(x: torch.Tensor, size) -> torch.Tensor:
    h, w = size
    return x[..., :h, :w]


def stack_loss(predicted: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean squared intensity error over pixels, images, stacks, and batch."""
    if predicted.shape != target.shape:
        raise ValueError("prediction and target shapes differ")
    return F.mse_loss(predicted, target)


def infer(model: FptNet, variant: Variant, inputs) -> list:
    """Transform input fringe(s) into the variant's output FringeSets."""
    inputs = list(inputs)
    if len(inputs) != variant.input_channels:
        raise ValueError(f"variant {variant.kind} takes {variant.input_channels} "
                         f"input fringe(s), got {len(inputs)}")
    channels = np.stack([img.intensity for img in inputs]).astype(np.float32)
    x = torch.from_numpy(channels).unsqueeze(0)
    model.eval()
    with torch.no_grad():
        padded, size = pad_to_multiple(x)
        out = crop_to(model(padded), size)
    out = out.clamp(0.0, 1.0).squeeze(0).numpy().astype(np.float64)
    sets = []
    offset = 0
    for frequency, n in variant.output_plan:
        stack = out[offset:offset + n]
        offset += n
        images = tuple(FringeImage(stack[i]) for i in range(n))
        sets.append(FringeSet(frequency=frequency, images=images,
                              offsets=TWO_PI * np.arange(n) / n))
    return sets


# ---------------------------------------------------------------------------
# checkpoints

def save_weights(path, model: FptNet) -> None:
    tensors = {name: param.detach().cpu().numpy()
               for name, param in model.state_dict().items()}
    formats.write_checkpoint(path, model.spec.fingerprint(), tensors)


def load_weights(path, spec: NetworkSpec) -> FptNet:
    fingerprint, tensors = formats.read_checkpoint(path)
    if fingerprint != spec.fingerprint():
        raise ValueError("checkpoint fingerprint does not match the network spec")
    model = FptNet(spec)
    state = {name: torch.from_numpy(arr.copy()) for name, arr in tensors.items()}
    # BatchNorm tracks a long-typed batch counter; stored as float32 on disk
    for name, ref in model.state_dict().items():
        if name in state and state[name].dtype != ref.dtype:
            state[name] = state[name].to(ref.dtype)
    model.load_state_dict(state)
    return model
