"""Synthetic ground-truth surfaces: seeded uniform noise smoothed by a
separable Gaussian filter, then rescaled into a target depth range."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .fringe import FringeImage, RenderParams, render_set

GAUSSIAN_TRUNCATE = 3.0


@dataclass(frozen=True)
class Surface:
    """Per-pixel depth field z(x, y) in simulation depth units."""

    depth: np.ndarray          # (height, width) float64
    depth_range: tuple         # (min, max) it was scaled into

    def __post_init__(self):
        depth = np.asarray(self.depth, dtype=np.float64)
        if depth.ndim != 2:
            raise ValueError("depth must be 2-D")
        if not np.isfinite(depth).all():
            raise ValueError("depth contains non-finite values")
        lo, hi = self.depth_range
        if depth.min() < lo - 1e-9 or depth.max() > hi + 1e-9:
            raise ValueError("depth escapes its declared range")
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "depth_range", (float(lo), float(hi)))

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


@dataclass(frozen=True)
class SurfaceGenConfig:
    """Knobs for random smooth-surface generation."""

    seed: int
    size: tuple = (64, 64)                 # (width, height)
    amplitude_range: tuple = (5.0, 55.0)
    sigma_range: tuple = (2.0, 125.0)
    depth_range: tuple = (0.0, 6.28)

    def __post_init__(self):
        w, h = self.size
        if w < 1 or h < 1:
            raise ValueError("surface size must be at least 1x1")
        if self.amplitude_range[0] <= 0 or self.sigma_range[0] <= 0:
            raise ValueError("amplitude and sigma ranges must be positive")
        lo, hi = self.depth_range
        if lo >= hi:
            raise ValueError("depth_range min must be below max")


def generate_surface(config: SurfaceGenConfig, rng: np.random.Generator | None = None) -> Surface:
    """Random uniform grid, Gaussian-smoothed, rescaled into depth_range.

    Deterministic given the config seed (or a caller-supplied generator).
    """
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
    w, h = config.size
    amplitude = rng.uniform(*config.amplitude_range)
    sigma = rng.uniform(*config.sigma_range)
    # cap sigma so the truncated kernel half-width never exceeds the image
    sigma = min(sigma, max(w, h) / GAUSSIAN_TRUNCATE)
    raw = rng.uniform(0.0, amplitude, size=(h, w))
    smooth = gaussian_filter(raw, sigma=sigma, mode="reflect", truncate=GAUSSIAN_TRUNCATE)
    lo, hi = config.depth_range
    span = smooth.max() - smooth.min()
    if span == 0.0:
        depth = np.full((h, w), lo)
    else:
        depth = lo + (smooth - smooth.min()) * (hi - lo) / span
    return Surface(depth=depth, depth_range=config.depth_range)


def render_scene(surface: Surface, frequencies, phase_steps: int,
                 params: RenderParams) -> list:
    """One FringeSet per frequency for a single surface."""
    frequencies = list(frequencies)
    if not frequencies:
        raise ValueError("need at least one frequency")
    return [render_set(surface.depth, f, phase_steps, params) for f in frequencies]


def add_noise(image: FringeImage, gaussian_sigma: float, seed: int) -> FringeImage:
    """Additive zero-mean Gaussian intensity noise, clamped to [0, 1]."""
    if gaussian_sigma < 0:
        raise ValueError("noise sigma must be nonnegative")
    if gaussian_sigma == 0:
        return image
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    noisy = image.intensity + rng.normal(0.0, gaussian_sigma, size=image.intensity.shape)
    return FringeImage(np.clip(noisy, 0.0, 1.0))
