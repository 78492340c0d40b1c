"""Classical fringe mathematics: rendering, demodulation, temporal unwrapping.

All phase math runs in float64. Intensities are kept normalized to [0, 1];
8-bit quantization only happens at the file I/O boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

#: Default modulation threshold below which a pixel is masked invalid
#: (5 gray levels at 8-bit scale).
DEFAULT_MODULATION_THRESHOLD = 5.0 / 255.0

#: Sentinel stored at masked-out pixels of a PhaseMap.
PHASE_SENTINEL = np.nan


def wrap(phase):
    """Wrap phase into (-pi, pi], choosing +pi at the branch cut."""
    w = np.arctan2(np.sin(phase), np.cos(phase))
    return np.where(w == -np.pi, np.pi, w)


def int_round(x):
    """Round to nearest integer, halves away from zero."""
    x = np.asarray(x, dtype=np.float64)
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


@dataclass(frozen=True)
class FringeImage:
    """One fringe pattern, intensity normalized to [0, 1]."""

    intensity: np.ndarray  # (height, width) float64

    def __post_init__(self):
        arr = np.asarray(self.intensity, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"intensity must be a 2-D grid, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("intensity contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError(
                f"intensity out of [0, 1]: min={arr.min()}, max={arr.max()}"
            )
        object.__setattr__(self, "intensity", arr)

    @property
    def height(self) -> int:
        return self.intensity.shape[0]

    @property
    def width(self) -> int:
        return self.intensity.shape[1]


@dataclass(frozen=True)
class FringeSet:
    """N phase-shifted fringe images at one frequency, offsets 2*pi*n/N."""

    frequency: float
    images: tuple
    offsets: np.ndarray

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        images = tuple(self.images)
        n = len(images)
        if n < 3:
            raise ValueError(f"need at least 3 phase steps, got {n}")
        offsets = np.asarray(self.offsets, dtype=np.float64)
        if offsets.shape != (n,):
            raise ValueError("offsets length must equal number of images")
        expected = TWO_PI * np.arange(n) / n
        if np.abs(offsets - expected).max() > 1e-12:
            raise ValueError("offsets must be 2*pi*n/N")
        shape = images[0].intensity.shape
        for img in images:
            if img.intensity.shape != shape:
                raise ValueError("all images in a set must share dimensions")
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "offsets", offsets)

    @property
    def phase_steps(self) -> int:
        return len(self.images)

    @property
    def shape(self):
        return self.images[0].intensity.shape

    def stack(self) -> np.ndarray:
        """Intensities as an (N, height, width) array."""
        return np.stack([img.intensity for img in self.images])


@dataclass(frozen=True)
class RenderParams:
    """Fringe rendering constants: intensity a + b*cos(z*f*c + carrier + delta)."""

    background: float = 0.5
    modulation: float = 0.5
    phase_constant: float = 1.0
    carrier_enabled: bool = False

    def __post_init__(self):
        if self.background - self.modulation < 0 or self.background + self.modulation > 1:
            raise ValueError(
                "background +/- modulation must stay within [0, 1]: "
                f"a={self.background}, b={self.modulation}"
            )
        if self.phase_constant <= 0:
            raise ValueError("phase_constant must be positive")


@dataclass(frozen=True)
class PhaseMap:
    """Wrapped phase in (-pi, pi] with a validity mask."""

    phase: np.ndarray       # (height, width) float64, NaN where invalid
    valid_mask: np.ndarray  # (height, width) bool
    frequency: float

    def __post_init__(self):
        phase = np.asarray(self.phase, dtype=np.float64)
        mask = np.asarray(self.valid_mask, dtype=bool)
        if phase.shape != mask.shape:
            raise ValueError("phase and valid_mask shapes differ")
        valid = phase[mask]
        if valid.size and (valid.min() <= -np.pi or valid.max() > np.pi):
            raise ValueError("valid phase values must lie in (-pi, pi]")
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "valid_mask", mask)

    @property
    def height(self) -> int:
        return self.phase.shape[0]

    @property
    def width(self) -> int:
        return self.phase.shape[1]


@dataclass(frozen=True)
class AbsolutePhaseMap:
    """Unwrapped phase with its integer fringe-order map."""

    phase: np.ndarray       # (height, width) float64
    order: np.ndarray       # (height, width) int64
    valid_mask: np.ndarray  # (height, width) bool
    frequency: float

    def __post_init__(self):
        phase = np.asarray(self.phase, dtype=np.float64)
        order = np.asarray(self.order, dtype=np.int64)
        mask = np.asarray(self.valid_mask, dtype=bool)
        if not (phase.shape == order.shape == mask.shape):
            raise ValueError("phase/order/valid_mask shapes differ")
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "valid_mask", mask)

    @property
    def height(self) -> int:
        return self.phase.shape[0]

    @property
    def width(self) -> int:
        return self.phase.shape[1]

    def wrapped(self) -> np.ndarray:
        return self.phase - TWO_PI * self.order


@dataclass(frozen=True)
class FrequencyLadder:
    """Strictly increasing fringe frequencies, base frequency 1."""

    frequencies: tuple

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.frequencies)
        if not freqs:
            raise ValueError("ladder must not be empty")
        if freqs[0] != 1.0:
            raise ValueError("ladder must start at frequency 1")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValueError("frequencies must be strictly increasing")
        if freqs[0] <= 0:
            raise ValueError("frequencies must be positive")
        object.__setattr__(self, "frequencies", freqs)

    @classmethod
    def doubling(cls, count: int) -> "FrequencyLadder":
        """The classical ladder f_i = 2**(i-1)."""
        return cls(tuple(float(2 ** i) for i in range(count)))

    @property
    def count(self) -> int:
        return len(self.frequencies)


@dataclass(frozen=True)
class SystemGeometry:
    """Projector/camera geometry of a physical measurement setup (mm)."""

    camera_to_reference: float   # l
    projector_to_camera: float   # d
    projected_width: float       # c_1
    measurement_range: float     # L

    def __post_init__(self):
        for name in ("camera_to_reference", "projector_to_camera",
                     "projected_width", "measurement_range"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


def carrier_phase(width: int, frequency: float) -> np.ndarray:
    """Linear carrier ramp 2*pi*f*x/width across a row, shape (width,)."""
    x = np.arange(width, dtype=np.float64)
    return TWO_PI * frequency * x / width


def analytic_phase(depth: np.ndarray, frequency: float, params: RenderParams) -> np.ndarray:
    """The true (unwrapped) phase of a rendered fringe: z*f*c + carrier."""
    depth = np.asarray(depth, dtype=np.float64)
    phase = depth * frequency * params.phase_constant
    if params.carrier_enabled:
        phase = phase + carrier_phase(depth.shape[1], frequency)[None, :]
    return phase


def render_fringe(depth: np.ndarray, frequency: float, offset: float,
                  params: RenderParams) -> FringeImage:
    """Render one fringe: a + b*cos(z*f*c + carrier + delta)."""
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim != 2:
        raise ValueError("depth field must be 2-D")
    phase = analytic_phase(depth, frequency, params)
    intensity = params.background + params.modulation * np.cos(phase + offset)
    # tolerate float rounding just past the range; anything larger is a bug
    if intensity.min() < -1e-12 or intensity.max() > 1 + 1e-12:
        raise ValueError("rendered intensity escaped [0, 1] by more than 1e-12")
    return FringeImage(np.clip(intensity, 0.0, 1.0))


def render_set(depth: np.ndarray, frequency: float, phase_steps: int,
               params: RenderParams) -> FringeSet:
    """Render N phase-shifted fringes with offsets 2*pi*n/N."""
    if phase_steps < 3:
        raise ValueError("least-squares demodulation needs at least 3 phase steps")
    offsets = TWO_PI * np.arange(phase_steps) / phase_steps
    images = tuple(render_fringe(depth, frequency, d, params) for d in offsets)
    return FringeSet(frequency=frequency, images=images, offsets=offsets)


def wrapped_phase(fringe_set: FringeSet,
                  modulation_threshold: float = DEFAULT_MODULATION_THRESHOLD) -> PhaseMap:
    """Least-squares demodulation: atan2(-sum I sin d, sum I cos d)."""
    stack = fringe_set.stack()
    sin_d = np.sin(fringe_set.offsets)[:, None, None]
    cos_d = np.cos(fringe_set.offsets)[:, None, None]
    s = (stack * sin_d).sum(axis=0)
    c = (stack * cos_d).sum(axis=0)
    n = fringe_set.phase_steps
    modulation = (2.0 / n) * np.hypot(s, c)
    valid = modulation >= modulation_threshold
    phase = np.arctan2(-s, c)
    phase = np.where(phase == -np.pi, np.pi, phase)
    phase = np.where(valid, phase, PHASE_SENTINEL)
    return PhaseMap(phase=phase, valid_mask=valid, frequency=fringe_set.frequency)


def absolute_from_wrapped(wrapped_map: PhaseMap) -> AbsolutePhaseMap:
    """Base case of the ladder: absolute phase equals wrapped phase, order 0."""
    return AbsolutePhaseMap(
        phase=wrapped_map.phase.copy(),
        order=np.zeros(wrapped_map.phase.shape, dtype=np.int64),
        valid_mask=wrapped_map.valid_mask.copy(),
        frequency=wrapped_map.frequency,
    )


def unwrap_step(previous: AbsolutePhaseMap, wrapped_map: PhaseMap) -> AbsolutePhaseMap:
    """One rung of temporal unwrapping, generalized to any frequency ratio.

    With r = f_cur/f_prev: K = INT((r*Phi_prev - phi)/2pi), Phi = 2pi*K + phi.
    r = 2 reproduces the classical doubling recurrence exactly.
    """
    if wrapped_map.frequency <= previous.frequency:
        raise ValueError("frequencies must be strictly increasing between steps")
    if previous.phase.shape != wrapped_map.phase.shape:
        raise ValueError("phase map dimensions differ")
    ratio = wrapped_map.frequency / previous.frequency
    valid = previous.valid_mask & wrapped_map.valid_mask
    predicted = ratio * previous.phase
    with np.errstate(invalid="ignore"):
        order = int_round((predicted - wrapped_map.phase) / TWO_PI)
    order = np.where(valid, order, 0)
    phase = np.where(valid, TWO_PI * order + wrapped_map.phase, PHASE_SENTINEL)
    return AbsolutePhaseMap(phase=phase, order=order, valid_mask=valid,
                            frequency=wrapped_map.frequency)


def unwrap_ladder(wrapped_maps) -> list:
    """Chain-unwrap a list of wrapped maps ordered low to high frequency."""
    wrapped_maps = list(wrapped_maps)
    FrequencyLadder(tuple(m.frequency for m in wrapped_maps))
    result = [absolute_from_wrapped(wrapped_maps[0])]
    for wrapped_map in wrapped_maps[1:]:
        result.append(unwrap_step(result[-1], wrapped_map))
    return result


def order_error(delta_prev: float, delta_cur: float):
    """Fringe-order error from phase errors on adjacent doubling-ladder rungs.

    Returns (delta_K, safe): delta_K = (2*dp - dc)/2pi; unwrapping stays
    correct while |delta_K| < 0.5, i.e. |2*dp - dc| < pi.
    """
    delta_k = (2.0 * delta_prev - delta_cur) / TWO_PI
    safe = abs(2.0 * delta_prev - delta_cur) < np.pi
    return delta_k, bool(safe)


def restricted_depth(geometry: SystemGeometry, highest_frequency: float) -> float:
    """Physical depth span within which the highest frequency stays unambiguous."""
    if highest_frequency <= 0:
        raise ValueError("highest frequency must be positive")
    return (geometry.camera_to_reference * geometry.projected_width
            / (highest_frequency * geometry.projector_to_camera))


def restricted_depth_sim(params: RenderParams, highest_frequency: float) -> float:
    """Simulation-model depth span giving one full fringe period: 2pi/(f*c)."""
    if highest_frequency <= 0:
        raise ValueError("highest frequency must be positive")
    return TWO_PI / (highest_frequency * params.phase_constant)


def height_from_phase(abs_phase: AbsolutePhaseMap, params: RenderParams) -> np.ndarray:
    """Invert the rendering phase model: z = (Phi - carrier)/(f*c)."""
    fc = abs_phase.frequency * params.phase_constant
    if fc == 0:
        raise ValueError("frequency * phase_constant must be nonzero")
    phase = abs_phase.phase
    if params.carrier_enabled:
        phase = phase - carrier_phase(abs_phase.width, abs_phase.frequency)[None, :]
    return phase / fc
