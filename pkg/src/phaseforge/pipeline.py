"""End-to-end phase retrieval: the classical multi-set path and the learned
path where transformation networks stand in for the missing fringe sets.

Both paths share the demodulate -> unwrap -> height tail, so substituting
ground-truth pass-through "networks" makes them bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fringe import (
    DEFAULT_MODULATION_THRESHOLD,
    AbsolutePhaseMap,
    FringeSet,
    RenderParams,
    height_from_phase,
    unwrap_ladder,
    wrapped_phase,
)
from .network import FptNet, Variant, infer


class FringeTransformer:
    """Anything that maps input fringe image(s) to a list of FringeSets."""

    def transform(self, inputs) -> list:
        raise NotImplementedError


class LearnedTransformer(FringeTransformer):
    def __init__(self, model: FptNet, variant: Variant):
        self.model = model
        self.variant = variant

    def transform(self, inputs) -> list:
        return infer(self.model, self.variant, inputs)


class OracleTransformer(FringeTransformer):
    """Returns pre-rendered ground-truth sets; ignores its inputs."""

    def __init__(self, sets):
        self.sets = list(sets)

    def transform(self, inputs) -> list:
        return self.sets


@dataclass(frozen=True)
class RetrievalResult:
    absolute_phase: AbsolutePhaseMap
    height: np.ndarray
    wrapped_maps: list


def demodulate_and_unwrap(fringe_sets, params: RenderParams,
                          modulation_threshold: float = DEFAULT_MODULATION_THRESHOLD
                          ) -> RetrievalResult:
    """Shared tail: least-squares demodulation per set, temporal unwrapping,
    height recovery from the highest-frequency absolute phase."""
    sets = sorted(fringe_sets, key=lambda s: s.frequency)
    maps = [wrapped_phase(s, modulation_threshold) for s in sets]
    absolute = unwrap_ladder(maps)
    height = height_from_phase(absolute[-1], params)
    return RetrievalResult(absolute_phase=absolute[-1], height=height,
                           wrapped_maps=maps)


def classical_retrieve(fringe_sets, params: RenderParams,
                       modulation_threshold: float = DEFAULT_MODULATION_THRESHOLD
                       ) -> RetrievalResult:
    """Full multi-set retrieval from physically (or synthetically) captured sets."""
    return demodulate_and_unwrap(fringe_sets, params, modulation_threshold)


def end_to_end_retrieve(inputs, transformer_c: FringeTransformer,
                        transformer_u: FringeTransformer, params: RenderParams,
                        modulation_threshold: float = DEFAULT_MODULATION_THRESHOLD
                        ) -> RetrievalResult:
    """Learned retrieval: the C network supplies the highest-frequency stack,
    the U network the lower-frequency stacks, then the classical tail runs."""
    high_sets = transformer_c.transform(inputs)
    low_sets = transformer_u.transform(inputs)
    return demodulate_and_unwrap(list(low_sets) + list(high_sets), params,
                                 modulation_threshold)
