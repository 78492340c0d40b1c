import numpy as np
import pytest

from phaseforge.dataset import split_seed
from phaseforge.fringe import FrequencyLadder, RenderParams, wrapped_phase
from phaseforge.pipeline import (
    OracleTransformer,
    classical_retrieve,
    end_to_end_retrieve,
)
from phaseforge.surface import SurfaceGenConfig, generate_surface, render_scene


@pytest.fixture(scope="module")
def scene():
    params = RenderParams(phase_constant=0.08)
    surface = generate_surface(SurfaceGenConfig(seed=21, size=(24, 24),
                                                depth_range=(0.0, 20.0)))
    ladder = FrequencyLadder.doubling(6).frequencies
    sets = render_scene(surface, ladder, 4, params)
    return params, surface, sets


class TestClassical:
    def test_recovers_surface_exactly(self, scene):
        params, surface, sets = scene
        result = classical_retrieve(sets, params)
        assert result.absolute_phase.valid_mask.all()
        assert np.abs(result.height - surface.depth).max() < 1e-6

    def test_many_random_surfaces(self):
        params = RenderParams(phase_constant=0.08)
        ladder = FrequencyLadder.doubling(5).frequencies
        for seed in range(10):
            rng = np.random.Generator(np.random.PCG64(split_seed(seed, "test", 0)))
            surface = generate_surface(
                SurfaceGenConfig(seed=seed, size=(16, 16), depth_range=(0.0, 20.0)),
                rng=rng)
            sets = render_scene(surface, ladder, 4, params)
            result = classical_retrieve(sets, params)
            assert np.abs(result.height - surface.depth).max() < 1e-6


class TestOracleSubstitution:
    def test_bit_identical_to_classical(self, scene):
        params, surface, sets = scene
        classical = classical_retrieve(sets, params)
        oracle_c = OracleTransformer([sets[-1]])   # highest-frequency stack
        oracle_u = OracleTransformer(sets[:-1])    # lower stacks
        inputs = [sets[-1].images[0]]
        learned = end_to_end_retrieve(inputs, oracle_c, oracle_u, params)
        assert np.array_equal(learned.height, classical.height)
        assert np.array_equal(learned.absolute_phase.phase, classical.absolute_phase.phase)
        assert np.array_equal(learned.absolute_phase.order, classical.absolute_phase.order)

    def test_wrapped_maps_match_direct_demodulation(self, scene):
        params, _, sets = scene
        result = classical_retrieve(sets, params)
        for wrapped_map, fringe_set in zip(result.wrapped_maps, sets):
            direct = wrapped_phase(fringe_set)
            assert np.array_equal(
                np.nan_to_num(wrapped_map.phase), np.nan_to_num(direct.phase))
