import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phaseforge.fringe import (
    AbsolutePhaseMap,
    FringeImage,
    FringeSet,
    FrequencyLadder,
    PhaseMap,
    RenderParams,
    SystemGeometry,
    TWO_PI,
    absolute_from_wrapped,
    analytic_phase,
    carrier_phase,
    height_from_phase,
    int_round,
    order_error,
    render_fringe,
    render_set,
    restricted_depth,
    restricted_depth_sim,
    unwrap_ladder,
    unwrap_step,
    wrap,
    wrapped_phase,
)


def analytic_set(phase, n_steps, a=0.5, b=0.4, frequency=1.0):
    """Fringe set built directly from a phase field, bypassing rendering."""
    offsets = TWO_PI * np.arange(n_steps) / n_steps
    images = tuple(FringeImage(a + b * np.cos(phase + d)) for d in offsets)
    return FringeSet(frequency=frequency, images=images, offsets=offsets)


def count_sign_changes(row, eps=1e-9):
    centered = row - row.mean()
    signs = np.sign(centered[np.abs(centered) > eps])  # skip exact-zero samples
    return int((np.diff(signs) != 0).sum())


class TestWrap:
    def test_identity_inside_range(self):
        x = np.linspace(-3.0, 3.0, 101)
        assert np.allclose(wrap(x), x, atol=1e-12)

    def test_branch_cut_maps_to_plus_pi(self):
        assert wrap(np.array([np.pi])) == pytest.approx(np.pi)
        assert wrap(np.array([-np.pi])) == pytest.approx(np.pi)
        assert wrap(np.array([3 * np.pi])) == pytest.approx(np.pi)

    def test_int_round_half_away_from_zero(self):
        assert int_round(np.array([0.5, -0.5, 1.5, -1.5, 2.4, -2.6])).tolist() == \
            [1, -1, 2, -2, 2, -3]


class TestRenderFringe:
    def test_flat_surface_zero_offset_is_uniform_one(self):
        z = np.zeros((8, 8))
        img = render_fringe(z, 5.0, 0.0, RenderParams(0.5, 0.5, 1.0))
        assert np.allclose(img.intensity, 1.0)

    def test_half_half_matches_8bit_scale(self):
        # a = b = 0.5 normalized is 127.5 + 127.5*cos at 8-bit scale
        z = np.full((4, 4), 0.7)
        img = render_fringe(z, 3.0, 0.3, RenderParams(0.5, 0.5, 1.0))
        expected = (127.5 + 127.5 * np.cos(0.7 * 3.0 + 0.3)) / 255.0
        assert np.allclose(img.intensity, expected)

    def test_ramp_gives_one_cycle_per_row(self):
        f, c = 4.0, 0.5
        width = 256
        ramp = np.tile(np.linspace(0.0, TWO_PI / (f * c), width, endpoint=False),
                       (8, 1))
        img = render_fringe(ramp, f, 0.0, RenderParams(0.5, 0.5, c))
        # one full cosine cycle crosses its mean exactly twice
        for row in img.intensity:
            assert count_sign_changes(row) == 2

    def test_carrier_adds_f_cycles_per_row(self):
        f = 8.0
        z = np.zeros((4, 256))
        img = render_fringe(z, f, 0.0,
                            RenderParams(0.5, 0.5, 1.0, carrier_enabled=True))
        for row in img.intensity:
            assert count_sign_changes(row) == 2 * int(f)

    def test_bad_params_rejected(self):
        with pytest.raises(ValueError):
            RenderParams(background=0.6, modulation=0.5)
        with pytest.raises(ValueError):
            RenderParams(phase_constant=0.0)

    def test_non_2d_surface_rejected(self):
        with pytest.raises(ValueError):
            render_fringe(np.zeros(8), 1.0, 0.0, RenderParams())


class TestRenderSet:
    def test_under_three_steps_rejected(self):
        with pytest.raises(ValueError):
            render_set(np.zeros((4, 4)), 1.0, 2, RenderParams())

    def test_quadrature_offsets(self):
        z = np.full((4, 4), 1.3)
        params = RenderParams(0.5, 0.4, 1.0)
        fringe_set = render_set(z, 1.0, 4, params)
        phi = 1.3
        expected = [np.cos(phi), -np.sin(phi), -np.cos(phi), np.sin(phi)]
        for img, e in zip(fringe_set.images, expected):
            assert np.allclose(img.intensity, 0.5 + 0.4 * e, atol=1e-12)

    def test_roundtrip_reproduces_wrapped_phase(self, rng):
        z = rng.uniform(0.0, 10.0, (16, 16))
        params = RenderParams(0.5, 0.45, 0.37, carrier_enabled=True)
        fringe_set = render_set(z, 3.0, 12, params)
        recovered = wrapped_phase(fringe_set)
        expected = wrap(analytic_phase(z, 3.0, params))
        assert recovered.valid_mask.all()
        assert np.abs(wrap(recovered.phase - expected)).max() < 1e-9


class TestWrappedPhase:
    def test_zero_phase_constant_images(self):
        fringe_set = analytic_set(np.zeros((6, 6)), 4)
        result = wrapped_phase(fringe_set)
        assert np.allclose(result.phase, 0.0, atol=1e-12)

    def test_three_step_analytic_injection(self):
        fringe_set = analytic_set(np.full((5, 5), 1.0), 3, a=0.5, b=0.4)
        result = wrapped_phase(fringe_set)
        assert np.abs(result.phase - 1.0).max() < 1e-9

    def test_zero_modulation_fully_masked(self):
        fringe_set = analytic_set(np.zeros((6, 6)), 4, a=0.5, b=0.0)
        result = wrapped_phase(fringe_set)
        assert not result.valid_mask.any()
        assert np.isnan(result.phase).all()

    def test_uniform_offset_invariance(self, rng):
        phase = rng.uniform(-3, 3, (8, 8))
        base = analytic_set(phase, 5, a=0.4, b=0.3)
        shifted = FringeSet(
            frequency=1.0,
            images=tuple(FringeImage(img.intensity + 0.1) for img in base.images),
            offsets=base.offsets,
        )
        a = wrapped_phase(base)
        b = wrapped_phase(shifted)
        assert np.allclose(a.phase, b.phase, atol=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(
        n=st.sampled_from([3, 4, 12]),
        b=st.floats(0.05, 0.5),
        phi=st.floats(-10.0, 10.0),
    )
    def test_demodulation_exactness_property(self, n, b, phi):
        a = 0.5
        fringe_set = analytic_set(np.full((2, 2), phi), n, a=a, b=b)
        result = wrapped_phase(fringe_set)
        assert result.valid_mask.all()
        expected = wrap(np.full((2, 2), phi))
        assert np.abs(wrap(result.phase - expected)).max() < 1e-9


class TestUnwrap:
    def test_null_case(self):
        zero = np.zeros((4, 4))
        mask = np.ones((4, 4), bool)
        prev = AbsolutePhaseMap(zero, np.zeros((4, 4), np.int64), mask, 1.0)
        cur = PhaseMap(zero, mask, 2.0)
        out = unwrap_step(prev, cur)
        assert np.all(out.order == 0)
        assert np.allclose(out.phase, 0.0)

    def test_hand_evaluated_pixel(self):
        prev = AbsolutePhaseMap(np.full((1, 1), 3 * np.pi),
                                np.zeros((1, 1), np.int64),
                                np.ones((1, 1), bool), 1.0)
        cur = PhaseMap(np.full((1, 1), 0.1), np.ones((1, 1), bool), 2.0)
        out = unwrap_step(prev, cur)
        assert out.order[0, 0] == 3
        assert out.phase[0, 0] == pytest.approx(TWO_PI * 3 + 0.1)

    def test_ratio_two_matches_doubling_recurrence(self, rng):
        # literal transcription of the doubling special case
        prev_phase = rng.uniform(-20, 20, (8, 8))
        cur_wrapped = wrap(rng.uniform(-20, 20, (8, 8)))
        mask = np.ones((8, 8), bool)
        prev = AbsolutePhaseMap(prev_phase, np.zeros((8, 8), np.int64), mask, 4.0)
        cur = PhaseMap(cur_wrapped, mask, 8.0)
        out = unwrap_step(prev, cur)
        literal_k = int_round((2.0 * prev_phase - cur_wrapped) / TWO_PI)
        assert np.array_equal(out.order, literal_k)
        assert np.allclose(out.phase, TWO_PI * literal_k + cur_wrapped)

    def test_nonincreasing_frequency_rejected(self):
        zero = np.zeros((2, 2))
        mask = np.ones((2, 2), bool)
        prev = AbsolutePhaseMap(zero, np.zeros((2, 2), np.int64), mask, 2.0)
        with pytest.raises(ValueError):
            unwrap_step(prev, PhaseMap(zero, mask, 2.0))

    def test_dimension_mismatch_rejected(self):
        mask2 = np.ones((2, 2), bool)
        prev = AbsolutePhaseMap(np.zeros((2, 2)), np.zeros((2, 2), np.int64),
                                mask2, 1.0)
        with pytest.raises(ValueError):
            unwrap_step(prev, PhaseMap(np.zeros((3, 3)), np.ones((3, 3), bool), 2.0))

    def test_single_rung_ladder_is_verbatim(self):
        phase = wrap(np.linspace(-2, 2, 16).reshape(4, 4))
        wrapped_map = PhaseMap(phase, np.ones((4, 4), bool), 1.0)
        out = unwrap_ladder([wrapped_map])
        assert len(out) == 1
        assert np.array_equal(out[0].phase, phase)
        assert np.all(out[0].order == 0)

    def test_noise_free_ladder_recovers_analytic_phase(self, rng):
        params = RenderParams(0.5, 0.5, 0.1)
        ladder = FrequencyLadder.doubling(7)
        for _ in range(5):
            z = rng.uniform(0.0, 25.0, (16, 16))
            maps = [wrapped_phase(render_set(z, f, 4, params))
                    for f in ladder.frequencies]
            absolute = unwrap_ladder(maps)
            expected = analytic_phase(z, 64.0, params)
            assert np.abs(absolute[-1].phase - expected).max() < 1e-6
            expected_k = int_round((expected - wrap(expected)) / TWO_PI)
            assert np.array_equal(absolute[-1].order, expected_k)

    def test_wrap_consistency_invariant(self, rng):
        params = RenderParams(0.5, 0.5, 0.1)
        z = rng.uniform(0.0, 25.0, (16, 16))
        maps = [wrapped_phase(render_set(z, f, 4, params))
                for f in FrequencyLadder.doubling(5).frequencies]
        for abs_map, wrapped_map in zip(unwrap_ladder(maps), maps):
            residual = abs_map.wrapped()
            assert (residual > -np.pi - 1e-9).all() and (residual <= np.pi + 1e-9).all()
            assert np.abs(residual - wrapped_map.phase).max() < 1e-9

    def test_ladder_must_start_at_one(self):
        mask = np.ones((2, 2), bool)
        maps = [PhaseMap(np.zeros((2, 2)), mask, 2.0),
                PhaseMap(np.zeros((2, 2)), mask, 4.0)]
        with pytest.raises(ValueError):
            unwrap_ladder(maps)


class TestOrderError:
    def test_zero_errors_safe(self):
        delta_k, safe = order_error(0.0, 0.0)
        assert delta_k == 0.0 and safe

    def test_analytic_unsafe_pair(self):
        delta_k, safe = order_error(0.2 * np.pi, -0.7 * np.pi)
        assert not safe
        assert delta_k == pytest.approx(1.1 * np.pi / TWO_PI)

    def test_threshold_is_half_order(self):
        _, safe = order_error(0.0, 0.99 * np.pi)
        assert safe
        _, unsafe = order_error(0.0, 1.01 * np.pi)
        assert not unsafe

    def test_sharpness_against_two_step_unwrap(self):
        # inject constant error pairs into a doubling unwrap step and compare
        # the realized order error against the safety predicate
        base = 0.37  # generic true absolute phase at the lower frequency
        true_high = 2.0 * base
        grid = np.linspace(-1.2 * np.pi, 1.2 * np.pi, 41)  # avoids the boundary
        mask = np.ones((1, 1), bool)
        true_k = int_round(np.array([(true_high - wrap(np.array([true_high]))[0])
                                     / TWO_PI]))[0]
        for dp in grid:
            for dc in grid:
                prev = AbsolutePhaseMap(np.full((1, 1), base + dp),
                                        np.zeros((1, 1), np.int64), mask, 1.0)
                observed = wrap(np.array([[true_high + dc]]))
                out = unwrap_step(prev, PhaseMap(observed, mask, 2.0))
                wrap_jump = int_round(np.array([(true_high + dc - observed[0, 0])
                                                / TWO_PI]))[0]
                correct = (out.order[0, 0] == true_k + wrap_jump)
                _, predicted_safe = order_error(dp, dc)
                assert correct == predicted_safe, (dp, dc)


class TestDepthAndHeight:
    def test_restricted_depth_reference_geometry(self):
        geo = SystemGeometry(camera_to_reference=1000.0, projector_to_camera=60.0,
                             projected_width=280.0, measurement_range=250.0)
        assert restricted_depth(geo, 64.0) == pytest.approx(72.92, abs=0.01)

    def test_restricted_depth_inverse_in_frequency(self):
        geo = SystemGeometry(1000.0, 60.0, 280.0, 250.0)
        assert restricted_depth(geo, 64.0) == pytest.approx(
            restricted_depth(geo, 32.0) / 2.0)

    def test_restricted_depth_identity(self):
        geo = SystemGeometry(1.0, 1.0, 1.0, 1.0)
        assert restricted_depth(geo, 1.0) == pytest.approx(1.0)

    def test_restricted_depth_sim_reference_value(self):
        assert restricted_depth_sim(RenderParams(phase_constant=1 / 35), 35.0) == \
            pytest.approx(6.2832, abs=1e-4)

    def test_restricted_depth_sim_scalings(self):
        assert restricted_depth_sim(RenderParams(phase_constant=1.0), TWO_PI) == \
            pytest.approx(1.0)
        assert restricted_depth_sim(RenderParams(phase_constant=2.0), 5.0) == \
            pytest.approx(restricted_depth_sim(RenderParams(phase_constant=1.0), 5.0) / 2)

    def test_nonpositive_frequency_rejected(self):
        with pytest.raises(ValueError):
            restricted_depth(SystemGeometry(1, 1, 1, 1), 0.0)
        with pytest.raises(ValueError):
            restricted_depth_sim(RenderParams(), -1.0)

    def test_height_zero_phase(self):
        abs_map = AbsolutePhaseMap(np.zeros((4, 4)), np.zeros((4, 4), np.int64),
                                   np.ones((4, 4), bool), 2.0)
        assert np.allclose(height_from_phase(abs_map, RenderParams()), 0.0)

    def test_height_roundtrip(self, rng):
        # carrier off: the base-frequency phase must stay inside (-pi, pi]
        # for the ladder's base case to anchor the absolute offset
        params = RenderParams(0.5, 0.5, 0.1)
        z = rng.uniform(0.0, 20.0, (16, 16))
        maps = [wrapped_phase(render_set(z, f, 4, params))
                for f in FrequencyLadder.doubling(6).frequencies]
        absolute = unwrap_ladder(maps)
        recovered = height_from_phase(absolute[-1], params)
        assert np.abs(recovered - z).max() < 1e-6

    def test_section_3_2_constants_make_height_equal_phase(self):
        params = RenderParams(0.5, 0.5, 1 / 35)
        phase = np.linspace(0.0, 5.0, 16).reshape(4, 4)
        abs_map = AbsolutePhaseMap(phase, np.zeros((4, 4), np.int64),
                                   np.ones((4, 4), bool), 35.0)
        assert np.allclose(height_from_phase(abs_map, params), phase)


class TestPeriodAmbiguity:
    def test_identical_at_fs_different_at_fl(self):
        params = RenderParams(0.5, 0.5, 1 / 35)
        f_s, f_l = 35.0, 30.0
        period = TWO_PI / (f_s * params.phase_constant)
        z1 = np.full((8, 8), 1.0)
        z2 = z1 + period
        for delta in (0.0, np.pi / 2):
            a = render_fringe(z1, f_s, delta, params).intensity
            b = render_fringe(z2, f_s, delta, params).intensity
            assert np.abs(a - b).max() < 1e-12
        a = render_fringe(z1, f_l, 0.0, params).intensity
        b = render_fringe(z2, f_l, 0.0, params).intensity
        assert np.abs(a - b).max() > 0.1


class TestInvariants:
    def test_fringe_image_range_enforced(self):
        with pytest.raises(ValueError):
            FringeImage(np.full((2, 2), 1.5))

    def test_fringe_set_offsets_enforced(self):
        images = tuple(FringeImage(np.zeros((2, 2))) for _ in range(3))
        with pytest.raises(ValueError):
            FringeSet(frequency=1.0, images=images, offsets=np.array([0.0, 1.0, 2.0]))

    def test_ladder_strictly_increasing(self):
        with pytest.raises(ValueError):
            FrequencyLadder((1.0, 4.0, 2.0))
        with pytest.raises(ValueError):
            FrequencyLadder((2.0, 4.0))
