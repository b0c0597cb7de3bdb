import math

import numpy as np
import pytest

from apqvlc.analysis import ser_total
from apqvlc.apq import ApqConfig
from apqvlc.channel import channel_gain
from apqvlc.gssk import GsskConfig
from apqvlc.montecarlo import (
    BLOCK,
    ApqScheme,
    GsskScheme,
    SerEstimate,
    SweepResult,
    block_rng,
    run_ser_at_scales,
    run_ser_point,
    run_snr_sweep,
    scheme_scales,
    throughput_map,
)
from apqvlc.scenario import scenario_from_dict

from oracles import exact_sic_errors

APQ = ApqConfig(16, 0.3)


@pytest.fixture(scope="module")
def reference():
    return scenario_from_dict({"scheme": "apq16"})


def test_ser_estimate_fields():
    e = SerEstimate(25, 100)
    assert e.ser == 0.25
    assert e.stderr == pytest.approx(math.sqrt(0.25 * 0.75 / 100))
    with pytest.raises(ValueError):
        SerEstimate(5, 4)
    with pytest.raises(ValueError):
        SerEstimate(0, 0)


def test_block_streams_are_distinct():
    a = block_rng(1, 0, 0).standard_normal(4)
    assert not np.allclose(a, block_rng(1, 0, 1).standard_normal(4))
    assert not np.allclose(a, block_rng(1, 1, 0).standard_normal(4))
    assert np.array_equal(a, block_rng(1, 0, 0).standard_normal(4))


class TestDeterminism:
    def test_same_seed_same_counts(self):
        a = run_ser_at_scales(APQ, 60.0, 3 * BLOCK + 17, seed=8)
        b = run_ser_at_scales(APQ, 60.0, 3 * BLOCK + 17, seed=8)
        assert a == b

    def test_worker_count_does_not_matter(self):
        a = run_ser_at_scales(APQ, 60.0, 4 * BLOCK, seed=8, workers=1)
        b = run_ser_at_scales(APQ, 60.0, 4 * BLOCK, seed=8, workers=3)
        assert a == b

    def test_prefix_blocks_are_shared(self):
        # a longer run reuses the blocks of a shorter one
        short = run_ser_at_scales(APQ, 40.0, BLOCK, seed=2)
        long = run_ser_at_scales(APQ, 40.0, 2 * BLOCK, seed=2)
        second = long.errors - short.errors
        assert 0 <= second and abs(second - short.errors) < 6 * math.sqrt(short.errors)

    def test_different_seeds_differ(self):
        assert run_ser_at_scales(APQ, 40.0, BLOCK, seed=1) != run_ser_at_scales(APQ, 40.0, BLOCK, seed=2)


class TestStatistics:
    @pytest.mark.parametrize("s", [30.0, 60.0, 120.0])
    def test_apq_against_exact_integration(self, s):
        n = 300_000
        p = exact_sic_errors(s, APQ.orders, APQ.powers)[0]
        est = run_ser_at_scales(APQ, s, n, seed=21)
        assert abs(est.ser - p) <= 4 * math.sqrt(p * (1 - p) / n)

    def test_stderr_shrinks_like_root_n(self):
        small = run_ser_at_scales(APQ, 60.0, 40_000, seed=3)
        large = run_ser_at_scales(APQ, 60.0, 640_000, seed=3)
        assert small.stderr / large.stderr == pytest.approx(4.0, rel=0.05)

    def test_zero_scale_is_guessing(self):
        n = 200_000
        est = run_ser_at_scales(APQ, 0.0, n, seed=5)
        assert abs(est.ser - 15 / 16) <= 4 * math.sqrt(15 / 256 / n)

    def test_gssk_zero_gain_everywhere_is_guessing(self):
        n = 200_000
        est = run_ser_at_scales(GsskConfig(3), np.zeros(3), n, seed=5)
        # all hypotheses coincide, argmin always returns symbol 0
        assert abs(est.ser - 7 / 8) <= 4 * math.sqrt(7 / 64 / n)


class TestSchemes:
    def test_mean_normalization_doubles_the_scale(self, reference):
        scene = reference.scene((1.0, 1.0, 0.75))
        raw = scheme_scales(ApqScheme(APQ, mean_normalized=False), scene, 130.0)
        norm = scheme_scales(ApqScheme(APQ), scene, 130.0)
        assert raw == pytest.approx(1.646395406810243e-4 * 10**6.5)
        assert norm == pytest.approx(2 * raw)

    def test_gssk_uses_its_led_subset(self, reference):
        scene = reference.scene((2.1, 2.2, 0.75))
        scales = scheme_scales(GsskScheme(GsskConfig(3)), scene, 0.0)
        expected = [channel_gain(scene.luminaires[i], scene.receiver) for i in (0, 1, 2)]
        assert scales == pytest.approx(expected)
        # at Rx2 only Tx2 and Tx3 of the three are inside the receiver field of view
        assert scales[0] == 0.0 and scales[1] > 0 and scales[2] > 0

    def test_eighty_db_shift_moves_scale_tenfold_per_twenty(self, reference):
        scene = reference.scene((1.0, 1.0, 0.75))
        scheme = ApqScheme(APQ)
        assert scheme_scales(scheme, scene, 100.0) / scheme_scales(scheme, scene, 80.0) == pytest.approx(10.0)

    def test_location_independence_under_matched_gain(self, reference):
        # two receivers directly under different LEDs see the same gain, so the SER agrees
        scheme = ApqScheme(APQ, mean_normalized=False)
        a = run_ser_point(scheme, reference.scene((1.0, 1.0, 0.75)), 120.0, 200_000, seed=1, point=0)
        b = run_ser_point(scheme, reference.scene((3.0, 3.0, 0.75)), 120.0, 200_000, seed=1, point=1)
        z = (a.ser - b.ser) / math.hypot(a.stderr, b.stderr)
        assert abs(z) < 4

    def test_no_serving_led_gives_guessing(self, reference):
        scheme = ApqScheme(APQ)
        scene = reference.scene((0.0, 4.0, 0.75))
        assert scheme_scales(scheme, scene, 150.0) == 0.0
        est = run_ser_point(scheme, scene, 150.0, 100_000, seed=2)
        assert abs(est.ser - 15 / 16) < 4 * math.sqrt(15 / 256 / 1e5)


class TestSweep:
    def test_sweep_points_use_their_own_streams(self, reference):
        scheme = ApqScheme(APQ, mean_normalized=False)
        scene = reference.scene((1.0, 1.0, 0.75))
        sweep = run_snr_sweep(scheme, scene, [110.0, 120.0], 50_000, seed=6)
        assert sweep.estimates[1] == run_ser_point(scheme, scene, 120.0, 50_000, seed=6, point=1)
        assert sweep.scheme == "apq16"

    def test_sweep_tracks_analytic_curve(self, reference):
        scheme = ApqScheme(APQ, mean_normalized=False)
        scene = reference.scene((1.0, 1.0, 0.75))
        snrs = [110.0, 120.0, 130.0]
        sweep = run_snr_sweep(scheme, scene, snrs, 200_000, seed=6)
        for snr, est in zip(snrs, sweep.estimates):
            p = float(ser_total(scheme_scales(scheme, scene, snr), APQ.powers))
            assert abs(est.ser - p) <= 4 * math.sqrt(p * (1 - p) / est.trials) + 1e-12
        assert np.all(np.diff(sweep.ser) < 0)

    def test_rejects_unsorted(self, reference):
        with pytest.raises(ValueError):
            SweepResult((120.0, 110.0), (SerEstimate(0, 1), SerEstimate(0, 1)), "x")
        with pytest.raises(ValueError):
            run_snr_sweep(ApqScheme(APQ), reference.scene((1, 1, 0.75)), [], 10, 0)


class TestThroughputMap:
    def test_shape_and_normalization(self, reference):
        tmap = throughput_map(reference.build_scheme(), reference.scene((0, 0, 0.75)), 140.0,
                              grid_spacing=1.0, trials=5_000, seed=1)
        assert tmap.values.shape == (5, 5)
        assert tmap.xs.tolist() == [0.0, 1.0, 2.0, 3.0, 4.0]
        assert tmap.values.max() == 1.0
        assert np.all((0 <= tmap.values) & (tmap.values <= 1))
        # directly under Tx1 (1, 1) the link is clean; the bare corner is blind
        assert tmap.ser[1, 1] == 0.0
        assert tmap.ser[0, 0] == pytest.approx(15 / 16, abs=0.02)

    def test_cell_matches_single_point_run(self, reference):
        scheme = reference.build_scheme()
        scene = reference.scene((0, 0, 0.75))
        tmap = throughput_map(scheme, scene, 120.0, grid_spacing=2.0, trials=4_000, seed=9)
        i, j = 1, 2  # y = 2, x = 4
        est = run_ser_point(scheme, scene.at((4.0, 2.0, 0.75)), 120.0, 4_000, seed=9, point=i * 3 + j)
        assert tmap.ser[i, j] == est.ser

    def test_workers_do_not_change_the_map(self, reference):
        args = (reference.build_scheme(), reference.scene((0, 0, 0.75)), 130.0, 1.0, 3_000, 4)
        a = throughput_map(*args, workers=1)
        b = throughput_map(*args, workers=2)
        assert np.array_equal(a.values, b.values)

    def test_spacing_must_divide_room(self, reference):
        with pytest.raises(ValueError):
            throughput_map(reference.build_scheme(), reference.scene((0, 0, 0.75)), 140.0, grid_spacing=0.3)
