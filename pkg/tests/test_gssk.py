import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apqvlc.gssk import DEFAULT_LED_SUBSETS, GsskConfig, detect_ml, gssk_detect_ml, gssk_modulate, gssk_received_mean
from apqvlc.montecarlo import run_ser_at_scales

from oracles import gssk_collision_ser


def test_bit_mapping_msb_first():
    assert gssk_modulate(0b100, 3).tolist() == [1, 0, 0]
    assert gssk_modulate(0b011, 3).tolist() == [0, 1, 1]
    with pytest.raises(ValueError):
        gssk_modulate(8, 3)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_average_optical_power_is_one(n):
    cfg = GsskConfig(n)
    assert cfg.m_total == 2**n
    assert (cfg.amplitude_per_led * cfg.patterns.sum(axis=1)).mean() == pytest.approx(1.0)


def test_default_led_subsets():
    assert GsskConfig(3).led_indices == DEFAULT_LED_SUBSETS[3] == (0, 1, 2)
    assert GsskConfig(5).led_indices == (0, 1, 2, 3, 4)
    with pytest.raises(ValueError):
        GsskConfig(3, (0, 0, 1))
    with pytest.raises(ValueError):
        GsskConfig(3, (0, 1))


def test_received_mean():
    cfg = GsskConfig(3)
    assert gssk_received_mean([1, 0, 1], [3.0, 5.0, 7.0], cfg) == pytest.approx(2 / 3 * 10)
    with pytest.raises(ValueError):
        gssk_received_mean([1, 0], [1.0, 1.0, 1.0], cfg)


@settings(max_examples=50)
@given(st.lists(st.floats(0.5, 50.0), min_size=3, max_size=3, unique=True))
def test_noiseless_detection_with_distinct_subset_sums(gains):
    cfg = GsskConfig(3)
    sums = [sum(g for g, b in zip(gains, gssk_modulate(k, 3)) if b) for k in range(8)]
    gaps = np.diff(np.sort(sums))
    if gaps.min() < 1e-6:
        return
    means = [gssk_received_mean(gssk_modulate(k, 3), gains, cfg) for k in range(8)]
    assert detect_ml(np.array(means), gains, cfg).tolist() == list(range(8))


@given(st.permutations([0, 1, 2]))
def test_permutation_invariance(perm):
    # relabelling LEDs permutes the symbols but not the error probability
    gains = np.array([40.0, 25.0, 12.0])
    base = run_ser_at_scales(GsskConfig(3), gains, 20_000, seed=4).ser
    permuted = run_ser_at_scales(GsskConfig(3), gains[list(perm)], 20_000, seed=4).ser
    # the same noise draws feed different symbol labels, so allow sampling noise
    assert permuted == pytest.approx(base, abs=0.02)


def test_ties_go_to_lowest_index():
    cfg = GsskConfig(3)
    gains = [10.0, 10.0, 0.0]
    assert gssk_detect_ml(cfg.amplitude_per_led * 10.0, gains, cfg) == 0b010
    assert gssk_detect_ml(0.0, gains, cfg) == 0


@pytest.mark.parametrize("gains", [[1.0, 1.0, 0.5], [1.0, 1.0, 1.0], [1.0, 0.0, 2.0], [1.0, 2.0, 4.0]])
def test_collision_floor_matches_oracle(gains):
    cfg = GsskConfig(3)
    expected = gssk_collision_ser(gains, cfg.amplitude_per_led)
    est = run_ser_at_scales(cfg, 1e7 * np.array(gains), 50_000, seed=9)
    assert est.ser == pytest.approx(expected, abs=4 * np.sqrt(0.25 / 50_000))


def test_equal_gain_pair_collision_counts():
    # h, h, h/2: patterns 100 and 010 always collide, so 2 of 8 are unrecoverable
    assert gssk_collision_ser([1.0, 1.0, 0.5], 2 / 3) == pytest.approx(0.25)
    # h, h, h: only the popcount is visible: 8 - 4 = 4 wrong
    assert gssk_collision_ser([1.0, 1.0, 1.0], 2 / 3) == pytest.approx(0.5)


def test_vectorized_equals_scalar():
    cfg = GsskConfig(4)
    gains = [5.0, 3.0, 2.0, 1.3]
    y = np.random.default_rng(0).normal(5, 4, 300)
    assert detect_ml(y, gains, cfg).tolist() == [gssk_detect_ml(v, gains, cfg) for v in y]


def test_detector_is_nearest_mean_brute_force():
    cfg = GsskConfig(3)
    gains = [4.0, 2.5, 1.0]
    means = [cfg.amplitude_per_led * sum(b * g for b, g in zip(bits, gains))
             for bits in itertools.product([0, 1], repeat=3)]
    for y in np.linspace(-2, 8, 201):
        d = [(y - m) ** 2 for m in means]
        assert gssk_detect_ml(y, gains, cfg) == d.index(min(d))
