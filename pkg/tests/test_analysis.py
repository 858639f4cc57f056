import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import Polynomial

from conftest import chirp_a, chirp_b, leakage, scene, target
from fmcwleak.analysis import (FIT_ORDER, RangeSpectrum, ac_power_db, averaged_power_spectrum,
                               default_exclusion_zone, detect_peaks, noise_floor_difference, predict_alias,
                               tone_power_db)
from fmcwleak.downconvert import BasebandBlock, common_downconvert, proposed_downconvert
from fmcwleak.planning import range_of_beat
from fmcwleak.waveform import synthesize_if_block


def bb(x, technique="common", rate=2.5e6, i=0):
    return BasebandBlock(np.asarray(x, dtype=float), i, technique, rate)


def spectrum(power_db, r_max=100.0, technique="x"):
    p = np.asarray(power_db, dtype=float)
    return RangeSpectrum(p, np.arange(len(p)) * r_max / len(p), technique, 1)


# --- averaged spectra ------------------------------------------------------------

def test_axis_spans_the_unambiguous_range():
    s = averaged_power_spectrum([bb(np.random.default_rng(0).standard_normal(2048))], chirp_a())
    assert len(s.power_db) == 1024 and s.range_axis[0] == 0.0
    assert np.all(np.diff(s.range_axis) > 0)
    assert s.range_axis[-1] + s.resolution == pytest.approx(range_of_beat(1.25e6, chirp_a()))
    assert s.range_axis[-1] + s.resolution == pytest.approx(1075, rel=2e-3)


def test_pure_tone_gives_single_peak():
    n = np.arange(2048)
    k = 300
    s = averaged_power_spectrum([bb(np.cos(2 * np.pi * k * n / 2048))], chirp_a())
    assert np.argmax(s.power_db) == k
    assert s.power_db[k] == pytest.approx(20 * math.log10(0.5))
    assert np.sum(s.power_db > -200) == 1


def test_averaging_shrinks_floor_variance():
    rng = np.random.default_rng(5)
    single = averaged_power_spectrum([bb(rng.standard_normal(2048))], chirp_a())
    avg = averaged_power_spectrum([bb(rng.standard_normal(2048), i=i) for i in range(100)], chirp_a())
    assert np.var(avg.power_db[1:]) < np.var(single.power_db[1:]) / 10


def test_mixed_blocks_rejected():
    with pytest.raises(ValueError):
        averaged_power_spectrum([bb(np.ones(8)), bb(np.ones(8), "proposed")], chirp_a())
    with pytest.raises(ValueError):
        averaged_power_spectrum([bb(np.ones(8)), bb(np.ones(16))], chirp_a())
    with pytest.raises(ValueError):
        averaged_power_spectrum([], chirp_a())


@settings(max_examples=20)
@given(st.permutations(list(range(6))))
def test_averaging_is_permutation_invariant(order):
    rng = np.random.default_rng(1)
    blocks = [bb(rng.standard_normal(64), i=i) for i in range(6)]
    ref = averaged_power_spectrum(blocks, chirp_b())
    got = averaged_power_spectrum([blocks[i] for i in order], chirp_b())
    np.testing.assert_allclose(got.power_db, ref.power_db, atol=1e-12)


def test_experiment_a_geometry_spectrum(plan_a, lpf_a):
    sc = scene(chirp_a(), leakage())
    out = common_downconvert(synthesize_if_block(sc, plan_a), plan_a, lpf_a)
    s = averaged_power_spectrum([out], sc.chirp)
    assert len(s.power_db) == 1024
    assert s.range_axis[-1] < 1075 and s.range_axis[-1] > 1070


# --- noise-floor difference ---------------------------------------------------------

def test_identical_inputs_give_zero_difference():
    s = spectrum(np.random.default_rng(2).normal(-80, 3, 512))
    rep = noise_floor_difference(s, s, exclusion_zone=10.0)
    assert not rep.diff_db.any()
    np.testing.assert_allclose(rep.fit_coeffs, 0, atol=1e-12)


def test_planted_polynomial_recovered():
    rng = np.random.default_rng(3)
    r = np.arange(1024) * 1075 / 1024
    sel = r >= 40
    domain = [r[sel][0], r[sel][-1]]
    true = Polynomial([6, -3, 1.5, 2, -1, 0.8, -0.5, 0.4, -0.3], domain=domain)
    common = np.full(1024, -70.0)
    common[sel] += true(r[sel]) + rng.normal(0, 1e-4, sel.sum())
    rep = noise_floor_difference(RangeSpectrum(common, r, "common", 1),
                                 RangeSpectrum(np.full(1024, -70.0), r, "proposed", 1), exclusion_zone=40.0)
    assert len(rep.fit_coeffs) == FIT_ORDER + 1
    np.testing.assert_allclose(rep.fit_coeffs, true.coef, rtol=0.01)


def test_difference_is_antisymmetric():
    rng = np.random.default_rng(4)
    a, b = spectrum(rng.normal(-70, 2, 256)), spectrum(rng.normal(-80, 2, 256))
    ab = noise_floor_difference(a, b, exclusion_zone=5.0)
    ba = noise_floor_difference(b, a, exclusion_zone=5.0)
    np.testing.assert_allclose(ab.diff_db, -ba.diff_db)
    np.testing.assert_allclose(ab.fit_coeffs, -ba.fit_coeffs, atol=1e-9)


def test_fit_stays_inside_measured_span():
    rng = np.random.default_rng(6)
    r = np.arange(1024.0)
    common = -60 - 10 * np.log10(1 + r / 50) + rng.normal(0, 2, 1024)
    rep = noise_floor_difference(RangeSpectrum(common, r, "c", 1),
                                 RangeSpectrum(np.full(1024, -80.0), r, "p", 1), exclusion_zone=30.0)
    fitted = rep.fit(rep.support_range)
    assert fitted.min() >= rep.diff_db.min() - 1 and fitted.max() <= rep.diff_db.max() + 1
    assert rep.near_improvement_db > rep.far_improvement_db


def test_bad_axes_and_short_support():
    with pytest.raises(ValueError, match="axes"):
        noise_floor_difference(spectrum(np.zeros(64)), spectrum(np.zeros(64), r_max=50.0))
    with pytest.raises(ValueError, match="fewer"):
        noise_floor_difference(spectrum(np.zeros(64)), spectrum(np.zeros(64)), exclusion_zone=95.0)


def test_default_exclusion_zone_covers_peak_flank():
    r = np.arange(512.0)
    p = np.full(512, -80.0)
    p[:20] = np.linspace(-10, -80, 20)
    assert 15 <= default_exclusion_zone(RangeSpectrum(p, r, "c", 1)) <= 20


# --- alias prediction -------------------------------------------------------------

def test_alias_example_from_measurement_geometry():
    a = predict_alias(73, 12.89, 75)
    assert a.apparent == pytest.approx(85.89) and a.aliased
    assert a.observed == pytest.approx(64.11) and a.usable_max == pytest.approx(62.11)


def test_no_internal_delay_no_alias():
    a = predict_alias(10, 0, 75)
    assert a.apparent == 10 and not a.aliased and a.observed == 10


def test_boundary_is_not_aliased():
    a = predict_alias(62.11, 12.89, 75)
    assert a.apparent == pytest.approx(75) and not a.aliased


def test_double_fold_unsupported():
    with pytest.raises(ValueError, match="more than once"):
        predict_alias(140, 12.89, 75)
    with pytest.raises(ValueError):
        predict_alias(-1, 0, 75)


@settings(max_examples=100)
@given(st.floats(0, 75), st.floats(0, 75))
def test_alias_is_a_mirror_fold(r_t, r_i):
    a = predict_alias(r_t, r_i, 75)
    assert 0 <= a.observed <= 75 + 1e-9
    assert a.observed == pytest.approx(75 - abs(75 - (r_t + r_i)), abs=1e-9)


# --- peaks ----------------------------------------------------------------------------

def test_flat_spectrum_has_no_peaks():
    assert detect_peaks(spectrum(np.full(128, -50.0))) == []


def test_two_tones_in_power_order():
    p = np.full(256, -80.0)
    p[40], p[150] = -30.0, -50.0
    peaks = detect_peaks(spectrum(p))
    assert [q.index for q in peaks] == [40, 150]
    assert peaks[0].power_db == -30.0


def test_prominence_must_be_positive():
    with pytest.raises(ValueError):
        detect_peaks(spectrum(np.zeros(8)), 0.0)


@settings(max_examples=30)
@given(st.floats(-200, 200), st.integers(0, 2**31 - 1))
def test_peaks_invariant_under_db_offset(offset, seed):
    rng = np.random.default_rng(seed)
    p = rng.normal(-80, 3, 300)
    p[rng.integers(0, 300, 3)] += 25
    a = [q.index for q in detect_peaks(spectrum(p))]
    b = [q.index for q in detect_peaks(spectrum(p + offset))]
    assert a == b


# --- tone power ------------------------------------------------------------------------

def test_tone_power_rejects_strong_neighbours():
    n = np.arange(512)
    rate = 0.5e6
    x = 0.25 + 0.1 * np.cos(2 * np.pi * 15e3 * n / rate) + 0.004 * np.cos(2 * np.pi * 213e3 * n / rate + 1)
    assert tone_power_db(x, 213e3, rate, nuisance=(0.0, 15e3)) == pytest.approx(20 * math.log10(0.002), abs=1e-6)


def test_ac_power_ignores_dc():
    assert ac_power_db([bb(np.full(100, 3.0) + np.tile([1.0, -1.0], 50))]) == pytest.approx(0.0)


def test_peak_lists_on_buried_and_clear_targets(plan_b, lpf_b):
    sc = scene(chirp_b(), leakage(), target(40.0, -20.0))
    blk = synthesize_if_block(sc, plan_b)
    spec = averaged_power_spectrum([proposed_downconvert(blk, plan_b, lpf_b)], sc.chirp)
    assert any(abs(p.range - 40.0) <= spec.resolution for p in detect_peaks(spec))
