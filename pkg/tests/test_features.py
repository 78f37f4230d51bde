"""Voicing statistics against a scipy oracle and by their symmetries."""

import numpy as np
import pytest
import scipy.stats

from chordcorpus.features import (
    compute_features,
    compute_icv,
    compute_moments,
    icv_block,
    moments_block,
)

from conftest import oracle_icv, random_voicings


def scipy_moments(notes):
    v = np.asarray(notes, dtype=np.float64)
    if len(v) < 2:
        return v.mean(), 0.0, 0.0, -3.0
    return (
        v.mean(),
        v.max() - v.min(),
        scipy.stats.skew(v, bias=True),
        scipy.stats.kurtosis(v, bias=True),  # population excess kurtosis
    )


def test_single_note_sentinels():
    assert compute_moments([60]) == (60.0, 0.0, 0.0, -3.0)


def test_two_note_moments_exact():
    c, s, sk, ku = compute_moments([60, 67])
    assert (c, s) == (63.5, 7.0)
    assert sk == 0.0
    assert ku == -2.0  # exactly, for any two-point distribution


def test_all_pairs_kurtosis_exactly_minus_two():
    pairs = np.array(
        [(a, b) for a in range(21, 109) for b in range(a + 1, 109)], dtype=np.int16
    )
    _, _, skew, kurt = moments_block(pairs)
    assert np.all(skew == 0.0)
    assert np.all(kurt == -2.0)


def test_symmetric_voicing_zero_skew():
    assert compute_moments([60, 62, 64]).skewness == 0.0


def test_major_triad_skewness():
    m = compute_moments([60, 64, 67])
    assert m.skewness == pytest.approx(-0.173, abs=1e-3)
    assert m.centroid == pytest.approx(63.667, abs=1e-3)


def test_moments_match_scipy_oracle(rng):
    for notes in random_voicings(rng, 1000):
        got = compute_moments(notes)
        want = scipy_moments(notes)
        assert got.centroid == pytest.approx(want[0], abs=1e-9)
        assert got.spread == pytest.approx(want[1], abs=1e-9)
        assert got.skewness == pytest.approx(want[2], abs=1e-9)
        assert got.kurtosis == pytest.approx(want[3], abs=1e-9)


def test_kurtosis_lower_bound(rng):
    for notes in random_voicings(rng, 500):
        if len(notes) >= 2:
            assert compute_moments(notes).kurtosis >= -2.0 - 1e-12


def test_icv_examples():
    assert compute_icv([60]) == (0,) * 12
    icv = compute_icv([60, 64, 67])
    assert icv[3] == 1 and icv[4] == 1 and icv[7] == 1
    assert sum(icv) == 3
    assert compute_icv([60, 72]) == (1,) + (0,) * 11
    assert sum(compute_icv([48, 55, 60, 64])) == 6


def test_icv_matches_oracle_and_pair_count(rng):
    for notes in random_voicings(rng, 800):
        icv = compute_icv(notes)
        assert list(icv) == oracle_icv(notes)
        n = len(notes)
        assert sum(icv) == n * (n - 1) // 2


def test_transposition_invariance(rng):
    for notes in random_voicings(rng, 400, low=30, high=96):
        base = compute_moments(notes)
        base_icv = compute_icv(notes)
        for k in (-7, 5):
            shifted = tuple(m + k for m in notes)
            if shifted[0] < 21 or shifted[-1] > 108:
                continue
            got = compute_moments(shifted)
            assert got.centroid == pytest.approx(base.centroid + k, abs=1e-9)
            assert got.spread == base.spread
            assert got.skewness == pytest.approx(base.skewness, abs=1e-9)
            assert got.kurtosis == pytest.approx(base.kurtosis, abs=1e-9)
            assert compute_icv(shifted) == base_icv


def test_reflection_negates_skewness(rng):
    for notes in random_voicings(rng, 400):
        c = notes[0] + notes[-1]
        reflected = tuple(sorted(c - m for m in notes))
        base = compute_moments(notes)
        mirror = compute_moments(reflected)
        assert mirror.skewness == pytest.approx(-base.skewness, abs=1e-9)
        assert mirror.spread == base.spread
        assert mirror.kurtosis == pytest.approx(base.kurtosis, abs=1e-9)


def test_block_matches_scalar(rng):
    rows = np.array(
        [sorted(rng.choice(np.arange(21, 109), size=4, replace=False)) for _ in range(200)],
        dtype=np.int16,
    )
    cent, spread, skew, kurt = moments_block(rows)
    icv = icv_block(rows)
    for i, row in enumerate(rows.tolist()):
        m = compute_moments(row)
        assert cent[i] == m.centroid
        assert spread[i] == m.spread
        assert skew[i] == m.skewness
        assert kurt[i] == m.kurtosis
        assert tuple(icv[i].tolist()) == compute_icv(row)


def test_compute_features_bundle():
    f = compute_features([60, 64, 67])
    assert f.note_count == 3
    assert f.spread == 7.0
    assert f.icv[4] == 1
