"""Psychoacoustic scoring: pairwise sensory roughness and harmonic-series fit.

Roughness of a tone pair follows the classic two-exponential curve
d(x) = exp(-3.5 x) - exp(-5.75 x), where x is the frequency difference
scaled into critical-bandwidth units by s = 0.24 / (0.0207 * f_low + 18.96).
Chord dissonance is the sum of d over all note pairs, read from an 88 x 88
matrix precomputed for every piano key pair (cheap to rebuild, so it is
built on first use rather than shipped as data).

Harmonicity asks how closely the chord's frequencies sit on one harmonic
series. Candidate fundamentals are f_i / n for every chord frequency f_i and
n = 1..12; for each candidate the mean absolute distance of the frequency
ratios q_j = f_j / f0 from their nearest integers is taken, the best
candidate wins, and the score maps error 0 -> 1.0 and error >= 0.5 -> 0.0.
A best error below 1e-6 counts as an exact fit (score 1.0).

Known quirk, kept as defined: near-unison pairs score high harmonicity
(about 0.94 for a semitone) because both tones round to harmonic 1.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .chords import KEYBOARD_LOW, NoteSet, _as_note_tuple, frequency_table

# Roughness curve constants.
PL_DECAY_SLOW = 3.5
PL_DECAY_FAST = 5.75
PL_SCALE_NUM = 0.24
PL_SCALE_SLOPE = 0.0207
PL_SCALE_OFFSET = 18.96

# Harmonic-series fit constants.
MAX_HARMONIC = 12
EXACT_FIT_TOLERANCE = 1e-6

_MATRIX: Optional[np.ndarray] = None


def pl_pair_dissonance(f1: float, f2: float) -> float:
    """Sensory roughness of two pure tones at frequencies f1, f2 (Hz)."""
    if f1 <= 0 or f2 <= 0:
        raise ValueError(f"frequencies must be positive, got {f1}, {f2}")
    s = PL_SCALE_NUM / (PL_SCALE_SLOPE * min(f1, f2) + PL_SCALE_OFFSET)
    x = s * abs(f2 - f1)
    return float(np.exp(-PL_DECAY_SLOW * x) - np.exp(-PL_DECAY_FAST * x))


def build_dissonance_matrix() -> np.ndarray:
    """88 x 88 pairwise roughness of all piano keys, indexed by midi - 21.

    Symmetric with an exactly zero diagonal. The returned array is
    read-only and shared by all callers.
    """
    global _MATRIX
    if _MATRIX is None:
        f = frequency_table()
        f_low = np.minimum.outer(f, f)
        diff = np.abs(np.subtract.outer(f, f))
        x = PL_SCALE_NUM / (PL_SCALE_SLOPE * f_low + PL_SCALE_OFFSET) * diff
        matrix = np.exp(-PL_DECAY_SLOW * x) - np.exp(-PL_DECAY_FAST * x)
        matrix.setflags(write=False)
        _MATRIX = matrix
    return _MATRIX


def dissonance_block(rows: np.ndarray, matrix: Optional[np.ndarray] = None) -> np.ndarray:
    """Total dissonance for a block of same-cardinality voicings.

    rows: (B, n) integer MIDI array. Returns (B,) float64 sums over all
    unordered note pairs.
    """
    if matrix is None:
        matrix = build_dissonance_matrix()
    rows = np.asarray(rows)
    b, n = rows.shape
    if n < 2:
        return np.zeros(b, dtype=np.float64)
    idx = rows.astype(np.int64) - KEYBOARD_LOW
    iu, ju = np.triu_indices(n, k=1)
    return matrix[idx[:, iu], idx[:, ju]].sum(axis=1)


def chord_dissonance(voicing: NoteSet, matrix: Optional[np.ndarray] = None) -> float:
    """Sum of pairwise roughness over all note pairs of one voicing."""
    notes = _as_note_tuple(voicing)
    return float(dissonance_block(np.array([notes]), matrix)[0])


def harmonicity_block(rows: np.ndarray) -> np.ndarray:
    """Harmonic-series fit for a block of same-cardinality voicings.

    rows: (B, n) integer MIDI array. Returns (B,) float64 scores in [0, 1].
    """
    rows = np.asarray(rows)
    b, n = rows.shape
    freqs = frequency_table()[rows.astype(np.int64) - KEYBOARD_LOW]  # (B, n)
    best = np.full(b, np.inf)
    for harmonic in range(1, MAX_HARMONIC + 1):
        # candidate f0 = freqs[:, i] / harmonic; q_j = freqs[:, j] / f0
        q = harmonic * (freqs[:, None, :] / freqs[:, :, None])  # (B, cand, j)
        # round half away from zero; q is always positive
        err = np.abs(q - np.floor(q + 0.5)).mean(axis=2)
        np.minimum(best, err.min(axis=1), out=best)
    return np.where(best < EXACT_FIT_TOLERANCE, 1.0, 1.0 - 2.0 * np.clip(best, 0.0, 0.5))


def harmonicity(voicing: NoteSet) -> float:
    """Best-fundamental harmonic fit of one voicing, in [0, 1]."""
    notes = _as_note_tuple(voicing)
    return float(harmonicity_block(np.array([notes]))[0])
