"""Voicing-shape statistics: moment descriptors and the interval-class vector.

The MIDI notes of a voicing are treated as a plain distribution of numbers.
Centroid is the mean pitch, spread the range (max - min), skewness and
kurtosis the population-weighted standardized third and fourth moments
(kurtosis reported as excess, i.e. minus 3). Single notes have no shape:
they get skewness 0 and kurtosis -3 as sentinels.

The interval-class vector (icv) has 12 bins: for every unordered pair of
notes, bin (higher - lower) mod 12 is incremented, so bin 0 counts pairs
separated by whole octaves and the bins sum to C(n, 2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .chords import NoteSet, Voicing, _as_note_tuple

# Degenerate-distribution threshold for the sentinel branch. Distinct integer
# notes guarantee sigma >= 0.5, so only single notes ever trigger it.
SIGMA_FLOOR = 1e-9

SKEWNESS_SENTINEL = 0.0
KURTOSIS_SENTINEL = -3.0


class Moments(NamedTuple):
    centroid: float
    spread: float
    skewness: float
    kurtosis: float


@dataclass(frozen=True)
class VoicingFeatures:
    """All shape statistics of one voicing."""

    centroid: float
    spread: float
    skewness: float
    kurtosis: float
    note_count: int
    icv: tuple[int, ...]


def moments_block(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Population moments for a block of same-cardinality voicings.

    rows: (B, n) integer array, rows ascending. Returns float64 arrays
    (centroid, spread, skewness, kurtosis), each of shape (B,).
    """
    rows = np.asarray(rows, dtype=np.float64)
    b, n = rows.shape
    centroid = rows.mean(axis=1)
    spread = rows[:, -1] - rows[:, 0]
    if n < 2:
        return (
            centroid,
            spread,
            np.full(b, SKEWNESS_SENTINEL),
            np.full(b, KURTOSIS_SENTINEL),
        )
    dev = rows - centroid[:, None]
    sigma = np.sqrt((dev * dev).mean(axis=1))
    degenerate = sigma < SIGMA_FLOOR
    z = dev / np.where(degenerate, 1.0, sigma)[:, None]
    z3 = z * z * z
    skewness = np.where(degenerate, SKEWNESS_SENTINEL, z3.mean(axis=1))
    kurtosis = np.where(degenerate, KURTOSIS_SENTINEL, (z3 * z).mean(axis=1) - 3.0)
    return centroid, spread, skewness, kurtosis


def icv_block(rows: np.ndarray) -> np.ndarray:
    """Interval-class vectors for a block of same-cardinality voicings.

    rows: (B, n) integer array, rows ascending. Returns (B, 12) int64 counts.
    """
    rows = np.asarray(rows)
    b, n = rows.shape
    if n < 2:
        return np.zeros((b, 12), dtype=np.int64)
    iu, ju = np.triu_indices(n, k=1)
    classes = (rows[:, ju].astype(np.int64) - rows[:, iu].astype(np.int64)) % 12
    flat = (np.arange(b, dtype=np.int64)[:, None] * 12 + classes).ravel()
    return np.bincount(flat, minlength=b * 12).reshape(b, 12)


def compute_moments(voicing: NoteSet) -> Moments:
    """(centroid, spread, skewness, kurtosis) of one voicing."""
    notes = _as_note_tuple(voicing)
    c, s, sk, ku = moments_block(np.array([notes]))
    return Moments(float(c[0]), float(s[0]), float(sk[0]), float(ku[0]))


def compute_icv(voicing: NoteSet) -> tuple[int, ...]:
    """12-bin interval-class vector of one voicing."""
    notes = _as_note_tuple(voicing)
    return tuple(int(x) for x in icv_block(np.array([notes]))[0])


def compute_features(voicing: NoteSet) -> VoicingFeatures:
    notes = _as_note_tuple(voicing)
    m = compute_moments(notes)
    return VoicingFeatures(
        centroid=m.centroid,
        spread=m.spread,
        skewness=m.skewness,
        kurtosis=m.kurtosis,
        note_count=len(notes),
        icv=compute_icv(notes),
    )
