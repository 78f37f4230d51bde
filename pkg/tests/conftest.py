"""Shared test oracles, implemented independently of the package.

Everything here recomputes expected values from first principles (brute
force, direct formula evaluation) so the production code is checked against
a second, unrelated implementation path.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

# One hand reaches an inclusive span of 18 semitones (a 19-key window).
ORACLE_HAND_SPAN = 18


def oracle_playable(notes) -> bool:
    """Brute force: try every bipartition into two non-empty hands."""
    notes = sorted(notes)
    n = len(notes)
    if n == 1:
        return True
    for mask in range(1, 2**n - 1):
        left = [notes[i] for i in range(n) if mask & (1 << i)]
        right = [notes[i] for i in range(n) if not mask & (1 << i)]
        if (
            left[-1] - left[0] <= ORACLE_HAND_SPAN
            and right[-1] - right[0] <= ORACLE_HAND_SPAN
        ):
            return True
    return False


def oracle_enumerate(low: int, high: int, n: int) -> set[tuple[int, ...]]:
    """All playable n-subsets of [low, high] by exhaustive filtering."""
    return {
        combo
        for combo in itertools.combinations(range(low, high + 1), n)
        if oracle_playable(combo)
    }


def oracle_frequency(midi: int) -> float:
    return 440.0 * 2.0 ** ((midi - 69) / 12.0)


def oracle_pair_dissonance(f1: float, f2: float) -> float:
    s = 0.24 / (0.0207 * min(f1, f2) + 18.96)
    x = s * abs(f2 - f1)
    return math.exp(-3.5 * x) - math.exp(-5.75 * x)


def oracle_chord_dissonance(notes) -> float:
    return sum(
        oracle_pair_dissonance(oracle_frequency(a), oracle_frequency(b))
        for a, b in itertools.combinations(sorted(notes), 2)
    )


def oracle_harmonicity(notes) -> float:
    freqs = [oracle_frequency(m) for m in notes]
    k = len(freqs)
    best = math.inf
    for f_i in freqs:
        for n in range(1, 13):
            f0 = f_i / n
            err = sum(abs(q - math.floor(q + 0.5)) for q in (f / f0 for f in freqs)) / k
            best = min(best, err)
    if best < 1e-6:
        return 1.0
    return 1.0 - 2.0 * min(max(best, 0.0), 0.5)


def oracle_icv(notes) -> list[int]:
    counts = [0] * 12
    for a, b in itertools.combinations(sorted(notes), 2):
        counts[(b - a) % 12] += 1
    return counts


def random_note_rows(
    rng: np.random.Generator, count: int, cardinality: int, low: int = 21, high: int = 108
) -> np.ndarray:
    """(count, cardinality) sorted random note sets (not necessarily playable)."""
    keys = np.arange(low, high + 1)
    rows = np.empty((count, cardinality), dtype=np.int16)
    for i in range(count):
        rows[i] = np.sort(rng.choice(keys, size=cardinality, replace=False))
    return rows


def random_voicings(
    rng: np.random.Generator,
    count: int,
    low: int = 21,
    high: int = 108,
    max_cardinality: int = 10,
) -> list[tuple[int, ...]]:
    """Random note sets of mixed cardinality (1..max_cardinality)."""
    keys = np.arange(low, high + 1)
    out = []
    for _ in range(count):
        n = int(rng.integers(1, max_cardinality + 1))
        out.append(tuple(int(x) for x in np.sort(rng.choice(keys, size=n, replace=False))))
    return out


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20250810)
