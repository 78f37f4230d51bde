"""Corpus generation: exhaustive enumeration and seeded Monte Carlo sampling.

Low cardinalities are enumerated exhaustively in lexicographic order of the
sorted note tuple. The enumerator exploits the structure of playable sets:
every playable set is exactly one lowest note m0, a first-hand part inside
(m0, m0 + HAND_SPAN], and an optional second-hand part that starts at the
first note above m0 + HAND_SPAN and fits one hand window. The second-hand
completions form contiguous-range combinations, so whole subtrees are
emitted as single array operations instead of per-tuple recursion.

High cardinalities are sampled: sorted note sets are drawn uniformly from
all C(keys, n) subsets in fixed-size batches, rejected unless playable and
previously unseen, and the accepted sets are emitted sorted by note tuple.
Streams are deterministic per (seed, cardinality, keyboard); each
cardinality uses an independent substream seeded with seed XOR cardinality.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterator, Optional

import numpy as np

from .chords import HAND_SPAN, KEYBOARD_HIGH, KEYBOARD_LOW, MAX_NOTES, Voicing, playable_mask

DEFAULT_SAMPLES = 1_000_000
DEFAULT_SEED = 42
DEFAULT_BLOCK_ROWS = 32_768

# Batch size of the rejection sampler. Fixed: the accepted stream for a given
# seed is defined in terms of draws made in batches of this size.
DRAW_BATCH = 65_536

# Consecutive no-progress batches tolerated before the sampler gives up.
MAX_STALL_BATCHES = 1_000


class ExhaustionError(ValueError):
    """Raised when more unique voicings are requested than exist."""


@dataclass(frozen=True)
class GenerationConfig:
    """Settings for one corpus generation run."""

    min_cardinality: int = 1
    max_cardinality: int = MAX_NOTES
    exhaustive_max: int = 5
    samples_per_cardinality: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    keyboard_low: int = KEYBOARD_LOW
    keyboard_high: int = KEYBOARD_HIGH

    def __post_init__(self) -> None:
        if not 1 <= self.min_cardinality <= self.max_cardinality <= MAX_NOTES:
            raise ValueError(
                f"need 1 <= min_cardinality <= max_cardinality <= {MAX_NOTES}, "
                f"got {self.min_cardinality}..{self.max_cardinality}"
            )
        if not 0 <= self.exhaustive_max <= MAX_NOTES:
            raise ValueError(f"exhaustive_max must be 0..{MAX_NOTES}")
        if self.samples_per_cardinality < 1:
            raise ValueError("samples_per_cardinality must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if not (
            KEYBOARD_LOW <= self.keyboard_low < self.keyboard_high <= KEYBOARD_HIGH
        ):
            raise ValueError(
                f"keyboard must satisfy {KEYBOARD_LOW} <= low < high <= {KEYBOARD_HIGH}, "
                f"got {self.keyboard_low}..{self.keyboard_high}"
            )

    def cardinalities(self) -> range:
        return range(self.min_cardinality, self.max_cardinality + 1)

    def is_exhaustive(self, cardinality: int) -> bool:
        return cardinality <= self.exhaustive_max


# --- counting ---------------------------------------------------------------


def count_for_lowest(cardinality: int, lowest: int, high: int = KEYBOARD_HIGH) -> int:
    """Number of playable sets of a cardinality whose lowest note is `lowest`."""
    n, m0 = cardinality, lowest
    if n == 1:
        return 1
    wa = min(m0 + HAND_SPAN, high) - m0  # keys available to the first hand
    total = comb(wa, n - 1)  # sets that fit one hand window
    for b in range(m0 + HAND_SPAN + 1, high + 1):
        wb = min(HAND_SPAN, high - b)  # keys available above the second anchor
        total += sum(comb(wa, j) * comb(wb, n - 2 - j) for j in range(n - 1))
    return total


def count_exhaustive(
    cardinality: int, low: int = KEYBOARD_LOW, high: int = KEYBOARD_HIGH
) -> int:
    """Number of playable sets of a cardinality on the given keyboard."""
    if not 1 <= cardinality <= MAX_NOTES:
        raise ValueError(f"cardinality must be 1..{MAX_NOTES}")
    return sum(count_for_lowest(cardinality, m0, high) for m0 in range(low, high + 1))


# --- exhaustive enumeration --------------------------------------------------

_COMB_CACHE: dict[tuple[int, int], np.ndarray] = {}
_SUFFIX_CACHE: dict[tuple[int, int, int], np.ndarray] = {}


def _comb_offsets(width: int, r: int) -> np.ndarray:
    """All r-subsets of range(width) as a (C(width, r), r) lexicographic array."""
    key = (width, r)
    table = _COMB_CACHE.get(key)
    if table is None:
        if r == 0:
            table = np.zeros((1, 0), dtype=np.int16)
        else:
            table = np.array(
                list(itertools.combinations(range(width), r)), dtype=np.int16
            )
        _COMB_CACHE[key] = table
    return table


def _suffix_table(r: int, low: int, high: int) -> np.ndarray:
    """All second-hand completions of length r, as rows [b, tail...].

    b runs over every key that can anchor a second hand; the tail is any
    (r-1)-subset of (b, b + HAND_SPAN] clipped to the keyboard. Rows are
    lexicographic; callers slice by their minimum allowed b.
    """
    key = (r, low, high)
    table = _SUFFIX_CACHE.get(key)
    if table is None:
        parts = []
        for b in range(low + HAND_SPAN + 1, high - (r - 1) + 1):
            tail = _comb_offsets(min(HAND_SPAN, high - b), r - 1)
            rows = np.empty((len(tail), r), dtype=np.int16)
            rows[:, 0] = b
            rows[:, 1:] = b + 1 + tail
            parts.append(rows)
        if parts:
            table = np.concatenate(parts)
        else:
            table = np.zeros((0, r), dtype=np.int16)
        _SUFFIX_CACHE[key] = table
    return table


def _emit_lowest(
    m0: int, cardinality: int, high: int, low: int
) -> Iterator[np.ndarray]:
    """Yield arrays of all playable sets with lowest note m0, in lex order."""
    n = cardinality
    if n == 1:
        yield np.array([[m0]], dtype=np.int16)
        return
    a_hi = min(m0 + HAND_SPAN, high)
    b_lo = m0 + HAND_SPAN + 1

    def descend(prefix: tuple[int, ...], remaining: int) -> Iterator[np.ndarray]:
        if remaining == 0:
            yield np.array([prefix], dtype=np.int16)
            return
        for c in range(prefix[-1] + 1, a_hi + 1):
            yield from descend(prefix + (c,), remaining - 1)
        suffixes = _suffix_table(remaining, low, high)
        if len(suffixes):
            start = np.searchsorted(suffixes[:, 0], b_lo)
            tail = suffixes[start:]
            if len(tail):
                rows = np.empty((len(tail), n), dtype=np.int16)
                rows[:, : len(prefix)] = prefix
                rows[:, len(prefix):] = tail
                yield rows

    yield from descend((m0,), n - 1)


def exhaustive_blocks(
    cardinality: int,
    low: int = KEYBOARD_LOW,
    high: int = KEYBOARD_HIGH,
    block_rows: int = DEFAULT_BLOCK_ROWS,
    lowest_range: Optional[tuple[int, int]] = None,
) -> Iterator[np.ndarray]:
    """Yield (B, cardinality) int16 blocks of every playable set, lex order.

    lowest_range optionally restricts the lowest note to [lo, hi]; tasks use
    it to split a cardinality across workers without changing the stream.
    """
    if not 1 <= cardinality <= MAX_NOTES:
        raise ValueError(f"cardinality must be 1..{MAX_NOTES}")
    lo, hi = lowest_range if lowest_range is not None else (low, high)
    buffer: list[np.ndarray] = []
    pending = 0
    for m0 in range(lo, hi + 1):
        for arr in _emit_lowest(m0, cardinality, high, low):
            buffer.append(arr)
            pending += len(arr)
        while pending >= block_rows:
            merged = buffer[0] if len(buffer) == 1 else np.concatenate(buffer)
            yield merged[:block_rows]
            rest = merged[block_rows:]
            buffer = [rest] if len(rest) else []
            pending = len(rest)
    if pending:
        yield buffer[0] if len(buffer) == 1 else np.concatenate(buffer)


def enumerate_exhaustive(config: GenerationConfig, cardinality: int) -> Iterator[Voicing]:
    """Every playable voicing of a cardinality, exactly once, lex order."""
    if cardinality > config.exhaustive_max:
        raise ValueError(
            f"cardinality {cardinality} exceeds exhaustive_max "
            f"{config.exhaustive_max}; use sample_monte_carlo"
        )
    for block in exhaustive_blocks(
        cardinality, config.keyboard_low, config.keyboard_high
    ):
        for row in block.tolist():
            yield Voicing(tuple(row))


# --- Monte Carlo sampling -----------------------------------------------------


def sample_array(
    cardinality: int,
    count: int,
    seed: int,
    low: int = KEYBOARD_LOW,
    high: int = KEYBOARD_HIGH,
) -> np.ndarray:
    """`count` distinct playable sets as a (count, cardinality) int16 array.

    Uniform over playable sets: sorted candidate subsets are drawn uniformly
    from all C(keys, n) subsets and rejected unless playable and new. Output
    rows are sorted by note tuple. Deterministic for fixed arguments; the
    per-cardinality stream is PCG64 seeded with (seed XOR cardinality).
    Sampling close to the full population is slow by construction; asking
    for more than exists raises ExhaustionError up front.
    """
    available = count_exhaustive(cardinality, low, high)
    if count > available:
        raise ExhaustionError(
            f"requested {count} unique voicings of cardinality {cardinality} "
            f"but only {available} playable sets exist on keys {low}..{high}"
        )
    rng = np.random.Generator(np.random.PCG64(seed ^ cardinality))
    nkeys = high - low + 1
    out = np.empty((count, cardinality), dtype=np.int16)
    seen: set[bytes] = set()
    taken = 0
    stalled = 0
    while taken < count:
        draws = rng.integers(0, nkeys, size=(DRAW_BATCH, cardinality))
        draws.sort(axis=1)
        if cardinality > 1:
            draws = draws[(np.diff(draws, axis=1) > 0).all(axis=1)]
        cand = (draws + low).astype(np.int16)
        cand = cand[playable_mask(cand)]
        before = taken
        for row in cand:
            key = row.tobytes()
            if key not in seen:
                seen.add(key)
                out[taken] = row
                taken += 1
                if taken == count:
                    break
        stalled = stalled + 1 if taken == before else 0
        if stalled >= MAX_STALL_BATCHES:
            raise ExhaustionError(
                f"sampler stalled after {MAX_STALL_BATCHES} empty batches "
                f"({taken}/{count} found, cardinality {cardinality})"
            )
    return out[np.lexsort(out.T[::-1])]


def sample_blocks(
    cardinality: int,
    count: int,
    seed: int,
    low: int = KEYBOARD_LOW,
    high: int = KEYBOARD_HIGH,
    block_rows: int = DEFAULT_BLOCK_ROWS,
) -> Iterator[np.ndarray]:
    """sample_array, re-chunked into annotation-sized blocks."""
    rows = sample_array(cardinality, count, seed, low, high)
    for start in range(0, len(rows), block_rows):
        yield rows[start : start + block_rows]


def sample_monte_carlo(config: GenerationConfig, cardinality: int) -> Iterator[Voicing]:
    """samples_per_cardinality distinct playable voicings of a cardinality."""
    if cardinality <= config.exhaustive_max:
        raise ValueError(
            f"cardinality {cardinality} is within exhaustive_max "
            f"{config.exhaustive_max}; use enumerate_exhaustive"
        )
    for block in sample_blocks(
        cardinality,
        config.samples_per_cardinality,
        config.seed,
        config.keyboard_low,
        config.keyboard_high,
    ):
        for row in block.tolist():
            yield Voicing(tuple(row))


# --- whole-corpus streams ------------------------------------------------------

EXHAUSTIVE_TAG = "exhaustive"
SAMPLED_TAG = "sampled"


def corpus_blocks(
    config: GenerationConfig, block_rows: int = DEFAULT_BLOCK_ROWS
) -> Iterator[tuple[int, str, np.ndarray]]:
    """Yield (cardinality, source_tag, block) across all configured tiers."""
    for n in config.cardinalities():
        if config.is_exhaustive(n):
            for block in exhaustive_blocks(
                n, config.keyboard_low, config.keyboard_high, block_rows
            ):
                yield n, EXHAUSTIVE_TAG, block
        else:
            for block in sample_blocks(
                n,
                config.samples_per_cardinality,
                config.seed,
                config.keyboard_low,
                config.keyboard_high,
                block_rows,
            ):
                yield n, SAMPLED_TAG, block


def generate_corpus(config: GenerationConfig) -> Iterator[Voicing]:
    """Every corpus voicing in deterministic order, all cardinalities."""
    for _, _, block in corpus_blocks(config):
        for row in block.tolist():
            yield Voicing(tuple(row))


def expected_counts(config: GenerationConfig) -> dict[int, int]:
    """Planned row count per cardinality for a config."""
    out = {}
    for n in config.cardinalities():
        if config.is_exhaustive(n):
            out[n] = count_exhaustive(n, config.keyboard_low, config.keyboard_high)
        else:
            out[n] = config.samples_per_cardinality
    return out
