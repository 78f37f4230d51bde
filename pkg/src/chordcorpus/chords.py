"""Chord data model for the 88-key piano and the two-hand playability test.

A voicing is a strictly ascending set of MIDI notes: the sonic event,
identified by which keys sound, not by which hand presses them. A voicing is
playable when its notes can be split between two hands such that each hand
stays inside its reach window. One hand covers at most a 19-key window, i.e.
max - min <= 18 semitones (1.5 octaves). Hands may overlap freely in pitch,
so playability is a property of the note set alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

KEYBOARD_LOW = 21    # A0
KEYBOARD_HIGH = 108  # C8
NUM_KEYS = KEYBOARD_HIGH - KEYBOARD_LOW + 1

# Reach of one hand, inclusive: max - min <= HAND_SPAN semitones.
# 18 semitones = a 19-key window = 1.5 octaves.
HAND_SPAN = 18

MAX_NOTES = 10

A4_MIDI = 69
A4_HZ = 440.0

NoteSet = Union["Voicing", Sequence[int]]


def midi_to_frequency(note: int) -> float:
    """12-TET frequency in Hz (A4 = 440 Hz) of a piano-range MIDI note.

    Raises ValueError for notes outside the 88-key range.
    """
    if not KEYBOARD_LOW <= note <= KEYBOARD_HIGH:
        raise ValueError(
            f"MIDI note {note} outside piano range {KEYBOARD_LOW}..{KEYBOARD_HIGH}"
        )
    return A4_HZ * 2.0 ** ((note - A4_MIDI) / 12.0)


def frequency_table() -> np.ndarray:
    """Frequencies of all 88 keys, indexed by (midi - KEYBOARD_LOW)."""
    notes = np.arange(KEYBOARD_LOW, KEYBOARD_HIGH + 1, dtype=np.float64)
    return A4_HZ * 2.0 ** ((notes - A4_MIDI) / 12.0)


@dataclass(frozen=True)
class Voicing:
    """A strictly ascending tuple of piano MIDI notes (1 to 10 of them)."""

    notes: tuple[int, ...]

    def __post_init__(self) -> None:
        n = self.notes
        if not 1 <= len(n) <= MAX_NOTES:
            raise ValueError(f"voicing must have 1..{MAX_NOTES} notes, got {len(n)}")
        if any(b <= a for a, b in zip(n, n[1:])):
            raise ValueError(f"notes must be strictly ascending: {n}")
        if n[0] < KEYBOARD_LOW or n[-1] > KEYBOARD_HIGH:
            raise ValueError(
                f"notes must lie in {KEYBOARD_LOW}..{KEYBOARD_HIGH}: {n}"
            )

    @classmethod
    def from_iterable(cls, notes: Iterable[int]) -> "Voicing":
        """Build a voicing from any iterable of MIDI ints (sorted, deduplicated)."""
        return cls(tuple(sorted(set(int(m) for m in notes))))

    @property
    def note_count(self) -> int:
        return len(self.notes)

    def __iter__(self):
        return iter(self.notes)


@dataclass(frozen=True)
class HandAssignment:
    """A split of a voicing's notes into left and right hands.

    Both hands are non-empty and each spans at most HAND_SPAN semitones.
    For single-note voicings both hands may hold the same key.
    """

    left: tuple[int, ...]
    right: tuple[int, ...]

    def __post_init__(self) -> None:
        for name, hand in (("left", self.left), ("right", self.right)):
            if not hand:
                raise ValueError(f"{name} hand must hold at least one note")
            if hand[-1] - hand[0] > HAND_SPAN:
                raise ValueError(
                    f"{name} hand spans {hand[-1] - hand[0]} > {HAND_SPAN}: {hand}"
                )


def _as_note_tuple(notes: NoteSet) -> tuple[int, ...]:
    if isinstance(notes, Voicing):
        return notes.notes
    ns = tuple(int(m) for m in notes)
    if not ns:
        raise ValueError("empty note set")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError(f"notes must be strictly ascending: {ns}")
    if ns[0] < KEYBOARD_LOW or ns[-1] > KEYBOARD_HIGH:
        raise ValueError(f"notes must lie in {KEYBOARD_LOW}..{KEYBOARD_HIGH}: {ns}")
    return ns


def is_playable(notes: NoteSet) -> bool:
    """True iff the note set fits two hands of HAND_SPAN reach each.

    Greedy rule: anchor one hand at the lowest note; everything above that
    hand's window must itself fit in one window. Equivalent to trying all
    bipartitions (the lowest note pins one window, and any notes above it
    that don't fit that window are forced into the other hand).
    """
    ns = _as_note_tuple(notes)
    if ns[-1] - ns[0] <= HAND_SPAN:
        return True
    limit = ns[0] + HAND_SPAN
    for m in ns:
        if m > limit:
            return ns[-1] - m <= HAND_SPAN
    raise AssertionError("unreachable")  # span > HAND_SPAN implies a note above limit


def hand_assignment(notes: NoteSet) -> Optional[HandAssignment]:
    """A witness split for a playable set, or None if unplayable.

    Deterministic choice: the left hand is anchored at the lowest note and
    takes every note its window can hold; the right hand takes the rest.
    When everything fits one window, the right hand takes the top note so
    both hands play (single notes put the same key in both hands).
    """
    ns = _as_note_tuple(notes)
    if len(ns) == 1:
        return HandAssignment(left=ns, right=ns)
    limit = ns[0] + HAND_SPAN
    upper = tuple(m for m in ns if m > limit)
    if not upper:
        return HandAssignment(left=ns[:-1], right=ns[-1:])
    if upper[-1] - upper[0] > HAND_SPAN:
        return None
    return HandAssignment(left=tuple(m for m in ns if m <= limit), right=upper)


def playable_mask(rows: np.ndarray) -> np.ndarray:
    """Vectorized playability test over sorted note rows.

    rows: (B, n) integer array, each row strictly ascending. Returns a (B,)
    boolean mask applying the same greedy rule as is_playable.
    """
    rows = np.asarray(rows)
    if rows.ndim != 2:
        raise ValueError(f"expected (B, n) array, got shape {rows.shape}")
    one_hand = rows[:, -1] - rows[:, 0] <= HAND_SPAN
    if rows.shape[1] < 2:
        return np.ones(len(rows), dtype=bool)
    above = rows > rows[:, :1] + HAND_SPAN
    # lowest note of the forced upper hand (sentinel where nothing is above)
    big = np.iinfo(rows.dtype).max
    upper_min = np.where(above, rows, big).min(axis=1)
    two_hands = above.any(axis=1) & (rows[:, -1] - upper_min <= HAND_SPAN)
    return one_hand | two_hands
