"""Sharded CSV corpus files with a manifest and integrity hashes.

One corpus is a directory of CSV shards plus a manifest.json listing every
shard with its row count and a 64-bit content hash. The column order is
fixed and part of the public contract:

    notes,note_count,centroid,spread,skewness,kurtosis,
    icv_0..icv_11,dissonance,harmonicity,source_tag

`notes` is one quoted field of space-separated MIDI integers; floats are
written as their shortest round-trip decimal (Python repr), so parsing a
written file reproduces the records bit for bit.
"""

from __future__ import annotations

import csv
import glob as globlib
import hashlib
import json
from dataclasses import dataclass
from math import comb
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

from .chords import Voicing

FORMAT_VERSION = 1
DEFAULT_SHARD_SIZE = 1_000_000
MANIFEST_NAME = "manifest.json"

HEADER_FIELDS = (
    ("notes", "note_count", "centroid", "spread", "skewness", "kurtosis")
    + tuple(f"icv_{i}" for i in range(12))
    + ("dissonance", "harmonicity", "source_tag")
)
HEADER = ",".join(HEADER_FIELDS)

SOURCE_TAGS = ("exhaustive", "sampled")


class CorpusFormatError(Exception):
    """Base class for corpus file integrity problems."""


class HeaderMismatchError(CorpusFormatError):
    """A shard's header line does not match the format contract."""


class MalformedRowError(CorpusFormatError):
    """A shard contains an unparseable or invariant-violating row."""

    def __init__(self, path: Union[str, Path], row: int, reason: str):
        super().__init__(f"{path}: row {row}: {reason}")
        self.path = str(path)
        self.row = row
        self.reason = reason


class HashMismatchError(CorpusFormatError):
    """A shard's bytes do not match the hash recorded in the manifest."""


def content_hash(data: bytes) -> "hashlib.blake2b":
    """64-bit running content hash used for shard integrity."""
    return hashlib.blake2b(data, digest_size=8)


def format_csv_line(
    notes: Sequence[int],
    centroid: float,
    spread: float,
    skewness: float,
    kurtosis: float,
    icv: Sequence[int],
    dissonance: float,
    harmonicity: float,
    source_tag: str,
) -> str:
    """One corpus CSV line (no newline). Floats must be Python floats."""
    notes_s = " ".join(map(str, notes))
    icv_s = ",".join(map(str, icv))
    return (
        f'"{notes_s}",{len(notes)},{centroid!r},{spread!r},{skewness!r},'
        f"{kurtosis!r},{icv_s},{dissonance!r},{harmonicity!r},{source_tag}"
    )


@dataclass(frozen=True)
class CorpusRecord:
    """One corpus row: a voicing with its statistics and metrics."""

    notes: tuple[int, ...]
    note_count: int
    centroid: float
    spread: float
    skewness: float
    kurtosis: float
    icv: tuple[int, ...]
    dissonance: float
    harmonicity: float
    source_tag: str

    def validate(self) -> None:
        Voicing(self.notes)  # range / ordering / cardinality invariants
        if self.note_count != len(self.notes):
            raise ValueError(
                f"note_count {self.note_count} != len(notes) {len(self.notes)}"
            )
        if len(self.icv) != 12 or any(c < 0 for c in self.icv):
            raise ValueError(f"icv must be 12 non-negative counts: {self.icv}")
        if sum(self.icv) != comb(self.note_count, 2):
            raise ValueError(
                f"icv sums to {sum(self.icv)}, expected C({self.note_count},2)"
            )
        if self.dissonance < 0:
            raise ValueError(f"negative dissonance {self.dissonance}")
        if not 0.0 <= self.harmonicity <= 1.0:
            raise ValueError(f"harmonicity {self.harmonicity} outside [0, 1]")
        if self.source_tag not in SOURCE_TAGS:
            raise ValueError(f"unknown source_tag {self.source_tag!r}")

    def to_csv_line(self) -> str:
        return format_csv_line(
            self.notes,
            self.centroid,
            self.spread,
            self.skewness,
            self.kurtosis,
            self.icv,
            self.dissonance,
            self.harmonicity,
            self.source_tag,
        )

    @classmethod
    def from_csv_fields(cls, fields: Sequence[str]) -> "CorpusRecord":
        if len(fields) != len(HEADER_FIELDS):
            raise ValueError(
                f"expected {len(HEADER_FIELDS)} fields, got {len(fields)}"
            )
        return cls(
            notes=tuple(int(x) for x in fields[0].split()),
            note_count=int(fields[1]),
            centroid=float(fields[2]),
            spread=float(fields[3]),
            skewness=float(fields[4]),
            kurtosis=float(fields[5]),
            icv=tuple(int(x) for x in fields[6:18]),
            dissonance=float(fields[18]),
            harmonicity=float(fields[19]),
            source_tag=fields[20],
        )


class ShardWriter:
    """Streams newline-terminated CSV row bytes into fixed-size shards.

    Rows are split across shards purely by count, so the shard layout is a
    function of the row stream and shard_size alone. Use as a context
    manager: on error the partially written shard is removed.
    """

    def __init__(
        self,
        out_dir: Union[str, Path],
        shard_size: int = DEFAULT_SHARD_SIZE,
        prefix: str = "corpus",
    ):
        if shard_size < 1:
            raise ValueError("shard_size must be positive")
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.shard_size = shard_size
        self.prefix = prefix
        self.shards: list[dict] = []
        self.total_rows = 0
        self._file = None
        self._path: Path | None = None
        self._rows = 0
        self._hash = None

    def __enter__(self) -> "ShardWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            self.close()
        else:
            self.abort()

    def _open_next(self) -> None:
        index = len(self.shards)
        self._path = self.out_dir / f"{self.prefix}-{index:05d}.csv"
        try:
            self._file = open(self._path, "wb")
        except OSError as err:
            raise OSError(f"cannot open shard {self._path}: {err}") from err
        self._rows = 0
        header = (HEADER + "\n").encode("ascii")
        self._hash = content_hash(header)
        self._file.write(header)

    def _finish_current(self) -> None:
        if self._file is None:
            return
        self._file.close()
        self.shards.append(
            {
                "path": self._path.name,
                "rows": self._rows,
                "hash64": self._hash.hexdigest(),
            }
        )
        self._file = None

    def add_chunk(self, data: bytes, rows: int) -> None:
        """Append `rows` newline-terminated CSV lines held in `data`."""
        while rows:
            if self._file is None:
                self._open_next()
            room = self.shard_size - self._rows
            if rows <= room:
                self._file.write(data)
                self._hash.update(data)
                self._rows += rows
                self.total_rows += rows
                if self._rows == self.shard_size:
                    self._finish_current()
                return
            # split at the end of the room-th line
            cut = -1
            for _ in range(room):
                cut = data.index(b"\n", cut + 1)
            head, data = data[: cut + 1], data[cut + 1 :]
            self._file.write(head)
            self._hash.update(head)
            self._rows += room
            self.total_rows += room
            rows -= room
            self._finish_current()

    def add_records(self, records: Iterable[CorpusRecord], batch: int = 4096) -> None:
        lines: list[str] = []
        for record in records:
            lines.append(record.to_csv_line())
            if len(lines) == batch:
                self.add_chunk(("\n".join(lines) + "\n").encode("ascii"), len(lines))
                lines.clear()
        if lines:
            self.add_chunk(("\n".join(lines) + "\n").encode("ascii"), len(lines))

    def close(self) -> list[dict]:
        self._finish_current()
        return self.shards

    def abort(self) -> None:
        """Close and remove the partially written shard, keep finished ones."""
        if self._file is not None:
            self._file.close()
            self._file = None
            if self._path is not None:
                self._path.unlink(missing_ok=True)

    def manifest(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "header": HEADER,
            "shard_size": self.shard_size,
            "total_rows": self.total_rows,
            "shards": self.shards,
        }


def write_manifest(out_dir: Union[str, Path], manifest: dict) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    with open(path, "w", encoding="ascii") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_shards(
    records: Iterable[CorpusRecord],
    out_dir: Union[str, Path],
    shard_size: int = DEFAULT_SHARD_SIZE,
) -> dict:
    """Write records to CSV shards plus manifest.json; returns the manifest."""
    with ShardWriter(out_dir, shard_size) as writer:
        writer.add_records(records)
    manifest = writer.manifest()
    write_manifest(out_dir, manifest)
    return manifest


def load_manifest(path: Union[str, Path]) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    with open(path, "r", encoding="ascii") as f:
        manifest = json.load(f)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CorpusFormatError(
            f"{path}: unsupported format_version {manifest.get('format_version')}"
        )
    if manifest.get("header") != HEADER:
        raise HeaderMismatchError(f"{path}: manifest header does not match contract")
    return manifest


def _resolve_shards(
    source: Union[str, Path, Sequence[Union[str, Path]]],
) -> list[tuple[Path, Union[str, None]]]:
    """Resolve a manifest path / corpus dir / glob / path list to shard files.

    Returns (path, expected_hash_or_None) pairs in reading order.
    """
    if isinstance(source, (list, tuple)):
        return [(Path(p), None) for p in source]
    path = Path(source)
    if path.is_dir() or path.suffix == ".json":
        base = path if path.is_dir() else path.parent
        manifest = load_manifest(path)
        return [(base / s["path"], s["hash64"]) for s in manifest["shards"]]
    matches = sorted(globlib.glob(str(source)))
    if not matches:
        raise FileNotFoundError(f"no corpus files match {source!r}")
    return [(Path(p), None) for p in matches]


def _verify_hash(path: Path, expected: str) -> None:
    digest = hashlib.blake2b(digest_size=8)
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    if digest.hexdigest() != expected:
        raise HashMismatchError(
            f"{path}: content hash {digest.hexdigest()} != manifest {expected}"
        )


def read_shards(
    source: Union[str, Path, Sequence[Union[str, Path]]],
    verify_hashes: bool = False,
) -> Iterator[CorpusRecord]:
    """Stream records from a manifest path, corpus directory, glob, or file list.

    Shards are read in manifest (or sorted) order; each record is validated.
    With verify_hashes=True (requires a manifest), every shard's bytes are
    hashed before any of its records are yielded.
    """
    shards = _resolve_shards(source)
    for path, expected in shards:
        if verify_hashes:
            if expected is None:
                raise ValueError(
                    "verify_hashes requires reading through a manifest"
                )
            _verify_hash(path, expected)
        with open(path, "r", newline="", encoding="ascii") as f:
            header = f.readline().rstrip("\r\n")
            if header != HEADER:
                raise HeaderMismatchError(
                    f"{path}: header does not match the corpus contract"
                )
            reader = csv.reader(f)
            for row_no, fields in enumerate(reader, start=1):
                try:
                    record = CorpusRecord.from_csv_fields(fields)
                    record.validate()
                except (ValueError, IndexError) as err:
                    raise MalformedRowError(path, row_no, str(err)) from err
                yield record
