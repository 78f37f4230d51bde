"""Streaming generate -> annotate -> shard pipeline.

Generation work is cut into an ordered list of tasks (a sampled cardinality,
or a slice of an exhaustive cardinality keyed by lowest note). Tasks are
independent and deterministic, so they can run on any number of workers;
the parent consumes their output strictly in task order and slices it into
shards purely by row count. The written bytes are therefore identical for
any --jobs value.
"""

from __future__ import annotations

import multiprocessing
import shutil
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from .corpus_io import DEFAULT_SHARD_SIZE, ShardWriter, format_csv_line, write_manifest
from .features import icv_block, moments_block
from .generate import (
    DEFAULT_BLOCK_ROWS,
    EXHAUSTIVE_TAG,
    SAMPLED_TAG,
    GenerationConfig,
    count_for_lowest,
    exhaustive_blocks,
    sample_blocks,
)
from .psycho import dissonance_block, harmonicity_block

# Rough number of rows per exhaustive task; big enough to amortize process
# overhead, small enough to spread a 13M-row cardinality over many workers.
TARGET_TASK_ROWS = 262_144


def annotate_block(rows: np.ndarray) -> dict[str, np.ndarray]:
    """All derived columns for a (B, n) block of voicings."""
    centroid, spread, skewness, kurtosis = moments_block(rows)
    return {
        "centroid": centroid,
        "spread": spread,
        "skewness": skewness,
        "kurtosis": kurtosis,
        "icv": icv_block(rows),
        "dissonance": dissonance_block(rows),
        "harmonicity": harmonicity_block(rows),
    }


def format_block(rows: np.ndarray, source_tag: str) -> bytes:
    """Annotate a block and render it as newline-terminated CSV lines."""
    ann = annotate_block(rows)
    notes = rows.tolist()
    centroid = ann["centroid"].tolist()
    spread = ann["spread"].tolist()
    skewness = ann["skewness"].tolist()
    kurtosis = ann["kurtosis"].tolist()
    icv = ann["icv"].tolist()
    dissonance = ann["dissonance"].tolist()
    harmonicity = ann["harmonicity"].tolist()
    lines = [
        format_csv_line(
            notes[i],
            centroid[i],
            spread[i],
            skewness[i],
            kurtosis[i],
            icv[i],
            dissonance[i],
            harmonicity[i],
            source_tag,
        )
        for i in range(len(notes))
    ]
    return ("\n".join(lines) + "\n").encode("ascii")


@dataclass(frozen=True)
class GenerationTask:
    """One independent, deterministic slice of corpus generation."""

    cardinality: int
    source_tag: str
    keyboard_low: int
    keyboard_high: int
    lowest_range: Optional[tuple[int, int]] = None  # exhaustive slices only
    sample_count: int = 0  # sampled tasks only
    seed: int = 0


def build_tasks(config: GenerationConfig) -> list[GenerationTask]:
    """Ordered task list covering the whole configured corpus."""
    tasks: list[GenerationTask] = []
    for n in config.cardinalities():
        if config.is_exhaustive(n):
            tasks.extend(_exhaustive_tasks(config, n))
        else:
            tasks.append(
                GenerationTask(
                    cardinality=n,
                    source_tag=SAMPLED_TAG,
                    keyboard_low=config.keyboard_low,
                    keyboard_high=config.keyboard_high,
                    sample_count=config.samples_per_cardinality,
                    seed=config.seed,
                )
            )
    return tasks


def _exhaustive_tasks(config: GenerationConfig, n: int) -> list[GenerationTask]:
    low, high = config.keyboard_low, config.keyboard_high
    tasks = []
    start = low
    acc = 0
    for m0 in range(low, high + 1):
        acc += count_for_lowest(n, m0, high)
        if acc >= TARGET_TASK_ROWS and m0 < high:
            tasks.append(
                GenerationTask(
                    cardinality=n,
                    source_tag=EXHAUSTIVE_TAG,
                    keyboard_low=low,
                    keyboard_high=high,
                    lowest_range=(start, m0),
                )
            )
            start, acc = m0 + 1, 0
    tasks.append(
        GenerationTask(
            cardinality=n,
            source_tag=EXHAUSTIVE_TAG,
            keyboard_low=low,
            keyboard_high=high,
            lowest_range=(start, high),
        )
    )
    return tasks


def task_chunks(
    task: GenerationTask, block_rows: int = DEFAULT_BLOCK_ROWS
) -> Iterator[tuple[bytes, int]]:
    """Yield (csv_bytes, row_count) chunks of one task, in order."""
    if task.source_tag == EXHAUSTIVE_TAG:
        blocks = exhaustive_blocks(
            task.cardinality,
            task.keyboard_low,
            task.keyboard_high,
            block_rows,
            task.lowest_range,
        )
    else:
        blocks = sample_blocks(
            task.cardinality,
            task.sample_count,
            task.seed,
            task.keyboard_low,
            task.keyboard_high,
            block_rows,
        )
    for block in blocks:
        yield format_block(block, task.source_tag), len(block)


def _task_to_part(args: tuple[int, GenerationTask, str, int]) -> tuple[int, str, int]:
    """Worker entry: render one task into a part file (no header)."""
    index, task, parts_dir, block_rows = args
    path = Path(parts_dir) / f"part-{index:05d}.csv"
    rows = 0
    with open(path, "wb") as f:
        for data, count in task_chunks(task, block_rows):
            f.write(data)
            rows += count
    return index, str(path), rows


def run_generate(
    config: GenerationConfig,
    out_dir: Union[str, Path],
    shard_size: int = DEFAULT_SHARD_SIZE,
    jobs: int = 1,
    block_rows: int = DEFAULT_BLOCK_ROWS,
) -> dict:
    """Generate, annotate and shard the configured corpus.

    Returns a summary dict with per-cardinality row counts and the written
    corpus manifest. Output bytes are independent of `jobs`.
    """
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = build_tasks(config)
    counts: dict[int, int] = {n: 0 for n in config.cardinalities()}

    with ShardWriter(out_dir, shard_size) as writer:
        if jobs == 1:
            for task in tasks:
                for data, rows in task_chunks(task, block_rows):
                    writer.add_chunk(data, rows)
                    counts[task.cardinality] += rows
        else:
            parts_dir = out_dir / f".parts-{uuid.uuid4().hex[:8]}"
            parts_dir.mkdir()
            try:
                work = [
                    (i, task, str(parts_dir), block_rows)
                    for i, task in enumerate(tasks)
                ]
                with multiprocessing.Pool(processes=jobs) as pool:
                    for index, part_path, rows in pool.imap(_task_to_part, work):
                        counts[tasks[index].cardinality] += rows
                        _stream_part(writer, Path(part_path), rows)
            finally:
                shutil.rmtree(parts_dir, ignore_errors=True)
    manifest = writer.manifest()
    manifest_path = write_manifest(out_dir, manifest)
    return {
        "total_rows": writer.total_rows,
        "cardinality_counts": counts,
        "manifest": manifest,
        "manifest_path": str(manifest_path),
        "shard_paths": [str(out_dir / s["path"]) for s in manifest["shards"]],
    }


def _stream_part(writer: ShardWriter, path: Path, rows: int) -> None:
    # add_chunk requires whole lines, so carry any partial trailing line
    # into the next read.
    remaining = rows
    carry = b""
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 24), b""):
            data = carry + chunk
            cut = data.rfind(b"\n")
            if cut < 0:
                carry = data
                continue
            head, carry = data[: cut + 1], data[cut + 1 :]
            n = head.count(b"\n")
            writer.add_chunk(head, n)
            remaining -= n
    if carry or remaining != 0:
        raise RuntimeError(f"part file {path} is truncated or miscounted")
    path.unlink()
