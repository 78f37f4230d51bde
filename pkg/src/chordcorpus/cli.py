"""Command-line entry point: generate, analyze, score.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error. All
randomness flows from explicit --seed flags; identical flags give
byte-identical output files regardless of --jobs.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_PERMUTATIONS,
    DEFAULT_TEST,
    DEFAULT_TRAIN,
    DesignMatrix,
    run_two_model_protocol,
    stratified_sample_indices,
)
from .chords import KEYBOARD_HIGH, KEYBOARD_LOW, is_playable
from .corpus_io import (
    DEFAULT_SHARD_SIZE,
    CorpusFormatError,
    read_shards,
)
from .generate import DEFAULT_SAMPLES, DEFAULT_SEED, GenerationConfig
from .pipeline import annotate_block, run_generate

SCORE_HEADER = (
    "notes,note_count,playable,centroid,spread,skewness,kurtosis,"
    + ",".join(f"icv_{i}" for i in range(12))
    + ",dissonance,harmonicity"
)


class InputDataError(Exception):
    """Bad data encountered at runtime (exit code 1, not a usage error)."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chordcorpus",
        description="Generate, annotate and analyze the playable piano chord corpus.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write an annotated corpus as CSV shards")
    gen.add_argument("--min-notes", type=int, default=1)
    gen.add_argument("--max-notes", type=int, default=10)
    gen.add_argument(
        "--exhaustive-max",
        type=int,
        default=5,
        help="enumerate cardinalities up to this size, sample above it",
    )
    gen.add_argument(
        "--samples",
        type=int,
        default=DEFAULT_SAMPLES,
        help="Monte Carlo samples per cardinality above --exhaustive-max",
    )
    gen.add_argument("--seed", type=int, default=DEFAULT_SEED)
    gen.add_argument("--out", required=True, help="output corpus directory")
    gen.add_argument(
        "--shards",
        type=int,
        default=DEFAULT_SHARD_SIZE,
        metavar="ROWS",
        help="rows per shard file",
    )
    gen.add_argument("--jobs", type=int, default=1, help="worker processes")
    gen.set_defaults(func=cmd_generate)

    ana = sub.add_parser("analyze", help="run the two-model regression protocol")
    ana.add_argument(
        "--corpus", required=True, help="corpus directory, manifest path, or CSV glob"
    )
    ana.add_argument(
        "--target", required=True, choices=("dissonance", "harmonicity")
    )
    ana.add_argument("--train", type=int, default=DEFAULT_TRAIN)
    ana.add_argument("--test", type=int, default=DEFAULT_TEST)
    ana.add_argument("--permutations", type=int, default=DEFAULT_PERMUTATIONS)
    ana.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ana.add_argument(
        "--out",
        default=None,
        help="report directory (default: analysis-<target> in the cwd)",
    )
    ana.set_defaults(func=cmd_analyze)

    score = sub.add_parser(
        "score", help="score chords given as lines of space-separated MIDI notes"
    )
    score.add_argument(
        "--in",
        dest="infile",
        default=None,
        help="input file (default: stdin)",
    )
    score.set_defaults(func=cmd_score)
    return parser


def _hash_file(path: Path) -> str:
    digest = hashlib.blake2b(digest_size=8)
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def cmd_generate(args: argparse.Namespace) -> int:
    config = GenerationConfig(
        min_cardinality=args.min_notes,
        max_cardinality=args.max_notes,
        exhaustive_max=args.exhaustive_max,
        samples_per_cardinality=args.samples,
        seed=args.seed,
    )
    if args.shards < 1:
        raise ValueError("--shards must be positive")
    started = time.time()
    summary = run_generate(
        config, args.out, shard_size=args.shards, jobs=args.jobs
    )
    wall = time.time() - started

    out_dir = Path(args.out)
    outputs = [
        {"path": s["path"], "rows": s["rows"], "hash64": s["hash64"]}
        for s in summary["manifest"]["shards"]
    ]
    outputs.append(
        {
            "path": Path(summary["manifest_path"]).name,
            "rows": None,
            "hash64": _hash_file(Path(summary["manifest_path"])),
        }
    )
    run_manifest = {
        "command": "generate",
        "argv": _argv_snapshot(args),
        "version": __version__,
        "config": dataclasses.asdict(config),
        "shard_size": args.shards,
        "jobs": args.jobs,
        "total_rows": summary["total_rows"],
        "cardinality_counts": {
            str(k): v for k, v in summary["cardinality_counts"].items()
        },
        "wall_time_s": round(wall, 3),
        "outputs": outputs,
    }
    with open(out_dir / "run_manifest.json", "w", encoding="ascii") as f:
        json.dump(run_manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    print(
        f"wrote {summary['total_rows']} rows in {len(summary['manifest']['shards'])} "
        f"shard(s) to {out_dir} in {wall:.1f}s"
    )
    return 0


def _argv_snapshot(args: argparse.Namespace) -> list[str]:
    skip = {"func", "command"}
    out = [args.command]
    for key, value in sorted(vars(args).items()):
        if key in skip or value is None:
            continue
        out.append(f"--{key.replace('_', '-')}={value}")
    return out


def cmd_analyze(args: argparse.Namespace) -> int:
    if args.train < 1 or args.test < 1:
        raise ValueError("--train and --test must be positive")
    if args.permutations < 1:
        raise ValueError("--permutations must be at least 1")
    design_all = DesignMatrix.from_records(
        read_shards(args.corpus), target=args.target
    )
    sample_size = args.train + args.test
    idx = stratified_sample_indices(design_all.note_counts, sample_size, args.seed)
    design = design_all.take(idx)
    run = run_two_model_protocol(
        design,
        n_train=args.train,
        n_test=args.test,
        seed=args.seed,
        n_permutations=args.permutations,
    )
    report = run.report

    out_dir = Path(args.out) if args.out else Path(f"analysis-{args.target}")
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [
        f"target: {report.target}",
        f"n_train: {report.n_train}",
        f"n_test: {report.n_test}",
        f"n_permutations: {report.n_permutations}",
        f"seed: {report.seed}",
        f"r2_controls: {report.r2_controls!r}",
        f"r2_full: {report.r2_full!r}",
        f"delta_r2: {report.delta_r2!r}",
    ]
    lines += [f"beta_{name}: {b!r}" for name, b in report.betas.items()]
    lines.append(f"permutation_p: {report.permutation_p!r}")
    (out_dir / "report.txt").write_text("\n".join(lines) + "\n", encoding="ascii")
    with open(out_dir / "report.json", "w", encoding="ascii") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    with open(out_dir / "null_distribution.csv", "w", encoding="ascii") as f:
        f.write("iteration,delta_r2\n")
        for i, d in enumerate(run.null_deltas.tolist()):
            f.write(f"{i},{d!r}\n")
    with open(out_dir / "predictions.csv", "w", encoding="ascii") as f:
        f.write("actual,predicted\n")
        for a, p in zip(run.test_actual.tolist(), run.test_predicted_full.tolist()):
            f.write(f"{a!r},{p!r}\n")
    for line in lines:
        print(line)
    print(f"reports written to {out_dir}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    if args.infile:
        try:
            stream = open(args.infile, "r", encoding="ascii")
        except OSError as err:
            raise InputDataError(str(err)) from err
    else:
        stream = sys.stdin
    try:
        print(SCORE_HEADER)
        for line_no, raw in enumerate(stream, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                notes = sorted({int(tok) for tok in line.split()})
            except ValueError as err:
                raise InputDataError(f"line {line_no}: {err}") from err
            if notes[0] < KEYBOARD_LOW or notes[-1] > KEYBOARD_HIGH:
                raise InputDataError(
                    f"line {line_no}: notes outside {KEYBOARD_LOW}..{KEYBOARD_HIGH}: "
                    f"{notes}"
                )
            if len(notes) > 10:
                raise InputDataError(
                    f"line {line_no}: more than 10 distinct notes"
                )
            print(_score_line(notes))
    finally:
        if args.infile:
            stream.close()
    return 0


def _score_line(notes: list[int]) -> str:
    rows = np.array([notes], dtype=np.int16)
    ann = annotate_block(rows)
    playable = "true" if is_playable(notes) else "false"
    icv = ",".join(str(c) for c in ann["icv"][0].tolist())
    return (
        f'"{" ".join(map(str, notes))}",{len(notes)},{playable},'
        f"{ann['centroid'][0].item()!r},{ann['spread'][0].item()!r},"
        f"{ann['skewness'][0].item()!r},{ann['kurtosis'][0].item()!r},"
        f"{icv},{ann['dissonance'][0].item()!r},{ann['harmonicity'][0].item()!r}"
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (OSError, CorpusFormatError, InputDataError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
