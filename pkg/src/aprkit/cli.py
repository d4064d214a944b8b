"""Command-line entry point.

Subcommands: preprocess, encode, generate, rank, validate, bench run, report.
Exit codes: 0 success, 1 domain error, 2 usage error. All mock-generator
randomness flows from --seed, so equal configs and inputs give byte-identical
structured outputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .corpus import BugFixInstance, preprocess, read_corpus, write_corpus
from .encoding import (
    DEFAULT_MAX_INPUT,
    DEFAULT_MAX_OUTPUT,
    WhitespaceTokenizer,
    encode_for_inference,
    encode_for_training,
    TrainingRejection,
)
from .generation import DEFAULT_BEAM, DEFAULT_CHECKPOINTS, EnsembleConfig, generate_ensemble
from .languages import UnknownLanguageError
from .protocol import HttpTransport, ProcessTransport, ProtocolError, RemoteGenerator
from .ranking import CandidatePatch, combine, read_ranked, reduce_multi_hunk, write_ranked
from .validation import load_bug_manifest, validate_ranked
from .bench.manifest import ManifestError, load_manifest_dir
from .bench.metrics import DEFAULT_THRESHOLDS
from .bench.run import GeneratorPool, load_labels, run_benchmarks


@dataclass(frozen=True)
class RunConfig:
    """Reproducibility envelope embedded into every report."""

    seed: int = 0
    k: int = DEFAULT_CHECKPOINTS
    beam: int = DEFAULT_BEAM
    max_in: int = DEFAULT_MAX_INPUT
    max_out: int = DEFAULT_MAX_OUTPUT
    mode: str = "first_plausible"
    thresholds: tuple[int, ...] = DEFAULT_THRESHOLDS
    generators: str = "mock"
    jobs: int = 1

    def to_dict(self) -> dict:
        record = dataclasses.asdict(self)
        record["thresholds"] = list(self.thresholds)
        record["version"] = __version__
        return record


class DomainError(RuntimeError):
    pass


def _build_pool(spec: str, k: int, seed: int) -> GeneratorPool:
    if spec == "mock":
        return GeneratorPool.mock(k, seed)
    path = Path(spec)
    if not path.is_file():
        raise DomainError(f"generator spec not found: {spec}")
    record = json.loads(path.read_text(encoding="utf-8"))
    kind = record.get("kind")
    if kind == "mock":
        return GeneratorPool.mock(int(record.get("k", k)), int(record.get("seed", seed)))
    if kind == "process":
        transports = [ProcessTransport(cmd) for cmd in record["commands"]]
        generators = [RemoteGenerator(t) for t in transports]
        return GeneratorPool(generators, closers=[t.close for t in transports])
    if kind == "http":
        transports = [HttpTransport(url) for url in record["urls"]]
        generators = [RemoteGenerator(t) for t in transports]
        return GeneratorPool(generators, closers=[t.close for t in transports])
    raise DomainError(f"unknown generator spec kind: {kind!r}")


def _cmd_preprocess(args) -> int:
    tokenizer = WhitespaceTokenizer()
    instances = list(read_corpus(args.infile))
    kept, stats = preprocess(instances, tokenizer, max_in=args.max_in, max_out=args.max_out)
    write_corpus(args.out, kept)
    Path(args.stats).write_text(
        json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"kept {stats.after_size_filter}/{stats.ingested} instances")
    return 0


def _cmd_encode(args) -> int:
    tokenizer = WhitespaceTokenizer()
    rejected = 0
    written = 0
    with open(args.out, "w", encoding="utf-8") as out:
        for instance in read_corpus(args.infile):
            if args.purpose == "training":
                encoded = encode_for_training(
                    instance, tokenizer, max_in=args.max_in, max_out=args.max_out
                )
                if isinstance(encoded, TrainingRejection):
                    rejected += 1
                    continue
            else:
                encoded = encode_for_inference(
                    instance.language,
                    instance.source.splitlines(),
                    instance.context,
                    tokenizer,
                    max_in=args.max_in,
                )
            record = {
                "input_ids": encoded.input_ids,
                "n": encoded.n,
                "m": encoded.m,
                "input_text": encoded.input_text,
            }
            if encoded.target_ids is not None:
                record["target_ids"] = encoded.target_ids
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
            written += 1
    print(f"encoded {written} samples, rejected {rejected}")
    return 0


def _cmd_generate(args) -> int:
    config = EnsembleConfig(k=args.k, t=args.beam)
    tokenizer = WhitespaceTokenizer()
    with _build_pool(args.generators, args.k, args.seed) as pool:
        if len(pool.generators) != config.k:
            raise DomainError(
                f"generator spec provides {len(pool.generators)} generators, need k={config.k}"
            )
        with open(args.infile, encoding="utf-8") as infile, open(
            args.out, "w", encoding="utf-8"
        ) as out:
            for line in infile:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                sample = encode_for_inference(
                    record["language"],
                    record["source"].splitlines(),
                    record.get("context", ""),
                    tokenizer,
                    max_in=args.max_in,
                )
                beams = generate_ensemble(sample, pool.generators, config)
                for beam in beams:
                    for cand in beam:
                        out.write(
                            json.dumps(
                                {"id": record.get("id"), **cand.to_record()},
                                ensure_ascii=False,
                            )
                            + "\n"
                        )
    return 0


def _read_candidates(path) -> list[list[CandidatePatch]]:
    by_checkpoint: dict[int, list[CandidatePatch]] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            cand = CandidatePatch.from_record(record)
            by_checkpoint.setdefault(record.get("checkpoint", 0), []).append(cand)
    beams = []
    for checkpoint in sorted(by_checkpoint):
        beam = sorted(by_checkpoint[checkpoint], key=lambda c: c.rank)
        beams.append(beam)
    return beams


def _cmd_rank(args) -> int:
    if len(args.candidates) != len(args.source):
        raise DomainError("need one --source per --candidates file")
    per_hunk = []
    for cand_path, source_path in zip(args.candidates, args.source):
        source_text = Path(source_path).read_text(encoding="utf-8")
        beams = _read_candidates(cand_path)
        per_hunk.append(combine(beams, source_text))
    ranked = reduce_multi_hunk(per_hunk) if len(per_hunk) > 1 else per_hunk[0]
    write_ranked(args.out, ranked)
    print(f"ranked {len(ranked)} candidates")
    return 0


def _cmd_validate(args) -> int:
    bug = load_bug_manifest(args.bug)
    ranked = read_ranked(args.ranked)
    report = validate_ranked(bug, ranked, mode=args.mode.replace("-", "_"))
    with open(args.out, "w", encoding="utf-8") as out:
        out.write(
            json.dumps(
                {
                    "bug": report.bug_id,
                    "verdicts": report.verdicts(),
                    "npc": report.npc,
                    "plausible_positions": report.plausible_positions,
                    "timeout_count": report.timeout_count,
                    "time_to_plausible": report.time_to_plausible,
                    "times": [o.wall_time for o in report.outcomes],
                },
                sort_keys=True,
            )
            + "\n"
        )
    print(f"{report.bug_id}: npc={report.npc} verdicts={','.join(report.verdicts())}")
    return 0


def _cmd_bench_run(args) -> int:
    manifests = load_manifest_dir(args.manifest)
    config = RunConfig(
        seed=args.seed,
        k=args.k,
        beam=args.beam,
        mode=args.mode.replace("-", "_"),
        thresholds=tuple(args.thresholds),
        generators=args.generators,
        jobs=args.jobs,
    )
    labels = load_labels(args.labels) if args.labels else None
    ensemble = EnsembleConfig(k=config.k, t=config.beam)
    with _build_pool(args.generators, config.k, config.seed) as pool:
        evaluations = run_benchmarks(
            manifests,
            pool,
            ensemble,
            config.mode,
            Path(args.out),
            config_record=config.to_dict(),
            thresholds=config.thresholds,
            labels=labels,
            jobs=config.jobs,
        )
    plausible = sum(1 for e in evaluations if e.npc is not None)
    print(f"evaluated {len(evaluations)} bugs, {plausible} plausible")
    return 0


def _cmd_report(args) -> int:
    run_dir = Path(args.run)
    summary = run_dir / "summary.txt"
    report = run_dir / "report.jsonl"
    if summary.is_file():
        print(summary.read_text(encoding="utf-8"), end="")
        return 0
    if not report.is_file():
        raise DomainError(f"no report.jsonl under {run_dir}")
    for line in report.read_text(encoding="utf-8").splitlines():
        record = json.loads(line)
        if record.get("record") == "aggregate":
            print(json.dumps(record, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aprkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"aprkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="clean a bug-fix corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--max-in", type=int, default=DEFAULT_MAX_INPUT)
    p.add_argument("--max-out", type=int, default=DEFAULT_MAX_OUTPUT)
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("encode", help="tokenize a corpus into model samples")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--purpose", choices=["training", "inference"], default="training")
    p.add_argument("--max-in", type=int, default=DEFAULT_MAX_INPUT)
    p.add_argument("--max-out", type=int, default=DEFAULT_MAX_OUTPUT)
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("generate", help="generate candidate patches for inputs")
    p.add_argument("--in", dest="infile", required=True,
                   help="JSONL records {id, language, source, context}")
    p.add_argument("--out", required=True)
    p.add_argument("--generators", default="mock")
    p.add_argument("--k", type=int, default=DEFAULT_CHECKPOINTS)
    p.add_argument("--beam", type=int, default=DEFAULT_BEAM)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-in", type=int, default=DEFAULT_MAX_INPUT)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("rank", help="combine per-checkpoint candidates into one list")
    p.add_argument("--candidates", action="append", required=True,
                   help="candidate JSONL; repeat per hunk for multi-hunk bugs")
    p.add_argument("--source", action="append", required=True,
                   help="file with the buggy hunk text; repeat per hunk")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("validate", help="validate a ranked list against a bug")
    p.add_argument("--bug", required=True, help="single-bug manifest JSON")
    p.add_argument("--ranked", required=True)
    p.add_argument("--mode", choices=["first-plausible", "exhaustive"],
                   default="first-plausible")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_validate)

    bench = sub.add_parser("bench", help="benchmark evaluation")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)
    p = bench_sub.add_parser("run", help="run the full pipeline over a manifest dir")
    p.add_argument("--manifest", required=True)
    p.add_argument("--generators", default="mock")
    p.add_argument("--mode", choices=["first-plausible", "exhaustive"],
                   default="first-plausible")
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=DEFAULT_CHECKPOINTS)
    p.add_argument("--beam", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--labels", default=None)
    p.add_argument("--thresholds", type=int, nargs="+", default=list(DEFAULT_THRESHOLDS))
    p.set_defaults(func=_cmd_bench_run)

    p = sub.add_parser("report", help="print the summary of a bench run")
    p.add_argument("--run", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (
        DomainError,
        ManifestError,
        ProtocolError,
        UnknownLanguageError,
        FileNotFoundError,
        NotADirectoryError,
        json.JSONDecodeError,
        ValueError,
    ) as exc:
        print(f"aprkit: error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
