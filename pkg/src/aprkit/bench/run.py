"""End-to-end benchmark evaluation.

Per bug: localize hunks from the developer diff, build and encode the model
input, fan out to the generator ensemble, combine (and for multi-hunk bugs
intersect) the candidates, validate against the project's test suite, and fold
everything into the reported metrics.

Structured outputs are deterministic for a fixed seed on the mock-generator
path: ``report.jsonl`` carries no wall-clock data. Timing lives in
``timings.jsonl`` and in the human-readable ``summary.txt``.
"""

from __future__ import annotations

import json
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..encoding import WhitespaceTokenizer, encode_for_inference
from ..generation import EnsembleConfig, MockGenerator, generate_ensemble
from ..ranking import RankedPatchList, combine, normalize_patch_text, reduce_multi_hunk
from ..validation import BugUnderRepair, Hunk, validate_ranked
from .localize import NoChangeError, localize_from_diff
from .manifest import BenchmarkManifest, BugSpec, check_stats
from .metrics import DEFAULT_THRESHOLDS, compilable_rate, ranking_thresholds


def incremental_checkpoint_analysis(per_checkpoint_lists, source_text, j: int) -> RankedPatchList:
    """Combine only the first ``j`` checkpoints' beams (ensemble ablation)."""
    if not 1 <= j <= len(per_checkpoint_lists):
        raise ValueError(f"j must be in 1..{len(per_checkpoint_lists)}, got {j}")
    return combine(per_checkpoint_lists[:j], source_text)


@dataclass
class BugEvaluation:
    """Everything the reports need about one evaluated bug."""

    bug_id: str
    language: str
    hunk_count: int
    list_length: int
    candidate_verdicts: dict[int, str]
    synthetic_positions: list[int]
    verdict_sequence: list[str]
    npc: int | None
    plausible_positions: list[int]
    identical_position: int | None
    identical_to_developer: bool
    first_plausible_checkpoint: object = None  # int, "manual", or None
    correct_position: int | None = None
    incremental_identical: dict[int, int | None] = field(default_factory=dict)
    timeout_count: int = 0
    time_to_plausible: float | None = None
    candidate_times: list[float] = field(default_factory=list)
    error: str | None = None

    @property
    def first_plausible_position(self) -> int | None:
        return self.plausible_positions[0] if self.plausible_positions else None

    def to_record(self) -> dict:
        return {
            "record": "bug",
            "bug": self.bug_id,
            "language": self.language,
            "hunks": self.hunk_count,
            "candidates": self.list_length,
            "verdicts": self.verdict_sequence,
            "npc": self.npc,
            "plausible_positions": self.plausible_positions,
            "identical_position": self.identical_position,
            "identical": self.identical_to_developer,
            "first_plausible_checkpoint": self.first_plausible_checkpoint,
            "correct_position": self.correct_position,
            "incremental_identical": {str(j): p for j, p in self.incremental_identical.items()},
            "error": self.error,
        }


class GeneratorPool:
    """Owns the k generator handles for a run and closes them afterwards.

    ``parallel_safe`` is False for remote generators (one request in flight per
    process); bug-level parallelism is then disabled.
    """

    def __init__(self, generators, closers=(), parallel_safe: bool = False) -> None:
        self.generators = list(generators)
        self._closers = list(closers)
        self.parallel_safe = parallel_safe

    @classmethod
    def mock(cls, k: int, seed: int) -> "GeneratorPool":
        return cls(
            [MockGenerator(checkpoint=i, seed=seed + i) for i in range(k)],
            parallel_safe=True,
        )

    def close(self) -> None:
        for closer in self._closers:
            try:
                closer()
            except Exception:
                pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _read_span(path: Path, span) -> str:
    if span is None:
        return ""
    lines = path.read_text(encoding="utf-8").splitlines()
    start, end = span
    return "\n".join(lines[start - 1 : end])


def _identical_position(ranked: RankedPatchList, fixed_texts) -> int | None:
    """Position of the candidate equal to the developer fix for every hunk."""
    normalized = {normalize_patch_text(text) for text in fixed_texts}
    if len(normalized) != 1:
        return None
    return ranked.position_of(normalized.pop())


def evaluate_bug(
    spec: BugSpec,
    base_dir: Path,
    pool: GeneratorPool,
    config: EnsembleConfig,
    mode: str,
    labels: dict[str, list[int]] | None = None,
    scratch: Path | None = None,
) -> BugEvaluation:
    workdir = (base_dir / spec.workdir).resolve()
    tokenizer = WhitespaceTokenizer()

    hunks: list[Hunk] = []
    contexts: list[str] = []
    fixed_texts: list[str] = []
    per_hunk_beams = []
    per_hunk_sources = []

    for bug_file in spec.files:
        buggy_path = workdir / bug_file.buggy
        fixed_path = (base_dir / bug_file.fixed).resolve()
        locations = localize_from_diff(buggy_path, fixed_path, file=bug_file.buggy)
        context = _read_span(buggy_path, bug_file.context_span)
        for loc in locations:
            hunks.append(Hunk(loc.file, loc.start, loc.end))
            contexts.append(context)
            fixed_texts.append(loc.fixed_text())
            sample = encode_for_inference(
                spec.language, list(loc.buggy_lines), context, tokenizer
            )
            beams = generate_ensemble(sample, pool.generators, config)
            per_hunk_beams.append(beams)
            per_hunk_sources.append(loc.buggy_text())

    per_hunk_ranked = [
        combine(beams, source) for beams, source in zip(per_hunk_beams, per_hunk_sources)
    ]
    if len(per_hunk_ranked) > 1:
        ranked = reduce_multi_hunk(per_hunk_ranked)
    else:
        ranked = per_hunk_ranked[0]

    identical_position = _identical_position(ranked, fixed_texts)

    incremental: dict[int, int | None] = {}
    for j in range(1, config.k + 1):
        lists_j = [
            incremental_checkpoint_analysis(beams, source, j)
            for beams, source in zip(per_hunk_beams, per_hunk_sources)
        ]
        ranked_j = reduce_multi_hunk(lists_j) if len(lists_j) > 1 else lists_j[0]
        incremental[j] = _identical_position(ranked_j, fixed_texts)

    bug = BugUnderRepair(
        id=spec.id,
        language=spec.language,
        workdir=workdir,
        hunks=hunks,
        build_cmd=spec.build_cmd,
        test_cmd=spec.test_cmd,
        trigger_cmds=spec.trigger_cmds,
        contexts=contexts,
        flaky_exclusions=spec.flaky_exclusions,
        timeout_s=spec.timeout_s,
    )
    report = validate_ranked(bug, ranked, mode=mode, scratch=scratch)

    verdict_by_position = {o.candidate_position: o.verdict for o in report.outcomes}
    identical_validated = (
        identical_position is not None
        and verdict_by_position.get(identical_position) == "plausible"
    )

    first_checkpoint = None
    if report.plausible_positions:
        first_pos = report.plausible_positions[0]
        entry = next(e for e in ranked.entries if e.rank == first_pos)
        first_checkpoint = "manual" if entry.checkpoint is None else entry.checkpoint

    labeled = sorted((labels or {}).get(spec.id, []))
    correct_candidates = [p for p in [identical_position, *labeled] if p is not None]
    correct_position = min(correct_candidates) if correct_candidates else None

    return BugEvaluation(
        bug_id=spec.id,
        language=spec.language,
        hunk_count=len(hunks),
        list_length=len(ranked),
        candidate_verdicts=verdict_by_position,
        synthetic_positions=sorted(ranked.synthetic_positions()),
        verdict_sequence=report.verdicts(),
        npc=report.npc,
        plausible_positions=report.plausible_positions,
        identical_position=identical_position,
        identical_to_developer=identical_validated,
        first_plausible_checkpoint=first_checkpoint,
        correct_position=correct_position,
        incremental_identical=incremental,
        timeout_count=report.timeout_count,
        time_to_plausible=report.time_to_plausible,
        candidate_times=[o.wall_time for o in report.outcomes],
    )


def load_labels(path) -> dict[str, list[int]]:
    """Correctness labels: one JSON record {bug, position, label} per line."""
    labels: dict[str, list[int]] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if record.get("label") == "correct":
                labels.setdefault(record["bug"], []).append(int(record["position"]))
    return labels


def run_benchmarks(
    manifests: list[BenchmarkManifest],
    pool: GeneratorPool,
    config: EnsembleConfig,
    mode: str,
    out_dir: Path,
    config_record: dict | None = None,
    thresholds=DEFAULT_THRESHOLDS,
    labels: dict[str, list[int]] | None = None,
    jobs: int = 1,
    scratch: Path | None = None,
) -> list[BugEvaluation]:
    """Evaluate every bug of every manifest and write the three report files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    stats_problems = []
    for manifest in manifests:
        if manifest.stats is not None:
            stats_problems.extend(check_stats([manifest.stats]))
    if stats_problems:
        raise ValueError("manifest stats inconsistent: " + "; ".join(stats_problems))

    ordered: list[tuple[BenchmarkManifest, BugSpec]] = [
        (manifest, bug) for manifest in manifests for bug in manifest.bugs
    ]

    def _one(item) -> BugEvaluation:
        manifest, spec = item
        try:
            return evaluate_bug(spec, manifest.base_dir, pool, config, mode, labels, scratch)
        except NoChangeError as exc:
            return BugEvaluation(
                bug_id=spec.id, language=spec.language, hunk_count=0, list_length=0,
                candidate_verdicts={}, synthetic_positions=[], verdict_sequence=[],
                npc=None, plausible_positions=[], identical_position=None,
                identical_to_developer=False, error=f"removed: {exc}",
            )
        except Exception as exc:
            return BugEvaluation(
                bug_id=spec.id, language=spec.language, hunk_count=0, list_length=0,
                candidate_verdicts={}, synthetic_positions=[], verdict_sequence=[],
                npc=None, plausible_positions=[], identical_position=None,
                identical_to_developer=False, error=f"{type(exc).__name__}: {exc}",
            )

    if jobs > 1 and not pool.parallel_safe:
        jobs = 1
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            evaluations = list(executor.map(_one, ordered))
    else:
        evaluations = [_one(item) for item in ordered]

    aggregate = summarize(evaluations, thresholds)
    _write_reports(out_dir, evaluations, aggregate, config_record or {})
    return evaluations


def summarize(evaluations: list[BugEvaluation], thresholds=DEFAULT_THRESHOLDS) -> dict:
    evaluated = [e for e in evaluations if e.error is None]
    plausible = [e for e in evaluated if e.npc is not None]
    identical = [e for e in evaluated if e.identical_to_developer]

    contributions: dict[str, int] = {}
    for evaluation in plausible:
        key = str(evaluation.first_plausible_checkpoint)
        contributions[key] = contributions.get(key, 0) + 1

    incremental: dict[str, int] = {}
    if evaluated:
        max_j = max((max(e.incremental_identical, default=0) for e in evaluated), default=0)
        for j in range(1, max_j + 1):
            incremental[str(j)] = sum(
                1 for e in evaluated if e.incremental_identical.get(j) is not None
            )

    curve = ranking_thresholds(evaluated, thresholds)
    rates = {str(x): round(compilable_rate(evaluated, x), 6) for x in thresholds}

    return {
        "record": "aggregate",
        "bugs": len(evaluations),
        "evaluated": len(evaluated),
        "errors": sum(1 for e in evaluations if e.error is not None),
        "plausible": len(plausible),
        "identical": len(identical),
        "npc": _dist([e.npc for e in plausible]),
        "timeouts": sum(e.timeout_count for e in evaluated),
        "ranking_thresholds": {str(k): v for k, v in curve.items()},
        "compilable_rate": rates,
        "checkpoint_contributions": dict(sorted(contributions.items())),
        "incremental_identical": incremental,
    }


def _dist(values) -> dict | None:
    values = [v for v in values if v is not None]
    if not values:
        return None
    return {
        "min": min(values),
        "max": max(values),
        "median": statistics.median(values),
        "mean": round(statistics.fmean(values), 3),
    }


def _write_reports(out_dir: Path, evaluations, aggregate: dict, config_record: dict) -> None:
    report_path = out_dir / "report.jsonl"
    with open(report_path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps({"record": "config", **config_record}, sort_keys=True) + "\n")
        for evaluation in evaluations:
            handle.write(json.dumps(evaluation.to_record(), sort_keys=True) + "\n")
        handle.write(json.dumps(aggregate, sort_keys=True) + "\n")

    with open(out_dir / "timings.jsonl", "w", encoding="utf-8") as handle:
        for evaluation in evaluations:
            handle.write(
                json.dumps(
                    {
                        "bug": evaluation.bug_id,
                        "time_to_plausible": evaluation.time_to_plausible,
                        "candidate_times": evaluation.candidate_times,
                    },
                    sort_keys=True,
                )
                + "\n"
            )

    (out_dir / "summary.txt").write_text(
        render_summary(evaluations, aggregate), encoding="utf-8"
    )


def render_summary(evaluations, aggregate: dict) -> str:
    lines = []
    lines.append("benchmark run summary")
    lines.append("=====================")
    lines.append(
        f"bugs: {aggregate['bugs']}  evaluated: {aggregate['evaluated']}  "
        f"errors: {aggregate['errors']}"
    )
    lines.append(
        f"plausible: {aggregate['plausible']}  identical-to-developer: "
        f"{aggregate['identical']}  timeouts: {aggregate['timeouts']}"
    )

    npc = aggregate.get("npc")
    if npc:
        lines.append(
            f"validated until plausible (NPC): min {npc['min']}  max {npc['max']}  "
            f"median {npc['median']}  mean {npc['mean']}"
        )

    times = [e.time_to_plausible for e in evaluations if e.time_to_plausible is not None]
    if times:
        lines.append(
            "time to plausible (s): "
            f"min {min(times):.3f}  max {max(times):.3f}  "
            f"median {statistics.median(times):.3f}  mean {statistics.fmean(times):.3f}"
        )

    lines.append("")
    lines.append("correct-patch ranking (bugs fixed within top-X):")
    for threshold, count in aggregate["ranking_thresholds"].items():
        lines.append(f"  top-{threshold}: {count}")

    lines.append("")
    lines.append("compilable rate of top-X candidates (empty patch excluded):")
    for threshold, rate in aggregate["compilable_rate"].items():
        lines.append(f"  top-{threshold}: {100 * rate:.1f}%")

    if aggregate["checkpoint_contributions"]:
        lines.append("")
        lines.append("first plausible patch origin:")
        for origin, count in aggregate["checkpoint_contributions"].items():
            name = "manual (injected empty)" if origin == "manual" else f"checkpoint {origin}"
            lines.append(f"  {name}: {count}")

    if aggregate["incremental_identical"]:
        lines.append("")
        lines.append("developer-identical patch present when using first j checkpoints:")
        for j, count in aggregate["incremental_identical"].items():
            lines.append(f"  j={j}: {count}")

    lines.append("")
    lines.append("per-bug results (BLEU order 4, floor-0.1 smoothing where reported):")
    for evaluation in evaluations:
        if evaluation.error is not None:
            lines.append(f"  {evaluation.bug_id}: ERROR {evaluation.error}")
            continue
        lines.append(
            f"  {evaluation.bug_id}: npc={evaluation.npc} "
            f"verdicts={','.join(evaluation.verdict_sequence) or '-'} "
            f"identical_at={evaluation.identical_position}"
        )
    return "\n".join(lines) + "\n"
