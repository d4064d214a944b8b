"""Patch application and test-suite validation.

Each candidate is validated on a fresh copy of the pristine buggy checkout:
apply the patch, build, run bug-triggering tests first, then the rest of the
suite. Verdicts: compile_error, trigger_fail, regression_fail, timeout,
plausible. Patch-application failures and harness infrastructure failures are
recorded as apply_error / harness_error and excluded from verdict statistics.

Candidate-level validation is sequential (the ordering defines NPC); bug-level
parallelism is safe because every candidate owns its own workdir copy.
"""

from __future__ import annotations

import json
import os
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from .ranking import RankedPatchList

DEFAULT_TIMEOUT_S = 300.0

VERDICTS = ("compile_error", "trigger_fail", "regression_fail", "timeout", "plausible")
NON_VERDICT_OUTCOMES = ("apply_error", "harness_error")


class PatchApplicationError(RuntimeError):
    """Missing file or out-of-bounds hunk range."""


@dataclass(frozen=True)
class Hunk:
    """Line range to replace; end < start encodes a pure insertion point."""

    file: str
    start: int
    end: int

    @property
    def is_insertion(self) -> bool:
        return self.end < self.start


@dataclass
class BugUnderRepair:
    """A benchmark bug: pristine checkout plus build/test commands."""

    id: str
    language: str
    workdir: Path
    hunks: list[Hunk]
    build_cmd: str | None
    test_cmd: str
    trigger_cmds: list[str] = field(default_factory=list)
    contexts: list[str] = field(default_factory=list)  # per-hunk context text
    flaky_exclusions: list[str] = field(default_factory=list)
    timeout_s: float = DEFAULT_TIMEOUT_S


@dataclass
class ValidationOutcome:
    verdict: str
    wall_time: float
    candidate_position: int
    detail: str = ""

    def to_record(self) -> dict:
        return {
            "position": self.candidate_position,
            "verdict": self.verdict,
            "wall_time": self.wall_time,
        }


@dataclass
class BugValidationReport:
    bug_id: str
    outcomes: list[ValidationOutcome]
    npc: int | None
    time_to_plausible: float | None
    timeout_count: int
    plausible_positions: list[int]

    def verdicts(self) -> list[str]:
        return [outcome.verdict for outcome in self.outcomes]


def apply_patch(workdir: Path, hunks, patch_text: str) -> list[Path]:
    """Splice ``patch_text`` into every hunk of a workdir copy.

    The same text goes to all hunks (multi-hunk contract). An empty patch
    deletes the hunk lines; an insertion hunk inserts without removing. Patch
    lines with no leading whitespace inherit the indentation of the first
    replaced line. Returns the modified file paths.
    """
    workdir = Path(workdir)
    patch_lines = patch_text.splitlines()

    by_file: dict[str, list[Hunk]] = {}
    for hunk in hunks:
        by_file.setdefault(hunk.file, []).append(hunk)

    modified = []
    for rel_path, file_hunks in by_file.items():
        path = workdir / rel_path
        if not path.is_file():
            raise PatchApplicationError(f"no such file: {rel_path}")
        original = path.read_text(encoding="utf-8")
        lines = original.splitlines()

        # apply bottom-up so earlier hunk positions stay valid
        for hunk in sorted(file_hunks, key=lambda h: h.start, reverse=True):
            if hunk.is_insertion:
                if not 1 <= hunk.start <= len(lines) + 1:
                    raise PatchApplicationError(
                        f"insertion point {hunk.start} out of bounds in {rel_path}"
                    )
                indent_source = lines[hunk.start - 1] if hunk.start <= len(lines) else ""
                replacement = _indented(patch_lines, indent_source)
                lines[hunk.start - 1 : hunk.start - 1] = replacement
            else:
                if not 1 <= hunk.start <= hunk.end <= len(lines):
                    raise PatchApplicationError(
                        f"range {hunk.start}..{hunk.end} out of bounds in {rel_path}"
                    )
                replacement = _indented(patch_lines, lines[hunk.start - 1])
                lines[hunk.start - 1 : hunk.end] = replacement

        text = "\n".join(lines)
        if original.endswith("\n") and text:
            text += "\n"
        path.write_text(text, encoding="utf-8")
        modified.append(path)
    return modified


def _indented(patch_lines: list[str], reference_line: str) -> list[str]:
    indent = reference_line[: len(reference_line) - len(reference_line.lstrip())]
    out = []
    for line in patch_lines:
        if line and not line[0].isspace():
            out.append(indent + line)
        else:
            out.append(line)
    return out


def _expand_exclusions(cmd: str, exclusions: list[str]) -> str:
    if "{exclusions}" in cmd:
        joined = " ".join(shlex.quote(x) for x in exclusions)
        return cmd.replace("{exclusions}", joined)
    return cmd


def _run_stage(cmd: str, cwd: Path, timeout_s: float) -> tuple[bool, bool, str]:
    """Run one shell command; returns (ok, timed_out, detail)."""
    try:
        proc = subprocess.run(
            cmd,
            shell=True,
            cwd=cwd,
            capture_output=True,
            text=True,
            timeout=timeout_s,
        )
    except subprocess.TimeoutExpired:
        return False, True, f"timeout: {cmd}"
    if proc.returncode != 0:
        tail = (proc.stdout + proc.stderr)[-2000:]
        return False, False, tail
    return True, False, ""


def scratch_root() -> Path:
    """Scratch location for workdir copies; APRKIT_WORKDIR overrides."""
    override = os.environ.get("APRKIT_WORKDIR")
    base = Path(override) if override else Path(tempfile.gettempdir()) / "aprkit"
    base.mkdir(parents=True, exist_ok=True)
    return base


def validate_candidate(
    bug: BugUnderRepair,
    patch_text: str,
    position: int = 1,
    scratch: Path | None = None,
) -> ValidationOutcome:
    """Apply one candidate to a fresh copy and run the staged pipeline."""
    started = time.monotonic()

    def _done(verdict: str, detail: str = "") -> ValidationOutcome:
        return ValidationOutcome(
            verdict=verdict,
            wall_time=time.monotonic() - started,
            candidate_position=position,
            detail=detail,
        )

    base = Path(scratch) if scratch is not None else scratch_root()
    base.mkdir(parents=True, exist_ok=True)
    copy_dir = Path(tempfile.mkdtemp(prefix=f"{bug.id}-c{position}-", dir=base))
    try:
        try:
            target = copy_dir / "work"
            shutil.copytree(bug.workdir, target)
        except OSError as exc:
            return _done("harness_error", f"cannot copy workdir: {exc}")

        try:
            apply_patch(target, bug.hunks, patch_text)
        except PatchApplicationError as exc:
            return _done("apply_error", str(exc))

        try:
            if bug.build_cmd:
                ok, timed_out, detail = _run_stage(bug.build_cmd, target, bug.timeout_s)
                if timed_out:
                    return _done("timeout", detail)
                if not ok:
                    return _done("compile_error", detail)

            for trigger in bug.trigger_cmds:
                ok, timed_out, detail = _run_stage(trigger, target, bug.timeout_s)
                if timed_out:
                    return _done("timeout", detail)
                if not ok:
                    return _done("trigger_fail", detail)

            test_cmd = _expand_exclusions(bug.test_cmd, bug.flaky_exclusions)
            ok, timed_out, detail = _run_stage(test_cmd, target, bug.timeout_s)
            if timed_out:
                return _done("timeout", detail)
            if not ok:
                return _done("regression_fail", detail)
        except OSError as exc:
            return _done("harness_error", f"cannot spawn command: {exc}")

        return _done("plausible")
    finally:
        shutil.rmtree(copy_dir, ignore_errors=True)


def validate_ranked(
    bug: BugUnderRepair,
    ranked: RankedPatchList,
    mode: str = "first_plausible",
    scratch: Path | None = None,
) -> BugValidationReport:
    """Validate candidates in list order.

    ``first_plausible`` stops at the first plausible verdict; ``exhaustive``
    validates the whole list and records every plausible position.
    """
    if mode not in ("first_plausible", "exhaustive"):
        raise ValueError(f"unknown mode: {mode!r}")

    outcomes: list[ValidationOutcome] = []
    plausible_positions: list[int] = []
    npc = None
    time_to_plausible = None
    elapsed = 0.0

    for entry in ranked.entries:
        outcome = validate_candidate(bug, entry.text, position=entry.rank, scratch=scratch)
        outcomes.append(outcome)
        elapsed += outcome.wall_time
        if outcome.verdict == "plausible":
            plausible_positions.append(entry.rank)
            if npc is None:
                npc = len(outcomes)
                time_to_plausible = elapsed
            if mode == "first_plausible":
                break

    return BugValidationReport(
        bug_id=bug.id,
        outcomes=outcomes,
        npc=npc,
        time_to_plausible=time_to_plausible,
        timeout_count=sum(1 for o in outcomes if o.verdict == "timeout"),
        plausible_positions=plausible_positions,
    )


def load_bug_manifest(path) -> BugUnderRepair:
    """Read a single-bug manifest; workdir is resolved relative to the file."""
    path = Path(path)
    record = json.loads(path.read_text(encoding="utf-8"))
    return bug_from_record(record, base_dir=path.parent)


def bug_from_record(record: dict, base_dir: Path) -> BugUnderRepair:
    hunks = [Hunk(h["file"], h["start"], h["end"]) for h in record.get("hunks", [])]
    return BugUnderRepair(
        id=record["id"],
        language=record["language"],
        workdir=(base_dir / record["workdir"]).resolve(),
        hunks=hunks,
        build_cmd=record.get("build_cmd"),
        test_cmd=record["test_cmd"],
        trigger_cmds=list(record.get("trigger_cmds", [])),
        contexts=list(record.get("contexts", [])),
        flaky_exclusions=list(record.get("flaky_exclusions", [])),
        timeout_s=float(record.get("timeout_s", DEFAULT_TIMEOUT_S)),
    )
