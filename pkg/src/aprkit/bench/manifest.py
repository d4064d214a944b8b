"""Benchmark manifests: bundled statistics stubs and bug listings.

A manifest directory holds one JSON file per benchmark:

    {
      "benchmark": "toy",
      "stats": {"bugs": 3, "removed": 0, "remained": 3},
      "bugs": [
        {
          "id": "py_calc_add",
          "language": "Python",
          "workdir": "projects/py_calc",
          "files": [{"buggy": "calc.py", "fixed": "fixed/py_calc/calc.py",
                     "context_span": [1, 2]}],
          "build_cmd": "python -m py_compile calc.py",
          "trigger_cmds": ["python test_trigger.py"],
          "test_cmd": "python run_all.py",
          "timeout_s": 60
        }
      ]
    }

Paths are relative to the manifest file; ``fixed`` points at the developer's
version used for perfect fault localization and identical-match accounting.
``context_span`` optionally names the enclosing-function line span in the buggy
file; without it the context is empty.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class BenchmarkStatsRow:
    benchmark: str
    language: str
    bugs: int
    removed: int
    remained: int
    attempted: int | None = None

    def consistent(self) -> bool:
        return self.remained == self.bugs - self.removed


def bundled_benchmark_stats() -> list[BenchmarkStatsRow]:
    """The bundled per-benchmark bug accounting stubs."""
    raw = resources.files("aprkit.bench").joinpath("data/benchmark_stats.json")
    rows = json.loads(raw.read_text(encoding="utf-8"))
    return [
        BenchmarkStatsRow(
            benchmark=r["benchmark"],
            language=r["language"],
            bugs=r["bugs"],
            removed=r["removed"],
            remained=r["remained"],
            attempted=r.get("attempted"),
        )
        for r in rows
    ]


def check_stats(rows) -> list[str]:
    """Return one failure message per inconsistent row (remained != bugs - removed)."""
    return [
        f"{row.benchmark}: {row.bugs} - {row.removed} != {row.remained}"
        for row in rows
        if not row.consistent()
    ]


@dataclass
class BugFiles:
    buggy: str
    fixed: str
    context_span: tuple[int, int] | None = None


@dataclass
class BugSpec:
    id: str
    language: str
    workdir: str
    files: list[BugFiles]
    build_cmd: str | None
    test_cmd: str
    trigger_cmds: list[str] = field(default_factory=list)
    flaky_exclusions: list[str] = field(default_factory=list)
    timeout_s: float = 300.0


@dataclass
class BenchmarkManifest:
    name: str
    base_dir: Path
    bugs: list[BugSpec]
    stats: BenchmarkStatsRow | None = None


def load_manifest_file(path) -> BenchmarkManifest:
    path = Path(path)
    record = json.loads(path.read_text(encoding="utf-8"))
    name = record.get("benchmark", path.stem)

    stats = None
    if "stats" in record:
        s = record["stats"]
        stats = BenchmarkStatsRow(
            benchmark=name,
            language=s.get("language", ""),
            bugs=s["bugs"],
            removed=s["removed"],
            remained=s["remained"],
            attempted=s.get("attempted"),
        )
        problems = check_stats([stats])
        if problems:
            raise ManifestError("; ".join(problems))

    bugs = []
    for b in record.get("bugs", []):
        files = [
            BugFiles(
                buggy=f["buggy"],
                fixed=f["fixed"],
                context_span=tuple(f["context_span"]) if f.get("context_span") else None,
            )
            for f in b["files"]
        ]
        bugs.append(
            BugSpec(
                id=b["id"],
                language=b["language"],
                workdir=b["workdir"],
                files=files,
                build_cmd=b.get("build_cmd"),
                test_cmd=b["test_cmd"],
                trigger_cmds=list(b.get("trigger_cmds", [])),
                flaky_exclusions=list(b.get("flaky_exclusions", [])),
                timeout_s=float(b.get("timeout_s", 300.0)),
            )
        )
    return BenchmarkManifest(name=name, base_dir=path.parent, bugs=bugs, stats=stats)


def load_manifest_dir(path) -> list[BenchmarkManifest]:
    path = Path(path)
    if not path.is_dir():
        raise ManifestError(f"manifest directory not found: {path}")
    manifests = [load_manifest_file(p) for p in sorted(path.glob("*.json"))]
    if not manifests:
        raise ManifestError(f"no manifest files in {path}")
    return manifests
