"""Perfect fault localization from developer diffs.

The buggy and fixed versions of a file are line-diffed; every change block
becomes a hunk. Deleted lines form the buggy span, pure additions become an
insertion point (end < start), and the developer's added lines are kept as the
ground truth for identical-match accounting.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass
from pathlib import Path


class NoChangeError(ValueError):
    """Buggy and fixed versions are identical; such bugs are removed."""


@dataclass(frozen=True)
class HunkLocation:
    """One change block: buggy line span plus the developer's replacement."""

    file: str
    start: int  # 1-based, inclusive
    end: int    # end < start encodes a pure insertion point
    buggy_lines: tuple[str, ...]
    fixed_lines: tuple[str, ...]

    @property
    def is_insertion(self) -> bool:
        return self.end < self.start

    def fixed_text(self) -> str:
        return "\n".join(self.fixed_lines)

    def buggy_text(self) -> str:
        return "\n".join(self.buggy_lines)


def localize_from_texts(buggy: str, fixed: str, file: str = "") -> list[HunkLocation]:
    buggy_lines = buggy.splitlines()
    fixed_lines = fixed.splitlines()
    if buggy_lines == fixed_lines:
        raise NoChangeError(f"buggy and fixed versions are identical: {file or '<text>'}")

    matcher = difflib.SequenceMatcher(None, buggy_lines, fixed_lines, autojunk=False)
    hunks = []
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        if tag == "insert":
            start, end = i1 + 1, i1  # insert before line i1+1, remove nothing
        else:
            start, end = i1 + 1, i2
        hunks.append(
            HunkLocation(
                file=file,
                start=start,
                end=end,
                buggy_lines=tuple(buggy_lines[i1:i2]),
                fixed_lines=tuple(fixed_lines[j1:j2]),
            )
        )
    return hunks


def localize_from_diff(buggy_file, fixed_file, file: str | None = None) -> list[HunkLocation]:
    """Diff two file versions; ``file`` overrides the recorded relative path."""
    buggy_path = Path(buggy_file)
    fixed_path = Path(fixed_file)
    return localize_from_texts(
        buggy_path.read_text(encoding="utf-8"),
        fixed_path.read_text(encoding="utf-8"),
        file=file if file is not None else str(buggy_path),
    )
