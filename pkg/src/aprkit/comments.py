"""Comment removal with a lightweight per-language lexer.

Hunks are often fragments that do not parse, so this only tracks the lexical
states needed to tell comments from string/char literals: no full grammar. Lines
left blank purely by comment removal are dropped; lines that were already blank
are kept. Trailing whitespace is trimmed from every emitted line so that removal
of an end-of-line comment leaves no residue.
"""

from __future__ import annotations

from .languages import normalize_language

_C_FAMILY = {"Java", "C", "JavaScript"}


def remove_comments(code: str, language: str) -> str:
    """Delete all comment lexemes for ``language`` from ``code``.

    Comment markers inside string or character literals are preserved. Raises
    UnknownLanguageError for unsupported language tags.
    """
    lang = normalize_language(language)
    if lang in _C_FAMILY:
        lines = _strip_c_family(code.splitlines())
    else:
        lines = _strip_python(code.splitlines())

    kept = []
    for text, removed_comment, had_content in lines:
        if removed_comment and had_content and not text.strip():
            continue
        kept.append(text.rstrip())
    out = "\n".join(kept)
    if code.endswith("\n") and out:
        out += "\n"
    return out


def _strip_c_family(lines):
    """Per-line lexing for //… and /*…*/ with ' and " literals; block state carries."""
    in_block = False
    result = []
    for line in lines:
        out = []
        removed = in_block
        i = 0
        n = len(line)
        while i < n:
            ch = line[i]
            nxt = line[i + 1] if i + 1 < n else ""
            if in_block:
                if ch == "*" and nxt == "/":
                    in_block = False
                    i += 2
                else:
                    i += 1
                continue
            if ch == "/" and nxt == "/":
                removed = True
                break
            if ch == "/" and nxt == "*":
                removed = True
                in_block = True
                i += 2
                continue
            if ch in "\"'":
                end = _scan_string(line, i, ch)
                out.append(line[i:end])
                i = end
                continue
            out.append(ch)
            i += 1
        result.append(("".join(out), removed, bool(line.strip())))
    return result


def _strip_python(lines):
    """Per-line lexing for #… with ', ", ''', \"\"\" literals; triple-quote state carries."""
    triple = None  # the active triple-quote delimiter, or None
    result = []
    for line in lines:
        out = []
        removed = False
        i = 0
        n = len(line)
        while i < n:
            if triple:
                end = line.find(triple, i)
                if end == -1:
                    out.append(line[i:])
                    i = n
                else:
                    out.append(line[i : end + 3])
                    i = end + 3
                    triple = None
                continue
            ch = line[i]
            if line.startswith('"""', i) or line.startswith("'''", i):
                triple = line[i : i + 3]
                out.append(triple)
                i += 3
                continue
            if ch == "#":
                removed = True
                break
            if ch in "\"'":
                end = _scan_string(line, i, ch)
                out.append(line[i:end])
                i = end
                continue
            out.append(ch)
            i += 1
        result.append(("".join(out), removed, bool(line.strip())))
    return result


def _scan_string(line: str, start: int, quote: str) -> int:
    """Return the index just past a single-line literal opened at ``start``."""
    i = start + 1
    n = len(line)
    while i < n:
        if line[i] == "\\":
            i += 2
            continue
        if line[i] == quote:
            return i + 1
        i += 1
    return n  # unterminated: treat the rest of the line as literal
