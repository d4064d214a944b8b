"""Supported language tags."""

LANGUAGES = ("Java", "Python", "C", "JavaScript")

_CANONICAL = {lang.lower(): lang for lang in LANGUAGES}
_CANONICAL.update({"js": "JavaScript", "py": "Python"})


class UnknownLanguageError(ValueError):
    """Raised for a language tag outside the supported set."""


def normalize_language(tag: str) -> str:
    """Map a tag (case-insensitive, common abbreviations) to its canonical name."""
    try:
        return _CANONICAL[tag.strip().lower()]
    except KeyError:
        raise UnknownLanguageError(f"unsupported language tag: {tag!r}") from None
