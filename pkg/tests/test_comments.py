import pytest

from aprkit.comments import remove_comments
from aprkit.languages import UnknownLanguageError


def test_line_comment_c():
    assert remove_comments("int x = 1; // set", "C") == "int x = 1;"


def test_marker_inside_python_string():
    code = 's = "# not a comment"'
    assert remove_comments(code, "Python") == code


def test_block_comments_and_full_comment_line():
    assert remove_comments("a/*m*/b\n/*full line*/\nc", "C") == "ab\nc"


def test_block_comment_spanning_lines():
    out = remove_comments("x /* a\nb */ y\nz", "C")
    assert out == "x\n y\nz"


def test_comment_only_line_dropped_but_blank_lines_kept():
    out = remove_comments("a = 1;\n\n// gone\nb = 2;", "Java")
    assert out == "a = 1;\n\nb = 2;"


def test_marker_inside_c_string_and_char():
    code = 'printf("// not %c", \'/\');'
    assert remove_comments(code, "C") == code


def test_javascript_same_grammar():
    assert remove_comments("let a = 1; /* x */ let b = 2;", "JavaScript") == (
        "let a = 1;  let b = 2;"
    )


def test_python_hash_removed_docstring_kept():
    code = 'def f():\n    """doc # keep"""\n    return 1  # drop\n'
    assert remove_comments(code, "Python") == 'def f():\n    """doc # keep"""\n    return 1\n'


def test_python_triple_quote_spanning_lines():
    code = 's = """\n# inside\n"""\ny = 2  # out\n'
    assert remove_comments(code, "Python") == 's = """\n# inside\n"""\ny = 2\n'


def test_escaped_quote_in_string():
    code = r'char *s = "a\"// still string"; int y = 2; // tail'
    assert remove_comments(code, "C") == r'char *s = "a\"// still string"; int y = 2;'


def test_unknown_language_rejected():
    with pytest.raises(UnknownLanguageError):
        remove_comments("x", "Fortran")


def test_idempotent_on_clean_code():
    cleaned = remove_comments("a /* x */ = 1; // y\nb = 2;", "C")
    assert remove_comments(cleaned, "C") == cleaned
