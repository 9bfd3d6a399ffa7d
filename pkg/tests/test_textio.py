import math
from fractions import Fraction

import numpy as np
import pytest

from geoflow import textio
from geoflow.errors import ParseError


def test_parse_matrix_with_comments():
    a = textio.parse_matrix("# golden mean\n2\n1 1  # row 0\n\n1 0\n")
    assert a.tolist() == [[1, 1], [1, 0]]


@pytest.mark.parametrize("text, line, column", [
    ("", 1, 1),
    ("two\n", 1, 1),
    ("2\n1 1\n1 2\n", 3, 3),
    ("2\n1 1 1\n1 1\n", 2, 1),
    ("2\n1 1\n", 2, 1),
])
def test_parse_matrix_errors(text, line, column):
    with pytest.raises(ParseError) as exc:
        textio.parse_matrix(text)
    assert (exc.value.line, exc.value.column) == (line, column)


def test_parse_word_forms():
    assert textio.parse_word("0110") == (0, 1, 1, 0)
    assert textio.parse_word("0.10.3") == (0, 10, 3)
    with pytest.raises(ValueError):
        textio.parse_word("0a")


def test_parse_number_is_exact_when_possible():
    assert textio.parse_number("3/2") == Fraction(3, 2)
    assert textio.parse_number("0.1") == Fraction(1, 10)
    assert textio.parse_number("sqrt(2)") == pytest.approx(math.sqrt(2))
    assert textio.parse_number("1e-3") == Fraction(1, 1000)
    with pytest.raises(ValueError):
        textio.parse_number("inf")


def test_parse_potential_lines():
    assert textio.parse_potential_lines("00 1\n01 -0.5\n") == {(0, 0): 1.0, (0, 1): -0.5}
    with pytest.raises(ParseError):
        textio.parse_potential_lines("0 1\n01 2\n")
    with pytest.raises(ParseError):
        textio.parse_potential_lines("0 1\n0 2\n")


def test_parse_graph():
    n, edges = textio.parse_graph("vertices 2\nedge 0 1 3/2\nedge 1 1 sqrt(2)\n")
    assert n == 2 and edges[0] == (0, 1, Fraction(3, 2))
    with pytest.raises(ParseError) as exc:
        textio.parse_graph("vertices 1\nedge 0 3 1\n")
    assert exc.value.line == 2
    with pytest.raises(ParseError):
        textio.parse_graph("edge 0 0 1\n")


FAMILY = """alpha 0.1
center 0 3
basepoint 0
tau 10
uminus -0.001 0.001
uplus 2.999 3.001
---
center 0 3
basepoint 0.09
tau 10
uminus -0.001 0.001
uplus 2.999 3.001
bminus 0.25 0.75
bplus 0.25 0.75
"""


def test_parse_family():
    alpha, specs = textio.parse_family(FAMILY)
    assert alpha == 0.1 and len(specs) == 2
    assert specs[1]["basepoint"] == 0.09 and list(specs[1]["bminus"]) == [0.25, 0.75]
    assert "bminus" not in specs[0]
    with pytest.raises(ParseError):
        textio.parse_family("center 0 3\n")
    with pytest.raises(ParseError):
        textio.parse_family("alpha 0.1\ncenter 0 3\n")


def test_format_value():
    assert textio.format_value(True) == "true"
    assert textio.format_value(np.bool_(False)) == "false"
    assert textio.format_value(Fraction(3, 2)) == "3/2"
    assert textio.format_value(Fraction(4, 2)) == "2"
    assert textio.format_value(1 / 3) == "0.333333333333333"
    assert textio.format_value(None) == ""


def test_emit_report(tmp_path):
    path = tmp_path / "out.csv"
    text = textio.emit_report(["a", "b"], [], path, ["seed 1"])
    assert text == "# seed 1\na,b\n"
    assert path.read_bytes() == b"# seed 1\na,b\n"
