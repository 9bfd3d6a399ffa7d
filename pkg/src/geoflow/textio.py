"""Plain-text input formats and CSV output."""

from __future__ import annotations

import csv
import io
import math
from fractions import Fraction

import numpy as np

from .errors import ParseError


def _lines(text: str):
    """Yield (line number, stripped content) for non-blank, non-comment lines."""
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, raw, line


def _column(raw: str, token: str) -> int:
    return raw.find(token) + 1


def parse_matrix(text: str) -> np.ndarray:
    """First line ``N``, then ``N`` rows of ``N`` space-separated 0/1 entries."""
    it = _lines(text)
    try:
        no, raw, line = next(it)
    except StopIteration:
        raise ParseError("empty matrix file", 1, 1) from None
    try:
        n = int(line)
    except ValueError:
        raise ParseError(f"expected symbol count, got {line!r}", no, 1) from None
    if n < 1:
        raise ParseError("symbol count must be >= 1", no, 1)
    rows = []
    for no, raw, line in it:
        tokens = line.split()
        if len(tokens) != n:
            raise ParseError(f"row has {len(tokens)} entries, expected {n}", no, 1)
        row = []
        for tok in tokens:
            if tok not in ("0", "1"):
                raise ParseError(f"entry {tok!r} is not 0 or 1", no, _column(raw, tok))
            row.append(int(tok))
        rows.append(row)
        if len(rows) > n:
            raise ParseError(f"more than {n} rows", no, 1)
    if len(rows) != n:
        raise ParseError(f"expected {n} rows, got {len(rows)}", no, 1)
    return np.array(rows, dtype=np.int8)


def parse_word(token: str) -> tuple:
    """``0110`` (single-digit symbols) or ``0.10.3`` (dot-separated indices)."""
    if "." in token:
        parts = token.split(".")
    else:
        parts = list(token)
    if not parts or not all(p.isdigit() for p in parts):
        raise ValueError(f"bad word {token!r}")
    return tuple(int(p) for p in parts)


def parse_potential_lines(text: str) -> dict:
    out = {}
    for no, raw, line in _lines(text):
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError("expected 'word value'", no, 1)
        try:
            word = parse_word(tokens[0])
        except ValueError:
            raise ParseError(f"bad word {tokens[0]!r}", no, _column(raw, tokens[0])) from None
        try:
            value = float(tokens[1])
        except ValueError:
            raise ParseError(f"bad value {tokens[1]!r}", no, _column(raw, tokens[1])) from None
        if word in out:
            raise ParseError(f"word {tokens[0]!r} given twice", no, 1)
        if out and len(word) != len(next(iter(out))):
            raise ParseError("all potential words must have the same length", no, 1)
        out[word] = value
    return out


def parse_number(token: str):
    """Exact ``Fraction`` for integer, decimal or ``p/q`` tokens; float for ``sqrt(x)`` and the rest."""
    token = token.strip()
    if token.startswith("sqrt(") and token.endswith(")"):
        return math.sqrt(float(parse_number(token[5:-1])))
    try:
        return Fraction(token)
    except ValueError:
        value = float(token)
        if not math.isfinite(value):
            raise ValueError(f"non-finite number {token!r}") from None
        return value


def parse_graph(text: str):
    """``vertices N`` then ``edge u v length`` lines; returns (N, [(u, v, length)])."""
    n = None
    edges = []
    for no, raw, line in _lines(text):
        tokens = line.split()
        if tokens[0] == "vertices":
            if n is not None:
                raise ParseError("vertex count given twice", no, 1)
            if len(tokens) != 2 or not tokens[1].isdigit():
                raise ParseError("expected 'vertices N'", no, 1)
            n = int(tokens[1])
        elif tokens[0] == "edge":
            if n is None:
                raise ParseError("'vertices N' must come first", no, 1)
            if len(tokens) != 4:
                raise ParseError("expected 'edge u v length'", no, 1)
            try:
                u, v = int(tokens[1]), int(tokens[2])
            except ValueError:
                raise ParseError("edge endpoints must be integers", no, _column(raw, tokens[1])) from None
            if not (0 <= u < n and 0 <= v < n):
                raise ParseError(f"edge endpoint outside 0..{n - 1}", no, _column(raw, tokens[1]))
            try:
                length = parse_number(tokens[3])
            except (ValueError, ZeroDivisionError):
                raise ParseError(f"bad length {tokens[3]!r}", no, _column(raw, tokens[3])) from None
            edges.append((u, v, length))
        else:
            raise ParseError(f"unknown directive {tokens[0]!r}", no, _column(raw, tokens[0]))
    if n is None:
        raise ParseError("missing 'vertices N'", 1, 1)
    return n, edges


def parse_rectangle(text: str) -> dict:
    """Key/value lines: ``center a b``, ``basepoint s``, ``tau t``, ``uminus lo hi``, ``uplus lo hi``.

    Optional ``bminus``/``bplus`` give sub-arcs as width fractions ``start stop``.
    """
    return _parse_rectangle_lines(_lines(text))


def _parse_rectangle_lines(lines) -> dict:
    arity = {"center": 2, "basepoint": 1, "tau": 1, "uminus": 2, "uplus": 2, "bminus": 2, "bplus": 2}
    out = {}
    first = None
    for no, raw, line in lines:
        first = first or no
        tokens = line.split()
        key = tokens[0]
        if key not in arity:
            raise ParseError(f"unknown key {key!r}", no, _column(raw, key))
        if len(tokens) != arity[key] + 1:
            raise ParseError(f"{key} takes {arity[key]} value(s)", no, 1)
        try:
            vals = [float(t) for t in tokens[1:]]
        except ValueError:
            raise ParseError(f"bad number in {key}", no, 1) from None
        out[key] = vals if len(vals) > 1 else vals[0]
    missing = {"center", "tau", "uminus", "uplus"} - set(out)
    if missing:
        raise ParseError(f"missing keys: {', '.join(sorted(missing))}", first or 1, 1)
    out.setdefault("basepoint", 0.0)
    return out


def parse_family(text: str) -> tuple[float, list[dict]]:
    """``alpha a`` then rectangle blocks separated by ``---`` lines."""
    alpha = None
    blocks, cur = [], []
    for no, raw, line in _lines(text):
        if line == "---":
            blocks.append(cur)
            cur = []
        elif line.split()[0] == "alpha" and alpha is None and not blocks and not cur:
            tokens = line.split()
            try:
                alpha = float(tokens[1]) if len(tokens) == 2 else None
            except ValueError:
                alpha = None
            if alpha is None or not alpha > 0:
                raise ParseError("expected 'alpha a' with a > 0", no, 1)
        else:
            cur.append((no, raw, line))
    blocks.append(cur)
    if alpha is None:
        raise ParseError("missing 'alpha a' line", 1, 1)
    blocks = [b for b in blocks if b]
    if not blocks:
        raise ParseError("family has no rectangles", 1, 1)
    return alpha, [_parse_rectangle_lines(b) for b in blocks]


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    if isinstance(v, (float, np.floating)):
        return "%.15g" % v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def render_csv(header: list, rows, comments=()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def emit_report(header: list, rows, path=None, comments=()) -> str:
    """Write a CSV report (``path`` None means return only). Fixed column order, LF endings."""
    text = render_csv(header, rows, comments)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
