"""Reading vectors, matrices and index lists from text files."""

import csv
from pathlib import Path

import numpy as np

from ..exceptions import DimensionMismatch


def _rows(path):
    with open(Path(path), newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: no data")
    return rows


def _floats(row, path, lineno):
    try:
        return [float(c) for c in row]
    except ValueError:
        raise ValueError(f"{path}:{lineno}: not a number in {row!r}") from None


def read_matrix_csv(path):
    """Rows of decimals; a first row that does not parse is taken as a header."""
    rows = _rows(path)
    try:
        _floats(rows[0], path, 1)
    except ValueError:
        rows = rows[1:]
        if not rows:
            raise ValueError(f"{path}: header only, no data") from None
    data = [_floats(r, path, i + 1) for i, r in enumerate(rows)]
    width = len(data[0])
    if any(len(r) != width for r in data):
        raise DimensionMismatch(f"{path}: rows have different lengths")
    M = np.array(data, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{path}: non-finite entries")
    return M


def read_vector_csv(path):
    """A single column of decimals (a single row is accepted too)."""
    M = read_matrix_csv(path)
    if M.shape[1] == 1:
        return M[:, 0]
    if M.shape[0] == 1:
        return M[0]
    raise DimensionMismatch(f"{path}: expected one column, got shape {M.shape}")


def write_vector_csv(path, v):
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for t in np.asarray(v, dtype=float):
            w.writerow([repr(float(t))])


def parse_support(text):
    """1-based indices, comma or space separated, with ``a-b`` ranges.

    Returns sorted 0-based indices. ``text`` may also name a file holding
    the list.
    """
    p = Path(text)
    if p.is_file():
        text = p.read_text(encoding="utf-8")
    out = set()
    for tok in text.replace(",", " ").split():
        try:
            if "-" in tok[1:]:
                a, b = tok.split("-", 1)
                a, b = int(a), int(b)
                if b < a:
                    raise ValueError
                out.update(range(a, b + 1))
            else:
                out.add(int(tok))
        except ValueError:
            raise ValueError(f"bad support entry {tok!r}") from None
    if not out:
        raise ValueError("empty support")
    if min(out) < 1:
        raise ValueError("support indices are 1-based and must be >= 1")
    return sorted(i - 1 for i in out)
