"""Reading and writing the plain-text point-set format.

Layout: a header line ``#patchscope d=<int> norm=<linf|l1|l2sq>`` followed by
one point per line, coordinates comma-separated, each either a decimal
integer or a ``num/den`` rational.  Blank lines and ``#`` comment lines are
ignored.  Duplicate points are rejected with the offending line number.
"""

from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path

from .geometry import NormedSpace, PointSet

HEADER_RE = re.compile(r"^#patchscope\s+d=(\d+)\s+norm=(linf|l1|l2sq)\s*$")
COORD_RE = re.compile(r"^-?\d+(/[1-9]\d*)?$")


class PointSetParseError(ValueError):
    """Malformed point-set file; message carries the 1-based line number."""


def parse_point_set(text: str, label: str = "") -> PointSet:
    space = None
    pts = []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if space is None:
            m = HEADER_RE.match(line)
            if not m:
                raise PointSetParseError(
                    f"line {lineno}: expected header '#patchscope d=<int> norm=<linf|l1|l2sq>'"
                )
            space = NormedSpace(int(m.group(1)), m.group(2))
            continue
        if line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != space.dim:
            raise PointSetParseError(
                f"line {lineno}: expected {space.dim} coordinates, got {len(fields)}"
            )
        coords = []
        for f in fields:
            if not COORD_RE.match(f):
                raise PointSetParseError(
                    f"line {lineno}: coordinate {f!r} is not an integer or num/den rational"
                )
            coords.append(Fraction(f))
        p = tuple(coords)
        if p in seen:
            raise PointSetParseError(
                f"line {lineno}: duplicate point (first seen on line {seen[p]})"
            )
        seen[p] = lineno
        pts.append(p)
    if space is None:
        raise PointSetParseError("line 1: missing '#patchscope' header")
    return PointSet(space, tuple(pts), label)


def format_point_set(pset: PointSet) -> str:
    lines = [f"#patchscope d={pset.space.dim} norm={pset.space.norm}"]
    for p in pset.points:
        lines.append(",".join(str(c) for c in p))
    return "\n".join(lines) + "\n"


def read_point_set(path: str | Path) -> PointSet:
    path = Path(path)
    return parse_point_set(path.read_text(encoding="utf-8"), label=path.stem)


def write_point_set(pset: PointSet, path: str | Path) -> None:
    Path(path).write_text(format_point_set(pset), encoding="utf-8")
