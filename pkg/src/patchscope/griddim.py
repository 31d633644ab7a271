"""Dyadic-grid cell counts, dimension estimators, and tangent zooms.

Cells at scale R are the half-open cubes R*[z, z+1)^d indexed by integer
vectors z, so every point lies in exactly one cell and all counts are exact
integers.  Exponents are the only floating-point quantities and they appear
in reports only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

from .geometry import (
    NormedSpace,
    Point,
    PointSet,
    Similarity,
    apply_similarity,
    hausdorff_distance,
)

CellIndex = tuple[int, ...]


def cell_of(p: Point, scale: Fraction) -> CellIndex:
    """Index of the half-open scale-cell containing p (exact floor division)."""
    return tuple(int(c // scale) for c in p)


@dataclass(frozen=True)
class GridSpec:
    """The tiling of space by half-open cubes scale*[z, z+1)^d anchored at 0."""

    space: NormedSpace
    scale: Fraction

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("grid scale must be > 0")

    def cell_of(self, p: Point) -> CellIndex:
        return cell_of(p, self.scale)

    def cell_corner(self, z: CellIndex) -> Point:
        return tuple(self.scale * zi for zi in z)


@dataclass(frozen=True)
class ScalePair:
    """A coarse/fine scale pair 0 < r < R with exact ratio R/r >= 2."""

    R: Fraction
    r: Fraction

    def __post_init__(self):
        if not (0 < self.r < self.R):
            raise ValueError(f"need 0 < r < R, got R={self.R}, r={self.r}")
        if self.ratio < 2:
            raise ValueError(f"ratio R/r must be >= 2, got {self.ratio}")

    @property
    def ratio(self) -> Fraction:
        return self.R / self.r


def power_scale_pairs(exponent_pairs: Iterable[tuple[int, int]], base: int = 2) -> list[ScalePair]:
    """Build pairs (R, r) = (base^-a, base^-b) from exponent tuples (a, b), b > a.

    base=2 is the default dyadic ladder; base=3 exists for triadic-aligned
    Cantor checks.
    """
    pairs = []
    for a, b in exponent_pairs:
        if b <= a:
            raise ValueError(f"need b > a in exponent pair ({a}, {b})")
        pairs.append(ScalePair(Fraction(1, base**a), Fraction(1, base**b)))
    return pairs


def _require_nested(R: Fraction, r: Fraction) -> int:
    ratio = R / r
    if ratio.denominator != 1 or ratio < 2:
        raise ValueError(f"scales do not nest: R/r = {ratio} is not an integer >= 2")
    return int(ratio)


def cell_count(pset: PointSet, cell: CellIndex, R: Fraction, r: Fraction) -> int:
    """Number of scale-r cells inside the scale-R cell `cell` that meet the set."""
    _require_nested(R, r)
    fine = set()
    for p in pset:
        if cell_of(p, R) == cell:
            fine.add(cell_of(p, r))
    return len(fine)


def occupied_cells(pset: PointSet, scale: Fraction) -> set[CellIndex]:
    return {cell_of(p, scale) for p in pset}


def global_cell_count(pset: PointSet, scale: Fraction) -> int:
    """Occupied-cell count N_scale over the whole grid (grid box count)."""
    return len(occupied_cells(pset, scale))


def _count_table(pset: PointSet, pair: ScalePair) -> dict[CellIndex, int]:
    """Per-coarse-cell fine-cell counts for one scale pair, in one pass."""
    _require_nested(pair.R, pair.r)
    buckets: dict[CellIndex, set[CellIndex]] = {}
    for p in pset:
        buckets.setdefault(cell_of(p, pair.R), set()).add(cell_of(p, pair.r))
    return {z: len(fine) for z, fine in buckets.items()}


@dataclass(frozen=True)
class DimensionRow:
    R: Fraction
    r: Fraction
    max_cell_count: int
    exponent: float
    witness: CellIndex


@dataclass(frozen=True)
class DimensionReport:
    """Per-pair max cell counts and exponents, plus the max-exponent estimate.

    The estimate is the maximum exponent over pairs whose ratio R/r is at
    least `min_ratio`; no constant is fitted.
    """

    space_dim: int
    rows: tuple[DimensionRow, ...]
    min_ratio: Fraction
    estimate: float

    def admitted_rows(self) -> list[DimensionRow]:
        return [row for row in self.rows if row.R / row.r >= self.min_ratio]

    def to_json_dict(self) -> dict:
        return {
            "space_dim": self.space_dim,
            "min_ratio": str(self.min_ratio),
            "estimate": self.estimate,
            "rows": [
                {
                    "R": str(row.R),
                    "r": str(row.r),
                    "ratio": str(row.R / row.r),
                    "max_cell_count": str(row.max_cell_count),
                    "exponent": row.exponent,
                    "witness": list(row.witness),
                    "admitted": bool(row.R / row.r >= self.min_ratio),
                }
                for row in self.rows
            ],
        }

    def to_csv(self) -> str:
        lines = ["R,r,ratio,max_cell_count,exponent,witness"]
        for row in self.rows:
            witness = " ".join(str(z) for z in row.witness)
            lines.append(
                f"{row.R},{row.r},{row.R / row.r},{row.max_cell_count},{row.exponent},{witness}"
            )
        return "\n".join(lines) + "\n"


def assouad_estimate(
    pset: PointSet, pairs: Sequence[ScalePair], min_ratio: Fraction | int = 16
) -> DimensionReport:
    """Max-exponent grid estimator over the supplied scale pairs.

    For each pair the row records the maximum over occupied coarse cells of
    the fine-cell count M, the exponent log M / log(R/r), and the witness
    cell (lexicographically smallest among maximisers).  Counts are exact;
    exponents are floats for reporting.
    """
    pset.require_nonempty()
    if not pairs:
        raise ValueError("no scale pairs supplied")
    min_ratio = Fraction(min_ratio)
    rows = []
    admitted = []
    for pair in pairs:
        table = _count_table(pset, pair)
        best = max(table.values())
        witness = min(z for z, m in table.items() if m == best)
        exponent = math.log(best) / math.log(pair.ratio)
        rows.append(DimensionRow(pair.R, pair.r, best, exponent, witness))
        if pair.ratio >= min_ratio:
            admitted.append(exponent)
    if not admitted:
        raise ValueError(f"no pairs with ratio >= {min_ratio} were admitted")
    return DimensionReport(pset.space.dim, tuple(rows), min_ratio, max(admitted))


@dataclass(frozen=True)
class BoxRow:
    scale: Fraction
    count: int


@dataclass(frozen=True)
class BoxReport:
    """Global occupied-cell counts per scale and consecutive log-log slopes."""

    rows: tuple[BoxRow, ...]
    slopes: tuple[float, ...]

    @property
    def final_slope(self) -> float:
        return self.slopes[-1]

    def to_json_dict(self) -> dict:
        return {
            "rows": [{"scale": str(row.scale), "count": str(row.count)} for row in self.rows],
            "slopes": list(self.slopes),
            "final_slope": self.final_slope,
        }


def box_estimate(pset: PointSet, scales: Sequence[Fraction]) -> BoxReport:
    """Occupied-cell counts N_r per scale plus slopes between consecutive scales."""
    pset.require_nonempty()
    if len(scales) < 2:
        raise ValueError("need at least two scales")
    for s, t in zip(scales, scales[1:]):
        if not (s > t > 0):
            raise ValueError("scales must be strictly decreasing and positive")
    rows = tuple(BoxRow(s, global_cell_count(pset, s)) for s in scales)
    slopes = tuple(
        (math.log(b.count) - math.log(a.count)) / (math.log(a.scale) - math.log(b.scale))
        for a, b in zip(rows, rows[1:])
    )
    return BoxReport(rows, slopes)


def cutting_bound(delta_ratio: Fraction, epsilon: Fraction, d: int) -> Fraction:
    """Upper bound delta^-d * (1 - eps^d)^m on the max fine-cell count of a set
    leaving one empty eps-subcell at every scale, where m is the integer with
    eps^(m+1) <= delta < eps^m.  Exact rational.
    """
    delta_ratio = Fraction(delta_ratio)
    epsilon = Fraction(epsilon)
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if not (0 < delta_ratio < epsilon < 1):
        raise ValueError(
            f"need 0 < delta_ratio < epsilon < 1, got delta_ratio={delta_ratio}, epsilon={epsilon}"
        )
    m = 0
    power = epsilon  # epsilon^(m+1)
    while power > delta_ratio:
        m += 1
        power *= epsilon
    return delta_ratio ** (-d) * (1 - epsilon**d) ** m


def unit_ball_grid_centers(space: NormedSpace, resolution: Fraction) -> PointSet:
    """Centers of the scale-`resolution` grid cells lying in the closed unit ball."""
    resolution = Fraction(resolution)
    if not (0 < resolution <= 2):
        raise ValueError("ball resolution must lie in (0, 2]")
    lo = int(Fraction(-1) // resolution) - 1
    hi = int(Fraction(1) // resolution) + 1
    centers = []
    for z in product(range(lo, hi + 1), repeat=space.dim):
        c = tuple(resolution * (zi + Fraction(1, 2)) for zi in z)
        if space.in_unit_ball(c):
            centers.append(c)
    return PointSet(space, tuple(centers), "unit-ball-grid")


def zoom_similarity(cell: CellIndex, R: Fraction) -> Similarity:
    """The similarity x -> 2(x - corner)/R - (1,...,1) mapping the cell onto
    the unit cube [-1, 1)^d (the closed unit ball under linf)."""
    scale = Fraction(2) / R
    shift = tuple(Fraction(-2) * zi - 1 for zi in cell)
    return Similarity(scale, shift)


def tangent_zoom(
    pset: PointSet, cell: CellIndex, R: Fraction, ball_resolution: Fraction
) -> tuple[Similarity, PointSet, Fraction]:
    """Zoom the occupied cell onto the unit ball and measure the tangent defect.

    Returns the similarity, the clipped image T(F) ∩ B(0,1), and the exact
    Hausdorff distance between the image and the grid centers of the ball at
    `ball_resolution`.  The center grid stands in for the continuum ball, so
    the reported defect carries a discretization error of at most one cell
    diameter at that resolution.
    """
    if not any(cell_of(p, R) == cell for p in pset):
        raise ValueError(f"cell {cell} at scale {R} contains no points of the set")
    sim = zoom_similarity(cell, R)
    image = apply_similarity(sim, pset, clip_unit_ball=True)
    if not image.points:
        raise ValueError("zoomed image is empty after clipping to the unit ball")
    centers = unit_ball_grid_centers(pset.space, ball_resolution)
    defect = hausdorff_distance(image, centers)
    return sim, image, defect


def best_tangent(
    pset: PointSet,
    pairs: Sequence[ScalePair],
    min_ratio: Fraction | int = 16,
    ball_resolution: Fraction | None = None,
) -> tuple[Similarity, PointSet, Fraction]:
    """Zoom into the witness cell of the max-exponent row of `assouad_estimate`.

    The ball is discretized at 2r/R (the image of the fine grid) unless a
    resolution is supplied.  This is the finite-scale surrogate for the unit
    ball being a weak tangent.
    """
    report = assouad_estimate(pset, pairs, min_ratio)
    best_row = None
    for row in report.rows:
        if row.R / row.r >= report.min_ratio and row.exponent == report.estimate:
            best_row = row
            break
    resolution = ball_resolution
    if resolution is None:
        resolution = 2 * best_row.r / best_row.R
    return tangent_zoom(pset, best_row.witness, best_row.R, resolution)
