"""Exact-rational point sets, norms, Hausdorff distance, patches, similarities.

Every quantity in this module is a `fractions.Fraction`; there is no rounding
anywhere.  Comparisons, memberships and distances are therefore exact, which
is what makes the sign tests and no-progression checks in the rest of the
package meaningful.

Conventions:
  * a Point is a tuple of Fractions (length = ambient dimension),
  * the ``l2sq`` norm tag compares *squared* euclidean distances, so all
    values stay rational; any distance reported under ``l2sq`` is the squared
    distance and scales with the square of a similarity ratio,
  * the unit ball B(0,1) is closed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

Scalar = Fraction
Point = tuple[Fraction, ...]

NORM_TAGS = ("linf", "l1", "l2sq")


def scalar(value) -> Fraction:
    """Coerce ints, strings like '3/4', or Fractions to an exact Scalar."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot build an exact scalar from {type(value).__name__}")


def point(*coords) -> Point:
    return tuple(scalar(c) for c in coords)


@dataclass(frozen=True)
class NormedSpace:
    """Ambient d-dimensional space with one of the three supported norm tags."""

    dim: int
    norm: str = "linf"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")
        if self.norm not in NORM_TAGS:
            raise ValueError(f"norm must be one of {NORM_TAGS}, got {self.norm!r}")

    def distance(self, a: Point, b: Point) -> Fraction:
        """Exact distance between two points (squared value under l2sq)."""
        if self.norm == "linf":
            return max(abs(x - y) for x, y in zip(a, b))
        if self.norm == "l1":
            return sum((abs(x - y) for x, y in zip(a, b)), Fraction(0))
        return sum(((x - y) * (x - y) for x, y in zip(a, b)), Fraction(0))

    def magnitude(self, p: Point) -> Fraction:
        """Distance from the origin (squared under l2sq)."""
        return self.distance(p, tuple(Fraction(0) for _ in range(self.dim)))

    def in_unit_ball(self, p: Point) -> bool:
        """Membership in the closed unit ball B(0,1)."""
        return self.magnitude(p) <= 1

    def scale_factor(self, ratio: Fraction) -> Fraction:
        """How this norm's reported distance scales under a similarity of ratio `ratio`."""
        return ratio * ratio if self.norm == "l2sq" else ratio


@dataclass(frozen=True)
class PointSet:
    """A finite, deduplicated, lexicographically sorted set of exact points."""

    space: NormedSpace
    points: tuple[Point, ...]
    label: str = ""
    _index: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for p in self.points:
            if len(p) != self.space.dim:
                raise ValueError(
                    f"point {p} has {len(p)} coordinates, space has dim {self.space.dim}"
                )
        object.__setattr__(self, "points", tuple(sorted(set(self.points))))
        object.__setattr__(self, "_index", frozenset(self.points))

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, p: Point) -> bool:
        return p in self._index

    def __iter__(self):
        return iter(self.points)

    def require_nonempty(self, what: str = "point set"):
        if not self.points:
            raise ValueError(f"{what} is empty")
        return self

    def diameter(self) -> Fraction:
        """Largest pairwise distance (squared under l2sq); 0 for a singleton."""
        self.require_nonempty()
        best = Fraction(0)
        pts = self.points
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                d = self.space.distance(pts[i], pts[j])
                if d > best:
                    best = d
        return best

    def with_label(self, label: str) -> "PointSet":
        return PointSet(self.space, self.points, label)


def point_set(space: NormedSpace, coords: Iterable[Sequence], label: str = "") -> PointSet:
    """Build a PointSet coercing each coordinate through `scalar`."""
    pts = tuple(tuple(scalar(c) for c in row) for row in coords)
    return PointSet(space, pts, label)


@dataclass(frozen=True)
class Patch:
    """A k^d grid of points {t + delta * (x_1, ..., x_d) : x_i in 0..k-1}."""

    t: Point
    delta: Fraction
    k: int
    space: NormedSpace

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"patch size k must be >= 1, got {self.k}")
        if self.delta <= 0:
            raise ValueError(f"patch scale delta must be > 0, got {self.delta}")
        if len(self.t) != self.space.dim:
            raise ValueError("patch anchor dimension mismatch")


def patch_points(patch: Patch) -> PointSet:
    """Materialize the k^d points of an arithmetic patch."""
    d = patch.space.dim
    pts = []
    for multi in product(range(patch.k), repeat=d):
        pts.append(tuple(patch.t[i] + patch.delta * multi[i] for i in range(d)))
    ps = PointSet(patch.space, tuple(pts))
    assert len(ps) == patch.k**d
    return ps


@dataclass(frozen=True)
class Similarity:
    """Rotation- and reflection-free similarity x -> scale * x + shift."""

    scale: Fraction
    shift: Point

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"similarity scale must be > 0, got {self.scale}")

    def __call__(self, p: Point) -> Point:
        return tuple(self.scale * x + v for x, v in zip(p, self.shift))

    def inverse(self) -> "Similarity":
        inv = 1 / self.scale
        return Similarity(inv, tuple(-v * inv for v in self.shift))


def apply_similarity(sim: Similarity, pset: PointSet, clip_unit_ball: bool = False) -> PointSet:
    """Image of a point set under a similarity, optionally intersected with B(0,1)."""
    imgs = [sim(p) for p in pset]
    if clip_unit_ball:
        imgs = [p for p in imgs if pset.space.in_unit_ball(p)]
    return PointSet(pset.space, tuple(imgs), pset.label)


def dist_point_to_set(p: Point, pset: PointSet) -> tuple[Fraction, Point]:
    """Minimal distance from p to the set plus one realizing nearest point.

    Ties are broken toward the lexicographically smallest nearest point so the
    result is deterministic.
    """
    pset.require_nonempty("target of point-to-set distance")
    best_d = None
    best_p = None
    for q in pset.points:  # sorted, so first minimum is the lexicographic one
        d = pset.space.distance(p, q)
        if best_d is None or d < best_d:
            best_d, best_p = d, q
    return best_d, best_p


def hausdorff_distance(a: PointSet, b: PointSet) -> Fraction:
    """Exact Hausdorff distance between two non-empty finite sets.

    Under the l2sq tag the returned value is the *squared* Hausdorff distance.
    """
    a.require_nonempty("first set")
    b.require_nonempty("second set")
    if a.space != b.space:
        raise ValueError(f"space mismatch: {a.space} vs {b.space}")
    dist = a.space.distance

    def directed(src: PointSet, dst: PointSet) -> Fraction:
        worst = Fraction(0)
        for p in src.points:
            best = None
            for q in dst.points:
                d = dist(p, q)
                if best is None or d < best:
                    best = d
                    if best == 0:
                        break
            if best > worst:
                worst = best
        return worst

    return max(directed(a, b), directed(b, a))


def _primitive_integer_vector(diff: tuple[Fraction, ...]) -> tuple[int, ...]:
    """Canonical primitive integer vector parallel to a nonzero rational vector.

    Clears denominators, divides by the gcd, and fixes the sign so the first
    nonzero component is positive.  Two differences are parallel iff they map
    to the same vector, which identifies directions exactly.
    """
    denom_lcm = 1
    for c in diff:
        denom_lcm = denom_lcm * c.denominator // math.gcd(denom_lcm, c.denominator)
    ints = [int(c * denom_lcm) for c in diff]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    ints = [v // g for v in ints]
    for v in ints:
        if v != 0:
            if v < 0:
                ints = [-x for x in ints]
            break
    return tuple(ints)


def direction_set(pset: PointSet) -> frozenset[tuple[int, ...]]:
    """All pairwise directions of a set, as canonical primitive integer vectors.

    Translation- and scaling-invariant; needs at least two points.
    """
    if len(pset) < 2:
        raise ValueError("direction set needs at least 2 points")
    dirs = set()
    pts = pset.points
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            diff = tuple(x - y for x, y in zip(pts[i], pts[j]))
            dirs.add(_primitive_integer_vector(diff))
    return frozenset(dirs)
