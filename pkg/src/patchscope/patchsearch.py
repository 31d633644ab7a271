"""Exact patch containment and relative-defect minimization.

The searches here answer two questions about a finite exact-rational set F:

  * does F contain an arithmetic patch of size k exactly, and
  * how far (relative to the patch scale delta) is F from containing one,
    i.e. minimize eps = d_H(E, P) / delta over a documented finite family of
    candidate patches P and subsets E of F.

The candidate family is anchored: translations t range over F and scales
delta over (y - x) / j for coordinate-projection gaps y - x of F and integer
weights j (patch index differences, or coordinate differences of a general
pattern).  The family is complete for exact containment; for eps > 0 the
minimum over it is an upper bound on the continuum infimum and every report
says how many candidates it covered.

The subset minimization d_H(E, P) over E ⊆ F is solved in closed form by the
nearest-neighbor subset, which realizes the lower bound max_p dist(p, F) in
both Hausdorff directions (verified against the exhaustive-subset oracle in
the tests).

Large one-dimensional searches are routed through a float prefilter
(numpy) whose survivors are re-evaluated exactly, so reported values are
exact no matter which route ran.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .geometry import Point, PointSet, dist_point_to_set
from .griddim import DimensionReport, assouad_estimate, power_scale_pairs

# Anchored searches larger than this many candidates use the float prefilter.
ACCEL_THRESHOLD = 50_000

_REL_MARGIN = 1e-6
_ABS_MARGIN = 1e-9


@dataclass(frozen=True)
class DefectReport:
    """Result of a relative-defect minimization.

    eps is exact; eps == 0 iff the patch (or scaled pattern) is contained in
    F exactly.  For eps > 0 the value is an upper bound on the continuum
    infimum over all (t, delta), since only the documented candidate family
    was searched.
    """

    kind: str  # "patch" or "pattern"
    k: int
    t: Point
    delta: Fraction
    defect: Fraction
    eps: Fraction
    subset: PointSet
    strategy: str
    candidates: int

    def summary(self) -> str:
        t_str = ",".join(str(c) for c in self.t)
        return (
            f"k={self.k} eps={float(self.eps)!r} t={t_str} "
            f"delta={self.delta} strategy={self.strategy}"
        )

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "k": self.k,
            "t": [str(c) for c in self.t],
            "delta": str(self.delta),
            "defect": str(self.defect),
            "eps": str(self.eps),
            "eps_float": float(self.eps),
            "strategy": self.strategy,
            "candidates": self.candidates,
            "subset": [[str(c) for c in p] for p in self.subset.points],
        }


def optimal_subset_defect(pset: PointSet, target: PointSet) -> tuple[PointSet, Fraction]:
    """Best subset E ⊆ F minimizing d_H(E, target), with the minimal value.

    E is the set of nearest points of F to each target point; the minimum
    equals max over target points of their distance to F.
    """
    pset.require_nonempty("host set")
    target.require_nonempty("target set")
    if pset.space != target.space:
        raise ValueError(f"space mismatch: {pset.space} vs {target.space}")
    chosen = []
    worst = Fraction(0)
    for p in target.points:
        d, q = dist_point_to_set(p, pset)
        chosen.append(q)
        if d > worst:
            worst = d
    return PointSet(pset.space, tuple(chosen)), worst


# ---------------------------------------------------------------------------
# candidate family plumbing
# ---------------------------------------------------------------------------


def _axis_values(pset: PointSet) -> list[list[Fraction]]:
    d = pset.space.dim
    return [sorted({p[i] for p in pset}) for i in range(d)]


def _pattern_offsets(pattern: PointSet) -> tuple[Point, ...]:
    """Translate the pattern so its lexicographically smallest point is the origin."""
    base = pattern.points[0]
    return tuple(tuple(c - b for c, b in zip(p, base)) for p in pattern.points)


def _pattern_weights(offsets: Sequence[Point]) -> list[Fraction]:
    """Positive per-axis coordinate differences of the normalized pattern."""
    d = len(offsets[0])
    weights = set()
    for i in range(d):
        vals = sorted({off[i] for off in offsets})
        for a in range(len(vals)):
            for b in range(a + 1, len(vals)):
                weights.add(vals[b] - vals[a])
    weights.discard(Fraction(0))
    return sorted(weights)


def _patch_offsets(k: int, d: int) -> tuple[Point, ...]:
    return tuple(
        tuple(Fraction(x) for x in multi) for multi in product(range(k), repeat=d)
    )


def _candidate_deltas(pset: PointSet, weights: Sequence[Fraction]) -> list[Fraction]:
    deltas = set()
    for vals in _axis_values(pset):
        for a in range(len(vals)):
            for b in range(a + 1, len(vals)):
                gap = vals[b] - vals[a]
                for w in weights:
                    deltas.add(gap / w)
    return sorted(deltas)


def _family_size(pset: PointSet, weights: Sequence[Fraction]) -> int:
    pair_count = sum(len(v) * (len(v) - 1) // 2 for v in _axis_values(pset))
    return pair_count * len(weights) * len(pset)


# ---------------------------------------------------------------------------
# exact nearest-distance helpers
# ---------------------------------------------------------------------------


class _NearestDistance:
    """Exact distance-to-set queries; 1-d sets use bisection on sorted values."""

    def __init__(self, pset: PointSet):
        self.pset = pset
        self.space = pset.space
        if pset.space.dim == 1:
            self.vals = [p[0] for p in pset.points]
        else:
            self.vals = None

    def __call__(self, q: Point) -> Fraction:
        if self.vals is not None:
            x = q[0]
            i = bisect_left(self.vals, x)
            best = None
            if i < len(self.vals):
                best = self.vals[i] - x
            if i > 0:
                d = x - self.vals[i - 1]
                if best is None or d < best:
                    best = d
            if self.space.norm == "l2sq":
                return best * best
            return best
        best = None
        for p in self.pset.points:
            d = self.space.distance(q, p)
            if best is None or d < best:
                best = d
                if best == 0:
                    break
        return best


def _evaluate_candidate(
    nn: _NearestDistance,
    t: Point,
    delta: Fraction,
    offsets: Sequence[Point],
    skip_origin: bool,
    abort_above: Fraction | None,
) -> Fraction | None:
    """Exact defect max_p dist(t + delta*p, F); None if it exceeds abort_above."""
    worst = Fraction(0)
    for off in offsets:
        if skip_origin and all(c == 0 for c in off):
            continue
        q = tuple(tc + delta * oc for tc, oc in zip(t, off))
        d = nn(q)
        if d > worst:
            worst = d
            if abort_above is not None and worst > abort_above:
                return None
    return worst


# ---------------------------------------------------------------------------
# exact containment
# ---------------------------------------------------------------------------


def _int_normalized_1d(pset: PointSet, headroom: int) -> tuple[list[int], int] | None:
    """Scale 1-d rational coordinates to int64-safe integers, or None."""
    lcm = 1
    for p in pset.points:
        den = p[0].denominator
        lcm = lcm * den // math.gcd(lcm, den)
        if lcm > 1 << 20:
            return None
    ints = [int(p[0] * lcm) for p in pset.points]
    bound = max(abs(ints[0]), abs(ints[-1]))
    if bound * headroom >= 1 << 62:
        return None
    return ints, lcm


def _contains_patch_1d_accel(pset: PointSet, k: int) -> tuple[Point, Fraction] | None:
    norm = _int_normalized_1d(pset, headroom=k + 1)
    if norm is None:
        return _contains_patch_generic(pset, k)
    ints, lcm = norm
    arr = np.array(ints, dtype=np.int64)
    n = len(arr)
    best = None  # (delta_int, t_int)
    for i in range(n - 1):
        deltas = arr[i + 1 :] - arr[i]
        ok = np.ones(len(deltas), dtype=bool)
        for j in range(2, k):
            targets = arr[i] + j * deltas
            idx = np.searchsorted(arr, targets)
            idx_c = np.minimum(idx, n - 1)
            ok &= (idx < n) & (arr[idx_c] == targets)
            if not ok.any():
                break
        if ok.any():
            d_min = int(deltas[ok].min())
            cand = (d_min, int(arr[i]))
            if best is None or cand < best:
                best = cand
    if best is None:
        return None
    return (Fraction(best[1], lcm),), Fraction(best[0], lcm)


def _contains_patch_generic(pset: PointSet, k: int) -> tuple[Point, Fraction] | None:
    """Exact containment scan: anchors t in F, deltas from axis-1-aligned pairs."""
    d = pset.space.dim
    groups: dict[tuple, list[Fraction]] = {}
    for p in pset.points:
        groups.setdefault(p[1:], []).append(p[0])
    best = None  # (delta, t)
    for rest, xs in groups.items():
        xs.sort()
        for a in range(len(xs)):
            t = (xs[a],) + rest
            for b in range(a + 1, len(xs)):
                delta = xs[b] - xs[a]
                if _patch_is_contained(pset, t, delta, k, d):
                    cand = (delta, t)
                    if best is None or cand < best:
                        best = cand
    if best is None:
        return None
    return best[1], best[0]


def _patch_is_contained(pset: PointSet, t: Point, delta: Fraction, k: int, d: int) -> bool:
    for multi in product(range(k), repeat=d):
        q = tuple(tc + delta * m for tc, m in zip(t, multi))
        if q not in pset:
            return False
    return True


def contains_patch_exact(pset: PointSet, k: int) -> tuple[Point, Fraction] | None:
    """Some (t, delta) whose size-k patch lies in F exactly, or None.

    Among all exact witnesses the one with smallest delta (then smallest t)
    is returned, so results are reproducible.  Completeness: a contained
    patch has t in F and delta equal to an axis gap of F divided by 1.
    """
    if k < 2:
        raise ValueError(f"patch size k must be >= 2, got {k}")
    if len(pset) < 2:
        raise ValueError("need at least 2 points to search for patches")
    if pset.space.dim == 1 and len(pset) ** 2 > ACCEL_THRESHOLD:
        return _contains_patch_1d_accel(pset, k)
    return _contains_patch_generic(pset, k)


def _contains_pattern_exact(
    pset: PointSet, offsets: Sequence[Point], weights: Sequence[Fraction]
) -> tuple[Point, Fraction] | None:
    """Exact scaled-copy scan for a general normalized pattern."""
    best = None
    nonzero = [off for off in offsets if any(c != 0 for c in off)]
    for t in pset.points:
        deltas = set()
        for q in pset.points:
            for i, w in (
                (i, w) for i in range(pset.space.dim) for w in weights
            ):
                gap = q[i] - t[i]
                if gap > 0:
                    deltas.add(gap / w)
        for delta in deltas:
            hit = True
            for off in nonzero:
                img = tuple(tc + delta * oc for tc, oc in zip(t, off))
                if img not in pset:
                    hit = False
                    break
            if hit:
                cand = (delta, t)
                if best is None or cand < best:
                    best = cand
    if best is None:
        return None
    return best[1], best[0]


# ---------------------------------------------------------------------------
# anchored minimization (exact and accelerated routes)
# ---------------------------------------------------------------------------


def _anchored_min_exact(
    pset: PointSet, offsets: Sequence[Point], weights: Sequence[Fraction]
) -> tuple[Fraction, Fraction, Point]:
    nn = _NearestDistance(pset)
    deltas = _candidate_deltas(pset, weights)
    best: tuple[Fraction, Fraction, Point] | None = None
    for delta in deltas:
        abort = best[0] * delta if best is not None else None
        for t in pset.points:
            defect = _evaluate_candidate(nn, t, delta, offsets, True, abort)
            if defect is None:
                continue
            cand = (defect / delta, delta, t)
            if best is None or cand < best:
                best = cand
                abort = best[0] * delta
    return best


def _anchored_min_accel(
    pset: PointSet, offsets: Sequence[Point], weights: Sequence[Fraction]
) -> tuple[Fraction, Fraction, Point] | None:
    """Float prefilter over the anchored family; survivors re-checked exactly.

    Returns None when floats cannot represent the data safely, in which case
    the caller falls back to the exact route.
    """
    vals = _axis_values(pset)[0]
    fvals = np.array([float(v) for v in vals], dtype=np.float64)
    pts = np.array([float(p[0]) for p in pset.points], dtype=np.float64)
    offs = np.array([float(off[0]) for off in offsets], dtype=np.float64)
    ws = [float(w) for w in weights]
    if not (
        np.isfinite(fvals).all() and np.isfinite(pts).all() and np.isfinite(offs).all()
    ):
        return None

    aa, bb = np.triu_indices(len(fvals), k=1)
    gap = fvals[bb] - fvals[aa]
    d_idx_a = np.concatenate([aa] * len(ws))
    d_idx_b = np.concatenate([bb] * len(ws))
    d_w = np.concatenate([np.full(len(aa), i, dtype=np.int32) for i in range(len(ws))])
    deltas_f = np.concatenate([gap / w for w in ws])
    if not np.isfinite(deltas_f).all() or (deltas_f <= 0).any():
        return None

    n_d = len(deltas_f)
    n_t = len(pts)
    fv_sorted = np.sort(fvals)  # == fvals, already sorted; kept explicit
    chunk = max(1, (1 << 18) // max(1, n_t * len(offs)))
    best_f = np.inf
    bound = np.inf
    shortlist: list[tuple[float, int, int]] = []  # (eps_f, delta_index, t_index)

    for start in range(0, n_d, chunk):
        dchunk = deltas_f[start : start + chunk]
        grid = pts[None, :, None] + dchunk[:, None, None] * offs[None, None, :]
        flat = grid.reshape(-1)
        idx = np.searchsorted(fv_sorted, flat)
        idx_hi = np.minimum(idx, len(fv_sorted) - 1)
        idx_lo = np.maximum(idx - 1, 0)
        right = np.where(idx < len(fv_sorted), fv_sorted[idx_hi] - flat, np.inf)
        left = np.where(idx > 0, flat - fv_sorted[idx_lo], np.inf)
        dist = np.minimum(left, right).reshape(grid.shape)
        eps_f = dist.max(axis=2) / dchunk[:, None]
        cmin = float(eps_f.min())
        if cmin < best_f:
            best_f = cmin
            bound = best_f * (1 + _REL_MARGIN) + _ABS_MARGIN
        ci, ti = np.nonzero(eps_f <= bound)
        for c, t_i in zip(ci.tolist(), ti.tolist()):
            shortlist.append((float(eps_f[c, t_i]), start + c, t_i))
        if len(shortlist) > 500_000:
            shortlist = [s for s in shortlist if s[0] <= bound]
            if len(shortlist) > 500_000:
                return None  # pathological tie mass; use the exact route

    shortlist = sorted(
        (s for s in shortlist if s[0] <= bound), key=lambda s: (s[0], s[1], s[2])
    )
    nn = _NearestDistance(pset)
    best: tuple[Fraction, Fraction, Point] | None = None
    for eps_f, d_i, t_i in shortlist:
        if best is not None:
            stop = float(best[0]) * (1 + _REL_MARGIN) + _ABS_MARGIN
            if eps_f > stop:
                break
        delta = (vals[int(d_idx_b[d_i])] - vals[int(d_idx_a[d_i])]) / weights[int(d_w[d_i])]
        t = pset.points[t_i]
        defect = _evaluate_candidate(nn, t, delta, offsets, True, None)
        cand = (defect / delta, delta, t)
        if best is None or cand < best:
            best = cand
    return best


def _grid_seed_candidates(
    pset: PointSet,
    offsets: Sequence[Point],
    seed_report: DimensionReport | None,
) -> list[tuple[Point, Fraction]]:
    """Extra (t, delta) candidates seeded from the densest grid cells."""
    if seed_report is None:
        exps = [(a, a + 4) for a in range(0, 11)]
        try:
            seed_report = assouad_estimate(pset, power_scale_pairs(exps), min_ratio=2)
        except ValueError:
            return []
    if pset.space.norm == "l2sq":
        return []  # no exact linear diameter ratio under the squared tag
    d = pset.space.dim
    span = [
        max(off[i] for off in offsets) - min(off[i] for off in offsets) for i in range(d)
    ]
    max_span = max(span)
    if max_span == 0:
        return []
    rows = sorted(seed_report.rows, key=lambda row: -row.exponent)[:8]
    cands = []
    for row in rows:
        corner = tuple(row.R * z for z in row.witness)
        cell_diam = row.R  # linf diameter of the cube; l1 scales by d below
        if pset.space.norm == "l1":
            cell_diam = row.R * d
        for delta in (cell_diam / max_span, cell_diam / (2 * max_span)):
            centered = tuple(
                corner[i] + (row.R - delta * span[i]) / 2 for i in range(d)
            )
            cands.append((corner, delta))
            cands.append((centered, delta))
        inside = [p for p in pset.points if all(
            corner[i] <= p[i] < corner[i] + row.R for i in range(d)
        )][:8]
        gap_delta = cell_diam / max_span
        for t in inside:
            cands.append((t, gap_delta))
    return cands


def _minimize_relative_defect(
    pset: PointSet,
    offsets: Sequence[Point],
    weights: Sequence[Fraction],
    strategy: str,
    kind: str,
    k_label: int,
    accelerate: bool | None = None,
    seed_report: DimensionReport | None = None,
) -> DefectReport:
    if strategy not in ("anchored", "grid"):
        raise ValueError(f"unknown strategy {strategy!r}")
    pset.require_nonempty()
    family = _family_size(pset, weights)

    # exact containment short-circuit: eps = 0 with the minimal (delta, t)
    if kind == "patch":
        hit = contains_patch_exact(pset, k_label)
    else:
        hit = _contains_pattern_exact(pset, offsets, weights)
    if hit is not None:
        t, delta = hit
        best = (Fraction(0), delta, t)
    else:
        best = None
        use_accel = accelerate
        if use_accel is None:
            use_accel = pset.space.dim == 1 and family > ACCEL_THRESHOLD
        if use_accel and pset.space.dim == 1:
            best = _anchored_min_accel(pset, offsets, weights)
        if best is None:
            best = _anchored_min_exact(pset, offsets, weights)

    candidates = family
    if strategy == "grid":
        nn = _NearestDistance(pset)
        for t, delta in _grid_seed_candidates(pset, offsets, seed_report):
            candidates += 1
            defect = _evaluate_candidate(
                nn, t, delta, offsets, False, best[0] * delta if best else None
            )
            if defect is None:
                continue
            cand = (defect / delta, delta, t)
            if best is None or cand < best:
                best = cand

    eps, delta, t = best
    target = PointSet(
        pset.space,
        tuple(tuple(tc + delta * oc for tc, oc in zip(t, off)) for off in offsets),
    )
    subset, defect = optimal_subset_defect(pset, target)
    assert defect == eps * delta
    return DefectReport(
        kind=kind,
        k=k_label,
        t=t,
        delta=delta,
        defect=defect,
        eps=eps,
        subset=subset,
        strategy=strategy,
        candidates=candidates,
    )


def best_patch_defect(
    pset: PointSet,
    k: int,
    strategy: str = "anchored",
    accelerate: bool | None = None,
    seed_report: DimensionReport | None = None,
) -> DefectReport:
    """Minimize the relative defect eps over size-k patch candidates.

    eps = 0 exactly when F contains a size-k patch, and then the witness
    matches `contains_patch_exact`.  Ties are broken toward smaller delta,
    then lexicographically smaller t.
    """
    if k < 2:
        raise ValueError(f"patch size k must be >= 2, got {k}")
    if len(pset) < 2:
        raise ValueError("need at least 2 points")
    offsets = _patch_offsets(k, pset.space.dim)
    weights = [Fraction(j) for j in range(1, k)]
    return _minimize_relative_defect(
        pset, offsets, weights, strategy, "patch", k, accelerate, seed_report
    )


def steinhaus_defect(
    pset: PointSet,
    pattern: PointSet,
    strategy: str = "anchored",
    accelerate: bool | None = None,
    seed_report: DimensionReport | None = None,
) -> DefectReport:
    """Minimize eps for a scaled copy of an arbitrary finite pattern.

    The pattern is normalized by translating its lexicographically smallest
    point to the origin; scale candidates divide coordinate gaps of F by the
    positive coordinate differences of the pattern, which reduces to the
    patch family when the pattern is itself a patch.
    """
    if pset.space != pattern.space:
        raise ValueError("pattern and set live in different spaces")
    if len(pattern) < 2:
        raise ValueError("pattern needs at least 2 points")
    offsets = _pattern_offsets(pattern)
    weights = _pattern_weights(offsets)
    if not weights:
        raise ValueError("pattern has zero diameter")
    return _minimize_relative_defect(
        pset, offsets, weights, strategy, "pattern", len(pattern), accelerate, seed_report
    )
