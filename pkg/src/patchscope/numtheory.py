"""Integer-sequence generators and the number-theoretic checks.

Primes, prime powers, squares, reciprocal sets E_p = {1/n^p}, the
union-of-patches construction, exact 3-term-progression detection, the
polynomially-growing prime subsequence p_k = smallest prime >= k^5 with its
gap-difference sign test, decay classification for decreasing sequences, and
the dyadic-block / covering-count diagnostics for large integer sets.

Everything that feeds a sign or membership test is exact; floats appear only
in report columns (exponents, fit residuals, empirical constants).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .geometry import NormedSpace, PointSet
from .griddim import global_cell_count

LINE = NormedSpace(1, "linf")

# Deterministic Miller-Rabin base set: correct for all n < 3.3 * 10^24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_MR_DETERMINISTIC_LIMIT = 3_317_044_064_679_887_385_961_981
_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


@dataclass(frozen=True)
class IntegerSequence:
    """Strictly increasing positive integers with a provenance tag."""

    values: tuple[int, ...]
    tag: str = "user"

    def __post_init__(self):
        prev = 0
        for v in self.values:
            if v <= prev:
                raise ValueError("sequence must be strictly increasing and positive")
            prev = v

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def read_integer_sequence(path: str | Path, tag: str = "user") -> IntegerSequence:
    """One integer per line; blank lines and # comments ignored."""
    vals = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            vals.append(int(line))
        except ValueError:
            raise ValueError(f"line {lineno}: {line!r} is not an integer") from None
    return IntegerSequence(tuple(sorted(set(vals))), tag)


def write_integer_sequence(seq: IntegerSequence, path: str | Path) -> None:
    Path(path).write_text("".join(f"{v}\n" for v in seq.values))


def sieve_primes(limit: int) -> IntegerSequence:
    """All primes <= limit by a segmented sieve of Eratosthenes."""
    if limit < 2:
        raise ValueError(f"need limit >= 2, got {limit}")
    root = math.isqrt(limit)
    base = bytearray([1]) * (root + 1)
    base[0:2] = b"\0\0"
    for i in range(2, math.isqrt(root) + 1):
        if base[i]:
            base[i * i :: i] = b"\0" * len(base[i * i :: i])
    base_primes = [i for i in range(2, root + 1) if base[i]]
    primes = list(base_primes)
    segment = 1 << 16
    lo = root + 1
    while lo <= limit:
        hi = min(lo + segment - 1, limit)
        sieve = bytearray([1]) * (hi - lo + 1)
        for p in base_primes:
            start = max(p * p, ((lo + p - 1) // p) * p)
            sieve[start - lo :: p] = b"\0" * len(sieve[start - lo :: p])
        primes.extend(lo + i for i, flag in enumerate(sieve) if flag)
        lo = hi + 1
    return IntegerSequence(tuple(primes), "primes")


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 3.3e24; the same fixed witness set
    acts as a strong probable-prime test beyond that range."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    if n <= 2:
        return 2
    candidate = n | 1
    while not is_prime(candidate):
        candidate += 2
    return candidate


# ---------------------------------------------------------------------------
# point-set generators
# ---------------------------------------------------------------------------


def _pts(values, label: str) -> PointSet:
    return PointSet(LINE, tuple((Fraction(v),) for v in values), label)


def gen_e_p(p: int, n: int) -> PointSet:
    """{1 / i^p : 1 <= i <= n}."""
    if p < 1 or n < 1:
        raise ValueError("need p >= 1 and n >= 1")
    return _pts((Fraction(1, i**p) for i in range(1, n + 1)), f"e_p(p={p},n={n})")


def gen_union_patches(base: int = 4, count: int = 8) -> PointSet:
    """Size-n patches anchored at 0 with scale base^-n, for n = 1..count.

    Contains an exact patch of every size up to `count` while occupying very
    few grid cells at fine scales.
    """
    if base < 2 or count < 1:
        raise ValueError("need base >= 2 and count >= 1")
    pts = set()
    for n in range(1, count + 1):
        delta = Fraction(1, base**n)
        for j in range(n):
            pts.add(j * delta)
    return _pts(pts, f"union_patches(base={base},count={count})")


def gen_squares(n: int) -> PointSet:
    """{i^2 : 1 <= i <= n}."""
    if n < 1:
        raise ValueError("need n >= 1")
    return _pts((i * i for i in range(1, n + 1)), f"squares(n={n})")


def gen_prime_powers(m: int, limit: int) -> PointSet:
    """{p^m : p prime, p^m <= limit}."""
    if m < 1 or limit < 2**m:
        raise ValueError("need m >= 1 and limit >= 2^m")
    top = math.isqrt(limit) if m == 2 else int(round(limit ** (1.0 / m))) + 2
    vals = [p**m for p in sieve_primes(max(2, top)) if p**m <= limit]
    return _pts(vals, f"prime_powers(m={m},limit={limit})")


def gen_primes(limit: int) -> PointSet:
    return _pts(sieve_primes(limit).values, f"primes(limit={limit})")


def gen_reciprocals(seq: IntegerSequence) -> PointSet:
    """The reciprocal set {1/a : a in seq} in (0, 1]."""
    if not seq.values:
        raise ValueError("empty sequence")
    return _pts((Fraction(1, v) for v in seq.values), f"reciprocals({seq.tag})")


def gen_full_grid(depth: int) -> PointSet:
    """{i * 2^-depth : 0 <= i < 2^depth}, the saturated dyadic grid in [0, 1)."""
    if depth < 1:
        raise ValueError("need depth >= 1")
    step = Fraction(1, 2**depth)
    return _pts((i * step for i in range(2**depth)), f"full_grid(depth={depth})")


def gen_cantor(depth: int) -> PointSet:
    """Left endpoints of the level-`depth` middle-thirds intervals.

    These are the finite ternary expansions with digits 0 and 2 only, 2^depth
    points; every triadic-aligned cell count is exactly self-similar.
    """
    if depth < 1:
        raise ValueError("need depth >= 1")
    vals = [Fraction(0)]
    for i in range(1, depth + 1):
        digit = Fraction(2, 3**i)
        vals = [v for v in vals] + [v + digit for v in vals]
    return _pts(vals, f"cantor(depth={depth})")


GENERATORS = {
    "e_p": gen_e_p,
    "union_patches": gen_union_patches,
    "squares": gen_squares,
    "prime_powers": gen_prime_powers,
    "primes": gen_primes,
    "reciprocals": gen_reciprocals,
    "full_grid": gen_full_grid,
    "cantor": gen_cantor,
}


def gen_set(family: str, **params) -> PointSet:
    """Dispatch to a named generator; see GENERATORS for the registry."""
    try:
        gen = GENERATORS[family]
    except KeyError:
        raise ValueError(
            f"unknown family {family!r}; choose from {sorted(GENERATORS)}"
        ) from None
    return gen(**params)


# ---------------------------------------------------------------------------
# progression and gap analysis
# ---------------------------------------------------------------------------


def find_3ap(pset: PointSet) -> tuple[Fraction, Fraction, Fraction] | None:
    """First 3-term arithmetic progression (lo, mid, hi) with 2*mid = lo + hi
    exactly, scanning pairs in sorted order; None if the set has no 3-AP."""
    if pset.space.dim != 1:
        raise ValueError("3-AP search is one-dimensional")
    if len(pset) < 3:
        raise ValueError("need at least 3 points")
    vals = [p[0] for p in pset.points]
    index = set(vals)
    for i in range(len(vals)):
        for j in range(i + 2, len(vals)):
            mid = (vals[i] + vals[j]) / 2
            if mid in index:
                return vals[i], mid, vals[j]
    return None


@dataclass(frozen=True)
class BhpReport:
    """Empirical slack of p_k = smallest prime >= k^5 against k^(21/8)."""

    K: int
    empirical_constants: tuple[float, ...]
    max_constant: float

    def to_json_dict(self) -> dict:
        return {"K": self.K, "max_constant": self.max_constant}


def bhp_subsequence(K: int) -> tuple[IntegerSequence, BhpReport]:
    """p_k = smallest prime >= k^5 for k = 1..K, with the empirical constants
    C_k = (p_k - k^5) / k^(21/8)."""
    if K < 3:
        raise ValueError(f"need K >= 3, got {K}")
    primes = []
    consts = []
    for k in range(1, K + 1):
        p = next_prime(k**5)
        primes.append(p)
        consts.append((p - k**5) / k ** (21 / 8))
    return (
        IntegerSequence(tuple(primes), f"bhp(K={K})"),
        BhpReport(K, tuple(consts), max(consts)),
    )


def _descending_values(pset: PointSet) -> list[Fraction]:
    return [p[0] for p in reversed(pset.points)]


def gap_difference(pset: PointSet, k: int) -> tuple[Fraction, Fraction | None]:
    """G(k) = (x_k - x_{k+1}) - (x_{k+1} - x_{k+2}) for the 1-indexed
    decreasing enumeration of a 1-d set.

    When the three values are unit fractions 1/p the second component is the
    normalized product p_k * p_{k+1} * p_{k+2} * G(k); otherwise None.
    """
    if pset.space.dim != 1:
        raise ValueError("gap differences are one-dimensional")
    xs = _descending_values(pset)
    if not (1 <= k <= len(xs) - 2):
        raise ValueError(f"index k={k} needs k+2 <= {len(xs)} points")
    x0, x1, x2 = xs[k - 1], xs[k], xs[k + 1]
    g = x0 - 2 * x1 + x2
    if all(x.numerator == 1 for x in (x0, x1, x2)):
        product = Fraction(x0.denominator * x1.denominator * x2.denominator)
        return g, product * g
    return g, None


DECAY_POLYNOMIAL = "polynomial/subexponential"
DECAY_EXPONENTIAL = "at-least-exponential"
DECAY_INCONCLUSIVE = "inconclusive"

_DECAY_SLOPE_CUT = -0.05


def _linear_fit_residual(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and mean squared residual of ys against xs."""
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx if sxx else 0.0
    resid = sum((y - my - slope * (x - mx)) ** 2 for x, y in zip(xs, ys)) / n
    return slope, resid


@dataclass(frozen=True)
class GapReport:
    """Gap monotonicity and decay classification of a decreasing sequence."""

    gaps: tuple[Fraction, ...]
    first_monotone_index: int  # 1-based; gaps are nonincreasing from here on
    classification: str
    tail_slope_linear: float
    residual_linear: float
    residual_log: float

    def to_json_dict(self) -> dict:
        return {
            "first_monotone_index": self.first_monotone_index,
            "classification": self.classification,
            "tail_slope_linear": self.tail_slope_linear,
            "residual_linear": self.residual_linear,
            "residual_log": self.residual_log,
        }


def classify_decay(pset: PointSet) -> GapReport:
    """Deterministic decay classification of a decreasing 1-d sequence.

    Rules (documented, fixed): gaps g_n = x_n - x_{n+1} are scanned exactly
    for the last index violating g_n >= g_{n+1}.  On the tail half of the
    sequence, log x_n is fitted against n and against log n; the class is
    at-least-exponential when the n-fit has the smaller residual and slope
    below -0.05, polynomial/subexponential in the mirrored case, and
    inconclusive otherwise.
    """
    if len(pset) < 16:
        raise ValueError("need at least 16 points to classify decay")
    xs = _descending_values(pset)
    if xs[-1] <= 0:
        raise ValueError("classification needs strictly positive values")
    gaps = tuple(a - b for a, b in zip(xs, xs[1:]))
    last_violation = 0
    for i in range(len(gaps) - 1):
        if gaps[i] < gaps[i + 1]:
            last_violation = i + 1  # 1-based gap index
    first_monotone = last_violation + 1
    tail_start = len(xs) // 2
    ns = list(range(tail_start + 1, len(xs) + 1))
    logs = [math.log(float(x)) for x in xs[tail_start:]]
    slope_lin, resid_lin = _linear_fit_residual([float(n) for n in ns], logs)
    _, resid_log = _linear_fit_residual([math.log(n) for n in ns], logs)
    if resid_lin <= resid_log and slope_lin < _DECAY_SLOPE_CUT:
        cls = DECAY_EXPONENTIAL
    elif resid_log <= resid_lin and slope_lin >= _DECAY_SLOPE_CUT:
        cls = DECAY_POLYNOMIAL
    else:
        cls = DECAY_INCONCLUSIVE
    return GapReport(gaps, first_monotone, cls, slope_lin, resid_lin, resid_log)


# ---------------------------------------------------------------------------
# large-set diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockRow:
    k: int
    block_size: int
    log2_ratio: float | None
    harmonic_partial: Fraction
    covering_count: int
    covering_holds: bool


@dataclass(frozen=True)
class LargeSetReport:
    rows: tuple[BlockRow, ...]

    @property
    def all_hold(self) -> bool:
        return all(row.covering_holds for row in self.rows)

    def to_json_dict(self) -> dict:
        return {
            "rows": [
                {
                    "k": row.k,
                    "block_size": row.block_size,
                    "log2_ratio": row.log2_ratio,
                    "harmonic_partial": str(row.harmonic_partial),
                    "harmonic_partial_float": float(row.harmonic_partial),
                    "covering_count": row.covering_count,
                    "covering_holds": row.covering_holds,
                }
                for row in self.rows
            ],
            "all_hold": self.all_hold,
        }


def large_set_diagnostics(seq: IntegerSequence, kmax: int) -> LargeSetReport:
    """Dyadic-block sizes |F ∩ [2^k, 2^(k+1)]|, partial reciprocal sums, and
    the grid covering count of the reciprocals within B(0, 2^-k) at scale
    4^-(k+1), with the exact comparison block_size <= covering_count.

    Growth is reported as-is; divergence of the reciprocal sum cannot be
    decided from a truncation, so no largeness verdict is emitted.
    """
    if not seq.values:
        raise ValueError("empty sequence")
    if kmax < 1:
        raise ValueError("need kmax >= 1")
    rows = []
    values = seq.values
    harmonic = sum((Fraction(1, a) for a in values if a <= 2), Fraction(0))
    for k in range(1, kmax + 1):
        lo, hi = 2**k, 2 ** (k + 1)
        block = [a for a in values if lo <= a <= hi]
        harmonic += sum(
            (Fraction(1, a) for a in values if 2 ** k < a <= hi), Fraction(0)
        )
        tail = [a for a in values if a >= lo]
        recips = PointSet(LINE, tuple((Fraction(1, a),) for a in tail))
        cover = global_cell_count(recips, Fraction(1, 4 ** (k + 1))) if tail else 0
        ratio = math.log2(len(block)) / k if block else None
        rows.append(
            BlockRow(k, len(block), ratio, harmonic, cover, len(block) <= cover)
        )
    return LargeSetReport(tuple(rows))
