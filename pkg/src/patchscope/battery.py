"""The `verify` battery: per-family estimates, defect tables, and flags.

Each built-in family runs the same pipeline: generate the set, grid-estimate
its dimension, box-count it, tabulate the minimal relative patch defect
eps(k) for k = 2..kmax, zoom into the best witness cell, then evaluate the
family's directional flags.  Every flag stores its predicate text next to
its observed value, so reports are self-describing.

All expectations are finite-scale predicates with thresholds frozen in
DEFAULT_CONFIG (computed once from oracle runs); nothing here asserts an
asymptotic statement.  Reports contain no timestamps and all tie-breaks are
total, so identical inputs produce byte-identical JSON.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .geometry import PointSet
from .griddim import assouad_estimate, best_tangent, box_estimate, power_scale_pairs
from .numtheory import gen_set
from .patchsearch import best_patch_defect, contains_patch_exact
from .pointset_io import read_point_set

BUILTIN_FAMILIES = (
    "cantor",
    "e_p",
    "full_grid",
    "primes",
    "prime_powers",
    "squares",
    "union_patches",
)

DEFAULT_CONFIG = {
    "kmax": 5,
    "min_ratio": 16,
    "coherence_tolerance": 1e-9,
    "families": {
        "full_grid": {
            "gen": {"depth": 8},
            "scale_denom": None,
            "pair_base": 2,
            "pairs": [[a, a + 4] for a in range(0, 5)],
            "box_base": 2,
            "box_depth": 8,
            "flags": {
                "assouad_equals_dim": True,
                "eps_zero_up_to": 5,
                "tangent_max": "1/8",
            },
        },
        "cantor": {
            "gen": {"depth": 7},
            "scale_denom": None,
            "pair_base": 3,
            "pairs": [[0, 3], [1, 4], [2, 5], [3, 6], [0, 4], [1, 5], [2, 6], [3, 7]],
            "box_base": 3,
            "box_depth": 7,
            "flags": {"assouad_max": 0.75, "eps_floor": {"k": 3, "floor": "1/1000"}},
        },
        "e_p": {
            "gen": {"p": 3, "n": 150},
            "scale_denom": None,
            "pair_base": 2,
            "pairs": [[a, a + 4] for a in range(0, 11)],
            "box_base": 2,
            "box_depth": 10,
            "flags": {"assouad_min": 0.7, "eps_positive": [3]},
        },
        "union_patches": {
            "gen": {"base": 4, "count": 16},
            "scale_denom": None,
            "pair_base": 2,
            "pairs": [[a, a + 4] for a in range(0, 29)],
            "box_base": 4,
            "box_depth": 10,
            "flags": {
                "assouad_min": 0.95,
                "eps_zero_up_to": 5,
                "box_final_slope_max": 0.2,
            },
        },
        "primes": {
            "gen": {"limit": 1000},
            "scale_denom": 1024,
            "pair_base": 2,
            "pairs": [[a, a + 4] for a in range(0, 7)],
            "box_base": 2,
            "box_depth": 8,
            "flags": {"assouad_min": 0.9, "eps_zero_at": [3, 5]},
        },
        "prime_powers": {
            "gen": {"m": 2, "limit": 2048},
            "scale_denom": 2048,
            "pair_base": 2,
            "pairs": [[a, a + 4] for a in range(0, 8)],
            "box_base": 2,
            "box_depth": 8,
            "flags": {"assouad_min": 0.6, "eps_zero_at": [3], "eps_positive": [4]},
        },
        "squares": {
            "gen": {"n": 160},
            "scale_denom": 32768,
            "pair_base": 2,
            "pairs": [[a, a + 4] for a in range(0, 10)],
            "box_base": 2,
            "box_depth": 10,
            "flags": {"assouad_min": 0.9, "eps_zero_at": [3], "eps_positive": [4]},
        },
    },
}


@dataclass(frozen=True)
class Flag:
    name: str
    predicate: str
    observed: str
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "predicate": self.predicate,
            "observed": self.observed,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class FamilyResult:
    name: str
    points: int
    assouad: dict
    box: dict
    eps_table: dict
    tangent_defect: Fraction
    flags: tuple[Flag, ...]

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "points": self.points,
            "assouad": self.assouad,
            "box": self.box,
            "eps_table": self.eps_table,
            "tangent_defect": str(self.tangent_defect),
            "tangent_defect_float": float(self.tangent_defect),
            "flags": [f.to_json_dict() for f in self.flags],
        }


@dataclass(frozen=True)
class BatteryReport:
    families: tuple[FamilyResult, ...]
    global_flags: tuple[Flag, ...]
    config: dict

    @property
    def all_pass(self) -> bool:
        return all(f.passed for fam in self.families for f in fam.flags) and all(
            f.passed for f in self.global_flags
        )

    def to_json_dict(self) -> dict:
        return {
            "families": [fam.to_json_dict() for fam in self.families],
            "global_flags": [f.to_json_dict() for f in self.global_flags],
            "all_pass": self.all_pass,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


def _merge_config(user: dict | None) -> dict:
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    if not user:
        return cfg
    for key, value in user.items():
        if key == "families":
            for fam, spec in value.items():
                cfg["families"].setdefault(fam, {}).update(spec)
        else:
            cfg[key] = value
    return cfg


def _rescaled(pset: PointSet, denom: int | None) -> PointSet:
    if denom is None:
        return pset
    return PointSet(
        pset.space,
        tuple(tuple(c / denom for c in p) for p in pset.points),
        pset.label,
    )


def _family_sets(name: str, spec: dict) -> tuple[PointSet, PointSet]:
    """(set used for grid estimates, set used for patch searches)."""
    if name.startswith("file:"):
        raw = read_point_set(name[5:])
        return raw, raw
    raw = gen_set(name, **spec["gen"])
    return _rescaled(raw, spec.get("scale_denom")), raw


_FILE_SPEC = {
    "pair_base": 2,
    "pairs": [[a, a + 4] for a in range(0, 9)],
    "box_base": 2,
    "box_depth": 8,
    "flags": {},
}


def _eval_flags(
    spec_flags: dict,
    estimate: float,
    eps: dict[int, Fraction],
    exact_hits: dict[int, bool],
    tangent: Fraction,
    box_final: float,
    dim: int,
) -> list[Flag]:
    flags = []
    if spec_flags.get("assouad_equals_dim"):
        flags.append(
            Flag(
                "assouad_equals_dim",
                f"assouad_estimate == {float(dim)} exactly (saturated counts)",
                repr(estimate),
                estimate == float(dim),
            )
        )
    if "assouad_min" in spec_flags:
        floor = spec_flags["assouad_min"]
        flags.append(
            Flag("assouad_min", f"assouad_estimate >= {floor}", repr(estimate), estimate >= floor)
        )
    if "assouad_max" in spec_flags:
        cap = spec_flags["assouad_max"]
        flags.append(
            Flag("assouad_max", f"assouad_estimate <= {cap}", repr(estimate), estimate <= cap)
        )
    if "eps_zero_up_to" in spec_flags:
        top = spec_flags["eps_zero_up_to"]
        ok = all(eps[k] == 0 for k in eps if k <= top)
        obs = {k: str(eps[k]) for k in eps if k <= top}
        flags.append(
            Flag("eps_zero_up_to", f"eps(k) == 0 for all 2 <= k <= {top}", str(obs), ok)
        )
    if "eps_zero_at" in spec_flags:
        ks = spec_flags["eps_zero_at"]
        ok = all(eps[k] == 0 for k in ks if k in eps)
        obs = {k: str(eps[k]) for k in ks if k in eps}
        flags.append(Flag("eps_zero_at", f"eps(k) == 0 for k in {ks}", str(obs), ok))
    if "eps_positive" in spec_flags:
        ks = spec_flags["eps_positive"]
        ok = all(eps[k] > 0 for k in ks if k in eps)
        obs = {k: str(eps[k]) for k in ks if k in eps}
        flags.append(Flag("eps_positive", f"eps(k) > 0 exactly for k in {ks}", str(obs), ok))
    if "eps_floor" in spec_flags:
        k = spec_flags["eps_floor"]["k"]
        floor = Fraction(spec_flags["eps_floor"]["floor"])
        ok = k in eps and eps[k] >= floor
        flags.append(
            Flag(
                "eps_floor",
                f"eps({k}) >= {floor} (bounded away from 0 at this truncation)",
                str(eps.get(k)),
                ok,
            )
        )
    if "tangent_max" in spec_flags:
        cap = Fraction(spec_flags["tangent_max"])
        flags.append(
            Flag(
                "tangent_max",
                f"tangent defect <= {cap} at the best witness cell",
                str(tangent),
                tangent <= cap,
            )
        )
    if "box_final_slope_max" in spec_flags:
        cap = spec_flags["box_final_slope_max"]
        flags.append(
            Flag(
                "box_final_slope_max",
                f"final box-count slope <= {cap} while exact patches persist",
                repr(box_final),
                box_final <= cap,
            )
        )
    # cross-module consistency is always evaluated
    ok = all((eps[k] == 0) == exact_hits[k] for k in eps)
    obs = {k: [str(eps[k]), exact_hits[k]] for k in eps}
    flags.append(
        Flag(
            "exact_consistency",
            "eps(k) == 0 exactly when contains_patch_exact finds a witness",
            str(obs),
            ok,
        )
    )
    return flags


def _run_family(name: str, spec: dict, kmax: int, min_ratio: int) -> FamilyResult:
    dim_set, patch_set = _family_sets(name, spec)
    pairs = power_scale_pairs(
        [tuple(p) for p in spec["pairs"]], base=spec.get("pair_base", 2)
    )
    report = assouad_estimate(dim_set, pairs, min_ratio=min_ratio)
    box_base = spec.get("box_base", 2)
    scales = [Fraction(1, box_base**k) for k in range(1, spec.get("box_depth", 8) + 1)]
    box = box_estimate(dim_set, scales)
    eps: dict[int, Fraction] = {}
    eps_rows = {}
    exact_hits = {}
    for k in range(2, kmax + 1):
        res = best_patch_defect(patch_set, k)
        eps[k] = res.eps
        hit = contains_patch_exact(patch_set, k)
        exact_hits[k] = hit is not None
        eps_rows[str(k)] = {
            "eps": str(res.eps),
            "eps_float": float(res.eps),
            "delta": str(res.delta),
            "t": [str(c) for c in res.t],
            "exact_hit": exact_hits[k],
            "candidates": res.candidates,
        }
    _, _, tangent = best_tangent(dim_set, pairs, min_ratio=min_ratio)
    flags = _eval_flags(
        spec.get("flags", {}),
        report.estimate,
        eps,
        exact_hits,
        tangent,
        box.final_slope,
        dim_set.space.dim,
    )
    return FamilyResult(
        name=name,
        points=len(patch_set),
        assouad=report.to_json_dict(),
        box=box.to_json_dict(),
        eps_table=eps_rows,
        tangent_defect=tangent,
        flags=tuple(flags),
    )


def _coherence_flag(results: list[FamilyResult], kmax: int, tol: float) -> Flag:
    """No strict inversion between the dimension order and the -eps(kmax) order."""
    rows = []
    for fam in results:
        if str(kmax) in fam.eps_table:
            rows.append(
                (fam.name, fam.assouad["estimate"], Fraction(fam.eps_table[str(kmax)]["eps"]))
            )
    bad = []
    for name_f, a_f, e_f in rows:
        for name_g, a_g, e_g in rows:
            if a_f > a_g + tol and e_f > e_g:
                bad.append(f"{name_f} vs {name_g}")
    observed = {name: [a, str(e)] for name, a, e in rows}
    return Flag(
        "directional_coherence",
        f"no family pair with strictly larger assouad estimate (tol {tol}) "
        f"and strictly larger eps({kmax})",
        str(observed) if not bad else f"inversions: {bad}",
        not bad,
    )


def run_battery(
    families: list[str] | None = None,
    kmax: int | None = None,
    config: dict | None = None,
    threads: int | None = None,
) -> BatteryReport:
    """Run the verify battery over the named families (default: all built-ins).

    Family entries may also be `file:PATH` point-set files, which get the
    default pipeline and no directional expectations.  PATCHSCOPE_THREADS
    caps the family-level parallelism; results are aggregated in name order
    so output does not depend on the thread count.
    """
    cfg = _merge_config(config)
    if kmax is not None:
        cfg["kmax"] = kmax
    if families is None or families == ["all"]:
        families = list(BUILTIN_FAMILIES)
    specs = {}
    for name in families:
        if name.startswith("file:"):
            spec = dict(_FILE_SPEC)
        elif name in cfg["families"]:
            spec = cfg["families"][name]
        else:
            raise ValueError(
                f"unknown family {name!r}; built-ins: {', '.join(BUILTIN_FAMILIES)}"
            )
        specs[name] = spec
    if threads is None:
        threads = int(os.environ.get("PATCHSCOPE_THREADS", "0")) or min(4, len(specs))
    threads = max(1, min(threads, len(specs)))
    results = {}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {
            name: pool.submit(_run_family, name, spec, cfg["kmax"], cfg["min_ratio"])
            for name, spec in specs.items()
        }
        for name, fut in futures.items():
            results[name] = fut.result()
    ordered = tuple(results[name] for name in sorted(results))
    global_flags = (
        _coherence_flag(list(ordered), cfg["kmax"], cfg["coherence_tolerance"]),
    )
    reported_cfg = {
        "kmax": cfg["kmax"],
        "min_ratio": cfg["min_ratio"],
        "families": sorted(specs),
    }
    return BatteryReport(ordered, global_flags, reported_cfg)


def load_config(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
