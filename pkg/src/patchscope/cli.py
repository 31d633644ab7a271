"""Command-line front end.

Exit codes: 0 success, 1 domain or usage error, 2 flag failure inside
`verify`.  JSON is the canonical report format; the `dim` subcommand also
writes CSV when the output path ends in .csv.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction
from pathlib import Path

from . import battery as battery_mod
from .geometry import PointSet
from .griddim import assouad_estimate, best_tangent, box_estimate, power_scale_pairs
from .numtheory import (
    IntegerSequence,
    bhp_subsequence,
    classify_decay,
    find_3ap,
    gap_difference,
    gen_reciprocals,
    gen_set,
    large_set_diagnostics,
    read_integer_sequence,
    sieve_primes,
    write_integer_sequence,
)
from .patchsearch import best_patch_defect, steinhaus_defect
from .pointset_io import read_point_set, write_point_set

_POWER_RE = re.compile(r"^(\d+)\^(-?\d+)$")


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on bad usage, per the CLI contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def _parse_rational(text: str) -> Fraction:
    """Accept '3', '1/8', or power notation like '2^-5'."""
    m = _POWER_RE.match(text)
    if m:
        return Fraction(int(m.group(1))) ** int(m.group(2))
    return Fraction(text)


def _parse_pairs(text: str, base: int):
    pairs = []
    for item in text.split(","):
        a, _, b = item.partition(":")
        pairs.append((int(a), int(b)))
    return power_scale_pairs(pairs, base=base)


def _default_pairs(base: int):
    return power_scale_pairs([(a, a + 4) for a in range(0, 9)], base=base)


def _write_json(payload: dict, path: str) -> None:
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _cmd_gen(args) -> int:
    family = args.family
    kwargs = {}
    if family == "e_p":
        kwargs = {"p": args.p, "n": args.n}
    elif family == "union_patches":
        kwargs = {"base": args.base, "count": args.count}
    elif family == "squares":
        kwargs = {"n": args.n}
    elif family == "prime_powers":
        kwargs = {"m": args.m, "limit": args.n}
    elif family == "primes":
        kwargs = {"limit": args.n}
    elif family in ("full_grid", "cantor"):
        kwargs = {"depth": args.n}
    elif family == "reciprocals":
        if not args.seq:
            raise ValueError("family 'reciprocals' needs --seq FILE")
        kwargs = {"seq": read_integer_sequence(args.seq)}
    pset = gen_set(family, **kwargs)
    write_point_set(pset, args.output)
    print(f"wrote {len(pset)} points to {args.output}")
    return 0


def _cmd_dim(args) -> int:
    pset = read_point_set(args.file)
    pairs = (
        _parse_pairs(args.pairs, args.base) if args.pairs else _default_pairs(args.base)
    )
    report = assouad_estimate(pset, pairs, min_ratio=_parse_rational(args.min_ratio))
    for row in report.rows:
        print(
            f"R={row.R} r={row.r} M={row.max_cell_count} "
            f"s={row.exponent:.6f} witness={list(row.witness)}"
        )
    print(f"estimate={report.estimate:.6f} (min ratio {report.min_ratio})")
    if args.output:
        if args.output.endswith(".csv"):
            Path(args.output).write_text(report.to_csv(), encoding="utf-8")
        else:
            _write_json(report.to_json_dict(), args.output)
    return 0


def _cmd_box(args) -> int:
    pset = read_point_set(args.file)
    if args.scales:
        scales = [_parse_rational(s) for s in args.scales.split(",")]
    else:
        scales = [Fraction(1, 2**k) for k in range(1, 9)]
    report = box_estimate(pset, scales)
    for row in report.rows:
        print(f"scale={row.scale} N={row.count}")
    print(f"slopes={['%.4f' % s for s in report.slopes]} final={report.final_slope:.4f}")
    if args.output:
        _write_json(report.to_json_dict(), args.output)
    return 0


def _cmd_patch(args) -> int:
    pset = read_point_set(args.file)
    report = best_patch_defect(pset, args.k, strategy=args.strategy)
    print(report.summary())
    if args.output:
        _write_json(report.to_json_dict(), args.output)
    return 0


def _cmd_steinhaus(args) -> int:
    pset = read_point_set(args.file)
    pattern = read_point_set(args.pattern)
    report = steinhaus_defect(pset, pattern, strategy=args.strategy)
    print(report.summary())
    if args.output:
        _write_json(report.to_json_dict(), args.output)
    return 0


def _cmd_tangent(args) -> int:
    pset = read_point_set(args.file)
    pairs = (
        _parse_pairs(args.pairs, args.base) if args.pairs else _default_pairs(args.base)
    )
    resolution = _parse_rational(args.resolution) if args.resolution else None
    sim, image, defect = best_tangent(
        pset, pairs, min_ratio=_parse_rational(args.min_ratio), ball_resolution=resolution
    )
    shift = ",".join(str(c) for c in sim.shift)
    print(f"similarity: x -> {sim.scale}*x + ({shift})")
    print(f"image points: {len(image)}")
    print(f"defect: {defect} ({float(defect):.6f})")
    if args.output:
        payload = {
            "scale": str(sim.scale),
            "shift": [str(c) for c in sim.shift],
            "defect": str(defect),
            "defect_float": float(defect),
            "image": [[str(c) for c in p] for p in image.points],
        }
        _write_json(payload, args.output)
    return 0


def _cmd_numtheory(args) -> int:
    if args.task == "primes":
        seq = sieve_primes(args.N)
        print(f"pi({args.N}) = {len(seq)}")
        if args.output:
            write_integer_sequence(seq, args.output)
    elif args.task == "bhp":
        seq, rep = bhp_subsequence(args.K)
        recips = gen_reciprocals(seq)
        gaps = classify_decay(recips)
        positive_from = 1
        for k in range(1, len(seq) - 1):
            g, _ = gap_difference(recips, k)
            if g <= 0:
                positive_from = k + 1
        print(f"K={args.K} max empirical constant={rep.max_constant:.4f}")
        print(f"gap differences positive for k >= {positive_from}")
        print(f"decay class: {gaps.classification}")
        if args.output:
            write_integer_sequence(seq, args.output)
    elif args.task == "no3ap":
        pset = gen_set("e_p", p=args.p, n=args.N)
        hit = find_3ap(pset)
        if hit is None:
            print(f"no 3-term progression in {{1/n^{args.p} : n <= {args.N}}}")
        else:
            print(f"3-term progression: {hit[0]}, {hit[1]}, {hit[2]}")
    elif args.task == "blocks":
        seq = sieve_primes(args.N)
        report = large_set_diagnostics(seq, args.kmax)
        for row in report.rows:
            ratio = "-" if row.log2_ratio is None else f"{row.log2_ratio:.4f}"
            print(
                f"k={row.k} |F_k|={row.block_size} log2/k={ratio} "
                f"harmonic={float(row.harmonic_partial):.6f} "
                f"cover={row.covering_count} holds={row.covering_holds}"
            )
        print(f"covering inequality holds at every k: {report.all_hold}")
        if args.output:
            _write_json(report.to_json_dict(), args.output)
    return 0


def _cmd_verify(args) -> int:
    families = args.families.split(",") if args.families else None
    config = battery_mod.load_config(args.config) if args.config else None
    report = battery_mod.run_battery(
        families=families, kmax=args.kmax, config=config, threads=args.threads
    )
    for fam in report.families:
        for flag in fam.flags:
            status = "PASS" if flag.passed else "FAIL"
            print(f"[{status}] {fam.name}: {flag.name} ({flag.predicate})")
    for flag in report.global_flags:
        status = "PASS" if flag.passed else "FAIL"
        print(f"[{status}] battery: {flag.name}")
    if args.output:
        Path(args.output).write_text(report.to_json(), encoding="utf-8")
    print(f"all_pass={report.all_pass}")
    return 0 if report.all_pass else 2


def build_parser() -> _Parser:
    parser = _Parser(prog="patchscope")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a built-in point-set family")
    p.add_argument("family", choices=sorted(
        ["e_p", "union_patches", "squares", "prime_powers", "primes", "full_grid",
         "cantor", "reciprocals"]))
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--base", type=int, default=4)
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--seq", help="integer-sequence file (for 'reciprocals')")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("dim", help="grid dimension estimate over scale pairs")
    p.add_argument("--pairs", help="exponent pairs a:b,... with R=base^-a, r=base^-b")
    p.add_argument("--base", type=int, default=2)
    p.add_argument("--min-ratio", default="16")
    p.add_argument("-o", "--output", help=".json or .csv report")
    p.add_argument("file")
    p.set_defaults(func=_cmd_dim)

    p = sub.add_parser("box", help="global occupied-cell counts and slopes")
    p.add_argument("--scales", help="comma-separated scales, e.g. 1/2,1/4 or 2^-3")
    p.add_argument("-o", "--output")
    p.add_argument("file")
    p.set_defaults(func=_cmd_box)

    p = sub.add_parser("patch", help="minimal relative defect for size-k patches")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--strategy", choices=["anchored", "grid"], default="anchored")
    p.add_argument("-o", "--output")
    p.add_argument("file")
    p.set_defaults(func=_cmd_patch)

    p = sub.add_parser("steinhaus", help="minimal relative defect for a pattern")
    p.add_argument("--pattern", required=True, help="pattern point-set file")
    p.add_argument("--strategy", choices=["anchored", "grid"], default="anchored")
    p.add_argument("-o", "--output")
    p.add_argument("file")
    p.set_defaults(func=_cmd_steinhaus)

    p = sub.add_parser("tangent", help="zoom the best witness cell onto the unit ball")
    p.add_argument("--pairs")
    p.add_argument("--base", type=int, default=2)
    p.add_argument("--min-ratio", default="16")
    p.add_argument("--resolution", help="ball grid resolution (default 2r/R)")
    p.add_argument("-o", "--output")
    p.add_argument("file")
    p.set_defaults(func=_cmd_tangent)

    p = sub.add_parser("numtheory", help="prime and large-set diagnostics")
    p.add_argument("task", choices=["primes", "bhp", "no3ap", "blocks"])
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--K", type=int, default=200)
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--kmax", type=int, default=10)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_numtheory)

    p = sub.add_parser("verify", help="run the family battery and flag checks")
    p.add_argument("--families", help="comma-separated names, or 'all'")
    p.add_argument("--kmax", type=int)
    p.add_argument("--config", help="JSON config overriding the frozen defaults")
    p.add_argument("--threads", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
