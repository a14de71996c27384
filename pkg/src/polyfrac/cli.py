"""Command line front end.

Every run resolves the JSON config to a fully explicit parameter set, hashes
it, and stamps the hash into each output file, so artifacts can be matched
to the exact configuration that produced them.  All outputs are
byte-deterministic for a fixed config and flags.

Exit codes: 0 success, 2 config or format problem, 3 verification failure,
4 budget exhausted before any exact count finished.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import construct as cn
from . import dimension as dm
from . import distset as ds
from .errors import (BudgetExceeded, FormatError, OutOfRange, PolyfracError)
from .norms import PolyhedralNorm, custom_norm, margin_ok, min_margin, preset
from .schedule import free_fraction, generate

__version__ = "0.1.0"

_POINTS_FILE = "points.txt"
_SAMPLES_FILE = "samples.txt"


def _canonical_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class _Run:
    spec: "cn.FractalSpec"
    norm_kind: str
    norm_name: str | None
    scales: list
    samples: int
    budget: int
    resolved: dict
    config_hash: str
    manifest_hash: str


def _parse_s(raw) -> Fraction:
    try:
        return Fraction(str(raw))
    except (ValueError, ZeroDivisionError):
        raise OutOfRange(f"cannot read target dimension {raw!r}") from None


def _resolve(cfg: dict, seed=None, samples=None, budget=None) -> _Run:
    if not isinstance(cfg, dict):
        raise FormatError("config must be a JSON object")
    dim = cfg["dimension"]
    if not isinstance(dim, int) or dim < 1:
        raise OutOfRange("dimension must be a positive integer")
    s = _parse_s(cfg["s"])
    ncfg = cfg["norm"]
    if "preset" in ncfg:
        kind, name = "preset", ncfg["preset"]
        norm = preset(name, dim)
    elif "custom" in ncfg:
        kind, name = "custom", None
        norm = custom_norm(ncfg["custom"])
        if norm.dim != dim:
            raise OutOfRange("custom norm dimension != config dimension")
    else:
        raise FormatError("norm needs a preset or custom table")
    scfg = cfg["schedule"]
    margin = scfg.get("c", "auto")
    if margin == "auto":
        margin = min_margin(norm)
    elif not isinstance(margin, int) or not margin_ok(norm, margin):
        raise OutOfRange(f"margin {margin!r} too small for this norm")
    alpha = free_fraction(s, dim)
    if "m" in scfg:
        sched = generate(alpha, margin, norm.n_functionals, m=scfg["m"],
                         widen=True)
    elif scfg.get("rule") == "geometric":
        sched = generate(alpha, margin, norm.n_functionals, K=scfg["K"],
                         ratio=scfg.get("ratio", 2))
    else:
        raise FormatError("schedule needs block ends or a geometric rule")
    seed = cfg.get("seed", 0) if seed is None else seed
    samples = cfg.get("samples", 1000) if samples is None else samples
    budget = cfg.get("budget", 10**8) if budget is None else budget
    if not isinstance(samples, int) or samples < 1:
        raise OutOfRange("samples must be a positive integer")
    if not isinstance(budget, int) or budget < 1:
        raise OutOfRange("budget must be a positive integer")
    spec = cn.FractalSpec(dim, s, norm, sched, seed)
    raw_scales = cfg.get("scales", "checkpoints")
    if raw_scales == "checkpoints":
        scales = [sched.bound(k) for k in range(2, sched.n_blocks + 2)]
    else:
        scales = list(raw_scales)
        for r in scales:
            if not isinstance(r, int) or not 1 <= r <= sched.depth:
                raise OutOfRange(f"scale {r!r} outside 1..{sched.depth}")
    resolved = {
        "dimension": dim,
        "s": f"{s.numerator}/{s.denominator}",
        "alpha": f"{alpha.numerator}/{alpha.denominator}",
        "seed": seed,
        "samples": samples,
        "budget": budget,
        "scales": scales,
        "norm": {
            "kind": kind,
            "name": name,
            "n_functionals": norm.n_functionals,
            "pivots": [f.pivot for f in norm.functionals],
            "min_margin": min_margin(norm),
            "functionals": [[[v, f.precision] for v in f.mantissas]
                            for f in norm.functionals],
        },
        "schedule": {"margin": sched.margin, "m": list(sched.bounds),
                     "n": list(sched.splits)},
    }
    return _Run(spec, kind, name, scales, samples, budget, resolved,
                _canonical_hash(cfg), _canonical_hash(resolved))


def _write_manifest(run: _Run, out: str) -> None:
    doc = {
        "format": "polyfrac-manifest v1",
        "tool": f"polyfrac {__version__}",
        "config_hash": run.config_hash,
        "manifest_hash": run.manifest_hash,
        "resolved": run.resolved,
    }
    path = os.path.join(out, "manifest.json")
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _write_lines(path: str, lines: list) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _boxcount_csv(series: dm.BoxCountSeries, mhash: str) -> list:
    lines = ["polyfrac-boxcounts v1", f"# manifest {mhash}",
             "r,count,log2_count,mode"]
    for e in series.entries:
        lg = math.log2(e.count) if e.count else float("-inf")
        lines.append(f"{e.r},{e.count},{lg:.6f},{e.mode}")
    return lines


def _series_svg(series: dm.BoxCountSeries, mhash: str, title: str) -> list:
    pts = [(e.r, math.log2(e.count)) for e in series.entries if e.count]
    w, h, ml, mb = 400, 300, 45, 40
    if pts:
        rlo, rhi = min(p[0] for p in pts), max(p[0] for p in pts)
        vhi = max(p[1] for p in pts) or 1.0
        rspan = (rhi - rlo) or 1
        coords = " ".join(
            f"{ml + (r - rlo) / rspan * (w - ml - 20):.2f},"
            f"{h - mb - v / vhi * (h - mb - 30):.2f}" for r, v in pts)
    else:
        coords = ""
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}">',
        f"<!-- manifest {mhash} -->",
        f'<text x="{ml}" y="18" font-size="12">{title}</text>',
        f'<polyline fill="none" stroke="#888" points="{ml},{h - mb} '
        f'{w - 20},{h - mb}"/>',
        f'<polyline fill="none" stroke="#888" points="{ml},{h - mb} '
        f'{ml},20"/>',
        f'<polyline fill="none" stroke="#000" points="{coords}"/>',
        "</svg>",
    ]


def _build_points(run: _Run):
    x = cn.pinned_point(run.spec)
    ys = cn.sample_points(run.spec, run.samples)
    return x, ys


def cmd_construct(run: _Run, args) -> int:
    x, ys = _build_points(run)
    for pt in [x] + ys:
        report = cn.verify_point(pt, run.spec)
        if not report.ok:
            k, check, place = report.failures[0]
            print(f"point {pt.index}: block {k} {check} fails at place "
                  f"{place}", file=sys.stderr)
            return 3
    path = os.path.join(args.out, _POINTS_FILE)
    cn.write_points(path, [x] + ys, run.manifest_hash)
    _write_manifest(run, args.out)
    print(f"wrote {1 + len(ys)} points (d={run.spec.dim}, "
          f"prec={run.spec.schedule.depth}) to {path}")
    return 0


def cmd_sample(run: _Run, args) -> int:
    ys = cn.sample_points(run.spec, run.samples)
    path = os.path.join(args.out, _SAMPLES_FILE)
    cn.write_points(path, ys, run.manifest_hash)
    _write_manifest(run, args.out)
    print(f"wrote {len(ys)} sample points to {path}")
    return 0


def cmd_distset(run: _Run, args) -> int:
    x, ys = _build_points(run)
    if args.pairwise:
        recs = ds.pairwise(ys, run.spec.norm, cap=run.budget,
                           seed=run.spec.seed)
    else:
        recs = ds.pinned(x, ys, run.spec.norm)
    by_index = {p.index: p for p in [x] + ys}
    header = "pair_id,ell,mantissa_hex,prec"
    if args.euclid is not None:
        header += ",euclid_mantissa_hex,euclid_prec"
    lines = ["polyfrac-distances v1", f"# manifest {run.manifest_hash}",
             header]
    for rec in recs:
        i, j = rec.source
        row = (f"{i}-{j},{rec.achieving},"
               f"{cn.mantissa_to_hex(rec.value.mantissa, rec.value.precision)},"
               f"{rec.value.precision}")
        if args.euclid is not None:
            delta = [a - b for a, b in
                     zip(by_index[i].coords, by_index[j].coords)]
            e = ds.euclid_floor(delta, args.euclid)
            row += f",{cn.mantissa_to_hex(e.mantissa, e.precision)},{e.precision}"
        lines.append(row)
    path = os.path.join(args.out, "distances.csv")
    _write_lines(path, lines)
    _write_manifest(run, args.out)
    kind = "pairwise" if args.pairwise else "pinned"
    print(f"wrote {len(recs)} {kind} distances to {path}")
    return 0


def cmd_boxdim(run: _Run, args) -> int:
    spec = run.spec
    system = dm.slab_system(spec)
    points = None
    entries = []
    exact_done = 0
    for r in run.scales:
        try:
            ec = dm.count_exact(system, r, run.budget)
            entries.append(dm.BoxCount(r, ec.count, "exact"))
            exact_done += 1
        except BudgetExceeded:
            if points is None:
                x, ys = _build_points(run)
                points = [x] + ys
            c = dm.count_point_cells(points, r)
            mode = "sampled" if len(points) >= 100 * c else "saturated"
            entries.append(dm.BoxCount(r, c, mode))
    set_series = dm.BoxCountSeries(tuple(entries))
    _write_lines(os.path.join(args.out, "boxcounts_set.csv"),
                 _boxcount_csv(set_series, run.manifest_hash))
    _write_lines(os.path.join(args.out, "boxcounts_set.svg"),
                 _series_svg(set_series, run.manifest_hash, "set"))
    for e in set_series.entries:
        print(f"r={e.r} count={e.count} mode={e.mode}")

    x, ys = _build_points(run) if points is None else (points[0], points[1:])
    values = ds.estimation_values(ds.pinned(x, ys, spec.norm))
    dist_series = {}
    for ell in range(spec.norm.n_functionals):
        cps = [r for r, _ in dm.distance_checkpoints(spec, ell)]
        ser = dm.sampled_distance_series(values.get(ell, []), cps)
        dist_series[ell] = (ser, cps)
        tag = f"dist_ell{ell}"
        _write_lines(os.path.join(args.out, f"boxcounts_{tag}.csv"),
                     _boxcount_csv(ser, run.manifest_hash))
        _write_lines(os.path.join(args.out, f"boxcounts_{tag}.svg"),
                     _series_svg(ser, run.manifest_hash, tag))
    _write_manifest(run, args.out)

    est_set = dm.dim_lower_estimate(set_series, run.scales)
    print(f"dim_set lower estimate {est_set:.4f} over scales "
          f"{list(run.scales)}")
    sched = spec.schedule
    for ell in range(spec.norm.n_functionals):
        ser, _ = dist_series[ell]
        for (r, bound), k in zip(dm.distance_checkpoints(spec, ell),
                                 sched.blocks_for_functional(ell)):
            slack = dm.distance_slack(sched.margin, sched.bound(k + 1))
            e = ser.entry(r)
            if e.count:
                lg = math.log2(e.count)
                word = "ok" if lg <= bound + slack else "over"
                print(f"dist ell={ell} r={r} log2count={lg:.2f} "
                      f"bound={bound}+{slack} {word}")
            else:
                print(f"dist ell={ell} r={r} empty bound={bound}+{slack} ok")

    code = 0
    if args.falconer:
        est_dist = None
        for ell, (ser, cps) in dist_series.items():
            usable = [r for r in cps if ser.entry(r).count >= 1]
            if not usable:
                continue
            v = dm.dim_lower_estimate(ser, usable)
            est_dist = v if est_dist is None else min(est_dist, v)
        if est_dist is None:
            est_dist = 0.0
        rep = dm.falconer_check(est_set, est_dist, spec.dim)
        word = "PASS" if rep.passed else "FAIL"
        print(f"falconer: dim_set>={est_set:.4f} dim_dist>={est_dist:.4f} "
              f"threshold={rep.threshold:.4f} {word}")
        if not rep.passed:
            code = 3
    if exact_done == 0:
        print("no exact scale completed within budget", file=sys.stderr)
        return 4
    return code


def cmd_profile(run: _Run, args) -> int:
    sched = run.spec.schedule
    bases = [("set", "set")]
    bases += [(f"dist_ell{ell}", ("distance", ell))
              for ell in range(run.spec.norm.n_functionals)]
    for tag, base in bases:
        ideal = dm.profile_ideal(sched, run.spec.dim, base)
        aware = dm.profile_c_aware(sched, run.spec.dim, base)
        lines = ["polyfrac-profiles v1", f"# manifest {run.manifest_hash}",
                 "r,P_ideal,P_c_aware,ratio_ideal,ratio_c_aware"]
        for r in range(1, sched.depth + 1):
            ri, rc = ideal.ratio(r), aware.ratio(r)
            lines.append(f"{r},{ideal.value_at(r)},{aware.value_at(r)},"
                         f"{ri.numerator}/{ri.denominator},"
                         f"{rc.numerator}/{rc.denominator}")
        path = os.path.join(args.out, f"profiles_{tag}.csv")
        _write_lines(path, lines)
        print(f"wrote {path}")
    _write_manifest(run, args.out)
    return 0


def cmd_verify(run: _Run, args) -> int:
    path = os.path.join(args.out, _POINTS_FILE)
    points, mhash = cn.read_points(path)
    if mhash != run.manifest_hash:
        print(f"manifest mismatch: file {mhash[:12]}.. != "
              f"config {run.manifest_hash[:12]}..", file=sys.stderr)
        return 2
    spec = run.spec
    if points[0].dim != spec.dim or points[0].precision != spec.schedule.depth:
        print("points file shape does not match the config", file=sys.stderr)
        return 2
    for pt in points:
        report = cn.verify_point(pt, spec)
        if not report.ok:
            k, check, place = report.failures[0]
            print(f"point {pt.index}: block {k} {check} fails at place "
                  f"{place}", file=sys.stderr)
            return 3
    pinned = [p for p in points if p.role == "pinned"]
    pairs = 0
    if pinned:
        x = pinned[0]
        for pt in points:
            if pt.index == x.index:
                continue
            rep = ds.collapse_check(x, pt, spec)
            if not rep.ok:
                bad = next(b.block for b in rep.blocks
                           if not b.constant_trimmed)
                print(f"pair {x.index}-{pt.index}: collapse fails at block "
                      f"{bad}", file=sys.stderr)
                return 3
            pairs += 1
    print(f"verified {len(points)} points")
    if pairs:
        print(f"collapse ok on {pairs} pinned pairs")
    return 0


_COMMANDS = {
    "construct": cmd_construct,
    "sample": cmd_sample,
    "distset": cmd_distset,
    "boxdim": cmd_boxdim,
    "profile": cmd_profile,
    "verify": cmd_verify,
}


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="polyfrac")
    sub = top.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--budget", type=int)
        if name == "distset":
            mode = p.add_mutually_exclusive_group()
            mode.add_argument("--pinned", action="store_true")
            mode.add_argument("--pairwise", action="store_true")
            p.add_argument("--euclid", type=int)
        if name == "boxdim":
            p.add_argument("--falconer", action="store_true")
    return top


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    threads = os.environ.get("POLYFRAC_THREADS")
    if threads is not None:
        try:
            if int(threads) < 1:
                raise ValueError
        except ValueError:
            print(f"bad POLYFRAC_THREADS value {threads!r}", file=sys.stderr)
            return 2
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
        run = _resolve(cfg, seed=args.seed, samples=args.samples,
                       budget=args.budget)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError,
            PolyfracError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    try:
        return _COMMANDS[args.command](run, args)
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return 2
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceeded as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return 4
    except PolyfracError as exc:
        print(f"verification error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
