"""Box counting and dimension estimates.

The constructed set is covered by a slab system: for each functional, the
dot product must have vanishing digits on that functional's scheduled
windows.  count_exact counts, without floating point, the level-r dyadic
cells whose image under every functional meets every window slab.

The walk over levels keeps one canonical state per surviving cell class:
which windows are already satisfied by the whole cell (a bitmask) plus the
cell image's offset modulo the coarsest unsatisfied window period.  Between
windows every surviving cell collapses onto the same state, so the state
table stays small even at depth ~100.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from fractions import Fraction

from .errors import (BudgetExceeded, InsufficientData, MissingCheckpoint,
                     OutOfRange, SaturatedData)

__all__ = ["SlabGroup", "SlabSystem", "slab_system", "ExactCount",
           "count_exact", "decoupled_count", "count_value_cells",
           "count_point_cells", "BoxCount", "BoxCountSeries",
           "sampled_distance_series", "sampled_point_series",
           "ComplexityProfile", "profile_ideal", "profile_c_aware",
           "dim_lower_estimate", "distance_checkpoints", "distance_slack",
           "slope", "FalconerReport", "falconer_check"]


@dataclass(frozen=True)
class SlabGroup:
    """One functional's slab constraints: digits of the dot product vanish
    on each (a, b] window."""

    mantissas: tuple
    precision: int
    windows: tuple  # ((a, b), ...) ascending, disjoint

    def __post_init__(self):
        if self.precision < 0 or not any(self.mantissas):
            raise OutOfRange("group needs a nonzero functional")
        prev_b = 0
        for a, b in self.windows:
            if not 0 <= a < b:
                raise OutOfRange(f"bad window ({a}, {b}]")
            if a < prev_b:
                raise OutOfRange("windows must be disjoint and ascending")
            prev_b = b

    @property
    def support(self) -> tuple:
        return tuple(i for i, v in enumerate(self.mantissas) if v)


@dataclass(frozen=True)
class SlabSystem:
    dim: int
    depth: int
    groups: tuple

    def __post_init__(self):
        for g in self.groups:
            if len(g.mantissas) != self.dim:
                raise OutOfRange("group dimension mismatch")
            if g.windows and max(b for _, b in g.windows) > self.depth:
                raise OutOfRange("window deeper than the system depth")


def slab_system(spec) -> SlabSystem:
    """Margin-aware slab constraints satisfied by every constructed point."""
    sched = spec.schedule
    groups = []
    for ell in range(spec.norm.n_functionals):
        wins = []
        for k in sched.blocks_for_functional(ell):
            a, b = sched.window(k)
            if a < b:
                wins.append((a, b))
        if wins:
            f = spec.norm.functionals[ell]
            groups.append(SlabGroup(f.mantissas, f.precision, tuple(wins)))
    return SlabSystem(spec.dim, sched.depth, tuple(groups))


@dataclass(frozen=True)
class ExactCount:
    r: int
    lower: int
    upper: int
    examined: int

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    @property
    def count(self) -> int:
        if not self.exact:
            raise BudgetExceeded(
                f"{self.upper - self.lower} cells undecided at scale {self.r}",
                examined=self.examined, scale=self.r)
        return self.lower


# extra scale bits so the undecided-cell search can refine below level r
_DFS_HEADROOM = 24


class _Group:
    __slots__ = ("qg", "pv", "wins", "incs", "lenbase", "negabs", "full",
                 "top_attained")

    def __init__(self, g: SlabGroup, r: int, dim: int):
        maxb = max(b for _, b in g.windows)
        self.pv = g.precision
        self.qg = g.precision + max(r, maxb) + _DFS_HEADROOM
        self.wins = tuple((1 << (self.qg - a), 1 << (self.qg - b))
                          for a, b in g.windows)
        self.full = (1 << len(self.wins)) - 1
        incs = []
        for delta in range(1 << dim):
            tot = 0
            for i, v in enumerate(g.mantissas):
                bit = (delta >> i) & 1
                tot += v * bit if v >= 0 else -v * (1 - bit)
            incs.append(tot)
        self.incs = tuple(incs)
        self.lenbase = sum(abs(v) for v in g.mantissas)
        self.negabs = sum(-v for v in g.mantissas if v < 0)
        # with no positive coefficient the image of a half-open cell is
        # closed at the top (attained at the included lower corner), so the
        # interval test must not drop that endpoint
        self.top_attained = not any(v > 0 for v in g.mantissas)


def _intersects(lo: int, length: int, wins: tuple, idx: int = 0) -> bool:
    """Does [lo, lo+length) meet the slab set of wins[idx:]?

    lo is reduced mod wins[idx] period.  A full slab of one window contains
    a whole period of the next (windows are disjoint and ascending), so an
    image spanning period+slab always intersects everything finer.
    """
    period, wd = wins[idx]
    if lo + length >= period + wd or (lo == 0 and length >= wd):
        return True
    last = idx + 1 == len(wins)
    if lo < wd:
        if last or _intersects(lo % wins[idx + 1][0],
                               min(length, wd - lo), wins, idx + 1):
            return True
    if lo + length > period:
        if last or _intersects(0, min(lo + length - period, wd),
                               wins, idx + 1):
            return True
    return False


_OUT = object()


def count_exact(system: SlabSystem, r: int, budget: int = 10**8) -> ExactCount:
    """Number of level-r cells meeting the slab system, by exact arithmetic.

    Returns a lower/upper pair; they coincide (the usual case) unless some
    boundary-touching cells resist the bounded refinement search.  Raises
    BudgetExceeded when the node budget runs out mid-count.
    """
    if not 0 <= r <= system.depth:
        raise OutOfRange(f"scale {r} outside [0, {system.depth}]")
    if r == 0:
        return ExactCount(0, 1, 1, 0)  # the origin always qualifies
    dim = system.dim
    active = [g for g in system.groups if g.windows]
    if not active:
        n = 1 << (r * dim)
        return ExactCount(r, n, n, 0)
    gs = [_Group(g, r, dim) for g in active]
    # every group pinned to its own coordinate: interval reasoning per
    # coordinate is exact, so undecided cells cannot occur
    product_rule = (
        all(len(g.support) == 1 and
            g.mantissas[g.support[0]] == 1 << g.precision for g in active)
        and len({g.support[0] for g in active}) == len(active))

    examined = 0

    def bump():
        nonlocal examined
        examined += 1
        if examined > budget:
            raise BudgetExceeded("box-count budget exhausted",
                                 examined=examined, scale=r)

    def classify(gi: int, mask: int, offset: int, q: int):
        g = gs[gi]
        length = g.lenbase << (g.qg - g.pv - q)
        for wi, (period, wd) in enumerate(g.wins):
            if not (mask >> wi) & 1:
                top = (offset % period) + length
                # an attained image top exactly on the band roof is outside
                # it, so such a window may not be marked fully inside
                if top < wd or (top == wd and not g.top_attained):
                    mask |= 1 << wi
        if mask == g.full:
            return None  # whole cell inside every slab
        rest = tuple(g.wins[wi] for wi in range(len(g.wins))
                     if not (mask >> wi) & 1)
        offset %= rest[0][0]
        if not _intersects(offset, length, rest):
            top = offset + length
            if not (g.top_attained and
                    all(top % period < wd for period, wd in rest)):
                return _OUT
        return (mask, offset, rest)

    def children(state, q: int):
        """Yield (delta-state, all_inside) for each child; prunes dead ones."""
        for delta in range(1 << dim):
            bump()
            child = []
            dead = False
            all_in = True
            for gi, st in enumerate(state):
                if st is None:
                    child.append(None)
                    continue
                g = gs[gi]
                inc = g.incs[delta] << (g.qg - g.pv - q)
                nxt = classify(gi, st[0], st[1] + inc, q)
                if nxt is _OUT:
                    dead = True
                    break
                if nxt is not None:
                    all_in = False
                child.append(nxt)
            if not dead:
                yield tuple(child), all_in

    root = []
    for gi, g in enumerate(gs):
        st = classify(gi, 0, (-g.negabs << (g.qg - g.pv)) % g.wins[0][0], 0)
        if st is _OUT:
            return ExactCount(r, 0, 0, examined)
        root.append(st)
    states = {tuple(root): 1}
    full = 0
    for q in range(r):
        nxt: dict = {}
        for state, mult in states.items():
            if all(st is None for st in state):
                full += mult << ((r - q) * dim)
                continue
            for child, all_in in children(state, q + 1):
                if all_in:
                    full += mult << ((r - q - 1) * dim)
                else:
                    nxt[child] = nxt.get(child, 0) + mult
        states = nxt
        if not states:
            break

    lower = upper = full
    depth_cap = min(g.qg - g.pv for g in gs)
    memo: dict = {}

    def corner_ok(state, q: int) -> bool:
        # the cell's lowest corner is an attained point of the cell
        for gi, st in enumerate(state):
            if st is None:
                continue
            g = gs[gi]
            corner = st[1] + (g.negabs << (g.qg - g.pv - q))
            for period, wd in st[2]:
                if (corner % period) >= wd:
                    return False
        return True

    def refine(state, q: int):
        key = (q, state)
        if key in memo:
            return memo[key]
        if corner_ok(state, q):
            memo[key] = True
            return True
        if q >= depth_cap:
            memo[key] = None
            return None
        undecided = False
        for child, all_in in children(state, q + 1):
            sub = True if all_in else refine(child, q + 1)
            if sub:
                memo[key] = True
                return True
            if sub is None:
                undecided = True
        memo[key] = None if undecided else False
        return memo[key]

    for state, mult in states.items():
        verdict = True if product_rule else refine(state, r)
        if verdict:
            lower += mult
            upper += mult
        elif verdict is None:
            upper += mult
    return ExactCount(r, lower, upper, examined)


def decoupled_count(system: SlabSystem, r: int) -> int:
    """Closed-form count for systems whose groups each pin one coordinate.

    Each coordinate is free except for the window digits forced to zero,
    so the count is a product of per-coordinate powers of two.
    """
    if not 0 <= r <= system.depth:
        raise OutOfRange(f"scale {r} outside [0, {system.depth}]")
    exponent = r * system.dim
    seen = set()
    for g in system.groups:
        if len(g.support) != 1 or g.mantissas[g.support[0]] != 1 << g.precision:
            raise OutOfRange("system is not in product form")
        if g.support[0] in seen:
            raise OutOfRange("two groups share a coordinate")
        seen.add(g.support[0])
        exponent -= sum(min(b, r) - a for a, b in g.windows if a < r)
    return 1 << exponent


def count_value_cells(values, r: int) -> int:
    return len({v.floor_scaled(r) for v in values})


def count_point_cells(points, r: int) -> int:
    return len({tuple(c.floor_scaled(r) for c in p.coords) for p in points})


@dataclass(frozen=True)
class BoxCount:
    r: int
    count: int
    mode: str


@dataclass(frozen=True)
class BoxCountSeries:
    entries: tuple

    def entry(self, r: int) -> BoxCount:
        for e in self.entries:
            if e.r == r:
                return e
        raise MissingCheckpoint(f"no box count at scale {r}")

    @property
    def scales(self) -> tuple:
        return tuple(e.r for e in self.entries)


def _sampled(counts, n_samples, scales) -> BoxCountSeries:
    entries = []
    for r, c in zip(scales, counts):
        mode = "sampled" if n_samples >= 100 * c else "saturated"
        entries.append(BoxCount(r, c, mode))
    return BoxCountSeries(tuple(entries))


def sampled_distance_series(values, scales) -> BoxCountSeries:
    return _sampled([count_value_cells(values, r) for r in scales],
                    len(values), scales)


def sampled_point_series(points, scales) -> BoxCountSeries:
    return _sampled([count_point_cells(points, r) for r in scales],
                    len(points), scales)


@dataclass(frozen=True)
class ComplexityProfile:
    """Piecewise-linear digit-complexity curve with integer breakpoints."""

    segments: tuple  # ((lo, hi, slope), ...) contiguous from 0

    @property
    def depth(self) -> int:
        return self.segments[-1][1]

    def value_at(self, r: int) -> int:
        if not 0 <= r <= self.depth:
            raise OutOfRange(f"scale {r} outside [0, {self.depth}]")
        total = 0
        for lo, hi, s in self.segments:
            if r <= lo:
                break
            total += s * (min(r, hi) - lo)
        return total

    def ratio(self, r: int) -> Fraction:
        if r < 1:
            raise OutOfRange("ratio needs r >= 1")
        return Fraction(self.value_at(r), r)


def _segs(parts) -> tuple:
    out = []
    for lo, hi, s in parts:
        if hi > lo:
            out.append((lo, hi, s))
    return tuple(out)


def profile_ideal(schedule, dim: int, base="set") -> ComplexityProfile:
    parts = []
    if base == "set":
        parts.append((0, schedule.bound(1), 0))
        for k in range(1, schedule.n_blocks + 1):
            parts.append((schedule.bound(k), schedule.split(k), dim))
            parts.append((schedule.split(k), schedule.bound(k + 1), dim - 1))
    else:
        _, ell = base
        pos = 0
        for k in schedule.blocks_for_functional(ell):
            parts.append((pos, schedule.split(k), 1))
            parts.append((schedule.split(k), schedule.bound(k + 1), 0))
            pos = schedule.bound(k + 1)
        parts.append((pos, schedule.depth, 1))
    return ComplexityProfile(_segs(parts))


def profile_c_aware(schedule, dim: int, base="set") -> ComplexityProfile:
    parts = []
    if base == "set":
        parts.append((0, schedule.bound(1), 0))
        for k in range(1, schedule.n_blocks + 1):
            a, b = schedule.window(k)
            if a < b:
                parts.append((schedule.bound(k), a, dim))
                parts.append((a, b, dim - 1))
                parts.append((b, schedule.bound(k + 1), dim))
            else:
                parts.append((schedule.bound(k), schedule.bound(k + 1), dim))
    else:
        _, ell = base
        pos = 0
        for k in schedule.blocks_for_functional(ell):
            a, b = schedule.window(k)
            if a < b:
                parts.append((pos, a, 1))
                parts.append((a, b, 0))
                pos = b
        parts.append((pos, schedule.depth, 1))
    return ComplexityProfile(_segs(parts))


def dim_lower_estimate(series: BoxCountSeries, checkpoints) -> float:
    """min over checkpoints of log2(count)/r; the conservative exponent."""
    best = None
    for r in checkpoints:
        if r < 1:
            raise OutOfRange("checkpoints must be >= 1")
        e = series.entry(r)
        if e.count < 1:
            raise InsufficientData(f"empty count at scale {r}")
        v = math.log2(e.count) / r
        best = v if best is None else min(best, v)
    if best is None:
        raise MissingCheckpoint("no checkpoints given")
    return best


def distance_checkpoints(spec, ell: int) -> list:
    """(scale, ideal digit bound) pairs where the pinned distance set for
    functional ell is provably thin."""
    sched = spec.schedule
    return [(sched.bound(k + 1) - sched.margin, sched.split(k))
            for k in sched.blocks_for_functional(ell)]


def distance_slack(margin: int, block_end: int) -> int:
    """Digits the margin model may add on top of the ideal distance bound."""
    return 2 * margin + (block_end - 1).bit_length() + 3


def slope(series: BoxCountSeries, r_lo: int, r_hi: int) -> float:
    """Least-squares slope of log2(count) against r on [r_lo, r_hi]."""
    picked = [e for e in series.entries
              if r_lo <= e.r <= r_hi and e.count >= 1]
    if len(picked) < 2:
        raise InsufficientData("need two scales for a slope")
    for e in picked:
        if e.mode == "saturated":
            raise SaturatedData(f"scale {e.r} is sample-limited")
    reg = statistics.linear_regression([e.r for e in picked],
                                       [math.log2(e.count) for e in picked])
    return reg.slope


@dataclass(frozen=True)
class FalconerReport:
    dim_set: float
    dim_dist: float
    ambient: int
    tol: float
    threshold: float
    passed: bool


def falconer_check(dim_set: float, dim_dist: float, ambient: int,
                   tol: float = 0.05) -> FalconerReport:
    """Does the distance-set dimension clear dim(E) - (d - 1), up to tol?"""
    threshold = dim_set - (ambient - 1) - tol
    return FalconerReport(dim_set, dim_dist, ambient, tol, threshold,
                          dim_dist >= threshold)
