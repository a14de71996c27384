"""Two-step digit construction of sample points.

Each block k first draws random digits (all coordinates on [m_k, m_{k+1})
except the pivot, the pivot only on [m_k, n_k)), then solves for the pivot
digits on [n_k, m_{k+1}) so that the partial dot sum with the block's
functional lands on a marker residue: zero digits across the trimmed window,
then 1, then 0.  The marker keeps the window digits of the full dot product
at zero even after every later block and the floor comparisons between
truncated and full sums exact.

Digit state is kept as one integer mantissa per coordinate at the schedule
depth; place j of coordinate i is bit (depth - j) of mantissa i.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

from .dyadic import Dyadic
from .errors import (FormatError, NoSolution, OutOfRange, PrecisionExceeded)
from .norms import Functional, PolyhedralNorm, min_margin
from .schedule import BlockSchedule, validate
from .streams import BitStream

__all__ = ["FractalSpec", "SamplePoint", "PointReport", "make_spec",
           "build_point", "pinned_point", "sample_points",
           "solve_pivot_offset", "membership", "verify_carry",
           "pattern_holds", "verify_point", "write_points", "read_points"]

log = logging.getLogger(__name__)

ROLE_TAGS = {"pinned": "x", "sample": "y"}
TAG_ROLES = {v: k for k, v in ROLE_TAGS.items()}


@dataclass(frozen=True)
class FractalSpec:
    """Everything that pins down one construction run."""

    dim: int
    target: Fraction
    norm: PolyhedralNorm
    schedule: BlockSchedule
    seed: int

    def __post_init__(self):
        if self.norm.dim != self.dim:
            raise OutOfRange("norm dimension does not match spec dimension")
        if not 0 <= self.seed < 1 << 64:
            raise OutOfRange("seed must be an unsigned 64-bit integer")
        if self.schedule.free_fraction != self.target - (self.dim - 1):
            raise OutOfRange("schedule free fraction inconsistent with target")
        if self.schedule.n_functionals != self.norm.n_functionals:
            raise OutOfRange("schedule cycle length != functional count")
        c = min_margin(self.norm)
        if self.schedule.margin < c:
            raise OutOfRange(
                f"margin {self.schedule.margin} below norm requirement {c}")
        report = validate(self.schedule)
        if not report.ok:
            from .errors import InfeasibleSchedule
            raise InfeasibleSchedule("; ".join(report.failures()))


def make_spec(dim: int, target, norm: PolyhedralNorm, seed: int, *, m=None,
              K=None, ratio=None, margin=None, widen: bool = True) -> FractalSpec:
    """Assemble a spec, deriving margin and schedule from the norm."""
    from .schedule import free_fraction, generate
    target = Fraction(target)
    alpha = free_fraction(target, dim)
    c = min_margin(norm) if margin is None else margin
    sched = generate(alpha, c, norm.n_functionals, m=m, K=K, ratio=ratio,
                     widen=widen)
    return FractalSpec(dim, target, norm, sched, seed)


@dataclass(frozen=True)
class SamplePoint:
    coords: tuple[Dyadic, ...]
    role: str
    index: int

    def __post_init__(self):
        if self.role not in ROLE_TAGS:
            raise OutOfRange(f"unknown role {self.role!r}")
        if not self.coords:
            raise OutOfRange("point needs at least one coordinate")
        p = self.coords[0].precision
        for v in self.coords:
            if v.precision != p:
                raise OutOfRange("coordinates must share one precision")
            if not 0 <= v.mantissa < 1 << p:
                raise OutOfRange("coordinates must lie in [0, 1)")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def precision(self) -> int:
        return self.coords[0].precision

    def bit(self, i: int, j: int) -> int:
        return self.coords[i].bit(j)


# -- pivot digit solver ----------------------------------------------------

def _steer(rho: int, step: int, modulus: int, lo: int, width: int,
           max_offsets: int) -> int:
    """Smallest u >= 0 with (rho + u*step) mod modulus in [lo, lo+width).

    Requires step <= width; then every period at or above rho admits a
    landing, so only the u < max_offsets cap can fail.
    """
    q0 = max(0, -((rho + 1 - lo - width) // -modulus))
    for q in range(q0, q0 + 4):
        target = lo + q * modulus
        u = max(0, -((rho - target) // step))
        val = rho + u * step
        if target <= val < target + width and u < max_offsets:
            return u
    raise NoSolution(
        f"no admissible offset below 2**{max_offsets.bit_length() - 1}")


def solve_pivot_offset(partial_sum: Dyadic, pivot_coeff: Dyadic, split: int,
                       block_end: int, margin: int) -> int:
    """Offset U whose bits, written at places [split, block_end) of the pivot
    coordinate, put the block's truncated dot sum on the marker residue.

    partial_sum is the dot sum truncated at place block_end - 1 with the
    unknown pivot digits still zero.  Bit t of U is the digit at place
    (block_end - 1) - t.  Raises NoSolution only when the margin or window
    preconditions are violated.
    """
    if pivot_coeff.mantissa <= 0:
        raise OutOfRange("pivot coefficient must be positive")
    a = split + margin
    b = block_end - margin
    if a >= b:
        return 0
    t = block_end - 1
    scale = max(partial_sum.precision, t + pivot_coeff.precision, b + 2)
    s0 = partial_sum.mantissa << (scale - partial_sum.precision)
    step = pivot_coeff.mantissa << (scale - t - pivot_coeff.precision)
    modulus = 1 << (scale - a)
    lo = 1 << (scale - b - 1)
    width = 1 << (scale - b - 2)
    if step > width:
        raise NoSolution("pivot coefficient too large for the margin")
    return _steer(s0 % modulus, step, modulus, lo, width,
                  1 << (block_end - split))


def _solve_block(mants: list, depth: int, f: Functional, split: int,
                 block_end: int, margin: int) -> int:
    # integer fast path of solve_pivot_offset on the live digit state
    t = block_end - 1
    pv = f.precision
    s0 = 0
    for m, v in zip(mants, f.mantissas):
        s0 += (m >> (depth - t)) * v
    a = split + margin
    b = block_end - margin
    modulus = 1 << (t + pv - a)
    lo = 1 << (t + pv - b - 1)
    width = 1 << (t + pv - b - 2)
    return _steer(s0 % modulus, f.mantissas[f.pivot], modulus, lo, width,
                  1 << (block_end - split))


# -- point construction ----------------------------------------------------

def build_point(spec: FractalSpec, index: int = 0,
                role: str = "pinned") -> SamplePoint:
    sched = spec.schedule
    depth = sched.depth
    mants = [0] * spec.dim
    for k in range(1, sched.n_blocks + 1):
        f = spec.norm.functionals[sched.functional_for_block(k)]
        m_lo, m_hi = sched.bound(k), sched.bound(k + 1)
        n = sched.split(k)
        for i in range(spec.dim):
            hi = n if i == f.pivot else m_hi
            nbits = hi - m_lo
            if nbits:
                bits = BitStream(spec.seed, "point", index, "coord", i,
                                 "block", k).take_bits(nbits)
                mants[i] |= bits << (depth - hi + 1)
        if n < m_hi:
            u = _solve_block(mants, depth, f, n, m_hi, sched.margin)
            mants[f.pivot] |= u << (depth - m_hi + 1)
    for i in range(spec.dim):
        mants[i] |= BitStream(spec.seed, "point", index, "coord", i,
                              "block", sched.n_blocks + 1).take_bit()
    return SamplePoint(tuple(Dyadic(m, depth) for m in mants), role, index)


def pinned_point(spec: FractalSpec) -> SamplePoint:
    return build_point(spec, 0, "pinned")


def sample_points(spec: FractalSpec, count: int,
                  start_index: int = 1) -> list[SamplePoint]:
    """count independent sample points with stream indices start_index.."""
    if count < 1:
        raise OutOfRange("sample count must be >= 1")
    points = []
    seen = {}
    for t in range(count):
        pt = build_point(spec, start_index + t, "sample")
        key = tuple(v.mantissa for v in pt.coords)
        if key in seen:
            log.warning("points %d and %d are identical", seen[key], pt.index)
        seen[key] = pt.index
        points.append(pt)
    return points


# -- per-block verification ------------------------------------------------

def _require_depth(point: SamplePoint, spec: FractalSpec, k: int) -> None:
    if point.precision < spec.schedule.bound(k + 1):
        raise PrecisionExceeded(
            f"block {k} needs {spec.schedule.bound(k + 1)} stored places, "
            f"point has {point.precision}")


def _dot_mantissa(point: SamplePoint, f: Functional) -> int:
    return sum(v.mantissa * m for v, m in zip(point.coords, f.mantissas))


def membership(point: SamplePoint, spec: FractalSpec, k: int) -> bool:
    """All digits of the full dot product vanish on block k's window."""
    _require_depth(point, spec, k)
    a, b = spec.schedule.window(k)
    if a >= b:
        return True
    f = spec.norm.functionals[spec.schedule.functional_for_block(k)]
    scale = point.precision + f.precision
    # digits on (a, b] all zero <=> residue mod 2^-a below 2^-b
    res = _dot_mantissa(point, f) % (1 << (scale - a))
    return res < 1 << (scale - b)


def verify_carry(point: SamplePoint, spec: FractalSpec, k: int) -> bool:
    """Truncated and full dot products share floors on block k's window."""
    _require_depth(point, spec, k)
    a, b = spec.schedule.window(k)
    if a >= b:
        return True
    f = spec.norm.functionals[spec.schedule.functional_for_block(k)]
    m_hi = spec.schedule.bound(k + 1)
    full = _dot_mantissa(point, f)
    trunc = sum((v.mantissa >> (point.precision - m_hi)) * m
                for v, m in zip(point.coords, f.mantissas))
    # agreement at the finest window place implies all coarser places
    return full >> (point.precision + f.precision - b) == \
        trunc >> (m_hi + f.precision - b)


def pattern_holds(point: SamplePoint, spec: FractalSpec, k: int) -> bool:
    """The marker residue the solver installed during block k."""
    _require_depth(point, spec, k)
    a, b = spec.schedule.window(k)
    if a >= b:
        return True
    f = spec.norm.functionals[spec.schedule.functional_for_block(k)]
    t = spec.schedule.bound(k + 1) - 1
    scale = t + f.precision
    s0 = sum((v.mantissa >> (point.precision - t)) * m
             for v, m in zip(point.coords, f.mantissas))
    res = s0 % (1 << (scale - a))
    lo = 1 << (scale - b - 1)
    return lo <= res < lo + (1 << (scale - b - 2))


@dataclass(frozen=True)
class PointReport:
    failures: tuple  # (block, check, place) triples

    @property
    def ok(self) -> bool:
        return not self.failures


def _first_window_place(point, spec, k, check):
    """Locate the leftmost offending place for a failed check, for reports."""
    a, b = spec.schedule.window(k)
    f = spec.norm.functionals[spec.schedule.functional_for_block(k)]
    scale = point.precision + f.precision
    full = _dot_mantissa(point, f)
    if check == "membership":
        for j in range(a + 1, b + 1):
            if (full >> (scale - j)) & 1:
                return j
    elif check == "carry":
        m_hi = spec.schedule.bound(k + 1)
        trunc = sum((v.mantissa >> (point.precision - m_hi)) * m
                    for v, m in zip(point.coords, f.mantissas))
        for j in range(a + 1, b + 1):
            if full >> (scale - j) != trunc >> (m_hi + f.precision - j):
                return j
    return b + 1  # marker place


def verify_point(point: SamplePoint, spec: FractalSpec) -> PointReport:
    failures = []
    for k in range(1, spec.schedule.n_blocks + 1):
        for check, fn in (("membership", membership), ("carry", verify_carry),
                          ("pattern", pattern_holds)):
            if not fn(point, spec, k):
                failures.append((k, check, _first_window_place(point, spec,
                                                              k, check)))
    return PointReport(tuple(failures))


# -- points file -----------------------------------------------------------

def _hex_width(prec: int) -> int:
    return (prec + 3) // 4


def mantissa_to_hex(m: int, prec: int) -> str:
    w = _hex_width(prec)
    return format(m << (4 * w - prec), f"0{w}x")


def hex_to_mantissa(s: str, prec: int) -> int:
    w = _hex_width(prec)
    if len(s) != w:
        raise FormatError(f"expected {w} hex digits, got {len(s)}")
    try:
        v = int(s, 16)
    except ValueError:
        raise FormatError(f"bad hex field {s!r}") from None
    pad = 4 * w - prec
    if v & ((1 << pad) - 1):
        raise FormatError("nonzero padding bits in mantissa field")
    return v >> pad


def write_points(path, points: list, manifest_hash: str) -> None:
    pt0 = points[0]
    lines = ["polyfrac-points v1", f"# manifest {manifest_hash}",
             f"d={pt0.dim} prec={pt0.precision} count={len(points)}"]
    for pt in points:
        fields = [ROLE_TAGS[pt.role]]
        fields += [mantissa_to_hex(v.mantissa, pt.precision)
                   for v in pt.coords]
        lines.append(" ".join(fields))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_points(path) -> tuple[list, str]:
    """Points plus the manifest hash they were written under."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "polyfrac-points v1":
        raise FormatError("not a polyfrac points file")
    if len(lines) < 3 or not lines[1].startswith("# manifest "):
        raise FormatError("missing manifest line")
    mhash = lines[1].split()[-1]
    try:
        head = dict(field.split("=") for field in lines[2].split())
        dim, prec, count = (int(head[k]) for k in ("d", "prec", "count"))
    except (ValueError, KeyError):
        raise FormatError("malformed header line") from None
    if count < 1:
        raise FormatError("points file is empty")
    body = lines[3:]
    if len(body) != count:
        raise FormatError(f"expected {count} points, found {len(body)}")
    points = []
    for pos, line in enumerate(body):
        fields = line.split()
        if len(fields) != dim + 1 or fields[0] not in TAG_ROLES:
            raise FormatError(f"malformed point line {pos + 1}")
        coords = tuple(Dyadic(hex_to_mantissa(s, prec), prec)
                       for s in fields[1:])
        points.append(SamplePoint(coords, TAG_ROLES[fields[0]], pos))
    return points, mhash
