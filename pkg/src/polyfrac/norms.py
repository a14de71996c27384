"""Polyhedral norms given by dyadic linear functionals.

A norm is ||x|| = max over functionals of |x . v|, with every coefficient an
exact dyadic.  Each functional carries a pivot coordinate whose coefficient is
positive after sign normalization; the digit construction writes its solved
digits into that coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .dyadic import Dyadic
from .errors import (BadPivot, DegenerateNorm, DimensionMismatch,
                     NonDyadicCoefficient, ZeroVector)

__all__ = ["Functional", "PolyhedralNorm", "NormReport", "preset",
           "custom_norm", "min_margin", "margin_ok",
           "euclid_comparison_bounds"]


@dataclass(frozen=True)
class Functional:
    """One face functional: coefficient mantissas at a shared precision.

    Coefficient i is mantissas[i] * 2**-precision.  pivot indexes the
    coordinate receiving solver-chosen digits; mantissas[pivot] > 0.
    """

    mantissas: tuple[int, ...]
    precision: int
    pivot: int

    @property
    def dim(self) -> int:
        return len(self.mantissas)

    def coefficient(self, i: int) -> Dyadic:
        return Dyadic(self.mantissas[i], self.precision)

    def abs_sum(self) -> Dyadic:
        return Dyadic(sum(abs(m) for m in self.mantissas), self.precision)

    def dot(self, x: list[Dyadic] | tuple[Dyadic, ...]) -> Dyadic:
        if len(x) != self.dim:
            raise DimensionMismatch(
                f"vector length {len(x)} != dimension {self.dim}")
        px = max(v.precision for v in x)
        total = 0
        for v, m in zip(x, self.mantissas):
            total += (v.mantissa << (px - v.precision)) * m
        return Dyadic(total, px + self.precision)


@dataclass(frozen=True)
class NormReport:
    """Result of validating a functional family."""

    dim: int
    n_functionals: int
    rank: int
    pivots: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return self.rank == self.dim


class PolyhedralNorm:
    """max_l |x . v^l| over a full-rank family of dyadic functionals."""

    def __init__(self, dim: int, functionals: list[Functional]):
        self.dim = dim
        self.functionals = tuple(functionals)
        self.report = self.validate()

    @property
    def n_functionals(self) -> int:
        return len(self.functionals)

    def validate(self) -> NormReport:
        """Check pivots and full rank; raises on failure."""
        if self.dim < 1 or not self.functionals:
            raise DegenerateNorm("need dim >= 1 and at least one functional")
        for f in self.functionals:
            if f.dim != self.dim:
                raise DimensionMismatch("functional length != dim")
            if not 0 <= f.pivot < self.dim or f.mantissas[f.pivot] <= 0:
                raise BadPivot(f"functional {f.mantissas} lacks a positive "
                               f"pivot coefficient at index {f.pivot}")
        rank = _rank([[Fraction(m, 1 << f.precision) for m in f.mantissas]
                      for f in self.functionals])
        if rank < self.dim:
            raise DegenerateNorm(f"functional family has rank {rank} < {self.dim}")
        return NormReport(self.dim, len(self.functionals), rank,
                          tuple(f.pivot for f in self.functionals))

    def evaluate(self, x) -> Dyadic:
        """||x||, exact."""
        best = None
        for f in self.functionals:
            v = abs(f.dot(x))
            if best is None or v > best:
                best = v
        return best

    def argmax(self, x) -> int:
        """Smallest functional index attaining the max; x must be nonzero."""
        if all(v.mantissa == 0 for v in x):
            raise ZeroVector("argmax undefined for the zero vector")
        best, best_i = None, -1
        for i, f in enumerate(self.functionals):
            v = abs(f.dot(x))
            if best is None or v > best:
                best, best_i = v, i
        return best_i

    def argmax_all(self, x) -> list[int]:
        """All functional indices tying for the max."""
        if all(v.mantissa == 0 for v in x):
            raise ZeroVector("argmax undefined for the zero vector")
        vals = [abs(f.dot(x)) for f in self.functionals]
        top = max(vals)
        return [i for i, v in enumerate(vals) if v == top]


def _rank(rows: list[list[Fraction]]) -> int:
    """Rank over the rationals by Gaussian elimination."""
    rows = [row[:] for row in rows]
    ncols = len(rows[0]) if rows else 0
    rank = 0
    for col in range(ncols):
        pivot_row = None
        for r in range(rank, len(rows)):
            if rows[r][col] != 0:
                pivot_row = r
                break
        if pivot_row is None:
            continue
        rows[rank], rows[pivot_row] = rows[pivot_row], rows[rank]
        prow = rows[rank]
        inv = 1 / prow[col]
        for r in range(rank + 1, len(rows)):
            factor = rows[r][col] * inv
            if factor:
                rows[r] = [a - factor * b for a, b in zip(rows[r], prow)]
        rank += 1
        if rank == ncols:
            break
    return rank


def _normalized(mantissas: tuple[int, ...], precision: int) -> Functional:
    """Pick the first nonzero coordinate as pivot and make it positive."""
    pivot = next((i for i, m in enumerate(mantissas) if m), None)
    if pivot is None:
        raise BadPivot("all-zero functional")
    if mantissas[pivot] < 0:
        mantissas = tuple(-m for m in mantissas)
    return Functional(mantissas, precision, pivot)


def preset(name: str, dim: int) -> PolyhedralNorm:
    """Built-in norms: "linf" (standard basis) or "l1" (sign patterns)."""
    if dim < 1:
        raise DimensionMismatch("dim must be >= 1")
    if name == "linf":
        funcs = [Functional(tuple(1 if j == i else 0 for j in range(dim)), 0, i)
                 for i in range(dim)]
    elif name == "l1":
        # 2**(dim-1) functionals (1, +-1, ..., +-1); max |x.v| equals sum|x_i|
        funcs = []
        for bits in range(1 << (dim - 1)):
            coeffs = [1]
            for j in range(dim - 1):
                coeffs.append(1 if not (bits >> (dim - 2 - j)) & 1 else -1)
            funcs.append(Functional(tuple(coeffs), 0, 0))
    else:
        raise ValueError(f"unknown preset {name!r}")
    return PolyhedralNorm(dim, funcs)


def custom_norm(coeff_table) -> PolyhedralNorm:
    """Build a norm from rows of [mantissa, precision] pairs.

    Pivots are chosen automatically (first nonzero coordinate) and each
    functional is negated if needed so the pivot coefficient is positive.
    """
    funcs = []
    for row in coeff_table:
        pairs = []
        for entry in row:
            try:
                m, p = entry
            except (TypeError, ValueError):
                raise NonDyadicCoefficient(f"bad entry {entry!r}") from None
            if not isinstance(m, int) or not isinstance(p, int) or p < 0:
                raise NonDyadicCoefficient(f"bad entry {entry!r}")
            pairs.append((m, p))
        prec = max((p for _, p in pairs), default=0)
        mants = tuple(m << (prec - p) for m, p in pairs)
        funcs.append(_normalized(mants, prec))
    if not funcs:
        raise DegenerateNorm("empty coefficient table")
    return PolyhedralNorm(len(funcs[0].mantissas), funcs)


def margin_ok(norm: PolyhedralNorm, margin: int) -> bool:
    """Does every functional satisfy max(sum|v_i|, 1/v_pivot) <= 2**(margin-3)?"""
    e = margin - 3
    for f in norm.functionals:
        total = sum(abs(m) for m in f.mantissas)
        # sum|v_i| <= 2**e  <=>  total <= 2**(e + precision)
        if e + f.precision < 0 or total > 1 << (e + f.precision):
            return False
        # 1/v_pivot <= 2**e  <=>  v_mantissa * 2**e >= 2**precision
        piv = f.mantissas[f.pivot]
        if e >= 0:
            if piv << e < 1 << f.precision:
                return False
        else:
            if piv < 1 << (f.precision - e):
                return False
    return True


def min_margin(norm: PolyhedralNorm) -> int:
    """Smallest margin constant c >= 1 satisfying margin_ok."""
    c = 1
    while not margin_ok(norm, c):
        c += 1
        if c > 1 << 20:
            raise DegenerateNorm("no finite margin constant")
    return c


def euclid_comparison_bounds(norm_name: str, dim: int) -> tuple[Dyadic, Dyadic]:
    """Dyadic (c1, c2) with c1*||x||_2 <= ||x||_P <= c2*||x||_2 for presets."""
    # smallest k with 2**k >= sqrt(dim)
    k = 0
    while (1 << (2 * k)) < dim:
        k += 1
    if norm_name == "linf":
        return Dyadic(1, k), Dyadic(1, 0)
    if norm_name == "l1":
        return Dyadic(1, 0), Dyadic(1 << k, 0)
    raise ValueError(f"no comparison bounds for {norm_name!r}")
