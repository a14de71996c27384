import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyfrac.construct import SamplePoint, make_spec
from polyfrac.dimension import (BoxCount, BoxCountSeries, ExactCount,
                                SlabGroup, SlabSystem, count_exact,
                                count_point_cells, count_value_cells,
                                decoupled_count, dim_lower_estimate,
                                distance_checkpoints, distance_slack,
                                falconer_check, profile_c_aware, profile_ideal,
                                sampled_distance_series, sampled_point_series,
                                slab_system, slope)
from polyfrac.dyadic import Dyadic
from polyfrac.errors import (BudgetExceeded, InsufficientData,
                             MissingCheckpoint, OutOfRange, SaturatedData)
from polyfrac.norms import preset


def spec_for(name, s, m=(1, 16, 32, 96)):
    return make_spec(2, Fraction(s), preset(name, 2), seed=0, m=list(m))


@pytest.fixture(scope="module")
def desk_system():
    return slab_system(spec_for("linf", "3/2"))


@pytest.fixture(scope="module")
def l1_system():
    return slab_system(spec_for("l1", "3/2"))


def lattice_cells(system: SlabSystem, r: int) -> int:
    """Cells certified by a depth-precision lattice point (a lower bound:
    a cell can also meet a slab strictly between lattice points)."""
    dim, depth = system.dim, system.depth
    mask = (1 << depth) - 1
    cells = set()
    for packed in range(1 << (dim * depth)):
        coords = [(packed >> (i * depth)) & mask for i in range(dim)]
        ok = True
        for g in system.groups:
            s = sum(v * Fraction(c, 1 << depth)
                    for v, c in zip(g.mantissas, coords)) / (1 << g.precision)
            for a, b in g.windows:
                if not s % Fraction(1, 1 << a) < Fraction(1, 1 << b):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            cells.add(tuple(c >> (depth - r) for c in coords))
    return len(cells)


def _clip(seg, lo, hi):
    # intersect (s_lo, s_hi] style segment with the half-open band [lo, hi)
    s_lo, s_hi, lo_in, hi_in = seg
    if lo > s_lo:
        s_lo, lo_in = lo, True
    if hi < s_hi or (hi == s_hi and hi_in):
        s_hi, hi_in = hi, False
    if s_lo < s_hi or (s_lo == s_hi and lo_in and hi_in):
        return (s_lo, s_hi, lo_in, hi_in)
    return None


def strip_cells(system: SlabSystem, r: int) -> int:
    """Exact oracle for single-group systems: the slab conditions constrain
    only the scalar image v . x, so per-cell interval reasoning is exact."""
    (g,) = system.groups
    scale = Fraction(1, 1 << (r + g.precision))
    neg = sum(v for v in g.mantissas if v < 0)
    pos = sum(v for v in g.mantissas if v > 0)
    count = 0
    for packed in range(1 << (r * system.dim)):
        coords = [(packed >> (i * r)) & ((1 << r) - 1)
                  for i in range(system.dim)]
        base = sum(v * c for v, c in zip(g.mantissas, coords)) * scale
        # the image of the half-open cell is an interval, open at any end
        # reached only through an excluded upper face
        segs = [(base + neg * scale, base + pos * scale, neg == 0, pos == 0)]
        for a, b in g.windows:
            q, w = Fraction(1, 1 << a), Fraction(1, 1 << b)
            nxt = []
            for seg in segs:
                k = math.floor(seg[0] / q)
                while k * q < seg[1] or (k * q == seg[1] and seg[3]):
                    piece = _clip(seg, k * q, k * q + w)
                    if piece:
                        nxt.append(piece)
                    k += 1
            segs = nxt
            if not segs:
                break
        if segs:
            count += 1
    return count


# -- slab systems ----------------------------------------------------------

def test_slab_system_from_spec(desk_system, l1_system):
    g0, g1 = desk_system.groups
    assert (g0.mantissas, g0.windows) == ((1, 0), ((12, 13), (67, 93)))
    assert (g1.mantissas, g1.windows) == ((0, 1), ((27, 29),))
    assert desk_system.depth == 96
    h0, h1 = l1_system.groups
    assert (h0.mantissas, h0.windows) == ((1, 1), ((14, 15), (80, 110)))
    assert (h1.mantissas, h1.windows) == ((1, -1), ((33, 34),))


def test_slab_system_vacuous_at_full_dimension():
    assert slab_system(spec_for("linf", 2)).groups == ()


def test_slab_group_validation():
    with pytest.raises(OutOfRange):
        SlabGroup((0, 0), 0, ((1, 2),))
    with pytest.raises(OutOfRange):
        SlabGroup((1,), 0, ((3, 2),))
    with pytest.raises(OutOfRange):
        SlabGroup((1,), 0, ((1, 4), (3, 6)))  # overlap
    with pytest.raises(OutOfRange):
        SlabSystem(2, 8, (SlabGroup((1,), 0, ((1, 2),)),))  # dim mismatch
    with pytest.raises(OutOfRange):
        SlabSystem(1, 4, (SlabGroup((1,), 0, ((2, 6),)),))  # too deep


# -- exact counting vs oracles ---------------------------------------------

def test_single_window_frozen():
    sys1 = SlabSystem(1, 6, (SlabGroup((1,), 0, ((2, 4),)),))
    got = count_exact(sys1, 4)
    assert got.exact and got.count == 4
    assert got.count == strip_cells(sys1, 4) == lattice_cells(sys1, 4)


def test_scale_zero_and_no_groups():
    sys1 = SlabSystem(2, 4, ())
    assert count_exact(sys1, 0).count == 1
    assert count_exact(sys1, 3).count == 1 << 6


@settings(deadline=None, max_examples=60)
@given(st.data())
def test_one_dimensional_systems_match_enumeration(data):
    depth = data.draw(st.integers(min_value=4, max_value=10))
    v = data.draw(st.integers(min_value=-5, max_value=5).filter(bool))
    pv = data.draw(st.integers(min_value=0, max_value=2))
    edges = data.draw(st.lists(st.integers(min_value=0, max_value=depth),
                               min_size=2, max_size=4, unique=True))
    edges.sort()
    wins = tuple((edges[i], edges[i + 1]) for i in range(0, len(edges) - 1, 2))
    system = SlabSystem(1, depth, (SlabGroup((v,), pv, wins),))
    r = data.draw(st.integers(min_value=1, max_value=depth))
    got = count_exact(system, r)
    assert got.exact
    assert got.count == strip_cells(system, r)
    assert lattice_cells(system, r) <= got.count


@settings(deadline=None, max_examples=30)
@given(st.data())
def test_coupled_planar_systems_match_enumeration(data):
    depth = 6
    m1 = data.draw(st.integers(min_value=-3, max_value=3))
    m2 = data.draw(st.integers(min_value=-3, max_value=3))
    if not (m1 or m2):
        m1 = 1
    pv = data.draw(st.integers(min_value=0, max_value=1))
    a = data.draw(st.integers(min_value=0, max_value=4))
    b = data.draw(st.integers(min_value=a + 1, max_value=6))
    system = SlabSystem(2, depth, (SlabGroup((m1, m2), pv, ((a, b),)),))
    r = data.draw(st.integers(min_value=1, max_value=depth))
    got = count_exact(system, r)
    oracle = strip_cells(system, r)
    assert got.lower <= oracle <= got.upper
    assert got.exact and got.count == oracle


def test_two_group_coupled_frozen():
    system = SlabSystem(2, 6, (SlabGroup((1, 1), 0, ((1, 3),)),
                               SlabGroup((1, -1), 0, ((4, 6),))))
    got = [count_exact(system, r).count for r in range(1, 7)]
    assert got == [4, 16, 32, 96, 320, 576]
    # lattice points only certify cells from below; slabs this thin meet
    # many cells strictly between depth-6 lattice points
    assert lattice_cells(system, 6) <= got[-1]
    with pytest.raises(OutOfRange):
        decoupled_count(system, 4)  # not in product form


def test_desk_counts_equal_product_formula(desk_system):
    for r in range(1, 97):
        assert count_exact(desk_system, r).count == \
            decoupled_count(desk_system, r)
    assert count_exact(desk_system, 96).count == 1 << 163


def test_l1_counts_frozen(l1_system):
    assert count_exact(l1_system, 19).count == 146028888064
    assert count_exact(l1_system, 38).count == 20070059803995805843456
    deep = count_exact(l1_system, 114)
    assert deep.exact
    assert round(math.log2(deep.count), 4) == 196.0875


def test_decoupled_formula_by_hand(desk_system):
    # r=20 sees only the (12, 13] window: 2*20 - 1 free digits
    assert decoupled_count(desk_system, 20) == 1 << 39
    assert decoupled_count(desk_system, 96) == 1 << 163
    with pytest.raises(OutOfRange):
        decoupled_count(desk_system, 97)


def test_count_scale_range(desk_system):
    with pytest.raises(OutOfRange):
        count_exact(desk_system, -1)
    with pytest.raises(OutOfRange):
        count_exact(desk_system, 97)


def test_budget_exhaustion(l1_system):
    with pytest.raises(BudgetExceeded) as err:
        count_exact(l1_system, 114, budget=100)
    assert err.value.scale == 114
    assert err.value.examined == 101


def test_exact_count_gap_raises():
    gap = ExactCount(5, 10, 12, 999)
    assert not gap.exact
    with pytest.raises(BudgetExceeded) as err:
        gap.count
    assert err.value.examined == 999 and err.value.scale == 5
    assert ExactCount(5, 10, 10, 1).count == 10


# -- sampled counting ------------------------------------------------------

def test_count_value_cells():
    vals = [Dyadic(1, 2), Dyadic(5, 4), Dyadic(3, 2)]
    assert count_value_cells(vals, 2) == 2  # 1/4 and 5/16 share a cell
    assert count_value_cells(vals, 4) == 3


def test_count_point_cells():
    pts = [SamplePoint((Dyadic(4, 4), Dyadic(12, 4)), "sample", 0),
           SamplePoint((Dyadic(5, 4), Dyadic(12, 4)), "sample", 1)]
    assert count_point_cells(pts, 2) == 1
    assert count_point_cells(pts, 4) == 2


def test_sampled_series_mode_rule():
    vals = [Dyadic(1, 3)] * 100 + [Dyadic(5, 3)] * 100
    series = sampled_distance_series(vals, [1, 3])
    assert series.entry(1).mode == "sampled"  # 200 samples vs 1 cell
    assert series.entry(3).mode == "sampled"  # exactly 100x the 2 cells
    starved = sampled_distance_series(vals[:199], [3])
    assert starved.entry(3).mode == "saturated"
    with pytest.raises(MissingCheckpoint):
        series.entry(2)


def test_sampled_point_series_modes():
    pts = [SamplePoint((Dyadic(i % 2, 1),), "sample", i) for i in range(300)]
    series = sampled_point_series(pts, [1])
    assert series.entry(1).count == 2
    assert series.entry(1).mode == "sampled"
    assert series.scales == (1,)


# -- profiles --------------------------------------------------------------

def test_desk_set_profiles():
    sched = spec_for("linf", "3/2").schedule
    ideal = profile_ideal(sched, 2)
    assert [ideal.value_at(r) for r in (16, 32, 96)] == [23, 47, 143]
    ratios = [ideal.ratio(r) for r in (16, 32, 96)]
    assert ratios == sorted(ratios)
    assert all(q < Fraction(3, 2) for q in ratios)
    aware = profile_c_aware(sched, 2)
    assert aware.value_at(16) == 29
    assert ideal.value_at(0) == 0
    with pytest.raises(OutOfRange):
        ideal.value_at(97)
    with pytest.raises(OutOfRange):
        ideal.ratio(0)


@pytest.mark.parametrize("name,s,values", [
    ("linf", "1", (15, 31, 95)),
    ("linf", "5/4", (19, 39, 119)),
    ("linf", "3/2", (23, 47, 143)),
    ("linf", "2", (30, 62, 190)),
])
def test_set_profile_family_frozen(name, s, values):
    sched = spec_for(name, s).schedule
    ideal = profile_ideal(sched, 2)
    got = tuple(ideal.value_at(r) for r in sched.bounds[1:])
    assert got == values


def test_widened_set_profiles_frozen():
    sched = spec_for("linf", "7/4").schedule
    assert sched.bounds == (1, 29, 58, 174)
    ideal = profile_ideal(sched, 2)
    assert [ideal.value_at(r) for r in (29, 58, 174)] == [49, 100, 303]
    l1s = spec_for("l1", "3/2").schedule
    assert profile_ideal(l1s, 2).value_at(19) == 27
    l17 = spec_for("l1", "7/4").schedule
    assert profile_ideal(l17, 2).value_at(37) == 63


@pytest.mark.parametrize("name,s,ell,points", [
    ("linf", "3/2", 0, [(13, 9), (93, 57)]),
    ("linf", "3/2", 1, [(29, 24)]),
    ("linf", "7/4", 0, [(26, 22), (171, 138)]),
    ("linf", "7/4", 1, [(55, 51)]),
    ("linf", "5/4", 0, [(13, 5), (93, 37)]),
    ("linf", "5/4", 1, [(29, 20)]),
    ("l1", "3/2", 0, [(15, 10), (110, 67)]),
    ("l1", "3/2", 1, [(34, 29)]),
    ("l1", "7/4", 0, [(33, 28), (218, 176)]),
    ("l1", "7/4", 1, [(70, 65)]),
])
def test_distance_profile_frozen(name, s, ell, points):
    sched = spec_for(name, s).schedule
    prof = profile_ideal(sched, 2, base=("distance", ell))
    for r, expect in points:
        assert prof.value_at(r) == expect


def test_distance_checkpoints_frozen():
    spec = spec_for("linf", "3/2")
    assert distance_checkpoints(spec, 0) == [(13, 9), (93, 64)]
    assert distance_checkpoints(spec, 1) == [(29, 24)]


def test_checkpoint_scales_match_profile_plateaus():
    # at each checkpoint the ideal distance profile has finished the plateau
    for name, s in (("linf", "3/2"), ("l1", "7/4")):
        spec = spec_for(name, s)
        for ell in range(2):
            prof = profile_ideal(spec.schedule, 2, base=("distance", ell))
            for r, _ in distance_checkpoints(spec, ell):
                assert prof.value_at(r) == prof.value_at(r - 1)  # slope 0


def test_distance_c_aware_profile():
    sched = spec_for("linf", "3/2").schedule
    prof = profile_c_aware(sched, 2, base=("distance", 0))
    assert prof.value_at(13) == 12
    assert prof.value_at(93) == 66


def test_distance_slack_frozen():
    assert distance_slack(3, 16) == 13
    assert distance_slack(4, 114) == 18


# -- estimators ------------------------------------------------------------

def series_of(*pairs):
    return BoxCountSeries(tuple(BoxCount(r, c, "exact") for r, c in pairs))


def test_dim_lower_estimate_frozen():
    series = series_of((13, 512), (93, 1 << 57))
    got = dim_lower_estimate(series, [13, 93])
    assert math.isclose(got, 57 / 93)
    assert math.isclose(dim_lower_estimate(series, [13]), 9 / 13)


def test_dim_lower_estimate_errors():
    series = series_of((13, 512), (20, 0))
    with pytest.raises(MissingCheckpoint):
        dim_lower_estimate(series, [])
    with pytest.raises(MissingCheckpoint):
        dim_lower_estimate(series, [14])
    with pytest.raises(InsufficientData):
        dim_lower_estimate(series, [20])
    with pytest.raises(OutOfRange):
        dim_lower_estimate(series, [0])


def test_slope_fit():
    series = series_of((4, 1 << 4), (8, 1 << 8), (12, 1 << 12))
    assert math.isclose(slope(series, 4, 12), 1.0)
    assert math.isclose(slope(series, 4, 8), 1.0)
    with pytest.raises(InsufficientData):
        slope(series, 9, 12)


def test_slope_refuses_saturated_points():
    entries = (BoxCount(4, 16, "exact"), BoxCount(8, 256, "saturated"),
               BoxCount(12, 4096, "sampled"))
    series = BoxCountSeries(entries)
    with pytest.raises(SaturatedData):
        slope(series, 4, 12)
    assert math.isclose(slope(BoxCountSeries((entries[0], entries[2])), 4, 12),
                        1.0)


@pytest.mark.parametrize("dim_set,dim_dist,ambient,tol,expect", [
    (1.5, 0.5, 2, 0.05, True),
    (2.0, 0.7, 2, 0.05, False),
    (1.0, 0.0, 2, 0.0, True),
])
def test_falconer_frozen(dim_set, dim_dist, ambient, tol, expect):
    rep = falconer_check(dim_set, dim_dist, ambient, tol)
    assert rep.passed is expect
    assert math.isclose(rep.threshold, dim_set - (ambient - 1) - tol)
