from fractions import Fraction

import pytest

from polyfrac.construct import build_point, make_spec
from polyfrac.norms import preset

BASE_M = [1, 16, 32, 96]
TARGETS = (Fraction(1), Fraction(5, 4), Fraction(3, 2), Fraction(7, 4),
           Fraction(2))
NORMS = ("linf", "l1")


@pytest.fixture(scope="session")
def desk_spec():
    return make_spec(2, Fraction(3, 2), preset("linf", 2), seed=7, m=BASE_M)


@pytest.fixture(scope="session")
def ensemble():
    """100 construction runs: both norms, five targets, seeds 0..9, each with
    a pinned point and 1000 samples.  Shared by several acceptance checks."""
    runs = []
    for name in NORMS:
        norm = preset(name, 2)
        for s in TARGETS:
            for seed in range(10):
                spec = make_spec(2, s, norm, seed=seed, m=BASE_M)
                pts = [build_point(spec, i, "sample" if i else "pinned")
                       for i in range(1001)]
                runs.append((name, s, seed, spec, pts))
    return runs
