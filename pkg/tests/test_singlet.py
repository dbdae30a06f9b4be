import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from arealaw.singlet import (
    SINGLET_MI,
    SingletModel,
    expected_crossings,
    scaling_analysis,
    shell_crossings,
    shell_mutual_information,
    shell_regions,
    toy_mutual_information,
)

NEAREST = SingletModel("custom", table=(1.0,))


def shell_oracle(m, R, L):
    inner, _ = shell_regions(R, L)
    reach = R + m.x_max + 1
    outer = [i for i in range(-reach, reach + 1) if abs(i) > R]
    return oracles.singlet_crossings_double_sum(m.probabilities(), inner, outer)


def test_profiles_are_normalized():
    for m in (SingletModel("exponential", 3), SingletModel("lorentzian", 2), NEAREST):
        assert 2 * m.probabilities().sum() == pytest.approx(1, abs=1e-15)


def test_default_ranges_and_truncation():
    assert SingletModel("exponential", 4).x_max == 80
    assert SingletModel("lorentzian", 2).x_max == 100
    assert SingletModel("exponential", 4).truncation_error() < 1e-8
    assert SingletModel("lorentzian", 1).truncation_error() > 1e-3


@pytest.mark.parametrize("kw", [{"family": "gaussian"}, {"family": "custom"}, {"family": "custom", "table": (-1.0,)}])
def test_bad_profiles(kw):
    with pytest.raises(ValueError):
        SingletModel(**kw)


def test_nearest_neighbour_profile_with_gap_gives_nothing():
    assert expected_crossings(NEAREST, [0, 1, 2], [4, 5, 6]) == 0
    assert shell_crossings(NEAREST, 10, 1) == 0


def test_nearest_neighbour_adjacent_cut_is_one_boundary_pair():
    assert expected_crossings(NEAREST, [0, 1, 2, 3], [4, 5, 6, 7]) == pytest.approx(0.5)


def test_zero_and_one_crossing():
    assert toy_mutual_information(NEAREST, [0], [5]) == 0
    # site 0 has exactly one expected partner among its two neighbours
    assert toy_mutual_information(NEAREST, [0], [-1, 1]) == pytest.approx(2 * math.log(2), abs=1e-15)


def test_overlapping_regions_rejected():
    with pytest.raises(ValueError):
        expected_crossings(NEAREST, [0, 1], [1, 2])


def test_exponential_shell_against_double_sum():
    m = SingletModel("exponential", 4)
    for L in range(0, 41):
        assert abs(shell_crossings(m, 200, L) - shell_oracle(m, 200, L)) <= 1e-12


def test_lorentzian_shell_against_double_sum():
    m = SingletModel("lorentzian", 2)
    ref = SINGLET_MI * shell_oracle(m, 400, 10)
    assert abs(shell_mutual_information(m, 400, 10) - ref) <= 1e-12


def test_shell_regions_shape():
    inner, shell = shell_regions(5, 2)
    assert list(inner) == [-3, -2, -1, 0, 1, 2, 3]
    assert sorted(shell) == [-5, -4, 4, 5]
    with pytest.raises(ValueError):
        shell_regions(2, 3)


@settings(max_examples=40, deadline=None)
@given(
    family=st.sampled_from(["exponential", "lorentzian"]),
    param=st.floats(0.5, 6),
    R=st.integers(1, 60),
    L=st.integers(0, 60),
)
def test_monotone_in_shell_and_radius(family, param, R, L):
    m = SingletModel(family, param)
    L = min(L, R)
    base = shell_crossings(m, R, L)
    if L + 1 <= R:
        assert shell_crossings(m, R, L + 1) <= base + 1e-15
    assert shell_crossings(m, R + 1, L) >= base - 1e-15


@settings(max_examples=40, deadline=None)
@given(
    a=st.sets(st.integers(-30, 30), min_size=1, max_size=12),
    b=st.sets(st.integers(-30, 30), min_size=1, max_size=12),
    param=st.floats(0.5, 5),
)
def test_crossings_symmetric(a, b, param):
    b = b - a
    if not b:
        return
    m = SingletModel("lorentzian", param)
    assert expected_crossings(m, a, b) == expected_crossings(m, b, a)


def test_exponential_scaling_verdict():
    rep = scaling_analysis(SingletModel("exponential", 3), [60, 90, 120, 180], range(0, 31))
    assert rep.fits["decay_length"] == pytest.approx(3, rel=0.1)
    assert rep.verdicts == {"area_law": "holds", "xi_m_finite": True}


def test_lorentzian_scaling_verdict():
    rep = scaling_analysis(SingletModel("lorentzian", 1), [50, 100, 200, 400, 800], [0, 2, 5, 10, 20])
    assert rep.verdicts["area_law"] == "violated"
    assert not rep.verdicts["xi_m_finite"]
    assert all(c >= 0.99 for c in rep.fits["log_correlation"].values())


def test_doubling_xi_doubles_decay_length():
    R, L = [100, 200, 300], range(0, 31)
    short = scaling_analysis(SingletModel("exponential", 2), R, L).fits["decay_length"]
    long = scaling_analysis(SingletModel("exponential", 4), R, L).fits["decay_length"]
    assert long / short == pytest.approx(2, rel=0.1)


def test_compact_profile_vanishes_beyond_support():
    m = SingletModel("custom", table=(1, 1, 1, 1, 1))
    rep = scaling_analysis(m, [20, 30, 40], range(0, 9))
    row = rep.table[-1]
    assert np.all(row[5:] == 0)
    assert rep.fits["xi_m"] <= 5


def test_rows_export():
    rep = scaling_analysis(SingletModel("exponential", 2), [10, 20], [0, 1, 30])
    rows = list(rep.rows())
    assert {tuple(r) for r in rows} == {("R", "L", "crossings", "mi_nats")}
    assert all(r["L"] <= r["R"] for r in rows)


def test_scaling_needs_grids():
    with pytest.raises(ValueError):
        scaling_analysis(SingletModel("exponential", 2), [10], [0, 1])
