import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mc_hypervolume, naive_igd, naive_nondominated, naive_spacing
from qasbse.indicators import (ParetoArchive, Solution, hv, igd, indicator_report, nop,
                               pareto_filter, spacing, union_front)

MIN2 = ("minimize", "minimize")


def archive(points, senses=MIN2):
    return pareto_filter([((i,), p) for i, p in enumerate(points)], senses)


def raw(points, senses=MIN2):
    """Archive without filtering, for indicator inputs."""
    return ParetoArchive(tuple(Solution((i,), tuple(map(float, p))) for i, p in enumerate(points)),
                         tuple(senses))


def test_pareto_filter_examples():
    a = archive([(1, 2), (2, 1), (3, 3)])
    assert a.points == {(1.0, 2.0), (2.0, 1.0)}
    b = archive([(1, 1), (1, 1), (2, 2)])
    assert len(b) == 1
    assert archive([]).solutions == ()


def test_pareto_filter_senses():
    a = archive([(1, 5), (2, 6), (0, 1)], ("minimize", "maximize"))
    assert a.points == {(1.0, 5.0), (2.0, 6.0), (0.0, 1.0)}
    a = archive([(1, 5), (2, 4)], ("minimize", "maximize"))
    assert a.points == {(1.0, 5.0)}


def test_duplicates_keep_smallest_assignment_order_free():
    sols = [((1, 0), (1.0, 1.0)), ((0, 1), (1.0, 1.0)), ((1, 1), (0.0, 3.0))]
    a = pareto_filter(sols, MIN2)
    b = pareto_filter(sols[::-1], MIN2)
    assert a == b
    assert a.solutions[1] == Solution((0, 1), (1.0, 1.0))


@pytest.mark.parametrize("seed", range(5))
def test_pareto_filter_matches_naive_500(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 5))
    F = rng.integers(0, 30, (500, m)).astype(float)
    a = pareto_filter([((i,), f) for i, f in enumerate(F)], ["minimize"] * m)
    expected = {tuple(f) for f in F[naive_nondominated(F)]}
    assert a.points == expected


def test_union_front_and_sense_check():
    a, b = archive([(1, 3), (3, 1)]), archive([(2, 2), (4, 4)])
    assert union_front([a, b]).points == {(1.0, 3.0), (3.0, 1.0), (2.0, 2.0)}
    with pytest.raises(ValueError):
        union_front([a, archive([(1, 1)], ("minimize", "maximize"))])


def test_hv_examples():
    ref = raw([(0, 1), (1, 0)])
    assert hv(raw([(0, 0)]), ref) == pytest.approx(1.0)
    assert hv(ref, ref) == 0.0
    assert hv(raw([(0.5, 0.5)]), ref) == pytest.approx(0.25)
    assert hv(raw([]), ref) == 0.0
    # points beyond the reference nadir are clipped away
    assert hv(raw([(2, 2)]), ref) == 0.0


def test_hv_maximization_flip():
    ref = raw([(0, 0), (1, -1)], ("maximize", "minimize"))
    pts = raw([(1, 0)], ("maximize", "minimize"))
    # max objective flips: ideal (-1, -1), nadir (0, 0) in min form; point -> (0, 1)
    assert hv(pts, ref) == pytest.approx(0.0)
    assert hv(raw([(0.5, -0.5)], ("maximize", "minimize")), ref) == pytest.approx(0.25)


def test_hv_zero_span_dimension():
    ref = raw([(0, 5), (1, 5)])
    assert 0.0 <= hv(raw([(0, 5)]), ref) <= 1.0


@pytest.mark.parametrize("seed", range(8))
def test_hv_matches_monte_carlo(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 5))
    P = rng.random((int(rng.integers(3, 12)), m))
    ref = raw(np.vstack([P, np.zeros((1, m)), np.ones((1, m))]), ["minimize"] * m)
    est = mc_hypervolume(P, 1_000_000, seed=100 + seed)
    assert hv(raw(P, ["minimize"] * m), ref) == pytest.approx(est, abs=1e-3)


def test_hv_dominated_points_do_not_add_volume():
    ref = raw([(0, 1), (1, 0)])
    assert hv(raw([(0.2, 0.2), (0.5, 0.5), (0.3, 0.9)]), ref) == pytest.approx(0.64)


def test_igd_and_spacing_examples():
    ref = raw([(0, 0), (3, 4)])
    assert igd(ref, ref) == 0.0
    assert igd(raw([(0, 0)]), ref) == pytest.approx(2.5)
    assert math.isinf(igd(raw([]), ref))
    assert math.isnan(spacing(raw([(1, 1)])))
    assert spacing(raw([(0, 0), (1, 0), (2, 0)])) == 0.0
    assert spacing(raw([(0, 0), (1, 0), (3, 0)])) == pytest.approx(math.sqrt(2 / 9))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_igd_spacing_match_naive(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 5))
    A = rng.normal(size=(int(rng.integers(2, 30)), m))
    R = rng.normal(size=(int(rng.integers(1, 30)), m))
    assert igd(raw(A, ["minimize"] * m), raw(R, ["minimize"] * m)) == pytest.approx(naive_igd(R, A), abs=1e-12)
    assert spacing(raw(A, ["minimize"] * m)) == pytest.approx(naive_spacing(A), abs=1e-12)


def test_nop():
    ref = archive([(0, 2), (1, 1), (2, 0)])
    assert nop(archive([(0, 2), (5, 5)]), ref) == 1
    assert nop(ref, ref) == 3
    with pytest.raises(ValueError):
        nop(archive([(0, 2)], ("minimize", "maximize")), ref)


def test_indicator_report_self_reference():
    a = archive([(0, 2), (1, 1), (2, 0)])
    r = indicator_report("m", a, a, time_s=1.5)
    assert r.row() == {"method": "m", "time_s": 1.5, "S": 3, "N_S": 3, "IGD": 0.0,
                       "HV": pytest.approx(0.25), "SP": 0.0}
    empty = indicator_report("e", archive([]), a)
    assert empty.igd is None and empty.sp is None and empty.hv == 0.0
    none = indicator_report("n", archive([]), archive([]))
    assert none.row()["N_S"] == 0 and none.igd is None and none.hv is None


def test_archive_json_round_trip():
    a = archive([(0, 2.5), (1, 1)], ("minimize", "maximize"))
    assert ParetoArchive.from_json(a.to_json()) == a
