import numpy as np
import pytest

from projprod.geometry import (
    AngleReport,
    EmptyFaceError,
    closed_sum_criterion,
    friedrichs_cb,
    inclination,
    inner_inclination,
)
from projprod.hilbert import Subspace, orthonormalize

from conftest import random_subspace


def line2(theta):
    return orthonormalize([(np.cos(theta), np.sin(theta))])


E1 = orthonormalize([(1, 0)])
E2 = orthonormalize([(0, 1)])


def cb_oracle_2x2(theta1, theta2):
    """Explicit 2x2 projector product + SVD, for two lines through 0."""
    def proj(t):
        v = np.array([np.cos(t), np.sin(t)])
        return np.outer(v, v)
    # intersection of distinct lines is {0}; its complement is the plane
    a = proj(theta2) @ proj(theta1) @ np.eye(2)
    return np.linalg.svd(a, compute_uv=False)[0]


class TestFriedrichsCb:
    def test_coordinate_axes_zero(self):
        report = friedrichs_cb([E1, E2])
        assert report.cb == pytest.approx(0.0, abs=1e-12)
        assert report.subspace_count == 2
        assert report.ordering == (1, 2)

    def test_repeated_subspace_zero(self, rng):
        m = random_subspace(5, 2, rng)
        assert friedrichs_cb([m, m]).cb == pytest.approx(0.0, abs=1e-10)

    def test_two_lines_45deg(self):
        got = friedrichs_cb([line2(0.0), line2(np.pi / 4)]).cb
        assert got == pytest.approx(cb_oracle_2x2(0.0, np.pi / 4), abs=1e-10)
        assert got == pytest.approx(np.cos(np.pi / 4), abs=1e-10)

    def test_recompute_invariant(self, rng):
        ms = [random_subspace(4, 2, rng) for _ in range(2)]
        a = friedrichs_cb(ms).cb
        b = friedrichs_cb(ms).cb
        assert a == b

    def test_duplicated_tuple_stays_below_one(self, rng):
        # expanding the tuple with repeats keeps cb < 1
        for _ in range(5):
            d = int(rng.integers(2, 6))
            ms = [random_subspace(d, int(rng.integers(1, d)), rng)
                  for _ in range(2)]
            base = friedrichs_cb(ms).cb
            assert base < 1.0 - 1e-8
            expanded = [ms[0], ms[1], ms[0], ms[1], ms[1]]
            assert friedrichs_cb(expanded).cb < 1.0 - 1e-8

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            friedrichs_cb([E1, orthonormalize([(1, 0, 0)])])

    def test_report_validates_range(self):
        with pytest.raises(ValueError):
            AngleReport(cb=1.5, subspace_count=2, ordering=(1, 2), tol=1e-10)


class TestClosedSum:
    def test_axes(self):
        report = closed_sum_criterion([E1, E2])
        assert bool(report) is True
        assert report.cb == pytest.approx(0.0, abs=1e-12)
        assert report.margin == pytest.approx(1.0, abs=1e-12)

    def test_nearly_parallel_lines(self):
        # 2x2 oracle: cb of two lines at angle eps is cos(eps)
        eps = 1e-3
        report = closed_sum_criterion([line2(0.0), line2(eps)])
        assert bool(report) is True
        assert report.cb == pytest.approx(np.cos(eps), abs=1e-9)
        assert report.margin == pytest.approx(1.0 - np.cos(eps), rel=1e-4)

    def test_same_subspace(self, rng):
        m = random_subspace(4, 2, rng)
        report = closed_sum_criterion([m, m])
        assert bool(report) is True and report.cb < 1e-9


class TestInclination:
    def test_axes_upper_converges(self):
        # 1-parameter brute force: max(|cos phi|, |sin phi|) is minimized
        # at phi = pi/4, value 1/sqrt(2)
        est = inclination([E1, E2], grid_resolution=100000, restarts=4, seed=1)
        assert est.value_upper == pytest.approx(1 / np.sqrt(2), abs=1e-4)
        assert est.value_upper >= 0.5  # coarse bound holds a fortiori
        assert 0.0 <= est.value_lower <= est.value_upper

    def test_axes_always_at_least_half(self):
        for res in (64, 256, 4096):
            est = inclination([E1, E2], grid_resolution=res, restarts=2, seed=0)
            assert est.value_upper >= 0.5

    def test_antitone_upper_in_resolution(self):
        # pure grid mode on doubling grids: finer never increases the min
        ms = [line2(0.0), line2(1.0)]
        uppers = [inclination(ms, grid_resolution=r, restarts=0, seed=3).value_upper
                  for r in (64, 128, 256, 512)]
        assert all(a >= b for a, b in zip(uppers, uppers[1:]))

    def test_values_within_unit_interval(self, rng):
        # ratios max_j dist(x;M_j)/dist(x;M) never exceed 1 since M sits
        # inside every M_j
        for _ in range(5):
            d = int(rng.integers(2, 6))
            ms = [random_subspace(d, int(rng.integers(1, d)), rng)
                  for _ in range(3)]
            if max(m.dim for m in ms) == d:
                continue
            est = inclination(ms, grid_resolution=128, restarts=3, seed=5)
            assert 0.0 <= est.value_lower <= est.value_upper <= 1.0 + 1e-12

    def test_full_space_intersection_rejected(self):
        full = Subspace.full(3)
        with pytest.raises(ValueError):
            inclination([full, full])

    def test_lower_bound_certified_for_circle(self):
        est = inclination([E1, E2], grid_resolution=10000, restarts=0, seed=0)
        assert est.value_lower > 0.7
        assert est.value_lower <= 1 / np.sqrt(2) + 1e-12


class TestInnerInclination:
    def test_axes_equal_one(self):
        est = inner_inclination([E1, E2], grid_resolution=10000, restarts=2,
                                seed=0)
        assert est.value_upper == pytest.approx(1.0, abs=1e-9)
        assert est.per_face[1] == pytest.approx(1.0, abs=1e-9)
        assert est.per_face[2] == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("theta", [0.3, np.pi / 4, 1.2])
    def test_two_lines_sine(self, theta):
        # for unit x on one line, distance to the other is sin(theta) and
        # distance to {0} is 1
        est = inner_inclination([line2(0.0), line2(theta)],
                                grid_resolution=64, restarts=1, seed=0)
        assert est.value_upper == pytest.approx(np.sin(theta), abs=1e-9)

    def test_empty_face_errors_with_label(self, rng):
        m = random_subspace(4, 2, rng)
        with pytest.raises(EmptyFaceError) as exc:
            inner_inclination([m, m])
        assert exc.value.face_label == 1

    def test_dominates_inclination_for_axes(self):
        inner = inner_inclination([E1, E2], grid_resolution=1024, restarts=2,
                                  seed=0)
        outer = inclination([E1, E2], grid_resolution=1024, restarts=2, seed=0)
        assert inner.value_upper >= outer.value_upper


class TestSerialization:
    def test_reports_to_dict(self):
        rep = friedrichs_cb([E1, E2])
        d = rep.to_dict()
        assert set(d) == {"cb", "subspace_count", "ordering", "tol"}
        est = inner_inclination([E1, E2], grid_resolution=64, restarts=1,
                                seed=0)
        d2 = est.to_dict()
        assert d2["kind"] == "inner_inclination"
        assert "per_face" in d2
        cs = closed_sum_criterion([E1, E2]).to_dict()
        assert cs["closed"] is True
