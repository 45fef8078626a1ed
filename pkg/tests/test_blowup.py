import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import line
from rectikit import DomainError, FiniteMetricSpace, MeasuredSpace, PointedMeasuredSpace
from rectikit.blowup import (
    INDETERMINATE,
    RECTIFIABLE,
    UNRECTIFIABLE,
    ClassifierParams,
    blowup,
    classify,
    connectivity_at,
    connectivity_profile,
    default_ladder,
    farthest_point_subsample,
    flatness_at,
    flatness_profile,
    polyline_length,
    reference_grid,
    tube_mass,
)
from rectikit.generators import gen_circle, gen_four_corner_cantor, gen_segment, gen_union


@pytest.fixture(scope="module")
def segment401():
    return gen_segment(401)


class TestBlowup:
    def test_full_scale(self, line3):
        P = PointedMeasuredSpace(line3, 0)
        v = blowup(P, line3.space.diam)
        assert v.members.tolist() == [0, 1, 2]
        assert v.unit_ball_mass() == pytest.approx(1.0, abs=1e-12)

    def test_segment_window(self, segment101):
        M = segment101
        v = blowup(PointedMeasuredSpace(M, 50), 0.25)
        xs = M.space.coords[:, 0]
        assert v.members.tolist() == np.flatnonzero(np.abs(xs - 0.5) <= 0.25).tolist()
        assert np.array_equal(v.D, M.D[np.ix_(v.members, v.members)] / 0.25)

    def test_isolated_atom(self):
        M = line([0.0, 5.0])
        v = blowup(PointedMeasuredSpace(M, 0), 0.1)
        assert v.members.tolist() == [0] and v.unit_ball_mass() == 1.0

    def test_bad_scale(self, line3):
        with pytest.raises(DomainError):
            blowup(PointedMeasuredSpace(line3, 0), 0.0)
        with pytest.raises(DomainError):
            blowup(PointedMeasuredSpace(line3, 0), 1.0, K=0.5)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_normalization(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 40))
        M = MeasuredSpace.from_points(rng.random((n, 2)), rng.random(n) + 0.01)
        x = int(rng.integers(n))
        r = float(rng.uniform(0.01, 2))
        assert abs(blowup(PointedMeasuredSpace(M, x), r, K=rng.uniform(1, 3)).unit_ball_mass() - 1) <= 1e-12

    @pytest.mark.parametrize("r1,r2", [(0.5, 0.25), (0.25, 0.5), (0.125, 0.5)])
    def test_composition(self, segment101, r1, r2):
        P = PointedMeasuredSpace(segment101, 50)
        v1 = blowup(P, r1, K=4)
        inner = blowup(v1.view, r2, K=1)
        direct = blowup(P, r1 * r2, K=1)
        assert v1.members[inner.members].tolist() == direct.members.tolist()
        assert np.array_equal(inner.D, direct.D)
        np.testing.assert_allclose(inner.w, direct.w, rtol=1e-12)


class TestConnectivity:
    def test_dense_segment(self, segment401):
        P = PointedMeasuredSpace(segment401, 200)
        recs = connectivity_profile(P, [0.25, 0.125, 0.0625])
        assert all(rec.resolvable and rec.connected for rec in recs)

    def test_cantor_quadrant_gap(self, cantor4):
        P = PointedMeasuredSpace(cantor4, 0)
        rec = connectivity_at(P, 0.5, 1 / 6, 2.0)
        assert rec.resolvable and rec.connected is False
        w = rec.witness
        v = blowup(P, 0.5, 3.0).view.base
        assert w.check(v)
        assert w.gap > w.delta * v.D[w.a, w.b]

    def test_below_mesh_is_indeterminate(self, segment101):
        P = PointedMeasuredSpace(segment101, 50)
        rec = connectivity_at(P, 0.001, 1 / 6, 2.0)
        assert rec.resolvable is False and rec.connected is None

    def test_ladder_must_decrease(self, segment101):
        with pytest.raises(DomainError):
            connectivity_profile(PointedMeasuredSpace(segment101, 0), [0.1, 0.2])


class TestFlatness:
    def test_exact_grid(self):
        M = line([-1.0, -0.5, 0.0, 0.5, 1.0])
        assert flatness_at(PointedMeasuredSpace(M, 2), 1.0, 5) == 0

    def test_dense_segment(self, segment401):
        P = PointedMeasuredSpace(segment401, 200)
        vals = flatness_profile(P, [0.25, 0.1, 0.05])
        assert max(vals) <= 0.025 + 1e-12  # mesh-order: half the grid offset 0.05 at r = 0.05

    def test_cantor_quadrant_scale(self, cantor4):
        val = flatness_at(PointedMeasuredSpace(cantor4, 0), 0.25, 5)
        assert val == pytest.approx(0.33708739263761167, abs=1e-12)

    def test_half_line_model_at_endpoint(self, segment401):
        P = PointedMeasuredSpace(segment401, 0)
        assert flatness_at(P, 0.25, 5, "line") >= 0.25
        assert flatness_at(P, 0.25, 5, "half-line") <= 0.01
        assert flatness_at(P, 0.25, 5, "either") == flatness_at(P, 0.25, 5, "half-line")

    def test_degenerate_view(self):
        M = line([0.0, 5.0])
        assert flatness_at(PointedMeasuredSpace(M, 0), 1.0) is None

    def test_bad_m(self, line3):
        with pytest.raises(DomainError):
            flatness_at(PointedMeasuredSpace(line3, 0), 1.0, m=4)

    def test_subsample_and_grid(self):
        D = reference_grid(5)
        assert farthest_point_subsample(D, 2, 3) == [2, 0, 4]
        assert D[0, 4] == 2 and reference_grid(3, "half-line")[0, 2] == 1


class TestTubeMass:
    def test_polyline_through_points(self, cantor3):
        assert tube_mass(cantor3, cantor3.space.coords, 1e-9) == 1.0

    def test_generating_segment(self, segment101):
        assert tube_mass(segment101, [[0.0, 0.0], [1.0, 0.0]], 0.0) == 1.0

    def test_cantor_greedy_route(self, cantor4):
        pts = cantor4.space.coords
        route, left, length = [0], set(range(1, cantor4.n)), 0.0
        while left:
            last = route[-1]
            nxt = min(left, key=lambda j: (float(np.hypot(*(pts[j] - pts[last]))), j))
            step = float(np.hypot(*(pts[nxt] - pts[last])))
            if length + step > 4:
                break
            length += step
            route.append(nxt)
            left.remove(nxt)
        poly = pts[route]
        assert polyline_length(poly) <= 4
        assert tube_mass(cantor4, poly, 1 / 16) == pytest.approx(0.5, abs=1e-12)

    def test_distance_matrix_input(self):
        M = MeasuredSpace(FiniteMetricSpace([[0, 1], [1, 0]]), [0.5, 0.5])
        with pytest.raises(DomainError):
            tube_mass(M, [[0.0], [1.0]], 0.1)


class TestClassifier:
    def test_segment(self, segment401):
        assert classify(segment401).fractions[RECTIFIABLE] >= 0.9

    def test_circle(self):
        assert classify(gen_circle(200)).fractions[RECTIFIABLE] >= 0.9

    def test_cantor(self, cantor4):
        assert classify(cantor4).fractions[UNRECTIFIABLE] >= 0.9

    def test_union_half_and_half(self):
        U = gen_union([gen_segment(256), gen_four_corner_cantor(4)], [(0, 0), (2, 0)])
        fr = classify(U).fractions
        assert abs(fr[RECTIFIABLE] - 0.5) <= 0.1 and abs(fr[UNRECTIFIABLE] - 0.5) <= 0.1

    def test_no_resolvable_scale(self):
        v = classify(gen_segment(2))
        assert v.labels == [INDETERMINATE, INDETERMINATE]

    @pytest.mark.parametrize("s", [2.0, 0.5])
    def test_scale_invariance(self, segment101, cantor3, s):
        for M in (segment101, cantor3):
            a, b = classify(M), classify(M.scaled(s))
            assert a.labels == b.labels
            assert b.ladder == [s * r for r in a.ladder]

    def test_ladder(self, segment101):
        ladder = default_ladder(segment101)
        assert ladder[0] == 0.25
        assert all(b == a / 2 for a, b in zip(ladder, ladder[1:]))
        assert ladder[-1] >= 10 * 0.01 - 1e-12

    def test_params_validated(self, segment101):
        with pytest.raises(DomainError):
            classify(segment101, ClassifierParams(R=0.5))
