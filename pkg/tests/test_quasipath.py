import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from helpers import line
from rectikit import DomainError, FiniteMetricSpace, MeasuredSpace, PreconditionError
from rectikit.generators import gen_segment
from rectikit.quasipath import (
    QuasiPath,
    QuasiPathCertificate,
    bottleneck_levels,
    is_Q,
    is_Qp,
    quasi_path,
    transfer_quasi_path,
    transfer_via_mass,
)


def dyadic_space(N: int = 20) -> MeasuredSpace:
    return line([0.0] + [2.0 ** -n for n in range(N + 1)])


class TestQuasiPath:
    def test_line_path(self, line3):
        cert = quasi_path(line3, 0, 2, 0.6, 2)
        assert cert.connected
        assert cert.path.nodes == (0, 1, 2)
        assert cert.path.check(line3.space)

    def test_two_cluster_split(self, two_clusters):
        cert = quasi_path(two_clusters, 0, 3, 0.5, 2)
        assert not cert.connected
        s = cert.split
        assert (s.A, s.B, s.gap) == ((0, 1), (2, 3), 0.8)
        assert s.check(two_clusters)

    def test_cantor_opposite_corners(self, cantor3):
        a, b = 0, cantor3.n - 1
        cert = quasi_path(cantor3, a, b, 1 / 6, 2)
        assert not cert.connected
        s = cert.split
        assert s.gap == oracles.min_cross_gap(cantor3.D, s.A, s.B)
        assert s.gap > cantor3.D[a, b] / 6
        assert s.check(cantor3)

    def test_shortest_hop_and_ties(self):
        M = line([0.0, 0.5, 0.5000001, 1.0])
        assert quasi_path(M, 0, 3, 0.6, 2).path.nodes == (0, 1, 3)  # lowest index wins the tie

    def test_errors(self, line3):
        with pytest.raises(DomainError):
            quasi_path(line3, 1, 1, 0.5, 2)
        M = line([0.0, 0.5, 1.0], [0.5, 0.5, 0.0])
        with pytest.raises(DomainError):
            quasi_path(M, 0, 2, 0.5, 2)
        with pytest.raises(DomainError):
            quasi_path(line3, 0, 2, 1.0, 0.5)  # b lies outside ball(a, R d)

    def test_locality_restricts_nodes(self):
        # the only bridge lies behind a, beyond R d(a, b)
        M = MeasuredSpace.from_points([[0, 0], [1, 0], [-0.4, 0.45], [0.5, 2]])
        assert not quasi_path(M, 0, 1, 0.7, 1.0).connected

    def test_certificate_json(self, two_clusters):
        data = json.loads(quasi_path(two_clusters, 0, 3, 0.5, 2).to_json())
        assert data["variant"] == "split" and data["gap"] == 0.8

    def test_certificate_needs_exactly_one(self):
        with pytest.raises(ValueError):
            QuasiPathCertificate()

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_agrees_with_exhaustive(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        M = MeasuredSpace(FiniteMetricSpace(oracles.random_metric(rng, n)), rng.choice([0.0, 1.0], n, p=[0.2, 0.8]))
        supp = M.support
        if supp.size < 2:
            return
        a, b = (int(v) for v in rng.choice(supp, 2, replace=False))
        delta, R = rng.uniform(0.1, 1.0), rng.uniform(1.0, 3.0)
        cert = quasi_path(M, a, b, delta, R)
        assert cert.connected == oracles.path_exists(M.D, M.w, a, b, delta, R)
        if cert.connected:
            assert cert.path.check(M.space)
        else:
            assert cert.split.check(M) and cert.split.gap > delta * M.D[a, b]

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_scale_invariance(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        M = MeasuredSpace.from_points(rng.random((n, 2)))
        a, b = 0, n - 1
        delta, R = rng.uniform(0.1, 1.0), rng.uniform(1.0, 3.0)
        c1 = quasi_path(M, a, b, delta, R)
        c2 = quasi_path(M.scaled(2.0), a, b, delta, R)
        assert c1.connected == c2.connected
        if c1.connected:
            assert c1.path.nodes == c2.path.nodes
        else:
            assert (c1.split.A, c1.split.B, 2 * c1.split.gap) == (c2.split.A, c2.split.B, c2.split.gap)


class TestMembership:
    def test_two_points(self):
        M = line([0.0, 1.0])
        assert is_Qp(M, 0, 1.0, 1.0).ok and is_Q(M, 1.0, 1.0).ok

    def test_dyadic_pointed(self):
        # every dyadic point except the innermost one (a truncation artefact: 0 is isolated
        # here, so the hop 0 -> 2^-20 exceeds delta d) is reached from 0
        M = dyadic_space()
        innermost = M.n - 1
        assert is_Qp(M, 0, 0.5, 1.0, targets=range(1, innermost)).ok
        res = is_Qp(M, 0, 0.5, 1.0)
        assert not res.ok and res.witness == (0, innermost)

    def test_dyadic_consecutive_pairs_disconnected(self):
        M = dyadic_space()
        for k in range(1, M.n - 1):
            cert = quasi_path(M, k, k + 1, 0.5, 1.0)
            assert not cert.connected and cert.split.check(M)
        assert not is_Q(M, 0.5, 1.0).ok

    def test_dyadic_literal_parameters_refused(self):
        with pytest.raises(DomainError):
            is_Qp(dyadic_space(), 0, 1.0, 0.5)

    def test_segment_dense_enough(self):
        # delta >= mesh / (least pair distance) = 1 allows the direct hop; below that,
        # adjacent samples can never be joined
        M = gen_segment(30)
        assert is_Q(M, 1.0, 1.0).ok
        assert not is_Q(M, 0.99, 1.0).ok

    def test_singleton_support(self):
        M = line([0.0, 1.0], [1.0, 0.0])
        assert is_Q(M, 0.1, 1.0).ok

    def test_targets_restrict(self):
        M = line([0.0, 0.1, 0.4, 0.7, 1.0])
        res = is_Qp(M, 0, 0.5, 2)
        assert not res.ok and res.witness == (0, 1)  # the nearest neighbour is never reachable for delta < 1
        assert is_Qp(M, 0, 0.5, 2, targets=[4]).ok

    def test_bottleneck_levels_against_bfs(self, cantor3):
        M = cantor3
        lv = bottleneck_levels(M.D, 0, M.support, 1 / 6, 2)
        for y in range(1, M.n, 7):
            d = M.D[0, y]
            if abs(lv[y] - d) > 1e-9 * d:
                assert (lv[y] <= d) == quasi_path(M, 0, y, 1 / 6, 2).connected

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_is_Qp_matches_pairwise_search(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        M = MeasuredSpace(FiniteMetricSpace(oracles.random_metric(rng, n)), np.ones(n))
        delta, R = rng.uniform(0.2, 1.0), rng.uniform(1.0, 2.5)
        expect = all(oracles.path_exists(M.D, M.w, 0, y, delta, R) for y in range(1, n))
        assert is_Qp(M, 0, delta, R).ok == expect


class TestTransfer:
    def test_same_set(self):
        M = gen_segment(21)
        path = quasi_path(M, 0, 20, 0.1, 1.0).path
        d = M.D[0, 20]
        out = transfer_quasi_path(M.space, path, range(21), range(21), 0.3)
        assert out.nodes == path.nodes
        assert out.delta == path.delta + 0.6 and out.check(M.space)
        assert d == 1  # eps bound is min(1/((R+1) d^2), 1) = 1/2

    def test_perturbed_copy(self):
        xs = np.linspace(0, 1, 21)
        rng = np.random.default_rng(3)
        ys = xs[1:-1] + rng.uniform(-0.01, 0.01, 19)
        pts = np.concatenate([xs, ys])
        M = MeasuredSpace.from_points(pts[:, None])
        E = list(range(21))
        F = [0, 20] + list(range(21, 40))
        on_E = MeasuredSpace(M.space, np.isin(np.arange(M.n), E).astype(float))
        path = quasi_path(on_E, 0, 20, 0.06, 1.0).path
        out = transfer_quasi_path(M.space, path, E, F, 0.02)
        assert set(out.nodes[1:-1]) <= set(F)
        assert out.check(M.space)
        # the re-run search in F finds a path at the inflated parameter as well
        sub = MeasuredSpace(M.space, np.isin(np.arange(M.n), F).astype(float))
        assert quasi_path(sub, 0, 20, out.delta, out.R).connected

    def test_eps_bound_refused(self):
        M = gen_segment(21)
        path = quasi_path(M, 0, 20, 0.1, 1.0).path
        with pytest.raises(PreconditionError, match="eps"):
            transfer_quasi_path(M.space, path, range(21), range(21), 0.6)

    def test_via_mass_full_support(self):
        M = gen_segment(41)
        path = quasi_path(M, 0, 40, 0.05, 1.0).path
        out = transfer_via_mass(M, path, M.support, M.w, 0.01, 0.05)
        assert out.nodes == path.nodes
        assert out.delta == pytest.approx(0.15)

    def test_via_mass_drop_one_percent(self):
        M = gen_segment(201)
        path = quasi_path(M, 0, 200, 0.05, 1.0).path
        drop = [k for k in range(1, 200) if k not in path.nodes][:2]  # two atoms of mass 1/201
        K = np.setdiff1d(M.support, drop)
        out = transfer_via_mass(M, path, K, M.w, 0.011, 0.05)
        d = M.D[0, 200]
        assert all(M.D[u, v] <= out.delta * d for u, v in zip(out.nodes, out.nodes[1:]))
        assert set(out.nodes) <= set(K.tolist())

    def test_via_mass_light_node_refused(self):
        M = gen_segment(41)
        path = quasi_path(M, 0, 40, 0.05, 1.0).path
        with pytest.raises(PreconditionError, match="node 0"):
            transfer_via_mass(M, path, M.support, M.w, 0.5, 0.05)


def test_quasipath_check_rejects_long_hop(line3):
    assert not QuasiPath((0, 2), 0, 2, 0.6, 2).check(line3.space)
