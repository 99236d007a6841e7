"""Forwarding protocol against exhaustive enumeration and coupling oracles."""

import itertools

import numpy as np
import pytest

from rggcast import SimDomain
from rggcast.forwarding import (
    Estimate,
    ForwardingParams,
    crn_profile,
    forward_n_packets,
    forward_one_packet,
    packet_masks_from_marks,
    packet_thresholds,
    two_level_estimate,
)
from rggcast.pointproc import SeedSpec, derive_stream, sample_ppp
from rggcast.rgg import build_rgg

from conftest import path_points, star_points


def path_outcome(marks):
    """Hand-derived forwarding outcome on a 5-point path with source 0.

    Transmitters are the marked prefix starting at the source; receivers add
    the next point along, if any.
    """
    t = 1
    while t < 5 and marks[t - 1]:
        t += 1
    return t, min(t + 1, 5)  # (#transmitters, #receivers)


def path_exact_expectations(p):
    """Exact E[#transmitters], E[#receivers] by 2^4 enumeration."""
    et = er = 0.0
    for marks in itertools.product([0, 1], repeat=4):
        w = 1.0
        for b in marks:
            w *= p if b else 1.0 - p
        t, r = path_outcome(marks)
        et += w * t
        er += w * r
    return et, er


class TestSinglePacket:
    def test_p_zero_only_source(self):
        g = build_rgg(star_points())
        out = forward_one_packet(g, 0.0, derive_stream(SeedSpec(1, stream_id=1)))
        assert list(out.transmitters) == [0]
        assert set(out.receivers) == {0, 1, 2, 3, 4}

    def test_p_one_whole_component(self):
        g = build_rgg(path_points(5))
        out = forward_one_packet(g, 1.0, derive_stream(SeedSpec(1, stream_id=1)))
        assert list(out.transmitters) == list(range(5))
        assert list(out.receivers) == list(range(5))

    def test_source_mark_forced(self):
        g = build_rgg(path_points(3))
        t, r = packet_masks_from_marks(g, np.zeros(3, bool))
        assert t[0] and not t[1]
        assert list(np.flatnonzero(r)) == [0, 1]

    def test_path_mean_matches_enumeration(self):
        g = build_rgg(path_points(5))
        p = 0.6
        et, er = path_exact_expectations(p)
        trials = 20000
        ts = np.empty(trials)
        rs = np.empty(trials)
        for i in range(trials):
            out = forward_one_packet(g, p, derive_stream(SeedSpec(77, i, 1)))
            ts[i] = out.transmitters.size
            rs[i] = out.receivers.size
        for sample, exact in [(ts, et), (rs, er)]:
            se = sample.std(ddof=1) / np.sqrt(trials)
            assert abs(sample.mean() - exact) < 3.5 * se


class TestMultiPacket:
    def test_source_holds_everything(self):
        g = build_rgg(path_points(4))
        res = forward_n_packets(g, ForwardingParams(6, 3, 0.3), SeedSpec(9))
        assert res.receive_count[g.source_index] == 6

    def test_two_packets_need_both_matches_enumeration(self):
        # with k = n = 2 each point must be covered by two independent spreads,
        # so P(success at point i) = q_i^2 with q_i from one-packet enumeration
        g = build_rgg(path_points(5))
        p = 0.5
        q = np.zeros(5)
        for marks in itertools.product([0, 1], repeat=4):
            w = 1.0
            for b in marks:
                w *= p if b else 1.0 - p
            _, r = path_outcome(marks)
            q[:r] += w
        exact = float(np.sum(q**2))
        trials = 20000
        succ = np.empty(trials)
        params = ForwardingParams(n_packets=2, k_decode=2, forward_prob=p)
        for i in range(trials):
            succ[i] = forward_n_packets(g, params, SeedSpec(31, i)).successful_receivers
        se = succ.std(ddof=1) / np.sqrt(trials)
        assert abs(succ.mean() - exact) < 3.5 * se

    def test_total_transmissions_p_zero(self):
        g = build_rgg(path_points(4))
        res = forward_n_packets(g, ForwardingParams(7, 1, 0.0), SeedSpec(2))
        assert res.total_transmissions == 7

    def test_per_packet_kept_on_request(self):
        g = build_rgg(path_points(4))
        res = forward_n_packets(g, ForwardingParams(3, 1, 0.5), SeedSpec(2), keep_packets=True)
        assert len(res.per_packet) == 3
        assert res.total_transmissions == sum(o.transmitters.size for o in res.per_packet)


class TestTwoLevelEstimate:
    def test_constant_table(self):
        est = two_level_estimate(np.full((4, 5), 0.3))
        assert est == Estimate(pytest.approx(0.3), 0.0)

    def test_single_cell(self):
        assert two_level_estimate(np.array([[0.7]])) == Estimate(0.7, 0.0)

    def test_pure_between_graph_variance(self):
        table = np.repeat([[0.2], [0.4], [0.6]], 4, axis=1)
        est = two_level_estimate(table)
        assert est.value == pytest.approx(0.4)
        assert est.std_err == pytest.approx(np.std([0.2, 0.4, 0.6], ddof=1) / np.sqrt(3))

    def test_pure_within_variance(self):
        rng = np.random.default_rng(0)
        table = 0.5 + 0.1 * rng.standard_normal((1, 400))
        est = two_level_estimate(table)
        direct_se = table.std(ddof=1) / np.sqrt(table.size)
        assert est.std_err == pytest.approx(direct_se, rel=1e-12)


class TestCoupledThresholds:
    @pytest.fixture()
    def graph(self):
        d = SimDomain(side_m=15.0, intensity_lambda=3.0)
        return build_rgg(sample_ppp(d, SeedSpec(5)))

    def test_thresholds_reproduce_direct_forwarding(self, graph):
        # for the same uniforms, thresholding must equal mark-then-cluster
        # at every forwarding probability: the CRN decomposition is exact
        for trial in range(5):
            u = derive_stream(SeedSpec(13, trial, 1)).random(graph.n_points)
            t_star, r_star = packet_thresholds(graph, u)
            for p in (0.05, 0.3, 0.5, 0.72, 0.99):
                t_direct, r_direct = packet_masks_from_marks(graph, u < p)
                assert np.array_equal(t_star < p, t_direct)
                assert np.array_equal(r_star < p, r_direct)

    def test_receiver_set_monotone_in_p(self, graph):
        u = derive_stream(SeedSpec(14, 0, 1)).random(graph.n_points)
        _, r_star = packet_thresholds(graph, u)
        prev = np.zeros(graph.n_points, bool)
        for p in np.linspace(0.05, 1.0, 12):
            cur = r_star < p
            assert not np.any(prev & ~cur)
            prev = cur

    def test_profile_matches_direct_success(self):
        # success fractions read off the histogram profile must equal direct
        # forwarding runs with the same seeds, at every grid probability
        d = SimDomain(side_m=12.0, intensity_lambda=3.0)
        grid = np.array([0.3, 0.5, 0.7, 0.9])
        k, n, graph_trials, fwd_trials, seed = 2, 3, 2, 3, 41
        prof = crn_profile(d, k, [n], graph_trials, fwd_trials, seed, grid)
        for idx, p in enumerate(grid):
            direct = []
            for g in range(graph_trials):
                graph = build_rgg(sample_ppp(d, SeedSpec(seed, trial_id=g)))
                for f in range(fwd_trials):
                    s = SeedSpec(seed, trial_id=g * fwd_trials + f)
                    res = forward_n_packets(graph, ForwardingParams(n, k, p), s)
                    direct.append(res.successful_receivers / graph.n_points)
            expect = two_level_estimate(
                np.array(direct).reshape(graph_trials, fwd_trials)
            )
            got = prof.success_at(idx)[n]
            assert got.value == pytest.approx(expect.value, abs=1e-12)
            assert got.std_err == pytest.approx(expect.std_err, abs=1e-12)

    def test_profile_matches_direct_transmissions(self):
        d = SimDomain(side_m=12.0, intensity_lambda=3.0)
        grid = np.array([0.4, 0.8])
        prof = crn_profile(d, 1, [2], 2, 2, 97, grid)
        for idx, p in enumerate(grid):
            totals = []
            for g in range(2):
                graph = build_rgg(sample_ppp(d, SeedSpec(97, trial_id=g)))
                for f in range(2):
                    s = SeedSpec(97, trial_id=g * 2 + f)
                    totals.append(
                        forward_n_packets(graph, ForwardingParams(2, 1, p), s).total_transmissions
                    )
            assert prof.transmissions_at(2, idx) == pytest.approx(np.mean(totals))

    def test_kth_order_statistic_kernel(self):
        from rggcast._kernels import prefix_kth_smallest

        rng = np.random.default_rng(3)
        vals = rng.random((40, 7))
        vals[vals > 0.8] = np.inf
        n_values = np.array([2, 5, 7], np.int64)
        got = prefix_kth_smallest(vals, 2, n_values)
        for ni, n in enumerate(n_values):
            expect = np.sort(vals[:, :n], axis=1)[:, 1]
            assert np.array_equal(got[:, ni], expect)
