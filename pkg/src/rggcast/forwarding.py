"""Probabilistic forwarding of coded packets over a unit-disk graph.

A packet spreads by giving every point an independent Bernoulli(p) mark
(the source is always marked): the transmitters are the source's component
among marked points and the receivers are that component's extended set.
This mark-then-cluster view is equivalent to event-driven first-reception
forwarding because each point's decision is independent of arrival order.

The module also provides a coupled (common-random-numbers) representation of
an entire trial ensemble: for fixed per-point uniforms, the receiver set is
monotone in p, so every point has a critical p per packet, and success/
transmission curves for all p are obtained from those thresholds exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .parallel import map_indexed
from .pointproc import SeedSpec, SimDomain, derive_stream, sample_ppp
from .rgg import Rgg, build_rgg, components


@dataclass(frozen=True)
class ForwardingParams:
    n_packets: int
    k_decode: int
    forward_prob: float

    def __post_init__(self):
        if not (1 <= self.k_decode <= self.n_packets):
            raise ValueError("need 1 <= k_decode <= n_packets")
        if not (0.0 <= self.forward_prob <= 1.0):
            raise ValueError("forward_prob must be in [0, 1]")


@dataclass
class PacketOutcome:
    """Transmitter and receiver point indices for a single packet."""

    transmitters: np.ndarray
    receivers: np.ndarray


@dataclass
class ForwardingResult:
    receive_count: np.ndarray
    successful_receivers: int
    total_transmissions: int
    per_packet: list | None = None


@dataclass
class Estimate:
    value: float
    std_err: float


def packet_masks_from_marks(graph: Rgg, marks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(transmitter, receiver) boolean masks for a given mark vector.

    The source mark is forced to 1. Transmitters are the source's component
    in the subgraph induced on marked points; receivers additionally include
    every full-graph neighbor of a transmitter.
    """
    marks = np.asarray(marks, dtype=bool).copy()
    src = graph.source_index
    marks[src] = True
    roots = _kernels.union_find_roots(graph.n_points, graph.edges[:, 0], graph.edges[:, 1], marks)
    transmitters = (roots == roots[src]) & marks
    receivers = _kernels.neighbor_or(transmitters, graph.indptr, graph.indices)
    return transmitters, receivers


def forward_one_packet(graph: Rgg, p: float, stream: np.random.Generator) -> PacketOutcome:
    """Spread one packet with forwarding probability p using the given stream."""
    if not (0.0 <= p <= 1.0):
        raise ValueError("forwarding probability must be in [0, 1]")
    marks = stream.random(graph.n_points) < p
    t, r = packet_masks_from_marks(graph, marks)
    return PacketOutcome(transmitters=np.flatnonzero(t), receivers=np.flatnonzero(r))


def forward_n_packets(
    graph: Rgg,
    params: ForwardingParams,
    seed: SeedSpec,
    keep_packets: bool = False,
) -> ForwardingResult:
    """Run the full protocol: one independent mark stream per packet.

    Packet j uses stream_id = j (1-based) of the given seed, so per-packet
    outcomes are exchangeable and replayable. The source holds all n packets
    by construction.
    """
    n_pts = graph.n_points
    receive_count = np.zeros(n_pts, dtype=np.int64)
    total = 0
    outcomes = [] if keep_packets else None
    for j in range(1, params.n_packets + 1):
        stream = derive_stream(seed.with_stream(j))
        marks = stream.random(n_pts) < params.forward_prob
        t, r = packet_masks_from_marks(graph, marks)
        receive_count += r
        total += int(t.sum())
        if keep_packets:
            outcomes.append(PacketOutcome(np.flatnonzero(t), np.flatnonzero(r)))
    receive_count[graph.source_index] = params.n_packets
    successful = int((receive_count >= params.k_decode).sum())
    return ForwardingResult(
        receive_count=receive_count,
        successful_receivers=successful,
        total_transmissions=total,
        per_packet=outcomes,
    )


def _fwd_trial_id(graph_trial: int, fwd_trials: int, fwd_trial: int) -> int:
    # Disjoint trial ids per (graph, forwarding iteration) pair; geometry uses
    # stream 0 so collisions with graph sampling are impossible anyway.
    return graph_trial * fwd_trials + fwd_trial

def two_level_estimate(fractions: np.ndarray) -> Estimate:
    """Grand mean and standard error for a (graphs x iterations) table.

    Splits the variance into a between-graph and a within-graph component;
    the between component is debiased by the within noise of the graph means.
    """
    frac = np.asarray(fractions, dtype=float)
    g, f = frac.shape
    graph_means = frac.mean(axis=1)
    grand = float(graph_means.mean())
    if g == 1 and f == 1:
        return Estimate(grand, 0.0)
    var_within = float(frac.var(axis=1, ddof=1).mean()) if f > 1 else 0.0
    if g > 1:
        var_means = float(graph_means.var(ddof=1))
        var_between = max(0.0, var_means - var_within / max(f, 1))
    else:
        var_between = 0.0
    se2 = var_between / g + (var_within / (g * f) if f > 1 else 0.0)
    if g > 1 and f == 1:
        se2 = float(graph_means.var(ddof=1)) / g
    return Estimate(grand, math.sqrt(se2))


def _success_fraction_task(args):
    (domain, params, g, fwd_trials, master_seed, condition) = args
    points = sample_ppp(domain, SeedSpec(master_seed, trial_id=g, stream_id=0))
    graph = build_rgg(points)
    if condition == "giant":
        lab = components(graph)
        member = lab.label == lab.largest_id
        denom = int(member.sum())
    else:
        member = None
        denom = graph.n_points
    out = np.empty(fwd_trials, dtype=float)
    for f in range(fwd_trials):
        seed = SeedSpec(master_seed, trial_id=_fwd_trial_id(g, fwd_trials, f), stream_id=0)
        res = forward_n_packets(graph, params, seed)
        ok = res.receive_count >= params.k_decode
        if member is not None:
            ok = ok & member
        out[f] = ok.sum() / denom
    return out


def success_fraction(
    domain: SimDomain,
    params: ForwardingParams,
    graph_trials: int,
    fwd_trials: int,
    master_seed: int,
    condition: str = "none",
    workers: int = 1,
) -> Estimate:
    """Mean fraction of points receiving >= k of n packets, with standard error.

    Averages fwd_trials independent protocol runs on each of graph_trials
    independent graphs. condition="giant" restricts both the numerator and
    the denominator to the largest component (sensitivity analysis only).
    """
    if graph_trials < 1 or fwd_trials < 1:
        raise ValueError("graph_trials and fwd_trials must be >= 1")
    if condition not in ("none", "giant"):
        raise ValueError("condition must be 'none' or 'giant'")
    tasks = [
        (domain, params, g, fwd_trials, master_seed, condition)
        for g in range(graph_trials)
    ]
    rows = map_indexed(_success_fraction_task, tasks, workers)
    return two_level_estimate(np.vstack(rows))


def packet_thresholds(graph: Rgg, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Critical (transmit, receive) probabilities per point for fixed uniforms.

    With common random numbers a point transmits at forwarding probability p
    exactly when its transmit threshold is < p, and receives exactly when its
    receive threshold is < p. Computed by an incremental union-find over the
    points sorted by their uniform draw.
    """
    order = np.argsort(u, kind="stable")
    t = _kernels.transmit_thresholds(
        graph.n_points, u, order, graph.indptr, graph.indices, graph.source_index
    )
    r = _kernels.receive_thresholds(t, graph.indptr, graph.indices)
    return t, r


@dataclass
class CrnProfile:
    """Exact coupled success/transmission curves over a fixed p grid.

    For every trial the per-point reception thresholds are reduced to the
    critical probability at which the point holds >= k of the first n packets
    (k-th order statistic of the per-packet thresholds). Histograms of those
    critical values over the p grid make success fractions and expected
    transmissions at any grid probability O(grid) lookups, while remaining
    bit-identical to rerunning the forwarding protocol with the same streams
    at that probability.
    """

    k: int
    n_values: np.ndarray  # ascending prefix lengths
    p_grid: np.ndarray  # ascending candidate probabilities
    graph_trials: int
    fwd_trials: int
    success_hist: np.ndarray  # (trials, n_values, bins) counts of success thresholds
    trans_hist: np.ndarray  # (n_max, bins) transmit-threshold counts summed over trials
    denominators: np.ndarray  # per trial

    def success_at(self, grid_idx: int) -> dict[int, Estimate]:
        """Success estimate per prefix length at p_grid[grid_idx]."""
        counts = self.success_hist[:, :, : grid_idx + 1].sum(axis=2)
        frac = counts / self.denominators[:, None]
        out = {}
        for ni, n in enumerate(self.n_values):
            table = frac[:, ni].reshape(self.graph_trials, self.fwd_trials)
            out[int(n)] = two_level_estimate(table)
        return out

    def success_curve(self, n: int) -> np.ndarray:
        """Mean success fraction at every grid probability for prefix length n."""
        ni = int(np.nonzero(self.n_values == n)[0][0])
        frac = np.cumsum(self.success_hist[:, ni, :], axis=1) / self.denominators[:, None]
        return frac.mean(axis=0)

    def transmissions_at(self, n: int, grid_idx: int) -> float:
        """Mean total transmissions of the first n packets at p_grid[grid_idx]."""
        trials = self.graph_trials * self.fwd_trials
        return float(self.trans_hist[:n, : grid_idx + 1].sum()) / trials


def _crn_profile_task(args):
    (domain, k, n_values, g, fwd_trials, master_seed, p_grid, condition) = args
    points = sample_ppp(domain, SeedSpec(master_seed, trial_id=g, stream_id=0))
    graph = build_rgg(points)
    n_pts = graph.n_points
    n_max = int(n_values[-1])
    if condition == "giant":
        lab = components(graph)
        member = lab.label == lab.largest_id
        denom = int(member.sum())
    else:
        member = None
        denom = n_pts
    edges_lo = np.concatenate(([-2.0], p_grid))
    succ = np.zeros((fwd_trials, n_values.size, p_grid.size), np.int64)
    trans = np.zeros((n_max, p_grid.size), np.int64)
    recv = np.empty((n_pts, n_max), np.float64)
    for f in range(fwd_trials):
        base = SeedSpec(master_seed, trial_id=_fwd_trial_id(g, fwd_trials, f), stream_id=0)
        for j in range(1, n_max + 1):
            u = derive_stream(base.with_stream(j)).random(n_pts)
            t, r = packet_thresholds(graph, u)
            recv[:, j - 1] = r
            trans[j - 1] += np.histogram(t, bins=edges_lo)[0]
        s = _kernels.prefix_kth_smallest(recv, k, n_values)
        for ni in range(n_values.size):
            vals = s[member, ni] if member is not None else s[:, ni]
            succ[f, ni] = np.histogram(vals, bins=edges_lo)[0]
    return succ, trans, denom


def crn_profile(
    domain: SimDomain,
    k: int,
    n_values,
    graph_trials: int,
    fwd_trials: int,
    master_seed: int,
    p_grid: np.ndarray,
    condition: str = "none",
    workers: int = 1,
) -> CrnProfile:
    """Build the coupled ensemble profile for all prefix lengths in n_values."""
    n_values = np.asarray(sorted(set(int(n) for n in n_values)), np.int64)
    if n_values.size == 0 or n_values[0] < k:
        raise ValueError("need a nonempty n list with every n >= k")
    p_grid = np.asarray(p_grid, float)
    tasks = [
        (domain, k, n_values, g, fwd_trials, master_seed, p_grid, condition)
        for g in range(graph_trials)
    ]
    results = map_indexed(_crn_profile_task, tasks, workers)
    succ = np.concatenate([r[0] for r in results], axis=0)
    trans = np.zeros((int(n_values[-1]), p_grid.size), np.int64)
    for r in results:
        trans += r[1]
    denominators = np.array(
        [r[2] for r in results for _ in range(fwd_trials)], dtype=float
    )
    return CrnProfile(
        k=k,
        n_values=n_values,
        p_grid=p_grid,
        graph_trials=graph_trials,
        fwd_trials=fwd_trials,
        success_hist=succ,
        trans_hist=trans,
        denominators=denominators,
    )
