"""Threshold searches, transmission estimates, mean-field heuristic and bounds.

The central object is the minimum forwarding probability that makes the
expected fraction of points decoding the broadcast (receiving >= k of n
packets) reach 1 - delta. It is found either by coupled Monte Carlo
simulation or by a mean-field heuristic that treats per-packet coverage
as independent Bernoulli(theta(lambda*p)^2) events.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .forwarding import CrnProfile, Estimate, crn_profile
from .parallel import map_indexed
from .percolation import LAMBDA_C, ThetaTable, theta_at
from .pointproc import SeedSpec, SimDomain, derive_stream, sample_ppp
from .rgg import build_rgg, components, extended_mask

logger = logging.getLogger(__name__)

SIMULATED_P_STEP = 1e-3
MEAN_FIELD_P_STEP = 1e-4


class UnreachableTarget(Exception):
    """The requested success fraction cannot be met even at p = 1."""


@dataclass
class SweepRow:
    n: int
    p_min: float
    success_at_p: float
    tau: float
    tau_per_node: float
    method: str


@dataclass
class ThresholdSearch:
    """Result of a minimum-forwarding-probability search."""

    p_min: float
    bracket: tuple[float, float]
    success_at_p: float
    std_err: float
    reachable: bool


def candidate_p_grid(lam: float, step: float = SIMULATED_P_STEP) -> np.ndarray:
    """Ascending candidate probabilities spanning (lambda_c/lambda, 1], ending at 1."""
    lo = LAMBDA_C / lam
    if lo >= 1.0:
        raise ValueError(
            f"intensity {lam} is not super-critical: no p in (0, 1] gives lambda*p > {LAMBDA_C}"
        )
    count = int(math.ceil((1.0 - lo) / step - 1e-12))
    return 1.0 - step * np.arange(count - 1, -1, -1)


def binomial_tail(n: int, q: float, k: int) -> float:
    """P(Bin(n, q) >= k) via an upward pmf recurrence; stable up to n ~ 1e4."""
    if not (0.0 <= q <= 1.0):
        raise ValueError("q must be in [0, 1]")
    if not (0 <= k <= n):
        raise ValueError("need 0 <= k <= n")
    if k == 0:
        return 1.0
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return 1.0
    log_pmf = (
        math.lgamma(n + 1)
        - math.lgamma(k + 1)
        - math.lgamma(n - k + 1)
        + k * math.log(q)
        + (n - k) * math.log1p(-q)
    )
    term = math.exp(log_pmf)
    total = term
    ratio = q / (1.0 - q)
    for j in range(k, n):
        term *= (n - j) / (j + 1) * ratio
        total += term
    return min(total, 1.0)


def estimate_total_transmissions(
    n: int, m: float, lam: float, p: float, table: ThetaTable
) -> float:
    """Closed-form expected total transmissions: n * m^2 * lambda * p * theta(lambda*p)^2."""
    if n <= 0 or m <= 0 or lam <= 0 or p <= 0:
        raise ValueError("all inputs must be positive")
    th = theta_at(table, lam * p)
    return n * m * m * lam * p * th * th


def mean_field_min_prob(
    k: int,
    n: int,
    delta: float,
    lam: float,
    table: ThetaTable,
    resolution: float = MEAN_FIELD_P_STEP,
) -> float:
    """Smallest p with P(Bin(n, theta(lambda*p)^2) >= k) >= 1 - delta.

    Deterministic bisection over (lambda_c/lambda, 1]; the objective is
    monotone in p because the interpolated theta curve is nondecreasing.
    Raises UnreachableTarget when even p = 1 falls short.
    """
    if not (1 <= k <= n):
        raise ValueError("need 1 <= k <= n")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must be in (0, 1)")
    target = 1.0 - delta

    def tail(p: float) -> float:
        th = theta_at(table, lam * p)
        return binomial_tail(n, th * th, k)

    lo = LAMBDA_C / lam
    if lo >= 1.0:
        raise UnreachableTarget(f"lambda = {lam} is sub-critical at every p <= 1")
    if tail(1.0) < target:
        raise UnreachableTarget(
            f"mean-field success {tail(1.0):.4f} at p=1 is below {target}"
        )
    hi = 1.0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if tail(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def _bisect_success(profile: CrnProfile, n: int, delta: float, cache: dict,
                    hi_start: int | None = None) -> ThresholdSearch:
    """Grid bisection of the coupled success curve for one prefix length n.

    The curve is exactly monotone in p (common random numbers), so bisection
    is sound despite Monte Carlo noise. Stops at one grid step of bracket
    width or when the midpoint estimate is within one standard error of the
    target.
    """
    target = 1.0 - delta
    grid = profile.p_grid

    def success(idx: int) -> Estimate:
        if idx not in cache:
            cache[idx] = profile.success_at(idx)
        return cache[idx][n]

    last = grid.size - 1
    hi = last if hi_start is None else hi_start
    est = success(hi)
    if est.value < target:
        if hi != last:
            hi = last
            est = success(hi)
        if est.value < target:
            return ThresholdSearch(
                p_min=float("nan"),
                bracket=(grid[0], grid[last]),
                success_at_p=est.value,
                std_err=est.std_err,
                reachable=False,
            )
    lo = -1  # index below the grid: the super-criticality bound, assumed failing
    while hi - lo > 1:
        mid = (lo + hi) // 2
        est_mid = success(mid)
        if est_mid.value >= target:
            hi = mid
            est = est_mid
        else:
            lo = mid
        if abs(est_mid.value - target) <= est_mid.std_err:
            hi = mid if est_mid.value >= target else hi
            est = success(hi)
            break
    if lo >= 0:
        lo_p = float(grid[lo])
    elif grid.size > 1:
        lo_p = float(grid[0] - (grid[1] - grid[0]))
    else:
        lo_p = float(grid[0])
    return ThresholdSearch(
        p_min=float(grid[hi]),
        bracket=(float(lo_p), float(grid[hi])),
        success_at_p=est.value,
        std_err=est.std_err,
        reachable=True,
    )


def min_forward_prob_simulated(
    domain: SimDomain,
    k: int,
    n: int,
    delta: float,
    graph_trials: int,
    fwd_trials: int,
    master_seed: int,
    p_step: float = SIMULATED_P_STEP,
    condition: str = "none",
    workers: int = 1,
) -> ThresholdSearch:
    """Monte Carlo search for the near-broadcast forwarding probability.

    Uses one coupled ensemble (common random numbers across all candidate p)
    so the empirical success curve is monotone, then bisects it over the
    super-critical range (lambda_c/lambda, 1] at the given resolution.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must be in (0, 1)")
    grid = candidate_p_grid(domain.intensity_lambda, p_step)
    profile = crn_profile(
        domain, k, [n], graph_trials, fwd_trials, master_seed, grid,
        condition=condition, workers=workers,
    )
    return _bisect_success(profile, n, delta, cache={})


def sweep(
    domain: SimDomain,
    k: int,
    delta: float,
    n_range,
    method: str,
    graph_trials: int,
    fwd_trials: int,
    table: ThetaTable | None,
    master_seed: int,
    condition: str = "none",
    workers: int = 1,
    progress=None,
) -> list[SweepRow]:
    """One row per n: minimum forwarding probability and transmissions there.

    method="simulated" shares a single coupled ensemble across all n (packet
    streams are common prefixes), so the p_min column is exactly monotone.
    method="mean_field" is table-only and runs no graph simulation.
    """
    n_values = sorted(set(int(n) for n in n_range))
    if not n_values:
        raise ValueError("empty n range")
    if any(n < k for n in n_values):
        raise ValueError("every n must be >= k")
    if method not in ("simulated", "mean_field"):
        raise ValueError("method must be 'simulated' or 'mean_field'")
    lam = domain.intensity_lambda
    m = domain.side_m
    rows = []
    if method == "mean_field":
        if table is None:
            raise ValueError("mean_field sweep requires a theta table")
        for n in n_values:
            try:
                p = mean_field_min_prob(k, n, delta, lam, table)
                th = theta_at(table, lam * p)
                tau = estimate_total_transmissions(n, m, lam, p, table)
                row = SweepRow(n, p, binomial_tail(n, th * th, k), tau,
                               tau / (lam * m * m), "mean_field")
            except UnreachableTarget:
                nan = float("nan")
                row = SweepRow(n, nan, nan, nan, nan, "mean_field")
            rows.append(row)
            if progress:
                progress(row)
        return rows

    grid = candidate_p_grid(lam, SIMULATED_P_STEP)
    profile = crn_profile(
        domain, k, n_values, graph_trials, fwd_trials, master_seed, grid,
        condition=condition, workers=workers,
    )
    cache: dict = {}
    hi_start = None
    for n in n_values:
        search = _bisect_success(profile, n, delta, cache, hi_start=hi_start)
        if not search.reachable:
            nan = float("nan")
            row = SweepRow(n, nan, search.success_at_p, nan, nan, "simulated")
        else:
            idx = int(np.searchsorted(grid, search.p_min))
            hi_start = idx
            tau = profile.transmissions_at(n, idx)
            row = SweepRow(n, search.p_min, search.success_at_p, tau,
                           tau / (lam * m * m), "simulated")
            if table is not None:
                closed = estimate_total_transmissions(n, m, lam, search.p_min, table)
                logger.info(
                    "n=%d p_min=%.3f simulated tau=%.1f closed-form tau=%.1f",
                    n, search.p_min, tau, closed,
                )
        rows.append(row)
        if progress:
            progress(row)
    return rows


@dataclass
class CoverageEstimates:
    """Empirical chance a point lies in >= k of t extended giant clusters.

    mean[k-1, t-1] estimates the coverage probability for 1 <= k <= t <= n;
    entries outside that triangle are NaN. Estimated per graph by counting,
    for each point, membership across per-packet extended giant components.
    """

    n: int
    mean: np.ndarray
    std_err: np.ndarray
    trials: int
    forward_prob: float
    supercritical: bool

    def get(self, k: int, t: int) -> float:
        self._check(k, t)
        return float(self.mean[k - 1, t - 1])

    def get_se(self, k: int, t: int) -> float:
        self._check(k, t)
        return float(self.std_err[k - 1, t - 1])

    def _check(self, k: int, t: int) -> None:
        if not (1 <= k <= t <= self.n):
            raise KeyError(f"no coverage estimate for (k={k}, t={t}) with n={self.n}")


def _coverage_task(args):
    (domain, n, p, trial, master_seed) = args
    points = sample_ppp(domain, SeedSpec(master_seed, trial_id=trial, stream_id=0))
    graph = build_rgg(points)
    n_pts = graph.n_points
    member = np.zeros((n_pts, n), bool)
    for j in range(1, n + 1):
        marks = derive_stream(SeedSpec(master_seed, trial_id=trial, stream_id=j)).random(n_pts) < p
        marks[graph.source_index] = True
        lab = components(graph, active=marks)
        giant = lab.label == lab.largest_id
        member[:, j - 1] = extended_mask(graph, giant)
    counts = np.cumsum(member, axis=1)
    out = np.full((n, n), np.nan)
    for t in range(1, n + 1):
        ct = counts[:, t - 1]
        for k in range(1, t + 1):
            out[k - 1, t - 1] = (ct >= k).mean()
    return out


def estimate_extended_coverage(
    domain: SimDomain,
    n: int,
    p: float,
    trials: int,
    master_seed: int,
    workers: int = 1,
) -> CoverageEstimates:
    """Monte Carlo coverage probabilities for all (k, t) pairs with k <= t <= n.

    Per trial and packet, the proxy for the infinite extended cluster is the
    extended set of the largest marked component (the same finite-window
    proxy used for the percolation curve). Flags sub-critical thinning.
    """
    if trials < 2:
        raise ValueError("trials must be >= 2")
    supercritical = domain.intensity_lambda * p > LAMBDA_C
    if not supercritical:
        logger.warning(
            "thinned intensity %.3f is below the critical value %.2f; "
            "coverage estimates will be dominated by finite clusters",
            domain.intensity_lambda * p, LAMBDA_C,
        )
    tasks = [(domain, n, p, t, master_seed) for t in range(trials)]
    per_trial = np.array(map_indexed(_coverage_task, tasks, workers))
    return CoverageEstimates(
        n=n,
        mean=per_trial.mean(axis=0),
        std_err=per_trial.std(axis=0, ddof=1) / math.sqrt(trials),
        trials=trials,
        forward_prob=p,
        supercritical=supercritical,
    )


def successful_fraction_from_coverage(cov: CoverageEstimates, k: int) -> float:
    """Expected successful-receiver fraction from coverage estimates.

    Telescoping sum over the number t of covering packets:
    sum_{t=k}^{n-1} cov(k,t) * (cov(t,n) - cov(t+1,n)) + cov(k,n) * cov(n,n).
    Differences that come out negative (Monte Carlo noise on what are
    probabilities of disjoint events) are clamped to zero with a warning.
    """
    n = cov.n
    if not (1 <= k <= n):
        raise KeyError(f"k={k} outside 1..{n}")
    total = 0.0
    for t in range(k, n):
        diff = cov.get(t, n) - cov.get(t + 1, n)
        if diff < 0:
            logger.warning(
                "clamping negative coverage difference %.3g at t=%d to 0", diff, t
            )
            diff = 0.0
        total += cov.get(k, t) * diff
    total += cov.get(k, n) * cov.get(n, n)
    return total


def coverage_lower_bounds(
    k: int, n: int, p: float, lam: float, table: ThetaTable
) -> tuple[float, float]:
    """Two analytic lower bounds on the (k, n) extended-cluster coverage.

    bound1: theta(lambda*p)^n, from requiring membership in every cluster.
    bound2: 1 - prod_{j=k}^{n} (1 - theta(lambda * p^j * (1-p)^(n-j)))^C(n,j),
    from packet-subset thinnings; evaluated in log space to avoid underflow.
    """
    if not (1 <= k <= n):
        raise ValueError("need 1 <= k <= n")
    if not (0.0 <= p <= 1.0):
        raise ValueError("p must be in [0, 1]")
    th = theta_at(table, lam * p) if lam * p > 0 else 0.0
    bound1 = th**n
    log_miss = 0.0
    hit_one = False
    for j in range(k, n + 1):
        thin = lam * p**j * (1.0 - p) ** (n - j)
        tj = theta_at(table, thin) if thin > 0 else 0.0
        if tj >= 1.0:
            hit_one = True
            break
        log_miss += math.comb(n, j) * math.log1p(-tj)
    bound2 = 1.0 if hit_one else -math.expm1(log_miss)
    return bound1, bound2
