"""Empirical percolation probability curve and convergence diagnostics.

The percolation probability theta(lambda) (chance that the origin's point
belongs to the infinite cluster) has no known closed form; it is estimated
at finite size by the largest-component fraction on a big window, averaged
over independent graphs. The persisted curve feeds every analytical formula
downstream.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .parallel import map_indexed
from .pointproc import SeedSpec, SimDomain, derive_stream, sample_ppp
from .rgg import build_rgg, components, extended_mask, largest_component_fraction

# Critical intensity for the unit-disk model (simulation literature value).
# Used only for assertion thresholds and search-domain bounds, never inside
# formulas, which consume the estimated curve directly.
LAMBDA_C = 1.44


@dataclass
class ThetaTable:
    """Empirical curve lambda -> theta with standard errors and provenance."""

    lambda_grid: np.ndarray
    theta_hat: np.ndarray
    std_err: np.ndarray
    window_m: float
    trials: int
    master_seed: int
    smoothed: bool

    def __post_init__(self):
        self.lambda_grid = np.asarray(self.lambda_grid, float)
        self.theta_hat = np.asarray(self.theta_hat, float)
        self.std_err = np.asarray(self.std_err, float)
        if not (self.lambda_grid.size == self.theta_hat.size == self.std_err.size):
            raise ValueError("grid, estimates and errors must have equal length")
        if self.lambda_grid.size == 0:
            raise ValueError("empty grid")
        if np.any(np.diff(self.lambda_grid) <= 0):
            raise ValueError("lambda grid must be strictly ascending")
        if np.any((self.theta_hat < 0) | (self.theta_hat > 1)):
            raise ValueError("theta estimates must lie in [0, 1]")


def isotonic_nondecreasing(y: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Weighted least-squares monotone (nondecreasing) fit, pool-adjacent-violators."""
    y = np.asarray(y, float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, float)
    level = []  # (value, weight, count) blocks
    for yi, wi in zip(y, w):
        level.append([yi, wi, 1])
        while len(level) > 1 and level[-2][0] > level[-1][0]:
            v1, w1, c1 = level[-2]
            v2, w2, c2 = level[-1]
            wt = w1 + w2
            level[-2:] = [[(v1 * w1 + v2 * w2) / wt, wt, c1 + c2]]
    out = np.empty_like(y)
    i = 0
    for v, _, c in level:
        out[i : i + c] = v
        i += c
    return out


def _theta_point_task(args):
    (lam, window_m, trial, master_seed, trial_id) = args
    domain = SimDomain(side_m=window_m, intensity_lambda=lam)
    points = sample_ppp(domain, SeedSpec(master_seed, trial_id=trial_id, stream_id=0))
    return largest_component_fraction(build_rgg(points))


def estimate_theta_curve(
    lambda_min: float,
    lambda_max: float,
    step: float,
    window_m: float,
    trials: int,
    master_seed: int,
    smoothed: bool = True,
    workers: int = 1,
) -> ThetaTable:
    """Largest-component fraction averaged over independent graphs, per grid point.

    The finite-window fraction is the standard proxy for the percolation
    probability; raw Monte Carlo noise is optionally removed with an isotonic
    (nondecreasing in lambda) regression, which theta provably satisfies.
    """
    if not (lambda_min > 0 and step > 0 and lambda_max >= lambda_min):
        raise ValueError("need 0 < lambda_min <= lambda_max and step > 0")
    if trials < 2:
        raise ValueError("trials must be >= 2")
    n_pts = int(math.floor((lambda_max - lambda_min) / step + 1e-9)) + 1
    grid = lambda_min + step * np.arange(n_pts)
    tasks = []
    for gi, lam in enumerate(grid):
        for t in range(trials):
            tasks.append((float(lam), window_m, t, master_seed, gi * trials + t))
    fracs = np.array(map_indexed(_theta_point_task, tasks, workers), float)
    fracs = fracs.reshape(n_pts, trials)
    raw = fracs.mean(axis=1)
    se = fracs.std(axis=1, ddof=1) / math.sqrt(trials)
    if smoothed:
        w = 1.0 / np.maximum(se, 1e-6) ** 2
        theta = np.clip(isotonic_nondecreasing(raw, w), 0.0, 1.0)
    else:
        theta = raw
    return ThetaTable(
        lambda_grid=grid,
        theta_hat=theta,
        std_err=se,
        window_m=window_m,
        trials=trials,
        master_seed=master_seed,
        smoothed=smoothed,
    )


def theta_at(table: ThetaTable, lam: float) -> float:
    """Piecewise-linear interpolation of the curve, clipped to [0, 1].

    Below the first grid point the value clamps to 0 (deep sub-critical);
    above the last it clamps to the last estimate.
    """
    if not (lam > 0):
        raise ValueError("intensity must be positive")
    if lam < table.lambda_grid[0]:
        return 0.0
    return float(np.clip(np.interp(lam, table.lambda_grid, table.theta_hat), 0.0, 1.0))


def write_theta_table(table: ThetaTable, path) -> None:
    """Persist as commented-header CSV; floats use shortest round-trip form."""
    m = float(table.window_m)
    m_str = str(int(m)) if m.is_integer() else repr(m)
    lines = [
        f"# m={m_str} trials={table.trials} seed={table.master_seed} smoothed={table.smoothed}",
        "lambda,theta_hat,std_err",
    ]
    for lam, th, se in zip(table.lambda_grid, table.theta_hat, table.std_err):
        lines.append(f"{float(lam)!r},{float(th)!r},{float(se)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_theta_table(path) -> ThetaTable:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    header = None
    rows = []
    for ln in lines:
        if ln.startswith("#"):
            m = re.match(
                r"#\s*m=(\S+)\s+trials=(\d+)\s+seed=(\d+)\s+smoothed=(True|False)", ln
            )
            if m:
                header = m
        elif ln.lower().startswith("lambda"):
            continue
        else:
            rows.append([float(x) for x in ln.split(",")])
    if header is None:
        raise ValueError(f"{path}: missing '# m=... trials=... seed=... smoothed=...' header")
    arr = np.array(rows, float)
    return ThetaTable(
        lambda_grid=arr[:, 0],
        theta_hat=arr[:, 1],
        std_err=arr[:, 2],
        window_m=float(header.group(1)),
        trials=int(header.group(2)),
        master_seed=int(header.group(3)),
        smoothed=header.group(4) == "True",
    )


@dataclass
class DiagnosticRow:
    name: str
    predicted: float
    estimate: float
    std_err: float
    z_score: float
    applicable: bool = True


@dataclass
class DiagnosticsReport:
    domain: SimDomain
    forward_prob: float
    trials: int
    supercritical: bool
    rows: list

    def worst_z(self) -> float:
        zs = [abs(r.z_score) for r in self.rows if r.applicable]
        return max(zs) if zs else 0.0


def _diag_task(args):
    (domain, p, trial, master_seed) = args
    points = sample_ppp(domain, SeedSpec(master_seed, trial_id=trial, stream_id=0))
    graph = build_rgg(points)
    n_pts = graph.n_points
    marks = derive_stream(SeedSpec(master_seed, trial_id=trial, stream_id=1)).random(n_pts) < p
    marks[graph.source_index] = True
    lab = components(graph, active=marks)
    if lab.largest_id >= 0:
        giant = lab.label == lab.largest_id
        giant_frac = giant.sum() / n_pts
        ext_frac = extended_mask(graph, giant).sum() / n_pts
    else:
        giant_frac = 0.0
        ext_frac = 0.0
    area = domain.area
    return (n_pts / area, marks.sum() / area, giant_frac, ext_frac)


def ergodic_diagnostics(
    domain: SimDomain,
    p: float,
    trials: int,
    master_seed: int,
    table: ThetaTable | None = None,
    workers: int = 1,
) -> DiagnosticsReport:
    """Monte Carlo checks of the large-window density and cluster-fraction limits.

    Rows compare estimates against their predicted limits: point density vs
    lambda, mark-1 density vs lambda*p, thinned largest-cluster fraction vs
    p*theta(lambda*p), and extended-cluster fraction vs theta(lambda*p). The
    cluster rows need a theta table and a super-critical thinned intensity.
    """
    if trials < 2:
        raise ValueError("trials must be >= 2")
    lam = domain.intensity_lambda
    supercritical = lam * p > LAMBDA_C
    tasks = [(domain, p, t, master_seed) for t in range(trials)]
    data = np.array(map_indexed(_diag_task, tasks, workers), float)

    def row(name, pred, col, applicable=True):
        est = float(col.mean())
        se = float(col.std(ddof=1)) / math.sqrt(trials)
        z = (est - pred) / se if (applicable and se > 0) else 0.0
        return DiagnosticRow(name, pred, est, se, float(z), applicable)

    rows = [
        row("point_density", lam, data[:, 0]),
        row("marked_density", lam * p, data[:, 1]),
    ]
    cluster_ok = supercritical and table is not None
    th = theta_at(table, lam * p) if table is not None else float("nan")
    rows.append(row("thinned_giant_fraction", p * th if cluster_ok else float("nan"),
                    data[:, 2], applicable=cluster_ok))
    rows.append(row("extended_giant_fraction", th if cluster_ok else float("nan"),
                    data[:, 3], applicable=cluster_ok))
    return DiagnosticsReport(
        domain=domain,
        forward_prob=p,
        trials=trials,
        supercritical=supercritical,
        rows=rows,
    )
