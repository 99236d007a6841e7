"""Poisson point process sampling on a square window with a pinned source.

The window is the square [-m/2, m/2]^2. A realization consists of a Poisson
number of i.i.d.-uniform points plus one extra point pinned at the origin,
which acts as the broadcast source. All randomness is addressed by a
(master_seed, trial_id, stream_id) triple so that any trial or packet stream
can be replayed independently of scheduling.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

GEOMETRY_STREAM = 0


@dataclass(frozen=True)
class SimDomain:
    """Square simulation window with point intensity and connection radius."""

    side_m: float
    intensity_lambda: float
    radius_r: float = 1.0

    def __post_init__(self):
        for name in ("side_m", "intensity_lambda", "radius_r"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a finite positive number, got {v!r}")
        if self.side_m < 2 * self.radius_r:
            raise ValueError(
                f"window side {self.side_m} must be at least twice the radius {self.radius_r}"
            )

    @property
    def area(self) -> float:
        return self.side_m * self.side_m

    @property
    def expected_points(self) -> float:
        return self.intensity_lambda * self.area


@dataclass(frozen=True)
class SeedSpec:
    """Addressable random stream: stream 0 is geometry, streams >= 1 are packet marks."""

    master_seed: int
    trial_id: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.master_seed < 2**64):
            raise ValueError("master_seed must fit in 64 bits")
        if self.trial_id < 0 or self.stream_id < 0:
            raise ValueError("trial_id and stream_id must be nonnegative")

    def with_stream(self, stream_id: int) -> "SeedSpec":
        return replace(self, stream_id=stream_id)

    def with_trial(self, trial_id: int) -> "SeedSpec":
        return replace(self, trial_id=trial_id)


def derive_stream(seed: SeedSpec) -> np.random.Generator:
    """Independent, replayable generator keyed by the full seed triple.

    Uses counter-style derivation (SeedSequence spawn keys) so generators for
    distinct triples are statistically independent regardless of the order in
    which they are created or consumed.
    """
    ss = np.random.SeedSequence(
        entropy=seed.master_seed, spawn_key=(seed.trial_id, seed.stream_id)
    )
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class PointSet:
    """Sampled points in the window; coords[source_index] is exactly (0, 0)."""

    domain: SimDomain
    coords: np.ndarray
    source_index: int

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    def __len__(self) -> int:
        return self.n_points


def sample_ppp(domain: SimDomain, seed: SeedSpec) -> PointSet:
    """Draw N ~ Poisson(lambda * m^2) uniform points and append the source.

    The count and the positions are a pure function of the seed triple;
    stream_id must be the geometry stream (0).
    """
    if seed.stream_id != GEOMETRY_STREAM:
        raise ValueError(f"geometry sampling requires stream_id={GEOMETRY_STREAM}")
    rng = derive_stream(seed)
    n = int(rng.poisson(domain.expected_points))
    half = domain.side_m / 2.0
    pts = rng.uniform(-half, half, size=(n, 2))
    coords = np.vstack([pts, np.zeros((1, 2))])
    coords.setflags(write=False)
    return PointSet(domain=domain, coords=coords, source_index=n)
