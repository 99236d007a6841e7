"""Experiment configuration: one flat record, text round-trippable.

The on-disk form is `key = value` lines with `#` comments. Every output file
embeds the rendered config in its header so results carry their provenance.
"""

from dataclasses import dataclass, fields, replace

DEFAULT_SEED = 20240901


@dataclass
class ExperimentConfig:
    intensity_lambda: float = 4.5
    side_m: float = 101.0
    radius_r: float = 1.0
    k_decode: int = 20
    n_min: int = 20
    n_max: int = 40
    delta: float = 0.1
    forward_prob: float = 0.6
    graph_trials: int = 10
    fwd_trials: int = 20
    master_seed: int = DEFAULT_SEED
    method: str = "simulated"
    condition: str = "none"
    workers: int = 1
    theta_table: str = ""  # path; empty means generate a fast-preset table
    out: str = ""

    def __post_init__(self):
        if self.intensity_lambda <= 0 or self.side_m <= 0 or self.radius_r <= 0:
            raise ValueError("lambda, m and r must be positive")
        if not (1 <= self.k_decode <= self.n_min <= self.n_max):
            raise ValueError("need 1 <= k <= n_min <= n_max")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must be in (0, 1)")
        if not (0.0 <= self.forward_prob <= 1.0):
            raise ValueError("forward_prob must be in [0, 1]")
        if self.graph_trials < 1 or self.fwd_trials < 1 or self.workers < 1:
            raise ValueError("trial and worker counts must be >= 1")
        if self.method not in ("simulated", "mean_field"):
            raise ValueError("method must be 'simulated' or 'mean_field'")
        if self.condition not in ("none", "giant"):
            raise ValueError("condition must be 'none' or 'giant'")

    @property
    def n_values(self) -> range:
        return range(self.n_min, self.n_max + 1)


def render(config: ExperimentConfig) -> str:
    """Flat key = value text. Floats use shortest round-trip form (repr)."""
    lines = ["# experiment configuration"]
    for f in fields(config):
        v = getattr(config, f.name)
        lines.append(f"{f.name} = {v!r}" if isinstance(v, float) else f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def parse(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse the flat format; unknown keys are an error. parse(render(c)) == c."""
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    casts = {"float": float, "int": int, "str": str}
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in types:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        t = types[key]
        cast = casts[t] if isinstance(t, str) else t
        updates[key] = cast(value.strip())
    base = base if base is not None else ExperimentConfig()
    return replace(base, **updates)


def load(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    with open(path) as fh:
        return parse(fh.read(), base=base)
