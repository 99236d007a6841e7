"""Monte Carlo study of probabilistic forwarding of coded packets on RGGs."""

from .analysis import (
    CoverageEstimates,
    SweepRow,
    ThresholdSearch,
    UnreachableTarget,
    binomial_tail,
    coverage_lower_bounds,
    estimate_extended_coverage,
    estimate_total_transmissions,
    mean_field_min_prob,
    min_forward_prob_simulated,
    successful_fraction_from_coverage,
    sweep,
)
from .config import ExperimentConfig
from .forwarding import (
    CrnProfile,
    Estimate,
    ForwardingParams,
    ForwardingResult,
    PacketOutcome,
    crn_profile,
    forward_n_packets,
    forward_one_packet,
    packet_masks_from_marks,
    packet_thresholds,
    success_fraction,
    two_level_estimate,
)
from .percolation import (
    LAMBDA_C,
    DiagnosticsReport,
    ThetaTable,
    ergodic_diagnostics,
    estimate_theta_curve,
    isotonic_nondecreasing,
    read_theta_table,
    theta_at,
    write_theta_table,
)
from .pointproc import PointSet, SeedSpec, SimDomain, derive_stream, sample_ppp
from .rgg import (
    ClusterLabeling,
    Rgg,
    build_rgg,
    components,
    extended_cluster,
    extended_mask,
    largest_component_fraction,
)

__version__ = "0.1.0"

__all__ = [
    "CoverageEstimates", "SweepRow", "ThresholdSearch", "UnreachableTarget",
    "binomial_tail", "coverage_lower_bounds", "estimate_extended_coverage",
    "estimate_total_transmissions", "mean_field_min_prob",
    "min_forward_prob_simulated", "successful_fraction_from_coverage", "sweep",
    "ExperimentConfig",
    "CrnProfile", "Estimate", "ForwardingParams", "ForwardingResult",
    "PacketOutcome", "crn_profile", "forward_n_packets", "forward_one_packet",
    "packet_masks_from_marks", "packet_thresholds", "success_fraction",
    "two_level_estimate",
    "LAMBDA_C", "DiagnosticsReport", "ThetaTable", "ergodic_diagnostics",
    "estimate_theta_curve", "isotonic_nondecreasing", "read_theta_table",
    "theta_at", "write_theta_table",
    "PointSet", "SeedSpec", "SimDomain", "derive_stream", "sample_ppp",
    "ClusterLabeling", "Rgg", "build_rgg", "components", "extended_cluster",
    "extended_mask", "largest_component_fraction",
]
