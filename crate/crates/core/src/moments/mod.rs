//! Marginal sequences of a host graph, restricted partition functions, the
//! enhanced model `M(G,ℓ)`, first-moment estimates and planted sampling.

mod counting;
mod enhanced;
mod first_moment;
mod planted;
mod sequence;
mod window;

pub use counting::{count_q_valid_ratio, QValidCount};
pub use enhanced::{resample_local_class, CloneAssignment, EnhancedModel, EnhancedType, Resampled};
pub use first_moment::{conditional_first_moment, Estimate, EstimateMode};
pub use planted::{planted_samples, planted_within, PlantedConfig, PlantedDiagnostics, PlantedDraws, Proposal};
pub use sequence::{
    empirical_sequence, graph_bethe, is_judicious, slot_keys, GraphLocal, Judicious, MarginalSequence, MS3_TOLERANCE,
};
pub use window::{restricted_partition, RestrictedPartition, RestrictionWindow, WINDOW_SLACK};
