//! Marginal assignments, the constrained maximum-entropy problem, exact tree
//! marginals, the Bethe free energy, and Gibbs-uniqueness and
//! non-reconstruction diagnostics.

mod assignment;
mod maxent;
mod nonreconstruction;
mod tree;
mod uniqueness;

pub use assignment::{bethe_free_energy, build_marginal_assignment, extension_stability, family_marginal_assignment, FactorMarginal, MarginalAssignment, Provenance};
pub use maxent::{kkt_residual, marginal_residual, max_entropy_joint, objective, IPF_MAX_SWEEPS, IPF_TOLERANCE};
pub use nonreconstruction::nonreconstruction_estimate;
pub use tree::{boundary_distance, boundary_nodes, tree_root_marginal, BoundaryCondition};
pub use uniqueness::{gibbs_uniqueness_check, SearchMode, UniquenessReport, Verdict, DEFAULT_BOUNDARY_CAP};
