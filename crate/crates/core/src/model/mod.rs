//! Typed factor-graph models, configuration-model sampling, exact partition
//! functions and the pair-alphabet tensor construction.

pub mod builders;
pub mod concentration;
pub mod gibbs;
pub mod graph;
pub mod spec;
pub mod tensor;
pub mod weight;

pub use builders::{ising, ising_cycle, ksat, ksat_uniform_profile, ksat_with_signs, potts};
pub use concentration::{concentration_probe, ConcentrationReport};
pub use gibbs::{
    gibbs, ln_weight, log_weights, partition_function_direct, partition_function_exact,
    partition_function_restricted, weight, PartitionFunction, DEFAULT_BUDGET,
};
pub use graph::{sample_graph, FactorGraph, GraphFile, Port};
pub use spec::{CloneType, Diagnostics, FactorNode, Issue, ModelSpec, VariableNode};
pub use tensor::{pair_assignment, tensor_graph};
pub use weight::WeightFunction;
