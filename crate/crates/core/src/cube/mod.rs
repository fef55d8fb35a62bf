//! Probability measures on `Ω^n`: marginals, regularity, homogeneous
//! decompositions, states and tensor squares.

pub mod decompose;
pub mod fixtures;
pub mod measure;
pub mod partition;
pub mod regularity;
pub mod states;

pub use decompose::{check_homogeneity, decompose, DecomposeConfig, Decomposition, HomogeneityReport};
pub use measure::{decode, empirical, encode, DenseMeasure, DENSE_CAP};
pub use partition::{mesh_states, CoordinatePartition, StatePartition};
pub use regularity::{index, is_regular_on, partition_regularity, refine_irregular, Strategy, Verdict, Witness};
pub use states::{extract_states, is_state, is_symmetric, marginal_shift, ExtractConfig, Extraction};
