//! Rooted templates, canonical keys, empirical local distributions `λ_{G,ℓ}`
//! and limiting tree laws `θ_ℓ`.

mod distribution;
mod key;
mod limit;
mod template;

pub use distribution::{local_distribution, local_template, node_keys, DistributionMode, KeyEntry, LocalDistribution};
pub use key::{canonical_key, canonical_root_order, slot_symmetric, strict_key, CanonicalKey, KEY_VERSION};
pub use limit::{limit_tree, limit_tree_with, Family, LimitConfig};
pub use template::{neighborhood, Node, TNode, Template};
