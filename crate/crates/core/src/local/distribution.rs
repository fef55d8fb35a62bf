use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::key::{canonical_key, canonical_root_order, CanonicalKey};
use super::template::{neighborhood, Node, Template};
use crate::error::{invalid, Result};
use crate::model::FactorGraph;

/// How the frequencies of a [`LocalDistribution`] were obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DistributionMode {
    /// Empirical neighborhood statistics of a graph with `n` variables and
    /// `m` factors.
    Empirical { n: usize, m: usize },
    /// Exact enumeration of the limiting tree law.
    Exact,
    /// Monte-Carlo estimate of the limiting tree law.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyEntry {
    pub prob: f64,
    /// A representative with its root clones in key order.
    pub template: Template,
    pub variable_rooted: bool,
    pub tree: bool,
}

/// Frequencies of depth-`ℓ` variable neighborhoods and depth-`ℓ+1` factor
/// neighborhoods; all frequencies together sum to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalDistribution {
    pub depth: usize,
    pub mode: DistributionMode,
    pub entries: BTreeMap<CanonicalKey, KeyEntry>,
}

impl LocalDistribution {
    pub(crate) fn from_counts(depth: usize, mode: DistributionMode, counts: BTreeMap<CanonicalKey, (f64, Template)>) -> Self {
        let total: f64 = counts.values().map(|c| c.0).sum();
        let entries = counts
            .into_iter()
            .map(|(k, (w, t))| {
                let entry = KeyEntry {
                    prob: w / total,
                    variable_rooted: t.root_is_variable(),
                    tree: t.is_tree(),
                    template: canonical_root_order(&t).0,
                };
                (k, entry)
            })
            .collect();
        Self { depth, mode, entries }
    }

    pub fn prob(&self, key: &CanonicalKey) -> f64 {
        self.entries.get(key).map_or(0.0, |e| e.prob)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn variable_entries(&self) -> impl Iterator<Item = (&CanonicalKey, &KeyEntry)> {
        self.entries.iter().filter(|(_, e)| e.variable_rooted)
    }

    pub fn factor_entries(&self) -> impl Iterator<Item = (&CanonicalKey, &KeyEntry)> {
        self.entries.iter().filter(|(_, e)| !e.variable_rooted)
    }

    /// `P[V]`, the total mass of variable-rooted keys.
    pub fn variable_mass(&self) -> f64 {
        self.variable_entries().map(|(_, e)| e.prob).sum()
    }

    pub fn factor_mass(&self) -> f64 {
        self.factor_entries().map(|(_, e)| e.prob).sum()
    }

    pub fn all_trees(&self) -> bool {
        self.entries.values().all(|e| e.tree)
    }

    /// Errors unless every key in the support is a tree.
    pub fn require_trees(&self) -> Result<()> {
        match self.entries.values().find(|e| !e.tree) {
            None => Ok(()),
            Some(e) => invalid(format!(
                "non-tree neighborhood with {} nodes in the support",
                e.template.len()
            )),
        }
    }

    /// The image under `T ↦ ∂^depth T` (factor roots at `depth + 1`).
    pub fn truncate(&self, depth: usize) -> Result<LocalDistribution> {
        if depth > self.depth {
            return invalid(format!("cannot extend depth {} to {depth}", self.depth));
        }
        let mut counts: BTreeMap<CanonicalKey, (f64, Template)> = BTreeMap::new();
        for e in self.entries.values() {
            let d = if e.variable_rooted { depth } else { depth + 1 };
            let t = e.template.truncate(d);
            counts.entry(canonical_key(&t)).or_insert((0.0, t)).0 += e.prob;
        }
        Ok(Self::from_counts(depth, self.mode.clone(), counts))
    }

    /// Total variation distance `½ Σ |λ(k) − θ(k)|`.
    pub fn tv_to(&self, other: &LocalDistribution) -> Result<f64> {
        if self.depth != other.depth {
            return invalid(format!("depth {} vs {}", self.depth, other.depth));
        }
        let mut sum = 0.0;
        for (k, e) in &self.entries {
            sum += (e.prob - other.prob(k)).abs();
        }
        for (k, e) in &other.entries {
            if !self.entries.contains_key(k) {
                sum += e.prob;
            }
        }
        Ok(0.5 * sum)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(s)?;
        let total: f64 = d.entries.values().map(|e| e.prob).sum();
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("frequencies sum to {total}"));
        }
        Ok(d)
    }
}

/// Neighborhood of node `v` at the depth it contributes to `λ_{G,ℓ}`.
pub fn local_template(g: &FactorGraph, v: Node, depth: usize) -> Template {
    match v {
        Node::Variable(_) => neighborhood(g, v, depth),
        Node::Factor(_) => neighborhood(g, v, depth + 1),
    }
}

/// Keys of `∂^ℓ[G,x]` for every variable and `∂^{ℓ+1}[G,a]` for every factor.
pub fn node_keys(g: &FactorGraph, depth: usize) -> (Vec<CanonicalKey>, Vec<CanonicalKey>) {
    let vars = (0..g.n())
        .into_par_iter()
        .map(|x| canonical_key(&local_template(g, Node::Variable(x), depth)))
        .collect();
    let facs = (0..g.m())
        .into_par_iter()
        .map(|a| canonical_key(&local_template(g, Node::Factor(a), depth)))
        .collect();
    (vars, facs)
}

/// The empirical local distribution `λ_{G,ℓ}`.
pub fn local_distribution(g: &FactorGraph, depth: usize) -> LocalDistribution {
    let nodes: Vec<Node> = (0..g.n()).map(Node::Variable).chain((0..g.m()).map(Node::Factor)).collect();
    let keyed: Vec<(CanonicalKey, Node)> = nodes
        .into_par_iter()
        .map(|v| (canonical_key(&local_template(g, v, depth)), v))
        .collect();
    let mut counts: BTreeMap<CanonicalKey, (f64, Node)> = BTreeMap::new();
    for (k, v) in keyed {
        counts.entry(k).or_insert((0.0, v)).0 += 1.0;
    }
    let counts = counts
        .into_iter()
        .map(|(k, (c, v))| (k, (c, local_template(g, v, depth))))
        .collect();
    LocalDistribution::from_counts(depth, DistributionMode::Empirical { n: g.n(), m: g.m() }, counts)
}
