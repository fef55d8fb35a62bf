use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::sequence::{GraphLocal, MarginalSequence};
use crate::error::{Error, Result};
use crate::local::CanonicalKey;
use crate::model::graph::match_by_type;
use crate::model::{FactorGraph, ModelSpec};
use crate::rng;

/// Clone type of the enhanced model `M(G,ℓ)`: the depth-`ℓ` key of the
/// owning variable and the clone's position in that key's slot order. A
/// factor clone inherits the type of its partner in `G`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EnhancedType {
    pub key: CanonicalKey,
    pub position: usize,
}

impl fmt::Display for EnhancedType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.key, self.position)
    }
}

/// `M(G,ℓ)`: the model of `G` with clone types refined to [`EnhancedType`].
#[derive(Clone, Debug)]
pub struct EnhancedModel {
    pub ell: usize,
    model: Arc<ModelSpec>,
    pub var_types: Vec<Vec<EnhancedType>>,
    pub factor_types: Vec<Vec<EnhancedType>>,
}

impl EnhancedModel {
    pub fn new(g: &FactorGraph, ell: usize) -> Self {
        Self::from_local(g, &GraphLocal::new(g, ell))
    }

    pub fn from_local(g: &FactorGraph, local: &GraphLocal) -> Self {
        let var_types: Vec<Vec<EnhancedType>> = (0..g.n())
            .map(|x| {
                (0..g.var_ports(x).len())
                    .map(|i| EnhancedType { key: local.var_keys()[x].clone(), position: local.clone_position(x, i) })
                    .collect()
            })
            .collect();
        let factor_types = (0..g.m())
            .map(|a| g.factor_ports(a).iter().map(|&(x, i)| var_types[x][i].clone()).collect())
            .collect();
        Self { ell: local.depth(), model: g.model_arc().clone(), var_types, factor_types }
    }

    /// Number of clones of each enhanced type.
    pub fn class_sizes(&self) -> BTreeMap<&EnhancedType, usize> {
        let mut out = BTreeMap::new();
        for t in self.var_types.iter().flatten() {
            *out.entry(t).or_default() += 1;
        }
        out
    }

    /// Every type has a single clone, so `G(M(G,ℓ)) = {G}`.
    pub fn is_forced(&self) -> bool {
        self.class_sizes().values().all(|&c| c == 1)
    }

    /// `G′ ∈ G(M(G,ℓ))`.
    pub fn admits(&self, h: &FactorGraph) -> bool {
        h.n() == self.var_types.len()
            && (0..h.n()).all(|x| {
                h.var_ports(x)
                    .iter()
                    .enumerate()
                    .all(|(i, &(a, j))| self.factor_types.get(a).and_then(|f| f.get(j)) == Some(&self.var_types[x][i]))
            })
    }

    /// A uniform element of `G(M(G,ℓ))`; type `θ` is matched with the stream
    /// `resample/type=θ` of `seed`.
    pub fn sample(&self, seed: u64) -> Result<FactorGraph> {
        let ports = match_by_type(&self.var_types, &self.factor_types, |t| rng::stream(seed, &format!("resample/type={t}")))?;
        FactorGraph::from_var_ports(self.model.clone(), ports)
    }
}

#[derive(Clone, Debug)]
pub struct Resampled {
    pub graph: FactorGraph,
    /// The source graph is `100ℓ`-acyclic, so every `(2ℓ+4)`-acyclic draw
    /// is guaranteed to be locally equivalent to it.
    pub guaranteed: bool,
}

/// Draws `G′` uniformly from the enhanced model `M(G,ℓ)`. When `G` is not
/// `100ℓ`-acyclic the call fails unless `allow_short_cycles` is set, in
/// which case the result is flagged as not guaranteed.
pub fn resample_local_class(g: &FactorGraph, ell: usize, seed: u64, allow_short_cycles: bool) -> Result<Resampled> {
    let guaranteed = g.is_l_acyclic(100 * ell);
    if !guaranteed && !allow_short_cycles {
        return Err(Error::InvalidState(format!(
            "graph is not {}-acyclic; pass allow_short_cycles to resample without the local-equivalence guarantee",
            100 * ell
        )));
    }
    let graph = EnhancedModel::new(g, ell).sample(seed)?;
    Ok(Resampled { graph, guaranteed })
}

/// A value for every variable clone and every factor clone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloneAssignment {
    pub variables: Vec<Vec<usize>>,
    pub factors: Vec<Vec<usize>>,
}

impl CloneAssignment {
    /// The assignment induced by `σ` on `G`: each clone carries the value of
    /// its variable (factor clones through their partner).
    pub fn from_assignment(g: &FactorGraph, sigma: &[usize]) -> Result<Self> {
        crate::model::gibbs::check_assignment(g, sigma)?;
        let variables = (0..g.n()).map(|x| vec![sigma[x]; g.var_ports(x).len()]).collect();
        let factors = (0..g.m()).map(|a| g.factor_vars(a).map(|x| sigma[x]).collect()).collect();
        Ok(Self { variables, factors })
    }

    fn shape_matches(&self, em: &EnhancedModel) -> bool {
        self.variables.len() == em.var_types.len()
            && self.factors.len() == em.factor_types.len()
            && self.variables.iter().zip(&em.var_types).all(|(a, b)| a.len() == b.len())
            && self.factors.iter().zip(&em.factor_types).all(|(a, b)| a.len() == b.len())
    }

    /// Constant on the clones of every variable, and for every enhanced
    /// type and value as many variable clones as factor clones.
    pub fn is_valid(&self, em: &EnhancedModel) -> bool {
        if !self.shape_matches(em) || self.variables.iter().any(|v| v.windows(2).any(|w| w[0] != w[1])) {
            return false;
        }
        let mut balance: BTreeMap<(&EnhancedType, usize), i64> = BTreeMap::new();
        for (types, vals) in em.var_types.iter().zip(&self.variables) {
            for (t, &v) in types.iter().zip(vals) {
                *balance.entry((t, v)).or_default() += 1;
            }
        }
        for (types, vals) in em.factor_types.iter().zip(&self.factors) {
            for (t, &v) in types.iter().zip(vals) {
                *balance.entry((t, v)).or_default() -= 1;
            }
        }
        balance.values().all(|&c| c == 0)
    }

    /// Valid, with variable counts `q_T(ω) n_T` per variable key and factor
    /// pattern counts `q_T(ω_1..ω_d) m_T` per factor key (key slot order).
    pub fn is_q_valid(&self, local: &GraphLocal, em: &EnhancedModel, seq: &MarginalSequence) -> bool {
        if !self.is_valid(em) || seq.depth != local.depth() {
            return false;
        }
        let q = seq.q;
        let mut var_counts: BTreeMap<&CanonicalKey, (f64, Vec<f64>)> = BTreeMap::new();
        for (x, k) in local.var_keys().iter().enumerate() {
            let Some(&v) = self.variables[x].first() else { return false };
            let e = var_counts.entry(k).or_insert_with(|| (0.0, vec![0.0; q]));
            e.0 += 1.0;
            e.1[v] += 1.0;
        }
        let mut fac_counts: BTreeMap<&CanonicalKey, (f64, Vec<f64>)> = BTreeMap::new();
        for (a, k) in local.factor_keys().iter().enumerate() {
            let order = local.factor_slot_order(a);
            let idx = order.iter().fold(0, |i, &s| i * q + self.factors[a][s]);
            let e = fac_counts.entry(k).or_insert_with(|| (0.0, vec![0.0; q.pow(order.len() as u32)]));
            e.0 += 1.0;
            e.1[idx] += 1.0;
        }
        let matches = |counts: BTreeMap<&CanonicalKey, (f64, Vec<f64>)>, table: &BTreeMap<CanonicalKey, Vec<f64>>| {
            counts.into_iter().all(|(k, (n, c))| {
                table.get(k).is_some_and(|p| p.len() == c.len() && p.iter().zip(&c).all(|(p, c)| (p * n - c).abs() < 1e-9))
            })
        };
        matches(var_counts, &seq.variables) && matches(fac_counts, &seq.factors)
    }
}
