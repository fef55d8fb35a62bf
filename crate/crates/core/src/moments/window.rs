use serde::{Deserialize, Serialize};

use super::sequence::{GraphLocal, MarginalSequence};
use crate::error::{invalid, Error, Result};
use crate::model::gibbs::{for_each_assignment, LogSum, PartitionFunction};
use crate::model::FactorGraph;

/// Rounding slack added to `δ` when comparing total variation distances.
pub const WINDOW_SLACK: f64 = 1e-12;

/// `Σ(G,ℓ,q,δ)`: assignments whose empirical sequence is within `δ` of `q`
/// in total variation at every populated key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictionWindow {
    pub ell: usize,
    pub q: MarginalSequence,
    pub delta: f64,
}

impl RestrictionWindow {
    pub fn new(q: MarginalSequence, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return invalid(format!("window width {delta} must be nonnegative"));
        }
        Ok(Self { ell: q.depth, q, delta })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RestrictedPartition {
    /// `Z_{ℓ,q,δ}(G)`; zero when the window is empty.
    pub z: f64,
    pub log_z: f64,
    /// Number of assignments inside the window.
    pub accepted: u64,
}

/// Membership test for one graph against one window.
pub(crate) struct WindowTest<'a> {
    q: usize,
    delta: f64,
    var_class: Vec<usize>,
    var_targets: Vec<&'a [f64]>,
    var_sizes: Vec<f64>,
    fac_class: Vec<usize>,
    fac_vars: Vec<Vec<usize>>,
    fac_targets: Vec<&'a [f64]>,
    fac_sizes: Vec<f64>,
}

impl<'a> WindowTest<'a> {
    /// `None` when the graph has a key the window's sequence does not define.
    pub fn new(local: &GraphLocal, window: &'a RestrictionWindow) -> Option<Self> {
        if local.depth() != window.ell {
            return None;
        }
        let seq = &window.q;
        let mut index = std::collections::BTreeMap::new();
        let mut var_targets = Vec::new();
        let mut var_sizes = Vec::new();
        let mut var_class = Vec::with_capacity(local.var_keys().len());
        for k in local.var_keys() {
            let c = match index.get(k) {
                Some(&c) => c,
                None => {
                    var_targets.push(seq.variables.get(k)?.as_slice());
                    var_sizes.push(0.0);
                    index.insert(k.clone(), var_targets.len() - 1);
                    var_targets.len() - 1
                }
            };
            var_sizes[c] += 1.0;
            var_class.push(c);
        }
        let mut index = std::collections::BTreeMap::new();
        let mut fac_targets = Vec::new();
        let mut fac_sizes = Vec::new();
        let mut fac_class = Vec::with_capacity(local.factor_keys().len());
        let mut fac_vars = Vec::with_capacity(local.factor_keys().len());
        for (a, k) in local.factor_keys().iter().enumerate() {
            let c = match index.get(k) {
                Some(&c) => c,
                None => {
                    let t = seq.factors.get(k)?.as_slice();
                    if t.len() != seq.q.pow(local.factor_vars(a).len() as u32) {
                        return None;
                    }
                    fac_targets.push(t);
                    fac_sizes.push(0.0);
                    index.insert(k.clone(), fac_targets.len() - 1);
                    fac_targets.len() - 1
                }
            };
            fac_sizes[c] += 1.0;
            fac_class.push(c);
            fac_vars.push(local.factor_vars(a).to_vec());
        }
        Some(Self { q: seq.q, delta: window.delta, var_class, var_targets, var_sizes, fac_class, fac_vars, fac_targets, fac_sizes })
    }

    fn within(counts: &[f64], sizes: &[f64], targets: &[&[f64]], width: usize, delta: f64) -> bool {
        targets.iter().enumerate().all(|(c, t)| {
            let n = sizes[c];
            let tv = 0.5 * counts[c * width..(c + 1) * width].iter().zip(t.iter()).map(|(x, p)| (x / n - p).abs()).sum::<f64>();
            tv <= delta + WINDOW_SLACK
        })
    }

    pub fn contains(&self, sigma: &[usize], scratch: &mut (Vec<f64>, Vec<f64>)) -> bool {
        let q = self.q;
        let (vc, fc) = scratch;
        vc.clear();
        vc.resize(self.var_targets.len() * q, 0.0);
        for (x, &c) in self.var_class.iter().enumerate() {
            vc[c * q + sigma[x]] += 1.0;
        }
        if !Self::within(vc, &self.var_sizes, &self.var_targets, q, self.delta) {
            return false;
        }
        let width = self.fac_targets.first().map_or(0, |t| t.len());
        let uniform_width = self.fac_targets.iter().all(|t| t.len() == width);
        if uniform_width {
            fc.clear();
            fc.resize(self.fac_targets.len() * width, 0.0);
            for (a, &c) in self.fac_class.iter().enumerate() {
                let idx = self.fac_vars[a].iter().fold(0, |i, &x| i * q + sigma[x]);
                fc[c * width + idx] += 1.0;
            }
            return Self::within(fc, &self.fac_sizes, &self.fac_targets, width, self.delta);
        }
        // mixed arities: one class at a time
        (0..self.fac_targets.len()).all(|c| {
            let t = self.fac_targets[c];
            let mut counts = vec![0.0; t.len()];
            for (a, _) in self.fac_class.iter().enumerate().filter(|(_, &k)| k == c) {
                counts[self.fac_vars[a].iter().fold(0, |i, &x| i * q + sigma[x])] += 1.0;
            }
            Self::within(&counts, &self.fac_sizes[c..c + 1], &[t], t.len(), self.delta)
        })
    }
}

/// Sums `ψ_G(σ)` over the window; `None` when the graph has keys the
/// sequence does not define.
pub(crate) fn window_sum(g: &FactorGraph, local: &GraphLocal, window: &RestrictionWindow, budget: usize) -> Result<Option<RestrictedPartition>> {
    let Some(test) = WindowTest::new(local, window) else {
        return Ok(None);
    };
    let mut acc = LogSum::new();
    let mut direct = 0.0;
    let mut accepted = 0u64;
    let mut scratch = (Vec::new(), Vec::new());
    for_each_assignment(g, budget, |_, s, lw| {
        if test.contains(s, &mut scratch) {
            acc.add(lw);
            direct += lw.exp();
            accepted += 1;
        }
    })?;
    if accepted == 0 {
        return Ok(Some(RestrictedPartition { z: 0.0, log_z: f64::NEG_INFINITY, accepted }));
    }
    let pf = PartitionFunction::from_parts(direct, acc.value());
    Ok(Some(RestrictedPartition { z: pf.z, log_z: pf.log_z, accepted }))
}

/// `Z_{ℓ,q,δ}(G) = Σ_{σ ∈ Σ(G,ℓ,q,δ)} ψ_G(σ)` by exact enumeration.
pub fn restricted_partition(g: &FactorGraph, window: &RestrictionWindow, budget: usize) -> Result<RestrictedPartition> {
    let local = GraphLocal::new(g, window.ell);
    window_sum(g, &local, window, budget)?.ok_or_else(|| {
        Error::MissingKey("the window's sequence does not cover every populated key of the graph".into())
    })
}
