use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::sequence::{graph_bethe, slot_keys, GraphLocal, MarginalSequence};
use crate::error::{invalid, Error, Result};
use crate::info;
use crate::local::CanonicalKey;
use crate::model::FactorGraph;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QValidCount {
    /// `ln Σ_{σ̂ q-valid} P[σ̂ is consistent with G′]`, `G′` uniform in
    /// `G(M(G,ℓ))`, by the counting formula `n B_{G,ℓ}(q̃) − Σ_T m_T ⟨ln ψ_T⟩`.
    pub log_ratio: f64,
    /// The same sum weighted by `ψ`: `n B_{G,ℓ}(q̃)`.
    pub log_weighted: f64,
    /// Slack of the counting formula, `√n`.
    pub band: f64,
    /// Largest `|q_T(ω) n_T − round(q_T(ω) n_T)|` over all entries.
    pub rounding_residual: f64,
    /// `q̃`: `q` rounded to integer counts.
    pub rounded: MarginalSequence,
}

/// Rounds every distribution of `table` to multiples of `1/size[k]`.
fn round_table(
    table: &BTreeMap<CanonicalKey, Vec<f64>>,
    sizes: &BTreeMap<CanonicalKey, usize>,
    residual: &mut f64,
) -> Result<(BTreeMap<CanonicalKey, Vec<u64>>, BTreeMap<CanonicalKey, Vec<f64>>)> {
    let mut counts = BTreeMap::new();
    let mut rounded = BTreeMap::new();
    for (k, p) in table {
        let n = sizes[k];
        let c: Vec<u64> = p
            .iter()
            .map(|&x| {
                let t = x * n as f64;
                *residual = residual.max((t - t.round()).abs());
                t.round().max(0.0) as u64
            })
            .collect();
        if c.iter().sum::<u64>() != n as u64 {
            return Err(Error::Infeasible(format!("counts for {k} do not round to {n}")));
        }
        rounded.insert(k.clone(), c.iter().map(|&x| x as f64 / n as f64).collect());
        counts.insert(k.clone(), c);
    }
    Ok((counts, rounded))
}

/// Counts `q`-valid clone assignments of the enhanced model `M(G,ℓ)`
/// relative to the number of graphs, after rounding `q` to the integer counts
/// a graph with `G`'s key multiplicities can realize. Fails with
/// [`Error::Infeasible`] when the rounded counts cannot balance.
pub fn count_q_valid_ratio(g: &FactorGraph, q: &MarginalSequence) -> Result<QValidCount> {
    let ell = q.depth;
    let local = GraphLocal::new(g, ell);
    if !local.hosts(q) {
        return invalid("the sequence is not a marginal sequence of this graph");
    }
    q.validate()?;
    let mut var_sizes: BTreeMap<CanonicalKey, usize> = BTreeMap::new();
    for k in local.var_keys() {
        *var_sizes.entry(k.clone()).or_default() += 1;
    }
    let mut fac_sizes: BTreeMap<CanonicalKey, usize> = BTreeMap::new();
    for k in local.factor_keys() {
        *fac_sizes.entry(k.clone()).or_default() += 1;
    }
    let mut residual = 0.0;
    let (var_counts, variables) = round_table(&q.variables, &var_sizes, &mut residual)?;
    let (fac_counts, factors) = round_table(&q.factors, &fac_sizes, &mut residual)?;

    // every variable clone of key T with value ω needs a factor clone partner
    let qs = q.q;
    let mut balance: BTreeMap<&CanonicalKey, Vec<i64>> = BTreeMap::new();
    for (k, e) in q.lambda.variable_entries() {
        let d = e.template.root().degree() as i64;
        balance.insert(k, var_counts[k].iter().map(|&c| d * c as i64).collect());
    }
    for (k, e) in q.lambda.factor_entries() {
        let slots = slot_keys(&e.template, ell)?;
        let h = slots.len();
        let c: Vec<f64> = fac_counts[k].iter().map(|&c| c as f64).collect();
        for (j, s) in slots.iter().enumerate() {
            let b = balance.get_mut(s).ok_or_else(|| Error::MissingKey(format!("slot key {s}")))?;
            for (w, m) in info::joint_marginal(&c, qs, h, j).into_iter().enumerate() {
                b[w] -= m.round() as i64;
            }
        }
    }
    if let Some((k, _)) = balance.iter().find(|(_, b)| b.iter().any(|&x| x != 0)) {
        return Err(Error::Infeasible(format!("rounded counts do not balance at {k}")));
    }

    let rounded = MarginalSequence::new(q.lambda.clone(), variables, factors)?;
    let n = g.n() as f64;
    let log_weighted = n * graph_bethe(&rounded)?;
    let mut energy = 0.0;
    for (k, e) in q.lambda.factor_entries() {
        let psi = e.template.weight_of(0).expect("factor-rooted template");
        energy += fac_sizes[k] as f64 * info::expect(rounded.factor(k)?, psi.ln_table())?;
    }
    Ok(QValidCount { log_ratio: log_weighted - energy, log_weighted, band: n.sqrt(), rounding_residual: residual, rounded })
}
