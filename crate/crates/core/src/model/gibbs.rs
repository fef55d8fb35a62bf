use serde::{Deserialize, Serialize};

use crate::cube::DenseMeasure;
use crate::error::{invalid, table_size, Error, Result};
use crate::model::graph::FactorGraph;

/// Default cap on the number of assignments enumerated (`2^20`).
pub const DEFAULT_BUDGET: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionFunction {
    /// `exp(log_z)`; infinite when it overflows.
    pub z: f64,
    pub log_z: f64,
}

/// Normal range in which the direct-domain sum is trusted.
const DIRECT_RANGE: (f64, f64) = (1e-300, 1e300);

impl PartitionFunction {
    /// Prefers the direct-domain sum when it is comfortably inside the
    /// floating range (exact for integer-valued sums such as `|Ω|^n`),
    /// otherwise falls back to the log-domain accumulator.
    pub(crate) fn from_parts(direct: f64, log_z: f64) -> Self {
        if direct.is_finite() && direct > DIRECT_RANGE.0 && direct < DIRECT_RANGE.1 {
            Self { z: direct, log_z: direct.ln() }
        } else {
            Self { z: log_z.exp(), log_z }
        }
    }
}

pub(crate) fn check_assignment(g: &FactorGraph, sigma: &[usize]) -> Result<()> {
    if sigma.len() != g.n() {
        return Err(Error::DimensionMismatch(sigma.len(), g.n()));
    }
    if let Some(s) = sigma.iter().find(|&&s| s >= g.q()) {
        return invalid(format!("symbol {s} out of range"));
    }
    Ok(())
}

/// `ln ψ_G(σ) = Σ_a ln ψ_a(σ(∂(a,1)), ..., σ(∂(a,d(a))))`.
pub fn ln_weight(g: &FactorGraph, sigma: &[usize]) -> Result<f64> {
    check_assignment(g, sigma)?;
    Ok(ln_weight_unchecked(g, sigma))
}

pub fn weight(g: &FactorGraph, sigma: &[usize]) -> Result<f64> {
    check_assignment(g, sigma)?;
    let mut w = 1.0;
    let mut args = Vec::with_capacity(g.model().max_degree());
    for a in 0..g.m() {
        args.clear();
        args.extend(g.factor_vars(a).map(|x| sigma[x]));
        w *= g.model().factor_weight(a).value(&args);
    }
    Ok(w)
}

pub(crate) fn ln_weight_unchecked(g: &FactorGraph, sigma: &[usize]) -> f64 {
    let q = g.q();
    let mut acc = 0.0;
    for a in 0..g.m() {
        let idx = g.factor_vars(a).fold(0, |i, x| i * q + sigma[x]);
        acc += g.model().factor_weight(a).ln_table()[idx];
    }
    acc
}

/// Calls `f(index, σ, ln ψ_G(σ))` for every assignment in lexicographic order.
pub fn for_each_assignment(
    g: &FactorGraph,
    budget: usize,
    mut f: impl FnMut(usize, &[usize], f64),
) -> Result<()> {
    let (q, n) = (g.q(), g.n());
    let size = table_size(q, n, budget, "assignment enumeration")?;
    let factors: Vec<(Vec<usize>, &[f64])> = (0..g.m())
        .map(|a| (g.factor_vars(a).collect(), g.model().factor_weight(a).ln_table()))
        .collect();
    let mut sigma = vec![0usize; n];
    for index in 0..size {
        let mut lw = 0.0;
        for (vars, table) in &factors {
            let i = vars.iter().fold(0, |i, &x| i * q + sigma[x]);
            lw += table[i];
        }
        f(index, &sigma, lw);
        for k in (0..n).rev() {
            sigma[k] += 1;
            if sigma[k] < q {
                break;
            }
            sigma[k] = 0;
        }
    }
    Ok(())
}

/// `ln ψ_G(σ)` for all `σ`, lexicographic.
pub fn log_weights(g: &FactorGraph, budget: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for_each_assignment(g, budget, |_, _, lw| out.push(lw))?;
    Ok(out)
}

/// Streaming log-sum-exp accumulator.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    pub fn new() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// `Z(G) = Σ_σ ψ_G(σ)`, accumulated in the log domain.
pub fn partition_function_exact(g: &FactorGraph, budget: usize) -> Result<PartitionFunction> {
    partition_function_restricted(g, budget, |_| true)
}

/// `Z` summed over the configurations accepted by `support` only. An empty
/// support is reported as infeasible.
pub fn partition_function_restricted(
    g: &FactorGraph,
    budget: usize,
    support: impl Fn(&[usize]) -> bool,
) -> Result<PartitionFunction> {
    let mut acc = LogSum::new();
    let mut direct = 0.0;
    for_each_assignment(g, budget, |_, s, lw| {
        if support(s) {
            acc.add(lw);
            direct += lw.exp();
        }
    })?;
    let log_z = acc.value();
    if log_z == f64::NEG_INFINITY {
        return Err(Error::Infeasible("support predicate accepts no configuration".into()));
    }
    Ok(PartitionFunction::from_parts(direct, log_z))
}

/// `Σ_σ Π_a ψ_a(σ)` in the direct domain, for cross-checking.
pub fn partition_function_direct(g: &FactorGraph, budget: usize) -> Result<f64> {
    let mut z = 0.0;
    for_each_assignment(g, budget, |_, s, _| {
        let mut w = 1.0;
        let mut args = Vec::new();
        for a in 0..g.m() {
            args.clear();
            args.extend(g.factor_vars(a).map(|x| s[x]));
            w *= g.model().factor_weight(a).value(&args);
        }
        z += w;
    })?;
    Ok(z)
}

/// `μ_G` as a dense measure.
pub fn gibbs(g: &FactorGraph, budget: usize) -> Result<DenseMeasure> {
    let lw = log_weights(g, budget)?;
    let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mass = lw.into_iter().map(|x| (x - max).exp()).collect();
    DenseMeasure::from_weights(g.model().alphabet().clone(), g.n(), mass)
}
