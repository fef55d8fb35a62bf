use std::sync::Arc;

use rand::seq::SliceRandom;

use crate::alphabet::Alphabet;
use crate::error::{invalid, Result};
use crate::model::graph::FactorGraph;
use crate::model::spec::{CloneType, FactorNode, ModelSpec, VariableNode};
use crate::model::weight::WeightFunction;
use crate::rng;

/// Seed of the fixed clause-sign layout used by [`ksat`].
pub const KSAT_LAYOUT_SEED: u64 = 0x6b73_6174;

fn pairwise(n: usize, d: usize, alphabet: Alphabet, w: WeightFunction) -> Result<ModelSpec> {
    if n == 0 || d == 0 {
        return invalid("need n >= 1 and d >= 1");
    }
    if (d * n) % 2 != 0 {
        return invalid(format!("d*n must be even, got d={d}, n={n}"));
    }
    let variables = (0..n).map(|x| VariableNode { id: format!("x{x}"), clone_types: vec![0; d] }).collect();
    let factors = (0..d * n / 2).map(|a| FactorNode { id: format!("a{a}"), weight: 0, clone_types: vec![0; 2] }).collect();
    ModelSpec::new(alphabet, d.max(2), vec![w], variables, factors)
}

/// `ψ(σ₁,σ₂) = exp(βσ₁σ₂)` over `{-1,+1}`.
pub fn ising_weight(beta: f64) -> Result<WeightFunction> {
    let (p, m) = (beta.exp(), (-beta).exp());
    WeightFunction::new(format!("ising(beta={beta})"), 2, 2, vec![p, m, m, p])
}

/// `ψ(σ₁,σ₂) = exp(-β·1{σ₁ = σ₂})` over `[k]`.
pub fn potts_weight(k: usize, beta: f64) -> Result<WeightFunction> {
    let mut table = vec![1.0; k * k];
    for c in 0..k {
        table[c * k + c] = (-beta).exp();
    }
    WeightFunction::new(format!("potts(k={k},beta={beta})"), k, 2, table)
}

/// `ψ_s(σ) = exp(-β·1{σ = -s})` over `{-1,+1}^k`; index 1 is `+1`.
pub fn ksat_weight(signs: &[CloneType], beta: f64) -> Result<WeightFunction> {
    let k = signs.len();
    if k == 0 || signs.iter().any(|s| s.abs() != 1) {
        return invalid("sign pattern must be a nonempty sequence of +-1");
    }
    let violating = signs.iter().fold(0, |i, &s| i * 2 + usize::from(s < 0));
    let mut table = vec![1.0; 1 << k];
    table[violating] = (-beta).exp();
    let pattern: String = signs.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect();
    WeightFunction::new(format!("ksat(beta={beta},s={pattern})"), 2, k, table)
}

/// Ising model on the random `d`-regular configuration graph, `Θ = {0}`.
pub fn ising(n: usize, d: usize, beta: f64) -> Result<ModelSpec> {
    pairwise(n, d, Alphabet::spins(), ising_weight(beta)?)
}

/// Potts antiferromagnet with `k` colors.
pub fn potts(n: usize, d: usize, k: usize, beta: f64) -> Result<ModelSpec> {
    if k < 2 {
        return invalid("potts needs k >= 2");
    }
    pairwise(n, d, Alphabet::numbered(k), potts_weight(k, beta)?)
}

/// `(d(x,+1), d(x,-1)) = (⌈d₀/2⌉, ⌊d₀/2⌋)` for every variable: `d₀` is the
/// total degree.
pub fn ksat_uniform_profile(n: usize, d0: usize) -> Vec<(usize, usize)> {
    vec![(d0.div_ceil(2), d0 / 2); n]
}

/// k-SAT where variable `x` occurs `profile[x].0` times positively and
/// `profile[x].1` times negatively. Literal signs are spread over clause slots
/// by a fixed seeded shuffle, so the model is a deterministic function of its
/// arguments. Use [`ksat_with_signs`] to choose the clause patterns.
pub fn ksat(n: usize, k: usize, beta: f64, profile: &[(usize, usize)]) -> Result<ModelSpec> {
    if profile.len() != n {
        return invalid(format!("profile has {} entries for n={n}", profile.len()));
    }
    let total: usize = profile.iter().map(|(p, m)| p + m).sum();
    if k == 0 || total % k != 0 {
        return invalid(format!("sum of degrees {total} must be divisible by k={k}"));
    }
    let pos: usize = profile.iter().map(|p| p.0).sum();
    let mut signs: Vec<CloneType> = std::iter::repeat_n(1, pos).chain(std::iter::repeat_n(-1, total - pos)).collect();
    signs.shuffle(&mut rng::stream(KSAT_LAYOUT_SEED, "ksat/signs"));
    let clauses: Vec<Vec<CloneType>> = signs.chunks(k).map(<[CloneType]>::to_vec).collect();
    ksat_with_signs(k, beta, profile, &clauses)
}

pub fn ksat_with_signs(k: usize, beta: f64, profile: &[(usize, usize)], clauses: &[Vec<CloneType>]) -> Result<ModelSpec> {
    if let Some(c) = clauses.iter().find(|c| c.len() != k) {
        return invalid(format!("clause of length {} for k={k}", c.len()));
    }
    let variables: Vec<VariableNode> = profile
        .iter()
        .enumerate()
        .map(|(x, &(p, m))| VariableNode {
            id: format!("x{x}"),
            clone_types: std::iter::repeat_n(1, p).chain(std::iter::repeat_n(-1, m)).collect(),
        })
        .collect();
    let mut weights: Vec<WeightFunction> = Vec::new();
    let mut factors = Vec::with_capacity(clauses.len());
    for (a, signs) in clauses.iter().enumerate() {
        let w = ksat_weight(signs, beta)?;
        let idx = match weights.iter().position(|v| v.id() == w.id()) {
            Some(i) => i,
            None => {
                weights.push(w);
                weights.len() - 1
            }
        };
        factors.push(FactorNode { id: format!("c{a}"), weight: idx, clone_types: signs.clone() });
    }
    let max_deg = variables.iter().map(|v| v.clone_types.len()).max().unwrap_or(0).max(k);
    ModelSpec::new(Alphabet::spins(), max_deg, weights, variables, factors)
}

/// The Ising cycle `x_0 - a_0 - x_1 - ... - x_{n-1} - a_{n-1} - x_0`: clone 1 of
/// `x_i` is slot 0 of `a_i`, clone 0 of `x_{i+1}` is slot 1 of `a_i`.
pub fn ising_cycle(n: usize, beta: f64) -> Result<FactorGraph> {
    let model = Arc::new(ising(n, 2, beta)?);
    let ports = (0..n).map(|x| vec![((x + n - 1) % n, 1), (x, 0)]).collect();
    FactorGraph::from_var_ports(model, ports)
}
