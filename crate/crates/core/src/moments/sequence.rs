use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bethe::MarginalAssignment;
use crate::error::{invalid, Error, Result};
use crate::info;
use crate::local::{
    canonical_key, canonical_root_order, neighborhood, CanonicalKey, DistributionMode, LocalDistribution, Node, Template,
};
use crate::model::FactorGraph;

/// Per-node local structure of a host graph at depth `ℓ`: keys, canonical
/// slot orders and `λ_{G,ℓ}`.
#[derive(Clone, Debug)]
pub struct GraphLocal {
    depth: usize,
    q: usize,
    var_keys: Vec<CanonicalKey>,
    factor_keys: Vec<CanonicalKey>,
    /// Key slot order of each factor: key slot `i` is raw slot `perm[i]`.
    factor_perms: Vec<Vec<usize>>,
    /// Variables of each factor in the slot order of its key.
    factor_vars: Vec<Vec<usize>>,
    /// Position of each variable clone in the slot order of its key.
    clone_positions: Vec<Vec<usize>>,
    lambda: LocalDistribution,
}

/// `pos[perm[i]] = i`.
fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        pos[p] = i;
    }
    pos
}

impl GraphLocal {
    pub fn new(g: &FactorGraph, depth: usize) -> Self {
        let vars: Vec<(CanonicalKey, Vec<usize>, Template)> = (0..g.n())
            .into_par_iter()
            .map(|x| {
                let t = neighborhood(g, Node::Variable(x), depth);
                let (_, perm) = canonical_root_order(&t);
                (canonical_key(&t), inverse(&perm), t)
            })
            .collect();
        let facs: Vec<(CanonicalKey, Vec<usize>, Template)> = (0..g.m())
            .into_par_iter()
            .map(|a| {
                let t = neighborhood(g, Node::Factor(a), depth + 1);
                let (_, perm) = canonical_root_order(&t);
                (canonical_key(&t), perm, t)
            })
            .collect();
        let mut counts: BTreeMap<CanonicalKey, (f64, Template)> = BTreeMap::new();
        for (k, _, t) in vars.iter().chain(&facs) {
            counts.entry(k.clone()).or_insert_with(|| (0.0, t.clone())).0 += 1.0;
        }
        let lambda = LocalDistribution::from_counts(depth, DistributionMode::Empirical { n: g.n(), m: g.m() }, counts);
        let (var_keys, clone_positions) = vars.into_iter().map(|(k, p, _)| (k, p)).unzip();
        let (factor_keys, factor_perms): (Vec<_>, Vec<Vec<usize>>) = facs.into_iter().map(|(k, p, _)| (k, p)).unzip();
        let factor_vars = factor_perms
            .iter()
            .enumerate()
            .map(|(a, perm)| perm.iter().map(|&s| g.factor_port(a, s).0).collect())
            .collect();
        Self { depth, q: g.q(), var_keys, factor_keys, factor_perms, factor_vars, clone_positions, lambda }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn var_keys(&self) -> &[CanonicalKey] {
        &self.var_keys
    }

    pub fn factor_keys(&self) -> &[CanonicalKey] {
        &self.factor_keys
    }

    /// Variables of factor `a` in key slot order.
    pub fn factor_vars(&self, a: usize) -> &[usize] {
        &self.factor_vars[a]
    }

    /// Raw slot of factor `a` at key slot `i` is `factor_slot_order(a)[i]`.
    pub fn factor_slot_order(&self, a: usize) -> &[usize] {
        &self.factor_perms[a]
    }

    /// Key-order position of clone `i` of variable `x`.
    pub fn clone_position(&self, x: usize, i: usize) -> usize {
        self.clone_positions[x][i]
    }

    pub fn lambda(&self) -> &LocalDistribution {
        &self.lambda
    }

    /// Per-node keys agree, i.e. `G ≅_ℓ G′`.
    pub fn same_keys(&self, other: &GraphLocal) -> bool {
        self.depth == other.depth && self.var_keys == other.var_keys && self.factor_keys == other.factor_keys
    }

    /// `G ≅_ℓ h`, computing the keys of `h` one node at a time and stopping
    /// at the first disagreement.
    pub fn matches(&self, h: &FactorGraph) -> bool {
        h.n() == self.var_keys.len()
            && h.m() == self.factor_keys.len()
            && (0..h.m()).all(|a| canonical_key(&neighborhood(h, Node::Factor(a), self.depth + 1)) == self.factor_keys[a])
            && (0..h.n()).all(|x| canonical_key(&neighborhood(h, Node::Variable(x), self.depth)) == self.var_keys[x])
    }

    /// `q` was built on a graph with the same `λ_{G,ℓ}`.
    pub fn hosts(&self, q: &MarginalSequence) -> bool {
        let (a, b) = (&self.lambda.entries, &q.lambda.entries);
        q.depth == self.depth
            && a.len() == b.len()
            && a.iter().zip(b).all(|((k1, e1), (k2, e2))| k1 == k2 && (e1.prob - e2.prob).abs() < 1e-12)
    }

    /// `q_{G,σ,ℓ}` from precomputed structure.
    pub fn empirical(&self, sigma: &[usize]) -> Result<MarginalSequence> {
        let q = self.q;
        if sigma.len() != self.var_keys.len() {
            return Err(Error::DimensionMismatch(sigma.len(), self.var_keys.len()));
        }
        if sigma.iter().any(|&s| s >= q) {
            return invalid("symbol out of range");
        }
        let mut variables: BTreeMap<CanonicalKey, Vec<f64>> = BTreeMap::new();
        let mut var_n: BTreeMap<&CanonicalKey, f64> = BTreeMap::new();
        for (x, k) in self.var_keys.iter().enumerate() {
            variables.entry(k.clone()).or_insert_with(|| vec![0.0; q])[sigma[x]] += 1.0;
            *var_n.entry(k).or_default() += 1.0;
        }
        let mut factors: BTreeMap<CanonicalKey, Vec<f64>> = BTreeMap::new();
        let mut fac_n: BTreeMap<&CanonicalKey, f64> = BTreeMap::new();
        for (a, k) in self.factor_keys.iter().enumerate() {
            let vars = &self.factor_vars[a];
            let idx = vars.iter().fold(0, |i, &x| i * q + sigma[x]);
            factors.entry(k.clone()).or_insert_with(|| vec![0.0; q.pow(vars.len() as u32)])[idx] += 1.0;
            *fac_n.entry(k).or_default() += 1.0;
        }
        for (k, v) in variables.iter_mut() {
            let c = var_n[k];
            v.iter_mut().for_each(|x| *x /= c);
        }
        for (k, v) in factors.iter_mut() {
            let c = fac_n[k];
            v.iter_mut().for_each(|x| *x /= c);
        }
        Ok(MarginalSequence { depth: self.depth, q, variables, factors, lambda: self.lambda.clone() })
    }
}

/// A `(G,ℓ)`-marginal sequence: a distribution on `Ω` for every populated
/// variable key and on `Ω^{d_T}` (key slot order) for every populated factor
/// key, together with the host graph's `λ_{G,ℓ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalSequence {
    pub depth: usize,
    pub q: usize,
    pub variables: BTreeMap<CanonicalKey, Vec<f64>>,
    pub factors: BTreeMap<CanonicalKey, Vec<f64>>,
    pub lambda: LocalDistribution,
}

/// Tolerance for the balance condition between factor slot marginals and
/// variable marginals.
pub const MS3_TOLERANCE: f64 = 1e-8;

impl MarginalSequence {
    /// Checks the domains: exactly the populated keys, with distributions of
    /// the right length.
    pub fn new(
        lambda: LocalDistribution,
        variables: BTreeMap<CanonicalKey, Vec<f64>>,
        factors: BTreeMap<CanonicalKey, Vec<f64>>,
    ) -> Result<Self> {
        let q = lambda
            .entries
            .values()
            .next()
            .map(|e| e.template.q())
            .ok_or_else(|| Error::InvalidArgument("empty local distribution".into()))?;
        let s = Self { depth: lambda.depth, q, variables, factors, lambda };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, e) in &self.lambda.entries {
            let (table, len) = if e.variable_rooted {
                (&self.variables, self.q)
            } else {
                (&self.factors, self.q.pow(e.template.root().degree() as u32))
            };
            let d = table.get(k).ok_or_else(|| Error::MissingKey(format!("sequence has no entry for {k}")))?;
            if d.len() != len || !info::is_distribution(d, 1e-9) {
                return invalid(format!("entry for {k} is not a distribution on {len} points"));
            }
        }
        let extra = self.variables.keys().chain(self.factors.keys()).find(|k| !self.lambda.entries.contains_key(*k));
        if let Some(k) = extra {
            return invalid(format!("key {k} is not populated in the host graph"));
        }
        Ok(())
    }

    /// Restriction of a marginal assignment to the populated keys. Non-tree
    /// variable keys get the uniform distribution and non-tree factor keys
    /// the product of their slot marginals.
    pub fn from_assignment(lambda: &LocalDistribution, p: &MarginalAssignment) -> Result<Self> {
        if p.depth != lambda.depth {
            return invalid(format!("assignment depth {} vs host depth {}", p.depth, lambda.depth));
        }
        let mut variables = BTreeMap::new();
        let mut factors = BTreeMap::new();
        for (k, e) in &lambda.entries {
            if e.variable_rooted {
                let v = if e.tree { p.variable(k)?.to_vec() } else { info::uniform(p.q) };
                variables.insert(k.clone(), v);
            } else if e.tree {
                factors.insert(k.clone(), p.factor(k)?.joint.clone());
            } else {
                let slots = slot_keys(&e.template, lambda.depth)?;
                let ms = slots
                    .iter()
                    .map(|s| if s.is_tree() { p.variable(s).map(<[f64]>::to_vec) } else { Ok(info::uniform(p.q)) })
                    .collect::<Result<Vec<_>>>()?;
                let refs: Vec<&[f64]> = ms.iter().map(Vec::as_slice).collect();
                factors.insert(k.clone(), info::product(&refs));
            }
        }
        Self::new(lambda.clone(), variables, factors)
    }

    pub fn variable(&self, key: &CanonicalKey) -> Result<&[f64]> {
        self.variables
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingKey(format!("variable key {key}")))
    }

    pub fn factor(&self, key: &CanonicalKey) -> Result<&[f64]> {
        self.factors
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingKey(format!("factor key {key}")))
    }

    /// Number of variables and factors of the host graph.
    pub fn host_size(&self) -> Result<(usize, usize)> {
        match self.lambda.mode {
            DistributionMode::Empirical { n, m } => Ok((n, m)),
            _ => Err(Error::InvalidState("marginal sequences need an empirical host distribution".into())),
        }
    }

    /// Largest coordinate of
    /// `Σ_{T′,j} λ(T′) 1{∂^ℓ[T′↑j] = T} (q_{T′↓j} − q_T)` over variable keys `T`.
    pub fn ms3_residual(&self) -> Result<f64> {
        let q = self.q;
        let mut acc: BTreeMap<&CanonicalKey, Vec<f64>> = BTreeMap::new();
        for (k, e) in self.lambda.factor_entries() {
            let joint = self.factor(k)?;
            let slots = slot_keys(&e.template, self.depth)?;
            let h = slots.len();
            for (j, s) in slots.iter().enumerate() {
                let own = self.variable(s)?;
                let m = info::joint_marginal(joint, q, h, j);
                let (key, _) = self.variables.get_key_value(s).expect("checked above");
                let slot = acc.entry(key).or_insert_with(|| vec![0.0; q]);
                for w in 0..q {
                    slot[w] += e.prob * (m[w] - own[w]);
                }
            }
        }
        Ok(acc.values().flatten().fold(0.0, |a, &b| a.max(b.abs())))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let out: Self = serde_json::from_str(s)?;
        out.validate()?;
        Ok(out)
    }
}

/// `∂^ℓ[T↑j]` for every root slot of a factor-rooted template.
pub fn slot_keys(t: &Template, depth: usize) -> Result<Vec<CanonicalKey>> {
    (0..t.root().degree())
        .map(|j| Ok(canonical_key(&t.reroot(j)?.0.truncate(depth))))
        .collect()
}

/// `q_{G,σ,ℓ}`.
pub fn empirical_sequence(g: &FactorGraph, sigma: &[usize], ell: usize) -> Result<MarginalSequence> {
    GraphLocal::new(g, ell).empirical(sigma)
}

/// `B_{G,ℓ}(q)` in the form produced by counting `q`-valid clone
/// assignments:
/// `Σ_T λ(T|V) H(q_T) + (|F|/|V|) Σ_T λ(T|F) [⟨ln ψ_T⟩_{q_T} − KL(q_T ‖ ⊗_j q_{∂^ℓ[T↑j]})]`.
/// Under the balance condition this equals
/// `Σ_T λ(T|V)(1 − d_T) H(q_T) + (|F|/|V|) Σ_T λ(T|F) [H(q_T) + ⟨ln ψ_T⟩_{q_T}]`.
/// `−∞` when some joint charges a tuple its slot product does not.
pub fn graph_bethe(q: &MarginalSequence) -> Result<f64> {
    let (vm, fm) = (q.lambda.variable_mass(), q.lambda.factor_mass());
    let mut value = 0.0;
    for (k, e) in q.lambda.variable_entries() {
        value += e.prob / vm * info::entropy(q.variable(k)?);
    }
    let ratio = fm / vm;
    for (k, e) in q.lambda.factor_entries() {
        let joint = q.factor(k)?;
        let psi = e.template.weight_of(0).expect("factor-rooted template");
        let slots = slot_keys(&e.template, q.depth)?;
        let ms = slots.iter().map(|s| q.variable(s)).collect::<Result<Vec<_>>>()?;
        let kl = info::kl(joint, &info::product(&ms))?;
        let energy = info::expect(joint, psi.ln_table())?;
        value += ratio * e.prob / fm * (energy - kl);
    }
    Ok(value)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Judicious {
    pub judicious: bool,
    pub score: f64,
}

/// `(ε,ℓ)`-judiciousness of `(G,σ)` with respect to `p`: the score
/// `Σ_T λ[T|V] TV(q_T, p_T) + Σ_T λ[T|F] Σ_j TV(q_{T↓j}, p_{∂^ℓ[T↑j]})`
/// is compared strictly against `eps`. Non-tree keys are compared with the
/// uniform distribution.
pub fn is_judicious(g: &FactorGraph, sigma: &[usize], p: &MarginalAssignment, eps: f64, ell: usize) -> Result<Judicious> {
    if p.depth != ell {
        return invalid(format!("assignment depth {} vs ell {ell}", p.depth));
    }
    let q = empirical_sequence(g, sigma, ell)?;
    let target = |k: &CanonicalKey| -> Result<Vec<f64>> {
        if k.is_tree() {
            p.variable(k).map(<[f64]>::to_vec)
        } else {
            Ok(info::uniform(p.q))
        }
    };
    let (vm, fm) = (q.lambda.variable_mass(), q.lambda.factor_mass());
    let mut score = 0.0;
    for (k, e) in q.lambda.variable_entries() {
        score += e.prob / vm * info::tv(q.variable(k)?, &target(k)?)?;
    }
    for (k, e) in q.lambda.factor_entries() {
        let joint = q.factor(k)?;
        let slots = slot_keys(&e.template, ell)?;
        let h = slots.len();
        for (j, s) in slots.iter().enumerate() {
            score += e.prob / fm * info::tv(&info::joint_marginal(joint, q.q, h, j), &target(s)?)?;
        }
    }
    Ok(Judicious { judicious: score < eps, score })
}
