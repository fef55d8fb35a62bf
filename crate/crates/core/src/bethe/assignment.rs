use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::maxent::max_entropy_joint;
use super::tree::tree_root_marginal;
use crate::error::{invalid, Error, Result};
use crate::info;
use crate::local::{canonical_key, limit_tree, CanonicalKey, Family, LocalDistribution, Template};

/// Joint law of the variables around a factor-rooted key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorMarginal {
    /// Weight id of the root factor; `joint` follows its slot order.
    pub weight_id: String,
    /// Key of `∂^ℓ(T↑j)` for every root slot `j`.
    pub slot_keys: Vec<CanonicalKey>,
    /// Distribution on `Ω^{d_T}`, lexicographic in slot order.
    pub joint: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Depth-extension parameter `m`: variable marginals average exact root
    /// marginals of the depth `ℓ+m` extensions.
    pub extension: usize,
    /// Largest root-marginal TV change between extensions `m` and `m+1`,
    /// when computed.
    pub stability: Option<f64>,
}

/// `p_{ℓ,T}` for variable-rooted depth-`ℓ` keys and the constraint joints
/// of depth-`ℓ+1` factor keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalAssignment {
    pub depth: usize,
    pub q: usize,
    pub variables: BTreeMap<CanonicalKey, Vec<f64>>,
    pub factors: BTreeMap<CanonicalKey, FactorMarginal>,
    pub provenance: Provenance,
}

impl MarginalAssignment {
    pub fn variable(&self, key: &CanonicalKey) -> Result<&[f64]> {
        self.variables
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingKey(format!("variable key {key}")))
    }

    pub fn factor(&self, key: &CanonicalKey) -> Result<&FactorMarginal> {
        self.factors.get(key).ok_or_else(|| Error::MissingKey(format!("factor key {key}")))
    }

    /// `p_{ℓ,∂^ℓ T}` for a variable-rooted template; uniform for non-trees.
    pub fn for_template(&self, t: &Template) -> Result<Vec<f64>> {
        let k = canonical_key(&t.truncate(self.depth));
        if !k.is_tree() {
            return Ok(info::uniform(self.q));
        }
        self.variable(&k).map(<[f64]>::to_vec)
    }

    /// Largest `TV(p_{T↓j}, p_{T↑j})` over factor keys and slots.
    pub fn consistency_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for f in self.factors.values() {
            let h = f.slot_keys.len();
            for (j, k) in f.slot_keys.iter().enumerate() {
                let m = info::joint_marginal(&f.joint, self.q, h, j);
                worst = worst.max(info::tv(&m, self.variable(k)?)?);
            }
        }
        Ok(worst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Averages exact root marginals of the depth-`ℓ+m` variable trees of
/// `theta_ext` over each depth-`ℓ` class.
fn variable_marginals(theta_ext: &LocalDistribution, ell: usize) -> Result<BTreeMap<CanonicalKey, Vec<f64>>> {
    let mut acc: BTreeMap<CanonicalKey, (f64, Vec<f64>)> = BTreeMap::new();
    for e in theta_ext.entries.values().filter(|e| e.variable_rooted) {
        let r = tree_root_marginal(&e.template, None)?;
        let k = canonical_key(&e.template.truncate(ell));
        let slot = acc.entry(k).or_insert_with(|| (0.0, vec![0.0; r.len()]));
        slot.0 += e.prob;
        for (a, b) in slot.1.iter_mut().zip(&r) {
            *a += e.prob * b;
        }
    }
    Ok(acc
        .into_iter()
        .map(|(k, (w, v))| (k, v.into_iter().map(|x| x / w).collect()))
        .collect())
}

/// Builds `p` at depth `ell` from `θ_{ℓ+m}` (`theta_ext` may be deeper; it
/// is truncated to `ℓ+m`). Variable marginals are conditional expectations
/// of exact free-boundary root marginals; factor joints solve the
/// maximum-entropy problem with the marginals of the neighboring keys.
pub fn build_marginal_assignment(theta_ext: &LocalDistribution, ell: usize, m: usize) -> Result<MarginalAssignment> {
    if theta_ext.depth < ell + m {
        return invalid(format!("need local data at depth {} but have depth {}", ell + m, theta_ext.depth));
    }
    let theta_ext = if theta_ext.depth > ell + m { theta_ext.truncate(ell + m)? } else { theta_ext.clone() };
    theta_ext.require_trees()?;
    let q = theta_ext.entries.values().next().map(|e| e.template.q()).ok_or_else(|| Error::InvalidArgument("empty local distribution".into()))?;
    let variables = variable_marginals(&theta_ext, ell)?;
    let theta_ell = theta_ext.truncate(ell)?;
    let mut factors = BTreeMap::new();
    for (key, e) in theta_ell.factor_entries() {
        let t = &e.template;
        let psi = t.weight_of(0).expect("factor root");
        let mut slot_keys = Vec::with_capacity(t.root().degree());
        let mut marginals = Vec::with_capacity(t.root().degree());
        for j in 0..t.root().degree() {
            let (r, _) = t.reroot(j)?;
            let k = canonical_key(&r.truncate(ell));
            let p = variables.get(&k).ok_or_else(|| Error::MissingKey(format!("variable key {k} adjacent to factor key {key}")))?;
            marginals.push(p.clone());
            slot_keys.push(k);
        }
        let joint = max_entropy_joint(psi, &marginals)?;
        factors.insert(key.clone(), FactorMarginal { weight_id: psi.id().to_string(), slot_keys, joint });
    }
    Ok(MarginalAssignment { depth: ell, q, variables, factors, provenance: Provenance { extension: m, stability: None } })
}

/// [`build_marginal_assignment`] from the family's limit tree `θ_{ℓ+m}`.
pub fn family_marginal_assignment(family: &Family, ell: usize, m: usize) -> Result<MarginalAssignment> {
    build_marginal_assignment(&limit_tree(family, ell + m)?, ell, m)
}

/// Largest TV change of the variable marginals when the extension grows
/// from `m` to `m + 1`; zero certifies an `m`-stable fixed point. Stored in
/// the provenance of the returned assignment (built with extension `m`).
pub fn extension_stability(family: &Family, ell: usize, m: usize) -> Result<MarginalAssignment> {
    let theta = limit_tree(family, ell + m + 1)?;
    let mut p = build_marginal_assignment(&theta, ell, m)?;
    let next = variable_marginals(&theta, ell)?;
    let mut stability: f64 = 0.0;
    for (k, v) in &p.variables {
        let w = next.get(k).ok_or_else(|| Error::Internal(format!("key {k} vanished at deeper extension")))?;
        stability = stability.max(info::tv(v, w)?);
    }
    p.provenance.stability = Some(stability);
    Ok(p)
}

/// `B_θ(p) = E[(1−d_T)H(p_T)|V] + (P[F]/P[V])·E[H(p_T)+⟨ln ψ_T⟩_{p_T}|F]`
/// over `θ_ℓ` (a deeper `theta` is truncated to `p.depth`).
pub fn bethe_free_energy(theta: &LocalDistribution, p: &MarginalAssignment) -> Result<f64> {
    let theta = match theta.depth.cmp(&p.depth) {
        std::cmp::Ordering::Less => return invalid(format!("local data at depth {} for an assignment at depth {}", theta.depth, p.depth)),
        std::cmp::Ordering::Equal => theta.clone(),
        std::cmp::Ordering::Greater => theta.truncate(p.depth)?,
    };
    theta.require_trees()?;
    let pv = theta.variable_mass();
    if !(pv > 0.0) {
        return invalid("local distribution has no variable mass");
    }
    let mut total = 0.0;
    for (k, e) in theta.variable_entries() {
        let d = e.template.root().degree() as f64;
        total += e.prob / pv * (1.0 - d) * info::entropy(p.variable(k)?);
    }
    for (k, e) in theta.factor_entries() {
        let f = p.factor(k)?;
        let psi = e.template.weight_of(0).expect("factor root");
        let term = info::entropy(&f.joint) + info::expect(&f.joint, psi.ln_table())?;
        total += e.prob / pv * term;
    }
    Ok(total)
}
