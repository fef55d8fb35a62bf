use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::{DistributionMode, LocalDistribution};
use super::key::{canonical_key, slot_symmetric, subtree_code, CanonicalKey};
use super::template::{TNode, Template};
use crate::error::{invalid, Result};
use crate::model::{builders, CloneType, WeightFunction};
use crate::rng;

/// Model families with a known local limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Ising { d: usize, beta: f64 },
    Potts { d: usize, k: usize, beta: f64 },
    /// k-SAT whose variables have `(positive, negative)` occurrence counts
    /// drawn from `profile` (pairs with their probabilities).
    Ksat { k: usize, beta: f64, profile: Vec<((usize, usize), f64)> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitConfig {
    /// Largest number of partial trees held during exact enumeration.
    pub cap: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self { cap: 1 << 18, samples: 200_000, seed: 0 }
    }
}

/// A factor shape: weight index, slot types and probability.
type FactorLaw = Vec<(usize, Vec<CloneType>, f64)>;

/// Offspring laws of the unimodular Galton-Watson tree of a family.
struct Law {
    q: usize,
    weights: Vec<WeightFunction>,
    /// Mean variable degree over mean factor degree: `P[F]/P[V]`.
    factor_ratio: f64,
    root_var: Vec<(Vec<CloneType>, f64)>,
    root_factor: FactorLaw,
    /// `π_t`: share of factor slots with type `t`.
    slot_share: BTreeMap<CloneType, f64>,
    /// `π_t · E[d]`: unnormalized size bias of variables reached through `t`.
    var_share: BTreeMap<CloneType, f64>,
}

impl Law {
    fn new(family: &Family) -> Result<Self> {
        match family {
            Family::Ising { d, beta } => Self::regular(*d, builders::ising_weight(*beta)?),
            Family::Potts { d, k, beta } => Self::regular(*d, builders::potts_weight(*k, *beta)?),
            Family::Ksat { k, beta, profile } => Self::ksat(*k, *beta, profile),
        }
    }

    fn regular(d: usize, w: WeightFunction) -> Result<Self> {
        if d == 0 {
            return invalid("degree must be positive");
        }
        Ok(Self {
            q: w.q(),
            weights: vec![w],
            factor_ratio: d as f64 / 2.0,
            root_var: vec![(vec![0; d], 1.0)],
            root_factor: vec![(0, vec![0, 0], 1.0)],
            slot_share: BTreeMap::from([(0, 1.0)]),
            var_share: BTreeMap::from([(0, d as f64)]),
        })
    }

    fn ksat(k: usize, beta: f64, profile: &[((usize, usize), f64)]) -> Result<Self> {
        if k == 0 {
            return invalid("clause length must be positive");
        }
        let total: f64 = profile.iter().map(|p| p.1).sum();
        if profile.is_empty() || profile.iter().any(|p| !(p.1 >= 0.0)) || !(total > 0.0) {
            return invalid("profile needs nonnegative probabilities with positive total");
        }
        let mean = |f: fn(usize, usize) -> usize| profile.iter().map(|((p, m), w)| f(*p, *m) as f64 * w).sum::<f64>() / total;
        let (pos, neg) = (mean(|p, _| p), mean(|_, m| m));
        if pos + neg <= 0.0 {
            return invalid("profile has zero mean degree");
        }
        let share = pos / (pos + neg);
        let mut weights = Vec::new();
        let mut root_factor = Vec::new();
        for pattern in 0..1usize << k {
            let signs: Vec<CloneType> = (0..k).map(|i| if pattern >> (k - 1 - i) & 1 == 0 { 1 } else { -1 }).collect();
            let plus = signs.iter().filter(|&&s| s > 0).count() as i32;
            let p = share.powi(plus) * (1.0 - share).powi(k as i32 - plus);
            if p > 0.0 {
                weights.push(builders::ksat_weight(&signs, beta)?);
                root_factor.push((weights.len() - 1, signs, p));
            }
        }
        let root_var = profile
            .iter()
            .filter(|p| p.1 > 0.0)
            .map(|&((p, m), w)| (std::iter::repeat_n(1, p).chain(std::iter::repeat_n(-1, m)).collect(), w / total))
            .collect();
        Ok(Self {
            q: 2,
            weights,
            factor_ratio: (pos + neg) / k as f64,
            root_var,
            root_factor,
            slot_share: BTreeMap::from([(1, share), (-1, 1.0 - share)]),
            var_share: BTreeMap::from([(1, pos), (-1, neg)]),
        })
    }

    /// Variables reached through a clone of type `t`: `(types, arrival slot, prob)`.
    fn var_via(&self, t: CloneType) -> Vec<(Vec<CloneType>, usize, f64)> {
        let z = self.var_share.get(&t).copied().unwrap_or(0.0);
        self.root_var
            .iter()
            .filter_map(|(types, p)| {
                let c = types.iter().filter(|&&s| s == t).count();
                let slot = types.iter().position(|&s| s == t)?;
                Some((types.clone(), slot, p * c as f64 / z))
            })
            .collect()
    }

    /// Factors reached through a slot of type `t`: a uniform slot among the
    /// type-`t` slots of a size-biased factor.
    fn factor_via(&self, t: CloneType) -> Vec<(usize, Vec<CloneType>, usize, f64)> {
        let share = self.slot_share.get(&t).copied().unwrap_or(0.0);
        let mut out = Vec::new();
        for (w, types, p) in &self.root_factor {
            for (j, _) in types.iter().enumerate().filter(|(_, &s)| s == t) {
                out.push((*w, types.clone(), j, p / (types.len() as f64 * share)));
            }
        }
        out
    }
}

/// A finite rooted tree under construction; `slots[i]` holds the child at
/// clone `i` together with the child's slot pointing back.
#[derive(Clone, Debug)]
struct Tree {
    weight: Option<usize>,
    types: Vec<CloneType>,
    slots: Vec<Option<(usize, Tree)>>,
}

impl Tree {
    fn leaf(weight: Option<usize>, types: &[CloneType]) -> Self {
        Self { weight, types: types.to_vec(), slots: vec![None; types.len()] }
    }

    fn to_template(&self, law: &Law) -> Template {
        fn walk(t: &Tree, nodes: &mut Vec<TNode>) -> usize {
            let me = nodes.len();
            nodes.push(TNode { weight: t.weight, types: t.types.clone(), ports: vec![None; t.types.len()] });
            for (i, s) in t.slots.iter().enumerate() {
                if let Some((back, child)) = s {
                    let c = walk(child, nodes);
                    nodes[me].ports[i] = Some((c, *back));
                    nodes[c].ports[*back] = Some((me, i));
                }
            }
            me
        }
        let mut nodes = Vec::new();
        walk(self, &mut nodes);
        Template::from_parts(law.q, law.weights.clone(), nodes)
    }
}

/// Subtree laws: `(code, arrival slot, tree, prob)`.
type Branches = Vec<(Vec<u8>, usize, Tree, f64)>;

struct OverCap;

struct Enumerator<'a> {
    law: &'a Law,
    cap: usize,
    memo: HashMap<(bool, CloneType, usize), Branches>,
}

impl Enumerator<'_> {
    fn heads(&self, var: bool, t: CloneType) -> Vec<(Option<usize>, Vec<CloneType>, usize, f64)> {
        if var {
            self.law.var_via(t).into_iter().map(|(ty, s, p)| (None, ty, s, p)).collect()
        } else {
            self.law.factor_via(t).into_iter().map(|(w, ty, s, p)| (Some(w), ty, s, p)).collect()
        }
    }

    /// Law of the subtree entered through a clone of type `t`; its root is a
    /// variable iff `var` and may grow `remaining` more levels.
    fn branch(&mut self, var: bool, t: CloneType, remaining: usize) -> std::result::Result<Branches, OverCap> {
        if let Some(b) = self.memo.get(&(var, t, remaining)) {
            return Ok(b.clone());
        }
        let mut merged: BTreeMap<Vec<u8>, (usize, Tree, f64)> = BTreeMap::new();
        for (weight, types, arrival, p) in self.heads(var, t) {
            for (tree, q) in self.expand(weight, &types, Some(arrival), remaining)? {
                let code = subtree_code(&tree.to_template(self.law), Some(arrival));
                merged.entry(code).or_insert((arrival, tree, 0.0)).2 += p * q;
            }
            if merged.len() > self.cap {
                return Err(OverCap);
            }
        }
        let out: Branches = merged.into_iter().map(|(c, (s, t, p))| (c, s, t, p)).collect();
        self.memo.insert((var, t, remaining), out.clone());
        Ok(out)
    }

    /// Law of the trees with the given head node, children attached at every
    /// slot except `parent`.
    fn expand(
        &mut self,
        weight: Option<usize>,
        types: &[CloneType],
        parent: Option<usize>,
        remaining: usize,
    ) -> std::result::Result<Vec<(Tree, f64)>, OverCap> {
        let base = Tree::leaf(weight, types);
        if remaining == 0 {
            return Ok(vec![(base, 1.0)]);
        }
        let unordered = match weight {
            None => true,
            Some(w) => slot_symmetric(&self.law.weights[w], types),
        };
        let mut partial: Vec<(Vec<(CloneType, Vec<u8>)>, Tree, f64)> = vec![(Vec::new(), base, 1.0)];
        for (i, &t) in types.iter().enumerate() {
            if Some(i) == parent {
                continue;
            }
            let branches = self.branch(weight.is_some(), t, remaining - 1)?;
            let mut next: BTreeMap<Vec<(CloneType, Vec<u8>)>, (Tree, f64)> = BTreeMap::new();
            for (sig, tree, p) in &partial {
                for (code, back, child, q) in &branches {
                    let mut s = sig.clone();
                    s.push((t, code.clone()));
                    if unordered {
                        s.sort();
                    }
                    let entry = next.entry(s).or_insert_with(|| {
                        let mut tr = tree.clone();
                        tr.slots[i] = Some((*back, child.clone()));
                        (tr, 0.0)
                    });
                    entry.1 += p * q;
                }
                if next.len() > self.cap {
                    return Err(OverCap);
                }
            }
            partial = next.into_iter().map(|(s, (t, p))| (s, t, p)).collect();
        }
        Ok(partial.into_iter().map(|(_, t, p)| (t, p)).collect())
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T], prob: impl Fn(&T) -> f64) -> &'a T {
    let mut u: f64 = rng.gen();
    for it in items {
        u -= prob(it);
        if u < 0.0 {
            return it;
        }
    }
    items.last().expect("nonempty law")
}

fn sample_expand(law: &Law, rng: &mut ChaCha8Rng, weight: Option<usize>, types: &[CloneType], parent: Option<usize>, remaining: usize) -> Tree {
    let mut tree = Tree::leaf(weight, types);
    if remaining == 0 {
        return tree;
    }
    for (i, &t) in types.iter().enumerate() {
        if Some(i) == parent {
            continue;
        }
        let (w, ty, back) = if weight.is_some() {
            let heads = law.var_via(t);
            let (ty, s, _) = pick(rng, &heads, |h| h.2);
            (None, ty.clone(), *s)
        } else {
            let heads = law.factor_via(t);
            let (w, ty, s, _) = pick(rng, &heads, |h| h.3);
            (Some(*w), ty.clone(), *s)
        };
        let child = sample_expand(law, rng, w, &ty, Some(back), remaining - 1);
        tree.slots[i] = Some((back, child));
    }
    tree
}

/// `θ_ℓ` for a built-in family: variable roots at depth `ℓ`, factor roots at
/// depth `ℓ+1`, weighted `P[V] = 1/(1+r)`, `P[F] = r/(1+r)` with `r` the mean
/// variable degree over the mean factor degree.
pub fn limit_tree(family: &Family, depth: usize) -> Result<LocalDistribution> {
    limit_tree_with(family, depth, &LimitConfig::default())
}

/// [`limit_tree`] with explicit enumeration cap and sampler fallback.
pub fn limit_tree_with(family: &Family, depth: usize, config: &LimitConfig) -> Result<LocalDistribution> {
    let law = Law::new(family)?;
    let pv = 1.0 / (1.0 + law.factor_ratio);
    let pf = 1.0 - pv;
    match enumerate(&law, depth, pv, pf, config.cap) {
        Ok(counts) => Ok(LocalDistribution::from_counts(depth, DistributionMode::Exact, counts)),
        Err(OverCap) => {
            if config.samples == 0 {
                return invalid("enumeration exceeds the cap and sampling is disabled");
            }
            let mut rng = rng::stream(config.seed, "limit_tree");
            let mut counts: BTreeMap<CanonicalKey, (f64, Template)> = BTreeMap::new();
            for _ in 0..config.samples {
                let tree = if rng.gen::<f64>() < pv {
                    let (types, _) = pick(&mut rng, &law.root_var, |r| r.1);
                    sample_expand(&law, &mut rng, None, types, None, depth)
                } else {
                    let (w, types, _) = pick(&mut rng, &law.root_factor, |r| r.2);
                    sample_expand(&law, &mut rng, Some(*w), types, None, depth + 1)
                };
                let t = tree.to_template(&law);
                counts.entry(canonical_key(&t)).or_insert((0.0, t)).0 += 1.0;
            }
            let mode = DistributionMode::Sampled { samples: config.samples, seed: config.seed };
            Ok(LocalDistribution::from_counts(depth, mode, counts))
        }
    }
}

fn enumerate(law: &Law, depth: usize, pv: f64, pf: f64, cap: usize) -> std::result::Result<BTreeMap<CanonicalKey, (f64, Template)>, OverCap> {
    let mut e = Enumerator { law, cap, memo: HashMap::new() };
    let mut counts: BTreeMap<CanonicalKey, (f64, Template)> = BTreeMap::new();
    let mut add = |tree: &Tree, p: f64| {
        let t = tree.to_template(law);
        counts.entry(canonical_key(&t)).or_insert((0.0, t)).0 += p;
    };
    for (types, p) in &law.root_var {
        for (tree, q) in e.expand(None, types, None, depth)? {
            add(&tree, pv * p * q);
        }
    }
    for (w, types, p) in &law.root_factor {
        for (tree, q) in e.expand(Some(*w), types, None, depth + 1)? {
            add(&tree, pf * p * q);
        }
    }
    if counts.len() > cap {
        return Err(OverCap);
    }
    Ok(counts)
}
