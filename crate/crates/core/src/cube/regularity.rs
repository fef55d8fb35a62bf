//! ε-regularity of a measure on a coordinate set, the index of a partition,
//! and the splitting step driven by irregularity witnesses.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::cube::measure::{decode, DenseMeasure};
use crate::cube::partition::CoordinatePartition;
use crate::error::{invalid, Error, Result};

pub const DEFAULT_EXACT_CAP: usize = 18;
const GAIN_TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// All subsets `S ⊆ U` with `|S| ≥ ε|U|`; refuses when `|U| > cap`.
    Exact { cap: usize },
    /// One-sided candidate sets built from conditional coordinate marginals.
    WitnessSearch,
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::Exact {
            cap: DEFAULT_EXACT_CAP,
        }
    }
}

/// A set `S ⊆ U` with `⟨TV(σ[·|S], σ[·|U])⟩ ≥ ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub set: Vec<usize>,
    pub deviation: f64,
    /// Index decrease obtained by splitting `U` into `S` and `U∖S`.
    pub index_gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict", content = "witness")]
pub enum Verdict {
    Regular,
    Irregular(Witness),
    Unknown,
}

impl Verdict {
    pub fn is_regular(&self) -> bool {
        matches!(self, Verdict::Regular)
    }
}

/// Law of the restriction of `σ ~ μ` to `U`, one bitmask per symbol.
struct Patterns {
    q: usize,
    n: usize,
    size: usize,
    masks: Vec<u64>,
    counts: Vec<u32>,
    mass: Vec<f64>,
}

impl Patterns {
    fn new(mu: &DenseMeasure, u: &[usize]) -> Result<Self> {
        if u.is_empty() {
            return invalid("regularity on an empty coordinate set");
        }
        if u.len() > 64 {
            return invalid("coordinate set larger than 64");
        }
        for (i, &x) in u.iter().enumerate() {
            if x >= mu.n() || u[..i].contains(&x) {
                return invalid(format!("bad coordinate {x} in set"));
            }
        }
        let q = mu.q();
        let mut digits = vec![0; mu.n()];
        let mut agg: HashMap<Vec<u64>, f64> = HashMap::new();
        let mut key = vec![0u64; q];
        for (i, m) in mu.support() {
            decode(i, q, &mut digits);
            key.iter_mut().for_each(|k| *k = 0);
            for (pos, &x) in u.iter().enumerate() {
                key[digits[x]] |= 1 << pos;
            }
            *agg.entry(key.clone()).or_insert(0.0) += m;
        }
        let mut rows: Vec<(Vec<u64>, f64)> = agg.into_iter().collect();
        rows.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut masks = Vec::with_capacity(rows.len() * q);
        let mut counts = Vec::with_capacity(rows.len() * q);
        let mut mass = Vec::with_capacity(rows.len());
        for (k, m) in rows {
            counts.extend(k.iter().map(|b| b.count_ones()));
            masks.extend(k);
            mass.push(m);
        }
        Ok(Self {
            q,
            n: mu.n(),
            size: u.len(),
            masks,
            counts,
            mass,
        })
    }

    fn deviation(&self, s: u64) -> f64 {
        let ks = f64::from(s.count_ones());
        let ku = self.size as f64;
        let mut dev = 0.0;
        for (p, &m) in self.mass.iter().enumerate() {
            let mut tv = 0.0;
            for w in 0..self.q {
                let cs = f64::from((self.masks[p * self.q + w] & s).count_ones());
                let cu = f64::from(self.counts[p * self.q + w]);
                tv += (cs / ks - cu / ku).abs();
            }
            dev += m * tv;
        }
        0.5 * dev
    }

    fn gain(&self, s: u64) -> f64 {
        let ks = f64::from(s.count_ones());
        let ku = self.size as f64;
        let kc = ku - ks;
        if kc == 0.0 {
            return 0.0;
        }
        let mut g = 0.0;
        for (p, &m) in self.mass.iter().enumerate() {
            for w in 0..self.q {
                let cs = f64::from((self.masks[p * self.q + w] & s).count_ones());
                let cu = f64::from(self.counts[p * self.q + w]);
                let mean = cu / ku;
                let a = cs / ks - mean;
                let b = (cu - cs) / kc - mean;
                g += m * (ks * a * a + kc * b * b);
            }
        }
        g / (self.q * self.n) as f64
    }

    fn full(&self) -> u64 {
        if self.size == 64 {
            u64::MAX
        } else {
            (1u64 << self.size) - 1
        }
    }
}

fn min_size(eps: f64, size: usize) -> usize {
    ((eps * size as f64 - 1e-9).ceil().max(1.0)) as usize
}

fn positions(mask: u64) -> Vec<usize> {
    (0..64).filter(|b| mask >> b & 1 == 1).collect()
}

/// Keeps the violating candidate with the largest index gain; ties go to the
/// lexicographically smallest set.
#[derive(Default)]
struct Best {
    found: Option<(u64, f64, f64)>,
}

impl Best {
    fn offer(&mut self, pat: &Patterns, s: u64, eps: f64) {
        let dev = pat.deviation(s);
        if dev < eps {
            return;
        }
        let gain = pat.gain(s);
        let better = match self.found {
            None => true,
            Some((bs, _, bg)) => {
                gain > bg + GAIN_TIE || ((gain - bg).abs() <= GAIN_TIE && positions(s) < positions(bs))
            }
        };
        if better {
            self.found = Some((s, dev, gain));
        }
    }

    fn verdict(self, u: &[usize]) -> Option<Verdict> {
        self.found.map(|(s, deviation, index_gain)| {
            Verdict::Irregular(Witness {
                set: positions(s).into_iter().map(|p| u[p]).collect(),
                deviation,
                index_gain,
            })
        })
    }
}

/// `⟨TV(σ[·|S], σ[·|U])⟩_μ` for `S ⊆ U`.
pub fn deviation(mu: &DenseMeasure, s: &[usize], u: &[usize]) -> Result<f64> {
    let pat = Patterns::new(mu, u)?;
    let mut mask = 0u64;
    for x in s {
        let p = u
            .iter()
            .position(|y| y == x)
            .ok_or_else(|| Error::InvalidArgument(format!("{x} is not in the set")))?;
        mask |= 1 << p;
    }
    if mask == 0 {
        return invalid("empty subset");
    }
    Ok(pat.deviation(mask))
}

/// Whether `μ` is ε-regular on `u`.
pub fn is_regular_on(mu: &DenseMeasure, u: &[usize], eps: f64, strategy: Strategy) -> Result<Verdict> {
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    if let Strategy::Exact { cap } = strategy {
        if u.len() > cap {
            return Err(Error::Budget {
                what: "exact regularity".into(),
                required: format!("2^{}", u.len()),
                cap: 1usize.checked_shl(cap as u32).unwrap_or(usize::MAX),
            });
        }
    }
    let pat = Patterns::new(mu, u)?;
    let kmin = min_size(eps, u.len());
    if kmin >= u.len() {
        return Ok(Verdict::Regular);
    }
    let mut best = Best::default();
    match strategy {
        Strategy::Exact { .. } => {
            for s in 1..pat.full() {
                if s.count_ones() as usize >= kmin {
                    best.offer(&pat, s, eps);
                }
            }
            Ok(best.verdict(u).unwrap_or(Verdict::Regular))
        }
        Strategy::WitnessSearch => {
            for s in candidates(&pat, kmin) {
                best.offer(&pat, s, eps);
            }
            Ok(best.verdict(u).unwrap_or(Verdict::Unknown))
        }
    }
}

/// Prefixes of the coordinates sorted by their conditional frequency of one
/// symbol, conditioning on level sets of that symbol's overall frequency.
fn candidates(pat: &Patterns, kmin: usize) -> BTreeSet<u64> {
    let size = pat.size;
    let rows = pat.mass.len();
    let mut out = BTreeSet::new();
    for w in 0..pat.q {
        let mut events: Vec<Box<dyn Fn(u32) -> bool>> = vec![Box::new(|_| true)];
        for c in 0..=size as u32 {
            events.push(Box::new(move |k| k <= c));
            events.push(Box::new(move |k| k >= c));
        }
        for ev in &events {
            let mut freq = vec![0.0; size];
            let mut total = 0.0;
            for p in 0..rows {
                if !ev(pat.counts[p * pat.q + w]) {
                    continue;
                }
                let m = pat.mass[p];
                total += m;
                let mask = pat.masks[p * pat.q + w];
                for (pos, f) in freq.iter_mut().enumerate() {
                    if mask >> pos & 1 == 1 {
                        *f += m;
                    }
                }
            }
            if total <= 0.0 {
                continue;
            }
            let mut order: Vec<usize> = (0..size).collect();
            order.sort_by(|&a, &b| freq[b].total_cmp(&freq[a]).then(a.cmp(&b)));
            for seq in [order.clone(), order.into_iter().rev().collect::<Vec<_>>()] {
                let mut mask = 0u64;
                for (k, &pos) in seq.iter().enumerate().take(size - 1) {
                    mask |= 1 << pos;
                    if k + 1 >= kmin {
                        out.insert(mask);
                    }
                }
            }
        }
    }
    out
}

/// A class of a partition together with its irregularity witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassWitness {
    pub class: usize,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionRegularity {
    pub witnesses: Vec<ClassWitness>,
    /// Classes on which the witness search was inconclusive.
    pub unknown: Vec<usize>,
    /// Total size of the classes that are irregular or unknown.
    pub irregular_size: usize,
    /// `irregular_size < ε n`; unknown classes count as irregular.
    pub regular: bool,
}

/// ε-regularity with respect to a partition: the classes on which `μ` is not
/// ε-regular have total size below `εn`.
pub fn partition_regularity(
    mu: &DenseMeasure,
    v: &CoordinatePartition,
    eps: f64,
    strategy: Strategy,
) -> Result<PartitionRegularity> {
    if v.n() != mu.n() {
        return Err(Error::DimensionMismatch(v.n(), mu.n()));
    }
    let mut witnesses = Vec::new();
    let mut unknown = Vec::new();
    let mut irregular_size = 0;
    for (j, class) in v.classes().iter().enumerate() {
        match is_regular_on(mu, class, eps, strategy)? {
            Verdict::Regular => {}
            Verdict::Irregular(witness) => {
                irregular_size += class.len();
                witnesses.push(ClassWitness { class: j, witness });
            }
            Verdict::Unknown => {
                irregular_size += class.len();
                unknown.push(j);
            }
        }
    }
    Ok(PartitionRegularity {
        regular: (irregular_size as f64) < eps * mu.n() as f64,
        witnesses,
        unknown,
        irregular_size,
    })
}

/// `ind_μ(V) = (1/(|Ω|n)) Σ_ω Σ_j Σ_{x∈V_j} ⟨(σ[ω|x] − σ[ω|V_j])²⟩_μ`.
pub fn index(mu: &DenseMeasure, v: &CoordinatePartition) -> Result<f64> {
    if v.n() != mu.n() {
        return Err(Error::DimensionMismatch(v.n(), mu.n()));
    }
    let q = mu.q();
    let labels = v.labels();
    let sizes: Vec<f64> = v.classes().iter().map(|c| c.len() as f64).collect();
    let mut digits = vec![0; mu.n()];
    let mut counts = vec![0.0f64; v.len() * q];
    let mut acc = 0.0;
    for (i, m) in mu.support() {
        decode(i, q, &mut digits);
        counts.iter_mut().for_each(|c| *c = 0.0);
        for (x, &s) in digits.iter().enumerate() {
            counts[labels[x] * q + s] += 1.0;
        }
        // Σ_{x∈V_j} (1{σ_x=ω} − c/|V_j|)² = c − c²/|V_j|
        let mut inner = 0.0;
        for (j, &size) in sizes.iter().enumerate() {
            for &c in &counts[j * q..(j + 1) * q] {
                inner += c - c * c / size;
            }
        }
        acc += m * inner;
    }
    Ok(acc / (q * mu.n()) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub partition: CoordinatePartition,
    pub index_before: f64,
    pub index_after: f64,
    pub split_classes: usize,
}

/// Splits each witnessed class `V_j` into `S_j` and `V_j ∖ S_j`.
pub fn refine_with(v: &CoordinatePartition, witnesses: &[ClassWitness]) -> Result<CoordinatePartition> {
    if witnesses.is_empty() {
        return Err(Error::InvalidState("refinement requested without irregularity witnesses".into()));
    }
    let splits: Vec<(usize, Vec<usize>)> = witnesses
        .iter()
        .map(|w| (w.class, w.witness.set.clone()))
        .collect();
    v.split(&splits)
}

/// Runs the regularity check with respect to `v` and splits every irregular
/// class along its witness.
pub fn refine_irregular(
    mu: &DenseMeasure,
    v: &CoordinatePartition,
    eps: f64,
    strategy: Strategy,
) -> Result<Refinement> {
    let reg = partition_regularity(mu, v, eps, strategy)?;
    let partition = refine_with(v, &reg.witnesses)?;
    Ok(Refinement {
        index_before: index(mu, v)?,
        index_after: index(mu, &partition)?,
        split_classes: reg.witnesses.len(),
        partition,
    })
}

/// The guaranteed index decrease `ε⁴/(4|Ω|³)` of a refinement step applied to
/// a measure that is not ε-regular with respect to the partition.
pub fn index_drop_bound(eps: f64, q: usize) -> f64 {
    eps.powi(4) / (4.0 * (q as f64).powi(3))
}
