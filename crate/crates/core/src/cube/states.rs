//! (ε,k)-states, symmetry, and extraction of a family of disjoint states.

use serde::{Deserialize, Serialize};

use crate::cube::decompose::{decompose, DecomposeConfig};
use crate::cube::measure::{decode, DenseMeasure};
use crate::cube::partition::CoordinatePartition;
use crate::cube::regularity::Strategy;
use crate::error::{invalid, table_size, Error, Result};
use crate::info::tv_unchecked;

/// Largest `n^k · |Ω|^k` table the tuple statistics may allocate.
pub const TUPLE_CAP: usize = 1 << 22;

/// Unnormalized joint laws of every coordinate tuple `(x_1..x_k) ∈ [n]^k`
/// (repetitions included) over a set of assignments. Additive in the set.
#[derive(Clone, Debug)]
struct TupleStats {
    q: usize,
    n: usize,
    k: usize,
    total: f64,
    singles: Vec<f64>,
    joints: Vec<f64>,
}

impl TupleStats {
    fn new(q: usize, n: usize, k: usize) -> Result<Self> {
        if k < 2 {
            return invalid("state order k must be at least 2");
        }
        let tuples = table_size(n, k, TUPLE_CAP, "coordinate tuples")?;
        let cells = table_size(q, k, TUPLE_CAP, "tuple joint")?;
        let size = tuples
            .checked_mul(cells)
            .filter(|s| *s <= TUPLE_CAP)
            .ok_or_else(|| Error::Budget {
                what: "tuple statistics".into(),
                required: format!("{n}^{k}*{q}^{k}"),
                cap: TUPLE_CAP,
            })?;
        Ok(Self {
            q,
            n,
            k,
            total: 0.0,
            singles: vec![0.0; n * q],
            joints: vec![0.0; size],
        })
    }

    fn add(&mut self, digits: &[usize], m: f64) {
        let (q, n, k) = (self.q, self.n, self.k);
        let cells = q.pow(k as u32);
        self.total += m;
        for (x, &s) in digits.iter().enumerate() {
            self.singles[x * q + s] += m;
        }
        let tuples = n.pow(k as u32);
        for t in 0..tuples {
            let mut rest = t;
            let mut cell = 0;
            let mut stride = 1;
            for _ in 0..k {
                cell += digits[rest % n] * stride;
                stride *= q;
                rest /= n;
            }
            self.joints[t * cells + cell] += m;
        }
    }

    fn merge(&mut self, other: &Self) {
        self.total += other.total;
        self.singles.iter_mut().zip(&other.singles).for_each(|(a, b)| *a += b);
        self.joints.iter_mut().zip(&other.joints).for_each(|(a, b)| *a += b);
    }

    /// `(1/n^k) Σ_tuples TV(joint, ⊗ marginals)` of the normalized law.
    fn score(&self) -> f64 {
        let (q, n, k) = (self.q, self.n, self.k);
        let cells = q.pow(k as u32);
        let tuples = n.pow(k as u32);
        let z = self.total;
        let mut joint = vec![0.0; cells];
        let mut prod = vec![0.0; cells];
        let mut acc = 0.0;
        for t in 0..tuples {
            let mut xs = Vec::with_capacity(k);
            let mut rest = t;
            for _ in 0..k {
                xs.push(rest % n);
                rest /= n;
            }
            for (c, (jv, pv)) in joint.iter_mut().zip(prod.iter_mut()).enumerate() {
                *jv = self.joints[t * cells + c] / z;
                let mut r = c;
                let mut p = 1.0;
                for &x in &xs {
                    p *= self.singles[x * q + r % q] / z;
                    r /= q;
                }
                *pv = p;
            }
            acc += tv_unchecked(&joint, &prod);
        }
        acc / tuples as f64
    }
}

fn stats_of(mu: &DenseMeasure, set: &[usize], k: usize) -> Result<TupleStats> {
    let mut st = TupleStats::new(mu.q(), mu.n(), k)?;
    let mut digits = vec![0; mu.n()];
    for &i in set {
        if i >= mu.mass().len() {
            return invalid(format!("assignment index {i} out of range"));
        }
        let m = mu.mass()[i];
        if m > 0.0 {
            decode(i, mu.q(), &mut digits);
            st.add(&digits, m);
        }
    }
    Ok(st)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateCheck {
    /// `(1/n^k) Σ_{x_1..x_k} TV(μ↓{x_1..x_k}[·|S], ⊗_i μ↓x_i[·|S])`.
    pub score: f64,
    pub is_state: bool,
}

/// Whether `set` is an (ε,k)-state of `μ`. Tuples with repeated coordinates
/// are part of the average.
pub fn is_state(mu: &DenseMeasure, set: &[usize], eps: f64, k: usize) -> Result<StateCheck> {
    let st = stats_of(mu, set, k)?;
    if st.total <= 0.0 {
        return invalid("state candidate has zero mass");
    }
    let score = st.score();
    Ok(StateCheck {
        score,
        is_state: score < eps,
    })
}

/// Whether `Ω^n` itself is an (ε,k)-state.
pub fn is_symmetric(mu: &DenseMeasure, eps: f64, k: usize) -> Result<StateCheck> {
    let all: Vec<usize> = (0..mu.mass().len()).collect();
    is_state(mu, &all, eps, k)
}

/// Average shift of the one-point marginals, `(1/n) Σ_x TV(μ↓x[·|S], μ↓x)`.
pub fn marginal_shift(mu: &DenseMeasure, set: &[usize]) -> Result<f64> {
    let all = stats_of(mu, &(0..mu.mass().len()).collect::<Vec<_>>(), 2)?;
    let part = stats_of(mu, set, 2)?;
    if part.total <= 0.0 {
        return invalid("conditioning set has zero mass");
    }
    let q = mu.q();
    let mut acc = 0.0;
    for x in 0..mu.n() {
        let a: Vec<f64> = (0..q).map(|w| part.singles[x * q + w] / part.total).collect();
        let b: Vec<f64> = (0..q).map(|w| all.singles[x * q + w] / all.total).collect();
        acc += tv_unchecked(&a, &b);
    }
    Ok(acc / mu.n() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub eps: f64,
    pub k: usize,
    /// Tolerance of the underlying homogeneous decomposition; defaults to `eps`.
    pub decompose_eps: Option<f64>,
    pub strategy: Strategy,
}

impl ExtractConfig {
    pub fn new(eps: f64, k: usize) -> Self {
        Self {
            eps,
            k,
            decompose_eps: None,
            strategy: Strategy::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractedState {
    pub assignments: Vec<usize>,
    pub mass: f64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub states: Vec<ExtractedState>,
    /// Smallest mass among the returned states.
    pub eta: f64,
    pub coverage: f64,
    /// Disjoint states, each an (ε,k)-state, covering mass at least `1 − ε`.
    pub contract_holds: bool,
    pub partition: CoordinatePartition,
}

struct Group {
    assignments: Vec<usize>,
    stats: TupleStats,
}

/// Disjoint (ε,k)-states covering most of the mass.
///
/// The states of a homogeneous decomposition are grouped greedily, heaviest
/// first: each piece joins the group whose union with it has the smallest
/// score, provided that union is still an (ε,k)-state, and otherwise opens a
/// new group. Groups are then merged pairwise while some union stays a
/// state. Groups that are not states are dropped.
pub fn extract_states(mu: &DenseMeasure, cfg: ExtractConfig) -> Result<Extraction> {
    let eps = cfg.eps;
    let dec = decompose(
        mu,
        &CoordinatePartition::whole(mu.n()),
        DecomposeConfig {
            eps: cfg.decompose_eps.unwrap_or(eps),
            strategy: cfg.strategy,
        },
    )?;
    let mut pieces: Vec<(f64, Vec<usize>)> = dec
        .states
        .classes
        .iter()
        .map(|c| {
            let support: Vec<usize> = c.iter().copied().filter(|&i| mu.mass()[i] > 0.0).collect();
            (mu.mass_of(&support), support)
        })
        .filter(|(m, _)| *m > 0.0)
        .collect();
    pieces.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1[0].cmp(&b.1[0])));

    let mut groups: Vec<Group> = Vec::new();
    for (_, piece) in pieces {
        let st = stats_of(mu, &piece, cfg.k)?;
        let mut best: Option<(usize, f64)> = None;
        for (g, group) in groups.iter().enumerate() {
            let mut u = group.stats.clone();
            u.merge(&st);
            let s = u.score();
            if s < eps && best.is_none_or(|(_, b)| s < b) {
                best = Some((g, s));
            }
        }
        match best {
            Some((g, _)) => {
                groups[g].stats.merge(&st);
                groups[g].assignments.extend(piece);
            }
            None => groups.push(Group {
                assignments: piece,
                stats: st,
            }),
        }
    }
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                let mut u = groups[a].stats.clone();
                u.merge(&groups[b].stats);
                let s = u.score();
                if s < eps && best.is_none_or(|(_, _, v)| s < v) {
                    best = Some((a, b, s));
                }
            }
        }
        let Some((a, b, _)) = best else { break };
        let gb = groups.remove(b);
        groups[a].stats.merge(&gb.stats);
        groups[a].assignments.extend(gb.assignments);
    }
    let mut states: Vec<ExtractedState> = groups
        .into_iter()
        .filter_map(|g| {
            let score = g.stats.score();
            (score < eps).then(|| {
                let mut assignments = g.assignments;
                assignments.sort_unstable();
                ExtractedState {
                    mass: g.stats.total,
                    assignments,
                    score,
                }
            })
        })
        .collect();
    states.sort_by(|a, b| b.mass.total_cmp(&a.mass).then(a.assignments[0].cmp(&b.assignments[0])));
    let coverage: f64 = states.iter().map(|s| s.mass).sum();
    Ok(Extraction {
        eta: states.iter().map(|s| s.mass).fold(f64::INFINITY, f64::min),
        contract_holds: !states.is_empty() && coverage >= 1.0 - eps,
        coverage,
        states,
        partition: dec.partition,
    })
}
