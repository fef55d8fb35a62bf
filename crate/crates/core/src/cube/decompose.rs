//! Homogeneous decompositions: a coordinate partition `V` and a state
//! partition `S` of `Ω^n` such that `μ` is ε-homogeneous with respect to
//! `(V, S)` (conditions HM1–HM4).

use serde::{Deserialize, Serialize};

use crate::cube::measure::{decode, DenseMeasure};
use crate::cube::partition::{mesh_states, CoordinatePartition, StatePartition};
use crate::cube::regularity::{
    index, index_drop_bound, partition_regularity, refine_with, ClassWitness, PartitionRegularity, Strategy,
};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmWitness {
    pub state: Option<usize>,
    pub class: Option<usize>,
    pub set: Vec<usize>,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub pass: bool,
    pub value: f64,
    pub witness: Option<HmWitness>,
}

/// HM1: excluded states carry mass `< ε`.
/// HM2: empirical distributions on each class vary by `< ε` inside a good state.
/// HM3: `μ[·|S_i]` is ε-regular with respect to `V` for every good state.
/// HM4: `μ` is ε-regular with respect to `V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub eps: f64,
    pub good_states: Vec<usize>,
    pub state_masses: Vec<f64>,
    pub hm1: Condition,
    pub hm2: Condition,
    pub hm3: Condition,
    pub hm4: Condition,
    pub verdict: bool,
}

fn first_witness(reg: &PartitionRegularity, state: Option<usize>) -> Option<HmWitness> {
    reg.witnesses.first().map(|w: &ClassWitness| HmWitness {
        state,
        class: Some(w.class),
        set: w.witness.set.clone(),
        deviation: w.witness.deviation,
    })
}

/// Largest TV distance between `σ[·|V_j]` and `σ'[·|V_j]` over `σ, σ' ∈ set`.
fn class_spread(q: usize, n: usize, class: &[usize], set: &[usize]) -> f64 {
    let mut seen: Vec<Vec<usize>> = Vec::new();
    let mut digits = vec![0; n];
    for &i in set {
        decode(i, q, &mut digits);
        let mut c = vec![0; q];
        for &x in class {
            c[digits[x]] += 1;
        }
        if !seen.contains(&c) {
            seen.push(c);
        }
    }
    let k = class.len() as f64;
    let mut best: f64 = 0.0;
    for (a, ca) in seen.iter().enumerate() {
        for cb in &seen[a + 1..] {
            let d: f64 = ca.iter().zip(cb).map(|(x, y)| (*x as f64 - *y as f64).abs()).sum();
            best = best.max(0.5 * d / k);
        }
    }
    best
}

/// Checks HM1–HM4 exhaustively. The good set `I` is every state of positive
/// mass whose conditional measure is ε-regular with respect to `v`.
pub fn check_homogeneity(
    mu: &DenseMeasure,
    v: &CoordinatePartition,
    s: &StatePartition,
    eps: f64,
    strategy: Strategy,
) -> Result<HomogeneityReport> {
    if v.n() != mu.n() {
        return Err(Error::DimensionMismatch(v.n(), mu.n()));
    }
    let n = mu.n() as f64;
    let masses = s.masses(mu);
    let mut good = Vec::new();
    let mut excluded = 0.0;
    let mut hm1_witness = None;
    let mut hm3_value: f64 = 0.0;
    for (i, set) in s.classes.iter().enumerate() {
        if masses[i] <= 0.0 {
            continue;
        }
        let reg = partition_regularity(&mu.conditional(set)?, v, eps, strategy)?;
        if reg.regular {
            hm3_value = hm3_value.max(reg.irregular_size as f64 / n);
            good.push(i);
        } else {
            excluded += masses[i];
            if hm1_witness.is_none() {
                hm1_witness = first_witness(&reg, Some(i));
            }
        }
    }
    let mut hm2_value: f64 = 0.0;
    let mut hm2_witness = None;
    for &i in &good {
        for (j, class) in v.classes().iter().enumerate() {
            let spread = class_spread(mu.q(), mu.n(), class, &s.classes[i]);
            if spread > hm2_value {
                hm2_value = spread;
                hm2_witness = Some(HmWitness {
                    state: Some(i),
                    class: Some(j),
                    set: class.clone(),
                    deviation: spread,
                });
            }
        }
    }
    let global = partition_regularity(mu, v, eps, strategy)?;
    let hm1 = Condition {
        pass: excluded < eps,
        value: excluded,
        witness: hm1_witness,
    };
    let hm2 = Condition {
        pass: hm2_value < eps,
        value: hm2_value,
        witness: hm2_witness,
    };
    let hm3 = Condition {
        pass: hm3_value < eps,
        value: hm3_value,
        witness: None,
    };
    let hm4 = Condition {
        pass: global.regular,
        value: global.irregular_size as f64 / n,
        witness: first_witness(&global, None),
    };
    Ok(HomogeneityReport {
        eps,
        verdict: hm1.pass && hm2.pass && hm3.pass && hm4.pass,
        good_states: good,
        state_masses: masses,
        hm1,
        hm2,
        hm3,
        hm4,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposeConfig {
    pub eps: f64,
    pub strategy: Strategy,
}

impl DecomposeConfig {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            strategy: Strategy::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTarget {
    /// The step split along witnesses of `μ` itself.
    Measure,
    /// The step split along witnesses of `μ[·|S_i]`.
    State(usize),
}

/// One application of the splitting step, with the index of the measure the
/// witnesses came from before and after.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub iteration: usize,
    pub target: SplitTarget,
    pub index_before: f64,
    pub index_after: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub partition: CoordinatePartition,
    pub states: StatePartition,
    pub report: HomogeneityReport,
    pub splits: Vec<SplitRecord>,
    /// `ind_μ` of the partition after each iteration, starting with `V0`.
    pub index_trace: Vec<f64>,
    pub iterations: usize,
}

/// Upper bound `4|Ω|³/ε⁵` on the number of refinement rounds.
pub fn iteration_bound(eps: f64, q: usize) -> usize {
    (4.0 * (q as f64).powi(3) / eps.powi(5)).ceil() as usize
}

/// Refines `v0` until `μ` is ε-homogeneous with respect to `(V, S(V))`, where
/// `S(V)` groups assignments by the mesh cells of their class frequencies.
pub fn decompose(mu: &DenseMeasure, v0: &CoordinatePartition, cfg: DecomposeConfig) -> Result<Decomposition> {
    let eps = cfg.eps;
    if !(eps > 0.0 && eps < 1.0) {
        return invalid("eps must lie in (0, 1)");
    }
    if v0.n() != mu.n() {
        return Err(Error::DimensionMismatch(v0.n(), mu.n()));
    }
    if v0.len() as f64 > 1.0 / eps + 1e-9 {
        return invalid(format!("initial partition has {} > 1/eps classes", v0.len()));
    }
    let bound = iteration_bound(eps, mu.q());
    let drop = index_drop_bound(eps, mu.q());
    let mut v = v0.clone();
    let mut splits = Vec::new();
    let mut index_trace = vec![index(mu, &v)?];
    for iteration in 0..=bound {
        let reg = partition_regularity(mu, &v, eps, cfg.strategy)?;
        if !reg.regular {
            if reg.witnesses.is_empty() {
                return Err(Error::InvalidState("regularity search found no witness to split on".into()));
            }
            let w = refine_with(&v, &reg.witnesses)?;
            let after = index(mu, &w)?;
            splits.push(SplitRecord {
                iteration,
                target: SplitTarget::Measure,
                index_before: *index_trace.last().unwrap(),
                index_after: after,
                bound: drop,
            });
            index_trace.push(after);
            v = w;
            continue;
        }
        let states = mesh_states(mu.q(), &v, eps)?;
        let mut excluded = 0.0;
        let mut refinements = Vec::new();
        for (i, set) in states.classes.iter().enumerate() {
            let m = mu.mass_of(set);
            if m <= 0.0 {
                continue;
            }
            let cond = mu.conditional(set)?;
            let reg = partition_regularity(&cond, &v, eps, cfg.strategy)?;
            if reg.regular {
                continue;
            }
            if reg.witnesses.is_empty() {
                return Err(Error::InvalidState("regularity search found no witness to split on".into()));
            }
            excluded += m;
            let w = refine_with(&v, &reg.witnesses)?;
            splits.push(SplitRecord {
                iteration,
                target: SplitTarget::State(i),
                index_before: index(&cond, &v)?,
                index_after: index(&cond, &w)?,
                bound: drop,
            });
            refinements.push(w);
        }
        if excluded < eps {
            let report = check_homogeneity(mu, &v, &states, eps, cfg.strategy)?;
            if !report.verdict {
                return Err(Error::Internal("decomposition stopped without homogeneity".into()));
            }
            return Ok(Decomposition {
                partition: v,
                states,
                report,
                splits,
                index_trace,
                iterations: iteration,
            });
        }
        v = CoordinatePartition::common_refinement(&refinements)?;
        index_trace.push(index(mu, &v)?);
    }
    Err(Error::Internal(format!(
        "no homogeneous decomposition within {bound} rounds"
    )))
}
