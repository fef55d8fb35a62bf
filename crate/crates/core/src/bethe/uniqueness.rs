use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assignment::MarginalAssignment;
use super::tree::{boundary_nodes, root_marginal_dense, tree_order, BoundaryCondition};
use crate::cube::decode;
use crate::error::{invalid, Error, Result};
use crate::info;
use crate::local::Template;
use crate::rng;

/// Largest boundary (in variables) enumerated by default.
pub const DEFAULT_BOUNDARY_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Exhaustive,
    /// Constant boundaries plus `samples` uniform random ones.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Unique,
    NotUnique,
    /// A sampled search found no violation; nothing is certified.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub verdict: Verdict,
    pub eps: f64,
    pub ell: usize,
    /// Largest TV between a clamped root marginal and `p_T` seen.
    pub worst_tv: f64,
    pub worst_boundary: BoundaryCondition,
    pub boundaries_checked: usize,
}

/// Tests `TV(⟨σ(root) | ∇_ℓ T⟩_T, p_T) < ε` for the boundary conditions of
/// `∂^{ℓ+1}T`. Constant boundaries are visited first, then the rest in
/// lexicographic order (exhaustive) or at random (sampled).
pub fn gibbs_uniqueness_check(
    t: &Template,
    p: &MarginalAssignment,
    eps: f64,
    ell: usize,
    mode: SearchMode,
    cap: usize,
) -> Result<UniquenessReport> {
    if !t.root_is_variable() {
        return invalid("uniqueness is defined for variable roots");
    }
    let tt = t.truncate(ell + 1);
    let order = tree_order(&tt)?;
    let target = p.for_template(&tt)?;
    let nodes = boundary_nodes(&tt, ell);
    let q = tt.q();
    let b = nodes.len();

    let eval = |values: &[usize]| -> Result<f64> {
        let mut clamp = vec![None; tt.len()];
        for (&v, &s) in nodes.iter().zip(values) {
            clamp[v] = Some(s);
        }
        match root_marginal_dense(&tt, &order, &clamp) {
            Ok(m) => Ok(info::tv(&m, &target)?),
            Err(Error::Infeasible(_)) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    };

    let mut candidates: Vec<Vec<usize>> = (0..q).map(|s| vec![s; b]).collect();
    let exhaustive = match mode {
        SearchMode::Exhaustive => {
            let total = crate::error::table_size(q, b, usize::MAX, "boundary")?;
            if b > cap {
                return Err(Error::Budget { what: "boundary enumeration".into(), required: format!("{b} variables"), cap });
            }
            let mut digits = vec![0; b];
            for idx in 0..total {
                decode(idx, q, &mut digits);
                if digits.iter().any(|&d| d != digits[0]) {
                    candidates.push(digits.clone());
                }
            }
            true
        }
        SearchMode::Sampled { samples, seed } => {
            let mut r = rng::stream(seed, "uniqueness/boundary");
            for _ in 0..samples {
                candidates.push((0..b).map(|_| r.gen_range(0..q)).collect());
            }
            false
        }
    };
    if b == 0 {
        candidates.truncate(1);
    }
    let scores: Vec<f64> = candidates.par_iter().map(|c| eval(c)).collect::<Result<_>>()?;
    let (mut worst, mut arg) = (f64::NEG_INFINITY, 0);
    for (i, &s) in scores.iter().enumerate() {
        if s > worst {
            worst = s;
            arg = i;
        }
    }
    let verdict = if worst >= eps {
        Verdict::NotUnique
    } else if exhaustive {
        Verdict::Unique
    } else {
        Verdict::Unknown
    };
    Ok(UniquenessReport {
        verdict,
        eps,
        ell,
        worst_tv: worst.max(0.0),
        worst_boundary: BoundaryCondition::new(&nodes, &candidates[arg]),
        boundaries_checked: candidates.len(),
    })
}
