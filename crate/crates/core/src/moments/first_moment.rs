use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::enhanced::EnhancedModel;
use super::sequence::{graph_bethe, GraphLocal, MS3_TOLERANCE};
use super::window::{window_sum, RestrictionWindow};
use crate::error::{invalid, Result};
use crate::info::log_sum_exp;
use crate::model::FactorGraph;
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMode {
    Formula,
    Montecarlo,
}

/// A log-scale estimate. Non-finite values serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mode: EstimateMode,
    pub value: f64,
    /// Formula: the `√n` slack of the counting bound. Monte-Carlo: one
    /// standard error of the sample mean, carried to the log scale.
    pub band: f64,
    pub samples: usize,
    pub seed: u64,
    /// Fraction of draws that pass the acyclicity filter (1 for formulas).
    pub acceptance_rate: f64,
    /// Monte-Carlo only: the same average without the acyclicity filter.
    pub unfiltered: Option<f64>,
}

/// `ln(mean exp(x_i))` over `count` draws, zeros given as `-inf`, with the
/// relative standard error of the mean.
fn log_mean(logs: &[f64], count: usize) -> (f64, f64) {
    let lse = log_sum_exp(logs);
    if lse == f64::NEG_INFINITY || count == 0 {
        return (f64::NEG_INFINITY, f64::INFINITY);
    }
    let n = count as f64;
    let mean = lse - n.ln();
    let scaled: Vec<f64> = logs.iter().map(|x| (x - mean).exp()).collect();
    let var = if count > 1 {
        (scaled.iter().map(|s| (s - 1.0).powi(2)).sum::<f64>() + (count - logs.len()) as f64) / (n - 1.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

/// Estimates `ln E[1{A_{2ℓ+5}} Z_{ℓ,q,δ}(Ḡ) | Ḡ ≅_ℓ G]`.
///
/// Formula mode returns `n B_{G,ℓ}(q)` and rejects `q` that violates the
/// balance condition or belongs to another graph. Monte-Carlo mode draws
/// `samples` graphs from the enhanced model `M(G,ℓ)` (draw `i` uses seed
/// `derive_seed(seed, "first_moment", i)`), enumerates `Z_{ℓ,q,δ}` exactly
/// and averages it over the `(2ℓ+5)`-acyclic draws, counting the others as
/// zero. Graphs with keys outside `q` contribute zero.
pub fn conditional_first_moment(
    g: &FactorGraph,
    window: &RestrictionWindow,
    mode: EstimateMode,
    samples: usize,
    seed: u64,
    budget: usize,
) -> Result<Estimate> {
    let ell = window.ell;
    let local = GraphLocal::new(g, ell);
    match mode {
        EstimateMode::Formula => {
            if !local.hosts(&window.q) {
                return invalid("the window's sequence is not a marginal sequence of this graph");
            }
            let residual = window.q.ms3_residual()?;
            if residual > MS3_TOLERANCE {
                return invalid(format!("sequence violates the balance condition (residual {residual:e})"));
            }
            let n = g.n() as f64;
            Ok(Estimate {
                mode,
                value: n * graph_bethe(&window.q)?,
                band: n.sqrt(),
                samples: 0,
                seed,
                acceptance_rate: 1.0,
                unfiltered: None,
            })
        }
        EstimateMode::Montecarlo => {
            if samples == 0 {
                return invalid("need at least one sample");
            }
            let em = EnhancedModel::from_local(g, &local);
            let girth_floor = 2 * ell + 5;
            let draws = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let h = em.sample(derive_seed(seed, "first_moment", i as u64))?;
                    let acyclic = h.is_l_acyclic(girth_floor);
                    let hl = GraphLocal::new(&h, ell);
                    let log_z = window_sum(&h, &hl, window, budget)?.map_or(f64::NEG_INFINITY, |r| r.log_z);
                    Ok((acyclic, log_z))
                })
                .collect::<Result<Vec<(bool, f64)>>>()?;
            let filtered: Vec<f64> = draws.iter().filter(|d| d.0).map(|d| d.1).collect();
            let all: Vec<f64> = draws.iter().map(|d| d.1).collect();
            let (value, band) = log_mean(&filtered, samples);
            let (unfiltered, _) = log_mean(&all, samples);
            Ok(Estimate {
                mode,
                value,
                band,
                samples,
                seed,
                acceptance_rate: filtered.len() as f64 / samples as f64,
                unfiltered: Some(unfiltered),
            })
        }
    }
}
