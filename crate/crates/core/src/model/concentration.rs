use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::gibbs::partition_function_exact;
use crate::model::graph::sample_graph;
use crate::model::spec::ModelSpec;
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub mean_log_z: f64,
    /// Unbiased sample variance of `ln Z`.
    pub variance: f64,
    pub variance_over_n: f64,
    pub variance_over_n2: f64,
}

/// Samples `ln Z(G)` over independent configuration-model graphs. Graph `i`
/// uses seed `derive_seed(seed, "concentration", i)`.
pub fn concentration_probe(model: &Arc<ModelSpec>, samples: usize, seed: u64, budget: usize) -> Result<ConcentrationReport> {
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let logs = (0..samples)
        .into_par_iter()
        .map(|i| {
            let g = sample_graph(model, derive_seed(seed, "concentration", i as u64))?;
            Ok(partition_function_exact(&g, budget)?.log_z)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = model.n();
    let mean = logs.iter().sum::<f64>() / samples as f64;
    let variance = if samples > 1 {
        logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples - 1) as f64
    } else {
        0.0
    };
    let nf = n as f64;
    Ok(ConcentrationReport {
        n,
        samples,
        seed,
        mean_log_z: mean,
        variance,
        variance_over_n: variance / nf,
        variance_over_n2: variance / (nf * nf),
    })
}
