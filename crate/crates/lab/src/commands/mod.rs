mod bethe;
mod cube;
mod model;
mod moments;

use std::time::Instant;

use anyhow::Result;
use gibbs_core::rng::derive_seed;
use gibbs_core::Error;
use serde_json::Value;

use crate::output::ResultRow;
use crate::spec::{Command, ExperimentSpec};
use crate::RunContext;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub rows: Vec<ResultRow>,
    /// Command-specific details for the JSON report.
    pub results: Value,
}

pub fn execute(spec: &ExperimentSpec, ctx: &RunContext) -> Result<Outcome> {
    match spec.command {
        Command::VerifyBethe => bethe::verify_bethe(spec, ctx),
        Command::UniquenessScan => bethe::uniqueness_scan(spec, ctx),
        Command::NonreconScan => bethe::nonrecon_scan(spec, ctx),
        Command::Decompose => cube::decompose(spec, ctx),
        Command::PlantedCompare => moments::planted_compare(spec, ctx),
        Command::FirstMoment => moments::first_moment(spec, ctx),
        Command::Concentration => model::concentration(spec, ctx),
        Command::Partition => model::partition(spec, ctx),
    }
}

/// Seed of the `(n, β)` row, independent of the other rows in the grid.
fn row_seed(ctx: &RunContext, command: Command, n: usize, beta: f64) -> u64 {
    derive_seed(ctx.seed, &format!("{}/n={n}/beta={beta}", command.name()), 0)
}

fn grid(sizes: &[usize], betas: &[f64]) -> Vec<(usize, f64)> {
    betas.iter().flat_map(|&b| sizes.iter().map(move |&n| (n, b))).collect()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_millis() as u64)
}

fn is_budget(e: &anyhow::Error) -> bool {
    matches!(e.downcast_ref::<Error>(), Some(Error::Budget { .. }))
}

/// Budget violations abort the row (one `aborted` row with value NaN) but
/// not the run; other errors propagate.
fn or_aborted(res: Result<Vec<ResultRow>>, template: ResultRow) -> Result<Vec<ResultRow>> {
    match res {
        Err(e) if is_budget(&e) => {
            eprintln!("row aborted: {e}");
            Ok(vec![ResultRow { quantity: "aborted".into(), value: f64::NAN, ..template }])
        }
        other => other,
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Mean and standard error of the mean.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Value of `quantity` at each `n` of the rows with inverse temperature `beta`,
/// in the order of the rows.
fn series(rows: &[ResultRow], beta: f64, quantity: &str) -> Vec<(usize, f64)> {
    rows.iter()
        .filter(|r| r.beta == Some(beta) && r.quantity == quantity)
        .filter_map(|r| r.n.map(|n| (n, r.value)))
        .collect()
}
