use std::sync::Arc;

use anyhow::{ensure, Context, Result};
use gibbs_core::model::{concentration_probe, ising_cycle, partition_function_exact, sample_graph, FactorGraph, GraphFile, ModelSpec};
use gibbs_core::rng::derive_seed;
use rayon::prelude::*;
use serde_json::json;

use super::bethe::trend_rows;
use super::{grid, mean_se, or_aborted, row_seed, timed, Outcome};
use crate::output::ResultRow;
use crate::spec::{ExperimentSpec, GraphSpec};
use crate::RunContext;

pub fn concentration(spec: &ExperimentSpec, ctx: &RunContext) -> Result<Outcome> {
    let fam = spec.require_model()?;
    let sizes = spec.require_sizes()?;
    let betas = spec.require_betas()?;
    let samples = spec.require_samples()?;
    let id = spec.id.as_str();
    let blocks: Vec<Vec<ResultRow>> = grid(sizes, betas)
        .par_iter()
        .map(|&(n, beta)| {
            let seed = row_seed(ctx, spec.command, n, beta);
            let base = ResultRow::new(id, seed, "", 0.0).n(n).beta(beta).samples(samples);
            let (res, ms) = timed(|| -> Result<Vec<ResultRow>> {
                let r = concentration_probe(&Arc::new(fam.model(n, beta)?), samples, seed, ctx.budget)?;
                Ok(vec![
                    base.with("mean_log_z", r.mean_log_z).band((r.variance / samples as f64).sqrt()),
                    base.with("variance", r.variance),
                    base.with("variance_over_n", r.variance_over_n),
                    base.with("variance_over_n2", r.variance_over_n2),
                ])
            });
            or_aborted(res, base.clone()).map(|rows| rows.into_iter().map(|r| r.wall(ms)).collect())
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<ResultRow> = blocks.into_iter().flatten().collect();
    let template = ResultRow::new(id, ctx.seed, "", 0.0);
    rows.extend(trend_rows(&rows, &template, betas, "variance_over_n2", false, true));
    Ok(Outcome { rows, results: json!({}) })
}

pub(super) fn load_graph(model: &std::path::Path, graph: &std::path::Path) -> Result<FactorGraph> {
    let spec = std::fs::read_to_string(model).with_context(|| format!("reading {}", model.display()))?;
    let spec = Arc::new(ModelSpec::from_json(&spec).with_context(|| format!("parsing {}", model.display()))?);
    let diagnostics = spec.validate();
    ensure!(diagnostics.is_valid(), "invalid model {}: {:?}", model.display(), diagnostics.issues);
    let file = std::fs::read_to_string(graph).with_context(|| format!("reading {}", graph.display()))?;
    let file: GraphFile = serde_json::from_str(&file).with_context(|| format!("parsing {}", graph.display()))?;
    Ok(FactorGraph::from_graph_file(spec, &file)?)
}

/// `ln((2 cosh β)^n + (2 sinh β)^n)`.
fn cycle_closed_form(n: usize, beta: f64) -> f64 {
    let c = (2.0 * beta.cosh()).ln() * n as f64;
    let ratio = beta.tanh().powi(n as i32);
    c + ratio.ln_1p()
}

pub fn partition(spec: &ExperimentSpec, ctx: &RunContext) -> Result<Outcome> {
    let id = spec.id.as_str();
    match &spec.graph {
        GraphSpec::File { model, graph } => {
            let g = load_graph(model, graph)?;
            let base = ResultRow::new(id, ctx.seed, "", 0.0).n(g.n());
            let (z, ms) = timed(|| partition_function_exact(&g, ctx.budget));
            let rows = match z {
                Ok(z) => vec![base.with("log_z", z.log_z).wall(ms)],
                Err(e) => or_aborted(Err(e.into()), base)?,
            };
            let results = json!({ "n": g.n(), "m": g.m(), "log_z": rows[0].value });
            Ok(Outcome { rows, results })
        }
        GraphSpec::IsingCycle => {
            let sizes = spec.require_sizes()?;
            let betas = spec.require_betas()?;
            let blocks: Vec<Vec<ResultRow>> = grid(sizes, betas)
                .par_iter()
                .map(|&(n, beta)| {
                    let base = ResultRow::new(id, ctx.seed, "", 0.0).n(n).beta(beta);
                    let (res, ms) = timed(|| -> Result<Vec<ResultRow>> {
                        let z = partition_function_exact(&ising_cycle(n, beta)?, ctx.budget)?;
                        let exact = cycle_closed_form(n, beta);
                        Ok(vec![
                            base.with("log_z", z.log_z),
                            base.with("closed_form_log_z", exact),
                            base.with("relative_error", ((z.log_z - exact).exp_m1()).abs()),
                        ])
                    });
                    or_aborted(res, base.clone()).map(|rows| rows.into_iter().map(|r| r.wall(ms)).collect())
                })
                .collect::<Result<_>>()?;
            Ok(Outcome { rows: blocks.into_iter().flatten().collect(), results: json!({}) })
        }
        GraphSpec::Sampled => {
            let fam = spec.require_model()?;
            let sizes = spec.require_sizes()?;
            let betas = spec.require_betas()?;
            let blocks: Vec<Vec<ResultRow>> = grid(sizes, betas)
                .par_iter()
                .map(|&(n, beta)| {
                    let seed = row_seed(ctx, spec.command, n, beta);
                    let base = ResultRow::new(id, seed, "", 0.0).n(n).beta(beta).samples(spec.graphs);
                    let (res, ms) = timed(|| -> Result<Vec<ResultRow>> {
                        let model = Arc::new(fam.model(n, beta)?);
                        let logs = (0..spec.graphs as u64)
                            .map(|i| Ok(partition_function_exact(&sample_graph(&model, derive_seed(seed, "graph", i))?, ctx.budget)?.log_z))
                            .collect::<Result<Vec<f64>>>()?;
                        let (mean, se) = mean_se(&logs);
                        Ok(vec![base.with("mean_log_z", mean).band(se)])
                    });
                    or_aborted(res, base.clone()).map(|rows| rows.into_iter().map(|r| r.wall(ms)).collect())
                })
                .collect::<Result<_>>()?;
            Ok(Outcome { rows: blocks.into_iter().flatten().collect(), results: json!({}) })
        }
    }
}
