use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::{ensure, Context, Result};
use gibbs_core::bethe::family_marginal_assignment;
use gibbs_core::local::{local_distribution, CanonicalKey, Family};
use gibbs_core::model::{ising_cycle, partition_function_exact, sample_graph, FactorGraph};
use gibbs_core::moments::{
    conditional_first_moment, planted_samples, EstimateMode, GraphLocal, MarginalSequence, PlantedConfig, RestrictionWindow,
};
use gibbs_core::rng::derive_seed;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{grid, mean_se, or_aborted, row_seed, timed, Outcome};
use crate::output::ResultRow;
use crate::spec::{ExperimentSpec, GraphSpec};
use crate::RunContext;

/// `λ_{G,ℓ}` averaged over `graphs`.
fn mean_lambda(graphs: &[FactorGraph], ell: usize) -> BTreeMap<CanonicalKey, f64> {
    let mut acc: BTreeMap<CanonicalKey, f64> = BTreeMap::new();
    let w = 1.0 / graphs.len() as f64;
    for g in graphs {
        for (k, e) in local_distribution(g, ell).entries {
            *acc.entry(k).or_default() += w * e.prob;
        }
    }
    acc
}

fn tv(a: &BTreeMap<CanonicalKey, f64>, b: &BTreeMap<CanonicalKey, f64>) -> f64 {
    let only_b: f64 = b.iter().filter(|(k, _)| !a.contains_key(*k)).map(|(_, v)| v).sum();
    let shared: f64 = a.iter().map(|(k, v)| (v - b.get(k).copied().unwrap_or(0.0)).abs()).sum();
    0.5 * (shared + only_b)
}

fn log_zs(graphs: &[FactorGraph], budget: usize) -> Result<Vec<f64>> {
    graphs.par_iter().map(|g| Ok(partition_function_exact(g, budget)?.log_z)).collect()
}

/// Planted draws against uniform draws of the same model: averaged local
/// statistics and mean `ln Z`.
pub fn planted_compare(spec: &ExperimentSpec, ctx: &RunContext) -> Result<Outcome> {
    let fam = spec.require_model()?;
    let sizes = spec.require_sizes()?;
    let betas = spec.require_betas()?;
    let samples = spec.require_samples()?;
    let (ell, id) = (spec.ell, spec.id.as_str());
    let mut rows = Vec::new();
    let mut details = Vec::new();
    for (n, beta) in grid(sizes, betas) {
        let seed = row_seed(ctx, spec.command, n, beta);
        let base = ResultRow::new(id, seed, "", 0.0).n(n).beta(beta).ell(ell).samples(samples);
        let (res, ms) = timed(|| -> Result<(Vec<ResultRow>, Value)> {
            let model = Arc::new(fam.model(n, beta)?);
            let config = PlantedConfig {
                ell,
                proposal: spec.planted.proposal,
                batch: spec.planted.batch,
                floor: spec.planted.floor,
                budget: ctx.budget,
                ..Default::default()
            };
            let planted = planted_samples(&model, &config, samples, derive_seed(seed, "planted", 0))?;
            let uniform = (0..samples as u64)
                .into_par_iter()
                .map(|i| Ok(sample_graph(&model, derive_seed(seed, "uniform", i))?))
                .collect::<Result<Vec<_>>>()?;
            let local_tv = tv(&mean_lambda(&planted.graphs, ell), &mean_lambda(&uniform, ell));
            let (zp, sp) = mean_se(&log_zs(&planted.graphs, ctx.budget)?);
            let (zu, su) = mean_se(&log_zs(&uniform, ctx.budget)?);
            let d = &planted.diagnostics;
            let rows = vec![
                base.with("local_tv", local_tv),
                base.with("mean_log_z_planted", zp).band(sp),
                base.with("mean_log_z_uniform", zu).band(su),
                base.with("acceptance_rate", d.acceptance_rate),
                base.with("envelope_restarts", d.restarts as f64),
            ];
            Ok((rows, json!({ "n": n, "beta": beta, "diagnostics": d })))
        });
        match res {
            Ok((r, detail)) => {
                rows.extend(r.into_iter().map(|r| r.wall(ms)));
                details.push(detail);
            }
            Err(e) => rows.extend(or_aborted(Err(e), base)?),
        }
    }
    Ok(Outcome { rows, results: json!({ "proposal": spec.planted.proposal, "rows": details }) })
}

struct Host {
    n: usize,
    beta: f64,
    graph: FactorGraph,
    limit: Family,
    seed: u64,
}

fn hosts(spec: &ExperimentSpec, ctx: &RunContext) -> Result<Vec<Host>> {
    match &spec.graph {
        GraphSpec::File { model, graph } => {
            let betas = spec.require_betas()?;
            ensure!(betas.len() == 1, "a graph file takes exactly one beta for the marginal sequence");
            let graph = super::model::load_graph(model, graph)?;
            let limit = spec.require_model()?.limit(betas[0]);
            Ok(vec![Host { n: graph.n(), beta: betas[0], graph, limit, seed: ctx.seed }])
        }
        GraphSpec::IsingCycle => grid(spec.require_sizes()?, spec.require_betas()?)
            .into_iter()
            .map(|(n, beta)| {
                let limit = spec.model.as_ref().map_or(Family::Ising { d: 2, beta }, |f| f.limit(beta));
                let seed = row_seed(ctx, spec.command, n, beta);
                Ok(Host { n, beta, graph: ising_cycle(n, beta)?, limit, seed })
            })
            .collect(),
        GraphSpec::Sampled => {
            let fam = spec.require_model()?;
            grid(spec.require_sizes()?, spec.require_betas()?)
                .into_iter()
                .map(|(n, beta)| {
                    let seed = row_seed(ctx, spec.command, n, beta);
                    let graph = sample_graph(&Arc::new(fam.model(n, beta)?), derive_seed(seed, "graph", 0))?;
                    Ok(Host { n, beta, graph, limit: fam.limit(beta), seed })
                })
                .collect()
        }
    }
}

/// Formula against Monte-Carlo conditional first moment, with the window
/// centred on the family's marginal assignment.
pub fn first_moment(spec: &ExperimentSpec, ctx: &RunContext) -> Result<Outcome> {
    let delta = spec.delta.context("first-moment needs `delta`")?;
    let samples = spec.require_samples()?;
    let (ell, id) = (spec.ell, spec.id.as_str());
    let mut rows = Vec::new();
    let mut details = Vec::new();
    for h in hosts(spec, ctx)? {
        let base = ResultRow::new(id, h.seed, "", 0.0).n(h.n).beta(h.beta).ell(ell);
        let (res, ms) = timed(|| -> Result<(Vec<ResultRow>, Value)> {
            let p = family_marginal_assignment(&h.limit, ell, spec.m)?;
            let q = MarginalSequence::from_assignment(GraphLocal::new(&h.graph, ell).lambda(), &p)?;
            let window = RestrictionWindow::new(q, delta)?;
            let formula = conditional_first_moment(&h.graph, &window, EstimateMode::Formula, 0, h.seed, ctx.budget)?;
            let mc = conditional_first_moment(
                &h.graph,
                &window,
                EstimateMode::Montecarlo,
                samples,
                derive_seed(h.seed, "montecarlo", 0),
                ctx.budget,
            )?;
            let rows = vec![
                base.with("formula", formula.value).band(formula.band),
                base.with("montecarlo", mc.value).band(mc.band).samples(samples),
                base.with("montecarlo_unfiltered", mc.unfiltered.unwrap_or(f64::NAN)).samples(samples),
                base.with("acceptance_rate", mc.acceptance_rate).samples(samples),
                base.with("gap_per_n", (formula.value - mc.value).abs() / h.n as f64).samples(samples),
            ];
            Ok((rows, json!({ "n": h.n, "beta": h.beta, "delta": delta, "estimates": [formula, mc] })))
        });
        match res {
            Ok((r, detail)) => {
                rows.extend(r.into_iter().map(|r| r.wall(ms)));
                details.push(detail);
            }
            Err(e) => rows.extend(or_aborted(Err(e), base)?),
        }
    }
    Ok(Outcome { rows, results: json!({ "rows": details }) })
}
