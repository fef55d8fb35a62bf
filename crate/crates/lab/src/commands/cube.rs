use std::sync::Arc;

use anyhow::{Context, Result};
use gibbs_core::cube::fixtures::{bernoulli_product, block_measure, two_halves, two_level_mixture};
use gibbs_core::cube::{self, CoordinatePartition, DecomposeConfig, DenseMeasure};
use gibbs_core::model::gibbs::gibbs;
use gibbs_core::model::sample_graph;
use gibbs_core::rng::derive_seed;
use gibbs_core::Alphabet;
use serde_json::json;

use super::{flag, timed, Outcome};
use crate::output::ResultRow;
use crate::spec::{ExperimentSpec, MeasureSpec};
use crate::RunContext;

fn measure(spec: &ExperimentSpec, ctx: &RunContext) -> Result<DenseMeasure> {
    let m = spec.measure.as_ref().context("decompose needs a [measure] table")?;
    Ok(match m {
        MeasureSpec::Block { n, block, p } => block_measure(*n, *block, *p)?,
        MeasureSpec::Mixture { n } => two_level_mixture(*n)?,
        MeasureSpec::Halves { n } => two_halves(*n)?,
        MeasureSpec::Product { n, p } => bernoulli_product(*n, *p)?,
        MeasureSpec::PointMass { sigma } => DenseMeasure::point_mass(Alphabet::binary(), sigma)?,
        MeasureSpec::Gibbs { n, beta } => {
            let model = Arc::new(spec.require_model()?.model(*n, *beta)?);
            let g = sample_graph(&model, derive_seed(ctx.seed, "decompose/graph", 0))?;
            gibbs(&g, ctx.budget)?
        }
        MeasureSpec::File { path } => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
    })
}

pub fn decompose(spec: &ExperimentSpec, ctx: &RunContext) -> Result<Outcome> {
    let eps = spec.require_eps()?;
    let mu = measure(spec, ctx)?;
    let n = mu.n();
    let (d, ms) = timed(|| cube::decompose(&mu, &CoordinatePartition::whole(n), DecomposeConfig::new(eps)));
    let d = d?;
    let held = d.splits.iter().all(|s| s.index_before - s.index_after >= s.bound);
    let base = ResultRow::new(&spec.id, ctx.seed, "", 0.0).n(n).wall(ms);
    let rows = vec![
        base.with("homogeneous", flag(d.report.verdict)),
        base.with("classes", d.partition.len() as f64),
        base.with("states", d.states.len() as f64),
        base.with("good_states", d.report.good_states.len() as f64),
        base.with("iterations", d.iterations as f64),
        base.with("splits", d.splits.len() as f64),
        base.with("index_final", *d.index_trace.last().expect("index trace starts with V0")),
        base.with("drop_bound_held", flag(held)),
    ];
    let masses = d.states.masses(&mu);
    Ok(Outcome { rows, results: json!({ "eps": eps, "n": n, "q": mu.q(), "state_masses": masses, "decomposition": d }) })
}
