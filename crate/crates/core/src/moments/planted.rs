use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::enhanced::EnhancedModel;
use super::sequence::GraphLocal;
use crate::error::{invalid, Error, Result};
use crate::model::gibbs::{partition_function_exact, DEFAULT_BUDGET};
use crate::model::graph::sample_graph;
use crate::model::{FactorGraph, ModelSpec};
use crate::rng::{derive_seed, stream};

/// Envelope comparisons allow this much rounding in `ln Z`.
const ENVELOPE_SLACK: f64 = 1e-12;

/// Where second-stage proposals come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposal {
    /// Uniform draws from the enhanced model `M(Ḡ,ℓ)`. Fast, but the tilt is
    /// normalized over the part of the class reachable from `Ḡ`.
    #[default]
    Enhanced,
    /// Uniform draws from `G(M)` kept when `≅_ℓ Ḡ`. Exact for the planted
    /// law; slow when the class of `Ḡ` is small.
    Class,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub ell: usize,
    pub proposal: Proposal,
    /// Graphs used to set the initial envelope `max ln Z`.
    pub batch: usize,
    /// Minimum acceptance rate of the `Z`-rejection step.
    pub floor: f64,
    pub budget: usize,
    /// Envelope doublings tolerated before giving up.
    pub max_restarts: usize,
    /// Proposals per draw, class rejections included, before giving up.
    pub max_proposals: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            ell: 0,
            proposal: Proposal::Enhanced,
            batch: 64,
            floor: 1e-3,
            budget: DEFAULT_BUDGET,
            max_restarts: 16,
            max_proposals: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantedDiagnostics {
    pub draws: usize,
    /// Second-stage proposals in the final epoch.
    pub proposals: u64,
    /// Proposals outside the local class of their base graph.
    pub class_rejections: u64,
    /// Accepted over in-class proposals.
    pub acceptance_rate: f64,
    pub log_envelope: f64,
    /// Proposals with `ln Z` above the envelope, over all epochs.
    pub envelope_violations: usize,
    pub restarts: usize,
    /// Draws whose base graph has a singleton enhanced model.
    pub forced: usize,
}

#[derive(Clone, Debug)]
pub struct PlantedDraws {
    pub graphs: Vec<FactorGraph>,
    pub diagnostics: PlantedDiagnostics,
}

enum Outcome {
    Accepted { graph: FactorGraph, proposals: u64, class_rejections: u64, forced: bool },
    Violation { log_z: f64 },
}

fn log_z(g: &FactorGraph, budget: usize) -> Result<f64> {
    Ok(partition_function_exact(g, budget)?.log_z)
}

/// Proposes until a graph in the local class of `Ḡ` passes the
/// `Z / envelope` test.
fn draw(base: &FactorGraph, config: &PlantedConfig, log_env: f64, seed: u64) -> Result<Outcome> {
    let base_local = GraphLocal::new(base, config.ell);
    let em = EnhancedModel::from_local(base, &base_local);
    let forced = em.is_forced();
    let skip_check = forced && config.proposal == Proposal::Enhanced;
    let cap = (100.0 / config.floor).ceil() as u64;
    let mut rng = stream(seed, "accept");
    let (mut proposals, mut class_rejections) = (0u64, 0u64);
    loop {
        if proposals - class_rejections >= cap {
            return Err(Error::LowAcceptance { rate: 1.0 / cap as f64, floor: config.floor });
        }
        if proposals >= config.max_proposals {
            return Err(Error::LowAcceptance { rate: 1.0 / proposals as f64, floor: config.floor });
        }
        let s = derive_seed(seed, "proposal", proposals);
        let h = match config.proposal {
            Proposal::Enhanced => em.sample(s)?,
            // given its class, Ḡ is itself a uniform member of it
            Proposal::Class if proposals == 0 => base.clone(),
            Proposal::Class => sample_graph(base.model_arc(), s)?,
        };
        proposals += 1;
        if !skip_check && !base_local.matches(&h) {
            class_rejections += 1;
            continue;
        }
        let lz = log_z(&h, config.budget)?;
        if lz > log_env + ENVELOPE_SLACK {
            return Ok(Outcome::Violation { log_z: lz });
        }
        let u: f64 = rng.gen();
        if u.ln() < lz - log_env {
            return Ok(Outcome::Accepted { graph: h, proposals, class_rejections, forced });
        }
    }
}

fn run<B>(base_for: B, config: &PlantedConfig, count: usize, seed: u64) -> Result<PlantedDraws>
where
    B: Fn(u64) -> Result<FactorGraph> + Sync,
{
    if !(config.floor > 0.0 && config.floor <= 1.0) {
        return invalid(format!("acceptance floor {} must lie in (0, 1]", config.floor));
    }
    if config.batch == 0 {
        return invalid("envelope batch must be positive");
    }
    let envelope: Vec<f64> = (0..config.batch)
        .into_par_iter()
        .map(|b| {
            let s = derive_seed(seed, "planted/envelope", b as u64);
            let base = base_for(s)?;
            let h = EnhancedModel::new(&base, config.ell).sample(derive_seed(s, "proposal", 0))?;
            Ok(log_z(&base, config.budget)?.max(log_z(&h, config.budget)?))
        })
        .collect::<Result<_>>()?;
    let mut log_env = envelope.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let mut violations = 0;
    for epoch in 0..=config.max_restarts {
        let name = format!("planted/epoch{epoch}");
        let outcomes: Vec<Outcome> = (0..count)
            .into_par_iter()
            .map(|i| {
                let s = derive_seed(seed, &name, i as u64);
                draw(&base_for(derive_seed(s, "base", 0))?, config, log_env, s)
            })
            .collect::<Result<_>>()?;
        let worst = outcomes
            .iter()
            .filter_map(|o| match o {
                Outcome::Violation { log_z } => Some(*log_z),
                Outcome::Accepted { .. } => None,
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > f64::NEG_INFINITY {
            violations += outcomes.iter().filter(|o| matches!(o, Outcome::Violation { .. })).count();
            while log_env + ENVELOPE_SLACK < worst {
                log_env += std::f64::consts::LN_2;
            }
            continue;
        }
        let mut diag = PlantedDiagnostics {
            draws: count,
            log_envelope: log_env,
            envelope_violations: violations,
            restarts: epoch,
            ..Default::default()
        };
        let mut graphs = Vec::with_capacity(count);
        for o in outcomes {
            if let Outcome::Accepted { graph, proposals, class_rejections, forced } = o {
                diag.proposals += proposals;
                diag.class_rejections += class_rejections;
                diag.forced += usize::from(forced);
                graphs.push(graph);
            }
        }
        let in_class = diag.proposals - diag.class_rejections;
        diag.acceptance_rate = if in_class == 0 { 1.0 } else { count as f64 / in_class as f64 };
        if diag.acceptance_rate < config.floor {
            return Err(Error::LowAcceptance { rate: diag.acceptance_rate, floor: config.floor });
        }
        return Ok(PlantedDraws { graphs, diagnostics: diag });
    }
    Err(Error::InvalidState(format!(
        "envelope still violated after {} restarts; increase the batch",
        config.max_restarts
    )))
}

/// `count` draws from the planted model: `Ḡ` uniform in `G(M)`, then `G′`
/// in the local class of `Ḡ` tilted by `Z(G′)` through rejection against an
/// envelope, with proposals as chosen by [`Proposal`]. An envelope
/// violation doubles the envelope and restarts every draw with fresh
/// streams (`planted/epoch{e}`), so the returned draws are exact.
pub fn planted_samples(model: &Arc<ModelSpec>, config: &PlantedConfig, count: usize, seed: u64) -> Result<PlantedDraws> {
    model.require_valid()?;
    run(|s| sample_graph(model, s), config, count, seed)
}

/// The second stage alone with a fixed base graph `Ḡ`.
pub fn planted_within(base: &FactorGraph, config: &PlantedConfig, count: usize, seed: u64) -> Result<PlantedDraws> {
    base.model().require_valid()?;
    run(|_| Ok(base.clone()), config, count, seed)
}
