//! Experiment runner: TOML specs in, CSV rows and JSON reports out.

pub mod commands;
pub mod output;
pub mod spec;

use std::path::Path;

use anyhow::{bail, ensure, Result};
use gibbs_core::model::gibbs::DEFAULT_BUDGET;

pub use commands::{execute, Outcome};
use output::{Report, CODE_VERSION, REPORT_SCHEMA_VERSION};
pub use spec::{Command, ExperimentSpec};

/// Resolved run settings shared by every row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunContext {
    pub seed: u64,
    pub budget: usize,
}

impl RunContext {
    /// `--seed` overrides the experiment spec seed; one of them is required.
    /// A spec budget must fit under `cap`; without one the budget is
    /// `min(DEFAULT_BUDGET, cap)`.
    pub fn resolve(spec: &ExperimentSpec, seed: Option<u64>, cap: usize) -> Result<Self> {
        let Some(seed) = seed.or(spec.seed) else {
            bail!("no seed: set `seed` in the experiment spec or pass --seed");
        };
        let budget = match spec.budget {
            Some(b) => {
                ensure!(b <= cap, "spec budget {b} exceeds the budget cap {cap}");
                b
            }
            None => DEFAULT_BUDGET.min(cap),
        };
        ensure!(budget > 0, "budget must be positive");
        Ok(Self { seed, budget })
    }
}

pub fn report(spec: &ExperimentSpec, ctx: &RunContext, outcome: &Outcome) -> Report {
    let mut spec = spec.clone();
    spec.seed = Some(ctx.seed);
    Report {
        schema_version: REPORT_SCHEMA_VERSION,
        command: spec.command.name().to_string(),
        id: spec.id.clone(),
        seed: ctx.seed,
        code_version: CODE_VERSION.to_string(),
        spec,
        results: outcome.results.clone(),
    }
}

/// Runs `spec` and writes `<stem>.csv` and `<stem>.json` into `out`.
pub fn run_to_dir(spec: &ExperimentSpec, ctx: &RunContext, out: &Path) -> Result<Outcome> {
    let outcome = execute(spec, ctx)?;
    output::write_all(out, spec.stem(), &outcome.rows, &report(spec, ctx, &outcome))?;
    Ok(outcome)
}
