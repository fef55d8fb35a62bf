//! Experiment spec files (TOML). Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use gibbs_core::local::Family;
use gibbs_core::model::{ising, ksat, ksat_uniform_profile, potts, ModelSpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyBethe,
    Decompose,
    UniquenessScan,
    NonreconScan,
    PlantedCompare,
    Concentration,
    FirstMoment,
    Partition,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyBethe => "verify-bethe",
            Command::Decompose => "decompose",
            Command::UniquenessScan => "uniqueness-scan",
            Command::NonreconScan => "nonrecon-scan",
            Command::PlantedCompare => "planted-compare",
            Command::Concentration => "concentration",
            Command::FirstMoment => "first-moment",
            Command::Partition => "partition",
        }
    }
}

/// A model family; `n` comes from `sizes` and `β` from `betas`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelFamily {
    Ising { d: usize },
    Potts { d: usize, k: usize },
    /// Every variable has total degree `d0`, split as evenly as possible
    /// between positive and negative occurrences.
    Ksat { k: usize, d0: usize },
}

impl ModelFamily {
    pub fn model(&self, n: usize, beta: f64) -> Result<ModelSpec> {
        Ok(match *self {
            ModelFamily::Ising { d } => ising(n, d, beta)?,
            ModelFamily::Potts { d, k } => potts(n, d, k, beta)?,
            ModelFamily::Ksat { k, d0 } => ksat(n, k, beta, &ksat_uniform_profile(n, d0))?,
        })
    }

    pub fn limit(&self, beta: f64) -> Family {
        match *self {
            ModelFamily::Ising { d } => Family::Ising { d, beta },
            ModelFamily::Potts { d, k } => Family::Potts { d, k, beta },
            ModelFamily::Ksat { k, d0 } => Family::Ksat { k, beta, profile: vec![((d0.div_ceil(2), d0 / 2), 1.0)] },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SearchSpec {
    #[default]
    Exhaustive,
    Sampled { samples: usize },
}

/// Measures for `decompose`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// Blocks of `block` coordinates sharing one `Be(p)` value.
    Block { n: usize, block: usize, p: f64 },
    /// Equal mixture of `Be(1/3)^n` and `Be(2/3)^n`.
    Mixture { n: usize },
    /// `Be(1/2)` on the first half of the coordinates, `Be(1/3)` on the rest.
    Halves { n: usize },
    Product { n: usize, p: f64 },
    PointMass { sigma: Vec<usize> },
    /// Gibbs measure of a sampled graph from `model` at `n`, `beta`.
    Gibbs { n: usize, beta: f64 },
    /// A dense measure in JSON (`alphabet`, `n`, `mass`).
    File { path: PathBuf },
}

/// Graphs for `partition` and `first-moment`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    /// Configuration-model graphs of `model`.
    #[default]
    Sampled,
    /// Ising cycle of every size in `sizes`.
    IsingCycle,
    /// A model spec JSON and a graph JSON; `sizes` and `betas` are ignored.
    File { model: PathBuf, graph: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PlantedSpec {
    #[serde(default)]
    pub proposal: gibbs_core::moments::Proposal,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self { proposal: Default::default(), batch: default_batch(), floor: default_floor() }
    }
}

fn default_batch() -> usize {
    64
}

fn default_floor() -> f64 {
    1e-3
}

fn default_m() -> usize {
    1
}

fn default_graphs() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct OutputSpec {
    /// File stem for `<stem>.csv` and `<stem>.json`; defaults to the id.
    pub stem: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: Command,
    pub id: String,
    /// Mandatory unless given with `--seed`.
    pub seed: Option<u64>,
    pub model: Option<ModelFamily>,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub ell: usize,
    /// Depth extension used to build marginal assignments.
    #[serde(default = "default_m")]
    pub m: usize,
    pub samples: Option<usize>,
    /// Graphs per row where a command averages over graphs.
    #[serde(default = "default_graphs")]
    pub graphs: usize,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    /// Enumeration budget; must not exceed `--budget-cap`.
    pub budget: Option<usize>,
    #[serde(default)]
    pub search: SearchSpec,
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub graph: GraphSpec,
    #[serde(default)]
    pub planted: PlantedSpec,
    pub output: Option<OutputSpec>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.check()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in spec {}", path.display()))
    }

    fn check(&self) -> Result<()> {
        ensure!(!self.id.is_empty(), "id must not be empty");
        ensure!(
            self.id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)),
            "id {:?} may only use ASCII letters, digits, '-', '_' and '.'",
            self.id
        );
        if let Some(stem) = self.output.as_ref().and_then(|o| o.stem.as_ref()) {
            ensure!(!stem.is_empty() && !stem.contains(['/', '\\']), "output stem {stem:?} must be a plain file name");
        }
        if let Some(b) = self.betas.iter().find(|b| !b.is_finite() || **b < 0.0) {
            bail!("beta {b} must be finite and nonnegative");
        }
        if let Some(e) = self.eps {
            ensure!(e > 0.0 && e.is_finite(), "eps {e} must be positive");
        }
        if let Some(d) = self.delta {
            ensure!(d >= 0.0 && d.is_finite(), "delta {d} must be nonnegative");
        }
        ensure!(self.graphs > 0, "graphs must be positive");
        Ok(())
    }

    pub fn stem(&self) -> &str {
        self.output.as_ref().and_then(|o| o.stem.as_deref()).unwrap_or(&self.id)
    }

    pub fn require_model(&self) -> Result<&ModelFamily> {
        self.model.as_ref().with_context(|| format!("{} needs a [model] table", self.command.name()))
    }

    pub fn require_sizes(&self) -> Result<&[usize]> {
        ensure!(!self.sizes.is_empty(), "{} needs a nonempty `sizes` list", self.command.name());
        Ok(&self.sizes)
    }

    pub fn require_betas(&self) -> Result<&[f64]> {
        ensure!(!self.betas.is_empty(), "{} needs a nonempty `betas` list", self.command.name());
        Ok(&self.betas)
    }

    pub fn require_samples(&self) -> Result<usize> {
        match self.samples {
            Some(s) if s > 0 => Ok(s),
            _ => bail!("{} needs `samples` > 0", self.command.name()),
        }
    }

    pub fn require_eps(&self) -> Result<f64> {
        self.eps.with_context(|| format!("{} needs `eps`", self.command.name()))
    }
}
