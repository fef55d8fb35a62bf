use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::error::{invalid, Error, Result};
use crate::model::weight::WeightFunction;

/// Clone types `Θ`. Ising and Potts use `{0}`, k-SAT uses `{-1, +1}`.
pub type CloneType = i32;

/// Default maximum degree `Δ`.
pub const DEFAULT_MAX_DEGREE: usize = 6;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct VariableNode {
    pub id: String,
    pub clone_types: Vec<CloneType>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorNode {
    pub id: String,
    pub weight: usize,
    pub clone_types: Vec<CloneType>,
}

/// A `(Δ, Ω, Ψ, Θ)`-model: nodes, degrees, clone types and weight functions.
///
/// Construction checks only structural consistency (known weights, matching
/// alphabet sizes). The balance equations are reported by [`ModelSpec::validate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct ModelSpec {
    alphabet: Alphabet,
    max_degree: usize,
    weights: Vec<WeightFunction>,
    variables: Vec<VariableNode>,
    factors: Vec<FactorNode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Issue {
    /// `Σ_x d(x) ≠ Σ_a d(a)`.
    DegreeSum { variable_clones: usize, factor_clones: usize },
    /// `|t⁻¹(θ) ∩ C_V| ≠ |t⁻¹(θ) ∩ C_F|`.
    TypeBalance { clone_type: CloneType, variable_clones: usize, factor_clones: usize },
    ArityMismatch { factor: String, degree: usize, arity: usize },
    DegreeBound { node: String, degree: usize, max_degree: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub issues: Vec<Issue>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl ModelSpec {
    pub fn new(
        alphabet: Alphabet,
        max_degree: usize,
        weights: Vec<WeightFunction>,
        variables: Vec<VariableNode>,
        factors: Vec<FactorNode>,
    ) -> Result<Self> {
        if variables.is_empty() {
            return invalid("model needs at least one variable");
        }
        if max_degree == 0 {
            return invalid("max degree must be positive");
        }
        let mut ids = HashMap::new();
        for w in &weights {
            if w.q() != alphabet.len() {
                return invalid(format!("weight {} is over {} symbols, alphabet has {}", w.id(), w.q(), alphabet.len()));
            }
            if ids.insert(w.id().to_string(), ()).is_some() {
                return invalid(format!("duplicate weight id {}", w.id()));
            }
        }
        let mut names = HashMap::new();
        for id in variables.iter().map(|v| &v.id).chain(factors.iter().map(|a| &a.id)) {
            if names.insert(id.clone(), ()).is_some() {
                return invalid(format!("duplicate node id {id}"));
            }
        }
        if let Some(a) = factors.iter().find(|a| a.weight >= weights.len()) {
            return invalid(format!("factor {} refers to weight {} of {}", a.id, a.weight, weights.len()));
        }
        Ok(Self { alphabet, max_degree, weights, variables, factors })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn q(&self) -> usize {
        self.alphabet.len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Model size `#M = |V|`.
    pub fn n(&self) -> usize {
        self.variables.len()
    }

    pub fn m(&self) -> usize {
        self.factors.len()
    }

    pub fn variables(&self) -> &[VariableNode] {
        &self.variables
    }

    pub fn factors(&self) -> &[FactorNode] {
        &self.factors
    }

    pub fn weights(&self) -> &[WeightFunction] {
        &self.weights
    }

    pub fn var_degree(&self, x: usize) -> usize {
        self.variables[x].clone_types.len()
    }

    pub fn factor_degree(&self, a: usize) -> usize {
        self.factors[a].clone_types.len()
    }

    pub fn factor_weight(&self, a: usize) -> &WeightFunction {
        &self.weights[self.factors[a].weight]
    }

    pub fn variable_clones(&self) -> usize {
        self.variables.iter().map(|v| v.clone_types.len()).sum()
    }

    pub fn factor_clones(&self) -> usize {
        self.factors.iter().map(|a| a.clone_types.len()).sum()
    }

    /// Every violated balance, arity or degree condition. Never fails.
    pub fn validate(&self) -> Diagnostics {
        let mut issues = Vec::new();
        let (cv, cf) = (self.variable_clones(), self.factor_clones());
        if cv != cf {
            issues.push(Issue::DegreeSum { variable_clones: cv, factor_clones: cf });
        }
        let mut counts: BTreeMap<CloneType, (usize, usize)> = BTreeMap::new();
        for v in &self.variables {
            for &t in &v.clone_types {
                counts.entry(t).or_default().0 += 1;
            }
        }
        for a in &self.factors {
            for &t in &a.clone_types {
                counts.entry(t).or_default().1 += 1;
            }
        }
        for (t, (nv, nf)) in counts {
            if nv != nf {
                issues.push(Issue::TypeBalance { clone_type: t, variable_clones: nv, factor_clones: nf });
            }
        }
        for a in &self.factors {
            let arity = self.weights[a.weight].arity();
            if arity != a.clone_types.len() {
                issues.push(Issue::ArityMismatch { factor: a.id.clone(), degree: a.clone_types.len(), arity });
            }
        }
        let nodes = self
            .variables
            .iter()
            .map(|v| (&v.id, v.clone_types.len()))
            .chain(self.factors.iter().map(|a| (&a.id, a.clone_types.len())));
        for (id, d) in nodes {
            if d == 0 || d > self.max_degree {
                issues.push(Issue::DegreeBound { node: id.clone(), degree: d, max_degree: self.max_degree });
            }
        }
        Diagnostics { issues }
    }

    pub(crate) fn require_valid(&self) -> Result<()> {
        let d = self.validate();
        if d.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid model: {:?}", d.issues)))
        }
    }

    pub fn variable_index(&self, id: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.id == id)
    }

    pub fn factor_index(&self, id: &str) -> Option<usize> {
        self.factors.iter().position(|a| a.id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    schema_version: u32,
    alphabet: Alphabet,
    max_degree: usize,
    weights: Vec<WeightFunction>,
    variables: Vec<RawVariable>,
    factors: Vec<RawFactor>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariable {
    id: String,
    degree: usize,
    clone_types: Vec<CloneType>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFactor {
    id: String,
    weight_fn_id: String,
    clone_types: Vec<CloneType>,
}

impl TryFrom<RawModel> for ModelSpec {
    type Error = Error;
    fn try_from(r: RawModel) -> Result<Self> {
        if r.schema_version != MODEL_SCHEMA_VERSION {
            return invalid(format!("unsupported model schema version {}", r.schema_version));
        }
        let mut variables = Vec::with_capacity(r.variables.len());
        for v in r.variables {
            if v.degree != v.clone_types.len() {
                return invalid(format!("variable {}: degree {} but {} clone types", v.id, v.degree, v.clone_types.len()));
            }
            variables.push(VariableNode { id: v.id, clone_types: v.clone_types });
        }
        let mut factors = Vec::with_capacity(r.factors.len());
        for a in r.factors {
            let weight = r
                .weights
                .iter()
                .position(|w| w.id() == a.weight_fn_id)
                .ok_or_else(|| Error::MissingKey(format!("weight function {}", a.weight_fn_id)))?;
            factors.push(FactorNode { id: a.id, weight, clone_types: a.clone_types });
        }
        Self::new(r.alphabet, r.max_degree, r.weights, variables, factors)
    }
}

impl From<ModelSpec> for RawModel {
    fn from(m: ModelSpec) -> Self {
        let variables = m
            .variables
            .into_iter()
            .map(|v| RawVariable { id: v.id, degree: v.clone_types.len(), clone_types: v.clone_types })
            .collect();
        let factors = m
            .factors
            .into_iter()
            .map(|a| RawFactor { id: a.id, weight_fn_id: m.weights[a.weight].id().to_string(), clone_types: a.clone_types })
            .collect();
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            alphabet: m.alphabet,
            max_degree: m.max_degree,
            weights: m.weights,
            variables,
            factors,
        }
    }
}
