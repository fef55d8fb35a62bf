use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::spec::{CloneType, ModelSpec};
use crate::rng;

/// A clone `(node, slot)`.
pub type Port = (usize, usize);

pub const GRAPH_SCHEMA_VERSION: u32 = 1;

/// A type-preserving bijection between variable clones and factor clones.
#[derive(Clone, Debug)]
pub struct FactorGraph {
    model: Arc<ModelSpec>,
    var_ports: Vec<Vec<Port>>,
    factor_ports: Vec<Vec<Port>>,
}

impl PartialEq for FactorGraph {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.model, &other.model) || self.model == other.model) && self.var_ports == other.var_ports
    }
}

/// Graph file: `[variable id, clone, factor id, slot]` per matched pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub schema_version: u32,
    pub pairs: Vec<(String, usize, String, usize)>,
}

impl FactorGraph {
    /// Builds a graph from `partner[x][i] = (a, j)`, checking bijectivity and types.
    pub fn from_var_ports(model: Arc<ModelSpec>, var_ports: Vec<Vec<Port>>) -> Result<Self> {
        model.require_valid()?;
        if var_ports.len() != model.n() {
            return Err(Error::DimensionMismatch(var_ports.len(), model.n()));
        }
        let mut factor_ports: Vec<Vec<Option<Port>>> =
            (0..model.m()).map(|a| vec![None; model.factor_degree(a)]).collect();
        for (x, ports) in var_ports.iter().enumerate() {
            if ports.len() != model.var_degree(x) {
                return invalid(format!("variable {x} has {} matched clones, degree {}", ports.len(), model.var_degree(x)));
            }
            for (i, &(a, j)) in ports.iter().enumerate() {
                let slot = factor_ports
                    .get_mut(a)
                    .and_then(|f| f.get_mut(j))
                    .ok_or_else(|| Error::InvalidArgument(format!("clone ({x},{i}) matched to missing ({a},{j})")))?;
                if slot.is_some() {
                    return invalid(format!("factor clone ({a},{j}) matched twice"));
                }
                let (tv, tf) = (model.variables()[x].clone_types[i], model.factors()[a].clone_types[j]);
                if tv != tf {
                    return invalid(format!("clone ({x},{i}) of type {tv} matched to ({a},{j}) of type {tf}"));
                }
                *slot = Some((x, i));
            }
        }
        let factor_ports = factor_ports
            .into_iter()
            .map(|f| f.into_iter().collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidArgument("some factor clone is unmatched".into()))?;
        Ok(Self { model, var_ports, factor_ports })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn model_arc(&self) -> &Arc<ModelSpec> {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    pub fn m(&self) -> usize {
        self.model.m()
    }

    pub fn q(&self) -> usize {
        self.model.q()
    }

    /// `∂(G, x, i)`.
    pub fn var_port(&self, x: usize, i: usize) -> Port {
        self.var_ports[x][i]
    }

    /// `∂(G, a, j)`.
    pub fn factor_port(&self, a: usize, j: usize) -> Port {
        self.factor_ports[a][j]
    }

    pub fn var_ports(&self, x: usize) -> &[Port] {
        &self.var_ports[x]
    }

    pub fn factor_ports(&self, a: usize) -> &[Port] {
        &self.factor_ports[a]
    }

    /// Variables of factor `a` in slot order.
    pub fn factor_vars(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.factor_ports[a].iter().map(|p| p.0)
    }

    /// Number of variable clones matched differently in `self` and `other`.
    pub fn dist(&self, other: &FactorGraph) -> Result<usize> {
        if !Arc::ptr_eq(&self.model, &other.model) && self.model != other.model {
            return invalid("graphs belong to different models");
        }
        Ok(self
            .var_ports
            .iter()
            .zip(&other.var_ports)
            .map(|(a, b)| a.iter().zip(b).filter(|(p, r)| p != r).count())
            .sum())
    }

    /// Length of the shortest cycle counted in constraint nodes (half the
    /// bipartite length), so a factor hit twice by one variable has length 1
    /// and a parallel pair has length 2. `None` for forests.
    pub fn girth(&self) -> Option<usize> {
        let n = self.n();
        let total = n + self.m();
        let mut best: Option<usize> = None;
        let mut dist = vec![usize::MAX; total];
        let mut parent_edge = vec![usize::MAX; total];
        for root in 0..total {
            dist.iter_mut().for_each(|d| *d = usize::MAX);
            dist[root] = 0;
            parent_edge[root] = usize::MAX;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                if best.is_some_and(|b| dist[u] >= b) {
                    break;
                }
                for (edge, v) in self.incident(u, n) {
                    if edge == parent_edge[u] {
                        continue;
                    }
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        parent_edge[v] = edge;
                        queue.push_back(v);
                    } else {
                        let len = dist[u] + dist[v] + 1;
                        let half = len / 2;
                        best = Some(best.map_or(half, |b| b.min(half)));
                    }
                }
            }
        }
        best
    }

    /// Edges around node `u` (variables first, then factors offset by `n`);
    /// edge id is the variable clone index.
    fn incident(&self, u: usize, n: usize) -> Vec<(usize, usize)> {
        if u < n {
            self.var_ports[u]
                .iter()
                .enumerate()
                .map(|(i, &(a, _))| (self.clone_id(u, i), n + a))
                .collect()
        } else {
            self.factor_ports[u - n].iter().map(|&(x, i)| (self.clone_id(x, i), x)).collect()
        }
    }

    fn clone_id(&self, x: usize, i: usize) -> usize {
        x * self.model.max_degree() + i
    }

    /// No cycle of length at most `l`.
    pub fn is_l_acyclic(&self, l: usize) -> bool {
        self.girth().is_none_or(|g| g > l)
    }

    pub fn to_graph_file(&self) -> GraphFile {
        let mut pairs = Vec::with_capacity(self.model.variable_clones());
        for (x, ports) in self.var_ports.iter().enumerate() {
            for (i, &(a, j)) in ports.iter().enumerate() {
                pairs.push((self.model.variables()[x].id.clone(), i, self.model.factors()[a].id.clone(), j));
            }
        }
        GraphFile { schema_version: GRAPH_SCHEMA_VERSION, pairs }
    }

    pub fn from_graph_file(model: Arc<ModelSpec>, file: &GraphFile) -> Result<Self> {
        if file.schema_version != GRAPH_SCHEMA_VERSION {
            return invalid(format!("unsupported graph schema version {}", file.schema_version));
        }
        let mut var_ports: Vec<Vec<Option<Port>>> = (0..model.n()).map(|x| vec![None; model.var_degree(x)]).collect();
        for (xid, i, aid, j) in &file.pairs {
            let x = model.variable_index(xid).ok_or_else(|| Error::MissingKey(format!("variable {xid}")))?;
            let a = model.factor_index(aid).ok_or_else(|| Error::MissingKey(format!("factor {aid}")))?;
            let slot = var_ports[x]
                .get_mut(*i)
                .ok_or_else(|| Error::InvalidArgument(format!("variable {xid} has no clone {i}")))?;
            if slot.replace((a, *j)).is_some() {
                return invalid(format!("clone ({xid},{i}) listed twice"));
            }
        }
        let var_ports = var_ports
            .into_iter()
            .map(|v| v.into_iter().collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidArgument("graph file leaves a variable clone unmatched".into()))?;
        Self::from_var_ports(model, var_ports)
    }
}

/// `G(M)`: independent uniform bijections per clone type, each drawn from
/// its own stream `matching/type=θ`.
pub fn sample_graph(model: &Arc<ModelSpec>, seed: u64) -> Result<FactorGraph> {
    model.require_valid()?;
    let var_types: Vec<Vec<CloneType>> = model.variables().iter().map(|v| v.clone_types.clone()).collect();
    let factor_types: Vec<Vec<CloneType>> = model.factors().iter().map(|a| a.clone_types.clone()).collect();
    let ports = match_by_type(&var_types, &factor_types, |t| rng::stream(seed, &format!("matching/type={t}")))?;
    FactorGraph::from_var_ports(model.clone(), ports)
}

/// Uniform type-preserving matching for arbitrary clone labels. Types are
/// processed in increasing order; `stream_for` supplies the generator of each.
pub fn match_by_type<T, R, F>(var_types: &[Vec<T>], factor_types: &[Vec<T>], mut stream_for: F) -> Result<Vec<Vec<Port>>>
where
    T: Ord + Clone + std::fmt::Display,
    R: Rng,
    F: FnMut(&T) -> R,
{
    let mut classes: BTreeMap<T, (Vec<Port>, Vec<Port>)> = BTreeMap::new();
    for (x, ts) in var_types.iter().enumerate() {
        for (i, t) in ts.iter().enumerate() {
            classes.entry(t.clone()).or_default().0.push((x, i));
        }
    }
    for (a, ts) in factor_types.iter().enumerate() {
        for (j, t) in ts.iter().enumerate() {
            classes.entry(t.clone()).or_default().1.push((a, j));
        }
    }
    let mut out: Vec<Vec<Port>> = var_types.iter().map(|ts| vec![(0, 0); ts.len()]).collect();
    for (t, (vars, mut facs)) in classes {
        if vars.len() != facs.len() {
            return invalid(format!("type {t}: {} variable clones, {} factor clones", vars.len(), facs.len()));
        }
        let mut r = stream_for(&t);
        facs.shuffle(&mut r);
        for (v, f) in vars.into_iter().zip(facs) {
            out[v.0][v.1] = f;
        }
    }
    Ok(out)
}
