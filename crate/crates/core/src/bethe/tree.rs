use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::cube::decode;
use crate::error::{invalid, Error, Result};
use crate::local::Template;

/// Values pinned at variable nodes of a template, by node index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub values: BTreeMap<usize, usize>,
}

impl BoundaryCondition {
    pub fn new(nodes: &[usize], values: &[usize]) -> Self {
        Self { values: nodes.iter().copied().zip(values.iter().copied()).collect() }
    }

    fn dense(&self, t: &Template) -> Result<Vec<Option<usize>>> {
        let mut out = vec![None; t.len()];
        for (&v, &s) in &self.values {
            if v >= t.len() || !t.node(v).is_variable() {
                return invalid(format!("clamped node {v} is not a variable of the template"));
            }
            if s >= t.q() {
                return invalid(format!("clamped symbol {s} out of range"));
            }
            out[v] = Some(s);
        }
        Ok(out)
    }
}

/// Shell distance of the boundary for depth `ell`: `ell` or `ell + 1`,
/// whichever is even, so that it consists of variables for a variable root.
pub fn boundary_distance(ell: usize) -> usize {
    ell + ell % 2
}

/// Variables of `t` at distance [`boundary_distance`]`(ell)` from the root.
pub fn boundary_nodes(t: &Template, ell: usize) -> Vec<usize> {
    let b = boundary_distance(ell);
    t.distances()
        .into_iter()
        .enumerate()
        .filter(|&(v, d)| d == b && t.node(v).is_variable())
        .map(|(v, _)| v)
        .collect()
}

/// Children-first processing order of a tree template with each node's
/// parent slot.
pub(crate) struct TreeOrder {
    pub order: Vec<usize>,
    pub parent_slot: Vec<Option<usize>>,
}

pub(crate) fn tree_order(t: &Template) -> Result<TreeOrder> {
    if !t.is_tree() {
        return invalid("template is not a tree");
    }
    let mut parent_slot = vec![None; t.len()];
    let mut seen = vec![false; t.len()];
    let mut order = Vec::with_capacity(t.len());
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &(u, r) in t.node(v).ports.iter().flatten() {
            if !seen[u] {
                seen[u] = true;
                parent_slot[u] = Some(r);
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    Ok(TreeOrder { order, parent_slot })
}

/// Message of node `v` towards its parent (or the root belief when `v` is
/// the root), given the messages of its children.
fn node_message(t: &Template, v: usize, parent: Option<usize>, clamp: &[Option<usize>], msgs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let q = t.q();
    let node = t.node(v);
    let mut out = match t.weight_of(v) {
        None => {
            let mut m: Vec<f64> = (0..q).map(|s| if clamp[v].is_none_or(|c| c == s) { 1.0 } else { 0.0 }).collect();
            for (s, p) in node.ports.iter().enumerate() {
                if let (Some((c, _)), true) = (p, Some(s) != parent) {
                    for (x, y) in m.iter_mut().zip(&msgs[*c]) {
                        *x *= y;
                    }
                }
            }
            m
        }
        Some(w) => {
            let Some(p) = parent else {
                return invalid("root must be a variable");
            };
            let h = node.degree();
            let mut m = vec![0.0; q];
            let mut args = vec![0; h];
            for (idx, &psi) in w.table().iter().enumerate() {
                if psi == 0.0 {
                    continue;
                }
                decode(idx, q, &mut args);
                let mut prod = psi;
                for (s, port) in node.ports.iter().enumerate() {
                    if let (Some((c, _)), true) = (port, s != p) {
                        prod *= msgs[*c][args[s]];
                    }
                }
                m[args[p]] += prod;
            }
            m
        }
    };
    let total: f64 = out.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Infeasible("boundary condition has zero weight".into()));
    }
    out.iter_mut().for_each(|x| *x /= total);
    Ok(out)
}

pub(crate) fn root_marginal_dense(t: &Template, order: &TreeOrder, clamp: &[Option<usize>]) -> Result<Vec<f64>> {
    let mut msgs: Vec<Vec<f64>> = vec![Vec::new(); t.len()];
    for &v in &order.order {
        msgs[v] = node_message(t, v, order.parent_slot[v], clamp, &msgs)?;
    }
    Ok(std::mem::take(&mut msgs[0]))
}

/// Exact Gibbs marginal of the root variable of a finite tree template,
/// dangling clones free, optionally clamping some variables.
pub fn tree_root_marginal(t: &Template, clamp: Option<&BoundaryCondition>) -> Result<Vec<f64>> {
    if !t.root_is_variable() {
        return invalid("root must be a variable");
    }
    let order = tree_order(t)?;
    let dense = match clamp {
        Some(c) => c.dense(t)?,
        None => vec![None; t.len()],
    };
    root_marginal_dense(t, &order, &dense)
}
