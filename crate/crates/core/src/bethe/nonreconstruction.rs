use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use super::assignment::MarginalAssignment;
use super::tree::boundary_distance;
use crate::error::Result;
use crate::info;
use crate::local::{neighborhood, Node};
use crate::model::{gibbs, FactorGraph};
use crate::rng;

/// Variables at bipartite distance exactly `b` from variable `x`.
fn shell(g: &FactorGraph, x: usize, b: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    let mut fdist = vec![usize::MAX; g.m()];
    dist[x] = 0;
    let mut frontier = vec![x];
    let mut d = 0;
    while d < b && !frontier.is_empty() {
        let mut facs = Vec::new();
        for &y in &frontier {
            for &(a, _) in g.var_ports(y) {
                if fdist[a] == usize::MAX {
                    fdist[a] = d + 1;
                    facs.push(a);
                }
            }
        }
        let mut next = Vec::new();
        for &a in &facs {
            for y in g.factor_vars(a) {
                if dist[y] == usize::MAX {
                    dist[y] = d + 2;
                    next.push(y);
                }
            }
        }
        frontier = next;
        d += 2;
    }
    (0..g.n()).filter(|&y| dist[y] == b).collect()
}

/// `(1/n) Σ_x ⟨TV(⟨σ(x) | ∇_ℓ(G,x)⟩, p_{ℓ,∂^ℓ[G,x]})⟩` with boundary
/// assignments drawn exactly from `μ_G` and conditional marginals by exact
/// enumeration. The same `samples` draws serve every `x`.
pub fn nonreconstruction_estimate(
    g: &FactorGraph,
    p: &MarginalAssignment,
    ell: usize,
    samples: usize,
    seed: u64,
    budget: usize,
) -> Result<f64> {
    let mu = gibbs(g, budget)?;
    let (n, q) = (g.n(), g.q());
    let mut cum = Vec::with_capacity(mu.mass().len());
    let mut acc = 0.0;
    for &m in mu.mass() {
        acc += m;
        cum.push(acc);
    }
    let mut r = rng::stream(seed, "nonreconstruction");
    let draws: Vec<usize> = (0..samples)
        .map(|_| {
            let u: f64 = r.gen::<f64>() * acc;
            cum.partition_point(|&c| c <= u).min(cum.len() - 1)
        })
        .collect();
    let b = boundary_distance(ell);
    let per_x: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|x| -> Result<f64> {
            let target = p.for_template(&neighborhood(g, Node::Variable(x), ell))?;
            let boundary = shell(g, x, b);
            let mut table: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
            let mut sigma = vec![0; n];
            for (idx, m) in mu.support() {
                crate::cube::decode(idx, q, &mut sigma);
                let pattern: Vec<usize> = boundary.iter().map(|&y| sigma[y]).collect();
                table.entry(pattern).or_insert_with(|| vec![0.0; q])[sigma[x]] += m;
            }
            let mut total = 0.0;
            for &idx in &draws {
                crate::cube::decode(idx, q, &mut sigma);
                let pattern: Vec<usize> = boundary.iter().map(|&y| sigma[y]).collect();
                let mut cond = table[&pattern].clone();
                info::normalize(&mut cond)?;
                total += info::tv(&cond, &target)?;
            }
            Ok(total / samples.max(1) as f64)
        })
        .collect::<Result<_>>()?;
    Ok(per_x.iter().sum::<f64>() / n as f64)
}
