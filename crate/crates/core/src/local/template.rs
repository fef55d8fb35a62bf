use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{CloneType, FactorGraph, WeightFunction};

/// A node of a factor graph: variable `x` or factor `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    Variable(usize),
    Factor(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TNode {
    /// Index into [`Template::weights`]; `None` for variables.
    pub weight: Option<usize>,
    pub types: Vec<CloneType>,
    /// Partner `(node, slot)` inside the template, `None` for a clone whose
    /// partner lies beyond the truncation depth.
    pub ports: Vec<Option<(usize, usize)>>,
}

impl TNode {
    pub fn is_variable(&self) -> bool {
        self.weight.is_none()
    }

    pub fn degree(&self) -> usize {
        self.types.len()
    }
}

/// A rooted, ordered factor graph (node 0 is the root). Nodes on the
/// truncation boundary keep their degree, clone types and weight, with
/// dangling clones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTemplate")]
pub struct Template {
    q: usize,
    weights: Vec<WeightFunction>,
    nodes: Vec<TNode>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemplate {
    q: usize,
    weights: Vec<WeightFunction>,
    nodes: Vec<TNode>,
}

impl TryFrom<RawTemplate> for Template {
    type Error = crate::Error;
    fn try_from(r: RawTemplate) -> Result<Self> {
        Self::new(r.q, r.weights, r.nodes)
    }
}

impl Template {
    pub(crate) fn from_parts(q: usize, weights: Vec<WeightFunction>, nodes: Vec<TNode>) -> Self {
        Self { q, weights, nodes }
    }

    pub fn new(q: usize, weights: Vec<WeightFunction>, nodes: Vec<TNode>) -> Result<Self> {
        if nodes.is_empty() {
            return invalid("template needs a root");
        }
        for (v, node) in nodes.iter().enumerate() {
            if node.types.len() != node.ports.len() {
                return invalid(format!("node {v}: {} types, {} ports", node.types.len(), node.ports.len()));
            }
            if let Some(w) = node.weight {
                let wf = weights.get(w).ok_or_else(|| crate::Error::InvalidArgument(format!("node {v}: weight {w} missing")))?;
                if wf.arity() != node.degree() || wf.q() != q {
                    return invalid(format!("node {v}: weight {} does not fit degree {}", wf.id(), node.degree()));
                }
            }
            for (s, p) in node.ports.iter().enumerate() {
                let Some((u, r)) = *p else { continue };
                let back = nodes.get(u).and_then(|n| n.ports.get(r)).copied().flatten();
                if back != Some((v, s)) {
                    return invalid(format!("port ({v},{s}) -> ({u},{r}) is not reciprocated"));
                }
                if nodes[u].is_variable() == node.is_variable() {
                    return invalid(format!("port ({v},{s}) joins two nodes of the same kind"));
                }
                if nodes[u].types[r] != node.types[s] {
                    return invalid(format!("port ({v},{s}) joins clones of different types"));
                }
            }
        }
        let t = Self { q, weights, nodes };
        if t.distances().contains(&usize::MAX) {
            return invalid("template is not connected");
        }
        Ok(t)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn nodes(&self) -> &[TNode] {
        &self.nodes
    }

    pub fn node(&self, v: usize) -> &TNode {
        &self.nodes[v]
    }

    pub fn weights(&self) -> &[WeightFunction] {
        &self.weights
    }

    pub fn weight_of(&self, v: usize) -> Option<&WeightFunction> {
        self.nodes[v].weight.map(|w| &self.weights[w])
    }

    pub fn root(&self) -> &TNode {
        &self.nodes[0]
    }

    pub fn root_is_variable(&self) -> bool {
        self.nodes[0].is_variable()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bipartite distance of every node from the root.
    pub fn distances(&self) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.nodes.len()];
        dist[0] = 0;
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            for &(u, _) in self.nodes[v].ports.iter().flatten() {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    pub fn depth(&self) -> usize {
        self.distances().into_iter().max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.ports.iter().flatten().count()).sum::<usize>() / 2
    }

    pub fn is_tree(&self) -> bool {
        self.edge_count() + 1 == self.nodes.len()
    }

    pub fn variable_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&v| self.nodes[v].is_variable())
    }

    /// `∂^depth`: keeps nodes within `depth` of the root; edges to removed
    /// nodes become dangling clones.
    pub fn truncate(&self, depth: usize) -> Template {
        let dist = self.distances();
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut kept = 0;
        for (v, &d) in dist.iter().enumerate() {
            if d <= depth {
                map[v] = kept;
                kept += 1;
            }
        }
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(v, _)| map[*v] != usize::MAX)
            .map(|(_, n)| TNode {
                weight: n.weight,
                types: n.types.clone(),
                ports: n
                    .ports
                    .iter()
                    .map(|p| p.and_then(|(u, r)| (map[u] != usize::MAX).then_some((map[u], r))))
                    .collect(),
            })
            .collect();
        Template { q: self.q, weights: self.weights.clone(), nodes }
    }

    /// `T↑j`: the same template rooted at the partner of root slot `j`.
    /// Returns the new template and the slot of the new root that leads back
    /// to the old root, so `reroot(reroot(T, j).0, back)` restores `T`.
    pub fn reroot(&self, j: usize) -> Result<(Template, usize)> {
        let root = &self.nodes[0];
        if j >= root.degree() {
            return invalid(format!("slot {j} out of range for root degree {}", root.degree()));
        }
        let Some((r, back)) = root.ports[j] else {
            return invalid(format!("root slot {j} is dangling"));
        };
        let order: Vec<usize> = std::iter::once(r).chain((0..self.nodes.len()).filter(|&v| v != r)).collect();
        Ok((self.permuted(&order), back))
    }

    /// Nodes rearranged so that new node `i` is old node `order[i]`.
    pub(crate) fn permuted(&self, order: &[usize]) -> Template {
        let mut map = vec![0; self.nodes.len()];
        for (i, &v) in order.iter().enumerate() {
            map[v] = i;
        }
        let nodes = order
            .iter()
            .map(|&v| {
                let n = &self.nodes[v];
                TNode {
                    weight: n.weight,
                    types: n.types.clone(),
                    ports: n.ports.iter().map(|p| p.map(|(u, r)| (map[u], r))).collect(),
                }
            })
            .collect();
        Template { q: self.q, weights: self.weights.clone(), nodes }
    }

    /// Reorders the clones of node `v` so that new slot `i` is old slot `perm[i]`.
    pub(crate) fn permute_slots(&mut self, v: usize, perm: &[usize]) {
        let old = self.nodes[v].clone();
        let node = &mut self.nodes[v];
        node.types = perm.iter().map(|&s| old.types[s]).collect();
        node.ports = perm.iter().map(|&s| old.ports[s]).collect();
        for (i, &s) in perm.iter().enumerate() {
            if let Some((u, r)) = old.ports[s] {
                self.nodes[u].ports[r] = Some((v, i));
            }
        }
    }
}

/// `∂^depth[G, root]`: the ball of bipartite radius `depth`. Cycles inside
/// the ball are kept; see [`Template::is_tree`].
pub fn neighborhood(g: &FactorGraph, root: Node, depth: usize) -> Template {
    let (n, m) = (g.n(), g.m());
    let flat = |v: Node| match v {
        Node::Variable(x) => x,
        Node::Factor(a) => n + a,
    };
    let mut index = vec![usize::MAX; n + m];
    let mut order: Vec<(Node, usize)> = vec![(root, 0)];
    index[flat(root)] = 0;
    let mut head = 0;
    while head < order.len() {
        let (v, d) = order[head];
        head += 1;
        if d == depth {
            continue;
        }
        let partners: Vec<Node> = match v {
            Node::Variable(x) => g.var_ports(x).iter().map(|p| Node::Factor(p.0)).collect(),
            Node::Factor(a) => g.factor_ports(a).iter().map(|p| Node::Variable(p.0)).collect(),
        };
        for u in partners {
            if index[flat(u)] == usize::MAX {
                index[flat(u)] = order.len();
                order.push((u, d + 1));
            }
        }
    }
    let model = g.model();
    let mut weight_map = vec![usize::MAX; model.weights().len()];
    let mut weights = Vec::new();
    let mut nodes = Vec::with_capacity(order.len());
    for &(v, _) in &order {
        let node = match v {
            Node::Variable(x) => TNode {
                weight: None,
                types: model.variables()[x].clone_types.clone(),
                ports: g
                    .var_ports(x)
                    .iter()
                    .map(|&(a, j)| {
                        let i = index[n + a];
                        (i != usize::MAX).then_some((i, j))
                    })
                    .collect(),
            },
            Node::Factor(a) => {
                let w = model.factors()[a].weight;
                if weight_map[w] == usize::MAX {
                    weight_map[w] = weights.len();
                    weights.push(model.weights()[w].clone());
                }
                TNode {
                    weight: Some(weight_map[w]),
                    types: model.factors()[a].clone_types.clone(),
                    ports: g
                        .factor_ports(a)
                        .iter()
                        .map(|&(x, i)| {
                            let k = index[x];
                            (k != usize::MAX).then_some((k, i))
                        })
                        .collect(),
                }
            }
        };
        nodes.push(node);
    }
    Template { q: g.q(), weights, nodes }
}
