use std::sync::Arc;

use crate::error::Result;
use crate::model::graph::FactorGraph;
use crate::model::spec::{FactorNode, ModelSpec};
use crate::model::weight::WeightFunction;

/// `ψ^⊗((ω₁,ω₁'),...,(ω_h,ω_h')) = ψ(ω₁,...,ω_h)·ψ(ω₁',...,ω_h')` over `Ω×Ω`,
/// with `(a,b)` at index `a·q + b`.
pub fn tensor_weight(w: &WeightFunction) -> Result<WeightFunction> {
    let (q, h) = (w.q(), w.arity());
    let qq = q * q;
    let size = qq.pow(h as u32);
    let mut table = Vec::with_capacity(size);
    let mut first = vec![0; h];
    let mut second = vec![0; h];
    let mut pair = vec![0; h];
    for i in 0..size {
        crate::cube::decode(i, qq, &mut pair);
        for j in 0..h {
            first[j] = pair[j] / q;
            second[j] = pair[j] % q;
        }
        table.push(w.value(&first) * w.value(&second));
    }
    WeightFunction::new(format!("tensor({})", w.id()), qq, h, table)
}

/// `G^⊗`: same matching, pair alphabet, tensorized weights.
pub fn tensor_graph(g: &FactorGraph) -> Result<FactorGraph> {
    let m = g.model();
    let weights = m.weights().iter().map(tensor_weight).collect::<Result<Vec<_>>>()?;
    let factors: Vec<FactorNode> = m.factors().to_vec();
    let model = ModelSpec::new(m.alphabet().pairs(), m.max_degree(), weights, m.variables().to_vec(), factors)?;
    let ports = (0..g.n()).map(|x| g.var_ports(x).to_vec()).collect();
    FactorGraph::from_var_ports(Arc::new(model), ports)
}

/// `σ ⊗ τ` as an assignment over `Ω×Ω`.
pub fn pair_assignment(sigma: &[usize], tau: &[usize], q: usize) -> Vec<usize> {
    sigma.iter().zip(tau).map(|(a, b)| a * q + b).collect()
}
