use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `ψ : Ω^h → (0,∞)` stored as a dense table in lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeight", into = "RawWeight")]
pub struct WeightFunction {
    id: String,
    arity: usize,
    q: usize,
    table: Vec<f64>,
    ln_table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeight {
    id: String,
    arity: usize,
    table: Vec<f64>,
}

impl TryFrom<RawWeight> for WeightFunction {
    type Error = Error;
    fn try_from(r: RawWeight) -> Result<Self> {
        let q = infer_q(r.table.len(), r.arity)
            .ok_or_else(|| Error::InvalidArgument(format!("weight {}: table length {} is not q^{}", r.id, r.table.len(), r.arity)))?;
        Self::new(r.id, q, r.arity, r.table)
    }
}

impl From<WeightFunction> for RawWeight {
    fn from(w: WeightFunction) -> Self {
        Self { id: w.id, arity: w.arity, table: w.table }
    }
}

fn infer_q(len: usize, arity: usize) -> Option<usize> {
    if arity == 0 {
        return None;
    }
    (1..=len).find(|q| q.checked_pow(arity as u32) == Some(len))
}

impl WeightFunction {
    pub fn new(id: impl Into<String>, q: usize, arity: usize, table: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if arity == 0 {
            return invalid(format!("weight {id}: arity must be at least 1"));
        }
        let size = q
            .checked_pow(arity as u32)
            .ok_or_else(|| Error::InvalidArgument(format!("weight {id}: table too large")))?;
        if table.len() != size {
            return Err(Error::DimensionMismatch(table.len(), size));
        }
        if let Some(bad) = table.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return invalid(format!("weight {id}: entry {bad} is not strictly positive and finite"));
        }
        let ln_table = table.iter().map(|v| v.ln()).collect();
        Ok(Self { id, arity, q, table, ln_table })
    }

    /// `ψ ≡ 1`.
    pub fn constant(id: impl Into<String>, q: usize, arity: usize) -> Result<Self> {
        Self::new(id, q, arity, vec![1.0; q.pow(arity as u32)])
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn ln_table(&self) -> &[f64] {
        &self.ln_table
    }

    pub fn value(&self, args: &[usize]) -> f64 {
        self.table[self.index(args)]
    }

    pub fn ln_value(&self, args: &[usize]) -> f64 {
        self.ln_table[self.index(args)]
    }

    fn index(&self, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        args.iter().fold(0, |acc, &s| acc * self.q + s)
    }

    /// Whether `ψ(σ∘π) = ψ(σ)` for every permutation `π` of the slots.
    pub fn is_symmetric(&self) -> bool {
        let mut args = vec![0; self.arity];
        for i in 0..self.table.len() {
            crate::cube::decode(i, self.q, &mut args);
            let mut sorted = args.clone();
            sorted.sort_unstable();
            if self.table[i] != self.value(&sorted) {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_entries() {
        assert!(WeightFunction::new("w", 2, 1, vec![1.0, 0.0]).is_err());
        assert!(WeightFunction::new("w", 2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let w = WeightFunction::new("w", 3, 2, (1..=9).map(f64::from).collect()).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        let back: WeightFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(w, back);
        assert_eq!(back.value(&[1, 2]), 6.0);
    }

    #[test]
    fn symmetry() {
        assert!(WeightFunction::new("w", 2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap().is_symmetric());
        assert!(!WeightFunction::new("w", 2, 2, vec![2.0, 1.0, 3.0, 2.0]).unwrap().is_symmetric());
    }
}
