use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Ordered finite symbol set Ω. The order fixes every lexicographic index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet(Vec<String>);

impl Alphabet {
    pub fn new(symbols: Vec<String>) -> Result<Self> {
        if symbols.is_empty() {
            return invalid("alphabet must be nonempty");
        }
        for (i, a) in symbols.iter().enumerate() {
            if symbols[..i].contains(a) {
                return invalid(format!("duplicate symbol {a:?}"));
            }
        }
        Ok(Self(symbols))
    }

    /// `{0, 1}`.
    pub fn binary() -> Self {
        Self::numbered(2)
    }

    /// `{-1, +1}`; index 0 is `-1`.
    pub fn spins() -> Self {
        Self(vec!["-1".into(), "+1".into()])
    }

    /// `{0, ..., q-1}`.
    pub fn numbered(q: usize) -> Self {
        assert!(q > 0, "alphabet must be nonempty");
        Self((0..q).map(|i| i.to_string()).collect())
    }

    /// `Ω × Ω`, symbol `(a,b)` at index `a * q + b`.
    pub fn pairs(&self) -> Self {
        let mut out = Vec::with_capacity(self.len() * self.len());
        for a in &self.0 {
            for b in &self.0 {
                out.push(format!("({a},{b})"));
            }
        }
        Self(out)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.0
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.0.iter().position(|s| s == symbol)
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.0
    }
}
