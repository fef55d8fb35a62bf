use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::error::{invalid, table_size, Error, Result};

/// Largest dense table (in entries) any routine will allocate by default.
pub const DENSE_CAP: usize = 1 << 24;
/// Accepted deviation of the input total from 1 before renormalizing.
pub const INPUT_TOLERANCE: f64 = 1e-9;

/// Lexicographic index of an assignment, coordinate 0 most significant.
pub fn encode(sigma: &[usize], q: usize) -> usize {
    sigma.iter().fold(0, |acc, &s| acc * q + s)
}

/// Inverse of [`encode`], writing `out.len()` digits.
pub fn decode(mut index: usize, q: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = index % q;
        index /= q;
    }
}

/// `σ[·|S]`: symbol frequencies of `sigma` on the coordinates `s`.
pub fn empirical(sigma: &[usize], s: &[usize], q: usize) -> Result<Vec<f64>> {
    if s.is_empty() {
        return invalid("empirical distribution over an empty set");
    }
    let mut out = vec![0.0; q];
    for &x in s {
        let v = *sigma
            .get(x)
            .ok_or_else(|| Error::InvalidArgument(format!("coordinate {x} out of range")))?;
        if v >= q {
            return invalid(format!("symbol {v} out of range"));
        }
        out[v] += 1.0;
    }
    let k = s.len() as f64;
    out.iter_mut().for_each(|c| *c /= k);
    Ok(out)
}

/// An explicit probability vector on `Ω^n`, indexed lexicographically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct DenseMeasure {
    alphabet: Alphabet,
    n: usize,
    mass: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    alphabet: Alphabet,
    n: usize,
    mass: Vec<f64>,
}

impl TryFrom<RawMeasure> for DenseMeasure {
    type Error = Error;
    fn try_from(r: RawMeasure) -> Result<Self> {
        Self::new(r.alphabet, r.n, r.mass)
    }
}

impl DenseMeasure {
    /// Validates and renormalizes; the input total must be within
    /// [`INPUT_TOLERANCE`] of 1. A total off by summation rounding only is
    /// kept as is, so serialized measures read back unchanged.
    pub fn new(alphabet: Alphabet, n: usize, mass: Vec<f64>) -> Result<Self> {
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > INPUT_TOLERANCE {
            return invalid(format!("mass sums to {total}, not 1"));
        }
        let mut mu = Self::from_weights(alphabet, n, mass.clone())?;
        if (total - 1.0).abs() <= mass.len() as f64 * f64::EPSILON {
            mu.mass = mass;
        }
        Ok(mu)
    }

    /// Normalizes arbitrary nonnegative weights.
    pub fn from_weights(alphabet: Alphabet, n: usize, mut mass: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return invalid("measure needs n >= 1");
        }
        let size = table_size(alphabet.len(), n, DENSE_CAP, "dense measure")?;
        if mass.len() != size {
            return Err(Error::DimensionMismatch(mass.len(), size));
        }
        if let Some(bad) = mass.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return invalid(format!("mass entry {bad} is not a finite nonnegative number"));
        }
        let total: f64 = mass.iter().sum();
        if total <= 0.0 {
            return invalid("measure has zero total mass");
        }
        mass.iter_mut().for_each(|x| *x /= total);
        Ok(Self { alphabet, n, mass })
    }

    pub fn point_mass(alphabet: Alphabet, sigma: &[usize]) -> Result<Self> {
        let q = alphabet.len();
        if sigma.iter().any(|&s| s >= q) {
            return invalid("assignment symbol out of range");
        }
        let size = table_size(q, sigma.len(), DENSE_CAP, "dense measure")?;
        let mut mass = vec![0.0; size];
        mass[encode(sigma, q)] = 1.0;
        Self::from_weights(alphabet, sigma.len(), mass)
    }

    pub fn uniform(alphabet: Alphabet, n: usize) -> Result<Self> {
        let size = table_size(alphabet.len(), n, DENSE_CAP, "dense measure")?;
        Self::from_weights(alphabet, n, vec![1.0; size])
    }

    /// Product of the given per-coordinate distributions.
    pub fn product(alphabet: Alphabet, marginals: &[Vec<f64>]) -> Result<Self> {
        let q = alphabet.len();
        if let Some(m) = marginals.iter().find(|m| m.len() != q) {
            return Err(Error::DimensionMismatch(m.len(), q));
        }
        let n = marginals.len();
        let size = table_size(q, n, DENSE_CAP, "dense measure")?;
        let mut digits = vec![0; n];
        let mass = (0..size)
            .map(|i| {
                decode(i, q, &mut digits);
                digits
                    .iter()
                    .zip(marginals)
                    .map(|(&s, m)| m[s])
                    .product::<f64>()
            })
            .collect();
        Self::from_weights(alphabet, n, mass)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn q(&self) -> usize {
        self.alphabet.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn prob(&self, sigma: &[usize]) -> f64 {
        self.mass[encode(sigma, self.q())]
    }

    /// `(index, mass)` for every assignment of positive mass.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.mass
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, m)| *m > 0.0)
    }

    pub fn assignment(&self, index: usize) -> Vec<usize> {
        let mut d = vec![0; self.n];
        decode(index, self.q(), &mut d);
        d
    }

    /// `μ↓S` on `Ω^|coords|`, coordinates in the given order.
    pub fn marginal(&self, coords: &[usize]) -> Result<Self> {
        if coords.is_empty() {
            return invalid("marginal over an empty coordinate set");
        }
        for (i, &c) in coords.iter().enumerate() {
            if c >= self.n {
                return invalid(format!("coordinate {c} out of range for n = {}", self.n));
            }
            if coords[..i].contains(&c) {
                return invalid(format!("coordinate {c} repeated"));
            }
        }
        let q = self.q();
        let size = table_size(q, coords.len(), DENSE_CAP, "marginal")?;
        let mut out = vec![0.0; size];
        let mut digits = vec![0; self.n];
        for (i, m) in self.support() {
            decode(i, q, &mut digits);
            let j = coords.iter().fold(0, |acc, &c| acc * q + digits[c]);
            out[j] += m;
        }
        Self::from_weights(self.alphabet.clone(), coords.len(), out)
    }

    /// `μ(S)` for a set of assignment indices.
    pub fn mass_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.mass[i]).sum()
    }

    /// `μ[·|S]`; errors when `μ(S) = 0`.
    pub fn conditional(&self, set: &[usize]) -> Result<Self> {
        let mut mass = vec![0.0; self.mass.len()];
        for &i in set {
            if i >= mass.len() {
                return invalid(format!("assignment index {i} out of range"));
            }
            mass[i] = self.mass[i];
        }
        if mass.iter().all(|m| *m == 0.0) {
            return invalid("conditioning on a set of zero mass");
        }
        Self::from_weights(self.alphabet.clone(), self.n, mass)
    }

    /// `μ ⊗ μ` on `(Ω×Ω)^n`; the pair symbol `(a,b)` has index `a * q + b`.
    pub fn tensor_square(&self, cap: usize) -> Result<Self> {
        let q = self.q();
        let size = table_size(q * q, self.n, cap, "tensor square")?;
        let pairs = self.alphabet.pairs();
        let mut spread_a = vec![0usize; self.mass.len()];
        let mut spread_b = vec![0usize; self.mass.len()];
        let mut digits = vec![0; self.n];
        for i in 0..self.mass.len() {
            decode(i, q, &mut digits);
            let b = digits.iter().fold(0, |acc, &s| acc * q * q + s);
            spread_a[i] = b * q;
            spread_b[i] = b;
        }
        let mut out = vec![0.0; size];
        for (i, mi) in self.support() {
            for (j, mj) in self.support() {
                out[spread_a[i] + spread_b[j]] = mi * mj;
            }
        }
        Self::from_weights(pairs, self.n, out)
    }
}
