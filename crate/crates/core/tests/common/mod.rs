#![allow(dead_code)]

use gibbs_core::cube::DenseMeasure;
use gibbs_core::Alphabet;

/// Digits of a lexicographic index, most significant first.
pub fn digits_of(mut i: usize, q: usize, n: usize) -> Vec<usize> {
    let mut d = vec![0; n];
    for k in (0..n).rev() {
        d[k] = i % q;
        i /= q;
    }
    d
}

pub fn all_assignments(q: usize, n: usize) -> Vec<Vec<usize>> {
    (0..q.pow(n as u32)).map(|i| digits_of(i, q, n)).collect()
}

pub fn measure_from(q: usize, n: usize, weights: &[f64]) -> DenseMeasure {
    DenseMeasure::from_weights(Alphabet::numbered(q), n, weights.to_vec()).unwrap()
}

/// Frequency of symbol `w` among `sigma` restricted to `set`.
pub fn freq(sigma: &[usize], set: &[usize], w: usize) -> f64 {
    set.iter().filter(|&&x| sigma[x] == w).count() as f64 / set.len() as f64
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
