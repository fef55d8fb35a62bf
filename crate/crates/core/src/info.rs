//! Total variation, entropy and Kullback-Leibler divergence on finite
//! distributions given as probability vectors.

use crate::error::{Error, Result};

fn same_len(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    Ok(())
}

/// Total variation distance, `max_A |p(A) - q(A)|`.
pub fn tv(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    Ok(tv_unchecked(p, q))
}

pub(crate) fn tv_unchecked(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// `KL(p || q) = sum p ln(p/q)`; infinite when `p` charges a point `q` does not.
pub fn kl(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += a * (a / b).ln();
        }
    }
    Ok(acc.max(0.0))
}

/// Expectation of `f` under `p`, skipping zero-probability entries so that
/// `0 * ln 0` style terms vanish.
pub fn expect(p: &[f64], f: &[f64]) -> Result<f64> {
    same_len(p, f)?;
    Ok(p.iter()
        .zip(f)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * b)
        .sum())
}

pub fn uniform(q: usize) -> Vec<f64> {
    vec![1.0 / q as f64; q]
}

pub fn point_mass(q: usize, at: usize) -> Vec<f64> {
    let mut v = vec![0.0; q];
    v[at] = 1.0;
    v
}

/// Product distribution on `Ω^h` in lexicographic order (first factor most significant).
pub fn product(factors: &[&[f64]]) -> Vec<f64> {
    let mut out = vec![1.0];
    for f in factors {
        let mut next = Vec::with_capacity(out.len() * f.len());
        for &a in &out {
            for &b in f.iter() {
                next.push(a * b);
            }
        }
        out = next;
    }
    out
}

/// Marginal of coordinate `j` of a joint on `Ω^h` stored lexicographically.
pub fn joint_marginal(joint: &[f64], q: usize, h: usize, j: usize) -> Vec<f64> {
    let stride = q.pow((h - 1 - j) as u32);
    let mut out = vec![0.0; q];
    for (idx, &m) in joint.iter().enumerate() {
        out[(idx / stride) % q] += m;
    }
    out
}

/// Whether `p` is a probability vector up to `tol`.
pub fn is_distribution(p: &[f64], tol: f64) -> bool {
    !p.is_empty()
        && p.iter().all(|x| x.is_finite() && *x >= 0.0)
        && (p.iter().sum::<f64>() - 1.0).abs() <= tol
}

pub fn normalize(p: &mut [f64]) -> Result<()> {
    let s: f64 = p.iter().sum();
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("cannot normalize total {s}")));
    }
    p.iter_mut().for_each(|x| *x /= s);
    Ok(())
}

/// `ln sum exp(x)` with the max-shift trick; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_of_uniform_is_log_size() {
        for q in 1..8 {
            assert!((entropy(&uniform(q)) - (q as f64).ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn kl_identities() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl(&p, &p).unwrap(), 0.0);
        let d = kl(&point_mass(4, 2), &uniform(4)).unwrap();
        assert!((d - 4f64.ln()).abs() < 1e-15);
        assert_eq!(kl(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(kl(&[1.0, 0.0], &[0.5, 0.5]).unwrap().is_finite());
        assert!(matches!(kl(&[1.0], &[0.5, 0.5]), Err(Error::DimensionMismatch(1, 2))));
    }

    #[test]
    fn tv_bounds() {
        assert_eq!(tv(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(tv(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn product_and_marginal_round_trip() {
        let a = [0.1, 0.9];
        let b = [0.25, 0.75];
        let j = product(&[&a, &b]);
        assert!(tv(&joint_marginal(&j, 2, 2, 1), &b).unwrap() < 1e-15);
        assert!(tv(&joint_marginal(&j, 2, 2, 0), &a).unwrap() < 1e-15);
        assert!((j[1] - 0.1 * 0.75).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [0.1, -2.0, 3.5];
        let direct = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
    }
}
