use crate::cube::{decode, encode};
use crate::error::{invalid, Error, Result};
use crate::info;
use crate::model::WeightFunction;

/// Largest per-constraint marginal deviation accepted by [`max_entropy_joint`].
pub const IPF_TOLERANCE: f64 = 1e-10;
pub const IPF_MAX_SWEEPS: usize = 100_000;

/// `H(ν) + ⟨ln ψ⟩_ν`, with `0 · ln 0 = 0`.
pub fn objective(psi: &WeightFunction, nu: &[f64]) -> f64 {
    let energy: f64 = nu.iter().zip(psi.ln_table()).filter(|(p, _)| **p > 0.0).map(|(p, l)| p * l).sum();
    info::entropy(nu) + energy
}

/// Largest deviation `|ν↓j(ω) − marginals[j](ω)|`.
pub fn marginal_residual(nu: &[f64], q: usize, marginals: &[Vec<f64>]) -> f64 {
    let h = marginals.len();
    let mut worst: f64 = 0.0;
    for (j, m) in marginals.iter().enumerate() {
        let got = info::joint_marginal(nu, q, h, j);
        for (a, b) in got.iter().zip(m) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Maximizer of `H(ν) + ⟨ln ψ⟩_ν` over joints on `Ω^h` with the given
/// single-coordinate marginals, by iterative proportional fitting started
/// from `ν ∝ ψ`.
pub fn max_entropy_joint(psi: &WeightFunction, marginals: &[Vec<f64>]) -> Result<Vec<f64>> {
    let (q, h) = (psi.q(), psi.arity());
    if marginals.len() != h {
        return Err(Error::DimensionMismatch(marginals.len(), h));
    }
    if let Some(m) = marginals.iter().find(|m| m.len() != q || !info::is_distribution(m, 1e-9)) {
        return invalid(format!("marginal {m:?} is not a distribution on {q} symbols"));
    }
    let mut nu: Vec<f64> = psi.table().to_vec();
    info::normalize(&mut nu)?;
    let strides: Vec<usize> = (0..h).map(|j| q.pow((h - 1 - j) as u32)).collect();
    let mut residual = f64::INFINITY;
    for _ in 0..IPF_MAX_SWEEPS {
        for j in 0..h {
            let cur = info::joint_marginal(&nu, q, h, j);
            let scale: Vec<f64> = cur
                .iter()
                .zip(&marginals[j])
                .map(|(&c, &m)| if m == 0.0 { 0.0 } else if c > 0.0 { m / c } else { f64::NAN })
                .collect();
            if scale.iter().any(|s| s.is_nan()) {
                return Err(Error::Infeasible("marginals charge symbols the weight excludes".into()));
            }
            for (idx, x) in nu.iter_mut().enumerate() {
                *x *= scale[(idx / strides[j]) % q];
            }
        }
        residual = marginal_residual(&nu, q, marginals);
        if residual < IPF_TOLERANCE {
            return Ok(nu);
        }
    }
    Err(Error::NoConvergence { iterations: IPF_MAX_SWEEPS, residual })
}

/// Stationarity defect of `ν`: at the optimum `ln ν − ln ψ` is a sum of
/// single-coordinate terms, so every exchange of one coordinate between two
/// supported assignments leaves `Σ (ln ν − ln ψ)` unchanged. Returns the
/// largest change over all such exchanges.
pub fn kkt_residual(psi: &WeightFunction, nu: &[f64]) -> f64 {
    let (q, h) = (psi.q(), psi.arity());
    let g: Vec<f64> = nu
        .iter()
        .zip(psi.ln_table())
        .map(|(&p, &l)| if p > 0.0 { p.ln() - l } else { f64::NAN })
        .collect();
    let (mut a, mut b) = (vec![0; h], vec![0; h]);
    let mut worst: f64 = 0.0;
    for s in 0..nu.len() {
        if g[s].is_nan() {
            continue;
        }
        decode(s, q, &mut a);
        for t in s + 1..nu.len() {
            if g[t].is_nan() {
                continue;
            }
            decode(t, q, &mut b);
            for j in 0..h {
                if a[j] == b[j] {
                    continue;
                }
                let (mut a2, mut b2) = (a.clone(), b.clone());
                std::mem::swap(&mut a2[j], &mut b2[j]);
                let (sa, sb) = (encode(&a2, q), encode(&b2, q));
                if g[sa].is_nan() || g[sb].is_nan() {
                    continue;
                }
                worst = worst.max((g[s] + g[t] - g[sa] - g[sb]).abs());
            }
        }
    }
    worst
}
