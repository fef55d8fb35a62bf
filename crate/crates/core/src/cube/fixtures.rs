//! Small measures on `{0,1}^n` with known structure.

use crate::alphabet::Alphabet;
use crate::cube::measure::{decode, DenseMeasure, DENSE_CAP};
use crate::error::{invalid, table_size, Result};

/// Coordinates come in consecutive blocks of size `block`; all coordinates
/// of a block share one `Be(p)` value, blocks are independent.
pub fn block_measure(n: usize, block: usize, p: f64) -> Result<DenseMeasure> {
    if block == 0 || n % block != 0 {
        return invalid("block size must divide n");
    }
    let size = table_size(2, n, DENSE_CAP, "dense measure")?;
    let mut digits = vec![0; n];
    let mass = (0..size)
        .map(|i| {
            decode(i, 2, &mut digits);
            digits
                .chunks(block)
                .map(|b| {
                    if b.iter().all(|&s| s == b[0]) {
                        if b[0] == 1 {
                            p
                        } else {
                            1.0 - p
                        }
                    } else {
                        0.0
                    }
                })
                .product()
        })
        .collect();
    DenseMeasure::from_weights(Alphabet::binary(), n, mass)
}

/// Equal mixture of the products `Be(1/3)^n` and `Be(2/3)^n`.
pub fn two_level_mixture(n: usize) -> Result<DenseMeasure> {
    let size = table_size(2, n, DENSE_CAP, "dense measure")?;
    let mut digits = vec![0; n];
    let mass = (0..size)
        .map(|i| {
            decode(i, 2, &mut digits);
            let ones = digits.iter().sum::<usize>() as i32;
            let zeros = n as i32 - ones;
            let third = 1.0f64 / 3.0;
            let two = 2.0f64 / 3.0;
            0.5 * (third.powi(ones) * two.powi(zeros) + two.powi(ones) * third.powi(zeros))
        })
        .collect();
    DenseMeasure::from_weights(Alphabet::binary(), n, mass)
}

/// Product measure, `Be(1/2)` on the first `n/2` coordinates and `Be(1/3)`
/// on the rest.
pub fn two_halves(n: usize) -> Result<DenseMeasure> {
    if n % 2 != 0 {
        return invalid("two_halves needs even n");
    }
    let marginals: Vec<Vec<f64>> = (0..n)
        .map(|x| if x < n / 2 { vec![0.5, 0.5] } else { vec![2.0 / 3.0, 1.0 / 3.0] })
        .collect();
    DenseMeasure::product(Alphabet::binary(), &marginals)
}

/// `Be(p)^n`.
pub fn bernoulli_product(n: usize, p: f64) -> Result<DenseMeasure> {
    DenseMeasure::product(Alphabet::binary(), &vec![vec![1.0 - p, p]; n])
}
