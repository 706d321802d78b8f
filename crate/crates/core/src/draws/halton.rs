use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Leading points discarded from every Halton column.
pub const HALTON_DROP: usize = 100;

const PRIMES: [u64; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

pub const HALTON_MAX_DIM: usize = PRIMES.len();

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut factor = inv_base;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * factor;
        index /= base;
        factor *= inv_base;
    }
    value
}

/// `n x dim` Halton points after discarding [`HALTON_DROP`] leading points.
pub fn halton(dim: usize, n: usize) -> Result<Matrix<f64>> {
    halton_with_drop(dim, n, HALTON_DROP)
}

/// Column `d` is the radical inverse in base `prime(d)` of indices
/// `drop + 1 ..= drop + n`.
pub fn halton_with_drop(dim: usize, n: usize, drop: usize) -> Result<Matrix<f64>> {
    if dim > HALTON_MAX_DIM {
        return Err(Error::Capability(format!(
            "Halton draws support at most {HALTON_MAX_DIM} dimensions ({dim} requested); use Sobol draws"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("number of draws must be positive".into()));
    }
    let mut out = Matrix::zeros(n, dim);
    for (d, &base) in PRIMES.iter().take(dim).enumerate() {
        for i in 0..n {
            out[(i, d)] = radical_inverse((drop + i + 1) as u64, base);
        }
    }
    Ok(out)
}
