use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Joe & Kuo (2008) D6 direction numbers, dimensions 2..=1111.
const JOE_KUO: &str = include_str!("joe_kuo_d6_1111.txt");

pub const SOBOL_MAX_DIM: usize = 1111;
const BITS: usize = 32;

fn direction_table() -> &'static [[u32; BITS]] {
    static TABLE: OnceLock<Vec<[u32; BITS]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(SOBOL_MAX_DIM);
        let mut first = [0u32; BITS];
        for (k, v) in first.iter_mut().enumerate() {
            *v = 1 << (BITS - 1 - k);
        }
        table.push(first);
        for line in JOE_KUO.lines().skip(1) {
            let fields: Vec<u32> = line
                .split_whitespace()
                .map(|f| f.parse().expect("direction table is numeric"))
                .collect();
            let (s, a, m) = (fields[1] as usize, fields[2], &fields[3..]);
            let mut v = [0u32; BITS];
            for k in 0..BITS {
                if k < s {
                    v[k] = m[k] << (BITS - 1 - k);
                } else {
                    let mut x = v[k - s] ^ (v[k - s] >> s);
                    for l in 1..s {
                        if (a >> (s - 1 - l)) & 1 == 1 {
                            x ^= v[k - l];
                        }
                    }
                    v[k] = x;
                }
            }
            table.push(v);
        }
        table
    })
}

/// `n x dim` Sobol points in Gray-code order, skipping the all-zero first point.
pub fn sobol(dim: usize, n: usize) -> Result<Matrix<f64>> {
    if dim > SOBOL_MAX_DIM {
        return Err(Error::Capability(format!(
            "Sobol draws support at most {SOBOL_MAX_DIM} dimensions ({dim} requested)"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("number of draws must be positive".into()));
    }
    if n as u64 >= 1u64 << BITS {
        return Err(Error::Capability("too many Sobol points requested".into()));
    }
    let table = direction_table();
    let scale = 1.0 / (1u64 << BITS) as f64;
    let mut state = vec![0u32; dim];
    let mut out = Matrix::zeros(n, dim);
    for i in 0..n {
        // point i+1 differs from point i in the direction of the lowest zero bit of i
        let c = (i as u64).trailing_ones() as usize;
        for (d, x) in state.iter_mut().enumerate() {
            *x ^= table[d][c];
            out[(i, d)] = *x as f64 * scale;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::draws::halton::halton;

    #[test]
    fn one_dimensional_start() {
        let s = sobol(1, 3).unwrap();
        assert_eq!(s.column(0), vec![0.5, 0.75, 0.25]);
    }

    #[test]
    fn matches_reference_points() {
        // reference values from an independent unscrambled Joe-Kuo generator
        let s = sobol(SOBOL_MAX_DIM, 1023).unwrap();
        let dims = [0, 1, 9, 499, 1110];
        let expected = [
            (100, [0.4140625, 0.2578125, 0.6953125, 0.4921875, 0.4609375]),
            (777, [0.6923828125, 0.9365234375, 0.3232421875, 0.3212890625, 0.5849609375]),
            (1023, [0.0009765625, 0.7529296875, 0.8505859375, 0.4736328125, 0.5888671875]),
        ];
        for (index, row) in expected {
            for (d, want) in dims.iter().zip(row) {
                assert_eq!(s[(index - 1, *d)], want, "point {index} dim {d}");
            }
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(sobol(5, 50).unwrap(), sobol(5, 50).unwrap());
    }

    #[test]
    fn inside_unit_interval() {
        assert!(sobol(40, 4096).unwrap().as_slice().iter().all(|&u| u > 0.0 && u < 1.0));
    }

    fn grid_star_discrepancy(points: &Matrix<f64>) -> f64 {
        let n = points.rows() as f64;
        let mut worst: f64 = 0.0;
        for i in 1..=64 {
            for j in 1..=64 {
                let (a, b) = (i as f64 / 64.0, j as f64 / 64.0);
                let inside = points
                    .iter_rows()
                    .filter(|p| p[0] < a && p[1] < b)
                    .count() as f64;
                worst = worst.max((inside / n - a * b).abs());
            }
        }
        worst
    }

    #[test]
    fn lower_discrepancy_than_halton_in_two_dimensions() {
        let n = 1 << 10;
        let s = grid_star_discrepancy(&sobol(2, n).unwrap());
        let h = grid_star_discrepancy(&halton(2, n).unwrap());
        assert!(s < h, "sobol {s} halton {h}");
    }

    #[test]
    fn dimension_limit() {
        assert!(matches!(sobol(1112, 4), Err(Error::Capability(_))));
    }
}
