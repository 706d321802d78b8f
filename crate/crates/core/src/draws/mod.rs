//! Quasi-random standard-normal draws and the mapping from draws to per-draw
//! coefficient realizations.

mod halton;
mod normal;
mod sobol;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use halton::{halton, halton_with_drop, HALTON_DROP, HALTON_MAX_DIM};
pub use normal::{inv_normal_cdf, normal_cdf};
pub use sobol::{sobol, SOBOL_MAX_DIM};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::spec::{Dist, ParameterLayout};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrawType {
    #[default]
    Halton,
    Sobol,
}

impl FromStr for DrawType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "halton" => Ok(DrawType::Halton),
            "sobol" => Ok(DrawType::Sobol),
            other => Err(Error::spec(format!("unknown draw type '{other}'"))),
        }
    }
}

impl fmt::Display for DrawType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DrawType::Halton => write!(f, "halton"),
            DrawType::Sobol => write!(f, "sobol"),
        }
    }
}

/// Which sequence dimension feeds each random coefficient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawColumns {
    /// The k-th random coefficient uses dimension k.
    #[default]
    Random,
    /// A random coefficient uses the dimension of its position among all
    /// coefficients, so adding a fixed covariate shifts the bases in use.
    Coefficient,
}

/// Uniform points from the chosen low-discrepancy sequence. `halton_drop`
/// leading points are discarded for Halton; Sobol always skips only its
/// initial zero point.
pub fn uniform_points(draw_type: DrawType, dim: usize, n: usize, halton_drop: usize) -> Result<Matrix<f64>> {
    match draw_type {
        DrawType::Halton => halton_with_drop(dim, n, halton_drop),
        DrawType::Sobol => sobol(dim, n),
    }
}

/// `R x K` matrix of standard-normal deviates, one column per random coefficient.
///
/// The same draws are shared by every individual; in panel models an
/// individual's observations all use the same draw.
#[derive(Clone, Debug, PartialEq)]
pub struct DrawSet<T> {
    z: Matrix<T>,
    draw_type: DrawType,
    antithetic: bool,
}

impl<T: Scalar> DrawSet<T> {
    /// `num_draws x dim` normal deviates from the first `dim` sequence
    /// dimensions, with the default Halton burn-in.
    pub fn generate(draw_type: DrawType, num_draws: usize, dim: usize) -> Result<Self> {
        let columns: Vec<usize> = (0..dim).collect();
        Self::from_sequence(draw_type, num_draws, &columns, HALTON_DROP)
    }

    /// Draws for the random coefficients of `layout`.
    pub fn for_layout(
        layout: &ParameterLayout,
        draw_type: DrawType,
        num_draws: usize,
        columns: DrawColumns,
        halton_drop: usize,
    ) -> Result<Self> {
        let dims: Vec<usize> = match columns {
            DrawColumns::Random => (0..layout.random.len()).collect(),
            DrawColumns::Coefficient => layout.random.iter().map(|r| r.coef).collect(),
        };
        Self::from_sequence(draw_type, num_draws, &dims, halton_drop)
    }

    /// Column `k` of the result is sequence dimension `dims[k]`.
    pub fn from_sequence(draw_type: DrawType, num_draws: usize, dims: &[usize], halton_drop: usize) -> Result<Self> {
        if num_draws == 0 {
            return Err(Error::Domain("number of draws must be positive".into()));
        }
        let z = match dims.iter().max() {
            None => Matrix::zeros(num_draws, 0),
            Some(&top) => {
                let u = uniform_points(draw_type, top + 1, num_draws, halton_drop)?;
                let mut data = Vec::with_capacity(num_draws * dims.len());
                for row in u.iter_rows() {
                    for &d in dims {
                        data.push(inv_normal_cdf(T::lit(row[d]))?);
                    }
                }
                Matrix::from_vec(num_draws, dims.len(), data)
            }
        };
        Ok(Self {
            z,
            draw_type,
            antithetic: false,
        })
    }

    /// `num_draws / 2` sequence points followed by their negations, so every
    /// column is exactly sign-symmetric.
    pub fn generate_antithetic(draw_type: DrawType, num_draws: usize, dim: usize) -> Result<Self> {
        if num_draws % 2 != 0 {
            return Err(Error::Domain("antithetic draws need an even count".into()));
        }
        let half = Self::generate(draw_type, num_draws / 2, dim)?;
        let mut data = half.z.as_slice().to_vec();
        data.extend(half.z.as_slice().iter().map(|&v| -v));
        Ok(Self {
            z: Matrix::from_vec(num_draws, dim, data),
            draw_type,
            antithetic: true,
        })
    }

    pub fn from_matrix(z: Matrix<T>, draw_type: DrawType) -> Self {
        Self {
            z,
            draw_type,
            antithetic: false,
        }
    }

    pub fn z(&self) -> &Matrix<T> {
        &self.z
    }

    pub fn num_draws(&self) -> usize {
        self.z.rows()
    }

    pub fn dim(&self) -> usize {
        self.z.cols()
    }

    pub fn draw_type(&self) -> DrawType {
        self.draw_type
    }

    pub fn is_antithetic(&self) -> bool {
        self.antithetic
    }
}

/// Writes one draw's coefficient vector into `coefs` and, per random
/// coefficient, `d coef / d (mu + sigma z)` into `slopes`.
pub(crate) fn realize_draw<T: Scalar>(
    theta: &[T],
    layout: &ParameterLayout,
    z: &[T],
    coefs: &mut [T],
    slopes: &mut [T],
) {
    for (c, &m) in coefs.iter_mut().zip(&layout.coef_mean) {
        *c = theta[m];
    }
    if layout.random.is_empty() {
        return;
    }
    // `slopes` holds mu + sigma z (+ the Cholesky terms) until transformed
    for (k, r) in layout.random.iter().enumerate() {
        slopes[k] = theta[r.mean_index] + theta[r.sd_index] * z[k];
    }
    for &(row, col, index) in &layout.cholesky {
        slopes[row] += theta[index] * z[col];
    }
    for (k, r) in layout.random.iter().enumerate() {
        let raw = slopes[k];
        let (value, slope) = match r.dist {
            Dist::Normal => (raw, T::one()),
            Dist::LogNormal => {
                let e = raw.exp();
                (e, e)
            }
            Dist::CensoredNormal => {
                if raw > T::zero() {
                    (raw, T::one())
                } else {
                    (T::zero(), T::zero())
                }
            }
        };
        coefs[r.coef] = value;
        slopes[k] = slope;
    }
}

/// Per-draw coefficient realizations (`R x n_coefs`): fixed coefficients are
/// copied, normal ones are `mu + sigma z`, log-normal `exp(mu + sigma z)`,
/// zero-censored normal `max(0, mu + sigma z)`; correlated models use
/// `mu + L z` with `L` lower triangular.
pub fn realize_parameters<T: Scalar>(
    theta: &[T],
    layout: &ParameterLayout,
    draws: &DrawSet<T>,
) -> Result<Matrix<T>> {
    if theta.len() != layout.len() {
        return Err(Error::spec(format!(
            "parameter vector has {} entries, layout expects {}",
            theta.len(),
            layout.len()
        )));
    }
    if draws.dim() != layout.random.len() {
        return Err(Error::spec(format!(
            "draws have {} columns, model has {} random coefficients",
            draws.dim(),
            layout.random.len()
        )));
    }
    let mut out = Matrix::zeros(draws.num_draws(), layout.n_coefs);
    let mut slopes = vec![T::zero(); layout.random.len()];
    for r in 0..draws.num_draws() {
        realize_draw(theta, layout, draws.z().row(r), out.row_mut(r), &mut slopes);
    }
    Ok(out)
}
