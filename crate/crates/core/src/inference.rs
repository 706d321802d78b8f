//! Post-estimation statistics.
//!
//! Linear algebra and reporting run in `f64` whatever the estimation scalar.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::draws::{normal_cdf, realize_parameters, DrawSet};
use crate::error::{Error, Result};
use crate::estimation::{ClusterInfo, FitResult};
use crate::likelihood::ObjectiveContext;
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::spec::{ClusterLevel, Dist, Space, SCALE_PAR_NAME};

/// Default number of Krinsky-Robb parameter draws.
pub const KR_DRAWS: usize = 10_000;
const EIGEN_FLOOR: f64 = 1e-10;
const MAX_CONDITION: f64 = 1e14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitStatistics {
    pub loglik: f64,
    pub null_loglik: f64,
    pub n_params: usize,
    pub n_obs: usize,
    pub aic: f64,
    pub bic: f64,
    pub mcfadden_r2: f64,
    pub adj_mcfadden_r2: f64,
}

pub fn fit_statistics(ll: f64, ll0: f64, k: usize, n: usize) -> FitStatistics {
    let kf = k as f64;
    FitStatistics {
        loglik: ll,
        null_loglik: ll0,
        n_params: k,
        n_obs: n,
        aic: 2.0 * kf - 2.0 * ll,
        bic: kf * (n as f64).ln() - 2.0 * ll,
        mcfadden_r2: 1.0 - ll / ll0,
        adj_mcfadden_r2: 1.0 - (ll - kf) / ll0,
    }
}

/// Central differences of an analytic gradient, symmetrized.
pub fn numerical_hessian<T: Scalar>(
    mut grad: impl FnMut(&[T], &mut [T]) -> Result<()>,
    theta: &[T],
) -> Result<Matrix<T>> {
    let p = theta.len();
    let mut h = Matrix::zeros(p, p);
    let mut gp = vec![T::zero(); p];
    let mut gm = vec![T::zero(); p];
    let mut x = theta.to_vec();
    let base = T::lit(1e-5);
    for i in 0..p {
        let step = base.max(base * theta[i].abs());
        x[i] = theta[i] + step;
        grad(&x, &mut gp)?;
        x[i] = theta[i] - step;
        grad(&x, &mut gm)?;
        x[i] = theta[i];
        let denom = step + step;
        for j in 0..p {
            h[(j, i)] = (gp[j] - gm[j]) / denom;
        }
    }
    let half = T::lit(0.5);
    for i in 0..p {
        for j in 0..i {
            let s = half * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = s;
            h[(j, i)] = s;
        }
    }
    if h.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::inference("Hessian has non-finite entries"));
    }
    Ok(h)
}

fn to_dmatrix<T: Scalar>(m: &Matrix<T>) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].to_f64_lossy())
}

fn from_dmatrix<T: Scalar>(m: &DMatrix<f64>) -> Matrix<T> {
    let mut out = Matrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(i, j)] = T::lit(m[(i, j)]);
        }
    }
    out
}

/// `H^-1`, or the sandwich `H^-1 G H^-1` when per-cluster scores are given
/// (`G = C/(C-1) sum g_c g_c'`). `h` is the Hessian of the negative
/// log-likelihood.
pub fn vcov<T: Scalar>(h: &Matrix<T>, cluster_scores: Option<&Matrix<T>>) -> Result<Matrix<T>> {
    let hd = to_dmatrix(h);
    let p = hd.nrows();
    if p == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hd.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v.abs()), hi.max(v.abs())));
    if lo == 0.0 || hi / lo > MAX_CONDITION {
        return Err(Error::inference(
            "Hessian is singular; some parameters may not be identified",
        ));
    }
    let inv = hd
        .try_inverse()
        .ok_or_else(|| Error::inference("Hessian is singular; some parameters may not be identified"))?;
    let out = match cluster_scores {
        None => inv,
        Some(s) => {
            let c = s.rows();
            if c < 2 {
                return Err(Error::inference("robust covariance needs at least two clusters"));
            }
            let sd = to_dmatrix(s);
            let g = sd.transpose() * &sd * (c as f64 / (c as f64 - 1.0));
            &inv * g * &inv
        }
    };
    let sym = (&out + out.transpose()) * 0.5;
    Ok(from_dmatrix(&sym))
}

/// Sums unit score rows into cluster rows.
pub fn cluster_scores<T: Scalar>(unit_scores: &Matrix<T>, unit_cluster: &[usize], n_clusters: usize) -> Matrix<T> {
    let mut out = Matrix::zeros(n_clusters, unit_scores.cols());
    for (u, &c) in unit_cluster.iter().enumerate() {
        for (o, &s) in out.row_mut(c).iter_mut().zip(unit_scores.row(u)) {
            *o += s;
        }
    }
    out
}

pub struct Covariance<T> {
    pub vcov: Matrix<T>,
    pub clusters: Option<ClusterInfo>,
}

/// Maps each likelihood unit to a cluster index under `level`.
pub fn unit_clusters<T: Scalar>(
    ctx: &ObjectiveContext<'_, T>,
    level: &ClusterLevel,
) -> Result<(String, Vec<usize>, usize)> {
    let dm = ctx.design();
    let n_obs = dm.n_obs();
    let (name, labels): (String, Vec<String>) = match level {
        ClusterLevel::Obs => ("obs".into(), dm.obs_labels().to_vec()),
        ClusterLevel::Panel => {
            let p = dm
                .panel()
                .ok_or_else(|| Error::spec("panel clustering needs a panel id"))?;
            ("panel".into(), p.iter().map(|i| i.to_string()).collect())
        }
        ClusterLevel::Column => {
            let c = dm
                .clusters()
                .ok_or_else(|| Error::spec("cluster column requested but none was loaded"))?;
            ("cluster".into(), c.to_vec())
        }
        ClusterLevel::Auto => {
            let level = if ctx.spec().panel && dm.panel().is_some() {
                ClusterLevel::Panel
            } else if dm.clusters().is_some() {
                ClusterLevel::Column
            } else {
                ClusterLevel::Obs
            };
            return unit_clusters(ctx, &level);
        }
    };
    debug_assert_eq!(labels.len(), n_obs);
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut unit_cluster = Vec::with_capacity(ctx.units().len());
    for obs in ctx.units() {
        let first = labels[obs[0]].as_str();
        if obs.iter().any(|&n| labels[n] != first) {
            return Err(Error::spec(
                "clusters must not split an individual's observations in a panel model",
            ));
        }
        let next = index.len();
        unit_cluster.push(*index.entry(first).or_insert(next));
    }
    Ok((name, unit_cluster, index.len()))
}

/// Classical or cluster-robust covariance at `theta`, per the context's spec.
pub fn covariance<T: Scalar>(ctx: &mut ObjectiveContext<'_, T>, theta: &[T]) -> Result<Covariance<T>> {
    let h = numerical_hessian(
        |x, g| {
            ctx.loglik(x, Some(g))?;
            g.iter_mut().for_each(|v| *v = -*v);
            Ok(())
        },
        theta,
    )?;
    if !ctx.spec().robust {
        return Ok(Covariance {
            vcov: vcov(&h, None)?,
            clusters: None,
        });
    }
    let level = ctx.spec().cluster.clone();
    let (name, unit_cluster, n_clusters) = unit_clusters(ctx, &level)?;
    let scores = ctx.unit_scores(theta)?;
    let g = cluster_scores(&scores, &unit_cluster, n_clusters);
    Ok(Covariance {
        vcov: vcov(&h, Some(&g))?,
        clusters: Some(ClusterInfo {
            level: name,
            n_clusters,
        }),
    })
}

/// Two-sided normal p-value, `2 (1 - Phi(|z|))`.
pub fn p_value(z: f64) -> f64 {
    2.0 * normal_cdf(-z.abs())
}

pub fn significance_code(p: f64) -> &'static str {
    if p <= 0.001 {
        "***"
    } else if p <= 0.01 {
        "**"
    } else if p <= 0.05 {
        "*"
    } else if p <= 0.1 {
        "."
    } else {
        ""
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z_value: f64,
    pub p_value: f64,
    pub signif: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub rows: Vec<CoefficientRow>,
}

impl CoefficientTable {
    pub fn new(names: &[String], estimates: &[f64], std_errors: &[f64]) -> Self {
        let rows = names
            .iter()
            .zip(estimates)
            .zip(std_errors)
            .map(|((name, &estimate), &std_error)| {
                let z_value = estimate / std_error;
                let p = p_value(z_value);
                CoefficientRow {
                    name: name.clone(),
                    estimate,
                    std_error,
                    z_value,
                    p_value: p,
                    signif: significance_code(p).to_string(),
                }
            })
            .collect();
        Self { rows }
    }

    /// Coefficient table of a fit (standard errors are NaN without a vcov).
    pub fn from_fit<T: Scalar>(fit: &FitResult<T>) -> Self {
        let est: Vec<f64> = fit.coef().iter().map(|v| v.to_f64_lossy()).collect();
        let se: Vec<f64> = match fit.std_errors() {
            Some(se) => se.iter().map(|v| v.to_f64_lossy()).collect(),
            None => vec![f64::NAN; est.len()],
        };
        Self::new(&fit.param_names(), &est, &se)
    }

    pub fn get(&self, name: &str) -> Option<&CoefficientRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.estimate).collect()
    }

    pub fn std_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.std_error).collect()
    }
}

/// Multivariate-normal parameter draws `N(theta, vcov)` for Krinsky-Robb.
#[derive(Clone, Debug)]
pub struct KrDraws {
    pub draws: Matrix<f64>,
    /// vcov was not positive definite and had its eigenvalues clipped.
    pub repaired: bool,
}

pub fn krinsky_robb_draws(theta: &[f64], vcov: &Matrix<f64>, n: usize, seed: u64) -> Result<KrDraws> {
    let p = theta.len();
    if vcov.rows() != p || vcov.cols() != p {
        return Err(Error::inference("vcov shape does not match the parameter vector"));
    }
    let v = to_dmatrix(vcov);
    let (chol, repaired) = match v.clone().cholesky() {
        Some(c) => (c.l(), false),
        None => {
            let eig = SymmetricEigen::new(v);
            let clipped = eig.eigenvalues.map(|e| e.max(EIGEN_FLOOR));
            let fixed = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
            let fixed = (&fixed + fixed.transpose()) * 0.5;
            let c = fixed
                .cholesky()
                .ok_or_else(|| Error::inference("could not factor the repaired covariance"))?;
            (c.l(), true)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Matrix::zeros(n, p);
    let mut z = vec![0.0; p];
    for r in 0..n {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        let row = out.row_mut(r);
        for i in 0..p {
            let mut s = theta[i];
            for j in 0..=i {
                s += chol[(i, j)] * z[j];
            }
            row[i] = s;
        }
    }
    Ok(KrDraws { draws: out, repaired })
}

fn column_sd(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn fit_vcov_f64<T: Scalar>(fit: &FitResult<T>) -> Result<Matrix<f64>> {
    fit.vcov
        .as_ref()
        .map(|v| v.map(|x| x.to_f64_lossy()))
        .ok_or_else(|| Error::inference("fit has no covariance matrix"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WtpResult {
    pub table: CoefficientTable,
    pub warnings: Vec<String>,
}

/// Position of `scale_par` and the WTP transform of a preference-space fit.
fn wtp_transform<T: Scalar>(fit: &FitResult<T>, scale_par: &str) -> Result<(usize, Vec<String>)> {
    if fit.layout.space != Space::Preference {
        return Err(Error::spec("wtp() needs a preference space model"));
    }
    let idx = fit
        .layout
        .index_of(scale_par)
        .filter(|&i| i < fit.layout.n_coefs)
        .ok_or_else(|| Error::spec(format!("'{scale_par}' is not a model coefficient")))?;
    if fit.layout.random.iter().any(|r| r.coef == idx) {
        return Err(Error::spec(format!(
            "'{scale_par}' is a random parameter; WTP by division is undefined"
        )));
    }
    let mut names = vec![SCALE_PAR_NAME.to_string()];
    names.extend(
        fit.layout
            .names()
            .into_iter()
            .enumerate()
            .filter(|&(i, _)| i != idx)
            .map(|(_, n)| n),
    );
    Ok((idx, names))
}

fn apply_wtp(theta: &[f64], idx: usize) -> Vec<f64> {
    let neg = -theta[idx];
    let mut out = Vec::with_capacity(theta.len());
    out.push(neg);
    out.extend(
        theta
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != idx)
            .map(|(_, &v)| v / neg),
    );
    out
}

/// WTP from a preference-space fit: the scale row is `-alpha`, every other
/// entry is divided by `-alpha`. Standard errors come from `kr_draws`
/// Krinsky-Robb parameter draws.
pub fn wtp<T: Scalar>(fit: &FitResult<T>, scale_par: &str, kr_draws: usize, seed: u64) -> Result<WtpResult> {
    let (idx, names) = wtp_transform(fit, scale_par)?;
    let theta: Vec<f64> = fit.coef().iter().map(|v| v.to_f64_lossy()).collect();
    if theta[idx] == 0.0 {
        return Err(Error::Domain(format!("coefficient of '{scale_par}' is zero")));
    }
    let point = apply_wtp(&theta, idx);
    let vc = fit_vcov_f64(fit)?;
    let kr = krinsky_robb_draws(&theta, &vc, kr_draws, seed)?;
    let transformed: Vec<Vec<f64>> = kr.draws.iter_rows().map(|r| apply_wtp(r, idx)).collect();
    let se: Vec<f64> = (0..point.len())
        .map(|j| column_sd(transformed.iter().map(|r| r[j])))
        .collect();
    let mut warnings = Vec::new();
    if kr.repaired {
        warnings.push("covariance was not positive definite; eigenvalues clipped".into());
    }
    let alpha_se = vc[(idx, idx)].sqrt();
    if (theta[idx] / alpha_se).abs() < 2.0 {
        warnings.push(format!(
            "coefficient of '{scale_par}' is not clearly different from zero; WTP draws are heavy tailed"
        ));
    }
    Ok(WtpResult {
        table: CoefficientTable::new(&names, &point, &se),
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub pref: f64,
    pub wtp: f64,
    pub difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WtpComparison {
    /// Parameter rows followed by a final `logLik` row.
    pub rows: Vec<ComparisonRow>,
}

impl WtpComparison {
    pub fn max_abs_difference(&self) -> f64 {
        self.rows[..self.rows.len() - 1]
            .iter()
            .fold(0.0, |m, r| m.max(r.difference.abs()))
    }
}

/// Computed WTP of a preference fit against the direct estimates of a WTP
/// fit; `difference = wtp - pref`.
pub fn wtp_compare<T: Scalar>(pref: &FitResult<T>, wtp_fit: &FitResult<T>, scale_par: &str) -> Result<WtpComparison> {
    if wtp_fit.layout.space != Space::Wtp {
        return Err(Error::Comparison("second model must be estimated in WTP space".into()));
    }
    let (idx, names) = wtp_transform(pref, scale_par)?;
    let theta: Vec<f64> = pref.coef().iter().map(|v| v.to_f64_lossy()).collect();
    let computed = apply_wtp(&theta, idx);
    let wtp_names = wtp_fit.param_names();
    if names != wtp_names {
        return Err(Error::Comparison(format!(
            "parameter names differ: [{}] vs [{}]",
            names.join(", "),
            wtp_names.join(", ")
        )));
    }
    let mut rows: Vec<ComparisonRow> = names
        .into_iter()
        .zip(computed)
        .zip(wtp_fit.coef())
        .map(|((name, p), &w)| {
            let w = w.to_f64_lossy();
            ComparisonRow {
                name,
                pref: p,
                wtp: w,
                difference: w - p,
            }
        })
        .collect();
    let (a, b) = (pref.loglik().to_f64_lossy(), wtp_fit.loglik().to_f64_lossy());
    rows.push(ComparisonRow {
        name: "logLik".into(),
        pref: a,
        wtp: b,
        difference: b - a,
    });
    Ok(WtpComparison { rows })
}

/// Type-7 sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomCoefSummary {
    pub name: String,
    pub dist: Dist,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantiles of `n_draws` realizations of each random coefficient at the
/// estimate. Min and max report the distribution's support.
pub fn random_coef_summary<T: Scalar>(fit: &FitResult<T>, n_draws: usize) -> Result<Vec<RandomCoefSummary>> {
    let layout = &fit.layout;
    if !layout.is_mixed() {
        return Ok(Vec::new());
    }
    let o = &fit.options;
    let draws: DrawSet<T> = DrawSet::for_layout(layout, o.draw_type, n_draws, o.draw_columns, o.halton_drop)?;
    let coefs = realize_parameters(fit.coef(), layout, &draws)?;
    Ok(layout
        .random
        .iter()
        .map(|r| {
            let mut v: Vec<f64> = coefs.column(r.coef).iter().map(|x| x.to_f64_lossy()).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let (min, max) = match r.dist {
                Dist::Normal => (f64::NEG_INFINITY, f64::INFINITY),
                Dist::LogNormal | Dist::CensoredNormal => (0.0, f64::INFINITY),
            };
            RandomCoefSummary {
                name: r.name.clone(),
                dist: r.dist,
                min,
                q1: quantile_sorted(&v, 0.25),
                median: quantile_sorted(&v, 0.5),
                mean,
                q3: quantile_sorted(&v, 0.75),
                max,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_statistics_identities() {
        let s = fit_statistics(-2656.8878790, -3343.7419990, 5, 2412);
        assert!((s.aic - 5323.7757580).abs() < 1e-6);
        assert!((s.bic - 5352.7168).abs() < 1e-3);
        assert!((s.mcfadden_r2 - 0.2054148).abs() < 1e-7);
        assert!((s.adj_mcfadden_r2 - 0.2039195).abs() < 1e-7);
        assert_eq!(fit_statistics(-10.0, -10.0, 2, 5).mcfadden_r2, 0.0);
        assert_eq!(fit_statistics(-10.0, -20.0, 0, 5).aic, 20.0);
    }

    #[test]
    fn hessian_of_quadratic_form() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, -0.2], [0.5, -0.2, 2.0]];
        let h = numerical_hessian(
            |x: &[f64], g: &mut [f64]| {
                for i in 0..3 {
                    g[i] = (0..3).map(|j| a[i][j] * x[j]).sum();
                }
                Ok(())
            },
            &[0.3, -1.0, 2.0],
        )
        .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((h[(i, j)] - a[i][j]).abs() <= 1e-6 * a[i][j].abs().max(1e-3));
            }
        }
    }

    #[test]
    fn hessian_of_quartic() {
        let h = numerical_hessian(
            |x: &[f64], g: &mut [f64]| {
                g[0] = 4.0 * x[0].powi(3);
                Ok(())
            },
            &[1.0],
        )
        .unwrap();
        assert!((h[(0, 0)] - 12.0).abs() < 1e-4);
    }

    #[test]
    fn vcov_inverts_and_rejects_singular() {
        let h = Matrix::from_vec(2, 2, vec![2.0, 0.0, 0.0, 4.0]);
        let v = vcov(&h, None).unwrap();
        assert_eq!(v.as_slice(), &[0.5, 0.0, 0.0, 0.25]);
        let s = Matrix::from_vec(2, 2, vec![1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(vcov(&s, None), Err(Error::Inference(_))));
    }

    #[test]
    fn sandwich_with_identity_hessian_is_scaled_outer_product() {
        let h = Matrix::from_vec(1, 1, vec![1.0_f64]);
        let g = Matrix::from_vec(2, 1, vec![1.0, -1.0]);
        let v = vcov(&h, Some(&g)).unwrap();
        assert!((v[(0, 0)] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn p_values_and_codes() {
        assert!((p_value(1.959964) - 0.05).abs() < 1e-6);
        assert_eq!(p_value(0.0), 1.0);
        assert!(p_value(40.0) >= 0.0);
        assert_eq!(significance_code(0.0005), "***");
        assert_eq!(significance_code(0.005), "**");
        assert_eq!(significance_code(0.03), "*");
        assert_eq!(significance_code(0.07), ".");
        assert_eq!(significance_code(0.5), "");
    }

    #[test]
    fn kr_draws_match_moments() {
        let theta = [1.0, -2.0];
        let v = Matrix::from_vec(2, 2, vec![0.04, 0.01, 0.01, 0.09]);
        let kr = krinsky_robb_draws(&theta, &v, 20_000, 3).unwrap();
        assert!(!kr.repaired);
        let c0 = kr.draws.column(0);
        let c1 = kr.draws.column(1);
        let m0 = c0.iter().sum::<f64>() / 2e4;
        let m1 = c1.iter().sum::<f64>() / 2e4;
        assert!((m0 - 1.0).abs() < 0.01 && (m1 + 2.0).abs() < 0.01);
        let cov = c0.iter().zip(&c1).map(|(a, b)| (a - m0) * (b - m1)).sum::<f64>() / 2e4;
        assert!((cov - 0.01).abs() < 0.002);
        let again = krinsky_robb_draws(&theta, &v, 20_000, 3).unwrap();
        assert_eq!(kr.draws, again.draws);
    }

    #[test]
    fn kr_repairs_indefinite_covariance() {
        let v = Matrix::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        let kr = krinsky_robb_draws(&[0.0, 0.0], &v, 100, 1).unwrap();
        assert!(kr.repaired);
        assert!(kr.draws.as_slice().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.25), 1.75);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
    }

    #[test]
    fn wtp_transform_divides_by_negative_price() {
        let out = apply_wtp(&[-0.5, 1.0, 0.0, -2.0], 0);
        assert_eq!(out, vec![0.5, 2.0, 0.0, -4.0]);
    }
}
