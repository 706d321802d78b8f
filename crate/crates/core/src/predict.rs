//! Predicted choice probabilities and simulated outcomes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LongChoiceData;
use crate::design::DesignMatrix;
use crate::draws::{realize_parameters, DrawSet};
use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::inference::{krinsky_robb_draws, quantile_sorted, KR_DRAWS};
use crate::likelihood::utilities;
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::spec::ParameterLayout;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictOptions {
    /// Confidence level for Krinsky-Robb intervals, e.g. 0.95.
    pub ci: Option<f64>,
    pub kr_draws: usize,
    pub seed: u64,
    pub return_data: bool,
    /// Draws for simulating mixed logit probabilities; defaults to the
    /// estimation draw count.
    pub num_draws: Option<usize>,
}

impl Default for PredictOptions {
    fn default() -> Self {
        Self {
            ci: None,
            kr_draws: KR_DRAWS,
            seed: 0,
            return_data: false,
            num_draws: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub obs_id: String,
    pub predicted_prob: f64,
    pub predicted_prob_lower: Option<f64>,
    pub predicted_prob_upper: Option<f64>,
    pub predicted_outcome: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionFrame {
    pub rows: Vec<PredictionRow>,
    /// Input columns (name, displayed values) when requested.
    pub data: Option<Vec<(String, Vec<String>)>>,
}

impl PredictionFrame {
    pub fn probabilities(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.predicted_prob).collect()
    }
}

/// Probabilities of every row of `dm` for one coefficient vector per draw
/// (`coefs` is `R x n_coefs`), averaged over draws.
fn simulated_probs(coefs: &Matrix<f64>, dm: &DesignMatrix<f64>, layout: &ParameterLayout) -> Result<Vec<f64>> {
    let mut out = vec![0.0; dm.n_rows()];
    let r = coefs.rows() as f64;
    for c in coefs.iter_rows() {
        let v = utilities(c, dm, layout.space)?;
        for range in dm.obs_bounds() {
            let m = v[range.clone()].iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            let denom: f64 = v[range.clone()].iter().map(|&x| (x - m).exp()).sum();
            for j in range.clone() {
                out[j] += (v[j] - m).exp() / denom / r;
            }
        }
    }
    Ok(out)
}

struct Predictor<'a> {
    layout: &'a ParameterLayout,
    dm: DesignMatrix<f64>,
    draws: Option<DrawSet<f64>>,
}

impl Predictor<'_> {
    fn probs(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let coefs = match &self.draws {
            Some(d) => realize_parameters(theta, self.layout, d)?,
            None => {
                let c: Vec<f64> = self.layout.coef_mean.iter().map(|&i| theta[i]).collect();
                Matrix::from_vec(1, c.len(), c)
            }
        };
        simulated_probs(&coefs, &self.dm, self.layout)
    }
}

fn prepare<'a, T: Scalar>(
    fit: &'a FitResult<T>,
    newdata: Option<&'a LongChoiceData>,
    opts: &PredictOptions,
) -> Result<(&'a LongChoiceData, Predictor<'a>)> {
    let data = match newdata {
        Some(d) => d,
        None => fit
            .training
            .as_deref()
            .ok_or_else(|| Error::validation("no data attached to the fit; pass newdata"))?,
    };
    let dm: DesignMatrix<f64> = fit.encoding.apply(data)?;
    let draws = if fit.layout.is_mixed() {
        let r = opts.num_draws.unwrap_or(fit.options.num_draws);
        let o = &fit.options;
        Some(DrawSet::for_layout(&fit.layout, o.draw_type, r, o.draw_columns, o.halton_drop)?)
    } else {
        None
    };
    Ok((
        data,
        Predictor {
            layout: &fit.layout,
            dm,
            draws,
        },
    ))
}

fn echo(data: &LongChoiceData) -> Vec<(String, Vec<String>)> {
    let n = data.n_rows();
    let mut cols = vec![("obs_id".to_string(), data.row_obs_ids().to_vec())];
    if let Some(p) = data.panel_id() {
        cols.push(("panel_id".into(), p.to_vec()));
    }
    if let Some(y) = data.outcome() {
        cols.push(("outcome".into(), y.iter().map(|&b| u8::from(b).to_string()).collect()));
    }
    for c in data.columns() {
        cols.push((c.name.clone(), (0..n).map(|i| c.display(i)).collect()));
    }
    cols
}

/// Choice probabilities at the estimate, optionally with Krinsky-Robb
/// intervals. Without `newdata` the estimation data is used.
pub fn predict_probabilities<T: Scalar>(
    fit: &FitResult<T>,
    newdata: Option<&LongChoiceData>,
    opts: &PredictOptions,
) -> Result<PredictionFrame> {
    let (data, pred) = prepare(fit, newdata, opts)?;
    let theta: Vec<f64> = fit.coef().iter().map(|v| v.to_f64_lossy()).collect();
    let point = pred.probs(&theta)?;
    let mut bounds: Option<(Vec<f64>, Vec<f64>)> = None;
    if let Some(level) = opts.ci {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Domain(format!("ci level must be in (0, 1), got {level}")));
        }
        let vcov = fit
            .vcov
            .as_ref()
            .ok_or_else(|| Error::inference("fit has no covariance matrix"))?
            .map(|x| x.to_f64_lossy());
        let kr = krinsky_robb_draws(&theta, &vcov, opts.kr_draws, opts.seed)?;
        let sims = kr
            .draws
            .iter_rows()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|t| pred.probs(t))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let (lq, uq) = ((1.0 - level) / 2.0, (1.0 + level) / 2.0);
        let mut lower = Vec::with_capacity(point.len());
        let mut upper = Vec::with_capacity(point.len());
        let mut col = vec![0.0; sims.len()];
        for j in 0..point.len() {
            for (c, s) in col.iter_mut().zip(&sims) {
                *c = s[j];
            }
            col.sort_by(|a, b| a.total_cmp(b));
            lower.push(quantile_sorted(&col, lq));
            upper.push(quantile_sorted(&col, uq));
        }
        bounds = Some((lower, upper));
    }
    let ids = data.row_obs_ids();
    let rows = point
        .iter()
        .enumerate()
        .map(|(j, &p)| PredictionRow {
            obs_id: ids[j].clone(),
            predicted_prob: p,
            predicted_prob_lower: bounds.as_ref().map(|b| b.0[j].min(p)),
            predicted_prob_upper: bounds.as_ref().map(|b| b.1[j].max(p)),
            predicted_outcome: None,
        })
        .collect();
    Ok(PredictionFrame {
        rows,
        data: opts.return_data.then(|| echo(data)),
    })
}

/// Samples one chosen alternative per observation from the predicted
/// probabilities; reproducible for a given `opts.seed`.
pub fn predict_outcomes<T: Scalar>(
    fit: &FitResult<T>,
    newdata: Option<&LongChoiceData>,
    opts: &PredictOptions,
) -> Result<PredictionFrame> {
    let (data, pred) = prepare(fit, newdata, opts)?;
    let theta: Vec<f64> = fit.coef().iter().map(|v| v.to_f64_lossy()).collect();
    let probs = pred.probs(&theta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let chosen: Vec<usize> = data
        .obs_ranges()
        .iter()
        .map(|r| sample_index(&probs[r.clone()], rng.gen::<f64>()) + r.start)
        .collect();
    let ids = data.row_obs_ids();
    let mut rows: Vec<PredictionRow> = probs
        .iter()
        .enumerate()
        .map(|(j, &p)| PredictionRow {
            obs_id: ids[j].clone(),
            predicted_prob: p,
            predicted_prob_lower: None,
            predicted_prob_upper: None,
            predicted_outcome: Some(false),
        })
        .collect();
    for c in chosen {
        rows[c].predicted_outcome = Some(true);
    }
    Ok(PredictionFrame {
        rows,
        data: opts.return_data.then(|| echo(data)),
    })
}

/// Index whose cumulative probability first exceeds `u`.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left the total a hair under u: take the last positive entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Share of observations whose predicted outcome matches the observed choice.
pub fn outcome_accuracy(frame: &PredictionFrame, data: &LongChoiceData) -> Result<f64> {
    let y = data
        .outcome()
        .ok_or_else(|| Error::schema("accuracy needs an outcome column"))?;
    if frame.rows.len() != y.len() {
        return Err(Error::validation("prediction rows do not match the data"));
    }
    let mut hits = 0usize;
    for (row, &obs) in frame.rows.iter().zip(y) {
        if obs && row.predicted_outcome == Some(true) {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.n_obs() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_distribution_always_picks_first() {
        for u in [0.0, 0.3, 0.999_999] {
            assert_eq!(sample_index(&[1.0, 0.0, 0.0], u), 0);
        }
    }

    #[test]
    fn sampling_covers_cumulative_segments() {
        let p = [0.2, 0.5, 0.3];
        assert_eq!(sample_index(&p, 0.1), 0);
        assert_eq!(sample_index(&p, 0.2), 1);
        assert_eq!(sample_index(&p, 0.69), 1);
        assert_eq!(sample_index(&p, 0.7), 2);
        assert_eq!(sample_index(&[0.5, 0.5 - 1e-17], 1.0 - 1e-18), 1);
    }
}
