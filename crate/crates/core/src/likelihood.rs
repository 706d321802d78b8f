//! Log-likelihood and analytic gradient for fixed and mixed logit models.
//!
//! Everything is written in terms of the chosen alternative: with
//! `d_j = v_j - v_c` over the non-chosen rows, `P_c = 1 / (1 + sum exp(d_j))`.

use crate::design::DesignMatrix;
use crate::draws::{realize_draw, DrawSet};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::spec::{ModelSpec, ParameterLayout, Space};

/// Per-row utilities for one coefficient vector.
///
/// Preference space: `v = x . beta`. WTP space: `coefs = [lambda, omega..]`
/// and `v = lambda (x . omega - p)`.
pub fn utilities<T: Scalar>(coefs: &[T], dm: &DesignMatrix<T>, space: Space) -> Result<Vec<T>> {
    let k = dm.n_cols();
    let expected = k + usize::from(space == Space::Wtp);
    if coefs.len() != expected {
        return Err(Error::spec(format!(
            "expected {expected} coefficients, got {}",
            coefs.len()
        )));
    }
    let n = dm.n_rows();
    let mut v = Vec::with_capacity(n);
    match space {
        Space::Preference => {
            for row in 0..n {
                v.push(dot(dm.x_row(row), coefs));
            }
        }
        Space::Wtp => {
            let scale = dm
                .scale()
                .ok_or_else(|| Error::spec("WTP utilities need a scale column"))?;
            let (lambda, omega) = (coefs[0], &coefs[1..]);
            for row in 0..n {
                v.push(lambda * (dot(dm.x_row(row), omega) - scale[row]));
            }
        }
    }
    Ok(v)
}

/// Probability of alternative `chosen` (index within `v`).
pub fn chosen_prob<T: Scalar>(v: &[T], chosen: usize) -> T {
    ln_chosen_prob(v, chosen).exp()
}

/// `ln P_c`, stable for large utility gaps.
pub fn ln_chosen_prob<T: Scalar>(v: &[T], chosen: usize) -> T {
    let vc = v[chosen];
    let diffs = v
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != chosen)
        .map(|(_, &vj)| vj - vc);
    -log1p_sum_exp(diffs)
}

/// `ln(1 + sum exp(d_j))`, shifted by the largest exponent.
fn log1p_sum_exp<T: Scalar>(d: impl Iterator<Item = T> + Clone) -> T {
    let m = d.clone().fold(T::zero(), |m, x| if x > m { x } else { m });
    if !m.is_finite() {
        return m;
    }
    let mut s = (-m).exp();
    for x in d {
        s += (x - m).exp();
    }
    m + s.ln()
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// One observation: returns `ln P_c` and, if `grad` is given, overwrites it
/// with `d ln P_c / d coefs`.
fn obs_ln_prob<T: Scalar>(
    dm: &DesignMatrix<T>,
    n: usize,
    coefs: &[T],
    space: Space,
    d: &mut Vec<T>,
    grad: Option<&mut [T]>,
) -> T {
    let k = dm.n_cols();
    let xd = dm.x_diff(n);
    let jm = dm.n_diff(n);
    d.clear();
    // For WTP, `d` first holds t_j = x_diff . omega - p_diff.
    match space {
        Space::Preference => {
            for j in 0..jm {
                d.push(dot(&xd[j * k..(j + 1) * k], coefs));
            }
        }
        Space::Wtp => {
            let pd = dm.scale_diff(n);
            for j in 0..jm {
                d.push(dot(&xd[j * k..(j + 1) * k], &coefs[1..]) - pd[j]);
            }
        }
    }
    let lambda = if space == Space::Wtp { coefs[0] } else { T::one() };
    let lse = log1p_sum_exp(d.iter().map(|&t| lambda * t));
    let Some(grad) = grad else {
        return -lse;
    };
    grad.iter_mut().for_each(|g| *g = T::zero());
    for j in 0..jm {
        let a = (lambda * d[j] - lse).exp();
        if a == T::zero() {
            continue;
        }
        let row = &xd[j * k..(j + 1) * k];
        match space {
            Space::Preference => {
                for (g, &x) in grad.iter_mut().zip(row) {
                    *g -= a * x;
                }
            }
            Space::Wtp => {
                grad[0] -= a * d[j];
                let al = a * lambda;
                for (g, &x) in grad[1..].iter_mut().zip(row) {
                    *g -= al * x;
                }
            }
        }
    }
    -lse
}

#[derive(Clone, Debug)]
struct Scratch<T> {
    coefs: Matrix<T>,
    slopes: Matrix<T>,
    gcoef: Vec<T>,
    unit_ll: Vec<T>,
    unit_grad: Matrix<T>,
    d: Vec<T>,
}

/// Everything one optimization run needs to evaluate the objective.
///
/// The design matrix and draws are borrowed and may be shared by concurrent
/// runs; the scratch buffers are owned, so evaluation takes `&mut self`.
#[derive(Clone, Debug)]
pub struct ObjectiveContext<'a, T> {
    dm: &'a DesignMatrix<T>,
    spec: &'a ModelSpec,
    layout: &'a ParameterLayout,
    draws: Option<&'a DrawSet<T>>,
    weights: Option<Vec<T>>,
    /// Observation indices making up each likelihood unit.
    units: Vec<Vec<usize>>,
    unit_weights: Option<Vec<T>>,
    scratch: Scratch<T>,
}

impl<'a, T: Scalar> ObjectiveContext<'a, T> {
    pub fn new(
        dm: &'a DesignMatrix<T>,
        spec: &'a ModelSpec,
        layout: &'a ParameterLayout,
        draws: Option<&'a DrawSet<T>>,
    ) -> Result<Self> {
        if !dm.has_differences() {
            return Err(Error::spec(
                "design matrix has no precomputed differences",
            ));
        }
        match (layout.is_mixed(), draws) {
            (true, None) => return Err(Error::spec("mixed logit models need draws")),
            (false, Some(_)) => return Err(Error::spec("draws given for a fixed-parameter model")),
            (true, Some(z)) if z.dim() != layout.random.len() => {
                return Err(Error::spec(format!(
                    "draws have {} columns, model has {} random parameters",
                    z.dim(),
                    layout.random.len()
                )))
            }
            _ => {}
        }
        if layout.space == Space::Wtp && dm.scale().is_none() {
            return Err(Error::spec("WTP space models need a scale column"));
        }
        let weights = if spec.weighted {
            Some(
                dm.weights()
                    .ok_or_else(|| Error::spec("weighted model but the data has no weights column"))?
                    .to_vec(),
            )
        } else {
            None
        };
        let n_obs = dm.n_obs();
        let units: Vec<Vec<usize>> = if spec.panel && layout.is_mixed() {
            let panel = dm
                .panel()
                .ok_or_else(|| Error::spec("panel model but the data has no panel id"))?;
            let mut units = vec![Vec::new(); dm.n_panels()];
            for (n, &i) in panel.iter().enumerate() {
                units[i].push(n);
            }
            units
        } else {
            (0..n_obs).map(|n| vec![n]).collect()
        };
        let unit_weights = weights
            .as_ref()
            .map(|w| units.iter().map(|u| w[u[0]]).collect());
        let r = draws.map_or(0, |z| z.num_draws());
        let max_diff = (0..n_obs).map(|n| dm.n_diff(n)).max().unwrap_or(0);
        let scratch = Scratch {
            coefs: Matrix::zeros(r, layout.n_coefs),
            slopes: Matrix::zeros(r, layout.random.len()),
            gcoef: vec![T::zero(); layout.n_coefs],
            unit_ll: vec![T::zero(); r],
            unit_grad: Matrix::zeros(r, layout.len()),
            d: Vec::with_capacity(max_diff),
        };
        Ok(Self {
            dm,
            spec,
            layout,
            draws,
            weights,
            units,
            unit_weights,
            scratch,
        })
    }

    pub fn n_params(&self) -> usize {
        self.layout.len()
    }

    pub fn layout(&self) -> &ParameterLayout {
        self.layout
    }

    pub fn spec(&self) -> &ModelSpec {
        self.spec
    }

    pub fn design(&self) -> &DesignMatrix<T> {
        self.dm
    }

    pub fn draws(&self) -> Option<&DrawSet<T>> {
        self.draws
    }

    /// Observations belonging to each likelihood unit: individuals for panel
    /// mixed logit, single observations otherwise.
    pub fn units(&self) -> &[Vec<usize>] {
        &self.units
    }

    /// Per-observation weights in use (None when unweighted).
    pub fn weights(&self) -> Option<&[T]> {
        self.weights.as_deref()
    }

    /// Log-likelihood, writing the gradient into `grad` if given.
    pub fn loglik(&mut self, theta: &[T], grad: Option<&mut [T]>) -> Result<T> {
        if theta.len() != self.layout.len() {
            return Err(Error::spec(format!(
                "parameter vector has {} entries, model has {}",
                theta.len(),
                self.layout.len()
            )));
        }
        if self.layout.is_mixed() {
            Ok(self.mxl(theta, grad, None))
        } else {
            Ok(self.mnl(theta, grad, None))
        }
    }

    /// Weighted gradient contribution of each unit (rows follow [`units`]).
    ///
    /// [`units`]: ObjectiveContext::units
    pub fn unit_scores(&mut self, theta: &[T]) -> Result<Matrix<T>> {
        let mut scores = Matrix::zeros(self.units.len(), self.layout.len());
        let mut grad = vec![T::zero(); self.layout.len()];
        if self.layout.is_mixed() {
            self.mxl(theta, Some(&mut grad), Some(&mut scores));
        } else {
            self.mnl(theta, Some(&mut grad), Some(&mut scores));
        }
        Ok(scores)
    }

    fn mnl(&mut self, theta: &[T], mut grad: Option<&mut [T]>, mut scores: Option<&mut Matrix<T>>) -> T {
        let layout = self.layout;
        let coefs: Vec<T> = layout.coef_mean.iter().map(|&i| theta[i]).collect();
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|x| *x = T::zero());
        }
        let want_grad = grad.is_some() || scores.is_some();
        let mut ll = T::zero();
        let Scratch { gcoef, d, .. } = &mut self.scratch;
        for n in 0..self.dm.n_obs() {
            let w = self.weights.as_ref().map_or(T::one(), |w| w[n]);
            let lp = obs_ln_prob(
                self.dm,
                n,
                &coefs,
                layout.space,
                d,
                if want_grad { Some(&mut gcoef[..]) } else { None },
            );
            ll += w * lp;
            if let Some(g) = grad.as_deref_mut() {
                for (&i, &gc) in layout.coef_mean.iter().zip(gcoef.iter()) {
                    g[i] += w * gc;
                }
            }
            if let Some(s) = scores.as_deref_mut() {
                let row = s.row_mut(n);
                for (&i, &gc) in layout.coef_mean.iter().zip(gcoef.iter()) {
                    row[i] = w * gc;
                }
            }
        }
        ll
    }

    fn mxl(&mut self, theta: &[T], mut grad: Option<&mut [T]>, mut scores: Option<&mut Matrix<T>>) -> T {
        let layout = self.layout;
        let draws = self.draws.expect("checked at construction");
        let z = draws.z();
        let r_count = draws.num_draws();
        let s = &mut self.scratch;
        for r in 0..r_count {
            realize_draw(theta, layout, z.row(r), s.coefs.row_mut(r), s.slopes.row_mut(r));
        }
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|x| *x = T::zero());
        }
        let want_grad = grad.is_some() || scores.is_some();
        let random_of_coef = layout.random_of_coef();
        let mut ll = T::zero();
        for (u, obs) in self.units.iter().enumerate() {
            for r in 0..r_count {
                let mut lur = T::zero();
                let gu = s.unit_grad.row_mut(r);
                if want_grad {
                    gu.iter_mut().for_each(|x| *x = T::zero());
                }
                for &n in obs {
                    let lp = obs_ln_prob(
                        self.dm,
                        n,
                        s.coefs.row(r),
                        layout.space,
                        &mut s.d,
                        if want_grad { Some(&mut s.gcoef[..]) } else { None },
                    );
                    lur += lp;
                    if !want_grad {
                        continue;
                    }
                    // chain rule from coefficient space to theta
                    let zr = z.row(r);
                    let slopes = s.slopes.row(r);
                    for (c, &gc) in s.gcoef.iter().enumerate() {
                        match random_of_coef[c] {
                            None => gu[layout.coef_mean[c]] += gc,
                            Some(q) => {
                                let rc = &layout.random[q];
                                let gs = gc * slopes[q];
                                gu[rc.mean_index] += gs;
                                gu[rc.sd_index] += gs * zr[q];
                            }
                        }
                    }
                    for &(row, col, index) in &layout.cholesky {
                        let c = layout.random[row].coef;
                        gu[index] += s.gcoef[c] * slopes[row] * zr[col];
                    }
                }
                s.unit_ll[r] = lur;
            }
            let m = s
                .unit_ll
                .iter()
                .fold(T::neg_infinity(), |m, &x| if x > m { x } else { m });
            if !m.is_finite() {
                // every draw underflowed (or went NaN): signal failure
                return if m.is_nan() { m } else { T::neg_infinity() };
            }
            let mut denom = T::zero();
            for x in s.unit_ll.iter_mut() {
                *x = (*x - m).exp();
                denom += *x;
            }
            let ln_p = m + (denom / T::from_usize_lossy(r_count)).ln();
            let w = self.unit_weights.as_ref().map_or(T::one(), |w| w[u]);
            ll += w * ln_p;
            if !want_grad {
                continue;
            }
            let scale = w / denom;
            if let Some(g) = grad.as_deref_mut() {
                for r in 0..r_count {
                    let wr = scale * s.unit_ll[r];
                    for (gi, &x) in g.iter_mut().zip(s.unit_grad.row(r)) {
                        *gi += wr * x;
                    }
                }
            }
            if let Some(sc) = scores.as_deref_mut() {
                let row = sc.row_mut(u);
                row.iter_mut().for_each(|x| *x = T::zero());
                for r in 0..r_count {
                    let wr = scale * s.unit_ll[r];
                    for (gi, &x) in row.iter_mut().zip(s.unit_grad.row(r)) {
                        *gi += wr * x;
                    }
                }
            }
        }
        ll
    }
}

/// Log-likelihood and gradient of a fixed-parameter model.
pub fn mnl_loglik_grad<T: Scalar>(theta: &[T], ctx: &mut ObjectiveContext<'_, T>) -> Result<(T, Vec<T>)> {
    if ctx.layout.is_mixed() {
        return Err(Error::spec("model has random parameters; use the simulated likelihood"));
    }
    let mut g = vec![T::zero(); theta.len()];
    let ll = ctx.loglik(theta, Some(&mut g))?;
    Ok((ll, g))
}

/// Simulated log-likelihood and gradient of a mixed logit model.
pub fn mxl_simulated_loglik_grad<T: Scalar>(
    theta: &[T],
    ctx: &mut ObjectiveContext<'_, T>,
) -> Result<(T, Vec<T>)> {
    if !ctx.layout.is_mixed() {
        return Err(Error::spec("model has no random parameters"));
    }
    let mut g = vec![T::zero(); theta.len()];
    let ll = ctx.loglik(theta, Some(&mut g))?;
    Ok((ll, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LongChoiceData, Schema};
    use crate::design::{encode, precompute_differences};
    use crate::draws::DrawType;
    use crate::spec::{build_layout, Dist};

    const SMALL: &str = "id,obs,y,price,feat,brand,w
1,1,1,8.1,0,a,1.5
1,1,0,6.1,0,b,1.5
1,1,0,7.9,1,c,1.5
1,2,0,9.8,0,a,1.5
1,2,1,6.1,1,b,1.5
1,2,0,5.0,0,c,1.5
2,3,0,3.5,1,a,0.5
2,3,0,4.0,0,b,0.5
2,3,1,7.0,0,c,0.5
2,4,1,4.4,0,a,0.5
2,4,0,6.3,0,b,0.5
2,4,0,2.2,1,c,0.5
3,5,0,5.5,0,a,2.0
3,5,1,3.1,1,b,2.0
3,5,0,8.0,0,c,2.0
3,6,0,7.7,1,a,2.0
3,6,0,6.6,0,b,2.0
3,6,1,4.9,1,c,2.0
";

    fn small() -> LongChoiceData {
        let schema = Schema::new("y", "obs").with_panel_id("id").with_weights("w");
        LongChoiceData::read_csv(SMALL.as_bytes(), &schema).unwrap()
    }

    fn setup(spec: &ModelSpec, data: &LongChoiceData) -> (DesignMatrix<f64>, ParameterLayout) {
        let dm = precompute_differences(encode(data, &spec.pars, spec.scale_par.as_deref()).unwrap()).unwrap();
        let layout = build_layout(spec, dm.encoding()).unwrap();
        (dm, layout)
    }

    fn fd_check(ctx: &mut ObjectiveContext<'_, f64>, theta: &[f64], h: f64, tol: f64) {
        let mut g = vec![0.0; theta.len()];
        ctx.loglik(theta, Some(&mut g)).unwrap();
        for i in 0..theta.len() {
            let mut tp = theta.to_vec();
            let mut tm = theta.to_vec();
            tp[i] += h;
            tm[i] -= h;
            let fd = (ctx.loglik(&tp, None).unwrap() - ctx.loglik(&tm, None).unwrap()) / (2.0 * h);
            let rel = (fd - g[i]).abs() / g[i].abs().max(1e-3);
            assert!(rel < tol, "param {i}: analytic {} fd {fd} rel {rel}", g[i]);
        }
    }

    #[test]
    fn chosen_prob_trivial_cases() {
        assert_eq!(chosen_prob(&[0.0_f64, 0.0], 0), 0.5);
        assert_eq!(chosen_prob(&[1.3_f64; 4], 2), 0.25);
    }

    #[test]
    fn chosen_prob_survives_large_gaps() {
        let lp = ln_chosen_prob(&[0.0_f64, 1000.0, 2.0], 0);
        assert!(lp.is_finite());
        assert!((lp + 1000.0).abs() < 1e-9);
        assert_eq!(ln_chosen_prob(&[1000.0_f64, 0.0], 0), -(-1000.0_f64).exp().ln_1p());
    }

    #[test]
    fn softmax_equivalence_and_translation_invariance() {
        let v = [0.3_f64, -1.7, 2.2, 0.05];
        let denom: f64 = v.iter().map(|x| x.exp()).sum();
        for c in 0..4 {
            let direct = v[c].exp() / denom;
            let p = chosen_prob(&v, c);
            assert!((p - direct).abs() / direct < 1e-12);
        }
        // dyadic values so the shift itself is exact
        let v = [0.25_f64, -1.75, 2.125, 0.0625];
        for c in 0..4 {
            let p = chosen_prob(&v, c);
            let shifted: Vec<f64> = v.iter().map(|x| x + 17.25).collect();
            assert_eq!(chosen_prob(&shifted, c), p);
        }
    }

    #[test]
    fn wtp_utilities_with_zero_wtp_are_minus_price() {
        let data = small();
        let spec = ModelSpec::wtp(["feat"], "price");
        let (dm, _) = setup(&spec, &data);
        let v = utilities(&[1.0, 0.0], &dm, Space::Wtp).unwrap();
        assert_eq!(v[0], -8.1);
        assert_eq!(v[4], -6.1);
        let spec = ModelSpec::preference(["price", "feat"]);
        let (dm, _) = setup(&spec, &data);
        assert!(utilities(&[0.0, 0.0], &dm, Space::Preference).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn null_loglik_is_uniform() {
        let data = small();
        let spec = ModelSpec::preference(["price", "feat"]);
        let (dm, layout) = setup(&spec, &data);
        let mut ctx = ObjectiveContext::new(&dm, &spec, &layout, None).unwrap();
        let ll = ctx.loglik(&[0.0, 0.0], None).unwrap();
        assert!((ll - 6.0 * (1.0_f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn mnl_gradients_match_finite_differences() {
        let data = small();
        for weighted in [false, true] {
            let spec = ModelSpec::preference(["price", "feat", "brand"]).with_weights(weighted);
            let (dm, layout) = setup(&spec, &data);
            let mut ctx = ObjectiveContext::new(&dm, &spec, &layout, None).unwrap();
            fd_check(&mut ctx, &[-0.4, 0.6, 0.3, -1.1], 1e-6, 1e-6);

            let spec = ModelSpec::wtp(["feat", "brand"], "price").with_weights(weighted);
            let (dm, layout) = setup(&spec, &data);
            let mut ctx = ObjectiveContext::new(&dm, &spec, &layout, None).unwrap();
            fd_check(&mut ctx, &[0.4, 1.5, -0.7, 2.0], 1e-6, 1e-6);
        }
    }

    #[test]
    fn unit_weights_match_unweighted_bitwise() {
        let csv = SMALL.replace(",1.5\n", ",1\n").replace(",0.5\n", ",1\n").replace(",2.0\n", ",1\n");
        let schema = Schema::new("y", "obs").with_panel_id("id").with_weights("w");
        let data = LongChoiceData::read_csv(csv.as_bytes(), &schema).unwrap();
        let theta = [-0.4, 0.6];
        let a = {
            let spec = ModelSpec::preference(["price", "feat"]);
            let (dm, layout) = setup(&spec, &data);
            ObjectiveContext::new(&dm, &spec, &layout, None).unwrap().loglik(&theta, None).unwrap()
        };
        let spec = ModelSpec::preference(["price", "feat"]).with_weights(true);
        let (dm, layout) = setup(&spec, &data);
        let b = ObjectiveContext::new(&dm, &spec, &layout, None).unwrap().loglik(&theta, None).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn wtp_and_preference_agree_at_mapped_parameters() {
        let data = small();
        let pref = ModelSpec::preference(["price", "feat", "brand"]);
        let (dm, layout) = setup(&pref, &data);
        let beta = [-0.37, 0.49, 0.8, -0.6];
        let a = ObjectiveContext::new(&dm, &pref, &layout, None).unwrap().loglik(&beta, None).unwrap();
        let wtp = ModelSpec::wtp(["feat", "brand"], "price");
        let (dm, layout) = setup(&wtp, &data);
        let lambda = -beta[0];
        let theta = [lambda, beta[1] / lambda, beta[2] / lambda, beta[3] / lambda];
        let b = ObjectiveContext::new(&dm, &wtp, &layout, None).unwrap().loglik(&theta, None).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    fn mixed_specs() -> Vec<ModelSpec> {
        let mut out = Vec::new();
        for dist in [Dist::Normal, Dist::LogNormal, Dist::CensoredNormal] {
            for panel in [false, true] {
                out.push(
                    ModelSpec::preference(["price", "feat", "brand"])
                        .with_rand_par("feat", dist)
                        .with_rand_par("brand", Dist::Normal)
                        .with_panel(panel)
                        .with_weights(true),
                );
                out.push(
                    ModelSpec::wtp(["feat", "brand"], "price")
                        .with_rand_par("feat", dist)
                        .with_rand_scale(dist)
                        .with_panel(panel),
                );
            }
        }
        out.push(
            ModelSpec::preference(["price", "feat", "brand"])
                .with_rand_par("price", Dist::Normal)
                .with_rand_par("feat", Dist::LogNormal)
                .with_rand_par("brand", Dist::Normal)
                .with_correlation(true)
                .with_panel(true),
        );
        out
    }

    #[test]
    fn mxl_gradients_match_finite_differences() {
        let data = small();
        for spec in mixed_specs() {
            let (dm, layout) = setup(&spec, &data);
            let draws = DrawSet::generate(DrawType::Halton, 10, layout.random.len()).unwrap();
            let mut ctx = ObjectiveContext::new(&dm, &spec, &layout, Some(&draws)).unwrap();
            let theta: Vec<f64> = (0..layout.len())
                .map(|i| 0.3 + 0.17 * (i as f64 * 1.7).sin())
                .collect();
            fd_check(&mut ctx, &theta, 1e-6, 1e-5);
        }
    }

    #[test]
    fn zero_sd_mxl_equals_mnl() {
        let data = small();
        let fixed = ModelSpec::preference(["price", "feat", "brand"]);
        let (dm, layout) = setup(&fixed, &data);
        let beta = [-0.4, 0.6, 0.3, -1.1];
        let a = ObjectiveContext::new(&dm, &fixed, &layout, None).unwrap().loglik(&beta, None).unwrap();
        for panel in [false, true] {
            let mixed = fixed.clone().with_rand_par("feat", Dist::Normal).with_panel(panel);
            let (dm, layout) = setup(&mixed, &data);
            let draws = DrawSet::generate(DrawType::Halton, 25, 1).unwrap();
            let mut theta = beta.to_vec();
            theta.push(0.0);
            let b = ObjectiveContext::new(&dm, &mixed, &layout, Some(&draws))
                .unwrap()
                .loglik(&theta, None)
                .unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn single_draw_equals_mnl_at_realized_coefficients() {
        let data = small();
        let mixed = ModelSpec::preference(["price", "feat"]).with_rand_par("feat", Dist::LogNormal);
        let (dm, layout) = setup(&mixed, &data);
        let draws = DrawSet::from_matrix(Matrix::from_vec(1, 1, vec![0.7]), DrawType::Halton);
        let theta = [-0.3, 0.2, 0.5];
        let b = ObjectiveContext::new(&dm, &mixed, &layout, Some(&draws))
            .unwrap()
            .loglik(&theta, None)
            .unwrap();
        let fixed = ModelSpec::preference(["price", "feat"]);
        let (dm, layout) = setup(&fixed, &data);
        let beta = [-0.3, (0.2_f64 + 0.5 * 0.7).exp()];
        let a = ObjectiveContext::new(&dm, &fixed, &layout, None).unwrap().loglik(&beta, None).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn panel_with_one_obs_per_individual_matches_cross_section() {
        let csv = SMALL.replacen("id,", "pid,id,", 1);
        let mut rows = csv.lines();
        let mut out = String::from(rows.next().unwrap());
        out.push('\n');
        for line in rows {
            let obs = line.split(',').nth(1).unwrap().to_string();
            out.push_str(&format!("{obs},{line}\n"));
        }
        let schema = Schema::new("y", "obs").with_panel_id("pid");
        let data = LongChoiceData::read_csv(out.as_bytes(), &schema).unwrap();
        let theta = [-0.4, 0.6, 0.9];
        let mut lls = Vec::new();
        for panel in [false, true] {
            let spec = ModelSpec::preference(["price", "feat"])
                .with_rand_par("feat", Dist::Normal)
                .with_panel(panel);
            let (dm, layout) = setup(&spec, &data);
            let draws = DrawSet::generate(DrawType::Halton, 30, 1).unwrap();
            lls.push(
                ObjectiveContext::new(&dm, &spec, &layout, Some(&draws))
                    .unwrap()
                    .loglik(&theta, None)
                    .unwrap(),
            );
        }
        assert_eq!(lls[0], lls[1]);
    }

    #[test]
    fn sd_sign_symmetry_under_antithetic_draws() {
        let data = small();
        let spec = ModelSpec::preference(["price", "feat"])
            .with_rand_par("feat", Dist::Normal)
            .with_panel(true);
        let (dm, layout) = setup(&spec, &data);
        let draws = DrawSet::generate_antithetic(DrawType::Halton, 10_000, 1).unwrap();
        let mut ctx = ObjectiveContext::new(&dm, &spec, &layout, Some(&draws)).unwrap();
        let a = ctx.loglik(&[-0.4, 0.6, 1.3], None).unwrap();
        let b = ctx.loglik(&[-0.4, 0.6, -1.3], None).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn unit_scores_sum_to_gradient() {
        let data = small();
        for spec in mixed_specs().into_iter().take(4) {
            let (dm, layout) = setup(&spec, &data);
            let draws = DrawSet::generate(DrawType::Sobol, 16, layout.random.len()).unwrap();
            let mut ctx = ObjectiveContext::new(&dm, &spec, &layout, Some(&draws)).unwrap();
            let theta: Vec<f64> = (0..layout.len()).map(|i| 0.1 * i as f64 - 0.2).collect();
            let mut g = vec![0.0; theta.len()];
            ctx.loglik(&theta, Some(&mut g)).unwrap();
            let s = ctx.unit_scores(&theta).unwrap();
            for p in 0..theta.len() {
                let sum: f64 = s.column(p).iter().sum();
                assert!((sum - g[p]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn context_rejects_mismatched_inputs() {
        let data = small();
        let spec = ModelSpec::preference(["price", "feat"]).with_rand_par("feat", Dist::Normal);
        let (dm, layout) = setup(&spec, &data);
        assert!(ObjectiveContext::new(&dm, &spec, &layout, None).is_err());
        let wrong = DrawSet::generate(DrawType::Halton, 5, 2).unwrap();
        assert!(ObjectiveContext::new(&dm, &spec, &layout, Some(&wrong)).is_err());
    }

    #[test]
    fn f32_evaluation_is_close_to_f64() {
        let data = small();
        let spec = ModelSpec::preference(["price", "feat"]);
        let dm: DesignMatrix<f32> = precompute_differences(encode(&data, &spec.pars, None).unwrap()).unwrap();
        let layout = build_layout(&spec, dm.encoding()).unwrap();
        let ll32 = ObjectiveContext::new(&dm, &spec, &layout, None)
            .unwrap()
            .loglik(&[-0.4_f32, 0.6], None)
            .unwrap();
        let (dm, layout) = setup(&spec, &data);
        let ll64 = ObjectiveContext::new(&dm, &spec, &layout, None)
            .unwrap()
            .loglik(&[-0.4, 0.6], None)
            .unwrap();
        assert!((ll32 as f64 - ll64).abs() < 1e-4);
    }
}
