//! Multi-start maximum likelihood estimation.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LongChoiceData;
use crate::design::{encode, precompute_differences, DesignMatrix, Encoding};
use crate::draws::DrawSet;
use crate::error::{Error, Result};
use crate::inference::{self, FitStatistics};
use crate::likelihood::ObjectiveContext;
use crate::matrix::Matrix;
use crate::optim::{minimize, Objective};
use crate::scalar::Scalar;
use crate::spec::{build_layout, initial_values, Dist, EstimationOptions, ModelSpec, ParameterLayout, Space};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    /// Objective change fell below `ftol_rel`/`ftol_abs`, or no further
    /// descent step could be found.
    FtolReached,
    /// Step length fell below `xtol_rel`/`xtol_abs`.
    XtolReached,
    MaxIterations,
    /// The objective was not finite at the starting point.
    EvaluationFailure,
    /// Parameters ran off beyond any plausible magnitude.
    Diverged,
}

impl ExitStatus {
    pub const ALL: [ExitStatus; 5] = [
        ExitStatus::FtolReached,
        ExitStatus::XtolReached,
        ExitStatus::MaxIterations,
        ExitStatus::EvaluationFailure,
        ExitStatus::Diverged,
    ];

    /// Converged by a tolerance criterion.
    pub fn is_success(self) -> bool {
        matches!(self, ExitStatus::FtolReached | ExitStatus::XtolReached)
    }

    /// Produced a finite optimum candidate (possibly unconverged).
    pub fn is_usable(self) -> bool {
        self.is_success() || self == ExitStatus::MaxIterations
    }

    pub fn name(self) -> &'static str {
        match self {
            ExitStatus::FtolReached => "ftol_reached",
            ExitStatus::XtolReached => "xtol_reached",
            ExitStatus::MaxIterations => "max_iterations",
            ExitStatus::EvaluationFailure => "evaluation_failure",
            ExitStatus::Diverged => "diverged",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExitStatus::FtolReached => {
                "optimization stopped because ftol_rel or ftol_abs was reached"
            }
            ExitStatus::XtolReached => {
                "optimization stopped because xtol_rel or xtol_abs was reached"
            }
            ExitStatus::MaxIterations => "optimization stopped because max_iterations was reached",
            ExitStatus::EvaluationFailure => {
                "the log-likelihood was not finite at the starting values"
            }
            ExitStatus::Diverged => "parameters diverged (magnitude above 1e8 or non-finite)",
        }
    }
}

impl fmt::Display for ExitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct RunResult<T> {
    pub run_index: usize,
    pub start_values: Vec<T>,
    pub theta_hat: Vec<T>,
    pub loglik: T,
    pub gradient_norm: T,
    pub iterations: usize,
    pub exit_status: ExitStatus,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub n_obs: usize,
    pub n_rows: usize,
    pub n_individuals: Option<usize>,
    /// Share of observations choosing each within-observation position.
    pub alternative_frequencies: Vec<f64>,
}

/// Cluster structure used for the robust covariance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub level: String,
    pub n_clusters: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct FitResult<T> {
    pub spec: ModelSpec,
    pub layout: ParameterLayout,
    pub encoding: Encoding,
    pub options: EstimationOptions,
    pub best: RunResult<T>,
    pub all_runs: Vec<RunResult<T>>,
    /// Gradient of the log-likelihood at the best run's estimate.
    pub gradient: Vec<T>,
    pub null_loglik: T,
    pub vcov: Option<Matrix<T>>,
    pub clusters: Option<ClusterInfo>,
    pub fit_stats: FitStatistics,
    pub data_summary: DataSummary,
    pub elapsed: Duration,
    pub warnings: Vec<String>,
    /// Estimation data, kept for prediction without `newdata`.
    #[serde(skip)]
    pub training: Option<Arc<LongChoiceData>>,
}

impl<T: Scalar> FitResult<T> {
    pub fn coef(&self) -> &[T] {
        &self.best.theta_hat
    }

    pub fn param_names(&self) -> Vec<String> {
        self.layout.names()
    }

    pub fn loglik(&self) -> T {
        self.best.loglik
    }

    pub fn coef_of(&self, name: &str) -> Option<T> {
        self.layout.index_of(name).map(|i| self.best.theta_hat[i])
    }

    pub fn std_errors(&self) -> Option<Vec<T>> {
        self.vcov
            .as_ref()
            .map(|v| (0..v.rows()).map(|i| v[(i, i)].sqrt()).collect())
    }

    pub fn is_mixed(&self) -> bool {
        self.layout.is_mixed()
    }
}

/// Affine reparameterization `theta = factor * u + shift` used during
/// optimization, chosen so that every coefficient acts on an input with
/// max |x| = 1. Log-normal parameters only shift.
#[derive(Clone, Debug)]
pub(crate) struct Scaling<T> {
    factor: Vec<T>,
    shift: Vec<T>,
}

impl<T: Scalar> Scaling<T> {
    pub(crate) fn identity(n: usize) -> Self {
        Self {
            factor: vec![T::one(); n],
            shift: vec![T::zero(); n],
        }
    }

    pub(crate) fn from_design(dm: &DesignMatrix<T>, layout: &ParameterLayout) -> Self {
        let max_abs = |col: &mut dyn Iterator<Item = T>| {
            let m = col.fold(T::zero(), |m, v| m.max(v.abs()));
            if m > T::zero() && m.is_finite() {
                m
            } else {
                T::one()
            }
        };
        let k = dm.n_cols();
        let sx: Vec<T> = (0..k)
            .map(|j| max_abs(&mut (0..dm.n_rows()).map(|r| dm.x_row(r)[j])))
            .collect();
        // per-draw coefficient multipliers
        let coef_factor: Vec<T> = match (layout.space, dm.scale()) {
            (Space::Wtp, Some(p)) => {
                let sp = max_abs(&mut p.iter().copied());
                std::iter::once(T::one() / sp).chain(sx.iter().map(|&s| sp / s)).collect()
            }
            _ => sx.iter().map(|&s| T::one() / s).collect(),
        };
        let mut out = Self::identity(layout.len());
        let random = layout.random_of_coef();
        for (c, &m) in layout.coef_mean.iter().enumerate() {
            match random[c].map(|r| layout.random[r].dist) {
                Some(Dist::LogNormal) => out.shift[m] = coef_factor[c].ln(),
                _ => out.factor[m] = coef_factor[c],
            }
        }
        for r in &layout.random {
            if r.dist != Dist::LogNormal {
                out.factor[r.sd_index] = coef_factor[r.coef];
            }
        }
        for &(row, _, index) in &layout.cholesky {
            let r = &layout.random[row];
            if r.dist != Dist::LogNormal {
                out.factor[index] = coef_factor[r.coef];
            }
        }
        out
    }

    fn to_theta(&self, u: &[T]) -> Vec<T> {
        u.iter()
            .zip(self.factor.iter().zip(&self.shift))
            .map(|(&u, (&f, &s))| f * u + s)
            .collect()
    }

    fn to_internal(&self, theta: &[T]) -> Vec<T> {
        theta
            .iter()
            .zip(self.factor.iter().zip(&self.shift))
            .map(|(&t, (&f, &s))| (t - s) / f)
            .collect()
    }
}

/// Negative log-likelihood of a context in scaled coordinates, for the
/// minimizer.
struct NegLogLik<'c, 'a, T> {
    ctx: &'c mut ObjectiveContext<'a, T>,
    scaling: &'c Scaling<T>,
}

impl<T: Scalar> Objective<T> for NegLogLik<'_, '_, T> {
    fn dim(&self) -> usize {
        self.ctx.n_params()
    }

    fn eval(&mut self, x: &[T], grad: &mut [T]) -> T {
        let theta = self.scaling.to_theta(x);
        match self.ctx.loglik(&theta, Some(grad)) {
            Ok(ll) => {
                for (g, &f) in grad.iter_mut().zip(&self.scaling.factor) {
                    *g = -*g * f;
                }
                -ll
            }
            Err(_) => T::nan(),
        }
    }
}

/// Where a run starts: a point in original units, or one drawn in scaled
/// units.
enum Start<T> {
    Original(Vec<T>),
    Scaled(Vec<T>),
}

/// One optimization run from `x0` (original units).
pub fn run_once<T: Scalar>(
    ctx: &mut ObjectiveContext<'_, T>,
    x0: Vec<T>,
    opts: &EstimationOptions,
    run_index: usize,
) -> RunResult<T> {
    let scaling = Scaling::identity(x0.len());
    run_scaled(ctx, &scaling, Start::Original(x0), opts, run_index)
}

fn run_scaled<T: Scalar>(
    ctx: &mut ObjectiveContext<'_, T>,
    scaling: &Scaling<T>,
    start: Start<T>,
    opts: &EstimationOptions,
    run_index: usize,
) -> RunResult<T> {
    let clock = Instant::now();
    let (start_values, u0) = match start {
        Start::Original(x) => {
            let u = scaling.to_internal(&x);
            (x, u)
        }
        Start::Scaled(u) => (scaling.to_theta(&u), u),
    };
    let mut obj = NegLogLik { ctx, scaling };
    let m = minimize(&mut obj, &u0, &opts.tolerances, opts.max_iterations);
    let theta_hat = scaling.to_theta(&m.x);
    // report the gradient in original units
    let gradient_norm = m
        .gradient
        .iter()
        .zip(&scaling.factor)
        .fold(T::zero(), |a, (&g, &f)| a.max((g / f).abs()));
    RunResult {
        run_index,
        start_values,
        theta_hat,
        loglik: -m.value,
        gradient_norm,
        iterations: m.iterations,
        exit_status: m.status,
        elapsed: clock.elapsed(),
    }
}

/// Runs `opts.num_multi_starts` optimizations on up to `opts.num_cores`
/// threads. Each run gets its own copy of the context's scratch buffers; the
/// results are in run order and do not depend on scheduling.
pub fn multistart<T: Scalar>(
    ctx: &ObjectiveContext<'_, T>,
    opts: &EstimationOptions,
) -> Result<Vec<RunResult<T>>> {
    opts.validate(Some(ctx.n_params()))?;
    let scaling = if opts.scale_inputs {
        Scaling::from_design(ctx.design(), ctx.layout())
    } else {
        Scaling::identity(ctx.n_params())
    };
    // user start values are in original units; generated ones in scaled units
    let starts = (1..=opts.num_multi_starts)
        .map(|k| {
            let x = initial_values(ctx.layout(), opts, k)?;
            Ok(if k == 1 && opts.start_vals.is_some() {
                Start::Original(x)
            } else {
                Start::Scaled(x)
            })
        })
        .collect::<Result<Vec<Start<T>>>>()?;
    let job = |(k, x0): (usize, Start<T>)| {
        let mut local = ctx.clone();
        run_scaled(&mut local, &scaling, x0, opts, k + 1)
    };
    if opts.num_cores == 1 || opts.num_multi_starts == 1 {
        return Ok(starts.into_iter().enumerate().map(job).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.num_cores)
        .build()
        .map_err(|e| Error::Capability(format!("could not start worker pool: {e}")))?;
    Ok(pool.install(|| starts.into_par_iter().enumerate().map(job).collect()))
}

/// Highest log-likelihood among runs with a usable status.
pub fn select_best<T: Scalar>(runs: &[RunResult<T>]) -> Result<&RunResult<T>> {
    runs.iter()
        .filter(|r| r.exit_status.is_usable() && r.loglik.is_finite())
        .fold(None, |best: Option<&RunResult<T>>, r| match best {
            Some(b) if b.loglik >= r.loglik => Some(b),
            _ => Some(r),
        })
        .ok_or_else(|| Error::Estimation {
            statuses: runs.iter().map(|r| (r.run_index, r.exit_status)).collect(),
        })
}

/// Everything built from the data before optimization starts.
pub struct Prepared<T> {
    pub design: DesignMatrix<T>,
    pub layout: ParameterLayout,
    pub draws: Option<DrawSet<T>>,
}

impl<T: Scalar> Prepared<T> {
    pub fn new(data: &LongChoiceData, spec: &ModelSpec, opts: &EstimationOptions) -> Result<Self> {
        spec.validate()?;
        opts.validate(None)?;
        if data.outcome().is_none() {
            return Err(Error::schema("estimation data needs an outcome column"));
        }
        let design = precompute_differences(encode(data, &spec.pars, spec.scale_par.as_deref())?)?;
        let layout = build_layout(spec, design.encoding())?;
        opts.validate(Some(layout.len()))?;
        let draws = if layout.is_mixed() {
            Some(DrawSet::for_layout(
                &layout,
                opts.draw_type,
                opts.num_draws,
                opts.draw_columns,
                opts.halton_drop,
            )?)
        } else {
            None
        };
        Ok(Self {
            design,
            layout,
            draws,
        })
    }

    pub fn context<'a>(&'a self, spec: &'a ModelSpec) -> Result<ObjectiveContext<'a, T>> {
        ObjectiveContext::new(&self.design, spec, &self.layout, self.draws.as_ref())
    }
}

/// Null log-likelihood: every alternative equally likely.
pub fn null_loglik<T: Scalar>(dm: &DesignMatrix<T>, weights: Option<&[T]>) -> T {
    dm.obs_bounds()
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (n, r)| {
            let w = weights.map_or(T::one(), |w| w[n]);
            acc - w * T::from_usize_lossy(r.len()).ln()
        })
}

/// Fits `spec` to `data`: multi-start optimization, then covariance and fit
/// statistics at the best run.
pub fn estimate<T: Scalar>(
    data: &LongChoiceData,
    spec: &ModelSpec,
    opts: &EstimationOptions,
) -> Result<FitResult<T>> {
    let start = Instant::now();
    let prep = Prepared::<T>::new(data, spec, opts)?;
    let ctx = prep.context(spec)?;
    let runs = multistart(&ctx, opts)?;
    let best = select_best(&runs)?.clone();

    let mut warnings = Vec::new();
    if best.exit_status == ExitStatus::MaxIterations {
        warnings.push(format!(
            "best run (run {}) stopped at max_iterations = {} without meeting a tolerance",
            best.run_index, opts.max_iterations
        ));
    }

    let mut ctx = ctx;
    let mut gradient = vec![T::zero(); best.theta_hat.len()];
    ctx.loglik(&best.theta_hat, Some(&mut gradient))?;
    let null = null_loglik(&prep.design, ctx.weights());

    let (vcov, clusters) = match inference::covariance(&mut ctx, &best.theta_hat) {
        Ok(c) => (Some(c.vcov), c.clusters),
        Err(e) => {
            warnings.push(format!("covariance unavailable: {e}"));
            (None, None)
        }
    };
    let fit_stats = inference::fit_statistics(
        best.loglik.to_f64_lossy(),
        null.to_f64_lossy(),
        best.theta_hat.len(),
        prep.design.n_obs(),
    );
    let data_summary = DataSummary {
        n_obs: data.n_obs(),
        n_rows: data.n_rows(),
        n_individuals: prep.design.panel().map(|_| prep.design.n_panels()),
        alternative_frequencies: data.alternative_frequencies(),
    };
    Ok(FitResult {
        spec: spec.clone(),
        layout: prep.layout.clone(),
        encoding: prep.design.encoding().clone(),
        options: opts.clone(),
        best,
        all_runs: runs,
        gradient,
        null_loglik: null,
        vcov,
        clusters,
        fit_stats,
        data_summary,
        elapsed: start.elapsed(),
        warnings,
        training: Some(Arc::new(data.clone())),
    })
}
