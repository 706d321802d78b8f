//! Multinomial and mixed logit estimation in preference and
//! willingness-to-pay space.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64` for everyday use.
//!
//! ```no_run
//! use mxlogit::{estimate, load_csv, EstimationOptions, ModelSpec, Schema};
//!
//! let data = load_csv("data/yogurt.csv", &Schema::new("choice", "obsID")).unwrap();
//! let spec = ModelSpec::preference(["price", "feat", "brand"]);
//! let fit: mxlogit::Fit = estimate(&data, &spec, &EstimationOptions::default()).unwrap();
//! println!("{}", fit.loglik());
//! ```

pub mod data;
pub mod design;
pub mod draws;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod likelihood;
pub mod matrix;
pub mod optim;
pub mod predict;
pub mod scalar;
pub mod spec;

pub use data::{load_csv, Column, ColumnValues, LongChoiceData, RawChoiceData, Schema};
pub use design::{encode, precompute_differences, ColumnSpec, DesignMatrix, Encoding};
pub use draws::{halton, inv_normal_cdf, realize_parameters, sobol, DrawColumns, DrawSet, DrawType};
pub use error::{Error, Result};
pub use estimation::{estimate, multistart, ExitStatus, FitResult, RunResult};
pub use inference::{
    random_coef_summary, wtp, wtp_compare, CoefficientTable, FitStatistics, RandomCoefSummary,
    WtpComparison, WtpResult,
};
pub use likelihood::{chosen_prob, mnl_loglik_grad, mxl_simulated_loglik_grad, utilities, ObjectiveContext};
pub use matrix::Matrix;
pub use predict::{predict_outcomes, predict_probabilities, PredictOptions, PredictionFrame};
pub use scalar::Scalar;
pub use spec::{
    build_layout, ClusterLevel, Dist, EstimationOptions, ModelSpec, ParameterLayout, Space, Tolerances,
    SCALE_PAR_NAME,
};

pub type Fit = FitResult<f64>;
pub type Run = RunResult<f64>;
pub type Design = DesignMatrix<f64>;
pub type Draws = DrawSet<f64>;
pub type Context<'a> = ObjectiveContext<'a, f64>;

pub type Fit32 = FitResult<f32>;
pub type Design32 = DesignMatrix<f32>;
pub type Draws32 = DrawSet<f32>;
pub type Context32<'a> = ObjectiveContext<'a, f32>;
