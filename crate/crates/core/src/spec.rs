//! Model formulation and the flat parameter vector the optimizer works on.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::design::Encoding;
use crate::draws::{DrawColumns, DrawType, HALTON_DROP};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Name given to the scale parameter in WTP space.
pub const SCALE_PAR_NAME: &str = "scalePar";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Preference,
    Wtp,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Preference => write!(f, "Preference"),
            Space::Wtp => write!(f, "Willingness-to-Pay"),
        }
    }
}

/// Mixing distribution of a random coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dist {
    #[serde(rename = "n")]
    Normal,
    #[serde(rename = "ln")]
    LogNormal,
    #[serde(rename = "cn")]
    CensoredNormal,
}

impl Dist {
    pub fn code(self) -> &'static str {
        match self {
            Dist::Normal => "n",
            Dist::LogNormal => "ln",
            Dist::CensoredNormal => "cn",
        }
    }
}

impl FromStr for Dist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(Dist::Normal),
            "ln" => Ok(Dist::LogNormal),
            "cn" => Ok(Dist::CensoredNormal),
            other => Err(Error::spec(format!(
                "unknown distribution '{other}' (expected n, ln or cn)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterLevel {
    /// Panel id when the model is a panel model, otherwise observation id.
    #[default]
    Auto,
    Obs,
    Panel,
    /// The data's cluster-id column.
    Column,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub space: Space,
    pub pars: Vec<String>,
    #[serde(default)]
    pub scale_par: Option<String>,
    /// Keyed by input term (all of its design columns become random) or by a
    /// single design-column name.
    #[serde(default)]
    pub rand_pars: BTreeMap<String, Dist>,
    #[serde(default)]
    pub rand_scale: Option<Dist>,
    #[serde(default)]
    pub correlation: bool,
    #[serde(default)]
    pub panel: bool,
    #[serde(default)]
    pub weighted: bool,
    #[serde(default)]
    pub robust: bool,
    #[serde(default)]
    pub cluster: ClusterLevel,
}

impl ModelSpec {
    pub fn preference<S: Into<String>>(pars: impl IntoIterator<Item = S>) -> Self {
        Self {
            space: Space::Preference,
            pars: pars.into_iter().map(Into::into).collect(),
            scale_par: None,
            rand_pars: BTreeMap::new(),
            rand_scale: None,
            correlation: false,
            panel: false,
            weighted: false,
            robust: false,
            cluster: ClusterLevel::Auto,
        }
    }

    pub fn wtp<S: Into<String>>(pars: impl IntoIterator<Item = S>, scale_par: impl Into<String>) -> Self {
        Self {
            space: Space::Wtp,
            scale_par: Some(scale_par.into()),
            ..Self::preference(pars)
        }
    }

    pub fn with_rand_par(mut self, name: impl Into<String>, dist: Dist) -> Self {
        self.rand_pars.insert(name.into(), dist);
        self
    }

    pub fn with_rand_scale(mut self, dist: Dist) -> Self {
        self.rand_scale = Some(dist);
        self
    }

    pub fn with_correlation(mut self, on: bool) -> Self {
        self.correlation = on;
        self
    }

    pub fn with_panel(mut self, on: bool) -> Self {
        self.panel = on;
        self
    }

    pub fn with_weights(mut self, on: bool) -> Self {
        self.weighted = on;
        self
    }

    pub fn with_robust(mut self, on: bool) -> Self {
        self.robust = on;
        self
    }

    pub fn with_cluster(mut self, level: ClusterLevel) -> Self {
        self.cluster = level;
        self
    }

    pub fn is_mixed(&self) -> bool {
        !self.rand_pars.is_empty() || self.rand_scale.is_some()
    }

    pub fn n_random_declared(&self) -> usize {
        self.rand_pars.len() + usize::from(self.rand_scale.is_some())
    }

    /// Checks the spec's internal consistency (not yet against data).
    pub fn validate(&self) -> Result<()> {
        match self.space {
            Space::Wtp if self.scale_par.is_none() => {
                return Err(Error::spec("WTP space models need a scale variable"))
            }
            Space::Preference if self.scale_par.is_some() => {
                return Err(Error::spec(
                    "a scale variable is only used in WTP space; add it to pars for preference space",
                ))
            }
            Space::Preference if self.rand_scale.is_some() => {
                return Err(Error::spec("a random scale parameter requires WTP space"))
            }
            _ => {}
        }
        if self.pars.is_empty() && self.scale_par.is_none() {
            return Err(Error::spec("no covariates specified"));
        }
        if self.correlation && self.n_random_declared() < 2 {
            return Err(Error::spec("correlation needs at least two random parameters"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamRole {
    Scale,
    Mean,
    Sd,
    Cholesky,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub role: ParamRole,
    pub index: usize,
}

/// A random coefficient and where its parameters live in the flat vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomCoef {
    pub name: String,
    /// Position in the per-draw coefficient vector.
    pub coef: usize,
    pub dist: Dist,
    pub mean_index: usize,
    /// Standard deviation entry (uncorrelated) or Cholesky diagonal (correlated).
    pub sd_index: usize,
}

/// Flat parameter vector layout.
///
/// Order: `scalePar` (WTP space only), means in design-column order, `sd_*`
/// entries for random coefficients, then lower-triangular Cholesky
/// off-diagonals when correlated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterLayout {
    pub space: Space,
    pub entries: Vec<ParamEntry>,
    /// Number of per-draw coefficients: the scale (WTP space) plus one per
    /// design column.
    pub n_coefs: usize,
    /// Parameter index of each coefficient's mean (or fixed value).
    pub coef_mean: Vec<usize>,
    pub random: Vec<RandomCoef>,
    pub correlated: bool,
    /// `(row, col, index)` of each strictly-lower Cholesky element.
    pub cholesky: Vec<(usize, usize, usize)>,
}

impl ParameterLayout {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn scale_index(&self) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.role == ParamRole::Scale)
    }

    pub fn is_mixed(&self) -> bool {
        !self.random.is_empty()
    }

    /// Random-coefficient position for each per-draw coefficient.
    pub fn random_of_coef(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.n_coefs];
        for (k, r) in self.random.iter().enumerate() {
            out[r.coef] = Some(k);
        }
        out
    }
}

/// Lays out the parameter vector for `spec` over the encoded columns.
pub fn build_layout(spec: &ModelSpec, encoding: &Encoding) -> Result<ParameterLayout> {
    spec.validate()?;
    let columns = encoding.column_names();
    let terms: Vec<String> = encoding.columns.iter().map(|c| c.term()).collect();

    let mut coef_names = Vec::new();
    let mut coef_dist: Vec<Option<Dist>> = Vec::new();
    if spec.space == Space::Wtp {
        coef_names.push(SCALE_PAR_NAME.to_string());
        coef_dist.push(spec.rand_scale);
    }
    let mut matched = vec![false; spec.rand_pars.len()];
    for (col, term) in columns.iter().zip(&terms) {
        let mut dist = None;
        for (i, (key, d)) in spec.rand_pars.iter().enumerate() {
            if key == col || key == term {
                if dist.is_some() && dist != Some(*d) {
                    return Err(Error::spec(format!(
                        "conflicting distributions declared for '{col}'"
                    )));
                }
                dist = Some(*d);
                matched[i] = true;
            }
        }
        coef_names.push(col.clone());
        coef_dist.push(dist);
    }
    if let Some((key, _)) = spec
        .rand_pars
        .iter()
        .zip(&matched)
        .find(|(_, m)| !**m)
        .map(|(kv, _)| kv)
    {
        return Err(Error::spec(format!(
            "random parameter '{key}' is not among the model's terms or columns"
        )));
    }

    let mut entries: Vec<ParamEntry> = coef_names
        .iter()
        .enumerate()
        .map(|(i, name)| ParamEntry {
            name: name.clone(),
            role: if spec.space == Space::Wtp && i == 0 {
                ParamRole::Scale
            } else {
                ParamRole::Mean
            },
            index: i,
        })
        .collect();
    let coef_mean: Vec<usize> = (0..coef_names.len()).collect();

    let mut random = Vec::new();
    for (coef, dist) in coef_dist.iter().enumerate() {
        if let Some(dist) = dist {
            let index = entries.len();
            entries.push(ParamEntry {
                name: format!("sd_{}", coef_names[coef]),
                role: ParamRole::Sd,
                index,
            });
            random.push(RandomCoef {
                name: coef_names[coef].clone(),
                coef,
                dist: *dist,
                mean_index: coef,
                sd_index: index,
            });
        }
    }
    let mut cholesky = Vec::new();
    if spec.correlation {
        if random.len() < 2 {
            return Err(Error::spec("correlation needs at least two random parameters"));
        }
        for row in 1..random.len() {
            for col in 0..row {
                let index = entries.len();
                entries.push(ParamEntry {
                    name: format!("sd_{}_{}", random[row].name, random[col].name),
                    role: ParamRole::Cholesky,
                    index,
                });
                cholesky.push((row, col, index));
            }
        }
    }

    Ok(ParameterLayout {
        space: spec.space,
        entries,
        n_coefs: coef_names.len(),
        coef_mean,
        random,
        correlated: spec.correlation,
        cholesky,
    })
}

/// Optimizer stopping tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub ftol_rel: f64,
    pub ftol_abs: f64,
    pub xtol_rel: f64,
    pub xtol_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ftol_rel: 1e-10,
            ftol_abs: 1e-10,
            xtol_rel: 1e-10,
            xtol_abs: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationOptions {
    pub num_multi_starts: usize,
    pub start_val_bounds: (f64, f64),
    pub start_vals: Option<Vec<f64>>,
    pub num_draws: usize,
    pub draw_type: DrawType,
    /// Leading Halton points discarded.
    pub halton_drop: usize,
    pub draw_columns: DrawColumns,
    /// Optimize in units where every input column has max |x| = 1; estimates
    /// are reported in the original units either way.
    pub scale_inputs: bool,
    pub num_cores: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub max_iterations: usize,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        Self {
            num_multi_starts: 1,
            start_val_bounds: (-1.0, 1.0),
            start_vals: None,
            num_draws: 50,
            draw_type: DrawType::Halton,
            halton_drop: HALTON_DROP,
            draw_columns: DrawColumns::Random,
            scale_inputs: true,
            num_cores: 1,
            seed: 0,
            tolerances: Tolerances::default(),
            max_iterations: 2000,
        }
    }
}

impl EstimationOptions {
    pub fn validate(&self, n_params: Option<usize>) -> Result<()> {
        if self.num_multi_starts == 0 {
            return Err(Error::spec("num_multi_starts must be positive"));
        }
        if self.num_draws == 0 {
            return Err(Error::spec("num_draws must be positive"));
        }
        if self.num_cores == 0 {
            return Err(Error::spec("num_cores must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::spec("max_iterations must be positive"));
        }
        let (lo, hi) = self.start_val_bounds;
        if !(lo < hi) {
            return Err(Error::spec(format!(
                "start value bounds [{lo}, {hi}] must satisfy lower < upper"
            )));
        }
        if let (Some(sv), Some(n)) = (&self.start_vals, n_params) {
            if sv.len() != n {
                return Err(Error::spec(format!(
                    "start_vals has {} entries, model has {n} parameters",
                    sv.len()
                )));
            }
        }
        Ok(())
    }
}

/// Starting point for multi-start run `run_index` (1-based).
///
/// Run 1 uses `start_vals` if given, else zeros with the scale parameter at 1.
/// Later runs draw every entry uniformly from the start bounds, the scale
/// parameter from the bounds shifted up by one. The stream depends only on
/// `(seed, run_index)`.
pub fn initial_values<T: Scalar>(
    layout: &ParameterLayout,
    opts: &EstimationOptions,
    run_index: usize,
) -> Result<Vec<T>> {
    if run_index == 0 {
        return Err(Error::spec("run_index is 1-based"));
    }
    opts.validate(Some(layout.len()))?;
    let scale = layout.scale_index();
    if run_index == 1 {
        if let Some(sv) = &opts.start_vals {
            return Ok(sv.iter().map(|&v| T::lit(v)).collect());
        }
        let mut x = vec![T::zero(); layout.len()];
        if let Some(s) = scale {
            x[s] = T::one();
        }
        return Ok(x);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(run_index as u64);
    let (lo, hi) = opts.start_val_bounds;
    Ok((0..layout.len())
        .map(|i| {
            let shift = if Some(i) == scale { 1.0 } else { 0.0 };
            T::lit(rng.gen_range(lo + shift..hi + shift))
        })
        .collect())
}
