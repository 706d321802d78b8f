//! Model options shared by `fit` and `bench`. The same keys work as
//! kebab-case flags and as keys in a TOML config file; flags win.

use std::path::{Path, PathBuf};

use clap::Args;
use mxlogit::{ClusterLevel, Dist, DrawColumns, DrawType, EstimationOptions, ModelSpec, Schema, Tolerances};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ModelArgs {
    /// Long-format choice data (CSV)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,

    /// Binary outcome column
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,

    /// Observation id column
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obs_id: Option<String>,

    /// Individual id column, for panel models and clustering
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panel_id: Option<String>,

    /// Observation weight column; turns on weighting
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<String>,

    /// Cluster id column for robust errors
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_id: Option<String>,

    /// Model terms, comma separated
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pars: Option<Vec<String>>,

    /// Price column; estimates the model in WTP space
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_par: Option<String>,

    /// Random parameters as name=dist (dist: n, ln, cn), comma separated
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rand_pars: Option<Vec<String>>,

    /// Distribution of the scale parameter (WTP space)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rand_scale: Option<String>,

    /// Categorical level order as column=a|b|c (first is the reference)
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub correlation: bool,

    /// Treat repeated choices of one individual as a panel (implied by
    /// --panel-id)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub panel: bool,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub robust: bool,

    /// Clustering for robust errors: auto, obs, panel or column
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<String>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_multi_starts: Option<usize>,

    /// Bounds of random starting values, as lower,upper
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_val_bounds: Option<Vec<f64>>,

    /// Starting values for the first run, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_vals: Option<Vec<f64>>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_draws: Option<usize>,

    /// halton or sobol
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draw_type: Option<String>,

    /// Leading Halton points to discard
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halton_drop: Option<usize>,

    /// Draw dimension per random parameter: random or coefficient
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draw_columns: Option<String>,

    /// Optimize on the original input scale
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub no_scale_inputs: bool,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_cores: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ftol_rel: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ftol_abs: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xtol_rel: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xtol_abs: Option<f64>,
}

/// Flags over the config file at `path`, if any.
pub fn merge(flags: &ModelArgs, path: Option<&Path>) -> Result<ModelArgs, CliError> {
    let Some(path) = path else {
        return Ok(flags.clone());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut table: toml::Table =
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
    // reject unknown keys before flags can mask them
    ModelArgs::deserialize(toml::Value::Table(table.clone()))
        .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
    let over = toml::Table::try_from(flags).map_err(|e| CliError::Usage(e.to_string()))?;
    table.extend(over);
    let mut merged = ModelArgs::deserialize(toml::Value::Table(table))
        .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
    // a relative data path in a config file is relative to that file
    if let (Some(d), None) = (&merged.data, &flags.data) {
        if d.is_relative() {
            if let Some(dir) = path.parent() {
                merged.data = Some(dir.join(d));
            }
        }
    }
    Ok(merged)
}

fn parse<T: std::str::FromStr>(what: &str, s: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e| CliError::Usage(format!("invalid {what} '{s}': {e}")))
}

fn required<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    v.as_ref()
        .ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}

impl ModelArgs {
    pub fn data_path(&self) -> Result<&PathBuf, CliError> {
        required(&self.data, "data")
    }

    pub fn schema(&self) -> Result<Schema, CliError> {
        let mut schema = Schema::new(required(&self.outcome, "outcome")?.clone(), required(&self.obs_id, "obs-id")?.clone());
        if let Some(p) = &self.panel_id {
            schema = schema.with_panel_id(p.clone());
        }
        if let Some(w) = &self.weights {
            schema = schema.with_weights(w.clone());
        }
        if let Some(c) = &self.cluster_id {
            schema = schema.with_cluster_id(c.clone());
        }
        for entry in self.levels.iter().flatten() {
            let (col, order) = entry
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--levels expects column=a|b, got '{entry}'")))?;
            let order: Vec<String> = if order.is_empty() {
                Vec::new()
            } else {
                order.split('|').map(str::to_string).collect()
            };
            schema = schema.with_levels(col, order);
        }
        Ok(schema)
    }

    pub fn spec(&self) -> Result<ModelSpec, CliError> {
        let pars = required(&self.pars, "pars")?.clone();
        let mut spec = match &self.scale_par {
            Some(p) => ModelSpec::wtp(pars, p.clone()),
            None => ModelSpec::preference(pars),
        };
        for entry in self.rand_pars.iter().flatten() {
            let (name, dist) = entry
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--rand-pars expects name=dist, got '{entry}'")))?;
            spec = spec.with_rand_par(name, parse::<Dist>("distribution", dist)?);
        }
        if let Some(d) = &self.rand_scale {
            spec = spec.with_rand_scale(parse::<Dist>("distribution", d)?);
        }
        let cluster = match self.cluster.as_deref() {
            None | Some("auto") => ClusterLevel::Auto,
            Some("obs") => ClusterLevel::Obs,
            Some("panel") => ClusterLevel::Panel,
            Some("column") => ClusterLevel::Column,
            Some(other) => return Err(CliError::Usage(format!("invalid cluster level '{other}'"))),
        };
        Ok(spec
            .with_correlation(self.correlation)
            .with_panel(self.panel || self.panel_id.is_some())
            .with_weights(self.weights.is_some())
            .with_robust(self.robust)
            .with_cluster(cluster))
    }

    pub fn options(&self) -> Result<EstimationOptions, CliError> {
        let d = EstimationOptions::default();
        let t = Tolerances::default();
        let start_val_bounds = match self.start_val_bounds.as_deref() {
            None => d.start_val_bounds,
            Some([lo, hi]) => (*lo, *hi),
            Some(_) => return Err(CliError::Usage("--start-val-bounds takes two numbers".into())),
        };
        let draw_columns = match self.draw_columns.as_deref() {
            None => d.draw_columns,
            Some("random") => DrawColumns::Random,
            Some("coefficient") => DrawColumns::Coefficient,
            Some(other) => return Err(CliError::Usage(format!("invalid draw columns '{other}'"))),
        };
        Ok(EstimationOptions {
            num_multi_starts: self.num_multi_starts.unwrap_or(d.num_multi_starts),
            start_val_bounds,
            start_vals: self.start_vals.clone(),
            num_draws: self.num_draws.unwrap_or(d.num_draws),
            draw_type: match &self.draw_type {
                Some(s) => parse::<DrawType>("draw type", s)?,
                None => d.draw_type,
            },
            halton_drop: self.halton_drop.unwrap_or(d.halton_drop),
            draw_columns,
            scale_inputs: !self.no_scale_inputs,
            num_cores: self.num_cores.unwrap_or(d.num_cores),
            seed: self.seed.unwrap_or(d.seed),
            tolerances: Tolerances {
                ftol_rel: self.ftol_rel.unwrap_or(t.ftol_rel),
                ftol_abs: self.ftol_abs.unwrap_or(t.ftol_abs),
                xtol_rel: self.xtol_rel.unwrap_or(t.xtol_rel),
                xtol_abs: self.xtol_abs.unwrap_or(t.xtol_abs),
            },
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
        })
    }
}
