//! Numeric encoding of choice data: dummy coding, two-way interactions, the
//! held-out scale column, and the chosen-minus-other difference blocks used by
//! the likelihood.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnValues, LongChoiceData};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How one design column is computed from the source data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnSpec {
    Numeric { source: String },
    Dummy { source: String, level: String },
    Product { left: Box<ColumnSpec>, right: Box<ColumnSpec> },
}

impl ColumnSpec {
    pub fn name(&self) -> String {
        match self {
            ColumnSpec::Numeric { source } => source.clone(),
            ColumnSpec::Dummy { source, level } => format!("{source}{level}"),
            ColumnSpec::Product { left, right } => format!("{}*{}", left.name(), right.name()),
        }
    }

    /// The input term this column came from.
    pub fn term(&self) -> String {
        match self {
            ColumnSpec::Numeric { source } | ColumnSpec::Dummy { source, .. } => source.clone(),
            ColumnSpec::Product { left, right } => format!("{}*{}", left.term(), right.term()),
        }
    }

    fn eval(&self, cols: &HashMap<&str, &Column>, row: usize) -> f64 {
        match self {
            ColumnSpec::Numeric { source } => match &cols[source.as_str()].values {
                ColumnValues::Numeric(v) => v[row],
                ColumnValues::Categorical { .. } => unreachable!("checked when resolving"),
            },
            ColumnSpec::Dummy { source, level } => match &cols[source.as_str()].values {
                ColumnValues::Categorical { levels, codes } => {
                    if levels[codes[row]] == *level {
                        1.0
                    } else {
                        0.0
                    }
                }
                ColumnValues::Numeric(_) => unreachable!("checked when resolving"),
            },
            ColumnSpec::Product { left, right } => left.eval(cols, row) * right.eval(cols, row),
        }
    }
}

/// The mapping from input terms to design columns. Stored with fitted models
/// so new data can be encoded identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub terms: Vec<String>,
    pub columns: Vec<ColumnSpec>,
    pub scale_par: Option<String>,
    /// Training levels of every categorical source column.
    pub levels: BTreeMap<String, Vec<String>>,
}

impl Encoding {
    pub fn new<S: AsRef<str>>(data: &LongChoiceData, pars: &[S], scale_par: Option<&str>) -> Result<Self> {
        let mut columns: Vec<ColumnSpec> = Vec::new();
        let mut levels = BTreeMap::new();
        let push = |spec: ColumnSpec, columns: &mut Vec<ColumnSpec>| {
            if !columns.iter().any(|c| c.name() == spec.name()) {
                columns.push(spec);
            }
        };
        for term in pars {
            let term = term.as_ref().trim();
            let factors: Vec<&str> = term.split('*').map(str::trim).collect();
            if factors.iter().any(|f| f.is_empty()) {
                return Err(Error::schema(format!("malformed term '{term}'")));
            }
            if factors.len() > 2 {
                return Err(Error::schema(format!(
                    "term '{term}': only two-way interactions are supported; pre-build deeper products as columns"
                )));
            }
            if let Some(scale) = scale_par {
                if factors.contains(&scale) {
                    return Err(Error::spec(format!(
                        "scale variable '{scale}' cannot also appear in pars"
                    )));
                }
            }
            let mut expanded = Vec::new();
            for f in &factors {
                let cols = expand_main(data, f, &mut levels)?;
                for c in &cols {
                    push(c.clone(), &mut columns);
                }
                expanded.push(cols);
            }
            if let [a, b] = expanded.as_slice() {
                for l in a {
                    for r in b {
                        push(
                            ColumnSpec::Product {
                                left: Box::new(l.clone()),
                                right: Box::new(r.clone()),
                            },
                            &mut columns,
                        );
                    }
                }
            }
        }
        if let Some(scale) = scale_par {
            let col = data
                .column(scale)
                .ok_or_else(|| Error::schema(format!("unknown scale variable '{scale}'")))?;
            if col.is_categorical() {
                return Err(Error::Type(format!(
                    "scale variable '{scale}' must be numeric"
                )));
            }
        }
        Ok(Self {
            terms: pars.iter().map(|t| t.as_ref().trim().to_string()).collect(),
            columns,
            scale_par: scale_par.map(str::to_string),
            levels,
        })
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(ColumnSpec::name).collect()
    }

    /// Terms recovered from the encoded columns (main effects and products),
    /// in first-appearance order.
    pub fn decode_terms(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.columns {
            let t = c.term();
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }

    /// Encodes `data` with this mapping. Categorical values must be among the
    /// training levels.
    pub fn apply<T: Scalar>(&self, data: &LongChoiceData) -> Result<DesignMatrix<T>> {
        let lookup: HashMap<&str, &Column> =
            data.columns().iter().map(|c| (c.name.as_str(), c)).collect();
        for spec in &self.columns {
            check_sources(spec, &lookup, &self.levels)?;
        }
        let n_rows = data.n_rows();
        let n_cols = self.columns.len();
        let mut x = Vec::with_capacity(n_rows * n_cols);
        for row in 0..n_rows {
            for spec in &self.columns {
                x.push(T::lit(spec.eval(&lookup, row)));
            }
        }
        let scale = match &self.scale_par {
            Some(name) => match lookup.get(name.as_str()).map(|c| &c.values) {
                Some(ColumnValues::Numeric(v)) => Some(v.iter().map(|&p| T::lit(p)).collect()),
                Some(_) => {
                    return Err(Error::Type(format!("scale variable '{name}' must be numeric")))
                }
                None => {
                    return Err(Error::schema(format!(
                        "missing column '{name}' required by the model"
                    )))
                }
            },
            None => None,
        };

        let ranges = data.obs_ranges().to_vec();
        let chosen = data.chosen_positions().map(|pos| {
            ranges
                .iter()
                .zip(pos)
                .map(|(r, p)| r.start + p)
                .collect::<Vec<_>>()
        });

        let (panel, n_panels) = match data.panel_id() {
            Some(ids) => {
                let mut index: HashMap<&str, usize> = HashMap::new();
                let per_obs = ranges
                    .iter()
                    .map(|r| {
                        let next = index.len();
                        *index.entry(ids[r.start].as_str()).or_insert(next)
                    })
                    .collect();
                (Some(per_obs), index.len())
            }
            None => (None, 0),
        };

        Ok(DesignMatrix {
            encoding: self.clone(),
            n_cols,
            x,
            scale,
            obs_labels: data.obs_labels().into_iter().map(str::to_string).collect(),
            obs_bounds: ranges.clone(),
            chosen,
            x_diff: Vec::new(),
            scale_diff: Vec::new(),
            diff_offsets: Vec::new(),
            panel,
            n_panels,
            weights: data
                .weights()
                .map(|w| ranges.iter().map(|r| T::lit(w[r.start])).collect()),
            clusters: data
                .cluster_id()
                .map(|c| ranges.iter().map(|r| c[r.start].clone()).collect()),
        })
    }
}

fn expand_main(
    data: &LongChoiceData,
    name: &str,
    levels_out: &mut BTreeMap<String, Vec<String>>,
) -> Result<Vec<ColumnSpec>> {
    let col = data
        .column(name)
        .ok_or_else(|| Error::schema(format!("unknown term '{name}'")))?;
    match &col.values {
        ColumnValues::Numeric(_) => Ok(vec![ColumnSpec::Numeric {
            source: name.to_string(),
        }]),
        ColumnValues::Categorical { levels, .. } => {
            if levels.len() < 2 {
                return Err(Error::DegenerateCovariate(format!(
                    "categorical column '{name}' has a single level"
                )));
            }
            levels_out.insert(name.to_string(), levels.clone());
            Ok(levels[1..]
                .iter()
                .map(|l| ColumnSpec::Dummy {
                    source: name.to_string(),
                    level: l.clone(),
                })
                .collect())
        }
    }
}

fn check_sources(
    spec: &ColumnSpec,
    lookup: &HashMap<&str, &Column>,
    training: &BTreeMap<String, Vec<String>>,
) -> Result<()> {
    let fetch = |source: &str| -> Result<&Column> {
        lookup.get(source).copied().ok_or_else(|| {
            Error::schema(format!("missing column '{source}' required by the model"))
        })
    };
    match spec {
        ColumnSpec::Numeric { source } => {
            if fetch(source)?.is_categorical() {
                return Err(Error::Type(format!("column '{source}' must be numeric")));
            }
        }
        ColumnSpec::Dummy { source, .. } => match &fetch(source)?.values {
            ColumnValues::Categorical { levels, codes } => {
                let known = &training[source];
                let mut used = vec![false; levels.len()];
                for &c in codes {
                    used[c] = true;
                }
                for (level, _) in levels.iter().zip(used).filter(|(_, u)| *u) {
                    if !known.contains(level) {
                        return Err(Error::validation(format!(
                            "level '{level}' of '{source}' was not seen when the model was fitted"
                        )));
                    }
                }
            }
            ColumnValues::Numeric(_) => {
                return Err(Error::Type(format!("column '{source}' must be categorical")))
            }
        },
        ColumnSpec::Product { left, right } => {
            check_sources(left, lookup, training)?;
            check_sources(right, lookup, training)?;
        }
    }
    Ok(())
}

/// Encoded covariates for every alternative plus per-observation structure.
#[derive(Clone, Debug)]
pub struct DesignMatrix<T> {
    encoding: Encoding,
    n_cols: usize,
    x: Vec<T>,
    scale: Option<Vec<T>>,
    obs_labels: Vec<String>,
    obs_bounds: Vec<Range<usize>>,
    chosen: Option<Vec<usize>>,
    x_diff: Vec<T>,
    scale_diff: Vec<T>,
    diff_offsets: Vec<usize>,
    panel: Option<Vec<usize>>,
    n_panels: usize,
    weights: Option<Vec<T>>,
    clusters: Option<Vec<String>>,
}

/// Encodes `pars` (and the optional scale column) of `data`. Difference blocks
/// are filled separately by [`precompute_differences`].
pub fn encode<T: Scalar, S: AsRef<str>>(
    data: &LongChoiceData,
    pars: &[S],
    scale_par: Option<&str>,
) -> Result<DesignMatrix<T>> {
    Encoding::new(data, pars, scale_par)?.apply(data)
}

/// Fills the chosen-minus-other blocks. Idempotent.
pub fn precompute_differences<T: Scalar>(mut dm: DesignMatrix<T>) -> Result<DesignMatrix<T>> {
    dm.compute_differences()?;
    Ok(dm)
}

impl<T: Scalar> DesignMatrix<T> {
    pub fn compute_differences(&mut self) -> Result<()> {
        let chosen = self
            .chosen
            .as_ref()
            .ok_or_else(|| Error::validation("differences need an outcome column"))?;
        let k = self.n_cols;
        let total: usize = self.obs_bounds.iter().map(|r| r.len() - 1).sum();
        let mut x_diff = Vec::with_capacity(total * k);
        let mut scale_diff = Vec::with_capacity(if self.scale.is_some() { total } else { 0 });
        let mut offsets = Vec::with_capacity(self.obs_bounds.len() + 1);
        offsets.push(0);
        for (range, &c) in self.obs_bounds.iter().zip(chosen) {
            let xc = &self.x[c * k..(c + 1) * k];
            for j in range.clone().filter(|&j| j != c) {
                let xj = &self.x[j * k..(j + 1) * k];
                x_diff.extend(xj.iter().zip(xc).map(|(&a, &b)| a - b));
                if let Some(p) = &self.scale {
                    scale_diff.push(p[j] - p[c]);
                }
            }
            offsets.push(offsets.last().unwrap() + range.len() - 1);
        }
        self.x_diff = x_diff;
        self.scale_diff = scale_diff;
        self.diff_offsets = offsets;
        Ok(())
    }

    pub fn has_differences(&self) -> bool {
        !self.diff_offsets.is_empty()
    }

    pub fn encoding(&self) -> &Encoding {
        &self.encoding
    }

    pub fn column_names(&self) -> Vec<String> {
        self.encoding.column_names()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        if self.n_cols == 0 {
            self.obs_bounds.last().map_or(0, |r| r.end)
        } else {
            self.x.len() / self.n_cols
        }
    }

    pub fn n_obs(&self) -> usize {
        self.obs_bounds.len()
    }

    pub fn x_row(&self, row: usize) -> &[T] {
        &self.x[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn scale(&self) -> Option<&[T]> {
        self.scale.as_deref()
    }

    pub fn obs_bounds(&self) -> &[Range<usize>] {
        &self.obs_bounds
    }

    pub fn obs_labels(&self) -> &[String] {
        &self.obs_labels
    }

    /// Absolute row index of the chosen alternative per observation.
    pub fn chosen_rows(&self) -> Option<&[usize]> {
        self.chosen.as_deref()
    }

    /// Row-major `(J_n - 1) x n_cols` block of `x_j - x_c` for observation `n`.
    pub fn x_diff(&self, n: usize) -> &[T] {
        let k = self.n_cols;
        &self.x_diff[self.diff_offsets[n] * k..self.diff_offsets[n + 1] * k]
    }

    /// `p_j - p_c` for observation `n` (empty without a scale column).
    pub fn scale_diff(&self, n: usize) -> &[T] {
        if self.scale_diff.is_empty() {
            &[]
        } else {
            &self.scale_diff[self.diff_offsets[n]..self.diff_offsets[n + 1]]
        }
    }

    /// Number of non-chosen alternatives in observation `n`.
    pub fn n_diff(&self, n: usize) -> usize {
        self.diff_offsets[n + 1] - self.diff_offsets[n]
    }

    /// Individual index of each observation.
    pub fn panel(&self) -> Option<&[usize]> {
        self.panel.as_deref()
    }

    pub fn n_panels(&self) -> usize {
        self.n_panels
    }

    /// Weight of each observation.
    pub fn weights(&self) -> Option<&[T]> {
        self.weights.as_deref()
    }

    /// Cluster label of each observation.
    pub fn clusters(&self) -> Option<&[String]> {
        self.clusters.as_deref()
    }
}
