//! Long-format choice data: one row per alternative, grouped into choice
//! observations by an observation id.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps column roles onto CSV header names.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    /// Binary chosen indicator. Optional only for prediction inputs.
    pub outcome: Option<String>,
    pub obs_id: String,
    #[serde(default)]
    pub panel_id: Option<String>,
    #[serde(default)]
    pub weights: Option<String>,
    #[serde(default)]
    pub cluster_id: Option<String>,
    /// Columns to treat as categorical. A non-empty list fixes the level order
    /// (first level is the reference); an empty list means observed values in
    /// byte-lexicographic order.
    #[serde(default)]
    pub levels: BTreeMap<String, Vec<String>>,
}

impl Schema {
    pub fn new(outcome: impl Into<String>, obs_id: impl Into<String>) -> Self {
        Self {
            outcome: Some(outcome.into()),
            obs_id: obs_id.into(),
            ..Self::default()
        }
    }

    /// Schema for data without an outcome column (prediction inputs).
    pub fn unlabeled(obs_id: impl Into<String>) -> Self {
        Self {
            obs_id: obs_id.into(),
            ..Self::default()
        }
    }

    pub fn with_panel_id(mut self, name: impl Into<String>) -> Self {
        self.panel_id = Some(name.into());
        self
    }

    pub fn with_weights(mut self, name: impl Into<String>) -> Self {
        self.weights = Some(name.into());
        self
    }

    pub fn with_cluster_id(mut self, name: impl Into<String>) -> Self {
        self.cluster_id = Some(name.into());
        self
    }

    pub fn with_levels<S: Into<String>>(
        mut self,
        column: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
    ) -> Self {
        self.levels
            .insert(column.into(), levels.into_iter().map(Into::into).collect());
        self
    }

    fn role_columns(&self) -> Vec<&str> {
        let mut roles = vec![self.obs_id.as_str()];
        roles.extend(self.outcome.as_deref());
        roles.extend(self.panel_id.as_deref());
        roles.extend(self.weights.as_deref());
        roles.extend(self.cluster_id.as_deref());
        roles
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ColumnValues {
    Numeric(Vec<f64>),
    Categorical { levels: Vec<String>, codes: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: ColumnValues,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values: ColumnValues::Numeric(values),
        }
    }

    /// Categorical column with levels in byte-lexicographic order.
    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, values: &[S]) -> Self {
        let levels: Vec<String> = values
            .iter()
            .map(|v| v.as_ref().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: HashMap<&str, usize> = levels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let codes = values.iter().map(|v| index[v.as_ref()]).collect();
        Self {
            name: name.into(),
            values: ColumnValues::Categorical { levels, codes },
        }
    }

    pub fn len(&self) -> usize {
        match &self.values {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.values, ColumnValues::Categorical { .. })
    }

    /// Cell rendered as text (level label for categorical columns).
    pub fn display(&self, row: usize) -> String {
        match &self.values {
            ColumnValues::Numeric(v) => format!("{}", v[row]),
            ColumnValues::Categorical { levels, codes } => levels[codes[row]].clone(),
        }
    }

    fn subset(&self, rows: &[usize]) -> Self {
        let values = match &self.values {
            ColumnValues::Numeric(v) => ColumnValues::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnValues::Categorical { levels, codes } => ColumnValues::Categorical {
                levels: levels.clone(),
                codes: rows.iter().map(|&r| codes[r]).collect(),
            },
        };
        Self {
            name: self.name.clone(),
            values,
        }
    }
}

/// Validated long-format choice data.
#[derive(Clone, Debug, PartialEq)]
pub struct LongChoiceData {
    outcome: Option<Vec<bool>>,
    obs_id: Vec<String>,
    panel_id: Option<Vec<String>>,
    weight: Option<Vec<f64>>,
    cluster_id: Option<Vec<String>>,
    columns: Vec<Column>,
    obs_ranges: Vec<Range<usize>>,
}

/// Raw per-row inputs for [`LongChoiceData::new`].
#[derive(Clone, Debug, Default)]
pub struct RawChoiceData {
    pub outcome: Option<Vec<bool>>,
    pub obs_id: Vec<String>,
    pub panel_id: Option<Vec<String>>,
    pub weight: Option<Vec<f64>>,
    pub cluster_id: Option<Vec<String>>,
    pub columns: Vec<Column>,
}

impl LongChoiceData {
    pub fn new(raw: RawChoiceData) -> Result<Self> {
        let n = raw.obs_id.len();
        if n == 0 {
            return Err(Error::validation("data has no rows"));
        }
        let check_len = |name: &str, len: usize| -> Result<()> {
            if len != n {
                Err(Error::validation(format!(
                    "column '{name}' has {len} rows, expected {n}"
                )))
            } else {
                Ok(())
            }
        };
        if let Some(o) = &raw.outcome {
            check_len("outcome", o.len())?;
        }
        if let Some(p) = &raw.panel_id {
            check_len("panel_id", p.len())?;
        }
        if let Some(w) = &raw.weight {
            check_len("weights", w.len())?;
        }
        if let Some(c) = &raw.cluster_id {
            check_len("cluster_id", c.len())?;
        }
        for col in &raw.columns {
            check_len(&col.name, col.len())?;
        }

        let obs_ranges = contiguous_groups(&raw.obs_id)?;

        if let Some(outcome) = &raw.outcome {
            for range in &obs_ranges {
                let chosen = outcome[range.clone()].iter().filter(|&&y| y).count();
                if chosen != 1 {
                    return Err(Error::validation(format!(
                        "observation {} has {chosen} chosen alternatives; exactly one row per observation must have outcome 1",
                        raw.obs_id[range.start]
                    )));
                }
            }
        }
        if let Some(w) = &raw.weight {
            if let Some(row) = w.iter().position(|&x| !(x.is_finite() && x > 0.0)) {
                return Err(Error::validation(format!(
                    "weight {} in row {} is not strictly positive",
                    w[row],
                    row + 1
                )));
            }
            constant_within(&obs_ranges, &raw.obs_id, w, "weights")?;
        }
        if let Some(p) = &raw.panel_id {
            constant_within(&obs_ranges, &raw.obs_id, p, "panel id")?;
            if let Some(w) = &raw.weight {
                let mut seen: HashMap<&str, f64> = HashMap::new();
                for (row, id) in p.iter().enumerate() {
                    let prev = *seen.entry(id.as_str()).or_insert(w[row]);
                    if prev != w[row] {
                        return Err(Error::validation(format!(
                            "weights differ within individual {id}; panel models need one weight per individual"
                        )));
                    }
                }
            }
        }
        if let Some(c) = &raw.cluster_id {
            constant_within(&obs_ranges, &raw.obs_id, c, "cluster id")?;
        }

        Ok(Self {
            outcome: raw.outcome,
            obs_id: raw.obs_id,
            panel_id: raw.panel_id,
            weight: raw.weight,
            cluster_id: raw.cluster_id,
            columns: raw.columns,
            obs_ranges,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.obs_id.len()
    }

    pub fn n_obs(&self) -> usize {
        self.obs_ranges.len()
    }

    pub fn obs_ranges(&self) -> &[Range<usize>] {
        &self.obs_ranges
    }

    /// Observation id of each observation, in data order.
    pub fn obs_labels(&self) -> Vec<&str> {
        self.obs_ranges
            .iter()
            .map(|r| self.obs_id[r.start].as_str())
            .collect()
    }

    pub fn row_obs_ids(&self) -> &[String] {
        &self.obs_id
    }

    pub fn outcome(&self) -> Option<&[bool]> {
        self.outcome.as_deref()
    }

    pub fn panel_id(&self) -> Option<&[String]> {
        self.panel_id.as_deref()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weight.as_deref()
    }

    pub fn cluster_id(&self) -> Option<&[String]> {
        self.cluster_id.as_deref()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Position of the chosen alternative within each observation.
    pub fn chosen_positions(&self) -> Option<Vec<usize>> {
        let outcome = self.outcome.as_ref()?;
        Some(
            self.obs_ranges
                .iter()
                .map(|r| {
                    outcome[r.clone()]
                        .iter()
                        .position(|&y| y)
                        .expect("validated: one chosen row")
                })
                .collect(),
        )
    }

    /// Share of observations choosing the alternative in each within-observation
    /// position (1st row, 2nd row, ...).
    pub fn alternative_frequencies(&self) -> Vec<f64> {
        let Some(chosen) = self.chosen_positions() else {
            return Vec::new();
        };
        let max_j = self.obs_ranges.iter().map(|r| r.len()).max().unwrap_or(0);
        let mut counts = vec![0usize; max_j];
        for c in &chosen {
            counts[*c] += 1;
        }
        let n = chosen.len() as f64;
        counts.into_iter().map(|c| c as f64 / n).collect()
    }

    /// Reorders the levels of a categorical column; the first level becomes the
    /// reference. Numeric columns are converted to categorical.
    pub fn relevel<S: AsRef<str>>(&mut self, name: &str, order: &[S]) -> Result<()> {
        let col = self
            .columns
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::schema(format!("unknown column '{name}'")))?;
        let labels: Vec<String> = (0..col.len()).map(|r| col.display(r)).collect();
        let order: Vec<String> = order.iter().map(|s| s.as_ref().to_string()).collect();
        col.values = categorical_with_order(name, &labels, &order)?;
        Ok(())
    }

    /// Keeps only the listed observations (in data order).
    pub fn filter_obs<S: AsRef<str>>(&self, ids: &[S]) -> Result<Self> {
        let wanted: BTreeSet<&str> = ids.iter().map(|s| s.as_ref()).collect();
        let rows: Vec<usize> = self
            .obs_ranges
            .iter()
            .filter(|r| wanted.contains(self.obs_id[r.start].as_str()))
            .flat_map(|r| r.clone())
            .collect();
        if rows.is_empty() {
            return Err(Error::validation("no observations matched the filter"));
        }
        let pick_s = |v: &Vec<String>| rows.iter().map(|&r| v[r].clone()).collect::<Vec<_>>();
        Self::new(RawChoiceData {
            outcome: self
                .outcome
                .as_ref()
                .map(|o| rows.iter().map(|&r| o[r]).collect()),
            obs_id: pick_s(&self.obs_id),
            panel_id: self.panel_id.as_ref().map(pick_s),
            weight: self
                .weight
                .as_ref()
                .map(|w| rows.iter().map(|&r| w[r]).collect()),
            cluster_id: self.cluster_id.as_ref().map(pick_s),
            columns: self.columns.iter().map(|c| c.subset(&rows)).collect(),
        })
    }

    /// Reads a CSV with a header row.
    pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for record in rdr.records() {
            let record = record?;
            for (col, value) in cells.iter_mut().zip(record.iter()) {
                col.push(value.to_string());
            }
        }

        let position = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::schema(format!("column '{name}' not found in header")))
        };
        for role in schema.role_columns() {
            position(role)?;
        }
        for name in schema.levels.keys() {
            position(name)?;
        }

        let missing: Vec<usize> = (0..cells.first().map_or(0, Vec::len))
            .filter(|&row| cells.iter().any(|col| is_missing(&col[row])))
            .collect();
        if !missing.is_empty() {
            let shown: Vec<String> = missing.iter().take(10).map(|r| (r + 1).to_string()).collect();
            return Err(Error::validation(format!(
                "missing values in {} data row(s): {}{}",
                missing.len(),
                shown.join(", "),
                if missing.len() > 10 { ", ..." } else { "" }
            )));
        }

        let outcome = match &schema.outcome {
            Some(name) => {
                let col = &cells[position(name)?];
                let parsed = col
                    .iter()
                    .enumerate()
                    .map(|(row, s)| match s.parse::<f64>() {
                        Ok(v) if v == 1.0 => Ok(true),
                        Ok(v) if v == 0.0 => Ok(false),
                        _ => Err(Error::validation(format!(
                            "outcome '{name}' must be 0 or 1, found '{s}' in row {}",
                            row + 1
                        ))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(parsed)
            }
            None => None,
        };
        let weight = match &schema.weights {
            Some(name) => Some(parse_numeric(name, &cells[position(name)?])?),
            None => None,
        };
        let text = |name: &Option<String>| -> Result<Option<Vec<String>>> {
            name.as_ref()
                .map(|n| position(n).map(|i| cells[i].clone()))
                .transpose()
        };

        let roles = schema.role_columns();
        let mut columns = Vec::new();
        for (i, name) in headers.iter().enumerate() {
            if roles.contains(&name.as_str()) {
                continue;
            }
            let raw = &cells[i];
            let values = match schema.levels.get(name) {
                Some(order) => categorical_with_order(name, raw, order)?,
                None => match parse_numeric(name, raw) {
                    Ok(v) => ColumnValues::Numeric(v),
                    Err(_) => Column::categorical(name.as_str(), raw).values,
                },
            };
            columns.push(Column {
                name: name.clone(),
                values,
            });
        }

        Self::new(RawChoiceData {
            outcome,
            obs_id: cells[position(&schema.obs_id)?].clone(),
            panel_id: text(&schema.panel_id)?,
            weight,
            cluster_id: text(&schema.cluster_id)?,
            columns,
        })
    }
}

/// Loads and validates a long-format CSV file.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<LongChoiceData> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    LongChoiceData::read_csv(std::io::BufReader::new(file), schema)
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "NA" || cell == "NaN"
}

fn parse_numeric(name: &str, raw: &[String]) -> Result<Vec<f64>> {
    raw.iter()
        .enumerate()
        .map(|(row, s)| {
            s.parse::<f64>().map_err(|_| {
                Error::Type(format!(
                    "column '{name}' row {}: '{s}' is not numeric",
                    row + 1
                ))
            })
        })
        .collect()
}

fn categorical_with_order(name: &str, raw: &[String], order: &[String]) -> Result<ColumnValues> {
    if order.is_empty() {
        return Ok(Column::categorical(name, raw).values);
    }
    let index: HashMap<&str, usize> = order
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    if index.len() != order.len() {
        return Err(Error::schema(format!("duplicate levels declared for '{name}'")));
    }
    let codes = raw
        .iter()
        .map(|v| {
            index.get(v.as_str()).copied().ok_or_else(|| {
                Error::validation(format!(
                    "value '{v}' in column '{name}' is not among the declared levels"
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ColumnValues::Categorical {
        levels: order.to_vec(),
        codes,
    })
}

fn contiguous_groups(ids: &[String]) -> Result<Vec<Range<usize>>> {
    let mut ranges: Vec<Range<usize>> = Vec::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut start = 0;
    for row in 1..=ids.len() {
        if row == ids.len() || ids[row] != ids[start] {
            if !seen.insert(ids[start].as_str()) {
                return Err(Error::validation(format!(
                    "rows of observation {} are not contiguous",
                    ids[start]
                )));
            }
            ranges.push(start..row);
            start = row;
        }
    }
    Ok(ranges)
}

fn constant_within<V: PartialEq + std::fmt::Debug>(
    ranges: &[Range<usize>],
    obs_id: &[String],
    values: &[V],
    what: &str,
) -> Result<()> {
    for r in ranges {
        let first = &values[r.start];
        if values[r.clone()].iter().any(|v| v != first) {
            return Err(Error::validation(format!(
                "{what} varies within observation {}",
                obs_id[r.start]
            )));
        }
    }
    Ok(())
}
