//! Dataset ingestion: schema-validated CSV parsing, cleaning, splitting,
//! sampling and conversion to dense feature matrices.
//!
//! A [`Dataset`] is a timestamped table whose columns are declared by a
//! [`Schema`]. Cells may be missing; a [`FeatureMatrix`] (what the
//! estimators consume) never has missing or non-finite entries, so callers
//! go through [`Dataset::clean`] before [`Dataset::to_matrix`].

use std::collections::HashSet;
use std::io::Read;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, TimeZone, Utc};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding::shuffled_indices;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("schema must declare exactly one `target` column, found {0}")]
    SchemaTargetCount(usize),
    #[error("schema must declare exactly one `timestamp` column, found {0}")]
    SchemaTimestampCount(usize),
    #[error("schema column name is empty")]
    EmptyColumnName,
    #[error("duplicate column `{0}` in schema")]
    DuplicateColumn(String),
    #[error("column `{0}` declared in schema is missing from the CSV header")]
    MissingColumn(String),
    #[error("row {row}: cannot parse timestamp `{value}`")]
    BadTimestamp { row: usize, value: String },
    #[error("row {row}: timestamps must be strictly increasing")]
    NonMonotonicTimestamps { row: usize },
    #[error("no rows left after cleaning")]
    EmptyAfterClean,
    #[error("need at least 2 rows to split, got {n}")]
    TooFewRows { n: usize },
    #[error("train_fraction must lie in (0, 1), got {0}")]
    BadTrainFraction(f64),
    #[error("sample size {m} exceeds row count {n}")]
    SampleTooLarge { m: usize, n: usize },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("target `{0}` also listed among the features")]
    TargetInFeatures(String),
    #[error("feature `{0}` requested more than once")]
    DuplicateFeature(String),
    #[error("no features requested")]
    NoFeatures,
    #[error("column `{column}`, row {row}: missing value (clean the dataset first)")]
    MissingValue { column: String, row: usize },
    #[error("column `{column}`, row {row}: non-finite value")]
    NonFinite { column: String, row: usize },
    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// What a column holds. Mirrors the three source systems (weather station,
/// meter, irradiance sensors) plus the regression target and the time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    WeatherCurrent,
    WeatherForecast,
    Meter,
    Irradiance,
    Target,
    Timestamp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default)]
    pub unit: String,
}

impl ColumnSchema {
    pub fn new(name: impl Into<String>, kind: ColumnKind, unit: impl Into<String>) -> Self {
        Self { name: name.into(), kind, unit: unit.into() }
    }
}

/// Validated column list: unique non-empty names, exactly one target and
/// exactly one timestamp column.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    columns: Vec<ColumnSchema>,
    timestamp_idx: usize,
    target_idx: usize,
}

impl PartialEq for ColumnSchema {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind == other.kind && self.unit == other.unit
    }
}

impl Schema {
    pub fn new(columns: Vec<ColumnSchema>) -> Result<Self, DataError> {
        let mut seen = HashSet::new();
        for col in &columns {
            if col.name.is_empty() {
                return Err(DataError::EmptyColumnName);
            }
            if !seen.insert(col.name.clone()) {
                return Err(DataError::DuplicateColumn(col.name.clone()));
            }
        }
        let targets: Vec<usize> = indices_of(&columns, ColumnKind::Target);
        if targets.len() != 1 {
            return Err(DataError::SchemaTargetCount(targets.len()));
        }
        let timestamps: Vec<usize> = indices_of(&columns, ColumnKind::Timestamp);
        if timestamps.len() != 1 {
            return Err(DataError::SchemaTimestampCount(timestamps.len()));
        }
        Ok(Self { columns, timestamp_idx: timestamps[0], target_idx: targets[0] })
    }

    /// Parse the on-disk schema form: a JSON list of `{name, kind, unit}`.
    pub fn from_json_str(json: &str) -> Result<Self, DataError> {
        let columns: Vec<ColumnSchema> = serde_json::from_str(json)?;
        Self::new(columns)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.columns).expect("schema serializes")
    }

    pub fn columns(&self) -> &[ColumnSchema] {
        &self.columns
    }

    pub fn timestamp_name(&self) -> &str {
        &self.columns[self.timestamp_idx].name
    }

    pub fn target_name(&self) -> &str {
        &self.columns[self.target_idx].name
    }

    /// All columns except the timestamp, in schema order. These are the
    /// columns a [`Dataset`] row carries value slots for.
    pub fn value_columns(&self) -> impl Iterator<Item = &ColumnSchema> {
        let ts = self.timestamp_idx;
        self.columns.iter().enumerate().filter_map(move |(i, c)| (i != ts).then_some(c))
    }

    /// Names of all value columns with one of the given kinds, schema order.
    pub fn names_with_kind(&self, kinds: &[ColumnKind]) -> Vec<String> {
        self.value_columns()
            .filter(|c| kinds.contains(&c.kind))
            .map(|c| c.name.clone())
            .collect()
    }

    fn value_index(&self, name: &str) -> Option<usize> {
        self.value_columns().position(|c| c.name == name)
    }
}

fn indices_of(columns: &[ColumnSchema], kind: ColumnKind) -> Vec<usize> {
    columns
        .iter()
        .enumerate()
        .filter_map(|(i, c)| (c.kind == kind).then_some(i))
        .collect()
}

/// Missing-data policy for [`Dataset::clean`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CleanPolicy {
    /// Drop every row containing at least one missing cell.
    DropRows,
}

/// Random train/test split parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// A timestamped table with possibly-missing numeric cells.
///
/// Invariants: one value slot per non-timestamp schema column in every row,
/// and strictly increasing timestamps (epoch seconds).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    timestamps: Vec<i64>,
    rows: Vec<Vec<Option<f64>>>,
}

#[derive(Clone, Copy)]
enum TimestampFormat {
    EpochSeconds,
    Rfc3339,
    NaiveT,
    NaiveSpace,
}

fn detect_timestamp_format(cell: &str) -> Option<TimestampFormat> {
    let cell = cell.trim();
    if cell.parse::<i64>().is_ok() {
        return Some(TimestampFormat::EpochSeconds);
    }
    if DateTime::parse_from_rfc3339(cell).is_ok() {
        return Some(TimestampFormat::Rfc3339);
    }
    if NaiveDateTime::parse_from_str(cell, "%Y-%m-%dT%H:%M:%S").is_ok() {
        return Some(TimestampFormat::NaiveT);
    }
    if NaiveDateTime::parse_from_str(cell, "%Y-%m-%d %H:%M:%S").is_ok() {
        return Some(TimestampFormat::NaiveSpace);
    }
    None
}

fn parse_timestamp(cell: &str, format: TimestampFormat) -> Option<i64> {
    let cell = cell.trim();
    match format {
        TimestampFormat::EpochSeconds => cell.parse::<i64>().ok(),
        TimestampFormat::Rfc3339 => {
            DateTime::parse_from_rfc3339(cell).ok().map(|t| t.timestamp())
        }
        TimestampFormat::NaiveT => NaiveDateTime::parse_from_str(cell, "%Y-%m-%dT%H:%M:%S")
            .ok()
            .map(|t| t.and_utc().timestamp()),
        TimestampFormat::NaiveSpace => NaiveDateTime::parse_from_str(cell, "%Y-%m-%d %H:%M:%S")
            .ok()
            .map(|t| t.and_utc().timestamp()),
    }
}

impl Dataset {
    /// Build a dataset from pre-parsed parts, checking the row-shape and
    /// timestamp-order invariants.
    pub fn new(
        schema: Schema,
        timestamps: Vec<i64>,
        rows: Vec<Vec<Option<f64>>>,
    ) -> Result<Self, DataError> {
        let width = schema.value_columns().count();
        if timestamps.len() != rows.len() {
            return Err(DataError::ShapeMismatch(format!(
                "{} timestamps for {} rows",
                timestamps.len(),
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(DataError::ShapeMismatch(format!(
                    "row {i} has {} cells, schema has {width} value columns",
                    row.len()
                )));
            }
        }
        for (i, pair) in timestamps.windows(2).enumerate() {
            if pair[1] <= pair[0] {
                return Err(DataError::NonMonotonicTimestamps { row: i + 1 });
            }
        }
        Ok(Self { schema, timestamps, rows })
    }

    /// Parse an RFC-4180 CSV stream against a schema.
    ///
    /// The header row is mandatory and must contain every schema column
    /// (extra columns are ignored). Empty or unparseable numeric cells,
    /// including non-finite values, become missing. The timestamp format
    /// (epoch seconds or ISO-8601) is detected from the first data row and
    /// applied to the whole file.
    pub fn parse_csv<R: Read>(source: R, schema: Schema) -> Result<Self, DataError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
        let header = reader.headers()?.clone();
        let position = |name: &str| -> Result<usize, DataError> {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| DataError::MissingColumn(name.to_string()))
        };

        let ts_pos = position(schema.timestamp_name())?;
        let value_pos: Vec<usize> = schema
            .value_columns()
            .map(|c| position(&c.name))
            .collect::<Result<_, _>>()?;

        let mut timestamps = Vec::new();
        let mut rows = Vec::new();
        let mut ts_format: Option<TimestampFormat> = None;
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let cell = record.get(ts_pos).unwrap_or("");
            let format = match ts_format {
                Some(f) => f,
                None => {
                    let f = detect_timestamp_format(cell).ok_or_else(|| {
                        DataError::BadTimestamp { row: i, value: cell.to_string() }
                    })?;
                    ts_format = Some(f);
                    f
                }
            };
            let ts = parse_timestamp(cell, format)
                .ok_or_else(|| DataError::BadTimestamp { row: i, value: cell.to_string() })?;
            if let Some(&last) = timestamps.last() {
                if ts <= last {
                    return Err(DataError::NonMonotonicTimestamps { row: i });
                }
            }
            timestamps.push(ts);
            let row: Vec<Option<f64>> = value_pos
                .iter()
                .map(|&p| {
                    record
                        .get(p)
                        .and_then(|cell| cell.trim().parse::<f64>().ok())
                        .filter(|v| v.is_finite())
                })
                .collect();
            rows.push(row);
        }
        Ok(Self { schema, timestamps, rows })
    }

    /// Serialize back to the CSV form accepted by [`Dataset::parse_csv`]:
    /// schema column order, RFC-3339 timestamps, empty cells for missing.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let names: Vec<&str> = self.schema.columns().iter().map(|c| c.name.as_str()).collect();
        out.push_str(&names.join(","));
        out.push('\n');
        let value_names: Vec<&str> =
            self.schema.value_columns().map(|c| c.name.as_str()).collect();
        for (i, row) in self.rows.iter().enumerate() {
            let mut cells = Vec::with_capacity(names.len());
            for col in self.schema.columns() {
                if col.kind == ColumnKind::Timestamp {
                    cells.push(format_epoch_rfc3339(self.timestamps[i]));
                } else {
                    let j = value_names.iter().position(|n| *n == col.name).unwrap();
                    cells.push(match row[j] {
                        Some(v) => v.to_string(),
                        None => String::new(),
                    });
                }
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    /// All values of one column, by name.
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>, DataError> {
        let j = self
            .schema
            .value_index(name)
            .ok_or_else(|| DataError::UnknownFeature(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Apply a missing-data policy. Returns the cleaned dataset and the
    /// number of rows dropped.
    pub fn clean(&self, policy: CleanPolicy) -> Result<(Dataset, usize), DataError> {
        match policy {
            CleanPolicy::DropRows => {
                let keep: Vec<usize> = (0..self.n_rows())
                    .filter(|&i| self.rows[i].iter().all(|v| v.is_some()))
                    .collect();
                if keep.is_empty() && self.n_rows() > 0 {
                    return Err(DataError::EmptyAfterClean);
                }
                let dropped = self.n_rows() - keep.len();
                Ok((self.subset(&keep), dropped))
            }
        }
    }

    /// Random train/test split. Row membership is a seeded uniform shuffle,
    /// deterministic in `(seed, n)`; both halves keep the original time
    /// order. `|train| = round(train_fraction * n)`.
    pub fn split(&self, spec: &SplitSpec) -> Result<(Dataset, Dataset), DataError> {
        if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
            return Err(DataError::BadTrainFraction(spec.train_fraction));
        }
        let n = self.n_rows();
        if n < 2 {
            return Err(DataError::TooFewRows { n });
        }
        let n_train = (spec.train_fraction * n as f64).round() as usize;
        let order = shuffled_indices(n, spec.seed);
        let mut train_idx: Vec<usize> = order[..n_train].to_vec();
        let mut test_idx: Vec<usize> = order[n_train..].to_vec();
        train_idx.sort_unstable();
        test_idx.sort_unstable();
        Ok((self.subset(&train_idx), self.subset(&test_idx)))
    }

    /// Draw `m` distinct rows uniformly without replacement, deterministic
    /// in `seed`, keeping the original time order.
    pub fn sample(&self, m: usize, seed: u64) -> Result<Dataset, DataError> {
        let n = self.n_rows();
        if m > n {
            return Err(DataError::SampleTooLarge { m, n });
        }
        let order = shuffled_indices(n, seed);
        let mut keep: Vec<usize> = order[..m].to_vec();
        keep.sort_unstable();
        Ok(self.subset(&keep))
    }

    /// Assemble the design matrix for the named features and target column.
    /// Requires the involved columns to be fully observed.
    pub fn to_matrix(&self, features: &[String], target: &str) -> Result<FeatureMatrix, DataError> {
        if features.is_empty() {
            return Err(DataError::NoFeatures);
        }
        if let Some(name) = features.iter().find(|f| f.as_str() == target) {
            return Err(DataError::TargetInFeatures(name.clone()));
        }
        let mut seen = HashSet::new();
        for f in features {
            if !seen.insert(f.as_str()) {
                return Err(DataError::DuplicateFeature(f.clone()));
            }
        }
        let feature_idx: Vec<usize> = features
            .iter()
            .map(|f| self.schema.value_index(f).ok_or_else(|| DataError::UnknownFeature(f.clone())))
            .collect::<Result<_, _>>()?;
        let target_idx = self
            .schema
            .value_index(target)
            .ok_or_else(|| DataError::UnknownFeature(target.to_string()))?;

        let n = self.n_rows();
        let p = features.len();
        let cell = |row: usize, col: usize, name: &str| -> Result<f64, DataError> {
            self.rows[row][col]
                .ok_or_else(|| DataError::MissingValue { column: name.to_string(), row })
        };
        let mut x = DMatrix::zeros(n, p);
        for (j, &col) in feature_idx.iter().enumerate() {
            for i in 0..n {
                x[(i, j)] = cell(i, col, &features[j])?;
            }
        }
        let mut y = DVector::zeros(n);
        for i in 0..n {
            y[i] = cell(i, target_idx, target)?;
        }
        FeatureMatrix::new(x, y, features.to_vec())
    }

    fn subset(&self, keep: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            timestamps: keep.iter().map(|&i| self.timestamps[i]).collect(),
            rows: keep.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

pub(crate) fn format_epoch_rfc3339(epoch: i64) -> String {
    Utc.timestamp_opt(epoch, 0)
        .single()
        .expect("valid epoch")
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Dense design matrix plus target vector. All entries finite, feature
/// names unique and aligned with the columns of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    x: DMatrix<f64>,
    y: DVector<f64>,
    feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        x: DMatrix<f64>,
        y: DVector<f64>,
        feature_names: Vec<String>,
    ) -> Result<Self, DataError> {
        if x.ncols() != feature_names.len() {
            return Err(DataError::ShapeMismatch(format!(
                "{} columns but {} feature names",
                x.ncols(),
                feature_names.len()
            )));
        }
        if x.nrows() != y.len() {
            return Err(DataError::ShapeMismatch(format!(
                "{} rows in X but {} targets",
                x.nrows(),
                y.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(DataError::DuplicateFeature(name.clone()));
            }
        }
        for (j, name) in feature_names.iter().enumerate() {
            if let Some(i) = x.column(j).iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { column: name.clone(), row: i });
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { column: "<target>".to_string(), row: i });
        }
        Ok(Self { x, y, feature_names })
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Restrict to the named columns, in the order given.
    pub fn select_features(&self, names: &[String]) -> Result<FeatureMatrix, DataError> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| DataError::UnknownFeature(n.clone()))
            })
            .collect::<Result<_, _>>()?;
        let x = DMatrix::from_fn(self.n_rows(), idx.len(), |i, j| self.x[(i, idx[j])]);
        FeatureMatrix::new(x, self.y.clone(), names.to_vec())
    }

    /// Restrict to the given rows, in the order given.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let x = DMatrix::from_fn(rows.len(), self.n_features(), |i, j| self.x[(rows[i], j)]);
        let y = DVector::from_fn(rows.len(), |i, _| self.y[rows[i]]);
        FeatureMatrix { x, y, feature_names: self.feature_names.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_schema() -> Schema {
        Schema::new(vec![
            ColumnSchema::new("timestamp", ColumnKind::Timestamp, ""),
            ColumnSchema::new("tempF", ColumnKind::WeatherCurrent, "°F"),
            ColumnSchema::new("humidity", ColumnKind::WeatherCurrent, "%"),
            ColumnSchema::new("pv_power", ColumnKind::Target, "kW"),
        ])
        .unwrap()
    }

    fn toy_csv(body: &str) -> String {
        format!("timestamp,tempF,humidity,pv_power\n{body}")
    }

    #[test]
    fn schema_rejects_missing_target() {
        let err = Schema::new(vec![
            ColumnSchema::new("timestamp", ColumnKind::Timestamp, ""),
            ColumnSchema::new("tempF", ColumnKind::WeatherCurrent, "°F"),
        ])
        .unwrap_err();
        assert!(matches!(err, DataError::SchemaTargetCount(0)));
    }

    #[test]
    fn schema_rejects_duplicate_names() {
        let err = Schema::new(vec![
            ColumnSchema::new("timestamp", ColumnKind::Timestamp, ""),
            ColumnSchema::new("tempF", ColumnKind::WeatherCurrent, "°F"),
            ColumnSchema::new("tempF", ColumnKind::Target, "kW"),
        ])
        .unwrap_err();
        assert!(matches!(err, DataError::DuplicateColumn(n) if n == "tempF"));
    }

    #[test]
    fn parse_empty_file_gives_zero_rows() {
        let d = Dataset::parse_csv(toy_csv("").as_bytes(), toy_schema()).unwrap();
        assert_eq!(d.n_rows(), 0);
    }

    #[test]
    fn parse_marks_blank_cell_missing() {
        let csv = toy_csv("100,1.0,,3.0\n200,2.0,50,4.0\n300,3.0,60,5.0\n");
        let d = Dataset::parse_csv(csv.as_bytes(), toy_schema()).unwrap();
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.column("humidity").unwrap()[0], None);
        assert_eq!(d.column("humidity").unwrap()[1], Some(50.0));
    }

    #[test]
    fn parse_marks_garbage_cell_missing() {
        let csv = toy_csv("100,abc,40,3.0\n");
        let d = Dataset::parse_csv(csv.as_bytes(), toy_schema()).unwrap();
        assert_eq!(d.column("tempF").unwrap()[0], None);
    }

    #[test]
    fn parse_missing_target_column_errors() {
        let csv = "timestamp,tempF,humidity\n100,1.0,40\n";
        let err = Dataset::parse_csv(csv.as_bytes(), toy_schema()).unwrap_err();
        assert!(matches!(err, DataError::MissingColumn(n) if n == "pv_power"));
    }

    #[test]
    fn parse_rejects_non_monotonic_timestamps() {
        let csv = toy_csv("200,1,2,3\n100,1,2,3\n");
        let err = Dataset::parse_csv(csv.as_bytes(), toy_schema()).unwrap_err();
        assert!(matches!(err, DataError::NonMonotonicTimestamps { row: 1 }));
    }

    #[test]
    fn parse_accepts_iso8601_timestamps() {
        let csv = toy_csv("2020-06-01T00:00:00Z,1,2,3\n2020-06-01T01:00:00Z,1,2,3\n");
        let d = Dataset::parse_csv(csv.as_bytes(), toy_schema()).unwrap();
        assert_eq!(d.timestamps()[1] - d.timestamps()[0], 3600);
    }

    #[test]
    fn parse_rejects_mixed_timestamp_formats() {
        let csv = toy_csv("100,1,2,3\n2020-06-01T01:00:00Z,1,2,3\n");
        let err = Dataset::parse_csv(csv.as_bytes(), toy_schema()).unwrap_err();
        assert!(matches!(err, DataError::BadTimestamp { row: 1, .. }));
    }

    #[test]
    fn clean_is_identity_on_complete_data() {
        let csv = toy_csv("100,1,2,3\n200,4,5,6\n");
        let d = Dataset::parse_csv(csv.as_bytes(), toy_schema()).unwrap();
        let (cleaned, dropped) = d.clean(CleanPolicy::DropRows).unwrap();
        assert_eq!(dropped, 0);
        assert_eq!(cleaned, d);
    }

    #[test]
    fn clean_drops_rows_with_missing_cells() {
        let csv = toy_csv("100,1,2,3\n200,,5,6\n300,7,8,9\n400,10,,12\n500,13,14,15\n");
        let d = Dataset::parse_csv(csv.as_bytes(), toy_schema()).unwrap();
        let (cleaned, dropped) = d.clean(CleanPolicy::DropRows).unwrap();
        assert_eq!(dropped, 2);
        assert_eq!(cleaned.n_rows(), 3);
        assert_eq!(cleaned.timestamps(), &[100, 300, 500]);
    }

    #[test]
    fn clean_errors_when_nothing_survives() {
        let csv = toy_csv("100,,2,3\n200,,5,6\n");
        let d = Dataset::parse_csv(csv.as_bytes(), toy_schema()).unwrap();
        let err = d.clean(CleanPolicy::DropRows).unwrap_err();
        assert!(matches!(err, DataError::EmptyAfterClean));
    }

    fn n_row_dataset(n: usize) -> Dataset {
        let body: String =
            (0..n).map(|i| format!("{},{},{},{}\n", 100 + i, i, 2 * i, 3 * i)).collect();
        Dataset::parse_csv(toy_csv(&body).as_bytes(), toy_schema()).unwrap()
    }

    #[test]
    fn split_sizes_follow_fraction() {
        let d = n_row_dataset(10);
        let (train, test) = d.split(&SplitSpec { train_fraction: 0.6, seed: 1 }).unwrap();
        assert_eq!(train.n_rows(), 6);
        assert_eq!(test.n_rows(), 4);
    }

    #[test]
    fn split_two_rows_half_each() {
        let d = n_row_dataset(2);
        let (train, test) = d.split(&SplitSpec { train_fraction: 0.5, seed: 9 }).unwrap();
        assert_eq!(train.n_rows(), 1);
        assert_eq!(test.n_rows(), 1);
    }

    #[test]
    fn split_is_deterministic_in_seed() {
        let d = n_row_dataset(20);
        let spec = SplitSpec { train_fraction: 0.6, seed: 77 };
        let (a1, b1) = d.split(&spec).unwrap();
        let (a2, b2) = d.split(&spec).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
    }

    #[test]
    fn split_rejects_single_row() {
        let d = n_row_dataset(1);
        let err = d.split(&SplitSpec { train_fraction: 0.6, seed: 1 }).unwrap_err();
        assert!(matches!(err, DataError::TooFewRows { n: 1 }));
    }

    #[test]
    fn sample_full_size_is_identity() {
        let d = n_row_dataset(8);
        let s = d.sample(8, 3).unwrap();
        assert_eq!(s, d);
    }

    #[test]
    fn sample_one_row_comes_from_dataset() {
        let d = n_row_dataset(8);
        let s = d.sample(1, 3).unwrap();
        assert_eq!(s.n_rows(), 1);
        assert!(d.timestamps().contains(&s.timestamps()[0]));
    }

    #[test]
    fn sample_is_deterministic() {
        let d = n_row_dataset(30);
        assert_eq!(d.sample(10, 5).unwrap(), d.sample(10, 5).unwrap());
    }

    #[test]
    fn sample_too_large_errors() {
        let d = n_row_dataset(3);
        assert!(matches!(d.sample(4, 0), Err(DataError::SampleTooLarge { m: 4, n: 3 })));
    }

    #[test]
    fn to_matrix_lays_out_columns_in_request_order() {
        let csv = toy_csv("100,1,10,3\n200,2,20,6\n");
        let d = Dataset::parse_csv(csv.as_bytes(), toy_schema()).unwrap();
        let m =
            d.to_matrix(&["humidity".to_string(), "tempF".to_string()], "pv_power").unwrap();
        assert_eq!(m.x()[(0, 0)], 10.0);
        assert_eq!(m.x()[(0, 1)], 1.0);
        assert_eq!(m.y()[1], 6.0);
        let swapped =
            d.to_matrix(&["tempF".to_string(), "humidity".to_string()], "pv_power").unwrap();
        assert_eq!(swapped.x()[(0, 0)], 1.0);
        assert_eq!(swapped.x()[(0, 1)], 10.0);
    }

    #[test]
    fn to_matrix_rejects_target_among_features() {
        let d = n_row_dataset(2);
        let err = d.to_matrix(&["pv_power".to_string()], "pv_power").unwrap_err();
        assert!(matches!(err, DataError::TargetInFeatures(_)));
    }

    #[test]
    fn to_matrix_single_feature() {
        let csv = toy_csv("100,1.5,10,3\n200,2.5,20,6\n");
        let d = Dataset::parse_csv(csv.as_bytes(), toy_schema()).unwrap();
        let m = d.to_matrix(&["tempF".to_string()], "pv_power").unwrap();
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.n_features(), 1);
        assert_eq!(m.x()[(1, 0)], 2.5);
    }

    #[test]
    fn to_matrix_reports_missing_values() {
        let csv = toy_csv("100,,10,3\n");
        let d = Dataset::parse_csv(csv.as_bytes(), toy_schema()).unwrap();
        let err = d.to_matrix(&["tempF".to_string()], "pv_power").unwrap_err();
        assert!(matches!(err, DataError::MissingValue { column, row: 0 } if column == "tempF"));
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let csv = toy_csv("100,1.25,0.1,3.0000001\n200,,50,6\n");
        let d = Dataset::parse_csv(csv.as_bytes(), toy_schema()).unwrap();
        let back =
            Dataset::parse_csv(d.to_csv_string().as_bytes(), toy_schema()).unwrap();
        assert_eq!(d, back);
    }
}
