//! Typed tabular datasets: CSV loading, column typing, fold plans and
//! holdout splits.
//!
//! A [`Dataset`] is stored column-major. Exactly one numerical column is the
//! regression target; every other column is a feature. Datasets are
//! immutable once built.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Categorical,
    Numerical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeRole {
    Feature,
    Target,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    pub role: AttributeRole,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numerical(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numerical(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> AttributeKind {
        match self {
            Column::Numerical(_) => AttributeKind::Numerical,
            Column::Categorical(_) => AttributeKind::Categorical,
        }
    }
}

/// An owned cell value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Symbol(String),
}

/// A borrowed cell value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueRef<'a> {
    Number(f64),
    Symbol(&'a str),
}

impl Value {
    pub fn as_ref(&self) -> ValueRef<'_> {
        match self {
            Value::Number(x) => ValueRef::Number(*x),
            Value::Symbol(s) => ValueRef::Symbol(s),
        }
    }
}

/// Anything that can report attribute values by name: a dataset row or a
/// free-standing record read at prediction time.
pub trait Observation {
    fn get(&self, attribute: &str) -> Option<ValueRef<'_>>;
}

/// A free-standing observation keyed by attribute name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    values: BTreeMap<String, Value>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, attribute: impl Into<String>, value: Value) -> Self {
        self.values.insert(attribute.into(), value);
        self
    }

    pub fn insert(&mut self, attribute: impl Into<String>, value: Value) {
        self.values.insert(attribute.into(), value);
    }
}

impl Observation for Record {
    fn get(&self, attribute: &str) -> Option<ValueRef<'_>> {
        self.values.get(attribute).map(Value::as_ref)
    }
}

/// Row `index` of a dataset viewed as an [`Observation`].
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a> {
    data: &'a Dataset,
    index: usize,
}

impl RowView<'_> {
    pub fn index(&self) -> usize {
        self.index
    }
}

impl Observation for RowView<'_> {
    fn get(&self, attribute: &str) -> Option<ValueRef<'_>> {
        let col = self.data.column_index(attribute)?;
        Some(match &self.data.columns[col] {
            Column::Numerical(v) => ValueRef::Number(v[self.index]),
            Column::Categorical(v) => ValueRef::Symbol(&v[self.index]),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<AttributeSchema>,
    columns: Vec<Column>,
    index: HashMap<String, usize>,
    target: usize,
    n: usize,
}

impl Dataset {
    /// Builds a dataset from named columns. `target` must name a numerical
    /// column and at least one other column must exist.
    pub fn from_columns(columns: Vec<(String, Column)>, target: &str) -> Result<Self> {
        let n = columns.first().map(|(_, c)| c.len()).unwrap_or(0);
        if n == 0 {
            return Err(Error::EmptyTable);
        }
        let mut index = HashMap::new();
        let mut schema = Vec::with_capacity(columns.len());
        let mut cols = Vec::with_capacity(columns.len());
        let mut target_idx = None;
        for (i, (name, col)) in columns.into_iter().enumerate() {
            if col.len() != n {
                return Err(Error::BadRow {
                    row: n.min(col.len()),
                    message: format!("column `{name}` has {} cells, expected {n}", col.len()),
                });
            }
            if let Column::Numerical(v) = &col {
                if let Some(r) = v.iter().position(|x| !x.is_finite()) {
                    return Err(Error::BadRow {
                        row: r,
                        message: format!("column `{name}` holds non-finite value {}", v[r]),
                    });
                }
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateColumn(name));
            }
            let role = if name == target {
                target_idx = Some(i);
                AttributeRole::Target
            } else {
                AttributeRole::Feature
            };
            schema.push(AttributeSchema { name, kind: col.kind(), role });
            cols.push(col);
        }
        let target = target_idx.ok_or_else(|| Error::UnknownColumn(target.to_string()))?;
        if schema[target].kind != AttributeKind::Numerical {
            return Err(Error::NonNumericTarget(schema[target].name.clone()));
        }
        if schema.len() < 2 {
            return Err(Error::NoFeatures);
        }
        Ok(Dataset { schema, columns: cols, index, target, n })
    }

    /// Loads a CSV file with a mandatory header row.
    ///
    /// A column is numerical iff every cell parses as a finite real, unless
    /// it is listed in `categorical`. Empty cells are rejected.
    pub fn load_csv(
        path: impl AsRef<Path>,
        target: &str,
        categorical: &BTreeSet<String>,
    ) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_csv_reader(file, target, categorical)
    }

    pub fn from_csv_reader<R: Read>(
        reader: R,
        target: &str,
        categorical: &BTreeSet<String>,
    ) -> Result<Self> {
        let (header, cells) = read_cells(reader)?;
        if cells.is_empty() {
            return Err(Error::EmptyTable);
        }
        if !header.iter().any(|h| h == target) {
            return Err(Error::UnknownColumn(target.to_string()));
        }
        if let Some(bad) = categorical.iter().find(|c| !header.contains(c)) {
            return Err(Error::UnknownColumn(bad.clone()));
        }
        let mut columns = Vec::with_capacity(header.len());
        for (j, name) in header.into_iter().enumerate() {
            let raw = cells.iter().map(|row| row[j].as_str());
            let column = if categorical.contains(&name) {
                Column::Categorical(raw.map(str::to_string).collect())
            } else {
                match raw.clone().map(parse_finite).collect::<Option<Vec<f64>>>() {
                    Some(v) => Column::Numerical(v),
                    None => Column::Categorical(raw.map(str::to_string).collect()),
                }
            };
            columns.push((name, column));
        }
        Self::from_columns(columns, target)
    }

    /// Writes the dataset back as CSV. Numbers use the shortest
    /// representation that parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.iter().map(|a| a.name.as_str()))?;
        for i in 0..self.n {
            let row: Vec<String> = self
                .columns
                .iter()
                .map(|c| match c {
                    Column::Numerical(v) => format!("{}", v[i]),
                    Column::Categorical(v) => v[i].clone(),
                })
                .collect();
            w.write_record(&row)?;
        }
        w.flush().map_err(|source| Error::Io { path: "<writer>".into(), source })?;
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn schema(&self) -> &[AttributeSchema] {
        &self.schema
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSchema> {
        self.column_index(name).map(|i| &self.schema[i])
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    pub fn target_name(&self) -> &str {
        &self.schema[self.target].name
    }

    pub fn target_values(&self) -> &[f64] {
        match &self.columns[self.target] {
            Column::Numerical(v) => v,
            Column::Categorical(_) => unreachable!("target is numerical by construction"),
        }
    }

    /// Values of a numerical column, or `None` if the column is absent or
    /// categorical.
    pub fn numeric_column(&self, name: &str) -> Option<&[f64]> {
        match self.column(name)? {
            Column::Numerical(v) => Some(v),
            Column::Categorical(_) => None,
        }
    }

    pub fn categorical_column(&self, name: &str) -> Option<&[String]> {
        match self.column(name)? {
            Column::Categorical(v) => Some(v),
            Column::Numerical(_) => None,
        }
    }

    /// Numerical feature names, target excluded, in schema order.
    pub fn numeric_features(&self) -> Vec<&str> {
        self.features_of(AttributeKind::Numerical)
    }

    pub fn categorical_features(&self) -> Vec<&str> {
        self.features_of(AttributeKind::Categorical)
    }

    fn features_of(&self, kind: AttributeKind) -> Vec<&str> {
        self.schema
            .iter()
            .filter(|a| a.role == AttributeRole::Feature && a.kind == kind)
            .map(|a| a.name.as_str())
            .collect()
    }

    pub fn row(&self, index: usize) -> RowView<'_> {
        assert!(index < self.n, "row {index} out of range for {} rows", self.n);
        RowView { data: self, index }
    }

    pub fn all_rows(&self) -> Vec<usize> {
        (0..self.n).collect()
    }

    /// Copies the given rows, in the given order, into a new dataset with the
    /// same schema.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        if rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        let columns = self
            .schema
            .iter()
            .zip(&self.columns)
            .map(|(a, c)| {
                let col = match c {
                    Column::Numerical(v) => Column::Numerical(rows.iter().map(|&r| v[r]).collect()),
                    Column::Categorical(v) => {
                        Column::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
                    }
                };
                (a.name.clone(), col)
            })
            .collect();
        Dataset::from_columns(columns, self.target_name())
    }
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn read_cells<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut seen = BTreeSet::new();
    for h in &header {
        if !seen.insert(h) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    let mut cells = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::BadRow {
                row: i,
                message: format!("expected {} cells, found {}", header.len(), rec.len()),
            });
        }
        if let Some(j) = rec.iter().position(str::is_empty) {
            return Err(Error::BadRow {
                row: i,
                message: format!("missing value in column `{}`", header[j]),
            });
        }
        cells.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, cells))
}

/// Reads a CSV of feature values for prediction, typing each column from a
/// known schema. Columns not in the schema are ignored; extra target values
/// are harmless.
pub fn read_records<R: Read>(reader: R, schema: &[AttributeSchema]) -> Result<Vec<Record>> {
    let (header, cells) = read_cells(reader)?;
    let kinds: Vec<Option<AttributeKind>> = header
        .iter()
        .map(|h| schema.iter().find(|a| &a.name == h).map(|a| a.kind))
        .collect();
    cells
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let mut rec = Record::new();
            for ((name, kind), cell) in header.iter().zip(&kinds).zip(row) {
                match kind {
                    Some(AttributeKind::Numerical) => {
                        let x = parse_finite(&cell).ok_or_else(|| Error::BadRow {
                            row: i,
                            message: format!("`{cell}` in column `{name}` is not a finite number"),
                        })?;
                        rec.insert(name.clone(), Value::Number(x));
                    }
                    Some(AttributeKind::Categorical) => rec.insert(name.clone(), Value::Symbol(cell)),
                    None => {}
                }
            }
            Ok(rec)
        })
        .collect()
}

/// Assignment of rows to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// Shuffles `0..n` with a seeded generator and deals the result
    /// round-robin into `k` folds.
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k < 2 || k > n {
            return Err(Error::OutOfRange(format!("fold count {k} must lie in [2, {n}]")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut assignments = vec![0; n];
        for (pos, &row) in order.iter().enumerate() {
            assignments[row] = pos % k;
        }
        Ok(FoldPlan { k, assignments, seed })
    }

    /// Rows held out in fold `f`, ascending.
    pub fn test_rows(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&r| self.assignments[r] == f).collect()
    }

    /// Rows used for training in fold `f`, ascending.
    pub fn train_rows(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&r| self.assignments[r] != f).collect()
    }
}

pub fn k_folds(d: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    FoldPlan::new(d.n_rows(), k, seed)
}

/// Splits `rows` into (train, test) with `|test| = max(1, round(fraction·|rows|))`,
/// capped so that train keeps at least one row. Both halves are returned sorted.
pub fn holdout_split(rows: &[usize], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if rows.len() < 2 {
        return Err(Error::OutOfRange(format!("holdout split needs at least 2 rows, got {}", rows.len())));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::OutOfRange(format!("holdout fraction {fraction} must lie in (0, 1)")));
    }
    let n_test = ((fraction * rows.len() as f64).round() as usize).clamp(1, rows.len() - 1);
    let mut shuffled = rows.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test = shuffled[..n_test].to_vec();
    let mut train = shuffled[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}
