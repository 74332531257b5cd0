use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{yoy_growth, Dataset, Quarter};
use crate::error::{Error, Result};

/// What a CSV column means to the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    /// Inflation already in % y-o-y.
    Inflation,
    /// Price level; inflation is derived as its y-o-y growth.
    Cpi,
    /// Seasonally adjusted real GDP level.
    Gdp,
    /// Pre-computed output gap (skips trend extraction for GDP).
    Gap,
    /// User-supplied inflation expectations.
    Expectations,
    /// Supply-side control, used as-is.
    Control,
    /// Supply-side control in levels, converted to y-o-y growth.
    ControlGrowth,
}

impl ColumnRole {
    /// Column name the loaded dataset uses for this role, if it is a singleton role.
    pub fn canonical_name(self) -> Option<&'static str> {
        match self {
            ColumnRole::Inflation => Some("inflation"),
            ColumnRole::Cpi => Some("cpi"),
            ColumnRole::Gdp => Some("gdp"),
            ColumnRole::Gap => Some("gap"),
            ColumnRole::Expectations => Some("expected_inflation"),
            ColumnRole::Control | ColumnRole::ControlGrowth => None,
        }
    }
}

/// Ordered column-name → role map. Empty means "load every column verbatim".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<(String, ColumnRole)>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, column: impl Into<String>, role: ColumnRole) -> Self {
        self.columns.push((column.into(), role));
        self
    }

    fn target_name(&self, csv_name: &str) -> Option<String> {
        if self.columns.is_empty() {
            return Some(csv_name.to_string());
        }
        self.columns
            .iter()
            .find(|(c, _)| c == csv_name)
            .map(|(c, r)| r.canonical_name().map_or_else(|| c.clone(), str::to_string))
    }
}

pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset> {
    let mut text = String::new();
    std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?
        .read_to_string(&mut text)?;
    read_csv_str(&text, schema)
}

/// Parse CSV text with a leading `date` column.
pub fn read_csv_str(text: &str, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.first().map(String::as_str) != Some("date") {
        return Err(Error::ParseError {
            row: 0,
            column: headers.first().cloned().unwrap_or_default(),
            message: "first column must be named `date`".into(),
        });
    }
    for (col, _) in &schema.columns {
        if !headers[1..].iter().any(|h| h == col) {
            return Err(Error::MissingColumn(col.clone()));
        }
    }
    let selected: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .skip(1)
        .filter_map(|(j, h)| schema.target_name(h).map(|t| (j, t)))
        .collect();

    let mut index = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); selected.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let raw = rec.get(0).unwrap_or("");
        let q: Quarter = raw.parse().map_err(|_| Error::ParseError {
            row,
            column: "date".into(),
            message: format!("`{raw}` is not a quarter"),
        })?;
        if let Some(prev) = index.last().copied() {
            let prev: Quarter = prev;
            if q == prev {
                return Err(Error::DuplicateIndex(q.to_string()));
            }
            if q < prev {
                return Err(Error::UnsortedIndex(q.to_string()));
            }
        }
        index.push(q);
        for (k, (j, _)) in selected.iter().enumerate() {
            let cell = rec.get(*j).unwrap_or("");
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::ParseError {
                    row,
                    column: headers[*j].clone(),
                    message: format!("`{cell}` is not a finite number"),
                })?;
            values[k].push(v);
        }
    }
    let mut ds = Dataset::new(index)?;
    for ((_, name), vals) in selected.into_iter().zip(values) {
        ds.push_column(name, vals, String::new())?;
    }
    Ok(ds)
}

/// Loads `path` and applies the schema's conversions: `cpi` becomes
/// `inflation` (y-o-y growth) and `control_growth` columns are replaced by
/// their y-o-y growth. The result spans the quarters where every column is defined.
pub fn load_dataset(path: &Path, schema: &Schema) -> Result<Dataset> {
    apply_roles(&load_csv(path, schema)?, schema)
}

pub fn apply_roles(ds: &Dataset, schema: &Schema) -> Result<Dataset> {
    let growth: Vec<String> = schema
        .columns
        .iter()
        .filter_map(|(c, r)| match r {
            ColumnRole::Cpi => Some("cpi".to_string()),
            ColumnRole::ControlGrowth => Some(c.clone()),
            _ => None,
        })
        .collect();
    if growth.is_empty() {
        return Ok(ds.clone());
    }
    let mut cols = Vec::new();
    for name in ds.column_names() {
        let s = ds.series(name)?;
        cols.push(if name == "cpi" {
            if ds.has_column("inflation") {
                return Err(Error::Config("both a cpi and an inflation column are mapped".into()));
            }
            yoy_growth(&s)?.renamed("inflation")
        } else if growth.iter().any(|g| g == name) {
            yoy_growth(&s)?.renamed(name)
        } else {
            s
        });
    }
    Dataset::from_series(cols)
}

pub fn write_csv_string(ds: &Dataset) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(ds, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Values are printed with Rust's shortest round-trip formatting.
pub fn write_csv<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string()];
    header.extend(ds.column_names().map(str::to_string));
    w.write_record(&header)?;
    for (i, q) in ds.index().iter().enumerate() {
        let mut rec = vec![q.to_string()];
        for c in &ds.columns {
            rec.push(format!("{}", c.values[i]));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
