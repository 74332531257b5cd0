//! Quarterly series and the aligned multivariate dataset.

mod io;
mod quarter;
mod synth;
mod transform;

pub use io::{apply_roles, load_csv, load_dataset, read_csv_str, write_csv, write_csv_string, ColumnRole, Schema};
pub use quarter::Quarter;
pub use synth::{synth_dgp, SynthOutput, SynthParams};
pub use transform::{first_principal_component, lag, lead, yoy_growth, PrincipalComponent};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_index(index: &[Quarter]) -> Result<()> {
    for w in index.windows(2) {
        match w[0].quarters_until(w[1]) {
            1 => {}
            0 => return Err(Error::DuplicateIndex(w[1].to_string())),
            d if d < 0 => return Err(Error::UnsortedIndex(w[1].to_string())),
            _ => {
                return Err(Error::InsufficientHistory(format!(
                    "index has a gap between {} and {}",
                    w[0], w[1]
                )))
            }
        }
    }
    Ok(())
}

/// A named quarterly series over a contiguous, strictly increasing index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    index: Vec<Quarter>,
    values: Vec<f64>,
    #[serde(default)]
    pub units: String,
}

impl Series {
    pub fn new(name: impl Into<String>, index: Vec<Quarter>, values: Vec<f64>) -> Result<Self> {
        if index.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: index.len(),
                right: values.len(),
            });
        }
        check_index(&index)?;
        let name = name.into();
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::ParseError {
                row: pos + 1,
                column: name,
                message: "non-finite value".into(),
            });
        }
        Ok(Self {
            name,
            index,
            values,
            units: String::new(),
        })
    }

    /// Series starting at `start` with consecutive quarters.
    pub fn from_start(name: impl Into<String>, start: Quarter, values: Vec<f64>) -> Result<Self> {
        let index = (0..values.len() as i64).map(|k| start.offset(k)).collect();
        Self::new(name, index, values)
    }

    pub fn with_units(mut self, units: impl Into<String>) -> Self {
        self.units = units.into();
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn index(&self) -> &[Quarter] {
        &self.index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> Option<Quarter> {
        self.index.first().copied()
    }

    pub fn last(&self) -> Option<Quarter> {
        self.index.last().copied()
    }

    /// Value at quarter `q`, if covered.
    pub fn get(&self, q: Quarter) -> Option<f64> {
        let start = self.first()?;
        let k = start.quarters_until(q);
        if k < 0 {
            return None;
        }
        self.values.get(k as usize).copied()
    }

    pub(crate) fn shifted(&self, k: i64) -> Series {
        Series {
            name: self.name.clone(),
            index: self.index.iter().map(|q| q.offset(k)).collect(),
            values: self.values.clone(),
            units: self.units.clone(),
        }
    }

    /// Restrict to quarters in `[from, to]`.
    pub fn window(&self, from: Quarter, to: Quarter) -> Series {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.index[i] >= from && self.index[i] <= to)
            .collect();
        Series {
            name: self.name.clone(),
            index: keep.iter().map(|&i| self.index[i]).collect(),
            values: keep.iter().map(|&i| self.values[i]).collect(),
            units: self.units.clone(),
        }
    }

    pub fn map(&self, name: impl Into<String>, f: impl Fn(f64) -> f64) -> Series {
        Series {
            name: name.into(),
            index: self.index.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            units: self.units.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Column {
    name: String,
    values: Vec<f64>,
    #[serde(default)]
    units: String,
}

/// Columns sharing one contiguous quarterly index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    index: Vec<Quarter>,
    columns: Vec<Column>,
}

impl Dataset {
    pub fn new(index: Vec<Quarter>) -> Result<Self> {
        check_index(&index)?;
        Ok(Self {
            index,
            columns: Vec::new(),
        })
    }

    /// Align series on the intersection of their indexes.
    pub fn from_series(series: Vec<Series>) -> Result<Self> {
        let Some(first) = series.first() else {
            return Ok(Self::default());
        };
        let mut from = first.first();
        let mut to = first.last();
        for s in &series {
            from = from.max(s.first());
            to = match (to, s.last()) {
                (Some(a), Some(b)) => Some(a.min(b)),
                _ => None,
            };
        }
        let (Some(from), Some(to)) = (from, to) else {
            return Err(Error::InsufficientHistory("series do not overlap".into()));
        };
        if from > to {
            return Err(Error::InsufficientHistory("series do not overlap".into()));
        }
        let index: Vec<Quarter> = (0..=from.quarters_until(to)).map(|k| from.offset(k)).collect();
        let mut ds = Dataset::new(index)?;
        for s in series {
            let w = s.window(from, to);
            ds.push_column(w.name, w.values, w.units)?;
        }
        Ok(ds)
    }

    fn push_column(&mut self, name: String, values: Vec<f64>, units: String) -> Result<()> {
        if self.columns.iter().any(|c| c.name == name) {
            return Err(Error::InvalidArgument(format!("duplicate column `{name}`")));
        }
        if values.len() != self.index.len() {
            return Err(Error::LengthMismatch {
                left: self.index.len(),
                right: values.len(),
            });
        }
        self.columns.push(Column { name, values, units });
        Ok(())
    }

    /// Add a series whose index must equal the dataset's.
    pub fn insert(&mut self, s: Series) -> Result<()> {
        if s.index != self.index {
            return Err(Error::InvalidArgument(format!(
                "series `{}` does not share the dataset index",
                s.name
            )));
        }
        self.push_column(s.name, s.values, s.units)
    }

    /// Add or replace a column, trimming the dataset to the common span.
    pub fn with_aligned(&self, s: Series) -> Result<Dataset> {
        let mut all: Vec<Series> = self
            .column_names()
            .filter(|n| *n != s.name)
            .map(|n| self.series(n).expect("own column"))
            .collect();
        all.push(s);
        Dataset::from_series(all)
    }

    pub fn index(&self) -> &[Quarter] {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn series(&self, name: &str) -> Result<Series> {
        let col = self
            .columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        Ok(Series {
            name: col.name.clone(),
            index: self.index.clone(),
            values: col.values.clone(),
            units: col.units.clone(),
        })
    }

    /// Rows with quarter ≤ `last`.
    pub fn up_to(&self, last: Quarter) -> Dataset {
        let n = self.index.iter().take_while(|q| **q <= last).count();
        self.head(n)
    }

    /// First `n` rows.
    pub fn head(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            index: self.index[..n].to_vec(),
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    values: c.values[..n].to_vec(),
                    units: c.units.clone(),
                })
                .collect(),
        }
    }

    pub fn position(&self, q: Quarter) -> Option<usize> {
        let first = *self.index.first()?;
        let k = first.quarters_until(q);
        (k >= 0 && (k as usize) < self.len()).then_some(k as usize)
    }

    /// JSON export `{ "index": [...], "columns": { name: [...] } }`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut cols = serde_json::Map::new();
        for c in &self.columns {
            cols.insert(c.name.clone(), serde_json::json!(c.values));
        }
        serde_json::json!({
            "index": self.index.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
            "columns": cols,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Dataset> {
        let bad = |m: &str| Error::InvalidArgument(format!("dataset json: {m}"));
        let index: Vec<Quarter> = v
            .get("index")
            .and_then(|i| i.as_array())
            .ok_or_else(|| bad("missing index"))?
            .iter()
            .map(|q| q.as_str().ok_or_else(|| bad("index entries must be strings"))?.parse())
            .collect::<Result<_>>()?;
        let mut ds = Dataset::new(index)?;
        let cols = v
            .get("columns")
            .and_then(|c| c.as_object())
            .ok_or_else(|| bad("missing columns"))?;
        for (name, vals) in cols {
            let values: Vec<f64> = vals
                .as_array()
                .ok_or_else(|| bad("column must be an array"))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| bad("non-numeric value")))
                .collect::<Result<_>>()?;
            ds.push_column(name.clone(), values, String::new())?;
        }
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Quarter {
        s.parse().unwrap()
    }

    #[test]
    fn series_rejects_bad_index() {
        let dup = Series::new("x", vec![q("2000Q1"), q("2000Q1")], vec![1.0, 2.0]);
        assert!(matches!(dup, Err(Error::DuplicateIndex(_))));
        let uns = Series::new("x", vec![q("2000Q2"), q("2000Q1")], vec![1.0, 2.0]);
        assert!(matches!(uns, Err(Error::UnsortedIndex(_))));
        let gap = Series::new("x", vec![q("2000Q1"), q("2000Q3")], vec![1.0, 2.0]);
        assert!(gap.is_err());
    }

    #[test]
    fn from_series_intersects() {
        let a = Series::from_start("a", q("2000Q1"), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Series::from_start("b", q("2000Q3"), vec![10.0, 20.0, 30.0]).unwrap();
        let ds = Dataset::from_series(vec![a, b]).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.column("a").unwrap(), &[3.0, 4.0]);
        assert_eq!(ds.column("b").unwrap(), &[10.0, 20.0]);
        assert!(matches!(ds.column("zz"), Err(Error::MissingColumn(_))));
    }

    #[test]
    fn json_round_trip() {
        let a = Series::from_start("a", q("2001Q4"), vec![1.5, -2.25]).unwrap();
        let ds = Dataset::from_series(vec![a]).unwrap();
        let j = ds.to_json();
        assert_eq!(j["index"][1], "2002Q1");
        assert_eq!(Dataset::from_json(&j).unwrap(), ds);
    }
}
