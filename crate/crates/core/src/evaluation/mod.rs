//! Forecast accuracy metrics and formal model comparisons.

mod gr;
mod mcb;
mod metrics;
mod studentized;

pub use gr::{gr_fluctuation_test, hac_variance, GrEntry, GrResult, GrTable};
pub use mcb::{average_ranks, mcb_test, ErrorTable, McbModel, McbResult};
pub use metrics::{mdrae, mdrae_detail, rmse, smape, theil_u, Mdrae};
pub use studentized::{studentized_range_cdf, studentized_range_quantile};

use serde::{Deserialize, Serialize};

use crate::backtest::{ForecastRecord, UNIVARIATE};
use crate::data::Series;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub model: String,
    pub spec: String,
    pub horizon: usize,
    pub n: usize,
    pub rmse: f64,
    /// `None` when every naive denominator is zero.
    pub mdrae: Option<f64>,
    pub mdrae_skipped: usize,
    pub smape: f64,
    pub theil_u: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    /// Built from zero records.
    pub empty: bool,
}

impl MetricReport {
    pub fn row(&self, model: &str, spec: &str, horizon: usize) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.spec == spec && r.horizon == horizon)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("spec,model,horizon,n,mdrae,rmse,smape,theil_u\n");
        for r in &self.rows {
            let md = r.mdrae.map_or(String::new(), |v| v.to_string());
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.spec, r.model, r.horizon, r.n, md, r.rmse, r.smape, r.theil_u
            ));
        }
        s
    }
}

/// Scores every (model, spec, horizon) group, records ordered by origin.
pub fn metric_report(records: &[ForecastRecord]) -> MetricReport {
    let mut keys: Vec<(String, String, usize)> = Vec::new();
    for r in records {
        let k = (r.model.clone(), r.spec.clone(), r.horizon);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let rows = keys
        .into_iter()
        .map(|(model, spec, horizon)| {
            let mut cell: Vec<&ForecastRecord> = records
                .iter()
                .filter(|r| r.model == model && r.spec == spec && r.horizon == horizon)
                .collect();
            cell.sort_by_key(|r| r.origin);
            let a: Vec<f64> = cell.iter().map(|r| r.actual).collect();
            let p: Vec<f64> = cell.iter().map(|r| r.prediction).collect();
            let md = mdrae_detail(&a, &p).ok();
            MetricRow {
                n: cell.len(),
                rmse: rmse(&a, &p).expect("non-empty group"),
                mdrae: md.map(|m| m.value),
                mdrae_skipped: md.map_or(a.len().saturating_sub(1), |m| m.skipped),
                smape: smape(&a, &p).expect("non-empty group"),
                theil_u: theil_u(&a, &p).expect("non-empty group"),
                model,
                spec,
                horizon,
            }
        })
        .collect();
    MetricReport {
        rows,
        empty: records.is_empty(),
    }
}

/// Error table with one row per (spec, horizon) and one column per model.
/// Univariate models appear under every spec row.
pub fn error_table(
    report: &MetricReport,
    models: &[String],
    metric: impl Fn(&MetricRow) -> Option<f64>,
) -> Result<ErrorTable> {
    let mut labels: Vec<(String, usize)> = Vec::new();
    for r in &report.rows {
        if r.spec != UNIVARIATE && !labels.contains(&(r.spec.clone(), r.horizon)) {
            labels.push((r.spec.clone(), r.horizon));
        }
    }
    let mut rows = Vec::new();
    for (spec, h) in &labels {
        let row: Option<Vec<f64>> = models
            .iter()
            .map(|m| {
                report
                    .row(m, spec, *h)
                    .or_else(|| report.row(m, UNIVARIATE, *h))
                    .and_then(&metric)
            })
            .collect();
        rows.push(row.ok_or_else(|| Error::MissingColumn(format!("a model score for {spec} h={h}")))?);
    }
    Ok(ErrorTable {
        models: models.to_vec(),
        row_labels: labels.iter().map(|(s, h)| format!("{s}.h{h}")).collect(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Squared,
    Absolute,
}

/// Per-origin loss series of one ledger cell.
pub fn loss_series(records: &[ForecastRecord], model: &str, spec: &str, horizon: usize, loss: Loss) -> Result<Series> {
    let mut cell: Vec<&ForecastRecord> = records
        .iter()
        .filter(|r| r.model == model && (r.spec == spec || r.spec == UNIVARIATE) && r.horizon == horizon)
        .collect();
    cell.sort_by_key(|r| r.origin);
    if cell.is_empty() {
        return Err(Error::MissingColumn(format!("{model}/{spec}/h{horizon}")));
    }
    let v = cell
        .iter()
        .map(|r| match loss {
            Loss::Squared => r.error().powi(2),
            Loss::Absolute => r.error().abs(),
        })
        .collect();
    Series::new(format!("{model}.loss"), cell.iter().map(|r| r.origin).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Quarter;

    fn rec(model: &str, spec: &str, i: i64, pred: f64, actual: f64) -> ForecastRecord {
        ForecastRecord {
            origin: "2010Q1".parse::<Quarter>().unwrap().offset(i),
            horizon: 1,
            model: model.into(),
            spec: spec.into(),
            prediction: pred,
            actual,
            train_n: 40 + i as usize,
            features: vec![],
        }
    }

    #[test]
    fn rigged_model_scores_zero() {
        let recs: Vec<_> = (0..10)
            .map(|i| rec("oracle", "hybrid", i, i as f64 * 0.3 + 1.0, i as f64 * 0.3 + 1.0))
            .collect();
        let r = metric_report(&recs);
        let row = r.row("oracle", "hybrid", 1).unwrap();
        assert_eq!(row.rmse, 0.0);
        assert_eq!(row.n, 10);
    }

    #[test]
    fn univariate_fills_every_spec_row() {
        let mut recs = Vec::new();
        for i in 0..5 {
            recs.push(rec("ols", "backward", i, 1.0, 2.0));
            recs.push(rec("ols", "hybrid", i, 1.5, 2.0));
            recs.push(rec("rw", UNIVARIATE, i, 1.8, 2.0));
        }
        let r = metric_report(&recs);
        let t = error_table(&r, &["ols".into(), "rw".into()], |m| Some(m.rmse)).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!((t.rows[0][1] - 0.2).abs() < 1e-12 && (t.rows[1][1] - 0.2).abs() < 1e-12);
        assert_eq!(t.row_labels, vec!["backward.h1", "hybrid.h1"]);
    }

    #[test]
    fn loss_series_orders_by_origin() {
        let recs = vec![rec("a", "hybrid", 1, 0.0, 2.0), rec("a", "hybrid", 0, 0.0, 1.0)];
        let s = loss_series(&recs, "a", "hybrid", 1, Loss::Squared).unwrap();
        assert_eq!(s.values(), &[1.0, 4.0]);
        let s = loss_series(&recs, "a", "hybrid", 1, Loss::Absolute).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0]);
    }
}
