use std::path::Path;

use serde::Serialize;

use super::{read_text, write_atomic, write_json};
use crate::backtest::{horse_race, split_eval, Ledger};
use crate::config::{Metric, RunConfig};
use crate::data::{write_csv_string, Quarter};
use crate::error::Result;
use crate::evaluation::{
    error_table, gr_fluctuation_test, loss_series, mcb_test, metric_report, GrResult, GrTable, McbResult, MetricReport,
    MetricRow,
};

pub(crate) fn metric_value(m: Metric) -> impl Fn(&MetricRow) -> Option<f64> {
    move |r| match m {
        Metric::Rmse => Some(r.rmse),
        Metric::Mdrae => r.mdrae,
        Metric::Smape => Some(r.smape),
        Metric::TheilU => Some(r.theil_u),
    }
}

/// Spec×horizon rows, one column per model; empty cells where a model has no score.
fn table_csv(report: &MetricReport, cfg: &RunConfig, metric: Metric) -> String {
    let models: Vec<&str> = cfg.backtest.models.iter().map(|m| m.as_str()).collect();
    let mut s = format!("spec,horizon,{}\n", models.join(","));
    let value = metric_value(metric);
    for spec in &cfg.backtest.specs {
        for &h in &cfg.backtest.horizons {
            s.push_str(&format!("{},{h}", spec.id()));
            for m in &cfg.backtest.models {
                let row = report
                    .row(m.as_str(), spec.id(), h)
                    .or_else(|| report.row(m.as_str(), crate::backtest::UNIVARIATE, h));
                s.push(',');
                if let Some(v) = row.and_then(&value) {
                    s.push_str(&v.to_string());
                }
            }
            s.push('\n');
        }
    }
    s
}

#[derive(Serialize)]
#[serde(untagged)]
enum Outcome<T> {
    Ok(T),
    Err { error: String, message: String },
}

impl<T> From<Result<T>> for Outcome<T> {
    fn from(r: Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Err {
                error: e.kind().into(),
                message: e.to_string(),
            },
        }
    }
}

#[derive(Serialize)]
struct GrEntryOut {
    model_a: String,
    model_b: String,
    spec: String,
    horizon: usize,
    result: Outcome<GrResult>,
}

/// Runs the horse race and writes the ledger, metric tables and comparisons.
pub fn cmd_backtest(cfg: &RunConfig, out: &Path) -> Result<Ledger> {
    cfg.validate()?;
    let data = cfg.load_data()?;
    let table = match &cfg.evaluation.gr_table {
        Some(p) => GrTable::from_csv(&read_text(p)?)?,
        None => GrTable::bundled(),
    };
    let ledger = horse_race(&data, &cfg.backtest, &cfg.forest, &cfg.gbt)?;
    write_json(&out.join("run.json"), cfg)?;
    write_atomic(&out.join("data.csv"), &write_csv_string(&data)?)?;
    write_atomic(&out.join("ledger.csv"), &ledger.to_csv())?;
    write_atomic(&out.join("ledger.json"), &(ledger.to_json()? + "\n"))?;
    for f in &ledger.failures {
        eprintln!(
            "warning: {} / {} / h{} at {} failed: {}",
            f.model, f.spec, f.horizon, f.origin, f.message
        );
    }

    let report = metric_report(&ledger.records);
    write_atomic(&out.join("metrics.csv"), &report.to_csv())?;
    for m in Metric::all() {
        write_atomic(
            &out.join("tables").join(format!("{}.csv", m.as_str())),
            &table_csv(&report, cfg, m),
        )?;
    }
    if let Some(bp) = &cfg.evaluation.breakpoint {
        let bp: Quarter = bp.parse()?;
        let (pre, post) = split_eval(&ledger.records, bp)?;
        write_atomic(&out.join("metrics_pre.csv"), &pre.to_csv())?;
        write_atomic(&out.join("metrics_post.csv"), &post.to_csv())?;
    }

    let ev = &cfg.evaluation;
    let models: Vec<String> = cfg.backtest.models.iter().map(|m| m.as_str().to_string()).collect();
    let mcb: Outcome<McbResult> = error_table(&report, &models, metric_value(ev.mcb_metric))
        .and_then(|t| mcb_test(&t, ev.mcb_alpha, None))
        .into();
    write_json(
        &out.join("mcb.json"),
        &serde_json::json!({ "metric": ev.mcb_metric, "result": mcb }),
    )?;

    let mut gr = Vec::new();
    for p in &ev.gr_pairs {
        let (a, b, spec) = (p.model_a.as_str(), p.model_b.as_str(), p.spec.id());
        let r = loss_series(&ledger.records, a, spec, p.horizon, ev.gr_loss).and_then(|la| {
            let lb = loss_series(&ledger.records, b, spec, p.horizon, ev.gr_loss)?;
            gr_fluctuation_test(&la, &lb, ev.gr_mu, ev.gr_alpha, &table)
        });
        if let Ok(res) = &r {
            let mut s = String::from("t,statistic,critical_value\n");
            for (q, v) in res.rolling_stats.index().iter().zip(res.rolling_stats.values()) {
                s.push_str(&format!("{q},{v},{}\n", res.critical_value));
            }
            write_atomic(
                &out.join("gr").join(format!("{a}_vs_{b}_{spec}_h{}.csv", p.horizon)),
                &s,
            )?;
        }
        gr.push(GrEntryOut {
            model_a: a.into(),
            model_b: b.into(),
            spec: spec.into(),
            horizon: p.horizon,
            result: r.into(),
        });
    }
    write_json(&out.join("gr.json"), &gr)?;
    Ok(ledger)
}
