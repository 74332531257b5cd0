use std::fmt::Write as _;
use std::path::Path;

use super::backtest::metric_value;
use super::{load_run_config, read_text, write_atomic, write_json};
use crate::backtest::{Ledger, UNIVARIATE};
use crate::config::{Metric, RunConfig};
use crate::conformal::{conformalize_ledger, intervals_to_csv, ConformalSlice};
use crate::error::Result;
use crate::evaluation::metric_report;

fn load_ledger(out: &Path) -> Result<Ledger> {
    Ledger::from_json(&read_text(&out.join("ledger.json"))?)
}

/// Conformal intervals for every ledger slice of the selected models.
pub fn cmd_conformal(cfg: &RunConfig, out: &Path) -> Result<Vec<ConformalSlice>> {
    cfg.validate()?;
    let ledger = load_ledger(out)?;
    let keep: Vec<&str> = cfg.conformal.models.iter().map(|m| m.as_str()).collect();
    let records: Vec<_> = ledger
        .records
        .into_iter()
        .filter(|r| keep.is_empty() || keep.contains(&r.model.as_str()))
        .collect();
    let slices = conformalize_ledger(&records, &cfg.conformal.config)?;
    let dir = out.join("conformal");
    let mut summary = String::from("model,spec,horizon,n,finite,coverage,mean_width\n");
    for s in &slices {
        write_atomic(
            &dir.join(format!("intervals_{}_{}_h{}.csv", s.model, s.spec, s.horizon)),
            &intervals_to_csv(&s.intervals),
        )?;
        let c = &s.coverage;
        writeln!(
            summary,
            "{},{},{},{},{},{},{}",
            s.model, s.spec, s.horizon, c.n, c.finite, c.coverage, c.mean_width
        )
        .expect("write to string");
    }
    write_atomic(&dir.join("summary.csv"), &summary)?;
    write_json(&dir.join("intervals.json"), &slices)?;
    write_json(
        &dir.join("summary.json"),
        &serde_json::json!({
            "kappa": cfg.conformal.config.kappa,
            "alpha": cfg.conformal.config.alpha,
            "uncertainty": cfg.conformal.config.uncertainty,
            "slices": slices.iter().map(|s| serde_json::json!({
                "model": s.model, "spec": s.spec, "horizon": s.horizon, "coverage": s.coverage,
            })).collect::<Vec<_>>(),
        }),
    )?;
    Ok(slices)
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

/// Aggregates a run directory into `report.md` and plot-ready CSVs.
///
/// Returns the number of expected cells with no records; they are listed as
/// missing rather than treated as an error.
pub fn cmd_report(out: &Path) -> Result<usize> {
    let mut cfg = load_run_config(out)?;
    cfg.resolve_seeds();
    let ledger = load_ledger(out)?;
    let report = metric_report(&ledger.records);
    let mut md = String::from("# Forecast evaluation report\n\n");
    writeln!(
        md,
        "{} forecast records, {} failed fits, seed {}.\n",
        ledger.records.len(),
        ledger.failures.len(),
        cfg.seed
    )
    .expect("write to string");
    md.push_str("| model | spec | horizon | n | RMSE | MdRAE | sMAPE | Theil U |\n|---|---|---|---|---|---|---|---|\n");
    let mut missing = 0;
    for m in &cfg.backtest.models {
        let specs: Vec<&str> = if m.is_univariate() {
            vec![UNIVARIATE]
        } else {
            cfg.backtest.specs.iter().map(|s| s.id()).collect()
        };
        for spec in specs {
            for &h in &cfg.backtest.horizons {
                match report.row(m.as_str(), spec, h) {
                    Some(r) => writeln!(
                        md,
                        "| {} | {spec} | {h} | {} | {} | {} | {} | {} |",
                        m.as_str(),
                        r.n,
                        fmt(metric_value(Metric::Rmse)(r)),
                        fmt(metric_value(Metric::Mdrae)(r)),
                        fmt(metric_value(Metric::Smape)(r)),
                        fmt(metric_value(Metric::TheilU)(r)),
                    ),
                    None => {
                        missing += 1;
                        eprintln!("warning: no records for {} / {spec} / h{h}", m.as_str());
                        writeln!(md, "| {} | {spec} | {h} | missing | | | | |", m.as_str())
                    }
                }
                .expect("write to string");
            }
        }
    }

    let mut fva = String::from("target,origin,model,spec,horizon,prediction,actual\n");
    for r in &ledger.records {
        writeln!(
            fva,
            "{},{},{},{},{},{},{}",
            r.target_quarter(),
            r.origin,
            r.model,
            r.spec,
            r.horizon,
            r.prediction,
            r.actual
        )
        .expect("write to string");
    }
    let plots = out.join("plots");
    write_atomic(&plots.join("forecast_vs_actual.csv"), &fva)?;

    if let Ok(text) = read_text(&out.join("mcb.json")) {
        let v: serde_json::Value = serde_json::from_str(&text)?;
        let r = &v["result"];
        if let Some(best) = r["best"].as_str() {
            md.push_str("\n## Multiple comparisons with the best\n\n");
            writeln!(
                md,
                "Best mean rank: {best}; critical distance {:.4} at alpha {}.\n",
                r["critical_distance"].as_f64().unwrap_or(f64::NAN),
                r["alpha"]
            )
            .expect("write to string");
            for m in r["models"].as_array().into_iter().flatten() {
                writeln!(
                    md,
                    "- {}: mean rank {:.3}{}",
                    m["model"].as_str().unwrap_or("?"),
                    m["mean_rank"].as_f64().unwrap_or(f64::NAN),
                    if m["indistinguishable_from_best"].as_bool() == Some(true) {
                        ""
                    } else {
                        " (worse than best)"
                    }
                )
                .expect("write to string");
            }
        }
    }

    if let Ok(text) = read_text(&out.join("gr.json")) {
        let v: serde_json::Value = serde_json::from_str(&text)?;
        let mut rolling = String::from("model_a,model_b,spec,horizon,t,statistic,critical_value\n");
        md.push_str("\n## Fluctuation tests\n\n");
        for e in v.as_array().into_iter().flatten() {
            let label = format!(
                "{} vs {} ({}, h{})",
                e["model_a"].as_str().unwrap_or("?"),
                e["model_b"].as_str().unwrap_or("?"),
                e["spec"].as_str().unwrap_or("?"),
                e["horizon"]
            );
            let r = &e["result"];
            if let Some(msg) = r["message"].as_str() {
                writeln!(md, "- {label}: not computed ({msg})").expect("write to string");
                continue;
            }
            let rej = r["rejections"].as_array().map_or(0, Vec::len);
            writeln!(
                md,
                "- {label}: {rej} rejection(s) at critical value {}",
                r["critical_value"]
            )
            .expect("write to string");
            let stats = &r["rolling_stats"];
            let idx = stats["index"].as_array().cloned().unwrap_or_default();
            let vals = stats["values"].as_array().cloned().unwrap_or_default();
            for (q, s) in idx.iter().zip(&vals) {
                writeln!(
                    rolling,
                    "{},{},{},{},{},{},{}",
                    e["model_a"].as_str().unwrap_or(""),
                    e["model_b"].as_str().unwrap_or(""),
                    e["spec"].as_str().unwrap_or(""),
                    e["horizon"],
                    q.as_str().unwrap_or(""),
                    s,
                    r["critical_value"]
                )
                .expect("write to string");
            }
        }
        write_atomic(&plots.join("gr_rolling.csv"), &rolling)?;
    }

    if let Ok(text) = read_text(&out.join("conformal").join("intervals.json")) {
        let slices: Vec<ConformalSlice> = serde_json::from_str(&text).unwrap_or_default();
        let mut bands = String::from("model,spec,horizon,t,lower,center,upper,actual,covered\n");
        md.push_str("\n## Conformal intervals\n\n| model | spec | horizon | coverage | mean width | infinite |\n|---|---|---|---|---|---|\n");
        for s in &slices {
            writeln!(
                md,
                "| {} | {} | {} | {:.3} | {:.3} | {} |",
                s.model, s.spec, s.horizon, s.coverage.coverage, s.coverage.mean_width, s.coverage.infinite
            )
            .expect("write to string");
            for i in s.intervals.iter().filter(|i| i.width().is_finite()) {
                writeln!(
                    bands,
                    "{},{},{},{},{},{},{},{},{}",
                    s.model, s.spec, s.horizon, i.t, i.lower, i.center, i.upper, i.actual, i.covered
                )
                .expect("write to string");
            }
        }
        write_atomic(&plots.join("interval_bands.csv"), &bands)?;
    }

    let explain = out.join("explain");
    if let Ok(text) = read_text(&explain.join("beeswarm.csv")) {
        write_atomic(&plots.join("beeswarm.csv"), &text)?;
    }
    if let Ok(text) = read_text(&explain.join("shapley_regression.csv")) {
        md.push_str("\n## Shapley regression\n\n```\n");
        md.push_str(&text);
        md.push_str("```\n");
    }
    if missing > 0 {
        writeln!(md, "\n{missing} expected cell(s) have no records.").expect("write to string");
    }
    write_atomic(&out.join("report.md"), &md)?;
    Ok(missing)
}
