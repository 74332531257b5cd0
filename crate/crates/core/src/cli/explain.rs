use std::path::Path;

use serde::Serialize;

use super::{write_atomic, write_json};
use crate::backtest::{build_design, derive_columns, fit_cell};
use crate::config::{RunConfig, ShapleyMethod};
use crate::data::{read_csv_str, Schema};
use crate::error::{Error, Result};
use crate::explain::{
    attributions_to_csv, background_rows, pdp, pdp2, pdp_interaction, permutation_importance, shapley_regression,
    shapley_rows, shapley_summary, Attribution, AttributionMethod,
};
use crate::models::Predictor;
use crate::rng::mix;

const AUTO_EXACT_MAX: usize = 10;

#[derive(Serialize)]
struct Agreement {
    cells: usize,
    within_3se: usize,
    fraction: f64,
    max_abs_diff: f64,
}

fn agreement(exact: &[Attribution], sampled: &[Attribution]) -> Agreement {
    let mut cells = 0;
    let mut within = 0;
    let mut max_abs_diff: f64 = 0.0;
    for (e, s) in exact.iter().zip(sampled) {
        let se = s.se.as_ref().expect("sampled attribution carries standard errors");
        for ((pe, ps), sk) in e.phi.iter().zip(&s.phi).zip(se) {
            let diff = (pe - ps).abs();
            cells += 1;
            if diff <= 3.0 * sk {
                within += 1;
            }
            max_abs_diff = max_abs_diff.max(diff);
        }
    }
    Agreement {
        cells,
        within_3se: within,
        fraction: within as f64 / cells.max(1) as f64,
        max_abs_diff,
    }
}

/// Fits the configured model on the full sample and writes every explanation.
///
/// Uses `<out>/data.csv` from an earlier backtest when present so both
/// commands see the same data.
pub fn cmd_explain(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let ex = &cfg.explain;
    if ex.model.is_univariate() {
        return Err(Error::Config(format!(
            "explain needs a cross-sectional model, got `{}`",
            ex.model.as_str()
        )));
    }
    let prior = out.join("data.csv");
    let raw = if prior.exists() {
        read_csv_str(&super::read_text(&prior)?, &Schema::new())?
    } else {
        cfg.load_data()?
    };
    let full = derive_columns(&raw, &cfg.backtest)?;
    let spec = cfg.backtest.spec(ex.spec);
    let d = build_design(&full, &spec, ex.horizon)?;
    let model = fit_cell(ex.model, &d, &cfg.backtest, &cfg.forest, &cfg.gbt, mix(cfg.seed, 0xE))?;
    let dir = out.join("explain");
    write_atomic(&dir.join("model.json"), &(model.to_json()? + "\n"))?;

    let imp = permutation_importance(&model, &d, ex.importance_repeats, mix(cfg.seed, 1))?;
    let mut s = String::from("feature,mean,sd\n");
    for i in &imp {
        s.push_str(&format!("{},{},{}\n", i.feature, i.mean, i.sd));
    }
    write_atomic(&dir.join("importance.csv"), &s)?;

    let features: Vec<String> = if ex.pdp_features.is_empty() {
        d.feature_names.clone()
    } else {
        ex.pdp_features.clone()
    };
    for f in &features {
        match pdp(&model, &d, f, ex.grid_resolution) {
            Ok(c) => write_atomic(&dir.join("pdp").join(format!("{f}.csv")), &c.to_csv())?,
            Err(Error::DegenerateFeature(_)) => eprintln!("warning: feature `{f}` is constant; no PDP written"),
            Err(e) => return Err(e),
        }
    }
    let mut inter = String::from("feature_a,feature_b,interaction\n");
    for [a, b] in &ex.pdp_pairs {
        let c = pdp2(&model, &d, a, b, ex.grid_resolution_2d)?;
        write_atomic(&dir.join("pdp2").join(format!("{a}__{b}.csv")), &c.to_csv())?;
        let h = pdp_interaction(&model, &d, a, b, ex.grid_resolution_2d)?;
        inter.push_str(&format!("{a},{b},{h}\n"));
    }
    write_atomic(&dir.join("pdp_interaction.csv"), &inter)?;

    let background = background_rows(&d, ex.background_cap, mix(cfg.seed, 2));
    let rows: Vec<usize> = (0..d.n()).collect();
    let exact = match ex.shapley {
        ShapleyMethod::Auto => d.p() <= AUTO_EXACT_MAX,
        ShapleyMethod::Exact => true,
        ShapleyMethod::Sampled => false,
    };
    let sampled = AttributionMethod::MonteCarlo {
        samples: ex.shapley_samples,
    };
    let method = if exact { AttributionMethod::Exact } else { sampled };
    let attrs = shapley_rows(&model, &d, &rows, &background, method, mix(cfg.seed, 3))?;
    write_atomic(&dir.join("attributions.csv"), &attributions_to_csv(&attrs))?;

    let summary = shapley_summary(&attrs, ex.top)?;
    let mut s = String::from("feature,row,value,phi\n");
    for p in &summary.points {
        s.push_str(&format!("{},{},{},{}\n", p.feature, p.row_id, p.value, p.phi));
    }
    write_atomic(&dir.join("beeswarm.csv"), &s)?;
    write_json(&dir.join("shapley_summary.json"), &summary)?;

    let reg = shapley_regression(&d.target, &attrs)?;
    write_atomic(&dir.join("shapley_regression.csv"), &reg.to_csv())?;
    write_json(&dir.join("shapley_regression.json"), &reg)?;

    if ex.check_sampled {
        if d.p() > AUTO_EXACT_MAX {
            eprintln!(
                "warning: check_sampled skipped; {} features exceed the exact limit of {AUTO_EXACT_MAX}",
                d.p()
            );
        } else {
            let (e, s) = if exact {
                (
                    attrs.clone(),
                    shapley_rows(&model, &d, &rows, &background, sampled, mix(cfg.seed, 3))?,
                )
            } else {
                (
                    shapley_rows(&model, &d, &rows, &background, AttributionMethod::Exact, 0)?,
                    attrs.clone(),
                )
            };
            write_json(&dir.join("shapley_agreement.json"), &agreement(&e, &s))?;
        }
    }

    write_json(
        &dir.join("explain.json"),
        &serde_json::json!({
            "model": ex.model,
            "spec": ex.spec,
            "horizon": ex.horizon,
            "rows": d.n(),
            "features": d.feature_names,
            "background_rows": background.len(),
            "background": "training window, seeded subsample when larger than background_cap",
            "shapley_method": method,
            "in_sample_rmse": crate::evaluation::rmse(&d.target, &model.predict(&d.rows))?,
        }),
    )
}
