//! Expanding-window pseudo-out-of-sample horse race.

mod design;

pub use design::{build_design, origin_features, PhillipsSpec, SpecKind};

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Quarter, Series};
use crate::error::{Error, Result};
use crate::evaluation::{metric_report, MetricReport};
use crate::models::tune::{ridge_grid, tune_forest, tune_gbt, tune_lasso, tune_ridge, ForestGrid, GbtGrid};
use crate::models::{
    fit_ar, fit_forest, fit_gbt, fit_lasso, fit_ols, fit_ridge, fit_var, predict_recursive_ar, predict_recursive_var,
    DesignMatrix, FittedModel, ForestParams, GbtParams, Predictor,
};
use crate::rng::mix;
use crate::trend::{decompose, expected_inflation, output_gap, TrendMethod, UcmVariant};

/// Spec id attached to records of models that ignore the Phillips-curve regressors.
pub const UNIVARIATE: &str = "univariate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    Ols,
    Ridge,
    Lasso,
    Rf,
    Gbt,
    Rw,
    Ar,
    Var,
}

impl ModelId {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Ols => "ols",
            ModelId::Ridge => "ridge",
            ModelId::Lasso => "lasso",
            ModelId::Rf => "rf",
            ModelId::Gbt => "gbt",
            ModelId::Rw => "rw",
            ModelId::Ar => "ar",
            ModelId::Var => "var",
        }
    }

    pub fn is_univariate(self) -> bool {
        matches!(self, ModelId::Rw | ModelId::Ar | ModelId::Var)
    }

    pub fn all() -> Vec<ModelId> {
        vec![
            ModelId::Ols,
            ModelId::Ridge,
            ModelId::Lasso,
            ModelId::Rf,
            ModelId::Gbt,
            ModelId::Rw,
            ModelId::Ar,
            ModelId::Var,
        ]
    }
}

impl std::str::FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::all()
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model `{s}`")))
    }
}

/// When hyperparameters are chosen by cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Tuning {
    /// Re-tune at every forecast origin.
    EveryOrigin,
    /// Tune once on the first training window and reuse (quick, non-replicating).
    FirstOrigin,
    /// Use the configured parameters as given.
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestConfig {
    pub test_quarters: usize,
    pub horizons: Vec<usize>,
    pub specs: Vec<SpecKind>,
    pub models: Vec<ModelId>,
    pub gap_lags: Vec<usize>,
    pub control_lags: Vec<usize>,
    pub controls: Vec<String>,
    /// Trend extraction for the expectations proxy.
    pub trend_method: TrendMethod,
    /// Trend extraction for the output gap.
    pub gap_method: TrendMethod,
    pub hp_lambda: f64,
    pub tuning: Tuning,
    pub cv_folds: usize,
    /// Used when tuning is off.
    pub ridge_lambda: f64,
    /// Used when tuning is off.
    pub lasso_lambda: f64,
    pub ridge_grid: Vec<f64>,
    pub lasso_path_points: usize,
    pub ar_order: usize,
    pub var_order: usize,
    pub var_columns: Vec<String>,
    /// Set from the run-level seed.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            test_quarters: 24,
            horizons: vec![1, 2, 3, 4],
            specs: SpecKind::all().to_vec(),
            models: ModelId::all(),
            gap_lags: vec![1, 2, 3, 4],
            control_lags: vec![0, 1, 2, 3, 4],
            controls: vec!["exchange_rate".into(), "crude".into(), "rainfall".into()],
            trend_method: TrendMethod::Ucm,
            gap_method: TrendMethod::Ucm,
            hp_lambda: crate::trend::DEFAULT_LAMBDA,
            tuning: Tuning::EveryOrigin,
            cv_folds: 5,
            ridge_lambda: 1.0,
            lasso_lambda: 0.05,
            ridge_grid: ridge_grid(),
            lasso_path_points: 20,
            ar_order: 2,
            var_order: 2,
            var_columns: vec!["inflation".into(), "gap".into()],
            seed: 0,
        }
    }
}

impl BacktestConfig {
    pub fn spec(&self, kind: SpecKind) -> PhillipsSpec {
        PhillipsSpec {
            kind,
            gap_lags: self.gap_lags.clone(),
            control_lags: self.control_lags.clone(),
            controls: self.controls.clone(),
        }
    }
}

/// Model hyperparameters and their tuning grids.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ForestSettings {
    #[serde(flatten)]
    pub params: ForestParams,
    pub grid: ForestGrid,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct GbtSettings {
    #[serde(flatten)]
    pub params: GbtParams,
    pub grid: GbtGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub origin: Quarter,
    pub horizon: usize,
    pub model: String,
    pub spec: String,
    pub prediction: f64,
    pub actual: f64,
    pub train_n: usize,
    /// Regressors at the origin; empty for univariate models.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<f64>,
}

impl ForecastRecord {
    pub fn target_quarter(&self) -> Quarter {
        self.origin.offset(self.horizon as i64)
    }

    pub fn error(&self) -> f64 {
        self.actual - self.prediction
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedFit {
    pub origin: Quarter,
    pub horizon: usize,
    pub model: String,
    pub spec: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Ledger {
    pub records: Vec<ForecastRecord>,
    pub failures: Vec<FailedFit>,
    /// Regressor names per spec id.
    pub feature_names: Vec<(String, Vec<String>)>,
}

const CSV_HEADER: &str = "origin,horizon,model,spec,prediction,actual,train_n";

impl Ledger {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.origin, r.horizon, r.model, r.spec, r.prediction, r.actual, r.train_n
            ));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Vec<ForecastRecord>> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut out = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let field = |j: usize, name: &str| -> Result<&str> {
                row.get(j).ok_or_else(|| Error::ParseError {
                    row: i + 1,
                    column: name.into(),
                    message: "missing field".into(),
                })
            };
            let parse_err = |name: &str, e: String| Error::ParseError {
                row: i + 1,
                column: name.into(),
                message: e,
            };
            out.push(ForecastRecord {
                origin: field(0, "origin")?.parse()?,
                horizon: field(1, "horizon")?
                    .parse()
                    .map_err(|e: std::num::ParseIntError| parse_err("horizon", e.to_string()))?,
                model: field(2, "model")?.to_string(),
                spec: field(3, "spec")?.to_string(),
                prediction: field(4, "prediction")?
                    .parse()
                    .map_err(|e: std::num::ParseFloatError| parse_err("prediction", e.to_string()))?,
                actual: field(5, "actual")?
                    .parse()
                    .map_err(|e: std::num::ParseFloatError| parse_err("actual", e.to_string()))?,
                train_n: field(6, "train_n")?
                    .parse()
                    .map_err(|e: std::num::ParseIntError| parse_err("train_n", e.to_string()))?,
                features: Vec::new(),
            });
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Records for one (model, spec, horizon) cell in origin order.
    pub fn cell(&self, model: &str, spec: &str, horizon: usize) -> Vec<&ForecastRecord> {
        self.records
            .iter()
            .filter(|r| r.model == model && r.spec == spec && r.horizon == horizon)
            .collect()
    }
}

/// No-change forecast: the value at `origin` for every horizon.
pub fn random_walk_forecast(s: &Series, origin: Quarter, _h: usize) -> Result<f64> {
    s.get(origin)
        .ok_or_else(|| Error::InvalidArgument(format!("origin {origin} outside series `{}`", s.name)))
}

/// Adds `gap` and `expected_inflation` when absent, using only the rows of `raw`.
pub fn derive_columns(raw: &Dataset, cfg: &BacktestConfig) -> Result<Dataset> {
    let mut cols = vec![raw.series("inflation")?];
    let gap = if raw.has_column("gap") {
        raw.series("gap")?
    } else {
        output_gap(&raw.series("gdp")?, cfg.gap_method, cfg.hp_lambda)?.renamed("gap")
    };
    cols.push(gap);
    let expected = if raw.has_column("expected_inflation") {
        raw.series("expected_inflation")?
    } else {
        let trend = decompose(&cols[0], cfg.trend_method, cfg.hp_lambda, UcmVariant::LocalLinearTrend)?;
        expected_inflation(&trend.trend)?
    };
    cols.push(expected);
    let mut extra: Vec<&str> = cfg.controls.iter().map(String::as_str).collect();
    for c in &cfg.var_columns {
        if !extra.contains(&c.as_str()) {
            extra.push(c);
        }
    }
    for c in extra {
        if !cols.iter().any(|s| s.name == c) {
            cols.push(raw.series(c)?);
        }
    }
    let mut out = Dataset::new(raw.index().to_vec())?;
    for s in cols {
        out.insert(s)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Tuned {
    Lambda(f64),
    Forest(ForestParams),
    Gbt(GbtParams),
    Nothing,
}

fn tune(
    model: ModelId,
    d: &DesignMatrix,
    cfg: &BacktestConfig,
    forest: &ForestSettings,
    gbt: &GbtSettings,
) -> Result<Tuned> {
    match model {
        ModelId::Ridge => tune_ridge(d, &cfg.ridge_grid, cfg.cv_folds).map(|(l, _)| Tuned::Lambda(l)),
        ModelId::Lasso => tune_lasso(d, cfg.lasso_path_points, cfg.cv_folds).map(|(l, _)| Tuned::Lambda(l)),
        ModelId::Rf => tune_forest(d, &forest.params, &forest.grid, cfg.cv_folds).map(|(p, _)| Tuned::Forest(p)),
        ModelId::Gbt => tune_gbt(d, &gbt.params, &gbt.grid, cfg.cv_folds).map(|(p, _)| Tuned::Gbt(p)),
        _ => Ok(Tuned::Nothing),
    }
}

fn untuned(model: ModelId, cfg: &BacktestConfig, forest: &ForestSettings, gbt: &GbtSettings) -> Tuned {
    match model {
        ModelId::Ridge => Tuned::Lambda(cfg.ridge_lambda),
        ModelId::Lasso => Tuned::Lambda(cfg.lasso_lambda),
        ModelId::Rf => Tuned::Forest(forest.params.clone()),
        ModelId::Gbt => Tuned::Gbt(gbt.params.clone()),
        _ => Tuned::Nothing,
    }
}

fn fit_cross(model: ModelId, d: &DesignMatrix, tuned: &Tuned, seed: u64) -> Result<FittedModel> {
    match (model, tuned) {
        (ModelId::Ols, _) => fit_ols(d).map(FittedModel::Linear),
        (ModelId::Ridge, Tuned::Lambda(l)) => fit_ridge(d, *l).map(FittedModel::Linear),
        (ModelId::Lasso, Tuned::Lambda(l)) => fit_lasso(d, *l).map(FittedModel::Linear),
        (ModelId::Rf, Tuned::Forest(p)) => fit_forest(d, &ForestParams { seed, ..p.clone() }).map(FittedModel::Forest),
        (ModelId::Gbt, Tuned::Gbt(p)) => fit_gbt(d, &GbtParams { seed, ..p.clone() }).map(FittedModel::Gbt),
        _ => Err(Error::InvalidArgument(format!(
            "model {} is not cross-sectional",
            model.as_str()
        ))),
    }
}

/// Tunes (unless tuning is off) and fits one cross-sectional model on `d`.
pub fn fit_cell(
    model: ModelId,
    d: &DesignMatrix,
    cfg: &BacktestConfig,
    forest: &ForestSettings,
    gbt: &GbtSettings,
    seed: u64,
) -> Result<FittedModel> {
    let tuned = match cfg.tuning {
        Tuning::Off => untuned(model, cfg, forest, gbt),
        _ => tune(model, d, cfg, forest, gbt)?,
    };
    fit_cross(model, d, &tuned, seed)
}

type CellKey = (ModelId, SpecKind, usize);

struct Race<'a> {
    full: &'a Dataset,
    cfg: &'a BacktestConfig,
    forest: &'a ForestSettings,
    gbt: &'a GbtSettings,
    actual: &'a [f64],
    fixed: HashMap<CellKey, Tuned>,
}

enum Outcome {
    Record(ForecastRecord),
    Failed(FailedFit),
}

impl Race<'_> {
    fn cell_seed(&self, pos: usize, spec: usize, h: usize) -> u64 {
        mix(mix(self.cfg.seed, pos as u64), (spec * 64 + h) as u64)
    }

    fn run_origin(&self, q: usize, pos: usize) -> Vec<Outcome> {
        let origin = self.full.index()[q];
        let n = self.full.len();
        let horizons: Vec<usize> = self.cfg.horizons.iter().copied().filter(|h| q + h < n).collect();
        let fail = |model: &str, spec: &str, h: usize, e: &Error| {
            Outcome::Failed(FailedFit {
                origin,
                horizon: h,
                model: model.into(),
                spec: spec.into(),
                kind: e.kind().into(),
                message: e.to_string(),
            })
        };
        let prepared = derive_columns(&self.full.head(q + 1), self.cfg);
        let mut out = Vec::new();
        for &model in &self.cfg.models {
            if model.is_univariate() {
                for &h in &horizons {
                    let r = prepared
                        .as_ref()
                        .map_err(Clone::clone)
                        .and_then(|p| self.univariate(model, p, h));
                    out.push(match r {
                        Ok((prediction, train_n)) => Outcome::Record(ForecastRecord {
                            origin,
                            horizon: h,
                            model: model.as_str().into(),
                            spec: UNIVARIATE.into(),
                            prediction,
                            actual: self.actual[q + h],
                            train_n,
                            features: Vec::new(),
                        }),
                        Err(e) => fail(model.as_str(), UNIVARIATE, h, &e),
                    });
                }
                continue;
            }
            for (si, &kind) in self.cfg.specs.iter().enumerate() {
                let spec = self.cfg.spec(kind);
                for &h in &horizons {
                    let r = prepared.as_ref().map_err(Clone::clone).and_then(|p| {
                        let d = build_design(p, &spec, h)?;
                        let x = origin_features(p, &spec)?;
                        let tuned = match self.fixed.get(&(model, kind, h)) {
                            Some(t) => t.clone(),
                            None => tune(model, &d, self.cfg, self.forest, self.gbt)?,
                        };
                        let m = fit_cross(model, &d, &tuned, self.cell_seed(pos, si, h))?;
                        let prediction = m.predict_row(&x);
                        if !prediction.is_finite() {
                            return Err(Error::EstimationFailure("non-finite prediction".into()));
                        }
                        Ok((prediction, d.n(), x))
                    });
                    out.push(match r {
                        Ok((prediction, train_n, features)) => Outcome::Record(ForecastRecord {
                            origin,
                            horizon: h,
                            model: model.as_str().into(),
                            spec: spec.id().into(),
                            prediction,
                            actual: self.actual[q + h],
                            train_n,
                            features,
                        }),
                        Err(e) => fail(model.as_str(), spec.id(), h, &e),
                    });
                }
            }
        }
        out
    }

    fn univariate(&self, model: ModelId, p: &Dataset, h: usize) -> Result<(f64, usize)> {
        let pi = p.series("inflation")?;
        match model {
            ModelId::Rw => Ok((
                random_walk_forecast(&pi, *pi.index().last().expect("non-empty"), h)?,
                pi.len(),
            )),
            ModelId::Ar => {
                let m = fit_ar(&pi, self.cfg.ar_order)?;
                let f = predict_recursive_ar(&m, pi.values(), h)?;
                Ok((f[h - 1], pi.len() - m.p))
            }
            ModelId::Var => {
                let cols: Vec<Series> = self
                    .cfg
                    .var_columns
                    .iter()
                    .map(|c| p.series(c))
                    .collect::<Result<_>>()?;
                let k = self
                    .cfg
                    .var_columns
                    .iter()
                    .position(|c| c == "inflation")
                    .ok_or_else(|| Error::MissingColumn("inflation (in var_columns)".into()))?;
                let m = fit_var(&cols, self.cfg.var_order)?;
                let hist: Vec<Vec<f64>> = cols.iter().map(|s| s.values().to_vec()).collect();
                let f = predict_recursive_var(&m, &hist, h)?;
                Ok((f[h - 1][k], pi.len() - m.p))
            }
            _ => unreachable!("cross-sectional model routed to univariate"),
        }
    }
}

/// Every column the configured specs and models read, so a missing one fails up front.
fn check_columns(d: &Dataset, cfg: &BacktestConfig) -> Result<()> {
    let mut need = vec!["inflation"];
    if !d.has_column("gap") {
        need.push("gdp");
    }
    let derived = ["gap", "expected_inflation"];
    need.extend(
        cfg.controls
            .iter()
            .chain(&cfg.var_columns)
            .map(String::as_str)
            .filter(|c| !derived.contains(c)),
    );
    match need.into_iter().find(|c| !d.has_column(c)) {
        Some(c) => Err(Error::MissingColumn(c.to_string())),
        None => Ok(()),
    }
}

/// Run every (model, spec, horizon) at each of the last `test_quarters` origins.
///
/// Origin `q` sees only rows `≤ q`: trend, gap and expectations are re-derived
/// from that slice before designs are built. Failures are recorded, not raised.
pub fn horse_race(d: &Dataset, cfg: &BacktestConfig, forest: &ForestSettings, gbt: &GbtSettings) -> Result<Ledger> {
    let n = d.len();
    if cfg.test_quarters < 8 {
        return Err(Error::InvalidArgument(format!(
            "test_quarters must be >= 8, got {}",
            cfg.test_quarters
        )));
    }
    if cfg.horizons.is_empty() || cfg.horizons.contains(&0) {
        return Err(Error::InvalidArgument(
            "horizons must be a non-empty set of positive integers".into(),
        ));
    }
    if n < cfg.test_quarters + 40 + 1 {
        return Err(Error::InsufficientHistory(format!(
            "{n} rows leave fewer than 40 for the first training window with {} test quarters",
            cfg.test_quarters
        )));
    }
    check_columns(d, cfg)?;
    let actual = d.column("inflation")?;
    let first = n - cfg.test_quarters - 1;
    let origins: Vec<usize> = (first..n - 1).collect();

    let mut race = Race {
        full: d,
        cfg,
        forest,
        gbt,
        actual,
        fixed: HashMap::new(),
    };
    let cross: Vec<ModelId> = cfg.models.iter().copied().filter(|m| !m.is_univariate()).collect();
    let mut keys: Vec<CellKey> = Vec::new();
    for &m in &cross {
        for &s in &cfg.specs {
            for &h in &cfg.horizons {
                keys.push((m, s, h));
            }
        }
    }
    match cfg.tuning {
        Tuning::Off => {
            for &k in &keys {
                race.fixed.insert(k, untuned(k.0, cfg, forest, gbt));
            }
        }
        Tuning::FirstOrigin => {
            if let Ok(p) = derive_columns(&d.head(first + 1), cfg) {
                let tuned: Vec<(CellKey, Result<Tuned>)> = keys
                    .par_iter()
                    .map(|&(m, s, h)| {
                        let t = build_design(&p, &cfg.spec(s), h).and_then(|dm| tune(m, &dm, cfg, forest, gbt));
                        ((m, s, h), t)
                    })
                    .collect();
                for (k, t) in tuned {
                    if let Ok(t) = t {
                        race.fixed.insert(k, t);
                    }
                }
            }
        }
        Tuning::EveryOrigin => {
            for &k in &keys {
                if k.0 == ModelId::Ols {
                    race.fixed.insert(k, Tuned::Nothing);
                }
            }
        }
    }

    let race = &race;
    let per_origin: Vec<Vec<Outcome>> = origins
        .par_iter()
        .enumerate()
        .map(|(pos, &q)| race.run_origin(q, pos))
        .collect();

    let mut ledger = Ledger::default();
    for o in per_origin.into_iter().flatten() {
        match o {
            Outcome::Record(r) => ledger.records.push(r),
            Outcome::Failed(f) => ledger.failures.push(f),
        }
    }
    for &s in &cfg.specs {
        let spec = cfg.spec(s);
        ledger.feature_names.push((spec.id().to_string(), spec.feature_names()));
    }
    Ok(ledger)
}

/// Metric reports for records whose target quarter falls before / at-or-after `breakpoint`.
///
/// A side without records yields a report flagged `empty`; an empty ledger is an error.
pub fn split_eval(records: &[ForecastRecord], breakpoint: Quarter) -> Result<(MetricReport, MetricReport)> {
    if records.is_empty() {
        return Err(Error::EmptySplit("both".into()));
    }
    let (pre, post): (Vec<ForecastRecord>, Vec<ForecastRecord>) =
        records.iter().cloned().partition(|r| r.target_quarter() < breakpoint);
    Ok((metric_report(&pre), metric_report(&post)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_dgp, SynthParams};

    fn quick_cfg() -> BacktestConfig {
        BacktestConfig {
            test_quarters: 8,
            models: vec![ModelId::Ols, ModelId::Rw, ModelId::Ar],
            trend_method: TrendMethod::Hp,
            gap_method: TrendMethod::Hp,
            tuning: Tuning::Off,
            ..Default::default()
        }
    }

    #[test]
    fn ledger_shape_and_expanding_window() {
        let d = synth_dgp(4, 60, &SynthParams::default()).unwrap().dataset;
        let cfg = quick_cfg();
        let l = horse_race(&d, &cfg, &ForestSettings::default(), &GbtSettings::default()).unwrap();
        assert!(l.failures.is_empty(), "{:?}", l.failures);
        for h in 1..=4 {
            for spec in ["backward", "forward", "hybrid"] {
                let c = l.cell("ols", spec, h);
                assert_eq!(c.len(), 8 - h + 1);
                assert!(c.windows(2).all(|w| w[1].train_n > w[0].train_n));
            }
            assert_eq!(l.cell("rw", UNIVARIATE, h).len(), 8 - h + 1);
        }
    }

    #[test]
    fn random_walk_forecasts_origin_value() {
        let s = Series::from_start("x", "2001Q1".parse().unwrap(), vec![1.0, 5.2, 3.0]).unwrap();
        for h in 1..=4 {
            assert_eq!(random_walk_forecast(&s, "2001Q2".parse().unwrap(), h).unwrap(), 5.2);
        }
        assert!(random_walk_forecast(&s, "2005Q1".parse().unwrap(), 1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = synth_dgp(5, 60, &SynthParams::default()).unwrap().dataset;
        let l = horse_race(&d, &quick_cfg(), &ForestSettings::default(), &GbtSettings::default()).unwrap();
        let csv = l.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        let back = Ledger::from_csv(&csv).unwrap();
        assert_eq!(back.len(), l.records.len());
        for (a, b) in back.iter().zip(&l.records) {
            assert_eq!(
                (a.origin, a.horizon, &a.model, a.prediction),
                (b.origin, b.horizon, &b.model, b.prediction)
            );
        }
    }

    #[test]
    fn preconditions() {
        let d = synth_dgp(5, 60, &SynthParams::default()).unwrap().dataset;
        let mut cfg = quick_cfg();
        cfg.test_quarters = 7;
        assert!(horse_race(&d, &cfg, &ForestSettings::default(), &GbtSettings::default()).is_err());
        cfg.test_quarters = 24;
        assert!(matches!(
            horse_race(&d, &cfg, &ForestSettings::default(), &GbtSettings::default()),
            Err(Error::InsufficientHistory(_))
        ));
    }
}
