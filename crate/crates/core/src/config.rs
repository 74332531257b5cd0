//! Run configuration: a sectioned TOML file with unknown keys rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backtest::{BacktestConfig, ForestSettings, GbtSettings, ModelId, SpecKind};
use crate::conformal::ConformalConfig;
use crate::data::{load_dataset, synth_dgp, ColumnRole, Dataset, Schema, SynthParams};
use crate::error::{Error, Result};
use crate::evaluation::Loss;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Drives every stochastic component.
    pub seed: u64,
    pub data: DataConfig,
    pub backtest: BacktestConfig,
    pub forest: ForestSettings,
    pub gbt: GbtSettings,
    pub evaluation: EvaluationConfig,
    pub explain: ExplainConfig,
    pub conformal: ConformalSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// CSV with a leading `date` column; relative to the config file. When
    /// absent the synthetic generator is used.
    pub path: Option<PathBuf>,
    /// CSV column name to role. Empty loads every column under its own name.
    pub columns: BTreeMap<String, ColumnRole>,
    pub synth: SynthConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n: usize,
    pub params: SynthParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 120,
            params: SynthParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rmse,
    Mdrae,
    Smape,
    TheilU,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::Mdrae => "mdrae",
            Metric::Smape => "smape",
            Metric::TheilU => "theil_u",
        }
    }

    pub fn all() -> [Metric; 4] {
        [Metric::Mdrae, Metric::Rmse, Metric::Smape, Metric::TheilU]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GrPair {
    pub model_a: ModelId,
    pub model_b: ModelId,
    pub spec: SpecKind,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub mcb_alpha: f64,
    pub mcb_metric: Metric,
    pub gr_mu: f64,
    pub gr_alpha: f64,
    pub gr_loss: Loss,
    pub gr_pairs: Vec<GrPair>,
    /// CSV with `mu,alpha,critical_value` rows replacing the bundled fluctuation-test table.
    pub gr_table: Option<PathBuf>,
    /// Quarter such as `2020Q1`; targets before it form the pre-break sample.
    pub breakpoint: Option<String>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            mcb_alpha: 0.05,
            mcb_metric: Metric::Rmse,
            gr_mu: 0.3,
            gr_alpha: 0.05,
            gr_loss: Loss::Squared,
            gr_pairs: vec![GrPair {
                model_a: ModelId::Rf,
                model_b: ModelId::Ols,
                spec: SpecKind::Hybrid,
                horizon: 1,
            }],
            gr_table: None,
            breakpoint: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ShapleyMethod {
    /// Exact when the design has at most 10 features, sampled otherwise.
    Auto,
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainConfig {
    pub model: ModelId,
    pub spec: SpecKind,
    pub horizon: usize,
    pub background_cap: usize,
    pub shapley: ShapleyMethod,
    pub shapley_samples: usize,
    /// Also run the other Shapley method and report agreement (designs with at most 10 features).
    pub check_sampled: bool,
    pub importance_repeats: usize,
    pub grid_resolution: usize,
    pub grid_resolution_2d: usize,
    /// Features for 1-D PDP/ICE; empty means every feature.
    pub pdp_features: Vec<String>,
    pub pdp_pairs: Vec<[String; 2]>,
    pub top: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            model: ModelId::Rf,
            spec: SpecKind::Hybrid,
            horizon: 1,
            background_cap: 200,
            shapley: ShapleyMethod::Auto,
            shapley_samples: 500,
            check_sampled: false,
            importance_repeats: 20,
            grid_resolution: 10,
            grid_resolution_2d: 5,
            pdp_features: Vec::new(),
            pdp_pairs: vec![["inflation.L1".into(), "crude.L0".into()]],
            top: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ConformalSection {
    #[serde(flatten)]
    pub config: ConformalConfig,
    /// Models to conformalize; empty means every model in the ledger.
    pub models: Vec<ModelId>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Reads a config file; a relative `data.path` is resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        for p in [cfg.data.path.as_mut(), cfg.evaluation.gr_table.as_mut()]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Pushes the run seed into every component that takes one.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.resolve_seeds();
        self
    }

    pub fn resolve_seeds(&mut self) {
        self.backtest.seed = self.seed;
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.backtest;
        if b.specs.is_empty() || b.models.is_empty() || b.horizons.is_empty() {
            return Err(Error::Config(
                "at least one spec, model and horizon are required".into(),
            ));
        }
        if let Some(bp) = &self.evaluation.breakpoint {
            bp.parse::<crate::data::Quarter>()
                .map_err(|_| Error::Config(format!("breakpoint `{bp}` is not a quarter")))?;
        }
        self.conformal
            .config
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn schema(&self) -> Schema {
        Schema {
            columns: self.data.columns.iter().map(|(c, r)| (c.clone(), *r)).collect(),
        }
    }

    /// The configured dataset, or the synthetic one when no path is given.
    pub fn load_data(&self) -> Result<Dataset> {
        match &self.data.path {
            Some(p) => load_dataset(p, &self.schema()),
            None => Ok(synth_dgp(self.seed, self.data.synth.n, &self.data.synth.params)?.dataset),
        }
    }
}

/// JSON schema of [`RunConfig`], as published in `docs/config.schema.json`.
pub fn json_schema() -> String {
    serde_json::to_string_pretty(&schemars::schema_for!(RunConfig)).expect("schema serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.backtest.test_quarters, 24);
        assert_eq!(c.conformal.config.kappa, 20);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let e = RunConfig::from_toml("[forest]\nn_tress = 10\n").unwrap_err();
        assert!(matches!(e, Error::Config(m) if m.contains("n_tress")));
        assert!(RunConfig::from_toml("[backtest]\nseed = 3\n").is_err());
    }

    #[test]
    fn sections_parse() {
        let c = RunConfig::from_toml(
            r#"
seed = 7
[data]
path = "x.csv"
[data.columns]
cpi_index = "cpi"
brent = "control_growth"
[backtest]
models = ["ols", "rf"]
specs = ["hybrid"]
horizons = [1]
tuning = "off"
trend_method = "hp"
[forest]
n_trees = 50
[forest.grid]
max_depth = [3]
[conformal]
kappa = 30
uncertainty = { kind = "residual_forest", params = { n_trees = 20 } }
[evaluation]
breakpoint = "2020Q1"
[[evaluation.gr_pairs]]
model_a = "rf"
model_b = "ols"
spec = "hybrid"
horizon = 1
[explain]
pdp_pairs = [["a", "b"]]
"#,
        )
        .unwrap()
        .with_seed(9);
        assert_eq!(c.backtest.seed, 9);
        assert_eq!(c.forest.params.n_trees, 50);
        assert_eq!(c.data.columns["brent"], ColumnRole::ControlGrowth);
        assert_eq!(c.conformal.config.kappa, 30);
        c.validate().unwrap();
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back.forest, c.forest);
    }

    #[test]
    fn bad_breakpoint_rejected() {
        let c = RunConfig::from_toml("[evaluation]\nbreakpoint = \"soon\"\n").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn published_schema_is_current() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/config.schema.json");
        let on_disk = std::fs::read_to_string(path).unwrap_or_default();
        assert_eq!(
            on_disk,
            json_schema(),
            "regenerate with `nkpc schema > docs/config.schema.json`"
        );
    }
}
