//! Command implementations behind the `nkpc` binary.
//!
//! Every command reads a [`RunConfig`] and writes into one run directory:
//!
//! ```text
//! run.json, data.csv                 resolved config and the dataset used
//! ledger.csv, ledger.json            forecast records (JSON adds features and failures)
//! metrics.csv, tables/<metric>.csv   accuracy by cell; spec×horizon rows, model columns
//! metrics_pre.csv, metrics_post.csv  when a breakpoint is configured
//! mcb.json, gr.json, gr/*.csv        model comparisons
//! explain/                           importance, PDP/ICE, Shapley outputs
//! conformal/                         intervals and coverage
//! report.md, plots/                  human summary and plot-ready CSVs
//! error.json                         only after a failed command
//! ```

mod backtest;
mod explain;
mod report;

pub use backtest::cmd_backtest;
pub use explain::cmd_explain;
pub use report::{cmd_conformal, cmd_report};

use std::path::Path;

use crate::config::RunConfig;
use crate::data::{synth_dgp, write_csv_string, SynthParams};
use crate::error::{Error, Result};

/// Writes through a temporary sibling and renames, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    std::fs::write(&tmp, contents).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<()> {
    write_atomic(path, &(serde_json::to_string_pretty(v)? + "\n"))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Machine-readable description of a failure.
pub fn error_json(e: &Error) -> serde_json::Value {
    let mut v = serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
    });
    if let Error::MissingColumn(c) = e {
        v["column"] = serde_json::Value::String(c.clone());
    }
    v
}

/// `data.csv`, `equations.txt` and `params.json` for a synthetic draw.
pub fn cmd_synth(seed: u64, n: usize, params: &SynthParams, out: &Path) -> Result<()> {
    let s = synth_dgp(seed, n, params)?;
    write_atomic(&out.join("data.csv"), &write_csv_string(&s.dataset)?)?;
    write_atomic(&out.join("equations.txt"), &s.equations)?;
    write_json(
        &out.join("params.json"),
        &serde_json::json!({ "seed": seed, "n": n, "params": s.params }),
    )
}

pub(crate) fn load_run_config(out: &Path) -> Result<RunConfig> {
    let path = out.join("run.json");
    serde_json::from_str(&read_text(&path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
