use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nkpc::backtest::{ModelId, SpecKind, Tuning};
use nkpc::cli::{cmd_backtest, cmd_conformal, cmd_explain, cmd_report, cmd_synth, error_json, write_atomic};
use nkpc::config::{json_schema, RunConfig};
use nkpc::{Error, Result};

#[derive(Parser)]
#[command(
    name = "nkpc",
    version,
    about = "Phillips-curve forecasting horse race, explanations and conformal intervals"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory for all outputs.
    #[arg(long, global = true, default_value = "run")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Tune hyperparameters once on the first training window instead of at every origin.
    #[arg(long, global = true)]
    fast: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic dataset into the run directory.
    Synth {
        /// Number of quarters (defaults to data.synth.n).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run the expanding-window horse race and its evaluation.
    Backtest,
    /// Fit one model on the full sample and explain it.
    Explain {
        #[arg(long)]
        model: Option<ModelId>,
        #[arg(long, value_parser = parse_spec)]
        spec: Option<SpecKind>,
        #[arg(long)]
        horizon: Option<usize>,
        /// Compare exact and sampled Shapley values (designs with at most 10 features).
        #[arg(long)]
        check_sampled: bool,
    },
    /// Wrap the ledger forecasts in conformal intervals.
    Conformal,
    /// Summarise a run directory.
    Report,
    /// Print the JSON schema of the configuration file.
    Schema,
}

fn parse_spec(s: &str) -> std::result::Result<SpecKind, String> {
    SpecKind::all()
        .into_iter()
        .find(|k| k.id() == s)
        .ok_or_else(|| format!("unknown spec `{s}` (expected backward, forward or hybrid)"))
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if g.fast && cfg.backtest.tuning == Tuning::EveryOrigin {
        cfg.backtest.tuning = Tuning::FirstOrigin;
    }
    cfg.resolve_seeds();
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(t) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    let out = g.out.as_path();
    match cli.command {
        Command::Schema => {
            print!("{}", json_schema());
            Ok(())
        }
        Command::Synth { n } => {
            let cfg = load_config(g)?;
            cmd_synth(cfg.seed, n.unwrap_or(cfg.data.synth.n), &cfg.data.synth.params, out)
        }
        Command::Backtest => {
            let cfg = load_config(g)?;
            let ledger = cmd_backtest(&cfg, out)?;
            eprintln!("{} records written to {}", ledger.records.len(), out.display());
            Ok(())
        }
        Command::Explain {
            model,
            spec,
            horizon,
            check_sampled,
        } => {
            let mut cfg = load_config(g)?;
            if let Some(m) = model {
                cfg.explain.model = m;
            }
            if let Some(s) = spec {
                cfg.explain.spec = s;
            }
            if let Some(h) = horizon {
                cfg.explain.horizon = h;
            }
            cfg.explain.check_sampled |= check_sampled;
            cmd_explain(&cfg, out)
        }
        Command::Conformal => {
            let cfg = load_config(g)?;
            cmd_conformal(&cfg, out).map(|_| ())
        }
        Command::Report => cmd_report(out).map(|missing| {
            if missing > 0 {
                eprintln!("warning: {missing} cell(s) missing from the run");
            }
        }),
    }
}

fn report_error(out: &Path, e: &Error) {
    let v = error_json(e);
    eprintln!("{v}");
    if std::fs::create_dir_all(out).is_ok() {
        let _ = write_atomic(&out.join("error.json"), &(v.to_string() + "\n"));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.global.out.clone();
    let stale = out.join("error.json");
    match run(cli) {
        Ok(()) => {
            if stale.exists() {
                let _ = std::fs::remove_file(stale);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            report_error(&out, &e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
