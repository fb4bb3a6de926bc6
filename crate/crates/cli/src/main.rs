mod commands;
mod input;
mod out;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

#[cfg(test)]
use clap::CommandFactory;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ecgtda::config::RunConfig;

use crate::out::Out;

/// Topological ECG analysis: WFDB ingestion, preprocessing, persistence
/// barcodes and Betti curves, features, autoencoder scoring and
/// patient-wise cross-validation.
///
/// Settings are resolved in order: built-in defaults, `--config` file,
/// flags (or their ECGTDA_* environment variables), then `--set`. Each run
/// writes the effective settings to `<out>/config.txt` and a digest of its
/// outputs to `<out>/SHA256SUMS`.
///
/// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
/// 3 numeric failure.
#[derive(Debug, Parser)]
#[command(name = "ecgtda", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// `section.key = value` settings file.
    #[arg(long, global = true, env = "ECGTDA_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "ECGTDA_SEED")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "ECGTDA_OUT", default_value = "ecgtda-out")]
    out: PathBuf,
    /// Worker threads for per-record and per-fold work.
    #[arg(long, global = true, env = "ECGTDA_JOBS")]
    jobs: Option<usize>,
    /// Grid points per Betti curve.
    #[arg(long, global = true, env = "ECGTDA_BINS")]
    bins: Option<usize>,
    #[arg(long, global = true, env = "ECGTDA_BEATS_PER_WINDOW")]
    beats_per_window: Option<usize>,
    /// Patients per cross-validation test fold.
    #[arg(long, global = true, env = "ECGTDA_TEST_SIZE")]
    test_size: Option<usize>,
    /// Classifier input channels, e.g. `betti,features,latent,residual`.
    #[arg(long, global = true, env = "ECGTDA_CHANNELS")]
    channels: Option<String>,
    /// Any config key, e.g. `--set autoencoder.epochs=20`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Errors only.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse WFDB records and write a manifest with per-database counts.
    Ingest {
        /// `.hea` files, record base paths or directories of records.
        records: Vec<PathBuf>,
    },
    /// Condition one record and write the processed signal and stage report.
    Preprocess {
        record: PathBuf,
        /// Write raw little-endian f64 instead of CSV.
        #[arg(long)]
        binary: bool,
    },
    /// Records to beat windows, features and Betti tables.
    Pipeline { records: Vec<PathBuf> },
    /// Barcodes and Betti curves of a signal or of beat windows.
    Tda {
        /// Numeric text file or window table.
        input: Option<PathBuf>,
        /// Inline samples, e.g. `0,2,1,3`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Option<Vec<f64>>,
        /// Window drawn as SVG when the input is a window table.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Fit the feature bank on a window table and write the feature table.
    Features { windows: PathBuf },
    /// Train the autoencoder on normal beat windows.
    TrainAe {
        windows: PathBuf,
        /// Continue training a saved model.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Train on every window, not just normal beats.
        #[arg(long)]
        all_labels: bool,
    },
    /// Latent codes and reconstruction scores for a window table.
    Score {
        #[arg(long)]
        model: PathBuf,
        windows: PathBuf,
    },
    /// Patient-wise cross-validation over a window table or manifest.
    Crossval {
        input: PathBuf,
        /// Only write the fold plan.
        #[arg(long)]
        plan_only: bool,
        /// Both tasks with and without the Betti channel.
        #[arg(long)]
        ablation: bool,
        #[arg(long)]
        task: Option<String>,
    },
    /// Render CSV outputs as SVG.
    Plot {
        #[arg(value_enum)]
        kind: PlotKind,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Barcode CSV holds a superlevel barcode (negated coordinates).
        #[arg(long)]
        superlevel: bool,
        #[arg(long)]
        title: Option<String>,
    },
    /// Write a synthetic annotated cohort as WFDB records.
    Synth {
        #[arg(long, default_value_t = 10)]
        patients: usize,
        #[arg(long, default_value_t = 60.0)]
        duration_s: f64,
        #[arg(long, default_value_t = 360.0)]
        rate_hz: f64,
        /// Beat symbol weights.
        #[arg(long, default_value = "N:0.7,V:0.15,A:0.05,L:0.05,R:0.05")]
        mix: String,
        /// Subdirectory of `--out` to write into.
        #[arg(long, default_value = "synth")]
        database: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PlotKind {
    Barcode,
    Betti,
    Loss,
    Signal,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<ecgtda::Error> for Failure {
    fn from(e: ecgtda::Error) -> Self {
        match e {
            ecgtda::Error::Numeric(_) => Failure::Numeric(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn config_keys(text: &str) -> impl Iterator<Item = String> + '_ {
    text.lines().filter_map(|l| {
        let l = l.split('#').next()?;
        l.split_once('=').map(|(k, _)| k.trim().to_string())
    })
}

/// Defaults, then the config file, then flags, then `--set`. The global seed
/// fills every section seed not given explicitly.
fn resolve(g: &Global) -> CmdResult<RunConfig> {
    let (mut cfg, mut explicit) = match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("config {}: {e}", path.display())))?;
            let keys: BTreeSet<String> = config_keys(&text).collect();
            (RunConfig::parse(&text, path).map_err(usage)?, keys)
        }
        None => (RunConfig::default(), BTreeSet::new()),
    };
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut flag = |key: &str, v: Option<String>| {
        if let Some(v) = v {
            overrides.push((key.into(), v));
        }
    };
    flag("seed", g.seed.map(|v| v.to_string()));
    flag("jobs", g.jobs.map(|v| v.to_string()));
    flag("tda.bins", g.bins.map(|v| v.to_string()));
    flag(
        "segment.beats_per_window",
        g.beats_per_window.map(|v| v.to_string()),
    );
    flag("crossval.test_size", g.test_size.map(|v| v.to_string()));
    flag("crossval.channels", g.channels.clone());
    for item in &g.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {item:?}")))?;
        overrides.push((k.trim().into(), v.trim().into()));
    }
    for (k, v) in &overrides {
        cfg.set(k, v).map_err(usage)?;
        explicit.insert(k.clone());
    }
    if explicit.contains("seed") {
        let (ae, head) = (cfg.autoencoder.seed, cfg.head.seed);
        cfg.propagate_seed();
        if explicit.contains("autoencoder.seed") {
            cfg.autoencoder.seed = ae;
        }
        if explicit.contains("head.seed") {
            cfg.head.seed = head;
        }
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CmdResult {
    let cfg = resolve(&cli.global)?;
    let mut out = Out::create(&cli.global.out)
        .map_err(|e| Failure::Data(format!("{}: {e}", cli.global.out.display())))?;
    out.write("config.txt", cfg.to_text().as_bytes())?;
    let result = commands::dispatch(cli.command, &cfg, &mut out);
    out.finish()?;
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match (cli.global.quiet, cli.global.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
