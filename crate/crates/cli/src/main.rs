//! `gcbcvar`: estimation, testing, diagnostics and projection of the Global
//! Carbon Budget cointegrated system from the command line.

mod commands;
mod config;
mod render;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use gcb_cvar::estimation::SeMethod;
use gcb_cvar::projection::{FeedbackLevel, ShockLaw, SoiMode};

use crate::config::{FileConfig, Overrides};

#[derive(Debug, Parser)]
#[command(name = "gcbcvar", version, about = "Cointegrated VAR analysis of the Global Carbon Budget")]
struct Cli {
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Directory for reports, CSV and JSON artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Print machine-readable JSON on stdout instead of text tables.
    #[arg(long, global = true)]
    json: bool,

    /// Seed for multistart perturbations and projection paths.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(flatten)]
    data: DataArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// GCB global budget CSV.
    #[arg(long, global = true, value_name = "FILE")]
    gcb: Option<PathBuf>,

    /// SOI index CSV (annual or monthly).
    #[arg(long, global = true, value_name = "FILE")]
    soi: Option<PathBuf>,

    /// Aligned dataset CSV written by `ingest`; replaces --gcb and --soi.
    #[arg(long, global = true, value_name = "FILE")]
    data: Option<PathBuf>,

    #[arg(long, global = true)]
    first_year: Option<i32>,

    #[arg(long, global = true)]
    last_year: Option<i32>,
}

#[derive(Debug, Args, Default)]
struct ModelArgs {
    /// Lagged differences k (0 or 1).
    #[arg(long)]
    lags: Option<usize>,

    /// Include SOI as an exogenous regressor.
    #[arg(long, value_name = "BOOL")]
    include_soi: Option<bool>,

    /// Cointegration rank.
    #[arg(long)]
    rank: Option<usize>,
}

#[derive(Debug, Args, Default)]
struct FitArgs {
    /// Starting points for the restricted MLE.
    #[arg(long)]
    n_starts: Option<usize>,

    #[arg(long)]
    max_iter: Option<usize>,

    /// Standard errors: hessian or sandwich.
    #[arg(long)]
    se_method: Option<SeMethod>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitModel {
    Benchmark,
    Restricted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TestKind {
    Exclusion,
    Exogeneity,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DiagModel {
    Restricted,
    Unrestricted,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Align GCB and SOI inputs into the canonical dataset CSV.
    Ingest,

    /// Johansen trace test for the four SOI × lag specifications.
    RankTest,

    /// Fit the unrestricted benchmark VECM or the restricted structural model.
    Fit {
        #[arg(value_enum)]
        model: FitModel,
        #[command(flatten)]
        spec: ModelArgs,
        #[command(flatten)]
        fit: FitArgs,
    },

    /// LR tests of variable exclusion and weak exogeneity.
    Test {
        #[arg(value_enum)]
        which: TestKind,
        /// Restrict to one variable (sL, sO, E or C).
        #[arg(long)]
        variable: Option<String>,
        #[command(flatten)]
        spec: ModelArgs,
    },

    /// Residual diagnostics.
    Diagnose {
        #[arg(value_enum)]
        model: DiagModel,
        /// Restricted-model fit JSON; estimated on the fly if absent.
        #[arg(long, value_name = "FILE")]
        fit: Option<PathBuf>,
        /// Unrestricted models: one lag order instead of both.
        #[arg(long)]
        lags: Option<usize>,
        /// Unrestricted models: one SOI setting instead of both.
        #[arg(long, value_name = "BOOL")]
        include_soi: Option<bool>,
        /// Unrestricted models: cointegration rank (default: full rank).
        #[arg(long)]
        rank: Option<usize>,
        #[command(flatten)]
        fit_args: FitArgs,
    },

    /// Monte Carlo projection fans under an emissions scenario.
    Project {
        /// Scenario CSV (`year,value[,unit]`) starting the year after the sample.
        #[arg(long, value_name = "FILE")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        scenario_name: Option<String>,
        /// Unit of scenario values without a unit column: pgc or gtco2.
        #[arg(long)]
        scenario_unit: Option<String>,
        /// Restricted-model fit JSON; estimated on the fly if absent.
        #[arg(long, value_name = "FILE")]
        fit: Option<PathBuf>,
        /// Named feedback levels (none, low, high), comma separated.
        #[arg(long, value_delimiter = ',')]
        feedback: Option<Vec<FeedbackLevel>>,
        /// Land sink weakening by mid-century; replaces --feedback.
        #[arg(long)]
        p_land: Option<f64>,
        /// Ocean sink weakening by mid-century; replaces --feedback.
        #[arg(long)]
        p_ocean: Option<f64>,
        #[arg(long)]
        n_paths: Option<usize>,
        /// Last projected year.
        #[arg(long)]
        horizon: Option<i32>,
        /// Out-of-sample SOI: zero or bootstrap.
        #[arg(long)]
        soi_mode: Option<SoiMode>,
        /// Shock law: joint, diagonal or off.
        #[arg(long)]
        shocks: Option<ShockLaw>,
        /// Worker threads for path simulation.
        #[arg(long)]
        threads: Option<usize>,
        /// External concentration path (`year,ppm`) reported next to the medians.
        #[arg(long, value_name = "FILE")]
        overlay: Option<PathBuf>,
        #[command(flatten)]
        fit_args: FitArgs,
    },
}

/// Bad input or usage; exit code 2.
#[derive(Debug)]
pub struct UsageError(String);

impl UsageError {
    pub fn msg(s: impl Into<String>) -> anyhow::Error {
        anyhow::Error::new(UsageError(s.into()))
    }

    pub fn wrap(e: anyhow::Error) -> anyhow::Error {
        Self::msg(format!("{e:#}"))
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Numerical failure such as non-convergence; exit code 3.
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if cause.is::<NumericalFailure>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<gcb_cvar::Error>() {
            return if e.is_data_error() { 2 } else { 3 };
        }
    }
    2
}

fn overrides(cli: &Cli) -> Overrides {
    let mut o = Overrides {
        out_dir: cli.out_dir.clone(),
        json: cli.json,
        seed: cli.seed,
        gcb: cli.data.gcb.clone(),
        soi: cli.data.soi.clone(),
        dataset: cli.data.data.clone(),
        first_year: cli.data.first_year,
        last_year: cli.data.last_year,
        ..Default::default()
    };
    let mut fit_args = |f: &FitArgs| {
        o.n_starts = f.n_starts;
        o.max_iter = f.max_iter;
        o.se_method = f.se_method;
    };
    match &cli.command {
        Command::Fit { fit, .. } => fit_args(fit),
        Command::Diagnose { fit_args: f, .. } | Command::Project { fit_args: f, .. } => fit_args(f),
        _ => {}
    }
    match &cli.command {
        Command::Fit { spec, .. } | Command::Test { spec, .. } => {
            o.lags = spec.lags;
            o.include_soi = spec.include_soi;
            o.rank = spec.rank;
        }
        Command::Diagnose { fit, .. } => o.fit_result = fit.clone(),
        Command::Project {
            scenario,
            scenario_name,
            scenario_unit,
            fit,
            feedback,
            p_land,
            p_ocean,
            n_paths,
            horizon,
            soi_mode,
            shocks,
            threads,
            overlay,
            ..
        } => {
            o.scenario = scenario.clone();
            o.scenario_name = scenario_name.clone();
            o.scenario_unit = scenario_unit.clone();
            o.fit_result = fit.clone();
            o.feedback = feedback.clone();
            o.p_land = *p_land;
            o.p_ocean = *p_ocean;
            o.n_paths = *n_paths;
            o.horizon = *horizon;
            o.soi_mode = *soi_mode;
            o.shocks = *shocks;
            o.threads = *threads;
            o.overlay = overlay.clone();
        }
        _ => {}
    }
    o
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = config::resolve(file, overrides(&cli))?;
    cfg.validate()?;
    match cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::RankTest => commands::rank_test(&cfg),
        Command::Fit { model: FitModel::Benchmark, .. } => commands::fit_benchmark(&cfg),
        Command::Fit { model: FitModel::Restricted, .. } => commands::fit_restricted(&cfg),
        Command::Test { which, variable, .. } => {
            let variable = variable
                .map(|v| v.parse().map_err(|e: gcb_cvar::Error| UsageError::msg(e.to_string())))
                .transpose()?;
            commands::lr_tests(
                &cfg,
                matches!(which, TestKind::Exclusion | TestKind::All),
                matches!(which, TestKind::Exogeneity | TestKind::All),
                variable,
            )
        }
        Command::Diagnose { model: DiagModel::Restricted, .. } => commands::diagnose_restricted(&cfg),
        Command::Diagnose {
            model: DiagModel::Unrestricted,
            lags,
            include_soi,
            rank,
            ..
        } => commands::diagnose_unrestricted(&cfg, lags, include_soi, rank),
        Command::Project { .. } => commands::project(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
