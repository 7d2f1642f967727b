//! Run configuration: TOML file values overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use gcb_cvar::data::{EmissionUnit, SAMPLE_END, SAMPLE_START};
use gcb_cvar::estimation::SeMethod;
use gcb_cvar::projection::{FeedbackLevel, ShockLaw, SoiMode, DEFAULT_HORIZON};
use gcb_cvar::VecmSpec;
use serde::Deserialize;

use crate::UsageError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub projection: ProjectionSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub gcb: Option<PathBuf>,
    pub soi: Option<PathBuf>,
    /// Canonical aligned CSV written by `ingest`.
    pub dataset: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub scenario_name: Option<String>,
    pub scenario_unit: Option<String>,
    pub first_year: Option<i32>,
    pub last_year: Option<i32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub lags: Option<usize>,
    pub include_soi: Option<bool>,
    pub rank: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Fit JSON written by `fit restricted`.
    pub result: Option<PathBuf>,
    pub n_starts: Option<usize>,
    pub max_iter: Option<usize>,
    pub se_method: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionSection {
    pub n_paths: Option<usize>,
    pub horizon: Option<i32>,
    pub feedback: Option<Vec<String>>,
    pub p_land: Option<f64>,
    pub p_ocean: Option<f64>,
    pub soi_mode: Option<String>,
    pub shocks: Option<String>,
    pub threads: Option<usize>,
    pub overlay: Option<PathBuf>,
}

impl FileConfig {
    /// Reads a config file; relative paths inside it are resolved against its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))
            .map_err(UsageError::wrap)?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .with_context(|| format!("invalid config file {}", path.display()))
            .map_err(UsageError::wrap)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut cfg.out_dir);
        fix(&mut cfg.data.gcb);
        fix(&mut cfg.data.soi);
        fix(&mut cfg.data.dataset);
        fix(&mut cfg.data.scenario);
        fix(&mut cfg.fit.result);
        fix(&mut cfg.projection.overlay);
        Ok(cfg)
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub json: bool,
    pub seed: u64,
    pub gcb: Option<PathBuf>,
    pub soi: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub first_year: i32,
    pub last_year: i32,
    pub scenario: Option<PathBuf>,
    pub scenario_name: Option<String>,
    pub scenario_unit: EmissionUnit,
    pub lags: usize,
    pub include_soi: bool,
    pub rank: usize,
    pub fit_result: Option<PathBuf>,
    pub n_starts: usize,
    pub max_iter: usize,
    pub se_method: SeMethod,
    pub n_paths: usize,
    pub horizon: i32,
    pub feedback: Vec<FeedbackLevel>,
    pub p_land: Option<f64>,
    pub p_ocean: Option<f64>,
    pub soi_mode: SoiMode,
    pub shocks: ShockLaw,
    pub threads: Option<usize>,
    pub overlay: Option<PathBuf>,
}

impl RunConfig {
    pub fn spec(&self) -> VecmSpec {
        VecmSpec::new(self.rank, self.lags, self.include_soi)
    }

    /// Checks that every referenced input exists and creates the output directory.
    pub fn validate(&self) -> anyhow::Result<()> {
        let inputs = [
            ("GCB file", &self.gcb),
            ("SOI file", &self.soi),
            ("dataset", &self.dataset),
            ("scenario", &self.scenario),
            ("fit result", &self.fit_result),
            ("overlay", &self.overlay),
        ];
        for (what, path) in inputs {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(UsageError::msg(format!("{what} {} does not exist", p.display())));
                }
            }
        }
        std::fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("cannot create output directory {}", self.out_dir.display()))
            .map_err(UsageError::wrap)?;
        Ok(())
    }
}

/// Values given on the command line; `None` means "not given".
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub json: bool,
    pub seed: Option<u64>,
    pub gcb: Option<PathBuf>,
    pub soi: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub first_year: Option<i32>,
    pub last_year: Option<i32>,
    pub scenario: Option<PathBuf>,
    pub scenario_name: Option<String>,
    pub scenario_unit: Option<String>,
    pub lags: Option<usize>,
    pub include_soi: Option<bool>,
    pub rank: Option<usize>,
    pub fit_result: Option<PathBuf>,
    pub n_starts: Option<usize>,
    pub max_iter: Option<usize>,
    pub se_method: Option<SeMethod>,
    pub n_paths: Option<usize>,
    pub horizon: Option<i32>,
    pub feedback: Option<Vec<FeedbackLevel>>,
    pub p_land: Option<f64>,
    pub p_ocean: Option<f64>,
    pub soi_mode: Option<SoiMode>,
    pub shocks: Option<ShockLaw>,
    pub threads: Option<usize>,
    pub overlay: Option<PathBuf>,
}

fn parse_unit(label: &str) -> anyhow::Result<EmissionUnit> {
    match label.to_ascii_lowercase().as_str() {
        "pgc" | "gtc" => Ok(EmissionUnit::PgC),
        "gtco2" => Ok(EmissionUnit::GtCO2),
        _ => bail!(UsageError::msg(format!("unknown emission unit `{label}`"))),
    }
}

fn parse_with<T: std::str::FromStr>(label: Option<String>) -> anyhow::Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    label
        .map(|s| s.parse::<T>().map_err(|e| UsageError::msg(e.to_string())))
        .transpose()
}

/// Merges flags over file values over defaults.
pub fn resolve(file: FileConfig, cli: Overrides) -> anyhow::Result<RunConfig> {
    let d = file.data;
    let m = file.model;
    let f = file.fit;
    let p = file.projection;
    let scenario_unit = match cli.scenario_unit.or(d.scenario_unit) {
        Some(u) => parse_unit(&u)?,
        None => EmissionUnit::PgC,
    };
    let feedback = match cli.feedback {
        Some(v) => v,
        None => match p.feedback {
            Some(labels) => labels
                .iter()
                .map(|s| s.parse::<FeedbackLevel>().map_err(|e| UsageError::msg(e.to_string())))
                .collect::<Result<_, _>>()?,
            None => FeedbackLevel::ALL.to_vec(),
        },
    };
    Ok(RunConfig {
        out_dir: cli.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from("gcbcvar-out")),
        json: cli.json,
        seed: cli.seed.or(file.seed).unwrap_or(0),
        gcb: cli.gcb.or(d.gcb),
        soi: cli.soi.or(d.soi),
        dataset: cli.dataset.or(d.dataset),
        first_year: cli.first_year.or(d.first_year).unwrap_or(SAMPLE_START),
        last_year: cli.last_year.or(d.last_year).unwrap_or(SAMPLE_END),
        scenario: cli.scenario.or(d.scenario),
        scenario_name: cli.scenario_name.or(d.scenario_name),
        scenario_unit,
        lags: cli.lags.or(m.lags).unwrap_or(VecmSpec::BENCHMARK.lags),
        include_soi: cli.include_soi.or(m.include_soi).unwrap_or(true),
        rank: cli.rank.or(m.rank).unwrap_or(VecmSpec::BENCHMARK.rank),
        fit_result: cli.fit_result.or(f.result),
        n_starts: cli.n_starts.or(f.n_starts).unwrap_or(6),
        max_iter: cli.max_iter.or(f.max_iter).unwrap_or(2000),
        se_method: match cli.se_method {
            Some(s) => s,
            None => parse_with(f.se_method)?.unwrap_or_default(),
        },
        n_paths: cli.n_paths.or(p.n_paths).unwrap_or(10_000),
        horizon: cli.horizon.or(p.horizon).unwrap_or(DEFAULT_HORIZON),
        feedback,
        p_land: cli.p_land.or(p.p_land),
        p_ocean: cli.p_ocean.or(p.p_ocean),
        soi_mode: match cli.soi_mode {
            Some(s) => s,
            None => parse_with(p.soi_mode)?.unwrap_or_default(),
        },
        shocks: match cli.shocks {
            Some(s) => s,
            None => parse_with(p.shocks)?.unwrap_or_default(),
        },
        threads: cli.threads.or(p.threads),
        overlay: cli.overlay.or(p.overlay),
    })
}
