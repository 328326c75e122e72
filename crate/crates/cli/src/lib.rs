//! Experiment runner behind the `ccd` binary: config parsing, seeded runs,
//! CSV traces, bound reports and parameter sweeps.

pub mod config;
pub mod experiment;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ccd_core::suite::{find_suite, run_suite, SuiteOptions, Verdict, SUITES};
use ccd_core::theory::write_reports_csv;

use config::{ConfigErrors, RawConfig, NUMERIC_KEYS};
use experiment::{run_experiment, sweep_rows, write_sweep, Plan};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Core(#[from] ccd_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

/// Exit status for configuration and runtime errors.
pub const EXIT_ERROR: u8 = 3;

#[derive(Clone, Debug)]
pub struct Options {
    /// Overrides `seeds.base` (or the suite seed).
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
}

fn read_raw(path: &Path, opts: &Options) -> Result<RawConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut raw = RawConfig::parse(&text);
    if let Some(seed) = opts.seed {
        raw.set("seeds.base", &seed.to_string())?;
    }
    Ok(raw)
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

pub fn cmd_run(config: &Path, opts: &Options) -> Result<u8, CliError> {
    let cfg = read_raw(config, opts)?.resolve()?;
    let plan = Plan::new(cfg, base_dir(config))?;
    let summary = run_experiment(&plan, &opts.out_dir)?;
    for path in &summary.trace_files {
        println!("trace: {}", path.display());
    }
    for report in &summary.reports {
        print!("{}", report.to_text());
    }
    if let Some(path) = &summary.report_file {
        println!("report: {}", path.display());
    }
    Ok(summary.exit_code())
}

pub fn cmd_check(name: &str, opts: &Options) -> Result<u8, CliError> {
    let specs = if name == "all" {
        SUITES.to_vec()
    } else {
        let names: Vec<&str> = SUITES.iter().map(|s| s.name).collect();
        vec![find_suite(name).ok_or_else(|| {
            CliError::Usage(format!("unknown suite '{name}' (expected all or one of {})", names.join(", ")))
        })?]
    };
    let suite_opts = SuiteOptions { seed: opts.seed.unwrap_or(0) };
    let mut code = 0;
    for spec in specs {
        let result = run_suite(spec, &suite_opts)?;
        println!("{}", result.line());
        for report in result.reports.iter().filter(|r| !r.passed()) {
            print!("{}", report.to_text());
        }
        let path = opts.out_dir.join(format!("{}_report.csv", spec.name));
        std::fs::create_dir_all(&opts.out_dir).map_err(|e| CliError::io(&opts.out_dir, e))?;
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        write_reports_csv(&result.reports, &mut w)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        code = code.max(match result.verdict() {
            Verdict::Pass => 0,
            Verdict::SoftFail => 1,
            Verdict::HardFail => 2,
        });
    }
    Ok(code)
}

pub fn cmd_sweep(config: &Path, axis: &str, values: &[String], opts: &Options) -> Result<u8, CliError> {
    if !NUMERIC_KEYS.contains(&axis) {
        return Err(CliError::Usage(format!("sweep axis '{axis}' is not a numeric config field")));
    }
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let raw = read_raw(config, opts)?;
    let mut headers = Vec::new();
    let mut rows = Vec::new();
    for value in values {
        if value.parse::<f64>().is_err() {
            return Err(CliError::Usage(format!("sweep value '{value}' is not a number")));
        }
        let mut raw = raw.clone();
        raw.set(axis, value)?;
        let plan = Plan::new(raw.resolve()?, base_dir(config))?;
        headers.push((value.clone(), plan.header()));
        rows.extend(sweep_rows(&plan, value)?);
    }
    let path = opts.out_dir.join(format!("sweep_{axis}.csv"));
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| CliError::io(&opts.out_dir, e))?;
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    write_sweep(BufWriter::new(file), axis, &headers, &rows).map_err(|e| CliError::io(&path, e))?;
    println!("sweep: {} ({} rows)", path.display(), rows.len());
    Ok(0)
}
