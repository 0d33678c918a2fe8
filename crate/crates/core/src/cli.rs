//! Command-line front end. Sweeps and backtests read a JSON config; `eigs`
//! takes plain flags.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::backtest::{
    run_track, run_walk_forward, write_cumulative_csv, write_performance_csv, write_track_csv, TrackConfig,
    WalkForwardConfig,
};
use crate::error::{Error, Result};
use crate::models::{build_nested_sigma, nested_sigma_eigenvalues, ModelKind};
use crate::report::{config_hash, provenance_line, write_csv};
use crate::simulation::{
    run_sweep, run_table, write_plot_csvs, write_records_csv, write_summary_csv, write_table_csvs, SweepConfig,
    TableConfig,
};

#[derive(Debug, Parser)]
#[command(name = "hdcov", version, about = "Covariance estimators for portfolio allocation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Size of the worker pool (defaults to the available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the base seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the price file named in the config.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo sweep over sample sizes; writes plot-ready CSVs.
    Simulate(RunArgs),
    /// Fixed-size tables over several models.
    Table(RunArgs),
    /// Moving-window metric tracks on a price file.
    BacktestTrack(BacktestArgs),
    /// Walk-forward rebalancing on a price file.
    WalkForward(BacktestArgs),
    /// Eigenvalues of the nested model by root finding and by a dense solver.
    Eigs {
        #[arg(long, default_value = "nested")]
        model: String,
        #[arg(short = 'p', long = "p")]
        p: usize,
        #[arg(long)]
        gamma: f64,
        /// Also write `eigs.csv` into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn simulate(args: &RunArgs) -> Result<()> {
    let mut cfg: SweepConfig = read_config(&args.config).map_err(|e| e.in_stage("reading config"))?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    prepare_out(&args.out).map_err(|e| e.in_stage("creating output directory"))?;
    let res = run_sweep(&cfg).map_err(|e| e.in_stage("simulation"))?;
    let write = || -> Result<()> {
        write_summary_csv(&res, &args.out.join("summary.csv"))?;
        write_records_csv(&res, &args.out.join("records.csv"))?;
        write_plot_csvs(&res, &args.out)?;
        Ok(())
    };
    write().map_err(|e| e.in_stage("writing output"))?;
    println!("wrote simulation output to {}", args.out.display());
    Ok(())
}

fn table(args: &RunArgs) -> Result<()> {
    let mut cfg: TableConfig = read_config(&args.config).map_err(|e| e.in_stage("reading config"))?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    prepare_out(&args.out).map_err(|e| e.in_stage("creating output directory"))?;
    let res = run_table(&cfg).map_err(|e| e.in_stage("table"))?;
    let write = || -> Result<()> {
        write_summary_csv(&res, &args.out.join("summary.csv"))?;
        write_table_csvs(&res, &args.out)?;
        Ok(())
    };
    write().map_err(|e| e.in_stage("writing output"))?;
    println!("wrote tables to {}", args.out.display());
    Ok(())
}

fn backtest_track(args: &BacktestArgs) -> Result<()> {
    let mut cfg: TrackConfig = read_config(&args.config).map_err(|e| e.in_stage("reading config"))?;
    if let Some(input) = &args.input {
        cfg.input = input.clone();
    }
    prepare_out(&args.out).map_err(|e| e.in_stage("creating output directory"))?;
    let out = run_track(&cfg)?;
    for (ticker, reason) in &out.cleaned.dropped {
        eprintln!("dropped {ticker}: {reason:?}");
    }
    write_track_csv(&out.records, &out.config_hash, &args.out.join("track.csv"))
        .map_err(|e| e.in_stage("writing output"))?;
    println!(
        "{} windows of {} days (step {}), output in {}",
        out.plan.count,
        out.plan.window_length,
        out.plan.step,
        args.out.display()
    );
    Ok(())
}

fn walk_forward(args: &BacktestArgs) -> Result<()> {
    let mut cfg: WalkForwardConfig = read_config(&args.config).map_err(|e| e.in_stage("reading config"))?;
    if let Some(input) = &args.input {
        cfg.input = input.clone();
    }
    prepare_out(&args.out).map_err(|e| e.in_stage("creating output directory"))?;
    let out = run_walk_forward(&cfg)?;
    for (ticker, reason) in &out.cleaned.dropped {
        eprintln!("dropped {ticker}: {reason:?}");
    }
    for (label, why) in &out.result.failures {
        eprintln!("skipped {label}: {why}");
    }
    let write = || -> Result<()> {
        write_cumulative_csv(&out.result, &out.config_hash, &args.out.join("cumulative.csv"))?;
        write_performance_csv(&out.result, &out.config_hash, &args.out.join("performance.csv"))?;
        Ok(())
    };
    write().map_err(|e| e.in_stage("writing output"))?;
    println!("{} runs, output in {}", out.result.runs.len(), args.out.display());
    Ok(())
}

fn eigs(model: &str, p: usize, gamma: f64, out: Option<&Path>) -> Result<()> {
    let kind: ModelKind = model.parse()?;
    if kind != ModelKind::Nested {
        return Err(Error::InvalidArgument(format!(
            "eigs supports only the nested model, got `{model}`"
        )));
    }
    let roots = nested_sigma_eigenvalues(p, gamma).map_err(|e| e.in_stage("root finder"))?;
    let dense = build_nested_sigma(p, gamma)
        .map_err(|e| e.in_stage("dense oracle"))?
        .spectrum()
        .eigenvalues
        .clone();
    let header = ["k", "root_finder", "dense_oracle"].map(String::from);
    let rows: Vec<Vec<String>> = roots
        .iter()
        .zip(&dense)
        .enumerate()
        .map(|(k, (a, b))| vec![(k + 1).to_string(), format!("{a:.15e}"), format!("{b:.15e}")])
        .collect();
    println!("{}", header.join(","));
    for r in &rows {
        println!("{}", r.join(","));
    }
    if let Some(dir) = out {
        prepare_out(dir)?;
        let hash = config_hash(&serde_json::json!({"model": "nested", "p": p, "gamma": gamma}))?;
        write_csv(dir.join("eigs.csv"), &provenance_line(&hash, None), &header, &rows)?;
    }
    Ok(())
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(k) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    }
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Table(a) => table(a),
        Command::BacktestTrack(a) => backtest_track(a),
        Command::WalkForward(a) => walk_forward(a),
        Command::Eigs { model, p, gamma, out } => eigs(model, *p, *gamma, out.as_deref()),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_eigs() {
        let cli = Cli::try_parse_from(["hdcov", "eigs", "--model", "nested", "-p", "2", "--gamma", "0.1"]).unwrap();
        assert!(matches!(cli.command, Command::Eigs { p: 2, .. }));
    }

    #[test]
    fn unknown_model_lists_vocabulary() {
        let err = eigs("toeplitz", 3, 0.1, None).unwrap_err().to_string();
        assert!(err.contains("nested, one-factor, diagonal"), "{err}");
    }
}
