//! Command-line entry point.
//!
//! Verbs: `gen` (materialize an initial data pair and print its measured
//! size), `run` (execute one suite), `converge` (the convergence suite),
//! `gauge` (the gauge-flow suite), `report` (norm report of a stored
//! evolution). Exit codes: 0 pass, 1 assertion failure, 2 configuration
//! error, 3 numerical breakdown.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use minsurf_harness::config::RunConfig;
use minsurf_harness::gen::generate_data;
use minsurf_harness::report::write_norm_report;
use minsurf_harness::suites::{run_suite, SuiteKind};

#[derive(Parser)]
#[command(name = "minsurf", about = "pseudospectral toolkit for timelike minimal surfaces")]
struct Cli {
    /// configuration file (key-value text or .json)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory override
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed override
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// spatial dimension override
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// grid points per axis override
    #[arg(long, global = true)]
    n: Option<usize>,
    /// tolerance override
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// generate the configured initial data pair and write it as a block
    Gen,
    /// run one verification suite
    Run {
        #[arg(long)]
        suite: String,
    },
    /// run the convergence suite
    Converge,
    /// run the gauge-flow suite
    Gauge,
    /// evolve the configured data and write the norm report
    Report,
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default().with_env_overrides()?,
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.display().to_string();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dim) = cli.dim {
        cfg.dim = dim;
    }
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(tol) = cli.tol {
        cfg.tol = tol;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match dispatch(&cli, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            // numerical breakdowns surface through the core error type
            let is_breakdown = e.chain().any(|c| c.to_string().contains("breakdown")
                || c.to_string().contains("NaN")
                || c.to_string().contains("not Lorentzian")
                || c.to_string().contains("smallness"));
            eprintln!("error: {e:#}");
            ExitCode::from(if is_breakdown { 3 } else { 2 })
        }
    }
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> anyhow::Result<bool> {
    let out_dir = PathBuf::from(&cfg.out_dir);
    match &cli.cmd {
        Cmd::Gen => {
            let (data, dsize) = generate_data(cfg)?;
            let (rn, ru) = data.constraint_residuals();
            println!("data size D = {dsize:.6e}");
            println!("constraint residuals: normal {rn:.3e}, unit {ru:.3e}");
            // write the pair as a block with sidecar
            let mut named = Vec::new();
            for (a, f) in data.ybar_disp.iter().enumerate() {
                named.push((format!("ybar_disp_{a}"), f));
            }
            for (a, f) in data.nbar.iter().enumerate() {
                named.push((format!("nbar_{a}"), f));
            }
            let named_ref: Vec<(String, &minsurf_core::SpectralField)> =
                named.iter().map(|(s, f)| (s.clone(), *f)).collect();
            let mut meta = std::collections::BTreeMap::new();
            meta.insert("config_hash".to_string(), cfg.hash());
            meta.insert("seed".to_string(), cfg.seed.to_string());
            meta.insert("data_size".to_string(), format!("{dsize:.16e}"));
            minsurf_core::io::write_block(
                &out_dir.join("initial_data.bin"),
                cfg.dim,
                cfg.n,
                cfg.codim,
                0.0,
                &named_ref,
                meta,
            )?;
            println!("wrote {}", out_dir.join("initial_data.bin").display());
            Ok(true)
        }
        Cmd::Run { suite } => {
            let kind: SuiteKind = suite.parse()?;
            let outcome = run_suite(cfg, kind)?;
            outcome.print_summary();
            outcome.write(&out_dir)?;
            Ok(outcome.all_passed())
        }
        Cmd::Converge => {
            let outcome = run_suite(cfg, SuiteKind::Convergence)?;
            outcome.print_summary();
            outcome.write(&out_dir)?;
            Ok(outcome.all_passed())
        }
        Cmd::Gauge => {
            let outcome = run_suite(cfg, SuiteKind::GaugeFlow)?;
            outcome.print_summary();
            outcome.write(&out_dir)?;
            Ok(outcome.all_passed())
        }
        Cmd::Report => {
            use minsurf_core::evolution::initial_data_from_pair;
            use minsurf_core::geometry::FrameHistory;
            use minsurf_core::norms::{bootstrap_quantities, RunArtifacts, SmallConstants};
            let (data, dsize) = generate_data(cfg)?;
            let (state, _) = initial_data_from_pair(&data, 1e-8)?;
            let steps = (cfg.t_end / cfg.dt).round() as usize;
            let hist = state.run(cfg.dt, steps.max(1), cfg.store_every, 0.9)?;
            let frames = FrameHistory::from_reference(&hist)?;
            let constants = SmallConstants::new(cfg.sobolev_s)?;
            let report = bootstrap_quantities(&RunArtifacts { hist: &hist, frames: &frames }, &constants)?;
            println!(
                "D = {dsize:.6e}  Q_k = {:?}  Q_g = {:?}  Q_perp = {:?}",
                report.q_k, report.q_g, report.q_perp
            );
            write_norm_report(&report, &out_dir, "norm_report")?;
            println!("wrote {}", out_dir.join("norm_report.csv").display());
            Ok(true)
        }
    }
}
