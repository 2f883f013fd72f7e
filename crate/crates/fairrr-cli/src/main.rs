//! Command-line front end: prep, calibrate, bench and sweep.
//!
//! Exit statuses: 0 success, 1 runtime failure, 2 configuration or input
//! error. Failures print one machine-readable line to stderr:
//! `error <CODE>: <message>`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use fairrr::harness::{self, report};
use fairrr::{Error, FairnessMetric};

#[derive(Parser)]
#[command(
    name = "fairrr",
    version,
    about = "Group-fair training data via calibrated label flipping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate on the full dataset and write a perturbed-label copy plus an
    /// audit file
    Prep(RunArgs),
    /// Calibrate on the full dataset and write the audit file only
    Calibrate(RunArgs),
    /// Multi-seed benchmark: per-seed CSV and aggregate JSON
    Bench(RunArgs),
    /// Benchmark once per target disparity and tabulate the trade-off
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the config's base_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's fairness metric: dp, eo or pe
    #[arg(long)]
    metric: Option<String>,
    /// Overrides the config's target disparity; repeat the flag to override
    /// the sweep list
    #[arg(long = "delta")]
    deltas: Vec<f64>,
}

impl RunArgs {
    fn load(&self, allow_delta_list: bool) -> fairrr::Result<harness::RunConfig> {
        let mut cfg = harness::RunConfig::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.base_seed = seed;
        }
        if let Some(metric) = &self.metric {
            cfg.metric = FairnessMetric::from_str(metric)?;
        }
        match self.deltas.as_slice() {
            [] => {}
            [delta] if !allow_delta_list => cfg.target_delta = *delta,
            _ if !allow_delta_list => {
                return Err(Error::InvalidArgument(
                    "--delta may be given once for this subcommand".into(),
                ));
            }
            list => cfg.sweep_deltas = list.to_vec(),
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn ensure_out(&self) -> fairrr::Result<()> {
        std::fs::create_dir_all(&self.out)?;
        Ok(())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Prep(args) => cmd_prep(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error {}: {e}", e.code());
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn cmd_prep(args: &RunArgs) -> fairrr::Result<ExitCode> {
    let cfg = args.load(false)?;
    args.ensure_out()?;
    let prep = harness::run_prep(&cfg)?;
    let csv_path = args.out.join("prepared.csv");
    let audit_path = args.out.join("audit.json");
    report::write_prep_csv(&prep, &csv_path)?;
    report::write_audit_json(&prep.audit, &audit_path)?;
    let c = &prep.audit.flip_counts;
    println!(
        "t_star = {:.6}; flipped {} labels ({} rows); wrote {} and {}",
        prep.audit.t_star,
        c.c11 + c.c10 + c.c01 + c.c00,
        prep.rows.len(),
        csv_path.display(),
        audit_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_calibrate(args: &RunArgs) -> fairrr::Result<ExitCode> {
    let cfg = args.load(false)?;
    args.ensure_out()?;
    let (audit, _, _) = harness::run_calibrate(&cfg)?;
    let audit_path = args.out.join("audit.json");
    report::write_audit_json(&audit, &audit_path)?;
    let last = audit.calibration_trace.last().copied().unwrap_or_default();
    println!(
        "t_star = {:.6}; measured disparity {:.4} at final evaluation; wrote {}",
        audit.t_star,
        last.1,
        audit_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: &RunArgs) -> fairrr::Result<ExitCode> {
    let cfg = args.load(false)?;
    args.ensure_out()?;
    let bench = harness::run_bench(&cfg)?;
    let csv_path = args.out.join("bench_seeds.csv");
    let json_path = args.out.join("bench_report.json");
    report::write_seed_csv(&bench, &csv_path)?;
    report::write_report_json(&bench, &json_path)?;
    report::verify_report(&json_path, &csv_path)?;
    for (arm, agg) in &bench.aggregates {
        let abs = agg.abs_disparity(cfg.metric);
        println!(
            "arm {arm}: accuracy {:.4} ± {:.4}, f1 {:.4} ± {:.4}, |{}| {:.4} ± {:.4}",
            agg.accuracy.mean,
            agg.accuracy.std,
            agg.f1.mean,
            agg.f1.std,
            cfg.metric,
            abs.mean,
            abs.std
        );
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    if bench.exceeds_failure_budget() {
        eprintln!(
            "error TOO_MANY_FAILURES: {} of {} seeds failed",
            bench.failures.len(),
            bench.n_splits
        );
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: &RunArgs) -> fairrr::Result<ExitCode> {
    let cfg = args.load(true)?;
    args.ensure_out()?;
    let deltas = cfg.sweep_deltas.clone();
    let sweep = harness::run_sweep(&cfg, &deltas)?;
    let csv_path = args.out.join("sweep.csv");
    report::write_sweep_csv(&sweep, &csv_path)?;
    for row in &sweep.rows {
        println!(
            "delta {:.3}: accuracy {:.4} ± {:.4}, {} {:+.4} ± {:.4}",
            row.delta,
            row.accuracy_mean,
            row.accuracy_std,
            cfg.metric,
            row.disparity_mean,
            row.disparity_std
        );
    }
    println!("wrote {}", csv_path.display());
    if sweep.total_seeds > 0 && sweep.failed_seeds as f64 / sweep.total_seeds as f64 > 0.10 {
        eprintln!(
            "error TOO_MANY_FAILURES: {} of {} seeds failed",
            sweep.failed_seeds, sweep.total_seeds
        );
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
