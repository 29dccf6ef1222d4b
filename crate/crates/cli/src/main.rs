//! `als`: synthesize, ingest, train, schedule and compare from one config.
//!
//! Exit codes: 0 success, 1 infeasible schedule, 2 usage or data error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use als_core::pipeline::{
    cmd_compare, cmd_ingest, cmd_schedule, cmd_synth, cmd_train, RunConfig,
};

#[derive(Parser)]
#[command(name = "als", version, about = "Probabilistic arrival prediction and exact single-runway landing scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed (required when no config file is given).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Conflict probability in (0, 1).
    #[arg(long, global = true)]
    pc: Option<f64>,
    /// Cap on aircraft per solve.
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// Quantile pair, e.g. 0.05,0.95.
    #[arg(long, global = true, value_name = "LO,HI")]
    quantiles: Option<String>,
    /// Ablation rows to include in the training report, e.g. events,weather.
    #[arg(long, global = true, value_name = "LIST")]
    ablation: Option<String>,
    /// Solver wall-clock limit per solve, seconds.
    #[arg(long = "time-limit", global = true, value_name = "SECONDS")]
    time_limit: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario and write tracks/events/weather CSVs.
    Synth,
    /// Parse the raw CSVs and emit features.csv.
    Ingest,
    /// Grid-search and train the staged predictor from features.csv.
    Train,
    /// Predict ETAs, build separations and solve the landing order.
    Schedule,
    /// Batch synthetic scenarios: optimized vs FCFS makespans.
    Compare,
}

fn build_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| e.to_string())?,
        None => {
            let seed = cli
                .seed
                .ok_or("either --config or --seed is required".to_string())?;
            RunConfig::with_seed(seed)
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(pc) = cli.pc {
        cfg.pc = pc;
    }
    if let Some(nmax) = cli.nmax {
        cfg.solver.n_max = nmax;
    }
    if let Some(limit) = cli.time_limit {
        cfg.solver.time_limit_s = limit;
    }
    if let Some(raw) = &cli.quantiles {
        let parts: Vec<&str> = raw.split(',').collect();
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("bad quantile {s:?}: {e}"));
        match parts.as_slice() {
            [lo, hi] => {
                cfg.beta_lo = parse(lo)?;
                cfg.beta_hi = parse(hi)?;
            }
            _ => return Err(format!("--quantiles expects lo,hi, got {raw:?}")),
        }
    }
    if let Some(raw) = &cli.ablation {
        cfg.ablation.events = false;
        cfg.ablation.weather = false;
        for part in raw.split(',').filter(|p| !p.trim().is_empty()) {
            match part.trim() {
                "events" => cfg.ablation.events = true,
                "weather" => cfg.ablation.weather = true,
                other => return Err(format!("unknown ablation {other:?}")),
            }
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode, String> {
    let cfg = build_config(cli)?;
    match cli.command {
        Command::Synth => {
            let summary = cmd_synth(&cfg).map_err(|e| e.to_string())?;
            println!(
                "wrote {} flights to {}, {}, {}",
                summary.n_flights,
                summary.tracks.display(),
                summary.events.display(),
                summary.weather.display()
            );
            println!(
                "stages: I {}  II {}  III {}",
                summary.stage_counts[0], summary.stage_counts[1], summary.stage_counts[2]
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Ingest => {
            let summary = cmd_ingest(&cfg).map_err(|e| e.to_string())?;
            println!(
                "{}: {} rows ({} labeled)",
                summary.features.display(),
                summary.rows,
                summary.labeled_rows
            );
            println!(
                "stages: I {}  II {}  III {}",
                summary.stage_counts[0], summary.stage_counts[1], summary.stage_counts[2]
            );
            if !summary.rejects.is_empty() {
                eprintln!("warning: {} flights rejected (see rejects.csv):", summary.rejects.len());
                for (id, reason) in &summary.rejects {
                    eprintln!("  {id}: {reason}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Train => {
            let report = cmd_train(&cfg).map_err(|e| e.to_string())?;
            println!(
                "trained on {} rows ({} train / {} test), grid points {}, cv rmsle {:.4}",
                report.n_rows, report.n_train, report.n_test, report.grid_points, report.cv_rmsle
            );
            println!(
                "best: learn_rate {} depth {} sample {} col_sample {}",
                report.best.learn_rate,
                report.best.max_depth,
                report.best.sample_rate,
                report.best.col_sample_rate
            );
            println!("{:<44} {:>9} {:>9} {:>8}", "model", "mae_s", "rmse_s", "rmsle");
            for row in &report.rows {
                println!(
                    "{:<44} {:>9.3} {:>9.3} {:>8.4}",
                    row.name, row.mae_s, row.rmse_s, row.rmsle
                );
            }
            for (from, to) in &report.merged_stages {
                println!("note: stage {from} had too few rows and was merged into stage {to}");
            }
            println!("models: {} , {}", report.staged_model.display(), report.unconditioned_model.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Schedule => {
            let outcome = cmd_schedule(&cfg).map_err(|e| e.to_string())?;
            print!("{}", outcome.table);
            println!(
                "solver: {} nodes, {:.3} s, proven {}",
                outcome.file.optimized.nodes, outcome.wall_time_s, outcome.file.optimized.proven
            );
            println!("wrote {}", outcome.path.display());
            if outcome.file.optimized.feasible {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("no feasible schedule under the current windows and separations");
                Ok(ExitCode::from(1))
            }
        }
        Command::Compare => {
            let summary = cmd_compare(&cfg).map_err(|e| e.to_string())?;
            println!(
                "{} scenarios, {} with both schedules feasible, {} strictly improved",
                summary.scenarios, summary.both_feasible, summary.strict_improvements
            );
            println!(
                "mean reduction: makespan {:.1}%, span {:.1}%; max shift {}",
                summary.mean_reduction_makespan * 100.0,
                summary.mean_reduction_span * 100.0,
                summary.max_shift
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
