use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cdem::bench::{
    best_point, emit_report, format_grid, grid_search, run_suite, ABLATIONS,
};
use cdem::matio::{load_domain_pair, LoadedTask};
use cdem::oracle::selftest;
use cdem::synth::{generate, write_task, ShiftSpec};
use cdem::{CdemError, Components, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "cdem", version, about = "Cross-domain error minimization for domain adaptation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adapt source to target and write report files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Registry task such as `C-A`; defaults to the config's `tasks` or
        /// its direct source/target files.
        #[arg(long)]
        task: Vec<String>,
        /// Objective components to enable (erm, da, cde, dfl).
        #[arg(long, num_args = 1..)]
        ablation: Vec<String>,
        /// Run the source-only baseline and all four ablation settings.
        #[arg(long)]
        suite: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "cdem-out")]
        out: PathBuf,
        /// Write each iteration's objective matrices, Ω and P into this directory.
        #[arg(long)]
        dump_matrices: Option<PathBuf>,
    },
    /// Source-only nearest-prototype baseline.
    Baseline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep hyperparameters over {1e-4, 1e-3, 1e-2, 0.1, 1, 10}.
    Grid {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of beta, lambda, gamma, eta, delta.
        #[arg(long, value_delimiter = ',')]
        param: Vec<String>,
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the objective matrices and eigensolver against brute-force oracles.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a synthetic shifted domain pair.
    Synth {
        /// `key = value` spec; the standard two-class shift when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_tasks(config: &ExperimentConfig, requested: &[String]) -> Result<Vec<LoadedTask>> {
    let names: Vec<Option<&str>> = if !requested.is_empty() {
        requested.iter().map(|s| Some(s.as_str())).collect()
    } else if !config.tasks.is_empty() {
        config.tasks.iter().map(|s| Some(s.as_str())).collect()
    } else {
        vec![None]
    };
    names.into_iter().map(|n| load_domain_pair(config, n)).collect()
}

fn print_results(results: &[cdem::bench::TaskResult]) {
    for r in results {
        match r.accuracy {
            Some(a) => println!("{}\t{}\t{a:.1}%\t{:.2}s", r.task, r.method, r.wall_time.as_secs_f64()),
            None => println!("{}\t{}\t(no target labels)\t{:.2}s", r.task, r.method, r.wall_time.as_secs_f64()),
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            task,
            ablation,
            suite,
            seed,
            out,
            dump_matrices,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if dump_matrices.is_some() {
                cfg.dump_dir = dump_matrices;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if !ablation.is_empty() {
                cfg.components = Components::from_names(&ablation)?;
            }
            let tasks = load_tasks(&cfg, &task)?;
            let configs: Vec<ExperimentConfig> = if suite {
                ABLATIONS
                    .iter()
                    .map(|&components| ExperimentConfig {
                        components,
                        ..cfg.clone()
                    })
                    .collect()
            } else {
                vec![cfg]
            };
            let results = run_suite(&tasks, &configs, suite)?;
            print_results(&results);
            emit_report(&results, &out)?;
            println!("report written to {}", out.display());
            Ok(true)
        }
        Command::Baseline { config, task, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let requested: Vec<String> = task.into_iter().collect();
            let tasks = load_tasks(&cfg, &requested)?;
            let results = run_suite(&tasks, &[cfg], true)?;
            let baseline: Vec<_> = results
                .into_iter()
                .filter(|r| r.method == cdem::bench::SOURCE_ONLY)
                .collect();
            print_results(&baseline);
            if let Some(out) = out {
                emit_report(&baseline, &out)?;
            }
            Ok(true)
        }
        Command::Grid {
            config,
            param,
            task,
            out,
        } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let loaded = load_domain_pair(&cfg, task.as_deref())?;
            let points = grid_search(&loaded, &cfg, &param)?;
            let table = format_grid(&points);
            print!("{table}");
            if let Some(best) = best_point(&points) {
                let desc: Vec<String> = best.params.iter().map(|(n, v)| format!("{n}={v}")).collect();
                println!("best: {} -> {:.1}%", desc.join(" "), best.accuracy);
            }
            if let Some(out) = out {
                std::fs::create_dir_all(&out).map_err(|e| CdemError::io(&out, e))?;
                let path = out.join("grid.csv");
                std::fs::write(&path, table).map_err(|e| CdemError::io(&path, e))?;
            }
            Ok(true)
        }
        Command::Selftest { seed } => {
            let checks = selftest(seed);
            let mut ok = true;
            for c in &checks {
                println!(
                    "{} {} (worst {:.3e}, tolerance {:.0e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.worst,
                    c.tolerance
                );
                ok &= c.passed;
            }
            Ok(ok)
        }
        Command::Synth { spec, out } => {
            let spec = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| CdemError::io(&path, e))?;
                    ShiftSpec::parse(&text)?
                }
                None => ShiftSpec::standard(0),
            };
            let task = generate(&spec)?;
            write_task(&task, &out)?;
            println!("wrote synthetic task to {}", out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
