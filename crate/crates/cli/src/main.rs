use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dynattack_core::harness::{
    action_stats, audit_dir, gen_synthetic, read_step_log, run_experiment, sweep,
    write_edge_stream, write_sweep, ExperimentConfig, Method, SyntheticParams, SWEEP_FILE,
};

/// Query-budgeted evasion attacks on dynamic-graph link prediction.
#[derive(Parser)]
#[command(name = "dynattack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic dynamic graphs as an edge-stream file.
    Gen {
        #[arg(long)]
        nodes: usize,
        /// Input snapshots per instance; one more is written as ground truth.
        #[arg(long, default_value_t = 10)]
        snapshots: usize,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[arg(long, default_value_t = 0.1)]
        base_density: f64,
        #[arg(long, default_value_t = 0.1)]
        deletion_prob: f64,
        #[arg(long)]
        seed: u64,
        /// Output edge-stream file.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run one attack method and write its step log, summary and curve.
    Attack {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// Override the method named in the config.
        #[arg(long)]
        method: Option<Method>,
    },
    /// Vary the interaction limit from K to max·K and record mean best F1 per method.
    Sweep {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        max_multiplier: u64,
        /// Methods to sweep (default: all).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<Method>,
    },
    /// Mean and variance of action coordinates per method.
    Stats {
        /// Step log (JSON lines).
        log: PathBuf,
    },
    /// Recompute a run's summary from its step log and check budget accounting.
    Audit {
        /// Output directory of an `attack` run.
        dir: PathBuf,
    },
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen {
            nodes,
            snapshots,
            instances,
            base_density,
            deletion_prob,
            seed,
            out,
        } => {
            let params = SyntheticParams {
                nodes,
                snapshots,
                base_density,
                deletion_prob,
            };
            let data = gen_synthetic(params, instances, seed)?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            write_edge_stream(&out, &data)?;
            println!(
                "wrote {} instances over {nodes} nodes to {}",
                data.len(),
                out.display()
            );
        }
        Command::Attack {
            config,
            out,
            method,
        } => {
            let mut config = read_config(&config)?;
            if let Some(method) = method {
                config.method = method;
            }
            let output = run_experiment(&config, &out)?;
            let report = audit_dir(&out).context("post-run audit")?;
            println!(
                "{}: N={} K={} I={} instances={} steps={}",
                output.method.as_str(),
                output.node_count,
                output.k_limit,
                output.interaction_limit,
                report.instances,
                report.steps
            );
            for r in &output.results {
                println!(
                    "  instance {:>3}  clean F1 {:.4}  best F1 {:.4}  queries {}  attempts {}",
                    r.instance, r.clean_f1, r.best_f1, r.queries, r.attempts
                );
            }
            println!(
                "mean clean F1 {:.4}  mean best F1 {:.4}",
                output.mean_clean_f1(),
                output.mean_best_f1()
            );
        }
        Command::Sweep {
            config,
            out,
            max_multiplier,
            methods,
        } => {
            if max_multiplier == 0 {
                bail!("--max-multiplier must be at least 1");
            }
            let config = read_config(&config)?;
            let methods = if methods.is_empty() {
                Method::ALL.to_vec()
            } else {
                methods
            };
            let multipliers: Vec<u64> = (1..=max_multiplier).collect();
            let rows = sweep(&config, &multipliers, &methods)?;
            fs::create_dir_all(&out)?;
            write_sweep(&out.join(SWEEP_FILE), &rows)?;
            for row in &rows {
                println!(
                    "{:<9} I={:<6} mean best F1 {:.4}",
                    row.method, row.interaction_limit, row.mean_best_f1
                );
            }
        }
        Command::Stats { log } => {
            let records = read_step_log(&log)?;
            for s in action_stats(&records)? {
                println!("{} ({} steps)", s.method, s.count);
                for (name, (m, v)) in ["add_u", "add_v", "del_u", "del_v"]
                    .iter()
                    .zip(s.mean.iter().zip(&s.variance))
                {
                    println!("  {name:<6} mean {m:>9.3}  variance {v:>10.3}");
                }
            }
        }
        Command::Audit { dir } => {
            let report = audit_dir(&dir)?;
            println!(
                "audit ok: {} instances, {} steps",
                report.instances, report.steps
            );
        }
    }
    Ok(())
}
