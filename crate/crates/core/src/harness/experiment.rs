use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::ActorCritic;
use crate::error::{Error, Result};
use crate::graph::{perturbation_budget, AttackBudget};
use crate::metp::{
    random_attack_baseline, run_metp, AgentStrategy, AttackInstance, InstanceData, InstanceResult,
    StepRecord,
};

use super::config::{DatasetConfig, ExperimentConfig, InteractionConfig, Method};
use super::edge_stream::load_edge_stream;
use super::log::{write_step_log, write_summary, SummaryRow};
use super::synthetic::{gen_synthetic, SyntheticParams};

pub const STEP_LOG_FILE: &str = "steps.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CURVE_FILE: &str = "curve.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SWEEP_FILE: &str = "sweep.csv";

/// Everything produced by one run, before it is written anywhere.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub method: Method,
    pub node_count: usize,
    pub k_limit: usize,
    pub interaction_limit: u64,
    pub records: Vec<StepRecord>,
    pub results: Vec<InstanceResult>,
}

impl RunOutput {
    pub fn mean_best_f1(&self) -> f64 {
        mean(self.results.iter().map(|r| r.best_f1))
    }

    pub fn mean_clean_f1(&self) -> f64 {
        mean(self.results.iter().map(|r| r.clean_f1))
    }

    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        self.results
            .iter()
            .map(|r| SummaryRow::from_result(self.method.as_str(), r))
            .collect()
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Independent sub-seed for stream `index` of a base seed (splitmix64 finalizer).
pub(crate) fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn load_instances(config: &ExperimentConfig) -> Result<Vec<InstanceData>> {
    let data = match &config.dataset {
        DatasetConfig::Synthetic(s) => gen_synthetic(
            SyntheticParams {
                nodes: s.nodes,
                snapshots: s.snapshots,
                base_density: s.base_density,
                deletion_prob: s.deletion_prob,
            },
            config.instances,
            config.seeds.data,
        )?,
        DatasetConfig::EdgeStream { path, snapshots } => {
            let mut all = load_edge_stream(path, *snapshots)?;
            if all.len() < config.instances {
                return Err(Error::Config(format!(
                    "{} holds {} instances, {} requested",
                    path.display(),
                    all.len(),
                    config.instances
                )));
            }
            all.truncate(config.instances);
            all
        }
    };
    let n = data[0].clean.node_count();
    if data.iter().any(|d| d.clean.node_count() != n) {
        return Err(Error::Config(
            "all instances must share one node set".into(),
        ));
    }
    Ok(data)
}

fn build_instances(
    config: &ExperimentConfig,
    data: Vec<InstanceData>,
) -> Result<Vec<AttackInstance>> {
    let n = data[0].clean.node_count();
    let k = perturbation_budget(n, config.delta, config.n_cap);
    let budget = AttackBudget::new(n, config.delta, config.n_cap, config.interaction.resolve(k))?;
    data.into_iter()
        .enumerate()
        .map(|(i, d)| {
            AttackInstance::new(
                i,
                d,
                config.predictor,
                budget,
                derive_seed(config.seeds.feature, i as u64),
            )
        })
        .collect()
}

/// Runs the configured method in memory.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let data = load_instances(config)?;
    let mut instances = build_instances(config, data)?;
    let node_count = instances[0].node_count();
    let budget = *instances[0].budget();

    let mut records = Vec::new();
    let mut sink = |r: &StepRecord| {
        records.push(r.clone());
        Ok(())
    };
    let seeds = config.seeds;
    let results = match config.method {
        Method::GseMetp => {
            let agent = ActorCritic::new(node_count, config.agent.clone(), seeds.init)?;
            let mut strategy =
                AgentStrategy::new(Method::GseMetp.as_str(), agent, seeds.exploration);
            run_metp(&mut instances, &mut strategy, &mut sink)?
        }
        Method::Gse => {
            let mut results = Vec::with_capacity(instances.len());
            for (i, instance) in instances.iter_mut().enumerate() {
                let i = i as u64;
                let agent =
                    ActorCritic::new(node_count, config.agent.clone(), derive_seed(seeds.init, i))?;
                let mut strategy = AgentStrategy::new(
                    Method::Gse.as_str(),
                    agent,
                    derive_seed(seeds.exploration, i),
                );
                results.extend(run_metp(
                    std::slice::from_mut(instance),
                    &mut strategy,
                    &mut sink,
                )?);
            }
            results
        }
        Method::Random => {
            for (i, instance) in instances.iter_mut().enumerate() {
                random_attack_baseline(
                    instance,
                    derive_seed(seeds.exploration, i as u64),
                    &mut sink,
                )?;
            }
            instances.iter().map(AttackInstance::result).collect()
        }
    };

    Ok(RunOutput {
        method: config.method,
        node_count,
        k_limit: budget.k_limit,
        interaction_limit: budget.interaction_limit,
        records,
        results,
    })
}

/// Mean best F1 across instances as a function of queries spent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub method: String,
    pub queries: u64,
    pub mean_best_f1: f64,
}

/// Best-so-far curve reconstructed from a step log. Query 1 is the clean baseline.
pub fn anytime_curve(output: &RunOutput) -> Vec<CurvePoint> {
    let limit = output.interaction_limit;
    let mut per_instance: Vec<Vec<f64>> = output
        .results
        .iter()
        .map(|r| vec![r.clean_f1; limit as usize])
        .collect();
    let index: std::collections::HashMap<usize, usize> = output
        .results
        .iter()
        .enumerate()
        .map(|(pos, r)| (r.instance, pos))
        .collect();
    for r in &output.records {
        if let Some(&pos) = index.get(&r.instance) {
            let slot = (r.queries - 1) as usize;
            if slot < per_instance[pos].len() {
                per_instance[pos][slot] = r.f1;
            }
        }
    }
    for curve in &mut per_instance {
        for q in 1..curve.len() {
            curve[q] = curve[q].min(curve[q - 1]);
        }
    }
    (0..limit as usize)
        .map(|q| CurvePoint {
            method: output.method.as_str().to_string(),
            queries: q as u64 + 1,
            mean_best_f1: mean(per_instance.iter().map(|c| c[q])),
        })
        .collect()
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    method: &'static str,
    node_count: usize,
    k_limit: usize,
    interaction_limit: u64,
    instances: usize,
    steps: usize,
    mean_clean_f1: f64,
    mean_best_f1: f64,
    deterministic: bool,
}

/// Runs the configured method and writes the step log, summary, anytime
/// curve and manifest into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    let output = execute(config)?;
    fs::create_dir_all(out_dir)?;
    write_step_log(&out_dir.join(STEP_LOG_FILE), &output.records)?;
    write_summary(&out_dir.join(SUMMARY_FILE), &output.summary_rows())?;

    let mut curve = csv::Writer::from_path(out_dir.join(CURVE_FILE))?;
    for point in anytime_curve(&output) {
        curve.serialize(point)?;
    }
    curve.flush()?;

    let manifest = Manifest {
        config,
        method: output.method.as_str(),
        node_count: output.node_count,
        k_limit: output.k_limit,
        interaction_limit: output.interaction_limit,
        instances: output.results.len(),
        steps: output.records.len(),
        mean_clean_f1: output.mean_clean_f1(),
        mean_best_f1: output.mean_best_f1(),
        deterministic: true,
    };
    fs::write(
        out_dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(output)
}

/// One point of the interaction-budget sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: String,
    pub multiplier: u64,
    pub interaction_limit: u64,
    pub mean_clean_f1: f64,
    pub mean_best_f1: f64,
}

/// Repeats the run for `I = c·K` with each multiplier `c` and each method.
pub fn sweep(
    config: &ExperimentConfig,
    multipliers: &[u64],
    methods: &[Method],
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &method in methods {
        for &c in multipliers {
            let mut run = config.clone();
            run.method = method;
            run.interaction = InteractionConfig::MultipleOfK(c);
            let output = execute(&run)?;
            rows.push(SweepRow {
                method: method.as_str().to_string(),
                multiplier: c,
                interaction_limit: output.interaction_limit,
                mean_clean_f1: output.mean_clean_f1(),
                mean_best_f1: output.mean_best_f1(),
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
