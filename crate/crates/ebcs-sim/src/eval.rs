//! Application-phase evaluation: sweeps over deployment geometry, paired
//! random worlds across compared methods, and CSV-ready summary rows.
//!
//! Episode worlds and sampling sequences are seeded from (run seed, sweep
//! point, episode index) only, never from the policy, so every method sees
//! identical deployments and identical overheard subsets: compared curves
//! differ only through the selected rates.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{RadioParams, RateTable};
use crate::config::{RunConfig, SweepAxis};
use crate::derive_seed;
use crate::env::{ApplicationEnv, BroadcastEnv, EnvError, EpisodeMetrics};
use crate::policy::{PolicyError, RatePolicy};
use crate::scenario::{generate_deployment, DeploymentSet, ScenarioConfig, ScenarioError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("deployment set has no deployments")]
    EmptyDeploymentSet,
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Header of the metrics CSV emitted by evaluations and sweeps.
pub const METRICS_CSV_HEADER: &str = "sweep_axis,sweep_value,method,mean_throughput_mbps,\
std_throughput_mbps,mean_success_ratio,std_success_ratio,episodes";

/// One aggregated sweep point for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_axis: SweepAxis,
    pub sweep_value: f64,
    pub method: &'static str,
    pub mean_throughput_mbps: f64,
    pub std_throughput_mbps: f64,
    pub mean_success_ratio: f64,
    pub std_success_ratio: f64,
    pub episodes: usize,
    /// Mean selected rate across all steps; kept out of the CSV contract.
    pub mean_selected_rate_mbps: f64,
}

impl SweepRow {
    /// Field values in header order.
    pub fn csv_record(&self) -> [String; 8] {
        [
            self.sweep_axis.name().to_string(),
            format_value(self.sweep_value),
            self.method.to_string(),
            format_value(self.mean_throughput_mbps),
            format_value(self.std_throughput_mbps),
            format_value(self.mean_success_ratio),
            format_value(self.std_success_ratio),
            self.episodes.to_string(),
        ]
    }
}

fn format_value(v: f64) -> String {
    format!("{v:.6}")
}

/// Renders rows under [`METRICS_CSV_HEADER`].
pub fn metrics_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_record().join(","));
        out.push('\n');
    }
    out
}

/// Outcome of one application-phase episode.
#[derive(Debug, Clone)]
pub struct EpisodeSummary {
    pub metrics: EpisodeMetrics,
    pub mean_selected_rate_mbps: f64,
    pub selected_rates_mbps: Vec<f64>,
}

/// Drives one episode through the application-phase interface: the policy
/// receives observations only, the harness collects metrics afterwards.
pub fn run_episode(
    policy: &RatePolicy,
    env: BroadcastEnv,
    steps: usize,
) -> Result<EpisodeSummary, EvalError> {
    let mut app = ApplicationEnv::new(env);
    let mut obs = app.reset()?;
    let mut selected = Vec::with_capacity(steps);
    for _ in 0..steps {
        let rate = policy.select_rate(&obs)?;
        selected.push(rate);
        obs = app.step(rate)?;
    }
    let mean_rate = if selected.is_empty() {
        0.0
    } else {
        selected.iter().sum::<f64>() / selected.len() as f64
    };
    Ok(EpisodeSummary {
        metrics: app.metrics(),
        mean_selected_rate_mbps: mean_rate,
        selected_rates_mbps: selected,
    })
}

const TAG_EVAL: u64 = 20;
const TAG_WORLD: u64 = 21;
const TAG_SAMPLING: u64 = 22;

/// Seed of one (sweep point, episode) cell; independent of the method under
/// test so compared methods share worlds.
pub fn episode_seed(run_seed: u64, value_index: usize, episode: usize) -> u64 {
    let point = derive_seed(derive_seed(run_seed, TAG_EVAL), value_index as u64);
    derive_seed(point, episode as u64)
}

fn scenario_at(base: &ScenarioConfig, axis: SweepAxis, value: f64, eval: &crate::config::EvalConfig) -> ScenarioConfig {
    match axis {
        SweepAxis::Distance => ScenarioConfig {
            distance_b_m: value,
            bss_radius_m: eval.fixed_bss_radius_m,
            ..base.clone()
        },
        SweepAxis::Radius => ScenarioConfig {
            distance_b_m: eval.fixed_distance_b_m,
            bss_radius_m: value,
            ..base.clone()
        },
    }
}

fn build_env(
    scenario: &ScenarioConfig,
    radio: &RadioParams,
    rates: &RateTable,
    seed: u64,
) -> Result<BroadcastEnv, EvalError> {
    let mut world_rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, TAG_WORLD));
    let deployment = generate_deployment(scenario, &mut world_rng)?;
    let sampling_rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, TAG_SAMPLING));
    Ok(BroadcastEnv::new(
        deployment,
        *radio,
        rates.clone(),
        scenario.frames_per_step,
        sampling_rng,
    )?)
}

fn aggregate(
    axis: SweepAxis,
    value: f64,
    method: &'static str,
    summaries: &[EpisodeSummary],
) -> SweepRow {
    let n = summaries.len();
    let tps: Vec<f64> =
        summaries.iter().map(|s| s.metrics.mean_aggregated_throughput_mbps).collect();
    let srs: Vec<f64> = summaries.iter().map(|s| s.metrics.mean_success_ratio).collect();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let std = |xs: &[f64], m: f64| {
        if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
        }
    };
    let mean_tp = mean(&tps);
    let mean_sr = mean(&srs);
    SweepRow {
        sweep_axis: axis,
        sweep_value: value,
        method,
        mean_throughput_mbps: mean_tp,
        std_throughput_mbps: std(&tps, mean_tp),
        mean_success_ratio: mean_sr,
        std_success_ratio: std(&srs, mean_sr),
        episodes: n,
        mean_selected_rate_mbps: mean(
            &summaries.iter().map(|s| s.mean_selected_rate_mbps).collect::<Vec<_>>(),
        ),
    }
}

/// Evaluates one policy over the configured sweep: `eval.episodes` fresh
/// worlds per sweep value, stepped for `eval.steps` steps each in
/// application-phase mode. Episodes run on a worker pool; results are merged
/// in episode order so the output is deterministic regardless of worker
/// count.
pub fn run_eval(config: &RunConfig, policy: &RatePolicy) -> Result<Vec<SweepRow>, EvalError> {
    let rates = config.rate_table()?;
    let mut rows = Vec::new();
    for (value_index, value) in config.eval.sweep_values().iter().enumerate() {
        let scenario = scenario_at(&config.scenario, config.eval.sweep, *value, &config.eval);
        let summaries: Vec<EpisodeSummary> = (0..config.eval.episodes)
            .into_par_iter()
            .map(|episode| {
                let seed = episode_seed(config.seed, value_index, episode);
                let env = build_env(&scenario, &config.radio, &rates, seed)?;
                run_episode(policy, env, config.eval.steps)
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        rows.push(aggregate(config.eval.sweep, *value, policy.method().name(), &summaries));
    }
    Ok(rows)
}

/// Evaluates one policy on pre-generated worlds loaded from a deployment
/// file; the row is labeled with the geometry the file was generated with.
pub fn run_eval_on_deployments(
    config: &RunConfig,
    policy: &RatePolicy,
    set: &DeploymentSet,
) -> Result<SweepRow, EvalError> {
    if set.deployments.is_empty() {
        return Err(EvalError::EmptyDeploymentSet);
    }
    let rates = config.rate_table()?;
    let value = match config.eval.sweep {
        SweepAxis::Distance => set.scenario.distance_b_m,
        SweepAxis::Radius => set.scenario.bss_radius_m,
    };
    let summaries: Vec<EpisodeSummary> = set
        .deployments
        .par_iter()
        .enumerate()
        .map(|(episode, deployment)| {
            let seed = episode_seed(config.seed, 0, episode);
            let sampling_rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, TAG_SAMPLING));
            let env = BroadcastEnv::new(
                deployment.clone(),
                config.radio,
                rates.clone(),
                set.scenario.frames_per_step,
                sampling_rng,
            )?;
            run_episode(policy, env, config.eval.steps)
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(aggregate(config.eval.sweep, value, policy.method().name(), &summaries))
}

/// Runs every supplied policy over the same sweep with shared worlds and
/// concatenates the rows method by method.
pub fn run_sweep_compare(
    config: &RunConfig,
    policies: &[RatePolicy],
) -> Result<Vec<SweepRow>, EvalError> {
    let mut rows = Vec::new();
    for policy in policies {
        rows.extend(run_eval(config, policy)?);
    }
    Ok(rows)
}
