//! Batch front end: `train` runs the learning phase and persists weights,
//! `eval` and `sweep-compare` run application-phase test simulations into
//! metrics CSVs, `gen-deployments` exports reproducible worlds.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use ebcs_sim::config::SweepAxis;
use ebcs_sim::dqn::{train, training_env_factory, PolicyFile};
use ebcs_sim::eval::{
    run_eval, run_eval_on_deployments, run_sweep_compare, SweepRow, METRICS_CSV_HEADER,
};
use ebcs_sim::policy::{Method, PolicyError};
use ebcs_sim::scenario::{generate_deployment, DeploymentSet};
use ebcs_sim::{derive_seed, RatePolicy, RunConfig};

#[derive(Parser)]
#[command(name = "ebcs", version, about = "ACK-less rate adaptation simulator for broadcast WLANs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// TOML run configuration; every field is optional and defaults to the
    /// reference setup
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct SweepOpts {
    /// Sweep axis: distance | radius
    #[arg(long)]
    sweep: Option<SweepAxis>,

    /// Comma-separated sweep values in meters
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Learning phase: train the value network, write weights and the
    /// learning-curve CSV
    Train {
        #[command(flatten)]
        common: CommonOpts,

        /// Episode-count override
        #[arg(long)]
        episodes: Option<usize>,

        /// Weights output path
        #[arg(long)]
        out: Option<PathBuf>,

        /// Learning-curve CSV path
        #[arg(long)]
        curve: Option<PathBuf>,
    },

    /// Application phase: evaluate one method over the configured sweep
    Eval {
        #[command(flatten)]
        common: CommonOpts,

        /// minrate | fore-rule | fore-drl
        #[arg(long, value_parser = parse_method)]
        method: Option<Method>,

        /// Weights file (required by fore-drl)
        #[arg(long)]
        weights: Option<PathBuf>,

        /// Metrics CSV output path
        #[arg(long)]
        out: Option<PathBuf>,

        #[command(flatten)]
        sweep: SweepOpts,

        /// Replay pre-generated worlds from this file instead of sweeping
        #[arg(long)]
        deployments: Option<PathBuf>,
    },

    /// Evaluate all three methods over shared worlds into one merged CSV
    SweepCompare {
        #[command(flatten)]
        common: CommonOpts,

        /// Weights file for the learned method
        #[arg(long)]
        weights: Option<PathBuf>,

        /// Metrics CSV output path
        #[arg(long)]
        out: Option<PathBuf>,

        #[command(flatten)]
        sweep: SweepOpts,
    },

    /// Generate deployments for later replay
    GenDeployments {
        #[command(flatten)]
        common: CommonOpts,

        /// How many worlds to generate (defaults to eval.episodes)
        #[arg(long)]
        count: Option<usize>,

        /// Output path
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_method(s: &str) -> Result<Method, PolicyError> {
    s.parse()
}

fn load_config(common: &CommonOpts) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn apply_sweep_overrides(config: &mut RunConfig, sweep: &SweepOpts) -> Result<()> {
    if let Some(axis) = sweep.sweep {
        config.eval.sweep = axis;
    }
    if let Some(values) = &sweep.values {
        config.eval.values = Some(values.clone());
    }
    config.validate().context("configuration invalid after command-line overrides")?;
    Ok(())
}

fn build_policy(method: Method, config: &RunConfig, weights: Option<&Path>) -> Result<RatePolicy> {
    let rates = config.rate_table().context("building rate table")?;
    match method {
        Method::MinRate => Ok(RatePolicy::min_rate(rates)),
        Method::ForeRule => Ok(RatePolicy::fore_rule(config.radio, rates)),
        Method::ForeDrl => {
            let path = weights.map(Path::to_path_buf).unwrap_or_else(|| {
                config.output.weights_path.clone()
            });
            if !path.exists() {
                bail!(
                    "fore-drl needs a weights file; {} does not exist (train first or pass --weights)",
                    path.display()
                );
            }
            let file = PolicyFile::load(&path)
                .with_context(|| format!("loading weights {}", path.display()))?;
            Ok(RatePolicy::fore_drl(&file).context("weights file is inconsistent")?)
        }
    }
}

fn write_metrics(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(METRICS_CSV_HEADER.split(','))?;
    for row in rows {
        writer.write_record(row.csv_record())?;
    }
    writer.flush()?;
    Ok(())
}

fn print_rows(rows: &[SweepRow]) {
    for r in rows {
        println!(
            "{}={:<6} {:<9} throughput {:>9.1} Mbit/s  success {:.4}  mean rate {:>6.1} ({} episodes)",
            r.sweep_axis,
            r.sweep_value,
            r.method,
            r.mean_throughput_mbps,
            r.mean_success_ratio,
            r.mean_selected_rate_mbps,
            r.episodes
        );
    }
}

fn cmd_train(
    common: &CommonOpts,
    episodes: Option<usize>,
    out: Option<PathBuf>,
    curve: Option<PathBuf>,
) -> Result<()> {
    let mut config = load_config(common)?;
    if let Some(episodes) = episodes {
        config.train.episodes = episodes;
    }
    config.train.seed = config.seed;
    config.validate().context("invalid configuration")?;

    let rates = config.rate_table()?;
    let encoder = config.state_encoder();
    let factory = training_env_factory(
        config.scenario.clone(),
        config.radio,
        rates.clone(),
        config.training_deployments,
    );
    let result = train(factory, &encoder, &rates, &config.train).context("training failed")?;

    let weights_path = out.unwrap_or_else(|| config.output.weights_path.clone());
    PolicyFile::new(&result.network, &encoder, &rates)
        .save(&weights_path)
        .with_context(|| format!("writing weights {}", weights_path.display()))?;

    let curve_path = curve.unwrap_or_else(|| config.output.curve_path.clone());
    let mut writer = csv::Writer::from_path(&curve_path)
        .with_context(|| format!("creating {}", curve_path.display()))?;
    writer.write_record(["episode", "mean_reward"])?;
    for (i, r) in result.episode_mean_rewards.iter().enumerate() {
        writer.write_record([i.to_string(), format!("{r:.6}")])?;
    }
    writer.flush()?;

    let curve_points = result.episode_mean_rewards.len();
    let tail = curve_points.min(1_000);
    if tail > 0 {
        let mean: f64 =
            result.episode_mean_rewards[curve_points - tail..].iter().sum::<f64>() / tail as f64;
        println!("final-{tail}-episode mean reward: {mean:.4}");
    }
    println!("weights: {}", weights_path.display());
    println!("learning curve: {} ({} episodes)", curve_path.display(), curve_points);
    Ok(())
}

fn cmd_eval(
    common: &CommonOpts,
    method: Option<Method>,
    weights: Option<PathBuf>,
    out: Option<PathBuf>,
    sweep: &SweepOpts,
    deployments: Option<PathBuf>,
) -> Result<()> {
    let mut config = load_config(common)?;
    apply_sweep_overrides(&mut config, sweep)?;
    let method = method.or(config.method).unwrap_or(Method::MinRate);
    let policy = build_policy(method, &config, weights.as_deref())?;

    let rows = match deployments {
        Some(path) => {
            let set = DeploymentSet::load(&path)
                .with_context(|| format!("loading deployments {}", path.display()))?;
            vec![run_eval_on_deployments(&config, &policy, &set)?]
        }
        None => run_eval(&config, &policy)?,
    };

    let out = out.unwrap_or_else(|| config.output.metrics_path.clone());
    write_metrics(&out, &rows)?;
    print_rows(&rows);
    println!("metrics: {}", out.display());
    Ok(())
}

fn cmd_sweep_compare(
    common: &CommonOpts,
    weights: Option<PathBuf>,
    out: Option<PathBuf>,
    sweep: &SweepOpts,
) -> Result<()> {
    let mut config = load_config(common)?;
    apply_sweep_overrides(&mut config, sweep)?;
    let policies = vec![
        build_policy(Method::MinRate, &config, None)?,
        build_policy(Method::ForeRule, &config, None)?,
        build_policy(Method::ForeDrl, &config, weights.as_deref())?,
    ];
    let rows = run_sweep_compare(&config, &policies)?;
    let out = out.unwrap_or_else(|| config.output.metrics_path.clone());
    write_metrics(&out, &rows)?;
    print_rows(&rows);
    println!("metrics: {}", out.display());
    Ok(())
}

fn cmd_gen_deployments(
    common: &CommonOpts,
    count: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let config = load_config(common)?;
    let count = count.unwrap_or(config.eval.episodes);
    let seed = common.seed.unwrap_or(config.scenario.seed);
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, 0));
    let deployments = (0..count)
        .map(|_| generate_deployment(&config.scenario, &mut rng))
        .collect::<Result<Vec<_>, _>>()
        .context("generating deployments")?;
    let set = DeploymentSet { scenario: config.scenario.clone(), seed, deployments };
    let out = out.unwrap_or_else(|| config.output.deployments_path.clone());
    set.save(&out).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {count} deployments to {}", out.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train { common, episodes, out, curve } => {
            cmd_train(&common, episodes, out, curve)
        }
        Command::Eval { common, method, weights, out, sweep, deployments } => {
            cmd_eval(&common, method, weights, out, &sweep, deployments)
        }
        Command::SweepCompare { common, weights, out, sweep } => {
            cmd_sweep_compare(&common, weights, out, &sweep)
        }
        Command::GenDeployments { common, count, out } => {
            cmd_gen_deployments(&common, count, out)
        }
    }
}
