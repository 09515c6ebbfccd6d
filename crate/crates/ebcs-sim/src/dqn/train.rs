//! The learning-phase loop: epsilon-greedy interaction, replay-sampled Huber
//! TD regression with Adam, and periodic target-network synchronization.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::network::{Gradients, QNetwork};
use super::optim::AdamState;
use super::replay::{ReplayBuffer, Transition};
use super::DqnError;
use crate::channel::{RadioParams, RateTable};
use crate::derive_seed;
use crate::env::{BroadcastEnv, EnvError, StateEncoder};
use crate::scenario::{generate_deployment, ScenarioConfig};

/// Training hyperparameters. Defaults: 10,000 episodes of 100 steps,
/// epsilon-greedy at 0.3, learning rate 1e-4, discount 0, batch 32, Huber
/// loss with Adam, replay capacity 10,000.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub discount: f64,
    pub batch_size: usize,
    pub target_sync_interval: usize,
    pub replay_capacity: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 10_000,
            steps_per_episode: 100,
            epsilon: 0.3,
            learning_rate: 1e-4,
            discount: 0.0,
            batch_size: 32,
            target_sync_interval: 1_000,
            replay_capacity: 10_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), DqnError> {
        let err = |field, message| Err(DqnError::InvalidTrainConfig { field, message });
        if !(0.0..=1.0).contains(&self.epsilon) {
            return err("epsilon", format!("must be in [0, 1], got {}", self.epsilon));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return err("discount", format!("must be in [0, 1], got {}", self.discount));
        }
        if !(self.learning_rate > 0.0) {
            return err("learning_rate", format!("must be positive, got {}", self.learning_rate));
        }
        if self.steps_per_episode == 0 {
            return err("steps_per_episode", "must be at least 1".into());
        }
        if self.batch_size == 0 {
            return err("batch_size", "must be at least 1".into());
        }
        if self.target_sync_interval == 0 {
            return err("target_sync_interval", "must be at least 1".into());
        }
        if self.replay_capacity < self.batch_size {
            return err(
                "replay_capacity",
                format!("must hold at least one batch ({})", self.batch_size),
            );
        }
        Ok(())
    }
}

/// Greedy action: index of the maximal Q-value, ties broken toward the lower
/// index (the lower data rate).
pub fn greedy_action(q: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in q.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Epsilon-greedy selection: with probability `epsilon` a uniform index over
/// all actions, otherwise the greedy one.
pub fn epsilon_greedy(q: &[f64], epsilon: f64, rng: &mut impl Rng) -> Result<usize, DqnError> {
    if q.is_empty() {
        return Err(DqnError::EmptyQVector);
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(DqnError::InvalidTrainConfig {
            field: "epsilon",
            message: format!("must be in [0, 1], got {epsilon}"),
        });
    }
    if rng.random::<f64>() < epsilon {
        Ok(rng.random_range(0..q.len()))
    } else {
        Ok(greedy_action(q).expect("non-empty Q-vector"))
    }
}

/// Regression target of one transition: the observed reward plus the
/// discounted maximal target-network value of the successor state. With a
/// zero discount the bootstrap term vanishes and the target is exactly the
/// reward.
pub fn td_target(
    transition: &Transition,
    target_net: &QNetwork,
    discount: f64,
) -> Result<f64, DqnError> {
    if discount == 0.0 {
        return Ok(transition.reward);
    }
    let q = target_net.forward(&transition.next_state)?;
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(transition.reward + discount * max)
}

/// A trained network plus the per-episode mean reward series.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub network: QNetwork,
    pub episode_mean_rewards: Vec<f64>,
}

const TAG_WEIGHT_INIT: u64 = 1;
const TAG_AGENT: u64 = 2;
const TAG_EPISODE_SEEDS: u64 = 3;

/// Runs the learning phase. `make_env` receives the episode index and a
/// deterministic per-episode seed and must yield a fresh learning-phase
/// environment. Everything is reproducible from `config.seed`.
pub fn train<F>(
    mut make_env: F,
    encoder: &StateEncoder,
    rates: &RateTable,
    config: &TrainConfig,
) -> Result<TrainResult, DqnError>
where
    F: FnMut(usize, u64) -> Result<BroadcastEnv, EnvError>,
{
    config.validate()?;
    let mut init_rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, TAG_WEIGHT_INIT));
    let mut agent_rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, TAG_AGENT));
    let mut episode_seed_rng =
        ChaCha12Rng::seed_from_u64(derive_seed(config.seed, TAG_EPISODE_SEEDS));

    let mut net = QNetwork::new(encoder.input_dim(), rates.len(), &mut init_rng);
    let mut target = net.clone();
    let mut adam = AdamState::new(net.num_params());
    let mut replay = ReplayBuffer::new(config.replay_capacity);
    let mut grads = Gradients::zeros_for(&net);
    let mut learner_steps: usize = 0;
    let mut curve = Vec::with_capacity(config.episodes);

    for episode in 0..config.episodes {
        let episode_seed = episode_seed_rng.next_u64();
        let mut env = make_env(episode, episode_seed)?;
        let obs = env.reset()?;
        let mut state = encoder.encode(&obs)?;
        let mut reward_sum = 0.0;

        for _ in 0..config.steps_per_episode {
            let q = net.forward(&state)?;
            let action = epsilon_greedy(&q, config.epsilon, &mut agent_rng)?;
            let (next_obs, record) = env.step(rates.rate_mbps(action))?;
            let next_state = encoder.encode(&next_obs)?;
            reward_sum += record.reward;
            replay.push(Transition {
                state: std::mem::replace(&mut state, next_state.clone()),
                action,
                reward: record.reward,
                next_state,
            });

            if replay.len() >= config.batch_size {
                grads.reset();
                for _ in 0..config.batch_size {
                    let sample = replay.sample(&mut agent_rng).expect("buffer is non-empty");
                    let target_value = td_target(sample, &target, config.discount)?;
                    net.backward_accumulate(
                        &sample.state,
                        sample.action,
                        target_value,
                        &mut grads,
                    )?;
                }
                grads.scale(1.0 / config.batch_size as f64);
                adam.step(&mut net, &grads, config.learning_rate)?;
                learner_steps += 1;
                if learner_steps.is_multiple_of(config.target_sync_interval) {
                    target = net.clone();
                }
            }
        }
        curve.push(reward_sum / config.steps_per_episode as f64);
    }

    Ok(TrainResult { network: net, episode_mean_rewards: curve })
}

/// Per-episode world distribution used in the learning phase: the farthest-AP
/// distance and the BSS radius are drawn uniformly so the training worlds
/// cover the evaluation sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeploymentRanges {
    pub distance_b_m: [f64; 2],
    pub bss_radius_m: [f64; 2],
}

impl Default for DeploymentRanges {
    fn default() -> Self {
        Self { distance_b_m: [10.0, 100.0], bss_radius_m: [5.0, 30.0] }
    }
}

impl DeploymentRanges {
    pub fn validate(&self) -> Result<(), DqnError> {
        for (field, range) in
            [("distance_b_m", self.distance_b_m), ("bss_radius_m", self.bss_radius_m)]
        {
            if !(range[0] <= range[1]) || !(range[0] >= 0.0) {
                return Err(DqnError::InvalidTrainConfig {
                    field: "training_deployments",
                    message: format!("{field} range [{}, {}] is not ordered", range[0], range[1]),
                });
            }
        }
        Ok(())
    }
}

const TAG_WORLD: u64 = 11;
const TAG_SAMPLING: u64 = 12;

/// Standard learning-phase environment factory: per episode, draw the world
/// geometry from `ranges`, generate a deployment, and seed the step sampler,
/// all deterministically from the per-episode seed.
pub fn training_env_factory(
    base: ScenarioConfig,
    radio: RadioParams,
    rates: RateTable,
    ranges: DeploymentRanges,
) -> impl FnMut(usize, u64) -> Result<BroadcastEnv, EnvError> {
    move |_episode, episode_seed| {
        let mut world_rng = ChaCha12Rng::seed_from_u64(derive_seed(episode_seed, TAG_WORLD));
        let [b_lo, b_hi] = ranges.distance_b_m;
        let [s_lo, s_hi] = ranges.bss_radius_m;
        let distance_b_m =
            if b_lo == b_hi { b_lo } else { world_rng.random_range(b_lo..=b_hi) };
        let bss_radius_m = if s_lo == s_hi { s_lo } else { world_rng.random_range(s_lo..=s_hi) };
        let scenario = ScenarioConfig { distance_b_m, bss_radius_m, ..base.clone() };
        let deployment = generate_deployment(&scenario, &mut world_rng)?;
        let sampling_rng = ChaCha12Rng::seed_from_u64(derive_seed(episode_seed, TAG_SAMPLING));
        BroadcastEnv::new(deployment, radio, rates.clone(), scenario.frames_per_step, sampling_rng)
    }
}
