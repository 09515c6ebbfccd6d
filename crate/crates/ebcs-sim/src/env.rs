//! Step/episode engine: per-step overheard observations, broadcast reception
//! over the whole station population, reward and throughput accounting, and
//! the learning-phase vs application-phase split.
//!
//! [`BroadcastEnv`] is the learning-phase surface: `step` returns the full
//! [`StepRecord`] including reward and success counts. [`ApplicationEnv`]
//! wraps it for the application phase: its `step` hands back only the next
//! [`Observation`], so a policy driven through it cannot read outcomes even
//! by accident; episode metrics are collected internally for the harness.

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{
    broadcast_reception_ok, rss_at_observer_dbm, ChannelError, RadioParams, RateTable,
    MIN_DISTANCE_M,
};
use crate::scenario::{sample_uplink_stas, Deployment, ScenarioError};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("data rate {0} Mbit/s is not in the rate table")]
    RateNotInTable(f64),
    #[error("step called before reset")]
    StepBeforeReset,
    #[error("success count {count} exceeds station total {total}")]
    SuccessCountExceedsTotal { count: usize, total: usize },
    #[error("rates must be positive, got action {action} Mbit/s with max {max} Mbit/s")]
    NonPositiveRate { action: f64, max: f64 },
    #[error("BSS id {bssid} outside 1..={num_bss}")]
    BssIdOutOfRange { bssid: u32, num_bss: usize },
    #[error("observation length {got} does not match the encoder's {expected} frames")]
    ObservationLength { expected: usize, got: usize },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// What the broadcast AP sees in one step: the RSS of the overheard uplink
/// frames and the BSS identifier carried in each frame header. Entry `j` of
/// both lists describes the same station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub rss_dbm: Vec<f64>,
    pub bssid: Vec<u32>,
}

/// Outcome of one broadcast step, visible in the learning phase only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub action_rate_mbps: f64,
    pub success_count: usize,
    pub reward: f64,
    pub aggregated_throughput_mbps: f64,
    /// Reception outcome of the stations whose frames produced the
    /// observation this step acted on.
    pub per_sampled_sta_success: Vec<bool>,
}

/// Episode-level summary over all steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub mean_aggregated_throughput_mbps: f64,
    pub mean_success_ratio: f64,
    pub steps: usize,
}

impl EpisodeMetrics {
    pub fn from_records(records: &[StepRecord], total_stas: usize) -> Self {
        let steps = records.len();
        if steps == 0 {
            return Self { mean_aggregated_throughput_mbps: 0.0, mean_success_ratio: 0.0, steps };
        }
        let tp: f64 = records.iter().map(|r| r.aggregated_throughput_mbps).sum();
        let sr: f64 =
            records.iter().map(|r| r.success_count as f64 / total_stas as f64).sum();
        Self {
            mean_aggregated_throughput_mbps: tp / steps as f64,
            mean_success_ratio: sr / steps as f64,
            steps,
        }
    }
}

/// Reward for one broadcast step: a full house earns the normalized rate,
/// anything less is penalized by the normalized rate scaled by the failure
/// fraction. Always in [-1, 1], and positive exactly when every station
/// received the frame.
pub fn reward(
    action_rate_mbps: f64,
    success_count: usize,
    total: usize,
    max_rate_mbps: f64,
) -> Result<f64, EnvError> {
    if !(action_rate_mbps > 0.0) || !(max_rate_mbps > 0.0) {
        return Err(EnvError::NonPositiveRate { action: action_rate_mbps, max: max_rate_mbps });
    }
    if success_count > total {
        return Err(EnvError::SuccessCountExceedsTotal { count: success_count, total });
    }
    let normalized = action_rate_mbps / max_rate_mbps;
    if success_count == total {
        Ok(normalized)
    } else {
        Ok(-normalized * (1.0 - success_count as f64 / total as f64))
    }
}

/// RSS normalization window for the network input, in dBm.
pub const RSS_NORM_MIN_DBM: f64 = -100.0;
pub const RSS_NORM_MAX_DBM: f64 = -30.0;

/// Maps observations onto fixed-length feature vectors: per overheard frame,
/// one RSS value affinely squashed onto [-1, 1] (clipped outside the window)
/// followed by a one-hot BSS indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEncoder {
    pub frames_per_step: usize,
    pub num_bss: usize,
    pub rss_min_dbm: f64,
    pub rss_max_dbm: f64,
}

impl StateEncoder {
    pub fn new(frames_per_step: usize, num_bss: usize) -> Self {
        Self {
            frames_per_step,
            num_bss,
            rss_min_dbm: RSS_NORM_MIN_DBM,
            rss_max_dbm: RSS_NORM_MAX_DBM,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.frames_per_step * (1 + self.num_bss)
    }

    pub fn encode(&self, obs: &Observation) -> Result<Vec<f64>, EnvError> {
        if obs.rss_dbm.len() != self.frames_per_step || obs.bssid.len() != self.frames_per_step {
            return Err(EnvError::ObservationLength {
                expected: self.frames_per_step,
                got: obs.rss_dbm.len().max(obs.bssid.len()),
            });
        }
        let mut features = Vec::with_capacity(self.input_dim());
        let span = self.rss_max_dbm - self.rss_min_dbm;
        for (&rss, &bssid) in obs.rss_dbm.iter().zip(&obs.bssid) {
            if bssid < 1 || bssid as usize > self.num_bss {
                return Err(EnvError::BssIdOutOfRange { bssid, num_bss: self.num_bss });
            }
            let v = 2.0 * (rss - self.rss_min_dbm) / span - 1.0;
            features.push(v.clamp(-1.0, 1.0));
            for b in 1..=self.num_bss {
                features.push(if bssid as usize == b { 1.0 } else { 0.0 });
            }
        }
        Ok(features)
    }
}

type RewardFn = fn(f64, usize, usize, f64) -> f64;

fn default_reward(action: f64, n: usize, total: usize, max: f64) -> f64 {
    reward(action, n, total, max).expect("env keeps n <= total and rates positive")
}

/// The learning-phase environment: a fixed deployment stepped with chosen
/// data rates. Reception is deterministic given the deployment, so per-rate
/// outcomes are resolved once at construction; only the overheard subset is
/// random per step.
#[derive(Debug, Clone)]
pub struct BroadcastEnv {
    deployment: Deployment,
    rates: RateTable,
    rng: ChaCha12Rng,
    frames_per_step: usize,
    /// RSS of each station's uplink frame as overheard at the broadcast AP.
    sta_rss_dbm: Vec<f64>,
    /// can_receive[sta][rate index]
    can_receive: Vec<Vec<bool>>,
    /// Stations succeeding at each rate index.
    success_at: Vec<usize>,
    current_sample: Option<Vec<usize>>,
    reward_fn: RewardFn,
}

impl BroadcastEnv {
    pub fn new(
        deployment: Deployment,
        radio: RadioParams,
        rates: RateTable,
        frames_per_step: usize,
        rng: ChaCha12Rng,
    ) -> Result<Self, EnvError> {
        let mut sta_rss_dbm = Vec::with_capacity(deployment.num_stas());
        let mut can_receive = Vec::with_capacity(deployment.num_stas());
        let mut success_at = vec![0usize; rates.len()];
        for sta in &deployment.stas {
            // co-located placements collapse onto the clamp floor
            let d = sta.position.distance_to(&deployment.ebcs_ap).max(MIN_DISTANCE_M);
            sta_rss_dbm.push(rss_at_observer_dbm(d, &radio)?);
            let row = rates
                .rates_mbps()
                .iter()
                .map(|&r| broadcast_reception_ok(d, r, &radio))
                .collect::<Result<Vec<_>, _>>()?;
            for (k, &ok) in row.iter().enumerate() {
                if ok {
                    success_at[k] += 1;
                }
            }
            can_receive.push(row);
        }
        Ok(Self {
            deployment,
            rates,
            rng,
            frames_per_step,
            sta_rss_dbm,
            can_receive,
            success_at,
            current_sample: None,
            reward_fn: default_reward,
        })
    }

    /// Replaces the reward computation. Diagnostic hook: lets tests verify
    /// that application-phase policy decisions cannot depend on rewards.
    pub fn with_reward_fn(mut self, f: RewardFn) -> Self {
        self.reward_fn = f;
        self
    }

    pub fn deployment(&self) -> &Deployment {
        &self.deployment
    }

    pub fn rates(&self) -> &RateTable {
        &self.rates
    }

    pub fn num_stas(&self) -> usize {
        self.deployment.num_stas()
    }

    fn observe(&self, sample: &[usize]) -> Observation {
        Observation {
            rss_dbm: sample.iter().map(|&i| self.sta_rss_dbm[i]).collect(),
            bssid: sample.iter().map(|&i| self.deployment.stas[i].bss).collect(),
        }
    }

    /// Draws a fresh overheard subset and returns its observation.
    pub fn reset(&mut self) -> Result<Observation, EnvError> {
        let sample = sample_uplink_stas(&self.deployment, self.frames_per_step, &mut self.rng)?;
        let obs = self.observe(&sample);
        self.current_sample = Some(sample);
        Ok(obs)
    }

    /// Broadcasts once at `rate_mbps`, resolves reception at every station,
    /// and hands back the next observation together with the full outcome.
    pub fn step(&mut self, rate_mbps: f64) -> Result<(Observation, StepRecord), EnvError> {
        let sample = self.current_sample.take().ok_or(EnvError::StepBeforeReset)?;
        let Some(k) = self.rates.index_of(rate_mbps) else {
            self.current_sample = Some(sample);
            return Err(EnvError::RateNotInTable(rate_mbps));
        };
        let n = self.success_at[k];
        let record = StepRecord {
            action_rate_mbps: rate_mbps,
            success_count: n,
            reward: (self.reward_fn)(
                rate_mbps,
                n,
                self.num_stas(),
                self.rates.max_rate_mbps(),
            ),
            aggregated_throughput_mbps: rate_mbps * n as f64,
            per_sampled_sta_success: sample.iter().map(|&i| self.can_receive[i][k]).collect(),
        };
        let next = sample_uplink_stas(&self.deployment, self.frames_per_step, &mut self.rng)?;
        let obs = self.observe(&next);
        self.current_sample = Some(next);
        Ok((obs, record))
    }
}

/// Application-phase wrapper: the stepping interface exposes observations
/// only. Outcomes are accumulated internally and surface solely as
/// end-of-episode metrics for the evaluation harness.
#[derive(Debug, Clone)]
pub struct ApplicationEnv {
    inner: BroadcastEnv,
    records: Vec<StepRecord>,
}

impl ApplicationEnv {
    pub fn new(inner: BroadcastEnv) -> Self {
        Self { inner, records: Vec::new() }
    }

    pub fn reset(&mut self) -> Result<Observation, EnvError> {
        self.records.clear();
        self.inner.reset()
    }

    /// Applies a rate and returns only the next observation.
    pub fn step(&mut self, rate_mbps: f64) -> Result<Observation, EnvError> {
        let (obs, record) = self.inner.step(rate_mbps)?;
        self.records.push(record);
        Ok(obs)
    }

    pub fn steps_taken(&self) -> usize {
        self.records.len()
    }

    pub fn metrics(&self) -> EpisodeMetrics {
        EpisodeMetrics::from_records(&self.records, self.inner.num_stas())
    }

    pub fn mean_selected_rate_mbps(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.action_rate_mbps).sum::<f64>() / self.records.len() as f64
    }
}

/// Column header of an exported step trace.
pub const STEP_TRACE_CSV_HEADER: &str =
    "step,action_rate_mbps,success_count,reward,aggregated_throughput_mbps";

/// Renders step records as CSV rows under [`STEP_TRACE_CSV_HEADER`].
pub fn step_trace_csv(records: &[StepRecord]) -> String {
    let mut out = String::from(STEP_TRACE_CSV_HEADER);
    out.push('\n');
    for (step, r) in records.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            step, r.action_rate_mbps, r.success_count, r.reward, r.aggregated_throughput_mbps
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_deployment, Point, ScenarioConfig, Sta};
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    fn radio() -> RadioParams {
        RadioParams::default()
    }

    fn rates() -> RateTable {
        RateTable::with_default_rates(&radio())
    }

    /// Hand-built world: stations at chosen distances east of the center.
    fn manual_deployment(distances: &[(f64, u32)]) -> Deployment {
        let center = Point { x: 150.0, y: 150.0 };
        Deployment {
            ebcs_ap: center,
            non_ebcs_aps: vec![
                Point { x: 190.0, y: 150.0 },
                Point { x: 110.0, y: 150.0 },
            ],
            stas: distances
                .iter()
                .map(|&(d, bss)| Sta { position: Point { x: center.x + d, y: center.y }, bss })
                .collect(),
        }
    }

    fn env_for(distances: &[(f64, u32)], m: usize, seed: u64) -> BroadcastEnv {
        BroadcastEnv::new(manual_deployment(distances), radio(), rates(), m, rng(seed)).unwrap()
    }

    #[test]
    fn reward_examples() {
        assert_eq!(reward(143.4, 100, 100, 143.4).unwrap(), 1.0);
        assert!((reward(8.6, 100, 100, 143.4).unwrap() - 0.05997).abs() < 1e-5);
        assert_eq!(reward(143.4, 0, 100, 143.4).unwrap(), -1.0);
        assert!((reward(51.6, 90, 100, 143.4).unwrap() - (-0.0360)).abs() < 1e-4);
    }

    #[test]
    fn reward_bounds_and_sign() {
        let table = rates();
        for &a in table.rates_mbps() {
            for n in 0..=100usize {
                let r = reward(a, n, 100, table.max_rate_mbps()).unwrap();
                assert!((-1.0..=1.0).contains(&r), "reward {r} out of range");
                assert_eq!(r > 0.0, n == 100, "sign mismatch at a = {a}, n = {n}");
            }
        }
    }

    #[test]
    fn reward_rejects_bad_input() {
        assert!(matches!(
            reward(8.6, 101, 100, 143.4),
            Err(EnvError::SuccessCountExceedsTotal { count: 101, total: 100 })
        ));
        assert!(matches!(reward(0.0, 1, 2, 143.4), Err(EnvError::NonPositiveRate { .. })));
    }

    #[test]
    fn reset_observes_the_sampled_stations() {
        // all 100 stations exactly 40 m out, split across the two BSSs
        let distances: Vec<(f64, u32)> =
            (0..100).map(|i| (40.0, if i < 50 { 1 } else { 2 })).collect();
        let mut env = env_for(&distances, 5, 1);
        let obs = env.reset().unwrap();
        assert_eq!(obs.rss_dbm.len(), 5);
        assert_eq!(obs.bssid.len(), 5);
        let expected = rss_at_observer_dbm(40.0, &radio()).unwrap();
        for &rss in &obs.rss_dbm {
            assert_eq!(rss, expected);
        }
    }

    #[test]
    fn observed_rss_matches_the_link_budget() {
        let mut env = env_for(&[(10.0, 1)], 1, 2);
        let obs = env.reset().unwrap();
        assert!((obs.rss_dbm[0] - (-56.43)).abs() < 0.01);
        assert_eq!(obs.bssid[0], 1);
    }

    #[test]
    fn step_counts_successes_over_all_stations() {
        let near: Vec<(f64, u32)> = (0..100).map(|i| (20.0 + (i % 10) as f64, 1 + (i as u32 % 2))).collect();
        let mut env = env_for(&near, 5, 3);
        env.reset().unwrap();
        let (_, rec) = env.step(143.4).unwrap();
        assert_eq!(rec.success_count, 100);
        assert_eq!(rec.reward, 1.0);
        assert_eq!(rec.aggregated_throughput_mbps, 143.4 * 100.0);
        assert!(rec.per_sampled_sta_success.iter().all(|&s| s));
    }

    #[test]
    fn step_total_failure_branch() {
        let far: Vec<(f64, u32)> = (0..10).map(|_| (260.0, 1)).collect();
        let mut env = BroadcastEnv::new(
            Deployment {
                ebcs_ap: Point { x: 0.0, y: 0.0 },
                non_ebcs_aps: vec![Point { x: 260.0, y: 0.0 }],
                stas: far
                    .iter()
                    .map(|&(d, bss)| Sta { position: Point { x: d, y: 0.0 }, bss })
                    .collect(),
            },
            radio(),
            rates(),
            3,
            rng(4),
        )
        .unwrap();
        env.reset().unwrap();
        let (_, rec) = env.step(143.4).unwrap();
        assert_eq!(rec.success_count, 0);
        assert_eq!(rec.reward, -1.0);
        assert!(rec.per_sampled_sta_success.iter().all(|&s| !s));
    }

    #[test]
    fn step_rejects_unknown_rate_and_missing_reset() {
        let mut env = env_for(&[(40.0, 1)], 1, 5);
        assert!(matches!(env.step(8.6), Err(EnvError::StepBeforeReset)));
        env.reset().unwrap();
        assert!(matches!(env.step(50.0), Err(EnvError::RateNotInTable(_))));
        // the rejected step must not consume the pending observation
        assert!(env.step(8.6).is_ok());
    }

    #[test]
    fn success_count_non_increasing_in_rate() {
        let config = ScenarioConfig::default();
        let table = rates();
        for seed in 0..100 {
            let dep = generate_deployment(&config, &mut rng(seed)).unwrap();
            let mut env = BroadcastEnv::new(dep, radio(), table.clone(), 5, rng(seed + 1)).unwrap();
            env.reset().unwrap();
            let mut prev = usize::MAX;
            for &rate in table.rates_mbps() {
                let (_, rec) = env.step(rate).unwrap();
                assert!(
                    rec.success_count <= prev,
                    "seed {seed}: successes rose from {prev} to {} at rate {rate}",
                    rec.success_count
                );
                prev = rec.success_count;
            }
        }
    }

    #[test]
    fn replay_is_deterministic() {
        let dep = generate_deployment(&ScenarioConfig::default(), &mut rng(10)).unwrap();
        let actions = [8.6, 143.4, 51.6, 103.2, 8.6, 51.6];
        let run = |sampling_seed: u64| -> Vec<StepRecord> {
            let mut env =
                BroadcastEnv::new(dep.clone(), radio(), rates(), 5, rng(sampling_seed)).unwrap();
            env.reset().unwrap();
            actions.iter().map(|&a| env.step(a).unwrap().1).collect()
        };
        assert_eq!(run(77), run(77));
    }

    #[test]
    fn encoder_dimensions_and_normalization() {
        let enc = StateEncoder::new(5, 2);
        assert_eq!(enc.input_dim(), 15);
        let obs = Observation {
            rss_dbm: vec![-65.0, -120.0, -30.0, -100.0, -10.0],
            bssid: vec![1, 2, 1, 1, 2],
        };
        let x = enc.encode(&obs).unwrap();
        assert_eq!(x.len(), 15);
        assert_eq!(x[0], 0.0); // -65 dBm is the window midpoint
        assert_eq!(&x[1..3], &[1.0, 0.0]);
        assert_eq!(x[3], -1.0); // clipped below
        assert_eq!(&x[4..6], &[0.0, 1.0]);
        assert_eq!(x[6], 1.0); // window top
        assert_eq!(x[9], -1.0); // window bottom
        assert_eq!(x[12], 1.0); // clipped above
    }

    #[test]
    fn encoder_rejects_bad_observations() {
        let enc = StateEncoder::new(2, 2);
        let short = Observation { rss_dbm: vec![-60.0], bssid: vec![1] };
        assert!(matches!(enc.encode(&short), Err(EnvError::ObservationLength { .. })));
        let bad_bss = Observation { rss_dbm: vec![-60.0, -60.0], bssid: vec![1, 3] };
        assert!(matches!(
            enc.encode(&bad_bss),
            Err(EnvError::BssIdOutOfRange { bssid: 3, num_bss: 2 })
        ));
    }

    #[test]
    fn application_env_exposes_observations_only() {
        let distances: Vec<(f64, u32)> = (0..20).map(|i| (30.0 + i as f64, 1)).collect();
        let inner = BroadcastEnv::new(
            Deployment {
                ebcs_ap: Point { x: 150.0, y: 150.0 },
                non_ebcs_aps: vec![Point { x: 190.0, y: 150.0 }],
                stas: distances
                    .iter()
                    .map(|&(d, bss)| Sta { position: Point { x: 150.0 + d, y: 150.0 }, bss })
                    .collect(),
            },
            radio(),
            rates(),
            4,
            rng(6),
        )
        .unwrap();
        let mut app = ApplicationEnv::new(inner);
        let mut obs = app.reset().unwrap();
        for _ in 0..10 {
            obs = app.step(103.2).unwrap();
        }
        assert_eq!(obs.rss_dbm.len(), 4);
        let metrics = app.metrics();
        assert_eq!(metrics.steps, 10);
        assert!(metrics.mean_success_ratio > 0.0 && metrics.mean_success_ratio <= 1.0);
        assert!((app.mean_selected_rate_mbps() - 103.2).abs() < 1e-9);
    }

    #[test]
    fn metrics_follow_the_throughput_identity() {
        let dep = generate_deployment(&ScenarioConfig::default(), &mut rng(20)).unwrap();
        let mut env = BroadcastEnv::new(dep, radio(), rates(), 5, rng(21)).unwrap();
        env.reset().unwrap();
        let mut records = Vec::new();
        for &a in &[8.6, 51.6, 103.2, 143.4] {
            let (_, rec) = env.step(a).unwrap();
            assert_eq!(rec.aggregated_throughput_mbps, a * rec.success_count as f64);
            records.push(rec);
        }
        let metrics = EpisodeMetrics::from_records(&records, 100);
        assert_eq!(metrics.steps, 4);
        assert!(metrics.mean_success_ratio <= 1.0);
    }

    #[test]
    fn step_trace_renders_one_row_per_step() {
        let records = vec![
            StepRecord {
                action_rate_mbps: 8.6,
                success_count: 100,
                reward: 0.05997,
                aggregated_throughput_mbps: 860.0,
                per_sampled_sta_success: vec![true; 5],
            };
            3
        ];
        let csv = step_trace_csv(&records);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], STEP_TRACE_CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,8.6,100,"));
    }
}
