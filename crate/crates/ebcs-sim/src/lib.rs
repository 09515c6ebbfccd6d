//! Simulator and training harness for ACK-less data-rate adaptation in
//! broadcast WLANs (IEEE 802.11bc eBCS).
//!
//! A broadcast AP cannot learn per-recipient delivery outcomes, so it adapts
//! its rate from what it can overhear: uplink frames of stations associated
//! with neighboring non-broadcast APs. The crate provides:
//!
//! - [`channel`]: deterministic dual-slope path loss, RSS, SNR estimation,
//!   and the capacity-threshold reception rule;
//! - [`scenario`]: clustered random deployments with controllable
//!   farthest-AP distance and BSS radius;
//! - [`env`]: the step/episode engine with a strict learning-phase vs
//!   application-phase split;
//! - [`policy`]: the minimum-rate baseline, the worst-overheard-SNR rule,
//!   and greedy selection from a trained value network;
//! - [`dqn`]: from-scratch deep Q-learning (network, backprop, Huber, Adam,
//!   replay, epsilon-greedy, training loop);
//! - [`eval`]: application-phase sweeps with paired worlds across methods;
//! - [`config`]: the TOML run configuration.

// validation guards use `!(x > 0.0)` so NaN fails them too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod dqn;
pub mod env;
pub mod eval;
pub mod policy;
pub mod scenario;

pub use channel::{RadioParams, RateTable};
pub use config::{RunConfig, SweepAxis};
pub use env::{ApplicationEnv, BroadcastEnv, Observation, StateEncoder, StepRecord};
pub use policy::{Method, RatePolicy};
pub use scenario::{Deployment, DeploymentSet, ScenarioConfig};

/// SplitMix64-style mix of a master seed with a role tag; used to hand
/// independent deterministic seeds to the world generator, the step sampler,
/// the agent, and the weight initializer.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(tag.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
