//! The three rate-selection strategies: the always-minimum baseline, the
//! rule that rides the worst overheard SNR, and greedy selection from a
//! trained value network. All of them map an observation to a rate from the
//! table and read nothing else.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{estimate_snr_from_rss_db, RadioParams, RateTable};
use crate::dqn::{greedy_action, PolicyFile, QNetwork};
use crate::env::{EnvError, Observation, StateEncoder};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("observation carries no overheard frames")]
    EmptyObservation,
    #[error("network input dimension {net} does not match encoder dimension {encoder}")]
    EncoderDimMismatch { net: usize, encoder: usize },
    #[error("network has {net} outputs but the rate table has {rates} rates")]
    ActionCountMismatch { net: usize, rates: usize },
    #[error("unknown method '{0}' (expected minrate, fore-rule, or fore-drl)")]
    UnknownMethod(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Dqn(#[from] crate::dqn::DqnError),
}

/// Method selector as it appears in configs and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "minrate")]
    MinRate,
    #[serde(rename = "fore-rule")]
    ForeRule,
    #[serde(rename = "fore-drl")]
    ForeDrl,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::MinRate, Method::ForeRule, Method::ForeDrl];

    pub fn name(&self) -> &'static str {
        match self {
            Method::MinRate => "minrate",
            Method::ForeRule => "fore-rule",
            Method::ForeDrl => "fore-drl",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minrate" => Ok(Method::MinRate),
            "fore-rule" => Ok(Method::ForeRule),
            "fore-drl" => Ok(Method::ForeDrl),
            other => Err(PolicyError::UnknownMethod(other.to_string())),
        }
    }
}

/// Always the lowest rate; needs no observation at all.
pub fn min_rate_select(rates: &RateTable) -> f64 {
    rates.min_rate_mbps()
}

/// Rule-based selection from overheard RSS only: estimate each sampled
/// station's broadcast SNR, take the worst, and pick the highest rate that
/// worst station can still receive. When even the lowest rate's requirement
/// fails, falls back to the lowest rate. BSS identifiers are ignored.
pub fn fore_rule_select(
    obs: &Observation,
    radio: &RadioParams,
    rates: &RateTable,
) -> Result<f64, PolicyError> {
    if obs.rss_dbm.is_empty() {
        return Err(PolicyError::EmptyObservation);
    }
    let min_snr_db = obs
        .rss_dbm
        .iter()
        .map(|&rss| estimate_snr_from_rss_db(rss, radio))
        .fold(f64::INFINITY, f64::min);
    let index = rates.best_index_for_snr_db(min_snr_db).unwrap_or(0);
    Ok(rates.rate_mbps(index))
}

/// Greedy selection from a value network: encode the observation, take the
/// argmax Q-value (ties toward the lower rate), and return that rate.
pub fn greedy_select(
    qnet: &QNetwork,
    encoder: &StateEncoder,
    obs: &Observation,
    rates_mbps: &[f64],
) -> Result<f64, PolicyError> {
    if qnet.input_dim() != encoder.input_dim() {
        return Err(PolicyError::EncoderDimMismatch {
            net: qnet.input_dim(),
            encoder: encoder.input_dim(),
        });
    }
    if qnet.output_dim() != rates_mbps.len() {
        return Err(PolicyError::ActionCountMismatch {
            net: qnet.output_dim(),
            rates: rates_mbps.len(),
        });
    }
    let features = encoder.encode(obs)?;
    let q = qnet.forward(&features)?;
    let index = greedy_action(&q).expect("network output is non-empty");
    Ok(rates_mbps[index])
}

/// A ready-to-run rate selector.
#[derive(Debug, Clone)]
pub enum RatePolicy {
    MinRate { rates: RateTable },
    ForeRule { radio: RadioParams, rates: RateTable },
    ForeDrl { qnet: QNetwork, encoder: StateEncoder, rates_mbps: Vec<f64> },
}

impl RatePolicy {
    pub fn min_rate(rates: RateTable) -> Self {
        RatePolicy::MinRate { rates }
    }

    pub fn fore_rule(radio: RadioParams, rates: RateTable) -> Self {
        RatePolicy::ForeRule { radio, rates }
    }

    /// Builds the learned policy from a weights bundle, validating that the
    /// network, encoder, and rate list agree.
    pub fn fore_drl(file: &PolicyFile) -> Result<Self, PolicyError> {
        let qnet = file.network()?;
        if qnet.input_dim() != file.encoder.input_dim() {
            return Err(PolicyError::EncoderDimMismatch {
                net: qnet.input_dim(),
                encoder: file.encoder.input_dim(),
            });
        }
        if qnet.output_dim() != file.rates_mbps.len() {
            return Err(PolicyError::ActionCountMismatch {
                net: qnet.output_dim(),
                rates: file.rates_mbps.len(),
            });
        }
        Ok(RatePolicy::ForeDrl {
            qnet,
            encoder: file.encoder.clone(),
            rates_mbps: file.rates_mbps.clone(),
        })
    }

    pub fn method(&self) -> Method {
        match self {
            RatePolicy::MinRate { .. } => Method::MinRate,
            RatePolicy::ForeRule { .. } => Method::ForeRule,
            RatePolicy::ForeDrl { .. } => Method::ForeDrl,
        }
    }

    /// Maps an observation to a data rate in Mbit/s.
    pub fn select_rate(&self, obs: &Observation) -> Result<f64, PolicyError> {
        match self {
            RatePolicy::MinRate { rates } => Ok(min_rate_select(rates)),
            RatePolicy::ForeRule { radio, rates } => fore_rule_select(obs, radio, rates),
            RatePolicy::ForeDrl { qnet, encoder, rates_mbps } => {
                greedy_select(qnet, encoder, obs, rates_mbps)
            }
        }
    }
}
