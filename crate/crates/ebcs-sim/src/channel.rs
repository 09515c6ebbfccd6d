//! Deterministic radio propagation: dual-slope indoor path loss, received
//! signal strength, SNR estimation from overheard uplink frames, and the
//! Shannon-threshold broadcast reception rule.
//!
//! All powers are carried in dBm and SNR comparisons happen in dB; the
//! capacity threshold is evaluated in linear ratio first and converted.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distances below this are clamped before the path-loss logarithms to avoid
/// the singularity of co-located placements.
pub const MIN_DISTANCE_M: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("data rate must be positive, got {0} Mbit/s")]
    NonPositiveRate(f64),
    #[error("rate table must not be empty")]
    EmptyRateTable,
    #[error("rates must be strictly increasing, got {later} Mbit/s after {earlier} Mbit/s")]
    NonIncreasingRates { earlier: f64, later: f64 },
}

/// Radio-link parameters of the broadcast deployment.
///
/// Defaults: 5 GHz carrier, 20 MHz channel, 10 m breakpoint, 10 dBm transmit
/// power for both the broadcast AP and the stations, and a thermal-floor
/// noise power of -174 dBm/Hz + 10 log10(W), rounded to -101 dBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub carrier_frequency_ghz: f64,
    pub bandwidth_hz: f64,
    pub breakpoint_distance_m: f64,
    pub tx_power_ebcs_dbm: f64,
    pub tx_power_sta_dbm: f64,
    pub noise_power_dbm: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            carrier_frequency_ghz: 5.0,
            bandwidth_hz: 20e6,
            breakpoint_distance_m: 10.0,
            tx_power_ebcs_dbm: 10.0,
            tx_power_sta_dbm: 10.0,
            noise_power_dbm: -101.0,
        }
    }
}

impl RadioParams {
    /// Checks the physical-parameter invariants, returning a field name and
    /// message on the first violation.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if !(self.carrier_frequency_ghz > 0.0) {
            return Err((
                "carrier_frequency_ghz",
                format!("must be positive, got {}", self.carrier_frequency_ghz),
            ));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(("bandwidth_hz", format!("must be positive, got {}", self.bandwidth_hz)));
        }
        if !(self.breakpoint_distance_m > 0.0) {
            return Err((
                "breakpoint_distance_m",
                format!("must be positive, got {}", self.breakpoint_distance_m),
            ));
        }
        for (field, v) in [
            ("tx_power_ebcs_dbm", self.tx_power_ebcs_dbm),
            ("tx_power_sta_dbm", self.tx_power_sta_dbm),
            ("noise_power_dbm", self.noise_power_dbm),
        ] {
            if !v.is_finite() {
                return Err((field, format!("must be finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Dual-slope indoor path loss in dB (TGax-style breakpoint model):
/// 20 dB/decade out to the breakpoint distance and 35 dB/decade beyond it,
/// with a 2.4 GHz-referenced frequency term. Continuous and non-decreasing
/// in distance.
pub fn path_loss_db(distance_m: f64, params: &RadioParams) -> Result<f64, ChannelError> {
    if !(distance_m > 0.0) {
        return Err(ChannelError::NonPositiveDistance(distance_m));
    }
    let d = distance_m.max(MIN_DISTANCE_M);
    let d_bp = params.breakpoint_distance_m;
    let mut pl = 40.05
        + 20.0 * (params.carrier_frequency_ghz / 2.4).log10()
        + 20.0 * d.min(d_bp).log10();
    if d > d_bp {
        pl += 35.0 * (d / d_bp).log10();
    }
    Ok(pl)
}

/// RSS in dBm of a station's uplink frame as overheard by the broadcast AP:
/// the station transmit power minus the path loss over the AP-station
/// distance. Monotone decreasing in distance.
pub fn rss_at_observer_dbm(distance_m: f64, params: &RadioParams) -> Result<f64, ChannelError> {
    Ok(params.tx_power_sta_dbm - path_loss_db(distance_m, params)?)
}

/// Broadcast SNR in dB that a station would see, estimated from the RSS of
/// its overheard uplink frame. The path loss is recovered from the known
/// station transmit power and then re-applied to the broadcast power, so the
/// estimate stays correct when the two transmit powers differ.
pub fn estimate_snr_from_rss_db(rss_dbm: f64, params: &RadioParams) -> f64 {
    let loss_db = params.tx_power_sta_dbm - rss_dbm;
    params.tx_power_ebcs_dbm - loss_db - params.noise_power_dbm
}

/// Capacity-derived SNR threshold for one data rate: the minimum SNR at
/// which the rate does not exceed the Shannon capacity of the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequiredSnr {
    linear: f64,
}

impl RequiredSnr {
    pub fn linear(&self) -> f64 {
        self.linear
    }

    pub fn db(&self) -> f64 {
        10.0 * self.linear.log10()
    }
}

/// SNR required to receive `rate_mbps` error-free: 2^(rate/bandwidth) - 1,
/// strictly increasing in the rate.
pub fn required_snr(rate_mbps: f64, params: &RadioParams) -> Result<RequiredSnr, ChannelError> {
    if !(rate_mbps > 0.0) {
        return Err(ChannelError::NonPositiveRate(rate_mbps));
    }
    let rate_bits_per_s = rate_mbps * 1e6;
    Ok(RequiredSnr { linear: (rate_bits_per_s / params.bandwidth_hz).exp2() - 1.0 })
}

/// Whether a broadcast at `rate_mbps` is received at `distance_m`.
///
/// Deterministic threshold rule: reception succeeds iff the broadcast SNR at
/// the receiver meets the capacity threshold of the rate. No fading and no
/// collision loss.
pub fn broadcast_reception_ok(
    distance_m: f64,
    rate_mbps: f64,
    params: &RadioParams,
) -> Result<bool, ChannelError> {
    let snr_db = params.tx_power_ebcs_dbm - path_loss_db(distance_m, params)? - params.noise_power_dbm;
    Ok(snr_db >= required_snr(rate_mbps, params)?.db())
}

/// Closed-form inversion of the link budget: the largest distance at which
/// `rate_mbps` is still received.
pub fn coverage_radius_m(rate_mbps: f64, params: &RadioParams) -> Result<f64, ChannelError> {
    let pl_budget_db =
        params.tx_power_ebcs_dbm - params.noise_power_dbm - required_snr(rate_mbps, params)?.db();
    let base_db = 40.05 + 20.0 * (params.carrier_frequency_ghz / 2.4).log10();
    let pl_at_bp_db = base_db + 20.0 * params.breakpoint_distance_m.log10();
    let radius = if pl_budget_db <= pl_at_bp_db {
        10f64.powf((pl_budget_db - base_db) / 20.0)
    } else {
        params.breakpoint_distance_m * 10f64.powf((pl_budget_db - pl_at_bp_db) / 35.0)
    };
    Ok(radius)
}

/// Ordered table of selectable data rates with the per-rate SNR thresholds
/// cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    rates_mbps: Vec<f64>,
    required_snr_db: Vec<f64>,
}

/// Default 20 MHz rate set in Mbit/s.
pub const DEFAULT_RATES_MBPS: [f64; 4] = [8.6, 51.6, 103.2, 143.4];

impl RateTable {
    /// Builds a table from strictly increasing positive rates, caching the
    /// capacity threshold of each rate under `params`.
    pub fn new(rates_mbps: Vec<f64>, params: &RadioParams) -> Result<Self, ChannelError> {
        if rates_mbps.is_empty() {
            return Err(ChannelError::EmptyRateTable);
        }
        for pair in rates_mbps.windows(2) {
            if pair[1] <= pair[0] {
                return Err(ChannelError::NonIncreasingRates { earlier: pair[0], later: pair[1] });
            }
        }
        let required_snr_db = rates_mbps
            .iter()
            .map(|&r| required_snr(r, params).map(|s| s.db()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { rates_mbps, required_snr_db })
    }

    pub fn with_default_rates(params: &RadioParams) -> Self {
        Self::new(DEFAULT_RATES_MBPS.to_vec(), params)
            .expect("default rate table is valid")
    }

    pub fn rates_mbps(&self) -> &[f64] {
        &self.rates_mbps
    }

    pub fn len(&self) -> usize {
        self.rates_mbps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates_mbps.is_empty()
    }

    pub fn rate_mbps(&self, index: usize) -> f64 {
        self.rates_mbps[index]
    }

    pub fn min_rate_mbps(&self) -> f64 {
        self.rates_mbps[0]
    }

    pub fn max_rate_mbps(&self) -> f64 {
        *self.rates_mbps.last().expect("table is never empty")
    }

    pub fn required_snr_db(&self, index: usize) -> f64 {
        self.required_snr_db[index]
    }

    /// Index of an exact rate value, if present.
    pub fn index_of(&self, rate_mbps: f64) -> Option<usize> {
        self.rates_mbps.iter().position(|&r| r == rate_mbps)
    }

    /// Highest rate index whose SNR threshold is met, or `None` when even
    /// the lowest rate requires more than `snr_db`.
    pub fn best_index_for_snr_db(&self, snr_db: f64) -> Option<usize> {
        self.required_snr_db.iter().rposition(|&req| snr_db >= req)
    }
}
