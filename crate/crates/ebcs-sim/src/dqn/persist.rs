//! Weights-file format: layer sizes, row-major weight matrices, biases, the
//! observation encoder's normalization constants, and the rate list. Enough
//! to reload and act without the training configuration.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::QNetwork;
use super::DqnError;
use crate::channel::RateTable;
use crate::env::StateEncoder;

/// On-disk policy bundle, stored as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    /// Unit counts per layer, input first, e.g. `[15, 64, 64, 64, 64, 64, 4]`.
    pub layer_sizes: Vec<usize>,
    /// One row-major (out x in) weight matrix per fully connected layer.
    pub weights: Vec<Vec<f64>>,
    /// One bias vector per layer.
    pub biases: Vec<Vec<f64>>,
    /// Observation-to-feature mapping the network was trained with.
    pub encoder: StateEncoder,
    /// Selectable data rates; Q-vector index k maps to `rates_mbps[k]`.
    pub rates_mbps: Vec<f64>,
}

impl PolicyFile {
    pub fn new(net: &QNetwork, encoder: &StateEncoder, rates: &RateTable) -> Self {
        let sizes = net.layer_sizes().to_vec();
        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for l in 0..sizes.len() - 1 {
            let (w, b) = net.layer(l);
            weights.push(w.to_vec());
            biases.push(b.to_vec());
        }
        Self {
            layer_sizes: sizes,
            weights,
            biases,
            encoder: encoder.clone(),
            rates_mbps: rates.rates_mbps().to_vec(),
        }
    }

    /// Reassembles the value network, validating the stored layout.
    pub fn network(&self) -> Result<QNetwork, DqnError> {
        if self.layer_sizes.len() < 2 {
            return Err(DqnError::TooFewLayers);
        }
        let layers = self.layer_sizes.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(DqnError::ParamCountMismatch {
                expected: layers,
                got: self.weights.len().min(self.biases.len()),
            });
        }
        let mut params = Vec::new();
        for l in 0..layers {
            let (in_dim, out_dim) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            if self.weights[l].len() != in_dim * out_dim {
                return Err(DqnError::ParamCountMismatch {
                    expected: in_dim * out_dim,
                    got: self.weights[l].len(),
                });
            }
            if self.biases[l].len() != out_dim {
                return Err(DqnError::ParamCountMismatch {
                    expected: out_dim,
                    got: self.biases[l].len(),
                });
            }
            params.extend_from_slice(&self.weights[l]);
            params.extend_from_slice(&self.biases[l]);
        }
        QNetwork::from_flat_params(&self.layer_sizes, params)
    }

    /// Serialized form; stable for byte-for-byte reproducibility checks.
    pub fn to_json(&self) -> Result<String, DqnError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), DqnError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DqnError> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
