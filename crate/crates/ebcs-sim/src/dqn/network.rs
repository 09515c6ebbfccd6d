//! The Q-value network: six fully connected layers with ReLU on the hidden
//! layers and a linear output head, plus backpropagation of the per-sample
//! Huber TD loss.
//!
//! Parameters live in one flat buffer (per layer: row-major weights, then
//! biases), which keeps gradient accumulation, Adam moments, and
//! finite-difference checks index-aligned.

use std::ops::Range;

use rand::Rng;

use super::DqnError;

/// Units per hidden layer.
pub const HIDDEN_WIDTH: usize = 64;
/// Total fully connected layers (five hidden activations plus the output).
pub const WEIGHT_LAYERS: usize = 6;
/// Huber transition point; rewards live in [-1, 1] so the quadratic zone
/// covers the whole usual error range.
pub const HUBER_DELTA: f64 = 1.0;

/// Uniform init bound for the linear output layer; keeps initial Q-values
/// near zero so early greedy action selection is effectively tie-broken.
const OUTPUT_INIT_BOUND: f64 = 3e-3;

#[derive(Debug, Clone, PartialEq)]
struct LayerSpan {
    weights: Range<usize>,
    biases: Range<usize>,
    in_dim: usize,
    out_dim: usize,
}

fn layer_spans(sizes: &[usize]) -> Vec<LayerSpan> {
    let mut spans = Vec::with_capacity(sizes.len() - 1);
    let mut offset = 0;
    for pair in sizes.windows(2) {
        let (in_dim, out_dim) = (pair[0], pair[1]);
        let w_end = offset + in_dim * out_dim;
        let b_end = w_end + out_dim;
        spans.push(LayerSpan { weights: offset..w_end, biases: w_end..b_end, in_dim, out_dim });
        offset = b_end;
    }
    spans
}

/// Huber loss of a prediction against a target: quadratic within `delta`,
/// linear beyond it, with a continuous first derivative at the junction.
pub fn huber_loss(prediction: f64, target: f64, delta: f64) -> f64 {
    let err = (prediction - target).abs();
    if err <= delta {
        0.5 * err * err
    } else {
        delta * (err - 0.5 * delta)
    }
}

fn huber_grad(diff: f64, delta: f64) -> f64 {
    diff.clamp(-delta, delta)
}

/// Fully connected value network mapping encoded observations to one Q-value
/// per selectable rate.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    sizes: Vec<usize>,
    spans: Vec<LayerSpan>,
    params: Vec<f64>,
}

impl QNetwork {
    /// Standard architecture: `input_dim` -> 64 x5 -> `output_dim`.
    pub fn new(input_dim: usize, output_dim: usize, rng: &mut impl Rng) -> Self {
        let mut sizes = vec![HIDDEN_WIDTH; WEIGHT_LAYERS + 1];
        sizes[0] = input_dim;
        sizes[WEIGHT_LAYERS] = output_dim;
        Self::with_layer_sizes(&sizes, rng).expect("standard layer sizes are valid")
    }

    /// Arbitrary layer sizes (used for reduced test networks). Hidden layers
    /// get He-uniform weights, the output layer small-uniform, biases zero.
    pub fn with_layer_sizes(sizes: &[usize], rng: &mut impl Rng) -> Result<Self, DqnError> {
        if sizes.len() < 2 {
            return Err(DqnError::TooFewLayers);
        }
        if sizes.contains(&0) {
            return Err(DqnError::ZeroLayerSize);
        }
        let spans = layer_spans(sizes);
        let total = spans.last().map(|s| s.biases.end).unwrap_or(0);
        let mut params = vec![0.0; total];
        let last = spans.len() - 1;
        for (l, span) in spans.iter().enumerate() {
            let bound = if l < last {
                (6.0 / span.in_dim as f64).sqrt()
            } else {
                OUTPUT_INIT_BOUND
            };
            for w in &mut params[span.weights.clone()] {
                *w = rng.random_range(-bound..bound);
            }
            // biases stay zero
        }
        Ok(Self { sizes: sizes.to_vec(), spans, params })
    }

    /// Rebuilds a network from an explicit flat parameter vector.
    pub fn from_flat_params(sizes: &[usize], params: Vec<f64>) -> Result<Self, DqnError> {
        if sizes.len() < 2 {
            return Err(DqnError::TooFewLayers);
        }
        if sizes.contains(&0) {
            return Err(DqnError::ZeroLayerSize);
        }
        let spans = layer_spans(sizes);
        let expected = spans.last().map(|s| s.biases.end).unwrap_or(0);
        if params.len() != expected {
            return Err(DqnError::ParamCountMismatch { expected, got: params.len() });
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(DqnError::NonFiniteParam(i));
        }
        Ok(Self { sizes: sizes.to_vec(), spans, params })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, index: usize) -> f64 {
        self.params[index]
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        self.params[index] = value;
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Weight matrix of one layer as row-major rows (out x in), plus biases.
    pub fn layer(&self, index: usize) -> (&[f64], &[f64]) {
        let span = &self.spans[index];
        (&self.params[span.weights.clone()], &self.params[span.biases.clone()])
    }

    /// Q-vector for one encoded state.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, DqnError> {
        if input.len() != self.input_dim() {
            return Err(DqnError::InputDimMismatch { expected: self.input_dim(), got: input.len() });
        }
        let last = self.spans.len() - 1;
        let mut activation = input.to_vec();
        for (l, span) in self.spans.iter().enumerate() {
            activation = self.apply_layer(span, &activation, l < last);
        }
        Ok(activation)
    }

    fn apply_layer(&self, span: &LayerSpan, input: &[f64], relu: bool) -> Vec<f64> {
        let weights = &self.params[span.weights.clone()];
        let biases = &self.params[span.biases.clone()];
        let mut out = Vec::with_capacity(span.out_dim);
        for o in 0..span.out_dim {
            let row = &weights[o * span.in_dim..(o + 1) * span.in_dim];
            let mut z = biases[o];
            for (w, x) in row.iter().zip(input) {
                z += w * x;
            }
            out.push(if relu { z.max(0.0) } else { z });
        }
        out
    }

    /// Gradients of `huber(Q(input)[action], target)` with respect to every
    /// parameter. Only the selected action's output unit carries direct loss
    /// gradient.
    pub fn backward(
        &self,
        input: &[f64],
        action: usize,
        target: f64,
    ) -> Result<Gradients, DqnError> {
        let mut grads = Gradients::zeros_for(self);
        self.backward_accumulate(input, action, target, &mut grads)?;
        Ok(grads)
    }

    /// Backpropagates one sample, adding into `grads`; returns the sample's
    /// Huber loss.
    pub fn backward_accumulate(
        &self,
        input: &[f64],
        action: usize,
        target: f64,
        grads: &mut Gradients,
    ) -> Result<f64, DqnError> {
        if grads.values.len() != self.params.len() {
            return Err(DqnError::GradientShapeMismatch {
                expected: self.params.len(),
                got: grads.values.len(),
            });
        }
        if input.len() != self.input_dim() {
            return Err(DqnError::InputDimMismatch { expected: self.input_dim(), got: input.len() });
        }
        if action >= self.output_dim() {
            return Err(DqnError::ActionIndexOutOfRange {
                index: action,
                actions: self.output_dim(),
            });
        }

        let last = self.spans.len() - 1;
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.spans.len() + 1);
        activations.push(input.to_vec());
        for (l, span) in self.spans.iter().enumerate() {
            let next = self.apply_layer(span, &activations[l], l < last);
            activations.push(next);
        }
        let q = activations.last().expect("forward produced an output");
        let loss = huber_loss(q[action], target, HUBER_DELTA);

        let mut delta = vec![0.0; self.output_dim()];
        delta[action] = huber_grad(q[action] - target, HUBER_DELTA);

        for l in (0..self.spans.len()).rev() {
            let span = &self.spans[l];
            let input_act = &activations[l];
            {
                let dw = &mut grads.values[span.weights.clone()];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut dw[o * span.in_dim..(o + 1) * span.in_dim];
                    for (g, &a) in row.iter_mut().zip(input_act) {
                        *g += d * a;
                    }
                }
            }
            {
                let db = &mut grads.values[span.biases.clone()];
                for (g, &d) in db.iter_mut().zip(&delta) {
                    *g += d;
                }
            }
            if l > 0 {
                let weights = &self.params[span.weights.clone()];
                let mut prev = vec![0.0; span.in_dim];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &weights[o * span.in_dim..(o + 1) * span.in_dim];
                    for (p, &w) in prev.iter_mut().zip(row) {
                        *p += w * d;
                    }
                }
                // ReLU mask: the stored activation is the rectified output
                for (p, &a) in prev.iter_mut().zip(input_act) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        Ok(loss)
    }
}

/// Per-parameter gradient buffer, index-aligned with [`QNetwork::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    values: Vec<f64>,
}

impl Gradients {
    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros_for(net: &QNetwork) -> Self {
        Self::zeros(net.num_params())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn reset(&mut self) {
        self.values.fill(0.0);
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}
