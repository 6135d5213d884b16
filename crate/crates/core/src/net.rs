//! Small fully connected network with explicit forward/backward passes
//! and an Adam optimizer. Maps `(u, alpha)` to the free entries of a
//! control tensor.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

/// Architecture of the coefficient network. The output layer is linear
/// so control points can take any real value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, output_dim: usize, activation: Activation) -> Self {
        MlpSpec { input_dim, hidden, output_dim, activation }
    }

    /// Layer widths including input and output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input_dim);
        w.extend_from_slice(&self.hidden);
        w.push(self.output_dim);
        w
    }

    pub fn param_count(&self) -> usize {
        self.widths().windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }
}

/// One affine layer: `rows x cols` weight matrix (row-major) and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

/// All parameters of an MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    pub fn zeros_like(&self) -> MlpParams {
        MlpParams {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                    rows: l.rows,
                    cols: l.cols,
                })
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Visits every parameter as a flat mutable sequence, layer by layer,
    /// weights before biases.
    pub fn for_each_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                f(w);
            }
            for b in &mut layer.bias {
                f(b);
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    pub fn unflatten_into(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut k = 0;
        for layer in &mut self.layers {
            let n_w = layer.weights.len();
            layer.weights.copy_from_slice(&flat[k..k + n_w]);
            k += n_w;
            let n_b = layer.bias.len();
            layer.bias.copy_from_slice(&flat[k..k + n_b]);
            k += n_b;
        }
        Ok(())
    }
}

/// Deterministic initialization: He fan-in scaling for relu, Xavier for
/// tanh, zero biases.
pub fn init_params(spec: &MlpSpec, seed: u64) -> MlpParams {
    let mut rng = SplitMix64::new(seed);
    let widths = spec.widths();
    let mut layers = Vec::with_capacity(widths.len() - 1);
    for pair in widths.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let scale = match spec.activation {
            Activation::Relu => libm::sqrt(2.0 / fan_in as f64),
            Activation::Tanh => libm::sqrt(2.0 / (fan_in + fan_out) as f64),
        };
        let weights: Vec<f64> =
            (0..fan_in * fan_out).map(|_| scale * rng.next_normal()).collect();
        layers.push(Layer {
            weights,
            bias: vec![0.0; fan_out],
            rows: fan_out,
            cols: fan_in,
        });
    }
    MlpParams { layers }
}

/// Activation record from a forward pass, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct Tape {
    /// Input to each layer (post-activation of the previous one).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each hidden layer.
    pre_activations: Vec<Vec<f64>>,
}

fn affine(layer: &Layer, input: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.reserve(layer.rows);
    for r in 0..layer.rows {
        let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
        let mut v = layer.bias[r];
        for (w, x) in row.iter().zip(input) {
            v += w * x;
        }
        out.push(v);
    }
}

fn activate(activation: Activation, v: f64) -> f64 {
    match activation {
        Activation::Relu => {
            if v > 0.0 {
                v
            } else {
                0.0
            }
        }
        Activation::Tanh => libm::tanh(v),
    }
}

fn activate_grad(activation: Activation, pre: f64) -> f64 {
    match activation {
        Activation::Relu => {
            if pre > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Tanh => {
            let t = libm::tanh(pre);
            1.0 - t * t
        }
    }
}

/// Forward pass; hidden layers apply the activation, the final layer is
/// linear. Returns the output and the tape for backpropagation.
pub fn forward(
    spec: &MlpSpec,
    params: &MlpParams,
    input: &[f64],
) -> Result<(Vec<f64>, Tape)> {
    if input.len() != spec.input_dim {
        return Err(Error::DimensionMismatch { expected: spec.input_dim, got: input.len() });
    }
    let n_layers = params.layers.len();
    let mut inputs = Vec::with_capacity(n_layers);
    let mut pre_activations = Vec::with_capacity(n_layers.saturating_sub(1));
    let mut current = input.to_vec();
    let mut scratch = Vec::new();
    for (k, layer) in params.layers.iter().enumerate() {
        inputs.push(current.clone());
        affine(layer, &current, &mut scratch);
        if k + 1 < n_layers {
            pre_activations.push(scratch.clone());
            current.clear();
            current.extend(scratch.iter().map(|&v| activate(spec.activation, v)));
        } else {
            current = scratch.clone();
        }
    }
    Ok((current, Tape { inputs, pre_activations }))
}

/// Exact reverse-mode gradient of `output . output_grad` with respect to
/// every parameter.
pub fn backward(
    spec: &MlpSpec,
    params: &MlpParams,
    tape: &Tape,
    output_grad: &[f64],
) -> Result<MlpParams> {
    if tape.inputs.len() != params.layers.len() {
        return Err(Error::ShapeMismatch("tape does not match parameters".into()));
    }
    if output_grad.len() != spec.output_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.output_dim,
            got: output_grad.len(),
        });
    }
    let mut grads = params.zeros_like();
    let mut delta = output_grad.to_vec();
    for k in (0..params.layers.len()).rev() {
        let layer = &params.layers[k];
        let g = &mut grads.layers[k];
        let input = &tape.inputs[k];
        for r in 0..layer.rows {
            g.bias[r] = delta[r];
            let row = &mut g.weights[r * layer.cols..(r + 1) * layer.cols];
            for (slot, x) in row.iter_mut().zip(input) {
                *slot = delta[r] * x;
            }
        }
        if k > 0 {
            let mut prev = vec![0.0; layer.cols];
            for r in 0..layer.rows {
                let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                let d = delta[r];
                if d == 0.0 {
                    continue;
                }
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            let pre = &tape.pre_activations[k - 1];
            for (p, &z) in prev.iter_mut().zip(pre) {
                *p *= activate_grad(spec.activation, z);
            }
            delta = prev;
        }
    }
    Ok(grads)
}

/// Adam optimizer state: moment accumulators shaped like the parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    pub first_moment: MlpParams,
    pub second_moment: MlpParams,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &MlpParams, learning_rate: f64) -> Self {
        AdamState {
            step: 0,
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One Adam update with bias correction, in place.
pub fn adam_step(params: &mut MlpParams, grads: &MlpParams, state: &mut AdamState) -> Result<()> {
    if params.param_count() != grads.param_count() {
        return Err(Error::ShapeMismatch("gradient shape mismatch".into()));
    }
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - libm::pow(state.beta1, t);
    let bc2 = 1.0 - libm::pow(state.beta2, t);
    for k in 0..params.layers.len() {
        let n_w = params.layers[k].weights.len();
        for i in 0..n_w {
            let g = grads.layers[k].weights[i];
            let m = &mut state.first_moment.layers[k].weights[i];
            *m = state.beta1 * *m + (1.0 - state.beta1) * g;
            let v = &mut state.second_moment.layers[k].weights[i];
            *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            params.layers[k].weights[i] -=
                state.learning_rate * m_hat / (libm::sqrt(v_hat) + state.epsilon);
        }
        let n_b = params.layers[k].bias.len();
        for i in 0..n_b {
            let g = grads.layers[k].bias[i];
            let m = &mut state.first_moment.layers[k].bias[i];
            *m = state.beta1 * *m + (1.0 - state.beta1) * g;
            let v = &mut state.second_moment.layers[k].bias[i];
            *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            params.layers[k].bias[i] -=
                state.learning_rate * m_hat / (libm::sqrt(v_hat) + state.epsilon);
        }
    }
    Ok(())
}
