//! Fully-connected network with ReLU hidden layers and a sigmoid output
//! neuron, plus manual backpropagation of the mean binary cross-entropy.
//!
//! Everything is double precision: the learning-rate sweeps go down to
//! regimes where single-precision loss curves would drown in rounding noise.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug)]
pub enum NnError {
    /// layer_dims must list input, hidden sizes, and a final output of 1.
    BadArchitecture(String),
    DimensionMismatch { expected: usize, got: usize },
    EmptyBatch,
    BadConfig(String),
}

impl fmt::Display for NnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NnError::BadArchitecture(msg) => write!(f, "bad architecture: {msg}"),
            NnError::DimensionMismatch { expected, got } => {
                write!(f, "input of dimension {got}, model expects {expected}")
            }
            NnError::EmptyBatch => write!(f, "batch is empty"),
            NnError::BadConfig(msg) => write!(f, "bad training config: {msg}"),
        }
    }
}

impl std::error::Error for NnError {}

/// Unrolled dot product; the manual accumulators break the dependency chain
/// so the training hot loop is not latency-bound.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] = a[j].mul_add(b[j], acc[0]);
        acc[1] = a[j + 1].mul_add(b[j + 1], acc[1]);
        acc[2] = a[j + 2].mul_add(b[j + 2], acc[2]);
        acc[3] = a[j + 3].mul_add(b[j + 3], acc[3]);
    }
    let mut tail = 0.0;
    for j in 4 * chunks..a.len() {
        tail = a[j].mul_add(b[j], tail);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Binary cross-entropy −(y·ln p + (1−y)·ln(1−p)) with p clamped to
/// [1e-12, 1−1e-12]. `y` must be 0 or 1.
#[inline]
pub fn bce(p: f64, y: f64) -> f64 {
    debug_assert!(y == 0.0 || y == 1.0);
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer {
    /// Row-major out_dim × in_dim.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

/// Multilayer perceptron; hidden layers use ReLU, the single output neuron
/// uses a sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    pub(crate) layers: Vec<Layer>,
}

impl MlpModel {
    /// Glorot-uniform initialization: weights drawn from
    /// ±√(6/(fan_in+fan_out)), biases zero. Deterministic per seed.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<MlpModel, NnError> {
        if layer_dims.len() < 2 {
            return Err(NnError::BadArchitecture(
                "need at least input and output dims".into(),
            ));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(NnError::BadArchitecture("zero-width layer".into()));
        }
        if *layer_dims.last().unwrap() != 1 {
            return Err(NnError::BadArchitecture("output dim must be 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_dims
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let w = (0..fan_in * fan_out)
                    .map(|_| rng.gen_range(-bound..bound))
                    .collect();
                Layer {
                    w,
                    b: vec![0.0; fan_out],
                    in_dim: fan_in,
                    out_dim: fan_out,
                }
            })
            .collect();
        Ok(MlpModel {
            layer_dims: layer_dims.to_vec(),
            layers,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.w.len() + l.b.len())
            .sum()
    }

    /// Flat parameter blocks in layer order: weights then bias per layer.
    /// Optimizer states and gradients use the same block layout.
    pub fn blocks(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.w.as_slice(), l.b.as_slice()])
            .collect()
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.w.as_mut_slice(), l.b.as_mut_slice()])
            .collect()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| [l.w.len(), l.b.len()])
            .collect()
    }

    /// Adds `deltas` (same block layout) to the parameters.
    pub fn apply_deltas(&mut self, deltas: &[Vec<f64>]) {
        for (block, delta) in self.blocks_mut().into_iter().zip(deltas) {
            for (p, d) in block.iter_mut().zip(delta) {
                *p += d;
            }
        }
    }

    /// Probability that `x` belongs to the positive class.
    pub fn forward(&self, x: &[f64]) -> Result<f64, NnError> {
        if x.len() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut ws = Workspace::for_model(self);
        Ok(self.forward_into(x, &mut ws))
    }

    /// Forward pass writing post-activations into the workspace; returns the
    /// output probability. `acts[l]` holds layer l's post-activation.
    pub(crate) fn forward_into(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        let n_layers = self.layers.len();
        for (l, layer) in self.layers.iter().enumerate() {
            let last = l + 1 == n_layers;
            // Split borrow: input is either x or the previous activation.
            let (before, rest) = ws.acts.split_at_mut(l);
            let input: &[f64] = if l == 0 { x } else { &before[l - 1] };
            let out = &mut rest[0];
            for o in 0..layer.out_dim {
                let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                let z = dot(row, input) + layer.b[o];
                out[o] = if last { sigmoid(z) } else { z.max(0.0) };
            }
        }
        ws.acts[n_layers - 1][0]
    }
}

/// Reusable per-sample buffers for forward/backward passes.
pub(crate) struct Workspace {
    /// Post-activation per layer (output layer last).
    pub acts: Vec<Vec<f64>>,
    /// Back-propagated dL/dz per layer.
    pub deltas: Vec<Vec<f64>>,
}

impl Workspace {
    pub fn for_model(model: &MlpModel) -> Workspace {
        Workspace {
            acts: model.layers.iter().map(|l| vec![0.0; l.out_dim]).collect(),
            deltas: model.layers.iter().map(|l| vec![0.0; l.out_dim]).collect(),
        }
    }
}

/// Per-parameter gradients in the model's block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub blocks: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Gradients {
        Gradients {
            blocks: model.block_sizes().iter().map(|&s| vec![0.0; s]).collect(),
        }
    }
}

/// Gradients of the mean BCE over the batch, with the mean batch loss.
pub fn grad_and_loss(
    model: &MlpModel,
    xs: &[Vec<f64>],
    ys: &[f64],
) -> Result<(Gradients, f64), NnError> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(NnError::EmptyBatch);
    }
    let d = model.input_dim();
    if let Some(bad) = xs.iter().find(|x| x.len() != d) {
        return Err(NnError::DimensionMismatch {
            expected: d,
            got: bad.len(),
        });
    }

    let mut grads = Gradients::zeros_like(model);
    let mut ws = Workspace::for_model(model);
    let n_layers = model.layers.len();
    let inv_n = 1.0 / xs.len() as f64;
    let mut loss = 0.0;

    for (x, &y) in xs.iter().zip(ys) {
        let p = model.forward_into(x, &mut ws);
        loss += bce(p, y);
        // dL/dz at the sigmoid output of the mean loss.
        ws.deltas[n_layers - 1][0] = (p - y) * inv_n;

        for l in (0..n_layers).rev() {
            let layer = &model.layers[l];
            let (acts_before, _) = ws.acts.split_at(l);
            let input: &[f64] = if l == 0 { x } else { &acts_before[l - 1] };

            {
                let (gw_part, gb_part) = grads.blocks.split_at_mut(2 * l + 1);
                let gw = &mut gw_part[2 * l];
                let gb = &mut gb_part[0];
                let delta = &ws.deltas[l];
                for o in 0..layer.out_dim {
                    let dl = delta[o];
                    if dl != 0.0 {
                        let row = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
                        for (g, &h) in row.iter_mut().zip(input) {
                            *g = dl.mul_add(h, *g);
                        }
                        gb[o] += dl;
                    }
                }
            }

            if l > 0 {
                // delta_prev = Wᵀ delta, masked by ReLU'(z) = [h > 0].
                let (deltas_before, deltas_rest) = ws.deltas.split_at_mut(l);
                let prev = &mut deltas_before[l - 1];
                let delta = &deltas_rest[0];
                prev.iter_mut().for_each(|v| *v = 0.0);
                for o in 0..layer.out_dim {
                    let dl = delta[o];
                    if dl != 0.0 {
                        let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                        for (p, &w) in prev.iter_mut().zip(row) {
                            *p = dl.mul_add(w, *p);
                        }
                    }
                }
                let h = &ws.acts[l - 1];
                for (p, &hv) in prev.iter_mut().zip(h) {
                    if hv <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
        }
    }

    Ok((grads, loss * inv_n))
}

/// Exact gradients of the mean BCE over the batch.
pub fn grad(model: &MlpModel, xs: &[Vec<f64>], ys: &[f64]) -> Result<Gradients, NnError> {
    grad_and_loss(model, xs, ys).map(|(g, _)| g)
}

/// Mean BCE of the model over a labeled set (forward only).
pub fn mean_loss(model: &MlpModel, xs: &[Vec<f64>], ys: &[f64]) -> Result<f64, NnError> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(NnError::EmptyBatch);
    }
    let mut ws = Workspace::for_model(model);
    let mut loss = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        if x.len() != model.input_dim() {
            return Err(NnError::DimensionMismatch {
                expected: model.input_dim(),
                got: x.len(),
            });
        }
        loss += bce(model.forward_into(x, &mut ws), y);
    }
    Ok(loss / xs.len() as f64)
}
