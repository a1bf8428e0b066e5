//! From-scratch optimizers over the model's flat parameter blocks.
//!
//! All steps return the parameter deltas that were (to be) added to the
//! model, so callers can inspect or log update magnitudes.

use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, MlpModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdadeltaHyper {
    /// Scale on the computed update; 1 recovers the original algorithm, and
    /// keeping it explicit makes learning-rate sweeps expressible.
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
}

impl Default for AdadeltaHyper {
    fn default() -> Self {
        AdadeltaHyper {
            lr: 1.0,
            rho: 0.95,
            eps: 1e-6,
        }
    }
}

/// Adam: exponentially decaying averages of past gradients (m) and squared
/// gradients (v), bias-corrected, with the square root of v̂ as denominator.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(block_sizes: &[usize], hyper: AdamHyper) -> AdamState {
        AdamState {
            m: block_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: block_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            t: 0,
            hyper,
        }
    }

    pub fn for_model(model: &MlpModel, hyper: AdamHyper) -> AdamState {
        AdamState::new(&model.block_sizes(), hyper)
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// One update: m←β₁m+(1−β₁)g; v←β₂v+(1−β₂)g²; Δθ=−lr·m̂/(√v̂+ε) with
    /// bias-corrected m̂=m/(1−β₁ᵗ), v̂=v/(1−β₂ᵗ). Returns the deltas.
    pub fn step(&mut self, grads: &Gradients) -> Vec<Vec<f64>> {
        let h = self.hyper;
        self.t += 1;
        let bc1 = 1.0 - h.beta1.powi(self.t as i32);
        let bc2 = 1.0 - h.beta2.powi(self.t as i32);
        let mut deltas = Vec::with_capacity(grads.blocks.len());
        for (bi, g_block) in grads.blocks.iter().enumerate() {
            let m = &mut self.m[bi];
            let v = &mut self.v[bi];
            let mut d = vec![0.0; g_block.len()];
            for i in 0..g_block.len() {
                let g = g_block[i];
                m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
                v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                d[i] = -h.lr * m_hat / (v_hat.sqrt() + h.eps);
            }
            deltas.push(d);
        }
        deltas
    }
}

/// Adadelta: exponentially decaying average of past squared gradients as
/// denominator, with the matching average of past squared updates as the
/// unit-normalizing numerator.
#[derive(Debug, Clone)]
pub struct AdadeltaState {
    eg2: Vec<Vec<f64>>,
    edx2: Vec<Vec<f64>>,
    pub hyper: AdadeltaHyper,
}

impl AdadeltaState {
    pub fn new(block_sizes: &[usize], hyper: AdadeltaHyper) -> AdadeltaState {
        AdadeltaState {
            eg2: block_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            edx2: block_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            hyper,
        }
    }

    pub fn for_model(model: &MlpModel, hyper: AdadeltaHyper) -> AdadeltaState {
        AdadeltaState::new(&model.block_sizes(), hyper)
    }

    pub fn squared_grad_avg(&self) -> &[Vec<f64>] {
        &self.eg2
    }

    pub fn squared_update_avg(&self) -> &[Vec<f64>] {
        &self.edx2
    }

    /// One update: Eg²←ρEg²+(1−ρ)g²; Δx=−(√(EΔx²+ε)/√(Eg²+ε))·g;
    /// EΔx²←ρEΔx²+(1−ρ)Δx². Returns the applied deltas lr·Δx.
    pub fn step(&mut self, grads: &Gradients) -> Vec<Vec<f64>> {
        let h = self.hyper;
        let mut deltas = Vec::with_capacity(grads.blocks.len());
        for (bi, g_block) in grads.blocks.iter().enumerate() {
            let eg2 = &mut self.eg2[bi];
            let edx2 = &mut self.edx2[bi];
            let mut d = vec![0.0; g_block.len()];
            for i in 0..g_block.len() {
                let g = g_block[i];
                eg2[i] = h.rho * eg2[i] + (1.0 - h.rho) * g * g;
                let dx = -((edx2[i] + h.eps).sqrt() / (eg2[i] + h.eps).sqrt()) * g;
                edx2[i] = h.rho * edx2[i] + (1.0 - h.rho) * dx * dx;
                d[i] = h.lr * dx;
            }
            deltas.push(d);
        }
        deltas
    }
}

/// Plain gradient descent: Δθ = −lr·g.
#[derive(Debug, Clone)]
pub struct SgdState {
    pub lr: f64,
}

impl SgdState {
    pub fn step(&self, grads: &Gradients) -> Vec<Vec<f64>> {
        grads
            .blocks
            .iter()
            .map(|b| b.iter().map(|&g| -self.lr * g).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
    Adadelta,
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Adadelta => "adadelta",
        })
    }
}

/// Declarative optimizer choice carried in experiment specs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    Sgd { lr: f64 },
    Adam(AdamHyper),
    Adadelta(AdadeltaHyper),
}

impl OptimizerConfig {
    /// Named optimizer at the given learning rate, other hyperparameters at
    /// the optimizer authors' defaults.
    pub fn with_lr(kind: OptimizerKind, lr: f64) -> OptimizerConfig {
        match kind {
            OptimizerKind::Sgd => OptimizerConfig::Sgd { lr },
            OptimizerKind::Adam => OptimizerConfig::Adam(AdamHyper {
                lr,
                ..AdamHyper::default()
            }),
            OptimizerKind::Adadelta => OptimizerConfig::Adadelta(AdadeltaHyper {
                lr,
                ..AdadeltaHyper::default()
            }),
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        match self {
            OptimizerConfig::Sgd { .. } => OptimizerKind::Sgd,
            OptimizerConfig::Adam(_) => OptimizerKind::Adam,
            OptimizerConfig::Adadelta(_) => OptimizerKind::Adadelta,
        }
    }

    pub fn lr(&self) -> f64 {
        match self {
            OptimizerConfig::Sgd { lr } => *lr,
            OptimizerConfig::Adam(h) => h.lr,
            OptimizerConfig::Adadelta(h) => h.lr,
        }
    }
}

/// Runtime state for any configured optimizer.
#[derive(Debug, Clone)]
pub enum OptimizerState {
    Sgd(SgdState),
    Adam(AdamState),
    Adadelta(AdadeltaState),
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, model: &MlpModel) -> OptimizerState {
        match config {
            OptimizerConfig::Sgd { lr } => OptimizerState::Sgd(SgdState { lr }),
            OptimizerConfig::Adam(h) => OptimizerState::Adam(AdamState::for_model(model, h)),
            OptimizerConfig::Adadelta(h) => {
                OptimizerState::Adadelta(AdadeltaState::for_model(model, h))
            }
        }
    }

    pub fn step(&mut self, grads: &Gradients) -> Vec<Vec<f64>> {
        match self {
            OptimizerState::Sgd(s) => s.step(grads),
            OptimizerState::Adam(s) => s.step(grads),
            OptimizerState::Adadelta(s) => s.step(grads),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_grads(g: f64) -> Gradients {
        Gradients {
            blocks: vec![vec![g]],
        }
    }

    #[test]
    fn adam_zero_gradient_gives_zero_delta() {
        let mut s = AdamState::new(&[1], AdamHyper::default());
        let d = s.step(&scalar_grads(0.0));
        assert_eq!(d[0][0], 0.0);
    }

    #[test]
    fn adam_first_step_matches_hand_computation() {
        // Fresh state, g=1: m̂=1, v̂=1, Δ = −lr/(1+ε).
        let mut s = AdamState::new(&[1], AdamHyper::default());
        let d = s.step(&scalar_grads(1.0));
        let want = -1e-3 / (1.0 + 1e-8);
        assert!((d[0][0] - want).abs() < 1e-12 * want.abs());
    }

    #[test]
    fn adam_bias_correction_is_exact_at_step_one() {
        for g in [1.0f64, 2.0, 0.5, -4.0, 1024.0] {
            let mut s = AdamState::new(&[1], AdamHyper::default());
            s.step(&scalar_grads(g));
            let bc1 = 1.0 - s.hyper.beta1;
            let bc2 = 1.0 - s.hyper.beta2;
            assert_eq!(s.first_moment()[0][0] / bc1, g);
            assert_eq!(s.second_moment()[0][0] / bc2, g * g);
        }
    }

    #[test]
    fn adam_constant_gradient_converges_to_lr_magnitude() {
        let mut s = AdamState::new(&[1], AdamHyper::default());
        let g = scalar_grads(0.37);
        let mut last = 0.0;
        for _ in 0..10_000 {
            last = s.step(&g)[0][0];
        }
        let lr = s.hyper.lr;
        assert!(
            (last.abs() - lr).abs() <= 0.01 * lr,
            "|Δ| = {} vs lr {lr}",
            last.abs()
        );
    }

    #[test]
    fn adadelta_zero_gradient_gives_zero_delta() {
        let mut s = AdadeltaState::new(&[1], AdadeltaHyper::default());
        assert_eq!(s.step(&scalar_grads(0.0))[0][0], 0.0);
    }

    #[test]
    fn adadelta_first_step_matches_hand_computation() {
        // Fresh state, g=1, ρ=0.95, ε=1e-6:
        // Eg² = 0.05, Δx = −√(1e-6)/√(0.05 + 1e-6).
        let mut s = AdadeltaState::new(&[1], AdadeltaHyper::default());
        let d = s.step(&scalar_grads(1.0));
        let want = -(1e-6f64).sqrt() / (0.05f64 + 1e-6).sqrt();
        assert!((d[0][0] - want).abs() < 1e-15, "{} vs {want}", d[0][0]);
        // ≈ −4.47209e-3 as computed by hand.
        assert!((d[0][0] + 4.47209e-3).abs() < 1e-7);
        // EΔx² picked up (1−ρ)Δx².
        let want_edx2 = 0.05 * want * want;
        assert!((s.squared_update_avg()[0][0] - want_edx2).abs() < 1e-18);
    }

    #[test]
    fn adadelta_first_step_magnitude_is_insensitive_to_gradient_scale() {
        let hyper = AdadeltaHyper {
            eps: 1e-12,
            ..AdadeltaHyper::default()
        };
        let base = AdadeltaState::new(&[1], hyper).step(&scalar_grads(1.0))[0][0];
        for c in [10.0, 100.0] {
            let scaled = AdadeltaState::new(&[1], hyper).step(&scalar_grads(c))[0][0];
            let ratio = scaled / base;
            assert!(
                (0.99..=1.01).contains(&ratio),
                "c={c}: ratio {ratio} outside [0.99, 1.01]"
            );
            assert!(scaled < 0.0, "direction follows the gradient sign");
        }
    }

    #[test]
    fn sgd_delta_is_negative_lr_times_gradient() {
        let s = SgdState { lr: 0.1 };
        let d = s.step(&Gradients {
            blocks: vec![vec![2.0, -3.0]],
        });
        assert_eq!(d[0], vec![-0.1 * 2.0, -0.1 * -3.0]);
    }

    #[test]
    fn config_with_lr_sets_only_the_learning_rate() {
        let cfg = OptimizerConfig::with_lr(OptimizerKind::Adam, 1e-5);
        match cfg {
            OptimizerConfig::Adam(h) => {
                assert_eq!(h.lr, 1e-5);
                assert_eq!(h.beta1, 0.9);
                assert_eq!(h.beta2, 0.999);
            }
            _ => panic!("wrong kind"),
        }
        assert_eq!(cfg.kind(), OptimizerKind::Adam);
        assert_eq!(cfg.lr(), 1e-5);
    }
}
