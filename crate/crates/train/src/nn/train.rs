//! Deterministic training loop emitting learning-curve traces.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{grad_and_loss, mean_loss, MlpModel, NnError};
use super::optim::{OptimizerConfig, OptimizerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BatchMode {
    /// One gradient step per epoch over the whole training set.
    Full,
    /// Seeded shuffle each epoch, one step per chunk.
    Mini { size: usize },
}

/// Stops a run whose validation loss stays above `factor` times the
/// pre-training validation loss for `window_epochs` consecutive epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceHalt {
    pub factor: f64,
    pub window_epochs: usize,
}

impl Default for DivergenceHalt {
    fn default() -> Self {
        DivergenceHalt {
            factor: 10.0,
            window_epochs: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub epochs: usize,
    /// Validation loss is recorded at the end of every `eval_every`-th epoch.
    pub eval_every: usize,
    pub batch: BatchMode,
    /// Seed for the per-epoch shuffle order (mini-batch mode).
    pub seed: u64,
    pub halt: Option<DivergenceHalt>,
}

/// Raw training traces. Times are epoch numbers (end of epoch); traces may
/// be empty or single-point, unlike validated curves.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Mean training loss per epoch, as seen by the gradient passes.
    pub train: Vec<(f64, f64)>,
    /// Validation loss every `eval_every` epochs.
    pub val: Vec<(f64, f64)>,
    /// Epoch at which the divergence halt fired, if it did.
    pub halted_at: Option<usize>,
}

/// Trains the model in place, recording train/validation loss traces.
/// Deterministic: identical model, data, and config reproduce bit-identical
/// traces.
pub fn train(
    model: &mut MlpModel,
    train_x: &[Vec<f64>],
    train_y: &[f64],
    val_x: &[Vec<f64>],
    val_y: &[f64],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, NnError> {
    if train_x.is_empty() || val_x.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    if cfg.eval_every == 0 {
        return Err(NnError::BadConfig("eval_every must be >= 1".into()));
    }
    if let BatchMode::Mini { size: 0 } = cfg.batch {
        return Err(NnError::BadConfig("mini-batch size must be >= 1".into()));
    }

    let mut opt = OptimizerState::new(cfg.optimizer, model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_x.len()).collect();

    let mut outcome = TrainOutcome {
        train: Vec::with_capacity(cfg.epochs),
        val: Vec::with_capacity(cfg.epochs / cfg.eval_every),
        halted_at: None,
    };

    // Baseline for the divergence rule: validation loss before any update.
    let initial_val = match cfg.halt {
        Some(_) => Some(mean_loss(model, val_x, val_y)?),
        None => None,
    };
    let mut epochs_over_threshold = 0usize;

    for epoch in 1..=cfg.epochs {
        let epoch_loss = match cfg.batch {
            BatchMode::Full => {
                let (grads, loss) = grad_and_loss(model, train_x, train_y)?;
                let deltas = opt.step(&grads);
                model.apply_deltas(&deltas);
                loss
            }
            BatchMode::Mini { size } => {
                order.shuffle(&mut rng);
                let mut weighted = 0.0;
                for chunk in order.chunks(size) {
                    let xs: Vec<Vec<f64>> = chunk.iter().map(|&i| train_x[i].clone()).collect();
                    let ys: Vec<f64> = chunk.iter().map(|&i| train_y[i]).collect();
                    let (grads, loss) = grad_and_loss(model, &xs, &ys)?;
                    let deltas = opt.step(&grads);
                    model.apply_deltas(&deltas);
                    weighted += loss * chunk.len() as f64;
                }
                weighted / train_x.len() as f64
            }
        };
        outcome.train.push((epoch as f64, epoch_loss));

        if epoch % cfg.eval_every == 0 {
            let vl = mean_loss(model, val_x, val_y)?;
            outcome.val.push((epoch as f64, vl));
            if let (Some(halt), Some(init)) = (cfg.halt, initial_val) {
                if vl > halt.factor * init {
                    epochs_over_threshold += cfg.eval_every;
                } else {
                    epochs_over_threshold = 0;
                }
                if epochs_over_threshold >= halt.window_epochs {
                    outcome.halted_at = Some(epoch);
                    break;
                }
            }
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::optim::{OptimizerConfig, OptimizerKind};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn two_blob_data(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 2;
            let center = if label == 1 { 4.0 } else { -4.0 };
            xs.push(vec![
                center + noise.sample(&mut rng),
                -center + noise.sample(&mut rng),
            ]);
            ys.push(label as f64);
        }
        (xs, ys)
    }

    fn sgd_cfg(epochs: usize, eval_every: usize) -> TrainConfig {
        TrainConfig {
            optimizer: OptimizerConfig::with_lr(OptimizerKind::Sgd, 0.1),
            epochs,
            eval_every,
            batch: BatchMode::Full,
            seed: 0,
            halt: None,
        }
    }

    #[test]
    fn zero_epochs_give_empty_traces() {
        let (xs, ys) = two_blob_data(10, 0);
        let mut model = MlpModel::init(&[2, 4, 1], 0).unwrap();
        let out = train(&mut model, &xs, &ys, &xs, &ys, &sgd_cfg(0, 1)).unwrap();
        assert!(out.train.is_empty());
        assert!(out.val.is_empty());
    }

    #[test]
    fn eval_every_thirty_records_three_points_in_ninety_epochs() {
        let (xs, ys) = two_blob_data(10, 0);
        let mut model = MlpModel::init(&[2, 4, 1], 0).unwrap();
        let out = train(&mut model, &xs, &ys, &xs, &ys, &sgd_cfg(90, 30)).unwrap();
        let times: Vec<f64> = out.val.iter().map(|p| p.0).collect();
        assert_eq!(times, vec![30.0, 60.0, 90.0]);
        assert_eq!(out.train.len(), 90);
    }

    #[test]
    fn separable_blobs_converge_under_sgd() {
        let (xs, ys) = two_blob_data(100, 3);
        let mut model = MlpModel::init(&[2, 8, 1], 1).unwrap();
        let out = train(&mut model, &xs, &ys, &xs, &ys, &sgd_cfg(200, 1)).unwrap();
        let final_loss = out.train.last().unwrap().1;
        assert!(final_loss < 0.05, "final train loss {final_loss}");
    }

    #[test]
    fn identical_configs_reproduce_bit_identical_traces() {
        let (xs, ys) = two_blob_data(40, 7);
        let cfg = TrainConfig {
            batch: BatchMode::Mini { size: 8 },
            optimizer: OptimizerConfig::with_lr(OptimizerKind::Adam, 1e-2),
            ..sgd_cfg(30, 5)
        };
        let mut m1 = MlpModel::init(&[2, 6, 1], 9).unwrap();
        let mut m2 = MlpModel::init(&[2, 6, 1], 9).unwrap();
        let o1 = train(&mut m1, &xs, &ys, &xs, &ys, &cfg).unwrap();
        let o2 = train(&mut m2, &xs, &ys, &xs, &ys, &cfg).unwrap();
        assert_eq!(o1, o2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn tiny_sgd_step_never_increases_full_batch_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let noise = Normal::new(0.0, 1.0).unwrap();
        for draw in 0..100 {
            let d = rng.gen_range(2..5);
            let n = rng.gen_range(4..12);
            let xs: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| noise.sample(&mut rng)).collect())
                .collect();
            let ys: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_bool(0.5))).collect();
            let mut model = MlpModel::init(&[d, 6, 1], draw).unwrap();
            let before = mean_loss(&model, &xs, &ys).unwrap();
            let cfg = TrainConfig {
                optimizer: OptimizerConfig::with_lr(OptimizerKind::Sgd, 1e-4),
                epochs: 1,
                eval_every: 1,
                batch: BatchMode::Full,
                seed: 0,
                halt: None,
            };
            train(&mut model, &xs, &ys, &xs, &ys, &cfg).unwrap();
            let after = mean_loss(&model, &xs, &ys).unwrap();
            assert!(
                after <= before + 1e-9,
                "draw {draw}: loss rose from {before} to {after}"
            );
        }
    }

    #[test]
    fn divergence_halt_stops_early_and_reports_epoch() {
        // Validation labels are flipped, so the validation loss rises
        // steadily as the training set is fitted.
        let (xs, ys) = two_blob_data(40, 2);
        let flipped: Vec<f64> = ys.iter().map(|&y| 1.0 - y).collect();
        let cfg = TrainConfig {
            optimizer: OptimizerConfig::with_lr(OptimizerKind::Sgd, 0.5),
            epochs: 2000,
            eval_every: 1,
            batch: BatchMode::Full,
            seed: 0,
            halt: Some(DivergenceHalt {
                factor: 10.0,
                window_epochs: 50,
            }),
        };
        let mut model = MlpModel::init(&[2, 8, 1], 4).unwrap();
        // Zero the output layer so the run starts from p = 0.5 exactly.
        {
            let mut blocks = model.blocks_mut();
            let nb = blocks.len();
            blocks[nb - 2].iter_mut().for_each(|w| *w = 0.0);
            blocks[nb - 1].iter_mut().for_each(|w| *w = 0.0);
        }
        let out = train(&mut model, &xs, &ys, &xs, &flipped, &cfg).unwrap();
        let halted = out.halted_at.expect("run should halt");
        assert!(halted < 2000);
        assert_eq!(out.val.len(), halted);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let (xs, ys) = two_blob_data(10, 0);
        let mut model = MlpModel::init(&[2, 4, 1], 0).unwrap();
        let bad_eval = TrainConfig { eval_every: 0, ..sgd_cfg(10, 1) };
        assert!(train(&mut model, &xs, &ys, &xs, &ys, &bad_eval).is_err());
        let bad_batch = TrainConfig {
            batch: BatchMode::Mini { size: 0 },
            ..sgd_cfg(10, 1)
        };
        assert!(train(&mut model, &xs, &ys, &xs, &ys, &bad_batch).is_err());
        assert!(train(&mut model, &[], &[], &xs, &ys, &sgd_cfg(10, 1)).is_err());
    }
}
