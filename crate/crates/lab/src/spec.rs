//! Declarative experiment specifications, mirrored one-to-one by the JSON
//! documents `ddlab sweep` consumes.

use std::fmt;
use std::path::PathBuf;

use ddlab_core::{DetectorConfig, SgConfig};
use ddlab_train::{BatchMode, DivergenceHalt, OptimizerKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// The four noise-placement cells: clean/clean, noisy/noisy,
    /// noisy-train/clean-val, clean-train/noisy-val.
    NoiseMatrix,
    /// Training-set sizes at fixed noise fraction.
    SizeSweep,
    /// Optimizer × learning-rate grid.
    LrSweep,
    /// One run per seed, evaluated every epoch, re-read at coarser strides.
    AliasSweep,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::NoiseMatrix => "noise_matrix",
            Scenario::SizeSweep => "size_sweep",
            Scenario::LrSweep => "lr_sweep",
            Scenario::AliasSweep => "alias_sweep",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataParams {
    pub n_train: usize,
    pub n_val: usize,
    pub dim: usize,
    pub separation: f64,
    pub noise_fraction: f64,
}

impl Default for DataParams {
    fn default() -> Self {
        DataParams {
            n_train: 300,
            n_val: 300,
            dim: 20,
            separation: 4.0,
            noise_fraction: 0.1,
        }
    }
}

/// Learning-rate grid for one optimizer (decreasing powers of ten).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerGrid {
    pub optimizer: OptimizerKind,
    pub lrs: Vec<f64>,
}

fn default_hidden() -> Vec<usize> {
    vec![64, 128]
}

fn default_epochs() -> usize {
    2000
}

fn default_eval_every() -> usize {
    1
}

fn default_lr() -> f64 {
    1e-3
}

fn default_optimizer() -> OptimizerKind {
    OptimizerKind::Adam
}

fn default_sizes() -> Vec<usize> {
    vec![300, 3000]
}

fn default_strides() -> Vec<usize> {
    vec![1, 30]
}

fn default_lr_grid() -> Vec<OptimizerGrid> {
    vec![
        OptimizerGrid {
            optimizer: OptimizerKind::Adam,
            lrs: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
        },
        OptimizerGrid {
            optimizer: OptimizerKind::Adadelta,
            lrs: vec![1e1, 1e0, 1e-1, 1e-2, 1e-3],
        },
    ]
}

fn default_batch() -> BatchMode {
    BatchMode::Full
}

fn default_halt() -> Option<DivergenceHalt> {
    Some(DivergenceHalt::default())
}

/// Detector settings tuned for 2,000-epoch laboratory curves: smoothing on,
/// plateau thresholds scaled to the long span.
pub fn lab_detector_defaults() -> DetectorConfig {
    DetectorConfig {
        degree: 5,
        sg: Some(SgConfig {
            window: 11,
            order: 3,
        }),
        min_segment_width: 50.0,
        min_prominence: 0.02,
        plateau_eps: 5e-5,
        plateau_min_width: 400.0,
        grid_points: 1000,
    }
}

/// Declarative description of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    #[serde(default)]
    pub data: DataParams,
    /// Hidden layer widths; the full architecture is
    /// [dim, hidden…, 1].
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_lr")]
    pub lr: f64,
    /// lr_sweep only: one grid per optimizer.
    #[serde(default = "default_lr_grid")]
    pub lr_grid: Vec<OptimizerGrid>,
    /// size_sweep only.
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    /// alias_sweep only.
    #[serde(default = "default_strides")]
    pub strides: Vec<usize>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    #[serde(default = "default_batch")]
    pub batch: BatchMode,
    #[serde(default = "default_halt")]
    pub halt: Option<DivergenceHalt>,
    pub seeds: Vec<u64>,
    #[serde(default = "lab_detector_defaults")]
    pub detector: DetectorConfig,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    /// A ready-to-run spec with the documented laboratory defaults.
    pub fn with_defaults(scenario: Scenario, seeds: Vec<u64>, out_dir: PathBuf) -> ExperimentSpec {
        ExperimentSpec {
            scenario,
            data: DataParams::default(),
            hidden: default_hidden(),
            optimizer: default_optimizer(),
            lr: default_lr(),
            lr_grid: default_lr_grid(),
            sizes: default_sizes(),
            strides: default_strides(),
            epochs: default_epochs(),
            eval_every: default_eval_every(),
            batch: default_batch(),
            halt: default_halt(),
            seeds,
            detector: lab_detector_defaults(),
            out_dir,
        }
    }

    pub fn arch(&self, dim: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(dim);
        dims.extend_from_slice(&self.hidden);
        dims.push(1);
        dims
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.seeds.is_empty() {
            return Err("seeds must be nonempty".into());
        }
        if self.epochs == 0 {
            return Err("epochs must be >= 1".into());
        }
        if self.eval_every == 0 {
            return Err("eval_every must be >= 1".into());
        }
        if self.epochs / self.eval_every < 2 {
            return Err("need at least 2 evaluations (epochs / eval_every >= 2)".into());
        }
        if self.lr <= 0.0 {
            return Err("lr must be > 0".into());
        }
        if self.data.n_train == 0 || self.data.n_val == 0 {
            return Err("dataset sizes must be positive".into());
        }
        match self.scenario {
            Scenario::LrSweep => {
                if self.lr_grid.is_empty() {
                    return Err("lr_sweep needs a non-empty lr_grid".into());
                }
                for grid in &self.lr_grid {
                    if grid.lrs.is_empty() {
                        return Err(format!("empty lr grid for {}", grid.optimizer));
                    }
                    if grid.lrs.iter().any(|&lr| lr <= 0.0) {
                        return Err("lr grid values must be > 0".into());
                    }
                }
            }
            Scenario::SizeSweep => {
                if self.sizes.is_empty() {
                    return Err("size_sweep needs a non-empty sizes list".into());
                }
                if self.sizes.iter().any(|&n| n == 0 || n % 2 != 0) {
                    return Err("sizes must be positive and even".into());
                }
            }
            Scenario::AliasSweep => {
                if self.strides.is_empty() {
                    return Err("alias_sweep needs a non-empty strides list".into());
                }
                if self.strides.iter().any(|&s| s == 0) {
                    return Err("strides must be >= 1".into());
                }
            }
            Scenario::NoiseMatrix => {}
        }
        self.detector.validate().map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(scenario: Scenario) -> ExperimentSpec {
        ExperimentSpec::with_defaults(scenario, vec![0, 1], PathBuf::from("/tmp/out"))
    }

    #[test]
    fn defaults_validate() {
        for s in [
            Scenario::NoiseMatrix,
            Scenario::SizeSweep,
            Scenario::LrSweep,
            Scenario::AliasSweep,
        ] {
            assert!(spec(s).validate().is_ok(), "{s}");
        }
    }

    #[test]
    fn empty_seed_list_is_rejected() {
        let mut s = spec(Scenario::NoiseMatrix);
        s.seeds.clear();
        assert!(s.validate().is_err());
    }

    #[test]
    fn non_positive_lr_grid_is_rejected() {
        let mut s = spec(Scenario::LrSweep);
        s.lr_grid[0].lrs[0] = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn zero_stride_is_rejected() {
        let mut s = spec(Scenario::AliasSweep);
        s.strides = vec![0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn minimal_json_round_trips_with_defaults() {
        let json = r#"{
            "scenario": "noise_matrix",
            "seeds": [0, 1, 2],
            "out_dir": "/tmp/nm"
        }"#;
        let s: ExperimentSpec = serde_json::from_str(json).unwrap();
        assert_eq!(s.data.n_train, 300);
        assert_eq!(s.epochs, 2000);
        assert_eq!(s.hidden, vec![64, 128]);
        assert!(s.validate().is_ok());
        let text = serde_json::to_string_pretty(&s).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
