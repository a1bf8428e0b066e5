//! Parametric synthetic learning curves: an exponential decay with an
//! optional Gaussian bump, the canonical descend–ascend–descend surrogate
//! with an analytically locatable peak. Also hosts the stride subsampler
//! used to reproduce aliasing of the peak.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::curve::{CurveError, LearningCurve, TimeUnit};
use crate::detector::{detect, DetectError, DetectorConfig, Pattern, PatternReport};

#[derive(Debug)]
pub enum SynthError {
    /// A parameter violates its sign/range constraint.
    BadParameter { name: &'static str, value: f64 },
    /// Fewer than 2 points requested or left after subsampling.
    TooFewPoints { got: usize },
    /// Stride must be at least 1.
    ZeroStride,
    Curve(CurveError),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::BadParameter { name, value } => {
                write!(f, "parameter {name} = {value} is out of range")
            }
            SynthError::TooFewPoints { got } => {
                write!(f, "need at least 2 points, got {got}")
            }
            SynthError::ZeroStride => write!(f, "stride must be >= 1"),
            SynthError::Curve(e) => write!(f, "curve error: {e}"),
        }
    }
}

impl std::error::Error for SynthError {}

impl From<CurveError> for SynthError {
    fn from(e: CurveError) -> Self {
        SynthError::Curve(e)
    }
}

/// Parameters of the bump-curve family
/// E(t) = floor + exp(−t/τ) + A·exp(−(t−t_p)²/(2w²)) + ε,  ε ~ N(0, σ²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpCurveSpec {
    /// Decay scale τ of the exponential term.
    pub decay_scale: f64,
    /// Bump amplitude A; 0 gives a pure decay.
    pub bump_amplitude: f64,
    /// Bump center t_p.
    pub bump_center: f64,
    /// Bump width w (Gaussian sigma).
    pub bump_width: f64,
    /// Additive floor.
    pub floor: f64,
    /// Noise standard deviation σ.
    pub noise_sigma: f64,
    pub n_points: usize,
    pub t_max: f64,
    pub seed: u64,
}

impl BumpCurveSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let positive = [
            ("decay_scale", self.decay_scale),
            ("bump_width", self.bump_width),
            ("t_max", self.t_max),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(SynthError::BadParameter { name, value });
            }
        }
        if !(self.bump_amplitude >= 0.0) {
            return Err(SynthError::BadParameter {
                name: "bump_amplitude",
                value: self.bump_amplitude,
            });
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(SynthError::BadParameter {
                name: "noise_sigma",
                value: self.noise_sigma,
            });
        }
        if !(self.bump_center > 0.0 && self.bump_center < self.t_max) {
            return Err(SynthError::BadParameter {
                name: "bump_center",
                value: self.bump_center,
            });
        }
        if self.n_points < 2 {
            return Err(SynthError::TooFewPoints { got: self.n_points });
        }
        Ok(())
    }

    /// Noiseless mean of the family at time `t`.
    pub fn mean(&self, t: f64) -> f64 {
        let decay = (-t / self.decay_scale).exp();
        let z = (t - self.bump_center) / self.bump_width;
        self.floor + decay + self.bump_amplitude * (-0.5 * z * z).exp()
    }
}

/// Samples the bump family on `n_points` uniform times over [0, t_max].
/// Identical specs (including seed) produce bit-identical curves.
pub fn gen_bump(spec: &BumpCurveSpec) -> Result<LearningCurve, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).expect("sigma validated"))
    } else {
        None
    };
    let n = spec.n_points;
    let points: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let t = spec.t_max * i as f64 / (n - 1) as f64;
            let eps = noise.as_ref().map_or(0.0, |d| d.sample(&mut rng));
            (t, spec.mean(t) + eps)
        })
        .collect();
    Ok(LearningCurve::new(points, "synth-bump", TimeUnit::Epoch)?)
}

/// Pure decay fixture: the bump family with amplitude 0.
pub fn gen_monotone(
    decay_scale: f64,
    floor: f64,
    noise_sigma: f64,
    n_points: usize,
    t_max: f64,
    seed: u64,
) -> Result<LearningCurve, SynthError> {
    let spec = BumpCurveSpec {
        decay_scale,
        bump_amplitude: 0.0,
        bump_center: t_max * 0.5,
        bump_width: 1.0,
        floor,
        noise_sigma,
        n_points,
        t_max,
        seed,
    };
    Ok(gen_bump(&spec)?.with_label("synth-monotone"))
}

/// Keeps points at indices offset, offset+stride, …; times are preserved,
/// not renumbered.
pub fn subsample(
    curve: &LearningCurve,
    stride: usize,
    offset: usize,
) -> Result<LearningCurve, SynthError> {
    if stride == 0 {
        return Err(SynthError::ZeroStride);
    }
    let points: Vec<(f64, f64)> = curve
        .points()
        .iter()
        .copied()
        .skip(offset)
        .step_by(stride)
        .collect();
    if points.len() < 2 {
        return Err(SynthError::TooFewPoints { got: points.len() });
    }
    Ok(LearningCurve::new(
        points,
        curve.label().to_string(),
        curve.time_unit(),
    )?)
}

/// Verdict of one stride of an aliasing scan. Detection failures (for
/// example too few points for the fit degree) are kept as rows rather than
/// aborting the scan.
#[derive(Debug)]
pub struct AliasRow {
    pub stride: usize,
    pub outcome: Result<PatternReport, DetectError>,
}

impl AliasRow {
    pub fn pattern(&self) -> Option<Pattern> {
        self.outcome.as_ref().ok().map(|r| r.pattern)
    }
}

/// Result table of [`aliasing_scan`].
#[derive(Debug)]
pub struct AliasingScan {
    /// Verdict of the unsubsampled curve (stride 1), the reference.
    pub baseline: Option<Pattern>,
    pub rows: Vec<AliasRow>,
    /// Smallest scanned stride whose verdict departs from the baseline.
    pub first_departure: Option<usize>,
}

/// Runs [`detect`] on the curve subsampled at each stride (offset 0, full
/// span of the remaining points) and reports where the verdict departs from
/// the stride-1 verdict.
pub fn aliasing_scan(
    curve: &LearningCurve,
    cfg: &DetectorConfig,
    strides: &[usize],
) -> AliasingScan {
    let verdict_at = |stride: usize| -> Result<PatternReport, DetectError> {
        let sub = subsample(curve, stride, 0)
            .map_err(|e| DetectError::BadConfig(format!("stride {stride}: {e}")))?;
        detect(&sub, sub.span(), cfg)
    };

    let baseline = verdict_at(1).ok().map(|r| r.pattern);
    let mut rows: Vec<AliasRow> = strides
        .iter()
        .map(|&stride| AliasRow {
            stride,
            outcome: verdict_at(stride),
        })
        .collect();
    rows.sort_by_key(|r| r.stride);

    let first_departure = rows
        .iter()
        .find(|row| row.pattern() != baseline)
        .map(|row| row.stride);

    AliasingScan {
        baseline,
        rows,
        first_departure,
    }
}
