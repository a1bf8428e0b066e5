//! Learning-curve analysis toolkit: curve ingestion, Savitzky–Golay
//! smoothing, Vandermonde least-squares polynomial fitting, and a
//! derivative-based detector for epoch-wise double-descent patterns.
//!
//! The pipeline mirrors how the patterns are defined: a curve segment shows
//! double descent when the (polynomial surrogate of the) generalization
//! error has a critical time t_s with a strictly positive derivative on a
//! window before it and strictly negative derivative on a window after it.
//! Everything here is pure and deterministic; all types are immutable after
//! construction and safe to share across threads.

pub mod curve;
pub mod detector;
mod linalg;
pub mod polyfit;
pub mod smoothing;
pub mod synth;

pub use curve::{load_curve, restrict, save_curve, CurveError, CurveFormat, LearningCurve, Segment, TimeUnit};
pub use detector::{
    advise, classify, critical_points, detect, Advice, CriticalKind, CriticalPoint, DetectError,
    DetectorConfig, Pattern, PatternReport,
};
pub use polyfit::{build_vandermonde, fit, FitError, PolyFit};
pub use smoothing::{sg_weights, smooth, SgConfig, SmoothError};
pub use synth::{
    aliasing_scan, gen_bump, gen_monotone, subsample, AliasRow, AliasingScan, BumpCurveSpec,
    SynthError,
};
