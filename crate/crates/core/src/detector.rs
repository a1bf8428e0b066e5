//! Double-descent detection on the fitted polynomial surrogate.
//!
//! A segment shows double descent when the fitted derivative has a
//! sign-changing root t_s with the derivative strictly positive on a window
//! (t_a, t_s) before it and strictly negative on (t_s, t_b) after it. The
//! classifier checks that predicate, then falls back to plateau, monotone,
//! or inconclusive verdicts, in that order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::curve::{restrict, CurveError, LearningCurve, Segment};
use crate::polyfit::{fit, FitError, PolyFit, DEGREE_RANGE};
use crate::smoothing::{smooth, SgConfig, SmoothError};

/// Number of samples per side used for the Eq.-1 sign-pattern audit.
pub const SIGN_AUDIT_POINTS: usize = 1000;

#[derive(Debug)]
pub enum DetectError {
    Curve(CurveError),
    Smooth(SmoothError),
    Fit(FitError),
    BadConfig(String),
}

impl fmt::Display for DetectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectError::Curve(e) => write!(f, "curve error: {e}"),
            DetectError::Smooth(e) => write!(f, "smoothing error: {e}"),
            DetectError::Fit(e) => write!(f, "fit error: {e}"),
            DetectError::BadConfig(msg) => write!(f, "bad detector config: {msg}"),
        }
    }
}

impl std::error::Error for DetectError {}

impl From<CurveError> for DetectError {
    fn from(e: CurveError) -> Self {
        DetectError::Curve(e)
    }
}

impl From<SmoothError> for DetectError {
    fn from(e: SmoothError) -> Self {
        DetectError::Smooth(e)
    }
}

impl From<FitError> for DetectError {
    fn from(e: FitError) -> Self {
        DetectError::Fit(e)
    }
}

/// Detector thresholds. Widths are in time units (epochs), prominences and
/// plateau slopes in loss units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Polynomial degree of the global fit.
    pub degree: usize,
    /// Optional Savitzky–Golay pre-filter.
    pub sg: Option<SgConfig>,
    /// Minimum width of the ascent and descent windows around t_s.
    pub min_segment_width: f64,
    /// Minimum peak prominence; rejects noise-induced micro-maxima.
    pub min_prominence: f64,
    /// |derivative| below this counts as flat for the plateau check.
    pub plateau_eps: f64,
    /// Minimum contiguous flat span for a plateau verdict.
    pub plateau_min_width: f64,
    /// Samples used for grid scans over the segment.
    pub grid_points: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            degree: 5,
            sg: None,
            min_segment_width: 10.0,
            min_prominence: 0.02,
            plateau_eps: 1e-3,
            plateau_min_width: 20.0,
            grid_points: 1000,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        if self.degree == 0 {
            return Err(DetectError::BadConfig("degree must be >= 1".into()));
        }
        if self.min_segment_width <= 0.0
            || self.min_prominence <= 0.0
            || self.plateau_eps <= 0.0
            || self.plateau_min_width <= 0.0
        {
            return Err(DetectError::BadConfig("thresholds must be positive".into()));
        }
        if self.grid_points < 100 {
            return Err(DetectError::BadConfig("grid_points must be >= 100".into()));
        }
        if let Some(sg) = self.sg {
            SgConfig::new(sg.window, sg.order).map_err(DetectError::Smooth)?;
        }
        Ok(())
    }

    /// Non-fatal advisories, e.g. a fit degree outside the recommended range.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (lo, hi) = DEGREE_RANGE;
        if self.degree < lo || self.degree > hi {
            out.push(format!(
                "degree {} is outside the recommended range [{lo}, {hi}]",
                self.degree
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    LocalMax,
    LocalMin,
}

/// A sign-changing root of the fitted derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub t: f64,
    pub kind: CriticalKind,
    /// Value gap between this extremum and the nearer (in value) of its two
    /// flanking extrema/endpoints; always ≥ 0.
    pub prominence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    DoubleDescent,
    Plateau,
    MonotoneDecrease,
    MonotoneIncrease,
    Inconclusive,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pattern::DoubleDescent => "double_descent",
            Pattern::Plateau => "plateau",
            Pattern::MonotoneDecrease => "monotone_decrease",
            Pattern::MonotoneIncrease => "monotone_increase",
            Pattern::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// Classification of one curve segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub pattern: Pattern,
    /// Peak time of the double descent, when detected.
    pub t_s: Option<f64>,
    /// (t_a, t_s): derivative strictly positive on the open interval.
    pub ascent: Option<(f64, f64)>,
    /// (t_s, t_b): derivative strictly negative on the open interval.
    pub descent: Option<(f64, f64)>,
    pub criticals: Vec<CriticalPoint>,
    pub fit: PolyFit,
    pub segment: (f64, f64),
    pub n_samples: usize,
    /// Set when the segment held fewer than 3·(degree+1) samples; the
    /// verdict is forced to inconclusive because aliasing can hide peaks.
    pub undersampled: bool,
    pub config: DetectorConfig,
}

/// Streaming early-stopping advice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Advice {
    ContinueTraining,
    StopConverged,
    PossibleDoubleDescent,
    StopDiverged,
}

/// All sign-changing roots of `dfit` strictly inside `segment`, isolated on a
/// uniform `grid_points`-sample scan and refined by bisection until the
/// bracket is narrower than `tol`. Tangential (non-sign-changing) roots are
/// not reported. Prominences are value gaps of the antiderivative.
pub fn critical_points(
    dfit: &PolyFit,
    segment: Segment,
    tol: f64,
    grid_points: usize,
) -> Vec<CriticalPoint> {
    let lo = segment.start();
    let hi = segment.end();
    let n = grid_points.max(2);
    let step = (hi - lo) / (n - 1) as f64;

    let mut roots: Vec<(f64, CriticalKind)> = Vec::new();
    let mut prev_t = lo;
    let mut prev_d = dfit.evaluate(prev_t);
    for i in 1..n {
        let t = if i == n - 1 { hi } else { lo + step * i as f64 };
        let d = dfit.evaluate(t);
        if prev_d == 0.0 {
            // Grid node exactly on a root: classify by neighbors.
            if d != 0.0 && i >= 2 {
                let before = dfit.evaluate(prev_t - 0.5 * step);
                if before > 0.0 && d < 0.0 {
                    roots.push((prev_t, CriticalKind::LocalMax));
                } else if before < 0.0 && d > 0.0 {
                    roots.push((prev_t, CriticalKind::LocalMin));
                }
            }
        } else if prev_d * d < 0.0 {
            let root = bisect(dfit, prev_t, t, tol);
            let kind = if prev_d > 0.0 {
                CriticalKind::LocalMax
            } else {
                CriticalKind::LocalMin
            };
            if root > lo && root < hi {
                roots.push((root, kind));
            }
        }
        prev_t = t;
        prev_d = d;
    }

    // Prominence: gap between the extremum value and the nearer flanking
    // value (previous/next root or segment endpoint), measured on the
    // antiderivative so no integration constant is needed.
    let value = dfit.antiderivative();
    let mut out = Vec::with_capacity(roots.len());
    for (i, &(t, kind)) in roots.iter().enumerate() {
        let left_t = if i == 0 { lo } else { roots[i - 1].0 };
        let right_t = if i + 1 == roots.len() { hi } else { roots[i + 1].0 };
        let v = value.evaluate(t);
        let vl = value.evaluate(left_t);
        let vr = value.evaluate(right_t);
        let prominence = match kind {
            CriticalKind::LocalMax => (v - vl.max(vr)).max(0.0),
            CriticalKind::LocalMin => (vl.min(vr) - v).max(0.0),
        };
        out.push(CriticalPoint { t, kind, prominence });
    }
    out
}

fn bisect(dfit: &PolyFit, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = dfit.evaluate(a);
    if fa == 0.0 {
        return a;
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let fm = dfit.evaluate(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fa > 0.0) == (fm > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// True when `dfit` is strictly positive (`want_positive`) or strictly
/// negative on the open interval, sampled at [`SIGN_AUDIT_POINTS`] interior
/// midpoints.
fn sign_holds(dfit: &PolyFit, lo: f64, hi: f64, want_positive: bool) -> bool {
    let n = SIGN_AUDIT_POINTS;
    let width = hi - lo;
    (0..n).all(|i| {
        let t = lo + width * (i as f64 + 0.5) / n as f64;
        let d = dfit.evaluate(t);
        if want_positive {
            d > 0.0
        } else {
            d < 0.0
        }
    })
}

/// Classifies an already-fitted segment. Verdict priority: double descent,
/// then plateau, then monotone (by derivative sign on ≥ 95% of the grid),
/// then inconclusive.
pub fn classify(
    fit: &PolyFit,
    segment: Segment,
    cfg: &DetectorConfig,
) -> Result<PatternReport, DetectError> {
    cfg.validate()?;
    let dfit = fit.derivative()?;
    let tol = segment.width() * 1e-9;
    let criticals = critical_points(&dfit, segment, tol, cfg.grid_points);

    let mut report = PatternReport {
        pattern: Pattern::Inconclusive,
        t_s: None,
        ascent: None,
        descent: None,
        criticals: criticals.clone(),
        fit: fit.clone(),
        segment: (segment.start(), segment.end()),
        n_samples: fit.n_samples(),
        undersampled: false,
        config: cfg.clone(),
    };

    // Double descent: the most prominent local maximum whose flanking
    // windows are wide enough and whose sign pattern audits clean.
    let mut best: Option<(f64, f64, f64, f64)> = None; // (prominence, t_a, t_s, t_b)
    for (i, c) in criticals.iter().enumerate() {
        if c.kind != CriticalKind::LocalMax || c.prominence < cfg.min_prominence {
            continue;
        }
        let t_a = if i == 0 { segment.start() } else { criticals[i - 1].t };
        let t_b = if i + 1 == criticals.len() {
            segment.end()
        } else {
            criticals[i + 1].t
        };
        if c.t - t_a < cfg.min_segment_width || t_b - c.t < cfg.min_segment_width {
            continue;
        }
        if !sign_holds(&dfit, t_a, c.t, true) || !sign_holds(&dfit, c.t, t_b, false) {
            continue;
        }
        if best.map_or(true, |(p, ..)| c.prominence > p) {
            best = Some((c.prominence, t_a, c.t, t_b));
        }
    }
    if let Some((_, t_a, t_s, t_b)) = best {
        report.pattern = Pattern::DoubleDescent;
        report.t_s = Some(t_s);
        report.ascent = Some((t_a, t_s));
        report.descent = Some((t_s, t_b));
        return Ok(report);
    }

    // Plateau: longest contiguous grid run with |derivative| < plateau_eps.
    let n = cfg.grid_points;
    let step = segment.width() / (n - 1) as f64;
    let grid_d: Vec<f64> = (0..n)
        .map(|i| dfit.evaluate(segment.start() + step * i as f64))
        .collect();
    let mut run = 0usize;
    let mut longest = 0usize;
    for &d in &grid_d {
        if d.abs() < cfg.plateau_eps {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    if longest >= 2 && (longest - 1) as f64 * step >= cfg.plateau_min_width {
        report.pattern = Pattern::Plateau;
        return Ok(report);
    }

    let neg = grid_d.iter().filter(|&&d| d < 0.0).count();
    let pos = grid_d.iter().filter(|&&d| d > 0.0).count();
    if neg as f64 >= 0.95 * n as f64 {
        report.pattern = Pattern::MonotoneDecrease;
    } else if pos as f64 >= 0.95 * n as f64 {
        report.pattern = Pattern::MonotoneIncrease;
    }
    Ok(report)
}

/// Full pipeline: restrict to the segment, optionally smooth, fit, classify.
///
/// The classified interval is the restricted curve's actual span (the
/// requested segment clipped to the data). When the segment holds fewer than
/// 3·(degree+1) samples the verdict is forced to inconclusive and the report
/// is flagged `undersampled`.
pub fn detect(
    curve: &LearningCurve,
    segment: Segment,
    cfg: &DetectorConfig,
) -> Result<PatternReport, DetectError> {
    cfg.validate()?;
    let restricted = restrict(curve, segment)?;
    let effective = restricted.span();
    let n = restricted.len();

    let prepared = match cfg.sg {
        Some(sg) => smooth(&restricted, sg)?,
        None => restricted,
    };
    let f = fit(&prepared, cfg.degree)?;
    let mut report = classify(&f, effective, cfg)?;
    report.n_samples = n;
    if n < 3 * (cfg.degree + 1) {
        report.pattern = Pattern::Inconclusive;
        report.t_s = None;
        report.ascent = None;
        report.descent = None;
        report.undersampled = true;
    }
    Ok(report)
}

/// Early-stopping advice from a growing evaluation history.
///
/// Runs [`detect`] on the recorded history; advice beyond the verdict uses
/// the trailing evaluations: a converged stop needs the last `patience`
/// steps flatter than `plateau_eps`, a diverged stop needs a rising trailing
/// window of 3·`patience` evaluations with no detected local maximum.
pub fn advise(history: &LearningCurve, cfg: &DetectorConfig, patience: usize) -> Advice {
    let patience = patience.max(1);
    let report = match detect(history, history.span(), cfg) {
        Ok(r) => r,
        // Not enough history yet (too short for the fit degree or the SG
        // window): keep training.
        Err(_) => return Advice::ContinueTraining,
    };

    if report.pattern == Pattern::DoubleDescent {
        if let Some(t_s) = report.t_s {
            let last_t = history.points()[history.len() - 1].0;
            if last_t > t_s {
                return Advice::PossibleDoubleDescent;
            }
        }
    }

    if matches!(report.pattern, Pattern::MonotoneDecrease | Pattern::Plateau)
        && stalled(history, patience, cfg.plateau_eps)
    {
        return Advice::StopConverged;
    }

    if history.len() > 3 * patience {
        let tail: Vec<(f64, f64)> =
            history.points()[history.len() - 3 * patience..].to_vec();
        let rising = tail.windows(2).all(|p| p[1].1 >= p[0].1);
        let has_max = report
            .criticals
            .iter()
            .any(|c| c.kind == CriticalKind::LocalMax);
        if rising && !has_max && report.pattern == Pattern::MonotoneIncrease {
            return Advice::StopDiverged;
        }
    }

    Advice::ContinueTraining
}

/// True when each of the last `patience` steps moved the value by less than
/// `eps` per time unit.
fn stalled(history: &LearningCurve, patience: usize, eps: f64) -> bool {
    if history.len() < patience + 1 {
        return false;
    }
    history.points()[history.len() - patience - 1..]
        .windows(2)
        .all(|p| {
            let dt = p[1].0 - p[0].0;
            ((p[1].1 - p[0].1) / dt).abs() < eps
        })
}
