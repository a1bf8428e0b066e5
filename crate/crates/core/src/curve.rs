//! Learning-curve data model and (de)serialization.
//!
//! A [`LearningCurve`] is an ordered sequence of `(time, value)` samples of an
//! estimated generalization error. Times are strictly increasing and values
//! are finite; both are enforced at construction so every downstream stage
//! can rely on them.

use std::fmt;
use std::io::{self, BufRead};

/// Unit of the curve's time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnit {
    Epoch,
    Step,
}

impl TimeUnit {
    pub fn as_str(&self) -> &'static str {
        match self {
            TimeUnit::Epoch => "epoch",
            TimeUnit::Step => "step",
        }
    }

    pub fn parse(s: &str) -> Option<TimeUnit> {
        match s {
            "epoch" => Some(TimeUnit::Epoch),
            "step" => Some(TimeUnit::Step),
            _ => None,
        }
    }
}

/// Errors produced by curve construction, ingestion, and restriction.
#[derive(Debug)]
pub enum CurveError {
    Io(io::Error),
    /// A row that does not parse under the declared format. `line` is 1-based.
    Parse { line: usize, msg: String },
    /// NaN or infinite time/value.
    NonFinite { time: f64, value: f64 },
    /// Times must be ≥ 0.
    NegativeTime { time: f64 },
    /// Two samples share a time; aggregation is refused.
    DuplicateTime { time: f64 },
    /// A curve needs at least 2 points.
    TooFewPoints { got: usize },
    /// Segment bounds must satisfy start < end and be finite.
    InvalidSegment { start: f64, end: f64 },
    /// Fewer than 2 points fall inside the requested segment.
    SparseSegment { in_range: usize },
}

impl fmt::Display for CurveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveError::Io(e) => write!(f, "i/o error: {e}"),
            CurveError::Parse { line, msg } => write!(f, "parse error at line {line}: {msg}"),
            CurveError::NonFinite { time, value } => {
                write!(f, "non-finite sample (t={time}, v={value})")
            }
            CurveError::NegativeTime { time } => write!(f, "negative time {time}"),
            CurveError::DuplicateTime { time } => write!(f, "duplicate time {time}"),
            CurveError::TooFewPoints { got } => {
                write!(f, "a curve needs at least 2 points, got {got}")
            }
            CurveError::InvalidSegment { start, end } => {
                write!(f, "invalid segment [{start}, {end}]")
            }
            CurveError::SparseSegment { in_range } => {
                write!(f, "segment covers {in_range} point(s), need at least 2")
            }
        }
    }
}

impl std::error::Error for CurveError {}

impl From<io::Error> for CurveError {
    fn from(e: io::Error) -> Self {
        CurveError::Io(e)
    }
}

/// A closed time interval `[start, end]` used to select part of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    start: f64,
    end: f64,
}

impl Segment {
    pub fn new(start: f64, end: f64) -> Result<Segment, CurveError> {
        if !start.is_finite() || !end.is_finite() || start >= end {
            return Err(CurveError::InvalidSegment { start, end });
        }
        Ok(Segment { start, end })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

/// Validated, immutable learning curve.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    points: Vec<(f64, f64)>,
    label: String,
    time_unit: TimeUnit,
}

impl LearningCurve {
    /// Builds a curve from raw points. Points are sorted by time; duplicate
    /// times, non-finite samples, negative times, and curves shorter than 2
    /// points are rejected.
    pub fn new(
        mut points: Vec<(f64, f64)>,
        label: impl Into<String>,
        time_unit: TimeUnit,
    ) -> Result<LearningCurve, CurveError> {
        for &(t, v) in &points {
            if !t.is_finite() || !v.is_finite() {
                return Err(CurveError::NonFinite { time: t, value: v });
            }
            if t < 0.0 {
                return Err(CurveError::NegativeTime { time: t });
            }
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("times are finite"));
        if points.len() < 2 {
            return Err(CurveError::TooFewPoints { got: points.len() });
        }
        for pair in points.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(CurveError::DuplicateTime { time: pair[0].0 });
            }
        }
        Ok(LearningCurve {
            points,
            label: label.into(),
            time_unit,
        })
    }

    /// Curve over `values` sampled at times `0, 1, 2, …` (epoch indices).
    pub fn from_values(values: &[f64]) -> Result<LearningCurve, CurveError> {
        let points = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as f64, v))
            .collect();
        LearningCurve::new(points, "", TimeUnit::Epoch)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a validated curve has at least 2 points
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn time_unit(&self) -> TimeUnit {
        self.time_unit
    }

    pub fn with_label(mut self, label: impl Into<String>) -> LearningCurve {
        self.label = label.into();
        self
    }

    /// Full time span of the curve as a segment.
    pub fn span(&self) -> Segment {
        Segment {
            start: self.points[0].0,
            end: self.points[self.points.len() - 1].0,
        }
    }

    /// Replaces the values, keeping times/label/unit. Lengths must match.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Result<LearningCurve, CurveError> {
        assert_eq!(values.len(), self.points.len());
        let points = self
            .points
            .iter()
            .zip(values)
            .map(|(&(t, _), v)| (t, v))
            .collect();
        LearningCurve::new(points, self.label.clone(), self.time_unit)
    }
}

/// Supported on-disk curve formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFormat {
    Csv,
    Jsonl,
}

const CSV_HEADER: &str = "epoch,value";

#[derive(serde::Deserialize)]
struct JsonlPoint {
    t: f64,
    v: f64,
}

#[derive(serde::Deserialize)]
struct JsonlMeta {
    label: Option<String>,
    time_unit: Option<String>,
}

/// Parses a curve from a byte stream in the given format.
///
/// Rows out of order are accepted and sorted; duplicate times and non-finite
/// values are rejected.
pub fn load_curve(source: impl BufRead, format: CurveFormat) -> Result<LearningCurve, CurveError> {
    match format {
        CurveFormat::Csv => load_csv(source),
        CurveFormat::Jsonl => load_jsonl(source),
    }
}

fn load_csv(source: impl BufRead) -> Result<LearningCurve, CurveError> {
    let mut points = Vec::new();
    let mut lines = source.lines().enumerate();
    match lines.next() {
        Some((_, line)) => {
            let line = line?;
            if line.trim() != CSV_HEADER {
                return Err(CurveError::Parse {
                    line: 1,
                    msg: format!("expected header '{CSV_HEADER}', got '{}'", line.trim()),
                });
            }
        }
        None => {
            return Err(CurveError::Parse {
                line: 1,
                msg: "empty input".into(),
            })
        }
    }
    for (idx, line) in lines {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (t_str, v_str) = match (fields.next(), fields.next(), fields.next()) {
            (Some(t), Some(v), None) => (t, v),
            _ => {
                return Err(CurveError::Parse {
                    line: line_no,
                    msg: "expected exactly 2 comma-separated fields".into(),
                })
            }
        };
        let t: f64 = t_str.trim().parse().map_err(|e| CurveError::Parse {
            line: line_no,
            msg: format!("bad time '{}': {e}", t_str.trim()),
        })?;
        let v: f64 = v_str.trim().parse().map_err(|e| CurveError::Parse {
            line: line_no,
            msg: format!("bad value '{}': {e}", v_str.trim()),
        })?;
        points.push((t, v));
    }
    LearningCurve::new(points, "", TimeUnit::Epoch)
}

fn load_jsonl(source: impl BufRead) -> Result<LearningCurve, CurveError> {
    let mut points = Vec::new();
    let mut label = String::new();
    let mut time_unit = TimeUnit::Epoch;
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(p) = serde_json::from_str::<JsonlPoint>(&line) {
            points.push((p.t, p.v));
            continue;
        }
        // A metadata object is only allowed before any data point.
        if points.is_empty() {
            if let Ok(meta) = serde_json::from_str::<JsonlMeta>(&line) {
                if let Some(l) = meta.label {
                    label = l;
                }
                if let Some(u) = meta.time_unit {
                    time_unit = TimeUnit::parse(&u).ok_or_else(|| CurveError::Parse {
                        line: line_no,
                        msg: format!("unknown time_unit '{u}'"),
                    })?;
                }
                continue;
            }
        }
        return Err(CurveError::Parse {
            line: line_no,
            msg: "expected a {\"t\": …, \"v\": …} object".into(),
        });
    }
    LearningCurve::new(points, label, time_unit)
}

/// Serializes a curve. Values carry 17 significant digits so that
/// `load_curve(save_curve(c)) == c` bit-exactly.
pub fn save_curve(curve: &LearningCurve, format: CurveFormat) -> Vec<u8> {
    let mut out = String::new();
    match format {
        CurveFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for &(t, v) in curve.points() {
                out.push_str(&format!("{t:.16e},{v:.16e}\n"));
            }
        }
        CurveFormat::Jsonl => {
            let label = serde_json::to_string(curve.label()).expect("string serializes");
            out.push_str(&format!(
                "{{\"label\": {label}, \"time_unit\": \"{}\"}}\n",
                curve.time_unit().as_str()
            ));
            for &(t, v) in curve.points() {
                out.push_str(&format!("{{\"t\": {t:.16e}, \"v\": {v:.16e}}}\n"));
            }
        }
    }
    out.into_bytes()
}

/// Sub-curve with times inside `[segment.start, segment.end]`.
pub fn restrict(curve: &LearningCurve, segment: Segment) -> Result<LearningCurve, CurveError> {
    let points: Vec<(f64, f64)> = curve
        .points()
        .iter()
        .copied()
        .filter(|&(t, _)| segment.contains(t))
        .collect();
    if points.len() < 2 {
        return Err(CurveError::SparseSegment {
            in_range: points.len(),
        });
    }
    LearningCurve::new(points, curve.label().to_string(), curve.time_unit())
}
