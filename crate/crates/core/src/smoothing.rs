//! Savitzky–Golay pre-filter: a moving least-squares polynomial evaluated at
//! the window center, expressible as fixed convolution weights.
//!
//! Edges are handled by evaluating the first/last full window's fitted
//! polynomial at the off-center positions. This keeps polynomial signals
//! exact all the way to the boundary, where double-descent peaks may sit.

use std::fmt;

use crate::curve::LearningCurve;
use crate::linalg::{cholesky, cholesky_solve};
use crate::polyfit::build_vandermonde;

/// Relative tolerance for the uniform-spacing check.
const SPACING_TOL: f64 = 1e-9;

/// Filter configuration: odd window length and local polynomial order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SgConfig {
    pub window: usize,
    pub order: usize,
}

impl SgConfig {
    pub fn new(window: usize, order: usize) -> Result<SgConfig, SmoothError> {
        if window < 3 || window % 2 == 0 {
            return Err(SmoothError::BadWindow { window });
        }
        if order >= window {
            return Err(SmoothError::OrderTooHigh { window, order });
        }
        Ok(SgConfig { window, order })
    }
}

impl Default for SgConfig {
    fn default() -> Self {
        SgConfig { window: 11, order: 3 }
    }
}

#[derive(Debug)]
pub enum SmoothError {
    /// Window must be odd and at least 3.
    BadWindow { window: usize },
    /// Local polynomial order must be below the window length.
    OrderTooHigh { window: usize, order: usize },
    /// Curve has fewer samples than the window.
    CurveTooShort { len: usize, window: usize },
    /// Sample times are not uniformly spaced.
    NonUniformSpacing { index: usize },
}

impl fmt::Display for SmoothError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmoothError::BadWindow { window } => {
                write!(f, "window must be odd and >= 3, got {window}")
            }
            SmoothError::OrderTooHigh { window, order } => {
                write!(f, "order {order} must be < window {window}")
            }
            SmoothError::CurveTooShort { len, window } => {
                write!(f, "curve of {len} points is shorter than window {window}")
            }
            SmoothError::NonUniformSpacing { index } => {
                write!(f, "non-uniform sample spacing at index {index}")
            }
        }
    }
}

impl std::error::Error for SmoothError {}

/// Least-squares fit of a degree-`order` polynomial to `values` sampled at
/// normalized positions `(j − m)/m`; returns the coefficients.
fn local_fit(values: &[f64], order: usize) -> Vec<f64> {
    let window = values.len();
    let m = (window - 1) / 2;
    let positions: Vec<f64> = (0..window)
        .map(|j| (j as f64 - m as f64) / m as f64)
        .collect();
    let x = build_vandermonde(&positions, order);
    let normal = x.gram();
    let rhs = x.transpose_mul_vec(values);
    let l = cholesky(&normal).expect("local SG system is positive definite for order < window");
    cholesky_solve(&l, &rhs)
}

fn eval_poly(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| u.mul_add(acc, c))
}

/// Convolution weights such that applying them to `window` samples equals
/// evaluating the local least-squares polynomial at the window center.
/// The weights sum to 1.
pub fn sg_weights(window: usize, order: usize) -> Result<Vec<f64>, SmoothError> {
    let cfg = SgConfig::new(window, order)?;
    let m = (cfg.window - 1) / 2;
    let positions: Vec<f64> = (0..cfg.window)
        .map(|j| (j as f64 - m as f64) / m as f64)
        .collect();
    let x = build_vandermonde(&positions, cfg.order);
    let normal = x.gram();
    let l = cholesky(&normal).expect("local SG system is positive definite for order < window");
    // Fitted value at the center is e0ᵀ(XᵀX)⁻¹Xᵀy, so the weight vector is
    // X (XᵀX)⁻¹ e0.
    let mut e0 = vec![0.0; cfg.order + 1];
    e0[0] = 1.0;
    let z = cholesky_solve(&l, &e0);
    Ok((0..cfg.window)
        .map(|j| {
            x.row(j)
                .iter()
                .zip(&z)
                .map(|(&a, &b)| a * b)
                .sum::<f64>()
        })
        .collect())
}

/// Applies the Savitzky–Golay filter to a uniformly sampled curve.
/// Times are unchanged; only values are filtered.
pub fn smooth(curve: &LearningCurve, cfg: SgConfig) -> Result<LearningCurve, SmoothError> {
    let n = curve.len();
    if n < cfg.window {
        return Err(SmoothError::CurveTooShort { len: n, window: cfg.window });
    }
    let times: Vec<f64> = curve.times().collect();
    let h = (times[n - 1] - times[0]) / (n - 1) as f64;
    for i in 0..n - 1 {
        let dt = times[i + 1] - times[i];
        if (dt - h).abs() > SPACING_TOL * h.abs().max(dt.abs()) {
            return Err(SmoothError::NonUniformSpacing { index: i + 1 });
        }
    }

    let values: Vec<f64> = curve.values().collect();
    let m = (cfg.window - 1) / 2;
    let weights = sg_weights(cfg.window, cfg.order).expect("cfg validated");

    let mut out = vec![0.0; n];
    for i in m..n - m {
        out[i] = weights
            .iter()
            .zip(&values[i - m..i + m + 1])
            .map(|(&w, &v)| w * v)
            .sum();
    }
    // Edge policy: evaluate the first/last full window's polynomial at the
    // off-center positions.
    let head = local_fit(&values[..cfg.window], cfg.order);
    for i in 0..m {
        let u = (i as f64 - m as f64) / m as f64;
        out[i] = eval_poly(&head, u);
    }
    let tail = local_fit(&values[n - cfg.window..], cfg.order);
    for i in n - m..n {
        let center = (n - 1 - m) as f64;
        let u = (i as f64 - center) / m as f64;
        out[i] = eval_poly(&tail, u);
    }

    Ok(curve
        .with_values(out)
        .expect("times unchanged, values finite"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::TimeUnit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn uniform_curve(values: Vec<f64>) -> LearningCurve {
        LearningCurve::from_values(&values).unwrap()
    }

    /// Independent local least-squares oracle: solves the window's normal
    /// equations with plain Gauss-Jordan elimination on raw (unnormalized)
    /// positions and evaluates the fitted polynomial at `at`.
    fn oracle_window_eval(values: &[f64], order: usize, at: f64) -> f64 {
        let w = values.len();
        let m = (w - 1) as f64 / 2.0;
        let dim = order + 1;
        // Normal matrix and right-hand side over positions -m..m.
        let mut a = vec![vec![0.0; dim + 1]; dim];
        for (j, &v) in values.iter().enumerate() {
            let p = j as f64 - m;
            for r in 0..dim {
                for c in 0..dim {
                    a[r][c] += p.powi(r as i32) * p.powi(c as i32);
                }
                a[r][dim] += p.powi(r as i32) * v;
            }
        }
        // Gauss-Jordan with partial pivoting.
        for col in 0..dim {
            let piv = (col..dim)
                .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            let d = a[col][col];
            for c in col..=dim {
                a[col][c] /= d;
            }
            for r in 0..dim {
                if r != col {
                    let f = a[r][col];
                    for c in col..=dim {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        (0..dim).map(|r| a[r][dim] * at.powi(r as i32)).sum()
    }

    #[test]
    fn window3_order0_is_moving_average() {
        let w = sg_weights(3, 0).unwrap();
        for &x in &w {
            assert!((x - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn window5_order2_matches_classic_table_and_oracle() {
        let w = sg_weights(5, 2).unwrap();
        let expected = [-3.0 / 35.0, 12.0 / 35.0, 17.0 / 35.0, 12.0 / 35.0, -3.0 / 35.0];
        for (got, want) in w.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // Cross-check against the independent oracle on an arbitrary window.
        let vals = [0.3, -1.2, 0.7, 2.0, -0.5];
        let direct: f64 = w.iter().zip(vals).map(|(&wi, v)| wi * v).sum();
        let want = oracle_window_eval(&vals, 2, 0.0);
        assert!((direct - want).abs() < 1e-12);
    }

    #[test]
    fn interpolating_window_reproduces_center_sample() {
        let w = sg_weights(3, 2).unwrap();
        assert!(w[0].abs() < 1e-12);
        assert!((w[1] - 1.0).abs() < 1e-12);
        assert!(w[2].abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_one_for_all_configs() {
        for window in (3..=15).step_by(2) {
            for order in 0..window.min(7) {
                let w = sg_weights(window, order).unwrap();
                let s: f64 = w.iter().sum();
                assert!((s - 1.0).abs() < 1e-11, "window {window} order {order}: {s}");
            }
        }
    }

    #[test]
    fn order_not_below_window_is_rejected() {
        assert!(matches!(sg_weights(5, 5), Err(SmoothError::OrderTooHigh { .. })));
        assert!(matches!(sg_weights(4, 1), Err(SmoothError::BadWindow { .. })));
    }

    #[test]
    fn constant_curve_is_unchanged() {
        let c = uniform_curve(vec![5.0; 31]);
        for (window, order) in [(3, 0), (5, 2), (11, 3)] {
            let s = smooth(&c, SgConfig::new(window, order).unwrap()).unwrap();
            for (&(_, v), &(_, v0)) in s.points().iter().zip(c.points()) {
                assert!((v - v0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadratic_signal_passes_through_including_edges() {
        let values: Vec<f64> = (0..41).map(|i| {
            let t = i as f64;
            t * t
        }).collect();
        let c = uniform_curve(values);
        let s = smooth(&c, SgConfig::new(5, 2).unwrap()).unwrap();
        for (&(t, v), &(_, v0)) in s.points().iter().zip(c.points()) {
            assert!(
                (v - v0).abs() <= 1e-9 * v0.abs().max(1.0),
                "t={t}: {v} vs {v0}"
            );
        }
    }

    #[test]
    fn white_noise_matches_per_window_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let values: Vec<f64> = (0..101).map(|_| normal.sample(&mut rng)).collect();
        let c = uniform_curve(values.clone());
        let cfg = SgConfig::new(11, 3).unwrap();
        let s = smooth(&c, cfg).unwrap();

        let m = 5;
        let n = values.len();
        for i in 0..n {
            let want = if i < m {
                oracle_window_eval(&values[..11], 3, i as f64 - m as f64)
            } else if i >= n - m {
                let center = n - 1 - m;
                oracle_window_eval(&values[n - 11..], 3, i as f64 - center as f64)
            } else {
                oracle_window_eval(&values[i - m..i + m + 1], 3, 0.0)
            };
            let got = s.points()[i].1;
            assert!((got - want).abs() < 1e-10, "index {i}: {got} vs {want}");
        }
    }

    #[test]
    fn filter_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..51).map(|_| normal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..51).map(|_| normal.sample(&mut rng)).collect();
        let (a, b) = (2.5, -0.75);
        let combined: Vec<f64> = x.iter().zip(&y).map(|(&xi, &yi)| a * xi + b * yi).collect();
        let cfg = SgConfig::default();
        let sx = smooth(&uniform_curve(x), cfg).unwrap();
        let sy = smooth(&uniform_curve(y), cfg).unwrap();
        let sc = smooth(&uniform_curve(combined), cfg).unwrap();
        for i in 0..51 {
            let want = a * sx.points()[i].1 + b * sy.points()[i].1;
            assert!((sc.points()[i].1 - want).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_variance_does_not_increase_on_iid_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let values: Vec<f64> = (0..301).map(|_| normal.sample(&mut rng)).collect();
        let c = uniform_curve(values.clone());
        let s = smooth(&c, SgConfig::default()).unwrap();
        let var = |xs: &[f64]| {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64
        };
        let interior_in: Vec<f64> = values[5..296].to_vec();
        let interior_out: Vec<f64> = s.points()[5..296].iter().map(|p| p.1).collect();
        assert!(var(&interior_out) <= var(&interior_in));
    }

    #[test]
    fn non_uniform_spacing_is_rejected() {
        let c = LearningCurve::new(
            vec![(0.0, 1.0), (1.0, 0.9), (2.5, 0.8), (3.0, 0.7), (4.0, 0.6)],
            "",
            TimeUnit::Epoch,
        )
        .unwrap();
        assert!(matches!(
            smooth(&c, SgConfig::new(3, 1).unwrap()),
            Err(SmoothError::NonUniformSpacing { .. })
        ));
    }

    #[test]
    fn curve_shorter_than_window_is_rejected() {
        let c = uniform_curve(vec![1.0, 0.5, 0.25]);
        assert!(matches!(
            smooth(&c, SgConfig::new(5, 2).unwrap()),
            Err(SmoothError::CurveTooShort { .. })
        ));
    }
}
