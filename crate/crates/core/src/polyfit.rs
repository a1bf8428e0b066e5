//! Global least-squares polynomial fit of a curve segment via the
//! Vandermonde normal equations.
//!
//! Sample times are mapped to u ∈ [−1, 1] before the Vandermonde matrix is
//! built: raw epoch counts in the thousands raised to the 6th power make the
//! normal matrix numerically singular, while the affine reparameterization
//! leaves the least-squares minimizer unchanged.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::curve::LearningCurve;
use crate::linalg::{cholesky, cholesky_solve, spd_condition_estimate, Matrix};

/// Normal matrices with a condition estimate beyond this are rejected:
/// double-precision coefficients would be noise.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Recommended degree range; fits outside it are allowed but warned about.
pub const DEGREE_RANGE: (usize, usize) = (3, 6);

/// Default fit degree.
pub const DEFAULT_DEGREE: usize = 5;

#[derive(Debug)]
pub enum FitError {
    /// Fewer samples than coefficients.
    InsufficientSamples { needed: usize, got: usize },
    /// det(VᵀV) numerically zero.
    SingularNormalMatrix,
    /// Condition estimate of VᵀV exceeds [`CONDITION_LIMIT`].
    IllConditioned { cond: f64 },
    /// Derivative of a degree-0 fit.
    ConstantFit,
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::InsufficientSamples { needed, got } => {
                write!(f, "need at least {needed} samples for this degree, got {got}")
            }
            FitError::SingularNormalMatrix => write!(f, "normal matrix is singular"),
            FitError::IllConditioned { cond } => {
                write!(f, "normal matrix condition estimate {cond:.3e} exceeds {CONDITION_LIMIT:.0e}")
            }
            FitError::ConstantFit => write!(f, "cannot differentiate a degree-0 fit"),
        }
    }
}

impl std::error::Error for FitError {}

/// A fitted polynomial on the normalized domain u = (t − t_center)/t_halfwidth.
///
/// `coeffs[i]` multiplies uⁱ. The domain map travels with the coefficients so
/// the fit can be evaluated and differentiated in raw time units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    degree: usize,
    coeffs: Vec<f64>,
    t_center: f64,
    t_halfwidth: f64,
    sse: f64,
    #[serde(rename = "n")]
    n_samples: usize,
}

impl PolyFit {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficients on the normalized u-domain, constant term first.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn t_center(&self) -> f64 {
        self.t_center
    }

    pub fn t_halfwidth(&self) -> f64 {
        self.t_halfwidth
    }

    /// Sum of squared residuals at the fitted samples.
    pub fn sse(&self) -> f64 {
        self.sse
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    #[inline]
    pub fn u_of(&self, t: f64) -> f64 {
        (t - self.t_center) / self.t_halfwidth
    }

    /// True when `t` lies outside the fitted domain (|u| > 1); evaluation is
    /// still allowed, but it is extrapolation.
    pub fn is_extrapolating(&self, t: f64) -> bool {
        self.u_of(t).abs() > 1.0
    }

    /// Horner evaluation at raw time `t`.
    #[inline]
    pub fn evaluate(&self, t: f64) -> f64 {
        self.evaluate_u(self.u_of(t))
    }

    #[inline]
    pub fn evaluate_u(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| u.mul_add(acc, c))
    }

    /// dP/dt as a fit on the same domain map. The chain-rule factor
    /// 1/t_halfwidth is folded into the coefficients.
    pub fn derivative(&self) -> Result<PolyFit, FitError> {
        if self.degree == 0 {
            return Err(FitError::ConstantFit);
        }
        let coeffs: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * i as f64 / self.t_halfwidth)
            .collect();
        Ok(PolyFit {
            degree: self.degree - 1,
            coeffs,
            t_center: self.t_center,
            t_halfwidth: self.t_halfwidth,
            sse: 0.0,
            n_samples: self.n_samples,
        })
    }

    /// ∫P dt with zero constant term, on the same domain map. Differences of
    /// the antiderivative give exact value gaps between times, which is all
    /// the detector needs for prominences.
    pub fn antiderivative(&self) -> PolyFit {
        let mut coeffs = vec![0.0; self.degree + 2];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[i + 1] = c * self.t_halfwidth / (i + 1) as f64;
        }
        PolyFit {
            degree: self.degree + 1,
            coeffs,
            t_center: self.t_center,
            t_halfwidth: self.t_halfwidth,
            sse: 0.0,
            n_samples: self.n_samples,
        }
    }
}

/// Vandermonde matrix of the (already normalized) times: row i is
/// `[1, uᵢ, uᵢ², …, uᵢᵏ]`.
pub fn build_vandermonde(times_u: &[f64], k: usize) -> Matrix {
    let mut v = Matrix::zeros(times_u.len(), k + 1);
    for (row, &u) in times_u.iter().enumerate() {
        let mut p = 1.0;
        for col in 0..=k {
            v.set(row, col, p);
            p *= u;
        }
    }
    v
}

/// Least-squares fit of a degree-`k` polynomial to the curve, solved through
/// the normal equations VᵀV a = Vᵀy on the normalized domain.
pub fn fit(curve: &LearningCurve, k: usize) -> Result<PolyFit, FitError> {
    let n = curve.len();
    if n < k + 1 {
        return Err(FitError::InsufficientSamples { needed: k + 1, got: n });
    }
    let t_min = curve.points()[0].0;
    let t_max = curve.points()[n - 1].0;
    let t_center = 0.5 * (t_min + t_max);
    let t_halfwidth = 0.5 * (t_max - t_min);

    let times_u: Vec<f64> = curve.times().map(|t| (t - t_center) / t_halfwidth).collect();
    let values: Vec<f64> = curve.values().collect();

    let v = build_vandermonde(&times_u, k);
    let normal = v.gram();
    let rhs = v.transpose_mul_vec(&values);

    let l = cholesky(&normal).ok_or(FitError::SingularNormalMatrix)?;
    let cond = spd_condition_estimate(&normal, &l);
    if cond > CONDITION_LIMIT {
        return Err(FitError::IllConditioned { cond });
    }
    let coeffs = cholesky_solve(&l, &rhs);

    let mut result = PolyFit {
        degree: k,
        coeffs,
        t_center,
        t_halfwidth,
        sse: 0.0,
        n_samples: n,
    };
    result.sse = times_u
        .iter()
        .zip(&values)
        .map(|(&u, &y)| {
            let r = result.evaluate_u(u) - y;
            r * r
        })
        .sum();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::TimeUnit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn curve(points: Vec<(f64, f64)>) -> LearningCurve {
        LearningCurve::new(points, "", TimeUnit::Epoch).unwrap()
    }

    #[test]
    fn vandermonde_rows_are_powers() {
        let v = build_vandermonde(&[0.0], 2);
        assert_eq!(v.data, vec![1.0, 0.0, 0.0]);
        let v = build_vandermonde(&[-1.0, 1.0], 1);
        assert_eq!(v.data, vec![1.0, -1.0, 1.0, 1.0]);
        let v = build_vandermonde(&[0.5], 3);
        assert_eq!(v.data, vec![1.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn constant_values_give_constant_fit() {
        let c = curve((0..10).map(|i| (i as f64, 5.0)).collect());
        let f = fit(&c, 2).unwrap();
        assert!((f.coeffs()[0] - 5.0).abs() < 1e-12);
        assert!(f.coeffs()[1].abs() < 1e-12);
        assert!(f.coeffs()[2].abs() < 1e-12);
        assert!(f.sse() < 1e-20);
    }

    #[test]
    fn line_fit_matches_hand_solved_normal_equations() {
        // Least squares line through (0,0), (1,1), (2,2.1):
        // slope 1.05, intercept −1/60 on raw t, sse = 1/600.
        let c = curve(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 2.1)]);
        let f = fit(&c, 1).unwrap();
        // Domain map is u = t − 1, so a0 = value at t=1, a1 = slope.
        assert_eq!(f.t_center(), 1.0);
        assert_eq!(f.t_halfwidth(), 1.0);
        assert!((f.coeffs()[1] - 1.05).abs() < 1e-12);
        assert!((f.coeffs()[0] - 31.0 / 30.0).abs() < 1e-12);
        assert!((f.evaluate(0.0) - (-1.0 / 60.0)).abs() < 1e-12);
        assert!((f.sse() - 1.0 / 600.0).abs() < 1e-12);
        // Evaluation beyond the fitted data follows the same line.
        assert!((f.evaluate(2.0) - 25.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_degree_five_coefficients_from_noiseless_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let truth: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let n = 200;
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let t = i as f64;
                let u = (t - 99.5) / 99.5;
                let v = truth.iter().rev().fold(0.0, |acc, &c| u.mul_add(acc, c));
                (t, v)
            })
            .collect();
        let f = fit(&curve(pts), 5).unwrap();
        for (got, want) in f.coeffs().iter().zip(&truth) {
            assert!(
                (got - want).abs() <= 1e-8 * want.abs().max(1.0),
                "coefficient {got} vs {want}"
            );
        }
    }

    #[test]
    fn exact_degree_k_samples_leave_negligible_residual() {
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let t = i as f64;
                (t, 0.3 + 0.02 * t - 0.001 * t * t)
            })
            .collect();
        let c = curve(pts);
        let f = fit(&c, 2).unwrap();
        let sum_sq: f64 = c.values().map(|v| v * v).sum();
        assert!(f.sse() <= 1e-16 * sum_sq);
    }

    #[test]
    fn evaluate_uses_horner_on_normalized_domain() {
        let c = curve(vec![(0.0, 5.0), (10.0, 5.0), (20.0, 5.0)]);
        let f = fit(&c, 2).unwrap();
        assert!((f.evaluate(3.7) - 5.0).abs() < 1e-12);
        assert!((f.evaluate(-100.0) - 5.0).abs() < 1e-9);
        assert!(f.is_extrapolating(-100.0));
        assert!(!f.is_extrapolating(20.0));
    }

    #[test]
    fn derivative_applies_chain_rule() {
        // u² on halfwidth h differentiates to 2u/h.
        let h = 7.0;
        let base = PolyFit {
            degree: 2,
            coeffs: vec![0.0, 0.0, 1.0],
            t_center: 10.0,
            t_halfwidth: h,
            sse: 0.0,
            n_samples: 3,
        };
        let d = base.derivative().unwrap();
        assert_eq!(d.degree(), 1);
        assert!((d.coeffs()[0]).abs() < 1e-15);
        assert!((d.coeffs()[1] - 2.0 / h).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_constant_errors() {
        let base = PolyFit {
            degree: 0,
            coeffs: vec![5.0],
            t_center: 0.0,
            t_halfwidth: 1.0,
            sse: 0.0,
            n_samples: 2,
        };
        assert!(matches!(base.derivative(), Err(FitError::ConstantFit)));
    }

    #[test]
    fn second_derivative_of_cubic_matches_analytic_form() {
        // P(t) = t³ on [0, 4] → P''(t) = 6t.
        let pts: Vec<(f64, f64)> = (0..9).map(|i| {
            let t = 0.5 * i as f64;
            (t, t * t * t)
        }).collect();
        let f = fit(&curve(pts), 3).unwrap();
        let d2 = f.derivative().unwrap().derivative().unwrap();
        assert_eq!(d2.degree(), 1);
        for &t in &[0.0, 1.3, 2.0, 4.0] {
            assert!(
                (d2.evaluate(t) - 6.0 * t).abs() < 1e-9,
                "second derivative at {t}: {} vs {}",
                d2.evaluate(t),
                6.0 * t
            );
        }
    }

    #[test]
    fn antiderivative_differences_recover_value_gaps() {
        let pts: Vec<(f64, f64)> = (0..30)
            .map(|i| {
                let t = i as f64;
                (t, 1.0 - 0.01 * t + 0.002 * t * t)
            })
            .collect();
        let f = fit(&curve(pts), 2).unwrap();
        let d = f.derivative().unwrap();
        let q = d.antiderivative();
        let gap = q.evaluate(20.0) - q.evaluate(5.0);
        let want = f.evaluate(20.0) - f.evaluate(5.0);
        assert!((gap - want).abs() < 1e-10, "{gap} vs {want}");
    }

    #[test]
    fn affine_value_transform_scales_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<(f64, f64)> = (0..50)
            .map(|i| (i as f64, rng.gen_range(0.0..1.0)))
            .collect();
        let base = curve(pts.clone());
        let scaled = curve(pts.iter().map(|&(t, v)| (t, 3.0 * v + 0.25)).collect());
        let f0 = fit(&base, 4).unwrap();
        let f1 = fit(&scaled, 4).unwrap();
        for i in 0..=4 {
            let want = if i == 0 {
                3.0 * f0.coeffs()[0] + 0.25
            } else {
                3.0 * f0.coeffs()[i]
            };
            assert!((f1.coeffs()[i] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn residual_is_locally_minimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(12..60);
            let k = rng.gen_range(1..=5usize);
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|i| (i as f64, rng.gen_range(-1.0..1.0)))
                .collect();
            let c = curve(pts);
            let f = fit(&c, k).unwrap();
            for ci in 0..=k {
                for delta in [-1e-3, 1e-3] {
                    let mut perturbed = f.clone();
                    perturbed.coeffs[ci] += delta;
                    let sse: f64 = c
                        .points()
                        .iter()
                        .map(|&(t, y)| {
                            let r = perturbed.evaluate(t) - y;
                            r * r
                        })
                        .sum();
                    assert!(
                        sse >= f.sse() - 1e-12 * f.sse().max(1.0),
                        "perturbing coefficient {ci} by {delta} reduced sse"
                    );
                }
            }
        }
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let c = curve(vec![(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)]);
        assert!(matches!(
            fit(&c, 3),
            Err(FitError::InsufficientSamples { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn collapsed_times_are_rejected_as_singular_or_ill_conditioned() {
        // Three of four times collapse to u = −1 at double precision.
        let c = curve(vec![(0.0, 1.0), (1e-20, 2.0), (2e-20, 3.0), (1.0, 4.0)]);
        match fit(&c, 2) {
            Err(FitError::SingularNormalMatrix) | Err(FitError::IllConditioned { .. }) => {}
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn serializes_to_named_fields() {
        let c = curve(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 2.1)]);
        let f = fit(&c, 1).unwrap();
        let json = serde_json::to_value(&f).unwrap();
        assert_eq!(json["degree"], 1);
        assert_eq!(json["n"], 3);
        assert!(json["coeffs"].is_array());
        assert!(json["t_center"].is_number());
        assert!(json["t_halfwidth"].is_number());
        assert!(json["sse"].is_number());
    }
}
