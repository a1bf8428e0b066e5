//! Small dense solvers for the (k+1)×(k+1) normal-equation systems.
//!
//! Matrices are row-major `Vec<f64>` with explicit dimension; sizes here
//! never exceed a few dozen rows, so no external linear algebra is needed.

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// AᵀA (Gram matrix), symmetric `cols × cols`.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for row in 0..self.rows {
            let r = self.row(row);
            for i in 0..n {
                for j in i..n {
                    g.data[i * n + j] += r[i] * r[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    /// Aᵀy.
    pub fn transpose_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for row in 0..self.rows {
            let r = self.row(row);
            let w = y[row];
            for (o, &a) in out.iter_mut().zip(r) {
                *o += a * w;
            }
        }
        out
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
/// Returns the lower factor L with A = LLᵀ, or None when a pivot is not
/// strictly positive (numerically singular / indefinite input).
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Some(l)
}

/// Solves LLᵀx = b given the Cholesky factor L.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    assert_eq!(b.len(), n);
    // Forward: L z = b
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * z[k];
        }
        z[i] = s / l.get(i, i);
    }
    // Backward: Lᵀ x = z
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

/// Inverse of an SPD matrix via its Cholesky factor (column-by-column solve).
pub fn cholesky_inverse(l: &Matrix) -> Matrix {
    let n = l.rows;
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for col in 0..n {
        e[col] = 1.0;
        let x = cholesky_solve(l, &e);
        for (row, &v) in x.iter().enumerate() {
            inv.set(row, col, v);
        }
        e[col] = 0.0;
    }
    inv
}

/// Maximum absolute row sum (induced ∞-norm; equals the 1-norm for
/// symmetric matrices).
pub fn norm_inf(a: &Matrix) -> f64 {
    (0..a.rows)
        .map(|r| a.row(r).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Condition estimate cond(A) ≈ ‖A‖·‖A⁻¹‖ for an SPD matrix with known
/// Cholesky factor.
pub fn spd_condition_estimate(a: &Matrix, l: &Matrix) -> f64 {
    norm_inf(a) * norm_inf(&cholesky_inverse(l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_known_spd_system() {
        // A = [[4,2],[2,3]], b = [2,1] → x = [1/2, 0]
        let a = Matrix {
            rows: 2,
            cols: 2,
            data: vec![4.0, 2.0, 2.0, 3.0],
        };
        let l = cholesky(&a).unwrap();
        let x = cholesky_solve(&l, &[2.0, 1.0]);
        assert!((x[0] - 0.5).abs() < 1e-14);
        assert!(x[1].abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let a = Matrix {
            rows: 2,
            cols: 2,
            data: vec![1.0, 2.0, 2.0, 1.0],
        };
        assert!(cholesky(&a).is_none());
    }

    #[test]
    fn identity_condition_is_one() {
        let a = Matrix {
            rows: 3,
            cols: 3,
            data: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        };
        let l = cholesky(&a).unwrap();
        let c = spd_condition_estimate(&a, &l);
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gram_and_transpose_mul_match_direct_products() {
        let a = Matrix {
            rows: 3,
            cols: 2,
            data: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        };
        let g = a.gram();
        assert_eq!(g.data, vec![35.0, 44.0, 44.0, 56.0]);
        let v = a.transpose_mul_vec(&[1.0, 1.0, 1.0]);
        assert_eq!(v, vec![9.0, 12.0]);
    }
}
