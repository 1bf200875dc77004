use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::GamError;

const DEGREE: usize = 3;

/// Cubic B-spline basis with `size` functions on equally spaced knots over
/// `[lo, hi]`, padded with three exterior knots on each side. Inputs
/// outside the domain are clamped to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis {
    pub lo: f64,
    pub hi: f64,
    pub size: usize,
}

impl SplineBasis {
    pub fn new(lo: f64, hi: f64, size: usize) -> Result<SplineBasis, GamError> {
        if size < DEGREE + 1 {
            return Err(GamError::InvalidSpec(format!("basis size {size} is below 4")));
        }
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(GamError::ZeroWidthDomain);
        }
        Ok(SplineBasis { lo, hi, size })
    }

    /// Basis spanning the observed range of `x`.
    pub fn for_data(x: &[f64], size: usize) -> Result<SplineBasis, GamError> {
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        SplineBasis::new(lo, hi, size)
    }

    fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.size - DEGREE) as f64
    }

    fn knot(&self, i: usize) -> f64 {
        self.lo + (i as f64 - DEGREE as f64) * self.spacing()
    }

    /// Values of all basis functions at `x`.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        let (first, vals) = self.eval_nonzero(x);
        out[first..first + DEGREE + 1].copy_from_slice(&vals);
        out
    }

    /// Index of the first non-zero basis function at `x`, and the four
    /// non-zero values (Cox–de Boor triangle).
    pub fn eval_nonzero(&self, x: f64) -> (usize, [f64; DEGREE + 1]) {
        let x = x.clamp(self.lo, self.hi);
        let intervals = self.size - DEGREE;
        let span = (((x - self.lo) / self.spacing()).floor() as usize).min(intervals - 1);
        // knot span index m with t[m] <= x < t[m+1]
        let m = span + DEGREE;
        let mut n = [0.0; DEGREE + 1];
        let mut left = [0.0; DEGREE + 1];
        let mut right = [0.0; DEGREE + 1];
        n[0] = 1.0;
        for j in 1..=DEGREE {
            left[j] = x - self.knot(m + 1 - j);
            right[j] = self.knot(m + j) - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        (m - DEGREE, n)
    }

    /// `n × size` design matrix.
    pub fn matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(x.len(), self.size);
        for (i, &xi) in x.iter().enumerate() {
            let (first, vals) = self.eval_nonzero(xi);
            for (k, v) in vals.iter().enumerate() {
                b[(i, first + k)] = *v;
            }
        }
        b
    }
}

/// Cubic B-spline basis of `x` with `size` functions over `[min x, max x]`.
pub fn bspline_basis(x: &[f64], size: usize) -> Result<DMatrix<f64>, GamError> {
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(GamError::NonFinite(format!("x ({bad})")));
    }
    Ok(SplineBasis::for_data(x, size)?.matrix(x))
}

/// `order`-th difference operator, `(size - order) × size`.
pub fn difference_matrix(size: usize, order: usize) -> DMatrix<f64> {
    let mut d = DMatrix::<f64>::identity(size, size);
    for _ in 0..order {
        let rows = d.nrows() - 1;
        d = DMatrix::from_fn(rows, size, |i, j| d[(i + 1, j)] - d[(i, j)]);
    }
    d
}
