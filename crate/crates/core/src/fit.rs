//! Ordinary least squares on small design matrices.

use crate::error::{HartreeError, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Coefficients of a linear least-squares fit with its root-mean-square residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub rms_residual: f64,
    pub samples: usize,
}

/// Fits `y ~ sum_k c_k basis_k(x)` by least squares.
pub fn least_squares(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<LinearFit> {
    let m = xs.len();
    let p = basis.len();
    if m != ys.len() || m < p || p == 0 {
        return Err(HartreeError::FitUnavailable(format!("{m} samples for {p} parameters")));
    }
    let a = DMatrix::from_fn(m, p, |i, k| basis[k](xs[i]));
    let b = DVector::from_column_slice(ys);
    // Column scaling keeps the normal problem well conditioned when the
    // basis mixes magnitudes (1, L, ln L).
    let scales: Vec<f64> = (0..p).map(|k| a.column(k).norm().max(f64::MIN_POSITIVE)).collect();
    let mut a_scaled = a.clone();
    for k in 0..p {
        a_scaled.column_mut(k).scale_mut(1.0 / scales[k]);
    }
    let svd = a_scaled.svd(true, true);
    let sol = svd
        .solve(&b, 1e-14)
        .map_err(|e| HartreeError::FitUnavailable(format!("singular design: {e}")))?;
    let coefficients: Vec<f64> = (0..p).map(|k| sol[k] / scales[k]).collect();
    let resid = &b - &a * DVector::from_column_slice(&coefficients);
    Ok(LinearFit { coefficients, rms_residual: (resid.norm_squared() / m as f64).sqrt(), samples: m })
}

/// Slope and intercept of `y = a + b x`.
pub fn line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let f = least_squares(xs, ys, &[&|_| 1.0, &|x| x])?;
    Ok((f.coefficients[1], f.coefficients[0], f.rms_residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_exponential_with_power() {
        let xs: Vec<f64> = (0..8).map(|i| 8.0 + 2.0 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|l| 1.3 - 0.7 * l - 2.0 * l.ln()).collect();
        let f = least_squares(&xs, &ys, &[&|_| 1.0, &|x| -x, &|x| -x.ln()]).unwrap();
        assert!((f.coefficients[1] - 0.7).abs() < 1e-10);
        assert!((f.coefficients[2] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn underdetermined_fit_is_refused() {
        assert!(least_squares(&[1.0], &[2.0], &[&|_| 1.0, &|x| x]).is_err());
    }
}
