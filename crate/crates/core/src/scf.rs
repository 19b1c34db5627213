//! Potential mixing shared by the monoatomic and diatomic fixed-point loops.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Fixed-point controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SCFSettings {
    /// Linear mixing weight of the new potential.
    pub mixing: f64,
    /// Bound on the L2 residual of the eigenvalue equation.
    pub tol_residual: f64,
    /// Bound on the energy change between iterations.
    pub tol_energy: f64,
    pub max_iter: usize,
    /// Residual target for inner eigensolves.
    pub eigensolver_tol: f64,
    /// Anderson history length; zero selects plain damped mixing.
    pub anderson_depth: usize,
}

impl Default for SCFSettings {
    fn default() -> Self {
        Self {
            mixing: 0.5,
            tol_residual: 1e-9,
            tol_energy: 1e-12,
            max_iter: 200,
            eigensolver_tol: 1e-10,
            anderson_depth: 5,
        }
    }
}

impl SCFSettings {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return crate::error::config(format!("mixing must lie in (0,1], got {}", self.mixing));
        }
        if !(self.tol_residual > 0.0 && self.tol_energy > 0.0 && self.eigensolver_tol > 0.0) {
            return crate::error::config("tolerances must be positive");
        }
        if self.max_iter == 0 {
            return crate::error::config("max_iter must be positive");
        }
        Ok(())
    }
}

/// Anderson (Pulay) mixing of potentials in a weighted inner product.
#[derive(Debug, Clone)]
pub struct Mixer {
    alpha: f64,
    depth: usize,
    weights: Vec<f64>,
    inputs: VecDeque<Vec<f64>>,
    residuals: VecDeque<Vec<f64>>,
    last: Option<(Vec<f64>, Vec<f64>)>,
}

impl Mixer {
    pub fn new(alpha: f64, depth: usize, weights: Vec<f64>) -> Self {
        Self { alpha, depth, weights, inputs: VecDeque::new(), residuals: VecDeque::new(), last: None }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Halves the mixing weight and forgets the history.
    pub fn damp(&mut self) {
        self.alpha = (0.5 * self.alpha).max(1.0 / 64.0);
        self.reset();
    }

    /// Replaces the most recent step by a plain step with half the weight.
    ///
    /// Used when the proposed potential is unusable (no bound state). Returns
    /// `None` once the weight cannot shrink further.
    pub fn backtrack(&mut self) -> Option<Vec<f64>> {
        if self.alpha <= 1.0 / 64.0 {
            return None;
        }
        self.damp();
        let (input, output) = self.last.as_ref()?;
        Some(input.iter().zip(output).map(|(i, o)| i + self.alpha * (o - i)).collect())
    }

    pub fn reset(&mut self) {
        self.inputs.clear();
        self.residuals.clear();
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum()
    }

    /// Next input potential from the current input and the potential it produced.
    pub fn next(&mut self, input: &[f64], output: &[f64]) -> Vec<f64> {
        self.last = Some((input.to_vec(), output.to_vec()));
        let f: Vec<f64> = output.iter().zip(input).map(|(o, i)| o - i).collect();
        let mut next: Vec<f64> = input.iter().zip(&f).map(|(x, r)| x + self.alpha * r).collect();
        if self.depth > 0 && !self.inputs.is_empty() {
            let m = self.inputs.len();
            let dx: Vec<Vec<f64>> = (0..m)
                .map(|k| input.iter().zip(&self.inputs[k]).map(|(a, b)| a - b).collect())
                .collect();
            let df: Vec<Vec<f64>> = (0..m)
                .map(|k| f.iter().zip(&self.residuals[k]).map(|(a, b)| a - b).collect())
                .collect();
            let mut gram = DMatrix::<f64>::zeros(m, m);
            let mut rhs = DVector::<f64>::zeros(m);
            for a in 0..m {
                for b in 0..=a {
                    let v = self.dot(&df[a], &df[b]);
                    gram[(a, b)] = v;
                    gram[(b, a)] = v;
                }
                rhs[a] = self.dot(&df[a], &f);
            }
            let trace: f64 = (0..m).map(|a| gram[(a, a)]).sum();
            for a in 0..m {
                gram[(a, a)] += 1e-12 * trace.max(f64::MIN_POSITIVE);
            }
            if let Some(gamma) = gram.cholesky().map(|c| c.solve(&rhs)) {
                for k in 0..m {
                    let g = gamma[k];
                    for i in 0..next.len() {
                        next[i] -= g * (dx[k][i] + self.alpha * df[k][i]);
                    }
                }
            }
        }
        if self.depth > 0 {
            self.inputs.push_front(input.to_vec());
            self.residuals.push_front(f);
            self.inputs.truncate(self.depth);
            self.residuals.truncate(self.depth);
        }
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anderson_solves_a_linear_fixed_point_quickly() {
        // g(x) = A x + b with contraction 0.9: plain mixing is slow, Anderson is not.
        let n = 6;
        let diag: Vec<f64> = (0..n).map(|i| 0.9 - 0.1 * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let exact: Vec<f64> = (0..n).map(|i| b[i] / (1.0 - diag[i])).collect();
        let mut mixer = Mixer::new(0.5, 6, vec![1.0; n]);
        let mut x = vec![0.0; n];
        for _ in 0..20 {
            let gx: Vec<f64> = (0..n).map(|i| diag[i] * x[i] + b[i]).collect();
            x = mixer.next(&x, &gx);
        }
        for i in 0..n {
            assert!((x[i] - exact[i]).abs() < 1e-8, "{} vs {}", x[i], exact[i]);
        }
    }
}
