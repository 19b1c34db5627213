//! Orthonormal type-I discrete sine transform applied along the axes of a
//! row-major array.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Orthonormal DST-I of a fixed length. Self-inverse.
#[derive(Clone)]
pub struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Dst1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dst1").field("n", &self.n).finish()
    }
}

impl Dst1 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * (n + 1));
        Self { n, fft, scale: (2.0 / (n as f64 + 1.0)).sqrt() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Transforms `x` in place; `work` must hold `2(n+1)` entries.
    pub fn apply(&self, x: &mut [f64], work: &mut [Complex64]) {
        let n = self.n;
        let m = 2 * (n + 1);
        work[0] = Complex64::new(0.0, 0.0);
        work[n + 1] = Complex64::new(0.0, 0.0);
        for i in 0..n {
            work[i + 1] = Complex64::new(x[i], 0.0);
            work[m - 1 - i] = Complex64::new(-x[i], 0.0);
        }
        self.fft.process(&mut work[..m]);
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = -0.5 * work[j + 1].im * self.scale;
        }
    }

    pub fn work_len(&self) -> usize {
        2 * (self.n + 1)
    }

    /// Eigenvalues of the Dirichlet 3-point operator `(2u_i - u_{i-1} - u_{i+1})/h^2`
    /// in DST order.
    pub fn laplacian_symbols(&self, h: f64) -> Vec<f64> {
        let n1 = self.n as f64 + 1.0;
        (1..=self.n)
            .map(|j| {
                let s = (std::f64::consts::PI * j as f64 / (2.0 * n1)).sin();
                4.0 * s * s / (h * h)
            })
            .collect()
    }
}

/// Applies a DST-I along `axis` of a row-major array with the given shape.
pub fn dst_along(data: &mut [f64], shape: &[usize], axis: usize, plan: &Dst1) {
    let n = shape[axis];
    debug_assert_eq!(plan.len(), n);
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut line = vec![0.0; n];
    let mut work = vec![Complex64::new(0.0, 0.0); plan.work_len()];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            for k in 0..n {
                line[k] = data[base + k * inner];
            }
            plan.apply(&mut line, &mut work);
            for k in 0..n {
                data[base + k * inner] = line[k];
            }
        }
    }
}
