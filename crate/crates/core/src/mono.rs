//! Monoatomic Hartree problem on a radial grid.

use crate::coulomb::RadialCoulomb;
use crate::error::{HartreeError, Result};
use crate::fit::least_squares;
use crate::grids::{ModelParams, RadialFunction, RadialGrid};
use crate::scf::{Mixer, SCFSettings};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Symmetric tridiagonal form of `-Delta + V` in the mass-weighted basis.
///
/// The unknowns are the nodes `0..n-1`; the last node carries the Dirichlet value.
#[derive(Debug, Clone)]
pub struct RadialHamiltonian {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    sqrt_w: Vec<f64>,
}

impl RadialHamiltonian {
    pub fn new(grid: &RadialGrid, potential: &[f64]) -> Self {
        let m = grid.n - 1;
        let w = &grid.weights;
        let k = &grid.links;
        let sqrt_w: Vec<f64> = w[..m].iter().map(|x| x.sqrt()).collect();
        let diag = (0..m)
            .map(|i| {
                let left = if i > 0 { k[i - 1] } else { 0.0 };
                (left + k[i]) / w[i] + potential[i]
            })
            .collect();
        let off = (0..m - 1).map(|i| -k[i] / (sqrt_w[i] * sqrt_w[i + 1])).collect();
        Self { diag, off, sqrt_w }
    }

    /// Number of eigenvalues strictly below `x` (Sturm count from the LDL^T pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = self.diag[0] - x;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let prev = if d == 0.0 { f64::EPSILON * (1.0 + x.abs()) } else { d };
            d = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / prev;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Lowest eigenvalue by bisection, then inverse iteration for the vector.
    ///
    /// Returns the eigenvalue (refined by the Rayleigh quotient) and the
    /// nodal values normalized in the grid measure, including the trailing
    /// Dirichlet zero.
    pub fn lowest(&self) -> (f64, Vec<f64>) {
        let m = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::INFINITY;
        for i in 0..m {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < m { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.min(self.diag[i]);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let lambda = lo;
        let shift = lambda - 1e-10 * (1.0 + lambda.abs());
        let mut y = vec![1.0; m];
        for _ in 0..3 {
            y = self.solve_shifted(shift, &y);
            let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            y.iter_mut().for_each(|v| *v /= nrm);
        }
        let ay = self.apply_sym(&y);
        let rq: f64 = y.iter().zip(&ay).map(|(a, b)| a * b).sum();
        let sign = if y.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        let mut u: Vec<f64> = y.iter().zip(&self.sqrt_w).map(|(v, s)| sign * v / s).collect();
        u.push(0.0);
        (rq, u)
    }

    fn apply_sym(&self, y: &[f64]) -> Vec<f64> {
        let m = y.len();
        (0..m)
            .map(|i| {
                let mut acc = self.diag[i] * y[i];
                if i > 0 {
                    acc += self.off[i - 1] * y[i - 1];
                }
                if i + 1 < m {
                    acc += self.off[i] * y[i + 1];
                }
                acc
            })
            .collect()
    }

    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Vec<f64> {
        let m = b.len();
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        let mut piv = self.diag[0] - shift;
        c[0] = if m > 1 { self.off[0] / piv } else { 0.0 };
        d[0] = b[0] / piv;
        for i in 1..m {
            piv = self.diag[i] - shift - self.off[i - 1] * c[i - 1];
            if i + 1 < m {
                c[i] = self.off[i] / piv;
            }
            d[i] = (b[i] - self.off[i - 1] * d[i - 1]) / piv;
        }
        let mut x = vec![0.0; m];
        x[m - 1] = d[m - 1];
        for i in (0..m - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }
}

/// `-Delta u` on the radial grid in the finite-volume discretization (Dirichlet at `r_max`).
pub fn radial_neg_laplacian(grid: &RadialGrid, u: &[f64]) -> Vec<f64> {
    let n = grid.n;
    let k = &grid.links;
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let mut acc = k[i] * (u[i] - u[i + 1]);
        if i > 0 {
            acc += k[i - 1] * (u[i] - u[i - 1]);
        }
        out[i] = acc / grid.weights[i];
    }
    out
}

/// Discrete `int |grad u|^2`.
pub fn radial_kinetic(grid: &RadialGrid, u: &[f64]) -> f64 {
    grid.links.iter().enumerate().map(|(i, k)| k * (u[i] - u[i + 1]).powi(2)).sum()
}

/// Converged monoatomic ground state.
#[derive(Debug, Clone)]
pub struct MonoatomicSolution {
    pub params: ModelParams,
    pub u: RadialFunction,
    pub mu: f64,
    pub energy_i: f64,
    pub m1: f64,
    pub m2: f64,
    pub vmf: RadialFunction,
    pub hartree_energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub energy_history: Vec<f64>,
    /// Set when, with mixing at most 0.3, the energy rose after the third iteration.
    pub energy_warning: bool,
}

/// Scalar summary written to `mono.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonoSummary {
    pub d: usize,
    pub hartree_coupling: f64,
    pub r_max: f64,
    pub n: usize,
    pub scheme: crate::grids::RadialScheme,
    pub mu: f64,
    #[serde(rename = "I")]
    pub energy_i: f64,
    pub m1: f64,
    pub m2: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl MonoatomicSolution {
    pub fn summary(&self) -> MonoSummary {
        let g = &self.u.grid;
        MonoSummary {
            d: self.params.d,
            hartree_coupling: self.params.hartree_coupling,
            r_max: g.r_max,
            n: g.n,
            scheme: g.scheme,
            mu: self.mu,
            energy_i: self.energy_i,
            m1: self.m1,
            m2: self.m2,
            residual: self.residual,
            iterations: self.iterations,
        }
    }

    pub fn decay_rate(&self) -> f64 {
        self.mu.abs().sqrt()
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.u.grid
    }
}

fn nuclear(grid: &RadialGrid) -> Vec<f64> {
    grid.nodes.iter().map(|r| -1.0 / r).collect()
}

fn residual_norm(grid: &RadialGrid, u: &[f64], potential: &[f64]) -> (f64, f64) {
    let lap = radial_neg_laplacian(grid, u);
    let hu: Vec<f64> = (0..grid.n).map(|i| lap[i] + potential[i] * u[i]).collect();
    let w = &grid.weights;
    let m = grid.n - 1;
    let mu: f64 = (0..m).map(|i| w[i] * u[i] * hu[i]).sum::<f64>() / (0..m).map(|i| w[i] * u[i] * u[i]).sum::<f64>();
    let r2: f64 = (0..m).map(|i| w[i] * (hu[i] - mu * u[i]).powi(2)).sum();
    (r2.sqrt(), mu)
}

/// `E(v) = int |grad v|^2 - int |v|^2/|x| + (1/2) int int |v|^2 |v|^2 / |x-y|` scaled by the coupling.
pub fn energy_functional_radial(op: &RadialCoulomb, params: &ModelParams, v: &[f64]) -> f64 {
    let g = op.grid();
    let kin = radial_kinetic(g, v);
    let dens: Vec<f64> = v.iter().map(|x| x * x).collect();
    let pot: f64 = g.integrate(&dens.iter().zip(&g.nodes).map(|(d, r)| -d / r).collect::<Vec<_>>());
    let hartree = if params.hartree_coupling != 0.0 { params.hartree_coupling * op.energy(&dens, &dens) } else { 0.0 };
    kin + pot + hartree
}

/// Damped self-consistent field iteration for the monoatomic problem.
pub fn solve_monoatomic(params: &ModelParams, grid: &Arc<RadialGrid>, settings: &SCFSettings) -> Result<MonoatomicSolution> {
    let op = RadialCoulomb::new(grid);
    solve_monoatomic_with(params, &op, settings)
}

/// As [`solve_monoatomic`], reusing a prebuilt potential operator.
pub fn solve_monoatomic_with(params: &ModelParams, op: &RadialCoulomb, settings: &SCFSettings) -> Result<MonoatomicSolution> {
    settings.validate()?;
    let grid = op.grid().clone();
    if grid.d != params.d {
        return crate::error::config("radial grid dimension differs from the model dimension");
    }
    if grid.nodes[0] > 1e-3 * grid.r_max {
        return Err(HartreeError::Precondition("first radial node does not resolve the nuclear cusp".into()));
    }
    let beta = if params.d == 3 { 0.5 } else { 1.0 };
    let mut u: Vec<f64> = grid.nodes.iter().map(|r| (-beta * r).exp()).collect();
    u[grid.n - 1] = 0.0;
    let nrm = grid.integrate(&u.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt();
    u.iter_mut().for_each(|x| *x /= nrm);

    let vnuc = nuclear(&grid);
    let coupling = params.hartree_coupling;
    let hartree = |u: &[f64]| -> Vec<f64> {
        if coupling == 0.0 {
            return vec![0.0; u.len()];
        }
        let dens: Vec<f64> = u.iter().map(|x| x * x).collect();
        op.potential(&dens).into_iter().map(|v| coupling * v).collect()
    };
    let mut mixer = Mixer::new(settings.mixing, settings.anderson_depth, grid.weights.clone());
    let mut w_in = mixer.next(&vec![0.0; grid.n], &hartree(&u));
    let mut residual_history = Vec::new();
    let mut energy_history: Vec<f64> = Vec::new();
    let mut energy_warning = false;
    let mut prev_res = f64::INFINITY;

    for iter in 1..=settings.max_iter {
        let total: Vec<f64> = vnuc.iter().zip(&w_in).map(|(a, b)| a + b).collect();
        let ham = RadialHamiltonian::new(&grid, &total);
        let (lambda, u_new) = ham.lowest();
        if lambda >= 0.0 {
            match mixer.backtrack() {
                Some(w) => {
                    w_in = w;
                    continue;
                }
                None => return Err(HartreeError::NoBoundState { eigenvalue: lambda }),
            }
        }
        u = u_new;
        let w_out = hartree(&u);
        let potential: Vec<f64> = vnuc.iter().zip(&w_out).map(|(a, b)| a + b).collect();
        let (res, mu) = residual_norm(&grid, &u, &potential);
        let energy = energy_functional_radial(op, params, &u);
        residual_history.push(res);
        if let Some(&last) = energy_history.last() {
            if iter > 3 && mixer.alpha() <= 0.3 && energy > last + settings.tol_energy {
                energy_warning = true;
            }
        }
        let de = energy_history.last().map(|e| (energy - e).abs()).unwrap_or(f64::INFINITY);
        energy_history.push(energy);
        log::debug!("mono iter {iter}: mu = {mu:.15}, E = {energy:.15}, residual = {res:.3e}");
        if res <= settings.tol_residual && (de <= settings.tol_energy || coupling == 0.0) {
            let dens: Vec<f64> = u.iter().map(|x| x * x).collect();
            let m1 = grid.integrate(&dens.iter().zip(&grid.nodes).map(|(d, r)| d * r * r).collect::<Vec<_>>());
            let m2 = grid.integrate(&dens.iter().zip(&grid.nodes).map(|(d, r)| d * r.powi(4)).collect::<Vec<_>>());
            let hartree_energy = if coupling == 0.0 { 0.0 } else { op.energy(&dens, &dens) };
            let vmf = mean_field_values(&grid, &vnuc, &w_out);
            return Ok(MonoatomicSolution {
                params: *params,
                u: RadialFunction { grid: grid.clone(), values: u },
                mu,
                energy_i: energy,
                m1,
                m2,
                vmf,
                hartree_energy,
                residual: res,
                iterations: iter,
                residual_history,
                energy_history,
                energy_warning,
            });
        }
        if res > 2.0 * prev_res && iter > 3 {
            mixer.damp();
        }
        prev_res = res;
        w_in = mixer.next(&w_in, &w_out);
    }
    Err(HartreeError::NotConverged { iterations: settings.max_iter, history: residual_history })
}

fn mean_field_values(grid: &Arc<RadialGrid>, vnuc: &[f64], hartree: &[f64]) -> RadialFunction {
    RadialFunction { grid: grid.clone(), values: vnuc.iter().zip(hartree).map(|(a, b)| a + b).collect() }
}

/// Behaviour of the mean-field potential far from the nucleus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub d: usize,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// d=2: `|V - m1/(4r^3) - 9 m2/(64 r^5)| r^7` per radius.
    pub scaled_remainder: Vec<f64>,
    /// d=2: maximum of `scaled_remainder`; d=3: maximum of the potential.
    pub max_statistic: f64,
    /// d=3: smallest `V e^{0.9 sqrt|mu| r}` (a negative bound constant).
    pub min_envelope: f64,
}

pub fn mean_field_tail(sol: &MonoatomicSolution, radii: &[f64]) -> Result<TailReport> {
    let g = sol.grid();
    if radii.iter().any(|&r| !(r > 0.0) || r >= g.r_max) {
        return Err(HartreeError::Domain("tail radius outside the radial grid".into()));
    }
    let values: Vec<f64> = radii.iter().map(|&r| sol.vmf.eval(r)).collect();
    let d = sol.params.d;
    let (mut scaled, mut stat, mut env) = (Vec::new(), f64::NEG_INFINITY, f64::INFINITY);
    if d == 2 {
        for (&r, &v) in radii.iter().zip(&values) {
            let s = (v - sol.m1 / (4.0 * r.powi(3)) - 9.0 * sol.m2 / (64.0 * r.powi(5))).abs() * r.powi(7);
            stat = stat.max(s);
            scaled.push(s);
        }
    } else {
        let k = 0.9 * sol.decay_rate();
        for (&r, &v) in radii.iter().zip(&values) {
            stat = stat.max(v);
            env = env.min(v * (k * r).exp());
        }
    }
    Ok(TailReport { d, radii: radii.to_vec(), values, scaled_remainder: scaled, max_statistic: stat, min_envelope: env })
}

/// Fitted `log u = a - rate r - power log r` over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub power: f64,
    pub amplitude: f64,
    pub samples: usize,
}

pub fn fit_decay(u: &RadialFunction, window: (f64, f64)) -> Result<DecayFit> {
    let (a, b) = window;
    let g = &u.grid;
    if !(a > 0.0 && b > a && b < g.r_max) {
        return Err(HartreeError::Domain(format!("decay window [{a}, {b}] invalid for r_max {}", g.r_max)));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&r, &v) in g.nodes.iter().zip(&u.values) {
        if r >= a && r <= b {
            if v <= 1e-13 {
                return Err(HartreeError::Domain(format!("window reaches the underflow region at r = {r:.3}")));
            }
            xs.push(r);
            ys.push(v.ln());
        }
    }
    let fit = least_squares(&xs, &ys, &[&|_| 1.0, &|r| -r, &|r| -r.ln()])?;
    Ok(DecayFit { amplitude: fit.coefficients[0], rate: fit.coefficients[1], power: fit.coefficients[2], samples: xs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{make_radial_grid, RadialScheme};

    #[test]
    fn sturm_count_brackets_hydrogen() {
        let g = make_radial_grid(40.0, 2000, 3, RadialScheme::Graded).unwrap();
        let v = nuclear(&g);
        let h = RadialHamiltonian::new(&g, &v);
        assert_eq!(h.count_below(-0.26), 0);
        assert_eq!(h.count_below(-0.24), 1);
        let (lambda, u) = h.lowest();
        assert!((lambda + 0.25).abs() < 1e-4);
        assert!(u[..g.n - 1].iter().all(|x| *x > 0.0));
    }
}
