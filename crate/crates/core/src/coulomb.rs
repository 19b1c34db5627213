//! Coulomb-kernel machinery: radial potentials, grid convolutions and the
//! bilinear energy `D(rho, sigma) = 1/2 <rho, sigma * |x|^-1>`.

use crate::error::{config, HartreeError, Result};
use crate::grids::{AxialGrid, CartesianGrid, GridField, Mesh, Parity, RadialFunction, RadialGrid};
use crate::special::{ellip_k_comp, gauss_legendre};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Value of a Coulomb energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoulombEnergy {
    pub value: f64,
}

/// Potential operator on a radial grid.
///
/// In three dimensions Newton's formula `int rho(y)/max(|x|,|y|) dy` is applied
/// with cumulative sums. In two dimensions the angular integral reduces to the
/// ring kernel `4 K(k)/(r+s)`, tabulated once as a packed symmetric matrix.
#[derive(Debug, Clone)]
pub struct RadialCoulomb {
    grid: Arc<RadialGrid>,
    ring: Option<Vec<f64>>,
}

fn packed_index(n: usize, i: usize, j: usize) -> usize {
    // row i of the upper triangle starts after sum_{k<i} (n-k) entries
    i * n - i * (i + 1) / 2 + j
}

impl RadialCoulomb {
    pub fn new(grid: &Arc<RadialGrid>) -> Self {
        let ring = (grid.d == 2).then(|| ring_matrix(grid));
        Self { grid: grid.clone(), ring }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn potential(&self, rho: &[f64]) -> Vec<f64> {
        let g = &*self.grid;
        match &self.ring {
            None => newton_potential(g, rho),
            Some(kappa) => {
                let n = g.n;
                let q: Vec<f64> = g.weights.iter().zip(rho).map(|(w, r)| w * r / (2.0 * PI)).collect();
                let mut v = vec![0.0; n];
                for i in 0..n {
                    let row = &kappa[packed_index(n, i, i)..packed_index(n, i, n - 1) + 1];
                    let qi = q[i];
                    let mut acc = row[0] * qi;
                    for (k, &c) in row.iter().enumerate().skip(1) {
                        let j = i + k;
                        acc += c * q[j];
                        v[j] += c * qi;
                    }
                    v[i] += acc;
                }
                v
            }
        }
    }

    pub fn apply(&self, rho: &RadialFunction) -> Result<RadialFunction> {
        if rho.grid.n != self.grid.n || rho.grid.r_max != self.grid.r_max || rho.grid.d != self.grid.d {
            return config("density and operator live on different radial grids");
        }
        Ok(RadialFunction { grid: rho.grid.clone(), values: self.potential(&rho.values) })
    }

    /// `D(rho, sigma)` with the one-half prefactor.
    pub fn energy(&self, rho: &[f64], sigma: &[f64]) -> f64 {
        let v = self.potential(sigma);
        0.5 * self.grid.integrate(&rho.iter().zip(&v).map(|(a, b)| a * b).collect::<Vec<_>>())
    }
}

fn newton_potential(g: &RadialGrid, rho: &[f64]) -> Vec<f64> {
    let n = g.n;
    let r = &g.nodes;
    let w = &g.weights;
    let mut inner = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        let half = if i + 1 == n { w[i] } else { 0.5 * w[i] };
        inner[i] = acc + half * rho[i];
        acc += w[i] * rho[i];
    }
    let mut outer = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n).rev() {
        let half = if i + 1 == n { 0.0 } else { 0.5 * w[i] };
        outer[i] = acc + half * rho[i] / r[i];
        acc += w[i] * rho[i] / r[i];
    }
    (0..n).map(|i| inner[i] / r[i] + outer[i]).collect()
}

/// Symmetric ring-kernel table `kappa_ij = 4 K(k_ij)/(r_i + r_j)`.
///
/// The logarithmic singularity on the diagonal is handled by the punctured
/// trapezoid rule with the local correction `h g(c) ln(h / 2 pi)`, which keeps
/// the rule accurate to third order near the diagonal.
fn ring_matrix(g: &RadialGrid) -> Vec<f64> {
    let n = g.n;
    let r = &g.nodes;
    let dt = g.dt();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(n - i);
            let ri = r[i];
            let self_term = 2.0 * (16.0 * PI * ri / (g.jacobian[i] * dt)).ln() / ri;
            row.push(self_term);
            for &rj in &r[i + 1..] {
                let kp = (rj - ri) / (rj + ri);
                row.push(4.0 * ellip_k_comp(kp) / (ri + rj));
            }
            row
        })
        .collect();
    let mut packed = Vec::with_capacity(n * (n + 1) / 2);
    for row in rows {
        packed.extend(row);
    }
    packed
}

/// `(rho * |.|^-1)(r_i)` at every node of the radial grid.
pub fn radial_potential(rho: &RadialFunction, d: usize) -> Result<RadialFunction> {
    if d != 2 && d != 3 {
        return config(format!("dimension must be 2 or 3, got {d}"));
    }
    if rho.grid.d != d {
        return config("radial grid dimension differs from the requested dimension");
    }
    RadialCoulomb::new(&rho.grid).apply(rho)
}

/// Convolution with `1/|x|` on a mesh.
pub struct GridCoulomb {
    mesh: Arc<Mesh>,
    imp: GridImpl,
}

impl std::fmt::Debug for GridCoulomb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridCoulomb").field("mesh", &self.mesh).finish()
    }
}

enum GridImpl {
    Cartesian(CartesianConv),
    Axial(AxialConv),
}

/// Result of a grid convolution with its padding diagnostic.
#[derive(Debug, Clone)]
pub struct GridPotential {
    pub field: GridField,
    /// Fraction of the density carried by the outer layers of the mesh.
    pub boundary_mass: f64,
    pub boundary_warning: bool,
}

/// Kernel sampling strategy for Cartesian convolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelRoute {
    /// `1/|x|` sampled in real space on the doubled box, cell average at the origin.
    RealSpace,
    /// `2 pi/|k|` (d=2) or `4 pi/|k|^2` (d=3) on the doubled box; cross-validation only.
    Analytic,
}

/// Mean of `1/|x|` over a cube (square) of side `h` centered at the origin.
pub fn singular_cell_average(d: usize, h: f64) -> f64 {
    match d {
        2 => 4.0 * 1f64.asinh() / h,
        3 => {
            let s3 = 3f64.sqrt();
            (3.0 * ((s3 + 1.0) / (s3 - 1.0)).ln() - PI / 2.0) / h
        }
        _ => panic!("unsupported dimension {d}"),
    }
}

const BOUNDARY_LAYERS: usize = 3;
const BOUNDARY_TOL: f64 = 1e-10;

impl GridCoulomb {
    pub fn new(mesh: &Arc<Mesh>) -> Self {
        Self::with_route(mesh, KernelRoute::RealSpace)
    }

    pub fn with_route(mesh: &Arc<Mesh>, route: KernelRoute) -> Self {
        let imp = match &**mesh {
            Mesh::Cartesian(g) => GridImpl::Cartesian(CartesianConv::new(g, route)),
            Mesh::Axial(g) => GridImpl::Axial(AxialConv::new(g)),
        };
        Self { mesh: mesh.clone(), imp }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    /// Raw convolution on the sample vector.
    pub fn potential_values(&self, rho: &[f64]) -> Vec<f64> {
        let mut v = match &self.imp {
            GridImpl::Cartesian(c) => c.apply(rho),
            GridImpl::Axial(c) => c.apply(rho),
        };
        for (i, x) in v.iter_mut().enumerate() {
            if self.mesh.is_boundary(i) {
                *x = 0.0;
            }
        }
        v
    }

    pub fn potential(&self, rho: &GridField) -> Result<GridPotential> {
        if *rho.mesh != *self.mesh {
            return config("density and Coulomb operator live on different meshes");
        }
        let values = self.potential_values(&rho.values);
        let boundary_mass = self.boundary_mass(&rho.values);
        let parity = match rho.parity {
            Parity::Odd => Parity::None,
            p => p,
        };
        Ok(GridPotential {
            field: GridField { mesh: self.mesh.clone(), values, parity },
            boundary_mass,
            boundary_warning: boundary_mass > BOUNDARY_TOL,
        })
    }

    fn boundary_mass(&self, rho: &[f64]) -> f64 {
        let w = self.mesh.weights();
        let total: f64 = w.iter().zip(rho).map(|(a, b)| a * b.abs()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let near: f64 = (0..rho.len())
            .filter(|&i| self.near_boundary(i))
            .map(|i| w[i] * rho[i].abs())
            .sum();
        near / total
    }

    fn near_boundary(&self, idx: usize) -> bool {
        let l = BOUNDARY_LAYERS;
        match &*self.mesh {
            Mesh::Cartesian(g) => {
                let m = g.multi_index(idx);
                (0..g.d).any(|a| m[a] < l || m[a] + l >= g.points[a])
            }
            Mesh::Axial(g) => {
                let (k, j) = (idx / g.n_rho, idx % g.n_rho);
                k < l || k + l >= g.n_z || j + l >= g.n_rho
            }
        }
    }

    /// `D(rho, sigma) = 1/2 <rho, sigma * |.|^-1>`.
    pub fn energy(&self, rho: &[f64], sigma: &[f64]) -> f64 {
        let v = self.potential_values(sigma);
        let w = self.mesh.weights();
        0.5 * w.iter().zip(rho.iter().zip(&v)).map(|(w, (a, b))| w * a * b).sum::<f64>()
    }
}

/// Bilinear Coulomb energy on a mesh.
pub fn coulomb_energy(rho: &GridField, sigma: &GridField) -> Result<CoulombEnergy> {
    if !rho.same_mesh(sigma) {
        return config("densities live on different meshes");
    }
    Ok(CoulombEnergy { value: GridCoulomb::new(&rho.mesh).energy(&rho.values, &sigma.values) })
}

/// Bilinear Coulomb energy on a radial grid.
pub fn coulomb_energy_radial(rho: &RadialFunction, sigma: &RadialFunction) -> Result<CoulombEnergy> {
    if rho.grid.n != sigma.grid.n || rho.grid.r_max != sigma.grid.r_max || rho.grid.d != sigma.grid.d {
        return config("densities live on different radial grids");
    }
    Ok(CoulombEnergy { value: RadialCoulomb::new(&rho.grid).energy(&rho.values, &sigma.values) })
}

/// Checks `D(rho,sigma) <= sqrt(D(rho,rho) D(sigma,sigma)) + tol` with a shared operator.
pub fn cauchy_schwarz_check(op: &GridCoulomb, rho: &[f64], sigma: &[f64], tol: f64) -> (bool, f64) {
    let ab = op.energy(rho, sigma);
    let aa = op.energy(rho, rho);
    let bb = op.energy(sigma, sigma);
    let bound = (aa.max(0.0) * bb.max(0.0)).sqrt();
    let ratio = if bound > 0.0 { ab / bound } else { 0.0 };
    (ab <= bound + tol, ratio)
}

struct FftAxis {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

struct CartesianConv {
    grid: CartesianGrid,
    padded: Vec<usize>,
    axes: Vec<FftAxis>,
    kernel_hat: Vec<Complex64>,
}

fn fft_along(data: &mut [Complex64], shape: &[usize], axis: usize, fft: &Arc<dyn Fft<f64>>) {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    if inner == 1 {
        data.par_chunks_mut(n).for_each(|line| fft.process(line));
        return;
    }
    let block = n * inner;
    data.par_chunks_mut(block).take(outer).for_each(|chunk| {
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..inner {
            for k in 0..n {
                line[k] = chunk[i + k * inner];
            }
            fft.process(&mut line);
            for k in 0..n {
                chunk[i + k * inner] = line[k];
            }
        }
    });
}

impl CartesianConv {
    fn new(g: &CartesianGrid, route: KernelRoute) -> Self {
        let padded: Vec<usize> = g.points.iter().map(|&p| 2 * p).collect();
        let mut planner = FftPlanner::new();
        let axes: Vec<FftAxis> = padded
            .iter()
            .map(|&len| FftAxis { fwd: planner.plan_fft_forward(len), inv: planner.plan_fft_inverse(len) })
            .collect();
        let total: usize = padded.iter().product();
        let h = g.h;
        let d = g.d;
        let wrapped = |m: usize, len: usize| -> f64 {
            if m <= len / 2 {
                m as f64
            } else {
                m as f64 - len as f64
            }
        };
        let mut kernel_hat = vec![Complex64::new(0.0, 0.0); total];
        match route {
            KernelRoute::RealSpace => {
                for (flat, k) in kernel_hat.iter_mut().enumerate() {
                    let mut rem = flat;
                    let mut r2 = 0.0;
                    for a in (0..d).rev() {
                        let m = rem % padded[a];
                        rem /= padded[a];
                        r2 += (wrapped(m, padded[a]) * h).powi(2);
                    }
                    let v = if r2 == 0.0 { singular_cell_average(d, h) } else { 1.0 / r2.sqrt() };
                    *k = Complex64::new(v * h.powi(d as i32), 0.0);
                }
                for a in 0..d {
                    fft_along(&mut kernel_hat, &padded, a, &axes[a].fwd);
                }
            }
            KernelRoute::Analytic => {
                let pre = if d == 2 { 2.0 * PI } else { 4.0 * PI };
                for (flat, k) in kernel_hat.iter_mut().enumerate() {
                    let mut rem = flat;
                    let mut k2 = 0.0;
                    for a in (0..d).rev() {
                        let m = rem % padded[a];
                        rem /= padded[a];
                        let period = padded[a] as f64 * h;
                        k2 += (2.0 * PI * wrapped(m, padded[a]) / period).powi(2);
                    }
                    let v = if k2 == 0.0 {
                        0.0
                    } else if d == 2 {
                        pre / k2.sqrt()
                    } else {
                        pre / k2
                    };
                    *k = Complex64::new(v, 0.0);
                }
            }
        }
        Self { grid: g.clone(), padded, axes, kernel_hat }
    }

    fn apply(&self, rho: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let d = g.d;
        let total: usize = self.padded.iter().product();
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        for (idx, &v) in rho.iter().enumerate() {
            if v != 0.0 {
                let m = g.multi_index(idx);
                let mut p = 0;
                for a in 0..d {
                    p = p * self.padded[a] + m[a];
                }
                buf[p] = Complex64::new(v, 0.0);
            }
        }
        for a in 0..d {
            fft_along(&mut buf, &self.padded, a, &self.axes[a].fwd);
        }
        buf.par_iter_mut().zip(self.kernel_hat.par_iter()).for_each(|(b, k)| *b *= k);
        for a in 0..d {
            fft_along(&mut buf, &self.padded, a, &self.axes[a].inv);
        }
        let scale = 1.0 / total as f64;
        let mut out = vec![0.0; rho.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let m = g.multi_index(idx);
            let mut p = 0;
            for a in 0..d {
                p = p * self.padded[a] + m[a];
            }
            *o = buf[p].re * scale;
        }
        out
    }
}

/// Ring-kernel convolution on the axial half plane: FFT along `z`, dense in `rho`.
struct AxialConv {
    grid: AxialGrid,
    nfft: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Real spectra of the symmetrized pair kernels `Q_ij`, `i <= j`, `nfft/2+1` entries each.
    spectra: Vec<f64>,
    inv_w: Vec<f64>,
}

fn ring_point(rho: f64, rho_p: f64, dz: f64) -> f64 {
    let s2 = (rho + rho_p).powi(2) + dz * dz;
    let d2 = (rho - rho_p).powi(2) + dz * dz;
    let kp = (d2 / s2).sqrt();
    4.0 * ellip_k_comp(kp) / s2.sqrt()
}

/// `int_cell rho' ringkernel(rho_i, 0; rho', z') drho' dz'` for the cell centered at `(rho_j, dz)`.
fn ring_cell(g: &AxialGrid, i: usize, j: usize, m: isize, gl: &(Vec<f64>, Vec<f64>)) -> f64 {
    let h = g.h;
    let ri = g.rho(i);
    let rj = g.rho(j);
    let dz = m as f64 * h;
    let near = i.abs_diff(j) <= 2 && m.unsigned_abs() <= 2;
    if !near {
        return h * h * rj * ring_point(ri, rj, dz);
    }
    let (x, w) = gl;
    if i == j && m == 0 {
        // Duffy split into four triangles around the singular center.
        let corners: [(f64, f64); 4] = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)];
        let mut acc = 0.0;
        for t in 0..4 {
            let (ax, ay) = corners[t];
            let (bx, by) = corners[(t + 1) % 4];
            let jac = (ax * by - ay * bx).abs() * h * h;
            for (xu, wu) in x.iter().zip(w) {
                let u = 0.5 * (xu + 1.0);
                for (xv, wv) in x.iter().zip(w) {
                    let v = 0.5 * (xv + 1.0);
                    let px = u * (ax + v * (bx - ax)) * h;
                    let py = u * (ay + v * (by - ay)) * h;
                    let rp = rj + px;
                    acc += 0.25 * wu * wv * u * jac * rp * ring_point(ri, rp, py);
                }
            }
        }
        return acc;
    }
    let mut acc = 0.0;
    for (xu, wu) in x.iter().zip(w) {
        let rp = rj + 0.5 * xu * h;
        for (xv, wv) in x.iter().zip(w) {
            let zp = dz + 0.5 * xv * h;
            acc += 0.25 * wu * wv * h * h * rp * ring_point(ri, rp, zp);
        }
    }
    acc
}

impl AxialConv {
    fn new(g: &AxialGrid) -> Self {
        let nr = g.n_rho;
        let nz = g.n_z;
        let nfft = 2 * nz;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(nfft);
        let inv = planner.plan_fft_inverse(nfft);
        let half = nfft / 2 + 1;
        let gl = gauss_legendre(16);
        let w: Vec<f64> = (0..nr).map(|j| 2.0 * PI * g.rho(j) * g.h * g.h).collect();
        let pairs: Vec<(usize, usize)> = (0..nr).flat_map(|i| (i..nr).map(move |j| (i, j))).collect();
        let spectra: Vec<Vec<f64>> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let mut line = vec![Complex64::new(0.0, 0.0); nfft];
                for m in 0..nz as isize {
                    let a = w[i] * ring_cell(g, i, j, m, &gl);
                    let b = w[j] * ring_cell(g, j, i, m, &gl);
                    let q = 0.5 * (a + b);
                    line[m as usize] = Complex64::new(q, 0.0);
                    if m > 0 {
                        line[nfft - m as usize] = Complex64::new(q, 0.0);
                    }
                }
                fwd.process(&mut line);
                line[..half].iter().map(|c| c.re).collect()
            })
            .collect();
        let mut flat = Vec::with_capacity(pairs.len() * half);
        for s in spectra {
            flat.extend(s);
        }
        Self { grid: g.clone(), nfft, fwd, inv, spectra: flat, inv_w: w.iter().map(|x| 1.0 / x).collect() }
    }

    fn apply(&self, rho: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (nr, nz, nfft) = (g.n_rho, g.n_z, self.nfft);
        let half = nfft / 2 + 1;
        let cols: Vec<Vec<Complex64>> = (0..nr)
            .into_par_iter()
            .map(|j| {
                let mut line = vec![Complex64::new(0.0, 0.0); nfft];
                for k in 0..nz {
                    line[k] = Complex64::new(rho[k * nr + j], 0.0);
                }
                self.fwd.process(&mut line);
                line
            })
            .collect();
        let pair_offset = |i: usize, j: usize| packed_index(nr, i, j) * half;
        let outs: Vec<Vec<f64>> = (0..nr)
            .into_par_iter()
            .map(|i| {
                let mut acc = vec![Complex64::new(0.0, 0.0); nfft];
                for j in 0..nr {
                    let off = if i <= j { pair_offset(i, j) } else { pair_offset(j, i) };
                    let s = &self.spectra[off..off + half];
                    let c = &cols[j];
                    for f in 0..half {
                        acc[f] += c[f] * s[f];
                    }
                    for f in half..nfft {
                        acc[f] += c[f] * s[nfft - f];
                    }
                }
                self.inv.process(&mut acc);
                let scale = self.inv_w[i] / nfft as f64;
                (0..nz).map(|k| acc[k].re * scale).collect()
            })
            .collect();
        let mut out = vec![0.0; rho.len()];
        for (i, col) in outs.iter().enumerate() {
            for k in 0..nz {
                out[k * nr + i] = col[k];
            }
        }
        out
    }
}

/// Adaptive-quadrature oracle for the two-dimensional radial potential,
/// independent of the grid machinery: polar coordinates centered at the
/// evaluation point remove the kernel singularity.
pub fn polar_potential_2d(profile: impl Fn(f64) -> f64 + Sync, r: f64, support: f64, tol: f64) -> Result<f64> {
    use crate::special::integrate;
    let inner = |t: f64| {
        let q = integrate(
            |theta| {
                let x = r + t * theta.cos();
                let y = t * theta.sin();
                profile((x * x + y * y).sqrt())
            },
            0.0,
            PI,
            tol * 1e-3,
            1e-14,
            2000,
        );
        2.0 * q.value
    };
    let q = integrate(inner, 0.0, r + support, tol, 1e-14, 4000);
    if !q.converged {
        return Err(HartreeError::Quadrature { radius: r });
    }
    Ok(q.value)
}
