//! Lowest eigenpairs of `-Delta_h + V` in a parity sector.
//!
//! Block preconditioned conjugate gradient (LOBPCG) in the mesh inner
//! product. The preconditioner is the exact inverse of `-Delta_h + sigma`
//! from [`Spectral`], and every search direction is projected on the sector.

use crate::error::{HartreeError, Result};
use crate::grids::{project_in_place, weighted_dot, Mesh, Parity, Spectral};
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

/// Schrodinger operator with a diagonal potential on a mesh.
pub struct MeshHamiltonian<'a> {
    pub mesh: &'a Mesh,
    pub potential: &'a [f64],
    pub weights: &'a [f64],
}

impl<'a> MeshHamiltonian<'a> {
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        self.mesh.neg_laplacian(u, out);
        out.par_iter_mut().zip(self.potential.par_iter().zip(u.par_iter())).for_each(|(o, (v, x))| *o += v * x);
        for (i, o) in out.iter_mut().enumerate() {
            if self.mesh.is_boundary(i) {
                *o = 0.0;
            }
        }
    }

    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        weighted_dot(self.weights, a, b)
    }

    /// `||H u - lambda u||` in the mesh norm.
    pub fn residual(&self, u: &[f64], lambda: f64) -> f64 {
        let mut hu = vec![0.0; u.len()];
        self.apply(u, &mut hu);
        let r: Vec<f64> = hu.iter().zip(u).map(|(a, b)| a - lambda * b).collect();
        self.dot(&r, &r).sqrt()
    }

    /// Rayleigh quotient.
    pub fn quotient(&self, u: &[f64]) -> f64 {
        let mut hu = vec![0.0; u.len()];
        self.apply(u, &mut hu);
        self.dot(u, &hu) / self.dot(u, u)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenSettings {
    /// Number of wanted eigenpairs.
    pub nev: usize,
    /// Extra block vectors that are iterated but not required to converge.
    pub guard: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self { nev: 1, guard: 1, tol: 1e-10, max_iter: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// Mesh-normalized vectors (`sum w v^2 = 1`).
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn sector_clean(mesh: &Mesh, v: &mut [f64], parity: Parity) {
    project_in_place(mesh, v, parity);
    for (i, x) in v.iter_mut().enumerate() {
        if mesh.is_boundary(i) {
            *x = 0.0;
        }
    }
}

/// Deterministic start vectors: Gaussians around each center times low-order
/// polynomials in the local coordinates, signed per center for the odd sector.
/// Candidates that the sector projector annihilates are skipped.
pub fn default_start(mesh: &Mesh, parity: Parity, count: usize, centers: &[f64], width: f64) -> Vec<Vec<f64>> {
    let candidate = |k: usize| -> Vec<f64> {
        (0..mesh.len())
            .map(|i| {
                let (x1, r) = mesh.axial_coords(i);
                centers
                    .iter()
                    .map(|&c| {
                        let (a, b) = ((x1 - c) / width, r / width);
                        let sign = match parity {
                            Parity::Odd if c == 0.0 => x1 / width,
                            Parity::Odd => c.signum(),
                            _ => 1.0,
                        };
                        let poly = match k % 4 {
                            0 => 1.0,
                            1 => a,
                            2 => b * b,
                            _ => a * a - b * b,
                        } * (1.0 + b * b).powi((k / 4) as i32);
                        sign * poly * (-0.5 * (a * a + b * b)).exp()
                    })
                    .sum()
            })
            .collect()
    };
    let mut out = Vec::with_capacity(count);
    let mut k = 0;
    while out.len() < count && k < 4 * count + 8 {
        let mut v = candidate(k);
        let before: f64 = v.iter().map(|x| x * x).sum();
        sector_clean(mesh, &mut v, parity);
        let after: f64 = v.iter().map(|x| x * x).sum();
        if after > 1e-12 * before {
            out.push(v);
        }
        k += 1;
    }
    out
}

/// Orthonormal basis of `span(S)` in the mesh inner product; drops near-dependent directions.
fn orthonormal_combination(gram: &DMatrix<f64>) -> DMatrix<f64> {
    let n = gram.nrows();
    let scale: Vec<f64> = (0..n).map(|i| 1.0 / gram[(i, i)].max(f64::MIN_POSITIVE).sqrt()).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| gram[(i, j)] * scale[i] * scale[j]);
    let eig = SymmetricEigen::new(scaled);
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 1e-13 * max).collect();
    DMatrix::from_fn(n, keep.len(), |i, c| {
        let k = keep[c];
        eig.eigenvectors[(i, k)] * scale[i] / eig.eigenvalues[k].sqrt()
    })
}

fn combine(vectors: &[&Vec<f64>], coeffs: &DMatrix<f64>, col: usize) -> Vec<f64> {
    let n = vectors[0].len();
    let mut out = vec![0.0; n];
    for (k, v) in vectors.iter().enumerate() {
        let c = coeffs[(k, col)];
        if c != 0.0 {
            out.par_iter_mut().zip(v.par_iter()).for_each(|(o, x)| *o += c * x);
        }
    }
    out
}

fn gram_matrices(op: &MeshHamiltonian, s: &[&Vec<f64>], hs: &[&Vec<f64>]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = s.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
    let vals: Vec<(f64, f64)> = pairs.par_iter().map(|&(i, j)| (op.dot(s[i], s[j]), op.dot(s[i], hs[j]))).collect();
    let mut g = DMatrix::zeros(n, n);
    let mut a = DMatrix::zeros(n, n);
    for (&(i, j), &(gv, av)) in pairs.iter().zip(&vals) {
        g[(i, j)] = gv;
        g[(j, i)] = gv;
        a[(i, j)] = av;
        a[(j, i)] = av;
    }
    // Symmetrize the Hamiltonian block against rounding in the stencil.
    let a = (&a + a.transpose()) * 0.5;
    (g, a)
}

/// Lowest `nev` eigenpairs of `op` restricted to `parity`.
pub fn lobpcg(
    op: &MeshHamiltonian,
    spectral: &Spectral,
    parity: Parity,
    start: Vec<Vec<f64>>,
    settings: &EigenSettings,
    sector: &str,
) -> Result<EigenPairs> {
    let mesh = op.mesh;
    let n = mesh.len();
    let m = settings.nev + settings.guard;
    if start.len() < m {
        return crate::error::config(format!("{} start vectors for a block of {m}", start.len()));
    }
    let mut x: Vec<Vec<f64>> = start.into_iter().take(m).collect();
    for v in x.iter_mut() {
        sector_clean(mesh, v, parity);
    }
    let apply = |v: &Vec<f64>| {
        let mut out = vec![0.0; n];
        op.apply(v, &mut out);
        out
    };
    // Rayleigh-Ritz on the start block.
    let hx: Vec<Vec<f64>> = x.iter().map(apply).collect();
    let (g, a) = gram_matrices(op, &x.iter().collect::<Vec<_>>(), &hx.iter().collect::<Vec<_>>());
    let b = orthonormal_combination(&g);
    if b.ncols() < m {
        return crate::error::config(format!("start vectors for the {sector} sector are linearly dependent"));
    }
    let eig = SymmetricEigen::new(b.transpose() * &a * &b);
    let order = sorted(&eig.eigenvalues.iter().cloned().collect::<Vec<_>>());
    let coeff = &b * &eig.eigenvectors;
    let xr: Vec<&Vec<f64>> = x.iter().collect();
    let hxr: Vec<&Vec<f64>> = hx.iter().collect();
    let mut xs: Vec<Vec<f64>> = order[..m].iter().map(|&c| combine(&xr, &coeff, c)).collect();
    let mut hxs: Vec<Vec<f64>> = order[..m].iter().map(|&c| combine(&hxr, &coeff, c)).collect();
    let mut lambda: Vec<f64> = order[..m].iter().map(|&c| eig.eigenvalues[c]).collect();
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut hp: Vec<Vec<f64>> = Vec::new();
    let mut res_norms = vec![f64::INFINITY; m];

    for iter in 0..settings.max_iter {
        let r: Vec<Vec<f64>> = (0..m)
            .map(|k| hxs[k].iter().zip(&xs[k]).map(|(h, v)| h - lambda[k] * v).collect())
            .collect();
        res_norms = r.iter().map(|v| op.dot(v, v).sqrt()).collect();
        if res_norms[..settings.nev].iter().all(|&e| e <= settings.tol) {
            return Ok(EigenPairs {
                values: lambda[..settings.nev].to_vec(),
                vectors: xs[..settings.nev].to_vec(),
                residuals: res_norms[..settings.nev].to_vec(),
                iterations: iter,
            });
        }
        let sigma = (-lambda[0]).max(0.05);
        let w: Vec<Vec<f64>> = r
            .iter()
            .zip(&res_norms)
            .map(|(rv, &rn)| {
                let mut out = vec![0.0; n];
                spectral.shifted_inverse(rv, sigma, &mut out);
                sector_clean(mesh, &mut out, parity);
                let nrm = op.dot(&out, &out).sqrt();
                if nrm > 0.0 && rn > 0.0 {
                    out.iter_mut().for_each(|v| *v /= nrm);
                }
                out
            })
            .collect();
        let hw: Vec<Vec<f64>> = w.iter().map(apply).collect();
        let mut basis: Vec<&Vec<f64>> = xs.iter().chain(w.iter()).chain(p.iter()).collect();
        let mut hbasis: Vec<&Vec<f64>> = hxs.iter().chain(hw.iter()).chain(hp.iter()).collect();
        let (mut g, mut a) = gram_matrices(op, &basis, &hbasis);
        let mut b = orthonormal_combination(&g);
        if b.ncols() < m {
            // Conjugate directions became dependent; restart without them.
            basis.truncate(2 * m);
            hbasis.truncate(2 * m);
            let ga = gram_matrices(op, &basis, &hbasis);
            g = ga.0;
            a = ga.1;
            b = orthonormal_combination(&g);
        }
        let _ = &g;
        let eig = SymmetricEigen::new(b.transpose() * &a * &b);
        let order = sorted(&eig.eigenvalues.iter().cloned().collect::<Vec<_>>());
        let coeff = &b * &eig.eigenvectors;
        let mut new_x = Vec::with_capacity(m);
        let mut new_hx = Vec::with_capacity(m);
        let mut new_p = Vec::with_capacity(m);
        let mut new_hp = Vec::with_capacity(m);
        let mut pc = coeff.clone();
        for k in 0..m {
            for row in 0..m {
                pc[(row, order[k])] = 0.0;
            }
        }
        for k in 0..m {
            let c = order[k];
            new_x.push(combine(&basis, &coeff, c));
            new_hx.push(combine(&hbasis, &coeff, c));
            new_p.push(combine(&basis, &pc, c));
            new_hp.push(combine(&hbasis, &pc, c));
        }
        lambda = order[..m].iter().map(|&c| eig.eigenvalues[c]).collect();
        for k in 0..m {
            sector_clean(mesh, &mut new_x[k], parity);
            let nrm = op.dot(&new_x[k], &new_x[k]).sqrt();
            new_x[k].iter_mut().for_each(|v| *v /= nrm);
            new_hx[k].iter_mut().for_each(|v| *v /= nrm);
            let pn = op.dot(&new_p[k], &new_p[k]).sqrt();
            if pn > 0.0 {
                new_p[k].iter_mut().for_each(|v| *v /= pn);
                new_hp[k].iter_mut().for_each(|v| *v /= pn);
            }
        }
        // Refresh H X periodically so the recurrence does not drift.
        if iter % 20 == 19 {
            new_hx = new_x.iter().map(apply).collect();
        }
        xs = new_x;
        hxs = new_hx;
        let kept: Vec<(Vec<f64>, Vec<f64>)> = new_p.into_iter().zip(new_hp).filter(|(v, _)| op.dot(v, v) > 0.0).collect();
        (p, hp) = kept.into_iter().unzip();
        if iter % 20 == 19 {
            hp = p.iter().map(apply).collect();
        }
    }
    Err(HartreeError::EigenNotConverged {
        sector: sector.to_string(),
        residual: res_norms[..settings.nev].iter().cloned().fold(0.0, f64::max),
    })
}

fn sorted(vals: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|a, b| vals[*a].total_cmp(&vals[*b]));
    idx
}
