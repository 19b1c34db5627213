//! Discretization substrate: radial grids with the d-dimensional measure,
//! uniform Cartesian boxes, and the axial (z, rho) half-plane used for
//! rotation-invariant three-dimensional fields.

use crate::dst::{dst_along, Dst1};
use crate::error::{config, HartreeError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Dimension and coupling of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub hartree_coupling: f64,
}

impl ModelParams {
    pub fn new(d: usize, hartree_coupling: f64) -> Result<Self> {
        if d != 2 && d != 3 {
            return config(format!("dimension must be 2 or 3, got {d}"));
        }
        if !(0.0..=1.0).contains(&hartree_coupling) {
            return config(format!("hartree_coupling must lie in [0,1], got {hartree_coupling}"));
        }
        Ok(Self { d, hartree_coupling })
    }

    pub fn hartree(d: usize) -> Result<Self> {
        Self::new(d, 1.0)
    }
}

/// Surface area of the unit sphere in R^d.
pub fn sphere_area(d: usize) -> f64 {
    match d {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("unsupported dimension {d}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadialScheme {
    Uniform,
    Graded,
}

impl RadialScheme {
    fn exponent(self) -> f64 {
        match self {
            RadialScheme::Uniform => 1.0,
            RadialScheme::Graded => 2.0,
        }
    }
}

/// Radial nodes `r_i = r_max (i/n)^gamma`, `i = 1..n`, with trapezoid weights in
/// the mapped variable. The last node sits on `r_max` and carries the Dirichlet condition.
#[derive(Debug, Clone, Serialize)]
pub struct RadialGrid {
    pub d: usize,
    pub r_max: f64,
    pub n: usize,
    pub scheme: RadialScheme,
    #[serde(skip)]
    pub nodes: Vec<f64>,
    #[serde(skip)]
    pub weights: Vec<f64>,
    #[serde(skip)]
    pub jacobian: Vec<f64>,
    /// Stiffness coefficient of the link between node `i` and `i+1`.
    #[serde(skip)]
    pub links: Vec<f64>,
}

impl RadialGrid {
    pub fn dt(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn gamma(&self) -> f64 {
        self.scheme.exponent()
    }

    fn t_of(&self, r: f64) -> f64 {
        (r / self.r_max).powf(1.0 / self.gamma())
    }

    /// Sum of the weights, i.e. the discrete volume of the ball of radius `r_max`.
    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

pub fn make_radial_grid(r_max: f64, n: usize, d: usize, scheme: RadialScheme) -> Result<Arc<RadialGrid>> {
    if !(r_max > 0.0) || !r_max.is_finite() {
        return config(format!("r_max must be positive, got {r_max}"));
    }
    if n < 16 {
        return config(format!("radial grid needs at least 16 nodes, got {n}"));
    }
    if d != 2 && d != 3 {
        return config(format!("dimension must be 2 or 3, got {d}"));
    }
    let gamma = scheme.exponent();
    let dt = 1.0 / n as f64;
    let area = sphere_area(d);
    let r_of = |t: f64| r_max * t.powf(gamma);
    let dr_of = |t: f64| gamma * r_max * t.powf(gamma - 1.0);
    let mut nodes = Vec::with_capacity(n);
    let mut jacobian = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 1..=n {
        let t = i as f64 * dt;
        let r = r_of(t);
        let dr = dr_of(t);
        nodes.push(r);
        jacobian.push(dr);
        let half = if i == n { 0.5 } else { 1.0 };
        weights.push(half * area * r.powi(d as i32 - 1) * dr * dt);
    }
    let links = (1..n)
        .map(|i| {
            let t = (i as f64 + 0.5) * dt;
            area * r_of(t).powi(d as i32 - 1) / dr_of(t) / dt
        })
        .collect();
    Ok(Arc::new(RadialGrid { d, r_max, n, scheme, nodes, weights, jacobian, links }))
}

/// Samples of a rotation-invariant function on a radial grid.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

impl RadialFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return config(format!("expected {} samples, got {}", grid.n, values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HartreeError::Domain("non-finite radial sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes.iter().map(|&r| f(r)).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn inner(&self, other: &RadialFunction) -> f64 {
        self.grid
            .weights
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.grid.nodes.iter().zip(&self.values).map(|(&r, &v)| f(r, v)).collect();
        Self { grid: self.grid.clone(), values }
    }

    /// Cubic interpolation in the mapped variable; zero beyond `r_max`.
    ///
    /// Below the first node the samples are mirrored, which treats the
    /// function as even in the mapped variable.
    pub fn eval(&self, r: f64) -> f64 {
        let g = &self.grid;
        let n = g.n;
        if r >= g.r_max {
            return 0.0;
        }
        let t = g.t_of(r.max(0.0));
        let dt = g.dt();
        let p = t / dt - 1.0;
        let (ts, vs): ([f64; 4], [f64; 4]) = if p < 1.0 {
            ([-2.0 * dt, -dt, dt, 2.0 * dt], [self.values[1], self.values[0], self.values[0], self.values[1]])
        } else {
            let k0 = (p.floor() as usize).clamp(1, n - 3) - 1;
            let ts = [0, 1, 2, 3].map(|j| (k0 + j + 1) as f64 * dt);
            let vs = [0, 1, 2, 3].map(|j| self.values[k0 + j]);
            (ts, vs)
        };
        lagrange4(&ts, &vs, t)
    }
}

fn lagrange4(ts: &[f64; 4], vs: &[f64; 4], t: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let mut l = 1.0;
        for j in 0..4 {
            if i != j {
                l *= (t - ts[j]) / (ts[i] - ts[j]);
            }
        }
        acc += l * vs[i];
    }
    acc
}

/// Uniform box symmetric about the origin; the outermost layer of nodes carries
/// the homogeneous Dirichlet condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartesianGrid {
    pub d: usize,
    pub half_extent: Vec<f64>,
    pub points: Vec<usize>,
    pub h: f64,
}

impl CartesianGrid {
    pub fn new(d: usize, half_extent: &[f64], points: &[usize]) -> Result<Self> {
        if d != 2 && d != 3 {
            return config(format!("dimension must be 2 or 3, got {d}"));
        }
        if half_extent.len() != d || points.len() != d {
            return config("one half extent and one point count per axis are required");
        }
        let mut h = None;
        for (&e, &p) in half_extent.iter().zip(points) {
            if !(e > 0.0) || p < 5 || p % 2 == 0 {
                return config(format!("axis needs a positive extent and an odd count >= 5 (got {e}, {p})"));
            }
            let ha = 2.0 * e / (p - 1) as f64;
            match h {
                None => h = Some(ha),
                Some(h0) if ((ha - h0) / h0).abs() > 1e-12 => {
                    return config(format!("axes must share one spacing ({h0} vs {ha})"));
                }
                _ => {}
            }
        }
        Ok(Self { d, half_extent: half_extent.to_vec(), points: points.to_vec(), h: h.unwrap() })
    }

    /// Square (cubic) box with the same extent and point count on every axis.
    pub fn uniform(d: usize, half_extent: f64, points: usize) -> Result<Self> {
        Self::new(d, &vec![half_extent; d], &vec![points; d])
    }

    /// Box with spacing `h` whose extents are rounded up to a multiple of `h`.
    pub fn with_spacing(d: usize, half_extent: &[f64], h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return config("spacing must be positive");
        }
        let cells: Vec<usize> = half_extent.iter().map(|e| (e / h - 1e-9).ceil().max(2.0) as usize).collect();
        let ext: Vec<f64> = cells.iter().map(|&c| c as f64 * h).collect();
        let pts: Vec<usize> = cells.iter().map(|&c| 2 * c + 1).collect();
        Self::new(d, &ext, &pts)
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.d];
        for a in (0..self.d - 1).rev() {
            s[a] = s[a + 1] * self.points[a + 1];
        }
        s
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        -self.half_extent[axis] + i as f64 * self.h
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for a in (0..self.d).rev() {
            out[a] = idx % self.points[a];
            idx /= self.points[a];
        }
        out
    }

    pub fn flat_index(&self, m: &[usize]) -> usize {
        let mut idx = 0;
        for a in 0..self.d {
            idx = idx * self.points[a] + m[a];
        }
        idx
    }

    /// Index of the node closest to the origin (the center).
    pub fn center(&self) -> usize {
        let m: Vec<usize> = self.points.iter().map(|p| p / 2).collect();
        self.flat_index(&m)
    }
}

/// Axisymmetric half plane: `z` is the symmetry axis (the first coordinate),
/// `rho_j = (j + 1/2) h` is staggered so that no node lies on the axis, and a
/// ghost zero sits just beyond the last radial node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxialGrid {
    pub n_rho: usize,
    pub n_z: usize,
    pub h: f64,
    pub z_half_extent: f64,
}

impl AxialGrid {
    pub fn new(z_half_extent: f64, rho_extent: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !(z_half_extent > 2.0 * h) || !(rho_extent > 2.0 * h) {
            return config("axial grid needs positive spacing and extents of several cells");
        }
        let cz = (z_half_extent / h - 1e-9).ceil() as usize;
        let n_rho = (rho_extent / h - 1e-9).ceil() as usize;
        Ok(Self { n_rho, n_z: 2 * cz + 1, h, z_half_extent: cz as f64 * h })
    }

    pub fn len(&self) -> usize {
        self.n_rho * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rho(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h
    }

    pub fn z(&self, k: usize) -> f64 {
        -self.z_half_extent + k as f64 * self.h
    }

    pub fn rho_extent(&self) -> f64 {
        self.n_rho as f64 * self.h
    }
}

/// The two supported meshes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mesh {
    Cartesian(CartesianGrid),
    Axial(AxialGrid),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Odd => -1.0,
            _ => 1.0,
        }
    }
}

impl Mesh {
    pub fn len(&self) -> usize {
        match self {
            Mesh::Cartesian(g) => g.len(),
            Mesh::Axial(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self) -> f64 {
        match self {
            Mesh::Cartesian(g) => g.h,
            Mesh::Axial(g) => g.h,
        }
    }

    /// Physical dimension of the fields the mesh represents.
    pub fn dim(&self) -> usize {
        match self {
            Mesh::Cartesian(g) => g.d,
            Mesh::Axial(_) => 3,
        }
    }

    /// Half extent along the reflection axis.
    pub fn axis_half_extent(&self) -> f64 {
        match self {
            Mesh::Cartesian(g) => g.half_extent[0],
            Mesh::Axial(g) => g.z_half_extent,
        }
    }

    /// Smallest distance from the origin to the outer boundary across the axis.
    pub fn transverse_extent(&self) -> f64 {
        match self {
            Mesh::Cartesian(g) => g.half_extent[1..].iter().cloned().fold(f64::INFINITY, f64::min),
            Mesh::Axial(g) => g.rho_extent(),
        }
    }

    /// Quadrature weights (cell measures).
    pub fn weights(&self) -> Vec<f64> {
        match self {
            Mesh::Cartesian(g) => vec![g.h.powi(g.d as i32); g.len()],
            Mesh::Axial(g) => {
                let mut w = Vec::with_capacity(g.len());
                for _ in 0..g.n_z {
                    for j in 0..g.n_rho {
                        w.push(2.0 * PI * g.rho(j) * g.h * g.h);
                    }
                }
                w
            }
        }
    }

    /// Coordinates `(x1, |x_perp|)`: position along the reflection axis and
    /// distance from it.
    pub fn axial_coords(&self, idx: usize) -> (f64, f64) {
        match self {
            Mesh::Cartesian(g) => {
                let m = g.multi_index(idx);
                let x1 = g.coordinate(0, m[0]);
                let perp: f64 = (1..g.d).map(|a| g.coordinate(a, m[a]).powi(2)).sum::<f64>().sqrt();
                (x1, perp)
            }
            Mesh::Axial(g) => (g.z(idx / g.n_rho), g.rho(idx % g.n_rho)),
        }
    }

    /// Full Cartesian coordinates (axial meshes report the `(z, rho, 0)` section).
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        match self {
            Mesh::Cartesian(g) => {
                let m = g.multi_index(idx);
                let mut x = [0.0; 3];
                for a in 0..g.d {
                    x[a] = g.coordinate(a, m[a]);
                }
                x
            }
            Mesh::Axial(_) => {
                let (z, r) = self.axial_coords(idx);
                [z, r, 0.0]
            }
        }
    }

    /// Index of the mirror node under `x1 -> -x1`.
    pub fn reflect_index(&self, idx: usize) -> usize {
        match self {
            Mesh::Cartesian(g) => {
                let stride = g.strides()[0];
                let i1 = idx / stride;
                (g.points[0] - 1 - i1) * stride + idx % stride
            }
            Mesh::Axial(g) => {
                let k = idx / g.n_rho;
                (g.n_z - 1 - k) * g.n_rho + idx % g.n_rho
            }
        }
    }

    /// Number of nodes by which a shift of `dx1` along the reflection axis moves.
    pub fn axis_shift_nodes(&self, dx1: f64) -> Option<isize> {
        let s = dx1 / self.h();
        let r = s.round();
        ((s - r).abs() < 1e-9).then_some(r as isize)
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        match self {
            Mesh::Cartesian(g) => {
                let m = g.multi_index(idx);
                (0..g.d).any(|a| m[a] == 0 || m[a] == g.points[a] - 1)
            }
            Mesh::Axial(g) => {
                let k = idx / g.n_rho;
                k == 0 || k == g.n_z - 1
            }
        }
    }

    /// Second-order `-Delta` with homogeneous Dirichlet data; zero on boundary nodes.
    pub fn neg_laplacian(&self, u: &[f64], out: &mut [f64]) {
        use rayon::prelude::*;
        match self {
            Mesh::Cartesian(g) => {
                let strides = g.strides();
                let inv_h2 = 1.0 / (g.h * g.h);
                let slab = strides[0];
                out.par_chunks_mut(slab).enumerate().for_each(|(i1, chunk)| {
                    for (off, o) in chunk.iter_mut().enumerate() {
                        let idx = i1 * slab + off;
                        let m = g.multi_index(idx);
                        if (0..g.d).any(|a| m[a] == 0 || m[a] == g.points[a] - 1) {
                            *o = 0.0;
                            continue;
                        }
                        let mut acc = 2.0 * g.d as f64 * u[idx];
                        for &s in &strides[..g.d] {
                            acc -= u[idx - s] + u[idx + s];
                        }
                        *o = acc * inv_h2;
                    }
                });
            }
            Mesh::Axial(g) => {
                let nr = g.n_rho;
                let inv_h2 = 1.0 / (g.h * g.h);
                out.par_chunks_mut(nr).enumerate().for_each(|(k, row)| {
                    if k == 0 || k == g.n_z - 1 {
                        row.iter_mut().for_each(|v| *v = 0.0);
                        return;
                    }
                    let base = k * nr;
                    for j in 0..nr {
                        let c = u[base + j];
                        let up = if j + 1 < nr { u[base + j + 1] } else { 0.0 };
                        let mut radial = (j as f64 + 1.0) * (c - up);
                        if j > 0 {
                            radial += j as f64 * (c - u[base + j - 1]);
                        }
                        radial /= j as f64 + 0.5;
                        let axial = 2.0 * c - u[base + j - nr] - u[base + j + nr];
                        row[j] = (radial + axial) * inv_h2;
                    }
                });
            }
        }
    }

    /// `sum_e c_e psi_i psi_j (g_i - g_j)^2` over the stencil edges, the discrete
    /// counterpart of `int |grad g|^2 psi^2`.
    pub fn edge_form(&self, psi: &[f64], g: &[f64]) -> f64 {
        let mut acc = 0.0;
        match self {
            Mesh::Cartesian(grid) => {
                let strides = grid.strides();
                let c = grid.h.powi(grid.d as i32 - 2);
                for idx in 0..grid.len() {
                    let m = grid.multi_index(idx);
                    for a in 0..grid.d {
                        if m[a] + 1 < grid.points[a] {
                            let j = idx + strides[a];
                            let dg = g[idx] - g[j];
                            acc += c * psi[idx] * psi[j] * dg * dg;
                        }
                    }
                }
            }
            Mesh::Axial(grid) => {
                let nr = grid.n_rho;
                for k in 0..grid.n_z {
                    for j in 0..nr {
                        let idx = k * nr + j;
                        if j + 1 < nr {
                            let dg = g[idx] - g[idx + 1];
                            acc += 2.0 * PI * (j as f64 + 1.0) * grid.h * psi[idx] * psi[idx + 1] * dg * dg;
                        }
                        if k + 1 < grid.n_z {
                            let dg = g[idx] - g[idx + nr];
                            acc += 2.0 * PI * grid.rho(j) * psi[idx] * psi[idx + nr] * dg * dg;
                        }
                    }
                }
            }
        }
        acc
    }

    /// Discrete Dirichlet energy `<u, -Delta u>` written as a sum over edges.
    pub fn dirichlet_form(&self, u: &[f64]) -> f64 {
        let mut acc = 0.0;
        match self {
            Mesh::Cartesian(grid) => {
                let strides = grid.strides();
                let c = grid.h.powi(grid.d as i32 - 2);
                for idx in 0..grid.len() {
                    let m = grid.multi_index(idx);
                    for a in 0..grid.d {
                        if m[a] + 1 < grid.points[a] {
                            let du = u[idx] - u[idx + strides[a]];
                            acc += c * du * du;
                        }
                    }
                }
            }
            Mesh::Axial(grid) => {
                let nr = grid.n_rho;
                for k in 0..grid.n_z {
                    for j in 0..nr {
                        let idx = k * nr + j;
                        let next = if j + 1 < nr { u[idx + 1] } else { 0.0 };
                        let du = u[idx] - next;
                        acc += 2.0 * PI * (j as f64 + 1.0) * grid.h * du * du;
                        if k + 1 < grid.n_z {
                            let du = u[idx] - u[idx + nr];
                            acc += 2.0 * PI * grid.rho(j) * du * du;
                        }
                    }
                }
            }
        }
        acc
    }
}

/// Samples on a mesh with a parity tag under the reflection `x1 -> -x1`.
#[derive(Debug, Clone)]
pub struct GridField {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
    pub parity: Parity,
}

impl GridField {
    pub fn zeros(mesh: &Arc<Mesh>, parity: Parity) -> Self {
        Self { mesh: mesh.clone(), values: vec![0.0; mesh.len()], parity }
    }

    pub fn new(mesh: &Arc<Mesh>, values: Vec<f64>, parity: Parity) -> Result<Self> {
        if values.len() != mesh.len() {
            return config(format!("field has {} samples, mesh has {}", values.len(), mesh.len()));
        }
        Ok(Self { mesh: mesh.clone(), values, parity })
    }

    /// Samples `f(x1, |x_perp|)`, zeroing boundary nodes.
    pub fn from_axial_fn(mesh: &Arc<Mesh>, parity: Parity, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..mesh.len())
            .map(|i| {
                if mesh.is_boundary(i) {
                    0.0
                } else {
                    let (x1, r) = mesh.axial_coords(i);
                    f(x1, r)
                }
            })
            .collect();
        Self { mesh: mesh.clone(), values, parity }
    }

    /// Samples `f(x)` on Cartesian coordinates, zeroing boundary nodes.
    pub fn from_fn(mesh: &Arc<Mesh>, parity: Parity, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let values = (0..mesh.len())
            .map(|i| if mesh.is_boundary(i) { 0.0 } else { f(&mesh.coords(i)) })
            .collect();
        Self { mesh: mesh.clone(), values, parity }
    }

    pub fn same_mesh(&self, other: &GridField) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    pub fn inner(&self, other: &GridField) -> f64 {
        weighted_dot(&self.mesh.weights(), &self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn integral(&self) -> f64 {
        self.mesh.weights().iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    pub fn reflected(&self) -> GridField {
        let values = (0..self.values.len()).map(|i| self.values[self.mesh.reflect_index(i)]).collect();
        GridField { mesh: self.mesh.clone(), values, parity: self.parity }
    }

    /// `(v + s R v)/2` with `s = +1` (even) or `-1` (odd).
    pub fn project(&self, parity: Parity) -> GridField {
        let mut out = self.clone();
        project_in_place(&self.mesh, &mut out.values, parity);
        out.parity = parity;
        out
    }

    /// `-Delta` with Dirichlet data; the parity tag is preserved.
    pub fn laplacian_apply(&self) -> GridField {
        let mut out = vec![0.0; self.values.len()];
        self.mesh.neg_laplacian(&self.values, &mut out);
        GridField { mesh: self.mesh.clone(), values: out, parity: self.parity }
    }

    /// Translation along the reflection axis by a whole number of nodes (zero fill).
    pub fn shifted_along_axis(&self, nodes: isize) -> GridField {
        let mesh = &*self.mesh;
        let (n_axis, stride) = match mesh {
            Mesh::Cartesian(g) => (g.points[0], g.strides()[0]),
            Mesh::Axial(g) => (g.n_z, g.n_rho),
        };
        let mut out = vec![0.0; self.values.len()];
        for k in 0..n_axis {
            let src = k as isize - nodes;
            if src < 0 || src >= n_axis as isize {
                continue;
            }
            let src = src as usize;
            out[k * stride..(k + 1) * stride].copy_from_slice(&self.values[src * stride..(src + 1) * stride]);
        }
        for (i, v) in out.iter_mut().enumerate() {
            if mesh.is_boundary(i) {
                *v = 0.0;
            }
        }
        GridField { mesh: self.mesh.clone(), values: out, parity: Parity::None }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum()
}

pub(crate) fn project_in_place(mesh: &Mesh, v: &mut [f64], parity: Parity) {
    if parity == Parity::None {
        return;
    }
    let s = parity.sign();
    for i in 0..v.len() {
        let j = mesh.reflect_index(i);
        if j > i {
            let a = 0.5 * (v[i] + s * v[j]);
            v[i] = a;
            v[j] = s * a;
        } else if j == i && s < 0.0 {
            v[i] = 0.0;
        }
    }
}

/// Spectral toolkit on a mesh: diagonalization of the discrete Dirichlet
/// Laplacian used by the Sobolev norm and the preconditioner.
#[derive(Debug, Clone)]
pub struct Spectral {
    mesh: Arc<Mesh>,
    plans: Vec<Dst1>,
    /// Axial meshes: radial eigenvectors (columns, mass-orthonormal) and eigenvalues.
    radial_modes: Option<(nalgebra::DMatrix<f64>, Vec<f64>)>,
}

impl Spectral {
    pub fn new(mesh: &Arc<Mesh>) -> Self {
        match &**mesh {
            Mesh::Cartesian(g) => {
                let plans = g.points.iter().map(|&p| Dst1::new(p - 2)).collect();
                Self { mesh: mesh.clone(), plans, radial_modes: None }
            }
            Mesh::Axial(g) => {
                let plans = vec![Dst1::new(g.n_z - 2)];
                Self { mesh: mesh.clone(), plans, radial_modes: Some(radial_eigenbasis(g)) }
            }
        }
    }

    fn interior_shape(&self) -> Vec<usize> {
        match &*self.mesh {
            Mesh::Cartesian(g) => g.points.iter().map(|p| p - 2).collect(),
            Mesh::Axial(g) => vec![g.n_z - 2, g.n_rho],
        }
    }

    fn gather_interior(&self, v: &[f64]) -> Vec<f64> {
        match &*self.mesh {
            Mesh::Cartesian(g) => {
                let shape = self.interior_shape();
                let total: usize = shape.iter().product();
                let mut out = Vec::with_capacity(total);
                for flat in 0..total {
                    let mut rem = flat;
                    let mut m = [0usize; 3];
                    for a in (0..g.d).rev() {
                        m[a] = rem % shape[a] + 1;
                        rem /= shape[a];
                    }
                    out.push(v[g.flat_index(&m[..g.d])]);
                }
                out
            }
            Mesh::Axial(g) => v[g.n_rho..(g.n_z - 1) * g.n_rho].to_vec(),
        }
    }

    fn scatter_interior(&self, inner: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        match &*self.mesh {
            Mesh::Cartesian(g) => {
                let shape = self.interior_shape();
                for (flat, &val) in inner.iter().enumerate() {
                    let mut rem = flat;
                    let mut m = [0usize; 3];
                    for a in (0..g.d).rev() {
                        m[a] = rem % shape[a] + 1;
                        rem /= shape[a];
                    }
                    out[g.flat_index(&m[..g.d])] = val;
                }
            }
            Mesh::Axial(g) => out[g.n_rho..(g.n_z - 1) * g.n_rho].copy_from_slice(inner),
        }
    }

    /// Forward transform to modal coefficients (orthonormal in the mesh inner product up to the cell size).
    fn forward(&self, v: &[f64]) -> Vec<f64> {
        let shape = self.interior_shape();
        let mut data = self.gather_interior(v);
        match &*self.mesh {
            Mesh::Cartesian(g) => {
                for a in 0..g.d {
                    dst_along(&mut data, &shape, a, &self.plans[a]);
                }
            }
            Mesh::Axial(g) => {
                dst_along(&mut data, &shape, 0, &self.plans[0]);
                let (vecs, _) = self.radial_modes.as_ref().unwrap();
                let nr = g.n_rho;
                let sqrt_w: Vec<f64> = (0..nr).map(|j| (2.0 * PI * g.rho(j)).sqrt()).collect();
                let mut row = vec![0.0; nr];
                for line in data.chunks_mut(nr) {
                    for m in 0..nr {
                        row[m] = (0..nr).map(|j| vecs[(j, m)] * sqrt_w[j] * line[j]).sum();
                    }
                    line.copy_from_slice(&row);
                }
            }
        }
        data
    }

    fn backward(&self, coeffs: &mut [f64], out: &mut [f64]) {
        let shape = self.interior_shape();
        match &*self.mesh {
            Mesh::Cartesian(g) => {
                for a in 0..g.d {
                    dst_along(coeffs, &shape, a, &self.plans[a]);
                }
            }
            Mesh::Axial(g) => {
                let (vecs, _) = self.radial_modes.as_ref().unwrap();
                let nr = g.n_rho;
                let inv_sqrt_w: Vec<f64> = (0..nr).map(|j| 1.0 / (2.0 * PI * g.rho(j)).sqrt()).collect();
                let mut row = vec![0.0; nr];
                for line in coeffs.chunks_mut(nr) {
                    for j in 0..nr {
                        row[j] = inv_sqrt_w[j] * (0..nr).map(|m| vecs[(j, m)] * line[m]).sum::<f64>();
                    }
                    line.copy_from_slice(&row);
                }
                dst_along(coeffs, &shape, 0, &self.plans[0]);
            }
        }
        self.scatter_interior(coeffs, out);
    }

    /// Per-mode symbols: `(discrete Laplacian eigenvalue, continuum |k|^2)`.
    fn symbols(&self) -> Vec<(f64, f64)> {
        let shape = self.interior_shape();
        match &*self.mesh {
            Mesh::Cartesian(g) => {
                let lap: Vec<Vec<f64>> = (0..g.d).map(|a| self.plans[a].laplacian_symbols(g.h)).collect();
                let cont: Vec<Vec<f64>> = (0..g.d)
                    .map(|a| (1..=shape[a]).map(|j| (PI * j as f64 / (2.0 * g.half_extent[a])).powi(2)).collect())
                    .collect();
                let total: usize = shape.iter().product();
                (0..total)
                    .map(|flat| {
                        let mut rem = flat;
                        let (mut l, mut c) = (0.0, 0.0);
                        for a in (0..g.d).rev() {
                            let m = rem % shape[a];
                            rem /= shape[a];
                            l += lap[a][m];
                            c += cont[a][m];
                        }
                        (l, c)
                    })
                    .collect()
            }
            Mesh::Axial(g) => {
                let lz = self.plans[0].laplacian_symbols(g.h);
                let (_, lr) = self.radial_modes.as_ref().unwrap();
                let mut out = Vec::with_capacity(shape[0] * shape[1]);
                for a in &lz {
                    for b in lr {
                        out.push((a + b, a + b));
                    }
                }
                out
            }
        }
    }

    fn cell(&self) -> f64 {
        match &*self.mesh {
            Mesh::Cartesian(g) => g.h.powi(g.d as i32),
            Mesh::Axial(g) => g.h * g.h,
        }
    }

    /// `(sum_k (1+|k|^2)^s |f_k|^2)^{1/2}`: continuum wavenumbers of the sine
    /// basis on Cartesian boxes, eigenvalues of the discrete operator on axial meshes.
    pub fn sobolev_norm(&self, v: &[f64], s: f64) -> Result<f64> {
        if !(0.0..=2.0).contains(&s) {
            return config(format!("Sobolev index must lie in [0,2], got {s}"));
        }
        let coeffs = self.forward(v);
        let sym = self.symbols();
        let acc: f64 = coeffs.iter().zip(&sym).map(|(c, (_, k2))| (1.0 + k2).powf(s) * c * c).sum();
        Ok((acc * self.cell()).sqrt())
    }

    /// Solves `(-Delta_h + sigma) x = b` on interior nodes (exact on Cartesian
    /// and axial meshes alike).
    pub fn shifted_inverse(&self, b: &[f64], sigma: f64, out: &mut [f64]) {
        let mut coeffs = self.forward(b);
        for (c, (l, _)) in coeffs.iter_mut().zip(self.symbols()) {
            *c /= l + sigma;
        }
        self.backward(&mut coeffs, out);
    }
}

/// Mass-orthonormal eigenbasis of the radial part of the axial operator.
fn radial_eigenbasis(g: &AxialGrid) -> (nalgebra::DMatrix<f64>, Vec<f64>) {
    let nr = g.n_rho;
    let h2 = g.h * g.h;
    let mut a = nalgebra::DMatrix::<f64>::zeros(nr, nr);
    for j in 0..nr {
        let rj = j as f64 + 0.5;
        let diag = ((j as f64 + 1.0) + j as f64) / rj / h2;
        a[(j, j)] = diag;
        if j + 1 < nr {
            let rk = j as f64 + 1.5;
            let off = -(j as f64 + 1.0) / (rj * rk).sqrt() / h2;
            a[(j, j + 1)] = off;
            a[(j + 1, j)] = off;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(a);
    let vals = eig.eigenvalues.iter().cloned().collect();
    (eig.eigenvectors, vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn radial_grid_rejects_bad_input() {
        assert!(make_radial_grid(10.0, 3, 3, RadialScheme::Uniform).is_err());
        assert!(make_radial_grid(-1.0, 100, 3, RadialScheme::Graded).is_err());
        assert!(make_radial_grid(10.0, 100, 4, RadialScheme::Graded).is_err());
    }

    #[test]
    fn interpolation_reproduces_smooth_profiles() {
        let g = make_radial_grid(20.0, 800, 2, RadialScheme::Graded).unwrap();
        let f = RadialFunction::from_fn(&g, |r| (-r * r / 4.0).exp());
        for &r in &[0.0, 0.01, 0.3, 1.7, 5.2, 11.0] {
            assert!((f.eval(r) - (-r * r / 4.0).exp()).abs() < 1e-7, "r = {r}");
        }
        assert_eq!(f.eval(25.0), 0.0);
    }

    #[test]
    fn parity_projectors_are_complementary() {
        let mesh = Arc::new(Mesh::Cartesian(CartesianGrid::uniform(2, 2.0, 9).unwrap()));
        let f = GridField::from_fn(&mesh, Parity::None, |x| (x[0] + 0.3).sin() * (1.0 + x[1]));
        let p = f.project(Parity::Even);
        let m = f.project(Parity::Odd);
        for i in 0..f.values.len() {
            assert!((p.values[i] + m.values[i] - f.values[i]).abs() < 1e-15);
        }
        let pp = p.project(Parity::Even);
        assert_eq!(pp.values, p.values);
        assert!(p.project(Parity::Odd).values.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn axial_spectral_inverse_matches_operator() {
        let mesh = Arc::new(Mesh::Axial(AxialGrid::new(3.0, 2.0, 0.25).unwrap()));
        let sp = Spectral::new(&mesh);
        let f = GridField::from_axial_fn(&mesh, Parity::None, |z, r| (-(z * z + r * r)).exp() * (1.0 + z));
        let mut x = vec![0.0; f.values.len()];
        sp.shifted_inverse(&f.values, 0.7, &mut x);
        let mut ax = vec![0.0; x.len()];
        mesh.neg_laplacian(&x, &mut ax);
        for i in 0..x.len() {
            if !mesh.is_boundary(i) {
                assert_relative_eq!(ax[i] + 0.7 * x[i], f.values[i], epsilon = 1e-10);
            }
        }
        let n0 = sp.sobolev_norm(&f.values, 0.0).unwrap();
        assert_relative_eq!(n0, f.norm(), max_relative = 1e-12);
    }
}
