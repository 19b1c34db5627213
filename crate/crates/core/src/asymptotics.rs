//! L-sweeps of the two-center problem and the fits of their asymptotic laws.

use crate::diatomic::{
    diatomic_mesh, interaction_integrals, snap_length, solve_diatomic, solve_mesh_reference, superposition_error,
    InteractionIntegrals, MeshReference, MeshSystem,
};
use crate::error::{config, HartreeError, Result};
use crate::fit::{least_squares, line};
use crate::grids::ModelParams;
use crate::mono::MonoatomicSolution;
use crate::scf::SCFSettings;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// Two-center mesh description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub h: f64,
    pub axis_half: f64,
    pub transverse: f64,
}

/// Sweep controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub mesh: MeshSpec,
    pub lengths: Vec<f64>,
    pub settings: SCFSettings,
    /// Spacing of the second resolution used to measure the error floor at the largest L.
    pub floor_h: Option<f64>,
}

/// Per-L row of a sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "L")]
    pub l: f64,
    pub ok: bool,
    pub error: Option<String>,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub mu_third: f64,
    pub gap: f64,
    #[serde(rename = "T_L")]
    pub tunneling: f64,
    #[serde(rename = "E_L")]
    pub energy: f64,
    /// `E_L - I` against the same-mesh monoatomic reference.
    pub energy_diff: f64,
    pub mu_plus_diff: f64,
    pub mu_minus_diff: f64,
    pub sup_err_plus: f64,
    pub sup_err_minus: f64,
    pub sup_err_plus_l2: f64,
    pub sup_err_minus_l2: f64,
    pub interaction: Option<InteractionIntegrals>,
    pub residual_plus: f64,
    pub residual_minus: f64,
    pub scf_iterations: usize,
    pub gap_resolved: bool,
    pub flags: Vec<String>,
}

impl SweepRow {
    /// A row carrying only `L`, for assembling synthetic reports.
    pub fn synthetic(l: f64) -> Self {
        Self { l, ok: true, gap_resolved: true, ..Default::default() }
    }
}

/// Scalars of the monoatomic state a sweep is compared to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MonoScalars {
    pub mu: f64,
    #[serde(rename = "I")]
    pub energy_i: f64,
    pub m1: f64,
    pub m2: f64,
}

/// Two-resolution estimate of the discretization floor at one L.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FloorEstimate {
    #[serde(rename = "L")]
    pub l: f64,
    pub h_coarse: f64,
    pub h_fine: f64,
    pub energy: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub gap: f64,
}

/// A least-squares fit with its window and exclusions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub used: Vec<f64>,
    pub excluded: Vec<(f64, String)>,
    /// Named derived quantities (rates, powers, targets).
    pub values: BTreeMap<String, f64>,
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub d: usize,
    pub hartree_coupling: f64,
    pub mesh: Option<MeshSpec>,
    pub rows: Vec<SweepRow>,
    /// Radial monoatomic solution.
    pub mono_summary: MonoScalars,
    /// Monoatomic solution on the sweep mesh.
    pub reference: MonoScalars,
    pub floor: Option<FloorEstimate>,
    pub fits: BTreeMap<String, FitRecord>,
}

pub const MIN_FIT_ROWS: usize = 4;
/// Local log-log slope above which a multiplier sequence is treated as floored.
pub const PLATEAU_SLOPE: f64 = -1.0;
pub const PLATEAU_FRACTION: f64 = 2.0 / 3.0;
/// Gaps used by the decay fit.
pub const GAP_WINDOW: (f64, f64) = (1e-8, 1e-2);

fn scalars(mono: &MonoatomicSolution) -> MonoScalars {
    MonoScalars { mu: mono.mu, energy_i: mono.energy_i, m1: mono.m1, m2: mono.m2 }
}

fn reference_scalars(r: &MeshReference) -> MonoScalars {
    MonoScalars { mu: r.mu, energy_i: r.energy_i, m1: r.m1, m2: r.m2 }
}

fn solve_row(params: &ModelParams, sys: &MeshSystem, reference: &MeshReference, l: f64, settings: &SCFSettings) -> SweepRow {
    let mut row = SweepRow { l: snap_length(&sys.mesh, l), ..Default::default() };
    let result = (|| -> Result<()> {
        let sol = solve_diatomic(params, sys, reference, l, settings)?;
        let (h1p, h1m) = superposition_error(sys, &sol, reference, 1.0)?;
        let (l2p, l2m) = superposition_error(sys, &sol, reference, 0.0)?;
        row.mu_plus = sol.mu_plus;
        row.mu_minus = sol.mu_minus;
        row.mu_third = sol.mu_third;
        row.gap = sol.gap;
        row.tunneling = sol.tunneling;
        row.energy = sol.energy;
        row.energy_diff = sol.energy - reference.energy_i;
        row.mu_plus_diff = sol.mu_plus - reference.mu;
        row.mu_minus_diff = sol.mu_minus - reference.mu;
        row.sup_err_plus = h1p;
        row.sup_err_minus = h1m;
        row.sup_err_plus_l2 = l2p;
        row.sup_err_minus_l2 = l2m;
        row.residual_plus = sol.residual_plus;
        row.residual_minus = sol.residual_minus;
        row.scf_iterations = sol.scf_iterations;
        row.gap_resolved = sol.gap_resolved;
        if !sol.gap_resolved {
            row.flags.push("gap-unresolved".into());
        }
        if sol.boundary_warning {
            row.flags.push("boundary-mass".into());
        }
        row.interaction = Some(interaction_integrals(sys, reference, sol.l)?);
        Ok(())
    })();
    match result {
        Ok(()) => row.ok = true,
        Err(e) => {
            log::warn!("L = {l}: {e}");
            row.ok = false;
            row.error = Some(e.to_string());
        }
    }
    row
}

/// Solves the two-center problem for every L of `spec` and fits the asymptotic laws.
pub fn run_sweep(params: &ModelParams, mono: &MonoatomicSolution, spec: &SweepSpec) -> Result<SweepReport> {
    if spec.lengths.is_empty() {
        return config("the L list is empty");
    }
    if spec.lengths.windows(2).any(|w| w[1] <= w[0]) {
        return config("the L list must be increasing");
    }
    if mono.params.d != params.d {
        return config("monoatomic solution and sweep have different dimensions");
    }
    let m = spec.mesh;
    let sys = MeshSystem::new(diatomic_mesh(params.d, m.h, m.axis_half, m.transverse)?);
    let reference = solve_mesh_reference(&sys, mono, &spec.settings)?;
    let mut rows: Vec<SweepRow> =
        spec.lengths.par_iter().map(|&l| solve_row(params, &sys, &reference, l, &spec.settings)).collect();
    rows.sort_by(|a, b| a.l.total_cmp(&b.l));
    if rows.iter().all(|r| !r.ok) {
        return Err(HartreeError::Config(format!(
            "every L failed; first error: {}",
            rows[0].error.clone().unwrap_or_default()
        )));
    }
    let floor = match spec.floor_h {
        Some(hf) => Some(floor_estimate(params, mono, spec, &rows, hf)?),
        None => None,
    };
    let mut report = SweepReport {
        d: params.d,
        hartree_coupling: params.hartree_coupling,
        mesh: Some(m),
        rows,
        mono_summary: scalars(mono),
        reference: reference_scalars(&reference),
        floor,
        fits: BTreeMap::new(),
    };
    report.fits = all_fits(&report);
    Ok(report)
}

fn floor_estimate(params: &ModelParams, mono: &MonoatomicSolution, spec: &SweepSpec, rows: &[SweepRow], hf: f64) -> Result<FloorEstimate> {
    let last = rows.iter().rev().find(|r| r.ok).expect("at least one usable row");
    let m = spec.mesh;
    let sys = MeshSystem::new(diatomic_mesh(params.d, hf, m.axis_half, m.transverse)?);
    let reference = solve_mesh_reference(&sys, mono, &spec.settings)?;
    let l = snap_length(&sys.mesh, last.l);
    if (l - last.l).abs() > 1e-9 {
        return config(format!("L = {} is not representable on the floor mesh (h = {hf})", last.l));
    }
    let sol = solve_diatomic(params, &sys, &reference, l, &spec.settings)?;
    Ok(FloorEstimate {
        l,
        h_coarse: m.h,
        h_fine: hf,
        energy: ((sol.energy - reference.energy_i) - last.energy_diff).abs(),
        mu_plus: ((sol.mu_plus - reference.mu) - last.mu_plus_diff).abs(),
        mu_minus: ((sol.mu_minus - reference.mu) - last.mu_minus_diff).abs(),
        gap: (sol.gap - last.gap).abs(),
    })
}

/// Every fit that the report supports; unavailable fits are omitted.
pub fn all_fits(report: &SweepReport) -> BTreeMap<String, FitRecord> {
    let mut fits = BTreeMap::new();
    if let Ok(f) = fit_gap_decay(report) {
        fits.insert("gap_decay".to_string(), f);
    }
    if report.d == 2 {
        if let Ok(f) = fit_energy_coefficient(report) {
            fits.insert("energy_coefficient".to_string(), f);
        }
        if let Ok((p, m)) = fit_multiplier_rate(report) {
            fits.insert("multiplier_rate_plus".to_string(), p);
            fits.insert("multiplier_rate_minus".to_string(), m);
        }
    }
    if let Ok(f) = fit_superposition_rate(report) {
        fits.insert("superposition_rate".to_string(), f);
    }
    if let Ok(f) = fit_third_gap(report) {
        fits.insert("third_gap".to_string(), f);
    }
    fits
}

fn window(used: &[f64]) -> (f64, f64) {
    (used.first().copied().unwrap_or(f64::NAN), used.last().copied().unwrap_or(f64::NAN))
}

/// `log gap = a - rate L - power log L` over resolved gaps inside [`GAP_WINDOW`].
pub fn fit_gap_decay(report: &SweepReport) -> Result<FitRecord> {
    fit_gap_decay_in(report, GAP_WINDOW)
}

pub fn fit_gap_decay_in(report: &SweepReport, bounds: (f64, f64)) -> Result<FitRecord> {
    let mut used = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for r in &report.rows {
        if !r.ok {
            excluded.push((r.l, "failed".to_string()));
        } else if !r.gap_resolved || !(r.gap > 0.0) {
            excluded.push((r.l, "gap-unresolved".to_string()));
        } else if r.gap < bounds.0 || r.gap > bounds.1 {
            excluded.push((r.l, "outside-gap-window".to_string()));
        } else {
            used.push(r.l);
            ys.push(r.gap.ln());
        }
    }
    if used.len() < MIN_FIT_ROWS {
        return Err(HartreeError::FitUnavailable(format!("{} resolved gaps, {MIN_FIT_ROWS} needed", used.len())));
    }
    let f = least_squares(&used, &ys, &[&|_| 1.0, &|l| -l, &|l| -l.ln()])?;
    let (rate, power) = (f.coefficients[1], f.coefficients[2]);
    let kappa = report.mono_summary.mu.abs().sqrt();
    let d = report.d as f64;
    let mut values = BTreeMap::new();
    values.insert("rate".to_string(), rate);
    values.insert("power".to_string(), power);
    values.insert("sqrt_abs_mu".to_string(), kappa);
    let passed = (rate - kappa).abs() <= 0.1 * kappa && (-1e-9..=d + 1.0 + 1e-9).contains(&power);
    Ok(FitRecord {
        slope: -rate,
        intercept: f.coefficients[0],
        window: window(&used),
        residual: f.rms_residual,
        used,
        excluded,
        values,
        passed: (kappa > 0.0).then_some(passed),
    })
}

/// `(E_L - I) L^5` over rows well above the measured error floor.
pub fn fit_energy_coefficient(report: &SweepReport) -> Result<FitRecord> {
    if report.d != 2 {
        return config("the 1/L^5 energy law is specific to d = 2");
    }
    let floor = report.floor.map(|f| f.energy).unwrap_or(0.0);
    let mut used = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for r in &report.rows {
        if !r.ok {
            excluded.push((r.l, "failed".to_string()));
        } else if r.energy_diff.abs() <= 100.0 * floor {
            excluded.push((r.l, "below-floor".to_string()));
        } else {
            used.push(r.l);
            ys.push(r.energy_diff * r.l.powi(5));
        }
    }
    if used.len() < MIN_FIT_ROWS {
        return Err(HartreeError::FitUnavailable(format!(
            "{} rows above 100x the energy floor {floor:.3e}; consistent with a rapidly decaying difference",
            used.len()
        )));
    }
    let (slope, intercept, rms) = line(&used, &ys)?;
    let last = *ys.last().unwrap();
    let m1 = report.mono_summary.m1;
    let target = (0.75 * m1).powi(2);
    let mut values = BTreeMap::new();
    values.insert("last".to_string(), last);
    values.insert("target".to_string(), target);
    values.insert("ratio".to_string(), last / target);
    values.insert("per_molecule_target".to_string(), 0.5 * target);
    values.insert("per_molecule_ratio".to_string(), last / (0.5 * target));
    values.insert("floor".to_string(), floor);
    values.insert("floor_scaled".to_string(), floor * used.last().unwrap().powi(5));
    Ok(FitRecord {
        slope,
        intercept,
        window: window(&used),
        residual: rms,
        used,
        excluded,
        values,
        passed: Some((last - target).abs() <= 0.25 * target),
    })
}

/// Size of the exchange-type contributions to the multipliers at one row.
fn tunneling_scale(d: usize, r: &SweepRow) -> f64 {
    (0.5 * r.gap.abs()).max(r.l.powf(0.5 * (d as f64 - 2.0)) * r.tunneling)
}

fn multiplier_fit(report: &SweepReport, pick: impl Fn(&SweepRow) -> f64, floor: f64) -> Result<FitRecord> {
    let mut used = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for r in &report.rows {
        let dev = pick(r).abs();
        if !r.ok {
            excluded.push((r.l, "failed".to_string()));
        } else if dev <= 10.0 * floor {
            excluded.push((r.l, "below-floor".to_string()));
        } else if tunneling_scale(report.d, r) > 0.1 * dev {
            excluded.push((r.l, "tunneling-dominated".to_string()));
        } else {
            used.push(r.l);
            xs.push(r.l.ln());
            ys.push(dev.ln());
        }
    }
    // The window ends where the local decay flattens: slower than 1/L, or below
    // two thirds of the median slope of the preceding segments.
    let local: Vec<f64> = (1..used.len()).map(|i| (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])).collect();
    let flattened = |i: usize| {
        let s = local[i - 1];
        if s > PLATEAU_SLOPE {
            return true;
        }
        if i < 2 {
            return false;
        }
        let mut prev = local[..i - 1].to_vec();
        prev.sort_by(f64::total_cmp);
        let median = prev[prev.len() / 2];
        median < 0.0 && s > PLATEAU_FRACTION * median
    };
    if let Some(cut) = (1..used.len()).find(|&i| flattened(i)) {
        for l in used.drain(cut..) {
            excluded.push((l, "plateau".to_string()));
        }
        xs.truncate(cut);
        ys.truncate(cut);
        excluded.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    if used.len() < MIN_FIT_ROWS {
        return Err(HartreeError::FitUnavailable(format!("{} rows in the algebraic window", used.len())));
    }
    let (slope, intercept, rms) = line(&xs, &ys)?;
    let mut values = BTreeMap::new();
    values.insert("floor".to_string(), floor);
    Ok(FitRecord { slope, intercept, window: window(&used), residual: rms, used, excluded, values, passed: Some(slope <= -2.5) })
}

/// Log-log slopes of `|mu_L^+ - mu|` and `|mu_L^- - mu|`.
pub fn fit_multiplier_rate(report: &SweepReport) -> Result<(FitRecord, FitRecord)> {
    if report.d != 2 {
        return config("the algebraic multiplier law is specific to d = 2");
    }
    let fp = report.floor.map(|f| f.mu_plus).unwrap_or(0.0);
    let fm = report.floor.map(|f| f.mu_minus).unwrap_or(0.0);
    Ok((multiplier_fit(report, |r| r.mu_plus_diff, fp)?, multiplier_fit(report, |r| r.mu_minus_diff, fm)?))
}

/// Log-log slope of the H^1 superposition error of `u_L^+`.
pub fn fit_superposition_rate(report: &SweepReport) -> Result<FitRecord> {
    let rows: Vec<&SweepRow> = report.rows.iter().filter(|r| r.ok && r.sup_err_plus > 0.0).collect();
    if rows.len() < MIN_FIT_ROWS {
        return Err(HartreeError::FitUnavailable("too few superposition errors".into()));
    }
    let used: Vec<f64> = rows.iter().map(|r| r.l).collect();
    let xs: Vec<f64> = used.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.sup_err_plus.ln()).collect();
    let (slope, intercept, rms) = line(&xs, &ys)?;
    Ok(FitRecord { slope, intercept, window: window(&used), residual: rms, used, ..Default::default() })
}

/// Spread of `mu_3 - mu_L^-` across the sweep.
pub fn fit_third_gap(report: &SweepReport) -> Result<FitRecord> {
    let rows: Vec<&SweepRow> = report.rows.iter().filter(|r| r.ok).collect();
    if rows.is_empty() {
        return Err(HartreeError::FitUnavailable("no rows".into()));
    }
    let vals: Vec<f64> = rows.iter().map(|r| r.mu_third - r.mu_minus).collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let used: Vec<f64> = rows.iter().map(|r| r.l).collect();
    let mut values = BTreeMap::new();
    values.insert("min".to_string(), lo);
    values.insert("max".to_string(), hi);
    values.insert("first".to_string(), vals[0]);
    values.insert("last".to_string(), *vals.last().unwrap());
    Ok(FitRecord { window: window(&used), used, values, passed: Some(lo > 0.0 && hi <= 2.0 * lo), ..Default::default() })
}

/// Ratio of each interaction integral to its predicted envelope, per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelingTable {
    pub lengths: Vec<f64>,
    pub columns: BTreeMap<String, Vec<f64>>,
    /// max/min of |ratio| per column.
    pub spread: BTreeMap<String, f64>,
    pub passed: bool,
}

pub fn tunneling_table(report: &SweepReport) -> Result<TunnelingTable> {
    let rows: Vec<(&SweepRow, &InteractionIntegrals)> =
        report.rows.iter().filter(|r| r.ok).filter_map(|r| r.interaction.as_ref().map(|i| (r, i))).collect();
    if rows.is_empty() {
        return config("no interaction integrals in the report");
    }
    let d = report.d as f64;
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (r, it) in &rows {
        let (l, t) = (r.l, r.tunneling);
        let mut push = |name: &str, v: f64| columns.entry(name.to_string()).or_default().push(v);
        push("overlap", it.overlap / (l.powf(0.5 * (d - 1.0)) * t));
        push("d_exchange", it.d_exchange / (l * t * t));
        push("d_mixed", it.d_mixed / t);
        push("grad_overlap", it.grad_overlap / (l.powf(0.5 * (d - 1.0)) * t));
        push("product_norm", it.product_norm / t);
        push("v_overlap", it.v_overlap / (l.powf(0.5 * (d - 2.0)) * t));
        let (ev, ed) = if report.d == 2 { (l.powi(-7), l.powi(-7)) } else { (t * t / (l * l), t * t) };
        push("v_density_remainder", (it.v_left_right_density - it.predicted_v_left_right_density) / ev);
        push("d_density_remainder", (it.d_densities - it.predicted_d_densities) / ed);
    }
    let spread: BTreeMap<String, f64> = columns
        .iter()
        .map(|(k, v)| {
            let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x.abs()), b.max(x.abs())));
            (k.clone(), if lo > 0.0 { hi / lo } else { f64::INFINITY })
        })
        .collect();
    let passed = spread.values().all(|s| *s < 10.0);
    Ok(TunnelingTable { lengths: rows.iter().map(|(r, _)| r.l).collect(), columns, spread, passed })
}

/// Flat CSV row; the column set is fixed.
#[derive(Debug, Serialize)]
struct CsvRow {
    #[serde(rename = "L")]
    l: f64,
    ok: bool,
    mu_plus: f64,
    mu_minus: f64,
    mu_third: f64,
    gap: f64,
    #[serde(rename = "T_L")]
    t_l: f64,
    #[serde(rename = "E_L")]
    e_l: f64,
    #[serde(rename = "E_L_minus_I")]
    energy_diff: f64,
    mu_plus_minus_mu: f64,
    mu_minus_minus_mu: f64,
    sup_err_plus_h1: f64,
    sup_err_minus_h1: f64,
    sup_err_plus_l2: f64,
    sup_err_minus_l2: f64,
    overlap: f64,
    d_exchange: f64,
    d_mixed: f64,
    grad_overlap: f64,
    product_norm: f64,
    v_overlap: f64,
    v_left_right_density: f64,
    d_densities: f64,
    residual_plus: f64,
    residual_minus: f64,
    scf_iterations: usize,
    gap_resolved: bool,
    flags: String,
}

pub const CSV_HEADER_COMMENT: &str = "# one row per L; energies and multipliers in model units; E_L_minus_I and mu_*_minus_mu are taken against the monoatomic state on the same mesh; sup_err_* are H^1/L^2 distances to the translated superpositions; overlap..d_densities are the two-center integrals of translated monoatomic orbitals; flags is ';'-separated";

pub fn write_csv(report: &SweepReport, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{CSV_HEADER_COMMENT}")?;
    let mut w = csv::Writer::from_writer(file);
    for r in &report.rows {
        let it = r.interaction.clone().unwrap_or(InteractionIntegrals {
            l: r.l,
            overlap: f64::NAN,
            d_exchange: f64::NAN,
            d_mixed: f64::NAN,
            grad_overlap: f64::NAN,
            product_norm: f64::NAN,
            v_overlap: f64::NAN,
            v_left_right_density: f64::NAN,
            d_densities: f64::NAN,
            predicted_v_left_right_density: f64::NAN,
            predicted_d_densities: f64::NAN,
        });
        w.serialize(CsvRow {
            l: r.l,
            ok: r.ok,
            mu_plus: r.mu_plus,
            mu_minus: r.mu_minus,
            mu_third: r.mu_third,
            gap: r.gap,
            t_l: r.tunneling,
            e_l: r.energy,
            energy_diff: r.energy_diff,
            mu_plus_minus_mu: r.mu_plus_diff,
            mu_minus_minus_mu: r.mu_minus_diff,
            sup_err_plus_h1: r.sup_err_plus,
            sup_err_minus_h1: r.sup_err_minus,
            sup_err_plus_l2: r.sup_err_plus_l2,
            sup_err_minus_l2: r.sup_err_minus_l2,
            overlap: it.overlap,
            d_exchange: it.d_exchange,
            d_mixed: it.d_mixed,
            grad_overlap: it.grad_overlap,
            product_norm: it.product_norm,
            v_overlap: it.v_overlap,
            v_left_right_density: it.v_left_right_density,
            d_densities: it.d_densities,
            residual_plus: r.residual_plus,
            residual_minus: r.residual_minus,
            scf_iterations: r.scf_iterations,
            gap_resolved: r.gap_resolved,
            flags: r.flags.join(";"),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(report: &SweepReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(file, report)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<SweepReport> {
    let file = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}
