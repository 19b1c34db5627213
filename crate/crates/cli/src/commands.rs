use crate::config::{scf_settings, PartialConfig};
use anyhow::{Context, Result};
use hartree_core::asymptotics::{run_sweep, tunneling_table, write_csv, write_json, MeshSpec, SweepSpec};
use hartree_core::checks::{convolution_decay_check, default_convolution_radii, stability_check_seeded, yukawa_gradient_check};
use hartree_core::diatomic::{diatomic_mesh, solve_diatomic, solve_mesh_reference, DiatomicRecord, MeshSystem};
use hartree_core::mono::{fit_decay, mean_field_tail, solve_monoatomic, DecayFit, MonoSummary, MonoatomicSolution, TailReport};
use hartree_core::{make_radial_grid, ModelParams, RadialScheme};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};

struct Run<'a> {
    cfg: &'a PartialConfig,
    command: &'static str,
    dir: PathBuf,
    outputs: Vec<String>,
}

impl<'a> Run<'a> {
    fn start(cfg: &'a PartialConfig, command: &'static str) -> Result<Self> {
        let dir = cfg.run.out.clone().unwrap_or_default().join(cfg.run.name.as_deref().unwrap_or(command));
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let run = Self { cfg, command, dir, outputs: Vec::new() };
        run.manifest(false)?;
        Ok(run)
    }

    fn manifest(&self, complete: bool) -> Result<()> {
        let cfg = self.cfg;
        let dim = cfg.model.dim.unwrap_or_default();
        let doc = json!({
            "tool": "hartree",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "complete": complete,
            "seed": cfg.run.seed,
            "grid": {
                "radial": { "d": dim, "r_max": cfg.radial.rmax, "n": cfg.radial.n, "scheme": RadialScheme::Graded },
                "mesh": {
                    "geometry": if dim == 2 { "cartesian" } else { "axial" },
                    "h": cfg.mesh.h,
                    "axis_half": cfg.mesh.extent.map(|e| e[0]),
                    "transverse": cfg.mesh.extent.map(|e| e[1]),
                },
            },
            "config": cfg,
            "outputs": self.outputs,
        });
        std::fs::write(self.dir.join("run-manifest.json"), serde_json::to_string_pretty(&doc)?)?;
        Ok(())
    }

    fn path(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.dir.join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        self.outputs.push(rel.to_string());
        Ok(p)
    }

    fn json(&mut self, rel: &str, value: &impl Serialize) -> Result<()> {
        let p = self.path(rel)?;
        std::fs::write(&p, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", p.display()))
    }

    fn finish(self) -> Result<()> {
        self.manifest(true)?;
        println!("artifacts in {}", self.dir.display());
        Ok(())
    }
}

fn params(cfg: &PartialConfig) -> Result<ModelParams> {
    Ok(ModelParams::new(cfg.model.dim.unwrap(), cfg.model.coupling.unwrap())?)
}

fn solve_mono(cfg: &PartialConfig) -> Result<MonoatomicSolution> {
    let p = params(cfg)?;
    let grid = make_radial_grid(cfg.radial.rmax.unwrap(), cfg.radial.n.unwrap(), p.d, RadialScheme::Graded)?;
    Ok(solve_monoatomic(&p, &grid, &scf_settings(cfg))?)
}

#[derive(Serialize)]
struct MonoArtifact {
    #[serde(flatten)]
    summary: MonoSummary,
    sqrt_abs_mu: f64,
    energy_warning: bool,
    decay_fit: Option<DecayFit>,
    tail: Option<TailReport>,
}

fn mono_artifact(sol: &MonoatomicSolution) -> MonoArtifact {
    let k = sol.decay_rate();
    let r_max = sol.grid().r_max;
    let window = (5.0 / k, (15.0 / k).min(0.8 * r_max));
    let decay_fit = fit_decay(&sol.u, window).map_err(|e| log::warn!("decay fit skipped: {e}")).ok();
    let radii: Vec<f64> = [10.0, 15.0, 20.0, 25.0].into_iter().filter(|r| *r < 0.5 * r_max).collect();
    let tail = mean_field_tail(sol, &radii).map_err(|e| log::warn!("tail report skipped: {e}")).ok();
    MonoArtifact { summary: sol.summary(), sqrt_abs_mu: k, energy_warning: sol.energy_warning, decay_fit, tail }
}

fn write_mono(run: &mut Run, sol: &MonoatomicSolution) -> Result<()> {
    run.json("mono.json", &mono_artifact(sol))?;
    let p = run.path("mono.csv")?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
    writeln!(f, "# radial orbital u (unit L2 norm in R^d) and mean-field potential V^MF = w - 1/r")?;
    writeln!(f, "r,u,vmf")?;
    for ((r, u), v) in sol.grid().nodes.iter().zip(&sol.u.values).zip(&sol.vmf.values) {
        writeln!(f, "{r},{u},{v}")?;
    }
    Ok(())
}

pub fn mono(cfg: &PartialConfig) -> Result<bool> {
    let mut run = Run::start(cfg, "mono")?;
    let sol = solve_mono(cfg)?;
    write_mono(&mut run, &sol)?;
    println!("mu = {:.12}  I = {:.12}  m1 = {:.8}  residual = {:.2e}", sol.mu, sol.energy_i, sol.m1, sol.residual);
    run.finish()?;
    Ok(true)
}

fn mesh_system(cfg: &PartialConfig) -> Result<MeshSystem> {
    let [axis_half, transverse] = cfg.mesh.extent.unwrap();
    Ok(MeshSystem::new(diatomic_mesh(cfg.model.dim.unwrap(), cfg.mesh.h.unwrap(), axis_half, transverse)?))
}

fn dump_fields(path: &Path, sys: &MeshSystem, sol: &hartree_core::diatomic::DiatomicSolution) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# x1 along the axis, r transverse distance; u_plus/u_minus normalized to 2, potential is V_L + Hartree")?;
    writeln!(f, "x1,r,u_plus,u_minus,potential")?;
    for i in 0..sys.mesh.len() {
        let (x1, r) = sys.mesh.axial_coords(i);
        writeln!(f, "{x1},{r},{},{},{}", sol.u_plus.values[i], sol.u_minus.values[i], sol.potential[i])?;
    }
    Ok(())
}

pub fn diatomic(cfg: &PartialConfig) -> Result<bool> {
    let mut run = Run::start(cfg, "diatomic")?;
    let p = params(cfg)?;
    let settings = scf_settings(cfg);
    let mono = solve_mono(cfg)?;
    write_mono(&mut run, &mono)?;
    let sys = mesh_system(cfg)?;
    let reference = solve_mesh_reference(&sys, &mono, &settings)?;
    let lengths = cfg.sweep.lengths.clone().unwrap();
    let sols = lengths
        .par_iter()
        .map(|&l| solve_diatomic(&p, &sys, &reference, l, &settings))
        .collect::<hartree_core::Result<Vec<_>>>()?;
    let records: Vec<DiatomicRecord> = sols.iter().map(|s| s.record()).collect();
    run.json(
        "diatomic.json",
        &json!({
            "reference": { "mu": reference.mu, "I": reference.energy_i, "m1": reference.m1, "m2": reference.m2 },
            "records": records,
        }),
    )?;
    if cfg.run.fields == Some(true) {
        for s in &sols {
            let p = run.path(&format!("fields/L{}.csv", s.l))?;
            dump_fields(&p, &sys, s)?;
        }
    }
    for r in &records {
        println!("L = {:>6.2}  mu+ = {:.10}  mu- = {:.10}  gap = {:.4e}  E_L = {:.10}", r.l, r.mu_plus, r.mu_minus, r.gap, r.energy);
    }
    run.finish()?;
    Ok(true)
}

pub fn sweep(cfg: &PartialConfig) -> Result<bool> {
    let mut run = Run::start(cfg, "sweep")?;
    let p = params(cfg)?;
    let mono = solve_mono(cfg)?;
    write_mono(&mut run, &mono)?;
    let [axis_half, transverse] = cfg.mesh.extent.unwrap();
    let spec = SweepSpec {
        mesh: MeshSpec { h: cfg.mesh.h.unwrap(), axis_half, transverse },
        lengths: cfg.sweep.lengths.clone().unwrap(),
        settings: scf_settings(cfg),
        floor_h: cfg.sweep.floor_h,
    };
    let report = run_sweep(&p, &mono, &spec)?;
    write_csv(&report, &run.path("sweep.csv")?)?;
    write_json(&report, &run.path("sweep.json")?)?;
    if let Ok(table) = tunneling_table(&report) {
        run.json("checks/tunneling_table.json", &table)?;
    }
    println!("{:>8} {:>16} {:>16} {:>12} {:>12}", "L", "mu+", "mu-", "gap", "gap/T_L");
    for r in &report.rows {
        if r.ok {
            println!("{:>8.2} {:>16.10} {:>16.10} {:>12.4e} {:>12.4e}", r.l, r.mu_plus, r.mu_minus, r.gap, r.gap / r.tunneling);
        } else {
            println!("{:>8.2} failed: {}", r.l, r.error.as_deref().unwrap_or("?"));
        }
    }
    for (name, f) in &report.fits {
        let verdict = match f.passed {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "-",
        };
        println!("fit {name:<24} slope {:>10.5}  window {:?}  [{verdict}]", f.slope, f.window);
    }
    run.finish()?;
    Ok(report.rows.iter().all(|r| r.ok))
}

pub fn check(cfg: &PartialConfig) -> Result<bool> {
    let mut run = Run::start(cfg, "check")?;
    let suites = cfg.checks.suites.clone().unwrap();
    let mut verdicts = serde_json::Map::new();
    let needs_mono = suites.iter().any(|s| s != "convolution");
    let mono = if needs_mono { Some(solve_mono(cfg)?) } else { None };
    for suite in &suites {
        let passed = match suite.as_str() {
            "convolution" => {
                let cases = [(1.0, 0.5, 2), (0.5, 1.0, 3), (1.0, 0.0, 2)];
                let reports = cases
                    .iter()
                    .map(|&(nu, k, d)| convolution_decay_check(nu, k, d, &default_convolution_radii(nu, 8)))
                    .collect::<hartree_core::Result<Vec<_>>>()?;
                run.json("checks/convolution.json", &reports)?;
                reports.iter().all(|r| r.passed)
            }
            "stability" => {
                let m = mono.as_ref().unwrap();
                let rep = stability_check_seeded(m, cfg.checks.trials.unwrap(), cfg.checks.amplitude.unwrap(), cfg.run.seed.unwrap())?;
                run.json("checks/stability.json", &rep)?;
                rep.passed
            }
            "yukawa" => {
                let m = mono.as_ref().unwrap();
                let rep = yukawa_gradient_check(m, scf_settings(cfg).tol_residual)?;
                run.json("checks/yukawa.json", &rep)?;
                rep.identity_passed && rep.limit_passed
            }
            other => anyhow::bail!("unknown suite {other}"),
        };
        println!("{suite:<12} {}", if passed { "PASS" } else { "FAIL" });
        verdicts.insert(suite.clone(), passed.into());
    }
    let all = verdicts.values().all(|v| v.as_bool() == Some(true));
    run.json("checks/summary.json", &json!({ "suites": verdicts, "passed": all }))?;
    run.finish()?;
    Ok(all)
}
