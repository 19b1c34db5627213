//! Run configuration: a sectioned TOML file merged with command-line flags.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub dim: Option<usize>,
    pub coupling: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialSection {
    pub rmax: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    /// Half extent along the molecular axis and transverse extent.
    #[serde(rename = "box")]
    pub extent: Option<[f64; 2]>,
    /// Points along the full molecular axis; sets the spacing when `h` is absent.
    pub points: Option<usize>,
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "L")]
    pub lengths: Option<Vec<f64>>,
    pub floor_h: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScfSection {
    pub tol: Option<f64>,
    pub mixing: Option<f64>,
    pub max_iter: Option<usize>,
    pub eigensolver_tol: Option<f64>,
    pub anderson_depth: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksSection {
    pub trials: Option<usize>,
    pub amplitude: Option<f64>,
    pub suites: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub name: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub fields: Option<bool>,
}

/// Every tunable of a run. Unset fields take defaults that depend on the dimension.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialConfig {
    pub model: ModelSection,
    pub radial: RadialSection,
    pub mesh: MeshSection,
    pub sweep: SweepSection,
    pub scf: ScfSection,
    pub checks: ChecksSection,
    pub run: RunSection,
}

macro_rules! overlay {
    ($dst:expr, $src:expr, $($sec:ident . $field:ident),+ $(,)?) => {
        $( if $src.$sec.$field.is_some() { $dst.$sec.$field = $src.$sec.$field.clone(); } )+
    };
}

impl PartialConfig {
    /// Fields set in `other` win.
    pub fn merge(mut self, other: &PartialConfig) -> Self {
        overlay!(
            self, other,
            model.dim, model.coupling,
            radial.rmax, radial.n,
            mesh.extent, mesh.points, mesh.h,
            sweep.lengths, sweep.floor_h,
            scf.tol, scf.mixing, scf.max_iter, scf.eigensolver_tol, scf.anderson_depth,
            checks.trials, checks.amplitude, checks.suites,
            run.name, run.out, run.seed, run.jobs, run.fields,
        );
        if other.mesh.points.is_some() && other.mesh.h.is_none() {
            self.mesh.h = None;
        }
        self
    }

    /// Reads a TOML file, or the `config` block of a previous `run-manifest.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let block = manifest.get("config").cloned().context("manifest has no `config` block")?;
            return serde_json::from_value(block).with_context(|| format!("config block of {}", path.display()));
        }
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub const DEFAULT_SEED: u64 = hartree_core::checks::STABILITY_SEED;

/// Fills every unset field and checks consistency. The result serializes to a
/// configuration that reproduces the run when loaded again.
pub fn resolve(cfg: &PartialConfig, command: &str) -> Result<PartialConfig> {
    let Some(dim) = cfg.model.dim else { bail!("--dim is required (2 or 3)") };
    if dim != 2 && dim != 3 {
        bail!("--dim must be 2 or 3, got {dim}");
    }
    let mut r = cfg.clone();
    let planar = dim == 2;
    r.model.coupling.get_or_insert(1.0);
    r.radial.rmax.get_or_insert(if planar { 60.0 } else { 120.0 });
    r.radial.n.get_or_insert(3000);
    let [axis_half, transverse] = *r.mesh.extent.get_or_insert(if planar { [30.0, 20.0] } else { [40.0, 35.0] });
    if !(axis_half > 0.0 && transverse > 0.0) {
        bail!("--box extents must be positive");
    }
    if r.mesh.h.is_none() {
        r.mesh.h = Some(match r.mesh.points {
            Some(0) => bail!("--points must be positive"),
            Some(p) => 2.0 * axis_half / p as f64,
            None => 0.25,
        });
    }
    let h = r.mesh.h.unwrap();
    r.mesh.points = Some((2.0 * axis_half / h).round() as usize);
    r.sweep.lengths.get_or_insert_with(|| vec![8.0, 12.0, 16.0, 20.0]);
    let defaults = hartree_core::scf::SCFSettings::default();
    r.scf.tol.get_or_insert(defaults.tol_residual);
    r.scf.mixing.get_or_insert(defaults.mixing);
    r.scf.max_iter.get_or_insert(defaults.max_iter);
    r.scf.eigensolver_tol.get_or_insert(defaults.eigensolver_tol);
    r.scf.anderson_depth.get_or_insert(defaults.anderson_depth);
    r.checks.trials.get_or_insert(200);
    r.checks.amplitude.get_or_insert(0.2);
    r.checks.suites.get_or_insert_with(|| SUITES.iter().map(|s| s.to_string()).collect());
    for s in r.checks.suites.as_ref().unwrap() {
        if !SUITES.contains(&s.as_str()) {
            bail!("unknown check suite `{s}` (expected one of {SUITES:?})");
        }
    }
    r.run.name.get_or_insert_with(|| format!("{command}-d{dim}"));
    r.run.out.get_or_insert_with(|| PathBuf::from("out"));
    r.run.seed.get_or_insert(DEFAULT_SEED);
    r.run.fields.get_or_insert(false);
    let settings = scf_settings(&r);
    settings.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(r)
}

pub const SUITES: [&str; 3] = ["convolution", "stability", "yukawa"];

/// SCF controls of a resolved configuration.
pub fn scf_settings(r: &PartialConfig) -> hartree_core::scf::SCFSettings {
    let d = hartree_core::scf::SCFSettings::default();
    hartree_core::scf::SCFSettings {
        mixing: r.scf.mixing.unwrap_or(d.mixing),
        tol_residual: r.scf.tol.unwrap_or(d.tol_residual),
        max_iter: r.scf.max_iter.unwrap_or(d.max_iter),
        eigensolver_tol: r.scf.eigensolver_tol.unwrap_or(d.eigensolver_tol),
        anderson_depth: r.scf.anderson_depth.unwrap_or(d.anderson_depth),
        ..d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file: PartialConfig = toml::from_str("[model]\ndim = 3\ncoupling = 0.5\n[mesh]\nh = 0.5\n").unwrap();
        let mut flags = PartialConfig::default();
        flags.model.coupling = Some(0.0);
        flags.mesh.points = Some(100);
        let merged = file.merge(&flags);
        assert_eq!(merged.model.dim, Some(3));
        assert_eq!(merged.model.coupling, Some(0.0));
        let r = resolve(&merged, "mono").unwrap();
        assert_eq!(r.mesh.h, Some(0.8));
        assert_eq!(r.run.name.as_deref(), Some("mono-d3"));
    }

    #[test]
    fn resolved_configs_are_fixed_points() {
        let mut c = PartialConfig::default();
        c.model.dim = Some(2);
        let r = resolve(&c, "sweep").unwrap();
        assert_eq!(resolve(&r, "sweep").unwrap(), r);
        let text = toml::to_string(&r).unwrap();
        assert_eq!(toml::from_str::<PartialConfig>(&text).unwrap(), r);
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(resolve(&PartialConfig::default(), "mono").is_err());
        let mut c = PartialConfig::default();
        c.model.dim = Some(4);
        assert!(resolve(&c, "mono").is_err());
        c.model.dim = Some(2);
        c.scf.mixing = Some(0.0);
        assert!(resolve(&c, "mono").is_err());
        c.scf.mixing = None;
        c.checks.suites = Some(vec!["bogus".into()]);
        assert!(resolve(&c, "check").is_err());
        assert!(toml::from_str::<PartialConfig>("[model]\ndimension = 2\n").is_err());
    }
}
