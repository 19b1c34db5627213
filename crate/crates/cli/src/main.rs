mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::PartialConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "hartree", version, about = "Two-center restricted Hartree model lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the single-center problem and fit its tail.
    Mono(Flags),
    /// Solve the two-center problem at each requested separation.
    Diatomic(Flags),
    /// Run an L-sweep, fit the asymptotic laws and write sweep.csv / sweep.json.
    Sweep(Flags),
    /// Run the standalone checks; exits 0 only when every selected suite passes.
    Check(Flags),
}

#[derive(Args, Debug, Clone)]
struct Flags {
    /// Sectioned TOML configuration, or a previous run-manifest.json.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(usize))]
    dim: Option<usize>,
    /// Strength of the Hartree term (0 gives hydrogen).
    #[arg(long)]
    coupling: Option<f64>,
    #[arg(long)]
    rmax: Option<f64>,
    /// Radial grid points.
    #[arg(long)]
    n: Option<usize>,
    /// Mesh extents AXIS_HALF,TRANSVERSE.
    #[arg(long = "box", value_parser = parse_extent)]
    extent: Option<[f64; 2]>,
    /// Mesh points along the molecular axis.
    #[arg(long)]
    points: Option<usize>,
    /// Mesh spacing; overrides --points.
    #[arg(long)]
    h: Option<f64>,
    /// A single separation.
    #[arg(long = "L", conflicts_with = "lengths")]
    length: Option<f64>,
    /// Comma-separated separations.
    #[arg(long = "L-list", value_delimiter = ',')]
    lengths: Option<Vec<f64>>,
    /// Spacing of the second resolution used for the error floor.
    #[arg(long)]
    floor_h: Option<f64>,
    /// SCF residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    mixing: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Worker threads for independent separations and trials.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output root; artifacts go to OUT/NAME.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Dump eigenfunctions under fields/.
    #[arg(long)]
    fields: bool,
    /// Check suites to run (convolution, stability, yukawa).
    #[arg(long, value_delimiter = ',')]
    suites: Option<Vec<String>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    amplitude: Option<f64>,
}

impl Flags {
    fn overrides(&self) -> PartialConfig {
        let mut c = PartialConfig::default();
        c.model.dim = self.dim;
        c.model.coupling = self.coupling;
        c.radial.rmax = self.rmax;
        c.radial.n = self.n;
        c.mesh.extent = self.extent;
        c.mesh.points = self.points;
        c.mesh.h = self.h;
        c.sweep.lengths = self.lengths.clone().or(self.length.map(|l| vec![l]));
        c.sweep.floor_h = self.floor_h;
        c.scf.tol = self.tol;
        c.scf.mixing = self.mixing;
        c.scf.max_iter = self.max_iter;
        c.checks.trials = self.trials;
        c.checks.amplitude = self.amplitude;
        c.checks.suites = self.suites.clone();
        c.run.name = self.name.clone();
        c.run.out = self.out.clone();
        c.run.seed = self.seed;
        c.run.jobs = self.jobs;
        c.run.fields = self.fields.then_some(true);
        c
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, flags) = match &cli.command {
        Command::Mono(f) => ("mono", f),
        Command::Diatomic(f) => ("diatomic", f),
        Command::Sweep(f) => ("sweep", f),
        Command::Check(f) => ("check", f),
    };
    let base = match &flags.config {
        Some(path) => match PartialConfig::load(path) {
            Ok(c) => c,
            Err(e) => return usage_error(&e),
        },
        None => PartialConfig::default(),
    };
    let cfg = match config::resolve(&base.merge(&flags.overrides()), name) {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    if let Some(jobs) = cfg.run.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Mono(_) => commands::mono(&cfg),
        Command::Diatomic(_) => commands::diatomic(&cfg),
        Command::Sweep(_) => commands::sweep(&cfg),
        Command::Check(_) => commands::check(&cfg),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => match e.downcast_ref::<hartree_core::HartreeError>() {
            Some(hartree_core::HartreeError::Config(_)) => usage_error(&e),
            _ => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}

fn parse_extent(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [a, t] = parts.as_slice() else { return Err(format!("expected AXIS_HALF,TRANSVERSE, got {s:?}")) };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok([num(a)?, num(t)?])
}

fn usage_error(e: &anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(2)
}
