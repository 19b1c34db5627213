use hartree_core::coulomb::{radial_potential, RadialCoulomb};
use hartree_core::grids::*;
use hartree_core::mono::*;
use hartree_core::scf::SCFSettings;
use hartree_core::HartreeError;
use std::f64::consts::PI;

fn settings() -> SCFSettings {
    SCFSettings { tol_residual: 1e-9, ..Default::default() }
}

fn solve(d: usize, coupling: f64, r_max: f64, n: usize) -> MonoatomicSolution {
    let g = make_radial_grid(r_max, n, d, RadialScheme::Graded).unwrap();
    solve_monoatomic(&ModelParams::new(d, coupling).unwrap(), &g, &settings()).unwrap()
}

#[test]
fn hydrogen_limits() {
    let h3 = solve(3, 0.0, 40.0, 4000);
    assert!((h3.mu + 0.25).abs() < 1e-3, "{}", h3.mu);
    let h2 = solve(2, 0.0, 40.0, 4000);
    assert!((h2.mu + 1.0).abs() < 1e-3, "{}", h2.mu);
    for s in [&h3, &h2] {
        let n = s.u.values.len();
        assert!(s.u.values[..n - 1].iter().all(|x| *x > 0.0));
        assert!((s.u.norm() - 1.0).abs() < 1e-12);
        assert_eq!(s.hartree_energy, 0.0);
    }
}

#[test]
fn energy_functional_examples() {
    let g = make_radial_grid(40.0, 4000, 3, RadialScheme::Graded).unwrap();
    let op = RadialCoulomb::new(&g);
    let params = ModelParams::new(3, 0.0).unwrap();
    assert_eq!(energy_functional_radial(&op, &params, &vec![0.0; g.n]), 0.0);
    // normalized e^{-r/2} in R^3: |c|^2 = 1/(8 pi)
    let c = (1.0 / (8.0 * PI)).sqrt();
    let v: Vec<f64> = g.nodes.iter().map(|r| c * (-r / 2.0).exp()).collect();
    let e = energy_functional_radial(&op, &params, &v);
    assert!((e + 0.25).abs() < 1e-4, "{e}");
}

#[test]
fn converged_hartree_states_satisfy_the_multiplier_relation() {
    for d in [2, 3] {
        let r_max = if d == 2 { 50.0 } else { 120.0 };
        let s = solve(d, 1.0, r_max, 3000);
        assert!(s.residual <= 1e-8, "d={d}: {}", s.residual);
        assert!(s.mu < 0.0 && s.energy_i < s.mu);
        assert!((s.mu - s.energy_i - s.hartree_energy).abs() <= 10.0 * 1e-9, "d={d}");
        let op = RadialCoulomb::new(s.grid());
        let e = energy_functional_radial(&op, &s.params, &s.u.values);
        assert!((e - s.energy_i).abs() < 1e-14);
        assert!(s.m1 > 0.0 && s.m2 > s.m1 * s.m1);
        assert!(!s.energy_warning);
        let summary = s.summary();
        assert_eq!(summary.d, d);
        assert_eq!(summary.mu, s.mu);
    }
}

#[test]
fn decay_fits_recover_the_analytic_rates() {
    let h3 = solve(3, 0.0, 60.0, 4000);
    let f = fit_decay(&h3.u, (10.0, 40.0)).unwrap();
    assert!((f.rate - 0.5).abs() < 0.01, "{f:?}");
    let h2 = solve(2, 0.0, 40.0, 4000);
    let f = fit_decay(&h2.u, (4.0, 20.0)).unwrap();
    assert!((f.rate - 1.0).abs() < 0.02, "{f:?}");
    assert!(matches!(fit_decay(&h2.u, (4.0, 39.0)), Err(HartreeError::Domain(_))));
    assert!(fit_decay(&h2.u, (5.0, 4.0)).is_err());
}

#[test]
fn hartree_decay_rate_matches_the_multiplier() {
    let s = solve(2, 1.0, 50.0, 3000);
    let k = s.decay_rate();
    let f = fit_decay(&s.u, (5.0 / k, 15.0 / k)).unwrap();
    assert!((f.rate - k).abs() <= 0.02 * k, "{f:?} vs {k}");
    assert!((f.power - 0.5).abs() <= 0.25, "{f:?}");
}

#[test]
fn three_dimensional_mean_field_is_screened() {
    let s = solve(3, 1.0, 120.0, 3000);
    // The screened orbital decays slowly (sqrt|mu| ~ 0.15), so V^MF(20) is of order -e^{-2 sqrt|mu| 20}/20.
    let t = mean_field_tail(&s, &[20.0]).unwrap();
    assert!(t.values[0] >= -1e-4 && t.values[0] <= 1e-12, "{:?}", t.values);
    let outside: f64 = {
        let g = s.grid();
        let f: Vec<f64> = g.nodes.iter().zip(&s.u.values).map(|(r, u)| if *r > 20.0 { u * u * (1.0 / r - 1.0 / 20.0) } else { 0.0 }).collect();
        g.integrate(&f)
    };
    assert!((t.values[0] - outside).abs() < 1e-3 * outside.abs(), "{} vs {outside}", t.values[0]);
    let t = mean_field_tail(&s, &[10.0, 15.0, 20.0, 25.0]).unwrap();
    assert!(t.max_statistic <= 1e-12);
    assert!(t.min_envelope.is_finite() && t.min_envelope < 0.0);
    assert!(mean_field_tail(&s, &[200.0]).is_err());
}

fn gaussian_surrogate() -> MonoatomicSolution {
    // |u|^2 is the unit planar Gaussian: m1 = 2, m2 = 8
    let g = make_radial_grid(40.0, 4000, 2, RadialScheme::Graded).unwrap();
    let u = RadialFunction::from_fn(&g, |r| ((-r * r / 2.0).exp() / (2.0 * PI)).sqrt());
    let dens = u.map(|_, v| v * v);
    let w = radial_potential(&dens, 2).unwrap();
    let vmf = RadialFunction { grid: g.clone(), values: g.nodes.iter().zip(&w.values).map(|(r, v)| v - 1.0 / r).collect() };
    MonoatomicSolution {
        params: ModelParams::hartree(2).unwrap(),
        u,
        mu: -0.5,
        energy_i: -0.6,
        m1: 2.0,
        m2: 8.0,
        vmf,
        hartree_energy: 0.1,
        residual: 0.0,
        iterations: 0,
        residual_history: vec![],
        energy_history: vec![],
        energy_warning: false,
    }
}

#[test]
fn planar_tail_follows_the_moment_expansion() {
    let s = gaussian_surrogate();
    let t = mean_field_tail(&s, &[8.0, 16.0]).unwrap();
    let ratio = t.scaled_remainder[0] / t.scaled_remainder[1];
    assert!(ratio < 3.0 && ratio > 1.0 / 3.0, "{:?}", t.scaled_remainder);
    // the next term of the series is (20/64)^2 m_6 with m_6 = 48
    assert!((t.scaled_remainder[1] - 4.6875).abs() < 0.5, "{:?}", t.scaled_remainder);

    let r: f64 = 15.0;
    let both = s.m1 / (4.0 * r.powi(3)) + 9.0 * s.m2 / (64.0 * r.powi(5));
    let first = s.m1 / (4.0 * r.powi(3));
    assert!((both - first - 9.0 * 8.0 / (64.0 * r.powi(5))).abs() < 1e-18);
}

#[test]
fn bad_inputs_are_configuration_errors() {
    assert!(ModelParams::new(4, 1.0).is_err());
    assert!(ModelParams::new(2, 1.5).is_err());
    let g = make_radial_grid(40.0, 400, 3, RadialScheme::Graded).unwrap();
    let p = ModelParams::hartree(2).unwrap();
    assert!(matches!(solve_monoatomic(&p, &g, &settings()), Err(HartreeError::Config(_))));
    let bad = SCFSettings { mixing: 0.0, ..settings() };
    assert!(solve_monoatomic(&ModelParams::hartree(3).unwrap(), &g, &bad).is_err());
}

#[test]
fn iteration_budget_is_reported() {
    let g = make_radial_grid(60.0, 1000, 3, RadialScheme::Graded).unwrap();
    let tight = SCFSettings { max_iter: 2, ..settings() };
    match solve_monoatomic(&ModelParams::hartree(3).unwrap(), &g, &tight) {
        Err(HartreeError::NotConverged { iterations, history }) => {
            assert_eq!(iterations, 2);
            assert_eq!(history.len(), 2);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn solves_are_deterministic() {
    let a = solve(3, 1.0, 60.0, 800);
    let b = solve(3, 1.0, 60.0, 800);
    assert_eq!(a.mu.to_bits(), b.mu.to_bits());
    assert_eq!(a.u.values, b.u.values);
}

