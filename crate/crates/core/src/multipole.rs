//! Far-field expansion of potentials generated by radial planar densities.
//!
//! For a radial density in the plane, the angular average of `P_{2n}` collapses
//! the Legendre expansion of `|x-y|^{-a}` to a series in even moments:
//! `sum_n binom(-a/2, n)^2 m_{2n} / |x|^{2n+a}`.

use crate::coulomb::radial_potential;
use crate::error::{config, HartreeError, Result};
use crate::fit::line;
use crate::grids::RadialFunction;
use crate::special::{binomial, central_binomial, integrate};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Truncated expansion `sum_{n<N} c_n / r^{2n+a}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipoleCoefficients {
    pub d: usize,
    pub a: f64,
    pub order: usize,
    pub coeffs: Vec<f64>,
    pub moments: Vec<f64>,
}

/// `m_k = int rho |x|^k` for each even `k`.
pub fn moments(rho: &RadialFunction, orders: &[usize]) -> Result<Vec<f64>> {
    if let Some(k) = orders.iter().find(|k| *k % 2 == 1) {
        return config(format!("moment order {k} is odd; the radial expansion uses even moments only"));
    }
    let g = &rho.grid;
    Ok(orders
        .iter()
        .map(|&k| {
            let f: Vec<f64> = rho.values.iter().zip(&g.nodes).map(|(v, r)| v * r.powi(k as i32)).collect();
            g.integrate(&f)
        })
        .collect())
}

fn check_tail(rho: &RadialFunction) -> Result<()> {
    let g = &rho.grid;
    let half = 0.5 * g.r_max;
    let tail: Vec<f64> = rho.values.iter().zip(&g.nodes).map(|(v, r)| if *r > half { v.abs() } else { 0.0 }).collect();
    let tail = g.integrate(&tail);
    if tail > 1e-12 {
        return Err(HartreeError::Precondition(format!(
            "density carries mass {tail:.3e} beyond r_max/2; the moment series is unreliable"
        )));
    }
    Ok(())
}

/// Coefficients `(1/4^{2n}) binom(2n,n)^2 m_{2n}` of the Coulomb (`a = 1`) expansion.
pub fn radial_coeffs(rho: &RadialFunction, order: usize) -> Result<MultipoleCoefficients> {
    if rho.grid.d != 2 {
        return config("the radial multipole series is defined for planar densities (d = 2)");
    }
    check_tail(rho)?;
    let orders: Vec<usize> = (0..order).map(|n| 2 * n).collect();
    let m = moments(rho, &orders)?;
    let coeffs = (0..order).map(|n| coulomb_factor(n) * m[n]).collect();
    Ok(MultipoleCoefficients { d: 2, a: 1.0, order, coeffs, moments: m })
}

/// `(1/4^{2n}) binom(2n,n)^2`.
pub fn coulomb_factor(n: usize) -> f64 {
    let c = central_binomial(n) / 4f64.powi(n as i32);
    c * c
}

/// Coefficients `binom(-a/2, n)^2 m_{2n}` for the kernel `|x|^{-a}`.
pub fn general_coeffs(rho: &RadialFunction, a: f64, order: usize) -> Result<MultipoleCoefficients> {
    if !(a > 0.0) {
        return config(format!("kernel exponent must be positive, got {a}"));
    }
    if rho.grid.d != 2 {
        return config("the radial multipole series is defined for planar densities (d = 2)");
    }
    check_tail(rho)?;
    let orders: Vec<usize> = (0..order).map(|n| 2 * n).collect();
    let m = moments(rho, &orders)?;
    let coeffs = (0..order).map(|n| binomial(-0.5 * a, n).powi(2) * m[n]).collect();
    Ok(MultipoleCoefficients { d: 2, a, order, coeffs, moments: m })
}

pub fn eval_expansion(coeffs: &MultipoleCoefficients, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(HartreeError::Domain(format!("expansion radius must be positive, got {r}")));
    }
    Ok(coeffs.coeffs.iter().enumerate().map(|(n, c)| c / r.powf(2.0 * n as f64 + coeffs.a)).sum())
}

/// `int_0^{2 pi} P_n(cos theta) d theta`.
pub fn legendre_angular_average(n: usize) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    2.0 * PI * coulomb_factor(n / 2)
}

/// Trapezoid value of the same angular integral (exact for polynomials in `cos theta` of degree < 64).
pub fn legendre_angular_trapezoid(n: usize) -> f64 {
    let m = 64;
    let h = 2.0 * PI / m as f64;
    (0..m).map(|k| crate::special::legendre(n, (k as f64 * h).cos())).sum::<f64>() * h
}

/// Direct value of `int_{|y| <= (1-delta)|x|} rho(|y|) |x-y|^{-a} dy` at `|x| = r`.
pub fn truncated_direct(profile: impl Fn(f64) -> f64, a: f64, r: f64, delta: f64, tol: f64) -> Result<f64> {
    if !(a > 0.0) || !(r > 0.0) || !(0.0..1.0).contains(&delta) {
        return config("truncated potential needs a > 0, r > 0 and delta in [0, 1)");
    }
    let angular = |s: f64| {
        let q = integrate(
            |t| (r * r + s * s - 2.0 * r * s * t.cos()).powf(-0.5 * a),
            0.0,
            PI,
            tol * 1e-3,
            1e-14,
            500,
        );
        2.0 * q.value
    };
    let q = integrate(|s| s * profile(s) * angular(s), 0.0, (1.0 - delta) * r, tol, 1e-14, 2000);
    if !q.converged {
        return Err(HartreeError::Quadrature { radius: r });
    }
    Ok(q.value)
}

/// Result of fitting `log |direct - expansion|` against `log r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub order: usize,
    pub slope: f64,
    pub radii_used: Vec<f64>,
    pub errors: Vec<f64>,
    /// Radii dropped because the remainder fell under the quadrature floor.
    pub excluded: Vec<f64>,
    pub contract_slope: f64,
    pub passed: bool,
}

pub const REMAINDER_FLOOR: f64 = 1e-11;

/// Fitted decay exponent of the truncation remainder of the order-`N` expansion.
pub fn remainder_order_check(rho: &RadialFunction, order: usize, radii: &[f64]) -> Result<RemainderReport> {
    let g = &rho.grid;
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return config("remainder radii must be increasing and at least two");
    }
    if radii[0] < 0.25 * g.r_max - 1e-12 || *radii.last().unwrap() > 0.5 * g.r_max + 1e-12 {
        return config("remainder radii must lie in [r_max/4, r_max/2]");
    }
    let coeffs = radial_coeffs(rho, order)?;
    let direct = radial_potential(rho, 2)?;
    let mut used = Vec::new();
    let mut errors = Vec::new();
    let mut excluded = Vec::new();
    for &r in radii {
        let e = (direct.eval(r) - eval_expansion(&coeffs, r)?).abs();
        if e < REMAINDER_FLOOR {
            excluded.push(r);
        } else {
            used.push(r);
            errors.push(e);
        }
    }
    if used.len() < 2 {
        return Err(HartreeError::FitUnavailable(format!(
            "only {} radii above the quadrature floor for N = {order}",
            used.len()
        )));
    }
    let lx: Vec<f64> = used.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (slope, _, _) = line(&lx, &ly)?;
    let contract_slope = -(2.0 * order as f64 + 1.0) + 0.3;
    Ok(RemainderReport { order, slope, radii_used: used, errors, excluded, contract_slope, passed: slope <= contract_slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_match_closed_forms() {
        assert_eq!(coulomb_factor(0), 1.0);
        assert!((coulomb_factor(1) - 0.25).abs() < 1e-15);
        assert!((coulomb_factor(2) - 9.0 / 64.0).abs() < 1e-15);
        for n in 0..8 {
            assert!((legendre_angular_average(n) - legendre_angular_trapezoid(n)).abs() < 1e-12);
        }
    }
}
