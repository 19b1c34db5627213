//! Special functions and quadrature rules shared by the solvers.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

/// Arithmetic-geometric mean of two nonnegative numbers.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-15 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind as a function of the modulus `k`.
///
/// Diverges logarithmically as `k -> 1`; callers that integrate across that
/// point should go through [`ellip_k_split`].
pub fn ellip_k(k: f64) -> f64 {
    let kp = ((1.0 - k) * (1.0 + k)).max(0.0).sqrt();
    if kp == 0.0 {
        return f64::INFINITY;
    }
    FRAC_PI_2 / agm(1.0, kp)
}

/// Complete elliptic integral evaluated through the complementary modulus `kp = sqrt(1-k^2)`.
///
/// Preferred when `k` is close to one because `kp` carries the full precision.
pub fn ellip_k_comp(kp: f64) -> f64 {
    if kp <= 0.0 {
        return f64::INFINITY;
    }
    FRAC_PI_2 / agm(1.0, kp)
}

/// Regular part of K near the logarithmic singularity.
///
/// With `kp` the complementary modulus, `K(k) = S(kp) - (2/pi) K(kp) ln kp`
/// where `S` is analytic in `kp^2` and `S(0) = ln 4`.
pub fn ellip_k_split(kp: f64) -> (f64, f64) {
    let log_coef = 2.0 / PI * ellip_k(kp);
    if kp == 0.0 {
        return (2.0 * LN_2, log_coef);
    }
    (ellip_k_comp(kp) + log_coef * kp.ln(), log_coef)
}

/// Legendre polynomial `P_n(x)` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// Central binomial coefficient `binom(2n, n)` as a float.
pub fn central_binomial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * (n + k) as f64 / k as f64)
}

/// Generalized binomial coefficient `binom(x, n)` for real `x`.
pub fn binomial(x: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (x - k as f64) / (k + 1) as f64)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = GK_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for j in 0..7 {
        let x = h * GK_NODES[j];
        let s = f(c - x) + f(c + x);
        kron += GK_WEIGHTS[j] * s;
        if j % 2 == 1 {
            gauss += G7_WEIGHTS[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Subdivides the interval with the largest error estimate until the total
/// estimate drops below `max(abs_tol, rel_tol * |I|)` or `max_intervals` is hit.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Quadrature {
    let (v, e) = gk15(&mut f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut value = v;
    let mut error = e;
    while error > abs_tol.max(rel_tol * value.abs()) {
        if intervals.len() >= max_intervals {
            return Quadrature { value, error, converged: false };
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty interval list");
        let (lo, hi, v0, e0) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Quadrature { value, error, converged: false };
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        value += v1 + v2 - v0;
        error += e1 + e2 - e0;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let value = intervals.iter().map(|t| t.2).sum();
    let error = intervals.iter().map(|t| t.3).sum();
    Quadrature { value, error, converged: true }
}

/// Integral over `[a, inf)` through the substitution `x = a + t/(1-t)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Quadrature {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - t;
            let v = f(a + t / s);
            if v == 0.0 {
                0.0
            } else {
                v / (s * s)
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
        max_intervals,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn agm_and_k_reference_values() {
        assert_relative_eq!(ellip_k(0.0), FRAC_PI_2, epsilon = 1e-15);
        // K(1/sqrt 2) = Gamma(1/4)^2 / (4 sqrt(pi))
        let gamma_quarter = 3.625_609_908_221_908_f64;
        let expected = gamma_quarter * gamma_quarter / (4.0 * PI.sqrt());
        assert_relative_eq!(ellip_k(0.5_f64.sqrt()), expected, epsilon = 1e-14);
    }

    #[test]
    fn split_reassembles_k() {
        for &k in &[0.1, 0.5, 0.9, 0.999, 0.999_999] {
            let kp = ((1.0 - k) * (1.0 + k) as f64).sqrt();
            let (s, c) = ellip_k_split(kp);
            assert_relative_eq!(s - c * kp.ln(), ellip_k(k), max_relative = 1e-13);
        }
        let (s0, c0) = ellip_k_split(0.0);
        assert_relative_eq!(s0, 4.0_f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(c0, 1.0, epsilon = 1e-15);
        let (s1, _) = ellip_k_split(1e-9);
        assert!((s1 - s0).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        for p in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn adaptive_quadrature_handles_peaks() {
        let q = integrate(|x| (-x * x).exp(), -10.0, 10.0, 1e-14, 1e-14, 1000);
        assert!(q.converged);
        assert_relative_eq!(q.value, PI.sqrt(), epsilon = 1e-13);
        let q = integrate_to_infinity(|x| (-x).exp(), 0.0, 1e-14, 1e-14, 1000);
        assert_relative_eq!(q.value, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn binomials() {
        assert_eq!(central_binomial(3), 20.0);
        assert_relative_eq!(binomial(-0.5, 1), -0.5);
        assert_relative_eq!(binomial(-0.5, 2), 0.375);
        assert_relative_eq!(binomial(-1.0, 1), -1.0);
        assert_relative_eq!(legendre(2, 0.3), 0.5 * (3.0 * 0.09 - 1.0), epsilon = 1e-15);
    }
}
