//! Bessel functions J0, J1 and approximate J0 zeros for Hankel quadrature.
//!
//! Small arguments use the ascending series; large arguments use the integral
//! representation with the trapezoidal rule, which converges geometrically for
//! these periodic analytic integrands. Accuracy is ~1e-13 absolute throughout
//! the ranges exercised here (z up to a few hundred).

use std::f64::consts::PI;

const SERIES_CUTOVER: f64 = 6.0;

pub fn j0(z: f64) -> f64 {
    let z = z.abs();
    if z <= SERIES_CUTOVER {
        j0_series(z)
    } else {
        bessel_integral(0, z)
    }
}

pub fn j1(z: f64) -> f64 {
    let s = z.signum();
    let z = z.abs();
    let v = if z <= SERIES_CUTOVER {
        j1_series(z)
    } else {
        bessel_integral(1, z)
    };
    s * v
}

fn j0_series(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..60 {
        term *= -q / ((m * m) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

fn j1_series(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 0.5 * z;
    let mut sum = term;
    for m in 1..60 {
        term *= -q / ((m * (m + 1)) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

/// `J_n(z) = (1/pi) int_0^pi cos(n theta - z sin theta) d theta` by trapezoid.
fn bessel_integral(n: u32, z: f64) -> f64 {
    let m = (0.6 * z) as usize + 32;
    let h = PI / m as f64;
    // endpoints: theta = 0 gives cos(0) resp. cos(n*0); theta = pi gives cos(n pi)
    let f = |theta: f64| (n as f64 * theta - z * theta.sin()).cos();
    let mut sum = 0.5 * (f(0.0) + f(PI));
    for i in 1..m {
        sum += f(i as f64 * h);
    }
    sum * h / PI
}

/// k-th positive zero of J0 (k = 1, 2, ...): McMahon expansion polished by
/// two Newton steps (J0' = -J1).
pub fn j0_zero(k: usize) -> f64 {
    let beta = (k as f64 - 0.25) * PI;
    let e = 8.0 * beta;
    let mut z = beta + 1.0 / e - 124.0 / (3.0 * e.powi(3)) + 120928.0 / (15.0 * e.powi(5));
    for _ in 0..2 {
        z += j0(z) / j1(z);
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values computed with 22-digit arithmetic
    const J0_REF: &[(f64, f64)] = &[
        (0.5, 0.9384698072408129),
        (1.0, 0.7651976865579666),
        (4.0, -0.3971498098638474),
        (7.5, 0.2663396578803784),
        (11.0, -0.1711903004071961),
        (12.5, 0.1468840547004211),
        (25.0, 0.0962667832759581),
        (50.3, 0.0820551183631548),
        (123.4, -0.0715255367192602),
        (200.0, -0.0154374399305651),
        (347.1, 0.0316534443535312),
    ];
    const J1_REF: &[(f64, f64)] = &[
        (0.5, 0.2422684576748739),
        (1.0, 0.4400505857449335),
        (4.0, -0.0660433280235491),
        (7.5, 0.1352484275797055),
        (11.0, -0.1767852989567215),
        (12.5, -0.1654838046147597),
        (25.0, -0.1253502495802899),
        (50.3, -0.0761478838409484),
        (123.4, -0.0068509998856540),
        (200.0, -0.0543045381823782),
        (347.1, 0.0288929509665066),
    ];

    #[test]
    fn j0_matches_reference() {
        for &(z, want) in J0_REF {
            assert!((j0(z) - want).abs() < 1e-13, "J0({z})");
        }
    }

    #[test]
    fn j1_matches_reference() {
        for &(z, want) in J1_REF {
            assert!((j1(z) - want).abs() < 1e-13, "J1({z})");
        }
        assert!((j1(-1.0) + 0.4400505857449335).abs() < 1e-13);
    }

    #[test]
    fn j0_zeros_are_zeros() {
        for k in 1..40 {
            let z = j0_zero(k);
            assert!(j0(z).abs() < 1e-6, "J0(zero {k}) = {}", j0(z));
        }
    }
}
