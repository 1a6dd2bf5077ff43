//! Adaptive Gauss-Kronrod quadrature and oscillatory-transform drivers.
//!
//! The kernel evaluations reduce to semi-infinite integrals of a smooth,
//! eventually superexponentially-decaying envelope against cos(x rho),
//! sin(x rho) or J0/J1(x rho). The drivers split the axis at the zeros of the
//! oscillator, integrate each panel adaptively, and stop once the envelope
//! falls below the truncation floor; an Euler transform of the alternating
//! panel sums bounds the discarded tail.

use crate::bessel;
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum QuadError {
    /// Requested tolerance not met; carries the achieved error estimate.
    NonConvergence { achieved: f64, requested: f64 },
    BadInterval { a: f64, b: f64 },
}

impl fmt::Display for QuadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonConvergence {
                achieved,
                requested,
            } => write!(
                f,
                "quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}"
            ),
            Self::BadInterval { a, b } => write!(f, "bad interval [{a}, {b}]"),
        }
    }
}

impl std::error::Error for QuadError {}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
}

// 15-point Kronrod nodes/weights with embedded 7-point Gauss rule (QUADPACK).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kronrod += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    let value = kronrod * h;
    let err = ((kronrod - gauss) * h).abs();
    (value, err.max(f64::EPSILON * value.abs()))
}

/// Adaptive bisection with GK15 panels until the summed error estimate
/// drops below `abs_tol`.
pub fn adaptive(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<QuadResult, QuadError> {
    if !(b > a) {
        if b == a {
            return Ok(QuadResult {
                value: 0.0,
                abs_err: 0.0,
            });
        }
        return Err(QuadError::BadInterval { a, b });
    }
    // worklist of (a, b, value, err), refine the worst panel first
    let (v, e) = gk15(f, a, b);
    let mut panels = vec![(a, b, v, e)];
    for _ in 0..4000 {
        let total_err: f64 = panels.iter().map(|p| p.3).sum();
        if total_err <= abs_tol {
            break;
        }
        // split the panel with the largest error
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (pa, pb, _, pe) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // interval exhausted at machine precision
            let (v, _) = gk15(f, pa, pb);
            panels.push((pa, pb, v, pe * 0.5));
            break;
        }
        let (v1, e1) = gk15(f, pa, mid);
        let (v2, e2) = gk15(f, mid, pb);
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
    let value: f64 = panels.iter().map(|p| p.2).sum();
    let abs_err: f64 = panels.iter().map(|p| p.3).sum();
    if abs_err > abs_tol * 50.0 {
        return Err(QuadError::NonConvergence {
            achieved: abs_err,
            requested: abs_tol,
        });
    }
    Ok(QuadResult { value, abs_err })
}

/// Which oscillator multiplies the envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oscillator {
    /// cos(x rho)
    Cos(f64),
    /// sin(x rho)
    Sin(f64),
    /// J0(x rho)
    BesselJ0(f64),
    /// J1(x rho)
    BesselJ1(f64),
}

impl Oscillator {
    fn frequency(&self) -> f64 {
        match *self {
            Self::Cos(x) | Self::Sin(x) | Self::BesselJ0(x) | Self::BesselJ1(x) => x.abs(),
        }
    }

    fn eval(&self, rho: f64) -> f64 {
        match *self {
            Self::Cos(x) => (x * rho).cos(),
            Self::Sin(x) => (x * rho).sin(),
            Self::BesselJ0(x) => bessel::j0(x * rho),
            Self::BesselJ1(x) => bessel::j1(x * rho),
        }
    }

    /// k-th positive zero of the oscillator in rho (k = 1, 2, ...).
    fn zero(&self, k: usize) -> f64 {
        match *self {
            Self::Cos(x) => (k as f64 - 0.5) * PI / x.abs(),
            Self::Sin(x) => k as f64 * PI / x.abs(),
            Self::BesselJ0(x) => bessel::j0_zero(k) / x.abs(),
            // J1 zeros interlace J0 zeros; the offset approximation is enough for panels
            Self::BesselJ1(x) => (k as f64 + 0.25) * PI / x.abs(),
        }
    }
}

/// Integrate `envelope(rho) * osc(rho)` over `[0, rho_max]`, splitting at the
/// oscillator zeros. `envelope` should decay to below `tail_floor` by `rho_max`.
pub fn oscillatory(
    envelope: &mut impl FnMut(f64) -> f64,
    osc: Oscillator,
    rho_max: f64,
    abs_tol: f64,
) -> Result<QuadResult, QuadError> {
    let x = osc.frequency();
    // fewer than ~2 half-periods on the range: straight adaptive quadrature
    if x * rho_max < 2.0 * PI {
        let mut f = |rho: f64| envelope(rho) * osc.eval(rho);
        return adaptive(&mut f, 0.0, rho_max, abs_tol);
    }

    let est_panels = (x * rho_max / PI).ceil() as usize + 2;
    let panel_tol = (abs_tol / est_panels as f64).max(1e-16);

    let mut value = 0.0;
    let mut abs_err = 0.0;
    let mut partial_sums: Vec<f64> = Vec::new();
    let mut a = 0.0f64;
    let mut k = 1usize;
    let mut last_mag;
    loop {
        let mut b = osc.zero(k);
        while b <= a {
            k += 1;
            b = osc.zero(k);
        }
        let b = b.min(rho_max);
        let mut f = |rho: f64| envelope(rho) * osc.eval(rho);
        let r = adaptive(&mut f, a, b, panel_tol)?;
        value += r.value;
        abs_err += r.abs_err;
        partial_sums.push(value);
        last_mag = r.value.abs();
        if b >= rho_max {
            break;
        }
        a = b;
        k += 1;
        // envelope dead: residual tail is below the floor by construction
        if envelope(b).abs() < 1e-300 {
            break;
        }
    }

    // Euler transform of the trailing alternating partial sums; the distance
    // between the accelerated limit and the raw sum bounds the alternating tail.
    if partial_sums.len() >= 8 {
        let tail = &partial_sums[partial_sums.len() - 8..];
        let mut rows: Vec<Vec<f64>> = vec![tail.to_vec()];
        for _ in 0..4 {
            let prev = rows.last().unwrap();
            let next: Vec<f64> = prev.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            rows.push(next);
        }
        let accel = *rows.last().unwrap().last().unwrap();
        abs_err += (accel - value).abs().min(last_mag);
    }

    Ok(QuadResult { value, abs_err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn adaptive_polynomial_exact() {
        let mut f = |x: f64| 3.0 * x * x;
        let r = adaptive(&mut f, 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(r.value, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_endpoint_kink() {
        // integrand with unbounded derivative at 0, as for exp(-rho^{2a}) with a < 1/2
        let mut f = |x: f64| (-x.powf(0.8)).exp();
        let r = adaptive(&mut f, 0.0, 50.0, 1e-10).unwrap();
        // Gamma(1 + 1/0.8) = Gamma(2.25)
        assert_relative_eq!(r.value, 1.1330030963128478, epsilon = 1e-9);
    }

    #[test]
    fn cosine_transform_gaussian() {
        // int_0^inf cos(x rho) e^{-rho^2} d rho = sqrt(pi)/2 e^{-x^2/4}
        for &x in &[0.0, 1.0, 10.0, 55.5] {
            let mut env = |rho: f64| (-rho * rho).exp();
            let r = oscillatory(&mut env, Oscillator::Cos(x), 9.0, 1e-12).unwrap();
            let want = 0.5 * PI.sqrt() * (-x * x / 4.0).exp();
            assert!((r.value - want).abs() < 1e-11, "x={x}: {} vs {want}", r.value);
        }
    }

    #[test]
    fn sine_transform_exponential() {
        // int_0^inf sin(x rho) e^{-rho} d rho = x / (1 + x^2)
        for &x in &[0.5, 3.0, 40.0] {
            let mut env = |rho: f64| (-rho).exp();
            let r = oscillatory(&mut env, Oscillator::Sin(x), 45.0, 1e-11).unwrap();
            let want = x / (1.0 + x * x);
            assert!((r.value - want).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn hankel_gaussian() {
        // int_0^inf J0(x rho) e^{-rho^2} rho d rho = e^{-x^2/4}/2
        for &x in &[0.0, 2.0, 8.0, 20.0] {
            let mut env = |rho: f64| (-rho * rho).exp() * rho;
            let r = oscillatory(&mut env, Oscillator::BesselJ0(x), 9.5, 1e-11).unwrap();
            let want = 0.5 * (-x * x / 4.0).exp();
            assert!((r.value - want).abs() < 1e-10, "x={x}");
        }
    }
}
