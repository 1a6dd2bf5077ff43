//! Continuum evaluation of the semigroup kernel
//! `K(x) = (2 pi)^{-n/2} int e^{i x.xi} e^{-|xi|^{2 alpha}} d xi`,
//! its fractional derivatives `K^nu = (-Lap)^{nu/2} K` and gradient, plus the
//! pointwise decay, scaling and integrability checks they satisfy.
//!
//! Radial reduction: in 1D a cosine transform, in 2D a Hankel (J0) transform,
//! both handled by the oscillatory driver in [`crate::quad`].

use crate::fit;
use crate::quad::{self, Oscillator, QuadError, QuadResult};
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelError {
    BadAlpha { alpha: f64 },
    BadDimension { dim: usize },
    BadDerivativeOrder { nu: f64 },
    BadTime { t: f64 },
    BadRadius { x: f64 },
    RadiiSpanTooSmall,
    Quadrature(QuadError),
}

impl fmt::Display for KernelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadAlpha { alpha } => write!(f, "alpha must be positive, got {alpha}"),
            Self::BadDimension { dim } => write!(f, "kernel dimension must be 1 or 2, got {dim}"),
            Self::BadDerivativeOrder { nu } => {
                write!(f, "derivative order must lie in (0, 4], got {nu}")
            }
            Self::BadTime { t } => write!(f, "time must be positive, got {t}"),
            Self::BadRadius { x } => write!(f, "radius must be finite and >= 0, got {x}"),
            Self::RadiiSpanTooSmall => {
                write!(f, "decay check needs radii spanning at least one decade in [1, 200]")
            }
            Self::Quadrature(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for KernelError {}

impl From<QuadError> for KernelError {
    fn from(e: QuadError) -> Self {
        Self::Quadrature(e)
    }
}

/// A point query of the kernel or one of its derivatives.
#[derive(Debug, Clone, Copy)]
pub struct KernelQuery {
    /// Dissipation order, > 0.
    pub alpha: f64,
    /// Spatial dimension, 1 or 2.
    pub dim: usize,
    /// Derivative order; 0 queries K itself.
    pub nu: f64,
    /// Radius |x| (the kernel is radial).
    pub x: f64,
    /// Time; `None` queries the unit-time profile K rather than K_t.
    pub t: Option<f64>,
}

impl KernelQuery {
    pub fn profile(alpha: f64, dim: usize, x: f64) -> Self {
        Self {
            alpha,
            dim,
            nu: 0.0,
            x,
            t: None,
        }
    }

    fn validate(&self) -> Result<(), KernelError> {
        if !(self.alpha > 0.0) {
            return Err(KernelError::BadAlpha { alpha: self.alpha });
        }
        if self.dim == 0 || self.dim > 2 {
            return Err(KernelError::BadDimension { dim: self.dim });
        }
        if !(self.x >= 0.0) || !self.x.is_finite() {
            return Err(KernelError::BadRadius { x: self.x });
        }
        if let Some(t) = self.t {
            if !(t > 0.0) {
                return Err(KernelError::BadTime { t });
            }
        }
        Ok(())
    }
}

/// Truncation point where `rho^nu e^{-rho^{2 alpha}}` falls below ~1e-18.
fn rho_cutoff(alpha: f64, nu: f64) -> f64 {
    let base: f64 = 42.0 + 3.0 * nu;
    base.powf(1.0 / (2.0 * alpha)).max(4.0)
}

fn radial_transform(
    alpha: f64,
    dim: usize,
    weight_pow: f64,
    x: f64,
    tol: f64,
) -> Result<QuadResult, KernelError> {
    let rho_max = rho_cutoff(alpha, weight_pow + (dim - 1) as f64);
    match dim {
        1 => {
            // sqrt(2/pi) int_0^inf rho^w cos(x rho) e^{-rho^{2a}} d rho
            let mut env = move |rho: f64| {
                let w = if weight_pow == 0.0 { 1.0 } else { rho.powf(weight_pow) };
                w * (-rho.powf(2.0 * alpha)).exp()
            };
            let r = quad::oscillatory(&mut env, Oscillator::Cos(x), rho_max, tol)?;
            let c = (2.0 / PI).sqrt();
            Ok(QuadResult {
                value: c * r.value,
                abs_err: c * r.abs_err,
            })
        }
        2 => {
            // int_0^inf rho^{w+1} J0(x rho) e^{-rho^{2a}} d rho
            let mut env = move |rho: f64| rho.powf(weight_pow + 1.0) * (-rho.powf(2.0 * alpha)).exp();
            let r = quad::oscillatory(&mut env, Oscillator::BesselJ0(x), rho_max, tol)?;
            Ok(r)
        }
        _ => Err(KernelError::BadDimension { dim }),
    }
}

fn scale_query(q: &KernelQuery) -> (f64, f64) {
    // K^nu_t(x) = t^{-(n + nu)/(2 alpha)} K^nu(x t^{-1/(2 alpha)})
    match q.t {
        None => (1.0, q.x),
        Some(t) => {
            let lam = t.powf(-1.0 / (2.0 * q.alpha));
            let prefactor = t.powf(-(q.dim as f64 + q.nu) / (2.0 * q.alpha));
            (prefactor, q.x * lam)
        }
    }
}

/// Kernel value `K(x)` (or `K_t(x)` when the query carries a time).
pub fn kernel_value(q: &KernelQuery) -> Result<QuadResult, KernelError> {
    q.validate()?;
    let (pre, x) = scale_query(q);
    let r = radial_transform(q.alpha, q.dim, 0.0, x, 1e-11)?;
    Ok(QuadResult {
        value: pre * r.value,
        abs_err: pre * r.abs_err,
    })
}

/// Derivative kernel `K^nu(x) = (-Lap)^{nu/2} K(x)`, `nu in (0, 4]`.
pub fn kernel_derivative_value(q: &KernelQuery) -> Result<QuadResult, KernelError> {
    q.validate()?;
    if !(q.nu > 0.0 && q.nu <= 4.0) {
        return Err(KernelError::BadDerivativeOrder { nu: q.nu });
    }
    let (pre, x) = scale_query(q);
    let r = radial_transform(q.alpha, q.dim, q.nu, x, 1e-11)?;
    Ok(QuadResult {
        value: pre * r.value,
        abs_err: pre * r.abs_err,
    })
}

/// Gradient magnitude `|grad K|(x)` via the `i xi`-weighted integrand.
pub fn kernel_gradient_value(q: &KernelQuery) -> Result<QuadResult, KernelError> {
    q.validate()?;
    let (pre_base, x) = scale_query(q);
    // gradient adds one power of the scaling factor
    let pre = match q.t {
        None => pre_base,
        Some(t) => pre_base * t.powf(-1.0 / (2.0 * q.alpha)),
    };
    let alpha = q.alpha;
    let rho_max = rho_cutoff(alpha, 1.0 + (q.dim - 1) as f64);
    let r = match q.dim {
        1 => {
            // K'(x) = -sqrt(2/pi) int rho sin(x rho) e^{-rho^{2a}} d rho
            let mut env = move |rho: f64| rho * (-rho.powf(2.0 * alpha)).exp();
            let r = quad::oscillatory(&mut env, Oscillator::Sin(x), rho_max, 1e-11)?;
            QuadResult {
                value: (2.0 / PI).sqrt() * r.value,
                abs_err: (2.0 / PI).sqrt() * r.abs_err,
            }
        }
        2 => {
            // d/dr K(r) = -int rho^2 J1(r rho) e^{-rho^{2a}} d rho
            let mut env = move |rho: f64| rho * rho * (-rho.powf(2.0 * alpha)).exp();
            quad::oscillatory(&mut env, Oscillator::BesselJ1(x), rho_max, 1e-11)?
        }
        _ => return Err(KernelError::BadDimension { dim: q.dim }),
    };
    Ok(QuadResult {
        value: (pre * r.value).abs(),
        abs_err: pre.abs() * r.abs_err,
    })
}

/// Report of the pointwise decay check over a radius sweep.
#[derive(Debug, Clone)]
pub struct DecayReport {
    /// sup over radii of |K^nu(x)| (1+|x|)^{n + 2 alpha} (nu=0) or (1+|x|)^{n+nu} (nu>0)
    pub sup_envelope: f64,
    /// OLS slope of log|K^nu| vs log|x| over the largest decade of the sweep
    pub fitted_slope: f64,
    /// decay exponent the pointwise estimate guarantees (envelope direction)
    pub envelope_exponent: f64,
    pub values: Vec<(f64, f64)>,
}

/// Evaluate the decay envelope and log-log slope over `radii`.
pub fn kernel_decay_check(
    alpha: f64,
    dim: usize,
    nu: f64,
    radii: &[f64],
) -> Result<DecayReport, KernelError> {
    let lo = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().cloned().fold(0.0f64, f64::max);
    if !(lo >= 1.0) || !(hi <= 200.0) || hi / lo < 10.0 {
        return Err(KernelError::RadiiSpanTooSmall);
    }
    let envelope_exponent = if nu == 0.0 {
        dim as f64 + 2.0 * alpha
    } else {
        dim as f64 + nu
    };
    let mut values = Vec::with_capacity(radii.len());
    let mut sup_envelope = 0.0f64;
    for &x in radii {
        let q = KernelQuery {
            alpha,
            dim,
            nu,
            x,
            t: None,
        };
        let v = if nu == 0.0 {
            kernel_value(&q)?.value
        } else {
            kernel_derivative_value(&q)?.value
        };
        sup_envelope = sup_envelope.max(v.abs() * (1.0 + x).powf(envelope_exponent));
        values.push((x, v));
    }
    // slope over the largest decade present
    let decade_lo = hi / 10.0;
    let xs: Vec<f64> = values.iter().filter(|(x, _)| *x >= decade_lo).map(|p| p.0).collect();
    let ys: Vec<f64> = values.iter().filter(|(x, _)| *x >= decade_lo).map(|p| p.1).collect();
    let (fitted_slope, _) = fit::log_log_slope(&xs, &ys, 0.0);
    Ok(DecayReport {
        sup_envelope,
        fitted_slope,
        envelope_exponent,
        values,
    })
}

/// Residual of the self-similar scaling law
/// `K_t(x) = t^{-n/(2 alpha)} K(x t^{-1/(2 alpha)})`, both sides by independent
/// quadratures.
pub fn kernel_scaling_check(alpha: f64, dim: usize, t: f64, x: f64) -> Result<f64, KernelError> {
    if !(t > 0.0) {
        return Err(KernelError::BadTime { t });
    }
    // left side: integrate against e^{-t rho^{2a}} directly
    let rho_max = rho_cutoff(alpha, (dim - 1) as f64) / t.powf(1.0 / (2.0 * alpha)).min(1.0);
    let lhs = match dim {
        1 => {
            let mut env = move |rho: f64| (-t * rho.powf(2.0 * alpha)).exp();
            let r = quad::oscillatory(&mut env, Oscillator::Cos(x), rho_max, 1e-11)?;
            (2.0 / PI).sqrt() * r.value
        }
        2 => {
            let mut env = move |rho: f64| rho * (-t * rho.powf(2.0 * alpha)).exp();
            quad::oscillatory(&mut env, Oscillator::BesselJ0(x), rho_max, 1e-11)?.value
        }
        _ => return Err(KernelError::BadDimension { dim }),
    };
    // right side through the unit-time profile
    let lam = t.powf(-1.0 / (2.0 * alpha));
    let rhs = t.powf(-(dim as f64) / (2.0 * alpha))
        * kernel_value(&KernelQuery::profile(alpha, dim, x * lam))?.value;
    Ok((lhs - rhs).abs())
}

/// Radial quadrature of `int |K^nu|^p dx` over the plane/line, with a power-law
/// tail correction beyond the truncation radius. `p = inf` returns the sup.
pub fn kernel_lp_norm(alpha: f64, dim: usize, nu: f64, p: f64) -> Result<f64, KernelError> {
    if !(p >= 1.0) {
        return Err(KernelError::Quadrature(QuadError::BadInterval { a: p, b: p }));
    }
    let point = |x: f64| -> Result<f64, KernelError> {
        let q = KernelQuery {
            alpha,
            dim,
            nu,
            x,
            t: None,
        };
        Ok(if nu == 0.0 {
            kernel_value(&q)?.value
        } else {
            kernel_derivative_value(&q)?.value
        })
    };
    if p.is_infinite() {
        let mut sup: f64 = 0.0;
        let mut x = 0.0;
        while x <= 20.0 {
            sup = sup.max(point(x)?.abs());
            x += 0.25;
        }
        return Ok(sup);
    }
    let x_max = 40.0;
    let mut err: Option<KernelError> = None;
    let mut f = |x: f64| match point(x) {
        Ok(v) => {
            let w = if dim == 2 { 2.0 * PI * x } else { 2.0 };
            w * v.abs().powf(p)
        }
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    };
    let body = quad::adaptive(&mut f, 0.0, x_max, 1e-9)?;
    if let Some(e) = err {
        return Err(e);
    }
    // decay exponent of |K^nu|: n + 2 alpha for nu = 0, at least n + nu otherwise
    let beta = if nu == 0.0 {
        dim as f64 + 2.0 * alpha
    } else {
        dim as f64 + nu
    };
    let edge = point(x_max)?.abs().powf(p);
    let tail = match dim {
        1 => 2.0 * edge * x_max / (beta * p - 1.0),
        _ => 2.0 * PI * edge * x_max * x_max / (beta * p - 2.0),
    };
    Ok((body.value + tail.max(0.0)).powf(1.0 / p))
}

/// Signed integral `int K_t dx`; equals `(2 pi)^{n/2}` for every `t` and `alpha`.
pub fn kernel_integral(alpha: f64, dim: usize, t: f64) -> Result<f64, KernelError> {
    let x_max = 60.0;
    let mut err: Option<KernelError> = None;
    let mut f = |x: f64| {
        let q = KernelQuery {
            alpha,
            dim,
            nu: 0.0,
            x,
            t: Some(t),
        };
        match kernel_value(&q) {
            Ok(r) => {
                let w = if dim == 2 { 2.0 * PI * x } else { 2.0 };
                w * r.value
            }
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        }
    };
    let body = quad::adaptive(&mut f, 0.0, x_max, 1e-8)?;
    if let Some(e) = err {
        return Err(e);
    }
    // signed power-law tail: K_t ~ c x^{-n-2a}; estimate c from the edge value
    let edge = kernel_value(&KernelQuery {
        alpha,
        dim,
        nu: 0.0,
        x: x_max,
        t: Some(t),
    })?
    .value;
    let beta = dim as f64 + 2.0 * alpha;
    let tail = match dim {
        1 => 2.0 * edge * x_max / (beta - 1.0),
        _ => 2.0 * PI * edge * x_max * x_max / (beta - 2.0),
    };
    Ok(body.value + tail)
}
