//! Thin wrapper over `rustfft` with per-thread plan caches.
//!
//! Coefficients follow the Fourier-series normalization: `coeffs = fft(values) / N^n`,
//! so `coeffs[0]` is the mean of the field and the unnormalized inverse transform
//! reconstructs the samples exactly.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<PlanCache> = RefCell::new(PlanCache::default());
}

struct PlanCache {
    planner: FftPlanner<f64>,
    forward: HashMap<usize, Arc<dyn rustfft::Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn rustfft::Fft<f64>>>,
}

impl Default for PlanCache {
    fn default() -> Self {
        Self {
            planner: FftPlanner::new(),
            forward: HashMap::new(),
            inverse: HashMap::new(),
        }
    }
}

fn with_plan(n: usize, inverse: bool, buf: &mut [Complex64]) {
    PLANS.with(|cell| {
        let plan = {
            let mut cache = cell.borrow_mut();
            let PlanCache {
                planner,
                forward,
                inverse: inverse_plans,
            } = &mut *cache;
            let map = if inverse { inverse_plans } else { forward };
            map.entry(n)
                .or_insert_with(|| {
                    if inverse {
                        planner.plan_fft_inverse(n)
                    } else {
                        planner.plan_fft_forward(n)
                    }
                })
                .clone()
        };
        plan.process(buf);
    });
}

/// In-place forward DFT along a flat buffer of length `n` (1D) or `n*n` (2D row-major).
pub fn forward(buf: &mut [Complex64], n: usize, dim: usize) {
    transform(buf, n, dim, false);
}

/// In-place inverse DFT (unnormalized: `inverse(forward(x)) = N^dim * x`).
pub fn inverse(buf: &mut [Complex64], n: usize, dim: usize) {
    transform(buf, n, dim, true);
}

fn transform(buf: &mut [Complex64], n: usize, dim: usize, inv: bool) {
    match dim {
        1 => {
            assert_eq!(buf.len(), n);
            with_plan(n, inv, buf);
        }
        2 => {
            assert_eq!(buf.len(), n * n);
            // rows (x varies fastest)
            for row in buf.chunks_exact_mut(n) {
                with_plan(n, inv, row);
            }
            // columns via transpose-transform-transpose
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = buf[i * n + j];
                }
                with_plan(n, inv, &mut col);
                for i in 0..n {
                    buf[i * n + j] = col[i];
                }
            }
        }
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// values -> normalized coefficients (divide by N^dim).
pub fn values_to_coeffs(values: &[f64], n: usize, dim: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward(&mut buf, n, dim);
    let scale = 1.0 / (n.pow(dim as u32) as f64);
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// normalized coefficients -> real sample values (imaginary part discarded).
pub fn coeffs_to_values(coeffs: &[Complex64], n: usize, dim: usize) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    inverse(&mut buf, n, dim);
    buf.iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_1d() {
        let n = 64;
        let vals: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() + 0.2).collect();
        let coeffs = values_to_coeffs(&vals, n, 1);
        let back = coeffs_to_values(&coeffs, n, 1);
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn round_trip_2d() {
        let n = 16;
        let vals: Vec<f64> = (0..n * n).map(|i| ((i * 7 % 13) as f64).cos()).collect();
        let coeffs = values_to_coeffs(&vals, n, 2);
        let back = coeffs_to_values(&coeffs, n, 2);
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_coefficient_is_mean() {
        let n = 32;
        let vals: Vec<f64> = (0..n).map(|i| if i < 16 { 1.0 } else { 3.0 }).collect();
        let coeffs = values_to_coeffs(&vals, n, 1);
        assert!((coeffs[0].re - 2.0).abs() < 1e-14);
        assert!(coeffs[0].im.abs() < 1e-14);
    }
}
