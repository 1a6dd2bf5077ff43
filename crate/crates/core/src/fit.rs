//! Least-squares line fits used by the exponent checks.

/// Ordinary least squares of `y = slope * x + intercept`; returns
/// `(slope, intercept, r_squared)`.
pub fn linear(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points to fit a line");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

/// Log-log slope fit with the outer `trim` fraction of points dropped on each
/// side (sweep endpoints carry discretization bias).
pub fn log_log_slope(xs: &[f64], ys: &[f64], trim: f64) -> (f64, f64) {
    let n = xs.len();
    let cut = ((n as f64) * trim).floor() as usize;
    let lo = cut;
    let hi = n - cut;
    let lx: Vec<f64> = xs[lo..hi].iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys[lo..hi].iter().map(|y| y.abs().max(1e-300).ln()).collect();
    let (slope, _, r2) = linear(&lx, &ly);
    (slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let (m, b, r2) = linear(&xs, &ys);
        assert!((m - 2.0).abs() < 1e-14);
        assert!((b - 1.0).abs() < 1e-14);
        assert!((r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn power_law_recovered() {
        let xs: Vec<f64> = (1..40).map(|i| 1.5f64.powi(i)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 7.0 * x.powf(-2.5)).collect();
        let (slope, r2) = log_log_slope(&xs, &ys, 0.1);
        assert!((slope + 2.5).abs() < 1e-12);
        assert!(r2 > 0.999999);
    }
}
