//! Periodic grids, real spectral fields, Fourier multipliers and Lebesgue norms.
//!
//! A field lives on the box `[-L, L)^n` (n = 1 or 2) sampled at `N` points per axis.
//! The frequency lattice is `xi_k = pi k / L` for `k in [-N/2, N/2)`. The Fourier
//! convention is fixed so the dissipative semigroup is exactly the multiplier
//! `exp(-t |xi|^{2 alpha})` on that lattice.

use crate::fft;
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralError {
    InvalidResolution { n_points: usize },
    UnsupportedDimension { dim: usize },
    InvalidHalfLength { half_length: f64 },
    NanSymbol { index: usize },
    SymbolUndefinedAtZero { order: f64 },
    InvalidExponent { p: f64 },
    NonFiniteField,
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidResolution { n_points } => {
                write!(f, "grid resolution must be even and >= 8, got {n_points}")
            }
            Self::UnsupportedDimension { dim } => {
                write!(f, "unsupported dimension {dim} (only 1 and 2)")
            }
            Self::InvalidHalfLength { half_length } => {
                write!(f, "box half-length must be positive, got {half_length}")
            }
            Self::NanSymbol { index } => {
                write!(f, "multiplier symbol is non-finite at lattice index {index}")
            }
            Self::SymbolUndefinedAtZero { order } => write!(
                f,
                "homogeneous symbol of order {order} <= 0 needs an explicit value at xi = 0"
            ),
            Self::InvalidExponent { p } => write!(f, "Lebesgue exponent must be >= 1, got {p}"),
            Self::NonFiniteField => write!(f, "field contains non-finite samples"),
        }
    }
}

impl std::error::Error for SpectralError {}

/// Uniform periodic grid on `[-L, L)^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    n_points: usize,
    half_length: f64,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Total number of samples, `N^n`.
    pub fn total_points(&self) -> usize {
        self.n_points.pow(self.dim as u32)
    }

    /// Volume of one grid cell, `(2L/N)^n`.
    pub fn cell_measure(&self) -> f64 {
        (2.0 * self.half_length / self.n_points as f64).powi(self.dim as i32)
    }

    /// Grid spacing along one axis.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n_points as f64
    }

    /// Physical coordinate of axis index `i`.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_length + self.spacing() * i as f64
    }

    /// Signed integer wavenumber for FFT index `i` (fftfreq convention).
    fn wave_index(&self, i: usize) -> i64 {
        let n = self.n_points as i64;
        let i = i as i64;
        if 2 * i < n {
            i
        } else {
            i - n
        }
    }

    /// Frequency component `xi = pi k / L` for FFT index `i` along one axis.
    pub fn freq_axis(&self, i: usize) -> f64 {
        std::f64::consts::PI * self.wave_index(i) as f64 / self.half_length
    }

    /// Frequency vector at flat index `idx`; `out` must have length `dim`.
    pub fn freq(&self, idx: usize, out: &mut [f64]) {
        match self.dim {
            1 => out[0] = self.freq_axis(idx),
            2 => {
                out[0] = self.freq_axis(idx % self.n_points);
                out[1] = self.freq_axis(idx / self.n_points);
            }
            _ => unreachable!(),
        }
    }

    /// Largest frequency magnitude representable on the lattice (per axis).
    pub fn max_freq(&self) -> f64 {
        std::f64::consts::PI * (self.n_points as f64 / 2.0) / self.half_length
    }

    /// Iterate `(flat_index, |xi|, xi_vec)` over the lattice.
    pub fn for_each_freq(&self, mut f: impl FnMut(usize, f64, &[f64])) {
        let mut xi = [0.0f64; 2];
        for idx in 0..self.total_points() {
            self.freq(idx, &mut xi[..self.dim]);
            let mag = match self.dim {
                1 => xi[0].abs(),
                _ => (xi[0] * xi[0] + xi[1] * xi[1]).sqrt(),
            };
            f(idx, mag, &xi[..self.dim]);
        }
    }
}

/// Build a periodic grid. `n` is the spatial dimension (1 or 2), `n_points` the
/// per-axis resolution (even, at least 8), `half_length` the box half-width.
pub fn make_grid(n: usize, n_points: usize, half_length: f64) -> Result<Grid, SpectralError> {
    if n == 0 || n > 2 {
        return Err(SpectralError::UnsupportedDimension { dim: n });
    }
    if n_points < 8 || n_points % 2 != 0 {
        return Err(SpectralError::InvalidResolution { n_points });
    }
    if !(half_length > 0.0) || !half_length.is_finite() {
        return Err(SpectralError::InvalidHalfLength { half_length });
    }
    Ok(Grid {
        dim: n,
        n_points,
        half_length,
    })
}

/// Real scalar field with cached Fourier coefficients.
///
/// Immutable after construction; operations return new fields.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Grid,
    values: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.total_points());
        let coeffs = fft::values_to_coeffs(&values, grid.n_points, grid.dim);
        Self {
            grid,
            values,
            coeffs,
        }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.total_points());
        let values = fft::coeffs_to_values(&coeffs, grid.n_points, grid.dim);
        Self {
            grid,
            values,
            coeffs,
        }
    }

    pub fn zero(grid: Grid) -> Self {
        let n = grid.total_points();
        Self {
            grid,
            values: vec![0.0; n],
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Pointwise linear combination `a*self + b*other` (same grid).
    pub fn axpy(&self, a: f64, other: &SpectralField, b: f64) -> SpectralField {
        assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        SpectralField::from_values(self.grid.clone(), values)
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        SpectralField::from_values(self.grid.clone(), self.values.iter().map(|v| a * v).collect())
    }

    /// Field with the mean (zero mode) removed.
    pub fn without_mean(&self) -> SpectralField {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] = Complex64::new(0.0, 0.0);
        SpectralField::from_coeffs(self.grid.clone(), coeffs)
    }

    /// Largest |value| on the outermost layer of cells relative to the global max.
    /// Used to diagnose whether the periodic truncation is clean.
    pub fn boundary_magnitude(&self) -> f64 {
        let n = self.grid.n_points;
        let peak = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        match self.grid.dim {
            1 => {
                worst = worst.max(self.values[0].abs()).max(self.values[n - 1].abs());
            }
            2 => {
                for i in 0..n {
                    worst = worst
                        .max(self.values[i].abs())
                        .max(self.values[(n - 1) * n + i].abs())
                        .max(self.values[i * n].abs())
                        .max(self.values[i * n + n - 1].abs());
                }
            }
            _ => unreachable!(),
        }
        worst / peak
    }
}

/// Descriptor of a Fourier-multiplier operator on the frequency lattice.
#[derive(Clone)]
pub enum Multiplier {
    /// `exp(-t |xi|^{2 alpha})`, the dissipative semigroup.
    Semigroup { t: f64, alpha: f64 },
    /// Riesz transform `partial_j (-Lap)^{-1/2}`, symbol `i xi_j / |xi|` (0 at the origin).
    Riesz { axis: usize },
    /// Directional derivative `a . grad`, symbol `i (a . xi)`.
    Gradient { a: Vec<f64> },
    /// Laplacian `Lap`, symbol `-|xi|^2`.
    Laplacian,
    /// Bilaplacian `Lap^2`, symbol `|xi|^4`.
    LaplacianSq,
    /// `|xi|^s`; homogeneous of order `s`. Zero at the origin for `s > 0`,
    /// identity for `s = 0`, mean-annihilating for `s < 0`.
    Power { s: f64 },
    /// Caller-supplied homogeneous symbol of order `d` with an explicit value at 0.
    Custom {
        order: f64,
        at_zero: Complex64,
        symbol: Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>,
    },
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Semigroup { t, alpha } => write!(f, "Semigroup(t={t}, alpha={alpha})"),
            Self::Riesz { axis } => write!(f, "Riesz({axis})"),
            Self::Gradient { a } => write!(f, "Gradient({a:?})"),
            Self::Laplacian => write!(f, "Laplacian"),
            Self::LaplacianSq => write!(f, "LaplacianSq"),
            Self::Power { s } => write!(f, "Power({s})"),
            Self::Custom { order, .. } => write!(f, "Custom(order={order})"),
        }
    }
}

impl Multiplier {
    /// Homogeneity order of the symbol where meaningful.
    pub fn order(&self) -> Option<f64> {
        match self {
            Self::Semigroup { .. } => None,
            Self::Riesz { .. } => Some(0.0),
            Self::Gradient { .. } => Some(1.0),
            Self::Laplacian => Some(2.0),
            Self::LaplacianSq => Some(4.0),
            Self::Power { s } => Some(*s),
            Self::Custom { order, .. } => Some(*order),
        }
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        let mag2: f64 = xi.iter().map(|x| x * x).sum();
        match self {
            Self::Semigroup { t, alpha } => {
                Complex64::new((-t * mag2.powf(*alpha)).exp(), 0.0)
            }
            Self::Riesz { axis } => {
                if mag2 == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, xi[*axis] / mag2.sqrt())
                }
            }
            Self::Gradient { a } => {
                let dot: f64 = a.iter().zip(xi).map(|(ai, x)| ai * x).sum();
                Complex64::new(0.0, dot)
            }
            Self::Laplacian => Complex64::new(-mag2, 0.0),
            Self::LaplacianSq => Complex64::new(mag2 * mag2, 0.0),
            Self::Power { s } => {
                if mag2 == 0.0 {
                    if *s == 0.0 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                } else {
                    Complex64::new(mag2.powf(s / 2.0), 0.0)
                }
            }
            Self::Custom {
                at_zero, symbol, ..
            } => {
                if mag2 == 0.0 {
                    *at_zero
                } else {
                    symbol(xi)
                }
            }
        }
    }

    /// Build a custom homogeneous multiplier. Orders `d <= 0` must supply the
    /// value at the origin explicitly (the `|xi|^d` ambiguity is not removable).
    pub fn custom(
        order: f64,
        at_zero: Option<Complex64>,
        symbol: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self, SpectralError> {
        let at_zero = match at_zero {
            Some(z) => z,
            None if order > 0.0 => Complex64::new(0.0, 0.0),
            None => return Err(SpectralError::SymbolUndefinedAtZero { order }),
        };
        Ok(Self::Custom {
            order,
            at_zero,
            symbol: Arc::new(symbol),
        })
    }
}

/// Apply a Fourier multiplier to a field. The result takes the real part, which
/// is exact whenever the symbol is conjugate-symmetric (all built-ins are).
pub fn apply_multiplier(f: &SpectralField, m: &Multiplier) -> Result<SpectralField, SpectralError> {
    if !f.is_finite() {
        return Err(SpectralError::NonFiniteField);
    }
    let grid = f.grid().clone();
    let mut coeffs = f.coeffs().to_vec();
    let mut bad = None;
    grid.for_each_freq(|idx, _mag, xi| {
        let s = m.eval(xi);
        if !s.re.is_finite() || !s.im.is_finite() {
            bad.get_or_insert(idx);
        }
        coeffs[idx] *= s;
    });
    if let Some(index) = bad {
        return Err(SpectralError::NanSymbol { index });
    }
    Ok(SpectralField::from_coeffs(grid, coeffs))
}

/// Fractional Laplacian `(-Lap)^s`, the multiplier `|xi|^{2s}`.
pub fn fractional_laplacian(f: &SpectralField, s: f64) -> Result<SpectralField, SpectralError> {
    let n = f.grid().dim() as f64;
    if s <= -n / 2.0 {
        return Err(SpectralError::SymbolUndefinedAtZero { order: 2.0 * s });
    }
    apply_multiplier(f, &Multiplier::Power { s: 2.0 * s })
}

/// Rectangle-rule Lebesgue norm; `p = f64::INFINITY` gives the grid max.
pub fn lebesgue_norm(f: &SpectralField, p: f64) -> Result<f64, SpectralError> {
    if !f.is_finite() {
        return Err(SpectralError::NonFiniteField);
    }
    if p.is_infinite() {
        return Ok(f.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    if !(p >= 1.0) {
        return Err(SpectralError::InvalidExponent { p });
    }
    let sum: f64 = f.values().iter().map(|v| v.abs().powf(p)).sum();
    Ok((f.grid().cell_measure() * sum).powf(1.0 / p))
}

/// `||f||_2^2` evaluated on the coefficient side (Parseval).
pub fn energy_spectral(f: &SpectralField) -> f64 {
    let vol = (2.0 * f.grid().half_length()).powi(f.grid().dim() as i32);
    vol * f.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()
}

/// Smooth `C^inf` step from 0 to 1 on `[0, 1]`.
///
/// `Glue::Reciprocal` uses the classical `exp(-1/x)` partition, `Glue::ReciprocalSq`
/// the steeper `exp(-1/x^2)` one; both satisfy the same support constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Glue {
    Reciprocal,
    ReciprocalSq,
}

pub fn smooth_step(u: f64, glue: Glue) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let g = |x: f64| match glue {
        Glue::Reciprocal => (-1.0 / x).exp(),
        Glue::ReciprocalSq => (-1.0 / (x * x)).exp(),
    };
    let a = g(u);
    let b = g(1.0 - u);
    a / (a + b)
}

/// Ready-made field families used across the estimate checks.
pub mod synth {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// `A exp(-|x|^2 / (4 s))`.
    pub fn gaussian(grid: &Grid, s: f64, amplitude: f64) -> SpectralField {
        let n = grid.n_points();
        let mut values = Vec::with_capacity(grid.total_points());
        match grid.dim() {
            1 => {
                for i in 0..n {
                    let x = grid.coord(i);
                    values.push(amplitude * (-x * x / (4.0 * s)).exp());
                }
            }
            2 => {
                for iy in 0..n {
                    let y = grid.coord(iy);
                    for ix in 0..n {
                        let x = grid.coord(ix);
                        values.push(amplitude * (-(x * x + y * y) / (4.0 * s)).exp());
                    }
                }
            }
            _ => unreachable!(),
        }
        SpectralField::from_values(grid.clone(), values)
    }

    /// `A cos(k x) exp(-|x|^2 / (2 w^2))` (1D).
    pub fn modulated_gaussian(grid: &Grid, k: f64, w: f64, amplitude: f64) -> SpectralField {
        assert_eq!(grid.dim(), 1);
        let values = (0..grid.n_points())
            .map(|i| {
                let x = grid.coord(i);
                amplitude * (k * x).cos() * (-x * x / (2.0 * w * w)).exp()
            })
            .collect();
        SpectralField::from_values(grid.clone(), values)
    }

    /// Mollified homogeneous profile `A (|x|^2 + eps^2)^{-gamma/2}`.
    pub fn power_profile(grid: &Grid, gamma: f64, eps: f64, amplitude: f64) -> SpectralField {
        let n = grid.n_points();
        let mut values = Vec::with_capacity(grid.total_points());
        match grid.dim() {
            1 => {
                for i in 0..n {
                    let x = grid.coord(i);
                    values.push(amplitude * (x * x + eps * eps).powf(-gamma / 2.0));
                }
            }
            2 => {
                for iy in 0..n {
                    let y = grid.coord(iy);
                    for ix in 0..n {
                        let x = grid.coord(ix);
                        values.push(amplitude * (x * x + y * y + eps * eps).powf(-gamma / 2.0));
                    }
                }
            }
            _ => unreachable!(),
        }
        SpectralField::from_values(grid.clone(), values)
    }

    /// Band-limited spectral power law: coefficients `|xi|^{-gamma}` inside a smooth
    /// annular window rising on `[lo, 2 lo]` and falling on `[hi/2, hi]`, zero mean,
    /// all phases aligned (field peaks at the origin).
    pub fn spectral_powerlaw(grid: &Grid, gamma: f64, lo: f64, hi: f64) -> SpectralField {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.total_points()];
        grid.for_each_freq(|idx, mag, _| {
            if mag > 0.0 {
                let up = smooth_step((mag - lo) / lo, Glue::Reciprocal);
                let down = 1.0 - smooth_step((mag - hi / 2.0) / (hi / 2.0), Glue::Reciprocal);
                let w = up * down;
                if w > 0.0 {
                    coeffs[idx] = Complex64::new(mag.powf(-gamma) * w, 0.0);
                }
            }
        });
        SpectralField::from_coeffs(grid.clone(), coeffs)
    }

    /// Random real field with spectrum confined to dyadic bands `[2^{j_lo-1}, 2^{j_hi+1}]`,
    /// deterministic in `seed`.
    pub fn random_band(grid: &Grid, j_lo: i32, j_hi: i32, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = 2f64.powi(j_lo - 1);
        let hi = 2f64.powi(j_hi + 1);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.total_points()];
        grid.for_each_freq(|idx, mag, _| {
            if mag >= lo && mag <= hi {
                let amp: f64 = rng.gen_range(0.1..1.0);
                let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                coeffs[idx] = Complex64::from_polar(amp, phase);
            }
        });
        // enforce conjugate symmetry by building from the real part of the samples
        let field = SpectralField::from_coeffs(grid.clone(), coeffs);
        SpectralField::from_values(grid.clone(), field.values().to_vec())
    }

    pub fn constant(grid: &Grid, c: f64) -> SpectralField {
        SpectralField::from_values(grid.clone(), vec![c; grid.total_points()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn make_grid_contract() {
        let g = make_grid(1, 8, std::f64::consts::PI).unwrap();
        let freqs: Vec<f64> = (0..8).map(|i| g.freq_axis(i)).collect();
        // L = pi makes the lattice the integers -4..3 (in fftfreq order)
        assert_eq!(freqs, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);

        let g2 = make_grid(2, 256, 20.0).unwrap();
        assert_relative_eq!(g2.cell_measure(), (40.0 / 256.0) * (40.0 / 256.0));

        assert!(matches!(
            make_grid(3, 64, 10.0),
            Err(SpectralError::UnsupportedDimension { dim: 3 })
        ));
        assert!(matches!(
            make_grid(1, 6, 1.0),
            Err(SpectralError::InvalidResolution { .. })
        ));
        assert!(matches!(
            make_grid(1, 9, 1.0),
            Err(SpectralError::InvalidResolution { .. })
        ));
    }

    #[test]
    fn multiplier_eigenfunctions() {
        let g = make_grid(1, 64, std::f64::consts::PI).unwrap();
        let sin_x: Vec<f64> = (0..64).map(|i| g.coord(i).sin()).collect();
        let f = SpectralField::from_values(g.clone(), sin_x);

        // identity symbol
        let id = apply_multiplier(&f, &Multiplier::Power { s: 0.0 }).unwrap();
        for (a, b) in f.values().iter().zip(id.values()) {
            assert!((a - b).abs() < 1e-13);
        }

        // |xi|^2 on sin(x): eigenvalue 1
        let lap = fractional_laplacian(&f, 1.0).unwrap();
        for (a, b) in f.values().iter().zip(lap.values()) {
            assert!((a - b).abs() < 1e-12);
        }

        // cos(2x) under |xi|^{2 alpha}, alpha = 0.75: eigenvalue 2^{1.5}
        let cos_2x: Vec<f64> = (0..64).map(|i| (2.0 * g.coord(i)).cos()).collect();
        let f2 = SpectralField::from_values(g.clone(), cos_2x);
        let out = fractional_laplacian(&f2, 0.75).unwrap();
        let scale = 2f64.powf(1.5);
        for (a, b) in f2.values().iter().zip(out.values()) {
            assert!((scale * a - b).abs() < 1e-12);
        }

        // sin(3x) under (-Lap)^1: eigenvalue 9
        let sin_3x: Vec<f64> = (0..64).map(|i| (3.0 * g.coord(i)).sin()).collect();
        let f3 = SpectralField::from_values(g.clone(), sin_3x);
        let out = fractional_laplacian(&f3, 1.0).unwrap();
        for (a, b) in f3.values().iter().zip(out.values()) {
            assert!((9.0 * a - b).abs() < 1e-11);
        }

        // constant annihilated by any s > 0
        let c = synth::constant(&g, 3.0);
        let out = fractional_laplacian(&c, 0.5).unwrap();
        assert!(out.values().iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn lebesgue_norms() {
        // indicator-like field == 1 on [-1,1), L=1: ||.||_2 = sqrt(2)
        let g = make_grid(1, 64, 1.0).unwrap();
        let ones = synth::constant(&g, 1.0);
        assert_relative_eq!(
            lebesgue_norm(&ones, 2.0).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-14
        );
        assert_relative_eq!(lebesgue_norm(&ones, f64::INFINITY).unwrap(), 1.0);
        assert!(matches!(
            lebesgue_norm(&ones, 0.5),
            Err(SpectralError::InvalidExponent { .. })
        ));

        // Gaussian e^{-x^2/4} on L=40, N=1024: ||.||_1 = 2 sqrt(pi)
        let g = make_grid(1, 1024, 40.0).unwrap();
        let gauss = synth::gaussian(&g, 1.0, 1.0);
        assert_relative_eq!(
            lebesgue_norm(&gauss, 1.0).unwrap(),
            2.0 * std::f64::consts::PI.sqrt(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn parseval_and_round_trip() {
        let g = make_grid(1, 256, 10.0).unwrap();
        let f = synth::gaussian(&g, 0.7, 1.3);
        let direct = lebesgue_norm(&f, 2.0).unwrap().powi(2);
        assert_relative_eq!(energy_spectral(&f), direct, max_relative = 1e-10);

        let back = SpectralField::from_coeffs(g, f.coeffs().to_vec());
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn multiplier_linearity_and_composition() {
        let g = make_grid(1, 128, 8.0).unwrap();
        let f = synth::gaussian(&g, 0.5, 1.0);
        let h = synth::modulated_gaussian(&g, 3.0, 1.0, 0.7);
        let m = Multiplier::Semigroup { t: 0.3, alpha: 0.8 };

        let lhs = apply_multiplier(&f.axpy(2.0, &h, -0.5), &m).unwrap();
        let rhs = apply_multiplier(&f, &m)
            .unwrap()
            .axpy(2.0, &apply_multiplier(&h, &m).unwrap(), -0.5);
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            assert!((a - b).abs() < 1e-12);
        }

        // composition = product of symbols, exactly on the lattice
        let m1 = Multiplier::Power { s: 1.0 };
        let m2 = Multiplier::Semigroup { t: 0.1, alpha: 1.0 };
        let seq = apply_multiplier(&apply_multiplier(&f, &m1).unwrap(), &m2).unwrap();
        let prod = Multiplier::custom(1.0, None, move |xi: &[f64]| {
            let mag = xi[0].abs();
            Complex64::new(mag * (-0.1 * mag * mag).exp(), 0.0)
        })
        .unwrap();
        let joint = apply_multiplier(&f, &prod).unwrap();
        for (a, b) in seq.values().iter().zip(joint.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn negative_order_symbol_needs_zero_value() {
        assert!(Multiplier::custom(-0.5, None, |_| Complex64::new(1.0, 0.0)).is_err());
        assert!(Multiplier::custom(
            -0.5,
            Some(Complex64::new(0.0, 0.0)),
            |_| Complex64::new(1.0, 0.0)
        )
        .is_ok());
    }

    #[test]
    fn riesz_pair_is_divergence_free() {
        let g = make_grid(2, 32, 5.0).unwrap();
        let theta = synth::gaussian(&g, 0.4, 1.0);
        let u1 = apply_multiplier(&theta, &Multiplier::Riesz { axis: 1 })
            .unwrap()
            .scale(-1.0);
        let u2 = apply_multiplier(&theta, &Multiplier::Riesz { axis: 0 }).unwrap();
        let d1 = apply_multiplier(&u1, &Multiplier::Gradient { a: vec![1.0, 0.0] }).unwrap();
        let d2 = apply_multiplier(&u2, &Multiplier::Gradient { a: vec![0.0, 1.0] }).unwrap();
        let div = d1.axpy(1.0, &d2, 1.0);
        assert!(lebesgue_norm(&div, f64::INFINITY).unwrap() < 1e-12);
    }
}
