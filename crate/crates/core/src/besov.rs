//! Littlewood-Paley dyadic decomposition, homogeneous Besov norms, and the
//! semigroup characterization of the negative-index spaces.
//!
//! The dyadic family is built from a radial bump `psi_hat` equal to 1 on
//! `|xi| <= 1`, smooth on `1 < |xi| < 2` and 0 beyond, with band symbols
//! `phi_hat_j(xi) = psi_hat(2^{-j} xi) - psi_hat(2^{-j+1} xi)` supported in the
//! annuli `2^{j-1} <= |xi| <= 2^{j+1}`. On the periodic lattice the zero mode
//! falls outside every band; both norms here quotient it away, matching the
//! homogeneous (mod constants) setting.

use crate::semigroup::{apply_semigroup, SemigroupError};
use crate::spectral::{lebesgue_norm, smooth_step, Glue, Grid, SpectralError, SpectralField};
use num_complex::Complex64;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum BesovError {
    BandOverflow { j_max: i32, max_freq: f64 },
    RangeTooNarrow { j_min: i32, j_max: i32 },
    OutOfRangeBand { j: i32 },
    InsufficientCoverage { covered_fraction: f64 },
    NonNegativeIndex { s: f64 },
    TimeGridTooNarrow,
    ZeroField,
    Spectral(SpectralError),
    Semigroup(SemigroupError),
}

impl fmt::Display for BesovError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BandOverflow { j_max, max_freq } => write!(
                f,
                "band 2^{} exceeds the lattice frequency range (max |xi| = {max_freq:.3})",
                j_max + 1
            ),
            Self::RangeTooNarrow { j_min, j_max } => {
                write!(f, "need j_max - j_min >= 4, got [{j_min}, {j_max}]")
            }
            Self::OutOfRangeBand { j } => write!(f, "band index {j} outside the family range"),
            Self::InsufficientCoverage { covered_fraction } => write!(
                f,
                "family bands cover only {covered_fraction:.9} of the field energy"
            ),
            Self::NonNegativeIndex { s } => write!(
                f,
                "semigroup characterization requires s < 0, got s = {s}"
            ),
            Self::TimeGridTooNarrow => write!(f, "time grid must span at least three decades"),
            Self::ZeroField => write!(f, "norm ratio undefined for the zero field"),
            Self::Spectral(e) => write!(f, "{e}"),
            Self::Semigroup(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BesovError {}

impl From<SpectralError> for BesovError {
    fn from(e: SpectralError) -> Self {
        Self::Spectral(e)
    }
}

impl From<SemigroupError> for BesovError {
    fn from(e: SemigroupError) -> Self {
        Self::Semigroup(e)
    }
}

/// Littlewood-Paley band family on a fixed grid.
#[derive(Debug, Clone)]
pub struct LpFamily {
    grid: Grid,
    j_min: i32,
    j_max: i32,
    glue: Glue,
    /// per-band multiplier values on the lattice, one Vec per j
    band_symbols: Vec<Vec<f64>>,
}

/// `psi_hat` profile: 1 on |xi| <= 1, smooth step down on (1, 2), 0 beyond.
pub fn psi_hat(mag: f64, glue: Glue) -> f64 {
    1.0 - smooth_step(mag - 1.0, glue)
}

/// Band symbol `phi_hat(xi) = psi_hat(xi) - psi_hat(2 xi)`, supported on [1/2, 2].
pub fn phi_hat(mag: f64, glue: Glue) -> f64 {
    psi_hat(mag, glue) - psi_hat(2.0 * mag, glue)
}

impl LpFamily {
    pub fn j_range(&self) -> (i32, i32) {
        (self.j_min, self.j_max)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn glue(&self) -> Glue {
        self.glue
    }

    fn symbol(&self, j: i32) -> Result<&[f64], BesovError> {
        if j < self.j_min || j > self.j_max {
            return Err(BesovError::OutOfRangeBand { j });
        }
        Ok(&self.band_symbols[(j - self.j_min) as usize])
    }

    /// Fraction of the field energy (zero mode excluded) inside the covered annulus.
    pub fn coverage(&self, f: &SpectralField) -> f64 {
        let lo = 2f64.powi(self.j_min - 1);
        let hi = 2f64.powi(self.j_max + 1);
        let mut total = 0.0;
        let mut inside = 0.0;
        let coeffs = f.coeffs();
        self.grid.for_each_freq(|idx, mag, _| {
            if mag > 0.0 {
                let e = coeffs[idx].norm_sqr();
                total += e;
                if mag >= lo && mag <= hi {
                    inside += e;
                }
            }
        });
        if total == 0.0 {
            1.0
        } else {
            inside / total
        }
    }
}

/// Build the dyadic family for bands `j_min ..= j_max`.
pub fn build_lp_family(
    grid: &Grid,
    j_min: i32,
    j_max: i32,
    glue: Glue,
) -> Result<LpFamily, BesovError> {
    if j_max - j_min < 4 {
        return Err(BesovError::RangeTooNarrow { j_min, j_max });
    }
    let max_freq = grid.max_freq();
    if 2f64.powi(j_max + 1) > max_freq {
        return Err(BesovError::BandOverflow { j_max, max_freq });
    }
    let mut band_symbols = Vec::with_capacity((j_max - j_min + 1) as usize);
    for j in j_min..=j_max {
        let scale = 2f64.powi(-j);
        let mut sym = vec![0.0; grid.total_points()];
        grid.for_each_freq(|idx, mag, _| {
            sym[idx] = phi_hat(scale * mag, glue);
        });
        band_symbols.push(sym);
    }
    Ok(LpFamily {
        grid: grid.clone(),
        j_min,
        j_max,
        glue,
        band_symbols,
    })
}

/// `Delta_j f`: multiply the coefficients by the band symbol.
pub fn dyadic_block(
    f: &SpectralField,
    j: i32,
    family: &LpFamily,
) -> Result<SpectralField, BesovError> {
    let sym = family.symbol(j)?;
    let coeffs: Vec<Complex64> = f
        .coeffs()
        .iter()
        .zip(sym)
        .map(|(c, s)| c * s)
        .collect();
    Ok(SpectralField::from_coeffs(f.grid().clone(), coeffs))
}

/// Besov parameters (s, p, q); `alpha` only enters the semigroup path.
#[derive(Debug, Clone, Copy)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
}

/// Dyadic-side homogeneous Besov norm: `l^q` over j of `2^{js} ||Delta_j f||_p`.
pub fn besov_norm_dyadic(
    f: &SpectralField,
    params: &BesovParams,
    family: &LpFamily,
) -> Result<f64, BesovError> {
    let coverage = family.coverage(f);
    if coverage < 1.0 - 1e-8 {
        return Err(BesovError::InsufficientCoverage {
            covered_fraction: coverage,
        });
    }
    let mut terms = Vec::new();
    for j in family.j_min..=family.j_max {
        let block = dyadic_block(f, j, family)?;
        let np = lebesgue_norm(&block, params.p)?;
        terms.push(2f64.powf(j as f64 * params.s) * np);
    }
    if params.q.is_infinite() {
        Ok(terms.iter().fold(0.0f64, |m, v| m.max(*v)))
    } else {
        Ok(terms
            .iter()
            .map(|v| v.powf(params.q))
            .sum::<f64>()
            .powf(1.0 / params.q))
    }
}

/// Characterization-side norm for `s < 0`:
/// `sup_t t^{-s/(2 alpha)} ||S_alpha(t) f||_p` (q = inf) or the `dt/t` integral
/// by log-trapezoid (q < inf). Times are sampled logarithmically on
/// `[2^{-2 alpha (j_max + 2)}, 2^{-2 alpha (j_min - 2)}]`, 16 points per decade.
pub fn besov_norm_semigroup(
    f: &SpectralField,
    params: &BesovParams,
    family: &LpFamily,
) -> Result<f64, BesovError> {
    if params.s >= 0.0 {
        return Err(BesovError::NonNegativeIndex { s: params.s });
    }
    let t_lo = 2f64.powf(-2.0 * params.alpha * (family.j_max as f64 + 2.0));
    let t_hi = 2f64.powf(-2.0 * params.alpha * (family.j_min as f64 - 2.0));
    besov_norm_semigroup_on_grid(f, params, &log_grid(t_lo, t_hi, 16))
}

/// Same norm on an explicit time grid spanning at least three decades.
pub fn besov_norm_semigroup_on_grid(
    f: &SpectralField,
    params: &BesovParams,
    t_grid: &[f64],
) -> Result<f64, BesovError> {
    if params.s >= 0.0 {
        return Err(BesovError::NonNegativeIndex { s: params.s });
    }
    let lo = t_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = t_grid.iter().cloned().fold(0.0f64, f64::max);
    if !(hi / lo >= 1e3) {
        return Err(BesovError::TimeGridTooNarrow);
    }
    let weight_exp = -params.s / (2.0 * params.alpha);
    let base = f.without_mean();
    let weighted: Vec<f64> = {
        let mut w = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            let u = apply_semigroup(&base, t, params.alpha)?;
            w.push(t.powf(weight_exp) * lebesgue_norm(&u, params.p)?);
        }
        w
    };
    if params.q.is_infinite() {
        Ok(weighted.iter().fold(0.0f64, |m, v| m.max(*v)))
    } else {
        // (int (...)^q dt/t)^{1/q} = (int (...)^q d(ln t))^{1/q}, trapezoid in ln t
        let mut acc = 0.0;
        for i in 1..t_grid.len() {
            let dlog = (t_grid[i] / t_grid[i - 1]).ln();
            acc += 0.5 * (weighted[i - 1].powf(params.q) + weighted[i].powf(params.q)) * dlog;
        }
        Ok(acc.powf(1.0 / params.q))
    }
}

/// Ratio dyadic / semigroup for the equivalence check.
pub fn equivalence_ratio(
    f: &SpectralField,
    params: &BesovParams,
    family: &LpFamily,
) -> Result<f64, BesovError> {
    let dy = besov_norm_dyadic(f, params, family)?;
    let sg = besov_norm_semigroup(f, params, family)?;
    if sg == 0.0 {
        return Err(BesovError::ZeroField);
    }
    Ok(dy / sg)
}

/// Logarithmic grid helper (inclusive ends).
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo);
    let count = (((hi / lo).log10() * per_decade as f64).ceil() as usize).max(2);
    (0..=count)
        .map(|i| lo * (hi / lo).powf(i as f64 / count as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_grid, synth};

    fn grid_1d() -> Grid {
        make_grid(1, 1024, 20.0).unwrap()
    }

    #[test]
    fn partition_of_unity_on_lattice() {
        let g = grid_1d();
        let fam = build_lp_family(&g, -3, 5, Glue::Reciprocal).unwrap();
        // sum of phi_hat_j = 1 for 2^{j_min} <= |xi| <= 2^{j_max}
        let lo = 2f64.powi(-3);
        let hi = 2f64.powi(5);
        let mut checked = 0;
        g.for_each_freq(|_, mag, _| {
            if mag >= lo && mag <= hi {
                let sum: f64 = (fam.j_min..=fam.j_max)
                    .map(|j| phi_hat(2f64.powi(-j) * mag, Glue::Reciprocal))
                    .sum();
                assert!((sum - 1.0).abs() < 1e-12, "|xi| = {mag}: sum = {sum}");
                checked += 1;
            }
        });
        assert!(checked >= 64);
    }

    #[test]
    fn band_support_is_annular() {
        let g = grid_1d();
        let fam = build_lp_family(&g, -3, 5, Glue::Reciprocal).unwrap();
        for j in -3..=5 {
            let lo = 2f64.powi(j - 1);
            let hi = 2f64.powi(j + 1);
            let sym = fam.symbol(j).unwrap();
            g.for_each_freq(|idx, mag, _| {
                if sym[idx] != 0.0 {
                    assert!(
                        mag >= lo - 1e-12 && mag <= hi + 1e-12,
                        "band {j} leaks to |xi| = {mag}"
                    );
                }
            });
        }
    }

    #[test]
    fn family_construction_contracts() {
        let g = grid_1d();
        assert!(build_lp_family(&g, -3, 5, Glue::Reciprocal).is_ok());
        assert!(matches!(
            build_lp_family(&g, 0, 3, Glue::Reciprocal),
            Err(BesovError::RangeTooNarrow { .. })
        ));
        let small = make_grid(1, 32, 20.0).unwrap();
        assert!(matches!(
            build_lp_family(&small, 0, 10, Glue::Reciprocal),
            Err(BesovError::BandOverflow { .. })
        ));
    }

    #[test]
    fn dyadic_blocks_reassemble_band_limited_field() {
        let g = grid_1d();
        let fam = build_lp_family(&g, -3, 5, Glue::Reciprocal).unwrap();
        let f = synth::random_band(&g, 0, 3, 11);
        // sum over j of Delta_j f recovers f (no energy outside the annulus)
        let mut acc = SpectralField::zero(g.clone());
        for j in -3..=5 {
            acc = acc.axpy(1.0, &dyadic_block(&f, j, &fam).unwrap(), 1.0);
        }
        let diff = acc.axpy(1.0, &f, -1.0);
        assert!(lebesgue_norm(&diff, f64::INFINITY).unwrap() < 1e-10);

        // block of a single-band field: identity at the band, zero two bands away
        let single = synth::random_band(&g, 2, 2, 5); // support [2, 8]
        let b5 = dyadic_block(&single, 5, &fam).unwrap();
        assert!(lebesgue_norm(&b5, f64::INFINITY).unwrap() < 1e-12);
    }

    #[test]
    fn almost_orthogonality() {
        let g = grid_1d();
        let fam = build_lp_family(&g, -3, 5, Glue::Reciprocal).unwrap();
        let f = synth::random_band(&g, 0, 4, 23);
        let total = lebesgue_norm(&f, 2.0).unwrap().powi(2);
        let mut sum = 0.0;
        for j in -3..=5 {
            sum += lebesgue_norm(&dyadic_block(&f, j, &fam).unwrap(), 2.0)
                .unwrap()
                .powi(2);
        }
        assert!(sum > 0.5 * total && sum < 1.5 * total, "{sum} vs {total}");
    }

    #[test]
    fn single_band_norm_value() {
        let g = grid_1d();
        let fam = build_lp_family(&g, -3, 5, Glue::Reciprocal).unwrap();
        let params = BesovParams {
            s: -0.5,
            p: 4.0,
            q: f64::INFINITY,
            alpha: 1.0,
        };
        // content at lattice points hugging |xi| = 2^3, where phi_hat_3 = 1 up
        // to sub-1e-10 glue leakage and the adjacent bands vanish
        let mut coeffs = vec![Complex64::new(0.0, 0.0); g.total_points()];
        g.for_each_freq(|idx, mag, _| {
            if (7.7..8.1).contains(&mag) {
                coeffs[idx] = Complex64::new(0.5, 0.0);
            }
        });
        let f = {
            let tmp = SpectralField::from_coeffs(g.clone(), coeffs);
            SpectralField::from_values(g.clone(), tmp.values().to_vec())
        };
        // phi_hat_3(6.4): psi(6.4/8) = 1, psi(6.4/4) = 0 -> weight 1
        let dy = besov_norm_dyadic(&f, &params, &fam).unwrap();
        let expect = 2f64.powf(3.0 * -0.5) * lebesgue_norm(&f, 4.0).unwrap();
        assert!(
            (dy - expect).abs() <= 1e-10 * expect,
            "dyadic {dy} vs single-term {expect}"
        );

        // zero field: dyadic norm 0, ratio is an error
        let z = SpectralField::zero(g.clone());
        assert_eq!(besov_norm_dyadic(&z, &params, &fam).unwrap(), 0.0);
        assert!(matches!(
            equivalence_ratio(&z, &params, &fam),
            Err(BesovError::ZeroField)
        ));
    }

    #[test]
    fn semigroup_norm_rejects_nonnegative_s() {
        let g = grid_1d();
        let fam = build_lp_family(&g, -3, 5, Glue::Reciprocal).unwrap();
        let f = synth::gaussian(&g, 1.0, 1.0);
        let params = BesovParams {
            s: 0.1,
            p: 4.0,
            q: f64::INFINITY,
            alpha: 1.0,
        };
        assert!(matches!(
            besov_norm_semigroup(&f, &params, &fam),
            Err(BesovError::NonNegativeIndex { .. })
        ));
    }

    #[test]
    fn norms_are_absolutely_homogeneous() {
        let g = grid_1d();
        let fam = build_lp_family(&g, -3, 5, Glue::Reciprocal).unwrap();
        let params = BesovParams {
            s: -0.5,
            p: 4.0,
            q: f64::INFINITY,
            alpha: 0.75,
        };
        let f = synth::gaussian(&g, 1.0, 1.0);
        let dy1 = besov_norm_dyadic(&f, &params, &fam).unwrap();
        let dy2 = besov_norm_dyadic(&f.scale(-2.0), &params, &fam).unwrap();
        assert!((dy2 - 2.0 * dy1).abs() < 1e-12 * dy1);
        let sg1 = besov_norm_semigroup(&f, &params, &fam).unwrap();
        let sg2 = besov_norm_semigroup(&f.scale(-2.0), &params, &fam).unwrap();
        assert!((sg2 - 2.0 * sg1).abs() < 1e-12 * sg1);
        // f vs 2f: identical equivalence ratio
        let r1 = equivalence_ratio(&f, &params, &fam).unwrap();
        let r2 = equivalence_ratio(&f.scale(2.0), &params, &fam).unwrap();
        assert!((r1 - r2).abs() < 1e-12 * r1);
    }

    #[test]
    fn single_band_semigroup_norm_within_factor_four() {
        let g = grid_1d();
        let fam = build_lp_family(&g, -3, 5, Glue::Reciprocal).unwrap();
        let params = BesovParams {
            s: -0.5,
            p: 4.0,
            q: f64::INFINITY,
            alpha: 1.0,
        };
        let f = synth::random_band(&g, 3, 3, 9);
        let dy = besov_norm_dyadic(&f, &params, &fam).unwrap();
        let sg = besov_norm_semigroup(&f, &params, &fam).unwrap();
        let ratio = dy / sg;
        assert!(ratio > 0.25 && ratio < 4.0, "ratio {ratio}");
    }
}
