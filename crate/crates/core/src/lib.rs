//! Spectral machinery for the fractional dissipative equation
//! `u_t + (-Lap)^alpha u = F(u)` on periodic boxes: kernel evaluation and decay
//! checks, semigroup smoothing fits, Littlewood-Paley / Besov norms,
//! admissible-triplet calculus, mild-solution construction and an
//! estimate-verification harness.

pub mod bessel;
pub mod besov;
pub mod dynamics;
pub mod exponents;
pub mod fft;
pub mod fit;
pub mod kernel;
pub mod quad;
pub mod semigroup;
pub mod spectral;
pub mod verify;

pub use spectral::{
    apply_multiplier, fractional_laplacian, lebesgue_norm, make_grid, Grid, Multiplier,
    SpectralError, SpectralField,
};
