//! Nonlinearity catalog and mild-solution construction.
//!
//! The integral equation `u = S_alpha(t) phi + int_0^t S_alpha(t - tau) F(u(tau)) d tau`
//! is solved two ways: Picard iteration of the full time mesh (the contraction
//! construction, with product-trapezoid quadrature that treats the semigroup
//! exactly per mode and interpolates F linearly per interval), and a
//! second-order exponential-time-differencing stepper for long horizons.
//! Pointwise nonlinearities are evaluated on a 2x zero-padded grid.

use crate::semigroup::NormSeries;
use crate::spectral::{Grid, Multiplier, SpectralError, SpectralField};
use crate::{fft, fit};
use num_complex::Complex64;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    BadConfig(String),
    Overflow { t: f64 },
    NoContraction { halvings: u32 },
    StepRejectionCascade { t: f64 },
    MeshCoverageGap { needed: f64, covered: f64 },
    InsufficientGrowth,
    NonIntegrableProfile { homogeneity: f64, dim: usize },
    GridMismatch(String),
    WrongSign(String),
    Spectral(SpectralError),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadConfig(s) => write!(f, "bad solve configuration: {s}"),
            Self::Overflow { t } => write!(f, "field exceeded the blow-up threshold at t = {t}"),
            Self::NoContraction { halvings } => write!(
                f,
                "Picard iteration failed to contract after {halvings} horizon halvings"
            ),
            Self::StepRejectionCascade { t } => {
                write!(f, "step size collapsed near t = {t}")
            }
            Self::MeshCoverageGap { needed, covered } => {
                write!(f, "history covers [0, {covered}] but t = {needed} requested")
            }
            Self::InsufficientGrowth => write!(f, "no blow-up signature in the trajectory"),
            Self::NonIntegrableProfile { homogeneity, dim } => write!(
                f,
                "profile |x|^-{homogeneity} is not locally integrable in dimension {dim}"
            ),
            Self::GridMismatch(s) => write!(f, "grid mismatch: {s}"),
            Self::WrongSign(s) => write!(f, "{s}"),
            Self::Spectral(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SolveError {}

impl From<SpectralError> for SolveError {
    fn from(e: SpectralError) -> Self {
        Self::Spectral(e)
    }
}

/// Pointwise part of one nonlinear term.
#[derive(Debug, Clone)]
pub enum TermKind {
    /// `|u|^b u`
    Power { b: f64 },
    /// `|u|^{b+1}`
    AbsPower { b: f64 },
    /// `sum_k coeffs[k] u^k` (index = power)
    Polynomial { coeffs: Vec<f64> },
    /// 2D quasi-geostrophic advection `-u . grad(theta)` with
    /// `u = (-R_2 theta, R_1 theta)`; replaces the pointwise map entirely.
    QuasiGeostrophic,
}

/// One term of `F(u)`: signed coefficient, pointwise map, optional homogeneous
/// Fourier operator applied afterwards.
#[derive(Debug, Clone)]
pub struct NonlinearTerm {
    pub kind: TermKind,
    /// Signed amplitude; `+1 -> +|u|^b u` (focusing), `-1 -> -|u|^b u`
    /// (defocusing).
    pub coeff: f64,
    pub op: Option<Multiplier>,
}

impl NonlinearTerm {
    pub fn power(b: f64, coeff: f64) -> Self {
        Self {
            kind: TermKind::Power { b },
            coeff,
            op: None,
        }
    }

    pub fn abs_power(b: f64, coeff: f64) -> Self {
        Self {
            kind: TermKind::AbsPower { b },
            coeff,
            op: None,
        }
    }

    pub fn with_op(mut self, op: Multiplier) -> Self {
        self.op = Some(op);
        self
    }

    pub fn qg() -> Self {
        Self {
            kind: TermKind::QuasiGeostrophic,
            coeff: 1.0,
            op: None,
        }
    }

    /// Effective growth exponent b (degree minus one for polynomials, 1 for
    /// the quadratic QG advection).
    pub fn growth_b(&self) -> f64 {
        match &self.kind {
            TermKind::Power { b } | TermKind::AbsPower { b } => *b,
            TermKind::Polynomial { coeffs } => {
                let deg = coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(k, _)| k)
                    .max()
                    .unwrap_or(1);
                (deg.max(1) - 1) as f64
            }
            TermKind::QuasiGeostrophic => 1.0,
        }
    }

    fn apply_pointwise(&self, u: f64) -> f64 {
        match &self.kind {
            TermKind::Power { b } => self.coeff * pow_abs(u, *b) * u,
            TermKind::AbsPower { b } => self.coeff * pow_abs(u, *b) * u.abs(),
            TermKind::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for &c in coeffs.iter().rev() {
                    acc = acc * u + c;
                }
                self.coeff * acc
            }
            TermKind::QuasiGeostrophic => unreachable!("qg handled spectrally"),
        }
    }
}

#[inline]
fn pow_abs(u: f64, b: f64) -> f64 {
    if b == 2.0 {
        u * u
    } else if b == 1.0 {
        u.abs()
    } else if b == 4.0 {
        let s = u * u;
        s * s
    } else {
        u.abs().powf(b)
    }
}

/// Full problem statement: grid, dissipation, nonlinear terms.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: Grid,
    pub alpha: f64,
    /// Dissipation coefficient in front of `(-Lap)^alpha`; 0 switches the
    /// linear part off (diagnostic mode for conservation checks).
    pub kappa: f64,
    pub terms: Vec<NonlinearTerm>,
}

impl ProblemSpec {
    pub fn new(grid: Grid, alpha: f64, terms: Vec<NonlinearTerm>) -> Result<Self, SolveError> {
        let spec = Self {
            grid,
            alpha,
            kappa: 1.0,
            terms,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.alpha > 0.0) {
            return Err(SolveError::BadConfig(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.kappa < 0.0 {
            return Err(SolveError::BadConfig("kappa must be >= 0".into()));
        }
        for term in &self.terms {
            if let TermKind::Power { b } | TermKind::AbsPower { b } = term.kind {
                if !(b > 0.0) {
                    return Err(SolveError::BadConfig(format!(
                        "growth exponent b must be positive, got {b}"
                    )));
                }
            }
            if matches!(term.kind, TermKind::QuasiGeostrophic) && self.grid.dim() != 2 {
                return Err(SolveError::BadConfig(
                    "quasi-geostrophic advection needs a 2D grid".into(),
                ));
            }
            if let Some(op) = &term.op {
                match op.order() {
                    Some(d) if (0.0..2.0 * self.alpha).contains(&d) => {}
                    Some(d) => {
                        return Err(SolveError::BadConfig(format!(
                            "operator order {d} outside [0, 2 alpha) = [0, {})",
                            2.0 * self.alpha
                        )));
                    }
                    None => {
                        return Err(SolveError::BadConfig(
                            "nonlinear-term operator must be homogeneous".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest growth exponent across terms (sets the graded-mesh rule).
    pub fn max_growth_b(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.growth_b())
            .fold(0.0f64, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Picard,
    Etd,
}

/// Solve parameters; `r`, `p`, `q` choose which Lebesgue norms the trajectory
/// records (`t^{1/q} ||u||_p` is the weighted series).
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub t_final: f64,
    pub mesh: usize,
    pub grading: f64,
    pub picard_max_iters: usize,
    pub picard_tol: f64,
    /// Blow-up threshold as a multiple of the initial sup norm.
    pub blowup_factor: f64,
    pub method: Method,
    pub r: f64,
    pub p: f64,
    pub q: f64,
    /// Record the energy-identity series (dissipation and potential terms).
    pub record_energy: bool,
    /// Potential-term exponent b for the energy series (`||u||_{b+2}^{b+2}`).
    pub energy_b: f64,
    /// Snapshot cap; mesh nodes are subsampled to at most about this many fields.
    pub max_snapshots: usize,
}

impl SolveConfig {
    pub fn new(t_final: f64, mesh: usize) -> Self {
        Self {
            t_final,
            mesh,
            grading: 1.0,
            picard_max_iters: 20,
            picard_tol: 1e-10,
            blowup_factor: 1e6,
            method: Method::Picard,
            r: 2.0,
            p: 4.0,
            q: 8.0,
            record_energy: false,
            energy_b: 1.0,
            max_snapshots: 65,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), SolveError> {
        if !(self.t_final > 0.0) {
            return Err(SolveError::BadConfig("horizon T must be positive".into()));
        }
        if self.mesh < 16 {
            return Err(SolveError::BadConfig(
                "mesh must have at least 16 steps".into(),
            ));
        }
        let cap = if dim == 1 { 512 } else { 256 };
        if self.mesh > cap && self.method == Method::Picard {
            return Err(SolveError::BadConfig(format!(
                "Picard mesh capped at {cap} nodes in {dim}D"
            )));
        }
        if !(self.grading >= 1.0) {
            return Err(SolveError::BadConfig("mesh grading must be >= 1".into()));
        }
        if !(self.picard_tol > 0.0) {
            return Err(SolveError::BadConfig(
                "picard tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Mesh grading exponent resolving the `tau^{-(b+1)/q}` weight of the weighted
/// space setting: `max(1, q / (q - (b+1)))` when `q > b + 1`, uniform otherwise.
pub fn suggested_grading(q: f64, b: f64) -> f64 {
    if q.is_finite() && q > b + 1.0 {
        (q / (q - (b + 1.0))).max(1.0)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    /// Field crossed the blow-up threshold.
    Overflow,
    /// Spectral tail grew past the resolution guard; the peak is no longer
    /// representable on the grid.
    ResolutionExhausted,
}

/// Norm records along the trajectory, one entry per accepted node.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryNorms {
    pub times: Vec<f64>,
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
    pub lr: Vec<f64>,
    pub lp: Vec<f64>,
    pub weighted_lp: Vec<f64>,
    /// `||(-Lap)^{alpha/2} u||_2^2` when energy recording is on
    pub dissipation: Vec<f64>,
    /// `||u||_{b+2}^{b+2}` when energy recording is on
    pub potential: Vec<f64>,
}

impl TrajectoryNorms {
    pub fn series(&self, which: &str) -> NormSeries {
        let values = match which {
            "l2" => &self.l2,
            "linf" => &self.linf,
            "lr" => &self.lr,
            "lp" => &self.lp,
            "weighted_lp" => &self.weighted_lp,
            _ => panic!("unknown series {which}"),
        };
        NormSeries {
            times: self.times.clone(),
            values: values.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlowupEstimate {
    pub t_star: f64,
    /// Fitted exponent rho in `||u(s)||_r ~ (T* - s)^{-rho}`.
    pub fitted_rate_r: f64,
    /// Fitted exponent for the sup norm.
    pub fitted_rate_inf: f64,
    /// (smallest, largest) gap `T* - s` used by the rate fit.
    pub window: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct RunDiagnostics {
    pub boundary_magnitude: f64,
    pub aliasing_residual: f64,
    pub halvings: u32,
    pub termination: Termination,
    pub t_reached: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<(f64, SpectralField)>,
    pub norms: TrajectoryNorms,
    /// Successive-difference contraction factors in the X(I)-style norm
    /// (sup-in-time L^r plus the L^q L^p integral norm).
    pub picard_ratios: Vec<f64>,
    pub blowup: Option<BlowupEstimate>,
    pub diagnostics: RunDiagnostics,
}

// ---------------------------------------------------------------------------
// spectral workspace
// ---------------------------------------------------------------------------

struct Workspace {
    grid: Grid,
    n: usize,
    dim: usize,
    /// kappa |xi|^{2 alpha} per mode
    lambda: Vec<f64>,
    /// operator symbol tables per term (None = identity)
    op_symbols: Vec<Option<Vec<Complex64>>>,
    /// Riesz/gradient tables for the QG term
    qg_tables: Option<QgTables>,
}

struct QgTables {
    u1: Vec<Complex64>,
    u2: Vec<Complex64>,
    dx: Vec<Complex64>,
    dy: Vec<Complex64>,
}

impl Workspace {
    fn build(spec: &ProblemSpec) -> Workspace {
        let grid = spec.grid.clone();
        let total = grid.total_points();
        let mut lambda = vec![0.0; total];
        grid.for_each_freq(|idx, mag, _| {
            lambda[idx] = spec.kappa * mag.powf(2.0 * spec.alpha);
        });
        let mut op_symbols = Vec::with_capacity(spec.terms.len());
        let mut qg_tables = None;
        for term in &spec.terms {
            let table = term.op.as_ref().map(|op| {
                let mut sym = vec![Complex64::new(0.0, 0.0); total];
                grid.for_each_freq(|idx, _, xi| {
                    sym[idx] = op.eval(xi);
                });
                sym
            });
            op_symbols.push(table);
            if matches!(term.kind, TermKind::QuasiGeostrophic) && qg_tables.is_none() {
                let mut u1 = vec![Complex64::new(0.0, 0.0); total];
                let mut u2 = vec![Complex64::new(0.0, 0.0); total];
                let mut dx = vec![Complex64::new(0.0, 0.0); total];
                let mut dy = vec![Complex64::new(0.0, 0.0); total];
                let r1 = Multiplier::Riesz { axis: 0 };
                let r2 = Multiplier::Riesz { axis: 1 };
                grid.for_each_freq(|idx, _, xi| {
                    u1[idx] = -r2.eval(xi);
                    u2[idx] = r1.eval(xi);
                    dx[idx] = Complex64::new(0.0, xi[0]);
                    dy[idx] = Complex64::new(0.0, xi[1]);
                });
                qg_tables = Some(QgTables { u1, u2, dx, dy });
            }
        }
        Workspace {
            n: grid.n_points(),
            dim: grid.dim(),
            grid,
            lambda,
            op_symbols,
            qg_tables,
        }
    }

    /// coarse coefficients -> fine-grid (2N) real samples; the coarse Nyquist
    /// mode is dropped, part of the dealiasing filter
    fn pad_to_fine(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let n = self.n;
        let fine_n = 2 * n;
        match self.dim {
            1 => {
                let mut fine = vec![Complex64::new(0.0, 0.0); fine_n];
                for i in 0..n {
                    if i == n / 2 {
                        continue;
                    }
                    let j = if 2 * i < n { i } else { i + n };
                    fine[j] = coeffs[i];
                }
                fft::inverse(&mut fine, fine_n, 1);
                fine.iter().map(|c| c.re).collect()
            }
            2 => {
                let mut fine = vec![Complex64::new(0.0, 0.0); fine_n * fine_n];
                for iy in 0..n {
                    if iy == n / 2 {
                        continue;
                    }
                    let jy = if 2 * iy < n { iy } else { iy + n };
                    for ix in 0..n {
                        if ix == n / 2 {
                            continue;
                        }
                        let jx = if 2 * ix < n { ix } else { ix + n };
                        fine[jy * fine_n + jx] = coeffs[iy * n + ix];
                    }
                }
                fft::inverse(&mut fine, fine_n, 2);
                fine.iter().map(|c| c.re).collect()
            }
            _ => unreachable!(),
        }
    }

    /// fine-grid real samples -> coarse coefficients (band truncation)
    fn truncate_to_coarse(&self, fine_values: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        let fine_n = 2 * n;
        let fine_coeffs = fft::values_to_coeffs(fine_values, fine_n, self.dim);
        let mut coarse = vec![Complex64::new(0.0, 0.0); self.grid.total_points()];
        match self.dim {
            1 => {
                for i in 0..n {
                    if i == n / 2 {
                        continue;
                    }
                    let j = if 2 * i < n { i } else { i + n };
                    coarse[i] = fine_coeffs[j];
                }
            }
            2 => {
                for iy in 0..n {
                    if iy == n / 2 {
                        continue;
                    }
                    let jy = if 2 * iy < n { iy } else { iy + n };
                    for ix in 0..n {
                        if ix == n / 2 {
                            continue;
                        }
                        let jx = if 2 * ix < n { ix } else { ix + n };
                        coarse[iy * n + ix] = fine_coeffs[jy * fine_n + jx];
                    }
                }
            }
            _ => unreachable!(),
        }
        coarse
    }

    /// Dealiased evaluation of `F(u)` in coefficient space.
    fn eval_nonlinearity(
        &self,
        spec: &ProblemSpec,
        coeffs: &[Complex64],
        threshold: f64,
        t_for_err: f64,
    ) -> Result<Vec<Complex64>, SolveError> {
        let total = self.grid.total_points();
        let mut acc = vec![Complex64::new(0.0, 0.0); total];
        let mut fine_cache: Option<Vec<f64>> = None;
        for (ti, term) in spec.terms.iter().enumerate() {
            if term.coeff == 0.0 {
                continue;
            }
            let mut out = match term.kind {
                TermKind::QuasiGeostrophic => {
                    let tables = self.qg_tables.as_ref().expect("qg tables");
                    let mul = |tab: &[Complex64]| -> Vec<Complex64> {
                        coeffs.iter().zip(tab).map(|(c, s)| c * s).collect()
                    };
                    let u1 = self.pad_to_fine(&mul(&tables.u1));
                    let u2 = self.pad_to_fine(&mul(&tables.u2));
                    let tx = self.pad_to_fine(&mul(&tables.dx));
                    let ty = self.pad_to_fine(&mul(&tables.dy));
                    let mut fine = vec![0.0; u1.len()];
                    for i in 0..fine.len() {
                        fine[i] = -(u1[i] * tx[i] + u2[i] * ty[i]);
                        if !fine[i].is_finite() {
                            return Err(SolveError::Overflow { t: t_for_err });
                        }
                    }
                    let mut c = self.truncate_to_coarse(&fine);
                    if term.coeff != 1.0 {
                        for v in &mut c {
                            *v *= term.coeff;
                        }
                    }
                    c
                }
                _ => {
                    if fine_cache.is_none() {
                        fine_cache = Some(self.pad_to_fine(coeffs));
                    }
                    let fine_u = fine_cache.as_ref().unwrap();
                    let mut fine = vec![0.0; fine_u.len()];
                    for (o, &u) in fine.iter_mut().zip(fine_u) {
                        if u.abs() > threshold {
                            return Err(SolveError::Overflow { t: t_for_err });
                        }
                        *o = term.apply_pointwise(u);
                        if !o.is_finite() {
                            return Err(SolveError::Overflow { t: t_for_err });
                        }
                    }
                    self.truncate_to_coarse(&fine)
                }
            };
            if let Some(sym) = &self.op_symbols[ti] {
                for (c, s) in out.iter_mut().zip(sym) {
                    *c *= s;
                }
            }
            for (a, c) in acc.iter_mut().zip(&out) {
                *a += c;
            }
        }
        Ok(acc)
    }
}

// exponential weights, arguments w = h lambda >= 0
#[inline]
fn phi1(w: f64) -> f64 {
    if w < 1e-5 {
        1.0 - w / 2.0 + w * w / 6.0
    } else {
        (1.0 - (-w).exp()) / w
    }
}

/// `(w - 1 + e^{-w}) / w^2`: right-endpoint product-trapezoid weight, also the
/// ETD2 corrector coefficient.
#[inline]
fn wtrap_b(w: f64) -> f64 {
    if w < 1e-4 {
        0.5 - w / 6.0 + w * w / 24.0
    } else {
        (w - 1.0 + (-w).exp()) / (w * w)
    }
}

/// `(1 - e^{-w} - w e^{-w}) / w^2`: left-endpoint product-trapezoid weight.
#[inline]
fn wtrap_a(w: f64) -> f64 {
    if w < 1e-4 {
        0.5 - w / 3.0 + w * w / 8.0
    } else {
        let e = (-w).exp();
        (1.0 - e - w * e) / (w * w)
    }
}

/// `int_0^t S(t - tau) F(tau) d tau` over a recorded history of (tau, F(tau))
/// pairs covering `[0, t]`: exact semigroup per mode, linear interpolation of F
/// per interval (product trapezoid).
pub fn duhamel_term(
    history: &[(f64, SpectralField)],
    t: f64,
    alpha: f64,
) -> Result<SpectralField, SolveError> {
    if history.is_empty() || history[0].0 > 1e-14 || history.last().unwrap().0 < t - 1e-14 * t.abs()
    {
        return Err(SolveError::MeshCoverageGap {
            needed: t,
            covered: history.last().map(|h| h.0).unwrap_or(0.0),
        });
    }
    let grid = history[0].1.grid().clone();
    let total = grid.total_points();
    let mut lambda = vec![0.0; total];
    grid.for_each_freq(|idx, mag, _| {
        lambda[idx] = mag.powf(2.0 * alpha);
    });
    let mut acc = vec![Complex64::new(0.0, 0.0); total];
    for win in history.windows(2) {
        let (ta, fa) = (win[0].0, &win[0].1);
        let (tb, fb) = (win[1].0, &win[1].1);
        if ta >= t {
            break;
        }
        let tb = tb.min(t);
        let h = tb - ta;
        if h <= 0.0 {
            continue;
        }
        let ca = fa.coeffs();
        let cb = fb.coeffs();
        for idx in 0..total {
            let w = h * lambda[idx];
            // weights carry the decay from the interval end to the target time
            let shift = (-(t - tb) * lambda[idx]).exp();
            acc[idx] += h * shift * (ca[idx] * wtrap_a(w) + cb[idx] * wtrap_b(w));
        }
    }
    Ok(SpectralField::from_coeffs(grid, acc))
}

// ---------------------------------------------------------------------------
// norm recording
// ---------------------------------------------------------------------------

struct Recorder {
    norms: TrajectoryNorms,
    snapshots: Vec<(f64, SpectralField)>,
    stride: usize,
    count: usize,
    cell: f64,
    r: f64,
    p: f64,
    q: f64,
    record_energy: bool,
    energy_b: f64,
}

impl Recorder {
    fn new(cfg: &SolveConfig, grid: &Grid, expected_nodes: usize) -> Self {
        Recorder {
            norms: TrajectoryNorms::default(),
            snapshots: Vec::new(),
            stride: (expected_nodes / cfg.max_snapshots.max(1)).max(1),
            count: 0,
            cell: grid.cell_measure(),
            r: cfg.r,
            p: cfg.p,
            q: cfg.q,
            record_energy: cfg.record_energy,
            energy_b: cfg.energy_b,
        }
    }

    fn norm(&self, values: &[f64], p: f64) -> f64 {
        if p.is_infinite() {
            values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        } else {
            (self.cell * values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
        }
    }

    fn record(&mut self, t: f64, field: &SpectralField, lambda: &[f64], force_snapshot: bool) {
        let values = field.values();
        let lp = self.norm(values, self.p);
        self.norms.times.push(t);
        self.norms.l2.push(self.norm(values, 2.0));
        self.norms.linf.push(self.norm(values, f64::INFINITY));
        self.norms.lr.push(self.norm(values, self.r));
        self.norms.lp.push(lp);
        let w = if self.q.is_infinite() {
            1.0
        } else {
            t.powf(1.0 / self.q)
        };
        self.norms.weighted_lp.push(w * lp);
        if self.record_energy {
            // ||(-Lap)^{a/2} u||_2^2 via Parseval on the lattice
            let coeffs = field.coeffs();
            let box_vol = (2.0 * field.grid().half_length()).powi(field.grid().dim() as i32);
            let diss: f64 = coeffs
                .iter()
                .zip(lambda)
                .map(|(c, l)| l * c.norm_sqr())
                .sum::<f64>()
                * box_vol;
            self.norms.dissipation.push(diss);
            let pot: f64 = self.cell
                * values
                    .iter()
                    .map(|v| v.abs().powf(self.energy_b + 2.0))
                    .sum::<f64>();
            self.norms.potential.push(pot);
        }
        if force_snapshot || self.count % self.stride == 0 {
            self.snapshots.push((t, field.clone()));
        }
        self.count += 1;
    }
}

fn graded_mesh(t_final: f64, m: usize, gamma: f64) -> Vec<f64> {
    (0..=m)
        .map(|i| t_final * (i as f64 / m as f64).powf(gamma))
        .collect()
}

/// Fraction of spectral energy in the top octave of the lattice; large values
/// mean the grid no longer resolves the field.
fn spectral_tail_fraction(grid: &Grid, coeffs: &[Complex64]) -> f64 {
    let cut = grid.max_freq() * 2.0 / 3.0;
    let mut tail = 0.0;
    let mut total = 0.0;
    grid.for_each_freq(|idx, mag, _| {
        let e = coeffs[idx].norm_sqr();
        total += e;
        if mag >= cut {
            tail += e;
        }
    });
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

// ---------------------------------------------------------------------------
// Picard iteration
// ---------------------------------------------------------------------------

/// Solve the integral equation by Picard iteration on the full graded mesh,
/// halving the horizon (up to 6 times) when the iteration fails to contract —
/// the operational form of the local theory's "T depends on the data".
pub fn picard_solve(
    spec: &ProblemSpec,
    phi: &SpectralField,
    cfg: &SolveConfig,
) -> Result<Trajectory, SolveError> {
    spec.validate()?;
    cfg.validate(spec.grid.dim())?;
    if phi.grid() != &spec.grid {
        return Err(SolveError::GridMismatch(
            "data grid differs from problem grid".into(),
        ));
    }
    if !phi.is_finite() {
        return Err(SolveError::Spectral(SpectralError::NonFiniteField));
    }
    let ws = Workspace::build(spec);
    let mut t_final = cfg.t_final;
    let mut halvings = 0u32;
    loop {
        match picard_attempt(spec, phi, cfg, &ws, t_final, halvings) {
            Ok(traj) => return Ok(traj),
            Err(PicardFailure::NoContraction) | Err(PicardFailure::Overflow) if halvings < 6 => {
                halvings += 1;
                t_final *= 0.5;
            }
            Err(PicardFailure::NoContraction) | Err(PicardFailure::Overflow) => {
                return Err(SolveError::NoContraction { halvings })
            }
            Err(PicardFailure::Fatal(e)) => return Err(e),
        }
    }
}

enum PicardFailure {
    NoContraction,
    Overflow,
    Fatal(SolveError),
}

fn picard_attempt(
    spec: &ProblemSpec,
    phi: &SpectralField,
    cfg: &SolveConfig,
    ws: &Workspace,
    t_final: f64,
    halvings: u32,
) -> Result<Trajectory, PicardFailure> {
    let m = cfg.mesh;
    let mesh = graded_mesh(t_final, m, cfg.grading);
    let total = spec.grid.total_points();
    let threshold = cfg.blowup_factor
        * phi
            .values()
            .iter()
            .fold(0.0f64, |mx, v| mx.max(v.abs()))
            .max(1e-30);

    // u^0 = S(t_i) phi
    let phi_hat = phi.coeffs().to_vec();
    let free: Vec<Vec<Complex64>> = mesh
        .iter()
        .map(|&t| {
            phi_hat
                .iter()
                .enumerate()
                .map(|(idx, c)| c * (-t * ws.lambda[idx]).exp())
                .collect()
        })
        .collect();

    let linear_only = spec.terms.iter().all(|t| t.coeff == 0.0);

    let mut current = free.clone();
    let mut ratios: Vec<f64> = Vec::new();
    let mut prev_diff: Option<f64> = None;
    let mut converged = linear_only;

    if !linear_only {
        for _iter in 0..cfg.picard_max_iters {
            // nonlinearity at every node of the current iterate
            let mut f_hat: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
            for (i, u) in current.iter().enumerate() {
                match ws.eval_nonlinearity(spec, u, threshold, mesh[i]) {
                    Ok(f) => f_hat.push(f),
                    Err(SolveError::Overflow { .. }) => return Err(PicardFailure::Overflow),
                    Err(e) => return Err(PicardFailure::Fatal(e)),
                }
            }
            // Duhamel recurrence along the mesh
            let mut next: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
            next.push(free[0].clone());
            let mut integral = vec![Complex64::new(0.0, 0.0); total];
            for i in 1..=m {
                let h = mesh[i] - mesh[i - 1];
                for idx in 0..total {
                    let w = h * ws.lambda[idx];
                    let e = (-w).exp();
                    integral[idx] = integral[idx] * e
                        + h * (f_hat[i - 1][idx] * wtrap_a(w) + f_hat[i][idx] * wtrap_b(w));
                }
                let mut u_new = free[i].clone();
                for idx in 0..total {
                    u_new[idx] += integral[idx];
                }
                next.push(u_new);
            }
            // X(I)-style norm of the difference and relative sup change
            let cell = spec.grid.cell_measure();
            let mut diff_sup_r = 0.0f64;
            let mut diff_lp_series = NormSeries::default();
            let mut rel_sup = 0.0f64;
            for i in 0..=m {
                let mut d = vec![Complex64::new(0.0, 0.0); total];
                for idx in 0..total {
                    d[idx] = next[i][idx] - current[i][idx];
                }
                let d_vals = fft::coeffs_to_values(&d, ws.n, ws.dim);
                let u_vals = fft::coeffs_to_values(&next[i], ws.n, ws.dim);
                let dr = (cell * d_vals.iter().map(|v| v.abs().powf(cfg.r)).sum::<f64>())
                    .powf(1.0 / cfg.r);
                let dp = (cell * d_vals.iter().map(|v| v.abs().powf(cfg.p)).sum::<f64>())
                    .powf(1.0 / cfg.p);
                let dinf = d_vals.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
                let uinf = u_vals.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
                diff_sup_r = diff_sup_r.max(dr);
                if i > 0 {
                    diff_lp_series.push(mesh[i], dp);
                }
                rel_sup = rel_sup.max(dinf / uinf.max(1e-30));
            }
            let lqlp = crate::semigroup::spacetime_norm(
                &diff_lp_series,
                cfg.q.min(1e6),
                crate::semigroup::SpacetimeMode::Integral,
            )
            .unwrap_or(0.0);
            let diff_x = diff_sup_r + lqlp;
            if let Some(prev) = prev_diff {
                if prev > 0.0 {
                    ratios.push(diff_x / prev);
                }
            }
            prev_diff = Some(diff_x);
            current = next;
            if rel_sup < cfg.picard_tol {
                converged = true;
                break;
            }
            // a genuinely expanding iteration will not recover
            if ratios.len() >= 2 && ratios.iter().rev().take(2).all(|r| *r > 1.0) {
                return Err(PicardFailure::NoContraction);
            }
        }
    }
    if !converged {
        return Err(PicardFailure::NoContraction);
    }

    // record the converged trajectory
    let mut rec = Recorder::new(cfg, &spec.grid, m + 1);
    let mut boundary = 0.0f64;
    for (i, t) in mesh.iter().enumerate() {
        let field = SpectralField::from_coeffs(spec.grid.clone(), current[i].clone());
        boundary = boundary.max(field.boundary_magnitude());
        let force = i == 0 || i == m;
        rec.record(*t, &field, &ws.lambda, force);
    }
    let aliasing = aliasing_residual(spec, phi).unwrap_or(f64::NAN);
    Ok(Trajectory {
        times: mesh,
        snapshots: rec.snapshots,
        norms: rec.norms,
        picard_ratios: ratios,
        blowup: None,
        diagnostics: RunDiagnostics {
            boundary_magnitude: boundary,
            aliasing_residual: aliasing,
            halvings,
            termination: Termination::Completed,
            t_reached: t_final,
        },
    })
}

// ---------------------------------------------------------------------------
// exponential time differencing
// ---------------------------------------------------------------------------

/// Second-order ETD (exact linear multiplier, two-stage treatment of F) with a
/// fixed base step `T / mesh`. Once a step gets rejected on growth or overflow
/// the step only shrinks from then on, tracking the solution into a blow-up; a
/// trajectory that keeps growing ends with a blow-up termination rather than
/// an error.
pub fn etd_solve(
    spec: &ProblemSpec,
    phi: &SpectralField,
    cfg: &SolveConfig,
) -> Result<Trajectory, SolveError> {
    spec.validate()?;
    cfg.validate(spec.grid.dim())?;
    if phi.grid() != &spec.grid {
        return Err(SolveError::GridMismatch(
            "data grid differs from problem grid".into(),
        ));
    }
    if !phi.is_finite() {
        return Err(SolveError::Spectral(SpectralError::NonFiniteField));
    }
    let ws = Workspace::build(spec);
    let total = spec.grid.total_points();
    let threshold = cfg.blowup_factor
        * phi
            .values()
            .iter()
            .fold(0.0f64, |mx, v| mx.max(v.abs()))
            .max(1e-30);
    let h_base = cfg.t_final / cfg.mesh as f64;
    let h_min = h_base * 2f64.powi(-40);
    let grow_cap = 1.25;

    let mut rec = Recorder::new(cfg, &spec.grid, cfg.mesh + 1);
    let mut boundary = phi.boundary_magnitude();
    rec.record(0.0, phi, &ws.lambda, true);

    let mut u = phi.coeffs().to_vec();
    let mut u_inf = phi.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut t = 0.0f64;
    let mut h = h_base;
    let mut refining = false;
    let mut termination = Termination::Completed;
    let linear_only = spec.terms.iter().all(|t| t.coeff == 0.0);

    'time: while t < cfg.t_final - 1e-14 * cfg.t_final {
        h = h.min(cfg.t_final - t);
        let f_u = if linear_only {
            vec![Complex64::new(0.0, 0.0); total]
        } else {
            match ws.eval_nonlinearity(spec, &u, threshold, t) {
                Ok(f) => f,
                Err(SolveError::Overflow { .. }) => {
                    termination = Termination::Overflow;
                    break 'time;
                }
                Err(e) => return Err(e),
            }
        };
        loop {
            // predictor, then Cox-Matthews corrector
            let mut stage = vec![Complex64::new(0.0, 0.0); total];
            for idx in 0..total {
                let w = h * ws.lambda[idx];
                stage[idx] = u[idx] * (-w).exp() + h * phi1(w) * f_u[idx];
            }
            let u_new: Vec<Complex64> = if linear_only {
                stage
            } else {
                match ws.eval_nonlinearity(spec, &stage, threshold, t + h) {
                    Ok(f_stage) => {
                        let mut out = stage;
                        for idx in 0..total {
                            let w = h * ws.lambda[idx];
                            out[idx] += h * wtrap_b(w) * (f_stage[idx] - f_u[idx]);
                        }
                        out
                    }
                    Err(SolveError::Overflow { .. }) => {
                        refining = true;
                        h *= 0.5;
                        if h < h_min {
                            termination = Termination::Overflow;
                            break 'time;
                        }
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            };
            let vals = fft::coeffs_to_values(&u_new, ws.n, ws.dim);
            let new_inf = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !new_inf.is_finite() || new_inf > threshold {
                termination = Termination::Overflow;
                break 'time;
            }
            if !linear_only && new_inf > grow_cap * u_inf.max(1e-300) {
                refining = true;
                h *= 0.5;
                if h < h_min {
                    termination = Termination::Overflow;
                    break 'time;
                }
                continue;
            }
            // accepted
            t += h;
            u = u_new;
            u_inf = new_inf;
            let field = SpectralField::from_coeffs(spec.grid.clone(), u.clone());
            boundary = boundary.max(field.boundary_magnitude());
            rec.record(t, &field, &ws.lambda, (t - cfg.t_final).abs() < 1e-14);
            if spectral_tail_fraction(&spec.grid, &u) > 1e-3 {
                termination = Termination::ResolutionExhausted;
                break 'time;
            }
            if !refining {
                h = h_base;
            }
            break;
        }
    }

    let aliasing = aliasing_residual(spec, phi).unwrap_or(f64::NAN);
    let mut traj = Trajectory {
        times: rec.norms.times.clone(),
        snapshots: rec.snapshots,
        norms: rec.norms,
        picard_ratios: Vec::new(),
        blowup: None,
        diagnostics: RunDiagnostics {
            boundary_magnitude: boundary,
            aliasing_residual: aliasing,
            halvings: 0,
            termination,
            t_reached: t,
        },
    };
    if termination != Termination::Completed {
        // blow-up is a result, not an error; attach the estimate when there is one
        let b = spec.max_growth_b().max(1e-6);
        traj.blowup = detect_blowup(&traj, b, cfg.r).ok();
    }
    Ok(traj)
}

/// Estimate the blow-up time by extrapolating `||u||_inf^{-b}` to zero over the
/// last accepted steps, then fit the growth rate of `||u(s)||_r` against
/// `T* - s` over the growth-dominated window.
pub fn detect_blowup(traj: &Trajectory, b: f64, _r: f64) -> Result<BlowupEstimate, SolveError> {
    let times = &traj.norms.times;
    let linf = &traj.norms.linf;
    if times.len() < 12 {
        return Err(SolveError::InsufficientGrowth);
    }
    let first_inf = linf[0].max(1e-300);
    let last_inf = *linf.last().unwrap();
    if last_inf < 10.0 * first_inf {
        return Err(SolveError::InsufficientGrowth);
    }
    // linear fit of ||u||_inf^{-b} over the last 10 accepted steps
    let k = times.len().saturating_sub(10);
    let xs: Vec<f64> = times[k..].to_vec();
    let ys: Vec<f64> = linf[k..].iter().map(|v| v.powf(-b)).collect();
    let (slope, intercept, _) = fit::linear(&xs, &ys);
    if !(slope < 0.0) {
        return Err(SolveError::InsufficientGrowth);
    }
    let t_star = -intercept / slope;
    if !(t_star > *xs.last().unwrap()) {
        return Err(SolveError::InsufficientGrowth);
    }
    // rate fits over the growth-dominated window
    let mut gaps = Vec::new();
    let mut lr_y = Vec::new();
    let mut li_y = Vec::new();
    for i in 0..times.len() {
        let gap = t_star - times[i];
        if linf[i] >= 3.0 * first_inf && gap > 0.0 {
            gaps.push(gap);
            lr_y.push(traj.norms.lr[i]);
            li_y.push(linf[i]);
        }
    }
    if gaps.len() < 5 {
        return Err(SolveError::InsufficientGrowth);
    }
    let (slope_r, _) = fit::log_log_slope(&gaps, &lr_y, 0.0);
    let (slope_i, _) = fit::log_log_slope(&gaps, &li_y, 0.0);
    Ok(BlowupEstimate {
        t_star,
        fitted_rate_r: -slope_r,
        fitted_rate_inf: -slope_i,
        window: (gaps[gaps.len() - 1], gaps[0]),
    })
}

/// Mollified self-similar profile `(|x|^2 + eps^2)^{-alpha/b}`, normalized to
/// unit semigroup-characterized Besov norm in `B^{-sigma}_{p, inf}` with
/// `sigma = 2 alpha / b - n / p`.
pub fn self_similar_data(
    b: f64,
    alpha: f64,
    grid: &Grid,
    eps: f64,
    p: f64,
) -> Result<SpectralField, SolveError> {
    let n = grid.dim() as f64;
    let hom = 2.0 * alpha / b;
    if hom >= n {
        return Err(SolveError::NonIntegrableProfile {
            homogeneity: hom,
            dim: grid.dim(),
        });
    }
    if !(eps > 0.0) {
        return Err(SolveError::BadConfig(
            "mollification scale must be positive".into(),
        ));
    }
    let sigma = 2.0 * alpha / b - n / p;
    if !(sigma > 0.0) {
        return Err(SolveError::BadConfig(format!(
            "sigma = 2 alpha / b - n / p = {sigma} must be positive; raise p"
        )));
    }
    let raw = crate::spectral::synth::power_profile(grid, hom, eps, 1.0);
    let params = crate::besov::BesovParams {
        s: -sigma,
        p,
        q: f64::INFINITY,
        alpha,
    };
    let t_grid = crate::besov::log_grid(1e-8, 1e4, 8);
    let norm = crate::besov::besov_norm_semigroup_on_grid(&raw, &params, &t_grid)
        .map_err(|e| SolveError::BadConfig(format!("normalization failed: {e}")))?;
    if !(norm > 0.0) {
        return Err(SolveError::BadConfig("profile has zero Besov norm".into()));
    }
    Ok(raw.scale(1.0 / norm))
}

/// Residual of the scaling covariance
/// `u_lambda(t, x) = lambda^{2 alpha / b} u(lambda^{2 alpha} t, lambda x)`:
/// solve from `phi` on `[-L, L)` and from the rescaled data on
/// `[-L/lambda, L/lambda)` (the sample values coincide up to the amplitude
/// factor, so the grids nest exactly), then compare at the matched mesh nodes.
pub fn scaling_orbit_check(
    spec: &ProblemSpec,
    phi: &SpectralField,
    lambda: f64,
    cfg: &SolveConfig,
) -> Result<f64, SolveError> {
    let lam_log = lambda.log2();
    if lambda < 1.0 || (lam_log - lam_log.round()).abs() > 1e-12 {
        return Err(SolveError::BadConfig(
            "lambda must be a power of two >= 1".into(),
        ));
    }
    let b = match spec.terms.as_slice() {
        [term] => match term.kind {
            TermKind::Power { b } if term.op.is_none() => b,
            _ => {
                return Err(SolveError::BadConfig(
                    "scaling orbit needs a single pure power term".into(),
                ))
            }
        },
        _ => {
            return Err(SolveError::BadConfig(
                "scaling orbit needs a single pure power term".into(),
            ))
        }
    };
    let solve = |s: &ProblemSpec, f: &SpectralField, c: &SolveConfig| match c.method {
        Method::Picard => picard_solve(s, f, c),
        Method::Etd => etd_solve(s, f, c),
    };
    let base = solve(spec, phi, cfg)?;

    let amp = lambda.powf(2.0 * spec.alpha / b);
    let grid2 = crate::spectral::make_grid(
        spec.grid.dim(),
        spec.grid.n_points(),
        spec.grid.half_length() / lambda,
    )?;
    let phi2 = SpectralField::from_values(
        grid2.clone(),
        phi.values().iter().map(|v| amp * v).collect(),
    );
    let spec2 = ProblemSpec {
        grid: grid2,
        alpha: spec.alpha,
        kappa: spec.kappa,
        terms: spec.terms.clone(),
    };
    let mut cfg2 = cfg.clone();
    cfg2.t_final = cfg.t_final / lambda.powf(2.0 * spec.alpha);
    let scaled = solve(&spec2, &phi2, &cfg2)?;

    if base.snapshots.len() != scaled.snapshots.len() {
        return Err(SolveError::GridMismatch(
            "trajectories recorded different snapshot counts".into(),
        ));
    }
    let mut residual = 0.0f64;
    let mut scale = 0.0f64;
    for ((_, f1), (_, f2)) in base.snapshots.iter().zip(&scaled.snapshots) {
        for (a, c) in f1.values().iter().zip(f2.values()) {
            residual = residual.max((amp * a - c).abs());
            scale = scale.max((amp * a).abs());
        }
    }
    Ok(residual / scale.max(1e-300))
}

/// Resolution-doubling diagnostic: relative sup difference between the
/// spectrum of `F(phi)` evaluated at the working resolution and at twice the
/// resolution, compared on the shared modes.
pub fn aliasing_residual(spec: &ProblemSpec, phi: &SpectralField) -> Result<f64, SolveError> {
    if spec.terms.iter().all(|t| t.coeff == 0.0) {
        return Ok(0.0);
    }
    let ws = Workspace::build(spec);
    let coarse = ws.eval_nonlinearity(spec, phi.coeffs(), f64::INFINITY, 0.0)?;

    let fine_grid = crate::spectral::make_grid(
        spec.grid.dim(),
        spec.grid.n_points() * 2,
        spec.grid.half_length(),
    )?;
    let fine_phi = SpectralField::from_values(fine_grid.clone(), ws.pad_to_fine(phi.coeffs()));
    let fine_spec = ProblemSpec {
        grid: fine_grid,
        alpha: spec.alpha,
        kappa: spec.kappa,
        terms: spec.terms.clone(),
    };
    let fine_ws = Workspace::build(&fine_spec);
    let fine = fine_ws.eval_nonlinearity(&fine_spec, fine_phi.coeffs(), f64::INFINITY, 0.0)?;

    // compare on the shared (coarse) modes
    let n = spec.grid.n_points();
    let fine_n = 2 * n;
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    match spec.grid.dim() {
        1 => {
            for i in 0..n {
                if i == n / 2 {
                    continue;
                }
                let j = if 2 * i < n { i } else { i + n };
                diff = diff.max((coarse[i] - fine[j]).norm());
                scale = scale.max(fine[j].norm());
            }
        }
        2 => {
            for iy in 0..n {
                if iy == n / 2 {
                    continue;
                }
                let jy = if 2 * iy < n { iy } else { iy + n };
                for ix in 0..n {
                    if ix == n / 2 {
                        continue;
                    }
                    let jx = if 2 * ix < n { ix } else { ix + n };
                    diff = diff.max((coarse[iy * n + ix] - fine[jy * fine_n + jx]).norm());
                    scale = scale.max(fine[jy * fine_n + jx].norm());
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(diff / scale.max(1e-300))
}

/// Dealiased evaluation of `F(u)` as a field operation.
pub fn eval_nonlinearity(
    spec: &ProblemSpec,
    u: &SpectralField,
) -> Result<SpectralField, SolveError> {
    spec.validate()?;
    if !u.is_finite() {
        return Err(SolveError::Spectral(SpectralError::NonFiniteField));
    }
    let ws = Workspace::build(spec);
    let coeffs = ws.eval_nonlinearity(spec, u.coeffs(), f64::INFINITY, 0.0)?;
    Ok(SpectralField::from_coeffs(spec.grid.clone(), coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lebesgue_norm;
    use crate::semigroup::apply_semigroup;
    use crate::spectral::{make_grid, synth};

    fn power_spec(grid: &Grid, alpha: f64, b: f64, coeff: f64) -> ProblemSpec {
        ProblemSpec::new(grid.clone(), alpha, vec![NonlinearTerm::power(b, coeff)]).unwrap()
    }

    #[test]
    fn pointwise_power_on_constant() {
        let g = make_grid(1, 64, 5.0).unwrap();
        let spec = power_spec(&g, 1.0, 2.0, -1.0);
        let c = synth::constant(&g, 0.7);
        let out = eval_nonlinearity(&spec, &c).unwrap();
        for v in out.values() {
            assert!((v - (-0.7f64.powi(3))).abs() < 1e-12);
        }
    }

    #[test]
    fn convective_cubic_closed_form() {
        // (beta . grad)(sin^3 x) = 3 sin^2 x cos x for beta = (1)
        let g = make_grid(1, 256, std::f64::consts::PI).unwrap();
        let sin_x: Vec<f64> = (0..256).map(|i| g.coord(i).sin()).collect();
        let u = SpectralField::from_values(g.clone(), sin_x);
        let term = NonlinearTerm::power(2.0, 1.0).with_op(Multiplier::Gradient { a: vec![1.0] });
        let spec = ProblemSpec::new(g.clone(), 1.0, vec![term]).unwrap();
        let out = eval_nonlinearity(&spec, &u).unwrap();
        for i in (0..256).step_by(13) {
            let x = g.coord(i);
            let want = 3.0 * x.sin().powi(2) * x.cos();
            assert!(
                (out.values()[i] - want).abs() < 1e-10,
                "x={x}: {} vs {want}",
                out.values()[i]
            );
        }
    }

    #[test]
    fn qg_advection_has_zero_integral() {
        let g = make_grid(2, 64, 6.0).unwrap();
        let theta = synth::gaussian(&g, 0.3, 1.0);
        let spec = ProblemSpec::new(g.clone(), 0.75, vec![NonlinearTerm::qg()]).unwrap();
        let adv = eval_nonlinearity(&spec, &theta).unwrap();
        let integral: f64 = adv.values().iter().sum::<f64>() * g.cell_measure();
        assert!(integral.abs() < 1e-10, "integral {integral}");
    }

    #[test]
    fn duhamel_constant_forcing_closed_form() {
        // F == g: result is the multiplier (1 - e^{-t lambda}) / lambda (t at 0)
        let g = make_grid(1, 256, 10.0).unwrap();
        let alpha = 0.75;
        let force = synth::gaussian(&g, 0.5, 1.0);
        let t = 0.8;
        let mesh: Vec<f64> = (0..=64).map(|i| t * i as f64 / 64.0).collect();
        let history: Vec<(f64, SpectralField)> =
            mesh.iter().map(|&tau| (tau, force.clone())).collect();
        let got = duhamel_term(&history, t, alpha).unwrap();
        let mut want = force.coeffs().to_vec();
        g.for_each_freq(|idx, mag, _| {
            let lam = mag.powf(2.0 * alpha);
            let w = if lam > 0.0 {
                (1.0 - (-t * lam).exp()) / lam
            } else {
                t
            };
            want[idx] *= w;
        });
        let want = SpectralField::from_coeffs(g.clone(), want);
        let diff = got.axpy(1.0, &want, -1.0);
        assert!(lebesgue_norm(&diff, f64::INFINITY).unwrap() < 1e-12);

        // zero forcing gives the zero field
        let zero_hist: Vec<(f64, SpectralField)> = mesh
            .iter()
            .map(|&tau| (tau, SpectralField::zero(g.clone())))
            .collect();
        let z = duhamel_term(&zero_hist, t, alpha).unwrap();
        assert_eq!(lebesgue_norm(&z, f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn duhamel_linear_forcing_closed_form() {
        // F(tau) = tau g: int_0^t e^{-(t-tau) lam} tau d tau
        //        = t/lam - (1 - e^{-t lam})/lam^2 for lam > 0, t^2/2 at lam = 0
        let g = make_grid(1, 128, 8.0).unwrap();
        let alpha = 1.0;
        let base = synth::gaussian(&g, 0.4, 1.0);
        let t = 0.6;
        let mesh: Vec<f64> = (0..=64).map(|i| t * i as f64 / 64.0).collect();
        let history: Vec<(f64, SpectralField)> =
            mesh.iter().map(|&tau| (tau, base.scale(tau))).collect();
        let got = duhamel_term(&history, t, alpha).unwrap();
        let mut want = base.coeffs().to_vec();
        g.for_each_freq(|idx, mag, _| {
            let lam = mag.powf(2.0 * alpha);
            let w = if lam > 0.0 {
                t / lam - (1.0 - (-t * lam).exp()) / (lam * lam)
            } else {
                t * t / 2.0
            };
            want[idx] *= w;
        });
        let want = SpectralField::from_coeffs(g.clone(), want);
        let diff = got.axpy(1.0, &want, -1.0);
        assert!(lebesgue_norm(&diff, f64::INFINITY).unwrap() < 1e-12);
    }

    #[test]
    fn duhamel_coverage_gap() {
        let g = make_grid(1, 64, 5.0).unwrap();
        let f = synth::constant(&g, 1.0);
        let history = vec![(0.0, f.clone()), (0.5, f)];
        assert!(matches!(
            duhamel_term(&history, 1.0, 1.0),
            Err(SolveError::MeshCoverageGap { .. })
        ));
    }

    #[test]
    fn picard_zero_data_and_linear_consistency() {
        let g = make_grid(1, 128, 10.0).unwrap();
        let spec = power_spec(&g, 0.75, 2.0, -1.0);
        let cfg = SolveConfig::new(0.5, 32);

        let traj = picard_solve(&spec, &SpectralField::zero(g.clone()), &cfg).unwrap();
        assert!(traj.norms.linf.iter().all(|v| *v == 0.0));

        // coefficient 0 strips the nonlinearity: trajectory equals the semigroup
        let spec_lin = power_spec(&g, 0.75, 2.0, 0.0);
        let phi = synth::gaussian(&g, 1.0, 1.0);
        let traj = picard_solve(&spec_lin, &phi, &cfg).unwrap();
        for (t, snap) in &traj.snapshots {
            let want = apply_semigroup(&phi, *t, 0.75).unwrap();
            let diff = snap.axpy(1.0, &want, -1.0);
            assert!(lebesgue_norm(&diff, f64::INFINITY).unwrap() < 1e-8);
        }
    }

    #[test]
    fn picard_contracts_on_small_defocusing_run() {
        let g = make_grid(1, 256, 10.0).unwrap();
        let spec = power_spec(&g, 0.75, 2.0, -1.0);
        let phi = synth::gaussian(&g, 1.0, 0.1);
        let mut cfg = SolveConfig::new(0.5, 64);
        cfg.picard_tol = 1e-12;
        let traj = picard_solve(&spec, &phi, &cfg).unwrap();
        assert_eq!(traj.diagnostics.halvings, 0);
        assert!(traj.picard_ratios.len() >= 2);
        for (k, ratio) in traj.picard_ratios.iter().enumerate() {
            if k >= 1 {
                assert!(*ratio < 0.5, "ratio[{k}] = {ratio}");
            }
        }
    }

    #[test]
    fn two_term_additivity_is_bitwise() {
        let g = make_grid(1, 128, 10.0).unwrap();
        let phi = synth::gaussian(&g, 1.0, 0.2);
        let cfg = SolveConfig::new(0.25, 32);
        let one = ProblemSpec::new(g.clone(), 0.75, vec![NonlinearTerm::power(4.0, 1.0)]).unwrap();
        let two = ProblemSpec::new(
            g.clone(),
            0.75,
            vec![NonlinearTerm::power(4.0, 1.0), NonlinearTerm::power(2.0, 0.0)],
        )
        .unwrap();
        let t1 = picard_solve(&one, &phi, &cfg).unwrap();
        let t2 = picard_solve(&two, &phi, &cfg).unwrap();
        for ((_, a), (_, b)) in t1.snapshots.iter().zip(&t2.snapshots) {
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn etd_linear_is_exact_semigroup() {
        let g = make_grid(1, 128, 10.0).unwrap();
        let spec = power_spec(&g, 0.6, 2.0, 0.0);
        let phi = synth::gaussian(&g, 1.0, 1.0);
        let mut cfg = SolveConfig::new(1.0, 64);
        cfg.method = Method::Etd;
        let traj = etd_solve(&spec, &phi, &cfg).unwrap();
        for (t, snap) in &traj.snapshots {
            let want = apply_semigroup(&phi, *t, 0.6).unwrap();
            let diff = snap.axpy(1.0, &want, -1.0);
            assert!(lebesgue_norm(&diff, f64::INFINITY).unwrap() < 1e-12);
        }
    }

    #[test]
    fn etd_self_convergence_is_second_order() {
        let g = make_grid(1, 256, 10.0).unwrap();
        let spec = power_spec(&g, 0.75, 2.0, -1.0);
        let phi = synth::gaussian(&g, 1.0, 0.5);
        let t_final = 0.25;

        let final_field = |m: usize| {
            let mut cfg = SolveConfig::new(t_final, m);
            cfg.method = Method::Etd;
            let traj = etd_solve(&spec, &phi, &cfg).unwrap();
            let (t, f) = traj.snapshots.last().unwrap().clone();
            assert!((t - t_final).abs() < 1e-12);
            f
        };
        // halving h quarters the gap between consecutive refinements
        let fields: Vec<_> = [64usize, 128, 256, 512].iter().map(|&m| final_field(m)).collect();
        let gaps: Vec<f64> = fields
            .windows(2)
            .map(|w| lebesgue_norm(&w[0].axpy(1.0, &w[1], -1.0), f64::INFINITY).unwrap())
            .collect();
        let rate1 = (gaps[0] / gaps[1]).log2();
        let rate2 = (gaps[1] / gaps[2]).log2();
        assert!(
            (rate1 - 2.0).abs() < 0.3 && (rate2 - 2.0).abs() < 0.3,
            "rates {rate1:.3}, {rate2:.3} ({gaps:?})"
        );
    }

    #[test]
    fn ode_blowup_time_recovered() {
        // constant field, focusing b = 2: u' = u^3, T* = 1/(2 u0^2) = 0.5
        let g = make_grid(1, 64, 1.0).unwrap();
        let spec = power_spec(&g, 1.0, 2.0, 1.0);
        let phi = synth::constant(&g, 1.0);
        let mut cfg = SolveConfig::new(1.0, 256);
        cfg.method = Method::Etd;
        cfg.blowup_factor = 1e8;
        let traj = etd_solve(&spec, &phi, &cfg).unwrap();
        assert_ne!(traj.diagnostics.termination, Termination::Completed);
        let est = traj.blowup.as_ref().expect("blow-up estimate");
        assert!(
            (est.t_star - 0.5).abs() < 0.01,
            "T* = {} (want 0.5)",
            est.t_star
        );
        assert!(
            (est.fitted_rate_inf - 0.5).abs() < 0.025,
            "rate {} (want 1/b = 0.5)",
            est.fitted_rate_inf
        );
    }

    #[test]
    fn defocusing_run_has_no_blowup_signature() {
        let g = make_grid(1, 128, 10.0).unwrap();
        let spec = power_spec(&g, 1.0, 2.0, -1.0);
        let phi = synth::gaussian(&g, 1.0, 1.0);
        let mut cfg = SolveConfig::new(0.5, 64);
        cfg.method = Method::Etd;
        let traj = etd_solve(&spec, &phi, &cfg).unwrap();
        assert_eq!(traj.diagnostics.termination, Termination::Completed);
        assert!(matches!(
            detect_blowup(&traj, 2.0, 2.0),
            Err(SolveError::InsufficientGrowth)
        ));
    }

    #[test]
    fn self_similar_profile_homogeneity() {
        let g = make_grid(1, 512, 20.0).unwrap();
        // alpha = 1, b = 4: profile (x^2 + eps^2)^{-1/4}, homogeneity 1/2 < 1
        let f = self_similar_data(4.0, 1.0, &g, 1e-3, 8.0).unwrap();
        // lambda^{2a/b} f(lambda x) / f(x) -> 1 as eps -> 0: at eps = 1e-3,
        // x = 1, lambda = 2 the defect is below 1e-5
        let profile = |x: f64| (x * x + 1e-6f64).powf(-0.25);
        let lhs = 2f64.powf(0.5) * profile(2.0);
        let rhs = profile(1.0);
        assert!((lhs / rhs - 1.0).abs() < 1e-5);
        // b = 1, alpha = 1, n = 1: homogeneity 2 >= 1, not integrable
        assert!(matches!(
            self_similar_data(1.0, 1.0, &g, 1e-3, 8.0),
            Err(SolveError::NonIntegrableProfile { .. })
        ));
        assert!(f.is_finite());
    }

    #[test]
    fn scaling_orbit_identity_and_linear() {
        let g = make_grid(1, 128, 10.0).unwrap();
        let phi = synth::gaussian(&g, 0.5, 0.3);
        let spec = power_spec(&g, 0.75, 2.0, -1.0);
        let cfg = SolveConfig::new(0.25, 32);
        let r = scaling_orbit_check(&spec, &phi, 1.0, &cfg).unwrap();
        assert_eq!(r, 0.0);

        let lin = power_spec(&g, 0.75, 2.0, 0.0);
        let r = scaling_orbit_check(&lin, &phi, 2.0, &cfg).unwrap();
        assert!(r < 1e-10, "linear residual {r}");

        assert!(matches!(
            scaling_orbit_check(&lin, &phi, 3.0, &cfg),
            Err(SolveError::BadConfig(_))
        ));
    }

    #[test]
    fn grading_rule() {
        assert_eq!(suggested_grading(8.0, 2.0), 8.0 / 5.0);
        assert_eq!(suggested_grading(2.0, 2.0), 1.0);
        assert_eq!(suggested_grading(f64::INFINITY, 2.0), 1.0);
    }
}
