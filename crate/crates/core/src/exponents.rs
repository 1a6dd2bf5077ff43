//! Admissible-triplet calculus and critical exponents, in exact rational
//! arithmetic with a symbolic infinity. Predicates never compare floats.

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ExponentError {
    ContextMissing,
    EndpointRejected { what: &'static str },
    OrderOutOfRange { d: Rational64, two_alpha: Rational64 },
    OrderedPair { p: Exponent, r: Exponent },
    NotPositive { what: &'static str },
}

impl fmt::Display for ExponentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ContextMissing => write!(f, "triplet context (n, alpha) not set"),
            Self::EndpointRejected { what } => write!(f, "endpoint rejected: {what}"),
            Self::OrderOutOfRange { d, two_alpha } => {
                write!(f, "operator order {d} outside [0, {two_alpha})")
            }
            Self::OrderedPair { p, r } => write!(f, "need r <= p, got r = {r}, p = {p}"),
            Self::NotPositive { what } => write!(f, "{what} must be positive"),
        }
    }
}

impl std::error::Error for ExponentError {}

/// Extended-real exponent: a rational or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    Finite(Rational64),
    Infinity,
}

impl Exponent {
    pub fn rational(num: i64, den: i64) -> Self {
        Self::Finite(Rational64::new(num, den))
    }

    pub fn integer(n: i64) -> Self {
        Self::Finite(Rational64::from_integer(n))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinity)
    }

    /// 1/x with 1/inf = 0.
    pub fn recip(&self) -> Rational64 {
        match self {
            Self::Finite(r) => {
                assert!(!r.is_zero(), "reciprocal of zero exponent");
                r.recip()
            }
            Self::Infinity => Rational64::zero(),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Self::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
            Self::Infinity => f64::INFINITY,
        }
    }

    fn le(&self, other: &Exponent) -> bool {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => a <= b,
            (Self::Finite(_), Self::Infinity) => true,
            (Self::Infinity, Self::Finite(_)) => false,
            (Self::Infinity, Self::Infinity) => true,
        }
    }

    fn gt_one(&self) -> bool {
        match self {
            Self::Finite(r) => *r > Rational64::one(),
            Self::Infinity => true,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(r) => write!(f, "{r}"),
            Self::Infinity => write!(f, "inf"),
        }
    }
}

/// Dimension and dissipation order the triplet relations are taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Context {
    pub n: i64,
    pub alpha: Rational64,
}

impl Context {
    pub fn new(n: i64, alpha: Rational64) -> Self {
        assert!(n >= 1 && alpha.is_positive());
        Self { n, alpha }
    }

    fn n_over_2alpha(&self) -> Rational64 {
        Rational64::from_integer(self.n) / (Rational64::from_integer(2) * self.alpha)
    }
}

/// Space-time exponent triplet (q, p, r).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub q: Exponent,
    pub p: Exponent,
    pub r: Exponent,
}

impl Triplet {
    pub fn new(q: Exponent, p: Exponent, r: Exponent) -> Self {
        Self { q, p, r }
    }

    /// Scaling relation 1/q = (n / 2 alpha)(1/r - 1/p), exactly.
    pub fn scaling_relation_holds(&self, ctx: &Context) -> bool {
        self.q.recip() == ctx.n_over_2alpha() * (self.r.recip() - self.p.recip())
    }
}

/// Admissible triplet: scaling relation, 1 < r <= p, and
/// p < n r / (n - 2 alpha) when n > 2 alpha (p finite always; the p = inf
/// endpoint is rejected, see the crate notes on endpoints).
pub fn is_admissible(t: &Triplet, ctx: &Context) -> bool {
    if t.p.is_infinite() || !t.r.gt_one() || !t.r.le(&t.p) {
        return false;
    }
    if !t.scaling_relation_holds(ctx) {
        return false;
    }
    let n = Rational64::from_integer(ctx.n);
    let two_alpha = Rational64::from_integer(2) * ctx.alpha;
    if n > two_alpha {
        let (Exponent::Finite(p), Exponent::Finite(r)) = (t.p, t.r) else {
            return false;
        };
        let bound = n * r / (n - two_alpha);
        if p >= bound {
            return false;
        }
    }
    true
}

/// Generalized admissible triplet: same relation, upper bound
/// p < n r / (n - 2 alpha r) active only when n > 2 alpha r.
pub fn is_generalized_admissible(t: &Triplet, ctx: &Context) -> bool {
    if t.p.is_infinite() || !t.r.gt_one() || !t.r.le(&t.p) {
        return false;
    }
    if !t.scaling_relation_holds(ctx) {
        return false;
    }
    let n = Rational64::from_integer(ctx.n);
    let (Exponent::Finite(p), Exponent::Finite(r)) = (t.p, t.r) else {
        return false;
    };
    let two_alpha_r = Rational64::from_integer(2) * ctx.alpha * r;
    if n > two_alpha_r {
        let bound = n * r / (n - two_alpha_r);
        if p >= bound {
            return false;
        }
    }
    true
}

/// q determined by (p, r) through the scaling relation; infinity when p = r.
pub fn q_from(p: Exponent, r: Exponent, ctx: &Context) -> Result<Exponent, ExponentError> {
    if !r.le(&p) {
        return Err(ExponentError::OrderedPair { p, r });
    }
    let inv = ctx.n_over_2alpha() * (r.recip() - p.recip());
    if inv.is_zero() {
        Ok(Exponent::Infinity)
    } else {
        Ok(Exponent::Finite(inv.recip()))
    }
}

/// The critical Lebesgue indices and scaling quantities of the problem
/// `u_t + (-Lap)^alpha u = Q(D) f(u)` with growth b and operator order d.
#[derive(Debug, Clone)]
pub struct CriticalExponents {
    /// n b / (2 alpha)
    pub r0: Option<Rational64>,
    /// n b / (2 alpha - 1), defined for 2 alpha > 1
    pub r1: Option<Rational64>,
    /// n b / (2 alpha - d)
    pub rd: Option<Rational64>,
    /// 2 alpha / b - n / p, when p given
    pub sigma: Option<Rational64>,
    /// 1/b - d/(2 b alpha) - n/(2 r alpha), when r given
    pub blowup_rate: Option<Rational64>,
}

pub fn critical_exponents(
    n: i64,
    alpha: Rational64,
    b: Rational64,
    d: Rational64,
    p: Option<Rational64>,
    r: Option<Rational64>,
) -> Result<CriticalExponents, ExponentError> {
    if !b.is_positive() {
        return Err(ExponentError::NotPositive { what: "growth b" });
    }
    if !alpha.is_positive() {
        return Err(ExponentError::NotPositive { what: "alpha" });
    }
    let two_alpha = Rational64::from_integer(2) * alpha;
    if d.is_negative() || d >= two_alpha {
        return Err(ExponentError::OrderOutOfRange { d, two_alpha });
    }
    let nn = Rational64::from_integer(n);
    let r0 = Some(nn * b / two_alpha);
    let r1 = if two_alpha > Rational64::one() {
        Some(nn * b / (two_alpha - Rational64::one()))
    } else {
        None
    };
    let rd = Some(nn * b / (two_alpha - d));
    let sigma = p.map(|p| two_alpha / b - nn / p);
    let blowup_rate = r.map(|r| b.recip() - d / (two_alpha * b) - nn / (two_alpha * r));
    Ok(CriticalExponents {
        r0,
        r1,
        rd,
        sigma,
        blowup_rate,
    })
}

/// p-interval used by the small-data global theory:
/// `(max(r_d, b+1), r_d (b+1))`, with the lower endpoint attained when
/// r_d > b + 1 (the constraint there is `p >= r_d`).
#[derive(Debug, Clone, PartialEq)]
pub enum Window {
    Empty {
        reason: String,
    },
    Range {
        lo: Rational64,
        hi: Rational64,
        lo_inclusive: bool,
    },
}

pub fn smallness_window(
    n: i64,
    alpha: Rational64,
    b: Rational64,
    d: Rational64,
) -> Result<Window, ExponentError> {
    let ce = critical_exponents(n, alpha, b, d, None, None)?;
    let rd = ce.rd.unwrap();
    if rd <= Rational64::one() {
        return Ok(Window::Empty {
            reason: format!("critical exponent r_d = {rd} is not > 1"),
        });
    }
    let b1 = b + Rational64::one();
    let lo = rd.max(b1);
    let hi = rd * b1;
    if lo >= hi {
        return Ok(Window::Empty {
            reason: format!("endpoints cross: max(r_d, b+1) = {lo} >= r_d (b+1) = {hi}"),
        });
    }
    Ok(Window::Range {
        lo,
        hi,
        lo_inclusive: rd > b1,
    })
}

/// Interpolation parameter `theta = (p - r(b+1)) / ((b+1)(p - r))` of the
/// two-norm branch; satisfies `1/(r(b+1)) = theta/r + (1-theta)/p` identically.
pub fn interpolation_theta(p: Rational64, r: Rational64, b: Rational64) -> Rational64 {
    let b1 = b + Rational64::one();
    (p - r * b1) / (b1 * (p - r))
}
