//! Extended-precision scalars, Hermitian LDLᴴ factorization and composite
//! Gauss–Legendre quadrature.
//!
//! Everything here is built on MPFR/MPC through [`rug`]. A
//! [`PrecisionContext`] is a plain value carrying the mantissa width; it is
//! passed to every routine, so running the same computation at twice the
//! precision is a one-argument change.

mod linalg;
mod quadrature;
mod special;

pub use linalg::{
    hermitian_inverse_diagonal, largest_eigenvalue, EigenEstimate, EigenMethod, HermitianMatrix,
    LdlFactor,
};
pub use quadrature::{composite_rule, gauss_legendre, integrate, CompositeRule, GaussLegendreRule, Quadrature};
pub use special::{hurwitz_zeta, log_cos_coefficients};

use rug::float::Constant;
use rug::{Assign, Complex, Float};
use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("mantissa width {0} is below the supported minimum of 64 bits")]
    InvalidPrecision(u32),
    #[error("matrix is not Hermitian: entry ({row}, {col}) differs from the conjugate of its mirror")]
    NotHermitian { row: usize, col: usize },
    #[error("matrix is not positive definite at working precision: pivot {index} = {pivot:e}")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("integrand returned a non-finite value at t = {at}")]
    NonFinite { at: f64 },
    #[error("invalid quadrature request: {0}")]
    InvalidQuadrature(String),
    #[error("power iteration stalled after {iterations} iterations (residual {residual:e})")]
    PowerIterationStall { iterations: usize, residual: f64 },
}

/// Mantissa width used by every extended-precision computation.
///
/// Rounding is always round-to-nearest, ties to even (the MPFR default).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct PrecisionContext {
    mantissa_bits: u32,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self { mantissa_bits: Self::DEFAULT_BITS }
    }
}

impl PrecisionContext {
    /// Working precision used when nothing else is requested.
    pub const DEFAULT_BITS: u32 = 512;
    /// Smallest accepted mantissa width.
    pub const MIN_BITS: u32 = 64;

    pub fn new(mantissa_bits: u32) -> Result<Self, NumericsError> {
        if mantissa_bits < Self::MIN_BITS {
            return Err(NumericsError::InvalidPrecision(mantissa_bits));
        }
        Ok(Self { mantissa_bits })
    }

    pub fn bits(&self) -> u32 {
        self.mantissa_bits
    }

    /// The same context with twice the mantissa width.
    pub fn doubled(&self) -> Self {
        Self { mantissa_bits: self.mantissa_bits * 2 }
    }

    pub fn float<T>(&self, value: T) -> Float
    where
        Float: Assign<T>,
    {
        Float::with_val(self.mantissa_bits, value)
    }

    pub fn complex<T>(&self, value: T) -> Complex
    where
        Complex: Assign<T>,
    {
        Complex::with_val(self.mantissa_bits, value)
    }

    pub fn zero(&self) -> Float {
        Float::new(self.mantissa_bits)
    }

    pub fn czero(&self) -> Complex {
        Complex::new(self.mantissa_bits)
    }

    pub fn pi(&self) -> Float {
        Float::with_val(self.mantissa_bits, Constant::Pi)
    }

    /// Unit roundoff 2^{-bits}.
    pub fn epsilon(&self) -> Float {
        let mut e = Float::with_val(self.mantissa_bits, 1);
        e >>= self.mantissa_bits;
        e
    }

    /// 2^{-bits/2}: the default relative tolerance for quantities that lose
    /// half of the mantissa to conditioning.
    pub fn half_epsilon(&self) -> Float {
        let mut e = Float::with_val(self.mantissa_bits, 1);
        e >>= self.mantissa_bits / 2;
        e
    }

    /// Number of significant decimal digits carried by this context.
    pub fn decimal_digits(&self) -> usize {
        (self.mantissa_bits as f64 * std::f64::consts::LOG10_2).floor() as usize
    }
}

/// Relative difference |a − b| / max(|a|, |b|), zero when both vanish.
pub fn relative_difference(a: &Float, b: &Float) -> Float {
    let prec = a.prec().max(b.prec());
    let diff = Float::with_val(prec, a - b).abs();
    let scale = Float::with_val(prec, a.abs_ref()).max(&Float::with_val(prec, b.abs_ref()));
    if scale.is_zero() {
        return Float::new(prec);
    }
    diff / scale
}

/// Formats a value with the number of digits its precision supports.
pub fn format_float(x: &Float) -> String {
    let digits = (x.prec() as f64 * std::f64::consts::LOG10_2).floor() as usize;
    x.to_string_radix(10, Some(digits.max(1)))
}
