use std::fmt;
use std::str::FromStr;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use super::quadratic::QuadraticSource;
use super::ExampleError;
use crate::mp_numerics::PrecisionContext;
use crate::sequence_core::{merge_increasing, ClassParameters, EigenSequence};

/// The ratio d, either as an exact fraction `"p/q"` or as a float.
///
/// For a fraction the irrationality of √d is decided exactly. A float is
/// converted to its exact binary value, and coincidences k² = d·n² are
/// only ruled out for n up to the check range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DirichletRatio {
    Exact(String),
    Float(f64),
}

impl From<f64> for DirichletRatio {
    fn from(d: f64) -> Self {
        Self::Float(d)
    }
}

impl fmt::Display for DirichletRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exact(s) => f.write_str(s),
            Self::Float(d) => write!(f, "{d}"),
        }
    }
}

impl DirichletRatio {
    fn to_rational(&self) -> Result<Rational, ExampleError> {
        let bad = || ExampleError::InvalidParameter(format!("d = {self} must be a positive number or fraction"));
        let d = match self {
            Self::Exact(s) => Rational::from_str(s.trim()).map_err(|_| bad())?,
            Self::Float(x) => Rational::from_f64(*x).ok_or_else(bad)?,
        };
        if d <= 0 {
            return Err(bad());
        }
        Ok(d)
    }
}

/// √d in lowest terms when it is rational.
fn rational_sqrt(d: &Rational) -> Option<(Integer, Integer)> {
    let (num, den) = (d.numer(), d.denom());
    if num.is_perfect_square() && den.is_perfect_square() {
        Some((num.clone().sqrt(), den.clone().sqrt()))
    } else {
        None
    }
}

/// The merged sequence {k²} ∪ {d·k²} with p₀ = 1, p₁ = p₂ = p = 1 + 1/√d,
/// α = q = 2, ρ = (5/8)/p² and ν = (8/3)/p².
pub fn gen_dirichlet_pair(d: impl Into<DirichletRatio>, check_range: usize, ctx: PrecisionContext) -> Result<EigenSequence, ExampleError> {
    let ratio = d.into();
    let dq = ratio.to_rational()?;
    if let Some((k, n)) = rational_sqrt(&dq) {
        let in_range = n.to_usize().is_some_and(|n| n <= check_range);
        if matches!(ratio, DirichletRatio::Exact(_)) || in_range {
            let k = k.to_u64().unwrap_or(u64::MAX);
            let n = n.to_u64().unwrap_or(u64::MAX);
            return Err(ExampleError::RationalRootCollision { k, n });
        }
    }
    let d_f = dq.to_f64();
    let squares = EigenSequence::new("k²", QuadraticSource { a: Rational::from(1), omega: Rational::new() });
    let scaled = EigenSequence::new(format!("{ratio}·k²"), QuadraticSource { a: dq, omega: Rational::new() });
    let merged = merge_increasing(&squares, &scaled, check_range, ctx)?;
    let p = 1.0 + 1.0 / d_f.sqrt();
    let params = ClassParameters::new(0.0, 0.625 / (p * p), 2, 1.0, p, p, 2.0, (8.0 / 3.0) / (p * p));
    Ok(merged.with_params(params).with_label(format!("dirichlet_pair(d={ratio})")))
}
