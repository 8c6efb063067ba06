//! Biorthogonal families built from entire functions of exponential type.
//!
//! The Weierstrass product f_k vanishes at every Λ_n except Λ_k. Multiplying
//! f_k(−iz) by the mollifier P_{N,T} gives an entire function G_k that is
//! square integrable on the real axis. Its inverse Fourier transform q_k is
//! supported in [0, T] and is biorthogonal to the exponentials e^{−Λ_n t}.
//!
//! The synthesis is numerically expensive. The normalizer f_k(Λ_k)P(i Re Λ_k)
//! shrinks quickly with |Λ_k|, so cancellation in the Fourier integral eats
//! precision. Keep k and |Λ_k| moderate and use the Gram family for anything
//! larger.

mod mollifier;
mod product;
mod synthesis;

pub use mollifier::{c_nt, check_mollifier, choose_n, inverse_square_tail, mollifier, Mollifier, MollifierCheck, MollifierConfig};
pub use product::{fit_growth_constant, interpolation_constants, product_fk, FkValue, ProductFk};
pub use synthesis::{construct_gk, synthesize_qk, GkEvaluator, SynthesisConfig, SynthesizedFamily, SynthesizedMember};

use thiserror::Error;

use crate::mp_numerics::NumericsError;
use crate::sequence_core::SequenceError;

#[derive(Debug, Error)]
pub enum PaleyWienerError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("product tail not summable to tolerance on radius {radius}: bound {bound:e}")]
    TailNotSummable { radius: f64, bound: f64 },
    #[error("|z| = {z} outside the evaluator radius {radius}")]
    OutsideRadius { z: f64, radius: f64 },
    #[error("normalizer f_k(Λ_k)·P(i Re Λ_k) for k = {k} is degenerate at working precision (log modulus {log_abs})")]
    DegenerateNormalizer { k: usize, log_abs: f64 },
    #[error("no Fourier window up to {x_max} brings the tail of |G_{k}| below {tol:e} (estimate {estimate:e})")]
    WindowTooSmall { k: usize, x_max: f64, tol: f64, estimate: f64 },
    #[error("I/O failure: {0}")]
    Io(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
