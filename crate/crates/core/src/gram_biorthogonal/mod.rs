//! Minimal-norm biorthogonal families to e_k(t) = e^{−Λ_k t} on L²(0, T).
//!
//! The Gram matrix G_{kn} = ⟨e_k, e_n⟩ is factored incrementally, so the
//! truncated norms ‖s_k^{(M)}‖² = (G_M⁻¹)_{kk} are available for every
//! order M from a single factorization. Inner products conjugate the
//! second argument.

use rayon::prelude::*;
use rug::{Complex, Float};
use serde::Serialize;
use thiserror::Error;

use crate::mp_numerics::{integrate, LdlFactor, NumericsError, PrecisionContext};
use crate::sequence_core::{EigenSequence, SequenceError};

mod truncation;

pub use truncation::{converge_many, converge_truncation, extrapolate_to_zero, tail_sums, HistoryPoint, Plateau, TruncationConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GramError {
    #[error("Λ_{k} + conj(Λ_{n}) vanishes")]
    ZeroDenominator { k: usize, n: usize },
    #[error("Gram matrix of order {order} is numerically singular at {bits} bits")]
    NotPositiveDefinite { order: usize, bits: u32 },
    #[error("no plateau for k = {k} up to M = {m_max}")]
    NoPlateau { k: usize, m_max: usize, history: Vec<HistoryPoint> },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

/// ∫₀ᵀ e^{−λ_k t}·conj(e^{−λ_n t}) dt = (1 − e^{−sT})/s with s = λ_k + conj(λ_n).
pub fn gram_entry(lam_k: &Complex, lam_n: &Complex, t: &Float, ctx: PrecisionContext) -> Option<Complex> {
    let bits = ctx.bits();
    let s = Complex::with_val(bits, lam_k + Complex::with_val(bits, lam_n.conj_ref()));
    if s.real().is_zero() && s.imag().is_zero() {
        return None;
    }
    if s.imag().is_zero() {
        let st = Float::with_val(bits, s.real() * t);
        let v = -(-st).exp_m1() / s.real();
        return Some(ctx.complex(&v));
    }
    let e = exp_neg(&s, t, bits);
    Some((1 - e) / s)
}

/// e^{−λt} at the given precision.
pub fn exp_neg(lam: &Complex, t: &Float, bits: u32) -> Complex {
    let z = -Complex::with_val(bits, lam * t);
    z.exp()
}

/// Incrementally factored Gram matrix of the first `order()` exponentials.
#[derive(Debug, Clone)]
pub struct GramSystem {
    sequence: EigenSequence,
    t: f64,
    ctx: PrecisionContext,
    terms: Vec<Complex>,
    factor: LdlFactor,
    diagonal: Vec<Float>,
}

impl GramSystem {
    pub fn new(sequence: &EigenSequence, t: f64, ctx: PrecisionContext) -> Result<Self, GramError> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(GramError::InvalidInput(format!("T = {t} must be positive")));
        }
        Ok(Self { sequence: sequence.clone(), t, ctx, terms: Vec::new(), factor: LdlFactor::new(ctx), diagonal: Vec::new() })
    }

    /// Factored system of order m.
    pub fn build(sequence: &EigenSequence, m: usize, t: f64, ctx: PrecisionContext) -> Result<Self, GramError> {
        let mut g = Self::new(sequence, t, ctx)?;
        g.extend_to(m)?;
        Ok(g)
    }

    pub fn order(&self) -> usize {
        self.factor.order()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn precision(&self) -> PrecisionContext {
        self.ctx
    }

    pub fn sequence(&self) -> &EigenSequence {
        &self.sequence
    }

    pub fn terms(&self) -> &[Complex] {
        &self.terms[..self.order()]
    }

    /// Adds rows until the order reaches m. A pivot that keeps fewer than
    /// a quarter of the working bits is reported as singular.
    pub fn extend_to(&mut self, m: usize) -> Result<(), GramError> {
        if m <= self.order() {
            return Ok(());
        }
        if self.terms.len() < m {
            self.terms = self.sequence.terms(m, self.ctx)?;
        }
        let bits = self.ctx.bits();
        let t = self.ctx.float(self.t);
        let mut floor = self.ctx.float(1);
        floor >>= bits - bits / 4;
        for i in self.order()..m {
            let row: Vec<Complex> = (0..=i)
                .into_par_iter()
                .map(|n| gram_entry(&self.terms[i], &self.terms[n], &t, self.ctx).ok_or(GramError::ZeroDenominator { k: i + 1, n: n + 1 }))
                .collect::<Result<_, _>>()?;
            let diag = Float::with_val(bits, row[i].real());
            let singular = GramError::NotPositiveDefinite { order: i + 1, bits };
            match self.factor.push_row(&row) {
                Err(NumericsError::NotPositiveDefinite { .. }) => return Err(singular),
                Err(e) => return Err(e.into()),
                Ok(()) => {}
            }
            if self.factor.pivots()[i] < Float::with_val(bits, &diag * &floor) {
                self.factor.truncate(i);
                return Err(singular);
            }
            self.diagonal.push(diag);
        }
        Ok(())
    }

    /// (G_M⁻¹)_{kk} for every M in k..=order (k is 1-based).
    pub fn inverse_diagonal_profile(&self, k: usize) -> Vec<Float> {
        self.factor.inverse_diagonal_profile(k - 1)
    }

    /// Diagonal of G⁻¹ at the full order.
    pub fn inverse_diagonal(&self) -> Vec<Float> {
        self.factor.inverse_diagonal(self.order())
    }

    pub fn factor(&self) -> &LdlFactor {
        &self.factor
    }
}

/// The family {s_k} biorthogonal to the first M exponentials, with
/// s_k = Σ_n (G⁻¹)_{kn} e_n.
#[derive(Debug, Clone)]
pub struct MinimalFamily {
    pub label: String,
    pub t: f64,
    pub order: usize,
    pub bits: u32,
    pub terms: Vec<Complex>,
    pub coefficients: Vec<Vec<Complex>>,
    pub norms: Vec<Float>,
    pub distances: Vec<Float>,
}

/// Export form of a [`MinimalFamily`].
#[derive(Debug, Clone, Serialize)]
pub struct FamilyRecord {
    pub sequence: String,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub precision_bits: u32,
    pub norms: Vec<f64>,
    pub distances: Vec<f64>,
    pub residual_max: Option<f64>,
}

impl MinimalFamily {
    pub fn norm(&self, k: usize) -> &Float {
        &self.norms[k - 1]
    }

    pub fn record(&self, residual_max: Option<f64>) -> FamilyRecord {
        FamilyRecord {
            sequence: self.label.clone(),
            t: self.t,
            m: self.order,
            precision_bits: self.bits,
            norms: self.norms.iter().map(Float::to_f64).collect(),
            distances: self.distances.iter().map(Float::to_f64).collect(),
            residual_max,
        }
    }
}

/// Builds the minimal family of order m at the given precision.
pub fn minimal_family(seq: &EigenSequence, m: usize, t: f64, ctx: PrecisionContext) -> Result<MinimalFamily, GramError> {
    if m == 0 {
        return Err(GramError::InvalidInput("truncation order must be positive".into()));
    }
    let g = GramSystem::build(seq, m, t, ctx)?;
    let coefficients = g.factor.inverse(m);
    let norms: Vec<Float> = coefficients.iter().enumerate().map(|(k, row)| Float::with_val(ctx.bits(), row[k].real()).sqrt()).collect();
    let distances = norms.iter().map(|n| Float::with_val(ctx.bits(), n.recip_ref())).collect();
    Ok(MinimalFamily {
        label: seq.label().to_string(),
        t,
        order: m,
        bits: ctx.bits(),
        terms: g.terms().to_vec(),
        coefficients,
        norms,
        distances,
    })
}

/// s_k(t) for 1-based k.
pub fn evaluate_family(fam: &MinimalFamily, k: usize, t: &Float) -> Complex {
    let bits = fam.bits;
    let mut acc = Complex::new(bits);
    for (c, lam) in fam.coefficients[k - 1].iter().zip(&fam.terms) {
        let e = exp_neg(lam, t, bits);
        acc += c * e;
    }
    acc
}

/// max_{k,n} |⟨e_n, s_k⟩ − δ_{kn}|, with the inner products computed by
/// composite Gauss–Legendre quadrature.
pub fn residual_check(fam: &MinimalFamily, panels: usize, nodes: usize) -> Result<Float, GramError> {
    let bits = fam.bits;
    let ctx = PrecisionContext::new(bits)?;
    let zero = ctx.zero();
    let t_end = ctx.float(fam.t);
    let m = fam.order;
    let worst: Vec<Float> = (1..=m)
        .into_par_iter()
        .map(|k| -> Result<Float, GramError> {
            let mut worst = ctx.zero();
            for n in 1..=m {
                let lam = &fam.terms[n - 1];
                let q = integrate(
                    |t: &Float| {
                        let e = exp_neg(lam, t, bits);
                        let s = evaluate_family(fam, k, t);
                        e * s.conj()
                    },
                    &zero,
                    &t_end,
                    panels,
                    nodes,
                )?;
                let target: u32 = if k == n { 1 } else { 0 };
                let diff: Complex = q.value - target;
                let dev = Float::with_val(bits, diff.abs_ref());
                if dev > worst {
                    worst = dev;
                }
            }
            Ok(worst)
        })
        .collect::<Result<_, _>>()?;
    Ok(worst.into_iter().fold(ctx.zero(), |a, b| if b > a { b } else { a }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example_sequences::{gen_perturbed, gen_quadratic};
    use crate::sequence_core::ExplicitSource;
    use proptest::prelude::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(256).unwrap()
    }

    fn explicit(terms: &[f64]) -> EigenSequence {
        EigenSequence::new("explicit", ExplicitSource::real(terms).unwrap())
    }

    #[test]
    fn entry_examples() {
        let c = ctx();
        let one = c.float(1);
        let g = gram_entry(&c.complex(1), &c.complex(1), &one, c).unwrap();
        assert!((g.real().to_f64() - 0.432_332_358_381_693_6).abs() < 1e-15);
        let g = gram_entry(&c.complex(1), &c.complex(4), &one, c).unwrap();
        assert!((g.real().to_f64() - 0.198_652_410_600_182_9).abs() < 1e-15);
        let z = Complex::with_val(256, (1, 1));
        let g = gram_entry(&z, &z, &one, c).unwrap();
        assert!((g.real().to_f64() - 0.432_332_358_381_693_6).abs() < 1e-15 && g.imag().is_zero());
        assert!(gram_entry(&Complex::with_val(256, (1, 1)), &Complex::with_val(256, (-1, 1)), &one, c).is_none());
    }

    #[test]
    fn entry_matches_quadrature() {
        let c = ctx();
        let t = c.float(1.3);
        let a = Complex::with_val(256, (2, 3));
        let b = Complex::with_val(256, (5, -1));
        let q = integrate(
            |x: &Float| {
                let ea = exp_neg(&a, x, 256);
                let eb = exp_neg(&b, x, 256);
                ea * eb.conj()
            },
            &c.zero(),
            &t,
            8,
            40,
        )
        .unwrap();
        let closed = gram_entry(&a, &b, &t, c).unwrap();
        assert!(Float::with_val(256, (closed - q.value).abs_ref()).to_f64() < 1e-50);
    }

    #[test]
    fn single_and_pair_families() {
        let fam = minimal_family(&explicit(&[1.0]), 1, 1.0, ctx()).unwrap();
        assert!((fam.norm(1).to_f64() - 1.520_866_623_178_815).abs() < 1e-12);
        let fam = minimal_family(&explicit(&[1.0, 4.0]), 2, 1.0, ctx()).unwrap();
        let d2 = fam.distances[0].clone().square().to_f64();
        // mpmath oracle: G₁₁ − G₁₂²/G₂₂ and its reciprocal square root
        assert!((d2 - 0.116_524_174_640_353_37).abs() < 1e-15, "{d2}");
        assert!((fam.norm(1).to_f64() - 2.929_489_746_555_824_7).abs() < 1e-14);
        let prod = Float::with_val(256, &fam.norms[1] * &fam.distances[1]);
        assert!((prod - 1u32).abs() < 1e-70);
    }

    #[test]
    fn biorthogonality_by_quadrature() {
        let seq = gen_perturbed(0.5).unwrap();
        let c = PrecisionContext::new(512).unwrap();
        let fam = minimal_family(&seq, 10, 1.0, c).unwrap();
        let r = residual_check(&fam, 8, 48).unwrap();
        assert!(r.to_f64() < 1e-20, "{}", r.to_f64());
        let single = minimal_family(&explicit(&[1.0]), 1, 1.0, ctx()).unwrap();
        assert!(residual_check(&single, 4, 20).unwrap().to_f64() < 1e-60);
    }

    #[test]
    fn plateau_is_monotone_and_stable() {
        let seq = gen_perturbed(0.5).unwrap();
        let cfg = TruncationConfig { rtol: 1e-8, ..Default::default() };
        let lo = converge_truncation(&seq, 3, 1.0, cfg, PrecisionContext::new(512).unwrap()).unwrap();
        let hi = converge_truncation(&seq, 3, 1.0, cfg, PrecisionContext::new(1024).unwrap()).unwrap();
        for w in lo.profile.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let rel = ((lo.norm.to_f64() - hi.norm.to_f64()) / hi.norm.to_f64()).abs();
        assert!(rel < 1e-8, "{rel}");
        assert_eq!(lo.norm_at(lo.m_star), Some(&lo.truncated));
        // degree-10 extrapolation from orders ≤ 196 at 1536 bits: 8.12817679766e10
        assert!((lo.norm.to_f64() / 8.128_176_797_7e10 - 1.0).abs() < 1e-7);
        let ahead = lo.estimate_at(lo.m_star + 10).unwrap();
        assert!((ahead.to_f64() / lo.norm.to_f64() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn short_explicit_sequences_report_no_plateau() {
        let seq = explicit(&[1.0, 4.0, 9.0]);
        let err = converge_truncation(&seq, 1, 1.0, TruncationConfig::default(), ctx()).unwrap_err();
        assert!(matches!(err, GramError::NoPlateau { m_max: 3, .. }));
    }

    #[test]
    fn norms_shrink_as_time_grows() {
        let seq = gen_quadratic(1.0, 0.0).unwrap();
        let mut prev = f64::INFINITY;
        for t in [0.3, 0.5, 1.0, 2.0] {
            let fam = minimal_family(&seq, 12, t, ctx()).unwrap();
            let n = fam.norm(2).to_f64();
            assert!(n < prev);
            prev = n;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn truncated_norms_nondecreasing(gaps in proptest::collection::vec(0.05f64..3.0, 2..14), t in 0.2f64..2.0) {
            let mut acc = 0.5;
            let terms: Vec<f64> = gaps.iter().map(|g| { acc += g; acc }).collect();
            let g = GramSystem::build(&explicit(&terms), terms.len(), t, PrecisionContext::new(512).unwrap()).unwrap();
            for k in 1..=terms.len() {
                let p = g.inverse_diagonal_profile(k);
                for w in p.windows(2) {
                    prop_assert!(w[1] >= w[0]);
                }
            }
        }
    }
}
