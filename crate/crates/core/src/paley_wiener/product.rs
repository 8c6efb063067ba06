use rug::{Complex, Float};

use super::PaleyWienerError;
use crate::gram_biorthogonal::tail_sums;
use crate::mp_numerics::PrecisionContext;
use crate::sequence_core::{ClassParameters, EigenSequence};

/// A value of f_k together with a bound on |log f − log f_computed|.
#[derive(Debug, Clone)]
pub struct FkValue {
    pub value: Complex,
    pub log_error: f64,
}

#[derive(Debug, Clone)]
enum Tail {
    /// The sequence is finite and fully contained in the prefix.
    None,
    /// Coefficients S_j/j of log ∏_{n>M}(1 − z/Λ_n) = −Σ_j (S_j/j) z^j.
    Series { coeffs: Vec<Float>, ratio: f64, s1: f64 },
    /// Σ_{n>M} 1/|Λ_n|, for the crude bound |log tail| ≤ |z|τ/(1 − |z|/|Λ_{M+1}|).
    Crude { tau: f64, next_abs: f64 },
}

/// Evaluator of f_k(z) = ∏_{n≠k}(1 − z/Λ_n) for |z| ≤ radius.
///
/// The product runs over a prefix Λ₁..Λ_M with |Λ_{M+1}| ≥ 4·radius; the
/// rest is summed through the power sums S_j = Σ_{n>M} Λ_n^{−j} when the
/// generator provides them. Without them the tail is dropped and bounded
/// by |z|·Σ_{n>M} 1/(|Λ_n| − |z|), which must stay below `tail_tol`.
#[derive(Debug, Clone)]
pub struct ProductFk {
    terms: Vec<Complex>,
    tail: Tail,
    radius: f64,
    ctx: PrecisionContext,
}

const MIN_PREFIX: usize = 64;
const CRUDE_CAP: usize = 1 << 16;

impl ProductFk {
    pub fn new(seq: &EigenSequence, radius: f64, tail_tol: f64, ctx: PrecisionContext) -> Result<Self, PaleyWienerError> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(PaleyWienerError::InvalidInput(format!("radius {radius} must be finite and nonnegative")));
        }
        let bits = ctx.bits();
        if let Some(len) = seq.known_prefix_length() {
            let terms = seq.terms(len, ctx)?;
            return Ok(Self { terms, tail: Tail::None, radius, ctx });
        }
        let reach = ctx.float(4.0 * radius.max(1.0));
        let moduli = seq.prefix_beyond(&reach, ctx)?;
        let first_beyond = moduli.iter().position(|m| *m > reach).expect("prefix ends beyond reach");
        let m = first_beyond.max(MIN_PREFIX);
        let next_abs = seq.moduli(m + 1, ctx)?[m].to_f64();
        if seq.is_real() {
            if let Some(s1) = seq.tail_power_sum(m, 1, ctx) {
                let ratio = radius / next_abs;
                // |z|^j S_j/j ≤ |z| S₁ ratio^{j−1}/j
                let count = ((bits as f64 + 8.0) / -ratio.max(1e-300).log2()).ceil().max(1.0) as u32 + 1;
                let mut coeffs = Vec::with_capacity(count as usize);
                coeffs.push(s1.clone());
                for j in 2..=count {
                    let s = seq.tail_power_sum(m, j, ctx).ok_or(PaleyWienerError::TailNotSummable { radius, bound: f64::INFINITY })?;
                    coeffs.push(s / j);
                }
                let terms = seq.terms(m, ctx)?;
                return Ok(Self { terms, tail: Tail::Series { coeffs, ratio, s1: s1.to_f64() }, radius, ctx });
            }
        }
        let mut m = m;
        loop {
            let tau = tail_sums(seq, m, ctx).map_err(|e| PaleyWienerError::InvalidInput(e.to_string()))?[m].to_f64();
            let next_abs = seq.moduli(m + 1, ctx)?[m].to_f64();
            let bound = radius * tau / (1.0 - radius / next_abs);
            if bound < tail_tol {
                let terms = seq.terms(m, ctx)?;
                return Ok(Self { terms, tail: Tail::Crude { tau, next_abs }, radius, ctx });
            }
            if m >= CRUDE_CAP {
                return Err(PaleyWienerError::TailNotSummable { radius, bound });
            }
            m *= 4;
        }
    }

    /// The same evaluator for the conjugate sequence Λ̄.
    pub fn conjugated(mut self) -> Self {
        for z in &mut self.terms {
            z.conj_mut();
        }
        self
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn prefix_len(&self) -> usize {
        self.terms.len()
    }

    pub fn term(&self, k: usize) -> &Complex {
        &self.terms[k - 1]
    }

    fn tail_factor(&self, z: &Complex) -> Result<(Complex, f64), PaleyWienerError> {
        let bits = self.ctx.bits();
        let za = Float::with_val(bits, z.abs_ref()).to_f64();
        if za > self.radius * (1.0 + 1e-12) {
            return Err(PaleyWienerError::OutsideRadius { z: za, radius: self.radius });
        }
        match &self.tail {
            Tail::None => Ok((self.ctx.complex(1), 0.0)),
            Tail::Series { coeffs, ratio, s1 } => {
                let mut acc = self.ctx.czero();
                for c in coeffs.iter().rev() {
                    acc *= z;
                    acc += c;
                }
                acc *= z;
                let j = coeffs.len() as i32;
                let rem = za * s1 * ratio.powi(j) / ((j + 1) as f64 * (1.0 - ratio));
                Ok((Complex::with_val(bits, -acc).exp(), rem))
            }
            Tail::Crude { tau, next_abs } => Ok((self.ctx.complex(1), za * tau / (1.0 - za / next_abs))),
        }
    }

    fn product(&self, skip: Option<usize>, z: &Complex) -> Result<FkValue, PaleyWienerError> {
        let bits = self.ctx.bits();
        let (mut value, log_error) = self.tail_factor(z)?;
        for (i, lam) in self.terms.iter().enumerate() {
            if Some(i + 1) == skip {
                continue;
            }
            let r = Complex::with_val(bits, z / lam);
            value *= Complex::with_val(bits, 1 - r);
        }
        Ok(FkValue { value, log_error })
    }

    /// f_k(z), skipping the factor of Λ_k.
    pub fn eval(&self, k: usize, z: &Complex) -> Result<FkValue, PaleyWienerError> {
        if k == 0 || k > self.terms.len() {
            return Err(PaleyWienerError::InvalidInput(format!("k = {k} outside the evaluated prefix of {} terms", self.terms.len())));
        }
        self.product(Some(k), z)
    }

    /// ∏_{n≥1}(1 − z/Λ_n), which is f_k(z)(1 − z/Λ_k) for every k.
    pub fn full(&self, z: &Complex) -> Result<FkValue, PaleyWienerError> {
        self.product(None, z)
    }
}

/// f_k(z) = ∏_{n≥1, n≠k}(1 − z/Λ_n).
pub fn product_fk(seq: &EigenSequence, k: usize, z: &Complex, tail_tol: f64, ctx: PrecisionContext) -> Result<FkValue, PaleyWienerError> {
    let radius = Float::with_val(ctx.bits(), z.abs_ref()).to_f64();
    let f = ProductFk::new(seq, radius, tail_tol, ctx)?;
    f.eval(k, z)
}

/// Smallest C with log|f_k(x)| ≤ (p₂π + 1)√|x| + C on the given real points.
pub fn fit_growth_constant(seq: &EigenSequence, params: &ClassParameters, k: usize, xs: &[f64], ctx: PrecisionContext) -> Result<f64, PaleyWienerError> {
    let radius = xs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let f = ProductFk::new(seq, radius, 1e-12, ctx)?;
    let slope = params.p2 * std::f64::consts::PI + 1.0;
    let mut c = f64::NEG_INFINITY;
    for &x in xs {
        let v = f.eval(k, &ctx.complex(x))?;
        let log_abs = Float::with_val(ctx.bits(), v.value.abs_ref()).ln().to_f64() + v.log_error;
        c = c.max(log_abs - slope * x.abs().sqrt());
    }
    Ok(c)
}

/// Per-index values (−log|f_k(Λ_k)| − log H₁ − log P_k)/(H₃√|Λ_k|); the
/// smallest admissible constant in the interpolation lower bound is their
/// maximum.
pub fn interpolation_constants(seq: &EigenSequence, params: &ClassParameters, ks: &[usize], ctx: PrecisionContext) -> Result<Vec<f64>, PaleyWienerError> {
    use crate::guichal_bounds::{h3, ln_h1};
    use crate::sequence_core::condensation_product;
    let kmax = ks.iter().copied().max().unwrap_or(1);
    let moduli = seq.moduli(kmax, ctx)?;
    let real = seq.is_real();
    let radius = moduli.iter().fold(0.0f64, |a, m| a.max(m.to_f64()));
    let f = ProductFk::new(seq, radius, 1e-12, ctx)?;
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let lam = seq.term(k, ctx)?;
        let v = f.eval(k, &lam)?;
        let log_f = Float::with_val(ctx.bits(), v.value.abs_ref()).ln().to_f64();
        let log_p = condensation_product(seq, k, params.q, ctx)?.ln().to_f64();
        out.push((-log_f - ln_h1(params, real) - log_p) / (h3(params, real) * moduli[k - 1].to_f64().sqrt()));
    }
    Ok(out)
}
