use rug::ops::Pow;
use rug::{Complex, Float, Rational};

use super::ExampleError;
use crate::mp_numerics::{hurwitz_zeta, PrecisionContext};
use crate::sequence_core::{derive_params_real_exact, ClassParameters, EigenSequence, ExactParameters, TermSource};

/// Λ_k = A(k+ω)² with A = inv_p².
#[derive(Debug, Clone)]
pub(crate) struct QuadraticSource {
    pub(crate) a: Rational,
    pub(crate) omega: Rational,
}

impl QuadraticSource {
    fn exact_term(&self, k: usize) -> Rational {
        let shifted = Rational::from(&self.omega + k as u64);
        Rational::from(&shifted * &shifted) * &self.a
    }
}

impl TermSource for QuadraticSource {
    fn generate(&self, n: usize, ctx: PrecisionContext) -> Vec<Complex> {
        (1..=n).map(|k| ctx.complex(&self.exact_term(k))).collect()
    }
    fn exact(&self, n: usize) -> Option<Vec<Rational>> {
        Some((1..=n).map(|k| self.exact_term(k)).collect())
    }
    fn is_real(&self) -> bool {
        true
    }
    fn tail_power_sum(&self, m: usize, j: u32, ctx: PrecisionContext) -> Option<Float> {
        let shift = ctx.float(Rational::from(&self.omega + (m as u64 + 1)));
        let zeta = hurwitz_zeta(2 * j, &shift, ctx).ok()?;
        let a_pow = ctx.float(&self.a).pow(j);
        Some(zeta / a_pow)
    }
}

/// The sequence Λ_k = inv_p²·(k+ω)² with p₀ = p₁ = p₂ = 1/inv_p,
/// α = 1 + |ω| and (q, ρ, ν) from the real-sequence derivation.
pub fn gen_quadratic(inv_p: f64, omega: f64) -> Result<EigenSequence, ExampleError> {
    if !(omega > -1.0) || !omega.is_finite() {
        return Err(ExampleError::InvalidShift(omega));
    }
    if !(inv_p > 0.0) || !inv_p.is_finite() {
        return Err(ExampleError::InvalidParameter(format!("inv_p = {inv_p} must be positive")));
    }
    let inv_p_q = Rational::from_f64(inv_p).expect("finite");
    let omega_q = Rational::from_f64(omega).expect("finite");
    let a = Rational::from(&inv_p_q * &inv_p_q);
    let p = Rational::from(inv_p_q.recip_ref());
    let alpha = Rational::from(omega_q.abs_ref()) + 1u32;
    let (q, rho, nu) = derive_params_real_exact(&p, &alpha);
    let exact = ExactParameters { beta: Rational::new(), rho, p0: p.clone(), p1: p.clone(), p2: p, alpha, nu };
    let params = ClassParameters::from_exact(exact, q);
    let label = format!("quadratic(A={}, ω={omega})", inv_p * inv_p);
    Ok(EigenSequence::new(label, QuadraticSource { a, omega: omega_q }).with_params(params))
}
