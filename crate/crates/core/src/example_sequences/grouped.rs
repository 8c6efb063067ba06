use rug::{Complex, Integer, Rational};

use super::ExampleError;
use crate::mp_numerics::PrecisionContext;
use crate::sequence_core::{ClassParameters, EigenSequence, ExactParameters, Origin, TermSource};

/// Groups of m terms k² + (ℓ−1)/m, ℓ = 1..m.
#[derive(Debug, Clone)]
struct GroupedSource {
    m: u32,
}

impl GroupedSource {
    fn exact_term(&self, k: usize) -> Rational {
        let m = self.m as usize;
        let block = ((k - 1) / m + 1) as u64;
        let ell = ((k - 1) % m) as u64;
        Rational::from(block * block) + Rational::from((ell, self.m as u64))
    }
}

impl TermSource for GroupedSource {
    fn generate(&self, n: usize, ctx: PrecisionContext) -> Vec<Complex> {
        (1..=n).map(|k| ctx.complex(&self.exact_term(k))).collect()
    }
    fn exact(&self, n: usize) -> Option<Vec<Rational>> {
        Some((1..=n).map(|k| self.exact_term(k)).collect())
    }
    fn origins(&self, n: usize) -> Vec<Origin> {
        let m = self.m as usize;
        (1..=n).map(|k| Origin { family: (k - 1) % m, index: (k - 1) / m + 1 }).collect()
    }
    fn is_real(&self) -> bool {
        true
    }
}

/// The grouped sequence with q = m, p₀ = 2, p₁ = p₂ = α = m,
/// ρ = 2/((2m−1)(2m+1)) and ν = (4m−1)/(m(2m+1)).
pub fn gen_grouped(m: u32) -> Result<EigenSequence, ExampleError> {
    if m < 2 {
        return Err(ExampleError::InvalidParameter(format!("group size m = {m} must be at least 2")));
    }
    let mq = Rational::from(m);
    let m64 = m as u64;
    let exact = ExactParameters {
        beta: Rational::new(),
        rho: Rational::from((2u64, (2 * m64 - 1) * (2 * m64 + 1))),
        p0: Rational::from(2),
        p1: mq.clone(),
        p2: mq.clone(),
        alpha: mq,
        nu: Rational::from((4 * m64 - 1, m64 * (2 * m64 + 1))),
    };
    let params = ClassParameters::from_exact(exact, m);
    Ok(EigenSequence::new(format!("grouped(m={m})"), GroupedSource { m }).with_params(params))
}

/// Closed-form counting function of the grouped sequence:
/// with k = ⌊√r⌋, N(r) = mk − m + ℓ̃ on [k² + (ℓ̃−1)/m, k² + ℓ̃/m) and
/// N(r) = mk on [k² + 1, (k+1)²).
pub fn grouped_counting_formula(m: u32, r: &Rational) -> u64 {
    if *r < 1 {
        return 0;
    }
    let floor = r.clone().floor().into_numer_denom().0;
    let k = floor.sqrt();
    let k_sq = Integer::from(&k * &k);
    let rem = Rational::from(r - &k_sq);
    let k = k.to_u64().expect("radius fits in u64");
    let m64 = m as u64;
    if rem < 1 {
        let scaled = Rational::from(&rem * m).floor().into_numer_denom().0;
        let ell = scaled.to_u64().expect("small") + 1;
        m64 * k - m64 + ell
    } else {
        m64 * k
    }
}
