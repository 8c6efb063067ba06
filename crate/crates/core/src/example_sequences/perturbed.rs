use rug::ops::Pow;
use rug::{Complex, Float};

use super::ExampleError;
use crate::mp_numerics::{hurwitz_zeta, PrecisionContext};
use crate::sequence_core::{ClassParameters, EigenSequence, Origin, TermSource};

/// Λ_{2k−1} = k², Λ_{2k} = k² + e^{−k^{2γ}}.
#[derive(Debug, Clone)]
struct PerturbedSource {
    gamma: f64,
}

fn perturbation(k: u64, gamma: f64, ctx: PrecisionContext) -> Float {
    let exponent = ctx.float(k).ln() * (2.0 * gamma);
    (-exponent.exp()).exp()
}

impl TermSource for PerturbedSource {
    fn generate(&self, n: usize, ctx: PrecisionContext) -> Vec<Complex> {
        (1..=n)
            .map(|i| {
                let k = i.div_ceil(2) as u64;
                if i % 2 == 1 {
                    return ctx.complex(k * k);
                }
                // enough bits to keep e^{−k^{2γ}} visible next to k²
                let visible = 2.0 * (k as f64).log2() + (k as f64).powf(2.0 * self.gamma) * std::f64::consts::LOG2_E;
                let wide = PrecisionContext::new(ctx.bits().max(visible.ceil() as u32 + ctx.bits())).expect("valid precision");
                let v = wide.float(k * k) + perturbation(k, self.gamma, wide);
                Complex::with_val(wide.bits(), (v, 0))
            })
            .collect()
    }
    fn origins(&self, n: usize) -> Vec<Origin> {
        (1..=n).map(|i| Origin { family: 1 - i % 2, index: i.div_ceil(2) }).collect()
    }
    fn is_real(&self) -> bool {
        true
    }
    fn tail_power_sum(&self, m: usize, j: u32, ctx: PrecisionContext) -> Option<Float> {
        // Σ_{k>K} k^{−2j} twice, corrected by Σ (k²+ε_k)^{−j} − k^{−2j} for the perturbed halves
        let bits = ctx.bits();
        let k_full = m / 2;
        let base = hurwitz_zeta(2 * j, &ctx.float(k_full as u64 + 1), ctx).ok()?;
        let mut total = Float::with_val(bits, &base * 2u32);
        if m % 2 == 1 {
            // Λ_m = k² with k = (m+1)/2 is inside the prefix; its partner is not
            total -= ctx.float((k_full as u64 + 1).pow(2)).pow(j).recip();
        }
        let cutoff = ctx.epsilon() * &total;
        let mut k = k_full as u64 + 1;
        loop {
            let sq = ctx.float(k * k);
            let eps = perturbation(k, self.gamma, ctx);
            let shifted = Float::with_val(bits, &sq + &eps).pow(j).recip();
            let diff = shifted - Float::with_val(bits, (&sq).pow(j)).recip();
            if Float::with_val(bits, diff.abs_ref()) < cutoff {
                break;
            }
            total += diff;
            k += 1;
        }
        Some(total)
    }
}

/// The condensed sequence with perturbation e^{−k^{2γ}}.
///
/// For γ ∈ (0, 1) the parameters β = 0, q = 2, ρ = 1/16, p₀ = 1,
/// p₁ = p₂ = 2, α = 2 + e^{−1/2}, ν = (1 + e^{−1})/2 are attached. The
/// minimal time is 0 for γ < 1, 1 for γ = 1 and ∞ for γ > 1.
pub fn gen_perturbed(gamma: f64) -> Result<EigenSequence, ExampleError> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(ExampleError::InvalidParameter(format!("γ = {gamma} must be positive")));
    }
    let t0 = match gamma.partial_cmp(&1.0) {
        Some(std::cmp::Ordering::Less) => 0.0,
        Some(std::cmp::Ordering::Equal) => 1.0,
        _ => f64::INFINITY,
    };
    let seq = EigenSequence::new(format!("perturbed(γ={gamma})"), PerturbedSource { gamma }).with_minimal_time(t0);
    if gamma < 1.0 {
        let e = std::f64::consts::E;
        let params = ClassParameters::new(0.0, 1.0 / 16.0, 2, 1.0, 2.0, 2.0, 2.0 + e.powf(-0.5), 0.5 * (1.0 + 1.0 / e));
        Ok(seq.with_params(params))
    } else {
        Ok(seq)
    }
}

/// Closed-form bounds (lower, upper) on the condensation product P_k
/// with q = 2: P₁ = e, and for k = 2n or k = 2n − 1 (n ≥ 2)
/// e^{n^{2γ}}/m ≤ P_k ≤ e^{n^{2γ}}/(m − e^{−1}) with m = 2n ± 1.
pub fn perturbed_condensation_bounds(k: usize, gamma: f64, ctx: PrecisionContext) -> (Float, Float) {
    assert!(k >= 1, "indices start at 1");
    if k == 1 {
        let e = ctx.float(1).exp();
        return (e.clone(), e);
    }
    let n = k.div_ceil(2) as u64;
    let m = if k % 2 == 0 { 2 * n + 1 } else { 2 * n - 1 };
    let growth = perturbation(n, gamma, ctx).recip();
    let inv_e = ctx.float(-1).exp();
    let lower = Float::with_val(ctx.bits(), &growth / m);
    let upper = growth / (ctx.float(m) - inv_e);
    (lower, upper)
}
