use rug::Float;
use serde::Serialize;

use super::ControlError;
use crate::mp_numerics::PrecisionContext;

/// Numerical limsup of −log|ε_k|/k² over a finite prefix.
#[derive(Debug, Clone, Serialize)]
pub struct MinimalTime {
    /// Extrapolated limsup; `f64::INFINITY` when the prefix estimates diverge.
    pub value: f64,
    pub converged: bool,
    /// Estimate from the first half of the prefix.
    pub half_prefix_value: f64,
    /// sup_{k ≥ m} a_k for m = n/8, n/4, n/2.
    pub tail_suprema: [f64; 3],
}

/// Aitken extrapolation of the tail suprema s(n/8), s(n/4), s(n/2) of
/// a_k = −log|ε_k|/k² over k ≤ n.
fn estimate(a: &[f64]) -> (f64, [f64; 3]) {
    let n = a.len();
    let sup_from = |m: usize| a[m.max(1) - 1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s = [sup_from(n / 8), sup_from(n / 4), sup_from(n / 2)];
    let (d1, d2) = (s[1] - s[0], s[2] - s[1]);
    let denom = d2 - d1;
    let scale = s.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    // geometric decay of the suprema extrapolates to its limit; flat suprema are the limit
    let value = if denom.abs() <= 1e-12 * scale || d1 * d2 <= 0.0 { s[2] } else { s[2] - d2 * d2 / denom };
    (value, s)
}

/// T₀ = limsup (−log|ε_k|)/k² from ε_1, …, ε_n (n ≥ 16).
///
/// The estimate on the full prefix is compared with the one on its first
/// half. A jump by more than a quarter of its size (and by more than 1) is
/// reported as divergence with value ∞.
pub fn minimal_time(epsilons: &[Float]) -> Result<MinimalTime, ControlError> {
    if epsilons.len() < 16 {
        return Err(ControlError::InvalidInput(format!("need at least 16 perturbations, got {}", epsilons.len())));
    }
    let mut a = Vec::with_capacity(epsilons.len());
    for (i, e) in epsilons.iter().enumerate() {
        if e.is_zero() {
            return Err(ControlError::ZeroPerturbation { k: i + 1 });
        }
        let k = (i + 1) as f64;
        a.push(-Float::with_val(e.prec(), e.abs_ref()).ln().to_f64() / (k * k));
    }
    let (full, tail_suprema) = estimate(&a);
    let (half, _) = estimate(&a[..a.len() / 2]);
    let diff = full - half;
    if diff >= 0.25 * full.abs() && diff > 1.0 {
        return Ok(MinimalTime { value: f64::INFINITY, converged: false, half_prefix_value: half, tail_suprema });
    }
    let converged = diff.abs() <= 1e-3 * full.abs().max(1.0);
    Ok(MinimalTime { value: full, converged, half_prefix_value: half, tail_suprema })
}

/// ε_k = e^{−k^{2γ}} for k = 1..=n.
pub fn exponential_perturbations(gamma: f64, n: usize, ctx: PrecisionContext) -> Vec<Float> {
    (1..=n as u64).map(|k| (-(ctx.float(k).ln() * (2.0 * gamma)).exp()).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    #[test]
    fn case_list() {
        let half = minimal_time(&exponential_perturbations(0.5, 400, ctx())).unwrap();
        assert!(half.value.abs() < 1e-3 && half.converged, "{half:?}");
        let one = minimal_time(&exponential_perturbations(1.0, 400, ctx())).unwrap();
        assert!((one.value - 1.0).abs() < 1e-12 && one.converged, "{one:?}");
        let big = minimal_time(&exponential_perturbations(1.5, 400, ctx())).unwrap();
        assert!(big.value.is_infinite() && !big.converged, "{big:?}");
    }

    #[test]
    fn shifted_limit() {
        // −log ε_k = 0.3k² + k: a_k = 0.3 + 1/k
        let eps: Vec<Float> = (1..=320u64).map(|k| (-ctx().float(0.3 * (k * k) as f64 + k as f64)).exp()).collect();
        let t0 = minimal_time(&eps).unwrap();
        assert!((t0.value - 0.3).abs() < 1e-9, "{t0:?}");
    }

    #[test]
    fn zero_perturbation() {
        let mut eps = exponential_perturbations(0.5, 20, ctx());
        eps[6] = ctx().zero();
        assert!(matches!(minimal_time(&eps), Err(ControlError::ZeroPerturbation { k: 7 })));
    }
}
