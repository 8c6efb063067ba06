//! Hurwitz zeta at positive integer arguments and the Taylor coefficients
//! of log cos.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::ops::Pow;
use rug::Float;

use super::{NumericsError, PrecisionContext};

/// B_{2i}/(2i)! for i = 1..=count, cached per precision.
fn bernoulli_ratios(count: usize, ctx: PrecisionContext) -> Arc<Vec<Float>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<Float>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().expect("bernoulli cache poisoned").get(&ctx.bits()) {
        if v.len() >= count {
            return v.clone();
        }
    }
    let bits = ctx.bits() + 16;
    let two_pi_sq = Float::with_val(bits, ctx.pi() * 2u32).square();
    let mut power = Float::with_val(bits, 1);
    let mut out = Vec::with_capacity(count);
    for i in 1..=count {
        power *= &two_pi_sq;
        let z = Float::with_val(bits, Float::zeta_u(2 * i as u32));
        let mut r = Float::with_val(bits, z * 2u32) / &power;
        if i % 2 == 0 {
            r = -r;
        }
        out.push(Float::with_val(ctx.bits(), r));
    }
    let out = Arc::new(out);
    cache.lock().expect("bernoulli cache poisoned").insert(ctx.bits(), out.clone());
    out
}

/// Hurwitz zeta ζ(s, a) = Σ_{k≥0} (a+k)^{−s} for integer s ≥ 2 and a > 0,
/// by Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: u32, a: &Float, ctx: PrecisionContext) -> Result<Float, NumericsError> {
    if s < 2 {
        return Err(NumericsError::InvalidQuadrature(format!("Hurwitz zeta needs s ≥ 2, got {s}")));
    }
    if !a.is_finite() || *a <= 0 {
        return Err(NumericsError::NonFinite { at: a.to_f64() });
    }
    let bits = ctx.bits() + 16;
    let terms = (ctx.bits() / 5 + 4) as usize;
    let threshold = (s as usize + 2 * terms) as f64;
    let shift = if a.to_f64() >= threshold { 0 } else { (threshold - a.to_f64()).ceil() as u32 };
    let mut sum = Float::new(bits);
    for k in 0..shift {
        let base = Float::with_val(bits, a + k);
        sum += base.pow(s).recip();
    }
    let x = Float::with_val(bits, a + shift);
    let x_pow = Float::with_val(bits, (&x).pow(s));
    sum += Float::with_val(bits, &x / &x_pow) / (s - 1);
    sum += Float::with_val(bits, x_pow.recip_ref()) / 2u32;
    let ratios = bernoulli_ratios(terms, PrecisionContext::new(bits)?);
    let inv_x_sq = Float::with_val(bits, x.square_ref()).recip();
    // rising factorial s(s+1)…(s+2i−2) times x^{−s−2i+1}
    let mut factor = Float::with_val(bits, s) / Float::with_val(bits, &x_pow * &x);
    for (i, r) in ratios.iter().take(terms).enumerate() {
        if i > 0 {
            let j = 2 * i as u32;
            factor *= Float::with_val(bits, s + j - 1) * (s + j);
            factor *= &inv_x_sq;
        }
        sum += Float::with_val(bits, r * &factor);
    }
    Ok(Float::with_val(ctx.bits(), sum))
}

/// Coefficients c_n, n = 1..=count, with log cos w = −Σ c_n w^{2n} for
/// |w| < π/2; c_n = (2^{2n} − 1) ζ(2n) / (n π^{2n}).
pub fn log_cos_coefficients(count: usize, ctx: PrecisionContext) -> Vec<Float> {
    let bits = ctx.bits() + 16;
    let pi_sq = Float::with_val(bits, ctx.pi().square());
    let mut pi_pow = Float::with_val(bits, 1);
    let mut four_pow = Float::with_val(bits, 1);
    (1..=count)
        .map(|n| {
            pi_pow *= &pi_sq;
            four_pow *= 4u32;
            let z = Float::with_val(bits, Float::zeta_u(2 * n as u32));
            let c = Float::with_val(bits, &four_pow - 1u32) * z / &pi_pow / n as u32;
            Float::with_val(ctx.bits(), c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(bits: u32) -> PrecisionContext {
        PrecisionContext::new(bits).unwrap()
    }

    #[test]
    fn riemann_values() {
        let c = ctx(256);
        let z2 = hurwitz_zeta(2, &c.float(1), c).unwrap();
        let exact = c.pi().square() / 6u32;
        assert!(super::super::relative_difference(&z2, &exact) < c.epsilon() * 64u32);
        let z4 = hurwitz_zeta(4, &c.float(1), c).unwrap();
        let exact = Float::with_val(256, c.pi().pow(4u32)) / 90u32;
        assert!(super::super::relative_difference(&z4, &exact) < c.epsilon() * 64u32);
    }

    #[test]
    fn shift_recurrence() {
        // ζ(s, a) − ζ(s, a+1) = a^{−s}
        let c = ctx(192);
        for (s, a) in [(2u32, 0.3), (3, 7.25), (6, 150.5), (10, 2.0)] {
            let a = c.float(a);
            let lhs = hurwitz_zeta(s, &a, c).unwrap() - hurwitz_zeta(s, &Float::with_val(192, &a + 1u32), c).unwrap();
            let rhs = Float::with_val(192, (&a).pow(s)).recip();
            assert!(super::super::relative_difference(&lhs, &rhs) < 1e-50);
        }
    }

    #[test]
    fn direct_sum_oracle() {
        // ζ(8, 3) by brute force with an integral tail bound
        let c = ctx(128);
        let mut direct = c.zero();
        for k in 0..20000u32 {
            direct += Float::with_val(128, Float::with_val(128, 3 + k).pow(8u32)).recip();
        }
        let z = hurwitz_zeta(8, &c.float(3), c).unwrap();
        assert!(super::super::relative_difference(&z, &direct) < 1e-25);
    }

    #[test]
    fn log_cos_series_matches_function() {
        let c = ctx(256);
        let coeffs = log_cos_coefficients(120, c);
        assert_eq!(coeffs[0], 0.5);
        let twelfth = Float::with_val(256, 1) / 12u32;
        assert!(super::super::relative_difference(&coeffs[1], &twelfth) < 1e-70);
        let w = c.float(0.4);
        let w2 = Float::with_val(256, w.square_ref());
        let mut series = c.zero();
        let mut p = c.float(1);
        for cn in &coeffs {
            p *= &w2;
            series -= Float::with_val(256, cn * &p);
        }
        let exact = Float::with_val(256, w.cos_ref()).ln();
        assert!(Float::with_val(256, series - exact).abs() < 1e-70);
    }
}
