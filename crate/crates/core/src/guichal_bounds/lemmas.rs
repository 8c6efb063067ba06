//! Numerical checks of the auxiliary inequalities behind the lower bound.

use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};
use serde::Serialize;

use super::GuichalError;
use crate::gram_biorthogonal::exp_neg;
use crate::mp_numerics::{integrate, PrecisionContext};

/// Both sides of ∫₀ᵀ tᴺ e^{−λt} dt ≤ 2T^{N+1}/(N+1+λT).
#[derive(Debug, Clone, Serialize)]
pub struct IntegralBoundCheck {
    pub n: u32,
    pub lambda: f64,
    pub t: f64,
    pub integral: f64,
    pub quadrature_error: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn check_moment_integral(n: u32, lambda: f64, t: f64, ctx: PrecisionContext) -> Result<IntegralBoundCheck, GuichalError> {
    if !(lambda > 0.0 && t > 0.0) {
        return Err(GuichalError::InvalidInput(format!("λ = {lambda} and T = {t} must be positive")));
    }
    let bits = ctx.bits();
    let lam = ctx.float(lambda);
    let quad = integrate(
        |s| {
            let v = Float::with_val(bits, s.pow(n)) * Float::with_val(bits, -(Float::with_val(bits, &lam * s))).exp();
            Complex::with_val(bits, v)
        },
        &ctx.zero(),
        &ctx.float(t),
        8,
        n as usize + 16,
    )?;
    let tt = ctx.float(t);
    let bound = Float::with_val(bits, (&tt).pow(n + 1)) * 2u32 / (Float::with_val(bits, &lam * &tt) + (n + 1));
    let integral = Float::with_val(bits, quad.value.real());
    let holds = Float::with_val(bits, &integral + &quad.error) <= bound;
    Ok(IntegralBoundCheck {
        n,
        lambda,
        t,
        integral: integral.to_f64(),
        quadrature_error: quad.error.to_f64(),
        bound: bound.to_f64(),
        holds,
    })
}

/// Both sides of (1/N!)(x/(1+x))ᴺ eˣ ≤ Σ_{n≥N} xⁿ/n!.
///
/// The right side is an exact rational partial sum, itself a lower bound
/// of the series, so `holds` is a strict certificate.
#[derive(Debug, Clone, Serialize)]
pub struct TailBoundCheck {
    pub n: u32,
    pub x: f64,
    pub lhs: f64,
    pub partial_sum: f64,
    pub terms_used: u32,
    pub holds: bool,
}

pub fn check_exponential_tail(n: u32, x: f64, ctx: PrecisionContext) -> Result<TailBoundCheck, GuichalError> {
    if !(x >= 0.0 && x.is_finite()) || n == 0 {
        return Err(GuichalError::InvalidInput(format!("need N ≥ 1 and x ≥ 0, got N = {n}, x = {x}")));
    }
    let bits = ctx.bits();
    let xr = Rational::from_f64(x).expect("finite");
    let mut term = Rational::from((&xr).pow(n)) / Integer::from(Integer::factorial(n));
    let mut sum = Rational::new();
    let mut used = 0u32;
    let cutoff = Float::with_val(bits, 1) >> bits;
    loop {
        sum += &term;
        used += 1;
        if term.is_zero() || Float::with_val(bits, &term) <= Float::with_val(bits, &sum) * &cutoff {
            break;
        }
        term = term * &xr / (n + used);
    }
    // round the left side up and the partial sum down
    let xf = ctx.float(x);
    let ratio = Float::with_val_round(bits, &xf / Float::with_val(bits, &xf + 1u32), rug::float::Round::Up).0;
    let lhs = Float::with_val_round(bits, ratio.pow(n), rug::float::Round::Up).0 * Float::with_val_round(bits, xf.exp_ref(), rug::float::Round::Up).0
        / Float::with_val_round(bits, &Integer::from(Integer::factorial(n)), rug::float::Round::Down).0;
    let rhs = Float::with_val_round(bits, &sum, rug::float::Round::Down).0;
    Ok(TailBoundCheck { n, x, lhs: lhs.to_f64(), partial_sum: rhs.to_f64(), terms_used: used, holds: lhs <= rhs })
}

/// The divided difference Σ g(a_n)/∏_{i≠n}(a_n − a_i) of g(z) = e^{−tz}
/// together with the range of |g^{(r)}|/r! over the convex hull.
#[derive(Debug, Clone, Serialize)]
pub struct JensenCheck {
    pub order: usize,
    pub value_abs: f64,
    pub envelope_min: f64,
    pub envelope_max: f64,
    pub real_points: bool,
    pub holds: bool,
}

pub fn check_jensen(points: &[Complex], t: f64, ctx: PrecisionContext) -> Result<JensenCheck, GuichalError> {
    if points.len() < 2 {
        return Err(GuichalError::InvalidInput("Jensen check needs at least two points".into()));
    }
    let bits = ctx.bits();
    let tt = ctx.float(t);
    let mut value = ctx.czero();
    for (n, an) in points.iter().enumerate() {
        let mut prod = ctx.complex(1);
        for (i, ai) in points.iter().enumerate() {
            if i != n {
                let d = Complex::with_val(bits, an - ai);
                if d.is_zero() {
                    return Err(GuichalError::DegenerateWindow { i: i + 1, n: n + 1 });
                }
                prod *= d;
            }
        }
        value += exp_neg(an, &tt, bits) / prod;
    }
    let r = points.len() - 1;
    // |g^{(r)}(z)|/r! = tʳ e^{−t Re z}/r!, extreme over the hull at extreme real parts
    let (re_min, re_max) = points.iter().map(|z| z.real().to_f64()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let scale = Float::with_val(bits, (&tt).pow(r as u32)) / Float::with_val(bits, Integer::from(Integer::factorial(r as u32)));
    let env = |re: f64| Float::with_val(bits, &scale * Float::with_val(bits, -(Float::with_val(bits, &tt * re))).exp());
    let (lo, hi) = (env(re_max), env(re_min));
    let abs = Float::with_val(bits, value.abs_ref());
    let slack = Float::with_val(bits, &hi * ctx.half_epsilon());
    let real_points = points.iter().all(|z| z.imag().is_zero());
    let holds = abs <= Float::with_val(bits, &hi + &slack) && (!real_points || Float::with_val(bits, &abs + &slack) >= lo);
    Ok(JensenCheck { order: r, value_abs: abs.to_f64(), envelope_min: lo.to_f64(), envelope_max: hi.to_f64(), real_points, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    #[test]
    fn moment_integral_grid() {
        for n in 1..=20 {
            for lambda in [0.1, 1.0, 10.0] {
                for t in [0.5, 1.0, 2.0] {
                    let c = check_moment_integral(n, lambda, t, ctx()).unwrap();
                    assert!(c.holds, "{c:?}");
                    assert!(c.quadrature_error < 1e-20 * c.integral, "{c:?}");
                }
            }
        }
    }

    #[test]
    fn moment_integral_closed_form() {
        // ∫₀¹ t e^{−t} dt = 1 − 2/e
        let c = check_moment_integral(1, 1.0, 1.0, ctx()).unwrap();
        assert!((c.integral - (1.0 - 2.0 / std::f64::consts::E)).abs() < 1e-15);
        assert!((c.bound - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_tail_small_case() {
        // N = 1, x = 1: (1/2)e ≈ 1.359 ≤ e − 1 ≈ 1.718
        let c = check_exponential_tail(1, 1.0, ctx()).unwrap();
        assert!(c.holds);
        assert!((c.partial_sum - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        assert!((c.lhs - std::f64::consts::E / 2.0).abs() < 1e-15);
    }

    #[test]
    fn jensen_real_and_complex() {
        let c = ctx();
        let pts: Vec<Complex> = [1.0, 4.0, 9.0].iter().map(|&v| c.complex(v)).collect();
        let j = check_jensen(&pts, 0.7, c).unwrap();
        assert!(j.holds && j.real_points, "{j:?}");
        let cpts: Vec<Complex> = [(1.0, 0.5), (2.0, -1.0), (3.0, 2.0), (4.5, 0.0)].iter().map(|&v| c.complex(v)).collect();
        let j = check_jensen(&cpts, 0.3, c).unwrap();
        assert!(j.holds && !j.real_points, "{j:?}");
    }

    proptest! {
        #[test]
        fn exponential_tail_holds(n in 1u32..=15, x in 0.001f64..=5.0) {
            prop_assert!(check_exponential_tail(n, x, ctx()).unwrap().holds);
        }

        #[test]
        fn jensen_holds_on_random_real_sets(raw in proptest::collection::btree_set(0u32..200, 2..7), t in 0.05f64..2.0) {
            let c = ctx();
            let pts: Vec<Complex> = raw.iter().map(|&v| c.complex(v as f64 / 20.0)).collect();
            prop_assert!(check_jensen(&pts, t, c).unwrap().holds);
        }
    }
}
