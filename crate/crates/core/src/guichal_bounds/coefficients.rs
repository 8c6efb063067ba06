use rug::ops::{NegAssign, Pow};
use rug::{Complex, Float};

use super::GuichalError;
use crate::gram_biorthogonal::exp_neg;
use crate::mp_numerics::{integrate, PrecisionContext};
use crate::sequence_core::{condensation_product, EigenSequence};

/// Coefficients Ã_n over the window {n : |k − n| < q}.
#[derive(Debug, Clone)]
pub struct GuichalWindow {
    pub k: usize,
    pub q: u32,
    /// 1-based indices of the window, increasing.
    pub indices: Vec<usize>,
    pub terms: Vec<Complex>,
    pub coefficients: Vec<Complex>,
}

impl GuichalWindow {
    /// Ã_k, the coefficient attached to the centre of the window.
    pub fn centre(&self) -> &Complex {
        let pos = self.indices.iter().position(|&n| n == self.k).expect("window contains k");
        &self.coefficients[pos]
    }

    /// f₂(t) = Σ Ã_n e^{−Λ_n t}.
    pub fn eval(&self, t: &Float) -> Complex {
        exp_sum(&self.coefficients, &self.terms, t)
    }
}

/// 1/∏_{i≠n}(a_i − a_n) for every point; `labels` name the points in errors.
fn reciprocal_products(points: &[Complex], labels: &[usize], ctx: PrecisionContext) -> Result<Vec<Complex>, GuichalError> {
    let bits = ctx.bits();
    let mut out = Vec::with_capacity(points.len());
    for (n, an) in points.iter().enumerate() {
        let mut prod = ctx.complex(1);
        for (i, ai) in points.iter().enumerate() {
            if i == n {
                continue;
            }
            let diff = Complex::with_val(bits, ai - an);
            if diff.is_zero() {
                return Err(GuichalError::DegenerateWindow { i: labels[i], n: labels[n] });
            }
            prod *= diff;
        }
        out.push(prod.recip());
    }
    Ok(out)
}

/// Σ c_n e^{−Λ_n t}.
pub fn exp_sum(coefficients: &[Complex], terms: &[Complex], t: &Float) -> Complex {
    let bits = coefficients.first().map_or(t.prec(), |c| c.prec().0);
    let mut acc = Complex::new(bits);
    for (c, lam) in coefficients.iter().zip(terms) {
        acc += Complex::with_val(bits, c * exp_neg(lam, t, bits));
    }
    acc
}

/// Derivatives f^{(j)}(0) = Σ c_n (−Λ_n)^j for j = 0..=order.
pub fn derivative_moments(coefficients: &[Complex], terms: &[Complex], order: usize) -> Vec<Complex> {
    let bits = coefficients.first().map_or(64, |c| c.prec().0);
    let mut powers: Vec<Complex> = coefficients.iter().map(|c| Complex::with_val(bits, c)).collect();
    let mut out = Vec::with_capacity(order + 1);
    for _ in 0..=order {
        let mut sum = Complex::new(bits);
        for p in &powers {
            sum += p;
        }
        out.push(sum);
        for (p, lam) in powers.iter_mut().zip(terms) {
            *p *= lam;
            p.neg_assign();
        }
    }
    out
}

fn moment_scales(coefficients: &[Complex], terms: &[Complex], order: usize) -> Vec<Float> {
    let bits = coefficients.first().map_or(64, |c| c.prec().0);
    let mut mags: Vec<Float> = coefficients.iter().map(|c| Float::with_val(bits, c.abs_ref())).collect();
    let lams: Vec<Float> = terms.iter().map(|l| Float::with_val(bits, l.abs_ref())).collect();
    let mut out = Vec::with_capacity(order + 1);
    for _ in 0..=order {
        out.push(Float::with_val(bits, Float::sum(mags.iter())));
        for (m, l) in mags.iter_mut().zip(&lams) {
            *m *= l;
        }
    }
    out
}

/// The Güichal coefficients A_n = 1/∏_{i≠n}(Λ_i − Λ_n), n = 1..count.
///
/// With M = count − 1 the function f₁ = Σ A_n e^{−Λ_n t} has a zero of
/// order M at t = 0 and f₁^{(M)}(0) = 1. Both facts are checked before
/// returning, relative to Σ|A_n||Λ_n|ʲ at half the working precision.
pub fn guichal_coefficients(seq: &EigenSequence, count: usize, ctx: PrecisionContext) -> Result<Vec<Complex>, GuichalError> {
    if count == 0 {
        return Err(GuichalError::InvalidInput("count must be at least 1".into()));
    }
    let terms = seq.terms(count, ctx)?;
    let labels: Vec<usize> = (1..=count).collect();
    let a = reciprocal_products(&terms, &labels, ctx)?;
    let m = count - 1;
    let moments = derivative_moments(&a, &terms, m);
    let scales = moment_scales(&a, &terms, m);
    let tol = ctx.half_epsilon();
    for (j, (value, scale)) in moments.iter().zip(&scales).enumerate() {
        let target = u32::from(j == m);
        let residual = Float::with_val(ctx.bits(), Complex::with_val(ctx.bits(), value - target).abs_ref());
        if residual > Float::with_val(ctx.bits(), &tol * scale.clone().max(&ctx.float(1))) {
            return Err(GuichalError::MomentIdentity { j, residual: residual.to_f64() });
        }
    }
    Ok(a)
}

/// The window coefficients Ã_n of f₂, with |Ã_k| = P_k checked.
pub fn window_coefficients(seq: &EigenSequence, k: usize, q: u32, ctx: PrecisionContext) -> Result<GuichalWindow, GuichalError> {
    if k == 0 || q == 0 {
        return Err(GuichalError::InvalidInput("k and q must be positive".into()));
    }
    let lo = k.saturating_sub(q as usize - 1).max(1);
    let hi = k + q as usize - 1;
    let all = seq.terms(hi, ctx)?;
    let indices: Vec<usize> = (lo..=hi).collect();
    let terms: Vec<Complex> = all[lo - 1..].to_vec();
    let coefficients = reciprocal_products(&terms, &indices, ctx)?;
    let window = GuichalWindow { k, q, indices, terms, coefficients };
    let centre = Float::with_val(ctx.bits(), window.centre().abs_ref());
    let p_k = condensation_product(seq, k, q, ctx)?;
    let gap = Float::with_val(ctx.bits(), &centre - &p_k).abs();
    if gap > Float::with_val(ctx.bits(), ctx.half_epsilon() * &p_k) {
        return Err(GuichalError::Consistency(format!("|Ã_{k}| = {} differs from P_{k} = {}", centre.to_f64(), p_k.to_f64())));
    }
    Ok(window)
}

/// Upper bound ‖f₁‖/|A_k| on the distance from e_k to the span of the other
/// exponentials among the first `count`, with ‖f₁‖ by quadrature on [0, T].
pub fn guichal_distance_estimate(seq: &EigenSequence, k: usize, count: usize, t: f64, ctx: PrecisionContext) -> Result<Float, GuichalError> {
    if k == 0 || k > count {
        return Err(GuichalError::InvalidInput(format!("k = {k} outside 1..={count}")));
    }
    let a = guichal_coefficients(seq, count, ctx)?;
    let terms = seq.terms(count, ctx)?;
    let bits = ctx.bits();
    let quad = integrate(
        |s| {
            let v = exp_sum(&a, &terms, s);
            Complex::with_val(bits, v.norm_ref())
        },
        &ctx.zero(),
        &ctx.float(t),
        8,
        24,
    )?;
    let norm = Float::with_val(bits, quad.value.real().sqrt_ref());
    Ok(norm / Float::with_val(bits, a[k - 1].abs_ref()))
}

/// t^M e^{−λt}/M!, the size of f₁ at t when every term has real part λ.
pub fn guichal_profile(m: u32, lambda: &Float, t: &Float) -> Float {
    let bits = lambda.prec().max(t.prec());
    let num = Float::with_val(bits, t.pow(m)) * Float::with_val(bits, -(Float::with_val(bits, lambda * t))).exp();
    num / Float::with_val(bits, rug::Integer::from(rug::Integer::factorial(m)))
}
