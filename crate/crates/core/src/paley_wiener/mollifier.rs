use rug::float::Constant;
use rug::{Complex, Float};
use serde::{Deserialize, Serialize};

use super::PaleyWienerError;
use crate::mp_numerics::{hurwitz_zeta, log_cos_coefficients, PrecisionContext};

/// Parameters of the mollifier P_{N,T}(z) = e^{izT/2} ∏_{k≥N} cos(a_k z),
/// a_k = C_{N,T}/k².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifierConfig {
    pub theta0: f64,
    pub theta1: f64,
    pub theta2: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "C_NT")]
    pub c_nt: f64,
    /// 2⁷θ₀/θ₁².
    pub gamma: f64,
    /// Last index with an explicit cosine factor in the most recent
    /// evaluation; later factors go through the log-cos series.
    pub tail_truncation: usize,
}

impl MollifierConfig {
    pub const DEFAULT_THETA: (f64, f64, f64) = (1.0, 8.0, 2.0);

    /// The configuration for time T and class parameter p₂ with default θ's.
    pub fn for_time(t: f64, p2: f64) -> Result<Self, PaleyWienerError> {
        let (t0, t1, t2) = Self::DEFAULT_THETA;
        Self::with_thetas(t, p2, t0, t1, t2)
    }

    pub fn with_thetas(t: f64, p2: f64, theta0: f64, theta1: f64, theta2: f64) -> Result<Self, PaleyWienerError> {
        if !(t > 0.0 && p2 > 0.0 && theta0 > 0.0 && theta1 > 0.0 && theta2 > 0.0) {
            return Err(PaleyWienerError::InvalidInput("T, p₂ and θ₀, θ₁, θ₂ must be positive".into()));
        }
        let n = choose_n(t, p2, theta0, theta1);
        Self::with_n(n, t, theta0, theta1, theta2)
    }

    /// A configuration with a prescribed N ≥ 2.
    pub fn with_n(n: usize, t: f64, theta0: f64, theta1: f64, theta2: f64) -> Result<Self, PaleyWienerError> {
        if n < 2 || !(t > 0.0) {
            return Err(PaleyWienerError::InvalidInput(format!("need N ≥ 2 and T > 0, got N = {n}, T = {t}")));
        }
        let ctx = PrecisionContext::new(128)?;
        let c_nt = c_nt(n, t, ctx)?.to_f64();
        Ok(Self { theta0, theta1, theta2, n, c_nt, gamma: 128.0 * theta0 / (theta1 * theta1), tail_truncation: 0 })
    }

    /// Violations of ((N−1)/2)T ≤ C_{N,T} ≤ (N/2)T.
    pub fn check(&self, t: f64) -> Result<(), PaleyWienerError> {
        let lo = (self.n as f64 - 1.0) / 2.0 * t;
        let hi = self.n as f64 / 2.0 * t;
        if self.c_nt < lo * (1.0 - 1e-12) || self.c_nt > hi * (1.0 + 1e-12) {
            return Err(PaleyWienerError::InvalidInput(format!("C_NT = {} outside [{lo}, {hi}]", self.c_nt)));
        }
        Ok(())
    }
}

/// C_{N,T} = T/(2 Σ_{k≥N} k^{−2}).
pub fn c_nt(n: usize, t: f64, ctx: PrecisionContext) -> Result<Float, PaleyWienerError> {
    let z = hurwitz_zeta(2, &ctx.float(n as u64), ctx)?;
    Ok(ctx.float(t) / (z * 2u32))
}

/// N = ⌈2 + γ(p₂π + 1)²/T⌉ with γ = 2⁷θ₀/θ₁², which lies in the window
/// [2 + γ(p₂π+1)²/T, 4 + γ(p₂π+1)²/T].
pub fn choose_n(t: f64, p2: f64, theta0: f64, theta1: f64) -> usize {
    let gamma = 128.0 * theta0 / (theta1 * theta1);
    let lo = 2.0 + gamma * (p2 * std::f64::consts::PI + 1.0).powi(2) / t;
    (lo.ceil() as usize).clamp(2, (lo + 2.0).floor() as usize)
}

/// Evaluator of P_{N,T} on the disc |z| ≤ radius.
///
/// Factors with a_k·radius > 1/2 are multiplied out; the rest enter through
/// Σ_{k>J} log cos(a_k z) = −Σ_m c_m C^{2m} ζ(4m, J+1) z^{2m}.
#[derive(Debug, Clone)]
pub struct Mollifier {
    t: Float,
    a: Vec<Float>,
    series: Vec<Float>,
    radius: f64,
    last: usize,
    c: Float,
    ctx: PrecisionContext,
}

impl Mollifier {
    pub fn new(cfg: &MollifierConfig, t: f64, radius: f64, ctx: PrecisionContext) -> Result<Self, PaleyWienerError> {
        let c = c_nt(cfg.n, t, ctx)?;
        let bits = ctx.bits();
        // smallest J ≥ N − 1 with C·radius/(J+1)² ≤ 1/2
        let mut last = ((2.0 * c.to_f64() * radius).sqrt().ceil() as usize).max(cfg.n) - 1;
        while c.to_f64() * radius / ((last + 1) as f64).powi(2) > 0.5 {
            last += 1;
        }
        let a = (cfg.n..=last).map(|k| Float::with_val(bits, &c / (k as u64 * k as u64))).collect();
        // ratio (a_{J+1}|z|)/(π/2) ≤ 1/π per power of w = z²
        let count = (bits as f64 / (2.0 * std::f64::consts::PI.log2())).ceil() as usize + 4;
        let coeffs = log_cos_coefficients(count, ctx);
        let c_sq = Float::with_val(bits, c.square_ref());
        let mut c_pow = ctx.float(1);
        let mut series = Vec::with_capacity(count);
        let start = ctx.float(last as u64 + 1);
        for (m, cm) in coeffs.iter().enumerate() {
            c_pow *= &c_sq;
            let z = hurwitz_zeta(4 * (m as u32 + 1), &start, ctx)?;
            series.push(Float::with_val(bits, cm * &c_pow) * z);
        }
        Ok(Self { t: ctx.float(t), a, series, radius, last, c, ctx })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn c_nt(&self) -> &Float {
        &self.c
    }

    /// Index of the last explicit cosine factor.
    pub fn tail_truncation(&self) -> usize {
        self.last
    }

    fn log_tail(&self, z_sq: &Complex) -> Complex {
        let mut acc = self.ctx.czero();
        for s in self.series.iter().rev() {
            acc *= z_sq;
            acc += s;
        }
        acc *= z_sq;
        -acc
    }

    /// P_{N,T}(z).
    pub fn eval(&self, z: &Complex) -> Result<Complex, PaleyWienerError> {
        let bits = self.ctx.bits();
        let za = Float::with_val(bits, z.abs_ref()).to_f64();
        if za > self.radius * (1.0 + 1e-12) {
            return Err(PaleyWienerError::OutsideRadius { z: za, radius: self.radius });
        }
        let z_sq = Complex::with_val(bits, z.square_ref());
        let mut value = self.log_tail(&z_sq);
        let half = Complex::with_val(bits, z * &self.t) / 2u32;
        value += Complex::with_val(bits, half.mul_i_ref(false));
        let mut out = value.exp();
        for a in &self.a {
            out *= Complex::with_val(bits, z * a).cos();
        }
        Ok(out)
    }

    /// P_{N,T}(x) for real x, with the cosines evaluated in real arithmetic.
    pub fn eval_real(&self, x: &Float) -> Result<Complex, PaleyWienerError> {
        let bits = self.ctx.bits();
        if x.to_f64().abs() > self.radius * (1.0 + 1e-12) {
            return Err(PaleyWienerError::OutsideRadius { z: x.to_f64().abs(), radius: self.radius });
        }
        let x_sq = Float::with_val(bits, x.square_ref());
        let mut acc = self.ctx.zero();
        for s in self.series.iter().rev() {
            acc *= &x_sq;
            acc += s;
        }
        acc *= &x_sq;
        let mut modulus = (-acc).exp();
        for a in &self.a {
            modulus *= Float::with_val(bits, x * a).cos();
        }
        let phase = Float::with_val(bits, x * &self.t) / 2u32;
        let (s, c) = phase.sin_cos(self.ctx.float(0));
        Ok(Complex::with_val(bits, (Float::with_val(bits, &modulus * &c), modulus * s)))
    }
}

/// P_{N,T}(z).
pub fn mollifier(cfg: &MollifierConfig, t: f64, z: &Complex, ctx: PrecisionContext) -> Result<Complex, PaleyWienerError> {
    let radius = Float::with_val(ctx.bits(), z.abs_ref()).to_f64();
    Mollifier::new(cfg, t, radius, ctx)?.eval(z)
}

/// Checks of P(0) = 1, |P(x)| ≤ 1 on real points and P(iy) ≥ e^{−θ₂√(C y)}
/// on imaginary points.
#[derive(Debug, Clone, Serialize)]
pub struct MollifierCheck {
    pub at_zero: f64,
    pub max_real_abs: f64,
    /// min over y of log P(iy) + θ₂√(C y); nonnegative when the bound holds.
    pub min_imaginary_margin: f64,
    pub holds: bool,
}

pub fn check_mollifier(m: &Mollifier, theta2: f64, reals: &[f64], imags: &[f64]) -> Result<MollifierCheck, PaleyWienerError> {
    let ctx = m.ctx;
    let bits = ctx.bits();
    let at_zero = m.eval(&ctx.czero())?;
    let zero_ok = Float::with_val(bits, Complex::with_val(bits, &at_zero - 1u32).abs_ref()) < ctx.half_epsilon();
    let mut max_real = 0.0f64;
    for &x in reals {
        let v = m.eval_real(&ctx.float(x))?;
        max_real = max_real.max(Float::with_val(bits, v.abs_ref()).to_f64());
    }
    let c = m.c_nt().to_f64();
    let mut margin = f64::INFINITY;
    for &y in imags {
        let v = m.eval(&ctx.complex((0.0, y)))?;
        let re = v.real().clone();
        let lg = if re > 0 { re.ln().to_f64() } else { f64::NEG_INFINITY };
        margin = margin.min(lg + theta2 * (c * y).sqrt());
    }
    let holds = zero_ok && max_real <= 1.0 + 1e-30 && margin >= 0.0;
    Ok(MollifierCheck { at_zero: at_zero.real().to_f64(), max_real_abs: max_real, min_imaginary_margin: margin, holds })
}

/// π²/6 − Σ_{k<N} k^{−2}, the normalizing sum of C_{N,T}.
pub fn inverse_square_tail(n: usize, ctx: PrecisionContext) -> Float {
    let mut s = Float::with_val(ctx.bits(), Constant::Pi).square() / 6u32;
    for k in 1..n as u64 {
        s -= ctx.float(k * k).recip();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(256).unwrap()
    }

    #[test]
    fn choose_n_examples() {
        assert_eq!(choose_n(1.0, 1.0, 1.0, 8.0), 37);
        assert_eq!(choose_n(1.0, 1.0, 1e-9, 8.0), 3);
        // γ/T below f64 resolution: the lower clamp
        assert_eq!(choose_n(1e9, 1.0, 1e-9, 8.0), 2);
        // halving T doubles the γ-term
        let g = 2.0 * (std::f64::consts::PI + 1.0).powi(2);
        assert_eq!(choose_n(0.5, 1.0, 1.0, 8.0), (2.0 + 2.0 * g).ceil() as usize);
    }

    #[test]
    fn normalization_for_n_two() {
        let cfg = MollifierConfig::with_n(2, 1.0, 1.0, 8.0, 2.0).unwrap();
        let want = 1.0 / (2.0 * (std::f64::consts::PI.powi(2) / 6.0 - 1.0));
        assert!((cfg.c_nt - want).abs() < 1e-15);
        assert!((cfg.c_nt - 0.7752730483652153).abs() < 1e-15);
        let c = c_nt(2, 1.0, ctx()).unwrap();
        let alt = ctx().float(1) / (inverse_square_tail(2, ctx()) * 2u32);
        assert!(Float::with_val(256, &c - &alt).abs() < 1e-70);
        cfg.check(1.0).unwrap();
        for n in [2, 5, 37, 200] {
            MollifierConfig::with_n(n, 0.7, 1.0, 8.0, 2.0).unwrap().check(0.7).unwrap();
        }
    }

    #[test]
    fn series_tail_matches_direct_product() {
        // radius 3 keeps every factor in the series; radius 3000 multiplies most out
        let cfg = MollifierConfig::with_n(5, 1.0, 1.0, 8.0, 2.0).unwrap();
        let small = Mollifier::new(&cfg, 1.0, 3000.0, ctx()).unwrap();
        let big = Mollifier::new(&cfg, 1.0, 40.0, ctx()).unwrap();
        for z in [(1.5, 0.0), (10.0, 3.0), (-7.0, -20.0), (0.0, 35.0)] {
            let z = ctx().complex(z);
            let a = small.eval(&z).unwrap();
            let b = big.eval(&z).unwrap();
            let rel = Float::with_val(256, Complex::with_val(256, &a - &b).abs_ref()) / Float::with_val(256, a.abs_ref());
            assert!(rel.to_f64() < 1e-60, "{}", rel.to_f64());
        }
        let x = ctx().float(17.25);
        let a = small.eval_real(&x).unwrap();
        let b = small.eval(&ctx().complex(17.25)).unwrap();
        assert!(Float::with_val(256, Complex::with_val(256, &a - &b).abs_ref()).to_f64() < 1e-70);
    }

    #[test]
    fn mollifier_properties_on_axes() {
        let cfg = MollifierConfig::for_time(1.0, 1.0).unwrap();
        let m = Mollifier::new(&cfg, 1.0, 2000.0, ctx()).unwrap();
        let reals: Vec<f64> = (0..200).map(|i| -1000.0 + 10.03 * i as f64).collect();
        let imags: Vec<f64> = (0..40).map(|i| 0.5 + 49.0 * i as f64).collect();
        let chk = check_mollifier(&m, cfg.theta2, &reals, &imags).unwrap();
        assert!(chk.holds, "{chk:?}");
        assert_eq!(chk.at_zero, 1.0);
    }

    #[test]
    fn decays_on_the_real_axis() {
        let cfg = MollifierConfig::for_time(1.0, 1.0).unwrap();
        let m = Mollifier::new(&cfg, 1.0, 4000.0, ctx()).unwrap();
        let env = |x0: f64| {
            (0..16).map(|i| Float::with_val(256, m.eval_real(&ctx().float(x0 + 0.37 * i as f64)).unwrap().abs_ref()).ln().to_f64()).fold(f64::NEG_INFINITY, f64::max)
        };
        let (a, b) = (env(900.0), env(3600.0));
        // log|P| ≈ −c√x far out: doubling √x roughly doubles the decay
        assert!(a < -20.0 && b < a - 20.0, "{a} {b}");
    }
}
