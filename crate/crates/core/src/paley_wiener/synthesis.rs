use std::io::Write;

use rayon::prelude::*;
use rug::float::Constant;
use rug::{Assign, Complex, Float};
use serde::{Deserialize, Serialize};

use super::{choose_n, Mollifier, MollifierConfig, PaleyWienerError, ProductFk};
use crate::gram_biorthogonal::exp_neg;
use crate::mp_numerics::{composite_rule, PrecisionContext};
use crate::sequence_core::{ClassParameters, EigenSequence};

/// Quadrature settings for the inverse Fourier transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    /// Width of each Gauss–Legendre panel on the x-axis.
    pub panel_width: f64,
    pub nodes: usize,
    /// Number of uniform intervals of the t-grid on [0, T].
    pub t_intervals: usize,
    /// Target for the estimate of ∫_{|x|>X} |G_k(x)| dx.
    pub tail_tol: f64,
    pub x_start: f64,
    pub x_max: f64,
    /// Residuals are reported against e^{−Λ_n t} for n ≤ check_terms.
    pub check_terms: usize,
    /// Tolerance passed to the Weierstrass product tail bound.
    pub product_tail_tol: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            panel_width: 8.0,
            nodes: 48,
            t_intervals: 1024,
            tail_tol: 1e-10,
            x_start: 64.0,
            x_max: 1e5,
            check_terms: 10,
            product_tail_tol: 1e-40,
        }
    }
}

/// Evaluator of G_k(z) = f̃_k(−iz) P(z + Im Λ̃_k) / (√2π f̃_k(Λ̃_k) P(i Re Λ̃_k))
/// for k ≤ kmax on |z| ≤ radius, where f̃_k is the product over the
/// conjugate sequence Λ̃ = Λ̄. Then G_k(iΛ̄_n) = δ_{kn}/√2π.
#[derive(Debug, Clone)]
pub struct GkEvaluator {
    fk: ProductFk,
    moll: Mollifier,
    normalizers: Vec<Complex>,
    log_normalizers: Vec<f64>,
    shifts: Vec<Float>,
    radius: f64,
    ctx: PrecisionContext,
}

impl GkEvaluator {
    /// `radius` bounds |z| for the real points to be evaluated; the disc is
    /// widened to cover the interpolation nodes iΛ̄_n, n ≤ max(kmax, check_terms).
    pub fn new(
        seq: &EigenSequence,
        cfg: &MollifierConfig,
        t: f64,
        kmax: usize,
        check_terms: usize,
        radius: f64,
        tail_tol: f64,
        ctx: PrecisionContext,
    ) -> Result<Self, PaleyWienerError> {
        if kmax == 0 {
            return Err(PaleyWienerError::InvalidInput("kmax must be positive".into()));
        }
        let bits = ctx.bits();
        let reach = kmax.max(check_terms);
        let terms: Vec<Complex> = seq.terms(reach, ctx)?.into_iter().map(|z| z.conj()).collect();
        let max_abs = terms.iter().fold(0.0f64, |a, z| a.max(Float::with_val(bits, z.abs_ref()).to_f64()));
        let max_im = terms[..kmax].iter().fold(0.0f64, |a, z| a.max(z.imag().to_f64().abs()));
        let radius = radius.max(max_abs) + max_im;
        let fk = ProductFk::new(seq, radius, tail_tol, ctx)?.conjugated();
        let moll = Mollifier::new(cfg, t, radius, ctx)?;
        let root = Float::with_val(bits, Float::with_val(bits, Constant::Pi) * 2u32).sqrt();
        let mut normalizers = Vec::with_capacity(kmax);
        let mut log_normalizers = Vec::with_capacity(kmax);
        let mut shifts = Vec::with_capacity(kmax);
        for (i, lam) in terms[..kmax].iter().enumerate() {
            let f = fk.eval(i + 1, lam)?.value;
            let p = moll.eval(&ctx.complex((ctx.zero(), lam.real().clone())))?;
            let d = Complex::with_val(bits, &f * &p) * &root;
            let abs = Float::with_val(bits, d.abs_ref());
            let log_abs = if abs.is_zero() { f64::NEG_INFINITY } else { abs.ln().to_f64() };
            if !log_abs.is_finite() || log_abs < -0.9 * bits as f64 * std::f64::consts::LN_2 {
                return Err(PaleyWienerError::DegenerateNormalizer { k: i + 1, log_abs });
            }
            normalizers.push(d.recip());
            log_normalizers.push(log_abs);
            shifts.push(lam.imag().clone());
        }
        Ok(Self { fk, moll, normalizers, log_normalizers, shifts, radius, ctx })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn kmax(&self) -> usize {
        self.normalizers.len()
    }

    /// log|√2π f̃_k(Λ̃_k) P(i Re Λ̃_k)|.
    pub fn log_normalizer(&self, k: usize) -> f64 {
        self.log_normalizers[k - 1]
    }

    fn check_k(&self, k: usize) -> Result<(), PaleyWienerError> {
        if k == 0 || k > self.kmax() {
            return Err(PaleyWienerError::InvalidInput(format!("k = {k} outside 1..={}", self.kmax())));
        }
        Ok(())
    }

    /// G_k(z).
    pub fn eval(&self, k: usize, z: &Complex) -> Result<Complex, PaleyWienerError> {
        self.check_k(k)?;
        let bits = self.ctx.bits();
        let w = Complex::with_val(bits, z.mul_i_ref(true));
        let f = self.fk.eval(k, &w)?.value;
        let p = self.moll.eval(&Complex::with_val(bits, z + &self.shifts[k - 1]))?;
        Ok(f * p * &self.normalizers[k - 1])
    }

    /// G_1(x), …, G_kmax(x) at a real point, sharing the product over all terms.
    pub fn eval_real_all(&self, x: &Float) -> Result<Vec<Complex>, PaleyWienerError> {
        let bits = self.ctx.bits();
        let w = Complex::with_val(bits, (self.ctx.zero(), Float::with_val(bits, -x)));
        let full = self.fk.full(&w)?.value;
        let mut p_real: Option<Complex> = None;
        let mut out = Vec::with_capacity(self.kmax());
        for k in 1..=self.kmax() {
            let factor = Complex::with_val(bits, 1 - Complex::with_val(bits, &w / self.fk.term(k)));
            let f = if factor.is_zero() { self.fk.eval(k, &w)?.value } else { Complex::with_val(bits, &full / &factor) };
            let shift = &self.shifts[k - 1];
            let p = if shift.is_zero() {
                if p_real.is_none() {
                    p_real = Some(self.moll.eval_real(x)?);
                }
                p_real.clone().expect("set above")
            } else {
                self.moll.eval(&Complex::with_val(bits, (Float::with_val(bits, x + shift), self.ctx.zero())))?
            };
            out.push(f * p * &self.normalizers[k - 1]);
        }
        Ok(out)
    }

    /// max_n |√2π G_k(iΛ̄_n) − δ_{kn}| over n ≤ check_terms.
    pub fn interpolation_error(&self, k: usize, check_terms: usize) -> Result<f64, PaleyWienerError> {
        self.check_k(k)?;
        let bits = self.ctx.bits();
        let root = Float::with_val(bits, Float::with_val(bits, Constant::Pi) * 2u32).sqrt();
        let mut worst = 0.0f64;
        for n in 1..=check_terms.min(self.fk.prefix_len()) {
            let z = Complex::with_val(bits, self.fk.term(n).mul_i_ref(false));
            let mut v = self.eval(k, &z)? * &root;
            if n == k {
                v -= 1u32;
            }
            worst = worst.max(Float::with_val(bits, v.abs_ref()).to_f64());
        }
        Ok(worst)
    }
}

fn validate(params: &ClassParameters, cfg: &MollifierConfig, t: f64) -> Result<(), PaleyWienerError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(PaleyWienerError::InvalidInput(format!("T = {t} must be positive")));
    }
    let need = choose_n(t, params.p2, cfg.theta0, cfg.theta1);
    if cfg.n < need {
        return Err(PaleyWienerError::InvalidInput(format!("N = {} below the admissible minimum {need} for T = {t}", cfg.n)));
    }
    cfg.check(t)
}

/// G_k(z) for a single point.
pub fn construct_gk(
    seq: &EigenSequence,
    params: &ClassParameters,
    k: usize,
    t: f64,
    cfg: &MollifierConfig,
    z: &Complex,
    ctx: PrecisionContext,
) -> Result<Complex, PaleyWienerError> {
    validate(params, cfg, t)?;
    let radius = Float::with_val(ctx.bits(), z.abs_ref()).to_f64();
    GkEvaluator::new(seq, cfg, t, k, 0, radius, 1e-40, ctx)?.eval(k, z)
}

/// One synthesized q_k.
#[derive(Debug, Clone, Serialize)]
pub struct SynthesizedMember {
    pub k: usize,
    /// q_k at the t-grid points, as (Re, Im).
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
    /// ‖G_k‖_{L²(ℝ)}, from the x-quadrature plus the fitted tail.
    pub norm_plancherel: f64,
    /// ‖q_k‖_{L²(0,T)} from the t-grid.
    pub norm_direct: f64,
    /// Estimate of ∫_{|x|>X} |G_k(x)| dx.
    pub tail_estimate: f64,
    /// max_n |√2π G_k(iΛ̄_n) − δ_{kn}|.
    pub interpolation_error: f64,
    /// max_n |∫₀ᵀ q_k e^{−Λ̄_n t} dt − δ_{kn}|.
    pub max_residual: f64,
    pub log_normalizer: f64,
}

impl SynthesizedMember {
    pub fn norm_gap(&self) -> f64 {
        (self.norm_direct - self.norm_plancherel).abs() / self.norm_plancherel
    }
}

/// Sampled biorthogonal functions q_k with their diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SynthesizedFamily {
    pub sequence: String,
    #[serde(rename = "T")]
    pub t: f64,
    /// Fourier window [−X, X].
    #[serde(rename = "X")]
    pub window: f64,
    pub mollifier: MollifierConfig,
    pub quadrature: SynthesisConfig,
    pub precision_bits: u32,
    #[serde(skip)]
    pub times: Vec<f64>,
    pub members: Vec<SynthesizedMember>,
    /// residuals[i][n−1] = |∫₀ᵀ q_{k_i} e^{−Λ̄_n t} dt − δ_{k_i n}|.
    pub residuals: Vec<Vec<f64>>,
    pub tail_bound: f64,
}

impl SynthesizedFamily {
    pub fn member(&self, k: usize) -> Option<&SynthesizedMember> {
        self.members.iter().find(|m| m.k == k)
    }

    pub fn max_residual(&self) -> f64 {
        self.members.iter().map(|m| m.max_residual).fold(0.0, f64::max)
    }

    /// Long-form CSV with header `k,t,re,im`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), PaleyWienerError> {
        let io = |e: csv::Error| PaleyWienerError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "t", "re", "im"]).map_err(io)?;
        for m in &self.members {
            for (t, (re, im)) in self.times.iter().zip(&m.samples) {
                w.write_record([m.k.to_string(), format!("{t:.17e}"), format!("{re:.17e}"), format!("{im:.17e}")]).map_err(io)?;
            }
        }
        w.flush().map_err(|e| PaleyWienerError::Io(e.to_string()))
    }

    /// JSON metadata: N, θ's, window, precision, norms and residuals.
    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), PaleyWienerError> {
        serde_json::to_writer_pretty(writer, self).map_err(|e| PaleyWienerError::Io(e.to_string()))
    }
}

/// Upper envelope a − b√x through block maxima of log|G|.
fn envelope(blocks: &[(f64, f64)]) -> Option<(f64, f64)> {
    let half = blocks.len() / 2;
    let top = |s: &[(f64, f64)]| s.iter().copied().fold((0.0, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
    let (x1, a1) = top(&blocks[..half]);
    let (x2, a2) = top(&blocks[half..]);
    if !a1.is_finite() || !a2.is_finite() {
        return None;
    }
    let b = (a1 - a2) / (x2.sqrt() - x1.sqrt());
    if !(b > 0.0) {
        return None;
    }
    let a = blocks.iter().filter(|p| p.1.is_finite()).map(|p| p.1 + b * p.0.sqrt()).fold(f64::NEG_INFINITY, f64::max);
    Some((a, b))
}

/// ∫_X^∞ e^{a − b√x} dx.
fn envelope_tail(a: f64, b: f64, x: f64) -> f64 {
    (a - b * x.sqrt()).exp() * 2.0 * (x.sqrt() / b + 1.0 / (b * b))
}

const BLOCKS: usize = 24;
const BLOCK_POINTS: usize = 8;

/// Block maxima of log|G_k| over [X/4, X] (and its mirror for complex sequences).
fn block_maxima(ev: &GkEvaluator, ks: &[usize], x: f64, mirror: bool) -> Result<Vec<Vec<(f64, f64)>>, PaleyWienerError> {
    let ctx = ev.ctx;
    let lo = x / 4.0;
    let width = (x - lo) / BLOCKS as f64;
    let mut out = vec![Vec::with_capacity(BLOCKS); ks.len()];
    for b in 0..BLOCKS {
        let points: Vec<f64> = (0..BLOCK_POINTS).map(|i| lo + width * (b as f64 + (i as f64 + 0.5) / BLOCK_POINTS as f64)).collect();
        let signs: &[f64] = if mirror { &[1.0, -1.0] } else { &[1.0] };
        let mut best = vec![(0.0, f64::NEG_INFINITY); ks.len()];
        for &p in &points {
            for &s in signs {
                let vals = ev.eval_real_all(&ctx.float(s * p))?;
                for (slot, &k) in best.iter_mut().zip(ks) {
                    let a = Float::with_val(ctx.bits(), vals[k - 1].abs_ref());
                    let l = if a.is_zero() { f64::NEG_INFINITY } else { a.ln().to_f64() };
                    if l > slot.1 {
                        *slot = (p, l);
                    }
                }
            }
        }
        for (o, b) in out.iter_mut().zip(best) {
            o.push(b);
        }
    }
    Ok(out)
}

/// q_k(t) = (1/√2π) ∫ G_k(x) e^{−ixt} dx on a uniform t-grid, for each k in `ks`.
///
/// The window X doubles from `x_start` until the fitted envelope of |G_k|
/// puts less than `tail_tol` outside [−X, X] for every k. Inner products
/// with e^{−Λ̄_n t} use the trapezoid rule, which converges faster than any
/// power here because q_k vanishes to all orders at 0 and T.
pub fn synthesize_qk(
    seq: &EigenSequence,
    params: &ClassParameters,
    ks: &[usize],
    t: f64,
    cfg: &MollifierConfig,
    quad: &SynthesisConfig,
    ctx: PrecisionContext,
) -> Result<SynthesizedFamily, PaleyWienerError> {
    validate(params, cfg, t)?;
    if ks.is_empty() || ks.contains(&0) {
        return Err(PaleyWienerError::InvalidInput("indices must be a nonempty list of positive integers".into()));
    }
    if !(quad.panel_width > 0.0 && quad.nodes > 0 && quad.t_intervals > 1 && quad.tail_tol > 0.0 && quad.x_start > 0.0) {
        return Err(PaleyWienerError::InvalidInput(format!("invalid synthesis settings {quad:?}")));
    }
    let bits = ctx.bits();
    let kmax = *ks.iter().max().expect("nonempty");
    let real = seq.is_real();

    // window search
    let mut x = quad.x_start;
    let (ev, envelopes) = loop {
        let ev = GkEvaluator::new(seq, cfg, t, kmax, quad.check_terms, x, quad.product_tail_tol, ctx)?;
        let maxima = block_maxima(&ev, ks, x, !real)?;
        let envs: Vec<Option<(f64, f64)>> = maxima.iter().map(|m| envelope(m)).collect();
        let worst = envs
            .iter()
            .zip(ks)
            .map(|(e, &k)| (k, e.map_or(f64::INFINITY, |(a, b)| envelope_tail(a, b, x) * if real { 1.0 } else { 2.0 })))
            .fold((0, 0.0), |acc, p| if p.1 > acc.1 { p } else { acc });
        if worst.1 < quad.tail_tol {
            break (ev, envs.into_iter().map(|e| e.expect("finite tail")).collect::<Vec<_>>());
        }
        if 2.0 * x > quad.x_max {
            return Err(PaleyWienerError::WindowTooSmall { k: worst.0, x_max: quad.x_max, tol: quad.tail_tol, estimate: worst.1 });
        }
        x *= 2.0;
    };

    // x-quadrature nodes: [0, X] with conjugate symmetry for real sequences
    let panels = (x / quad.panel_width).ceil() as usize;
    let (lo, scale) = if real { (ctx.zero(), 1u32) } else { (ctx.float(-x), 2u32) };
    let rule = composite_rule(panels * scale as usize, quad.nodes, ctx)?;
    let (nodes, weights) = rule.mapped(&lo, &ctx.float(x));
    let values: Vec<Vec<Complex>> = nodes.par_iter().map(|xi| ev.eval_real_all(xi)).collect::<Result<_, _>>()?;

    let root = Float::with_val(bits, Float::with_val(bits, Constant::Pi) * 2u32).sqrt();
    let big_l = quad.t_intervals;
    let h = ctx.float(t) / big_l as u32;
    let mut acc: Vec<Vec<Complex>> = vec![vec![ctx.czero(); big_l + 1]; ks.len()];
    let mut plancherel = vec![ctx.zero(); ks.len()];
    let mut rot = ctx.czero();
    let mut wg = ctx.czero();
    let mut tmp = ctx.czero();
    for ((xi, wi), vals) in nodes.iter().zip(&weights).zip(&values) {
        let phase = Float::with_val(bits, xi * &h);
        let (s, c) = phase.sin_cos(ctx.zero());
        let step = Complex::with_val(bits, (c, -s));
        for (i, &k) in ks.iter().enumerate() {
            let g = &vals[k - 1];
            plancherel[i] += Float::with_val(bits, g.norm_ref()) * wi;
        }
        rot.assign(1u32);
        for j in 0..=big_l {
            for (i, &k) in ks.iter().enumerate() {
                wg.assign(&vals[k - 1] * wi);
                tmp.assign(&wg * &rot);
                acc[i][j] += &tmp;
            }
            rot *= &step;
        }
    }

    let factor = if real { Float::with_val(bits, 2u32 / &root) } else { Float::with_val(bits, root.recip_ref()) };
    let samples: Vec<Vec<Complex>> = acc
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|v| if real { ctx.complex((Float::with_val(bits, v.real() * &factor), ctx.zero())) } else { v * &factor })
                .collect()
        })
        .collect();

    // trapezoid inner products against e^{−Λ̄_n t}
    let check = quad.check_terms;
    let terms: Vec<Complex> = seq.terms(check.max(1), ctx)?.into_iter().map(|z| z.conj()).collect();
    let times: Vec<Float> = (0..=big_l).map(|j| Float::with_val(bits, &h * j as u32)).collect();
    let trap = |j: usize| if j == 0 || j == big_l { Float::with_val(bits, &h / 2u32) } else { h.clone() };
    let mut residuals = Vec::with_capacity(ks.len());
    let mut members = Vec::with_capacity(ks.len());
    let mut tail_bound = 0.0f64;
    for (i, &k) in ks.iter().enumerate() {
        let q = &samples[i];
        let mut row = Vec::with_capacity(check);
        for (n, lam) in terms.iter().enumerate().take(check) {
            let mut ip = ctx.czero();
            for (j, tj) in times.iter().enumerate() {
                ip += Complex::with_val(bits, &q[j] * exp_neg(lam, tj, bits)) * trap(j);
            }
            if n + 1 == k {
                ip -= 1u32;
            }
            row.push(Float::with_val(bits, ip.abs_ref()).to_f64());
        }
        let mut direct = ctx.zero();
        for (j, v) in q.iter().enumerate() {
            direct += Float::with_val(bits, v.norm_ref()) * trap(j);
        }
        let (a, b) = envelopes[i];
        let sides = if real { 2.0 } else { 1.0 };
        let sq_tail = 2.0 * envelope_tail(2.0 * a, 2.0 * b, x);
        let norm_plancherel = (Float::with_val(bits, &plancherel[i] * sides).to_f64() + sq_tail).sqrt();
        let tail_estimate = envelope_tail(a, b, x) * if real { 2.0 } else { 2.0 };
        tail_bound = tail_bound.max(tail_estimate);
        members.push(SynthesizedMember {
            k,
            samples: q.iter().map(|v| (v.real().to_f64(), v.imag().to_f64())).collect(),
            norm_plancherel,
            norm_direct: direct.sqrt().to_f64(),
            tail_estimate,
            interpolation_error: ev.interpolation_error(k, check)?,
            max_residual: row.iter().copied().fold(0.0, f64::max),
            log_normalizer: ev.log_normalizer(k),
        });
        residuals.push(row);
    }
    let mut mollifier = cfg.clone();
    mollifier.tail_truncation = ev.moll.tail_truncation();
    Ok(SynthesizedFamily {
        sequence: seq.label().to_string(),
        t,
        window: x,
        mollifier,
        quadrature: quad.clone(),
        precision_bits: bits,
        times: times.iter().map(Float::to_f64).collect(),
        members,
        residuals,
        tail_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example_sequences::gen_quadratic;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(256).unwrap()
    }

    fn setup() -> (EigenSequence, MollifierConfig) {
        let s = gen_quadratic(1.0, 0.0).unwrap();
        let cfg = MollifierConfig::for_time(1.0, s.params().unwrap().p2).unwrap();
        (s, cfg)
    }

    #[test]
    fn interpolation_property() {
        let (s, cfg) = setup();
        let ev = GkEvaluator::new(&s, &cfg, 1.0, 4, 8, 10.0, 1e-40, ctx()).unwrap();
        for k in 1..=4 {
            assert!(ev.interpolation_error(k, 8).unwrap() < 1e-60);
        }
        let root = (2.0 * std::f64::consts::PI).sqrt();
        let v = construct_gk(&s, s.params().unwrap(), 2, 1.0, &cfg, &ctx().complex((0.0, 4.0)), ctx()).unwrap();
        assert!((v.real().to_f64() - 1.0 / root).abs() < 1e-60);
    }

    #[test]
    fn conjugate_symmetry_and_shared_product() {
        let (s, cfg) = setup();
        let ev = GkEvaluator::new(&s, &cfg, 1.0, 3, 3, 200.0, 1e-40, ctx()).unwrap();
        for x in [0.5, 13.0, 170.0] {
            let all = ev.eval_real_all(&ctx().float(x)).unwrap();
            let neg = ev.eval_real_all(&ctx().float(-x)).unwrap();
            for k in 1..=3 {
                let direct = ev.eval(k, &ctx().complex(x)).unwrap();
                let d = Complex::with_val(256, &direct - &all[k - 1]);
                assert!(Float::with_val(256, d.abs_ref()).to_f64() < 1e-50 * (1.0 + Float::with_val(256, direct.abs_ref()).to_f64()));
                let c = Complex::with_val(256, neg[k - 1].conj_ref());
                let d = Complex::with_val(256, &c - &all[k - 1]);
                assert!(Float::with_val(256, d.abs_ref()).to_f64() < 1e-50 * (1.0 + Float::with_val(256, direct.abs_ref()).to_f64()));
            }
        }
    }

    #[test]
    fn decays_along_the_real_axis() {
        let (s, cfg) = setup();
        let ev = GkEvaluator::new(&s, &cfg, 1.0, 2, 2, 3200.0, 1e-40, ctx()).unwrap();
        let maxima = block_maxima(&ev, &[1, 2], 3200.0, false).unwrap();
        for m in &maxima {
            let (_, b) = envelope(m).expect("decaying envelope");
            assert!(b > 0.5, "{b}");
        }
    }

    #[test]
    fn rejects_small_n() {
        let (s, _) = setup();
        let cfg = MollifierConfig::with_n(5, 1.0, 1.0, 8.0, 2.0).unwrap();
        assert!(matches!(construct_gk(&s, s.params().unwrap(), 1, 1.0, &cfg, &ctx().complex(1), ctx()), Err(PaleyWienerError::InvalidInput(_))));
    }

    #[test]
    fn envelope_tail_closed_form() {
        // ∫_X^∞ e^{−√x} dx = 2(√X + 1)e^{−√X}
        let v = envelope_tail(0.0, 1.0, 16.0);
        assert!((v - 10.0 * (-4.0f64).exp()).abs() < 1e-15);
        assert!(envelope(&[(1.0, 0.0), (4.0, 1.0)]).is_none());
        let (a, b) = envelope(&[(1.0, 0.0), (4.0, -1.0), (9.0, -2.0), (16.0, -3.0)]).unwrap();
        assert!((b - 1.0).abs() < 1e-12 && (a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_family_is_biorthogonal() {
        let (s, cfg) = setup();
        let quad = SynthesisConfig { check_terms: 6, t_intervals: 512, ..Default::default() };
        let fam = synthesize_qk(&s, s.params().unwrap(), &[1, 2], 1.0, &cfg, &quad, ctx()).unwrap();
        assert!(fam.max_residual() < 1e-6, "{:?}", fam.residuals);
        for m in &fam.members {
            assert!(m.norm_gap() < 1e-6, "{m:?}");
        }
        let mut csv = Vec::new();
        fam.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 2 * 513);
        let mut js = Vec::new();
        fam.write_json(&mut js).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&js).unwrap();
        assert_eq!(v["mollifier"]["N"], 37);
    }
}
