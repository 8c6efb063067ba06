//! Explicit upper and lower bound formulas for biorthogonal families, and
//! the Güichal constructions behind the lower bounds.
//!
//! Lower bounds ([`evaluate_lower_bounds`]) are certified quantities: for
//! k ≥ 3 every biorthogonal family satisfies ‖q_k‖ ≥ lower. Upper bounds
//! carry an unknown constant C, so [`evaluate_upper_form`] takes C as input
//! and [`fit_constant_c`] estimates it from observed norms.
//!
//! Factorials are exact integers; powers of ν, T and 1 + νT are computed
//! in MPFR, whose exponent range makes overflow a non-issue for the orders
//! used here.

mod coefficients;
pub mod lemmas;

pub use coefficients::{
    derivative_moments, exp_sum, guichal_coefficients, guichal_distance_estimate, guichal_profile, window_coefficients,
    GuichalWindow,
};

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mp_numerics::{NumericsError, PrecisionContext};
use crate::sequence_core::{condensation_product, ClassParameters, EigenSequence, SequenceError};

#[derive(Debug, Error)]
pub enum GuichalError {
    #[error("coincident terms Λ_{i} = Λ_{n} in the Güichal window")]
    DegenerateWindow { i: usize, n: usize },
    #[error("moment identity of order {j} fails with residual {residual:e}")]
    MomentIdentity { j: usize, residual: f64 },
    #[error("infeasible fit: {0}")]
    InfeasibleFit(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

/// H₁(ρ, q, p₁, p₂).
pub fn h1(params: &ClassParameters, real: bool) -> f64 {
    ln_h1(params, real).exp()
}

pub fn ln_h1(params: &ClassParameters, real: bool) -> f64 {
    let q = params.q as f64;
    let extra = if real { 0.0 } else { q * q };
    let base = (1.0 + params.rho * params.p2 * params.p2 + extra) / (params.rho.powi(2) * params.p1.powi(4));
    (2.0 * q - 2.0) * base.ln()
}

/// H₂(ρ, q, p₁, p₂, T).
pub fn h2(params: &ClassParameters, t: f64, real: bool) -> f64 {
    h3(params, real) + t.sqrt()
}

/// H₃(ρ, q, p₁, p₂), which is H₂ without the √T term.
pub fn h3(params: &ClassParameters, real: bool) -> f64 {
    let q = params.q as f64;
    let num = if real { 1.0 } else { 1.0 + q };
    1.0 + q + num / (params.rho.powi(2) * params.p1.powi(2)) + params.p2
}

/// The exponent 1 + H₂√|Λ_k| + (1 + p₂)²/T multiplying C.
pub fn upper_envelope(params: &ClassParameters, lam_k_abs: f64, t: f64, real: bool) -> f64 {
    1.0 + h2(params, t, real) * lam_k_abs.sqrt() + (1.0 + params.p2).powi(2) / t
}

/// H₁ exp[C(1 + H₂√|Λ_k| + (1 + p₂)²/T)] P_k.
pub fn evaluate_upper_form(params: &ClassParameters, lam_k_abs: f64, t: f64, p_k: f64, c: f64, real: bool) -> f64 {
    (ln_h1(params, real) + c * upper_envelope(params, lam_k_abs, t, real)).exp() * p_k
}

/// Inputs of the lower-bound formulas that depend on the sequence.
#[derive(Debug, Clone)]
pub struct LowerBoundInputs {
    pub k: usize,
    pub q: u32,
    pub nu: f64,
    pub delta: f64,
    pub t: f64,
    /// |Λ₁|.
    pub lambda1_abs: f64,
    /// |Λ_{k+1−q}|, used when k ≥ q.
    pub window_abs: f64,
    pub p_k: Float,
}

/// Which term attains the maximum in the combined lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominantTerm {
    Exponential,
    Window,
}

#[derive(Debug, Clone)]
pub struct LowerBounds {
    pub k: usize,
    pub q: u32,
    pub b_k: Float,
    pub e_k: Float,
    pub d_k: Float,
    pub p_k: Float,
    /// max{(6/π²) B_k e^{1/(Tν)}, E_k} P_k.
    pub combined: Float,
    pub dominant: DominantTerm,
    /// k ≥ 3, where the combined value bounds every biorthogonal family.
    pub certified: bool,
}

fn fact(n: usize) -> Integer {
    Integer::from(Integer::factorial(n as u32))
}

/// B_k, E_k, D_k and the combined lower bound from explicit inputs.
pub fn lower_bound_formulas(inp: &LowerBoundInputs, ctx: PrecisionContext) -> Result<LowerBounds, GuichalError> {
    let LowerBoundInputs { k, q, nu, delta, t, lambda1_abs, window_abs, .. } = *inp;
    if k == 0 || q == 0 {
        return Err(GuichalError::InvalidInput("k and q must be positive".into()));
    }
    if !(nu > 0.0 && delta > 0.0 && t > 0.0) {
        return Err(GuichalError::InvalidInput(format!("ν = {nu}, δ = {delta} and T = {t} must be positive")));
    }
    let bits = ctx.bits();
    let qs = q as usize;
    let (nu_f, t_f) = (ctx.float(nu), ctx.float(t));
    let nt = Float::with_val(bits, &nu_f * &t_f);
    let root = Float::with_val(bits, ctx.float(delta) * lambda1_abs + Float::with_val(bits, &t_f * 2u32).recip()).sqrt();

    // (νT)^{k+1} / (1 + νT)^{2k+q+1} · (2k+q−1)!/(2k+q+1)! · √(δ|Λ₁| + 1/(2T))
    let tail = Rational::from((fact(2 * k + qs - 1), fact(2 * k + qs + 1)));
    let common = Float::with_val(bits, (&nt).pow(k as u32 + 1)) / Float::with_val(bits, (Float::with_val(bits, &nt + 1u32)).pow((2 * k + qs + 1) as u32))
        * Float::with_val(bits, &tail)
        * &root;

    let qm1 = fact(qs - 1);
    let (b_coef, b_nu_exp, d_coef) = if k < qs {
        let b = Rational::from((Integer::from(&qm1 * fact(k + qs)), fact(qs + 3)));
        let d = Rational::from(Integer::from(&qm1 * fact(2 * k + qs - 1)));
        (b, (k + qs - 2) as u32, d)
    } else {
        let sq = Integer::from(&qm1 * &qm1);
        let b = Rational::from((Integer::from(&sq * fact(k + qs)) * k as u32, Integer::from(fact(qs + 3) * fact(2 * k - qs))));
        let d = Rational::from((Integer::from(&sq * fact(2 * k + qs - 1)) * k as u32, fact(2 * k - qs)));
        (b, 2 * (q - 1), d)
    };
    let nu_pow = Float::with_val(bits, (&nu_f).pow(b_nu_exp));
    let b_k = Float::with_val(bits, &b_coef) * &nu_pow * &common;
    let d_k = Float::with_val(bits, &d_coef) * &nu_pow * &root * &inp.p_k;

    let (r, lam) = if k < qs { (k + qs - 2, lambda1_abs) } else { (2 * qs - 2, window_abs) };
    let inner = Float::with_val(bits, ctx.float((2 * r + 1) as u32) / Float::with_val(bits, &t_f * 2u32)) + ctx.float(delta) * lam;
    let e_k = Float::with_val(bits, fact(r)) / Float::with_val(bits, (&t_f).pow(r as u32)) * inner.sqrt();

    let six_over_pi2 = Float::with_val(bits, 6u32) / Float::with_val(bits, ctx.pi().square_ref());
    let exp_term = six_over_pi2 * &b_k * Float::with_val(bits, nt.recip_ref()).exp();
    let (best, dominant) = if exp_term > e_k { (exp_term, DominantTerm::Exponential) } else { (e_k.clone(), DominantTerm::Window) };
    let combined = best * &inp.p_k;
    Ok(LowerBounds { k, q, b_k, e_k, d_k, p_k: inp.p_k.clone(), combined, dominant, certified: k >= 3 })
}

/// The lower bounds for Λ_k of `seq`, reading |Λ₁|, |Λ_{k+1−q}| and P_k from
/// the sequence.
pub fn evaluate_lower_bounds(k: usize, q: u32, nu: f64, delta: f64, seq: &EigenSequence, t: f64, ctx: PrecisionContext) -> Result<LowerBounds, GuichalError> {
    if k == 0 || q == 0 {
        return Err(GuichalError::InvalidInput("k and q must be positive".into()));
    }
    let moduli = seq.moduli(k, ctx)?;
    let lambda1_abs = moduli[0].to_f64();
    let window_abs = moduli[(k + 1).saturating_sub(q as usize).max(1) - 1].to_f64();
    let p_k = condensation_product(seq, k, q, ctx)?;
    lower_bound_formulas(&LowerBoundInputs { k, q, nu, delta, t, lambda1_abs, window_abs, p_k }, ctx)
}

/// Upper bound on the truncated distance d_{T,k} within the first M + 1
/// exponentials: D_k⁻¹ (q+3)!/(k+q)! (M+k+1)!/(M+1−k−q)² (νT)^M, valid for
/// k ≥ 3 and M ≥ k + q.
pub fn guichal_distance_bound(bounds: &LowerBounds, nu: f64, t: f64, m: usize, ctx: PrecisionContext) -> Result<Float, GuichalError> {
    let (k, qs) = (bounds.k, bounds.q as usize);
    if m < k + qs {
        return Err(GuichalError::InvalidInput(format!("M = {m} is below k + q = {}", k + qs)));
    }
    let bits = ctx.bits();
    let gap = (m + 1 - k - qs) as u64;
    let ratio = Rational::from((fact(qs + 3) * fact(m + k + 1), fact(k + qs) * Integer::from(gap * gap)));
    let nt = Float::with_val(bits, ctx.float(nu) * t);
    Ok(Float::with_val(bits, &ratio) * Float::with_val(bits, nt.pow(m as u32)) / &bounds.d_k)
}

/// How δ was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaSource {
    /// δ = 1 for real sequences.
    Real,
    /// min Re Λ_n/|Λ_n| over a prefix.
    Empirical,
}

/// min Re Λ_n/|Λ_n| over the first `prefix` terms.
pub fn empirical_delta(seq: &EigenSequence, prefix: usize, ctx: PrecisionContext) -> Result<f64, GuichalError> {
    let terms = seq.terms(prefix, ctx)?;
    Ok(terms.iter().map(|z| z.real().to_f64() / Float::with_val(ctx.bits(), z.abs_ref()).to_f64()).fold(f64::INFINITY, f64::min))
}

/// Every bound formula at one (k, T), with an optional observed norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub k: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub q: u32,
    pub p_k: f64,
    pub lambda_k_abs: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub b_k: f64,
    pub e_k: f64,
    pub d_k: f64,
    pub lower: f64,
    pub dominant: DominantTerm,
    pub delta: f64,
    pub delta_source: DeltaSource,
    pub certified: bool,
    pub observed_norm: Option<f64>,
    /// 1 + H₂√|Λ_k| + (1 + p₂)²/T.
    pub envelope: f64,
    pub ln_h1: f64,
}

impl BoundReport {
    /// The upper bound evaluated at a given constant C.
    pub fn upper_form(&self, c: f64) -> f64 {
        (self.ln_h1 + c * self.envelope).exp() * self.p_k
    }

    /// Whether lower ≤ observed, for certified k with an observation.
    pub fn lower_bound_holds(&self) -> Option<bool> {
        match self.observed_norm {
            Some(obs) if self.certified => Some(self.lower <= obs),
            _ => None,
        }
    }
}

/// Builds the [`BoundReport`] of `seq` at (k, T).
pub fn bound_report(seq: &EigenSequence, params: &ClassParameters, k: usize, t: f64, observed_norm: Option<f64>, ctx: PrecisionContext) -> Result<BoundReport, GuichalError> {
    let real = seq.is_real();
    let (delta, delta_source) = if real { (1.0, DeltaSource::Real) } else { (empirical_delta(seq, (k + params.q as usize).max(500), ctx)?, DeltaSource::Empirical) };
    let lb = evaluate_lower_bounds(k, params.q, params.nu, delta, seq, t, ctx)?;
    let lambda_k_abs = seq.moduli(k, ctx)?[k - 1].to_f64();
    Ok(BoundReport {
        k,
        t,
        q: params.q,
        p_k: lb.p_k.to_f64(),
        lambda_k_abs,
        h1: h1(params, real),
        h2: h2(params, t, real),
        h3: h3(params, real),
        b_k: lb.b_k.to_f64(),
        e_k: lb.e_k.to_f64(),
        d_k: lb.d_k.to_f64(),
        lower: lb.combined.to_f64(),
        dominant: lb.dominant,
        delta,
        delta_source,
        certified: lb.certified,
        observed_norm,
        envelope: upper_envelope(params, lambda_k_abs, t, real),
        ln_h1: ln_h1(params, real),
    })
}

/// Writes the bound table (k, T, lower, observed, upper_form_at_C_fit, slack),
/// where slack is ln(upper/observed).
pub fn write_bound_table<W: std::io::Write>(reports: &[BoundReport], c_fit: Option<f64>, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "T", "lower", "observed", "upper_form_at_C_fit", "slack"])?;
    for r in reports {
        let upper = c_fit.map(|c| r.upper_form(c));
        let slack = match (upper, r.observed_norm) {
            (Some(u), Some(o)) => Some((u / o).ln()),
            _ => None,
        };
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:e}"));
        w.write_record([r.k.to_string(), r.t.to_string(), format!("{:e}", r.lower), opt(r.observed_norm), opt(upper), opt(slack)])?;
    }
    w.flush()?;
    Ok(())
}

/// One observed minimal norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub k: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub norm: f64,
    pub p_k: f64,
    pub lambda_k_abs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantFit {
    pub c: f64,
    /// Index of the observation attaining the maximum.
    pub binding: usize,
    /// C·envelope − ln(norm/P_k) for each observation, all ≥ 0.
    pub slack: Vec<f64>,
    /// At least 10 observations over at least two values of T.
    pub well_posed: bool,
}

/// Smallest C ≥ 0 with ln(norm/P_k) ≤ C(1 + H₂√|Λ_k| + (1 + p₂)²/T) for
/// every observation.
pub fn fit_constant_c(observed: &[Observation], params: &ClassParameters, real: bool) -> Result<ConstantFit, GuichalError> {
    if observed.is_empty() {
        return Err(GuichalError::InvalidInput("no observations".into()));
    }
    let mut logs = Vec::with_capacity(observed.len());
    for (i, o) in observed.iter().enumerate() {
        let ratio = o.norm / o.p_k;
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(GuichalError::InfeasibleFit(format!("observation {i} has norm/P_k = {ratio}")));
        }
        logs.push((ratio.ln(), upper_envelope(params, o.lambda_k_abs, o.t, real)));
    }
    let (binding, c) = logs.iter().map(|(l, e)| l / e).enumerate().fold((0, 0.0f64), |(bi, bc), (i, v)| if v > bc { (i, v) } else { (bi, bc) });
    let slack = logs.iter().map(|(l, e)| c * e - l).collect();
    let mut ts: Vec<f64> = observed.iter().map(|o| o.t).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    Ok(ConstantFit { c, binding, slack, well_posed: observed.len() >= 10 && ts.len() >= 2 })
}
