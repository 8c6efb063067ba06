//! Null controls and control costs for parabolic systems reduced to
//! moment problems.
//!
//! A boundary control v drives the state y₀ = Σ c_k φ_k to zero at time T
//! iff ∫₀ᵀ v(T−t) e^{−Λ_k t} dt = e^{−Λ_k T} m_k for every k, where
//! m_k = −c_k/(b w_k) with b the control coefficient of the branch of Λ_k
//! and w_k the normal derivative of φ_k at the controlled end. The
//! minimal-norm solution is Σ_k e^{−Λ_k T} m_k s_k(T − t) in terms of the
//! biorthogonal family {s_k}.
//!
//! Everything here works on truncations to the first M modes. The
//! truncated cost K_M(T) increases with M towards K(T).
//!
//! Normalization choices: ‖y₀‖² = Σ|c_k|²/|Λ_k| (an H⁻¹ norm) and
//! w_k = √(2/π)·(mode index within its branch). Both only rescale K by
//! factors that do not depend on T.

mod cost;
mod minimal_time;

pub use cost::{
    control_cost, cost_plateau, condensation_exponent, cost_scaling_experiment, fit_affine, lemma58_probe, phase_field_cost, probe_mode, probe_time_limit, CostConfig, CostHistoryPoint, CostPoint,
    CostReport, CostValue, LinearFit, ProbeMode,
};
pub use minimal_time::{exponential_perturbations, minimal_time, MinimalTime};

use rug::float::Constant;
use rug::{Complex, Float};
use serde::Serialize;
use thiserror::Error;

use crate::example_sequences::ExampleError;
use crate::gram_biorthogonal::{exp_neg, gram_entry, GramError, MinimalFamily};
use crate::mp_numerics::{integrate, NumericsError, PrecisionContext};
use crate::sequence_core::{EigenSequence, SequenceError};

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("perturbation ε_{k} vanishes: the spectrum has a collision")]
    ZeroPerturbation { k: usize },
    #[error("control coefficient b_{component} is zero: the system is not approximately controllable")]
    ZeroControlVector { component: usize },
    #[error("T = {t} violates the probe condition T < {bound}")]
    GridInfeasible { t: f64, bound: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no cost plateau up to M = {m_max} at T = {t}")]
    NoPlateau { t: f64, m_max: usize },
    #[error(transparent)]
    Example(#[from] ExampleError),
    #[error(transparent)]
    Gram(#[from] GramError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

/// A truncated null-control problem.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub sequence: EigenSequence,
    /// Control coefficient per branch of the spectrum (b₁, b₂, …).
    pub b: Vec<f64>,
    pub t: f64,
    /// Number of modes kept.
    pub m: usize,
}

impl ControlProblem {
    pub fn new(sequence: &EigenSequence, b: &[f64], t: f64, m: usize) -> Result<Self, ControlError> {
        if !(t > 0.0 && t.is_finite()) || m == 0 || b.is_empty() {
            return Err(ControlError::InvalidInput(format!("need T > 0, M ≥ 1 and at least one control coefficient (T = {t}, M = {m})")));
        }
        Ok(Self { sequence: sequence.clone(), b: b.to_vec(), t, m })
    }

    /// The same problem with another horizon or truncation.
    pub fn with(&self, t: f64, m: usize) -> Result<Self, ControlError> {
        Self::new(&self.sequence, &self.b, t, m)
    }

    /// w_k = √(2/π)·(mode index) for k = 1..=M.
    pub fn weights(&self, ctx: PrecisionContext) -> Vec<Float> {
        let bits = ctx.bits();
        let root = Float::with_val(bits, Float::with_val(bits, 2u32) / Float::with_val(bits, Constant::Pi)).sqrt();
        self.sequence.origins(self.m).into_iter().map(|o| Float::with_val(bits, &root * o.index as u32)).collect()
    }

    /// b for each of the first M modes; zero entries are rejected.
    pub fn coefficients(&self) -> Result<Vec<f64>, ControlError> {
        self.sequence
            .origins(self.m)
            .into_iter()
            .map(|o| {
                let b = *self.b.get(o.family).ok_or_else(|| ControlError::InvalidInput(format!("no control coefficient for branch {}", o.family + 1)))?;
                if b == 0.0 || !b.is_finite() {
                    return Err(ControlError::ZeroControlVector { component: o.family + 1 });
                }
                Ok(b)
            })
            .collect()
    }

    /// D_kk = e^{−Λ_k T}√|Λ_k|/(b w_k).
    pub fn cost_scaling(&self, ctx: PrecisionContext) -> Result<Vec<Complex>, ControlError> {
        let bits = ctx.bits();
        let b = self.coefficients()?;
        let terms = self.sequence.terms(self.m, ctx)?;
        let w = self.weights(ctx);
        let t = ctx.float(self.t);
        Ok(terms
            .iter()
            .zip(&w)
            .zip(&b)
            .map(|((lam, wk), bk)| {
                let root = Float::with_val(bits, lam.abs_ref()).sqrt();
                exp_neg(lam, &t, bits) * root / Float::with_val(bits, wk * *bk)
            })
            .collect())
    }
}

/// Right-hand sides of the moment problem.
#[derive(Debug, Clone)]
pub struct MomentData {
    /// m_k = −c_k/(b w_k).
    pub m: Vec<Complex>,
    /// μ_k = e^{−Λ_k T} m_k.
    pub mu: Vec<Complex>,
    pub y0: Vec<Complex>,
    /// (Σ|c_k|²/|Λ_k|)^{1/2}.
    pub y0_norm: Float,
}

impl MomentData {
    /// max_k |m_k|/(k‖y₀‖).
    pub fn growth_constant(&self) -> f64 {
        let n = self.y0_norm.to_f64();
        self.m.iter().enumerate().map(|(i, m)| Float::with_val(m.prec().0, m.abs_ref()).to_f64() / ((i + 1) as f64 * n)).fold(0.0, f64::max)
    }
}

/// Moments of the initial state with eigenbasis coefficients `y0`
/// (missing entries are zero).
pub fn moment_data(problem: &ControlProblem, y0: &[Complex], ctx: PrecisionContext) -> Result<MomentData, ControlError> {
    if y0.len() > problem.m {
        return Err(ControlError::InvalidInput(format!("{} coefficients for {} modes", y0.len(), problem.m)));
    }
    if y0.iter().any(|c| !c.real().is_finite() || !c.imag().is_finite()) {
        return Err(ControlError::InvalidInput("initial coefficients must be finite".into()));
    }
    let bits = ctx.bits();
    let b = problem.coefficients()?;
    let w = problem.weights(ctx);
    let terms = problem.sequence.terms(problem.m, ctx)?;
    let t = ctx.float(problem.t);
    let mut c: Vec<Complex> = y0.iter().map(|v| Complex::with_val(bits, v)).collect();
    c.resize(problem.m, ctx.czero());
    let mut norm_sq = ctx.zero();
    let mut m = Vec::with_capacity(problem.m);
    let mut mu = Vec::with_capacity(problem.m);
    for (((ck, lam), wk), bk) in c.iter().zip(&terms).zip(&w).zip(&b) {
        norm_sq += Float::with_val(bits, ck.norm_ref()) / Float::with_val(bits, lam.abs_ref());
        let mk = -Complex::with_val(bits, ck / Float::with_val(bits, wk * *bk));
        mu.push(Complex::with_val(bits, &mk * exp_neg(lam, &t, bits)));
        m.push(mk);
    }
    Ok(MomentData { m, mu, y0: c, y0_norm: norm_sq.sqrt() })
}

/// The minimal-norm control of a truncated problem.
#[derive(Debug, Clone, Serialize)]
pub struct NullControl {
    pub times: Vec<f64>,
    /// v(t) at `times`, as (Re, Im).
    pub values: Vec<(f64, f64)>,
    /// ‖v‖ from the quadratic form Σ μ_j conj(μ_i) ⟨s_j, s_i⟩.
    pub norm: f64,
    /// ‖v‖ from Gauss–Legendre quadrature of |v|².
    pub norm_quadrature: f64,
    /// |∫₀ᵀ v(T−t) conj(e^{−Λ_k t}) dt − μ_k|/max(|μ|) per mode.
    pub moment_residuals: Vec<f64>,
}

/// v(T − t) = Σ_k μ_k s_k(t) from the family of the same truncation.
///
/// Moment residuals are recomputed independently by quadrature of the
/// expanded exponential sum.
pub fn solve_null_control(problem: &ControlProblem, data: &MomentData, family: &MinimalFamily, samples: usize) -> Result<NullControl, ControlError> {
    if family.order != problem.m || data.mu.len() != problem.m {
        return Err(ControlError::InvalidInput(format!("family order {} and {} moments for M = {}", family.order, data.mu.len(), problem.m)));
    }
    let bits = family.bits;
    let ctx = PrecisionContext::new(bits)?;
    let m = problem.m;
    // v(T − t) = Σ_n a_n e^{−Λ_n t}
    let mut a = vec![ctx.czero(); m];
    for (mu, row) in data.mu.iter().zip(&family.coefficients) {
        for (an, c) in a.iter_mut().zip(row) {
            *an += Complex::with_val(bits, mu * c);
        }
    }
    let mut quad_form = ctx.czero();
    for (j, mj) in data.mu.iter().enumerate() {
        for (i, mi) in data.mu.iter().enumerate() {
            quad_form += Complex::with_val(bits, mj * Complex::with_val(bits, mi.conj_ref())) * &family.coefficients[j][i];
        }
    }
    let norm = Float::with_val(bits, quad_form.real()).max(&ctx.zero()).sqrt();
    let terms = &family.terms;
    let t = ctx.float(problem.t);
    let eval = |s: &Float| {
        let mut acc = ctx.czero();
        for (an, lam) in a.iter().zip(terms) {
            acc += Complex::with_val(bits, an * exp_neg(lam, s, bits));
        }
        acc
    };
    let panels = 4 + m / 4;
    let nodes = 32;
    let sq = integrate(|s| ctx.complex(Float::with_val(bits, eval(s).norm_ref())), &ctx.zero(), &t, panels, nodes)?;
    let scale = data.mu.iter().map(|v| Float::with_val(bits, v.abs_ref())).fold(ctx.zero(), |acc, v| acc.max(&v));
    let mut moment_residuals = Vec::with_capacity(m);
    for (k, lam) in terms.iter().enumerate() {
        let conj = Complex::with_val(bits, lam.conj_ref());
        let q = integrate(|s| eval(s) * exp_neg(&conj, s, bits), &ctx.zero(), &t, panels, nodes)?;
        let r = Complex::with_val(bits, &q.value - &data.mu[k]);
        let r = Float::with_val(bits, r.abs_ref());
        moment_residuals.push(if scale.is_zero() { r.to_f64() } else { (r / &scale).to_f64() });
    }
    let count = samples.max(2);
    let mut times = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    for i in 0..count {
        let tau = Float::with_val(bits, &t * i as u32) / (count - 1) as u32;
        // v(τ) = Σ a_n e^{−Λ_n (T − τ)}
        let v = eval(&Float::with_val(bits, &t - &tau));
        times.push(tau.to_f64());
        values.push((v.real().to_f64(), v.imag().to_f64()));
    }
    Ok(NullControl {
        times,
        values,
        norm: norm.to_f64(),
        norm_quadrature: Float::with_val(bits, sq.value.real()).max(&ctx.zero()).sqrt().to_f64(),
        moment_residuals,
    })
}

/// ⟨e_k, e_n⟩ on (0, T), re-exported for callers assembling their own Gram blocks.
pub fn exponential_inner_product(lam_k: &Complex, lam_n: &Complex, t: f64, ctx: PrecisionContext) -> Option<Complex> {
    gram_entry(lam_k, lam_n, &ctx.float(t), ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example_sequences::{gen_perturbed, gen_quadratic};
    use crate::gram_biorthogonal::minimal_family;
    use crate::guichal_bounds::evaluate_lower_bounds;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(256).unwrap()
    }

    #[test]
    fn single_mode_moments() {
        let s = gen_quadratic(1.0, 0.0).unwrap();
        let p = ControlProblem::new(&s, &[1.0], 0.5, 6).unwrap();
        let mut y0 = vec![ctx().czero(); 6];
        y0[2] = ctx().complex(3);
        let d = moment_data(&p, &y0, ctx()).unwrap();
        let nonzero: Vec<usize> = d.m.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, _)| i).collect();
        assert_eq!(nonzero, vec![2]);
        // m₃ = −3/(√(2/π)·3)
        assert!((d.m[2].real().to_f64() + (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-15);
        assert!((d.y0_norm.to_f64() - 1.0).abs() < 1e-15);
        let doubled: Vec<Complex> = y0.iter().map(|v| Complex::with_val(256, v * 2u32)).collect();
        let d2 = moment_data(&p, &doubled, ctx()).unwrap();
        for (a, b) in d.m.iter().zip(&d2.m) {
            assert_eq!(Complex::with_val(256, a * 2u32), *b);
        }
    }

    #[test]
    fn zero_control_coefficient() {
        let s = gen_perturbed(0.5).unwrap();
        let p = ControlProblem::new(&s, &[0.0, 1.0], 0.5, 4).unwrap();
        assert!(matches!(moment_data(&p, &[ctx().complex(1)], ctx()), Err(ControlError::ZeroControlVector { component: 1 })));
        let p = ControlProblem::new(&s, &[1.0, 0.0], 0.5, 4).unwrap();
        assert!(matches!(moment_data(&p, &[ctx().complex(1)], ctx()), Err(ControlError::ZeroControlVector { component: 2 })));
    }

    #[test]
    fn null_control_single_mode_and_residuals() {
        let s = gen_quadratic(1.0, 0.0).unwrap();
        let p = ControlProblem::new(&s, &[1.0], 0.5, 8).unwrap();
        let fam = minimal_family(&s, 8, 0.5, ctx()).unwrap();
        let d = moment_data(&p, &[ctx().complex(1)], ctx()).unwrap();
        let u = solve_null_control(&p, &d, &fam, 33).unwrap();
        let mu1 = Float::with_val(256, d.mu[0].abs_ref()).to_f64();
        let want = mu1 * fam.norm(1).to_f64();
        assert!((u.norm - want).abs() < 1e-12 * want);
        assert!((u.norm_quadrature - want).abs() < 1e-9 * want);
        assert!(u.moment_residuals.iter().all(|r| *r < 1e-30), "{:?}", u.moment_residuals);
        // a mixed state
        let y0: Vec<Complex> = (1..=8).map(|k| ctx().complex(1.0 / k as f64)).collect();
        let d = moment_data(&p, &y0, ctx()).unwrap();
        let u = solve_null_control(&p, &d, &fam, 9).unwrap();
        assert!((u.norm - u.norm_quadrature).abs() < 1e-9 * u.norm);
        assert!(u.moment_residuals.iter().all(|r| *r < 1e-30));
        assert!(d.growth_constant().is_finite());
    }

    #[test]
    fn perturbed_mode_three_certificate() {
        let s = gen_perturbed(0.5).unwrap();
        let params = s.params().unwrap().clone();
        let t = 0.5;
        let c = PrecisionContext::new(512).unwrap();
        let m = 30;
        let p = ControlProblem::new(&s, &[1.0, 1.0], t, m).unwrap();
        let fam = minimal_family(&s, m, t, c).unwrap();
        let mut y0 = vec![c.czero(); m];
        y0[2] = c.complex(1);
        let d = moment_data(&p, &y0, c).unwrap();
        let u = solve_null_control(&p, &d, &fam, 3).unwrap();
        let lb = evaluate_lower_bounds(3, params.q, params.nu, params.delta, &s, t, c).unwrap();
        let six_over_pi2 = 6.0 / std::f64::consts::PI.powi(2);
        let plateau_branch = six_over_pi2 * lb.b_k.to_f64() * (1.0 / (t * params.nu)).exp() * lb.p_k.to_f64();
        let mu3 = Float::with_val(512, d.mu[2].abs_ref()).to_f64();
        assert!(u.norm >= plateau_branch * mu3, "{} < {}", u.norm, plateau_branch * mu3);
    }
}
