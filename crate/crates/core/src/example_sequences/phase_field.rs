use rug::{Complex, Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use super::ExampleError;
use crate::mp_numerics::PrecisionContext;
use crate::sequence_core::{derive_params_real, ClassParameters, EigenSequence, Origin, TermSource};

/// Relative tolerance for recognizing ρ/(τξ) as a perfect square.
const RESONANCE_TOL: f64 = 1e-12;

/// Both eigenvalue branches of the phase-field operator:
/// λ¹_k = ξk² + c − r_k and λ²_k = ξk² + c + r_k with c = (ρ+1)/(2τ) and
/// r_k = √(ξρ/τ·k² + c²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFieldSpectrum {
    pub xi: f64,
    pub rho: f64,
    pub tau: f64,
    /// j₀ with ξ = ρ/(τj₀²), when such an integer exists.
    pub j0: Option<u32>,
    /// Interleaving threshold, computed at resonance only.
    pub k0: Option<usize>,
    /// sup ε_k = c²·√τ/(2√(ξρ)).
    pub eps_limit: f64,
}

/// A pair (k, ℓ), ℓ > k, at which the collision expression nearly vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Violation {
    pub k: u64,
    pub l: u64,
    pub value: f64,
}

impl PhaseFieldSpectrum {
    pub fn new(xi: f64, rho: f64, tau: f64) -> Result<Self, ExampleError> {
        for (name, v) in [("ξ", xi), ("ρ", rho), ("τ", tau)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ExampleError::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        let ratio = rho / (tau * xi);
        let j = ratio.sqrt().round();
        let j0 = (j >= 1.0 && (j * j - ratio).abs() <= RESONANCE_TOL * ratio).then_some(j as u32);
        let c = (rho + 1.0) / (2.0 * tau);
        let eps_limit = c * c * tau.sqrt() / (2.0 * (xi * rho).sqrt());
        let k0 = j0.map(|j| {
            let rhs = |k: f64| 0.5 * xi * (2.0 * k + j as f64 + 1.0);
            (1..).find(|&k| 2.0 * eps_limit / k as f64 <= rhs(k as f64)).expect("rhs grows")
        });
        Ok(Self { xi, rho, tau, j0, k0, eps_limit })
    }

    fn c(&self, ctx: PrecisionContext) -> Float {
        (ctx.float(self.rho) + 1u32) / (ctx.float(self.tau) * 2u32)
    }

    fn slope_sq(&self, ctx: PrecisionContext) -> Float {
        ctx.float(self.xi) * self.rho / self.tau
    }

    pub fn r(&self, k: u64, ctx: PrecisionContext) -> Float {
        let c = self.c(ctx);
        (self.slope_sq(ctx) * ctx.float(k).square() + c.square()).sqrt()
    }

    /// ε_k = c² / (√(ξρ/τ + c²/k²) + √(ξρ/τ)), so that r_k = k√(ξρ/τ) + ε_k/k.
    pub fn eps(&self, k: u64, ctx: PrecisionContext) -> Float {
        let c_sq = self.c(ctx).square();
        let s_sq = self.slope_sq(ctx);
        let inner = (Float::with_val(ctx.bits(), &c_sq / ctx.float(k).square()) + &s_sq).sqrt();
        c_sq / (inner + s_sq.sqrt())
    }

    fn quadratic_part(&self, k: u64, ctx: PrecisionContext) -> Float {
        ctx.float(self.xi) * ctx.float(k).square() + self.c(ctx)
    }

    pub fn lambda1(&self, k: u64, ctx: PrecisionContext) -> Float {
        // c − r_k = (c² − r_k²)/(c + r_k) avoids cancellation
        let c = self.c(ctx);
        let r = self.r(k, ctx);
        let num = -(self.slope_sq(ctx) * ctx.float(k).square());
        ctx.float(self.xi) * ctx.float(k).square() + num / (c + r)
    }

    pub fn lambda2(&self, k: u64, ctx: PrecisionContext) -> Float {
        self.quadratic_part(k, ctx) + self.r(k, ctx)
    }

    /// Number of leading terms sorted directly; beyond it the two
    /// branches alternate.
    pub fn head_len(&self) -> Option<usize> {
        Some(2 * self.k0? + self.j0? as usize - 2)
    }

    /// (branch, index) of the K-th term (1-based) in the tail K > head_len:
    /// λ¹_{(K+j₀+1)/2} when K + j₀ is odd, λ²_{(K−j₀)/2} otherwise.
    pub fn tail_term(&self, big_k: usize) -> Option<(usize, usize)> {
        let j0 = self.j0? as usize;
        (big_k > self.head_len()?).then(|| if (big_k + j0) % 2 == 1 { (0, (big_k + j0 + 1) / 2) } else { (1, (big_k - j0) / 2) })
    }

    /// The n smallest eigenvalues with their branch and index, sorted by
    /// direct comparison.
    fn sorted_prefix(&self, n: usize, ctx: PrecisionContext) -> Vec<(Float, Origin)> {
        let s = (self.xi * self.rho / self.tau).sqrt();
        let mut kmax = n.max(4);
        loop {
            let mut all: Vec<(Float, Origin)> = Vec::with_capacity(2 * kmax);
            for k in 1..=kmax {
                all.push((self.lambda1(k as u64, ctx), Origin { family: 0, index: k }));
                all.push((self.lambda2(k as u64, ctx), Origin { family: 1, index: k }));
            }
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
            all.truncate(n);
            let top = all.last().map_or(0.0, |t| t.0.to_f64());
            // λ¹_k ≥ ξk² − ks and λ²_k ≥ ξk², both increasing beyond s/(2ξ)
            let next = (kmax + 1) as f64;
            if next >= s / (2.0 * self.xi) && self.xi * next * next - next * s > top {
                return all;
            }
            kmax *= 2;
        }
    }
}

#[derive(Debug)]
struct PhaseFieldSource {
    spectrum: PhaseFieldSpectrum,
}

impl PhaseFieldSource {
    fn ordered(&self, n: usize, ctx: PrecisionContext) -> Vec<(Float, Origin)> {
        let Some(head) = self.spectrum.head_len() else {
            return self.spectrum.sorted_prefix(n, ctx);
        };
        let mut out = self.spectrum.sorted_prefix(n.min(head), ctx);
        for big_k in head + 1..=n {
            let (family, index) = self.spectrum.tail_term(big_k).expect("beyond head");
            let v = if family == 0 { self.spectrum.lambda1(index as u64, ctx) } else { self.spectrum.lambda2(index as u64, ctx) };
            out.push((v, Origin { family, index }));
        }
        out
    }
}

impl TermSource for PhaseFieldSource {
    fn generate(&self, n: usize, ctx: PrecisionContext) -> Vec<Complex> {
        self.ordered(n, ctx).into_iter().map(|(v, _)| ctx.complex(&v)).collect()
    }
    fn origins(&self, n: usize) -> Vec<Origin> {
        let ctx = PrecisionContext::new(128).expect("valid precision");
        self.ordered(n, ctx).into_iter().map(|(_, o)| o).collect()
    }
    fn is_real(&self) -> bool {
        true
    }
}

/// Scans ξ²τ²(ℓ²−k²)² − 2ξρτ(ℓ²+k²) − 2ρ − 1 for 1 ≤ k < ℓ ≤ kmax.
///
/// The expression is evaluated exactly from the binary values of the
/// inputs. A pair is reported when |E| < 2^{−b/4}·(1 + Σ|terms|) with
/// b = min(bits, 53), the mantissa width the inputs actually carry.
pub fn check_h2(xi: f64, rho: f64, tau: f64, kmax: usize, ctx: PrecisionContext) -> Vec<H2Violation> {
    let b = ctx.bits().min(53);
    scan_h2(xi, rho, tau, kmax, Some(Rational::from((1u32, Integer::from(1) << (b / 4)))))
}

/// Pairs 1 ≤ k < ℓ ≤ kmax where the H2 expression vanishes exactly.
pub fn check_h2_exact(xi: f64, rho: f64, tau: f64, kmax: usize) -> Vec<H2Violation> {
    scan_h2(xi, rho, tau, kmax, None)
}

fn scan_h2(xi: f64, rho: f64, tau: f64, kmax: usize, tol: Option<Rational>) -> Vec<H2Violation> {
    let q = |x: f64| Rational::from_f64(x).expect("finite input");
    let (xi, rho, tau) = (q(xi), q(rho), q(tau));
    let xt = Rational::from(&xi * &tau);
    let a = Rational::from(&xt * &xt);
    let two_xrt = Rational::from(&xt * &rho) * 2u32;
    let constant = Rational::from(&rho * 2u32) + 1u32;
    let mut out = Vec::new();
    for k in 1..kmax as u64 {
        for l in k + 1..=kmax as u64 {
            let diff = Integer::from(l * l - k * k);
            let sum = Integer::from(l * l + k * k);
            let t1 = Rational::from(&a * Integer::from(&diff * &diff));
            let t2 = Rational::from(&two_xrt * &sum);
            let value = Rational::from(&t1 - &t2) - &constant;
            let flagged = match &tol {
                Some(tol) => {
                    let scale = t1 + t2 + &constant + 1u32;
                    Rational::from(value.abs_ref()) < Rational::from(tol * &scale)
                }
                None => value == 0,
            };
            if flagged {
                out.push(H2Violation { k, l, value: value.to_f64() });
            }
        }
    }
    out
}

/// The phase-field spectrum and its increasing rearrangement.
///
/// Attached parameters: p₀ = p₁ = p₂ = p = 2/√ξ,
/// α = (√(ρ/τ) + √((3ρ+4)/τ))/(2√ξ) + 2, and (q, ρ, ν) from the
/// real-sequence derivation with that p and α.
pub fn gen_phase_field(xi: f64, rho: f64, tau: f64, h2_range: usize, ctx: PrecisionContext) -> Result<(PhaseFieldSpectrum, EigenSequence), ExampleError> {
    let spectrum = PhaseFieldSpectrum::new(xi, rho, tau)?;
    if let Some(v) = check_h2(xi, rho, tau, h2_range.max(2), ctx).into_iter().next() {
        return Err(ExampleError::H2Violation(v));
    }
    let p = 2.0 / xi.sqrt();
    let alpha = ((rho / tau).sqrt() + ((3.0 * rho + 4.0) / tau).sqrt()) / (2.0 * xi.sqrt()) + 2.0;
    let (q, rho_c, nu) = derive_params_real(p, alpha);
    let params = ClassParameters::new(0.0, rho_c, q, p, p, p, alpha, nu);
    let label = format!("phase_field(ξ={xi}, ρ={rho}, τ={tau})");
    let seq = EigenSequence::new(label, PhaseFieldSource { spectrum: spectrum.clone() }).with_params(params);
    Ok((spectrum, seq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence_core::{check_class, CheckStatus, Hypothesis};

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(256).unwrap()
    }

    #[test]
    fn unit_parameters_first_values() {
        let sp = PhaseFieldSpectrum::new(1.0, 1.0, 1.0).unwrap();
        let sqrt2 = std::f64::consts::SQRT_2;
        assert!((sp.r(1, ctx()).to_f64() - sqrt2).abs() < 1e-15);
        assert!((sp.eps(1, ctx()).to_f64() - (sqrt2 - 1.0)).abs() < 1e-15);
        assert!((sp.lambda1(1, ctx()).to_f64() - (2.0 - sqrt2)).abs() < 1e-15);
        assert_eq!(sp.j0, Some(1));
        assert_eq!(sp.eps_limit, 0.5);
        assert_eq!(PhaseFieldSpectrum::new(0.5, 1.0, 1.0).unwrap().j0, None);
        assert_eq!(PhaseFieldSpectrum::new(0.25, 1.0, 1.0).unwrap().j0, Some(2));
    }

    #[test]
    fn branches_ordered_and_eps_increasing() {
        for (xi, rho, tau) in [(1.0, 1.0, 1.0), (0.3, 2.0, 0.7), (2.0, 0.5, 3.0)] {
            let sp = PhaseFieldSpectrum::new(xi, rho, tau).unwrap();
            let mut prev = ctx().zero();
            for k in 1..=200 {
                let l1 = sp.lambda1(k, ctx());
                assert!(l1 > 0 && l1 < sp.lambda2(k, ctx()));
                let e = sp.eps(k, ctx());
                assert!(e > prev && e.to_f64() < sp.eps_limit);
                // r_k = k√(ξρ/τ) + ε_k/k
                let s = (xi * rho / tau).sqrt();
                assert!((sp.r(k, ctx()).to_f64() - (k as f64 * s + e.to_f64() / k as f64)).abs() < 1e-12 * k as f64);
                prev = e;
            }
        }
    }

    #[test]
    fn gap_identity_at_resonance() {
        for (xi, rho, tau) in [(1.0, 1.0, 1.0), (0.25, 1.0, 1.0), (1.0 / 9.0 * 9.0, 9.0, 1.0)] {
            let sp = PhaseFieldSpectrum::new(xi, rho, tau).unwrap();
            let j0 = sp.j0.unwrap() as u64;
            let c = ctx();
            for k in 1..=20u64 {
                for i in 0..=20u64 {
                    let lhs = sp.lambda2(k, c) - sp.lambda1(k + i, c);
                    let ki = k + i;
                    let main = Float::with_val(256, xi) * (j0 as i64 - i as i64) * (2 * k + i);
                    let rhs = main + sp.eps(ki, c) / ki + sp.eps(k, c) / k;
                    let err = (lhs - rhs).abs().to_f64();
                    assert!(err < 1e-60, "k={k} i={i} err={err}");
                }
            }
        }
    }

    #[test]
    fn rearrangement_matches_direct_sort() {
        for (xi, rho, tau) in [(1.0, 1.0, 1.0), (0.25, 1.0, 1.0), (0.5, 2.0, 1.0)] {
            let (sp, seq) = gen_phase_field(xi, rho, tau, 40, ctx()).unwrap();
            assert!(sp.head_len().is_some());
            let n = 300;
            let direct = sp.sorted_prefix(n, ctx());
            let terms = seq.terms(n, ctx()).unwrap();
            let origins = seq.origins(n);
            for (i, (d, o)) in direct.iter().enumerate() {
                assert_eq!(terms[i].real(), d, "K={}", i + 1);
                assert_eq!(origins[i], *o);
            }
        }
    }

    #[test]
    fn h2_scan() {
        assert!(check_h2(1.0, 1.0, 1.0, 50, ctx()).is_empty());
        let xi = (10.0 + 208f64.sqrt()) / 18.0;
        let v = check_h2(xi, 1.0, 1.0, 10, ctx());
        assert_eq!((v[0].k, v[0].l), (1, 2));
        assert!(matches!(gen_phase_field(xi, 1.0, 1.0, 10, ctx()), Err(ExampleError::H2Violation(_))));
        assert!(check_h2(1.0, 1.0, 1.0, 2, ctx()).iter().all(|v| v.l > v.k));
        // E(k, k+1) = −4 at ξ=ρ=τ=1: relative flags from k = 64 on, never an exact zero
        assert_eq!((check_h2(1.0, 1.0, 1.0, 65, ctx())[0].k, check_h2(1.0, 1.0, 1.0, 65, ctx())[0].l), (64, 65));
        assert!(check_h2_exact(1.0, 1.0, 1.0, 150).is_empty());
        // ξ = 3, ρ = 5/2, τ = 1 at (1, 2): 81 − 75 − 6 = 0
        let exact = check_h2_exact(3.0, 2.5, 1.0, 10);
        assert_eq!((exact[0].k, exact[0].l, exact[0].value), (1, 2, 0.0));
    }

    #[test]
    fn consecutive_gaps_vanish_at_resonance() {
        let (_, seq) = gen_phase_field(1.0, 1.0, 1.0, 40, ctx()).unwrap();
        let t = seq.terms(4000, ctx()).unwrap();
        let min_gap = t.windows(2).map(|w| (Float::with_val(256, w[1].real() - w[0].real())).to_f64()).fold(f64::MAX, f64::min);
        assert!(min_gap < 1e-3, "{min_gap}");
        let report = check_class(&seq, &seq.params().unwrap().clone().with_q(1), 600, ctx());
        assert_eq!(report.check(Hypothesis::H5).status, CheckStatus::Fail);
    }

    #[test]
    fn attached_parameters_pass() {
        for (xi, rho, tau) in [(1.0, 1.0, 1.0), (0.5, 2.0, 1.0)] {
            let (_, seq) = gen_phase_field(xi, rho, tau, 40, ctx()).unwrap();
            let p = seq.params().unwrap();
            if xi == 1.0 {
                assert_eq!(p.q, 12);
                assert!((p.rho - 1.0 / 12.0).abs() < 1e-15);
            }
            let r = check_class(&seq, p, 500, ctx());
            assert!(r.all_pass(), "{xi}: {:?}", r.failures().collect::<Vec<_>>());
        }
    }
}
