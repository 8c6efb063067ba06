use rug::Rational;
use serde::{Deserialize, Serialize};

/// The tuple (β, ρ, q, p₀, p₁, p₂, α) of the class together with ν and δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassParameters {
    pub beta: f64,
    pub rho: f64,
    pub q: u32,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub alpha: f64,
    pub nu: f64,
    pub delta: f64,
    /// Rational values of the same parameters, when they are rational.
    #[serde(skip)]
    pub exact: Option<ExactParameters>,
}

/// Exact rational parameters, used by the rational class checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactParameters {
    pub beta: Rational,
    pub rho: Rational,
    pub p0: Rational,
    pub p1: Rational,
    pub p2: Rational,
    pub alpha: Rational,
    pub nu: Rational,
}

impl ClassParameters {
    /// Parameters with δ = 1 (the real case, β = 0).
    #[allow(clippy::too_many_arguments)]
    pub fn new(beta: f64, rho: f64, q: u32, p0: f64, p1: f64, p2: f64, alpha: f64, nu: f64) -> Self {
        Self { beta, rho, q, p0, p1, p2, alpha, nu, delta: 1.0, exact: None }
    }

    pub fn from_exact(exact: ExactParameters, q: u32) -> Self {
        Self {
            beta: exact.beta.to_f64(),
            rho: exact.rho.to_f64(),
            q,
            p0: exact.p0.to_f64(),
            p1: exact.p1.to_f64(),
            p2: exact.p2.to_f64(),
            alpha: exact.alpha.to_f64(),
            nu: exact.nu.to_f64(),
            delta: 1.0,
            exact: Some(exact),
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_q(mut self, q: u32) -> Self {
        self.q = q;
        self
    }

    /// Consistency relations that every admissible tuple satisfies:
    /// positivity, p₁, p₂ ≥ p₀, p₁ ≤ 1/√ρ, 1/√ν ≤ p₂, δ ∈ (0, 1] and δ = 1
    /// when β = 0.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.rho > 0.0 && self.p0 > 0.0 && self.p1 > 0.0 && self.p2 > 0.0 && self.alpha > 0.0 && self.nu > 0.0) {
            out.push("ρ, p₀, p₁, p₂, α and ν must be positive".to_string());
        }
        if self.beta < 0.0 {
            out.push("β must be nonnegative".to_string());
        }
        if self.q == 0 {
            out.push("q must be at least 1".to_string());
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            out.push(format!("δ = {} is outside (0, 1]", self.delta));
        }
        if self.beta == 0.0 && self.delta != 1.0 {
            out.push("δ must equal 1 when β = 0".to_string());
        }
        match &self.exact {
            Some(e) => {
                if e.p1 < e.p0 || e.p2 < e.p0 {
                    out.push("p₁ and p₂ must be at least p₀".to_string());
                }
                if Rational::from(&e.p1 * &e.p1) * &e.rho > 1 {
                    out.push("p₁ exceeds 1/√ρ".to_string());
                }
                if Rational::from(&e.p2 * &e.p2) * &e.nu < 1 {
                    out.push("p₂ is below 1/√ν".to_string());
                }
            }
            None => {
                let slack = 1e-12;
                if self.p1 < self.p0 || self.p2 < self.p0 {
                    out.push("p₁ and p₂ must be at least p₀".to_string());
                }
                if self.p1 * self.p1 * self.rho > 1.0 + slack {
                    out.push("p₁ exceeds 1/√ρ".to_string());
                }
                if self.p2 * self.p2 * self.nu < 1.0 - slack {
                    out.push("p₂ is below 1/√ν".to_string());
                }
            }
        }
        out
    }
}

/// (q, ρ, ν) for a positive increasing real sequence with p₁ = p₂ = p:
/// q = ⌈3α⌉, ρ = 1/(3p²), ν = ((2+α)/p)²/3.
pub fn derive_params_real(p: f64, alpha: f64) -> (u32, f64, f64) {
    let q = (3.0 * alpha).ceil().max(1.0) as u32;
    let rho = 1.0 / (3.0 * p * p);
    let nu = ((2.0 + alpha) / p).powi(2) / 3.0;
    (q, rho, nu)
}

/// Exact rational form of [`derive_params_real`].
pub fn derive_params_real_exact(p: &Rational, alpha: &Rational) -> (u32, Rational, Rational) {
    let three_alpha = Rational::from(alpha * 3u32);
    let q = three_alpha.ceil().numer().to_u32().unwrap_or(u32::MAX).max(1);
    let p_sq = Rational::from(p * p);
    let rho = Rational::from(1) / (p_sq.clone() * 3u32);
    let two_plus = Rational::from(alpha + 2u32);
    let nu = Rational::from(&two_plus * &two_plus) / p_sq / 3u32;
    (q, rho, nu)
}

/// (p₀, p₁, p₂, α) implied by gap parameters (ρ, ν, q) and |Λ₁|:
/// p₀ = p₁ = 1/√ν, p₂ = 1/√ρ and
/// α = max{q − √(|Λ₁|/ρ), √(|Λ₁|/ρ + 1), √(|Λ₁|/ν) + 1}.
pub fn derive_params_from_gap(rho: f64, nu: f64, q: u32, lambda1_abs: f64) -> (f64, f64, f64, f64) {
    let p0 = 1.0 / nu.sqrt();
    let p2 = 1.0 / rho.sqrt();
    let ratio = lambda1_abs / rho;
    let alpha = (q as f64 - ratio.sqrt()).max((ratio + 1.0).sqrt()).max((lambda1_abs / nu).sqrt() + 1.0);
    (p0, p0, p2, alpha)
}
