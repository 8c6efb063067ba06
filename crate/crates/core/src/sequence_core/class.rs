use std::fmt;

use rug::{Complex, Float, Rational};
use serde::Serialize;

use super::{ClassParameters, EigenSequence, ExactParameters, SequenceError};
use crate::mp_numerics::PrecisionContext;

/// The hypotheses of the class, plus the upper two-sided comparison with ν.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Hypothesis {
    H1,
    H2,
    H3,
    H4,
    H5,
    H6,
    Item6,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 7] = [Self::H1, Self::H2, Self::H3, Self::H4, Self::H5, Self::H6, Self::Item6];

    pub fn name(&self) -> &'static str {
        match self {
            Self::H1 => "H1",
            Self::H2 => "H2",
            Self::H3 => "H3",
            Self::H4 => "H4",
            Self::H5 => "H5",
            Self::H6 => "H6",
            Self::Item6 => "item6",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckStatus {
    /// Holds on every checked index and radius; only evidence of membership.
    Pass,
    Fail,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Pass => write!(f, "PASS (prefix-verified)"),
            Self::Fail => write!(f, "FAIL"),
        }
    }
}

/// Concrete data reproducing a violation: indices k, n and/or radius r.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub r: Option<f64>,
    pub note: String,
}

impl Witness {
    fn index(k: usize, note: impl Into<String>) -> Self {
        Self { k: Some(k), n: None, r: None, note: note.into() }
    }
    fn pair(k: usize, n: usize, note: impl Into<String>) -> Self {
        Self { k: Some(k), n: Some(n), r: None, note: note.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub hypothesis: Hypothesis,
    pub status: CheckStatus,
    pub witness: Option<Witness>,
    /// Worst observed ratio or slack; ≥ 1 (ratios) or ≥ 0 (H6 slack) on a pass.
    pub margin: Option<f64>,
}

impl HypothesisCheck {
    fn new(hypothesis: Hypothesis, witness: Option<Witness>, margin: Option<f64>) -> Self {
        let status = if witness.is_some() { CheckStatus::Fail } else { CheckStatus::Pass };
        Self { hypothesis, status, witness, margin }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassReport {
    pub label: String,
    pub checks: Vec<HypothesisCheck>,
    pub checked_prefix: usize,
    /// min over tested r of the distance from N(r) to the nearer H6 bound.
    pub counting_margin: f64,
    pub exact_arithmetic: bool,
    pub parameter_violations: Vec<String>,
}

impl ClassReport {
    pub fn check(&self, h: Hypothesis) -> &HypothesisCheck {
        self.checks.iter().find(|c| c.hypothesis == h).expect("every hypothesis is checked")
    }

    pub fn passed(&self, h: Hypothesis) -> bool {
        self.check(h).status == CheckStatus::Pass
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == CheckStatus::Pass) && self.parameter_violations.is_empty()
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

const GRID_POINTS: usize = 256;

/// Checks H1–H6 and the ν comparison on the first `prefix` terms.
///
/// H6 is tested at every jump |Λ_k| of the prefix, at the left limit of
/// each jump, and on a log-spaced grid of [|Λ₁|/2, 2|Λ_prefix|]. Rational
/// arithmetic is used when both the sequence and the parameters are
/// rational; otherwise comparisons carry a relative slack of 2^{−bits/2}.
pub fn check_class(seq: &EigenSequence, params: &ClassParameters, prefix: usize, ctx: PrecisionContext) -> ClassReport {
    let prefix = seq.known_prefix_length().map_or(prefix, |c| c.min(prefix)).max(1);
    let parameter_violations = params.invariant_violations();
    let exact = match (&params.exact, seq.exact_terms(prefix)) {
        (Some(e), Some(terms)) => Some((e, terms)),
        _ => None,
    };
    let (checks, counting_margin, exact_arithmetic) = match exact {
        Some((e, terms)) => {
            let extended = extend_exact(seq, &terms);
            let (checks, margin) = exact_checks(&terms, &extended, e, params.q);
            (checks, margin, true)
        }
        None => {
            let (checks, margin) = float_checks(seq, params, prefix, ctx);
            (checks, margin, false)
        }
    };
    ClassReport { label: seq.label().to_string(), checks, checked_prefix: prefix, counting_margin, exact_arithmetic, parameter_violations }
}

fn extend_exact(seq: &EigenSequence, prefix_terms: &[Rational]) -> Vec<Rational> {
    let target = Rational::from(prefix_terms.last().expect("nonempty").clone().abs() * 2u32);
    let mut n = prefix_terms.len() * 2;
    loop {
        let cap = seq.known_prefix_length();
        if let Some(c) = cap {
            n = n.min(c);
        }
        let terms = seq.exact_terms(n).expect("exact source");
        if terms.last().is_some_and(|t| t.clone().abs() > target) || cap == Some(n) {
            return terms;
        }
        n *= 2;
    }
}

fn log_grid(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..GRID_POINTS).map(|i| (a + (b - a) * i as f64 / (GRID_POINTS - 1) as f64).exp()).collect()
}

fn first_duplicate<T: PartialOrd>(values: &[T], equal: impl Fn(&T, &T) -> bool) -> Option<(usize, usize)> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx.windows(2)
        .find(|w| equal(&values[w[0]], &values[w[1]]))
        .map(|w| (w[0].min(w[1]) + 1, w[0].max(w[1]) + 1))
}

fn sq_diff(k: usize, n: usize) -> u64 {
    let (k, n) = (k as u64, n as u64);
    k * k - n * n
}

fn exact_checks(terms: &[Rational], extended: &[Rational], e: &ExactParameters, q: u32) -> (Vec<HypothesisCheck>, f64) {
    let mut checks = Vec::with_capacity(7);
    let dup = first_duplicate(terms, |a, b| a == b).map(|(k, n)| Witness::pair(k, n, "equal terms"));
    checks.push(HypothesisCheck::new(Hypothesis::H1, dup, None));
    let h2 = terms.iter().position(|t| *t <= 0).map(|i| Witness::index(i + 1, format!("Re Λ = {}", terms[i].to_f64())));
    checks.push(HypothesisCheck::new(Hypothesis::H2, h2, None));
    checks.push(HypothesisCheck::new(Hypothesis::H3, None, None));
    let moduli: Vec<Rational> = terms.iter().map(|t| t.clone().abs()).collect();
    let h4 = moduli.windows(2).position(|w| w[0] > w[1]).map(|i| Witness::pair(i + 1, i + 2, "modulus decreases"));
    checks.push(HypothesisCheck::new(Hypothesis::H4, h4, None));

    let q = q as usize;
    let mut h5 = None;
    let mut h5_margin = f64::INFINITY;
    let mut i6 = None;
    let mut i6_margin = f64::INFINITY;
    let mut diff = Rational::new();
    let mut bound = Rational::new();
    for k in 2..=terms.len() {
        for n in 1..k {
            diff.assign_sub_abs(&terms[k - 1], &terms[n - 1]);
            let s = sq_diff(k, n);
            if k - n >= q {
                bound.assign_mul_int(&e.rho, s);
                if h5.is_none() && bound > diff {
                    h5 = Some(Witness::pair(k, n, "ρ|k²−n²| exceeds |Λ_k−Λ_n|"));
                }
                h5_margin = h5_margin.min(diff.to_f64() / bound.to_f64());
            }
            bound.assign_mul_int(&e.nu, s);
            if i6.is_none() && diff > bound {
                i6 = Some(Witness::pair(k, n, "|Λ_k−Λ_n| exceeds ν|k²−n²|"));
            }
            if !diff.is_zero() {
                i6_margin = i6_margin.min(bound.to_f64() / diff.to_f64());
            }
        }
    }
    checks.push(HypothesisCheck::new(Hypothesis::H5, h5, finite(h5_margin)));

    let mut sorted: Vec<Rational> = extended.iter().map(|t| t.clone().abs()).collect();
    sorted.sort();
    let p1_sq = Rational::from(&e.p1 * &e.p1);
    let p2_sq = Rational::from(&e.p2 * &e.p2);
    let mut witness = None;
    let mut margin = f64::INFINITY;
    if e.p1 < e.p0 || e.p2 < e.p0 {
        witness = Some(Witness { k: None, n: None, r: None, note: "p₁, p₂ ≥ p₀ fails".into() });
    }
    let mut test = |r: &Rational, count: usize, k: Option<usize>, lower_only: bool| {
        let n = Rational::from(count);
        let n_plus = Rational::from(&n + &e.alpha);
        let lower_ok = Rational::from(&p1_sq * r) <= Rational::from(&n_plus * &n_plus);
        let n_minus = Rational::from(&n - &e.alpha);
        let upper_ok = lower_only || n_minus <= 0 || Rational::from(&n_minus * &n_minus) <= Rational::from(&p2_sq * r);
        let rf = r.to_f64();
        let slack_lo = n_plus.to_f64() - e.p1.to_f64() * rf.sqrt();
        let slack_hi = if lower_only { f64::INFINITY } else { e.alpha.to_f64() + e.p2.to_f64() * rf.sqrt() - n.to_f64() };
        margin = margin.min(slack_lo.min(slack_hi));
        if witness.is_none() && !(lower_ok && upper_ok) {
            let side = if lower_ok { "N(r) above α + p₂√r" } else { "N(r) below −α + p₁√r" };
            witness = Some(Witness { k, n: None, r: Some(rf), note: side.into() });
        }
    };
    for (k, r) in moduli.iter().enumerate() {
        let at = sorted.partition_point(|x| x <= r);
        let before = sorted.partition_point(|x| x < r);
        test(r, at, Some(k + 1), false);
        test(r, before, Some(k + 1), true);
    }
    let hi_cap = sorted.last().expect("nonempty").to_f64();
    let lo = moduli[0].to_f64() / 2.0;
    let hi = (2.0 * moduli.last().expect("nonempty").to_f64()).min(hi_cap);
    if hi > lo {
        for r in log_grid(lo, hi) {
            let r = Rational::from_f64(r).expect("finite grid point");
            let count = sorted.partition_point(|x| *x <= r);
            test(&r, count, None, false);
        }
    }
    checks.push(HypothesisCheck::new(Hypothesis::H6, witness, finite(margin)));
    checks.push(HypothesisCheck::new(Hypothesis::Item6, i6, finite(i6_margin)));
    (checks, margin)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

trait RationalExt {
    fn assign_sub_abs(&mut self, a: &Rational, b: &Rational);
    fn assign_mul_int(&mut self, a: &Rational, m: u64);
}

impl RationalExt for Rational {
    fn assign_sub_abs(&mut self, a: &Rational, b: &Rational) {
        use rug::Assign;
        self.assign(a - b);
        self.abs_mut();
    }
    fn assign_mul_int(&mut self, a: &Rational, m: u64) {
        use rug::Assign;
        self.assign(a * m);
    }
}

fn float_checks(seq: &EigenSequence, params: &ClassParameters, prefix: usize, ctx: PrecisionContext) -> (Vec<HypothesisCheck>, f64) {
    let bits = ctx.bits();
    let terms = seq.terms(prefix, ctx).expect("prefix within the generator range");
    let tol = ctx.half_epsilon();
    let one_plus = Float::with_val(bits, &tol + 1u32);
    let mut checks = Vec::with_capacity(7);

    let keyed: Vec<(Float, Float)> = terms.iter().map(|z| (z.real().clone(), z.imag().clone())).collect();
    let dup = first_duplicate(&keyed, |a, b| a.0 == b.0 && a.1 == b.1).map(|(k, n)| Witness::pair(k, n, "coincident terms"));
    checks.push(HypothesisCheck::new(Hypothesis::H1, dup, None));

    let h2 = terms.iter().position(|z| *z.real() <= 0).map(|i| Witness::index(i + 1, format!("Re Λ = {}", terms[i].real().to_f64())));
    checks.push(HypothesisCheck::new(Hypothesis::H2, h2, None));

    let beta_sq = Float::with_val(bits, params.beta * params.beta);
    let mut h3 = None;
    let mut h3_margin = f64::INFINITY;
    for (i, z) in terms.iter().enumerate() {
        let im_sq = Float::with_val(bits, z.imag().square_ref());
        let rhs = Float::with_val(bits, &beta_sq * z.real());
        if h3.is_none() && im_sq > Float::with_val(bits, &rhs * &one_plus) {
            h3 = Some(Witness::index(i + 1, "|Im Λ| exceeds β√Re Λ"));
        }
        if !im_sq.is_zero() {
            h3_margin = h3_margin.min((rhs / im_sq).to_f64().sqrt());
        }
    }
    checks.push(HypothesisCheck::new(Hypothesis::H3, h3, finite(h3_margin)));

    let moduli: Vec<Float> = terms.iter().map(|z| Float::with_val(bits, z.abs_ref())).collect();
    let h4 = moduli
        .windows(2)
        .position(|w| w[0] > Float::with_val(bits, &w[1] * &one_plus))
        .map(|i| Witness::pair(i + 1, i + 2, "modulus decreases"));
    checks.push(HypothesisCheck::new(Hypothesis::H4, h4, None));

    let q = params.q as usize;
    let rho_sq = params.rho * params.rho;
    let nu_sq = params.nu * params.nu;
    let (mut h5, mut i6) = (None, None);
    let (mut h5_margin, mut i6_margin) = (f64::INFINITY, f64::INFINITY);
    let mut d = Complex::new(bits);
    let mut dn = Float::new(bits);
    for k in 2..=terms.len() {
        for n in 1..k {
            use rug::Assign;
            d.assign(&terms[k - 1] - &terms[n - 1]);
            dn.assign(d.norm_ref());
            let s = sq_diff(k, n) as f64;
            if k - n >= q {
                let bound = Float::with_val(bits, rho_sq * s * s);
                if h5.is_none() && bound > Float::with_val(bits, &dn * &one_plus) {
                    h5 = Some(Witness::pair(k, n, "ρ|k²−n²| exceeds |Λ_k−Λ_n|"));
                }
                h5_margin = h5_margin.min((dn.to_f64() / bound.to_f64()).sqrt());
            }
            let bound = Float::with_val(bits, nu_sq * s * s);
            if i6.is_none() && dn > Float::with_val(bits, &bound * &one_plus) {
                i6 = Some(Witness::pair(k, n, "|Λ_k−Λ_n| exceeds ν|k²−n²|"));
            }
            if !dn.is_zero() {
                i6_margin = i6_margin.min((bound.to_f64() / dn.to_f64()).sqrt());
            }
        }
    }
    checks.push(HypothesisCheck::new(Hypothesis::H5, h5, finite(h5_margin)));

    let last = moduli.last().expect("nonempty").clone();
    let target = Float::with_val(bits, &last * 2u32);
    let mut sorted = match seq.prefix_beyond(&target, ctx) {
        Ok(m) => m,
        Err(_) => seq.moduli(seq.known_prefix_length().unwrap_or(prefix), ctx).expect("within range"),
    };
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite moduli"));
    let alpha = ctx.float(params.alpha);
    let p1 = ctx.float(params.p1);
    let p2 = ctx.float(params.p2);
    let mut witness = None;
    if params.p1 < params.p0 || params.p2 < params.p0 {
        witness = Some(Witness { k: None, n: None, r: None, note: "p₁, p₂ ≥ p₀ fails".into() });
    }
    let mut margin = f64::INFINITY;
    let mut test = |r: &Float, count: usize, k: Option<usize>, lower_only: bool| {
        let root = Float::with_val(bits, r.sqrt_ref());
        let n = ctx.float(count);
        let slack_lo = Float::with_val(bits, &n + &alpha) - Float::with_val(bits, &p1 * &root);
        let slack_hi = Float::with_val(bits, &alpha + Float::with_val(bits, &p2 * &root)) - &n;
        let scale = Float::with_val(bits, &n + &alpha) * &tol;
        let lower_ok = slack_lo >= Float::with_val(bits, -&scale);
        let upper_ok = lower_only || slack_hi >= Float::with_val(bits, -&scale);
        let s = if lower_only { slack_lo.to_f64() } else { slack_lo.to_f64().min(slack_hi.to_f64()) };
        margin = margin.min(s);
        if witness.is_none() && !(lower_ok && upper_ok) {
            let side = if lower_ok { "N(r) above α + p₂√r" } else { "N(r) below −α + p₁√r" };
            witness = Some(Witness { k, n: None, r: Some(r.to_f64()), note: side.into() });
        }
    };
    for (k, r) in moduli.iter().enumerate() {
        let at = sorted.partition_point(|x| x <= r);
        let before = sorted.partition_point(|x| x < r);
        test(r, at, Some(k + 1), false);
        test(r, before, Some(k + 1), true);
    }
    let lo = moduli[0].to_f64() / 2.0;
    let hi = (2.0 * last.to_f64()).min(sorted.last().expect("nonempty").to_f64());
    if hi > lo {
        for r in log_grid(lo, hi) {
            let r = ctx.float(r);
            let count = sorted.partition_point(|x| *x <= r);
            test(&r, count, None, false);
        }
    }
    checks.push(HypothesisCheck::new(Hypothesis::H6, witness, finite(margin)));
    checks.push(HypothesisCheck::new(Hypothesis::Item6, i6, finite(i6_margin)));
    (checks, margin)
}

/// Result of testing (1/p₂)(k−α) ≤ √|Λ_k| ≤ k/p₁ + C·w/(ρp₁²) on a prefix,
/// with w = 1 for real sequences and w = 1 + q otherwise.
#[derive(Debug, Clone, Serialize)]
pub struct IndexBoundFit {
    pub lower_holds: bool,
    pub first_lower_violation: Option<usize>,
    /// Smallest C ≥ 0 making the upper inequality hold on the prefix.
    pub fitted_c: f64,
    pub real_form: bool,
}

pub fn fit_index_bound(seq: &EigenSequence, params: &ClassParameters, prefix: usize, ctx: PrecisionContext) -> Result<IndexBoundFit, SequenceError> {
    let moduli = seq.moduli(prefix, ctx)?;
    let real_form = seq.is_real();
    let weight = if real_form { 1.0 } else { 1.0 + params.q as f64 };
    let scale = params.rho * params.p1 * params.p1 / weight;
    let mut first_lower_violation = None;
    let mut fitted_c: f64 = 0.0;
    for (i, m) in moduli.iter().enumerate() {
        let k = (i + 1) as f64;
        let root = m.to_f64().sqrt();
        if first_lower_violation.is_none() && (k - params.alpha) / params.p2 > root * (1.0 + 1e-14) {
            first_lower_violation = Some(i + 1);
        }
        fitted_c = fitted_c.max((root - k / params.p1) * scale);
    }
    Ok(IndexBoundFit { lower_holds: first_lower_violation.is_none(), first_lower_violation, fitted_c, real_form })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence_core::ExplicitSource;
    use crate::sequence_core::TermSource;

    #[derive(Debug)]
    struct Squares;

    impl TermSource for Squares {
        fn generate(&self, n: usize, ctx: PrecisionContext) -> Vec<Complex> {
            (1..=n as u32).map(|k| ctx.complex(k * k)).collect()
        }
        fn exact(&self, n: usize) -> Option<Vec<Rational>> {
            Some((1..=n as u32).map(|k| Rational::from(k * k)).collect())
        }
        fn is_real(&self) -> bool {
            true
        }
    }

    fn unit_params(exact: bool) -> ClassParameters {
        if exact {
            let one = Rational::from(1);
            ClassParameters::from_exact(
                ExactParameters { beta: Rational::new(), rho: one.clone(), p0: one.clone(), p1: one.clone(), p2: one.clone(), alpha: one.clone(), nu: one },
                1,
            )
        } else {
            ClassParameters::new(0.0, 1.0, 1, 1.0, 1.0, 1.0, 1.0, 1.0)
        }
    }

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    #[test]
    fn squares_pass_exactly_and_in_floats() {
        let s = EigenSequence::new("k²", Squares);
        let exact = check_class(&s, &unit_params(true), 200, ctx());
        assert!(exact.exact_arithmetic);
        assert!(exact.all_pass(), "{:?}", exact.failures().collect::<Vec<_>>());
        assert_eq!(exact.check(Hypothesis::H5).margin, Some(1.0));
        let float = check_class(&s, &unit_params(false), 200, ctx());
        assert!(!float.exact_arithmetic);
        assert!(float.all_pass(), "{:?}", float.failures().collect::<Vec<_>>());
    }

    #[test]
    fn negative_real_part_fails_h2() {
        let s = EigenSequence::new("bad", ExplicitSource::new(vec![(1.0, 0.0), (-1.0, 0.5), (4.0, 0.0)]).unwrap());
        let r = check_class(&s, &unit_params(false), 3, ctx());
        let h2 = r.check(Hypothesis::H2);
        assert_eq!(h2.status, CheckStatus::Fail);
        assert_eq!(h2.witness.as_ref().unwrap().k, Some(2));
    }

    #[test]
    fn repeated_term_fails_h1() {
        let s = EigenSequence::new("rep", ExplicitSource::real(&[1.0, 4.0, 4.0, 9.0]).unwrap());
        let r = check_class(&s, &unit_params(true), 4, ctx());
        let w = r.check(Hypothesis::H1).witness.clone().unwrap();
        assert_eq!((w.k, w.n), (Some(2), Some(3)));
    }

    #[test]
    fn too_small_alpha_fails_h6() {
        let s = EigenSequence::new("k²", Squares);
        let mut p = unit_params(false);
        p.alpha = 0.5;
        p.p1 = 1.2;
        let r = check_class(&s, &p, 50, ctx());
        assert_eq!(r.check(Hypothesis::H6).status, CheckStatus::Fail);
        assert!(r.counting_margin < 0.0);
    }

    #[test]
    fn index_bound_fit_for_squares() {
        let s = EigenSequence::new("k²", Squares);
        let fit = fit_index_bound(&s, &unit_params(false), 100, ctx()).unwrap();
        assert!(fit.lower_holds);
        assert_eq!(fit.fitted_c, 0.0);
    }
}
