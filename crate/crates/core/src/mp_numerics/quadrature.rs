//! Composite Gauss–Legendre quadrature at arbitrary precision.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::{Complex, Float};

use super::{NumericsError, PrecisionContext};

/// Gauss–Legendre nodes and weights on [−1, 1], nodes ascending.
#[derive(Debug, Clone)]
pub struct GaussLegendreRule {
    pub nodes: Vec<Float>,
    pub weights: Vec<Float>,
}

/// Composite rule on [0, 1]; map to [a, b] with [`CompositeRule::mapped`].
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub nodes: Vec<Float>,
    pub weights: Vec<Float>,
}

/// Result of [`integrate`]: the refined value and |Q(2n) − Q(n)|.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub value: Complex,
    pub error: Float,
}

type RuleCache<K, V> = Mutex<HashMap<K, Arc<V>>>;

fn gl_cache() -> &'static RuleCache<(usize, u32), GaussLegendreRule> {
    static CACHE: OnceLock<RuleCache<(usize, u32), GaussLegendreRule>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn composite_cache() -> &'static RuleCache<(usize, usize, u32), CompositeRule> {
    static CACHE: OnceLock<RuleCache<(usize, usize, u32), CompositeRule>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: &Float) -> (Float, Float) {
    let bits = x.prec();
    let mut p0 = Float::with_val(bits, 1);
    let mut p1 = x.clone();
    for k in 2..=n {
        let kf = k as u32;
        let t = Float::with_val(bits, x * &p1) * (2 * kf - 1);
        let p2 = (t - Float::with_val(bits, &p0 * (kf - 1))) / kf;
        p0 = std::mem::replace(&mut p1, p2);
    }
    let denom = Float::with_val(bits, x * x) - 1u32;
    let dp = Float::with_val(bits, x * &p1) - &p0;
    let dp = dp * n as u32 / denom;
    (p1, dp)
}

fn build_gauss_legendre(n: usize, bits: u32) -> GaussLegendreRule {
    let work = bits + 32;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut tol = Float::with_val(work, 1);
    tol >>= bits + 8;
    for i in 1..=n {
        let guess = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut x = Float::with_val(work, -guess);
        if n == 1 {
            x = Float::new(work);
        }
        for _ in 0..200 {
            let (p, dp) = legendre(n, &x);
            if n == 1 {
                break;
            }
            let step = p / &dp;
            x -= &step;
            if step.abs() <= tol {
                break;
            }
        }
        let (_, dp) = if n == 1 { (Float::new(work), Float::with_val(work, 1)) } else { legendre(n, &x) };
        let one_minus = Float::with_val(work, 1) - Float::with_val(work, &x * &x);
        let w = Float::with_val(work, 2) / (one_minus * Float::with_val(work, &dp * &dp));
        nodes.push(Float::with_val(bits, &x));
        weights.push(Float::with_val(bits, &w));
    }
    GaussLegendreRule { nodes, weights }
}

/// Cached n-point Gauss–Legendre rule at the given precision.
pub fn gauss_legendre(nodes: usize, ctx: PrecisionContext) -> Result<Arc<GaussLegendreRule>, NumericsError> {
    if nodes == 0 {
        return Err(NumericsError::InvalidQuadrature("a rule needs at least one node".into()));
    }
    let key = (nodes, ctx.bits());
    if let Some(rule) = gl_cache().lock().expect("quadrature cache poisoned").get(&key) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(build_gauss_legendre(nodes, ctx.bits()));
    gl_cache().lock().expect("quadrature cache poisoned").insert(key, rule.clone());
    Ok(rule)
}

/// Cached composite rule with equal panels on [0, 1].
pub fn composite_rule(panels: usize, nodes_per_panel: usize, ctx: PrecisionContext) -> Result<Arc<CompositeRule>, NumericsError> {
    if panels == 0 {
        return Err(NumericsError::InvalidQuadrature("panel count must be positive".into()));
    }
    let key = (panels, nodes_per_panel, ctx.bits());
    if let Some(rule) = composite_cache().lock().expect("quadrature cache poisoned").get(&key) {
        return Ok(rule.clone());
    }
    let base = gauss_legendre(nodes_per_panel, ctx)?;
    let bits = ctx.bits();
    let h = Float::with_val(bits, 1) / panels as u32;
    let half = Float::with_val(bits, &h / 2u32);
    let mut nodes = Vec::with_capacity(panels * nodes_per_panel);
    let mut weights = Vec::with_capacity(panels * nodes_per_panel);
    for p in 0..panels {
        let mid = Float::with_val(bits, &h * p as u32) + &half;
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(Float::with_val(bits, x * &half) + &mid);
            weights.push(Float::with_val(bits, w * &half));
        }
    }
    let rule = Arc::new(CompositeRule { panels, nodes_per_panel, nodes, weights });
    composite_cache().lock().expect("quadrature cache poisoned").insert(key, rule.clone());
    Ok(rule)
}

impl CompositeRule {
    /// Nodes and weights affinely mapped onto [a, b].
    pub fn mapped(&self, a: &Float, b: &Float) -> (Vec<Float>, Vec<Float>) {
        let bits = a.prec().max(b.prec());
        let len = Float::with_val(bits, b - a);
        let nodes = self.nodes.iter().map(|x| Float::with_val(bits, x * &len) + a).collect();
        let weights = self.weights.iter().map(|w| Float::with_val(bits, w * &len)).collect();
        (nodes, weights)
    }

    /// Applies the rule on [a, b].
    pub fn apply<F>(&self, a: &Float, b: &Float, mut f: F) -> Result<Complex, NumericsError>
    where
        F: FnMut(&Float) -> Complex,
    {
        let bits = a.prec().max(b.prec());
        let (nodes, weights) = self.mapped(a, b);
        let mut acc = Complex::new(bits);
        for (t, w) in nodes.iter().zip(&weights) {
            let v = f(t);
            if !v.real().is_finite() || !v.imag().is_finite() {
                return Err(NumericsError::NonFinite { at: t.to_f64() });
            }
            acc += Complex::with_val(bits, &v * w);
        }
        Ok(acc)
    }
}

/// Composite Gauss–Legendre integral of `f` over [a, b].
///
/// The value is computed with `2·nodes_per_panel` nodes per panel and the
/// error estimate is its distance to the `nodes_per_panel` result.
pub fn integrate<F>(mut f: F, a: &Float, b: &Float, panels: usize, nodes_per_panel: usize) -> Result<Quadrature, NumericsError>
where
    F: FnMut(&Float) -> Complex,
{
    if a >= b {
        return Err(NumericsError::InvalidQuadrature(format!("empty interval [{}, {}]", a.to_f64(), b.to_f64())));
    }
    let ctx = PrecisionContext::new(a.prec().max(b.prec()))?;
    let coarse = composite_rule(panels, nodes_per_panel, ctx)?.apply(a, b, &mut f)?;
    let fine = composite_rule(panels, 2 * nodes_per_panel, ctx)?.apply(a, b, &mut f)?;
    let error = Float::with_val(ctx.bits(), Complex::with_val(ctx.bits(), &fine - &coarse).abs_ref());
    Ok(Quadrature { value: fine, error })
}
