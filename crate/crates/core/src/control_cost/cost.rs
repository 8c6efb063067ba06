use std::io::Write;

use rayon::prelude::*;
use rug::{Complex, Float};
use serde::{Deserialize, Serialize};

use super::{exponential_perturbations, minimal_time, ControlError, ControlProblem, MinimalTime};
use crate::example_sequences::{check_h2_exact, gen_perturbed, gen_phase_field, ExampleError};
use crate::gram_biorthogonal::{extrapolate_to_zero, tail_sums, GramError, GramSystem};
use crate::mp_numerics::{largest_eigenvalue, EigenMethod, HermitianMatrix, PrecisionContext};
use crate::sequence_core::{condensation_product, EigenSequence};

/// Settings for the truncation and precision of cost computations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    pub bits: u32,
    pub m_start: usize,
    pub step: usize,
    pub m_max: usize,
    /// Relative agreement of three consecutive extrapolated K.
    pub rtol: f64,
    /// Degree of the interpolating polynomial in τ.
    pub order: usize,
    pub max_doublings: u32,
    pub max_iterations: usize,
    /// Control coefficients per branch.
    pub b: Vec<f64>,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self { bits: 512, m_start: 4, step: 4, m_max: 160, rtol: 1e-3, order: 8, max_doublings: 2, max_iterations: 5000, b: vec![1.0, 1.0] }
    }
}

/// K_M(T) at a fixed truncation.
#[derive(Debug, Clone)]
pub struct CostValue {
    pub m: usize,
    pub cost: Float,
    pub residual: f64,
    pub iterations: usize,
    pub method: EigenMethod,
}

fn cost_from_system(problem: &ControlProblem, g: &GramSystem, m: usize, max_iterations: usize, ctx: PrecisionContext) -> Result<CostValue, ControlError> {
    let bits = ctx.bits();
    let inv = g.factor().inverse(m);
    let d = problem.with(problem.t, m)?.cost_scaling(ctx)?;
    let a = HermitianMatrix::from_lower(m, ctx, |i, j| {
        let left = Complex::with_val(bits, d[i].conj_ref());
        Complex::with_val(bits, &left * &inv[i][j]) * &d[j]
    });
    let est = largest_eigenvalue(&a, max_iterations)?;
    Ok(CostValue { m, cost: est.value.max(&ctx.zero()).sqrt(), residual: est.residual.to_f64(), iterations: est.iterations, method: est.method })
}

/// K_M(T) = √λ_max(Dᴴ G⁻¹ D) with D_kk = e^{−Λ_k T}√|Λ_k|/(b w_k), for
/// the truncation M of the problem.
pub fn control_cost(problem: &ControlProblem, max_iterations: usize, ctx: PrecisionContext) -> Result<CostValue, ControlError> {
    let g = GramSystem::build(&problem.sequence, problem.m, problem.t, ctx)?;
    cost_from_system(problem, &g, problem.m, max_iterations, ctx)
}

/// One checkpoint of the truncation sweep.
#[derive(Debug, Clone, Serialize)]
pub struct CostHistoryPoint {
    #[serde(rename = "M")]
    pub m: usize,
    /// log K_M(T).
    pub log_truncated: f64,
    /// Extrapolated log K from orders ≤ M.
    pub log_estimate: Option<f64>,
}

/// K(T) at its truncation plateau.
///
/// K_M increases with M algebraically in τ(M) = Σ_{n>M} 1/|Λ_n|, so the
/// limit is taken the same way as for ‖s_k‖: log K_M is interpolated as
/// a polynomial in τ through checkpoints M, M−h, …, M−dh and evaluated at
/// τ = 0.
#[derive(Debug, Clone, Serialize)]
pub struct CostPoint {
    #[serde(rename = "T")]
    pub t: f64,
    /// Extrapolated K(T).
    #[serde(rename = "K")]
    pub cost: f64,
    pub log_cost: f64,
    /// K_{M_star}(T), a lower approximation of K(T).
    #[serde(rename = "K_truncated")]
    pub truncated: f64,
    #[serde(rename = "M_star")]
    pub m_star: usize,
    pub precision_bits: u32,
    pub method: EigenMethod,
    pub residual: f64,
    pub rtol: f64,
    pub history: Vec<CostHistoryPoint>,
}

fn spacing(m: usize, order: usize, step: usize) -> usize {
    let h = (m as f64 / (8 * order.max(1)) as f64).round() as usize;
    (h.max(1) * step).max(step)
}

fn plateau_at(seq: &EigenSequence, t: f64, cfg: &CostConfig, ctx: PrecisionContext) -> Result<CostPoint, ControlError> {
    let problem = ControlProblem::new(seq, &cfg.b, t, cfg.m_start.max(1))?;
    let cap = seq.known_prefix_length().map_or(cfg.m_max, |c| c.min(cfg.m_max));
    let taus = tail_sums(seq, cap, ctx)?;
    let mut g = GramSystem::new(seq, t, ctx)?;
    let mut logs: Vec<Option<Float>> = vec![None; cap + 1];
    let mut history: Vec<CostHistoryPoint> = Vec::new();
    let mut estimates: Vec<Float> = Vec::new();
    let mut m = cfg.m_start.max(1).div_ceil(cfg.step) * cfg.step;
    if m > cap {
        return Err(ControlError::InvalidInput(format!("m_start beyond the available order {cap}")));
    }
    loop {
        g.extend_to(m)?;
        let v = cost_from_system(&problem, &g, m, cfg.max_iterations, ctx)?;
        let log_k = v.cost.clone().ln();
        logs[m] = Some(log_k.clone());
        let h = spacing(m, cfg.order, cfg.step);
        let nodes: Vec<usize> = (0..=cfg.order).filter_map(|j| m.checked_sub(j * h)).collect();
        let estimate = if nodes.len() == cfg.order + 1 && nodes.iter().all(|&n| n > 0 && logs[n].is_some()) {
            let xs: Vec<Float> = nodes.iter().map(|&n| taus[n].clone()).collect();
            let ys: Vec<Float> = nodes.iter().map(|&n| logs[n].clone().expect("checked")).collect();
            Some(extrapolate_to_zero(&xs, &ys))
        } else {
            None
        };
        history.push(CostHistoryPoint { m, log_truncated: log_k.to_f64(), log_estimate: estimate.as_ref().map(Float::to_f64) });
        if let Some(e) = estimate {
            estimates.push(e.exp());
        }
        let n = estimates.len();
        if n >= 3 {
            let close = |a: &Float, b: &Float| Float::with_val(ctx.bits(), a - b).abs() <= Float::with_val(ctx.bits(), a * cfg.rtol);
            if close(&estimates[n - 1], &estimates[n - 2]) && close(&estimates[n - 2], &estimates[n - 3]) {
                let k = estimates.pop().expect("nonempty");
                return Ok(CostPoint {
                    t,
                    cost: k.to_f64(),
                    log_cost: k.ln().to_f64(),
                    truncated: v.cost.to_f64(),
                    m_star: m,
                    precision_bits: ctx.bits(),
                    method: v.method,
                    residual: v.residual,
                    rtol: cfg.rtol,
                    history,
                });
            }
        }
        if m >= cap {
            return Err(ControlError::NoPlateau { t, m_max: cap });
        }
        m = (m + cfg.step).min(cap);
    }
}

/// Grows M until the extrapolated K(T) is stable, doubling the precision when the Gram
/// matrix becomes singular at the working width.
pub fn cost_plateau(seq: &EigenSequence, t: f64, cfg: &CostConfig) -> Result<CostPoint, ControlError> {
    if !(t > 0.0 && t.is_finite()) || cfg.step == 0 || cfg.order == 0 || !(cfg.rtol > 0.0) {
        return Err(ControlError::InvalidInput(format!("need T > 0, step ≥ 1, order ≥ 1 and rtol > 0 (T = {t})")));
    }
    if t < 0.2 && cfg.bits < 1024 {
        return Err(ControlError::InvalidInput(format!("T = {t} below 0.2 requires at least 1024 bits, got {}", cfg.bits)));
    }
    let mut ctx = PrecisionContext::new(cfg.bits)?;
    let mut doublings = 0;
    loop {
        match plateau_at(seq, t, cfg, ctx) {
            Err(ControlError::Gram(GramError::NotPositiveDefinite { .. })) if doublings < cfg.max_doublings => {
                doublings += 1;
                ctx = ctx.doubled();
            }
            other => return other,
        }
    }
}

/// Least-squares line y ≈ intercept + slope·x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_affine(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r_squared })
}

/// A mode k₀ with x̃/2 ≤ k₀² ≤ x̃, x̃ = (γ/T)^{1/(1−γ)}, and the value of
/// h̃(k₀²) = −k₀²T + k₀^{2γ} against (1 + log 2)/(2e)·(1−γ)/T^{γ/(1−γ)}.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeMode {
    #[serde(rename = "T")]
    pub t: f64,
    pub gamma: f64,
    pub x_tilde: f64,
    pub k_low: f64,
    pub k_high: f64,
    pub k0: u64,
    pub h_value: f64,
    pub bound: f64,
    /// min over all integers of the window of h̃(k²) − bound.
    pub min_margin: f64,
    pub holds: bool,
}

/// Largest admissible T for the probe: γ((√2 − 1)/√2)^{2(1−γ)}.
pub fn probe_time_limit(gamma: f64) -> f64 {
    gamma * ((std::f64::consts::SQRT_2 - 1.0) / std::f64::consts::SQRT_2).powf(2.0 * (1.0 - gamma))
}

pub fn probe_mode(gamma: f64, t: f64) -> Result<ProbeMode, ControlError> {
    if !(gamma > 0.0 && gamma < 1.0) || !(t > 0.0) {
        return Err(ControlError::InvalidInput(format!("need γ ∈ (0, 1) and T > 0, got γ = {gamma}, T = {t}")));
    }
    let limit = probe_time_limit(gamma);
    if t >= limit {
        return Err(ControlError::GridInfeasible { t, bound: limit });
    }
    let x_tilde = (gamma / t).powf(1.0 / (1.0 - gamma));
    let (k_low, k_high) = ((x_tilde / 2.0).sqrt(), x_tilde.sqrt());
    let (first, last) = (k_low.ceil().max(1.0) as u64, k_high.floor() as u64);
    if first > last {
        return Err(ControlError::GridInfeasible { t, bound: limit });
    }
    let bound = (1.0 + std::f64::consts::LN_2) / (2.0 * std::f64::consts::E) * (1.0 - gamma) / t.powf(gamma / (1.0 - gamma));
    let h = |k: u64| {
        let x = (k as f64).powi(2);
        -x * t + x.powf(gamma)
    };
    let (mut k0, mut best, mut min_margin) = (first, f64::NEG_INFINITY, f64::INFINITY);
    for k in first..=last {
        let v = h(k);
        if v > best {
            (k0, best) = (k, v);
        }
        min_margin = min_margin.min(v - bound);
    }
    Ok(ProbeMode { t, gamma, x_tilde, k_low, k_high, k0, h_value: best, bound, min_margin, holds: min_margin >= 0.0 })
}

/// Probe modes for every T of the grid; fails on the first inadmissible T.
pub fn lemma58_probe(gamma: f64, t_grid: &[f64]) -> Result<Vec<ProbeMode>, ControlError> {
    t_grid.iter().map(|&t| probe_mode(gamma, t)).collect()
}

/// Costs over a T-grid with fits and diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct CostReport {
    pub sequence: String,
    pub gamma: Option<f64>,
    pub config: CostConfig,
    pub points: Vec<CostPoint>,
    /// log K against 1/T.
    pub fit_inverse_t: Option<LinearFit>,
    /// log K against 1/T^{γ/(1−γ)}.
    pub fit_scaled: Option<LinearFit>,
    pub probes: Vec<Option<ProbeMode>>,
    /// [min, max] of T·log K over the grid.
    pub band: Option<[f64; 2]>,
    pub minimal_time: Option<MinimalTime>,
    /// Slope of log P_k against log k past the interleaving head, with its expected value.
    pub condensation_exponent: Option<(f64, f64)>,
    pub normalization: String,
}

const NORMALIZATION: &str = "‖y₀‖² = Σ|c_k|²/|Λ_k|; w_k = √(2/π)·(mode index within its branch)";

impl CostReport {
    fn new(seq: &EigenSequence, gamma: Option<f64>, cfg: &CostConfig, points: Vec<CostPoint>) -> Self {
        let ts: Vec<f64> = points.iter().map(|p| p.t).collect();
        let logs: Vec<f64> = points.iter().map(|p| p.log_cost).collect();
        let inv: Vec<f64> = ts.iter().map(|t| 1.0 / t).collect();
        let band = points.iter().map(|p| p.t * p.log_cost).fold(None, |acc: Option<[f64; 2]>, v| match acc {
            None => Some([v, v]),
            Some([lo, hi]) => Some([lo.min(v), hi.max(v)]),
        });
        let fit_scaled = gamma.and_then(|g| fit_affine(&scaled_abscissa(&ts, g), &logs));
        Self {
            sequence: seq.label().to_string(),
            gamma,
            config: cfg.clone(),
            fit_inverse_t: fit_affine(&inv, &logs),
            fit_scaled,
            probes: Vec::new(),
            band,
            minimal_time: None,
            condensation_exponent: None,
            points,
            normalization: NORMALIZATION.into(),
        }
    }

    /// K(T₂) ≤ K(T₁)(1 + rtol) whenever T₂ > T₁.
    pub fn nonincreasing_in_t(&self, rtol: f64) -> bool {
        let mut pts: Vec<&CostPoint> = self.points.iter().collect();
        pts.sort_by(|a, b| a.t.total_cmp(&b.t));
        pts.windows(2).all(|w| w[1].log_cost <= w[0].log_cost + rtol.ln_1p())
    }

    /// log K against 1/T^{γ*/(1−γ*)} for a chosen γ*.
    pub fn fit_against(&self, gamma_star: f64) -> Option<LinearFit> {
        let ts: Vec<f64> = self.points.iter().map(|p| p.t).collect();
        let logs: Vec<f64> = self.points.iter().map(|p| p.log_cost).collect();
        fit_affine(&scaled_abscissa(&ts, gamma_star), &logs)
    }

    /// CSV with header `T,K,M_star,precision_bits`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ControlError> {
        let io = |e: csv::Error| ControlError::InvalidInput(format!("CSV output failed: {e}"));
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["T", "K", "M_star", "precision_bits"]).map_err(io)?;
        for p in &self.points {
            w.write_record([p.t.to_string(), format!("{:.17e}", p.cost), p.m_star.to_string(), p.precision_bits.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| ControlError::InvalidInput(format!("CSV output failed: {e}")))
    }

    /// (x, log K) pairs with x = 1/T, or x = 1/T^{γ/(1−γ)} when `scaled`.
    pub fn write_plot_csv<W: Write>(&self, writer: W, scaled: bool) -> Result<(), ControlError> {
        let io = |e: csv::Error| ControlError::InvalidInput(format!("CSV output failed: {e}"));
        let gamma = match (scaled, self.gamma) {
            (true, Some(g)) => Some(g),
            (true, None) => return Err(ControlError::InvalidInput("scaled abscissa needs γ".into())),
            (false, _) => None,
        };
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "y"]).map_err(io)?;
        for p in &self.points {
            let x = gamma.map_or(1.0 / p.t, |g| scaled_abscissa(&[p.t], g)[0]);
            w.write_record([format!("{x:.17e}"), format!("{:.17e}", p.log_cost)]).map_err(io)?;
        }
        w.flush().map_err(|e| ControlError::InvalidInput(format!("CSV output failed: {e}")))
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), ControlError> {
        serde_json::to_writer_pretty(writer, self).map_err(|e| ControlError::InvalidInput(format!("JSON output failed: {e}")))
    }
}

fn scaled_abscissa(ts: &[f64], gamma: f64) -> Vec<f64> {
    ts.iter().map(|t| t.powf(-gamma / (1.0 - gamma))).collect()
}

fn costs_on_grid(seq: &EigenSequence, t_grid: &[f64], cfg: &CostConfig) -> Result<Vec<CostPoint>, ControlError> {
    if t_grid.is_empty() {
        return Err(ControlError::InvalidInput("empty T-grid".into()));
    }
    t_grid.par_iter().map(|&t| cost_plateau(seq, t, cfg)).collect()
}

/// K(T) for the perturbed system with ε_k = e^{−k^{2γ}} over a T-grid.
pub fn cost_scaling_experiment(gamma: f64, t_grid: &[f64], cfg: &CostConfig) -> Result<CostReport, ControlError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(ControlError::InvalidInput(format!("γ = {gamma} must lie in (0, 1)")));
    }
    let seq = gen_perturbed(gamma)?;
    let points = costs_on_grid(&seq, t_grid, cfg)?;
    let mut report = CostReport::new(&seq, Some(gamma), cfg, points);
    report.probes = t_grid.iter().map(|&t| probe_mode(gamma, t).ok()).collect();
    let ctx = PrecisionContext::new(128)?;
    report.minimal_time = Some(minimal_time(&exponential_perturbations(gamma, 400, ctx))?);
    Ok(report)
}

/// Branch range of the tolerance-based H2 scan in [`phase_field_cost`].
pub const H2_SCAN: usize = 50;

/// K(T) for the phase-field spectrum with parameters (ξ, ρ, τ).
///
/// H2 is scanned with tolerance up to branch index [`H2_SCAN`] and
/// exactly over the whole truncation. At resonance the expression for
/// ℓ = k + 1 is a constant while its terms grow like k², so the relative
/// tolerance flags every such pair from k = 64 on.
pub fn phase_field_cost(xi: f64, rho: f64, tau: f64, t_grid: &[f64], cfg: &CostConfig) -> Result<CostReport, ControlError> {
    let ctx = PrecisionContext::new(cfg.bits)?;
    let (spectrum, seq) = gen_phase_field(xi, rho, tau, H2_SCAN, ctx)?;
    // M terms of the rearrangement use branch indices up to about M/2 + j₀ + 1
    if let Some(v) = check_h2_exact(xi, rho, tau, cfg.m_max / 2 + 4).into_iter().next() {
        return Err(ExampleError::H2Violation(v).into());
    }
    let points = costs_on_grid(&seq, t_grid, cfg)?;
    let mut report = CostReport::new(&seq, None, cfg, points);
    if let Some(params) = seq.params() {
        let start = (spectrum.head_len().unwrap_or(0) + 1).max(64);
        let ks: Vec<usize> = (start..=4 * start).step_by(8).collect();
        report.condensation_exponent = Some((condensation_exponent(&seq, &ks, params.q, ctx)?, -(2.0 * params.q as f64 - 4.0)));
    }
    Ok(report)
}

/// Least-squares slope of log P_k against log k over the given indices.
pub fn condensation_exponent(seq: &EigenSequence, ks: &[usize], q: u32, ctx: PrecisionContext) -> Result<f64, ControlError> {
    let mut xs = Vec::with_capacity(ks.len());
    let mut ys = Vec::with_capacity(ks.len());
    for &k in ks {
        xs.push((k as f64).ln());
        ys.push(condensation_product(seq, k, q, ctx)?.ln().to_f64());
    }
    fit_affine(&xs, &ys).map(|f| f.slope).ok_or_else(|| ControlError::InvalidInput("need two distinct indices".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example_sequences::gen_quadratic;
    use crate::gram_biorthogonal::minimal_family;

    #[test]
    fn single_mode_cost() {
        let ctx = PrecisionContext::new(256).unwrap();
        let s = gen_quadratic(1.0, 0.0).unwrap();
        let p = ControlProblem::new(&s, &[2.0], 0.4, 1).unwrap();
        let k = control_cost(&p, 100, ctx).unwrap().cost.to_f64();
        let fam = minimal_family(&s, 1, 0.4, ctx).unwrap();
        let want = (-0.4f64).exp() / (2.0 * (2.0 / std::f64::consts::PI).sqrt()) * fam.norm(1).to_f64();
        assert!((k - want).abs() < 1e-14 * want);
    }

    #[test]
    fn cost_dominates_basis_vectors_and_grows_with_m() {
        let ctx = PrecisionContext::new(256).unwrap();
        let s = gen_quadratic(1.0, 0.0).unwrap();
        let mut prev = 0.0;
        for m in [2, 4, 6, 8] {
            let p = ControlProblem::new(&s, &[1.0], 0.5, m).unwrap();
            let k = control_cost(&p, 2000, ctx).unwrap().cost.to_f64();
            let fam = minimal_family(&s, m, 0.5, ctx).unwrap();
            let d = p.cost_scaling(ctx).unwrap();
            for j in 1..=m {
                let dj = Float::with_val(256, d[j - 1].abs_ref()).to_f64();
                assert!(k >= dj * fam.norm(j).to_f64() * (1.0 - 1e-12));
            }
            assert!(k >= prev * (1.0 - 1e-12));
            prev = k;
        }
    }

    #[test]
    fn affine_fit_exact_line() {
        let f = fit_affine(&[1.0, 2.0, 3.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept + 1.0).abs() < 1e-15 && (f.r_squared - 1.0).abs() < 1e-15);
        assert!(fit_affine(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn probe_window_example() {
        let p = probe_mode(0.75, 0.05).unwrap();
        assert!((p.x_tilde - 50625.0).abs() < 1e-6);
        assert!((p.k_low - 159.0990257669732).abs() < 1e-9 && (p.k_high - 225.0).abs() < 1e-9);
        assert!(p.holds && (160..=225).contains(&p.k0));
        assert!(matches!(probe_mode(0.75, 0.5), Err(ControlError::GridInfeasible { .. })));
    }

    #[test]
    fn lemma58_on_admissible_grids() {
        for gamma in [0.6, 0.75, 0.9] {
            let limit = probe_time_limit(gamma);
            let grid: Vec<f64> = (1..=20).map(|i| limit * i as f64 / 21.0).collect();
            for p in lemma58_probe(gamma, &grid).unwrap() {
                assert!(p.holds, "{p:?}");
            }
        }
    }

    #[test]
    fn phase_field_condensation_exponent() {
        let ctx = PrecisionContext::new(256).unwrap();
        let (_, seq) = gen_phase_field(1.0, 1.0, 1.0, 50, ctx).unwrap();
        let q = seq.params().unwrap().q;
        let ks: Vec<usize> = (64..=256).step_by(8).collect();
        let slope = condensation_exponent(&seq, &ks, q, ctx).unwrap();
        assert!((slope + (2.0 * q as f64 - 4.0)).abs() < 0.2, "{slope} for q = {q}");
    }

    #[test]
    fn perturbed_cost_decreases_in_t() {
        let cfg = CostConfig { bits: 256, rtol: 1e-4, ..Default::default() };
        let r = cost_scaling_experiment(0.5, &[0.6, 1.0], &cfg).unwrap();
        assert!(r.nonincreasing_in_t(1e-9), "{:?}", r.points);
        for p in &r.points {
            assert!(p.cost >= p.truncated && p.history.windows(2).all(|w| w[1].log_truncated >= w[0].log_truncated - 1e-12));
        }
        // orders up to 94 at 512 bits extrapolate to log K(0.6) = 40.717780…
        assert!((r.points[0].log_cost - 40.71778).abs() < 1e-3, "{:?}", r.points[0]);
        assert!(r.minimal_time.as_ref().unwrap().value.abs() < 1e-3);
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("T,K,M_star,precision_bits"));
    }
}
