//! Truncation limit of ‖s_k^{(M)}‖ as M → ∞.
//!
//! Truncated norms increase with M but only algebraically, like the
//! tail sum τ(M) = Σ_{n>M} 1/|Λ_n|. The limit is estimated by
//! interpolating log ‖s_k^{(M)}‖ as a polynomial in τ(M) through the
//! orders M, M−h, …, M−dh and evaluating it at τ = 0.

use rug::Float;
use serde::Serialize;

use super::{GramError, GramSystem};
use crate::mp_numerics::PrecisionContext;
use crate::sequence_core::EigenSequence;

/// Settings for [`converge_truncation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationConfig {
    /// Distance between checkpoints.
    pub step: usize,
    pub m_max: usize,
    /// Relative agreement required between consecutive estimates.
    pub rtol: f64,
    /// How many times the precision may be doubled on singularity.
    pub max_doublings: u32,
    /// Degree of the interpolating polynomial in τ.
    pub order: usize,
    /// Extra orders factored past the plateau for stability checks.
    pub lookahead: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self { step: 5, m_max: 200, rtol: 1e-8, max_doublings: 2, order: 8, lookahead: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryPoint {
    #[serde(rename = "M")]
    pub m: usize,
    /// ‖s_k^{(M)}‖.
    pub truncated: f64,
    /// Extrapolated limit from orders ≤ M.
    pub estimate: Option<f64>,
}

/// A truncation-converged norm ‖s_k‖ with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct Plateau {
    pub k: usize,
    #[serde(rename = "T")]
    pub t: f64,
    /// Extrapolated ‖s_k‖.
    #[serde(serialize_with = "ser_float")]
    pub norm: Float,
    /// ‖s_k^{(m_star)}‖, a lower bound for every biorthogonal family.
    #[serde(serialize_with = "ser_float")]
    pub truncated: Float,
    pub m_star: usize,
    pub history: Vec<HistoryPoint>,
    /// ‖s_k^{(M)}‖ for M = k, k+1, … up to the factored order.
    #[serde(skip)]
    pub profile: Vec<Float>,
    /// τ(M) for M = 0, 1, … up to the factored order.
    #[serde(skip)]
    pub taus: Vec<Float>,
    pub bits: u32,
    pub rtol: f64,
    pub order: usize,
}

fn ser_float<S: serde::Serializer>(x: &Float, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(x.to_f64())
}

impl Plateau {
    /// ‖s_k^{(M)}‖ for k ≤ M ≤ factored order.
    pub fn norm_at(&self, m: usize) -> Option<&Float> {
        m.checked_sub(self.k).and_then(|i| self.profile.get(i))
    }

    /// Largest order with a truncated norm available.
    pub fn max_order(&self) -> usize {
        self.k + self.profile.len() - 1
    }

    /// The limit estimate built from orders ≤ m.
    pub fn estimate_at(&self, m: usize) -> Option<Float> {
        estimate(&self.profile, &self.taus, self.k, m, self.order)
    }
}

/// τ(M) = Σ_{n>M} 1/|Λ_n| for M = 0..=cap.
///
/// Uses the sequence's own tail sums when it has them. Otherwise the
/// terms up to 8·cap are summed directly and the rest is approximated by
/// N/|Λ_N|, the tail of a quadratically growing sequence.
pub fn tail_sums(seq: &EigenSequence, cap: usize, ctx: PrecisionContext) -> Result<Vec<Float>, GramError> {
    let bits = ctx.bits();
    let (moduli, tail) = match seq.known_prefix_length() {
        Some(len) => (seq.moduli(len, ctx)?, ctx.zero()),
        None => match seq.tail_power_sum(cap, 1, ctx) {
            Some(tail) => (seq.moduli(cap, ctx)?, tail),
            None => {
                let far = 8 * cap.max(1);
                let moduli = seq.moduli(far, ctx)?;
                let mut tail = Float::with_val(bits, far) / &moduli[far - 1];
                for m in moduli[cap..].iter().rev() {
                    tail += Float::with_val(bits, m.recip_ref());
                }
                (moduli, tail)
            }
        },
    };
    let last = cap.min(moduli.len());
    let mut taus = vec![ctx.zero(); last + 1];
    let mut acc = tail;
    for m in moduli[last..].iter().rev() {
        acc += Float::with_val(bits, m.recip_ref());
    }
    for i in (0..=last).rev() {
        taus[i] = acc.clone();
        if i > 0 {
            acc += Float::with_val(bits, moduli[i - 1].recip_ref());
        }
    }
    Ok(taus)
}

/// Value at x = 0 of the polynomial through the points (x_i, y_i).
pub fn extrapolate_to_zero(xs: &[Float], ys: &[Float]) -> Float {
    let mut p: Vec<Float> = ys.to_vec();
    let n = xs.len();
    for span in 1..n {
        for i in 0..n - span {
            let j = i + span;
            let num = Float::with_val(p[i].prec(), &xs[i] * &p[i + 1]) - Float::with_val(p[i].prec(), &xs[j] * &p[i]);
            p[i] = num / Float::with_val(p[i].prec(), &xs[i] - &xs[j]);
        }
    }
    p.swap_remove(0)
}

fn node_spacing(m: usize, order: usize) -> usize {
    let h = (m as f64 / (8 * order.max(1)) as f64).round() as usize;
    (2 * h).max(2)
}

fn estimate(profile: &[Float], taus: &[Float], k: usize, m: usize, order: usize) -> Option<Float> {
    let h = node_spacing(m, order);
    let lowest = m.checked_sub(order * h)?;
    if lowest < k || m >= k + profile.len() || m >= taus.len() {
        return None;
    }
    let nodes: Vec<usize> = (0..=order).map(|j| m - j * h).collect();
    let xs: Vec<Float> = nodes.iter().map(|&mm| taus[mm].clone()).collect();
    let ys: Vec<Float> = nodes.iter().map(|&mm| profile[mm - k].clone().ln()).collect();
    Some(extrapolate_to_zero(&xs, &ys).exp())
}

/// Increases M in steps until the extrapolated ‖s_k‖ changes by less
/// than rtol (relative) over two consecutive steps.
pub fn converge_truncation(seq: &EigenSequence, k: usize, t: f64, cfg: TruncationConfig, ctx: PrecisionContext) -> Result<Plateau, GramError> {
    converge_many(seq, &[k], t, cfg, ctx)?.pop().expect("one index")
}

/// [`converge_truncation`] for several indices sharing one factorization.
pub fn converge_many(seq: &EigenSequence, ks: &[usize], t: f64, cfg: TruncationConfig, ctx: PrecisionContext) -> Result<Vec<Result<Plateau, GramError>>, GramError> {
    if ks.is_empty() || ks.iter().any(|&k| k == 0) || cfg.step == 0 || !(cfg.rtol > 0.0) {
        return Err(GramError::InvalidInput("k ≥ 1, step ≥ 1 and rtol > 0 are required".into()));
    }
    let mut ctx = ctx;
    let mut doublings = 0;
    loop {
        match converge_at(seq, ks, t, cfg, ctx, doublings < cfg.max_doublings) {
            Err(GramError::NotPositiveDefinite { .. }) if doublings < cfg.max_doublings => {
                doublings += 1;
                ctx = ctx.doubled();
            }
            other => return other,
        }
    }
}

/// With `strict_lookahead`, a singular pivot past the plateau is an error
/// so that the caller retries at higher precision.
fn converge_at(
    seq: &EigenSequence,
    ks: &[usize],
    t: f64,
    cfg: TruncationConfig,
    ctx: PrecisionContext,
    strict_lookahead: bool,
) -> Result<Vec<Result<Plateau, GramError>>, GramError> {
    let bits = ctx.bits();
    let kmax = *ks.iter().max().expect("nonempty");
    let cap = seq.known_prefix_length().map_or(cfg.m_max, |c| c.min(cfg.m_max));
    if kmax > cap {
        return Err(GramError::InvalidInput(format!("k = {kmax} exceeds the available order {cap}")));
    }
    let reach = seq.known_prefix_length().map_or(cap + cfg.lookahead, |c| c.min(cap + cfg.lookahead));
    let taus = tail_sums(seq, reach, ctx)?;
    let rtol = ctx.float(cfg.rtol);
    let mut g = GramSystem::new(seq, t, ctx)?;
    let mut done: Vec<Option<usize>> = vec![None; ks.len()];
    let mut estimates: Vec<Vec<(usize, Option<Float>)>> = vec![Vec::new(); ks.len()];
    let mut m = kmax.max(cfg.step).div_ceil(cfg.step) * cfg.step;
    m = m.min(cap);
    loop {
        g.extend_to(m)?;
        for (i, &k) in ks.iter().enumerate() {
            if done[i].is_some() {
                continue;
            }
            let profile: Vec<Float> = g.inverse_diagonal_profile(k).into_iter().map(|v| v.sqrt()).collect();
            let e = estimate(&profile, &taus, k, m, cfg.order);
            estimates[i].push((m, e));
            let recent: Vec<&Float> = estimates[i].iter().rev().take(3).filter_map(|(_, e)| e.as_ref()).collect();
            if recent.len() == 3 {
                let close = |a: &Float, b: &Float| Float::with_val(bits, a - b).abs() <= Float::with_val(bits, &rtol * a);
                if close(recent[0], recent[1]) && close(recent[1], recent[2]) {
                    done[i] = Some(m);
                }
            }
        }
        if done.iter().all(Option::is_some) || m >= cap {
            break;
        }
        m = (m + cfg.step).min(cap);
    }
    // orders past the plateau only feed stability checks
    match g.extend_to((m + cfg.lookahead).min(reach)) {
        Err(e @ GramError::NotPositiveDefinite { .. }) if strict_lookahead => return Err(e),
        _ => {}
    }
    Ok(ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let profile: Vec<Float> = g.inverse_diagonal_profile(k).into_iter().map(|v| v.sqrt()).collect();
            let history: Vec<HistoryPoint> = estimates[i]
                .iter()
                .map(|(mm, e)| HistoryPoint { m: *mm, truncated: profile[mm - k].to_f64(), estimate: e.as_ref().map(Float::to_f64) })
                .collect();
            match done[i] {
                Some(m_star) => Ok(Plateau {
                    k,
                    t,
                    norm: estimates[i].last().and_then(|(_, e)| e.clone()).expect("converged"),
                    truncated: profile[m_star - k].clone(),
                    m_star,
                    history,
                    profile,
                    taus: taus[..=g.order().min(taus.len() - 1)].to_vec(),
                    bits,
                    rtol: cfg.rtol,
                    order: cfg.order,
                }),
                None => Err(GramError::NoPlateau { k, m_max: m, history }),
            }
        })
        .collect())
}
