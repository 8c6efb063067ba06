use std::fs;

use biortho_core::control_cost::{cost_plateau, CostConfig};
use biortho_core::example_sequences::SequenceSpec;
use biortho_core::mp_numerics::PrecisionContext;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::cost_config;
use crate::config::{Abscissa, ExperimentConfig, SweepSpec};
use crate::output::{csv_error, fmt_num, svg_polylines, OutputDir, Series};
use crate::CliError;

/// Everything that determines a cached cost point.
#[derive(Serialize)]
struct CacheKey<'a> {
    kind: &'static str,
    sequence: &'a SequenceSpec,
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "M_max")]
    m_max: usize,
    precision_bits: u32,
    rtol: f64,
    step: usize,
    order: usize,
    version: &'static str,
}

pub fn cache_key(sequence: &SequenceSpec, t: f64, cfg: &CostConfig) -> String {
    let key = CacheKey {
        kind: "cost",
        sequence,
        t,
        m_max: cfg.m_max,
        precision_bits: cfg.bits,
        rtol: cfg.rtol,
        step: cfg.step,
        order: cfg.order,
        version: env!("CARGO_PKG_VERSION"),
    };
    let bytes = serde_json::to_vec(&key).expect("cache key serializes");
    hex::encode(Sha256::digest(bytes))
}

/// A cost point as stored in the cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub key: String,
    pub sequence: SequenceSpec,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "K")]
    pub cost: f64,
    pub log_cost: f64,
    #[serde(rename = "K_truncated")]
    pub truncated: f64,
    #[serde(rename = "M_star")]
    pub m_star: usize,
    pub precision_bits: u32,
    pub rtol: f64,
}

struct Point {
    value: f64,
    t: f64,
    sequence: SequenceSpec,
    key: String,
}

fn compute(p: &Point, cfg: &CostConfig) -> Result<CostRecord, String> {
    let ctx = PrecisionContext::new(cfg.bits).map_err(|e| e.to_string())?;
    let seq = p.sequence.build(ctx).map_err(|e| e.to_string())?;
    let c = cost_plateau(&seq, p.t, cfg).map_err(|e| e.to_string())?;
    Ok(CostRecord { key: p.key.clone(), sequence: p.sequence.clone(), t: p.t, cost: c.cost, log_cost: c.log_cost, truncated: c.truncated, m_star: c.m_star, precision_bits: c.precision_bits, rtol: c.rtol })
}

fn abscissa(spec: &SweepSpec, seq: &SequenceSpec, value: f64, t: f64) -> Result<f64, CliError> {
    match spec.abscissa {
        Abscissa::InverseT => Ok(1.0 / t),
        Abscissa::Scaled => {
            let gamma = spec
                .gamma_star
                .or_else(|| (spec.parameter == "gamma").then_some(value))
                .or(match seq {
                    SequenceSpec::Perturbed { params } => Some(params.gamma),
                    _ => None,
                })
                .ok_or_else(|| CliError::ConfigInvalid("scaled abscissa needs gamma_star or a γ sweep".into()))?;
            Ok(t.powf(-gamma / (1.0 - gamma)))
        }
    }
}

/// Outcome of a sweep: number of failed grid points.
pub struct SweepOutcome {
    pub failed: usize,
    pub total: usize,
}

/// Evaluates K(T) on the product of the sweep values and the T values.
/// Points run in parallel; cache reads and all file writes happen on
/// the calling thread in grid order.
pub fn sweep(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<SweepOutcome, CliError> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| CliError::ConfigInvalid("sweep needs a `sweep` section".into()))?;
    let ccfg = cost_config(cfg);
    let bits = ccfg.bits;
    let mut points = Vec::new();
    for &value in &spec.values {
        let sequence = cfg.sequence.with_param(&spec.parameter, value).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        for &t in &cfg.options.t_values {
            let key = cache_key(&sequence, t, &ccfg);
            points.push(Point { value, t, sequence: sequence.clone(), key });
        }
    }
    let cache_dir = out.path("cache");
    fs::create_dir_all(&cache_dir).map_err(|e| CliError::io(&cache_dir, e))?;
    let cached: Vec<Option<CostRecord>> = points
        .iter()
        .map(|p| fs::read_to_string(cache_dir.join(format!("{}.json", p.key))).ok().and_then(|s| serde_json::from_str::<CostRecord>(&s).ok()).filter(|r| r.key == p.key))
        .collect();
    let results: Vec<Result<CostRecord, String>> =
        points.par_iter().zip(cached.into_par_iter()).map(|(p, hit)| hit.map_or_else(|| compute(p, &ccfg), Ok)).collect();
    for r in results.iter().flatten() {
        let path = cache_dir.join(format!("{}.json", r.key));
        let mut text = serde_json::to_string_pretty(r).map_err(|e| CliError::ComputeFailed { context: "cache record".into(), message: e.to_string() })?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    }
    let mut failed = 0;
    let mut series: Vec<Series> = spec.values.iter().map(|v| Series { label: format!("{} = {v}", spec.parameter), points: Vec::new() }).collect();
    let mut rows = Vec::with_capacity(points.len());
    for (p, r) in points.iter().zip(&results) {
        let x = abscissa(spec, &p.sequence, p.value, p.t)?;
        match r {
            Ok(rec) => {
                let i = spec.values.iter().position(|v| *v == p.value).expect("value from grid");
                series[i].points.push((x, rec.log_cost));
                rows.push([
                    p.value.to_string(),
                    p.t.to_string(),
                    fmt_num(x, bits),
                    fmt_num(rec.cost, bits),
                    fmt_num(rec.log_cost, bits),
                    fmt_num(rec.truncated, bits),
                    rec.m_star.to_string(),
                    rec.precision_bits.to_string(),
                    p.key.clone(),
                    "ok".into(),
                ]);
            }
            Err(e) => {
                failed += 1;
                rows.push([p.value.to_string(), p.t.to_string(), fmt_num(x, bits), String::new(), String::new(), String::new(), String::new(), String::new(), p.key.clone(), format!("error: {e}")]);
            }
        }
    }
    out.write_with("results.csv", |buf| {
        let err = csv_error("results.csv");
        let mut w = csv::Writer::from_writer(buf);
        w.write_record([spec.parameter.as_str(), "T", "x", "K", "log_K", "K_truncated", "M_star", "precision_bits", "cache_key", "status"]).map_err(&err)?;
        for r in &rows {
            w.write_record(r).map_err(&err)?;
        }
        w.flush().map_err(|e| CliError::io(std::path::Path::new("results.csv"), e))
    })?;
    let x_label = match spec.abscissa {
        Abscissa::InverseT => "1/T",
        Abscissa::Scaled => "1/T^(γ/(1−γ))",
    };
    out.write_bytes("sweep.svg", svg_polylines(&format!("{} sweep of K(T)", spec.parameter), x_label, "log K", &series).as_bytes())?;
    Ok(SweepOutcome { failed, total: points.len() })
}
