use biortho_core::control_cost::{cost_scaling_experiment, phase_field_cost, CostConfig, CostReport};
use biortho_core::example_sequences::SequenceSpec;
use biortho_core::gram_biorthogonal::{converge_many, Plateau, TruncationConfig};
use biortho_core::guichal_bounds::{bound_report, fit_constant_c, write_bound_table, BoundReport, Observation};
use biortho_core::mp_numerics::PrecisionContext;
use biortho_core::paley_wiener::{synthesize_qk, MollifierConfig, SynthesisConfig};
use biortho_core::sequence_core::{check_class, ClassParameters, ClassReport, EigenSequence};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{csv_error, fmt_num, fmt_opt, svg_polylines, OutputDir, Series};
use crate::CliError;

fn failed(context: impl Into<String>) -> impl FnOnce(String) -> CliError {
    let context = context.into();
    move |message| CliError::ComputeFailed { context, message }
}

pub(crate) fn context(cfg: &ExperimentConfig) -> Result<(PrecisionContext, EigenSequence), CliError> {
    let ctx = PrecisionContext::new(cfg.options.precision_bits).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    let seq = cfg.sequence.build(ctx).map_err(|e| CliError::ConfigInvalid(format!("sequence: {e}")))?;
    Ok((ctx, seq))
}

fn params_of<'a>(seq: &'a EigenSequence, what: &str) -> Result<&'a ClassParameters, CliError> {
    seq.params().ok_or_else(|| CliError::ConfigInvalid(format!("{what} needs a sequence with attached class parameters, {} has none", seq.label())))
}

#[derive(Serialize)]
struct ClassifyOutput<'a> {
    report: &'a ClassReport,
    /// The same check with q lowered by one, when q > 1.
    lowered_q: Option<&'a ClassReport>,
}

pub fn classify(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (ctx, seq) = context(cfg)?;
    let params = params_of(&seq, "classify")?;
    let bits = ctx.bits();
    let report = check_class(&seq, params, cfg.options.prefix, ctx);
    let lowered = (params.q > 1).then(|| check_class(&seq, &params.clone().with_q(params.q - 1), cfg.options.prefix, ctx));
    out.write_with("results.csv", |buf| {
        let err = csv_error("results.csv");
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["q", "hypothesis", "status", "margin", "witness_k", "witness_n", "witness_r", "note"]).map_err(&err)?;
        for (q, r) in std::iter::once((params.q, &report)).chain(lowered.iter().map(|r| (params.q - 1, r))) {
            for c in &r.checks {
                let wit = c.witness.as_ref();
                w.write_record([
                    q.to_string(),
                    c.hypothesis.name().to_string(),
                    format!("{:?}", c.status).to_uppercase(),
                    fmt_opt(c.margin, bits),
                    wit.and_then(|w| w.k).map_or_else(String::new, |k| k.to_string()),
                    wit.and_then(|w| w.n).map_or_else(String::new, |n| n.to_string()),
                    fmt_opt(wit.and_then(|w| w.r), bits),
                    wit.map_or_else(String::new, |w| w.note.clone()),
                ])
                .map_err(&err)?;
            }
            for v in &r.parameter_violations {
                w.write_record([q.to_string(), "parameters".into(), "FAIL".into(), String::new(), String::new(), String::new(), String::new(), v.clone()]).map_err(&err)?;
            }
        }
        w.flush().map_err(|e| CliError::io(std::path::Path::new("results.csv"), e))
    })?;
    out.write_json("class_report.json", &ClassifyOutput { report: &report, lowered_q: lowered.as_ref() })
}

#[derive(Serialize)]
struct BiorthoOutput {
    plateaus: Vec<Plateau>,
    bounds: Vec<BoundReport>,
    c_fit: Option<f64>,
}

pub fn biortho(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (ctx, seq) = context(cfg)?;
    let bits = ctx.bits();
    let o = &cfg.options;
    let defaults = TruncationConfig::default();
    let tcfg = TruncationConfig { rtol: o.rtol.unwrap_or(defaults.rtol), m_max: o.m_max.unwrap_or(defaults.m_max), ..defaults };
    let ks = o.ks();
    let mut plateaus = Vec::new();
    for &t in &o.t_values {
        let found = converge_many(&seq, &ks, t, tcfg, ctx).map_err(|e| failed(format!("Gram plateau at T = {t}"))(e.to_string()))?;
        for (k, p) in ks.iter().zip(found) {
            plateaus.push(p.map_err(|e| failed(format!("plateau of ‖s_{k}‖ at T = {t}"))(e.to_string()))?);
        }
    }
    let mut bounds = Vec::new();
    let mut c_fit = None;
    if let Some(params) = seq.params() {
        for p in &plateaus {
            bounds.push(bound_report(&seq, params, p.k, p.t, Some(p.norm.to_f64()), ctx).map_err(|e| failed(format!("bounds at k = {}, T = {}", p.k, p.t))(e.to_string()))?);
        }
        let obs: Vec<Observation> = bounds.iter().map(|b| Observation { k: b.k, t: b.t, norm: b.observed_norm.unwrap_or(f64::NAN), p_k: b.p_k, lambda_k_abs: b.lambda_k_abs }).collect();
        c_fit = fit_constant_c(&obs, params, seq.is_real()).ok().map(|f| f.c);
    }
    out.write_with("results.csv", |buf| {
        let err = csv_error("results.csv");
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["k", "T", "norm", "truncated", "M_star", "precision_bits", "lower", "certified", "lower_holds"]).map_err(&err)?;
        for (i, p) in plateaus.iter().enumerate() {
            let b = bounds.get(i);
            w.write_record([
                p.k.to_string(),
                p.t.to_string(),
                fmt_num(p.norm.to_f64(), bits),
                fmt_num(p.truncated.to_f64(), bits),
                p.m_star.to_string(),
                p.bits.to_string(),
                fmt_opt(b.map(|b| b.lower), bits),
                b.map_or_else(String::new, |b| b.certified.to_string()),
                b.and_then(BoundReport::lower_bound_holds).map_or_else(String::new, |h| h.to_string()),
            ])
            .map_err(&err)?;
        }
        w.flush().map_err(|e| CliError::io(std::path::Path::new("results.csv"), e))
    })?;
    if !bounds.is_empty() {
        out.write_with("bounds.csv", |buf| write_bound_table(&bounds, c_fit, buf).map_err(csv_error("bounds.csv")))?;
    }
    out.write_json("biortho.json", &BiorthoOutput { plateaus, bounds, c_fit })
}

pub fn bounds(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (ctx, seq) = context(cfg)?;
    let params = params_of(&seq, "bounds")?;
    let bits = ctx.bits();
    let mut reports = Vec::new();
    for &t in &cfg.options.t_values {
        for k in cfg.options.ks() {
            reports.push(bound_report(&seq, params, k, t, None, ctx).map_err(|e| failed(format!("bounds at k = {k}, T = {t}"))(e.to_string()))?);
        }
    }
    out.write_with("results.csv", |buf| {
        let err = csv_error("results.csv");
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["k", "T", "q", "P_k", "lambda_k_abs", "B_k", "E_k", "D_k", "lower", "dominant", "certified"]).map_err(&err)?;
        for r in &reports {
            w.write_record([
                r.k.to_string(),
                r.t.to_string(),
                r.q.to_string(),
                fmt_num(r.p_k, bits),
                fmt_num(r.lambda_k_abs, bits),
                fmt_num(r.b_k, bits),
                fmt_num(r.e_k, bits),
                fmt_num(r.d_k, bits),
                fmt_num(r.lower, bits),
                format!("{:?}", r.dominant).to_lowercase(),
                r.certified.to_string(),
            ])
            .map_err(&err)?;
        }
        w.flush().map_err(|e| CliError::io(std::path::Path::new("results.csv"), e))
    })?;
    out.write_json("bounds.json", &reports)
}

pub fn pw(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (ctx, seq) = context(cfg)?;
    let params = params_of(&seq, "pw")?;
    let bits = ctx.bits();
    let quad = SynthesisConfig::default();
    let ks = cfg.options.ks();
    let mut rows = Vec::new();
    for (i, &t) in cfg.options.t_values.iter().enumerate() {
        let mcfg = MollifierConfig::for_time(t, params.p2).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        let fam = synthesize_qk(&seq, params, &ks, t, &mcfg, &quad, ctx).map_err(|e| failed(format!("synthesis at T = {t}"))(e.to_string()))?;
        out.write_with(&format!("qk_samples_{i}.csv"), |buf| fam.write_csv(buf).map_err(|e| failed("writing q_k samples")(e.to_string())))?;
        out.write_with(&format!("pw_{i}.json"), |buf| fam.write_json(buf).map_err(|e| failed("writing synthesis metadata")(e.to_string())))?;
        for m in &fam.members {
            rows.push([
                t.to_string(),
                m.k.to_string(),
                fmt_num(m.norm_plancherel, bits),
                fmt_num(m.norm_direct, bits),
                fmt_num(m.interpolation_error, bits),
                fmt_num(m.max_residual, bits),
                fmt_num(m.tail_estimate, bits),
            ]);
        }
    }
    out.write_with("results.csv", |buf| {
        let err = csv_error("results.csv");
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["T", "k", "norm_plancherel", "norm_direct", "interpolation_error", "max_residual", "tail_estimate"]).map_err(&err)?;
        for r in &rows {
            w.write_record(r).map_err(&err)?;
        }
        w.flush().map_err(|e| CliError::io(std::path::Path::new("results.csv"), e))
    })
}

pub(crate) fn cost_config(cfg: &ExperimentConfig) -> CostConfig {
    let d = CostConfig::default();
    CostConfig { bits: cfg.options.precision_bits, m_max: cfg.options.m_max.unwrap_or(d.m_max), rtol: cfg.options.rtol.unwrap_or(d.rtol), ..d }
}

pub fn cost(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let ccfg = cost_config(cfg);
    let ts = &cfg.options.t_values;
    let report: CostReport = match &cfg.sequence {
        SequenceSpec::Perturbed { params } => cost_scaling_experiment(params.gamma, ts, &ccfg),
        SequenceSpec::PhaseField { params } => phase_field_cost(params.xi, params.rho, params.tau, ts, &ccfg),
        other => return Err(CliError::ConfigInvalid(format!("cost runs on perturbed or phase_field sequences, got {}", other.kind()))),
    }
    .map_err(|e| failed("control cost")(e.to_string()))?;
    let write_err = |name: &'static str| move |e: biortho_core::control_cost::ControlError| failed(format!("writing {name}"))(e.to_string());
    out.write_with("results.csv", |buf| report.write_csv(buf).map_err(write_err("results.csv")))?;
    out.write_with("plot_inverse_t.csv", |buf| report.write_plot_csv(buf, false).map_err(write_err("plot_inverse_t.csv")))?;
    let mut series = vec![Series { label: "log K vs 1/T".into(), points: report.points.iter().map(|p| (1.0 / p.t, p.log_cost)).collect() }];
    if let Some(g) = report.gamma {
        out.write_with("plot_scaled.csv", |buf| report.write_plot_csv(buf, true).map_err(write_err("plot_scaled.csv")))?;
        series = vec![Series { label: format!("log K vs 1/T^(γ/(1−γ)), γ = {g}"), points: report.points.iter().map(|p| (p.t.powf(-g / (1.0 - g)), p.log_cost)).collect() }];
    }
    let x_label = if report.gamma.is_some() { "1/T^(γ/(1−γ))" } else { "1/T" };
    out.write_bytes("cost.svg", svg_polylines(&report.sequence, x_label, "log K", &series).as_bytes())?;
    out.write_json("cost_report.json", &report)
}
