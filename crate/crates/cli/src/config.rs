use std::path::PathBuf;

use biortho_core::example_sequences::SequenceSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Classify,
    Biortho,
    Pw,
    Bounds,
    Cost,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Classify => "classify",
            Self::Biortho => "biortho",
            Self::Pw => "pw",
            Self::Bounds => "bounds",
            Self::Cost => "cost",
            Self::Sweep => "sweep",
        }
    }
}

/// Numeric options shared by all commands. Unset values take the
/// command's default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default = "default_bits")]
    pub precision_bits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, rename = "M_max", skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    #[serde(default = "default_t_values", rename = "T_values")]
    pub t_values: Vec<f64>,
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Prefix length for `classify`.
    #[serde(default = "default_prefix")]
    pub prefix: usize,
}

fn default_bits() -> u32 {
    512
}
fn default_t_values() -> Vec<f64> {
    vec![1.0]
}
fn default_k_min() -> usize {
    1
}
fn default_k_max() -> usize {
    10
}
fn default_prefix() -> usize {
    500
}

impl Default for Options {
    fn default() -> Self {
        Self { precision_bits: default_bits(), rtol: None, m_max: None, t_values: default_t_values(), k_min: default_k_min(), k_max: default_k_max(), prefix: default_prefix() }
    }
}

impl Options {
    pub fn ks(&self) -> Vec<usize> {
        (self.k_min..=self.k_max).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    /// x = 1/T.
    InverseT,
    /// x = 1/T^{γ/(1−γ)}.
    #[default]
    Scaled,
}

/// Grid of a sweep: one sequence parameter against the T values of the options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<f64>,
    #[serde(default)]
    pub abscissa: Abscissa,
    /// γ of the common scaled abscissa; defaults to each point's own γ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub sequence: SequenceSpec,
    #[serde(default)]
    pub options: Options,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::ConfigInvalid(m));
        let o = &self.options;
        if !(32..=1 << 16).contains(&o.precision_bits) {
            return bad(format!("precision_bits = {} outside [32, 65536]", o.precision_bits));
        }
        if o.t_values.is_empty() || o.t_values.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return bad("T_values must be a nonempty list of positive numbers".into());
        }
        if o.k_min == 0 || o.k_min > o.k_max {
            return bad(format!("k range {}..={} is empty or starts at 0", o.k_min, o.k_max));
        }
        if o.rtol.is_some_and(|r| !(r > 0.0 && r < 1.0)) {
            return bad("rtol must lie in (0, 1)".into());
        }
        if o.m_max == Some(0) || o.prefix == 0 {
            return bad("M_max and prefix must be positive".into());
        }
        if let SequenceSpec::Explicit { terms } = &self.sequence {
            if terms.is_empty() {
                return bad("explicit sequence has no terms".into());
            }
        }
        let ctx = biortho_core::mp_numerics::PrecisionContext::new(o.precision_bits).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        self.sequence.build(ctx).map_err(|e| CliError::ConfigInvalid(format!("sequence: {e}")))?;
        match (&self.command, &self.sweep) {
            (Command::Sweep, None) => bad("sweep needs a `sweep` section".into()),
            (Command::Sweep, Some(s)) => {
                if s.values.is_empty() {
                    return bad("sweep grid is empty".into());
                }
                for v in &s.values {
                    self.sequence.with_param(&s.parameter, *v).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
                }
                if s.gamma_star.is_some_and(|g| !(g > 0.0 && g < 1.0)) {
                    return bad("gamma_star must lie in (0, 1)".into());
                }
                Ok(())
            }
            (c, Some(_)) => bad(format!("`sweep` section given for command {}", c.name())),
            _ => Ok(()),
        }
    }
}
