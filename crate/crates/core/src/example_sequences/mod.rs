//! Concrete eigenvalue families with their class parameters attached.
//!
//! Each generator returns a lazy [`EigenSequence`]. Sequences are also
//! described by a serializable [`SequenceSpec`], the JSON form used by
//! configuration files:
//!
//! ```json
//! {"kind": "grouped", "params": {"m": 2}}
//! {"kind": "explicit", "terms": [[1.0, 0.0], [4.0, 0.0]]}
//! ```

mod dirichlet;
mod grouped;
mod perturbed;
mod phase_field;
mod quadratic;

pub use dirichlet::{gen_dirichlet_pair, DirichletRatio};
pub use grouped::{gen_grouped, grouped_counting_formula};
pub use perturbed::{gen_perturbed, perturbed_condensation_bounds};
pub use phase_field::{check_h2, check_h2_exact, gen_phase_field, H2Violation, PhaseFieldSpectrum};
pub use quadratic::gen_quadratic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mp_numerics::PrecisionContext;
use crate::sequence_core::{EigenSequence, ExplicitSource, SequenceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExampleError {
    #[error("shift ω = {0} must exceed −1")]
    InvalidShift(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("√d is rational: k² = d·n² at k = {k}, n = {n}")]
    RationalRootCollision { k: u64, n: u64 },
    #[error("eigenvalue collision (H2) at k = {}, ℓ = {}", .0.k, .0.l)]
    H2Violation(H2Violation),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticParams {
    pub inv_p: f64,
    #[serde(default)]
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupedParams {
    pub m: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletParams {
    pub d: DirichletRatio,
    /// Range over which coincidences k² = d·n² are ruled out.
    #[serde(default = "default_check_range")]
    pub check_range: usize,
}

fn default_check_range() -> usize {
    500
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbedParams {
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseFieldParams {
    pub xi: f64,
    pub rho: f64,
    pub tau: f64,
    /// Largest index up to which the collision condition is scanned.
    #[serde(default = "default_h2_range")]
    pub h2_range: usize,
}

fn default_h2_range() -> usize {
    50
}

/// Serializable description of a sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    Quadratic { params: QuadraticParams },
    Grouped { params: GroupedParams },
    DirichletPair { params: DirichletParams },
    Perturbed { params: PerturbedParams },
    PhaseField { params: PhaseFieldParams },
    Explicit { terms: Vec<[f64; 2]> },
}

impl SequenceSpec {
    pub fn build(&self, ctx: PrecisionContext) -> Result<EigenSequence, ExampleError> {
        match self {
            Self::Quadratic { params } => gen_quadratic(params.inv_p, params.omega),
            Self::Grouped { params } => gen_grouped(params.m),
            Self::DirichletPair { params } => gen_dirichlet_pair(params.d.clone(), params.check_range, ctx),
            Self::Perturbed { params } => gen_perturbed(params.gamma),
            Self::PhaseField { params } => {
                gen_phase_field(params.xi, params.rho, params.tau, params.h2_range, ctx).map(|(_, seq)| seq)
            }
            Self::Explicit { terms } => {
                let source = ExplicitSource::new(terms.iter().map(|t| (t[0], t[1])).collect())?;
                Ok(EigenSequence::new("explicit", source))
            }
        }
    }

    /// Short identifier used in file names and tables.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Quadratic { .. } => "quadratic",
            Self::Grouped { .. } => "grouped",
            Self::DirichletPair { .. } => "dirichlet_pair",
            Self::Perturbed { .. } => "perturbed",
            Self::PhaseField { .. } => "phase_field",
            Self::Explicit { .. } => "explicit",
        }
    }

    /// The same spec with one scalar parameter replaced, for sweeps.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self, ExampleError> {
        let mut out = self.clone();
        let bad = || ExampleError::InvalidParameter(format!("{} has no numeric parameter `{name}`", self.kind()));
        match (&mut out, name) {
            (Self::Quadratic { params }, "inv_p") => params.inv_p = value,
            (Self::Quadratic { params }, "omega") => params.omega = value,
            (Self::Grouped { params }, "m") if value.fract() == 0.0 && value >= 0.0 => params.m = value as u32,
            (Self::DirichletPair { params }, "d") => params.d = DirichletRatio::Float(value),
            (Self::Perturbed { params }, "gamma") => params.gamma = value,
            (Self::PhaseField { params }, "xi") => params.xi = value,
            (Self::PhaseField { params }, "rho") => params.rho = value,
            (Self::PhaseField { params }, "tau") => params.tau = value,
            _ => return Err(bad()),
        }
        Ok(out)
    }
}
