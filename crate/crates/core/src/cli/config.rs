//! Run configuration, read from a JSON document.
//!
//! ```json
//! {
//!   "dims": {"dx": 12, "dz": 12},
//!   "state": {"kind": "coherent", "alpha": {"re": 0.8, "im": 0.0}, "dephase": 0.3},
//!   "nmax": 5,
//!   "v_mode": "ideal",
//!   "shots": null,
//!   "seed": 0,
//!   "output": {"path": "report.json", "format": "json"}
//! }
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::hilbert::HilbertDims;
use crate::linalg::C64;
use crate::protocol::{ProtocolSettings, U00Variant, VMode};
use crate::states::{self, Parity, VibrationalState, DEFAULT_TAIL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Parts { re: f64, im: f64 },
}

impl ComplexValue {
    pub fn to_c64(self) -> C64 {
        match self {
            ComplexValue::Real(re) => C64::new(re, 0.0),
            ComplexValue::Parts { re, im } => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateFamily {
    Fock { n: usize },
    Coherent { alpha: ComplexValue },
    Squeezed { r: f64, #[serde(default)] phi: f64 },
    Cat { alpha: ComplexValue, parity: Parity },
    Thermal { nbar: f64 },
    Raw { amplitudes: Vec<ComplexValue> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateConfig {
    #[serde(flatten)]
    pub family: StateFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephase: Option<f64>,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            family: StateFamily::Fock { n: 0 },
            tail_tol: None,
            dephase: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsConfig {
    pub dx: usize,
    pub dz: usize,
}

impl Default for DimsConfig {
    fn default() -> Self {
        Self { dx: 12, dz: 12 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_nmax() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub dims: DimsConfig,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default = "default_nmax")]
    pub nmax: usize,
    #[serde(default)]
    pub v_mode: VMode,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dims: DimsConfig::default(),
            state: StateConfig::default(),
            nmax: default_nmax(),
            v_mode: VMode::Ideal,
            shots: None,
            seed: 0,
            output: OutputConfig::default(),
        }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::ConfigInvalid {
        field: field.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn dims(&self) -> Result<HilbertDims, CliError> {
        HilbertDims::new(self.dims.dx, self.dims.dz)
            .map_err(|e| invalid("dims", e.to_string()))
    }

    /// Settings after the same checks the protocol runs, reported per field.
    pub fn settings(&self, variant: U00Variant) -> Result<ProtocolSettings, CliError> {
        let dims = self.dims()?;
        if dims.dx() != dims.dz() {
            return Err(invalid(
                "dims",
                format!("dx and dz must be equal, got {} and {}", dims.dx(), dims.dz()),
            ));
        }
        if self.shots == Some(0) {
            return Err(invalid("shots", "must be at least 1 when present"));
        }
        let mut s = ProtocolSettings::exact(dims)
            .with_v_mode(self.v_mode)
            .with_u00_variant(variant);
        s.shots = self.shots;
        s.seed = self.seed;
        s.validate().map_err(|e| invalid("dims", e.to_string()))?;
        Ok(s)
    }

    pub fn tail_tol(&self) -> f64 {
        self.state.tail_tol.unwrap_or(DEFAULT_TAIL_TOL)
    }

    /// Builds the vibrational state on mode x, dephased when requested.
    pub fn build_state(&self) -> Result<VibrationalState, CliError> {
        let dim = self.dims.dx;
        let tol = self.tail_tol();
        let base = match &self.state.family {
            StateFamily::Fock { n } => states::fock(*n, dim),
            StateFamily::Coherent { alpha } => states::coherent(alpha.to_c64(), dim, tol),
            StateFamily::Squeezed { r, phi } => states::squeezed(*r, *phi, dim, tol),
            StateFamily::Cat { alpha, parity } => states::cat(alpha.to_c64(), *parity, dim, tol),
            StateFamily::Thermal { nbar } => states::thermal(*nbar, dim, tol),
            StateFamily::Raw { amplitudes } => {
                if amplitudes.len() != dim {
                    return Err(invalid(
                        "state.amplitudes",
                        format!("expected {dim} amplitudes (dx), got {}", amplitudes.len()),
                    ));
                }
                states::raw(amplitudes.iter().map(|c| c.to_c64()).collect(), tol)
            }
        }?;
        match self.state.dephase {
            Some(lambda) => Ok(states::dephase(&base, lambda)?),
            None => Ok(base),
        }
    }
}
