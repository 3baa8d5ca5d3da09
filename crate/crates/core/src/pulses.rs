//! Laser-pulse generators and their unitaries.
//!
//! Every pulse is `exp(i·angle·H)` with `H` one of:
//!
//! * carrier: `e^{iφ}|l⟩⟨j| + h.c.`
//! * jc (red sideband): `e^{iφ} a†|l⟩⟨j| + h.c.`
//! * ajc (blue sideband): `e^{iφ} a|l⟩⟨j| + h.c.`
//! * erot: `σ^{lj}_y` rotated by the laser phase, i.e. the carrier at `φ + π/2`
//! * vrot: `L_y ⊗ (e^{iφ}|l⟩⟨j| + h.c.)`, acting on both modes
//!
//! The angle is the dimensionless pulse area multiplying `H`; ladder factors
//! such as `√(k+1)` stay inside `H`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilator, creator, embed, level_matrix, pauli, unitary_from_generator, HilbertDims, Level,
    Mode, Operator, Space, Axis, ELECTRONIC_DIM,
};
use crate::linalg::{CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseKind {
    Carrier,
    Jc,
    Ajc,
    Erot,
    Vrot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseMode {
    X,
    Z,
    Both,
}

impl From<Mode> for PulseMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::X => PulseMode::X,
            Mode::Z => PulseMode::Z,
        }
    }
}

/// One primitive pulse. Serialized as a flat record with fields
/// `kind, levels, mode, angle, phase`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub kind: PulseKind,
    pub levels: (Level, Level),
    pub mode: PulseMode,
    pub angle: f64,
    pub phase: f64,
}

impl PulseSpec {
    pub fn carrier(levels: (Level, Level), angle: f64, phase: f64) -> Self {
        Self {
            kind: PulseKind::Carrier,
            levels,
            mode: PulseMode::Both,
            angle,
            phase,
        }
    }

    pub fn jc(mode: Mode, levels: (Level, Level), angle: f64, phase: f64) -> Self {
        Self {
            kind: PulseKind::Jc,
            levels,
            mode: mode.into(),
            angle,
            phase,
        }
    }

    pub fn ajc(mode: Mode, levels: (Level, Level), angle: f64, phase: f64) -> Self {
        Self {
            kind: PulseKind::Ajc,
            levels,
            mode: mode.into(),
            angle,
            phase,
        }
    }

    /// `R^l(θ) = exp(iθσ^{lξ}_y)`.
    pub fn erot(level: Level, angle: f64) -> Self {
        Self {
            kind: PulseKind::Erot,
            levels: (level, Level::Xi),
            mode: PulseMode::Both,
            angle,
            phase: 0.0,
        }
    }

    /// `R^vibr(θ) = exp(iθ L_y σ^{+ξ}_x)`.
    pub fn vrot(angle: f64) -> Self {
        Self {
            kind: PulseKind::Vrot,
            levels: (Level::Plus, Level::Xi),
            mode: PulseMode::Both,
            angle,
            phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (l, j) = self.levels;
        if l == j {
            return Err(Error::InvalidArguments(format!(
                "pulse levels must differ, got ({l}, {j})"
            )));
        }
        if !self.angle.is_finite() {
            return Err(Error::InvalidArguments(format!(
                "pulse angle must be finite, got {}",
                self.angle
            )));
        }
        if !(0.0..TAU).contains(&self.phase) {
            return Err(Error::InvalidArguments(format!(
                "pulse phase must lie in [0, 2π), got {}",
                self.phase
            )));
        }
        match (self.kind, self.mode) {
            (PulseKind::Jc | PulseKind::Ajc, PulseMode::Both) => Err(Error::InvalidArguments(
                "sideband pulses must name a single mode".into(),
            )),
            _ => Ok(()),
        }
    }

    fn single_mode(&self) -> Option<Mode> {
        match self.mode {
            PulseMode::X => Some(Mode::X),
            PulseMode::Z => Some(Mode::Z),
            PulseMode::Both => None,
        }
    }
}

impl fmt::Display for PulseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}[{}{}, {:?}] angle={:.6} phase={:.6}",
            self.kind, self.levels.0, self.levels.1, self.mode, self.angle, self.phase
        )
    }
}

fn distinct(levels: (Level, Level)) -> Result<()> {
    if levels.0 == levels.1 {
        return Err(Error::InvalidArguments(format!(
            "coupling needs two distinct levels, got ({}, {})",
            levels.0, levels.1
        )));
    }
    Ok(())
}

fn phased_coupling(levels: (Level, Level), phase: f64) -> CMatrix {
    level_matrix(levels.0, levels.1) * C64::from_polar(1.0, phase)
}

/// `O + O†`, tagged Hermitian.
fn plus_adjoint(o: Operator) -> Result<Operator> {
    let h = o.combine(C64::new(1.0, 0.0), &o.adjoint(), C64::new(1.0, 0.0))?;
    h.into_hermitian()
}

fn electronic_only(dims: HilbertDims, el: &CMatrix) -> Operator {
    embed(
        dims,
        el,
        &CMatrix::identity(dims.dx(), dims.dx()),
        &CMatrix::identity(dims.dz(), dims.dz()),
    )
}

/// `e^{iφ}|l⟩⟨j| + h.c.`
pub fn h_carrier(levels: (Level, Level), phase: f64, dims: HilbertDims) -> Result<Operator> {
    distinct(levels)?;
    plus_adjoint(electronic_only(dims, &phased_coupling(levels, phase)))
}

/// `e^{iφ} a†_mode |l⟩⟨j| + h.c.`
pub fn h_jc(mode: Mode, levels: (Level, Level), phase: f64, dims: HilbertDims) -> Result<Operator> {
    distinct(levels)?;
    let coupling = electronic_only(dims, &phased_coupling(levels, phase));
    plus_adjoint(creator(mode, dims).compose(&coupling)?)
}

/// `e^{iφ} a_mode |l⟩⟨j| + h.c.`
pub fn h_ajc(mode: Mode, levels: (Level, Level), phase: f64, dims: HilbertDims) -> Result<Operator> {
    distinct(levels)?;
    let coupling = electronic_only(dims, &phased_coupling(levels, phase));
    plus_adjoint(annihilator(mode, dims).compose(&coupling)?)
}

/// `R^l(θ) = exp(iθσ^{lξ}_y)`, identity on the third level.
pub fn r_electronic(level: Level, theta: f64, dims: HilbertDims) -> Result<Operator> {
    if level == Level::Xi {
        return Err(Error::InvalidArguments(
            "electronic rotation addresses the − or + level".into(),
        ));
    }
    unitary_from_generator(&pauli(level, Level::Xi, Axis::Y, dims)?, theta)
}

/// Two-mode rotation generator `L_y = i(a†_x a_z − a†_z a_x)`.
///
/// With this sign and unit normalization `exp(i(π/2)L_y)` maps
/// `|n⟩_x|0⟩_z ↦ |0⟩_x|n⟩_z` with coefficient `+1`: conjugation sends
/// `a†_x ↦ a†_x cos θ + a†_z sin θ`.
pub fn l_y(dims: HilbertDims) -> Operator {
    let ax = annihilator(Mode::X, dims);
    let az = annihilator(Mode::Z, dims);
    let hop = ax.adjoint().compose(&az).expect("same space");
    // i·hop + h.c. = i(a†_x a_z − a†_z a_x)
    let h = hop
        .combine(C64::new(0.0, 1.0), &hop.adjoint(), C64::new(0.0, -1.0))
        .expect("same space");
    h.into_hermitian().expect("L_y is Hermitian by construction")
}

fn vrot_generator(levels: (Level, Level), phase: f64, dims: HilbertDims) -> Result<Operator> {
    let el = h_carrier(levels, phase, dims)?;
    l_y(dims).compose(&el)?.into_hermitian()
}

/// `R^vibr(θ) = exp(iθ L_y σ^{+ξ}_x)`.
pub fn r_vibr(theta: f64, dims: HilbertDims) -> Result<Operator> {
    unitary_from_generator(&vrot_generator((Level::Plus, Level::Xi), 0.0, dims)?, theta)
}

/// Hermitian generator of a pulse.
pub fn generator(p: &PulseSpec, dims: HilbertDims) -> Result<Operator> {
    p.validate()?;
    match p.kind {
        PulseKind::Carrier => h_carrier(p.levels, p.phase, dims),
        PulseKind::Jc => h_jc(p.single_mode().expect("validated"), p.levels, p.phase, dims),
        PulseKind::Ajc => h_ajc(p.single_mode().expect("validated"), p.levels, p.phase, dims),
        PulseKind::Erot => h_carrier(p.levels, (p.phase + FRAC_PI_2) % TAU, dims),
        PulseKind::Vrot => vrot_generator(p.levels, p.phase, dims),
    }
}

/// `exp(i·angle·H_kind)`.
pub fn compile_pulse(p: &PulseSpec, dims: HilbertDims) -> Result<Operator> {
    unitary_from_generator(&generator(p, dims)?, p.angle)
}

/// Unitary of a time-ordered schedule: the first pulse acts first.
pub fn compile_schedule(schedule: &[PulseSpec], dims: HilbertDims) -> Result<Operator> {
    let mut total = Operator::identity(Space::Composite(dims));
    for p in schedule {
        total = compile_pulse(p, dims)?.compose(&total)?;
    }
    Ok(total)
}

/// Projector onto one electronic level, identity on both modes.
pub fn level_projector(level: Level, dims: HilbertDims) -> Operator {
    let mut el = CMatrix::zeros(ELECTRONIC_DIM, ELECTRONIC_DIM);
    el[(level.index(), level.index())] = C64::new(1.0, 0.0);
    electronic_only(dims, &el)
}
