//! The measurement protocol: prepare `ρ_vib ⊗ |0⟩⟨0|_z ⊗ |−⟩⟨−|`, apply
//! `U_mn = V⁺_n · V⁻_m · U₀₀`, read out the `{−, +}` pseudospin.
//!
//! On a pure input `|φ⟩` the transformed state is
//! `(|φ⟩_x|m⟩_z|−⟩ + |n⟩_x|φ⟩_z|+⟩)/√2`, and
//! `⟨σx⟩ − i⟨σy⟩ = 2 Tr(ρ|−⟩⟨+|) = ⟨φ|n⟩⟨m|φ⟩ = ⟨m|ρ_vib|n⟩`.
//! The same identity holds for mixed inputs by linearity.
//!
//! `U₀₀ = R⁺(−π/4) · R^vibr(π/2) · R⁺(−π/4) · R⁻(π/4)`: the first two pulses
//! take `|−⟩` to `(|−⟩ + |α⟩)/√2` with `|α⟩ = (|+⟩ + |ξ⟩)/√2`, the vibrational
//! rotation swaps the modes on the `|α⟩` branch only, and the last pulse
//! rotates `|α⟩` back to `|+⟩`. Under the `σ_y` sign used throughout,
//! `R⁺(+π/4)` would send `|α⟩` to `|ξ⟩` instead. The variant with `R⁻(π/4)`
//! as the last pulse is kept for comparison and leaves population in `|ξ⟩`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    apply, expectation, pauli_matrix, reduce_to_electronic, Axis, DensityOperator, HilbertDims,
    Level, Mode, Operator, Space, ELECTRONIC_DIM,
};
use crate::linalg::{CMatrix, HermitianEigen, C64, ONE, ZERO};
use crate::pulses::{compile_schedule, PulseSpec};
use crate::states::VibrationalState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VMode {
    #[default]
    Ideal,
    Compiled,
}

/// Which last pulse closes `U₀₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum U00Variant {
    /// `R⁺(−π/4)`, which rotates `|α⟩` back onto `|+⟩`.
    #[default]
    Restoring,
    /// `R⁻(π/4)` as the leftmost factor, as the sequence is usually printed.
    PrintedLeftmost,
}

/// Completion of the ideal ladder maps outside the branch they are defined on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Completion {
    /// `|k⟩ ↦ |k+n mod d⟩` inside the addressed electronic sector.
    #[default]
    CyclicShift,
    /// `|0⟩ ↔ |n⟩` inside the addressed electronic sector.
    Transposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolSettings {
    pub dims: HilbertDims,
    pub v_mode: VMode,
    /// `None` for exact expectations.
    pub shots: Option<u64>,
    pub seed: u64,
    pub u00_variant: U00Variant,
    #[serde(skip)]
    pub completion: Completion,
}

impl ProtocolSettings {
    pub fn exact(dims: HilbertDims) -> Self {
        Self {
            dims,
            v_mode: VMode::Ideal,
            shots: None,
            seed: 0,
            u00_variant: U00Variant::Restoring,
            completion: Completion::CyclicShift,
        }
    }

    pub fn with_v_mode(mut self, v_mode: VMode) -> Self {
        self.v_mode = v_mode;
        self
    }

    pub fn with_shots(mut self, shots: u64, seed: u64) -> Self {
        self.shots = Some(shots);
        self.seed = seed;
        self
    }

    pub fn with_u00_variant(mut self, variant: U00Variant) -> Self {
        self.u00_variant = variant;
        self
    }

    pub fn with_completion(mut self, completion: Completion) -> Self {
        self.completion = completion;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.dx() != self.dims.dz() {
            return Err(Error::PreconditionViolation(format!(
                "the mode swap needs equal cutoffs, got dx={} dz={}",
                self.dims.dx(),
                self.dims.dz()
            )));
        }
        if self.shots == Some(0) {
            return Err(Error::InvalidArguments("shots must be at least 1".into()));
        }
        Ok(())
    }

    /// Largest Fock index a ladder map may target in this mode.
    pub fn max_ladder_index(&self, mode: Mode) -> usize {
        let cutoff = self.dims.cutoff(mode);
        match self.v_mode {
            VMode::Ideal => cutoff - 1,
            VMode::Compiled => cutoff - 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceEstimate {
    pub value: C64,
    /// Zero in exact mode.
    pub stderr: f64,
    pub shots_used: u64,
    pub m: usize,
    pub n: usize,
}

/// `ρ_vib ⊗ |0⟩⟨0|_z ⊗ |−⟩⟨−|` in canonical index order.
pub fn prepare_initial(phi: &VibrationalState, dims: HilbertDims) -> Result<DensityOperator> {
    if phi.dim() != dims.dx() {
        return Err(Error::DimensionMismatch {
            expected: dims.dx(),
            found: phi.dim(),
        });
    }
    if phi.is_leaky() {
        return Err(Error::TruncationLeakage {
            tail_mass: phi.tail_mass(),
            tail_tol: phi.tail_tol(),
            required_dim: phi.dim() + 1,
        });
    }
    let rho = phi.density_matrix();
    let mut out = CMatrix::zeros(dims.dim(), dims.dim());
    for p in 0..dims.dx() {
        for q in 0..dims.dx() {
            out[(dims.index(Level::Minus, p, 0), dims.index(Level::Minus, q, 0))] = rho[(p, q)];
        }
    }
    Ok(DensityOperator::from_trusted(Space::Composite(dims), out))
}

/// Time-ordered pulses of `U₀₀`.
pub fn u00_schedule(variant: U00Variant) -> Vec<PulseSpec> {
    let last = match variant {
        U00Variant::Restoring => PulseSpec::erot(Level::Plus, -FRAC_PI_4),
        U00Variant::PrintedLeftmost => PulseSpec::erot(Level::Minus, FRAC_PI_4),
    };
    vec![
        PulseSpec::erot(Level::Minus, FRAC_PI_4),
        PulseSpec::erot(Level::Plus, -FRAC_PI_4),
        PulseSpec::vrot(FRAC_PI_2),
        last,
    ]
}

fn require_equal_cutoffs(dims: HilbertDims) -> Result<()> {
    if dims.dx() != dims.dz() {
        return Err(Error::PreconditionViolation(format!(
            "U00 needs equal cutoffs, got dx={} dz={}",
            dims.dx(),
            dims.dz()
        )));
    }
    Ok(())
}

pub fn u00(dims: HilbertDims) -> Result<Operator> {
    u00_variant(dims, U00Variant::Restoring)
}

pub fn u00_variant(dims: HilbertDims, variant: U00Variant) -> Result<Operator> {
    require_equal_cutoffs(dims)?;
    compile_schedule(&u00_schedule(variant), dims)
}

/// Electronic sector and mode a ladder map addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `V⁺`: mode x inside the `|+⟩` sector.
    Plus,
    /// `V⁻`: mode z inside the `|−⟩` sector.
    Minus,
}

impl Branch {
    pub fn level(self) -> Level {
        match self {
            Branch::Plus => Level::Plus,
            Branch::Minus => Level::Minus,
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            Branch::Plus => Mode::X,
            Branch::Minus => Mode::Z,
        }
    }
}

fn check_ladder_index(k: usize, limit: usize) -> Result<()> {
    if k > limit {
        return Err(Error::IndexOutOfRange {
            index: k,
            limit: limit + 1,
        });
    }
    Ok(())
}

/// Permutation taking `|0⟩ ↦ |k⟩` on the branch's mode inside its electronic
/// sector, identity on the other two sectors.
pub fn v_ideal(branch: Branch, k: usize, dims: HilbertDims, completion: Completion) -> Result<Operator> {
    let cutoff = dims.cutoff(branch.mode());
    check_ladder_index(k, cutoff - 1)?;
    let shift = |j: usize| match completion {
        Completion::CyclicShift => (j + k) % cutoff,
        Completion::Transposition => {
            if j == 0 {
                k
            } else if j == k {
                0
            } else {
                j
            }
        }
    };
    let mut m = CMatrix::zeros(dims.dim(), dims.dim());
    for col in 0..dims.dim() {
        let (level, nx, nz) = dims.decompose(col);
        let row = if level == branch.level() {
            match branch.mode() {
                Mode::X => dims.index(level, shift(nx), nz),
                Mode::Z => dims.index(level, nx, shift(nz)),
            }
        } else {
            col
        };
        m[(row, col)] = ONE;
    }
    Operator::new(Space::Composite(dims), m)?.into_unitary()
}

pub fn v_plus_ideal(n: usize, dims: HilbertDims) -> Result<Operator> {
    v_ideal(Branch::Plus, n, dims, Completion::CyclicShift)
}

pub fn v_minus_ideal(m: usize, dims: HilbertDims) -> Result<Operator> {
    v_ideal(Branch::Minus, m, dims, Completion::CyclicShift)
}

/// Sideband ladder `|0⟩|ℓ⟩ → |k⟩|ℓ⟩` on the branch's mode using the `{ℓ, ξ}`
/// pair: alternating blue (ajc) and red (jc) sideband π-pulses, closed by a
/// carrier π-pulse when the ladder ends in `|ξ⟩`.
///
/// A resonant π-pulse maps the lower-to-upper state with factor `i e^{∓iφ}`.
/// The phases below make every step contribute exactly `+1`.
pub fn v_schedule(branch: Branch, k: usize, dims: HilbertDims) -> Result<Vec<PulseSpec>> {
    let cutoff = dims.cutoff(branch.mode());
    check_ladder_index(k, cutoff.saturating_sub(2))?;
    let levels = (branch.level(), Level::Xi);
    let mode = branch.mode();
    // a|ℓ⟩⟨ξ| term, moving |j,ℓ⟩ → |j+1,ξ⟩: i e^{−iφ} = 1
    let ajc_phase = FRAC_PI_2;
    // a†|ℓ⟩⟨ξ| and |ℓ⟩⟨ξ| terms, moving |·,ξ⟩ → |·,ℓ⟩: i e^{iφ} = 1
    let to_level_phase = 3.0 * FRAC_PI_2;

    let mut schedule = Vec::with_capacity(k + 1);
    for step in 0..k {
        // coupling strength of the transition |step⟩ → |step+1⟩ is √(step+1)
        let angle = FRAC_PI_2 / ((step + 1) as f64).sqrt();
        if step % 2 == 0 {
            schedule.push(PulseSpec::ajc(mode, levels, angle, ajc_phase));
        } else {
            schedule.push(PulseSpec::jc(mode, levels, angle, to_level_phase));
        }
    }
    if k % 2 == 1 {
        schedule.push(PulseSpec::carrier(levels, FRAC_PI_2, to_level_phase));
    }
    Ok(schedule)
}

pub fn v_plus_schedule(n: usize, dims: HilbertDims) -> Result<Vec<PulseSpec>> {
    v_schedule(Branch::Plus, n, dims)
}

pub fn v_minus_schedule(m: usize, dims: HilbertDims) -> Result<Vec<PulseSpec>> {
    v_schedule(Branch::Minus, m, dims)
}

pub fn v_plus_compiled(n: usize, dims: HilbertDims) -> Result<Operator> {
    compile_schedule(&v_plus_schedule(n, dims)?, dims)
}

pub fn v_minus_compiled(m: usize, dims: HilbertDims) -> Result<Operator> {
    compile_schedule(&v_minus_schedule(m, dims)?, dims)
}

/// Projector onto the subspace a ladder map must get right: the branch's own
/// sector with its mode in `|0⟩`, plus the entire opposite branch sector.
pub fn relevant_projector(branch: Branch, dims: HilbertDims) -> CMatrix {
    let other = match branch {
        Branch::Plus => Level::Minus,
        Branch::Minus => Level::Plus,
    };
    let mut p = CMatrix::zeros(dims.dim(), dims.dim());
    for i in 0..dims.dim() {
        let (level, nx, nz) = dims.decompose(i);
        let in_ladder_start = level == branch.level()
            && match branch.mode() {
                Mode::X => nx == 0,
                Mode::Z => nz == 0,
            };
        if in_ladder_start || level == other {
            p[(i, i)] = ONE;
        }
    }
    p
}

/// Full protocol with per-index caches of `U₀₀` and the ladder maps. Safe to
/// share between threads.
pub struct Protocol {
    settings: ProtocolSettings,
    u00: OnceLock<Operator>,
    v_plus: Vec<OnceLock<Operator>>,
    v_minus: Vec<OnceLock<Operator>>,
    sigma_x: OnceLock<Operator>,
    sigma_y: OnceLock<Operator>,
}

impl Protocol {
    pub fn new(settings: ProtocolSettings) -> Result<Self> {
        settings.validate()?;
        Ok(Self {
            u00: OnceLock::new(),
            v_plus: (0..settings.dims.dx()).map(|_| OnceLock::new()).collect(),
            v_minus: (0..settings.dims.dz()).map(|_| OnceLock::new()).collect(),
            sigma_x: OnceLock::new(),
            sigma_y: OnceLock::new(),
            settings,
        })
    }

    pub fn settings(&self) -> &ProtocolSettings {
        &self.settings
    }

    fn cached(cell: &OnceLock<Operator>, build: impl FnOnce() -> Result<Operator>) -> Result<&Operator> {
        if let Some(op) = cell.get() {
            return Ok(op);
        }
        let op = build()?;
        Ok(cell.get_or_init(|| op))
    }

    pub fn u00(&self) -> Result<&Operator> {
        Self::cached(&self.u00, || {
            u00_variant(self.settings.dims, self.settings.u00_variant)
        })
    }

    pub fn v(&self, branch: Branch, k: usize) -> Result<&Operator> {
        let s = &self.settings;
        check_ladder_index(k, s.max_ladder_index(branch.mode()))?;
        let cell = match branch {
            Branch::Plus => &self.v_plus[k],
            Branch::Minus => &self.v_minus[k],
        };
        Self::cached(cell, || match s.v_mode {
            VMode::Ideal => v_ideal(branch, k, s.dims, s.completion),
            VMode::Compiled => compile_schedule(&v_schedule(branch, k, s.dims)?, s.dims),
        })
    }

    /// `U_mn = V⁺_n · V⁻_m · U₀₀`.
    pub fn u_mn(&self, m: usize, n: usize) -> Result<Operator> {
        let u00 = self.u00()?;
        let vm = self.v(Branch::Minus, m)?;
        let vp = self.v(Branch::Plus, n)?;
        vp.compose(&vm.compose(u00)?)
    }

    /// Applies the pulse sequence to the prepared state, pulse group by
    /// pulse group.
    pub fn transformed_state(&self, rho0: &DensityOperator, m: usize, n: usize) -> Result<DensityOperator> {
        let after_u00 = apply(self.u00()?, rho0)?;
        let after_vm = apply(self.v(Branch::Minus, m)?, &after_u00)?;
        apply(self.v(Branch::Plus, n)?, &after_vm)
    }

    fn sigmas(&self) -> Result<(&Operator, &Operator)> {
        let dims = self.settings.dims;
        let sx = Self::cached(&self.sigma_x, || {
            crate::hilbert::pauli(Level::Minus, Level::Plus, Axis::X, dims)
        })?;
        let sy = Self::cached(&self.sigma_y, || {
            crate::hilbert::pauli(Level::Minus, Level::Plus, Axis::Y, dims)
        })?;
        Ok((sx, sy))
    }

    pub fn measure_element(&self, phi: &VibrationalState, m: usize, n: usize) -> Result<CoherenceEstimate> {
        let rho0 = prepare_initial(phi, self.settings.dims)?;
        self.measure_prepared(&rho0, m, n)
    }

    pub fn measure_prepared(&self, rho0: &DensityOperator, m: usize, n: usize) -> Result<CoherenceEstimate> {
        let rho_mn = self.transformed_state(rho0, m, n)?;
        match self.settings.shots {
            None => {
                let (sx, sy) = self.sigmas()?;
                let ex = expectation(&rho_mn, sx)?.re;
                let ey = expectation(&rho_mn, sy)?.re;
                Ok(CoherenceEstimate {
                    value: combine(ex, ey),
                    stderr: 0.0,
                    shots_used: 0,
                    m,
                    n,
                })
            }
            Some(shots) => coherence_sampled(&rho_mn, m, n, shots, self.settings.seed),
        }
    }
}

/// `⟨σx⟩ − i⟨σy⟩`: the sign that turns the pseudospin readout into `⟨m|ρ|n⟩`
/// rather than its conjugate.
fn combine(ex: f64, ey: f64) -> C64 {
    C64::new(ex, -ey)
}

/// Exact readout `Tr(ρσx) − i Tr(ρσy)` on the `{−, +}` pair.
pub fn coherence_expectation(rho_mn: &DensityOperator) -> Result<C64> {
    let dims = rho_mn.space().composite().ok_or_else(|| {
        Error::InvalidArguments("coherence readout needs a composite-space state".into())
    })?;
    let sx = crate::hilbert::pauli(Level::Minus, Level::Plus, Axis::X, dims)?;
    let sy = crate::hilbert::pauli(Level::Minus, Level::Plus, Axis::Y, dims)?;
    Ok(combine(
        expectation(rho_mn, &sx)?.re,
        expectation(rho_mn, &sy)?.re,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
enum Observable {
    SigmaX = 1,
    SigmaY = 2,
}

/// Outcome probabilities `(p₊₁, p₋₁, p₀)` of a projective pseudospin
/// measurement, from the eigenprojectors of the observable on the electronic
/// factor.
pub fn outcome_probabilities(rho_el: &CMatrix, axis: Axis) -> Result<[f64; 3]> {
    let obs = pauli_matrix(Level::Minus, Level::Plus, axis)?;
    let eig = HermitianEigen::new(&obs);
    let mut probs = [0.0; 3];
    for (col, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(col);
        let p = (v.adjoint() * rho_el * v)[(0, 0)].re;
        let slot = if lambda > 0.5 {
            0
        } else if lambda < -0.5 {
            1
        } else {
            2
        };
        probs[slot] += p;
    }
    for p in &mut probs {
        *p = p.clamp(0.0, 1.0);
    }
    Ok(probs)
}

fn stream_seed(seed: u64, m: usize, n: usize, tag: Observable) -> [u8; 32] {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&(m as u64).to_le_bytes());
    bytes[16..24].copy_from_slice(&(n as u64).to_le_bytes());
    bytes[24..].copy_from_slice(&(tag as u64).to_le_bytes());
    bytes
}

/// Sample mean and variance of `shots` draws with outcomes +1, −1, 0.
fn sample_observable(probs: [f64; 3], shots: u64, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
    let [p_plus, p_minus, _] = probs;
    let binomial = |trials: u64, p: f64| -> Result<Binomial> {
        Binomial::new(trials, p.clamp(0.0, 1.0))
            .map_err(|e| Error::InvalidArguments(format!("bad outcome probability: {e}")))
    };
    let plus = binomial(shots, p_plus)?.sample(rng);
    let rest = 1.0 - p_plus;
    let cond_minus = if rest > 0.0 { p_minus / rest } else { 0.0 };
    let minus = binomial(shots - plus, cond_minus)?.sample(rng);

    let total = shots as f64;
    let mean = (plus as f64 - minus as f64) / total;
    let second = (plus + minus) as f64 / total;
    Ok((mean, (second - mean * mean).max(0.0)))
}

/// Finite-shot readout: `shots` projective measurements of `σx` and,
/// independently, `shots` of `σy`. Each stream is seeded from
/// `(seed, m, n, observable)` only.
pub fn coherence_sampled(
    rho_mn: &DensityOperator,
    m: usize,
    n: usize,
    shots: u64,
    seed: u64,
) -> Result<CoherenceEstimate> {
    if shots == 0 {
        return Err(Error::InvalidArguments("shots must be at least 1".into()));
    }
    let rho_el = reduce_to_electronic(rho_mn)?;
    debug_assert_eq!(rho_el.nrows(), ELECTRONIC_DIM);

    let run = |axis: Axis, tag: Observable| -> Result<(f64, f64)> {
        let probs = outcome_probabilities(&rho_el, axis)?;
        let mut rng = ChaCha8Rng::from_seed(stream_seed(seed, m, n, tag));
        sample_observable(probs, shots, &mut rng)
    };
    let (mean_x, var_x) = run(Axis::X, Observable::SigmaX)?;
    let (mean_y, var_y) = run(Axis::Y, Observable::SigmaY)?;

    Ok(CoherenceEstimate {
        value: combine(mean_x, mean_y),
        stderr: ((var_x + var_y) / shots as f64).sqrt(),
        shots_used: shots,
        m,
        n,
    })
}

/// `U_mn` for the given settings.
pub fn u_mn(m: usize, n: usize, settings: &ProtocolSettings) -> Result<Operator> {
    Protocol::new(*settings)?.u_mn(m, n)
}

/// Prepare, transform, read out.
pub fn measure_element(
    phi: &VibrationalState,
    m: usize,
    n: usize,
    settings: &ProtocolSettings,
) -> Result<CoherenceEstimate> {
    Protocol::new(*settings)?.measure_element(phi, m, n)
}

/// Pure-state target of `U_mn`: `(|φ⟩_x|m⟩_z|−⟩ + |n⟩_x|φ⟩_z|+⟩)/√2`.
pub fn target_state(phi: &VibrationalState, m: usize, n: usize, dims: HilbertDims) -> Result<crate::linalg::CVector> {
    let amps = phi.amplitudes().ok_or_else(|| {
        Error::InvalidArguments("target state is defined for pure inputs".into())
    })?;
    if amps.len() != dims.dx() || dims.dx() != dims.dz() {
        return Err(Error::DimensionMismatch {
            expected: dims.dx(),
            found: amps.len(),
        });
    }
    let fock = |k: usize, d: usize| {
        let mut v = crate::linalg::CVector::from_element(d, ZERO);
        v[k] = ONE;
        v
    };
    let minus = dims.product_vector(amps, &fock(m, dims.dz()), Level::Minus);
    let plus = dims.product_vector(&fock(n, dims.dx()), amps, Level::Plus);
    Ok((minus + plus) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
}
