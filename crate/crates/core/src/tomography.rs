//! Element-by-element reconstruction sweeps, post-processing and the
//! single-coherence decoherence monitor.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{DensityOperator, Mode, Space};
use crate::linalg::{CMatrix, HermitianEigen, C64, ZERO};
use crate::protocol::{prepare_initial, CoherenceEstimate, Protocol, ProtocolSettings};
use crate::states::{dephase, VibrationalState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub max_abs_error: f64,
    pub trace_distance: f64,
    pub hs_distance: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReconstructOptions {
    /// Fill `(n, m)` from `conj((m, n))` instead of running it.
    pub use_hermitian_symmetry: bool,
}

#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    pub nmax: usize,
    /// `(nmax+1) × (nmax+1)` block of estimated `⟨m|ρ|n⟩`.
    pub estimates: CMatrix,
    pub stderr: DMatrix<f64>,
    pub shots_per_cell: u64,
    /// Nearest physical density matrix; `None` when the estimate block has
    /// no positive part to renormalize.
    pub projected: Option<DensityOperator>,
    /// Against the input block, when the input is known.
    pub metrics: Option<Metrics>,
    pub settings: ProtocolSettings,
    pub options: ReconstructOptions,
}

fn block(rho: &CMatrix, nmax: usize) -> CMatrix {
    rho.view((0, 0), (nmax + 1, nmax + 1)).into_owned()
}

/// `½ Σ |λ_i(A − B)|` on the Hermitian part of `A − B`.
pub fn trace_norm_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = a - b;
    let herm = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
    0.5 * HermitianEigen::new(&herm)
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .sum::<f64>()
}

pub fn hilbert_schmidt_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.space() != b.space() {
        return Err(Error::DimensionMismatch {
            expected: a.space().dim(),
            found: b.space().dim(),
        });
    }
    Ok(trace_norm_distance(a.matrix(), b.matrix()))
}

/// Hermitize, clip negative eigenvalues, renormalize to unit trace.
pub fn project_physical(m: &CMatrix) -> Result<DensityOperator> {
    if !m.is_square() {
        return Err(Error::InvalidArguments("matrix must be square".into()));
    }
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = HermitianEigen::new(&herm);
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= f64::EPSILON {
        return Err(Error::DegenerateInput(
            "matrix has no positive spectral weight to project".into(),
        ));
    }
    let n = m.nrows();
    let v = &eig.eigenvectors;
    let mut out = CMatrix::zeros(n, n);
    for (k, w) in clipped.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let col = v.column(k);
        out += col * col.adjoint() * C64::new(w / total, 0.0);
    }
    // exact Hermiticity after floating-point accumulation
    let out = (&out + out.adjoint()) * C64::new(0.5, 0.0);
    DensityOperator::new(Space::Mode(n), out)
}

fn check_block(nmax: usize, settings: &ProtocolSettings) -> Result<()> {
    let limit = settings.max_ladder_index(Mode::X).min(settings.max_ladder_index(Mode::Z));
    if nmax > limit {
        return Err(Error::PreconditionViolation(format!(
            "cutoff {} too small for nmax={nmax} in {:?} mode (max {limit})",
            settings.dims.dx(),
            settings.v_mode
        )));
    }
    Ok(())
}

/// Runs the protocol once per cell of the `[0, nmax]²` block.
pub fn reconstruct(
    phi: &VibrationalState,
    nmax: usize,
    settings: &ProtocolSettings,
    options: ReconstructOptions,
) -> Result<ReconstructionReport> {
    check_block(nmax, settings)?;
    let protocol = Protocol::new(*settings)?;
    let rho0 = prepare_initial(phi, settings.dims)?;

    let cells: Vec<(usize, usize)> = (0..=nmax)
        .flat_map(|m| (0..=nmax).map(move |n| (m, n)))
        .filter(|&(m, n)| !options.use_hermitian_symmetry || m <= n)
        .collect();
    let measured: Vec<CoherenceEstimate> = cells
        .par_iter()
        .map(|&(m, n)| protocol.measure_prepared(&rho0, m, n))
        .collect::<Result<_>>()?;

    let size = nmax + 1;
    let mut estimates = CMatrix::from_element(size, size, ZERO);
    let mut stderr = DMatrix::zeros(size, size);
    for est in &measured {
        estimates[(est.m, est.n)] = est.value;
        stderr[(est.m, est.n)] = est.stderr;
        if options.use_hermitian_symmetry && est.m != est.n {
            estimates[(est.n, est.m)] = est.value.conj();
            stderr[(est.n, est.m)] = est.stderr;
        }
    }

    let truth = block(&phi.density_matrix(), nmax);
    let metrics = Metrics {
        max_abs_error: (&estimates - &truth)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
        trace_distance: trace_norm_distance(&estimates, &truth),
        hs_distance: hilbert_schmidt_distance(&estimates, &truth),
    };

    Ok(ReconstructionReport {
        nmax,
        projected: project_physical(&estimates).ok(),
        estimates,
        stderr,
        shots_per_cell: settings.shots.unwrap_or(0),
        metrics: Some(metrics),
        settings: *settings,
        options,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorPoint {
    pub lambda: f64,
    pub rho20_abs: f64,
    /// `√(ρ₀₀ ρ₂₂)`
    pub bound: f64,
}

/// For each dephasing strength, measures exactly `ρ₂₀`, `ρ₀₀` and `ρ₂₂` and
/// reports `|ρ₂₀|` next to `√(ρ₀₀ρ₂₂)`.
pub fn decoherence_monitor(
    phi: &VibrationalState,
    lambdas: &[f64],
    settings: &ProtocolSettings,
) -> Result<Vec<MonitorPoint>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArguments("at least one dephasing strength is required".into()));
    }
    if lambdas.iter().any(|l| l.is_nan() || *l < 0.0) {
        return Err(Error::InvalidArguments("dephasing strengths must be nonnegative".into()));
    }
    if lambdas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArguments("dephasing strengths must be sorted".into()));
    }
    check_block(2, settings)?;
    let protocol = Protocol::new(*settings)?;

    lambdas
        .iter()
        .map(|&lambda| {
            let rho0 = prepare_initial(&dephase(phi, lambda)?, settings.dims)?;
            let c20 = protocol.measure_prepared(&rho0, 2, 0)?.value;
            let p00 = protocol.measure_prepared(&rho0, 0, 0)?.value.re;
            let p22 = protocol.measure_prepared(&rho0, 2, 2)?.value.re;
            Ok(MonitorPoint {
                lambda,
                rho20_abs: c20.norm(),
                bound: (p00.max(0.0) * p22.max(0.0)).sqrt(),
            })
        })
        .collect()
}
