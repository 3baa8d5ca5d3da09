//! Invariant suite shared by the `validate` command and the test suites.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{HilbertDims, Level, Mode};
use crate::linalg::{matmul, max_abs, CVector, C64};
use crate::protocol::{
    relevant_projector, target_state, v_ideal, v_schedule, Branch, Completion, Protocol,
    ProtocolSettings, VMode,
};
use crate::pulses::{compile_pulse, l_y};
use crate::hilbert::unitary_from_generator;
use crate::states::{self, Parity, VibrationalState, DEFAULT_TAIL_TOL};

pub const SWAP_TOL: f64 = 1e-10;
pub const END_TO_END_IDEAL_TOL: f64 = 1e-9;
pub const END_TO_END_COMPILED_TOL: f64 = 1e-7;
pub const UNITARITY_TOL: f64 = 1e-10;
pub const COMPILED_AGREEMENT_TOL: f64 = 1e-8;

/// `⟨0,n| exp(i(π/2)L_y) |n,0⟩` for `n = 0..=nmax`.
pub fn swap_amplitudes(dims: HilbertDims, nmax: usize) -> Result<Vec<C64>> {
    if nmax >= dims.dx().min(dims.dz()) {
        return Err(Error::IndexOutOfRange {
            index: nmax,
            limit: dims.dx().min(dims.dz()) - 1,
        });
    }
    let rot = unitary_from_generator(&l_y(dims), std::f64::consts::FRAC_PI_2)?;
    Ok((0..=nmax)
        .map(|n| {
            let out = rot.apply_vector(&dims.basis(Level::Minus, n, 0));
            out[dims.index(Level::Minus, 0, n)]
        })
        .collect())
}

/// Worst `|amplitude − 1|` of the mode swap over `n ≤ nmax`.
pub fn swap_error(dims: HilbertDims, nmax: usize) -> Result<f64> {
    Ok(swap_amplitudes(dims, nmax)?
        .into_iter()
        .map(|a| (a - C64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndToEnd {
    /// `‖U_mn|ψ⟩ − target‖`
    pub residual: f64,
    /// Population left in `|ξ⟩` after `U_mn`.
    pub xi_population: f64,
}

/// Runs `U_mn` on `|φ⟩_x|0⟩_z|−⟩` and compares with the two-branch target.
pub fn end_to_end(protocol: &Protocol, phi: &VibrationalState, m: usize, n: usize) -> Result<EndToEnd> {
    let dims = protocol.settings().dims;
    let amps = phi.amplitudes().ok_or_else(|| {
        Error::InvalidArguments("end-to-end check needs a pure input".into())
    })?;
    let mut vac = CVector::zeros(dims.dz());
    vac[0] = C64::new(1.0, 0.0);
    let psi = dims.product_vector(amps, &vac, Level::Minus);
    let after = protocol.u00()?.apply_vector(&psi);
    let after = protocol.v(Branch::Minus, m)?.apply_vector(&after);
    let out = protocol.v(Branch::Plus, n)?.apply_vector(&after);
    let target = target_state(phi, m, n, dims)?;
    let xi_population = (0..dims.dim())
        .filter(|&i| dims.decompose(i).0 == Level::Xi)
        .map(|i| out[i].norm_sqr())
        .sum();
    Ok(EndToEnd {
        residual: (out - target).norm(),
        xi_population,
    })
}

/// Agreement of the compiled ladder with the ideal one on the states the
/// protocol can feed it.
pub fn compiled_vs_ideal(branch: Branch, k: usize, dims: HilbertDims) -> Result<f64> {
    let compiled = crate::pulses::compile_schedule(&v_schedule(branch, k, dims)?, dims)?;
    let ideal = v_ideal(branch, k, dims, Completion::CyclicShift)?;
    let p = relevant_projector(branch, dims);
    Ok(max_abs(&(matmul(compiled.matrix(), &p) - matmul(ideal.matrix(), &p))))
}

/// Worst unitarity error over the individual pulses of a compiled ladder.
pub fn schedule_unitarity(branch: Branch, k: usize, dims: HilbertDims) -> Result<f64> {
    v_schedule(branch, k, dims)?
        .iter()
        .map(|p| compile_pulse(p, dims).map(|u| u.unitarity_error()))
        .try_fold(0.0, |acc, e| e.map(|e| f64::max(acc, e)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
            detail: detail.into(),
        }
    }
}

/// Pure inputs used by the end-to-end check; those that do not fit the
/// cutoff are left out.
pub fn suite_states(dim: usize) -> Vec<(String, VibrationalState)> {
    let candidates = [
        ("fock(0)", states::fock(0, dim)),
        ("fock(2)", states::fock(2, dim)),
        ("coherent(0.8)", states::coherent(C64::new(0.8, 0.0), dim, DEFAULT_TAIL_TOL)),
        ("cat(1.2, even)", states::cat(C64::new(1.2, 0.0), Parity::Even, dim, DEFAULT_TAIL_TOL)),
    ];
    candidates
        .into_iter()
        .filter_map(|(name, s)| s.ok().filter(|s| !s.is_leaky()).map(|s| (name.to_string(), s)))
        .collect()
}

/// Runs every invariant check for the given settings. The ladder index range
/// is `0..=min(2, limit)` for the end-to-end check and `0..=min(4, limit)`
/// for the operator checks.
pub fn validation_suite(settings: &ProtocolSettings) -> Result<Vec<CheckResult>> {
    settings.validate()?;
    let dims = settings.dims;
    let mut results = Vec::new();

    let swap_max = dims.dx().min(dims.dz()).saturating_sub(2);
    results.push(CheckResult::new(
        "mode swap",
        swap_error(dims, swap_max)?,
        SWAP_TOL,
        format!("n <= {swap_max}"),
    ));

    let ideal = Protocol::new(settings.with_v_mode(VMode::Ideal))?;
    let compiled = Protocol::new(settings.with_v_mode(VMode::Compiled))?;
    results.push(CheckResult::new(
        "U00 unitarity",
        ideal.u00()?.unitarity_error(),
        UNITARITY_TOL,
        "",
    ));

    let compiled_limit = compiled.settings().max_ladder_index(Mode::X);
    let states = suite_states(dims.dx());
    let kmax = 2.min(compiled_limit);
    for (label, protocol, tol) in [
        ("end-to-end (ideal V)", &ideal, END_TO_END_IDEAL_TOL),
        ("end-to-end (compiled V)", &compiled, END_TO_END_COMPILED_TOL),
    ] {
        let mut worst = EndToEnd { residual: 0.0, xi_population: 0.0 };
        for (_, phi) in &states {
            for m in 0..=kmax {
                for n in 0..=kmax {
                    let r = end_to_end(protocol, phi, m, n)?;
                    worst.residual = worst.residual.max(r.residual);
                    worst.xi_population = worst.xi_population.max(r.xi_population);
                }
            }
        }
        results.push(CheckResult::new(
            label,
            worst.residual,
            tol,
            format!(
                "{} states, m,n <= {kmax}, xi population {:.3e}",
                states.len(),
                worst.xi_population
            ),
        ));
    }

    let opmax = 4.min(compiled_limit);
    let mut v_unitarity: f64 = 0.0;
    let mut pulse_unitarity: f64 = 0.0;
    let mut agreement: f64 = 0.0;
    for branch in [Branch::Plus, Branch::Minus] {
        for k in 0..=opmax {
            v_unitarity = v_unitarity
                .max(ideal.v(branch, k)?.unitarity_error())
                .max(compiled.v(branch, k)?.unitarity_error());
            pulse_unitarity = pulse_unitarity.max(schedule_unitarity(branch, k, dims)?);
            agreement = agreement.max(compiled_vs_ideal(branch, k, dims)?);
        }
    }
    results.push(CheckResult::new("V unitarity", v_unitarity, UNITARITY_TOL, format!("k <= {opmax}")));
    results.push(CheckResult::new(
        "compiled pulse unitarity",
        pulse_unitarity,
        UNITARITY_TOL,
        format!("k <= {opmax}"),
    ));
    results.push(CheckResult::new(
        "compiled vs ideal V",
        agreement,
        COMPILED_AGREEMENT_TOL,
        format!("k <= {opmax}"),
    ));
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::U00Variant;

    fn dims(d: usize) -> HilbertDims {
        HilbertDims::new(d, d).unwrap()
    }

    #[test]
    fn swap_has_no_phase() {
        let amps = swap_amplitudes(dims(6), 4).unwrap();
        assert!(amps.iter().all(|a| (a - C64::new(1.0, 0.0)).norm() < 1e-10));
        assert!(swap_amplitudes(dims(6), 6).is_err());
    }

    #[test]
    fn suite_passes_and_printed_variant_fails() {
        let s = ProtocolSettings::exact(dims(6));
        let results = validation_suite(&s).unwrap();
        assert!(results.iter().all(|r| r.passed), "{results:?}");

        let printed = validation_suite(&s.with_u00_variant(U00Variant::PrintedLeftmost)).unwrap();
        let e2e = printed.iter().find(|r| r.name == "end-to-end (ideal V)").unwrap();
        assert!(!e2e.passed);
    }

    #[test]
    fn small_cutoffs_drop_leaky_states() {
        let names: Vec<_> = suite_states(3).into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, vec!["fock(0)", "fock(2)"]);
    }
}
