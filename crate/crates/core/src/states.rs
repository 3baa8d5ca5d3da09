//! Single-mode vibrational states used as the unknown state to reconstruct.
//!
//! Truncated states are renormalized on the cutoff; `tail_mass` records how
//! much population the truncation discarded so callers can reject leaky
//! preparations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{DensityOperator, Space, NORM_TOL};
use crate::linalg::{CMatrix, CVector, C64, ONE, ZERO};

pub const DEFAULT_TAIL_TOL: f64 = 1e-6;

/// Terms of an analytic tail are summed until they drop below this.
const TAIL_SUM_FLOOR: f64 = 1e-300;
const TAIL_SUM_MAX_TERMS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Pure(CVector),
    Mixed(CMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VibrationalState {
    dim: usize,
    repr: Repr,
    tail_mass: f64,
    tail_tol: f64,
}

impl VibrationalState {
    fn pure(amplitudes: CVector, tail_mass: f64, tail_tol: f64) -> Self {
        Self {
            dim: amplitudes.len(),
            repr: Repr::Pure(amplitudes),
            tail_mass,
            tail_tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn is_leaky(&self) -> bool {
        self.tail_mass > self.tail_tol
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&CVector> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            Repr::Mixed(_) => None,
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        match &self.repr {
            Repr::Pure(v) => v * v.adjoint(),
            Repr::Mixed(m) => m.clone(),
        }
    }

    /// `⟨m|ρ|n⟩`
    pub fn element(&self, m: usize, n: usize) -> C64 {
        match &self.repr {
            Repr::Pure(v) => v[m] * v[n].conj(),
            Repr::Mixed(rho) => rho[(m, n)],
        }
    }

    pub fn to_density_operator(&self) -> Result<DensityOperator> {
        DensityOperator::new(Space::Mode(self.dim), self.density_matrix())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidArguments(format!(
            "Fock cutoff must be at least 2, got {dim}"
        )));
    }
    Ok(())
}

fn check_tail_tol(tail_tol: f64) -> Result<()> {
    if !(tail_tol >= 0.0 && tail_tol.is_finite()) {
        return Err(Error::InvalidArguments(format!(
            "tail tolerance must be a finite nonnegative number, got {tail_tol}"
        )));
    }
    Ok(())
}

/// Population analysis of an (unnormalized) amplitude sequence `c_0, c_1, …`
/// generated lazily. Returns the kept amplitudes, the normalized tail mass
/// beyond `dim`, and the smallest cutoff meeting `tail_tol`.
fn truncate_series(
    dim: usize,
    tail_tol: f64,
    mut next: impl FnMut(usize) -> C64,
) -> Result<(CVector, f64)> {
    let kept = CVector::from_fn(dim, |n, _| next(n));
    let kept_mass: f64 = kept.iter().map(|c| c.norm_sqr()).sum();

    let mut tail_terms = Vec::new();
    let mut n = dim;
    let mut negligible_run = 0;
    loop {
        let p = next(n).norm_sqr();
        tail_terms.push(p);
        n += 1;
        // parity-restricted series vanish on every other index, so require a
        // run of negligible terms before stopping
        if p < TAIL_SUM_FLOOR.max(kept_mass * 1e-40) {
            negligible_run += 1;
        } else {
            negligible_run = 0;
        }
        if negligible_run >= 2 || tail_terms.len() > TAIL_SUM_MAX_TERMS {
            break;
        }
    }
    let tail: f64 = tail_terms.iter().rev().sum();
    let total = kept_mass + tail;
    if kept_mass <= 0.0 || !total.is_finite() {
        return Err(Error::DegenerateInput(
            "state has no population below the cutoff".into(),
        ));
    }
    let tail_mass = tail / total;
    if tail_mass > tail_tol {
        // smallest cutoff whose discarded population meets the tolerance
        let mut remaining = tail;
        let mut required = dim;
        for p in &tail_terms {
            if remaining / total <= tail_tol {
                break;
            }
            remaining -= p;
            required += 1;
        }
        return Err(Error::TruncationLeakage {
            tail_mass,
            tail_tol,
            required_dim: required,
        });
    }
    let norm = kept_mass.sqrt();
    Ok((kept.map(|c| c / norm), tail_mass))
}

/// Number state `|n⟩`.
pub fn fock(n: usize, dim: usize) -> Result<VibrationalState> {
    check_dim(dim)?;
    if n >= dim {
        return Err(Error::IndexOutOfRange { index: n, limit: dim });
    }
    let mut v = CVector::zeros(dim);
    v[n] = ONE;
    Ok(VibrationalState::pure(v, 0.0, DEFAULT_TAIL_TOL))
}

/// Glauber coherent state `|α⟩`, amplitudes `e^{−|α|²/2} αⁿ/√n!`.
pub fn coherent(alpha: C64, dim: usize, tail_tol: f64) -> Result<VibrationalState> {
    check_dim(dim)?;
    check_tail_tol(tail_tol)?;
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::InvalidArguments("alpha must be finite".into()));
    }
    let prefactor = (-alpha.norm_sqr() / 2.0).exp();
    let mut cache = vec![C64::new(prefactor, 0.0)];
    let (amps, tail) = truncate_series(dim, tail_tol, |n| {
        while cache.len() <= n {
            let k = cache.len();
            let prev = cache[k - 1];
            cache.push(prev * alpha / (k as f64).sqrt());
        }
        cache[n]
    })?;
    Ok(VibrationalState::pure(amps, tail, tail_tol))
}

/// Squeezed vacuum `S(ξ)|0⟩`, `ξ = r e^{iφ}`, `S(ξ) = exp((ξ* a² − ξ a†²)/2)`.
///
/// Even amplitudes follow `c_{2k+2} = −e^{iφ} tanh r · √((2k+1)/(2k+2)) · c_{2k}`
/// starting from `c_0 = 1/√cosh r`; odd amplitudes vanish.
pub fn squeezed(r: f64, phi: f64, dim: usize, tail_tol: f64) -> Result<VibrationalState> {
    check_dim(dim)?;
    check_tail_tol(tail_tol)?;
    if !(r.is_finite() && phi.is_finite()) {
        return Err(Error::InvalidArguments("squeezing parameters must be finite".into()));
    }
    let ratio = -C64::from_polar(r.tanh(), phi);
    let mut even = vec![C64::new(1.0 / r.cosh().sqrt(), 0.0)];
    let (amps, tail) = truncate_series(dim, tail_tol, |n| {
        if n % 2 == 1 {
            return ZERO;
        }
        let k = n / 2;
        while even.len() <= k {
            let j = even.len() - 1;
            let factor = ((2 * j + 1) as f64 / (2 * j + 2) as f64).sqrt();
            let prev = even[j];
            even.push(prev * ratio * factor);
        }
        even[k]
    })?;
    Ok(VibrationalState::pure(amps, tail, tail_tol))
}

/// Cat state `N(|α⟩ ± |−α⟩)`.
pub fn cat(alpha: C64, parity: Parity, dim: usize, tail_tol: f64) -> Result<VibrationalState> {
    check_dim(dim)?;
    check_tail_tol(tail_tol)?;
    if parity == Parity::Odd && alpha == ZERO {
        return Err(Error::DegenerateInput(
            "odd cat with alpha = 0 is the zero vector".into(),
        ));
    }
    let prefactor = (-alpha.norm_sqr() / 2.0).exp();
    let mut coh = vec![C64::new(prefactor, 0.0)];
    let keep_even = parity == Parity::Even;
    let (amps, tail) = truncate_series(dim, tail_tol, |n| {
        while coh.len() <= n {
            let k = coh.len();
            let prev = coh[k - 1];
            coh.push(prev * alpha / (k as f64).sqrt());
        }
        // ⟨n|α⟩ ± ⟨n|−α⟩ = ⟨n|α⟩ (1 ± (−1)ⁿ)
        if (n % 2 == 0) == keep_even {
            coh[n] * 2.0
        } else {
            ZERO
        }
    })?;
    Ok(VibrationalState::pure(amps, tail, tail_tol))
}

/// Thermal state, `ρ_nn ∝ (n̄/(1+n̄))ⁿ`.
pub fn thermal(nbar: f64, dim: usize, tail_tol: f64) -> Result<VibrationalState> {
    check_dim(dim)?;
    check_tail_tol(tail_tol)?;
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidArguments(format!(
            "mean phonon number must be finite and nonnegative, got {nbar}"
        )));
    }
    let q = nbar / (1.0 + nbar);
    // closed-form geometric tail
    let tail_mass = q.powi(dim as i32);
    if tail_mass > tail_tol {
        let required = if q > 0.0 {
            (tail_tol.ln() / q.ln()).ceil().max(dim as f64) as usize
        } else {
            dim
        };
        return Err(Error::TruncationLeakage {
            tail_mass,
            tail_tol,
            required_dim: required,
        });
    }
    let weights: Vec<f64> = (0..dim).map(|n| q.powi(n as i32)).collect();
    let total: f64 = weights.iter().sum();
    let diag = CVector::from_iterator(dim, weights.iter().map(|w| C64::new(w / total, 0.0)));
    Ok(VibrationalState {
        dim,
        repr: Repr::Mixed(CMatrix::from_diagonal(&diag)),
        tail_mass,
        tail_tol,
    })
}

/// User-supplied amplitudes `c_0 … c_{dim−1}`. The list must be normalized
/// within 1e−6 and is renormalized exactly. `tail_mass` is the population of
/// the top Fock level.
pub fn raw(amplitudes: Vec<C64>, tail_tol: f64) -> Result<VibrationalState> {
    let dim = amplitudes.len();
    check_dim(dim)?;
    check_tail_tol(tail_tol)?;
    let v = CVector::from_vec(amplitudes);
    let norm = v.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArguments(format!(
            "raw amplitudes must be normalized within 1e-6 (norm {norm})"
        )));
    }
    let v = v.map(|c| c / norm);
    let tail_mass = v[dim - 1].norm_sqr();
    Ok(VibrationalState::pure(v, tail_mass, tail_tol))
}

/// Fock-basis dephasing: `ρ_mn → ρ_mn · e^{−λ(m−n)²}`.
pub fn dephase(state: &VibrationalState, lambda: f64) -> Result<VibrationalState> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidArguments(format!(
            "dephasing strength must be nonnegative, got {lambda}"
        )));
    }
    let rho = state.density_matrix();
    let out = CMatrix::from_fn(state.dim, state.dim, |m, n| {
        if m == n {
            return rho[(m, n)];
        }
        let d = m as f64 - n as f64;
        let factor = if lambda.is_infinite() { 0.0 } else { (-lambda * d * d).exp() };
        rho[(m, n)] * factor
    });
    Ok(VibrationalState {
        dim: state.dim,
        repr: Repr::Mixed(out),
        tail_mass: state.tail_mass,
        tail_tol: state.tail_tol,
    })
}

impl VibrationalState {
    /// `‖ψ‖ = 1` or `Tr ρ = 1`, within the construction tolerance.
    pub fn is_normalized(&self) -> bool {
        match &self.repr {
            Repr::Pure(v) => (v.norm() - 1.0).abs() <= NORM_TOL,
            Repr::Mixed(m) => (m.trace() - ONE).norm() <= 1e-10,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, HermitianEigen};

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Direct series ⟨m|α⟩⟨α|n⟩ without any recurrence.
    fn coherent_element_oracle(alpha: C64, m: u32, n: u32) -> C64 {
        (-alpha.norm_sqr()).exp() * alpha.powu(m) * alpha.conj().powu(n)
            / (factorial(m) * factorial(n)).sqrt()
    }

    #[test]
    fn fock_states() {
        let v = fock(0, 8).unwrap();
        assert_eq!(v.element(0, 0), ONE);
        let f3 = fock(3, 8).unwrap();
        let rho = f3.density_matrix();
        assert_eq!(rho[(3, 3)], ONE);
        assert_eq!(rho.iter().filter(|z| **z != ZERO).count(), 1);
        let f2 = fock(2, 8).unwrap();
        assert_eq!(f2.amplitudes().unwrap().dotc(f3.amplitudes().unwrap()), ZERO);
        assert!(matches!(fock(8, 8), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn coherent_zero_is_vacuum() {
        let s = coherent(ZERO, 5, 1e-12).unwrap();
        assert_eq!(s.amplitudes().unwrap(), fock(0, 5).unwrap().amplitudes().unwrap());
    }

    #[test]
    fn coherent_matches_series_oracle() {
        let alpha = C64::new(0.8, 0.0);
        let s = coherent(alpha, 12, DEFAULT_TAIL_TOL).unwrap();
        let rho00 = coherent_element_oracle(alpha, 0, 0);
        let rho10 = coherent_element_oracle(alpha, 1, 0);
        assert!((rho00.re - 0.527292).abs() < 5e-7);
        assert!((rho10.re - 0.421834).abs() < 5e-7);
        assert!((s.element(0, 0) - rho00).norm() < 1e-10);
        assert!((s.element(1, 0) - rho10).norm() < 1e-10);
        assert!(s.tail_mass() > 1e-12 && s.tail_mass() < 1e-11);
    }

    #[test]
    fn coherent_ratio_recurrence() {
        let alpha = C64::new(0.3, -0.7);
        let s = coherent(alpha, 20, 1e-12).unwrap();
        let v = s.amplitudes().unwrap();
        for n in 0..19 {
            let ratio = v[n + 1] / v[n];
            assert!((ratio - alpha / ((n + 1) as f64).sqrt()).norm() < 1e-12);
        }
    }

    #[test]
    fn coherent_leakage_names_required_cutoff() {
        match coherent(C64::new(2.0, 0.0), 6, 1e-12) {
            Err(Error::TruncationLeakage { required_dim, .. }) => {
                assert!(required_dim > 6);
                assert!(coherent(C64::new(2.0, 0.0), required_dim, 1e-12).is_ok());
                assert!(coherent(C64::new(2.0, 0.0), required_dim - 1, 1e-12).is_err());
            }
            other => panic!("expected leakage error, got {other:?}"),
        }
    }

    #[test]
    fn squeezed_vacuum_basics() {
        let s = squeezed(0.0, 0.3, 6, 1e-12).unwrap();
        assert!((s.element(0, 0) - ONE).norm() < 1e-15);
        let s = squeezed(0.5, 1.1, 30, 1e-10).unwrap();
        for n in (1..30).step_by(2) {
            assert_eq!(s.element(n, n), ZERO);
        }
        assert!(s.is_normalized());
    }

    #[test]
    fn squeezed_matches_generator_exponential() {
        // oracle: exp(iθG)|0⟩ on a large truncation, G = i(a†² − a²)/2, θ = r
        let big = 80;
        let a = crate::hilbert::mode_annihilator(big);
        let a2 = &a * &a;
        let ad2 = a2.adjoint();
        let r = 0.4;
        let gen = (ad2 - a2) * C64::new(0.0, 0.5);
        let u = (gen * C64::new(0.0, r)).exp();
        let oracle = u.column(0).into_owned();

        let dim = 16;
        let s = squeezed(r, 0.0, dim, 1e-5).unwrap();
        let kept: f64 = (0..dim).map(|n| oracle[n].norm_sqr()).sum();
        for n in 0..dim {
            let expected = oracle[n].norm_sqr() / kept;
            assert!((s.element(n, n).re - expected).abs() < 1e-10, "n={n}");
            // amplitudes, not only populations
            let amp = s.amplitudes().unwrap()[n];
            assert!((amp - oracle[n] / kept.sqrt()).norm() < 1e-10);
        }
    }

    #[test]
    fn cat_states() {
        let alpha = C64::new(1.2, 0.0);
        let even = cat(alpha, Parity::Even, 16, 1e-10).unwrap();
        for m in 0..16 {
            for n in 0..16 {
                if m % 2 == 1 || n % 2 == 1 {
                    assert_eq!(even.element(m, n), ZERO);
                }
            }
        }
        // oracle: add two coherent vectors on a generous truncation, normalize
        let big = 60;
        let plus = coherent(alpha, big, 1e-15).unwrap();
        let minus = coherent(-alpha, big, 1e-15).unwrap();
        let sum = plus.amplitudes().unwrap() + minus.amplitudes().unwrap();
        let head: f64 = (0..16).map(|n| sum[n].norm_sqr()).sum();
        let rho00 = sum[0].norm_sqr() / head;
        assert!((even.element(0, 0).re - rho00).abs() < 1e-12);

        let odd = cat(alpha, Parity::Odd, 16, 1e-10).unwrap();
        assert_eq!(odd.element(0, 0), ZERO);
        assert!(matches!(
            cat(ZERO, Parity::Odd, 8, 1e-6),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn thermal_states() {
        let vac = thermal(0.0, 6, 1e-12).unwrap();
        assert!((vac.element(0, 0) - ONE).norm() < 1e-15);

        let t = thermal(0.5, 30, 1e-12).unwrap();
        assert!((t.element(0, 0).re - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(t.element(0, 1), ZERO);
        assert!(!t.is_pure());

        match thermal(0.5, 12, 1e-12) {
            Err(Error::TruncationLeakage { required_dim, .. }) => assert_eq!(required_dim, 26),
            other => panic!("expected leakage, got {other:?}"),
        }
        // ρ₀₀ ≈ 2/3 before renormalization; the truncated value differs by the tail
        let t12 = thermal(0.5, 12, 1e-5).unwrap();
        let expected = (1.0 / 1.5) / (1.0 - (1.0f64 / 3.0).powi(12));
        assert!((t12.element(0, 0).re - expected).abs() < 1e-14);
    }

    #[test]
    fn raw_amplitudes() {
        let s = raw(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), ZERO], 1e-6).unwrap();
        assert!(s.is_normalized());
        assert_eq!(s.tail_mass(), 0.0);
        assert!(raw(vec![ONE, ONE], 1e-6).is_err());
        let top = raw(vec![C64::new(0.6, 0.0), C64::new(0.8, 0.0)], 1e-6).unwrap();
        assert!(top.is_leaky());
    }

    #[test]
    fn dephasing() {
        let coh = coherent(C64::new(0.8, 0.0), 12, DEFAULT_TAIL_TOL).unwrap();
        let same = dephase(&coh, 0.0).unwrap();
        assert!(max_abs(&(same.density_matrix() - coh.density_matrix())) < 1e-16);

        let d = dephase(&coh, 0.3).unwrap();
        let expected = coh.element(2, 0) * (-1.2f64).exp();
        assert!((d.element(2, 0) - expected).norm() < 1e-16);
        assert_eq!(d.element(3, 3), coh.element(3, 3));

        let killed = dephase(&coh, f64::INFINITY).unwrap();
        assert_eq!(killed.element(1, 0), ZERO);
        assert_eq!(killed.element(1, 1), coh.element(1, 1));

        assert!(dephase(&coh, -0.1).is_err());
    }

    #[test]
    fn dephased_states_remain_physical() {
        let base = cat(C64::new(1.0, 0.5), Parity::Even, 14, 1e-6).unwrap();
        for lambda in [0.01, 0.1, 0.7, 3.0] {
            let d = dephase(&base, lambda).unwrap();
            assert!(d.to_density_operator().is_ok());
            let min = HermitianEigen::new(&d.density_matrix()).min_eigenvalue();
            assert!(min >= -1e-12);
        }
    }
}
