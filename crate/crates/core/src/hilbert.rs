//! Truncated composite Hilbert space of a three-level ion with two vibrational
//! modes.
//!
//! The composite space is `electronic ⊗ mode x ⊗ mode z` with the electronic
//! levels ordered `(−, +, ξ) ↔ (0, 1, 2)`. A basis state `|e⟩|nx⟩|nz⟩` lives at
//! flat index `e·(dx·dz) + nx·dz + nz`.
//!
//! The trap frequencies and level energies of the free Hamiltonian never enter
//! the numerics: every pulse is modeled in the interaction picture.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermiticity_error, matmul, matvec, unitarity_error, CMatrix, CVector, HermitianEigen,
    C64, ONE, ZERO,
};

pub const ELECTRONIC_DIM: usize = 3;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "minus")]
    Minus,
    #[serde(rename = "plus")]
    Plus,
    #[serde(rename = "xi")]
    Xi,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Minus, Level::Plus, Level::Xi];

    pub fn index(self) -> usize {
        match self {
            Level::Minus => 0,
            Level::Plus => 1,
            Level::Xi => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Minus => "-",
            Level::Plus => "+",
            Level::Xi => "xi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Fock cutoffs of the two vibrational modes. Mode `x` holds `|0⟩…|dx−1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertDims {
    dx: usize,
    dz: usize,
}

impl HilbertDims {
    pub fn new(dx: usize, dz: usize) -> Result<Self> {
        if dx < 2 || dz < 2 {
            return Err(Error::InvalidArguments(format!(
                "Fock cutoffs must be at least 2 (got dx={dx}, dz={dz})"
            )));
        }
        Ok(Self { dx, dz })
    }

    pub fn dx(&self) -> usize {
        self.dx
    }

    pub fn dz(&self) -> usize {
        self.dz
    }

    pub fn cutoff(&self, mode: Mode) -> usize {
        match mode {
            Mode::X => self.dx,
            Mode::Z => self.dz,
        }
    }

    pub fn vibrational_dim(&self) -> usize {
        self.dx * self.dz
    }

    pub fn dim(&self) -> usize {
        ELECTRONIC_DIM * self.dx * self.dz
    }

    pub fn index(&self, level: Level, nx: usize, nz: usize) -> usize {
        debug_assert!(nx < self.dx && nz < self.dz);
        level.index() * self.vibrational_dim() + nx * self.dz + nz
    }

    pub fn decompose(&self, idx: usize) -> (Level, usize, usize) {
        let vib = self.vibrational_dim();
        let level = Level::from_index(idx / vib).expect("flat index out of range");
        let rest = idx % vib;
        (level, rest / self.dz, rest % self.dz)
    }

    pub fn basis(&self, level: Level, nx: usize, nz: usize) -> CVector {
        let mut v = CVector::zeros(self.dim());
        v[self.index(level, nx, nz)] = ONE;
        v
    }

    /// `|χx⟩_x |χz⟩_z |level⟩` as a composite vector.
    pub fn product_vector(&self, chi_x: &CVector, chi_z: &CVector, level: Level) -> CVector {
        assert_eq!(chi_x.len(), self.dx);
        assert_eq!(chi_z.len(), self.dz);
        let mut v = CVector::zeros(self.dim());
        for nx in 0..self.dx {
            for nz in 0..self.dz {
                v[self.index(level, nx, nz)] = chi_x[nx] * chi_z[nz];
            }
        }
        v
    }
}

/// The space an operator or state lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Composite(HilbertDims),
    /// A single vibrational mode truncated at the given cutoff.
    Mode(usize),
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::Composite(d) => d.dim(),
            Space::Mode(n) => *n,
        }
    }

    pub fn composite(&self) -> Option<HilbertDims> {
        match self {
            Space::Composite(d) => Some(*d),
            Space::Mode(_) => None,
        }
    }
}

fn check_space(expected: &Space, found: &Space) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            expected: expected.dim(),
            found: found.dim(),
        });
    }
    Ok(())
}

/// A dense operator with advisory Hermitian/unitary tags. The tags are only
/// ever set after the corresponding check has passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: Space,
    matrix: CMatrix,
    hermitian: bool,
    unitary: bool,
}

impl Operator {
    pub fn new(space: Space, matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidArguments(format!(
                "operator matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            space,
            matrix,
            hermitian: false,
            unitary: false,
        })
    }

    pub fn identity(space: Space) -> Self {
        let n = space.dim();
        Self {
            space,
            matrix: CMatrix::identity(n, n),
            hermitian: true,
            unitary: true,
        }
    }

    pub fn zeros(space: Space) -> Self {
        let n = space.dim();
        Self {
            space,
            matrix: CMatrix::zeros(n, n),
            hermitian: true,
            unitary: false,
        }
    }

    /// Tags the operator Hermitian after checking `‖A − A†‖_max ≤ 1e−12`.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let err = hermiticity_error(&self.matrix);
        if err > HERMITIAN_TOL {
            return Err(Error::PreconditionViolation(format!(
                "operator is not Hermitian (deviation {err:.3e})"
            )));
        }
        self.hermitian = true;
        Ok(self)
    }

    /// Tags the operator unitary after checking `‖A†A − I‖_max ≤ 1e−10`.
    pub fn into_unitary(mut self) -> Result<Self> {
        let err = unitarity_error(&self.matrix);
        if err > UNITARY_TOL {
            return Err(Error::PreconditionViolation(format!(
                "operator is not unitary (deviation {err:.3e})"
            )));
        }
        self.unitary = true;
        Ok(self)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.adjoint(),
            hermitian: self.hermitian,
            unitary: self.unitary,
        }
    }

    /// `self · rhs`. The product of two unitaries keeps the unitary tag.
    pub fn compose(&self, rhs: &Operator) -> Result<Self> {
        check_space(&self.space, &rhs.space)?;
        Ok(Self {
            space: self.space,
            matrix: matmul(&self.matrix, &rhs.matrix),
            hermitian: false,
            unitary: self.unitary && rhs.unitary,
        })
    }

    /// Untagged linear combination `a·self + b·rhs`.
    pub fn combine(&self, a: C64, rhs: &Operator, b: C64) -> Result<Self> {
        check_space(&self.space, &rhs.space)?;
        Operator::new(self.space, &self.matrix * a + &rhs.matrix * b)
    }

    pub fn commutator(&self, rhs: &Operator) -> Result<Self> {
        let ab = self.compose(rhs)?;
        let ba = rhs.compose(self)?;
        Operator::new(self.space, ab.matrix - ba.matrix)
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.matrix)
    }

    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(&self.matrix)
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    pub fn apply_vector(&self, v: &CVector) -> CVector {
        matvec(&self.matrix, v)
    }
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    space: Space,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(space: Space, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::PreconditionViolation(format!(
                "state vector is not normalized (norm {norm:.15})"
            )));
        }
        Ok(Self { space, amplitudes })
    }

    pub fn basis(dims: HilbertDims, level: Level, nx: usize, nz: usize) -> Self {
        Self {
            space: Space::Composite(dims),
            amplitudes: dims.basis(level, nx, nz),
        }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        check_space(&self.space, &other.space)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            space: self.space,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Trace-one positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    space: Space,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity (1e−12), unit trace (1e−10) and positivity
    /// (smallest eigenvalue ≥ −1e−10).
    pub fn new(space: Space, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: matrix.nrows(),
            });
        }
        let herm = hermiticity_error(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::PreconditionViolation(format!(
                "density matrix is not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = linalg::trace(&matrix);
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::PreconditionViolation(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let min_eig = HermitianEigen::new(&matrix).min_eigenvalue();
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::PreconditionViolation(format!(
                "density matrix has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { space, matrix })
    }

    /// Skips validation; callers guarantee the invariants (e.g. unitary
    /// evolution of an already valid state).
    pub(crate) fn from_trusted(space: Space, matrix: CMatrix) -> Self {
        Self { space, matrix }
    }

    pub fn maximally_mixed(space: Space) -> Self {
        let n = space.dim();
        Self {
            space,
            matrix: CMatrix::identity(n, n) / C64::new(n as f64, 0.0),
        }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ|ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        HermitianEigen::new(&self.matrix).eigenvalues.iter().copied().collect()
    }
}

/// Anything a unitary can act on.
pub trait Evolve: Sized {
    fn evolve(&self, u: &Operator) -> Result<Self>;
}

impl Evolve for PureState {
    fn evolve(&self, u: &Operator) -> Result<Self> {
        check_space(&u.space, &self.space)?;
        Ok(Self {
            space: self.space,
            amplitudes: matvec(&u.matrix, &self.amplitudes),
        })
    }
}

impl Evolve for DensityOperator {
    fn evolve(&self, u: &Operator) -> Result<Self> {
        check_space(&u.space, &self.space)?;
        Ok(Self {
            space: self.space,
            matrix: linalg::conjugate_by(&u.matrix, &self.matrix),
        })
    }
}

/// `Uψ` or `UρU†`. `u` must carry the unitary tag.
pub fn apply<S: Evolve>(u: &Operator, state: &S) -> Result<S> {
    if !u.is_unitary() {
        return Err(Error::PreconditionViolation(
            "apply requires an operator tagged unitary".into(),
        ));
    }
    state.evolve(u)
}

/// `Tr(ρO)`.
pub fn expectation(rho: &DensityOperator, op: &Operator) -> Result<C64> {
    check_space(&rho.space, &op.space)?;
    let (r, o) = (&rho.matrix, &op.matrix);
    let n = r.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            let oji = o[(j, i)];
            if oji != ZERO {
                acc += r[(i, j)] * oji;
            }
        }
    }
    Ok(acc)
}

/// Truncated annihilation operator on a single mode: `a|n⟩ = √n |n−1⟩`.
pub fn mode_annihilator(cutoff: usize) -> CMatrix {
    let mut a = CMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Embeds `el ⊗ ox ⊗ oz` in the composite space.
pub fn embed(dims: HilbertDims, el: &CMatrix, ox: &CMatrix, oz: &CMatrix) -> Operator {
    let m = el.kronecker(ox).kronecker(oz);
    Operator::new(Space::Composite(dims), m).expect("factor dimensions match dims")
}

fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Annihilation operator of `mode`, identity on the electronic level and the
/// other mode.
pub fn annihilator(mode: Mode, dims: HilbertDims) -> Operator {
    let e = identity(ELECTRONIC_DIM);
    match mode {
        Mode::X => embed(dims, &e, &mode_annihilator(dims.dx), &identity(dims.dz)),
        Mode::Z => embed(dims, &e, &identity(dims.dx), &mode_annihilator(dims.dz)),
    }
}

pub fn creator(mode: Mode, dims: HilbertDims) -> Operator {
    annihilator(mode, dims).adjoint()
}

/// `a†a` of `mode`.
pub fn number(mode: Mode, dims: HilbertDims) -> Operator {
    let a = annihilator(mode, dims);
    let n = a.adjoint().compose(&a).expect("same space");
    n.into_hermitian().expect("a†a is Hermitian")
}

/// Electronic `|l⟩⟨j|` as a 3×3 matrix.
pub fn level_matrix(l: Level, j: Level) -> CMatrix {
    let mut m = CMatrix::zeros(ELECTRONIC_DIM, ELECTRONIC_DIM);
    m[(l.index(), j.index())] = ONE;
    m
}

/// `|l⟩⟨j|` embedded with identity on both vibrational modes.
pub fn electronic_op(l: Level, j: Level, dims: HilbertDims) -> Operator {
    embed(
        dims,
        &level_matrix(l, j),
        &identity(dims.dx),
        &identity(dims.dz),
    )
}

/// Pauli operators on the `{l, j}` pair, 3×3:
/// `σx = |l⟩⟨j|+|j⟩⟨l|`, `σy = i(|l⟩⟨j|−|j⟩⟨l|)`, `σz = |j⟩⟨j|−|l⟩⟨l|`.
pub fn pauli_matrix(l: Level, j: Level, axis: Axis) -> Result<CMatrix> {
    if l == j {
        return Err(Error::InvalidArguments(format!(
            "Pauli operator needs two distinct levels, got ({l}, {j})"
        )));
    }
    let lj = level_matrix(l, j);
    let jl = level_matrix(j, l);
    Ok(match axis {
        Axis::X => lj + jl,
        Axis::Y => (lj - jl) * C64::new(0.0, 1.0),
        Axis::Z => level_matrix(j, j) - level_matrix(l, l),
    })
}

pub fn pauli(l: Level, j: Level, axis: Axis, dims: HilbertDims) -> Result<Operator> {
    let el = pauli_matrix(l, j, axis)?;
    embed(dims, &el, &identity(dims.dx), &identity(dims.dz)).into_hermitian()
}

/// `exp(iθG)` for Hermitian `G`, through its eigendecomposition.
pub fn unitary_from_generator(generator: &Operator, theta: f64) -> Result<Operator> {
    let err = generator.hermiticity_error();
    if err > HERMITIAN_TOL {
        return Err(Error::PreconditionViolation(format!(
            "generator is not Hermitian (deviation {err:.3e})"
        )));
    }
    let u = linalg::hermitian_function(&generator.matrix, |lambda| {
        C64::new(0.0, theta * lambda).exp()
    });
    Operator::new(generator.space, u)?.into_unitary()
}

/// Reduced electronic density matrix, tracing out both modes.
pub fn reduce_to_electronic(rho: &DensityOperator) -> Result<CMatrix> {
    let dims = composite_dims(rho)?;
    let vib = dims.vibrational_dim();
    Ok(CMatrix::from_fn(ELECTRONIC_DIM, ELECTRONIC_DIM, |a, b| {
        (0..vib)
            .map(|v| rho.matrix[(a * vib + v, b * vib + v)])
            .sum()
    }))
}

/// Reduced density matrix of one vibrational mode.
pub fn reduce_to_mode(rho: &DensityOperator, mode: Mode) -> Result<CMatrix> {
    let dims = composite_dims(rho)?;
    let keep = dims.cutoff(mode);
    let mut out = CMatrix::zeros(keep, keep);
    for level in Level::ALL {
        for p in 0..keep {
            for q in 0..keep {
                let mut acc = ZERO;
                match mode {
                    Mode::X => {
                        for nz in 0..dims.dz {
                            acc += rho.matrix[(dims.index(level, p, nz), dims.index(level, q, nz))];
                        }
                    }
                    Mode::Z => {
                        for nx in 0..dims.dx {
                            acc += rho.matrix[(dims.index(level, nx, p), dims.index(level, nx, q))];
                        }
                    }
                }
                out[(p, q)] += acc;
            }
        }
    }
    Ok(out)
}

fn composite_dims(rho: &DensityOperator) -> Result<HilbertDims> {
    rho.space.composite().ok_or_else(|| {
        Error::InvalidArguments("partial trace needs a composite-space density operator".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn dims(dx: usize, dz: usize) -> HilbertDims {
        HilbertDims::new(dx, dz).unwrap()
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn rejects_small_cutoffs() {
        assert!(HilbertDims::new(1, 3).is_err());
        assert!(HilbertDims::new(3, 1).is_err());
        assert_eq!(dims(2, 3).dim(), 18);
    }

    #[test]
    fn flat_index_is_bijective() {
        let d = dims(3, 4);
        let mut seen = vec![false; d.dim()];
        for level in Level::ALL {
            for nx in 0..3 {
                for nz in 0..4 {
                    let i = d.index(level, nx, nz);
                    assert!(!seen[i]);
                    seen[i] = true;
                    assert_eq!(d.decompose(i), (level, nx, nz));
                }
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn annihilator_lowers_fock_index() {
        let d = dims(3, 2);
        let a = annihilator(Mode::X, d);
        let out = a.apply_vector(&d.basis(Level::Plus, 2, 1));
        let expected = d.basis(Level::Plus, 1, 1) * C64::new(2f64.sqrt(), 0.0);
        assert!((out - expected).norm() < 1e-15);
        let vac = a.apply_vector(&d.basis(Level::Minus, 0, 1));
        assert_eq!(vac.norm(), 0.0);
    }

    #[test]
    fn ladder_commutator_below_boundary() {
        // explicit 4x4 products
        let a = mode_annihilator(4);
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        for n in 0..3 {
            assert!(close(comm[(n, n)], ONE, 1e-15));
        }
        // truncation boundary: ⟨3|[a,a†]|3⟩ = −3
        assert!(close(comm[(3, 3)], C64::new(-3.0, 0.0), 1e-15));

        let d = dims(2, 4);
        let az = annihilator(Mode::Z, d);
        let c = az.commutator(&az.adjoint()).unwrap();
        let i = d.index(Level::Xi, 1, 2);
        assert!(close(c.matrix()[(i, i)], ONE, 1e-15));
    }

    #[test]
    fn electronic_projector_and_composition() {
        let d = dims(3, 4);
        let p = electronic_op(Level::Minus, Level::Minus, d);
        assert!(close(linalg::trace(p.matrix()), C64::new(12.0, 0.0), 1e-15));

        let up = electronic_op(Level::Plus, Level::Xi, d);
        let out = up.apply_vector(&d.basis(Level::Xi, 0, 0));
        assert_eq!(out, d.basis(Level::Plus, 0, 0));

        let down = electronic_op(Level::Xi, Level::Plus, d);
        let prod = up.compose(&down).unwrap();
        assert_eq!(prod.matrix(), electronic_op(Level::Plus, Level::Plus, d).matrix());
    }

    #[test]
    fn pauli_algebra() {
        let d = dims(2, 2);
        assert!(pauli(Level::Plus, Level::Plus, Axis::X, d).is_err());

        let sx = pauli(Level::Minus, Level::Plus, Axis::X, d).unwrap();
        let sy = pauli(Level::Minus, Level::Plus, Axis::Y, d).unwrap();
        assert!(sx.is_hermitian() && sy.is_hermitian());
        let flipped = sx.apply_vector(&d.basis(Level::Minus, 1, 0));
        assert_eq!(flipped, d.basis(Level::Plus, 1, 0));

        let sum = sx.compose(&sx).unwrap().matrix() + sy.compose(&sy).unwrap().matrix();
        let proj = electronic_op(Level::Minus, Level::Minus, d).matrix()
            + electronic_op(Level::Plus, Level::Plus, d).matrix();
        assert!(linalg::max_abs(&(sum - proj * C64::new(2.0, 0.0))) < 1e-15);

        let mut eig = HermitianEigen::new(sx.matrix()).eigenvalues.iter().copied().collect::<Vec<_>>();
        eig.sort_by(f64::total_cmp);
        let vib = d.vibrational_dim();
        assert!(eig[..vib].iter().all(|v| (v + 1.0).abs() < 1e-12));
        assert!(eig[vib..2 * vib].iter().all(|v| v.abs() < 1e-12));
        assert!(eig[2 * vib..].iter().all(|v| (v - 1.0).abs() < 1e-12));
        // the 0-eigenspace is the ξ sector
        let xi = d.basis(Level::Xi, 1, 1);
        assert_eq!(sx.apply_vector(&xi).norm(), 0.0);
    }

    #[test]
    fn exponential_of_zero_is_identity() {
        let d = dims(2, 3);
        let g = Operator::zeros(Space::Composite(d));
        let u = unitary_from_generator(&g, 1.3).unwrap();
        assert_eq!(u.matrix(), &CMatrix::identity(d.dim(), d.dim()));
    }

    #[test]
    fn exponential_matches_two_level_rotation() {
        let d = dims(2, 2);
        let sy = pauli(Level::Minus, Level::Xi, Axis::Y, d).unwrap();
        let u = unitary_from_generator(&sy, FRAC_PI_4).unwrap();
        let out = u.apply_vector(&d.basis(Level::Minus, 1, 1));
        let expected = (d.basis(Level::Minus, 1, 1) + d.basis(Level::Xi, 1, 1))
            * C64::new(FRAC_1_SQRT_2, 0.0);
        assert!((out - expected).norm() < 1e-14);

        let back = unitary_from_generator(&sy, -FRAC_PI_4).unwrap();
        let id = u.compose(&back).unwrap();
        assert!(linalg::max_abs(&(id.into_matrix() - CMatrix::identity(12, 12))) < 1e-10);
    }

    #[test]
    fn non_hermitian_generator_rejected() {
        let d = dims(2, 2);
        let a = annihilator(Mode::X, d);
        assert!(matches!(
            unitary_from_generator(&a, 0.1),
            Err(Error::PreconditionViolation(_))
        ));
        assert!(Operator::new(Space::Mode(3), CMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn expectation_examples() {
        let d = dims(2, 3);
        let rho = PureState::basis(d, Level::Minus, 0, 0).to_density();
        let p = electronic_op(Level::Minus, Level::Minus, d);
        assert!(close(expectation(&rho, &p).unwrap(), ONE, 1e-15));

        let mixed = DensityOperator::maximally_mixed(Space::Composite(d));
        let sx = pauli(Level::Minus, Level::Plus, Axis::X, d).unwrap();
        assert!(expectation(&mixed, &sx).unwrap().norm() < 1e-15);

        let other = DensityOperator::maximally_mixed(Space::Composite(dims(3, 3)));
        assert!(matches!(
            expectation(&other, &sx),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn density_operator_validation() {
        let space = Space::Mode(2);
        let bad_trace = CMatrix::identity(2, 2);
        assert!(DensityOperator::new(space, bad_trace).is_err());
        let negative = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(1.5, 0.0),
            C64::new(-0.5, 0.0),
        ]));
        assert!(DensityOperator::new(space, negative).is_err());
        let mut nonherm = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        nonherm[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityOperator::new(space, nonherm).is_err());
    }

    #[test]
    fn apply_requires_unitary_tag() {
        let d = dims(2, 2);
        let rho = PureState::basis(d, Level::Plus, 0, 0).to_density();
        let not_tagged = Operator::new(Space::Composite(d), CMatrix::identity(12, 12)).unwrap();
        assert!(apply(&not_tagged, &rho).is_err());
        let id = Operator::identity(Space::Composite(d));
        assert_eq!(apply(&id, &rho).unwrap(), rho);
    }

    #[test]
    fn partial_traces_of_product_state() {
        let d = dims(3, 2);
        let chi_x = CVector::from_vec(vec![C64::new(0.6, 0.0), ZERO, C64::new(0.0, 0.8)]);
        let chi_z = CVector::from_vec(vec![ONE, ZERO]);
        let psi = PureState::new(Space::Composite(d), d.product_vector(&chi_x, &chi_z, Level::Plus))
            .unwrap();
        let rho = psi.to_density();
        let rx = reduce_to_mode(&rho, Mode::X).unwrap();
        assert!(linalg::max_abs(&(rx - &chi_x * chi_x.adjoint())) < 1e-15);
        let el = reduce_to_electronic(&rho).unwrap();
        assert!(close(el[(1, 1)], ONE, 1e-15));
    }
}
