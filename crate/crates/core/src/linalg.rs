//! Dense complex linear algebra helpers tuned for the block-sparse operators
//! that show up in the pulse sequences.
//!
//! Every generator in the protocol is Hermitian and couples only a handful of
//! basis states (fixed electronic pair, fixed total phonon number, ...). The
//! eigen-solver therefore splits a matrix into the connected components of its
//! sparsity graph and diagonalizes each component on its own; the result is
//! the same spectral decomposition a full solve would give.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Matrix product that skips exact zeros on both sides.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let (rows, cols) = (a.nrows(), b.ncols());
    let a_cols: Vec<Vec<(usize, C64)>> = (0..a.ncols())
        .map(|k| {
            a.column(k)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != ZERO)
                .map(|(i, v)| (i, *v))
                .collect()
        })
        .collect();

    let mut out = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        let b_col = b.column(j);
        let mut out_col = out.column_mut(j);
        for (k, bkj) in b_col.iter().enumerate() {
            if *bkj == ZERO {
                continue;
            }
            for &(i, aik) in &a_cols[k] {
                out_col[i] += aik * bkj;
            }
        }
    }
    out
}

pub fn matvec(a: &CMatrix, v: &CVector) -> CVector {
    let mut out = CVector::zeros(a.nrows());
    for (k, vk) in v.iter().enumerate() {
        if *vk == ZERO {
            continue;
        }
        for (i, aik) in a.column(k).iter().enumerate() {
            if *aik != ZERO {
                out[i] += aik * vk;
            }
        }
    }
    out
}

/// U M U†
pub fn conjugate_by(u: &CMatrix, m: &CMatrix) -> CMatrix {
    matmul(&matmul(u, m), &u.adjoint())
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn unitarity_error(m: &CMatrix) -> f64 {
    let prod = matmul(&m.adjoint(), m);
    max_abs(&(prod - CMatrix::identity(m.nrows(), m.ncols())))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Connected components of the undirected graph with an edge wherever
/// `m[(i, j)]` or `m[(j, i)]` is nonzero. Components are sorted by their
/// smallest index; indices inside a component are ascending.
pub fn sparsity_blocks(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] != ZERO {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Spectral decomposition of a Hermitian matrix: `m = V diag(λ) V†`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEigen {
    /// Decomposes `m`, which must be square. Only the Hermitian part of `m`
    /// is used.
    pub fn new(m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut eigenvalues = DVector::zeros(n);
        let mut eigenvectors = CMatrix::zeros(n, n);
        let mut slot = 0;
        for block in sparsity_blocks(m) {
            let (vals, vecs) = block_eigen(m, &block);
            for (c, val) in vals.iter().enumerate() {
                eigenvalues[slot] = *val;
                for (r, &row) in block.iter().enumerate() {
                    eigenvectors[(row, slot)] = vecs[(r, c)];
                }
                slot += 1;
            }
        }
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn block_eigen(m: &CMatrix, block: &[usize]) -> (DVector<f64>, CMatrix) {
    let k = block.len();
    if k == 1 {
        let i = block[0];
        return (DVector::from_element(1, m[(i, i)].re), CMatrix::identity(1, 1));
    }
    let sub = CMatrix::from_fn(k, k, |r, c| {
        let (i, j) = (block[r], block[c]);
        (m[(i, j)] + m[(j, i)].conj()) * 0.5
    });
    let eig = sub.symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// Applies a scalar function to a Hermitian matrix: `V f(Λ) V†`, block by block.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> C64) -> CMatrix {
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for block in sparsity_blocks(m) {
        let (vals, vecs) = block_eigen(m, &block);
        let k = block.len();
        let fvals: Vec<C64> = vals.iter().map(|&v| f(v)).collect();
        for c in 0..k {
            for r in 0..k {
                let mut acc = ZERO;
                for (e, fv) in fvals.iter().enumerate() {
                    acc += vecs[(r, e)] * fv * vecs[(c, e)].conj();
                }
                out[(block[r], block[c])] = acc;
            }
        }
    }
    out
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}
