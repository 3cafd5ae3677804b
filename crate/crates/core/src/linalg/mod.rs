//! Dense complex-matrix primitives shared by every other module.

mod matrix;
pub mod random;

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen, SVD};

pub use matrix::{c, cis, CMatrix, C64, I, ONE, ZERO};
pub use random::random_unitary;

use crate::error::{Error, Result};

/// Reciprocal condition number below which [`solve_linear`] reports a singular system.
pub const SINGULAR_RCOND: f64 = 1e-10;

/// Ordered split of a coordinate space into sector 0 (`[0, dim0)`) and sector 1
/// (`[dim0, dim0 + dim1)`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    pub dim0: usize,
    pub dim1: usize,
}

impl Partition {
    pub const fn new(dim0: usize, dim1: usize) -> Self {
        Partition { dim0, dim1 }
    }

    pub fn total(&self) -> usize {
        self.dim0 + self.dim1
    }

    pub fn sector(&self, j: usize) -> Range<usize> {
        match j {
            0 => 0..self.dim0,
            1 => self.dim0..self.total(),
            _ => panic!("partition has sectors 0 and 1 only"),
        }
    }

    pub fn dim(&self, j: usize) -> usize {
        match j {
            0 => self.dim0,
            1 => self.dim1,
            _ => panic!("partition has sectors 0 and 1 only"),
        }
    }

    /// Orthogonal projector onto sector `j`, as a `total × total` 0/1 diagonal matrix.
    pub fn projector(&self, j: usize) -> CMatrix {
        let r = self.sector(j);
        let n = self.total();
        CMatrix::from_fn(
            n,
            n,
            |a, b| if a == b && r.contains(&a) { ONE } else { ZERO },
        )
    }

    /// Isometric embedding of sector `j` into the full space (`total × dim_j`).
    pub fn embedding(&self, j: usize) -> CMatrix {
        let r = self.sector(j);
        CMatrix::from_fn(self.total(), r.len(), |a, b| {
            if a == r.start + b {
                ONE
            } else {
                ZERO
            }
        })
    }

    /// The same space with the sectors listed in the opposite order.
    pub fn swapped(&self) -> Self {
        Partition::new(self.dim1, self.dim0)
    }

    /// Coordinate permutation taking the swapped layout to this one: `new[i] = old[perm[i]]`.
    pub fn swap_permutation(&self) -> Vec<usize> {
        self.sector(1).chain(self.sector(0)).collect()
    }
}

fn svd(m: &CMatrix) -> (Vec<f64>, Option<DMatrix<C64>>, Option<DMatrix<C64>>) {
    let svd = SVD::new(m.inner().clone(), true, true);
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let u = svd
        .u
        .map(|u| DMatrix::from_fn(u.nrows(), idx.len(), |r, k| u[(r, idx[k])]));
    let v = svd
        .v_t
        .map(|vt| DMatrix::from_fn(vt.ncols(), idx.len(), |r, k| vt[(idx[k], r)].conj()));
    (values, u, v)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.inner().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value; zero for an empty matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Ratio of smallest to largest singular value of a square matrix (1 for the empty matrix).
pub fn reciprocal_condition(a: &CMatrix) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if max > 0.0 => min / max,
        (Some(_), Some(_)) => 0.0,
        _ => 1.0,
    }
}

/// Solves `A X = B` for square `A`.
///
/// Fails with [`Error::SingularMatrix`] when the reciprocal condition number of `A`
/// falls below [`SINGULAR_RCOND`].
pub fn solve_linear(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "solve_linear: A is {}x{}, B is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if a.rows() == 0 {
        return Ok(b.clone());
    }
    let rcond = reciprocal_condition(a);
    if rcond < SINGULAR_RCOND {
        return Err(Error::SingularMatrix { rcond });
    }
    a.inner()
        .clone()
        .lu()
        .solve(b.inner())
        .map(CMatrix::from_inner)
        .ok_or(Error::SingularMatrix { rcond: 0.0 })
}

/// True iff `m` is square and `‖M†M − I‖ ≤ tol` in spectral norm.
pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && m.unitarity_residual() <= tol
}

/// Eigen-decomposition of the Hermitian part of `m`: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    assert!(m.is_square(), "hermitian_eigen of a non-square matrix");
    let n = m.rows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(m.hermitian_part().into_inner());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, idx[k])]);
    (values, vectors)
}

/// Orthonormal basis (as columns) of the right null space `{x : ‖Mx‖ ≤ tol‖x‖}`.
pub fn null_space(m: &CMatrix, tol: f64) -> CMatrix {
    let (r, n) = m.shape();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    if r == 0 {
        return CMatrix::identity(n);
    }
    // Pad to at least n rows so the thin SVD yields a full right basis.
    let padded = if r < n {
        CMatrix::vstack(&[m, &CMatrix::zeros(n - r, n)])
    } else {
        m.clone()
    };
    let (s, _, v) = svd(&padded);
    let v = CMatrix::from_inner(v.expect("right singular vectors requested"));
    let keep: Vec<usize> = (0..n).filter(|&k| s[k] <= tol).collect();
    v.select_cols(&keep)
}

/// Orthonormal basis (as columns) of the column space, keeping singular values above
/// `tol · max(1, σ_max)`.
pub fn range_basis(m: &CMatrix, tol: f64) -> CMatrix {
    let (r, n) = m.shape();
    if r == 0 || n == 0 {
        return CMatrix::zeros(r, 0);
    }
    let (s, u, _) = svd(m);
    let u = CMatrix::from_inner(u.expect("left singular vectors requested"));
    let cut = tol * s[0].max(1.0);
    let keep: Vec<usize> = (0..s.len()).filter(|&k| s[k] > cut).collect();
    u.select_cols(&keep)
}

/// Numerical rank with the same threshold as [`range_basis`].
pub fn rank(m: &CMatrix, tol: f64) -> usize {
    let s = singular_values(m);
    let cut = tol * s.first().copied().unwrap_or(0.0).max(1.0);
    s.iter().filter(|&&x| x > cut).count()
}

/// Moore-Penrose pseudo-inverse, discarding singular values below `tol · max(1, σ_max)`.
pub fn pseudo_inverse(m: &CMatrix, tol: f64) -> CMatrix {
    let (r, n) = m.shape();
    if r == 0 || n == 0 {
        return CMatrix::zeros(n, r);
    }
    let (s, u, v) = svd(m);
    let u = CMatrix::from_inner(u.expect("left singular vectors requested"));
    let v = CMatrix::from_inner(v.expect("right singular vectors requested"));
    let cut = tol * s[0].max(1.0);
    let keep: Vec<usize> = (0..s.len()).filter(|&k| s[k] > cut).collect();
    let inv: Vec<C64> = keep.iter().map(|&k| C64::new(1.0 / s[k], 0.0)).collect();
    &(&v.select_cols(&keep) * &CMatrix::diag(&inv)) * &u.select_cols(&keep).adjoint()
}

/// Orthonormal basis of the orthogonal complement of the span of the orthonormal columns `q`.
pub fn orthonormal_complement(q: &CMatrix) -> CMatrix {
    let n = q.rows();
    if q.cols() == 0 {
        return CMatrix::identity(n);
    }
    null_space(&q.adjoint(), 1e-8)
}

/// Orthonormal basis of the smallest `op`-invariant subspace containing the columns of `start`.
pub fn krylov_basis(op: &CMatrix, start: &CMatrix, tol: f64) -> CMatrix {
    assert!(op.is_square() && op.rows() == start.rows());
    let mut q = range_basis(start, tol);
    loop {
        if q.cols() == 0 || q.cols() == op.rows() {
            return q;
        }
        let grown = range_basis(&CMatrix::hstack(&[&q, &(op * &q)]), tol);
        if grown.cols() == q.cols() {
            return q;
        }
        q = grown;
    }
}

/// Outcome of testing whether some power of a square matrix has norm below one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerNormTest {
    /// Smallest norm seen over the tested powers.
    pub best_norm: f64,
    /// Exponent at which `best_norm` was attained.
    pub exponent: usize,
    /// Whether `best_norm < 1 − margin`.
    pub below_one: bool,
}

/// Tests `‖Mᵏ‖ < 1 − margin` for `k = 1..=d` (d = dimension), then for `k = d·2ʲ`,
/// `j ≤ doublings`, using the supplied matrix norm.
///
/// Doubling keeps roundoff in the tested power proportional to the exponent, so the
/// number of doublings should stay modest (20 covers exponents up to ~10⁶·d).
pub fn power_norm_test(
    m: &CMatrix,
    doublings: u32,
    margin: f64,
    norm: impl Fn(&CMatrix) -> f64,
) -> PowerNormTest {
    let d = m.rows();
    if d == 0 {
        return PowerNormTest {
            best_norm: 0.0,
            exponent: 1,
            below_one: true,
        };
    }
    let mut best = PowerNormTest {
        best_norm: f64::INFINITY,
        exponent: 0,
        below_one: false,
    };
    let record = |value: f64, k: usize, best: &mut PowerNormTest| {
        if value < best.best_norm {
            best.best_norm = value;
            best.exponent = k;
        }
        value < 1.0 - margin
    };
    let mut p = m.clone();
    for k in 1..=d {
        if record(norm(&p), k, &mut best) {
            best.below_one = true;
            return best;
        }
        if k < d {
            p = &p * m;
        }
    }
    let mut k = d;
    for _ in 0..doublings {
        p = &p * &p;
        k *= 2;
        let v = norm(&p);
        if !v.is_finite() || v > 1e150 {
            break;
        }
        if record(v, k, &mut best) {
            best.below_one = true;
            return best;
        }
    }
    best
}

/// Operator norm induced by the max-absolute-entry vector norm (maximum row sum).
pub fn max_row_sum_norm(m: &CMatrix) -> f64 {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
