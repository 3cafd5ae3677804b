//! Self-adjoint vertex conditions `A ψ + B ψ' = 0` and the star-graph scattering matrix.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::random::haar_unitary;
use crate::linalg::{c, rank, solve_linear, CMatrix, I, ONE};

/// Boundary-condition pair of a vertex with `d` incident edge ends.
///
/// Row and column `e` of both matrices refer to local end slot `e`; the slot numbering is
/// the edge order of the vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexConditions {
    pub a: CMatrix,
    pub b: CMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexReport {
    pub valid: bool,
    /// `d − rank(A, B)`.
    pub rank_defect: usize,
    /// `max |AB† − BA†|`.
    pub hermiticity_residual: f64,
}

impl VertexConditions {
    pub fn new(a: CMatrix, b: CMatrix) -> Result<Self> {
        if !a.is_square() || a.shape() != b.shape() {
            return Err(Error::ShapeMismatch(format!(
                "vertex conditions need square A and B of equal size, got {}x{} and {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        Ok(VertexConditions { a, b })
    }

    pub fn degree(&self) -> usize {
        self.a.rows()
    }

    /// `A = I`, `B = 0`.
    pub fn dirichlet(d: usize) -> Self {
        VertexConditions {
            a: CMatrix::identity(d),
            b: CMatrix::zeros(d, d),
        }
    }

    /// `A = 0`, `B = I`.
    pub fn neumann(d: usize) -> Self {
        VertexConditions {
            a: CMatrix::zeros(d, d),
            b: CMatrix::identity(d),
        }
    }

    /// Continuity of the value across all ends plus vanishing sum of outward derivatives.
    ///
    /// Row `r < d − 1` of `A` is `e_r − e_{r+1}`; the last row of `A` is zero and the last
    /// row of `B` is all ones.
    pub fn kirchhoff(d: usize) -> Self {
        let mut a = CMatrix::zeros(d, d);
        let mut b = CMatrix::zeros(d, d);
        for r in 0..d.saturating_sub(1) {
            a[(r, r)] = ONE;
            a[(r, r + 1)] = -ONE;
        }
        if d > 0 {
            for e in 0..d {
                b[(d - 1, e)] = ONE;
            }
        }
        VertexConditions { a, b }
    }

    /// `A = I − W`, `B = i(I + W)` for a unitary `W`. Every such pair is self-adjoint.
    pub fn from_unitary(w: &CMatrix) -> Self {
        let id = CMatrix::identity(w.rows());
        VertexConditions {
            a: &id - w,
            b: (&id + w).scale(I),
        }
    }

    /// Conditions from a Haar-random `W`, see [`from_unitary`](Self::from_unitary).
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Self::from_unitary(&haar_unitary(d, rng))
    }

    /// Checks `rank(A, B) = d` and `AB† = BA†` within `tol`.
    pub fn validate(&self, tol: f64) -> VertexReport {
        let d = self.degree();
        let r = rank(&CMatrix::hstack(&[&self.a, &self.b]), tol);
        let ab = &self.a * &self.b.adjoint();
        let hermiticity_residual = (&ab - &ab.adjoint()).max_abs();
        let rank_defect = d - r.min(d);
        VertexReport {
            valid: rank_defect == 0 && hermiticity_residual <= tol,
            rank_defect,
            hermiticity_residual,
        }
    }
}

/// Star-graph scattering matrix `S(k) = (ikB + A)^{-1}(ikB − A)`.
pub fn star_scattering(v: &VertexConditions, k: f64) -> Result<CMatrix> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidProblem(format!(
            "k must be positive, got {k}"
        )));
    }
    let ikb = v.b.scale(c(0.0, k));
    solve_linear(&(&ikb + &v.a), &(&ikb - &v.a))
}
