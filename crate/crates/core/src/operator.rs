//! Contraction `B·A` of general linear operators.
//!
//! The defining equations are `φ₀ + φ₁ = A(ψ₀ + ψ₁)`, `ψ₁ = Bφ₁`. The contraction is the
//! map `ψ₀ ↦ φ₀` given by the series `Σₖ F₀(ABF₁)ᵏAH₀` whenever the companion series for
//! `φ₁` converges absolutely. Solvability of the equations is a separate question and is
//! reported by [`solvability_check`].

use crate::error::{Error, Result};
use crate::linalg::{
    krylov_basis, null_space, power_norm_test, pseudo_inverse, range_basis, rank, solve_linear,
    spectral_norm, CMatrix, Partition, PowerNormTest,
};

/// Number of squarings tried after the first `dim W` powers when looking for `‖Mᵏ‖_W < 1`.
pub const POWER_DOUBLINGS: u32 = 20;

/// Margin below 1 required of the restricted power norm.
pub const NORM_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorProblem {
    a: CMatrix,
    b: CMatrix,
    part_h: Partition,
    part_f: Partition,
}

impl OperatorProblem {
    pub fn new(a: CMatrix, b: CMatrix, part_h: Partition, part_f: Partition) -> Result<Self> {
        if a.shape() != (part_f.total(), part_h.total()) {
            return Err(Error::InvalidProblem(format!(
                "A is {}x{}, partitions require {}x{}",
                a.rows(),
                a.cols(),
                part_f.total(),
                part_h.total()
            )));
        }
        if b.shape() != (part_h.dim1, part_f.dim1) {
            return Err(Error::InvalidProblem(format!(
                "B must be {}x{} (dim H1 x dim F1), got {}x{}",
                part_h.dim1,
                part_f.dim1,
                b.rows(),
                b.cols()
            )));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidProblem("non-finite matrix entry".into()));
        }
        Ok(OperatorProblem {
            a,
            b,
            part_h,
            part_f,
        })
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn part_h(&self) -> Partition {
        self.part_h
    }

    pub fn part_f(&self) -> Partition {
        self.part_f
    }

    fn blocks(&self) -> Blocks {
        let f0 = self.part_f.sector(0);
        let f1 = self.part_f.sector(1);
        let h0 = self.part_h.sector(0);
        let h1 = self.part_h.sector(1);
        Blocks {
            a00: self.a.block(f0.clone(), h0.clone()),
            ab01: &self.a.block(f0, h1.clone()) * &self.b,
            a10: self.a.block(f1.clone(), h0),
            m: &self.a.block(f1, h1) * &self.b,
        }
    }
}

impl From<&crate::unitary::UnitaryProblem> for OperatorProblem {
    fn from(p: &crate::unitary::UnitaryProblem) -> Self {
        OperatorProblem {
            a: p.u().clone(),
            b: p.omega().clone(),
            part_h: p.part_h(),
            part_f: p.part_f(),
        }
    }
}

struct Blocks {
    a00: CMatrix,
    ab01: CMatrix,
    a10: CMatrix,
    m: CMatrix,
}

/// Existence, uniqueness and convergence diagnostics for an operator contraction.
#[derive(Clone, Debug)]
pub struct SolvabilityReport {
    /// `F₁AH₀ ⊆ (I − F₁AB)F₁`: a solution exists for every `ψ₀`.
    pub exists_for_all: bool,
    /// `F₀AB V₁ = 0`: the solution `φ₀` is unique.
    pub phi0_unique: bool,
    /// Some power of `F₁AB` restricted to the Krylov space `W` of `F₁AH₀` has norm below 1.
    pub series_converges: bool,
    /// `dim V₁`, the eigenvalue-1 space of `F₁AB`.
    pub v1_dim: usize,
    /// `dim W`.
    pub krylov_dim: usize,
    /// Distance of the columns of `F₁AH₀` from the range of `I − F₁AB`.
    pub existence_residual: f64,
    /// `‖F₀AB V₁‖`.
    pub uniqueness_residual: f64,
    /// Smallest `‖(F₁AB)ᵏ‖_W` found and the exponent attaining it.
    pub restricted_norm: f64,
    pub restricted_exponent: usize,
    /// Minimum-norm solution `A₀₀ + F₀AB (I − F₁AB)⁺ A₁₀` when existence and uniqueness hold.
    /// Not the contraction unless `series_converges`.
    pub non_canonical_solution: Option<CMatrix>,
}

/// Evaluates existence and uniqueness of solutions and the convergence verdict of the series.
pub fn solvability_check(p: &OperatorProblem, tol: f64) -> SolvabilityReport {
    let b = p.blocks();
    let d = b.m.rows();
    let lhs = CMatrix::identity(d) - &b.m;

    let stacked = CMatrix::hstack(&[&lhs, &b.a10]);
    let exists_for_all = rank(&stacked, tol) == rank(&lhs, tol);
    let q = range_basis(&lhs, tol);
    let existence_residual = spectral_norm(&(&b.a10 - &(&q * &(&q.adjoint() * &b.a10))));

    let v1 = null_space(&lhs, tol);
    let uniqueness_residual = spectral_norm(&(&b.ab01 * &v1));
    let phi0_unique = uniqueness_residual <= tol * spectral_norm(&b.ab01).max(1.0);

    let test = restricted_power_test(&b, tol, spectral_norm);
    let krylov_dim = krylov_basis(&b.m, &b.a10, tol).cols();

    let non_canonical_solution = (exists_for_all && phi0_unique)
        .then(|| &b.a00 + &(&b.ab01 * &(&pseudo_inverse(&lhs, tol) * &b.a10)));

    SolvabilityReport {
        exists_for_all,
        phi0_unique,
        series_converges: test.below_one,
        v1_dim: v1.cols(),
        krylov_dim,
        existence_residual,
        uniqueness_residual,
        restricted_norm: test.best_norm,
        restricted_exponent: test.exponent,
        non_canonical_solution,
    }
}

/// Convergence verdict of the defining series under an arbitrary operator norm on `W`
/// (applied to the matrix of `F₁AB|_W` in an orthonormal basis of `W`).
pub fn series_verdict_with_norm(
    p: &OperatorProblem,
    tol: f64,
    norm: impl Fn(&CMatrix) -> f64,
) -> bool {
    restricted_power_test(&p.blocks(), tol, norm).below_one
}

fn restricted_power_test(b: &Blocks, tol: f64, norm: impl Fn(&CMatrix) -> f64) -> PowerNormTest {
    let w = krylov_basis(&b.m, &b.a10, tol);
    let mw = &w.adjoint() * &(&b.m * &w);
    power_norm_test(&mw, POWER_DOUBLINGS, NORM_MARGIN, norm)
}

/// Algorithm for [`contract_operator`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorMethod {
    Resolvent,
    Series,
    Power,
}

impl std::str::FromStr for OperatorMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "resolvent" => Ok(OperatorMethod::Resolvent),
            "series" => Ok(OperatorMethod::Series),
            "power" => Ok(OperatorMethod::Power),
            other => Err(Error::format(
                "method",
                format!("unknown method `{other}` (expected resolvent, series or power)"),
            )),
        }
    }
}

impl std::fmt::Display for OperatorMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OperatorMethod::Resolvent => "resolvent",
            OperatorMethod::Series => "series",
            OperatorMethod::Power => "power",
        })
    }
}

#[derive(Clone, Debug)]
pub struct OperatorContraction {
    /// `B·A`, of shape `dim F₀ × dim H₀`.
    pub s: CMatrix,
    pub method: OperatorMethod,
    /// Series terms or power iterations used; 0 for the resolvent.
    pub terms_used: usize,
    /// Estimated bound on the omitted part of the `φ₁` series at termination.
    pub tail_estimate: f64,
}

/// Computes `B·A`.
///
/// The resolvent is evaluated on the Krylov space `W` and is refused with
/// [`Error::DefinitionMismatch`] unless the series is known to converge.
pub fn contract_operator(
    p: &OperatorProblem,
    method: OperatorMethod,
    tol: f64,
    max_terms: usize,
) -> Result<OperatorContraction> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidProblem(format!(
            "tol must be positive, got {tol}"
        )));
    }
    if max_terms == 0 {
        return Err(Error::InvalidProblem("max_terms must be at least 1".into()));
    }
    let b = p.blocks();
    match method {
        OperatorMethod::Resolvent => {
            let w = krylov_basis(&b.m, &b.a10, tol);
            let mw = &w.adjoint() * &(&b.m * &w);
            if !power_norm_test(&mw, POWER_DOUBLINGS, NORM_MARGIN, spectral_norm).below_one {
                return Err(Error::DefinitionMismatch);
            }
            let rhs = &w.adjoint() * &b.a10;
            let y = solve_linear(&(CMatrix::identity(w.cols()) - &mw), &rhs)?;
            Ok(OperatorContraction {
                s: &b.a00 + &(&b.ab01 * &(&w * &y)),
                method,
                terms_used: 0,
                tail_estimate: 0.0,
            })
        }
        OperatorMethod::Series => {
            let gain = spectral_norm(&b.ab01);
            let mut s = b.a00.clone();
            let mut x = b.a10.clone();
            let mut tail = TailTracker::new(b.m.rows());
            let mut terms = 1;
            loop {
                let est = tail.push(x.frobenius_norm()) * gain;
                if est < tol {
                    return Ok(OperatorContraction {
                        s,
                        method,
                        terms_used: terms,
                        tail_estimate: est,
                    });
                }
                if tail.diverged() || terms >= max_terms {
                    return Err(Error::NotConverged {
                        terms,
                        tail: est,
                        positive_invariant: false,
                    });
                }
                s += &(&b.ab01 * &x);
                x = &b.m * &x;
                terms += 1;
            }
        }
        OperatorMethod::Power => {
            let f = p.part_f;
            let h1 = p.part_h.sector(1);
            let rows = f.total();
            let feed = &p.a.block(0..rows, h1) * &p.b;
            let mut y = p.a.block(0..rows, p.part_h.sector(0));
            let cols = y.cols();
            let gain = spectral_norm(&b.ab01);
            let mut tail = TailTracker::new(f.dim1);
            let mut iterations = 0;
            loop {
                let x = y.block(f.sector(1), 0..cols);
                let est = tail.push(x.frobenius_norm()) * gain;
                let mut next = CMatrix::zeros(rows, cols);
                next.set_block(0, 0, &y.block(f.sector(0), 0..cols));
                next += &(&feed * &x);
                let delta = (&next - &y).max_abs();
                y = next;
                iterations += 1;
                if delta < tol && est < tol {
                    return Ok(OperatorContraction {
                        s: y.block(f.sector(0), 0..cols),
                        method,
                        terms_used: iterations,
                        tail_estimate: est,
                    });
                }
                if tail.diverged() || iterations >= max_terms {
                    return Err(Error::NotConverged {
                        terms: iterations,
                        tail: est,
                        positive_invariant: false,
                    });
                }
            }
        }
    }
}

/// Estimates `Σ_{j ≥ k} ‖X_j‖` from the norms seen so far, comparing the largest norm in
/// the last window of `d` terms with the largest in the window before it.
struct TailTracker {
    window: usize,
    norms: Vec<f64>,
}

impl TailTracker {
    fn new(d: usize) -> Self {
        TailTracker {
            window: d.max(1),
            norms: Vec::new(),
        }
    }

    fn push(&mut self, norm: f64) -> f64 {
        self.norms.push(norm);
        if norm == 0.0 {
            return 0.0;
        }
        let w = self.window;
        let len = self.norms.len();
        if !norm.is_finite() || len < 2 * w {
            return f64::INFINITY;
        }
        let cur = self.norms[len - w..].iter().copied().fold(0.0, f64::max);
        let prev = self.norms[len - 2 * w..len - w]
            .iter()
            .copied()
            .fold(0.0, f64::max);
        let q = cur / prev;
        if q < 1.0 {
            w as f64 * cur / (1.0 - q)
        } else {
            f64::INFINITY
        }
    }

    fn diverged(&self) -> bool {
        self.norms
            .last()
            .is_some_and(|&x| !x.is_finite() || x > 1e150)
    }
}
