//! Contraction `Ω·U` of a unitary operator to the sector-0 subspaces.
//!
//! Given `U : H → F` and a connection `Ω : F₁ → H₁`, the contraction is the map
//! `ψ₀ ↦ φ₀` defined by `φ = Uψ`, `ψ₁ = Ωφ₁`. With `Ũ₀₁ = U₀₁Ω` and `C = U₁₁Ω`,
//!
//! ```text
//! Ω·U = U₀₀ + Ũ₀₁ (I − C)⁻¹ U₁₀ = U₀₀ + Σₖ Ũ₀₁ Cᵏ U₁₀
//! ```
//!
//! where the inverse is taken on the complement of the decoupled subspace `V`,
//! the largest `UΩ`-invariant subspace of `F₁`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{
    null_space, orthonormal_complement, rank, solve_linear, spectral_norm, CMatrix, Partition,
};

/// Unitarity tolerance applied to `U` and `Ω` when a problem is constructed.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Threshold for detecting the decoupled subspace and its eigenvalue-1 part.
pub const STRIP_TOL: f64 = 1e-9;

/// Series and power methods fall back to `block_solve` when `N ≥ 1 − N_FALLBACK_MARGIN`.
pub const N_FALLBACK_MARGIN: f64 = 1e-9;

/// A unitary `U : H → F` together with a connection `Ω : F₁ → H₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryProblem {
    u: CMatrix,
    omega: CMatrix,
    part_h: Partition,
    part_f: Partition,
}

impl UnitaryProblem {
    /// Validates shapes and unitarity (within [`UNITARITY_TOL`]) of `U` and `Ω`.
    pub fn new(u: CMatrix, omega: CMatrix, part_h: Partition, part_f: Partition) -> Result<Self> {
        Self::with_tolerance(u, omega, part_h, part_f, UNITARITY_TOL)
    }

    pub fn with_tolerance(
        u: CMatrix,
        omega: CMatrix,
        part_h: Partition,
        part_f: Partition,
        tol: f64,
    ) -> Result<Self> {
        let p = Self::unchecked(u, omega, part_h, part_f)?;
        if !p.u.is_finite() || !p.omega.is_finite() {
            return Err(Error::InvalidProblem("non-finite matrix entry".into()));
        }
        let ru = p.u.unitarity_residual();
        if ru > tol {
            return Err(Error::InvalidProblem(format!(
                "U is not unitary (‖U†U − I‖ = {ru:.3e} > {tol:.1e})"
            )));
        }
        let ro = p.omega.unitarity_residual();
        if ro > tol {
            return Err(Error::InvalidProblem(format!(
                "Omega is not unitary (‖Ω†Ω − I‖ = {ro:.3e} > {tol:.1e})"
            )));
        }
        Ok(p)
    }

    /// Checks shapes only.
    pub(crate) fn unchecked(
        u: CMatrix,
        omega: CMatrix,
        part_h: Partition,
        part_f: Partition,
    ) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::InvalidProblem(format!(
                "U must be square, got {}x{}",
                u.rows(),
                u.cols()
            )));
        }
        let n = u.rows();
        if part_h.total() != n || part_f.total() != n {
            return Err(Error::InvalidProblem(format!(
                "partitions H = {}+{} and F = {}+{} do not match U of size {n}",
                part_h.dim0, part_h.dim1, part_f.dim0, part_f.dim1
            )));
        }
        if part_h.dim1 != part_f.dim1 {
            return Err(Error::InvalidProblem(format!(
                "dim H1 = {} differs from dim F1 = {}",
                part_h.dim1, part_f.dim1
            )));
        }
        if omega.shape() != (part_h.dim1, part_f.dim1) {
            return Err(Error::InvalidProblem(format!(
                "Omega must be {}x{}, got {}x{}",
                part_h.dim1,
                part_f.dim1,
                omega.rows(),
                omega.cols()
            )));
        }
        Ok(UnitaryProblem {
            u,
            omega,
            part_h,
            part_f,
        })
    }

    /// Problem with equal splits `dim0 | dim1` on both sides.
    pub fn symmetric(u: CMatrix, omega: CMatrix, dim0: usize) -> Result<Self> {
        let n = u.rows();
        let part = Partition::new(dim0, n.saturating_sub(dim0));
        Self::new(u, omega, part, part)
    }

    /// Haar-random `U` and `Ω` with sectors `dim0 | dim1` on both sides.
    pub fn random<R: rand::Rng + ?Sized>(dim0: usize, dim1: usize, rng: &mut R) -> Self {
        let part = Partition::new(dim0, dim1);
        let u = crate::linalg::random::haar_unitary(dim0 + dim1, rng);
        let omega = crate::linalg::random::haar_unitary(dim1, rng);
        Self::unchecked(u, omega, part, part).expect("shapes are consistent")
    }

    pub fn u(&self) -> &CMatrix {
        &self.u
    }

    pub fn omega(&self) -> &CMatrix {
        &self.omega
    }

    pub fn part_h(&self) -> Partition {
        self.part_h
    }

    pub fn part_f(&self) -> Partition {
        self.part_f
    }

    /// Block `F_i U H_j`.
    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        self.u.block(self.part_f.sector(i), self.part_h.sector(j))
    }

    /// The problem `(U⁻¹, Ω⁻¹)`, whose contraction is `(Ω·U)⁻¹`.
    pub fn inverse(&self) -> Self {
        UnitaryProblem {
            u: self.u.adjoint(),
            omega: self.omega.adjoint(),
            part_h: self.part_f,
            part_f: self.part_h,
        }
    }

    /// Same `U` with the roles of sectors 0 and 1 exchanged, closed by `connection : F₀ → H₀`.
    pub fn with_sectors_swapped(&self, connection: CMatrix, tol: f64) -> Result<Self> {
        let rows = self.part_f.swap_permutation();
        let cols = self.part_h.swap_permutation();
        let u = self.u.select_rows(&rows).select_cols(&cols);
        Self::with_tolerance(
            u,
            connection,
            self.part_h.swapped(),
            self.part_f.swapped(),
            tol,
        )
    }

    /// `U₀₀, U₀₁Ω, U₁₀, U₁₁Ω`.
    fn absorbed_blocks(&self) -> Blocks {
        Blocks {
            a00: self.block(0, 0),
            a01: &self.block(0, 1) * &self.omega,
            a10: self.block(1, 0),
            c: &self.block(1, 1) * &self.omega,
        }
    }
}

struct Blocks {
    a00: CMatrix,
    a01: CMatrix,
    a10: CMatrix,
    c: CMatrix,
}

/// Algorithm used to evaluate a contraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// `U₀₀ + Ũ₀₁(I − Ũ₁₁)⁻¹U₁₀`.
    BlockSolve,
    /// `F₀(I − UΩF₁)⁻¹UH₀` solved on the whole space.
    Resolvent,
    /// Partial sums of `U₀₀ + Σₖ Ũ₀₁ Ũ₁₁ᵏ U₁₀`.
    Series,
    /// Iterates of `(F₀ + UΩF₁)ⁿ UH₀`.
    Power,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::BlockSolve,
        Method::Resolvent,
        Method::Series,
        Method::Power,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::BlockSolve => "block_solve",
            Method::Resolvent => "resolvent",
            Method::Series => "series",
            Method::Power => "power",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "block_solve" | "block" => Ok(Method::BlockSolve),
            "resolvent" => Ok(Method::Resolvent),
            "series" => Ok(Method::Series),
            "power" => Ok(Method::Power),
            other => Err(Error::format(
                "method",
                format!(
                    "unknown method `{other}` (expected block_solve, resolvent, series or power)"
                ),
            )),
        }
    }
}

/// Contracted map with diagnostics.
#[derive(Clone, Debug)]
pub struct ContractionResult {
    /// `Ω·U`, of shape `dim F₀ × dim H₀`.
    pub s: CMatrix,
    /// Method actually used; differs from the request when a series method fell back.
    pub method: Method,
    pub fell_back: bool,
    /// Number of series terms (or power iterations) consumed; 0 for direct solves.
    pub terms_used: usize,
    /// `‖C'^{d'}‖` for the stripped problem (`C' = Ũ₁₁` restricted to `F₁ ⊖ V`, `d' = dim(F₁ ⊖ V)`).
    pub convergence_n: f64,
    /// Orthonormal columns (in `F₁` coordinates) spanning the decoupled subspace `V`.
    pub v_basis: CMatrix,
    /// Orthonormal columns spanning `V₁ = {φ₁ ∈ F₁ : UΩφ₁ = φ₁}`.
    pub v1_basis: CMatrix,
}

/// Orthonormal bases of `V` and `V₁`, as columns in `F₁` coordinates.
pub fn invariant_subspaces(p: &UnitaryProblem, tol: f64) -> (CMatrix, CMatrix) {
    let c = p.absorbed_blocks().c;
    let v = decoupled_subspace(&c, tol);
    let v1 = fixed_space(&c, &v, tol);
    (v, v1)
}

/// Largest `C`-invariant subspace on which `C` is isometric, for a contraction `C`.
///
/// It coincides with `{v : ‖C^d v‖ = ‖v‖}` (`d = dim`), the right singular space of `C^d`
/// for singular value 1. Candidates are confirmed by checking that the restriction of `C`
/// stays isometric under powers; failing candidates lose their weakest direction.
fn decoupled_subspace(c: &CMatrix, tol: f64) -> CMatrix {
    let d = c.rows();
    if d == 0 {
        return CMatrix::zeros(0, 0);
    }
    let cd = c.pow(d);
    let (s, v) = right_singular(&cd);
    let mut k = s.iter().filter(|&&x| x >= 1.0 - tol).count();
    while k > 0 {
        let w = v.block(0..d, 0..k);
        let m = &w.adjoint() * &(c * &w);
        let mk = m.pow(k);
        let leak = spectral_norm(&(&(c * &w) - &(&w * &m)));
        let smin = crate::linalg::singular_values(&mk)
            .last()
            .copied()
            .unwrap_or(0.0);
        if smin >= 1.0 - 10.0 * tol && leak <= 1e-4 {
            return w;
        }
        k -= 1;
    }
    CMatrix::zeros(d, 0)
}

fn right_singular(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.cols();
    let svd = nalgebra::SVD::new(m.inner().clone(), false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let v = CMatrix::from_fn(n, n, |r, k| vt[(idx[k], r)].conj());
    (s, v)
}

/// `V₁ = W · null(I − W†CW)` for the decoupled basis `W`.
fn fixed_space(c: &CMatrix, w: &CMatrix, tol: f64) -> CMatrix {
    if w.cols() == 0 {
        return CMatrix::zeros(c.rows(), 0);
    }
    let m = &w.adjoint() * &(c * w);
    let ker = null_space(&(CMatrix::identity(m.rows()) - m), tol);
    w * &ker
}

/// Equivalent problem with the decoupled subspace `V` removed from `F₁` (and `ΩV` from `H₁`).
///
/// The sector-1 bases are rotated so that the returned connection is the identity. When
/// `V = 0` the input is returned unchanged.
pub fn strip_decoupled(p: &UnitaryProblem, tol: f64) -> UnitaryProblem {
    let (v, _) = invariant_subspaces(p, tol);
    strip_with(p, &v)
}

fn strip_with(p: &UnitaryProblem, v: &CMatrix) -> UnitaryProblem {
    if v.cols() == 0 {
        return p.clone();
    }
    let q = orthonormal_complement(v);
    let b = p.absorbed_blocks();
    let qh = q.adjoint();
    let top = CMatrix::hstack(&[&b.a00, &(&b.a01 * &q)]);
    let bottom = CMatrix::hstack(&[&(&qh * &b.a10), &(&qh * &(&b.c * &q))]);
    let u = CMatrix::vstack(&[&top, &bottom]);
    let d = q.cols();
    UnitaryProblem {
        u,
        omega: CMatrix::identity(d),
        part_h: Partition::new(p.part_h.dim0, d),
        part_f: Partition::new(p.part_f.dim0, d),
    }
}

/// `‖Mᵈ‖` with `d = dim` and `M` square; zero for the empty matrix.
pub fn convergence_parameter(c: &CMatrix) -> f64 {
    if c.rows() == 0 {
        return 0.0;
    }
    spectral_norm(&c.pow(c.rows()))
}

/// Computes `Ω·U` with the selected method.
///
/// `tol` is the target accuracy of the series and power methods and `max_terms` their
/// iteration cap. Both fall back to [`Method::BlockSolve`] when the convergence parameter is
/// within [`N_FALLBACK_MARGIN`] of 1.
pub fn contract_unitary(
    p: &UnitaryProblem,
    method: Method,
    tol: f64,
    max_terms: usize,
) -> Result<ContractionResult> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidProblem(format!(
            "tol must be positive, got {tol}"
        )));
    }
    if max_terms == 0 {
        return Err(Error::InvalidProblem("max_terms must be at least 1".into()));
    }
    let (v, v1) = invariant_subspaces(p, STRIP_TOL);
    let stripped = strip_with(p, &v);
    let b = stripped.absorbed_blocks();
    let n = convergence_parameter(&b.c);
    let mut result = ContractionResult {
        s: CMatrix::zeros(0, 0),
        method,
        fell_back: false,
        terms_used: 0,
        convergence_n: n,
        v_basis: v,
        v1_basis: v1,
    };
    let method = match method {
        Method::Series | Method::Power if n >= 1.0 - N_FALLBACK_MARGIN => {
            result.fell_back = true;
            Method::BlockSolve
        }
        m => m,
    };
    result.method = method;
    match method {
        Method::BlockSolve => result.s = block_solve(&b)?,
        Method::Resolvent => result.s = resolvent(&stripped)?,
        Method::Series => {
            let (s, terms) = series(&b, n, tol, max_terms)?;
            result.s = s;
            result.terms_used = terms;
        }
        Method::Power => {
            let (s, terms) = power(&stripped, n, tol, max_terms)?;
            result.s = s;
            result.terms_used = terms;
        }
    }
    Ok(result)
}

fn block_solve(b: &Blocks) -> Result<CMatrix> {
    let d = b.c.rows();
    let x = solve_linear(&(CMatrix::identity(d) - &b.c), &b.a10)?;
    Ok(&b.a00 + &(&b.a01 * &x))
}

fn resolvent(p: &UnitaryProblem) -> Result<CMatrix> {
    let n = p.u.rows();
    let h0 = p.part_h.sector(0);
    let h1 = p.part_h.sector(1);
    let f1 = p.part_f.sector(1);
    // UΩF₁ as a map F → F: columns in F₁, zero elsewhere.
    let mut feedback = CMatrix::zeros(n, n);
    feedback.set_block(0, f1.start, &(&p.u.block(0..n, h1) * &p.omega));
    let rhs = p.u.block(0..n, h0);
    let y = solve_linear(&(CMatrix::identity(n) - feedback), &rhs)?;
    Ok(y.block(p.part_f.sector(0), 0..y.cols()))
}

/// Bound on `Σ_{j ≥ 0} ‖X_{k+j}‖` given `x = X_k`, using `‖X_{j+d}‖ ≤ N‖X_j‖` and `‖C‖ ≤ 1`.
fn geometric_tail(x: &CMatrix, d: usize, n: f64) -> f64 {
    x.frobenius_norm() * d as f64 / (1.0 - n)
}

fn series(b: &Blocks, n: f64, tol: f64, max_terms: usize) -> Result<(CMatrix, usize)> {
    let d = b.c.rows();
    let mut s = b.a00.clone();
    let mut x = b.a10.clone();
    let mut terms = 1;
    let gain = spectral_norm(&b.a01);
    loop {
        let tail = geometric_tail(&x, d, n) * gain;
        if tail < tol || x.max_abs() == 0.0 {
            return Ok((s, terms));
        }
        if terms >= max_terms {
            return Err(Error::NotConverged {
                terms,
                tail,
                positive_invariant: false,
            });
        }
        s += &(&b.a01 * &x);
        x = &b.c * &x;
        terms += 1;
    }
}

fn power(p: &UnitaryProblem, n: f64, tol: f64, max_terms: usize) -> Result<(CMatrix, usize)> {
    let dim = p.u.rows();
    let f0 = p.part_f.sector(0);
    let f1 = p.part_f.sector(1);
    let h1 = p.part_h.sector(1);
    let d = f1.len();
    let feed = &p.u.block(0..dim, h1) * &p.omega;
    let mut y = p.u.block(0..dim, p.part_h.sector(0));
    let cols = y.cols();
    let mut iterations = 0;
    loop {
        let x = y.block(f1.clone(), 0..cols);
        let tail = geometric_tail(&x, d, n);
        // Step: keep the F₀ rows, re-inject the F₁ rows through UΩ.
        let mut next = CMatrix::zeros(dim, cols);
        next.set_block(0, 0, &y.block(f0.clone(), 0..cols));
        next += &(&feed * &x);
        let delta = (&next - &y).max_abs();
        y = next;
        iterations += 1;
        if delta < tol && tail < tol {
            return Ok((y.block(f0, 0..cols), iterations));
        }
        if iterations >= max_terms {
            return Err(Error::NotConverged {
                terms: iterations,
                tail,
                positive_invariant: false,
            });
        }
    }
}

/// Truncated Kraus decomposition `A₁, A₂, …` of the contraction channel.
#[derive(Clone, Debug)]
pub struct KrausSet {
    /// `A_n = F₀(UΩF₁)^{n−1}UH₀`.
    pub ops: Vec<CMatrix>,
    /// `‖I − Σ A_n†A_n‖`, which equals the weight of the omitted tail.
    pub tail_bound: f64,
    /// `‖I − Σ A_nA_n†‖`.
    pub unital_defect: f64,
    /// `‖Ω·U − Σ A_n‖`.
    pub coherent_defect: f64,
}

/// Kraus operators of the contraction, truncated once completeness, unitality and the
/// coherent sum are all within `tail_tol`.
pub fn kraus_operators(p: &UnitaryProblem, tail_tol: f64, max_terms: usize) -> Result<KrausSet> {
    let s = contract_unitary(p, Method::BlockSolve, tail_tol, max_terms)?.s;
    let b = p.absorbed_blocks();
    let h0 = p.part_h.dim0;
    let f0 = p.part_f.dim0;
    let id_h = CMatrix::identity(h0);
    let id_f = CMatrix::identity(f0);

    let mut ops = Vec::new();
    let mut completeness = CMatrix::zeros(h0, h0);
    let mut unital = CMatrix::zeros(f0, f0);
    let mut coherent = CMatrix::zeros(f0, h0);
    let mut x = b.a10.clone();
    let mut next = b.a00.clone();
    loop {
        completeness += &(&next.adjoint() * &next);
        unital += &(&next * &next.adjoint());
        coherent += &next;
        ops.push(next);
        let set = KrausSet {
            tail_bound: spectral_norm(&(&id_h - &completeness)),
            unital_defect: spectral_norm(&(&id_f - &unital)),
            coherent_defect: spectral_norm(&(&s - &coherent)),
            ops: Vec::new(),
        };
        let done = set.tail_bound <= tail_tol
            && set.unital_defect <= tail_tol
            && set.coherent_defect <= tail_tol;
        if done {
            return Ok(KrausSet { ops, ..set });
        }
        // Once the feedback amplitude has vanished no further term can change the sums.
        if ops.len() >= max_terms || x.max_abs() < 1e-300 {
            return Err(Error::NotConverged {
                terms: ops.len(),
                tail: set
                    .tail_bound
                    .max(set.unital_defect)
                    .max(set.coherent_defect),
                positive_invariant: false,
            });
        }
        next = &b.a01 * &x;
        x = &b.c * &x;
    }
}

/// POVM elements `Π_n = A_n†A_n`.
pub fn povm(k: &KrausSet) -> Vec<CMatrix> {
    k.ops.iter().map(|a| &a.adjoint() * a).collect()
}

/// Outcome of the reciprocity test `(Ω·U)⁻¹·U = Ω⁻¹`.
#[derive(Clone, Debug)]
pub struct ReciprocityWitness {
    /// Verdict of the direct check (`residual ≤ tol`).
    pub direct: bool,
    /// Verdict of the dimension criterion `dim V₁ = dim(F₁ ∩ UH₁)`.
    pub geometric: bool,
    /// `‖(Ω·U)⁻¹·U − Ω⁻¹‖`.
    pub residual: f64,
    pub dim_v1: usize,
    pub dim_f1_cap_uh1: usize,
    /// `dim V'₁` of the swapped problem closed by `(Ω·U)⁻¹`.
    pub dim_v1_swapped: usize,
    /// `dim(F₀ ∩ UH₀)`.
    pub dim_f0_cap_uh0: usize,
}

impl ReciprocityWitness {
    pub fn holds(&self) -> bool {
        self.direct
    }

    pub fn consistent(&self) -> bool {
        self.direct == self.geometric
    }
}

/// Checks reciprocity both by contracting with `(Ω·U)⁻¹` and by the subspace criterion.
pub fn check_reciprocity(p: &UnitaryProblem, tol: f64) -> Result<ReciprocityWitness> {
    let forward = contract_unitary(p, Method::BlockSolve, tol, 1)?;
    let swapped = p.with_sectors_swapped(forward.s.adjoint(), 1e-8)?;
    let back = contract_unitary(&swapped, Method::BlockSolve, tol, 1)?;
    let residual = spectral_norm(&(&back.s - &p.omega.adjoint()));

    let rank_tol = STRIP_TOL;
    let dim_f1_cap_uh1 = p.part_h.dim1 - rank(&p.block(0, 1), rank_tol);
    let dim_f0_cap_uh0 = p.part_h.dim0 - rank(&p.block(1, 0), rank_tol);
    let dim_v1 = forward.v1_basis.cols();
    Ok(ReciprocityWitness {
        direct: residual <= tol,
        geometric: dim_v1 == dim_f1_cap_uh1,
        residual,
        dim_v1,
        dim_f1_cap_uh1,
        dim_v1_swapped: back.v1_basis.cols(),
        dim_f0_cap_uh0,
    })
}

/// `‖(W†MW)^d‖` for orthonormal columns `W` (`d` = number of columns).
///
/// For unitary `M` this equals 1 exactly when the span of `W` contains an `M`-invariant
/// subspace.
pub fn compressed_power_norm(m: &CMatrix, w: &CMatrix) -> f64 {
    if w.cols() == 0 {
        return 0.0;
    }
    let r = &w.adjoint() * &(m * w);
    spectral_norm(&r.pow(w.cols()))
}

/// Whether the span of `W` contains a non-zero invariant subspace of the unitary `M`.
pub fn contains_invariant_subspace(m: &CMatrix, w: &CMatrix, tol: f64) -> bool {
    w.cols() > 0 && compressed_power_norm(m, w) >= 1.0 - tol
}
