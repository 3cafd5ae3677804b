use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix, Partition, C64};

/// Tolerance on the minimum Choi eigenvalue and the trace-preservation residual used when
/// validating channels.
pub const CPTP_TOL: f64 = 1e-9;

/// Linear map `L(C^dim_in) → L(C^dim_out)` acting on column-stacked operators.
///
/// `vec(ρ)[i + j·d] = ρ[i, j]`, so `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)` and the conjugation
/// `ρ ↦ AρA†` has matrix `conj(A) ⊗ A`.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim_in: usize,
    dim_out: usize,
    m: CMatrix,
}

pub fn vec(rho: &CMatrix) -> CMatrix {
    let (r, c) = rho.shape();
    CMatrix::from_fn(r * c, 1, |k, _| rho[(k % r, k / r)])
}

pub fn unvec(v: &CMatrix, rows: usize) -> CMatrix {
    let cols = v.rows().checked_div(rows).unwrap_or(0);
    CMatrix::from_fn(rows, cols, |i, j| v[(i + j * rows, 0)])
}

impl Superoperator {
    pub fn new(dim_in: usize, dim_out: usize, m: CMatrix) -> Result<Self> {
        if m.shape() != (dim_out * dim_out, dim_in * dim_in) {
            return Err(Error::ShapeMismatch(format!(
                "superoperator {dim_in}->{dim_out} needs a {}x{} matrix, got {}x{}",
                dim_out * dim_out,
                dim_in * dim_in,
                m.rows(),
                m.cols()
            )));
        }
        if !m.is_finite() {
            return Err(Error::ShapeMismatch(
                "non-finite superoperator entry".into(),
            ));
        }
        Ok(Superoperator { dim_in, dim_out, m })
    }

    pub fn identity(d: usize) -> Self {
        Superoperator {
            dim_in: d,
            dim_out: d,
            m: CMatrix::identity(d * d),
        }
    }

    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        Superoperator {
            dim_in,
            dim_out,
            m: CMatrix::zeros(dim_out * dim_out, dim_in * dim_in),
        }
    }

    /// `ρ ↦ Σᵢ AᵢρAᵢ†`.
    pub fn from_kraus(ops: &[CMatrix]) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::ShapeMismatch("empty Kraus list".into()))?;
        let (dout, din) = first.shape();
        let mut m = CMatrix::zeros(dout * dout, din * din);
        for (i, a) in ops.iter().enumerate() {
            if a.shape() != (dout, din) {
                return Err(Error::ShapeMismatch(format!(
                    "Kraus operator {i} is {}x{}, expected {dout}x{din}",
                    a.rows(),
                    a.cols()
                )));
            }
            m += &a.conj().kron(a);
        }
        Ok(Superoperator {
            dim_in: din,
            dim_out: dout,
            m,
        })
    }

    /// `ρ ↦ AρA†`.
    pub fn conjugation(a: &CMatrix) -> Self {
        Superoperator {
            dim_in: a.cols(),
            dim_out: a.rows(),
            m: a.conj().kron(a),
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub(crate) fn from_parts(dim_in: usize, dim_out: usize, m: CMatrix) -> Self {
        debug_assert_eq!(m.shape(), (dim_out * dim_out, dim_in * dim_in));
        Superoperator { dim_in, dim_out, m }
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        assert_eq!(
            rho.shape(),
            (self.dim_in, self.dim_in),
            "input operator shape"
        );
        unvec(&(&self.m * &vec(rho)), self.dim_out)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Superoperator) -> Superoperator {
        assert_eq!(inner.dim_out, self.dim_in, "composition dimension mismatch");
        Superoperator {
            dim_in: inner.dim_in,
            dim_out: self.dim_out,
            m: &self.m * &inner.m,
        }
    }

    pub fn add(&self, other: &Superoperator) -> Superoperator {
        assert_eq!(
            (self.dim_in, self.dim_out),
            (other.dim_in, other.dim_out),
            "sum dimension mismatch"
        );
        Superoperator {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            m: &self.m + &other.m,
        }
    }

    pub fn scale(&self, s: f64) -> Superoperator {
        Superoperator {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            m: self.m.scale_real(s),
        }
    }

    pub fn pow(&self, k: usize) -> Superoperator {
        assert_eq!(self.dim_in, self.dim_out, "power of a non-endomorphism");
        Superoperator {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            m: self.m.pow(k),
        }
    }

    /// Hilbert-Schmidt adjoint `T†` (the Heisenberg-picture map).
    pub fn adjoint(&self) -> Superoperator {
        Superoperator {
            dim_in: self.dim_out,
            dim_out: self.dim_in,
            m: self.m.adjoint(),
        }
    }

    /// `T†(I)`.
    pub fn adjoint_on_identity(&self) -> CMatrix {
        let id = vec(&CMatrix::identity(self.dim_out));
        unvec(&(&self.m.adjoint() * &id), self.dim_in)
    }

    /// Choi matrix `Σᵢⱼ |i⟩⟨j| ⊗ T(|i⟩⟨j|)`.
    pub fn choi(&self) -> CMatrix {
        let (din, dout) = (self.dim_in, self.dim_out);
        CMatrix::from_fn(din * dout, din * dout, |r, c| {
            let (i, a) = (r / dout, r % dout);
            let (j, b) = (c / dout, c % dout);
            self.m[(a + b * dout, i + j * din)]
        })
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        (&self.m - &other.m).max_abs()
    }
}

/// Residuals of the complete-positivity and trace-preservation checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CptpReport {
    pub cp: bool,
    pub tp: bool,
    /// Smallest eigenvalue of the Hermitian part of the Choi matrix.
    pub choi_min_eigenvalue: f64,
    /// Non-Hermiticity of the Choi matrix (max-abs entry of `J − J†`).
    pub choi_hermiticity: f64,
    /// `max |T†(I) − I|` entrywise.
    pub tp_residual: f64,
}

impl CptpReport {
    pub fn is_cptp(&self) -> bool {
        self.cp && self.tp
    }
}

pub fn is_cptp(t: &Superoperator, tol: f64) -> CptpReport {
    let j = t.choi();
    let choi_hermiticity = (&j - &j.adjoint()).max_abs();
    let (eig, _) = hermitian_eigen(&j);
    let choi_min_eigenvalue = eig.first().copied().unwrap_or(0.0);
    let tp_residual = (&t.adjoint_on_identity() - &CMatrix::identity(t.dim_in)).max_abs();
    CptpReport {
        cp: choi_min_eigenvalue >= -tol && choi_hermiticity <= tol,
        tp: tp_residual <= tol,
        choi_min_eigenvalue,
        choi_hermiticity,
        tp_residual,
    }
}

/// `sup { Tr T(ρ) : ρ ≥ 0, Tr ρ = 1 }`, the largest eigenvalue of `T†(I)`.
///
/// Meaningful for completely positive `T`; for other maps the value is only a diagnostic.
pub fn trace_norm(t: &Superoperator) -> f64 {
    if t.dim_in == 0 {
        return 0.0;
    }
    let (eig, _) = hermitian_eigen(&t.adjoint_on_identity());
    eig.last().copied().unwrap_or(0.0).max(0.0)
}

/// Superoperator of `ρ ↦ P₀ρP₀ + P₁ρP₁` for the sector projectors of `part`.
pub fn sector_pinching(part: Partition) -> Superoperator {
    Superoperator::conjugation(&part.projector(0))
        .add(&Superoperator::conjugation(&part.projector(1)))
}

/// The decohered channel `(F̄₀ + F̄₁) ∘ T ∘ (H̄₀ + H̄₁)`.
pub fn decohere(t: &Superoperator, part_h: Partition, part_f: Partition) -> Result<Superoperator> {
    if t.dim_in != part_h.total() || t.dim_out != part_f.total() {
        return Err(Error::ShapeMismatch(format!(
            "channel {}->{} does not match partitions of sizes {} and {}",
            t.dim_in,
            t.dim_out,
            part_h.total(),
            part_f.total()
        )));
    }
    Ok(sector_pinching(part_f)
        .compose(t)
        .compose(&sector_pinching(part_h)))
}

/// Conjugation by the embedding of sector `j`: `L(sector j) → L(full space)`.
pub fn embed(part: Partition, j: usize) -> Superoperator {
    Superoperator::conjugation(&part.embedding(j))
}

/// Compression onto sector `j`: `L(full space) → L(sector j)`.
pub fn extract(part: Partition, j: usize) -> Superoperator {
    Superoperator::conjugation(&part.embedding(j).adjoint())
}

/// Trace of an operator given in column-stacked form.
pub fn vec_trace(v: &CMatrix, dim: usize) -> C64 {
    (0..dim).map(|i| v[(i + i * dim, 0)]).sum()
}
