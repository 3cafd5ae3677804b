//! Test-side oracles and instance generators shared by the integration suites.
#![allow(dead_code)]

use contraction_core::channel::{ChannelProblem, Superoperator};
use contraction_core::linalg::random::{ginibre, haar_unitary};
use contraction_core::linalg::{cis, CMatrix, Partition, C64, ONE};
use contraction_core::unitary::UnitaryProblem;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random problem with `1 <= dim0` and `dim0 + dim1 <= max_n`.
pub fn random_problem<R: Rng>(rng: &mut R, max_n: usize) -> UnitaryProblem {
    let n = rng.random_range(1..=max_n);
    let dim0 = rng.random_range(1..=n);
    UnitaryProblem::random(dim0, n - dim0, rng)
}

/// Orthonormal basis of the column span of `m` (assumed full column rank).
pub fn orthonormalize(m: &CMatrix) -> CMatrix {
    CMatrix::from_inner(m.inner().clone().qr().q())
}

/// Block-diagonal Haar unitary `Q₀ ⊕ Q₁` for the given partition.
pub fn sector_local<R: Rng>(part: Partition, rng: &mut R) -> CMatrix {
    haar_unitary(part.dim0, rng).direct_sum(&haar_unitary(part.dim1, rng))
}

/// Solves `φ = Uψ`, `ψ₁ = Ωφ₁` as one linear system in `(φ, ψ₁)` for every basis `ψ₀`
/// and returns the `φ₀` rows.
pub fn brute_force(p: &UnitaryProblem) -> CMatrix {
    let u = p.u();
    let om = p.omega();
    let (ph, pf) = (p.part_h(), p.part_f());
    let n = u.rows();
    let (h0, h1, f0) = (ph.dim0, ph.dim1, pf.dim0);
    let m = n + h1;
    let mut a = DMatrix::<C64>::zeros(m, m);
    let mut rhs = DMatrix::<C64>::zeros(m, h0);
    for i in 0..n {
        a[(i, i)] = ONE;
        for j in 0..h1 {
            a[(i, n + j)] = -u[(i, h0 + j)];
        }
        for j in 0..h0 {
            rhs[(i, j)] = u[(i, j)];
        }
    }
    for i in 0..h1 {
        a[(n + i, n + i)] = ONE;
        for j in 0..pf.dim1 {
            a[(n + i, f0 + j)] = -om[(i, j)];
        }
    }
    let x = a.lu().solve(&rhs).expect("joint system is regular");
    CMatrix::from_fn(f0, h0, |i, j| x[(i, j)])
}

/// `[[t, −ωr*], [r, ωt*]]`.
pub fn beam_splitter(t: C64, r: C64, w: C64) -> CMatrix {
    CMatrix::from_rows(&[&[t, -w * r.conj()], &[r, w * t.conj()]])
}

/// `−(1/ωΩ)(t − ωΩ)/(t − ωΩ)*`.
pub fn beam_splitter_phase(t: C64, w: C64, om: C64) -> C64 {
    let x = t - w * om;
    -(x / x.conj()) / (w * om)
}

/// Random beam-splitter parameters `(t, r, ω, Ω)` with `|t − ωΩ| > gap`.
pub fn beam_splitter_params<R: Rng>(rng: &mut R, gap: f64) -> (C64, C64, C64, C64) {
    loop {
        let theta: f64 = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let tau = std::f64::consts::TAU;
        let t = cis(rng.random_range(0.0..tau)) * theta.cos();
        let r = cis(rng.random_range(0.0..tau)) * theta.sin();
        let w = cis(rng.random_range(0.0..tau));
        let om = cis(rng.random_range(0.0..tau));
        if (t - w * om).norm() > gap {
            return (t, r, w, om);
        }
    }
}

/// Eigenvectors of a unitary matrix `M`, taken from the Hermitian matrix
/// `(e^{-iφ}M + e^{iφ}M†)/2`, which shares them and has simple spectrum for generic `φ`.
pub fn normal_eigenvectors(m: &CMatrix) -> CMatrix {
    let z = cis(-0.737_119);
    let h = (&m.scale(z) + &m.adjoint().scale(z.conj())).scale_real(0.5);
    CMatrix::from_inner(h.inner().clone().symmetric_eigen().eigenvectors)
}

/// Largest eigenvalue modulus, from the diagonal of the complex Schur form.
///
/// The QR iteration occasionally stalls; it is then restarted on a unitarily similar matrix.
pub fn spectral_radius(m: &CMatrix) -> f64 {
    let mut g = rng(0x5eed);
    let mut a = m.clone();
    for _ in 0..8 {
        if let Some(schur) = nalgebra::Schur::try_new(a.inner().clone(), 1e-15, 10_000) {
            let (_, t) = schur.unpack();
            return (0..t.nrows()).map(|i| t[(i, i)].norm()).fold(0.0, f64::max);
        }
        let q = haar_unitary(m.rows(), &mut g);
        a = &(&q * m) * &q.adjoint();
    }
    panic!("Schur iteration did not converge");
}

/// Whether some eigenvector of the unitary `m` lies in the span of the orthonormal `w`.
pub fn span_contains_eigenvector(m: &CMatrix, w: &CMatrix) -> bool {
    let q = normal_eigenvectors(m);
    let proj = w * &w.adjoint();
    (0..q.cols()).any(|j| {
        let v = q.column_at(j);
        (&v - &(&proj * &v)).frobenius_norm() < 1e-6
    })
}

/// A subspace for the invariant-subspace criterion.
pub struct SubspaceInstance {
    pub m: CMatrix,
    pub w: CMatrix,
    pub planted: bool,
}

/// Random unitary `M` with a subspace `W`; when `planted`, `W` contains eigenvectors of `M`.
pub fn subspace_instance<R: Rng>(rng: &mut R, planted: bool) -> SubspaceInstance {
    let n = rng.random_range(3..=8);
    let k = rng.random_range(1..n);
    let m = haar_unitary(n, rng);
    let raw = if planted {
        let q = normal_eigenvectors(&m);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let e = rng.random_range(1..=k.min(2));
        let mut cols: Vec<CMatrix> = idx[..e].iter().map(|&j| q.column_at(j)).collect();
        while cols.len() < k {
            cols.push(ginibre(n, 1, rng));
        }
        let refs: Vec<&CMatrix> = cols.iter().collect();
        CMatrix::hstack(&refs)
    } else {
        ginibre(n, k, rng)
    };
    SubspaceInstance {
        w: orthonormalize(&raw),
        m,
        planted,
    }
}

/// A trace-non-increasing CP map on `L(C^n)`.
pub struct LossyMap {
    pub t: Superoperator,
    /// Orthonormal basis of the subspace whose states keep their trace (empty if none).
    pub kept: CMatrix,
}

/// When `planted`, states supported on a random `k`-dimensional subspace `K` stay in `K`
/// with their trace intact while the complement loses a fraction. Otherwise trace is lost
/// along one random direction and a generic mixing channel spreads the loss everywhere.
pub fn lossy_map<R: Rng>(rng: &mut R, planted: bool) -> LossyMap {
    let n = rng.random_range(2..=4);
    let p: f64 = rng.random_range(0.3..0.95);
    let mixers = 3;
    let basis = haar_unitary(n, rng);
    if planted {
        let k = rng.random_range(1..=n);
        let qk = basis.block(0..n, 0..k);
        let proj_perp = &CMatrix::identity(n) - &(&qk * &qk.adjoint());
        let mut ops = vec![&(&qk * &haar_unitary(k, rng)) * &qk.adjoint()];
        if k < n {
            let s = (p / mixers as f64).sqrt();
            for _ in 0..mixers {
                ops.push((&haar_unitary(n, rng) * &proj_perp).scale_real(s));
            }
        }
        LossyMap {
            t: Superoperator::from_kraus(&ops).unwrap(),
            kept: qk,
        }
    } else {
        let q = basis.column_at(0);
        let damp = &CMatrix::identity(n) - &(&q * &q.adjoint()).scale_real(1.0 - p.sqrt());
        let s = (1.0 / mixers as f64).sqrt();
        let ops: Vec<CMatrix> = (0..mixers)
            .map(|_| (&haar_unitary(n, rng) * &damp).scale_real(s))
            .collect();
        LossyMap {
            t: Superoperator::from_kraus(&ops).unwrap(),
            kept: CMatrix::zeros(n, 0),
        }
    }
}

pub fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).max_abs()
}

/// Kraus operators `din → dout` cut from a Haar isometry into `C^dout ⊗ C^m`.
pub fn random_kraus<R: Rng>(din: usize, dout: usize, m: usize, rng: &mut R) -> Vec<CMatrix> {
    let v = haar_unitary(dout * m, rng);
    (0..m)
        .map(|j| v.block(j * dout..(j + 1) * dout, 0..din))
        .collect()
}

pub fn random_channel<R: Rng>(din: usize, dout: usize, rng: &mut R) -> Superoperator {
    let m = din.div_ceil(dout.max(1)).max(2);
    Superoperator::from_kraus(&random_kraus(din, dout, m, rng)).unwrap()
}

/// Random channel problem with equal splits and total dimension at most `max_n`.
pub fn random_channel_problem<R: Rng>(rng: &mut R, max_n: usize) -> ChannelProblem {
    let n = rng.random_range(2..=max_n);
    let dim0 = rng.random_range(1..n);
    let part = Partition::new(dim0, n - dim0);
    let t = random_channel(n, n, rng);
    let r = random_channel(part.dim1, part.dim1, rng);
    ChannelProblem::new(t, r, part, part).unwrap()
}
