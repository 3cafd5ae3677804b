//! Seeded random matrices for tests, scaffolding and property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{c, CMatrix};

/// Matrix with i.i.d. standard complex Gaussian entries (real and imaginary parts N(0, 1/2)).
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * s, im * s)
    })
}

/// Haar-distributed unitary drawn from `rng`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let z = ginibre(n, n, rng);
    let qr = z.into_inner().qr();
    let (q, r) = qr.unpack();
    let q = CMatrix::from_inner(q);
    // Fix the phase freedom of QR so the distribution is exactly Haar.
    CMatrix::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        q[(i, j)] * phase
    })
}

/// Haar-distributed `n × n` unitary, reproducible from `seed`.
pub fn random_unitary(n: usize, seed: u64) -> CMatrix {
    haar_unitary(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Random density matrix `GG†/Tr(GG†)` of full rank almost surely.
pub fn random_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(n, n, rng);
    let rho = &g * &g.adjoint();
    let t = rho.trace().re;
    rho.scale_real(1.0 / t)
}
