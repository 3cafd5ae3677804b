//! Monte Carlo realization of the contraction by repeated measurement and re-injection.
//!
//! Each trajectory applies `T` to `ρ₀`, measures `{F₀, F₁}` and stops on `F₀`. On `F₁`
//! the normalized sector-1 state is sent through `R`, embedded into `H₁` and fed to `T`
//! again. Averaging the stopped states estimates `(R·T)(ρ₀)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

use super::contraction::ChannelProblem;
use super::superop::{embed, extract, Superoperator};

/// Trajectories simulated per work unit. Fixed so that the reduction order, and hence
/// the floating-point result, does not depend on the thread count.
const CHUNK: usize = 1024;

#[derive(Clone, Debug)]
pub struct SampleReport {
    /// Estimate of `(R·T)(ρ₀)`; censored trajectories contribute zero.
    pub estimate: CMatrix,
    /// Entrywise standard errors of the real and imaginary parts of `estimate`.
    pub std_error_re: CMatrix,
    pub std_error_im: CMatrix,
    /// `histogram[n − 1]` counts trajectories that stopped at step `n`.
    pub histogram: Vec<u64>,
    /// Trajectories still in sector 1 after `max_steps`.
    pub censored: u64,
    pub trajectories: u64,
}

impl SampleReport {
    /// Fraction of trajectories stopping at step `n` (1-based).
    pub fn stop_fraction(&self, n: usize) -> f64 {
        self.histogram.get(n - 1).copied().unwrap_or(0) as f64 / self.trajectories as f64
    }

    /// Binomial standard error of [`stop_fraction`](Self::stop_fraction).
    pub fn stop_fraction_error(&self, n: usize) -> f64 {
        let p = self.stop_fraction(n);
        (p * (1.0 - p) / self.trajectories as f64).sqrt()
    }
}

struct Accumulator {
    sum: CMatrix,
    sum_sq_re: CMatrix,
    sum_sq_im: CMatrix,
    histogram: Vec<u64>,
    censored: u64,
}

impl Accumulator {
    fn new(dim: usize, max_steps: usize) -> Self {
        Accumulator {
            sum: CMatrix::zeros(dim, dim),
            sum_sq_re: CMatrix::zeros(dim, dim),
            sum_sq_im: CMatrix::zeros(dim, dim),
            histogram: vec![0; max_steps],
            censored: 0,
        }
    }

    fn record(&mut self, outcome: Option<(usize, CMatrix)>) {
        let Some((step, state)) = outcome else {
            self.censored += 1;
            return;
        };
        self.histogram[step - 1] += 1;
        let d = state.rows();
        for i in 0..d {
            for j in 0..d {
                let z = state[(i, j)];
                self.sum[(i, j)] += z;
                self.sum_sq_re[(i, j)].re += z.re * z.re;
                self.sum_sq_im[(i, j)].re += z.im * z.im;
            }
        }
    }

    fn merge(&mut self, other: Accumulator) {
        self.sum += &other.sum;
        self.sum_sq_re += &other.sum_sq_re;
        self.sum_sq_im += &other.sum_sq_im;
        for (a, b) in self.histogram.iter_mut().zip(other.histogram) {
            *a += b;
        }
        self.censored += other.censored;
    }
}

/// Simulates `trajectories` runs of the measurement protocol from `rho0`.
///
/// Trajectory `i` draws from a ChaCha8 stream selected by `(seed, i)`, so the report is
/// identical for any thread count.
pub fn sample_contraction(
    p: &ChannelProblem,
    rho0: &CMatrix,
    trajectories: u64,
    seed: u64,
    max_steps: usize,
) -> Result<SampleReport> {
    let h = p.part_h();
    let f = p.part_f();
    if rho0.shape() != (h.dim0, h.dim0) {
        return Err(Error::ShapeMismatch(format!(
            "rho0 must be {}x{}, got {}x{}",
            h.dim0,
            h.dim0,
            rho0.rows(),
            rho0.cols()
        )));
    }
    if trajectories == 0 || max_steps == 0 {
        return Err(Error::InvalidProblem(
            "trajectories and max_steps must be positive".into(),
        ));
    }
    let trace = rho0.trace().re;
    if (trace - 1.0).abs() > 1e-9 || (rho0 - &rho0.adjoint()).max_abs() > 1e-9 {
        return Err(Error::InvalidProblem(
            "rho0 must be a Hermitian unit-trace density matrix".into(),
        ));
    }

    let first = p.t().compose(&embed(h, 0));
    let again = p.t().compose(&embed(h, 1)).compose(p.r());
    let out0 = extract(f, 0);
    let out1 = extract(f, 1);
    let steps = Steps {
        first: &first,
        again: &again,
        out0: &out0,
        out1: &out1,
    };

    let chunks = trajectories.div_ceil(CHUNK as u64);
    let partials: Vec<Accumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(f.dim0, max_steps);
            let start = c * CHUNK as u64;
            let end = (start + CHUNK as u64).min(trajectories);
            for i in start..end {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i);
                acc.record(run_trajectory(&steps, rho0, max_steps, &mut rng));
            }
            acc
        })
        .collect();
    let mut total = Accumulator::new(f.dim0, max_steps);
    for part in partials {
        total.merge(part);
    }

    let n = trajectories as f64;
    let estimate = total.sum.scale_real(1.0 / n);
    let std_err = |sum_sq: &CMatrix, part: fn(crate::C64) -> f64| {
        CMatrix::from_fn(f.dim0, f.dim0, |i, j| {
            let mean = part(estimate[(i, j)]);
            let var = (sum_sq[(i, j)].re / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
            crate::C64::new((var / n).sqrt(), 0.0)
        })
    };
    Ok(SampleReport {
        std_error_re: std_err(&total.sum_sq_re, |z| z.re),
        std_error_im: std_err(&total.sum_sq_im, |z| z.im),
        estimate,
        histogram: total.histogram,
        censored: total.censored,
        trajectories,
    })
}

struct Steps<'a> {
    first: &'a Superoperator,
    again: &'a Superoperator,
    out0: &'a Superoperator,
    out1: &'a Superoperator,
}

fn run_trajectory(
    s: &Steps<'_>,
    rho0: &CMatrix,
    max_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(usize, CMatrix)> {
    let mut sigma = s.first.apply(rho0);
    for step in 1..=max_steps {
        let s0 = s.out0.apply(&sigma);
        let s1 = s.out1.apply(&sigma);
        let p0 = s0.trace().re.max(0.0);
        let p1 = s1.trace().re.max(0.0);
        let total = p0 + p1;
        if total <= 0.0 {
            return None;
        }
        if rng.random::<f64>() * total < p0 {
            return Some((step, s0.scale_real(1.0 / p0)));
        }
        if step == max_steps {
            break;
        }
        sigma = s.again.apply(&s1.scale_real(1.0 / p1));
    }
    None
}
