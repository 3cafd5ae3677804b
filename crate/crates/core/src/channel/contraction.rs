use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, krylov_basis, power_norm_test, solve_linear, spectral_norm, CMatrix, Partition,
};
use crate::unitary::UnitaryProblem;

use super::superop::{decohere, embed, extract, is_cptp, trace_norm, Superoperator, CPTP_TOL};

/// A channel `T : L(H) → L(F)` closed by a connection channel `R : L(F₁) → L(H₁)`.
#[derive(Clone, Debug)]
pub struct ChannelProblem {
    t: Superoperator,
    r: Superoperator,
    part_h: Partition,
    part_f: Partition,
}

impl ChannelProblem {
    /// Validates dimensions and that both maps are CPTP within [`CPTP_TOL`].
    pub fn new(
        t: Superoperator,
        r: Superoperator,
        part_h: Partition,
        part_f: Partition,
    ) -> Result<Self> {
        if t.dim_in() != part_h.total() || t.dim_out() != part_f.total() {
            return Err(Error::InvalidProblem(format!(
                "T maps L(C^{}) -> L(C^{}), partitions require {} -> {}",
                t.dim_in(),
                t.dim_out(),
                part_h.total(),
                part_f.total()
            )));
        }
        if r.dim_in() != part_f.dim1 || r.dim_out() != part_h.dim1 {
            return Err(Error::InvalidProblem(format!(
                "R maps L(C^{}) -> L(C^{}), expected dim F1 = {} -> dim H1 = {}",
                r.dim_in(),
                r.dim_out(),
                part_f.dim1,
                part_h.dim1
            )));
        }
        for (name, map) in [("T", &t), ("R", &r)] {
            let rep = is_cptp(map, CPTP_TOL);
            if !rep.is_cptp() {
                return Err(Error::InvalidProblem(format!(
                    "{name} is not CPTP (min Choi eigenvalue {:.3e}, trace residual {:.3e})",
                    rep.choi_min_eigenvalue, rep.tp_residual
                )));
            }
        }
        Ok(ChannelProblem {
            t,
            r,
            part_h,
            part_f,
        })
    }

    /// The pair of unitary channels `(Ū, Ω̄)`.
    pub fn from_unitary(p: &UnitaryProblem) -> Self {
        ChannelProblem {
            t: Superoperator::conjugation(p.u()),
            r: Superoperator::conjugation(p.omega()),
            part_h: p.part_h(),
            part_f: p.part_f(),
        }
    }

    pub fn t(&self) -> &Superoperator {
        &self.t
    }

    pub fn r(&self) -> &Superoperator {
        &self.r
    }

    pub fn part_h(&self) -> Partition {
        self.part_h
    }

    pub fn part_f(&self) -> Partition {
        self.part_f
    }

    /// Same connection with `T` replaced by its decohered version.
    pub fn decohered(&self) -> Self {
        ChannelProblem {
            t: decohere(&self.t, self.part_h, self.part_f).expect("dimensions validated"),
            ..self.clone()
        }
    }

    /// The four sector maps `T₀₀, T₁₀, T̃₀₁, T̃₁₁`.
    pub fn sector_maps(&self) -> SectorMaps {
        let through_r = self.t.compose(&embed(self.part_h, 1)).compose(&self.r);
        let from_h0 = self.t.compose(&embed(self.part_h, 0));
        SectorMaps {
            t00: extract(self.part_f, 0).compose(&from_h0),
            t10: extract(self.part_f, 1).compose(&from_h0),
            t01: extract(self.part_f, 0).compose(&through_r),
            t11: extract(self.part_f, 1).compose(&through_r),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SectorMaps {
    /// `L(H₀) → L(F₀)`.
    pub t00: Superoperator,
    /// `L(H₀) → L(F₁)`.
    pub t10: Superoperator,
    /// `L(F₁) → L(F₀)`, through the connection.
    pub t01: Superoperator,
    /// `L(F₁) → L(F₁)`, through the connection.
    pub t11: Superoperator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChannelMethod {
    Series,
    Resolvent,
    Power,
}

impl std::str::FromStr for ChannelMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "series" => Ok(ChannelMethod::Series),
            "resolvent" => Ok(ChannelMethod::Resolvent),
            "power" => Ok(ChannelMethod::Power),
            other => Err(Error::format(
                "method",
                format!("unknown method `{other}` (expected series, resolvent or power)"),
            )),
        }
    }
}

impl std::fmt::Display for ChannelMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ChannelMethod::Series => "series",
            ChannelMethod::Resolvent => "resolvent",
            ChannelMethod::Power => "power",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ChannelContraction {
    /// `R·T : L(H₀) → L(F₀)`.
    pub s: Superoperator,
    pub method: ChannelMethod,
    pub terms_used: usize,
    /// `Tr σ₁ / Tr ρ₀` for the maximally mixed `ρ₀` on `H₀`; `None` when `H₀` is trivial.
    pub trace_ratio: Option<f64>,
    pub converged: bool,
    /// `‖T̃₁₁ᵈ‖_t` with `d = dim L(F₁)`.
    pub invariant_norm: f64,
    /// Trace-norm bound on the omitted tail at termination.
    pub tail: f64,
}

/// `‖T̃ᵈ‖_t` for an endomorphism of `L(C^n)`, `d = n²`.
pub fn invariant_norm(t11: &Superoperator) -> f64 {
    let d = t11.dim_in() * t11.dim_in();
    if d == 0 {
        return 0.0;
    }
    trace_norm(&t11.pow(d))
}

/// Dimension of the largest positive subspace of `L(F₁)` invariant under `T₁₁` on which
/// the trace is preserved.
///
/// This is `(dim K)²`, where `K` is the eigenvalue-1 eigenspace of `(T₁₁†)ᵈ(I)`: positive
/// operators keep their trace under every power exactly when they are supported in `K`.
pub fn positive_invariant_dim(t11: &Superoperator, tol: f64) -> usize {
    let n = t11.dim_in();
    if n == 0 {
        return 0;
    }
    let x = t11.pow(n * n).adjoint_on_identity();
    let (eig, _) = hermitian_eigen(&x);
    let k = eig.iter().filter(|&&l| l >= 1.0 - tol).count();
    k * k
}

/// Number of doublings tried when diagnosing the resolvent on the Krylov space.
const RESOLVENT_DOUBLINGS: u32 = 20;

/// Computes `R·T`.
///
/// Series and power stop once the trace left in sector 1 is below `tol`. When that trace
/// has stopped decreasing over `dim L(F₁)` steps the iteration is abandoned, and
/// `positive_invariant` in the error records whether a trace-preserved positive invariant
/// subspace exists.
pub fn contract_channel(
    p: &ChannelProblem,
    method: ChannelMethod,
    tol: f64,
    max_terms: usize,
) -> Result<ChannelContraction> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidProblem(format!(
            "tol must be positive, got {tol}"
        )));
    }
    if max_terms == 0 {
        return Err(Error::InvalidProblem("max_terms must be at least 1".into()));
    }
    let maps = p.sector_maps();
    let invariant_norm = self::invariant_norm(&maps.t11);
    let invariant = invariant_norm >= 1.0 - tol;
    let h0 = p.part_h.dim0;
    let f1 = p.part_f.dim1;
    let ratio = |sigma1: &Superoperator| -> Option<f64> {
        (h0 > 0).then(|| {
            let rho = CMatrix::identity(h0).scale_real(1.0 / h0 as f64);
            sigma1.apply(&rho).trace().re
        })
    };

    match method {
        ChannelMethod::Series => {
            let mut s = maps.t00.clone();
            let mut x = maps.t10.clone();
            let mut sigma1 = Superoperator::zero(h0, f1);
            let mut stall = StallDetector::new(f1 * f1);
            let mut terms = 1;
            loop {
                let mass = trace_norm(&x);
                if mass < tol {
                    return Ok(ChannelContraction {
                        s,
                        method,
                        terms_used: terms,
                        trace_ratio: ratio(&sigma1),
                        converged: true,
                        invariant_norm,
                        tail: mass,
                    });
                }
                if (invariant && stall.stalled(mass)) || terms >= max_terms {
                    return Err(Error::NotConverged {
                        terms,
                        tail: mass,
                        positive_invariant: invariant,
                    });
                }
                s = s.add(&maps.t01.compose(&x));
                sigma1 = sigma1.add(&x);
                x = maps.t11.compose(&x);
                terms += 1;
            }
        }
        ChannelMethod::Resolvent => {
            let tm = maps.t11.matrix();
            let start = maps.t10.matrix();
            let w = krylov_basis(tm, start, 1e-12);
            let mw = &w.adjoint() * &(tm * &w);
            let test = power_norm_test(&mw, RESOLVENT_DOUBLINGS, 1e-9, spectral_norm);
            if !test.below_one {
                return Err(Error::NotConverged {
                    terms: 0,
                    tail: test.best_norm,
                    positive_invariant: invariant,
                });
            }
            let y = solve_linear(
                &(CMatrix::identity(w.cols()) - &mw),
                &(&w.adjoint() * start),
            )?;
            let sum = Superoperator::from_parts(h0, f1, &w * &y);
            Ok(ChannelContraction {
                s: maps.t00.add(&maps.t01.compose(&sum)),
                method,
                terms_used: 0,
                trace_ratio: ratio(&sum),
                converged: true,
                invariant_norm,
                tail: 0.0,
            })
        }
        ChannelMethod::Power => {
            let tp = decohere(&p.t, p.part_h, p.part_f)?;
            // T̃ = F̄₀ + T'∘R∘F̄₁ on L(F).
            let step = Superoperator::conjugation(&p.part_f.projector(0)).add(
                &tp.compose(&embed(p.part_h, 1))
                    .compose(&p.r)
                    .compose(&extract(p.part_f, 1)),
            );
            let mut y = tp.compose(&embed(p.part_h, 0));
            let out0 = extract(p.part_f, 0);
            let out1 = extract(p.part_f, 1);
            let mut sigma1 = Superoperator::zero(h0, f1);
            let mut stall = StallDetector::new(f1 * f1);
            let mut iterations = 1;
            loop {
                let x = out1.compose(&y);
                let mass = trace_norm(&x);
                if mass < tol {
                    return Ok(ChannelContraction {
                        s: out0.compose(&y),
                        method,
                        terms_used: iterations,
                        trace_ratio: ratio(&sigma1),
                        converged: true,
                        invariant_norm,
                        tail: mass,
                    });
                }
                if (invariant && stall.stalled(mass)) || iterations >= max_terms {
                    return Err(Error::NotConverged {
                        terms: iterations,
                        tail: mass,
                        positive_invariant: invariant,
                    });
                }
                sigma1 = sigma1.add(&x);
                y = step.compose(&y);
                iterations += 1;
            }
        }
    }
}

/// Flags a non-increasing sequence that has failed to decrease over a full window.
struct StallDetector {
    window: usize,
    history: Vec<f64>,
}

impl StallDetector {
    fn new(window: usize) -> Self {
        StallDetector {
            window: window.max(1),
            history: Vec::new(),
        }
    }

    fn stalled(&mut self, value: f64) -> bool {
        self.history.push(value);
        let n = self.history.len();
        n > self.window && value >= self.history[n - 1 - self.window] * (1.0 - 1e-12)
    }
}

/// One term `p · (ρ ↦ UρU†)` of a mixed-unitary map.
#[derive(Clone, Debug)]
pub struct WeightedUnitary {
    pub weight: f64,
    pub u: CMatrix,
}

/// Channel built from mixtures of unitaries between sectors.
///
/// `blocks[j][k]` lists the weighted unitaries `H_k → F_j`; `connections` the weighted
/// unitaries `F₁ → H₁`. Column weights must satisfy `p̄₀₀ + p̄₁₀ = 1`, `p̄₀₁ + p̄₁₁ = 1`
/// and the connection weights must sum to 1.
#[derive(Clone, Debug)]
pub struct BlockMixture {
    pub part_h: Partition,
    pub part_f: Partition,
    pub blocks: [[Vec<WeightedUnitary>; 2]; 2],
    pub connections: Vec<WeightedUnitary>,
}

impl BlockMixture {
    /// `p̄_jk`.
    pub fn total_weight(&self, j: usize, k: usize) -> f64 {
        self.blocks[j][k].iter().map(|w| w.weight).sum()
    }

    pub fn problem(&self) -> Result<ChannelProblem> {
        const WEIGHT_TOL: f64 = 1e-12;
        let (ph, pf) = (self.part_h, self.part_f);
        let mut t = Superoperator::zero(ph.total(), pf.total());
        for j in 0..2 {
            for k in 0..2 {
                for (m, term) in self.blocks[j][k].iter().enumerate() {
                    check_term(
                        term,
                        (pf.dim(j), ph.dim(k)),
                        &format!("block {j}{k} term {m}"),
                    )?;
                    let lifted = &(&pf.embedding(j) * &term.u) * &ph.embedding(k).adjoint();
                    t = t.add(&Superoperator::conjugation(&lifted).scale(term.weight));
                }
            }
        }
        for k in 0..2 {
            let col = self.total_weight(0, k) + self.total_weight(1, k);
            if ph.dim(k) > 0 && (col - 1.0).abs() > WEIGHT_TOL {
                return Err(Error::InvalidProblem(format!(
                    "weights into column {k} sum to {col}, expected 1"
                )));
            }
        }
        let mut r = Superoperator::zero(pf.dim1, ph.dim1);
        for (n, term) in self.connections.iter().enumerate() {
            check_term(term, (ph.dim1, pf.dim1), &format!("connection term {n}"))?;
            r = r.add(&Superoperator::conjugation(&term.u).scale(term.weight));
        }
        let q: f64 = self.connections.iter().map(|w| w.weight).sum();
        if pf.dim1 > 0 && (q - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidProblem(format!(
                "connection weights sum to {q}, expected 1"
            )));
        }
        ChannelProblem::new(t, r, ph, pf)
    }
}

fn check_term(term: &WeightedUnitary, shape: (usize, usize), what: &str) -> Result<()> {
    if term.weight.is_nan() || term.weight < 0.0 {
        return Err(Error::InvalidProblem(format!("{what}: negative weight")));
    }
    if term.u.shape() != shape {
        return Err(Error::InvalidProblem(format!(
            "{what}: unitary must be {}x{}, got {}x{}",
            shape.0,
            shape.1,
            term.u.rows(),
            term.u.cols()
        )));
    }
    if term.u.unitarity_residual() > 1e-10 {
        return Err(Error::InvalidProblem(format!(
            "{what}: matrix is not unitary"
        )));
    }
    Ok(())
}
