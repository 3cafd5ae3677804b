//! Seeded property checks with residuals, one suite per module.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{contract_channel, is_cptp, ChannelMethod, ChannelProblem, Superoperator};
use crate::error::{Error, Result};
use crate::graph::{
    graph_scattering, graph_scattering_block, graph_scattering_sequential, random_graph,
    star_scattering, VertexConditions,
};
use crate::linalg::random::{ginibre, haar_unitary};
use crate::linalg::{null_space, solve_linear, spectral_norm, Partition};
use crate::operator::{contract_operator, OperatorMethod, OperatorProblem};
use crate::unitary::{
    check_reciprocity, contract_unitary, kraus_operators, Method, UnitaryProblem,
};

/// Module names accepted by [`run_checks`].
pub const MODULES: [&str; 5] = [
    "linalg-core",
    "unitary-contraction",
    "operator-contraction",
    "channel-contraction",
    "quantum-graph",
];

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    /// Largest residual seen over all instances.
    pub residual: f64,
    pub tolerance: f64,
    pub instances: usize,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

struct Suite {
    rng: ChaCha8Rng,
    out: Vec<CheckOutcome>,
}

impl Suite {
    fn record(&mut self, name: &'static str, tolerance: f64, values: Vec<f64>) {
        self.out.push(CheckOutcome {
            name,
            residual: values.iter().copied().fold(0.0, f64::max),
            tolerance,
            instances: values.len(),
        });
    }

    fn problem(&mut self, max_dim: usize) -> UnitaryProblem {
        let d0 = self.rng.random_range(1..max_dim);
        let d1 = self.rng.random_range(1..=max_dim - d0);
        UnitaryProblem::random(d0, d1, &mut self.rng)
    }
}

/// Runs the property suite of `module` with instances drawn from `seed`.
pub fn run_checks(module: &str, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut s = Suite {
        rng: ChaCha8Rng::seed_from_u64(seed),
        out: Vec::new(),
    };
    match module {
        "linalg-core" => linalg(&mut s),
        "unitary-contraction" => unitary(&mut s)?,
        "operator-contraction" => operator(&mut s)?,
        "channel-contraction" => channel(&mut s)?,
        "quantum-graph" => graph(&mut s)?,
        other => {
            return Err(Error::InvalidProblem(format!(
                "unknown module `{other}` (expected one of {})",
                MODULES.join(", ")
            )))
        }
    }
    Ok(s.out)
}

fn linalg(s: &mut Suite) {
    let mut unit = Vec::new();
    let mut solve = Vec::new();
    let mut null = Vec::new();
    for _ in 0..50 {
        let n = s.rng.random_range(1..=12);
        unit.push(haar_unitary(n, &mut s.rng).unitarity_residual());
        let a = ginibre(n, n, &mut s.rng);
        let b = ginibre(n, 2, &mut s.rng);
        if let Ok(x) = solve_linear(&a, &b) {
            solve.push((&(&a * &x) - &b).max_abs() / (1.0 + b.max_abs()));
        }
        let low = &ginibre(n + 1, 1, &mut s.rng) * &ginibre(1, n + 1, &mut s.rng);
        let k = null_space(&low, 1e-9);
        null.push((&low * &k).max_abs() + (k.cols() as f64 - n as f64).abs());
    }
    s.record("haar_unitarity", 1e-12, unit);
    s.record("solve_residual", 1e-9, solve);
    s.record("rank_one_null_space", 1e-9, null);
}

fn unitary(s: &mut Suite) -> Result<()> {
    let mut unit = Vec::new();
    let mut agree = Vec::new();
    let mut kraus = Vec::new();
    let mut recip = Vec::new();
    for _ in 0..50 {
        let p = s.problem(10);
        let base = contract_unitary(&p, Method::BlockSolve, 1e-12, 1_000_000)?;
        unit.push(base.s.unitarity_residual());
        if base.convergence_n <= 0.99 {
            for m in [Method::Resolvent, Method::Series, Method::Power] {
                let r = contract_unitary(&p, m, 1e-12, 1_000_000)?;
                agree.push((&r.s - &base.s).max_abs());
            }
        }
        if base.convergence_n <= 0.9 {
            let k = kraus_operators(&p, 1e-9, 1_000_000)?;
            kraus.push(k.tail_bound.max(k.unital_defect).max(k.coherent_defect));
        }
        let w = check_reciprocity(&p, 1e-8)?;
        recip.push(if w.consistent() { 0.0 } else { 1.0 });
    }
    s.record("contraction_unitarity", 1e-8, unit);
    s.record("method_agreement", 1e-8, agree);
    s.record("kraus_completeness", 1e-7, kraus);
    s.record("reciprocity_criteria_agree", 0.0, recip);
    Ok(())
}

fn operator(s: &mut Suite) -> Result<()> {
    let mut vs_unitary = Vec::new();
    let mut method_gap = Vec::new();
    for _ in 0..50 {
        let p = s.problem(8);
        let base = contract_unitary(&p, Method::BlockSolve, 1e-12, 1)?;
        if base.convergence_n > 0.99 || base.v_basis.cols() > 0 {
            continue;
        }
        let op = OperatorProblem::from(&p);
        let r = contract_operator(&op, OperatorMethod::Resolvent, 1e-12, 1_000_000)?;
        vs_unitary.push((&r.s - &base.s).max_abs());
        let t = contract_operator(&op, OperatorMethod::Series, 1e-12, 1_000_000)?;
        method_gap.push((&t.s - &r.s).max_abs());
    }
    // Strictly contractive random feedback: the series always converges.
    for _ in 0..50 {
        let d0 = s.rng.random_range(1..4);
        let d1 = s.rng.random_range(1..4);
        let a = ginibre(d0 + d1, d0 + d1, &mut s.rng);
        let scale = 0.5 / spectral_norm(&a);
        let a = a.scale_real(scale);
        let b = ginibre(d1, d1, &mut s.rng);
        let b = b.scale_real(1.0 / spectral_norm(&b));
        let part = Partition::new(d0, d1);
        let op = OperatorProblem::new(a, b, part, part)?;
        let r = contract_operator(&op, OperatorMethod::Resolvent, 1e-12, 1_000_000)?;
        let p = contract_operator(&op, OperatorMethod::Power, 1e-12, 1_000_000)?;
        method_gap.push((&p.s - &r.s).max_abs());
    }
    s.record("unitary_case_matches", 1e-8, vs_unitary);
    s.record("method_agreement", 1e-8, method_gap);
    Ok(())
}

fn channel(s: &mut Suite) -> Result<()> {
    let mut vs_kraus = Vec::new();
    let mut cptp = Vec::new();
    let mut count = 0;
    while count < 30 {
        let p = s.problem(5);
        let base = contract_unitary(&p, Method::BlockSolve, 1e-12, 1)?;
        if base.convergence_n > 0.9 {
            continue;
        }
        count += 1;
        let ch = ChannelProblem::from_unitary(&p);
        let r = contract_channel(&ch, ChannelMethod::Series, 1e-10, 1_000_000)?;
        let k = kraus_operators(&p, 1e-10, 1_000_000)?;
        vs_kraus.push(r.s.max_abs_diff(&Superoperator::from_kraus(&k.ops)?));
        let rep = is_cptp(&r.s, 1e-8);
        cptp.push((-rep.choi_min_eigenvalue).max(0.0).max(rep.tp_residual));
    }
    s.record("unitary_channel_matches_kraus", 1e-7, vs_kraus);
    s.record("result_cptp", 1e-8, cptp);
    Ok(())
}

fn graph(s: &mut Suite) -> Result<()> {
    let mut unit = Vec::new();
    let mut routes = Vec::new();
    let mut order = Vec::new();
    let mut constant = Vec::new();
    for _ in 0..20 {
        let nv = s.rng.random_range(1..=6);
        let ne = s.rng.random_range(0..=10);
        let nl = s.rng.random_range(1..=3);
        let g = random_graph(nv, ne, nl, &mut s.rng);
        for _ in 0..5 {
            let k = s.rng.random_range(0.1..10.0);
            let a = match graph_scattering(&g, k) {
                Ok(a) => a,
                Err(Error::SingularMatrix { .. }) => continue,
                Err(e) => return Err(e),
            };
            unit.push(a.unitarity_residual());
            routes.push((&a - &graph_scattering_block(&g, k)?).max_abs());
            let mut perm: Vec<usize> = (0..g.internal_edges.len()).collect();
            perm.reverse();
            order.push((&a - &graph_scattering_sequential(&g, k, &perm)?).max_abs());
        }
    }
    let stars = [
        VertexConditions::dirichlet(3),
        VertexConditions::neumann(3),
        VertexConditions::kirchhoff(4),
    ];
    for v in &stars {
        let s0 = star_scattering(v, 0.1)?;
        for i in 1..=20 {
            let sk = star_scattering(v, 0.5 * i as f64)?;
            constant.push((&sk - &s0).max_abs());
        }
    }
    s.record("graph_unitarity", 1e-7, unit);
    s.record("block_formula_matches_contraction", 1e-9, routes);
    s.record("order_independence", 1e-8, order);
    s.record("standard_stars_constant_in_k", 1e-12, constant);
    Ok(())
}
