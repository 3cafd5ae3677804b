//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit status on any failure.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use contraction_core::channel::{
    contract_channel, invariant_norm, is_cptp, positive_invariant_dim, sample_contraction,
    BlockMixture, ChannelMethod, ChannelProblem, Superoperator, WeightedUnitary,
};
use contraction_core::error::Error;
use contraction_core::graph::{
    graph_scattering, graph_scattering_block, graph_scattering_sequential, k_grid, random_graph,
    star_scattering, EndRef, GraphVertex, InternalEdge, MetricGraph, VertexConditions,
};
use contraction_core::linalg::random::{haar_unitary, random_density};
use contraction_core::linalg::{
    c, cis, random_unitary, spectral_norm, CMatrix, Partition, C64, ONE, ZERO,
};
use contraction_core::unitary::{
    check_reciprocity, contains_invariant_subspace, contract_unitary, kraus_operators, Method,
    UnitaryProblem,
};
use rand::seq::SliceRandom;
use rand::Rng;

const UNITARITY_TOL: f64 = 1e-8;
const METHOD_AGREEMENT_TOL: f64 = 1e-8;
const AGREEMENT_MAX_N: f64 = 0.99;
const JOINT_SYSTEM_TOL: f64 = 1e-10;
const PHASE_TOL: f64 = 1e-10;
const PHASE_GAP: f64 = 0.1;
const LAW_TOL: f64 = 1e-8;
const KRAUS_SUM_TOL: f64 = 1e-7;
const KRAUS_ADJOINT_TOL: f64 = 1e-10;
const STAR_TOL: f64 = 1e-12;
const INTERVAL_TOL: f64 = 1e-10;
const LOOP_TOL: f64 = 1e-10;
const BLOCK_FORMULA_TOL: f64 = 1e-9;
const ORDER_TOL: f64 = 1e-8;
const CHANNEL_KRAUS_TOL: f64 = 1e-7;
const CHANNEL_MAX_N: f64 = 0.95;
const CHOI_FLOOR: f64 = -1e-8;
const TP_TOL: f64 = 1e-8;
const TRACE_RATIO_TOL: f64 = 1e-8;
const STD_ERRORS: f64 = 3.0;
const TRAJECTORIES: u64 = 100_000;
const SPECTRAL_TOL: f64 = 1e-8;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn s_of(p: &UnitaryProblem, m: Method) -> CMatrix {
    contract_unitary(p, m, 1e-13, 1_000_000).unwrap().s
}

fn unitarity() -> Verdict {
    let mut g = rng(1001);
    let mut worst = 0.0f64;
    for i in 0..500 {
        let p = if i % 10 == 9 {
            // Decoupled second sector: the whole of F₁ is stripped.
            let a = g.random_range(1..=8);
            let b = g.random_range(1..=8);
            let u = haar_unitary(a, &mut g).direct_sum(&haar_unitary(b, &mut g));
            UnitaryProblem::symmetric(u, haar_unitary(b, &mut g), a).unwrap()
        } else {
            random_problem(&mut g, 16)
        };
        let s = contract_unitary(&p, Method::BlockSolve, 1e-12, 1)
            .unwrap()
            .s;
        worst = worst.max(s.unitarity_residual());
    }
    verdict(
        worst <= UNITARITY_TOL,
        format!("500 instances, max ‖S†S − I‖ = {worst:.2e}"),
    )
}

fn method_agreement() -> Verdict {
    let mut g = rng(1002);
    let mut worst_pair = 0.0f64;
    let mut used = 0;
    for _ in 0..300 {
        let p = random_problem(&mut g, 10);
        let base = contract_unitary(&p, Method::BlockSolve, 1e-12, 1).unwrap();
        if base.convergence_n > AGREEMENT_MAX_N {
            continue;
        }
        used += 1;
        let all: Vec<CMatrix> = Method::ALL.iter().map(|&m| s_of(&p, m)).collect();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                worst_pair = worst_pair.max(max_diff(&all[i], &all[j]));
            }
        }
    }
    let mut worst_joint = 0.0f64;
    for _ in 0..200 {
        let p = random_problem(&mut g, 4);
        let oracle = brute_force(&p);
        for m in Method::ALL {
            worst_joint = worst_joint.max(max_diff(&s_of(&p, m), &oracle));
        }
    }
    verdict(
        used > 0 && worst_pair <= METHOD_AGREEMENT_TOL && worst_joint <= JOINT_SYSTEM_TOL,
        format!(
            "{used} instances with N ≤ {AGREEMENT_MAX_N}: max pairwise {worst_pair:.2e}; \
             200 instances n ≤ 4 vs joint system: max {worst_joint:.2e}"
        ),
    )
}

fn beam_splitter_phase_law() -> Verdict {
    let mut g = rng(1003);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (t, r, w, om) = beam_splitter_params(&mut g, PHASE_GAP);
        let p = UnitaryProblem::symmetric(beam_splitter(t, r, w), CMatrix::scalar(om), 1).unwrap();
        let expected = beam_splitter_phase(t, w, om);
        for m in Method::ALL {
            worst = worst.max((s_of(&p, m)[(0, 0)] - expected).norm());
        }
    }
    let mut worst_degenerate = 0.0f64;
    let mut v1_seen = true;
    for _ in 0..10 {
        let tau = std::f64::consts::TAU;
        let t = cis(g.random_range(0.0..tau));
        let w = cis(g.random_range(0.0..tau));
        let om = t / w;
        let p =
            UnitaryProblem::symmetric(beam_splitter(t, ZERO, w), CMatrix::scalar(om), 1).unwrap();
        for m in Method::ALL {
            let r = contract_unitary(&p, m, 1e-13, 1_000_000).unwrap();
            worst_degenerate = worst_degenerate.max((r.s[(0, 0)] - t).norm());
            v1_seen &= r.v1_basis.cols() == 1;
        }
    }
    verdict(
        worst <= PHASE_TOL && worst_degenerate <= PHASE_TOL && v1_seen,
        format!(
            "50 generic: max error {worst:.2e}; 10 degenerate t = ωΩ: max |S − t| = {worst_degenerate:.2e}, dim V₁ = 1: {v1_seen}"
        ),
    )
}

fn algebraic_laws() -> Verdict {
    let mut g = rng(1004);
    let bs = |p: &UnitaryProblem| s_of(p, Method::BlockSolve);
    let (mut seq, mut inv, mut chiral, mut tensor) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let (a, b, cc) = (
            g.random_range(1..=3),
            g.random_range(1..=3),
            g.random_range(1..=3),
        );
        let u = haar_unitary(a + b + cc, &mut g);
        let (o1, o2) = (haar_unitary(b, &mut g), haar_unitary(cc, &mut g));
        let joint = bs(&UnitaryProblem::symmetric(u.clone(), o1.direct_sum(&o2), a).unwrap());
        let inner = bs(&UnitaryProblem::symmetric(u, o2, a + b).unwrap());
        let outer = bs(&UnitaryProblem::symmetric(inner, o1, a).unwrap());
        seq = seq.max(max_diff(&joint, &outer));
    }
    for _ in 0..100 {
        let p = random_problem(&mut g, 10);
        inv = inv.max(max_diff(&bs(&p.inverse()), &bs(&p).adjoint()));
    }
    for _ in 0..100 {
        let p = random_problem(&mut g, 10);
        let (ph, pf) = (p.part_h(), p.part_f());
        let (q0, q1) = (haar_unitary(ph.dim0, &mut g), haar_unitary(ph.dim1, &mut g));
        let (r0, r1) = (haar_unitary(pf.dim0, &mut g), haar_unitary(pf.dim1, &mut g));
        let u = &(&r0.direct_sum(&r1) * p.u()) * &q0.direct_sum(&q1);
        let lhs = bs(&UnitaryProblem::new(u, p.omega().clone(), ph, pf).unwrap());
        let om = &(&q1 * p.omega()) * &r1;
        let rhs = &(&r0 * &bs(&UnitaryProblem::new(p.u().clone(), om, ph, pf).unwrap())) * &q0;
        chiral = chiral.max(max_diff(&lhs, &rhs));
    }
    for _ in 0..100 {
        let p = random_problem(&mut g, 5);
        let d = g.random_range(1..=3);
        let v = haar_unitary(d, &mut g);
        let scale = |q: Partition| Partition::new(q.dim0 * d, q.dim1 * d);
        let big = UnitaryProblem::new(
            p.u().kron(&v),
            p.omega().kron(&v.adjoint()),
            scale(p.part_h()),
            scale(p.part_f()),
        )
        .unwrap();
        tensor = tensor.max(max_diff(&bs(&big), &bs(&p).kron(&v)));
    }
    verdict(
        seq.max(inv).max(chiral).max(tensor) <= LAW_TOL,
        format!(
            "100 each: sequential {seq:.2e}, inverse {inv:.2e}, chiral {chiral:.2e}, tensor {tensor:.2e}"
        ),
    )
}

fn reciprocity() -> Verdict {
    let mut g = rng(1005);
    let mut inconsistent = 0;
    let mut random_holds = 0;
    for _ in 0..120 {
        let w = check_reciprocity(&random_problem(&mut g, 8), 1e-8).unwrap();
        inconsistent += usize::from(!w.consistent());
        random_holds += usize::from(w.holds());
    }
    let mut inside_wrong = 0;
    for _ in 0..40 {
        let b = g.random_range(1..=3);
        let a = b + g.random_range(0..=2);
        let n = a + b;
        let target = |col: usize| if col >= a { col - a } else { b + col };
        let perm = CMatrix::from_fn(n, n, |r, col| if target(col) == r { ONE } else { ZERO });
        let part = Partition::new(a, b);
        let u = &(&sector_local(part, &mut g) * &perm) * &sector_local(part, &mut g);
        let p = UnitaryProblem::symmetric(u, haar_unitary(b, &mut g), a).unwrap();
        let w = check_reciprocity(&p, 1e-8).unwrap();
        inconsistent += usize::from(!w.consistent());
        inside_wrong += usize::from(!w.holds());
    }
    let mut decoupled_wrong = 0;
    for _ in 0..40 {
        let (a, b) = (g.random_range(1..=3), g.random_range(1..=3));
        let u = haar_unitary(a, &mut g).direct_sum(&haar_unitary(b, &mut g));
        let p = UnitaryProblem::symmetric(u, haar_unitary(b, &mut g), a).unwrap();
        let w = check_reciprocity(&p, 1e-8).unwrap();
        inconsistent += usize::from(!w.consistent());
        decoupled_wrong += usize::from(w.holds());
    }
    verdict(
        inconsistent == 0 && inside_wrong == 0 && decoupled_wrong == 0,
        format!(
            "200 instances: {inconsistent} disagreements; random holds {random_holds}/120; \
             UH₁ ⊆ F₀ wrong {inside_wrong}/40; decoupled UΩ ≠ I wrong {decoupled_wrong}/40"
        ),
    )
}

fn kraus() -> Verdict {
    let mut g = rng(1006);
    let (mut comp, mut unital, mut coherent, mut adjoint) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = random_problem(&mut g, 6);
        let k = kraus_operators(&p, 1e-9, 1_000_000).unwrap();
        let (h0, f0) = (p.part_h().dim0, p.part_f().dim0);
        let mut sum_aa = CMatrix::zeros(h0, h0);
        let mut sum_aa_t = CMatrix::zeros(f0, f0);
        let mut sum = CMatrix::zeros(f0, h0);
        for a in &k.ops {
            sum_aa += &(&a.adjoint() * a);
            sum_aa_t += &(a * &a.adjoint());
            sum += a;
        }
        comp = comp.max(spectral_norm(&(&sum_aa - &CMatrix::identity(h0))));
        unital = unital.max(spectral_norm(&(&sum_aa_t - &CMatrix::identity(f0))));
        coherent = coherent.max(spectral_norm(&(&sum - &s_of(&p, Method::BlockSolve))));
        let back = kraus_operators(&p.inverse(), 1e-9, 1_000_000).unwrap();
        for (a, b) in k.ops.iter().zip(&back.ops) {
            adjoint = adjoint.max(max_diff(&a.adjoint(), b));
        }
    }
    verdict(
        comp <= KRAUS_SUM_TOL
            && unital <= KRAUS_SUM_TOL
            && coherent <= KRAUS_SUM_TOL
            && adjoint <= KRAUS_ADJOINT_TOL,
        format!(
            "100 instances: completeness {comp:.2e}, unitality {unital:.2e}, coherent sum {coherent:.2e}, adjoint terms {adjoint:.2e}"
        ),
    )
}

fn single_vertex(v: VertexConditions, edges: Vec<InternalEdge>, leads: Vec<EndRef>) -> MetricGraph {
    MetricGraph {
        vertices: vec![GraphVertex {
            id: "v".into(),
            conditions: v,
        }],
        internal_edges: edges,
        leads,
    }
}

fn graph_closed_forms() -> Verdict {
    let mut star = 0.0f64;
    let swap = CMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]);
    for k in [0.3, 1.0, 2.7, 9.5] {
        for d in 1..=5 {
            let id = CMatrix::identity(d);
            let dir = star_scattering(&VertexConditions::dirichlet(d), k).unwrap();
            let neu = star_scattering(&VertexConditions::neumann(d), k).unwrap();
            star = star.max(max_diff(&dir, &id.scale_real(-1.0)));
            star = star.max(max_diff(&neu, &id));
        }
        let kir = star_scattering(&VertexConditions::kirchhoff(2), k).unwrap();
        star = star.max(max_diff(&kir, &swap));
    }

    let l = 1.3;
    let interval = MetricGraph {
        vertices: vec![
            GraphVertex {
                id: "a".into(),
                conditions: VertexConditions::kirchhoff(2),
            },
            GraphVertex {
                id: "b".into(),
                conditions: VertexConditions::kirchhoff(2),
            },
        ],
        internal_edges: vec![InternalEdge {
            a: EndRef { vertex: 0, slot: 1 },
            b: EndRef { vertex: 1, slot: 0 },
            length: l,
        }],
        leads: vec![EndRef { vertex: 0, slot: 0 }, EndRef { vertex: 1, slot: 1 }],
    };
    let mut interval_err = 0.0f64;
    for k in k_grid(0.1, 10.0, 100).unwrap() {
        let w = cis(k * l);
        let expected = CMatrix::from_rows(&[&[ZERO, w], &[w, ZERO]]);
        interval_err = interval_err.max(max_diff(
            &graph_scattering(&interval, k).unwrap(),
            &expected,
        ));
    }

    let lp = 1.0;
    let self_loop = single_vertex(
        VertexConditions::kirchhoff(3),
        vec![InternalEdge {
            a: EndRef { vertex: 0, slot: 1 },
            b: EndRef { vertex: 0, slot: 2 },
            length: lp,
        }],
        vec![EndRef { vertex: 0, slot: 0 }],
    );
    let third = c(1.0 / 3.0, 0.0);
    let mut loop_err = 0.0f64;
    for k in k_grid(0.1, 6.0, 100).unwrap() {
        let w = cis(k * lp);
        let expected: C64 = (w - third) / (ONE - w * third);
        loop_err =
            loop_err.max((graph_scattering(&self_loop, k).unwrap()[(0, 0)] - expected).norm());
    }
    let at_pi = graph_scattering(&self_loop, std::f64::consts::PI / lp).unwrap()[(0, 0)];
    let pi_err = (at_pi + ONE).norm();
    verdict(
        star <= STAR_TOL && interval_err <= INTERVAL_TOL && loop_err <= LOOP_TOL && pi_err <= LOOP_TOL,
        format!(
            "stars {star:.2e}; interval over 100 k {interval_err:.2e}; self-loop over 100 k {loop_err:.2e}; |S + 1| at kl = π {pi_err:.2e}"
        ),
    )
}

fn graph_paths() -> Verdict {
    let mut g = rng(1008);
    let (mut block, mut order) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let graph = random_graph(
            g.random_range(1..=6),
            g.random_range(1..=10),
            g.random_range(1..=4),
            &mut g,
        );
        let k = g.random_range(0.1..10.0);
        let direct = graph_scattering(&graph, k).unwrap();
        block = block.max(max_diff(
            &direct,
            &graph_scattering_block(&graph, k).unwrap(),
        ));
        let mut perm: Vec<usize> = (0..graph.internal_edges.len()).collect();
        let first = graph_scattering_sequential(&graph, k, &perm).unwrap();
        perm.shuffle(&mut g);
        let second = graph_scattering_sequential(&graph, k, &perm).unwrap();
        order = order
            .max(max_diff(&first, &second))
            .max(max_diff(&first, &direct));
    }
    verdict(
        block <= BLOCK_FORMULA_TOL && order <= ORDER_TOL,
        format!("50 random graphs: block formula {block:.2e}, edge order {order:.2e}"),
    )
}

fn channel_contraction() -> Verdict {
    let mut g = rng(1009);
    let (mut kraus_err, mut choi_min, mut tp) = (0.0f64, f64::INFINITY, 0.0f64);
    let mut accepted = 0;
    while accepted < 100 {
        let p = random_problem(&mut g, 8);
        let base = contract_unitary(&p, Method::BlockSolve, 1e-12, 1).unwrap();
        if base.convergence_n > CHANNEL_MAX_N {
            continue;
        }
        accepted += 1;
        let k = kraus_operators(&p, 1e-11, 1_000_000).unwrap();
        let expected = Superoperator::from_kraus(&k.ops).unwrap();
        let r = contract_channel(
            &ChannelProblem::from_unitary(&p),
            ChannelMethod::Series,
            1e-11,
            1_000_000,
        )
        .unwrap();
        kraus_err = kraus_err.max(r.s.max_abs_diff(&expected));
        let rep = is_cptp(&r.s, 1e-8);
        choi_min = choi_min.min(rep.choi_min_eigenvalue);
        tp = tp.max(rep.tp_residual);
    }
    verdict(
        kraus_err <= CHANNEL_KRAUS_TOL && choi_min >= CHOI_FLOOR && tp <= TP_TOL,
        format!(
            "100 unitary pairs: vs Kraus sum {kraus_err:.2e}, min Choi eigenvalue {choi_min:.2e}, TP residual {tp:.2e}"
        ),
    )
}

fn mixture(p10: f64, p11: f64) -> BlockMixture {
    let w = |weight: f64, seed: u64| WeightedUnitary {
        weight,
        u: random_unitary(2, seed),
    };
    let part = Partition::new(2, 2);
    BlockMixture {
        part_h: part,
        part_f: part,
        blocks: [
            [
                vec![w((1.0 - p10) * 0.4, 11), w((1.0 - p10) * 0.6, 12)],
                vec![w(1.0 - p11, 13)],
            ],
            [vec![w(p10, 14)], vec![w(p11 * 0.3, 15), w(p11 * 0.7, 16)]],
        ],
        connections: vec![w(0.25, 17), w(0.75, 18)],
    }
}

fn flagged_divergence(p: &ChannelProblem) -> bool {
    [
        ChannelMethod::Series,
        ChannelMethod::Resolvent,
        ChannelMethod::Power,
    ]
    .iter()
    .all(|&m| {
        matches!(
            contract_channel(p, m, 1e-9, 1_000_000),
            Err(Error::NotConverged {
                positive_invariant: true,
                ..
            })
        )
    })
}

fn divergence_detection() -> Verdict {
    let k0 = CMatrix::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]);
    let k1 = CMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]);
    let part = Partition::new(1, 1);
    let replacement = ChannelProblem::new(
        Superoperator::from_kraus(&[k0, k1]).unwrap(),
        Superoperator::identity(1),
        part,
        part,
    )
    .unwrap();
    let replacement_flagged = flagged_divergence(&replacement);

    let stuck_flagged = [0.2, 0.5, 1.0]
        .iter()
        .all(|&p10| flagged_divergence(&mixture(p10, 1.0).problem().unwrap()));

    let mut ratio_err = 0.0f64;
    for (p10, p11) in [(0.3, 0.6), (0.5, 0.5), (0.8, 0.2), (0.1, 0.9), (1.0, 0.0)] {
        let r = contract_channel(
            &mixture(p10, p11).problem().unwrap(),
            ChannelMethod::Series,
            1e-13,
            1_000_000,
        )
        .unwrap();
        let expected = p10 / (1.0 - p11);
        ratio_err = ratio_err.max((r.trace_ratio.unwrap() - expected).abs());
    }
    verdict(
        replacement_flagged && stuck_flagged && ratio_err <= TRACE_RATIO_TOL,
        format!(
            "replacement channel flagged: {replacement_flagged}; p̄₁₁ = 1 flagged: {stuck_flagged}; \
             trace ratio error {ratio_err:.2e}"
        ),
    )
}

fn within(estimate: f64, exact: f64, se: f64) -> bool {
    (estimate - exact).abs() <= STD_ERRORS * se + 1e-12
}

/// Deviation in standard errors, ignoring deviations at roundoff level.
fn z_score(d: f64, se: f64) -> f64 {
    if d.abs() <= 1e-12 {
        0.0
    } else {
        d.abs() / se
    }
}

fn monte_carlo() -> Verdict {
    let (t, r) = (0.6, 0.8);
    let u = beam_splitter(c(t, 0.0), c(r, 0.0), ONE);
    let p = UnitaryProblem::symmetric(u, CMatrix::identity(1), 1).unwrap();
    let cp = ChannelProblem::from_unitary(&p);
    let rho = CMatrix::identity(1);
    let exact = contract_channel(&cp, ChannelMethod::Series, 1e-13, 1_000_000)
        .unwrap()
        .s
        .apply(&rho);
    let rep = sample_contraction(&cp, &rho, TRAJECTORIES, 2024, 10_000).unwrap();
    let mut ok = within(
        rep.estimate[(0, 0)].re,
        exact[(0, 0)].re,
        rep.std_error_re[(0, 0)].re,
    );
    let mut worst_z = 0.0f64;
    for n in 1..=6 {
        let expected = if n == 1 {
            t * t
        } else {
            r.powi(4) * t.powi(2 * (n as i32 - 2))
        };
        let (f, se) = (rep.stop_fraction(n), rep.stop_fraction_error(n));
        ok &= within(f, expected, se);
        worst_z = worst_z.max(z_score(f - expected, se));
    }
    let first_two = (rep.stop_fraction(1), rep.stop_fraction(2));

    let mut g = rng(1011);
    let wide = loop {
        let q = UnitaryProblem::random(2, 2, &mut g);
        let n = contract_unitary(&q, Method::BlockSolve, 1e-12, 1)
            .unwrap()
            .convergence_n;
        if n <= 0.9 {
            break q;
        }
    };
    let wide_cp = ChannelProblem::from_unitary(&wide);
    let rho2 = random_density(2, &mut g);
    let exact2 = contract_channel(&wide_cp, ChannelMethod::Series, 1e-13, 1_000_000)
        .unwrap()
        .s
        .apply(&rho2);
    let rep2 = sample_contraction(&wide_cp, &rho2, TRAJECTORIES, 2025, 10_000).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let (e, x) = (rep2.estimate[(i, j)], exact2[(i, j)]);
            ok &= within(e.re, x.re, rep2.std_error_re[(i, j)].re);
            ok &= within(e.im, x.im, rep2.std_error_im[(i, j)].re);
            for (d, se) in [
                (e.re - x.re, rep2.std_error_re[(i, j)].re),
                (e.im - x.im, rep2.std_error_im[(i, j)].re),
            ] {
                worst_z = worst_z.max(z_score(d, se));
            }
        }
    }
    verdict(
        ok,
        format!(
            "{TRAJECTORIES} trajectories: stop fractions {:.4}, {:.4} (expected {:.4}, {:.4}); \
             worst deviation {worst_z:.2} standard errors",
            first_two.0,
            first_two.1,
            9.0 / 25.0,
            256.0 / 625.0
        ),
    )
}

fn spectral_criteria() -> Verdict {
    let mut g = rng(1012);
    let mut subspace_wrong = 0;
    for i in 0..200 {
        let inst = subspace_instance(&mut g, i % 2 == 0);
        let truth = span_contains_eigenvector(&inst.m, &inst.w);
        let verdict = contains_invariant_subspace(&inst.m, &inst.w, SPECTRAL_TOL);
        subspace_wrong += usize::from(verdict != truth || truth != inst.planted);
    }
    let mut channel_wrong = 0;
    for i in 0..200 {
        let lossy = lossy_map(&mut g, i % 2 == 0);
        let truth = spectral_radius(lossy.t.matrix()) >= 1.0 - SPECTRAL_TOL;
        let by_norm = invariant_norm(&lossy.t) >= 1.0 - SPECTRAL_TOL;
        let by_dim = positive_invariant_dim(&lossy.t, 1e-9) > 0;
        channel_wrong += usize::from(by_norm != truth || by_dim != truth || truth != (i % 2 == 0));
    }
    verdict(
        subspace_wrong == 0 && channel_wrong == 0,
        format!(
            "invariant subspaces: {subspace_wrong}/200 wrong; trace-preserved positive subspaces: {channel_wrong}/200 wrong"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("01 contraction unitarity", unitarity),
        ("02 method agreement", method_agreement),
        ("03 beam splitter phase", beam_splitter_phase_law),
        ("04 algebraic laws", algebraic_laws),
        ("05 reciprocity", reciprocity),
        ("06 kraus completeness and unitality", kraus),
        ("07 graph closed forms", graph_closed_forms),
        ("08 graph block formula and order", graph_paths),
        ("09 channel contraction", channel_contraction),
        ("10 divergence detection", divergence_detection),
        ("11 monte carlo consistency", monte_carlo),
        ("12 spectral criteria", spectral_criteria),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let status = if v.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!v.pass);
        println!(
            "{status} {name}: {} ({:.1}s)",
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
