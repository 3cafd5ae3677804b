//! Graph scattering matrices by joining pairs of external leads into internal edges.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{cis, reciprocal_condition, solve_linear, CMatrix, Partition, SINGULAR_RCOND};
use crate::unitary::{contract_unitary, Method, UnitaryProblem};

use super::vertex::{star_scattering, VertexConditions};

/// Unitarity tolerance for scattering matrices handed to [`contract_scattering`].
pub const SCATTERING_UNITARITY_TOL: f64 = 1e-8;

/// Tolerance used when validating vertex conditions of a graph.
pub const VERTEX_TOL: f64 = 1e-9;

/// Two distinct leads `j`, `m` of a scattering matrix, joined by an edge of length `length`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeadPair {
    pub j: usize,
    pub m: usize,
    pub length: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GraphContractionSpec {
    pub pairs: Vec<LeadPair>,
}

impl GraphContractionSpec {
    pub fn new(pairs: Vec<LeadPair>) -> Self {
        GraphContractionSpec { pairs }
    }

    /// Checks that lengths are positive and finite and that every index is below `leads`
    /// and used at most once.
    pub fn validate(&self, leads: usize) -> Result<()> {
        let mut used = vec![false; leads];
        for (n, p) in self.pairs.iter().enumerate() {
            if !(p.length > 0.0 && p.length.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "pair {n}: length must be positive and finite, got {}",
                    p.length
                )));
            }
            for idx in [p.j, p.m] {
                if idx >= leads {
                    return Err(Error::InvalidSpec(format!(
                        "pair {n}: lead {idx} out of range for {leads} leads"
                    )));
                }
                if used[idx] {
                    return Err(Error::InvalidSpec(format!(
                        "pair {n}: lead {idx} is used more than once"
                    )));
                }
                used[idx] = true;
            }
        }
        Ok(())
    }

    fn contracted(&self) -> Vec<usize> {
        self.pairs.iter().flat_map(|p| [p.j, p.m]).collect()
    }

    /// Edge connection `⊕ [[0, ω], [ω, 0]]` with `ω = e^{ikl}`, in contracted-lead order.
    pub fn connection(&self, k: f64) -> CMatrix {
        let blocks: Vec<CMatrix> = self
            .pairs
            .iter()
            .map(|p| {
                let w = cis(k * p.length);
                CMatrix::from_rows(&[&[crate::linalg::ZERO, w], &[w, crate::linalg::ZERO]])
            })
            .collect();
        CMatrix::direct_sum_all(&blocks)
    }
}

/// Contracted scattering matrix and the input indices of its leads.
#[derive(Clone, Debug)]
pub struct ContractedScattering {
    pub s: CMatrix,
    /// `surviving[i]` is the input lead index of output lead `i`, in increasing order.
    pub surviving: Vec<usize>,
}

struct Split {
    surviving: Vec<usize>,
    contracted: Vec<usize>,
    s_ee: CMatrix,
    s_ei: CMatrix,
    s_ie: CMatrix,
    s_ii: CMatrix,
    omega: CMatrix,
}

fn split(s: &CMatrix, spec: &GraphContractionSpec, k: f64) -> Result<Split> {
    if !s.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "scattering matrix must be square, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidSpec(format!("k must be positive, got {k}")));
    }
    let res = s.unitarity_residual();
    if res > SCATTERING_UNITARITY_TOL {
        return Err(Error::InvalidProblem(format!(
            "scattering matrix is not unitary (‖S†S − I‖ = {res:.3e})"
        )));
    }
    spec.validate(s.rows())?;
    let contracted = spec.contracted();
    let surviving: Vec<usize> = (0..s.rows()).filter(|i| !contracted.contains(i)).collect();
    let omega = spec.connection(k);
    let rows_e = s.select_rows(&surviving);
    let rows_i = s.select_rows(&contracted);
    let split = Split {
        s_ee: rows_e.select_cols(&surviving),
        s_ei: rows_e.select_cols(&contracted),
        s_ie: rows_i.select_cols(&surviving),
        s_ii: rows_i.select_cols(&contracted),
        surviving,
        contracted,
        omega,
    };
    let rcond = reciprocal_condition(&(&split.omega.adjoint() - &split.s_ii));
    if rcond < SINGULAR_RCOND {
        return Err(Error::SingularMatrix { rcond });
    }
    Ok(split)
}

/// Joins each lead pair of `spec` into an internal edge at wave number `k`.
///
/// The contracted leads form sector 1 of a unitary contraction problem with the edge
/// phases as connection. At a resonance, where `Ω^{-1} − S_II` is singular, the result is
/// undefined and [`Error::SingularMatrix`] is returned.
pub fn contract_scattering(
    s: &CMatrix,
    spec: &GraphContractionSpec,
    k: f64,
) -> Result<ContractedScattering> {
    let sp = split(s, spec, k)?;
    if sp.contracted.is_empty() {
        return Ok(ContractedScattering {
            s: s.clone(),
            surviving: sp.surviving,
        });
    }
    let order: Vec<usize> = sp.surviving.iter().chain(&sp.contracted).copied().collect();
    let permuted = s.permute_symmetric(&order);
    let part = Partition::new(sp.surviving.len(), sp.contracted.len());
    let problem =
        UnitaryProblem::with_tolerance(permuted, sp.omega, part, part, SCATTERING_UNITARITY_TOL)?;
    let r = contract_unitary(&problem, Method::BlockSolve, 1e-12, 1)?;
    Ok(ContractedScattering {
        s: r.s,
        surviving: sp.surviving,
    })
}

/// Same contraction through `S_EE + S_EI (Ω^{-1} − S_II)^{-1} S_IE` directly.
pub fn contract_scattering_block(
    s: &CMatrix,
    spec: &GraphContractionSpec,
    k: f64,
) -> Result<ContractedScattering> {
    let sp = split(s, spec, k)?;
    if sp.contracted.is_empty() {
        return Ok(ContractedScattering {
            s: s.clone(),
            surviving: sp.surviving,
        });
    }
    let x = solve_linear(&(&sp.omega.adjoint() - &sp.s_ii), &sp.s_ie)?;
    Ok(ContractedScattering {
        s: &sp.s_ee + &(&sp.s_ei * &x),
        surviving: sp.surviving,
    })
}

/// A vertex end: local slot `slot` of vertex `vertex` (index into [`MetricGraph::vertices`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EndRef {
    pub vertex: usize,
    pub slot: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphVertex {
    pub id: String,
    pub conditions: VertexConditions,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InternalEdge {
    pub a: EndRef,
    pub b: EndRef,
    pub length: f64,
}

/// Vertices with boundary conditions, finite internal edges and semi-infinite leads.
///
/// The order of `leads` is the index order of the scattering matrix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricGraph {
    pub vertices: Vec<GraphVertex>,
    pub internal_edges: Vec<InternalEdge>,
    pub leads: Vec<EndRef>,
}

impl MetricGraph {
    /// Offset of the first end of each vertex in the direct sum of star matrices.
    fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.vertices.len());
        let mut pos = 0;
        for v in &self.vertices {
            out.push(pos);
            pos += v.conditions.degree();
        }
        out
    }

    fn global(&self, offsets: &[usize], e: EndRef) -> usize {
        offsets[e.vertex] + e.slot
    }

    /// Checks vertex conditions, edge lengths and that each end is used exactly once.
    pub fn validate(&self) -> Result<()> {
        if self.leads.is_empty() {
            return Err(Error::InvalidGraph("graph needs at least one lead".into()));
        }
        for v in &self.vertices {
            let r = v.conditions.validate(VERTEX_TOL);
            if !r.valid {
                return Err(Error::InvalidGraph(format!(
                    "vertex {}: conditions are not self-adjoint (rank defect {}, ‖AB† − BA†‖ = {:.3e})",
                    v.id, r.rank_defect, r.hermiticity_residual
                )));
            }
        }
        let offsets = self.offsets();
        let total: usize = self.vertices.iter().map(|v| v.conditions.degree()).sum();
        let mut seen = vec![false; total];
        let mut mark = |e: EndRef, what: &str| -> Result<()> {
            let Some(v) = self.vertices.get(e.vertex) else {
                return Err(Error::InvalidGraph(format!(
                    "{what} refers to vertex index {} which does not exist",
                    e.vertex
                )));
            };
            if e.slot >= v.conditions.degree() {
                return Err(Error::InvalidGraph(format!(
                    "{what}: vertex {} has degree {}, slot {} does not exist",
                    v.id,
                    v.conditions.degree(),
                    e.slot
                )));
            }
            let g = self.global(&offsets, e);
            if std::mem::replace(&mut seen[g], true) {
                return Err(Error::InvalidGraph(format!(
                    "{what}: end ({}, {}) is referenced more than once",
                    v.id, e.slot
                )));
            }
            Ok(())
        };
        for (n, e) in self.internal_edges.iter().enumerate() {
            if !(e.length > 0.0 && e.length.is_finite()) {
                return Err(Error::InvalidGraph(format!(
                    "internal edge {n}: length must be positive and finite, got {}",
                    e.length
                )));
            }
            mark(e.a, &format!("internal edge {n}"))?;
            mark(e.b, &format!("internal edge {n}"))?;
        }
        for (n, &e) in self.leads.iter().enumerate() {
            mark(e, &format!("lead {n}"))?;
        }
        if let Some(g) = seen.iter().position(|s| !s) {
            let v = offsets.iter().rposition(|&o| o <= g).unwrap_or(0);
            return Err(Error::InvalidGraph(format!(
                "end ({}, {}) is neither an internal edge nor a lead",
                self.vertices[v].id,
                g - offsets[v]
            )));
        }
        Ok(())
    }

    /// Direct sum of the star matrices, indexed by global end.
    fn star_sum(&self, k: f64) -> Result<CMatrix> {
        let stars = self
            .vertices
            .iter()
            .map(|v| star_scattering(&v.conditions, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(CMatrix::direct_sum_all(&stars))
    }

    fn edge_pair(&self, offsets: &[usize], e: &InternalEdge) -> LeadPair {
        LeadPair {
            j: self.global(offsets, e.a),
            m: self.global(offsets, e.b),
            length: e.length,
        }
    }

    /// Puts surviving global ends into `leads` order.
    fn to_lead_order(&self, offsets: &[usize], r: ContractedScattering) -> CMatrix {
        let perm: Vec<usize> = self
            .leads
            .iter()
            .map(|&e| {
                let g = self.global(offsets, e);
                r.surviving
                    .iter()
                    .position(|&x| x == g)
                    .expect("lead survives contraction")
            })
            .collect();
        r.s.permute_symmetric(&perm)
    }
}

/// Scattering matrix of `g` at wave number `k`, indexed by `g.leads`.
///
/// All internal edges are contracted at once from the direct sum of the star matrices.
pub fn graph_scattering(g: &MetricGraph, k: f64) -> Result<CMatrix> {
    g.validate()?;
    graph_scattering_unchecked(g, k, contract_scattering)
}

/// [`graph_scattering`] using the closed block formula instead of the generic contraction.
pub fn graph_scattering_block(g: &MetricGraph, k: f64) -> Result<CMatrix> {
    g.validate()?;
    graph_scattering_unchecked(g, k, contract_scattering_block)
}

pub(crate) fn graph_scattering_unchecked(
    g: &MetricGraph,
    k: f64,
    contract: fn(&CMatrix, &GraphContractionSpec, f64) -> Result<ContractedScattering>,
) -> Result<CMatrix> {
    let offsets = g.offsets();
    let s = g.star_sum(k)?;
    let spec = GraphContractionSpec::new(
        g.internal_edges
            .iter()
            .map(|e| g.edge_pair(&offsets, e))
            .collect(),
    );
    let r = contract(&s, &spec, k)?;
    Ok(g.to_lead_order(&offsets, r))
}

/// Contracts the internal edges one at a time, in the order given by `order`
/// (a permutation of edge indices).
pub fn graph_scattering_sequential(g: &MetricGraph, k: f64, order: &[usize]) -> Result<CMatrix> {
    g.validate()?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..g.internal_edges.len()).collect::<Vec<_>>() {
        return Err(Error::InvalidSpec(
            "edge order must be a permutation of the internal edge indices".into(),
        ));
    }
    let offsets = g.offsets();
    let mut s = g.star_sum(k)?;
    // labels[i] = global end currently at index i
    let mut labels: Vec<usize> = (0..s.rows()).collect();
    for &n in order {
        let e = g.edge_pair(&offsets, &g.internal_edges[n]);
        let pos = |x: usize| {
            labels
                .iter()
                .position(|&l| l == x)
                .expect("end not yet contracted")
        };
        let spec = GraphContractionSpec::new(vec![LeadPair {
            j: pos(e.j),
            m: pos(e.m),
            length: e.length,
        }]);
        let r = contract_scattering(&s, &spec, k)?;
        labels = r.surviving.iter().map(|&i| labels[i]).collect();
        s = r.s;
    }
    Ok(g.to_lead_order(
        &offsets,
        ContractedScattering {
            s,
            surviving: labels,
        },
    ))
}

/// Random connected-or-not graph with Haar-random vertex conditions.
///
/// Each of the `edges` internal edges joins two uniformly chosen vertices (loops allowed),
/// and each of the `leads` leads attaches to a uniformly chosen vertex. Vertices that end
/// up with no ends get one extra lead, so the lead count can exceed `leads`.
pub fn random_graph<R: Rng + ?Sized>(
    vertices: usize,
    edges: usize,
    leads: usize,
    rng: &mut R,
) -> MetricGraph {
    assert!(vertices > 0 && leads > 0);
    let mut degree = vec![0usize; vertices];
    let take = |v: usize, degree: &mut Vec<usize>| {
        let e = EndRef {
            vertex: v,
            slot: degree[v],
        };
        degree[v] += 1;
        e
    };
    let mut internal = Vec::with_capacity(edges);
    for _ in 0..edges {
        let a = rng.random_range(0..vertices);
        let b = rng.random_range(0..vertices);
        let ea = take(a, &mut degree);
        let eb = take(b, &mut degree);
        internal.push(InternalEdge {
            a: ea,
            b: eb,
            length: rng.random_range(0.2..3.0),
        });
    }
    let mut lead_ends = Vec::new();
    for _ in 0..leads {
        let v = rng.random_range(0..vertices);
        lead_ends.push(take(v, &mut degree));
    }
    for v in 0..vertices {
        if degree[v] == 0 {
            lead_ends.push(take(v, &mut degree));
        }
    }
    MetricGraph {
        vertices: degree
            .iter()
            .enumerate()
            .map(|(v, &d)| GraphVertex {
                id: format!("v{v}"),
                conditions: VertexConditions::random(d, rng),
            })
            .collect(),
        internal_edges: internal,
        leads: lead_ends,
    }
}
