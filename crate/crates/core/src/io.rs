//! JSON documents for matrices, problems, channels, graphs and networks.
//!
//! A matrix is `{"rows": r, "cols": c, "data": [[re, im], ...]}` with `data` in row-major
//! order. Writers print every float with 17 significant digits, so a written matrix
//! reads back bit for bit.

use std::collections::HashMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::channel::{ChannelProblem, SampleReport, Superoperator};
use crate::error::{Error, Result};
use crate::graph::{EndRef, GraphVertex, InternalEdge, MetricGraph, VertexConditions};
use crate::linalg::{c, CMatrix, Partition};
use crate::network::{Connection, NetworkNode, NetworkSpec};
use crate::operator::OperatorProblem;
use crate::unitary::{povm, KrausSet, UnitaryProblem};

/// Vectorization convention tag carried by superoperator documents.
pub const VEC_CONVENTION: &str = "vec=column";

/// Float written with 17 significant digits.
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom(format!(
                "cannot write non-finite value {}",
                self.0
            )));
        }
        let raw =
            RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct MatrixOut {
    rows: usize,
    cols: usize,
    data: Vec<[Num; 2]>,
}

impl From<&CMatrix> for MatrixOut {
    fn from(m: &CMatrix) -> Self {
        MatrixOut {
            rows: m.rows(),
            cols: m.cols(),
            data: m
                .to_row_major()
                .into_iter()
                .map(|z| [Num(z.re), Num(z.im)])
                .collect(),
        }
    }
}

impl MatrixDoc {
    fn into_matrix(self, field: &str) -> Result<CMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::format(
                format!("{field}.data"),
                format!(
                    "expected {} entries for a {}x{} matrix, found {}",
                    self.rows * self.cols,
                    self.rows,
                    self.cols,
                    self.data.len()
                ),
            ));
        }
        if let Some(i) = self
            .data
            .iter()
            .position(|z| !(z[0].is_finite() && z[1].is_finite()))
        {
            return Err(Error::format(
                format!("{field}.data[{i}]"),
                "entries must be finite",
            ));
        }
        let entries: Vec<_> = self.data.iter().map(|z| c(z[0], z[1])).collect();
        Ok(CMatrix::from_row_slice(self.rows, self.cols, &entries))
    }
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

/// Reads a whole file as UTF-8 text.
pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    parse::<MatrixDoc>(text)?.into_matrix("matrix")
}

pub fn matrix_to_json(m: &CMatrix) -> Result<String> {
    to_json(&MatrixOut::from(m))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    #[serde(rename = "U", alias = "A")]
    u: MatrixDoc,
    #[serde(rename = "Omega", alias = "B")]
    omega: MatrixDoc,
    #[serde(rename = "dimH0")]
    dim_h0: usize,
    #[serde(rename = "dimH1")]
    dim_h1: usize,
    #[serde(rename = "dimF0")]
    dim_f0: usize,
    #[serde(rename = "dimF1")]
    dim_f1: usize,
}

#[derive(Serialize)]
struct ProblemOut {
    #[serde(rename = "U")]
    u: MatrixOut,
    #[serde(rename = "Omega")]
    omega: MatrixOut,
    #[serde(rename = "dimH0")]
    dim_h0: usize,
    #[serde(rename = "dimH1")]
    dim_h1: usize,
    #[serde(rename = "dimF0")]
    dim_f0: usize,
    #[serde(rename = "dimF1")]
    dim_f1: usize,
}

impl ProblemDoc {
    fn into_parts(self) -> Result<(CMatrix, CMatrix, Partition, Partition)> {
        let part_h = Partition::new(self.dim_h0, self.dim_h1);
        let part_f = Partition::new(self.dim_f0, self.dim_f1);
        Ok((
            self.u.into_matrix("U")?,
            self.omega.into_matrix("Omega")?,
            part_h,
            part_f,
        ))
    }
}

/// Problem document with fields `U`, `Omega`, `dimH0`, `dimH1`, `dimF0`, `dimF1`.
pub fn parse_unitary_problem(text: &str) -> Result<UnitaryProblem> {
    let (u, omega, h, f) = parse::<ProblemDoc>(text)?.into_parts()?;
    UnitaryProblem::new(u, omega, h, f)
}

/// Same layout as [`parse_unitary_problem`] without the unitarity check. `A` and `B` are
/// accepted as aliases of `U` and `Omega`.
pub fn parse_operator_problem(text: &str) -> Result<OperatorProblem> {
    let (a, b, h, f) = parse::<ProblemDoc>(text)?.into_parts()?;
    OperatorProblem::new(a, b, h, f)
}

pub fn unitary_problem_to_json(p: &UnitaryProblem) -> Result<String> {
    let (h, f) = (p.part_h(), p.part_f());
    to_json(&ProblemOut {
        u: p.u().into(),
        omega: p.omega().into(),
        dim_h0: h.dim0,
        dim_h1: h.dim1,
        dim_f0: f.dim0,
        dim_f1: f.dim1,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuperopDoc {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
    dim_in: usize,
    dim_out: usize,
    convention: String,
}

#[derive(Serialize)]
struct SuperopOut {
    rows: usize,
    cols: usize,
    data: Vec<[Num; 2]>,
    dim_in: usize,
    dim_out: usize,
    convention: &'static str,
}

impl SuperopDoc {
    fn into_superop(self, field: &str) -> Result<Superoperator> {
        if self.convention != VEC_CONVENTION {
            return Err(Error::format(
                format!("{field}.convention"),
                format!(
                    "expected \"{VEC_CONVENTION}\", found \"{}\"",
                    self.convention
                ),
            ));
        }
        let m = MatrixDoc {
            rows: self.rows,
            cols: self.cols,
            data: self.data,
        }
        .into_matrix(field)?;
        Superoperator::new(self.dim_in, self.dim_out, m)
    }
}

impl From<&Superoperator> for SuperopOut {
    fn from(t: &Superoperator) -> Self {
        let m = MatrixOut::from(t.matrix());
        SuperopOut {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
            dim_in: t.dim_in(),
            dim_out: t.dim_out(),
            convention: VEC_CONVENTION,
        }
    }
}

pub fn parse_superoperator(text: &str) -> Result<Superoperator> {
    parse::<SuperopDoc>(text)?.into_superop("superoperator")
}

pub fn superoperator_to_json(t: &Superoperator) -> Result<String> {
    to_json(&SuperopOut::from(t))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDoc {
    #[serde(rename = "T")]
    t: SuperopDoc,
    #[serde(rename = "R")]
    r: SuperopDoc,
    #[serde(rename = "dimH0")]
    dim_h0: usize,
    #[serde(rename = "dimH1")]
    dim_h1: usize,
    #[serde(rename = "dimF0")]
    dim_f0: usize,
    #[serde(rename = "dimF1")]
    dim_f1: usize,
}

#[derive(Serialize)]
struct ChannelOut {
    #[serde(rename = "T")]
    t: SuperopOut,
    #[serde(rename = "R")]
    r: SuperopOut,
    #[serde(rename = "dimH0")]
    dim_h0: usize,
    #[serde(rename = "dimH1")]
    dim_h1: usize,
    #[serde(rename = "dimF0")]
    dim_f0: usize,
    #[serde(rename = "dimF1")]
    dim_f1: usize,
}

/// Channel problem: superoperators `T` (on `H → F`) and `R` (on `F₁ → H₁`) plus the four
/// sector dimensions.
pub fn parse_channel_problem(text: &str) -> Result<ChannelProblem> {
    let doc: ChannelDoc = parse(text)?;
    ChannelProblem::new(
        doc.t.into_superop("T")?,
        doc.r.into_superop("R")?,
        Partition::new(doc.dim_h0, doc.dim_h1),
        Partition::new(doc.dim_f0, doc.dim_f1),
    )
}

pub fn channel_problem_to_json(p: &ChannelProblem) -> Result<String> {
    let (h, f) = (p.part_h(), p.part_f());
    to_json(&ChannelOut {
        t: p.t().into(),
        r: p.r().into(),
        dim_h0: h.dim0,
        dim_h1: h.dim1,
        dim_f0: f.dim0,
        dim_f1: f.dim1,
    })
}

/// Vertex identifier, written either as a string or an integer.
#[derive(Deserialize)]
#[serde(untagged)]
enum IdDoc {
    Str(String),
    Int(i64),
}

impl IdDoc {
    fn into_string(self) -> String {
        match self {
            IdDoc::Str(s) => s,
            IdDoc::Int(i) => i.to_string(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexDoc {
    id: IdDoc,
    #[serde(rename = "A")]
    a: MatrixDoc,
    #[serde(rename = "B")]
    b: MatrixDoc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    va: IdDoc,
    ea: usize,
    vb: IdDoc,
    eb: usize,
    length: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LeadDoc {
    v: IdDoc,
    e: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    vertices: Vec<VertexDoc>,
    #[serde(default)]
    internal_edges: Vec<EdgeDoc>,
    leads: Vec<LeadDoc>,
}

#[derive(Serialize)]
struct VertexOut<'a> {
    id: &'a str,
    #[serde(rename = "A")]
    a: MatrixOut,
    #[serde(rename = "B")]
    b: MatrixOut,
}

#[derive(Serialize)]
struct EdgeOut<'a> {
    va: &'a str,
    ea: usize,
    vb: &'a str,
    eb: usize,
    length: Num,
}

#[derive(Serialize)]
struct LeadOut<'a> {
    v: &'a str,
    e: usize,
}

#[derive(Serialize)]
struct GraphOut<'a> {
    vertices: Vec<VertexOut<'a>>,
    internal_edges: Vec<EdgeOut<'a>>,
    leads: Vec<LeadOut<'a>>,
}

/// Graph document with `vertices` (`id`, `A`, `B`), `internal_edges` (`va`, `ea`, `vb`,
/// `eb`, `length`) and `leads` (`v`, `e`). Ends are named by vertex id and local slot.
///
/// The graph is returned unvalidated beyond the references; call
/// [`MetricGraph::validate`] for the self-adjointness and end-usage checks.
pub fn parse_graph(text: &str) -> Result<MetricGraph> {
    let doc: GraphDoc = parse(text)?;
    let mut index = HashMap::new();
    let mut vertices = Vec::with_capacity(doc.vertices.len());
    for (n, v) in doc.vertices.into_iter().enumerate() {
        let id = v.id.into_string();
        if index.insert(id.clone(), n).is_some() {
            return Err(Error::format(
                format!("vertices[{n}].id"),
                format!("duplicate vertex id \"{id}\""),
            ));
        }
        let a = v.a.into_matrix(&format!("vertices[{n}].A"))?;
        let b = v.b.into_matrix(&format!("vertices[{n}].B"))?;
        let conditions = VertexConditions::new(a, b)
            .map_err(|e| Error::format(format!("vertices[{n}]"), e.to_string()))?;
        vertices.push(GraphVertex { id, conditions });
    }
    let lookup = |id: IdDoc, field: String| -> Result<usize> {
        let id = id.into_string();
        index
            .get(&id)
            .copied()
            .ok_or_else(|| Error::format(field, format!("unknown vertex id \"{id}\"")))
    };
    let mut internal_edges = Vec::with_capacity(doc.internal_edges.len());
    for (n, e) in doc.internal_edges.into_iter().enumerate() {
        internal_edges.push(InternalEdge {
            a: EndRef {
                vertex: lookup(e.va, format!("internal_edges[{n}].va"))?,
                slot: e.ea,
            },
            b: EndRef {
                vertex: lookup(e.vb, format!("internal_edges[{n}].vb"))?,
                slot: e.eb,
            },
            length: e.length,
        });
    }
    let mut leads = Vec::with_capacity(doc.leads.len());
    for (n, l) in doc.leads.into_iter().enumerate() {
        leads.push(EndRef {
            vertex: lookup(l.v, format!("leads[{n}].v"))?,
            slot: l.e,
        });
    }
    Ok(MetricGraph {
        vertices,
        internal_edges,
        leads,
    })
}

pub fn graph_to_json(g: &MetricGraph) -> Result<String> {
    let id = |v: usize| g.vertices[v].id.as_str();
    to_json(&GraphOut {
        vertices: g
            .vertices
            .iter()
            .map(|v| VertexOut {
                id: &v.id,
                a: (&v.conditions.a).into(),
                b: (&v.conditions.b).into(),
            })
            .collect(),
        internal_edges: g
            .internal_edges
            .iter()
            .map(|e| EdgeOut {
                va: id(e.a.vertex),
                ea: e.a.slot,
                vb: id(e.b.vertex),
                eb: e.b.slot,
                length: Num(e.length),
            })
            .collect(),
        leads: g
            .leads
            .iter()
            .map(|l| LeadOut {
                v: id(l.vertex),
                e: l.slot,
            })
            .collect(),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    #[serde(rename = "U")]
    u: MatrixDoc,
    input_dims: Vec<usize>,
    output_dims: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConnectionDoc {
    to: usize,
    from: usize,
    #[serde(rename = "Omega")]
    omega: MatrixDoc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    connections: Vec<ConnectionDoc>,
}

#[derive(Serialize)]
struct NodeOut<'a> {
    #[serde(rename = "U")]
    u: MatrixOut,
    input_dims: &'a [usize],
    output_dims: &'a [usize],
}

#[derive(Serialize)]
struct ConnectionOut {
    to: usize,
    from: usize,
    #[serde(rename = "Omega")]
    omega: MatrixOut,
}

#[derive(Serialize)]
struct NetworkOut<'a> {
    nodes: Vec<NodeOut<'a>>,
    connections: Vec<ConnectionOut>,
}

/// Network document: `nodes` (`U`, `input_dims`, `output_dims`) and `connections`
/// (`to`, `from`, `Omega`), with 1-based node numbers.
pub fn parse_network(text: &str) -> Result<NetworkSpec> {
    let doc: NetworkDoc = parse(text)?;
    let nodes = doc
        .nodes
        .into_iter()
        .enumerate()
        .map(|(n, d)| {
            Ok(NetworkNode {
                u: d.u.into_matrix(&format!("nodes[{n}].U"))?,
                input_dims: d.input_dims,
                output_dims: d.output_dims,
            })
        })
        .collect::<Result<_>>()?;
    let connections = doc
        .connections
        .into_iter()
        .enumerate()
        .map(|(n, d)| {
            Ok(Connection {
                to: d.to,
                from: d.from,
                omega: d.omega.into_matrix(&format!("connections[{n}].Omega"))?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(NetworkSpec { nodes, connections })
}

pub fn network_to_json(spec: &NetworkSpec) -> Result<String> {
    to_json(&NetworkOut {
        nodes: spec
            .nodes
            .iter()
            .map(|n| NodeOut {
                u: (&n.u).into(),
                input_dims: &n.input_dims,
                output_dims: &n.output_dims,
            })
            .collect(),
        connections: spec
            .connections
            .iter()
            .map(|c| ConnectionOut {
                to: c.to,
                from: c.from,
                omega: (&c.omega).into(),
            })
            .collect(),
    })
}

#[derive(Serialize)]
struct KrausOut {
    kraus: Vec<MatrixOut>,
    povm: Vec<MatrixOut>,
    completeness_residual: Num,
    unitality_residual: Num,
    coherent_residual: Num,
}

/// Kraus operators, their POVM elements and the three truncation residuals.
pub fn kraus_to_json(k: &KrausSet) -> Result<String> {
    to_json(&KrausOut {
        kraus: k.ops.iter().map(MatrixOut::from).collect(),
        povm: povm(k).iter().map(MatrixOut::from).collect(),
        completeness_residual: Num(k.tail_bound),
        unitality_residual: Num(k.unital_defect),
        coherent_residual: Num(k.coherent_defect),
    })
}

#[derive(Serialize)]
struct SampleOut<'a> {
    estimate: MatrixOut,
    std_error_re: MatrixOut,
    std_error_im: MatrixOut,
    histogram: &'a [u64],
    censored: u64,
    trajectories: u64,
}

pub fn sample_report_to_json(r: &SampleReport) -> Result<String> {
    to_json(&SampleOut {
        estimate: (&r.estimate).into(),
        std_error_re: (&r.std_error_re).into(),
        std_error_im: (&r.std_error_im).into(),
        histogram: &r.histogram,
        censored: r.censored,
        trajectories: r.trajectories,
    })
}
