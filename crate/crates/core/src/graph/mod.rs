//! Scattering matrices of quantum graphs assembled from star graphs.

mod scattering;
mod sweep;
mod vertex;

pub use scattering::{
    contract_scattering, contract_scattering_block, graph_scattering, graph_scattering_block,
    graph_scattering_sequential, random_graph, ContractedScattering, EndRef, GraphContractionSpec,
    GraphVertex, InternalEdge, LeadPair, MetricGraph, SCATTERING_UNITARITY_TOL, VERTEX_TOL,
};
pub use sweep::{k_grid, sweep, write_sweep_csv, SweepRow};
pub use vertex::{star_scattering, VertexConditions, VertexReport};
