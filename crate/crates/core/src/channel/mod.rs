//! Quantum channels as superoperators and their contraction.

mod contraction;
mod sampler;
mod superop;

pub use contraction::{
    contract_channel, invariant_norm, positive_invariant_dim, BlockMixture, ChannelContraction,
    ChannelMethod, ChannelProblem, SectorMaps, WeightedUnitary,
};
pub use sampler::{sample_contraction, SampleReport};
pub use superop::{
    decohere, embed, extract, is_cptp, sector_pinching, trace_norm, unvec, vec, vec_trace,
    CptpReport, Superoperator, CPTP_TOL,
};
