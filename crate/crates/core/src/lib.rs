pub mod channel;
pub mod checks;
pub mod error;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod network;
pub mod operator;
pub mod unitary;

pub use error::{Error, Result};
pub use linalg::{CMatrix, Partition, C64};
