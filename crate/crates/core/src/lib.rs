//! Train, prune, sparsify, explain and benchmark small MLP/LSTM classifiers
//! for network-flow records.

pub mod bench;
pub mod cli;
pub mod config;
pub mod dataflow;
mod error;
pub mod explain;
pub mod nn;
pub mod pipeline;
pub mod prune;
pub mod sparse;
pub mod tuner;

pub use error::{Error, Result};
