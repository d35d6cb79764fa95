//! Monthly retweet-network analysis: mutual-retweet graph construction,
//! structural metrics, ensemble multilevel bipartitioning, leaning scores
//! and community labels, polarization, multiplexity cores, betweenness and
//! cross-correlation diagnostics.
//!
//! Parallel loops run on rayon when the `parallel` feature (default) is on;
//! see [`exec::Execution`].

pub mod centrality;
pub mod config;
pub mod error;
pub mod exec;
pub mod graph;
pub mod ingest;
pub mod leaning;
pub mod metrics;
pub mod multiplexity;
pub mod partition;
pub mod pipeline;
pub mod polarization;
pub mod powerlaw;
pub mod report;
pub mod rng;
pub mod synth;

pub use config::Config;
pub use error::{Error, Result};
pub use exec::Execution;
pub use graph::{giant_component, GiantComponent, Graph};
