//! Topology-preserving summary graphs for large point clouds.
//!
//! A uniform sample of the input is connected by a k-NN graph, densified with
//! 1-witness edges from the unsampled points and covered by landmark
//! neighborhoods. Random walks between landmark cells weight a landmark
//! graph, Louvain groups it into communities, and the quotient graph is torn
//! down to a spanning forest plus the loops that carry enough modularity.
//!
//! [`run_pipeline`] runs the whole thing; every stage is also public.

pub mod cloud;
pub mod community;
pub mod config;
pub mod error;
pub mod exec;
pub mod graph;
pub mod io;
pub mod knn;
pub mod landmarks;
pub mod metrics;
pub mod pipeline;
pub mod scaling;
pub mod summary;
pub mod synth;
pub mod tearing;
pub mod walks;

pub use cloud::PointCloud;
pub use config::{PipelineConfig, TearingMode};
pub use error::{Error, Result};
pub use exec::Execution;
pub use graph::{LandmarkCover, NeighborGraph, Partition, WeightedGraph};
pub use knn::Metric;
pub use pipeline::{run_pipeline, run_pipeline_detailed, PipelineOutput, RunReport};
pub use summary::{EdgePhase, SummaryGraph};
