//! Generation and analysis of labeled performance-anomaly datasets for
//! microservice applications deployed on an emulated edge-cloud topology.
//!
//! The pipeline goes: a [`config::GenerationConfig`] names an application
//! model ([`appmodel`]) and an anomaly-injection plan; [`topology`] places
//! the microservices on edge/fog nodes; [`chaos`] schedules anomaly events;
//! [`workload`] and [`perfmodel`] turn per-window request rates into
//! telemetry records; [`orchestrator`] drives whole runs and writes traces
//! plus a manifest via [`dataset`]; [`analysis`] reads a finished dataset
//! back and checks its statistical properties.
//!
//! All randomness flows through counter-derived streams ([`rng`]), so a
//! given `(config, seed)` pair produces byte-identical output regardless of
//! thread count or generation order.

pub mod analysis;
pub mod appmodel;
pub mod chaos;
pub mod config;
pub mod corpus;
pub mod dataset;
pub mod orchestrator;
pub mod perfmodel;
pub mod plots;
pub mod queueing;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod topology;
pub mod workload;

/// Concrete scalar type used throughout the pipeline.
///
/// The numeric kernels ([`queueing`], [`stats`]) are generic over
/// [`scalar::Scalar`] and work at `f32` as well; everything downstream of
/// them is instantiated at this alias.
pub type Real = f64;

/// Tool version recorded in dataset manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tool name recorded in dataset manifests.
pub const TOOL_NAME: &str = "eaf";
