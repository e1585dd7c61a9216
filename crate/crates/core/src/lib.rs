//! Power-aware intrusion-detection monitor placement for simulated ad hoc
//! networks.
//!
//! - [`topology`]: geometric network, hop distances, power-level metric.
//! - [`ca_engine`]: binary and fuzzy cellular automata, attractors, basins.
//! - [`ga_evolve`]: genetic search over CA rules and dependency matrices.
//! - [`classifier`]: inverted CA basin tree for anomaly classification.
//! - [`election`]: threshold/POL/working-set monitor election and in-cluster
//!   re-election.
//! - [`simulator`]: tick loop comparing clustered re-election against
//!   whole-network reruns.
//! - [`scenario`], [`trace`]: the text formats the CLI reads and writes.

pub mod ca_engine;
pub mod classifier;
pub mod dataset;
pub mod election;
pub mod ga_evolve;
pub mod scenario;
pub mod seed;
pub mod simulator;
pub mod topology;
pub mod trace;
