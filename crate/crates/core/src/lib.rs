//! Deterministic routing simulator comparing a naive distance-vector
//! baseline with bandwidth-gated fitness routing over delay, jitter and loss.

pub mod cli;
pub mod dv;
pub mod error;
pub mod experiment;
pub mod fitness;
pub mod rng;
pub mod topology;

pub use dv::{DvState, DvTrace, TraceRecord, DEFAULT_INFINITY};
pub use error::{Error, Result};
pub use experiment::{
    emit_plot_series, render_table, run_comparison, run_comparison_on, verify_claims, Claim, ComparisonReport,
    ComparisonRow, Engine, ExperimentConfig, Summary, Violation,
};
pub use fitness::{
    build_spanning_tree, edge_cost, path_fitness, select_route, Label, Route, RouteOutcome, RouteRequest, SpanningTree,
    Weights,
};
pub use rng::SplitMix64;
pub use topology::{generate_topology, generate_topology_with, GenParams, NodeId, QosLink, Topology};
