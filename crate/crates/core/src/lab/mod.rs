//! Scenario registry, run configuration and the certify → flow → monitor pipeline.

pub mod config;
mod pipeline;
pub mod scenario;

pub use config::{load_config, parse_config, parse_config_with, parse_override, Operation, RunConfig};
pub use pipeline::{
    run_dir, run_pipeline, stages_for, Check, Measured, PipelineResult, Report, MONOTONE_TOLERANCE, TRAPPING_SLACK,
};
pub use scenario::{
    find, list_scenarios, neck_c1, registry, ClaimKind, Expect, Expectation, FlowMode, Geometry, Provenance, Scenario,
    Settings, Stage, ASPIRATIONAL,
};
