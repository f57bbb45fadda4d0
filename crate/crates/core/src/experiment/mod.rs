//! Config-driven experiment runner.

mod config;
mod run;

pub use config::{
    AmplitudeSpec, EikonalCheckConfig, EquidistConfig, ExperimentConfig, IndependenceConfig, LocalLimitConfig,
    PointsSpec, PropagateConfig, RwmConfig, StateSpec,
};
pub use run::{run, Manifest, RunArtifact, StageRecord, StageStatus, Subcommand};
