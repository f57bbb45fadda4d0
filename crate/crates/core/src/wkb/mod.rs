//! Geometric WKB: transport of `(S, u, J)` along rays, branch search on the
//! quotient, and the local plane-wave model at an observation point.

mod chart;
mod local;
mod propagator;

pub use chart::{RaySource, SourceChart};
pub use local::{group_branches, sample_local_exact, sample_local_limit, unit_disk_point, LocalWaveModel};
pub use propagator::{
    BranchDiagnostics, BranchRecord, BranchTable, Propagator, PropagatorConfig, Ray, RayBundle, RayFailure,
};

/// Default direction-grouping tolerance, in units of `λ`.
pub const DEFAULT_DIR_TOL: f64 = 1e-6;

#[cfg(test)]
mod tests;
