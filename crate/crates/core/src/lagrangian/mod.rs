//! Lagrangian states `a e^{iφ/h}`: amplitudes, phases and the eikonal construction.

mod amplitude;
mod eikonal;
mod phase;
mod state;

pub use amplitude::BumpAmplitude;
pub use eikonal::{CollarCoords, CurveKind, EikonalPhase, HypersurfaceData, InitialCovector, NormalSide, Profile};
pub use phase::{finite_difference_jet, BusemannTerm, HorocyclicPhase, Phase, PhaseJet, RadialPhase};
pub use state::{energy_measure, EnergyMeasure, LagrangianState, PhaseModel};
