pub mod analysis;
pub mod bound_state;
pub mod duhamel;
pub mod error;
pub mod evolution;
pub mod exponents;
pub mod grid;
pub mod kink;
pub mod nonlinearity;
pub mod ode;
pub mod train;
pub mod verify;

pub use analysis::{DecayFit, NormReport, NormRow, StrichartzReport};
pub use bound_state::{BifurcationReport, BoundState, BoundStateOptions, DecayCertificate};
pub use duhamel::{ContractionReport, CrossCheck, IterateHistory, TimeGrid};
pub use error::{Error, Result};
pub use evolution::{ConservationReport, EvolveOptions, TrainConvergenceReport};
pub use exponents::{ExponentConfig, Theorem};
pub use grid::{Field, Grid1D, GridSpec};
pub use kink::{KinkParams, KinkProfile};
pub use nonlinearity::{F0Report, Nonlinearity, NonlinearityKind};
pub use train::{
    DiagnosticsVariant, KinkSpec, PresetKind, PresetLaw, SolitonParam, SourceDecayReport, Train, TrainDiagnostics,
    TrainSpec,
};
pub use verify::CriterionOutcome;
