//! Node selection for sidelobe control in collaborative beamforming.
//!
//! A source node recruits `N` of `M` nearby sensor nodes to beamform toward an
//! intended base station. Candidates are tested in groups of `L`; each group
//! is approved only if every unintended base station measures an INR at or
//! below its threshold. The crate provides the random network model, beam and
//! interference evaluation, the selection algorithm, closed-form predictions,
//! and a Monte Carlo harness that pairs the two.
//!
//! Numerics are generic over [`Real`] (`f32` or `f64`). The `*64` and `*32`
//! aliases below fix the scalar.
//!
//! Conventions: powers are linear, angles are radians, lengths are in
//! wavelengths. Conversions live in [`units`].

pub mod analysis;
pub mod beampattern;
pub mod channel;
pub mod config;
pub mod montecarlo;
pub mod network;
pub mod rng;
pub mod scalar;
pub mod scenario;
pub mod selection;
pub mod units;

pub use analysis::{AnalysisError, AnalyticalPrediction};
pub use beampattern::{
    angle_grid, array_factor, group_interference, sample_beampattern, synchronize,
    total_received_inr, BeamError, BeampatternSample, InterferenceComponents, InterferingSet,
    PhaseAssignment,
};
pub use channel::{LognormalParams, ShadowingMatrix};
pub use config::{Config, ConfigError};
pub use montecarlo::{EstimateRow, InrModel, MonteCarloError, SweepAxis, SweepSpec};
pub use network::{sample_network, NetworkRealization, NodePosition};
pub use rng::{RngStream, Substream};
pub use scalar::Real;
pub use scenario::{NodeDistribution, Scenario, ScenarioError, ScenarioParams};
pub use selection::{
    run_selection, verify_outcome, ChannelMode, SelectionError, SelectionOptions,
    SelectionOutcome, TrialRecord, Verdict,
};

pub type Scenario64 = Scenario<f64>;
pub type Scenario32 = Scenario<f32>;
pub type Network64 = NetworkRealization<f64>;
pub type Network32 = NetworkRealization<f32>;
pub type Outcome64 = SelectionOutcome<f64>;
pub type Outcome32 = SelectionOutcome<f32>;
pub type Sweep64 = SweepSpec<f64>;
pub type Sweep32 = SweepSpec<f32>;
