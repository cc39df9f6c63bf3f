//! Node geometry and per-realization channel state.

use num_complex::Complex;
use thiserror::Error;

use crate::channel::ShadowingMatrix;
use crate::rng::{RngStream, Substream};
use crate::scalar::{wrap_angle, Real};
use crate::scenario::{NodeDistribution, Scenario};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("far-field range {range} is below 100 x node radius {radius}")]
    NotFarField { range: f64, radius: f64 },
}

/// Polar node position, radius in wavelengths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodePosition<T> {
    pub radius: T,
    pub azimuth: T,
}

impl<T: Real> NodePosition<T> {
    pub fn new(radius: T, azimuth: T) -> Self {
        Self {
            radius,
            azimuth: wrap_angle(azimuth),
        }
    }

    pub fn from_cartesian(x: T, y: T) -> Self {
        Self::new(x.hypot(y), y.atan2(x))
    }

    /// Propagation phase toward `direction` relative to the origin, in radians:
    /// `-2 pi rho cos(direction - psi)`. The common `2 pi A / lambda` term is
    /// dropped.
    #[inline]
    pub fn propagation_phase(&self, direction: T) -> T {
        -T::TAU() * self.radius * (direction - self.azimuth).cos()
    }
}

/// Far-field distance `A - rho cos(direction - psi)`, valid while `A >= 100 rho`.
pub fn far_field_distance<T: Real>(
    node: &NodePosition<T>,
    direction: T,
    range: T,
) -> Result<T, GeometryError> {
    if range < T::lit(100.0) * node.radius {
        return Err(GeometryError::NotFarField {
            range: range.to_f64_lossy(),
            radius: node.radius.to_f64_lossy(),
        });
    }
    Ok(range - node.radius * (direction - node.azimuth).cos())
}

/// One Monte Carlo instance: `M` positions and the `M x (D+1)` shadowing
/// matrix. Column `k` holds gains toward BS `k` of
/// [`Scenario::all_directions`].
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkRealization<T> {
    pub positions: Vec<NodePosition<T>>,
    pub shadowing: ShadowingMatrix<T>,
}

impl<T: Real> NetworkRealization<T> {
    pub fn new(positions: Vec<NodePosition<T>>, shadowing: ShadowingMatrix<T>) -> Self {
        assert_eq!(positions.len(), shadowing.nodes(), "dimension mismatch");
        Self {
            positions,
            shadowing,
        }
    }

    /// Realization with unit gains everywhere.
    pub fn with_unit_channel(positions: Vec<NodePosition<T>>, stations: usize) -> Self {
        let n = positions.len();
        Self::new(positions, ShadowingMatrix::unit(n, stations))
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Relative phasor of node `r` seen from `victim` when steered to `target`:
    /// `exp(j (theta_r^target - theta_r(victim)))`, i.e. `x_r - j y_r`.
    #[inline]
    pub fn relative_phasor(&self, node: usize, target: T, victim: T) -> Complex<T> {
        let p = &self.positions[node];
        Complex::from_polar(T::one(), p.propagation_phase(target) - p.propagation_phase(victim))
    }

    /// Same network with shadowing columns permuted (see
    /// [`Scenario::retarget`]).
    pub fn with_columns(&self, columns: &[usize]) -> Self {
        Self {
            positions: self.positions.clone(),
            shadowing: self.shadowing.select_columns(columns),
        }
    }
}

pub fn sample_positions<T: Real>(
    distribution: NodeDistribution,
    radius: T,
    count: usize,
    stream: &mut RngStream,
) -> Vec<NodePosition<T>> {
    (0..count)
        .map(|_| match distribution {
            NodeDistribution::UniformDisk => {
                let u1 = T::sample_unit(stream);
                let u2 = T::sample_unit(stream);
                NodePosition::new(radius * u1.sqrt(), T::TAU() * u2 - T::PI())
            }
            NodeDistribution::GaussianDisk => {
                let x = radius * T::sample_standard_normal(stream);
                let y = radius * T::sample_standard_normal(stream);
                NodePosition::from_cartesian(x, y)
            }
        })
        .collect()
}

/// Draws positions and shadowing from the scenario's seed. Positions and
/// shadowing use separate substreams.
pub fn sample_network<T: Real>(scenario: &Scenario<T>) -> NetworkRealization<T> {
    let mut pos_stream = RngStream::new(scenario.seed, Substream::Positions);
    let mut shadow_stream = RngStream::new(scenario.seed, Substream::Shadowing);
    sample_network_with(scenario, &mut pos_stream, &mut shadow_stream)
}

pub fn sample_network_with<T: Real>(
    scenario: &Scenario<T>,
    positions: &mut RngStream,
    shadowing: &mut RngStream,
) -> NetworkRealization<T> {
    let m = scenario.num_candidates;
    let pos = sample_positions(scenario.node_distribution, scenario.disk_radius, m, positions);
    let gains = ShadowingMatrix::sample(
        &scenario.shadowing,
        m,
        scenario.num_unintended() + 1,
        shadowing,
    );
    NetworkRealization::new(pos, gains)
}
