//! Array factor, beampatterns and interference at arbitrary directions.
//!
//! Two views of the same sum are kept apart on purpose:
//!
//! * beampatterns ([`array_factor`], [`sample_beampattern`]) are pure
//!   geometry, no channel gains;
//! * interference ([`group_interference`], [`total_received_inr`]) weights
//!   each node by its shadowing gain toward the victim BS.
//!
//! Phase convention: node `r` at `(rho, psi)` sees a propagation phase
//! `theta_r(phi) = -2 pi rho cos(phi - psi)` (the constant `2 pi A / lambda`
//! is dropped), and is synchronized toward `phi_k` with
//! `theta_r^k = theta_r(phi_k)`, so every term of the array factor is real and
//! positive at the target.

use num_complex::Complex;
use thiserror::Error;

use crate::network::NetworkRealization;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("node set is empty")]
    EmptyNodeSet,
    #[error("node index {index} out of range for {len} nodes")]
    NodeIndex { index: usize, len: usize },
    #[error("phase assignment has {phases} entries for {nodes} nodes")]
    LengthMismatch { phases: usize, nodes: usize },
    #[error("node {node} appears in more than one interfering set")]
    OverlappingSets { node: usize },
    #[error("{symbols} symbols supplied for {sets} interfering sets")]
    SymbolCount { symbols: usize, sets: usize },
    #[error("station column {column} out of range")]
    StationColumn { column: usize },
}

/// Initial carrier phases of the participating nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseAssignment<T> {
    pub phases: Vec<T>,
    pub target: T,
}

/// `|AF|^2` sampled over an angle grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BeampatternSample<T> {
    pub angles: Vec<T>,
    pub power: Vec<T>,
    pub node_set: Vec<usize>,
    pub per_node_power: T,
}

/// Real and imaginary interference sums of one group at one victim BS.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterferenceComponents<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> InterferenceComponents<T> {
    /// Components from the unscaled phasor sum `sum_r a_r (x_r - j y_r)`.
    #[inline]
    pub fn from_sum(sum: Complex<T>, per_node_power: T) -> Self {
        let scale = per_node_power.sqrt();
        Self {
            x: sum.re * scale,
            y: -sum.im * scale,
        }
    }

    /// `X^2 + Y^2`
    pub fn power(&self) -> T {
        self.x * self.x + self.y * self.y
    }

    pub fn inr(&self, noise_power: T) -> T {
        self.power() / noise_power
    }
}

fn check_nodes<T>(network: &NetworkRealization<T>, nodes: &[usize]) -> Result<(), BeamError> {
    if nodes.is_empty() {
        return Err(BeamError::EmptyNodeSet);
    }
    let len = network.positions.len();
    match nodes.iter().find(|&&i| i >= len) {
        Some(&index) => Err(BeamError::NodeIndex { index, len }),
        None => Ok(()),
    }
}

/// Closed-loop synchronization toward `target`.
pub fn synchronize<T: Real>(
    network: &NetworkRealization<T>,
    node_set: &[usize],
    target: T,
) -> Result<PhaseAssignment<T>, BeamError> {
    check_nodes(network, node_set)?;
    Ok(PhaseAssignment {
        phases: node_set
            .iter()
            .map(|&i| network.positions[i].propagation_phase(target))
            .collect(),
        target,
    })
}

/// `sum_r sqrt(P) exp(j theta_r^k) exp(-j theta_r(phi))`.
pub fn array_factor<T: Real>(
    network: &NetworkRealization<T>,
    node_set: &[usize],
    phases: &PhaseAssignment<T>,
    per_node_power: T,
    direction: T,
) -> Result<Complex<T>, BeamError> {
    check_nodes(network, node_set)?;
    if phases.phases.len() != node_set.len() {
        return Err(BeamError::LengthMismatch {
            phases: phases.phases.len(),
            nodes: node_set.len(),
        });
    }
    Ok(array_factor_unchecked(network, node_set, &phases.phases, direction) * per_node_power.sqrt())
}

fn array_factor_unchecked<T: Real>(
    network: &NetworkRealization<T>,
    node_set: &[usize],
    phases: &[T],
    direction: T,
) -> Complex<T> {
    node_set
        .iter()
        .zip(phases)
        .map(|(&i, &theta)| {
            Complex::from_polar(T::one(), theta - network.positions[i].propagation_phase(direction))
        })
        .sum()
}

/// `n` equally spaced angles covering `[-pi, pi]` inclusive.
pub fn angle_grid<T: Real>(points: usize) -> Vec<T> {
    assert!(points >= 2, "grid needs at least two points");
    let step = T::TAU() / T::count(points - 1);
    (0..points).map(|i| -T::PI() + step * T::count(i)).collect()
}

/// Default grid resolution (0.1 degree spacing).
pub const DEFAULT_GRID_POINTS: usize = 3601;

pub fn sample_beampattern<T: Real>(
    network: &NetworkRealization<T>,
    node_set: &[usize],
    phases: &PhaseAssignment<T>,
    per_node_power: T,
    angles: &[T],
) -> Result<BeampatternSample<T>, BeamError> {
    check_nodes(network, node_set)?;
    if phases.phases.len() != node_set.len() {
        return Err(BeamError::LengthMismatch {
            phases: phases.phases.len(),
            nodes: node_set.len(),
        });
    }
    let power = angles
        .iter()
        .map(|&phi| array_factor_unchecked(network, node_set, &phases.phases, phi).norm_sqr() * per_node_power)
        .collect();
    Ok(BeampatternSample {
        angles: angles.to_vec(),
        power,
        node_set: node_set.to_vec(),
        per_node_power,
    })
}

impl<T: Real> BeampatternSample<T> {
    /// Index and value of the largest grid sample.
    pub fn peak(&self) -> (usize, T) {
        self.power
            .iter()
            .copied()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, p)| if p > best.1 { (i, p) } else { best })
    }

    pub fn power_db(&self) -> Vec<T> {
        self.power.iter().map(|&p| crate::units::linear_to_db(p)).collect()
    }
}

/// Half-power (-3 dB) mainlobe width around the synchronization target,
/// found by stepping outward and bisecting each edge.
pub fn mainlobe_width_3db<T: Real>(
    network: &NetworkRealization<T>,
    node_set: &[usize],
    phases: &PhaseAssignment<T>,
) -> Result<T, BeamError> {
    check_nodes(network, node_set)?;
    let norm = T::count(node_set.len()).powi(2);
    let half = T::lit(0.5);
    let level = |phi: T| array_factor_unchecked(network, node_set, &phases.phases, phi).norm_sqr() / norm;
    let step = T::lit(1e-3);
    let edge = |sign: T| -> T {
        let mut inner = T::zero();
        let mut outer = step;
        while level(phases.target + sign * outer) > half {
            inner = outer;
            outer += step;
            if outer > T::PI() {
                return T::PI();
            }
        }
        for _ in 0..60 {
            let mid = (inner + outer) * half;
            if level(phases.target + sign * mid) > half {
                inner = mid;
            } else {
                outer = mid;
            }
        }
        (inner + outer) * half
    };
    Ok(edge(T::one()) + edge(-T::one()))
}

/// Expected phasor `E{exp(j(theta^target - theta(phi)))}` of one node drawn
/// from the scenario's spatial distribution.
///
/// Uniform disk: `2 J1(z)/z` with `z = 2 pi R |2 sin((phi - target)/2)|`.
/// Gaussian (per-axis std `R`): `exp(-2 pi^2 R^2 u^2)`, `u = |2 sin(...)|`.
pub fn expected_phasor<T: Real>(
    distribution: crate::scenario::NodeDistribution,
    radius: T,
    target: T,
    direction: T,
) -> T {
    let two = T::lit(2.0);
    let u = (two * ((direction - target) / two).sin()).abs();
    match distribution {
        crate::scenario::NodeDistribution::UniformDisk => {
            let z = T::TAU() * radius * u;
            if z < T::lit(1e-8) {
                T::one()
            } else {
                two * z.bessel_j1() / z
            }
        }
        crate::scenario::NodeDistribution::GaussianDisk => {
            (-two * T::PI() * T::PI() * radius * radius * u * u).exp()
        }
    }
}

/// Average beampattern over node placements for `n` synchronized nodes:
/// `n P + n (n-1) P |chi(phi)|^2`.
pub fn expected_beampattern<T: Real>(
    distribution: crate::scenario::NodeDistribution,
    radius: T,
    target: T,
    n: usize,
    per_node_power: T,
    angles: &[T],
) -> Vec<T> {
    let nf = T::count(n);
    angles
        .iter()
        .map(|&phi| {
            let chi = expected_phasor(distribution, radius, target, phi);
            per_node_power * (nf + nf * (nf - T::one()) * chi * chi)
        })
        .collect()
}

/// Directions of the `count` strongest sidelobe peaks of a sampled pattern,
/// skipping the lobe that contains `target`. Ties are broken by angular
/// distance from the target.
pub fn sidelobe_peaks<T: Real>(angles: &[T], power: &[T], target: T, count: usize) -> Vec<T> {
    let n = power.len();
    let dist = |a: T| crate::scalar::wrap_angle(a - target).abs();
    // Mainlobe: walk from the grid point nearest the target until the first
    // local minimum on each side.
    let center = (0..n)
        .min_by(|&a, &b| dist(angles[a]).partial_cmp(&dist(angles[b])).unwrap())
        .unwrap_or(0);
    let mut lo = center;
    while lo > 0 && power[lo - 1] <= power[lo] {
        lo -= 1;
    }
    let mut hi = center;
    while hi + 1 < n && power[hi + 1] <= power[hi] {
        hi += 1;
    }
    let mut peaks: Vec<(T, T)> = (1..n.saturating_sub(1))
        .filter(|&i| (i < lo || i > hi) && power[i] > power[i - 1] && power[i] >= power[i + 1])
        .map(|i| (power[i], angles[i]))
        .collect();
    peaks.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(dist(a.1).partial_cmp(&dist(b.1)).unwrap())
    });
    peaks.into_iter().take(count).map(|(_, a)| a).collect()
}

/// Interference of a candidate group steered to `directions[target]`, seen at
/// `directions[victim]`, with the group's gains toward the victim.
///
/// `X = sqrt(P) sum a_r x_r`, `Y = sqrt(P) sum a_r y_r` where
/// `x_r - j y_r = exp(j(theta_r^target - theta_r^victim))`.
pub fn group_interference<T: Real>(
    network: &NetworkRealization<T>,
    group: &[usize],
    directions: &[T],
    target: usize,
    victim: usize,
    per_node_power: T,
) -> Result<InterferenceComponents<T>, BeamError> {
    check_nodes(network, group)?;
    if victim >= network.shadowing.stations() || victim >= directions.len() {
        return Err(BeamError::StationColumn { column: victim });
    }
    if target >= directions.len() {
        return Err(BeamError::StationColumn { column: target });
    }
    let sum: Complex<T> = group
        .iter()
        .map(|&r| {
            network.relative_phasor(r, directions[target], directions[victim])
                * network.shadowing.gain(r, victim)
        })
        .sum();
    Ok(InterferenceComponents::from_sum(sum, per_node_power))
}

/// One active cluster transmitting toward its own BS.
#[derive(Clone, Copy, Debug)]
pub struct InterferingSet<'a, T> {
    pub network: &'a NetworkRealization<T>,
    pub nodes: &'a [usize],
    /// Direction the cluster is synchronized to.
    pub target: T,
    /// Shadowing column holding gains toward the victim BS.
    pub victim_column: usize,
}

/// Total INR at a victim BS from several active clusters, each with `n`
/// nodes at per-node power `sigma_w^2 gamma / n`, carrying symbols `z_k`:
///
/// `eta = |sum_k z_k sum_r sqrt(sigma_w^2 gamma / n) a_r (x_r - j y_r)|^2 / sigma_w^2`.
///
/// Sets that share a network must be disjoint.
pub fn total_received_inr<T: Real>(
    sets: &[InterferingSet<'_, T>],
    symbols: &[Complex<T>],
    victim_direction: T,
    n: usize,
    target_snr: T,
    noise_power: T,
) -> Result<T, BeamError> {
    if symbols.len() != sets.len() {
        return Err(BeamError::SymbolCount {
            symbols: symbols.len(),
            sets: sets.len(),
        });
    }
    for (i, a) in sets.iter().enumerate() {
        check_nodes(a.network, a.nodes)?;
        if a.victim_column >= a.network.shadowing.stations() {
            return Err(BeamError::StationColumn {
                column: a.victim_column,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for &node in a.nodes {
            if !seen.insert(node) {
                return Err(BeamError::OverlappingSets { node });
            }
        }
        for b in &sets[i + 1..] {
            if std::ptr::eq(a.network, b.network) {
                if let Some(&node) = b.nodes.iter().find(|n| seen.contains(n)) {
                    return Err(BeamError::OverlappingSets { node });
                }
            }
        }
    }
    let total: Complex<T> = sets
        .iter()
        .zip(symbols)
        .map(|(set, &z)| {
            let s: Complex<T> = set
                .nodes
                .iter()
                .map(|&r| {
                    set.network.relative_phasor(r, set.target, victim_direction)
                        * set.network.shadowing.gain(r, set.victim_column)
                })
                .sum();
            z * s
        })
        .sum();
    let per_node = noise_power * target_snr / T::count(n);
    Ok(total.norm_sqr() * per_node / noise_power)
}

/// Cached relative phasors `exp(j(theta_r^target - theta_r^victim))` for every
/// node and every unintended BS of a scenario. Built once per realization so
/// selection trials cost only multiply-adds.
#[derive(Clone, Debug)]
pub struct PhasorTable<T> {
    phasors: Vec<Complex<T>>,
    victims: usize,
}

impl<T: Real> PhasorTable<T> {
    pub fn new(network: &NetworkRealization<T>, target: T, victims: &[T]) -> Self {
        let mut phasors = Vec::with_capacity(network.len() * victims.len());
        for r in 0..network.len() {
            phasors.extend(victims.iter().map(|&v| network.relative_phasor(r, target, v)));
        }
        Self {
            phasors,
            victims: victims.len(),
        }
    }

    /// Recomputes the entries of `node` after its position changed.
    pub fn refresh(&mut self, network: &NetworkRealization<T>, node: usize, target: T, victims: &[T]) {
        for (k, &v) in victims.iter().enumerate() {
            self.phasors[node * self.victims + k] = network.relative_phasor(node, target, v);
        }
    }

    #[inline]
    pub fn get(&self, node: usize, victim: usize) -> Complex<T> {
        self.phasors[node * self.victims + victim]
    }

    pub fn victims(&self) -> usize {
        self.victims
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ShadowingMatrix;
    use crate::network::NodePosition;
    use crate::rng::{RngStream, Substream};
    use crate::scenario::NodeDistribution;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn net(points: &[(f64, f64)], stations: usize) -> NetworkRealization<f64> {
        NetworkRealization::with_unit_channel(
            points.iter().map(|&(r, a)| NodePosition::new(r, a)).collect(),
            stations,
        )
    }

    fn random_net(n: usize, radius: f64, stations: usize, seed: u64, sigma2: f64) -> NetworkRealization<f64> {
        let mut s = RngStream::new(seed, Substream::Positions);
        let pos = crate::network::sample_positions(NodeDistribution::UniformDisk, radius, n, &mut s);
        let mut g = RngStream::new(seed, Substream::Shadowing);
        let gains = ShadowingMatrix::sample(&crate::channel::LognormalParams::new(0.0, sigma2), n, stations, &mut g);
        NetworkRealization::new(pos, gains)
    }

    #[test]
    fn synchronize_examples() {
        let n = net(&[(0.0, 1.0), (0.5, 0.0)], 2);
        let ph = synchronize(&n, &[0, 1], 0.0).unwrap();
        assert_eq!(ph.phases[0].abs(), 0.0);
        assert_relative_eq!(ph.phases[1], -PI, max_relative = 1e-15);
        assert_eq!(synchronize(&n, &[], 0.0), Err(BeamError::EmptyNodeSet));
        assert!(matches!(synchronize(&n, &[5], 0.0), Err(BeamError::NodeIndex { .. })));
    }

    #[test]
    fn synchronize_rotation_invariant() {
        let a = net(&[(1.3, 0.2), (0.7, -2.0)], 2);
        let delta = 0.8;
        let b = net(&[(1.3, 0.2 + delta), (0.7, -2.0 + delta)], 2);
        let pa = synchronize(&a, &[0, 1], 0.5).unwrap();
        let pb = synchronize(&b, &[0, 1], 0.5 + delta).unwrap();
        for (x, y) in pa.phases.iter().zip(&pb.phases) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn coherent_at_target() {
        let n = random_net(64, 2.0, 2, 3, 0.0);
        let set: Vec<usize> = (0..64).collect();
        let ph = synchronize(&n, &set, 0.4).unwrap();
        let af = array_factor(&n, &set, &ph, 2.0, 0.4).unwrap();
        assert_relative_eq!(af.re, 64.0 * 2.0_f64.sqrt(), max_relative = 1e-12);
        assert!(af.im.abs() < 1e-10);
    }

    #[test]
    fn origin_node_is_omnidirectional() {
        let n = net(&[(0.0, 0.0)], 2);
        let ph = synchronize(&n, &[0], 1.0).unwrap();
        for phi in [-3.0, -1.0, 0.0, 2.5] {
            let af = array_factor(&n, &[0], &ph, 4.0, phi).unwrap();
            assert_relative_eq!(af.norm(), 2.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn two_node_oracle() {
        let n = net(&[(0.25, 0.0), (0.25, PI)], 2);
        let ph = synchronize(&n, &[0, 1], 0.0).unwrap();
        let af = array_factor(&n, &[0, 1], &ph, 1.0, PI / 2.0).unwrap();
        // Direct sum of exp(j 2 pi rho (cos(phi - psi) - cos(target - psi))).
        let oracle: Complex<f64> = [(0.25_f64, 0.0_f64), (0.25, PI)]
            .iter()
            .map(|&(r, p)| Complex::new(0.0, 2.0 * PI * r * ((PI / 2.0 - p).cos() - (0.0 - p).cos())).exp())
            .sum();
        assert_relative_eq!(af.re, oracle.re, epsilon = 1e-14);
        assert_relative_eq!(af.im, oracle.im, epsilon = 1e-14);
        // Both nodes a quarter wavelength off axis: each is -pi/2 off, sum = -2j.
        assert_relative_eq!(af.norm_sqr(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn beampattern_peak_and_constant_case() {
        let n = random_net(128, 2.0, 2, 4, 0.2);
        let set: Vec<usize> = (0..128).collect();
        let ph = synchronize(&n, &set, 0.0).unwrap();
        let grid = angle_grid::<f64>(DEFAULT_GRID_POINTS);
        let bp = sample_beampattern(&n, &set, &ph, 0.5, &grid).unwrap();
        let (idx, peak) = bp.peak();
        assert_relative_eq!(grid[idx], 0.0, epsilon = 1e-12);
        assert_relative_eq!(peak, 128.0 * 128.0 * 0.5, max_relative = 1e-12);
        assert!(bp.power.iter().all(|&p| p >= 0.0));

        let origin = net(&vec![(0.0, 0.0); 10], 2);
        let set: Vec<usize> = (0..10).collect();
        let ph = synchronize(&origin, &set, 0.3).unwrap();
        let bp = sample_beampattern(&origin, &set, &ph, 1.0, &angle_grid(37)).unwrap();
        assert!(bp.power.iter().all(|&p| (p - 100.0).abs() < 1e-9));
    }

    #[test]
    fn grid_endpoints() {
        let g = angle_grid::<f64>(DEFAULT_GRID_POINTS);
        assert_eq!(g.len(), 3601);
        assert_eq!(g[0], -PI);
        assert_relative_eq!(g[3600], PI, max_relative = 1e-15);
        assert_relative_eq!(g[1800], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn group_interference_special_cases() {
        let n = random_net(8, 1.5, 3, 8, 0.2);
        let dirs = [0.0, 1.0, 0.0];
        // victim direction equal to target: x = 1, y = 0
        let c = group_interference(&n, &[0, 1, 2], &dirs, 0, 2, 2.0).unwrap();
        let sum_a: f64 = (0..3).map(|r| n.shadowing.gain(r, 2)).sum();
        assert_relative_eq!(c.x, 2.0_f64.sqrt() * sum_a, max_relative = 1e-12);
        assert!(c.y.abs() < 1e-12);

        let flat = random_net(4, 1.5, 2, 9, 0.0);
        let c = group_interference(&flat, &[3], &[0.0, 2.0], 0, 1, 3.0).unwrap();
        assert_relative_eq!(c.power(), 3.0, max_relative = 1e-12);
        assert!(group_interference(&flat, &[], &[0.0, 2.0], 0, 1, 3.0).is_err());
    }

    #[test]
    fn group_interference_global_phase_invariant() {
        let n = random_net(32, 2.0, 2, 10, 0.2);
        let group: Vec<usize> = (0..32).collect();
        let c = group_interference(&n, &group, &[0.0, 1.1], 0, 1, 1.0).unwrap();
        // A global shift multiplies every phasor by the same unit complex.
        let shift = Complex::from_polar(1.0, 0.77);
        let shifted: Complex<f64> = group
            .iter()
            .map(|&r| n.relative_phasor(r, 0.0, 1.1) * shift * n.shadowing.gain(r, 1))
            .sum();
        assert_relative_eq!(shifted.norm_sqr(), c.power(), max_relative = 1e-12);
    }

    #[test]
    fn total_inr_cases() {
        let n = random_net(64, 2.0, 2, 12, 0.0);
        assert_eq!(total_received_inr::<f64>(&[], &[], 1.0, 32, 10.0, 0.1).unwrap(), 0.0);

        let one = [InterferingSet { network: &n, nodes: &[5], target: 0.0, victim_column: 1 }];
        let z = [Complex::from_polar(1.0, 0.3)];
        let eta = total_received_inr(&one, &z, 1.2, 32, 10.0, 0.1).unwrap();
        assert_relative_eq!(eta, 10.0 / 32.0, max_relative = 1e-12);

        let a: Vec<usize> = (0..10).collect();
        let b: Vec<usize> = (9..20).collect();
        let overlap = [
            InterferingSet { network: &n, nodes: &a, target: 0.0, victim_column: 1 },
            InterferingSet { network: &n, nodes: &b, target: 0.5, victim_column: 1 },
        ];
        let zz = [Complex::new(1.0, 0.0); 2];
        assert_eq!(
            total_received_inr(&overlap, &zz, 1.2, 32, 10.0, 0.1),
            Err(BeamError::OverlappingSets { node: 9 })
        );
        assert!(matches!(
            total_received_inr(&overlap[..1], &zz, 1.2, 32, 10.0, 0.1),
            Err(BeamError::SymbolCount { .. })
        ));
    }

    #[test]
    fn phasor_table_matches_direct() {
        let n = random_net(16, 2.0, 3, 13, 0.2);
        let t = PhasorTable::new(&n, 0.2, &[1.0, -2.0]);
        for r in 0..16 {
            assert_eq!(t.get(r, 1), n.relative_phasor(r, 0.2, -2.0));
        }
    }

    #[test]
    fn expected_phasor_matches_sampling() {
        let n = 200_000;
        let net = random_net(n, 2.0, 1, 14, 0.0);
        for phi in [0.3, 0.6, 1.2, 2.5] {
            let mean: Complex<f64> =
                (0..n).map(|r| net.relative_phasor(r, 0.0, phi)).sum::<Complex<f64>>() / n as f64;
            let chi = expected_phasor(NodeDistribution::UniformDisk, 2.0, 0.0, phi);
            assert!((mean.re - chi).abs() < 5.0 / (n as f64).sqrt(), "{phi}: {mean} vs {chi}");
            assert!(mean.im.abs() < 5.0 / (n as f64).sqrt());
        }
        let mut s = RngStream::new(15, Substream::Positions);
        let pos = crate::network::sample_positions(NodeDistribution::GaussianDisk, 0.3, n, &mut s);
        let g = NetworkRealization::with_unit_channel(pos, 1);
        for phi in [0.5, 1.5] {
            let mean: Complex<f64> =
                (0..n).map(|r| g.relative_phasor(r, 0.0, phi)).sum::<Complex<f64>>() / n as f64;
            let chi = expected_phasor(NodeDistribution::GaussianDisk, 0.3, 0.0, phi);
            assert!((mean.re - chi).abs() < 5.0 / (n as f64).sqrt(), "{phi}: {mean} vs {chi}");
        }
    }

    #[test]
    fn sidelobe_peaks_of_average_pattern() {
        let grid = angle_grid::<f64>(DEFAULT_GRID_POINTS);
        let avg = expected_beampattern(NodeDistribution::UniformDisk, 2.0, 0.0, 256, 1.0, &grid);
        let peaks = sidelobe_peaks(&grid, &avg, 0.0, 4);
        assert_eq!(peaks.len(), 4);
        // First sidelobe of 2 J1(z)/z sits near z = 5.1356: sin(phi/2) = z / (8 pi).
        let first = 2.0 * (5.135_622_f64 / (8.0 * PI)).asin();
        let mut mags: Vec<f64> = peaks.iter().map(|p| p.abs()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mags[0] - first).abs() < 2e-3, "{mags:?} vs {first}");
        assert!((mags[1] - first).abs() < 2e-3);
    }

    #[test]
    fn mainlobe_width_single_and_array() {
        let n = random_net(256, 2.0, 2, 16, 0.0);
        let set: Vec<usize> = (0..256).collect();
        let ph = synchronize(&n, &set, 0.4).unwrap();
        let w = mainlobe_width_3db(&n, &set, &ph).unwrap();
        // Oracle: fine linear scan outward from the target on each side.
        let level = |phi: f64| array_factor(&n, &set, &ph, 1.0, phi).unwrap().norm_sqr() / 65536.0;
        let scan = |sign: f64| {
            let mut d = 0.0;
            while level(0.4 + sign * d) > 0.5 {
                d += 1e-5;
            }
            d
        };
        let oracle = scan(1.0) + scan(-1.0);
        assert!((w - oracle).abs() < 3e-5, "{w} vs {oracle}");
        assert!(w > 0.05 && w < 1.0, "{w}");

        let single = random_net(1, 2.0, 2, 17, 0.0);
        let ph = synchronize(&single, &[0], 0.0).unwrap();
        assert_eq!(mainlobe_width_3db(&single, &[0], &ph).unwrap(), 2.0 * PI);
    }
}
